//! Robot kinematics tables: per-arm position, velocity, orientation and
//! gripper angle, with decimation and velocity estimation.

use std::io::{Read, Write};

use super::IngestError;

pub const DEFAULT_VELOCITY_WINDOW: usize = 5;

/// Channel layout of one arm, in column order.
const ARM_CHANNELS: [&str; 11] = [
    "pos_x", "pos_y", "pos_z", "vel_x", "vel_y", "vel_z", "quat_x", "quat_y", "quat_z", "quat_w",
    "gripper",
];

/// Column names of the on-disk table: eleven left-arm channels, then eleven
/// right-arm channels.
pub fn column_names() -> Vec<String> {
    ["left", "right"]
        .iter()
        .flat_map(|arm| ARM_CHANNELS.iter().map(move |c| format!("{arm}_{c}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArmSeries {
    pub position: Vec<[f64; 3]>,
    pub velocity: Vec<[f64; 3]>,
    /// Unit quaternions, `[x, y, z, w]`.
    pub orientation: Vec<[f64; 4]>,
    /// Jaw angle, or 0/1 for sources that only record open/closed.
    pub gripper: Vec<f64>,
}

impl ArmSeries {
    fn push_row(&mut self, row: &[f64]) {
        self.position.push([row[0], row[1], row[2]]);
        self.velocity.push([row[3], row[4], row[5]]);
        self.orientation.push([row[6], row[7], row[8], row[9]]);
        self.gripper.push(row[10]);
    }

    fn row(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.position[i]
            .iter()
            .chain(&self.velocity[i])
            .chain(&self.orientation[i])
            .chain(std::iter::once(&self.gripper[i]))
            .copied()
    }

    fn lengths(&self) -> [usize; 4] {
        [
            self.position.len(),
            self.velocity.len(),
            self.orientation.len(),
            self.gripper.len(),
        ]
    }

    fn every(&self, stride: usize) -> ArmSeries {
        fn pick<T: Copy>(v: &[T], stride: usize) -> Vec<T> {
            v.iter().step_by(stride).copied().collect()
        }
        ArmSeries {
            position: pick(&self.position, stride),
            velocity: pick(&self.velocity, stride),
            orientation: pick(&self.orientation, stride),
            gripper: pick(&self.gripper, stride),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicSeries {
    pub sample_rate: u32,
    pub left: ArmSeries,
    pub right: ArmSeries,
}

impl KinematicSeries {
    pub fn len(&self) -> usize {
        self.left.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that every channel of both arms has the same length.
    pub fn check(&self) -> Result<(), IngestError> {
        let n = self.len();
        for len in self.left.lengths().into_iter().chain(self.right.lengths()) {
            if len != n {
                return Err(IngestError::ChannelLength { expected: n, found: len });
            }
        }
        Ok(())
    }

    /// Reads a delimited table with a header naming the channels.
    /// Quaternions are normalised on load.
    pub fn read(reader: impl Read, sample_rate: u32) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_error(e, 1))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header != column_names() {
            return Err(IngestError::Parse {
                path: None,
                line: 1,
                message: format!("unexpected header; expected {}", column_names().join(",")),
            });
        }
        let mut series = KinematicSeries {
            sample_rate,
            left: ArmSeries::default(),
            right: ArmSeries::default(),
        };
        let mut row = [0.0f64; 22];
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| csv_error(e, line))?;
            if record.len() != row.len() {
                return Err(IngestError::Parse {
                    path: None,
                    line,
                    message: format!("expected {} fields, found {}", row.len(), record.len()),
                });
            }
            for (slot, field) in row.iter_mut().zip(record.iter()) {
                *slot = field.trim().parse().map_err(|_| IngestError::Parse {
                    path: None,
                    line,
                    message: format!("bad number {field:?}"),
                })?;
            }
            for range in [6..10, 17..21] {
                let quat = &mut row[range];
                let norm = quat.iter().map(|q| q * q).sum::<f64>().sqrt();
                if !norm.is_finite() || norm <= 1e-9 {
                    return Err(IngestError::Parse {
                        path: None,
                        line,
                        message: "orientation quaternion has zero norm".into(),
                    });
                }
                quat.iter_mut().for_each(|q| *q /= norm);
            }
            series.left.push_row(&row[..11]);
            series.right.push_row(&row[11..]);
        }
        Ok(series)
    }

    pub fn write(&self, writer: impl Write) -> Result<(), IngestError> {
        self.check()?;
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| IngestError::Io {
            path: None,
            source: std::io::Error::other(e),
        };
        w.write_record(column_names()).map_err(io)?;
        for i in 0..self.len() {
            let fields: Vec<String> = self
                .left
                .row(i)
                .chain(self.right.row(i))
                .map(|v| v.to_string())
                .collect();
            w.write_record(&fields).map_err(io)?;
        }
        w.flush().map_err(|source| IngestError::Io { path: None, source })?;
        Ok(())
    }
}

fn csv_error(e: csv::Error, line: usize) -> IngestError {
    IngestError::Parse {
        path: None,
        line: e.position().map_or(line, |p| p.line() as usize),
        message: e.to_string(),
    }
}

/// Keeps every `in_rate / out_rate`-th sample, starting with the first.
pub fn resample(series: &KinematicSeries, out_rate: u32) -> Result<KinematicSeries, IngestError> {
    let in_rate = series.sample_rate;
    if out_rate == 0 || out_rate > in_rate || !in_rate.is_multiple_of(out_rate) {
        return Err(IngestError::IncompatibleRates {
            from: in_rate,
            to: out_rate,
        });
    }
    let stride = (in_rate / out_rate) as usize;
    Ok(KinematicSeries {
        sample_rate: out_rate,
        left: series.left.every(stride),
        right: series.right.every(stride),
    })
}

/// Linear velocity from positions sampled at `rate` Hz.
///
/// Central differences (one-sided at the ends) are smoothed by a centred
/// moving average of `window` samples; near the ends the window shrinks to
/// the samples available.
pub fn derive_velocity(
    position: &[[f64; 3]],
    rate: f64,
    window: usize,
) -> Result<Vec<[f64; 3]>, IngestError> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(IngestError::InvalidWindow(window));
    }
    let n = position.len();
    if n < window {
        return Err(IngestError::SeriesTooShort { len: n, window });
    }
    let diff = |a: &[f64; 3], b: &[f64; 3], scale: f64| -> [f64; 3] {
        [
            (b[0] - a[0]) * scale,
            (b[1] - a[1]) * scale,
            (b[2] - a[2]) * scale,
        ]
    };
    let raw: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            if i == 0 {
                diff(&position[0], &position[1], rate)
            } else if i == n - 1 {
                diff(&position[n - 2], &position[n - 1], rate)
            } else {
                diff(&position[i - 1], &position[i + 1], rate / 2.0)
            }
        })
        .collect();
    let half = window / 2;
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let count = (hi - lo + 1) as f64;
            let mut acc = [0.0; 3];
            for v in &raw[lo..=hi] {
                for k in 0..3 {
                    acc[k] += v[k];
                }
            }
            acc.map(|a| a / count)
        })
        .collect())
}

/// Replaces both arms' velocity channels with estimates from position.
pub fn with_derived_velocity(
    series: &KinematicSeries,
    window: usize,
) -> Result<KinematicSeries, IngestError> {
    let rate = series.sample_rate as f64;
    let mut out = series.clone();
    out.left.velocity = derive_velocity(&series.left.position, rate, window)?;
    out.right.velocity = derive_velocity(&series.right.position, rate, window)?;
    Ok(out)
}
