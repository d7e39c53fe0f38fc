use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use compass_core::agreement::{consensus, interpret_alpha, transcript_alpha, Alpha, Granularity};
use compass_core::eval::{accuracy, edit_score};
use compass_core::fsm::PairVerdict;
use compass_core::ingest::{check_files, load_context, load_mp, scan};
use compass_core::transcript::{MpTranscript, DEFAULT_SAMPLE_RATE};
use compass_core::{
    random_walk, split_sides, translate, validate_transcript, ContextTranscript, SpanMode,
    StateVar, TaskId, Verdict,
};
use serde_json::{json, Value};

/// Context labels, motion primitives and agreement for surgical task
/// transcripts.
#[derive(Debug, Parser)]
#[command(name = "compass", version, arg_required_else_help = true)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Both,
    Left,
    Right,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that every consecutive label pair is explained by the task's rules.
    Validate { task: TaskId, file: PathBuf },
    /// Convert a context transcript into motion primitives.
    Translate {
        task: TaskId,
        file: PathBuf,
        #[arg(long, default_value = "leading")]
        span: SpanMode,
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
        /// Output sample rate in Hz.
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
        rate: u32,
    },
    /// Majority-vote several annotators' transcripts into one.
    Consensus {
        task: TaskId,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Krippendorff's alpha across annotators.
    Alpha {
        task: TaskId,
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[arg(long, default_value = "state")]
        granularity: Granularity,
    },
    /// Per-sample accuracy and edit score of a predicted MP transcript.
    Score {
        truth: PathBuf,
        pred: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
        rate: u32,
    },
    /// Generate a random valid context transcript.
    Walk {
        task: TaskId,
        #[arg(long)]
        len: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Scan a dataset directory and check every file parses.
    Ingest {
        root: PathBuf,
        /// Kinematics sample rate in Hz.
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
        rate: u32,
    },
    /// Run the labeling service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "COMPASS_DATA")]
        data: PathBuf,
        /// Directory of static UI files served at `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

/// Result of a command: text to print and whether it found problems.
struct Outcome {
    text: String,
    json: Value,
    findings: bool,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Outcome {
        Outcome {
            text,
            json,
            findings: false,
        }
    }
}

fn load(task: TaskId, path: &Path) -> Result<ContextTranscript> {
    Ok(load_context(path, task)?)
}

fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Unchanged => "unchanged".into(),
        Verdict::Direct => "direct".into(),
        Verdict::Composite { len } => format!("composite({len})"),
        Verdict::Undecomposable => "undecomposable".into(),
    }
}

fn pair_json(p: &PairVerdict) -> Value {
    json!({
        "from_frame": p.from_frame,
        "to_frame": p.to_frame,
        "from": p.from.render(),
        "to": p.to.render(),
        "verdict": verdict_name(p.verdict),
        "mps": p.mps.iter().map(ToString::to_string).collect::<Vec<_>>(),
    })
}

fn validate(task: TaskId, file: &Path) -> Result<Outcome> {
    let t = load(task, file)?;
    let report = validate_transcript(&t);
    let mut text = String::new();
    for p in &report.verdicts {
        if p.verdict == Verdict::Unchanged {
            continue;
        }
        let mps: Vec<String> = p.mps.iter().map(ToString::to_string).collect();
        text.push_str(&format!(
            "{}-{} {} -> {} {}",
            p.from_frame,
            p.to_frame,
            p.from,
            p.to,
            verdict_name(p.verdict)
        ));
        if !mps.is_empty() {
            text.push_str(&format!(" {}", mps.join(" + ")));
        }
        text.push('\n');
    }
    for w in &report.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    let count = |f: fn(&Verdict) -> bool| report.verdicts.iter().filter(|p| f(&p.verdict)).count();
    text.push_str(&format!(
        "pairs={} unchanged={} direct={} composite={} undecomposable={}\n",
        report.verdicts.len(),
        count(|v| *v == Verdict::Unchanged),
        count(|v| *v == Verdict::Direct),
        count(|v| matches!(v, Verdict::Composite { .. })),
        report.undecomposable(),
    ));
    Ok(Outcome {
        json: json!({
            "task": task.name(),
            "pairs": report.verdicts.iter().map(pair_json).collect::<Vec<_>>(),
            "warnings": report.warnings,
            "undecomposable": report.undecomposable(),
        }),
        text,
        findings: !report.is_clean(),
    })
}

fn mp_json(t: &MpTranscript) -> Value {
    json!({
        "sample_rate": t.sample_rate,
        "total_samples": t.total_samples,
        "segments": t.entries.iter().map(|s| json!({
            "start": s.start,
            "end": s.end,
            "mp": s.mp.to_string(),
        })).collect::<Vec<_>>(),
    })
}

fn translate_cmd(task: TaskId, file: &Path, span: SpanMode, side: SideArg, rate: u32) -> Result<Outcome> {
    let t = load(task, file)?;
    let combined = translate(&t, rate, span)?;
    let out = match side {
        SideArg::Both => combined,
        SideArg::Left => split_sides(&combined, combined.total_samples).0,
        SideArg::Right => split_sides(&combined, combined.total_samples).1,
    };
    Ok(Outcome::ok(out.render(), mp_json(&out)))
}

fn consensus_cmd(task: TaskId, files: &[PathBuf]) -> Result<Outcome> {
    let transcripts = files.iter().map(|f| load(task, f)).collect::<Result<Vec<_>>>()?;
    let c = consensus(&transcripts)?;
    for w in &c.warnings {
        eprintln!("warning: {w}");
    }
    let labels: Vec<Value> = c
        .transcript
        .entries()
        .iter()
        .map(|e| json!([e.frame, e.state.render()]))
        .collect();
    Ok(Outcome::ok(
        c.transcript.render(),
        json!({ "task": task.name(), "labels": labels, "warnings": c.warnings }),
    ))
}

fn alpha_json(a: Alpha) -> Value {
    match a {
        Alpha::Value(v) => json!(v),
        Alpha::Undefined => Value::Null,
    }
}

fn alpha_cmd(task: TaskId, files: &[PathBuf], granularity: Granularity) -> Result<Outcome> {
    let transcripts = files.iter().map(|f| load(task, f)).collect::<Result<Vec<_>>>()?;
    let report = transcript_alpha(&transcripts, granularity)?;
    let band = report.alpha.value().map(|v| interpret_alpha(v).label());
    let mut text = format!(
        "alpha={} band={} frames={}\n",
        report.alpha,
        band.unwrap_or("n/a"),
        report.frames
    );
    let mut per = serde_json::Map::new();
    if let Some(values) = report.per_variable {
        for var in StateVar::ALL {
            let a = values[var.index()];
            text.push_str(&format!("{}={}\n", var.name(), a));
            per.insert(var.name().to_string(), alpha_json(a));
        }
    }
    Ok(Outcome::ok(
        text,
        json!({
            "task": task.name(),
            "granularity": match granularity {
                Granularity::State => "state",
                Granularity::Variable => "variable",
            },
            "alpha": alpha_json(report.alpha),
            "band": band,
            "frames": report.frames,
            "per_variable": report.per_variable.map(|_| Value::Object(per)),
        }),
    ))
}

fn score_cmd(truth: &Path, pred: &Path, rate: u32) -> Result<Outcome> {
    let truth = load_mp(truth, rate)?.sample_labels();
    let pred = load_mp(pred, rate)?.sample_labels();
    if truth.len() != pred.len() {
        bail!(
            "transcripts cover different durations: {} vs {} samples",
            truth.len(),
            pred.len()
        );
    }
    let acc = accuracy(&truth, &pred)?;
    let edit = edit_score(&truth, &pred)?;
    Ok(Outcome::ok(
        format!("accuracy={acc:.4} edit_score={edit:.2}\n"),
        json!({ "accuracy": acc, "edit_score": edit, "samples": truth.len() }),
    ))
}

fn walk_cmd(task: TaskId, len: usize, seed: u64) -> Result<Outcome> {
    if len == 0 {
        bail!("--len must be at least 1");
    }
    let t = random_walk(task, len, seed);
    let labels: Vec<Value> = t
        .entries()
        .iter()
        .map(|e| json!([e.frame, e.state.render()]))
        .collect();
    Ok(Outcome::ok(
        t.render(),
        json!({ "task": task.name(), "seed": seed, "labels": labels }),
    ))
}

fn ingest_cmd(root: &Path, rate: u32) -> Result<Outcome> {
    if !root.is_dir() {
        bail!("{} is not a directory", root.display());
    }
    let mut index = scan(root).with_context(|| format!("scanning {}", root.display()))?;
    let parse_issues = check_files(&index, rate);
    index.issues.extend(parse_issues);
    let rel = |p: &Path| p.strip_prefix(root).unwrap_or(p).display().to_string();
    let mut text = String::new();
    let mut trials = serde_json::Map::new();
    for (id, files) in &index.trials {
        let kinds: Vec<&str> = files.files.keys().map(|k| k.dir_name()).collect();
        text.push_str(&format!("{id} {}\n", kinds.join(",")));
        trials.insert(id.to_string(), json!(kinds));
    }
    let issues: Vec<Value> = index
        .issues
        .iter()
        .map(|i| json!({ "path": rel(&i.path), "message": i.message }))
        .collect();
    for i in &index.issues {
        text.push_str(&format!("issue: {}: {}\n", rel(&i.path), i.message));
    }
    text.push_str(&format!(
        "trials={} issues={}\n",
        index.trials.len(),
        index.issues.len()
    ));
    Ok(Outcome {
        text,
        json: json!({ "trials": trials, "issues": issues }),
        findings: !index.issues.is_empty(),
    })
}

fn serve_cmd(port: u16, data: PathBuf, ui: Option<PathBuf>, host: std::net::IpAddr) -> Result<Outcome> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let config = compass_service::ServeConfig {
        data_root: data,
        ui_dir: ui,
        addr: SocketAddr::new(host, port),
    };
    tokio::runtime::Runtime::new()?.block_on(compass_service::serve(config))?;
    Ok(Outcome::ok(String::new(), Value::Null))
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Validate { task, file } => validate(*task, file),
        Command::Translate {
            task,
            file,
            span,
            side,
            rate,
        } => translate_cmd(*task, file, *span, *side, *rate),
        Command::Consensus { task, files } => consensus_cmd(*task, files),
        Command::Alpha {
            task,
            files,
            granularity,
        } => alpha_cmd(*task, files, *granularity),
        Command::Score { truth, pred, rate } => score_cmd(truth, pred, *rate),
        Command::Walk { task, len, seed } => walk_cmd(*task, *len, *seed),
        Command::Ingest { root, rate } => ingest_cmd(root, *rate),
        Command::Serve {
            port,
            data,
            ui,
            host,
        } => serve_cmd(*port, data.clone(), ui.clone(), *host),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                if !out.json.is_null() {
                    println!("{}", serde_json::to_string_pretty(&out.json).expect("json values serialise"));
                }
            } else {
                print!("{}", out.text);
            }
            if out.findings {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
