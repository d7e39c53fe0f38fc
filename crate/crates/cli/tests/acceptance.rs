//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use common::{alpha_oracle, edit_distance_oracle, edit_score_oracle};
use compass_core::agreement::{interpret_alpha, krippendorff_alpha, Alpha, AnnotationMatrix};
use compass_core::context::all_states;
use compass_core::eval::edit_score;
use compass_core::fsm::{apply, model};
use compass_core::ingest::{derive_velocity, TrialId};
use compass_core::rules::{Actor, TargetSpec};
use compass_core::{
    decompose, random_walk, split_sides, task_spec, translate, ContextState, MotionPrimitive,
    SpanMode, TaskId, Target, Verb,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("round-trip translation", round_trip),
        ("rule-table fidelity", rule_table_fidelity),
        ("krippendorff alpha", alpha_against_oracle),
        ("alpha fixture", alpha_fixture),
        ("edit score", edit_score_criterion),
        ("grasp/release priority", priority_rule),
        ("split tiling", split_tiling),
        ("interpretation bands", interpretation_bands),
        ("ingest", ingest_criterion),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DE);
    let mut pairs = 0usize;
    for task in TaskId::ALL {
        for _ in 0..1000 {
            let len = rng.gen_range(1..=200);
            let seed = rng.gen::<u64>();
            let walk = random_walk(task, len, seed);
            let states: Vec<ContextState> = walk.states().collect();
            let mut replayed = vec![states[0]];
            let mut chain_mps = Vec::new();
            for pair in states.windows(2) {
                let d = decompose(pair[0], pair[1], task)
                    .map_err(|e| format!("{task} seed {seed}: {e}"))?;
                let next = apply(d.rules(), *replayed.last().unwrap())
                    .map_err(|e| format!("{task} seed {seed}: {e}"))?;
                replayed.push(next);
                chain_mps.extend(d.mps);
                pairs += 1;
            }
            ensure!(replayed == states, "{task} seed {seed}: replay diverged");
            let mp = translate(&walk, 30, SpanMode::Leading).map_err(|e| e.to_string())?;
            let mut emitted: Vec<String> = mp
                .entries
                .iter()
                .filter(|s| !s.mp.is_idle())
                .map(|s| s.mp.to_string())
                .collect();
            let mut expected: Vec<String> = chain_mps.iter().map(ToString::to_string).collect();
            emitted.sort();
            expected.sort();
            ensure!(emitted == expected, "{task} seed {seed}: translation lost MPs");
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("6000 walks, {pairs} transitions replayed in {:.1}s", elapsed.as_secs_f64()))
}

/// Rows as printed. General rows leave the progress slot implicit.
const GENERAL_ROWS: [(&str, &str, &str); 8] = [
    ("Touch(L, a)", "X0XX", "XaXX"),
    ("Touch(R, a)", "XXX0", "XXXa"),
    ("Grasp(L, a)", "0aXX", "aXXX"),
    ("Grasp(R, a)", "XX0a", "XXaX"),
    ("Release(L, a)", "aXXX", "0aXX"),
    ("Release(R, a)", "XXaX", "XX0a"),
    ("Untouch(L, a)", "XaXX", "X0XX"),
    ("Untouch(R, a)", "XXXa", "XXX0"),
];

const SNP_ROWS: &[(&str, &str, &str, bool)] = &[
    ("Touch(2, 4/5)", "2XXX0", "2XXX1", false),
    ("Touch(2, 4/5)", "XX2X0", "XX2X1", false),
    ("Push(2, 4/5)", "2XXX1", "2XXX2", false),
    ("Push(2, 4/5)", "XX2X1", "XX2X2", false),
    ("Pull(2, 3)", "2XXX2", "2XXX0", false),
    ("Pull(2, 3)", "XX2X2", "XX2X0", false),
];

const KT_ROWS: &[(&str, &str, &str, bool)] = &[
    ("Pull(L, 3)", "3XXX0", "3XXX1", true),
    ("Pull(R, 3)", "XX3X0", "XX3X1", true),
    ("Pull(L, 3) Pull(R, 3)", "3X3X1", "3X3X2", false),
    ("Pull(L, 3) Pull(R, 3)", "3X3X2", "3X3X3", false),
];

const POST_ROWS: &[(&str, &str, &str, bool)] = &[
    ("Touch(1, Post)", "XXXX0", "XXXX1", false),
    ("Untouch(1, Post)", "XXXX1", "XXXX0", false),
];

const POAP_ROWS: &[(&str, &str, &str, bool)] = &[
    ("Grasp(L, 1)", "0XXX0", "1XXX1", false),
    ("Grasp(R, 1)", "XX0X0", "XX1X1", false),
    ("Pull(L, 1)", "1XXX1", "1XXX2", false),
    ("Pull(R, 1)", "XX1X1", "XX1X2", false),
    ("Pull(L, 1)", "1XXX1", "1XXX3", false),
    ("Pull(R, 1)", "XX1X1", "XX1X3", false),
    ("Touch(1, 1)", "XXXX3", "XXXX2", false),
    ("Untouch(1, 1)", "XXXX2", "XXXX3", false),
    ("Touch(1, Peg)", "XXXX3", "XXXX4", false),
    ("Untouch(1, Peg)", "XXXX4", "XXXX3", false),
    ("Release(L, 1)", "1XXXb", "0XXX0", false),
    ("Release(R, 1)", "XX1Xb", "XX0X0", false),
    ("Push(L, 1)", "1XXX2", "1XXX1", false),
    ("Push(R, 1)", "XX1X2", "XX1X1", false),
];

fn printed_rows(task: TaskId) -> Vec<(&'static str, String, String, bool)> {
    let specific = match task {
        TaskId::Suturing | TaskId::NeedlePassing => SNP_ROWS,
        TaskId::KnotTying => KT_ROWS,
        TaskId::PegTransfer | TaskId::PostAndSleeve => POST_ROWS,
        TaskId::PeaOnAPeg => POAP_ROWS,
    };
    GENERAL_ROWS
        .iter()
        .map(|(mp, b, a)| (*mp, format!("{b}X"), format!("{a}X"), false))
        .chain(specific.iter().map(|(mp, b, a, bi)| (*mp, b.to_string(), a.to_string(), *bi)))
        .collect()
}

/// `(verb, actor, target)` triples of a printed MP column entry.
fn printed_mps(text: &str) -> Vec<(String, String, String)> {
    text.split(") ")
        .map(|mp| {
            let mp = mp.trim_end_matches(')');
            let (verb, args) = mp.split_once('(').unwrap();
            let (actor, target) = args.split_once(", ").unwrap();
            (verb.to_string(), actor.to_string(), target.to_string())
        })
        .collect()
}

fn slot_matches(printed: char, value: u8, a: Option<u8>) -> bool {
    match printed {
        'X' => true,
        'b' => value > 0,
        'a' => Some(value) == a,
        d => d.to_digit(10) == Some(u32::from(value)),
    }
}

fn pattern_matches(printed: &str, state: ContextState, a: Option<u8>) -> bool {
    printed
        .chars()
        .zip(state.slots())
        .all(|(p, v)| slot_matches(p, v, a))
}

fn rule_table_fidelity() -> Outcome {
    let expected_specific = [6, 6, 4, 2, 2, 14];
    let mut instances = 0usize;
    for (task, n_specific) in TaskId::ALL.into_iter().zip(expected_specific) {
        let spec = task_spec(task);
        let general = spec.general_rules().count();
        let specific = spec.task_rules().count();
        ensure!(general == 8, "{task}: {general} general rows");
        ensure!(specific == n_specific, "{task}: {specific} task rows, expected {n_specific}");
        let printed = printed_rows(task);
        ensure!(spec.rules().len() == printed.len(), "{task}: row count");

        for (i, (row, (mp_text, before, after, bidi))) in spec.rules().iter().zip(&printed).enumerate() {
            ensure!(row.bidirectional == *bidi, "{task} row {i}: direction");
            if i >= 8 {
                ensure!(
                    row.before.to_string() == *before && row.after.to_string() == *after,
                    "{task} row {i}: {row} vs printed {before} -> {after}"
                );
            }
            let mps = printed_mps(mp_text);
            ensure!(mps.len() == row.mps.len(), "{task} row {i}: MP count");
            for ((verb, actor, target), t) in mps.iter().zip(&row.mps) {
                ensure!(t.verb.name() == verb, "{task} row {i}: verb {} vs {verb}", t.verb.name());
                let actor_ok = match t.actor {
                    Actor::Grasper(side) => side.letter() == actor,
                    Actor::Held(obj) => obj.code().0.to_string() == *actor,
                };
                ensure!(actor_ok, "{task} row {i}: actor vs {actor}");
                let target_ok = match t.target {
                    TargetSpec::Generic => target == "a",
                    TargetSpec::Fixed(Target::Object(obj)) => {
                        target.split('/').any(|c| c == obj.code().0.to_string())
                    }
                    TargetSpec::Fixed(other) => other.to_string() == *target,
                };
                ensure!(target_ok, "{task} row {i}: target vs {target}");
            }
        }

        // every concrete instance, on every valid state it fires on, satisfies
        // the printed row it came from
        let mut fired = vec![false; printed.len()];
        for rule in model(task).rules() {
            let (_, before, after, _) = &printed[rule.row];
            let (before, after) = if rule.reversed { (after, before) } else { (before, after) };
            let a = if rule.row < 8 {
                match rule.mps[0] {
                    MotionPrimitive::Act {
                        target: Target::Object(obj),
                        ..
                    } => Some(obj.code().0),
                    _ => return Err(format!("{task}: general rule {rule} without object")),
                }
            } else {
                None
            };
            for s in all_states(task) {
                let Some(next) = rule.apply(&s) else { continue };
                ensure!(pattern_matches(before, s, a), "{task}: {rule} fires on {s}");
                ensure!(pattern_matches(after, next, a), "{task}: {rule} gives {next}");
                ensure!(next.validate(task).is_ok(), "{task}: {rule} leaves vocabulary");
                fired[rule.row] = true;
                instances += 1;
            }
        }
        ensure!(fired.iter().all(|f| *f), "{task}: some row never fires");
    }
    Ok(format!("8 general rows per task, task rows 6/6/4/2/2/14, {instances} instantiations checked"))
}

fn random_matrix(rng: &mut ChaCha8Rng) -> Vec<Vec<Option<u8>>> {
    let labelers = rng.gen_range(2..=5);
    let units = rng.gen_range(1..=50);
    let alphabet = rng.gen_range(2..=5);
    let missing = rng.gen_range(0.0..0.5);
    (0..units)
        .map(|_| {
            (0..labelers)
                .map(|_| (!rng.gen_bool(missing)).then(|| rng.gen_range(0..alphabet)))
                .collect()
        })
        .collect()
}

fn matrix(values: &[Vec<Option<u8>>]) -> AnnotationMatrix<u8> {
    let labelers = values.first().map_or(0, Vec::len);
    AnnotationMatrix::new(
        (0..values.len() as u32).collect(),
        (0..labelers).map(|l| format!("l{l}")).collect(),
        values.to_vec(),
    )
    .unwrap()
}

fn pairable(values: &[Vec<Option<u8>>]) -> bool {
    values.iter().any(|u| u.iter().flatten().count() >= 2)
}

fn alpha_against_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut undefined = 0;
    for i in 0..500 {
        let values = random_matrix(&mut rng);
        let got = krippendorff_alpha(&matrix(&values));
        if !pairable(&values) {
            ensure!(got.is_err(), "matrix {i}: no pairable units but got {got:?}");
            continue;
        }
        let got = got.map_err(|e| format!("matrix {i}: {e}"))?;
        match (got, alpha_oracle(&values)) {
            (Alpha::Value(a), Some(b)) => {
                worst = worst.max((a - b).abs());
                ensure!((a - b).abs() <= 1e-9, "matrix {i}: {a} vs oracle {b}");
            }
            (Alpha::Undefined, None) => undefined += 1,
            (a, b) => return Err(format!("matrix {i}: {a:?} vs oracle {b:?}")),
        }

        if i < 100 {
            let mut padded = values.clone();
            let width = values[0].len();
            for k in 0..5 {
                let mut unit = vec![None; width];
                unit[k % width] = Some(rng.gen_range(0..9));
                padded.push(unit);
            }
            let after = krippendorff_alpha(&matrix(&padded)).unwrap();
            let same = match (got, after) {
                (Alpha::Value(a), Alpha::Value(b)) => (a - b).abs() <= 1e-12,
                (Alpha::Undefined, Alpha::Undefined) => true,
                _ => false,
            };
            ensure!(same, "matrix {i}: single-labeler units changed {got} to {after}");
        }
    }

    for _ in 0..50 {
        let units = rng.gen_range(2..=50);
        let labelers = rng.gen_range(2..=5);
        let mut values: Vec<Vec<Option<u8>>> = (0..units)
            .map(|_| vec![Some(rng.gen_range(0..4)); labelers])
            .collect();
        values[0] = vec![Some(0); labelers];
        values[1] = vec![Some(1); labelers];
        let a = krippendorff_alpha(&matrix(&values)).unwrap();
        ensure!(a == Alpha::Value(1.0), "identical annotators gave {a}");
    }
    Ok(format!(
        "500 matrices, max |diff| {worst:.1e}, {undefined} undefined on both sides; identical = 1.0; single-labeler units inert"
    ))
}

fn alpha_fixture() -> Outcome {
    let values = vec![
        vec![Some(1u8), Some(1)],
        vec![Some(1), Some(2)],
        vec![Some(2), Some(2)],
    ];
    let oracle = alpha_oracle(&values).ok_or("oracle undefined")?;
    ensure!((oracle - 0.4444).abs() < 5e-5, "oracle gives {oracle}");
    let got = krippendorff_alpha(&matrix(&values))
        .map_err(|e| e.to_string())?
        .value()
        .ok_or("undefined")?;
    ensure!((got - oracle).abs() <= 1e-9, "{got} vs oracle {oracle}");
    Ok(format!("alpha = {got:.10} (oracle {oracle:.10})"))
}

fn segments(rng: &mut ChaCha8Rng, alphabet: std::ops::Range<u8>) -> Vec<u8> {
    let n = rng.gen_range(1..=12);
    let mut out = Vec::new();
    for _ in 0..n {
        let label = rng.gen_range(alphabet.clone());
        let dur = rng.gen_range(1..=6);
        out.extend(std::iter::repeat_n(label, dur));
    }
    out
}

fn edit_score_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let truth = segments(&mut rng, 0..4);
        let pred = segments(&mut rng, 0..4);
        let got = edit_score(&truth, &pred).map_err(|e| e.to_string())?;
        let want = edit_score_oracle(&truth, &pred);
        ensure!((got - want).abs() <= 1e-9, "pair {i}: {got} vs oracle {want}");

        let k = rng.gen_range(2..=4);
        let stretch = |xs: &[u8]| xs.iter().flat_map(|x| std::iter::repeat_n(*x, k)).collect::<Vec<_>>();
        let stretched = edit_score(&stretch(&truth), &stretch(&pred)).unwrap();
        ensure!((stretched - got).abs() <= 1e-9, "pair {i}: stretch x{k} changed {got} to {stretched}");

        ensure!(edit_score(&truth, &truth).unwrap() == 100.0, "pair {i}: self score");
        let disjoint: Vec<u8> = truth.iter().map(|x| x + 10).collect();
        ensure!(edit_score(&truth, &disjoint).unwrap() == 0.0, "pair {i}: disjoint score");
    }
    let abc = edit_score(&[0u8, 1, 2], &[0u8, 2]).unwrap();
    ensure!(
        (abc - 66.67).abs() <= 0.01 && edit_distance_oracle(&[0u8, 1, 2], &[0u8, 2]) == 1,
        "[A,B,C] vs [A,C] = {abc}"
    );
    Ok(format!("1000 pairs match oracle; stretch invariant; [A,B,C] vs [A,C] = {abc:.2}"))
}

fn priority_rule() -> Outcome {
    let mut checked = 0;
    for task in TaskId::ALL {
        for s in all_states(task) {
            for (hold, contact) in [(0, 1), (2, 3)] {
                let slots = s.slots();
                let a = slots[contact];
                if slots[hold] != 0 || a == 0 {
                    continue;
                }
                let mut next = slots;
                next[hold] = a;
                next[contact] = 0;
                let next = ContextState::from_slots(next);
                if next.validate(task).is_err() {
                    continue;
                }
                let d = decompose(s, next, task).map_err(|e| format!("{task} {s} -> {next}: {e}"))?;
                let verbs: Vec<Verb> = d.mps.iter().map(|m| m.verb()).collect();
                ensure!(
                    verbs == [Verb::Grasp],
                    "{task} {s} -> {next}: {}",
                    d.mps.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
                );
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} hold transitions resolve to a single Grasp"))
}

fn tiles(t: &compass_core::transcript::MpTranscript, total: u32) -> bool {
    let mut at = 0;
    for s in &t.entries {
        if s.start != at || s.end <= s.start {
            return false;
        }
        at = s.end;
    }
    at == total
}

fn split_tiling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut n = 0;
    for task in TaskId::ALL {
        for _ in 0..200 {
            let walk = random_walk(task, rng.gen_range(1..=200), rng.gen());
            for mode in [SpanMode::Leading, SpanMode::Trailing] {
                let combined = translate(&walk, 30, mode).map_err(|e| e.to_string())?;
                let total = combined.total_samples;
                let (left, right) = split_sides(&combined, total);
                ensure!(tiles(&left, total) && tiles(&right, total), "{task}: side does not tile");
                let count = |ts: &[&compass_core::transcript::MpTranscript]| {
                    let mut m: BTreeMap<String, usize> = BTreeMap::new();
                    for t in ts {
                        for s in t.entries.iter().filter(|s| !s.mp.is_idle()) {
                            *m.entry(format!("{} {} {}", s.start, s.end, s.mp)).or_default() += 1;
                        }
                    }
                    m
                };
                ensure!(count(&[&combined]) == count(&[&left, &right]), "{task}: MP multiset changed");
                n += 1;
            }
        }
    }
    Ok(format!("{n} translations split into tiling side transcripts"))
}

fn interpretation_bands() -> Outcome {
    let near = interpret_alpha(0.92).label();
    let sub = interpret_alpha(0.7).label();
    ensure!(near == "near-perfect", "0.92 -> {near}");
    ensure!(sub == "substantial", "0.7 -> {sub}");
    Ok(format!("0.92 -> {near}, 0.7 -> {sub}"))
}

fn ingest_criterion() -> Outcome {
    let example: TrialId = "Pea_on_a_Peg_S02_T05".parse().map_err(|e| format!("{e}"))?;
    ensure!(
        example.task == TaskId::PeaOnAPeg && example.subject == 2 && example.trial == 5,
        "parsed {example:?}"
    );
    ensure!(example.to_string() == "Pea_on_a_Peg_S02_T05", "formatted {example}");
    let mut ids = 0;
    for task in TaskId::ALL {
        for subject in 0..120 {
            for trial in [0, 1, 5, 9, 10, 99, 100, 250] {
                let id = TrialId { task, subject, trial };
                let back: TrialId = id.to_string().parse().map_err(|e| format!("{id}: {e}"))?;
                ensure!(back == id, "{id} parsed as {back}");
                ids += 1;
            }
        }
    }

    let constant = vec![[1.25, -3.5, 0.125]; 40];
    let v = derive_velocity(&constant, 30.0, 5).map_err(|e| e.to_string())?;
    ensure!(v.iter().flatten().all(|x| *x == 0.0), "constant position moved");

    let slope = [0.37, -1.1, 2.5];
    let ramp: Vec<[f64; 3]> = (0..60)
        .map(|i| {
            let t = i as f64 / 30.0;
            [1.5 + slope[0] * t, -0.25 + slope[1] * t, slope[2] * t]
        })
        .collect();
    let v = derive_velocity(&ramp, 30.0, 5).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for row in &v[3..v.len() - 3] {
        for (x, s) in row.iter().zip(slope) {
            worst = worst.max((x - s).abs());
        }
    }
    ensure!(worst < 1e-9, "ramp velocity error {worst:e}");
    Ok(format!("{ids} ids round-trip; constant velocity 0; ramp error {worst:.1e}"))
}

fn run(bin: &str, dir: &Path, args: &[&str]) -> (Option<i32>, Vec<u8>, Vec<u8>) {
    let o = Command::new(bin)
        .args(args)
        .current_dir(dir)
        .env_remove("COMPASS_DATA")
        .output()
        .unwrap();
    (o.status.code(), o.stdout, o.stderr)
}

fn http_get(port: u16, path: &str) -> Option<Vec<u8>> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).ok()?;
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n")?;
    Some(raw[split + 4..].to_vec())
}

fn serve_once(bin: &str, data: &Path) -> Result<Vec<u8>, String> {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(bin)
        .args(["serve", "--port", &port.to_string(), "--data"])
        .arg(data)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let deadline = Instant::now() + Duration::from_secs(10);
    let body = loop {
        if let Some(b) = http_get(port, "/api/v1/trials") {
            let frame = http_get(port, "/api/v1/trials/Suturing_S01_T01/frames/1").unwrap_or_default();
            break Ok([b, frame].concat());
        }
        if Instant::now() > deadline {
            break Err("service did not start".to_string());
        }
        std::thread::sleep(Duration::from_millis(50));
    };
    let _ = child.kill();
    let _ = child.wait();
    body
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_compass");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();

    let walk = run(bin, d, &["walk", "S", "--len", "120", "--seed", "4"]);
    fs::write(d.join("a.txt"), &walk.1).unwrap();
    let other = run(bin, d, &["walk", "S", "--len", "120", "--seed", "5"]);
    fs::write(d.join("b.txt"), &other.1).unwrap();
    fs::write(d.join("c.txt"), "0 00000\n2 02000\n4 20000\n9 22222\n").unwrap();
    let mp = run(bin, d, &["translate", "S", "a.txt"]);
    fs::write(d.join("m.txt"), &mp.1).unwrap();
    let mp2 = run(bin, d, &["translate", "S", "a.txt", "--span", "trailing"]);
    fs::write(d.join("n.txt"), &mp2.1).unwrap();

    let data = d.join("data");
    fs::create_dir_all(data.join("Suturing/context")).unwrap();
    fs::create_dir_all(data.join("Suturing/frames/Suturing_S01_T01")).unwrap();
    fs::write(data.join("Suturing/context/Suturing_S01_T01.txt"), &walk.1).unwrap();
    fs::write(data.join("Suturing/context/Suturing_S1_T1.txt"), &walk.1).unwrap();
    for k in 0..3 {
        fs::write(data.join(format!("Suturing/frames/Suturing_S01_T01/{k:03}.png")), [k as u8; 8]).unwrap();
    }

    let commands: Vec<(Vec<&str>, i32)> = vec![
        (vec!["validate", "S", "a.txt"], 0),
        (vec!["validate", "S", "c.txt"], 1),
        (vec!["translate", "S", "a.txt"], 0),
        (vec!["translate", "S", "a.txt", "--span", "trailing", "--side", "left"], 0),
        (vec!["translate", "S", "a.txt", "--side", "right", "--rate", "15"], 0),
        (vec!["consensus", "S", "a.txt", "b.txt", "c.txt"], 0),
        (vec!["alpha", "S", "a.txt", "b.txt", "c.txt"], 0),
        (vec!["alpha", "S", "a.txt", "b.txt", "--granularity", "variable"], 0),
        (vec!["score", "m.txt", "n.txt"], 0),
        (vec!["walk", "PoaP", "--len", "150", "--seed", "99"], 0),
        (vec!["ingest", "data"], 1),
        (vec!["validate", "S", "missing.txt"], 2),
    ];
    let mut runs = 0;
    for (args, code) in &commands {
        for json in [false, true] {
            let mut full = args.clone();
            if json {
                full.insert(0, "--json");
            }
            let first = run(bin, d, &full);
            let second = run(bin, d, &full);
            ensure!(first == second, "`compass {}` differs between runs", full.join(" "));
            ensure!(first.0 == Some(*code), "`compass {}` exited {:?}", full.join(" "), first.0);
            runs += 1;
        }
    }
    let a = serve_once(bin, &data)?;
    let b = serve_once(bin, &data)?;
    ensure!(!a.is_empty() && a == b, "serve responses differ");
    Ok(format!("{runs} command lines and serve byte-identical across two runs"))
}
