mod demo;
mod report;
mod verify;

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use znl::dsl::{parse_scenario_with, Scenario};
use znl::field::{classify_case, CaseLabel, DriftField, ProbeGrid, DEFAULT_C_TOL};
use znl::integrate::{sig10, Stops};
use znl::montecarlo::{eps_sweep, sample_path, Statistic, DEFAULT_LEVEL};
use znl::predict::{predict_scenario, Prediction};

#[derive(Parser)]
#[command(
    name = "znl",
    version,
    about = "Zero-noise limits of SDEs with a drift discontinuous across x_d = 0"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Classify the regime at x0 (JSON case label).
    Classify(Common),
    /// Write sample paths, one per ε and path index.
    Simulate(Common),
    /// Closed-form limit predictions (JSON).
    Predict(Common),
    /// Run the scenario's checks; exit 1 if any fails.
    Verify(Common),
    /// One Monte Carlo estimate per ε (CSV).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Statistic to estimate; defaults to the one matching the regime.
        #[arg(long)]
        statistic: Option<Statistic>,
    },
    /// Write the bundled scenarios into a directory.
    Demo {
        #[arg(long, default_value = "demo")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file; the `.scn` suffix may be omitted.
    #[arg(value_name = "SCENARIO")]
    path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    scenario: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Override a scenario key, e.g. `--set eps=0.05,0.01`.
    #[arg(long = "set", value_name = "K=V")]
    set: Vec<String>,
    /// Number of paths (ensemble size; paths written by `simulate`).
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    level: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Config(String),
    Verification,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_scenario_text(path: &FsPath) -> Result<String, String> {
    let mut candidates = vec![path.to_path_buf()];
    if path.extension().is_none() {
        candidates.push(path.with_extension("scn"));
    }
    for c in &candidates {
        if c.is_file() {
            return fs::read_to_string(c).map_err(|e| format!("{}: {e}", c.display()));
        }
    }
    demo::bundled(path)
        .map(str::to_string)
        .ok_or_else(|| format!("{}: no such scenario file", path.display()))
}

fn load(c: &Common) -> Result<Scenario, String> {
    let path = c
        .scenario
        .as_ref()
        .or(c.path.as_ref())
        .ok_or("no scenario given")?;
    let text = read_scenario_text(path)?;
    let mut overrides = Vec::new();
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects K=V, got `{kv}`"))?;
        overrides.push((k.to_string(), v.to_string()));
    }
    if let Some(n) = c.paths {
        overrides.push(("n_paths".into(), n.to_string()));
    }
    if let Some(seed) = c.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    let s = parse_scenario_with(&text, &overrides).map_err(|e| format!("{}: {e}", path.display()))?;
    if !(c.level > 0.0 && c.level < 1.0) {
        return Err(format!("--level must lie in (0, 1), got {}", c.level));
    }
    Ok(s)
}

fn emit(c: &Common, text: &str) -> Outcome {
    match &c.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Case label when `x0` lies on `H`.
fn label_of(s: &Scenario) -> Result<Option<CaseLabel>, Failure> {
    if !s.on_hyperplane() {
        return Ok(None);
    }
    let field = DriftField::from_scenario(s)?;
    Ok(Some(classify_case(
        &field,
        &s.x0,
        s.t_end,
        s.delta,
        &ProbeGrid::default(),
        DEFAULT_C_TOL,
    )?))
}

fn require_label(s: &Scenario) -> Result<CaseLabel, Failure> {
    label_of(s)?.ok_or_else(|| Failure::Config("x0 must lie on x_d = 0".into()))
}

fn classify(c: &Common) -> Outcome {
    let s = load(c)?;
    let l = require_label(&s)?;
    let text = match c.format.unwrap_or(Format::Json) {
        Format::Json => report::to_json(&l),
        Format::Csv => format!(
            "tag,margin,delta,T,n_probes,n_violations\n{},{},{},{},{},{}\n",
            l.tag,
            sig10(l.margin),
            sig10(l.delta),
            sig10(l.t_end),
            l.n_probes,
            l.violations.len()
        ),
    };
    emit(c, &text)
}

#[derive(Serialize)]
struct PredictReport {
    name: String,
    #[serde(flatten)]
    prediction: Prediction,
}

fn predict(c: &Common) -> Outcome {
    let s = load(c)?;
    let l = require_label(&s)?;
    let prediction = predict_scenario(&s, l.tag)?;
    let text = match c.format.unwrap_or(Format::Json) {
        Format::Json => report::to_json(&PredictReport {
            name: s.name.clone(),
            prediction,
        }),
        Format::Csv => {
            let mut out = String::from("key,value\n");
            out.push_str(&format!("case,{}\n", prediction.case));
            for (k, v) in [
                ("bd_plus", Some(prediction.bd_plus)),
                ("bd_minus", Some(prediction.bd_minus)),
                ("p_plus", prediction.p_plus),
                ("p_minus", prediction.p_minus),
                ("occupation_plus", prediction.occupation_plus),
            ] {
                out.push_str(&format!("{k},{}\n", v.map(sig10).unwrap_or_default()));
            }
            for (eps, p) in &prediction.exit_prob {
                out.push_str(&format!("exit_prob({}),{}\n", sig10(*eps), sig10(*p)));
            }
            out
        }
    };
    emit(c, &text)
}

#[derive(Serialize)]
struct PathRecord<'a> {
    eps: f64,
    path: usize,
    stops: &'a Stops,
    t: &'a [f64],
    x: Vec<&'a [f64]>,
}

fn simulate(c: &Common) -> Outcome {
    let s = load(c)?;
    let n = c.paths.unwrap_or(1);
    let mut paths = Vec::new();
    for (ei, &eps) in s.eps_grid.iter().enumerate() {
        for i in 0..n {
            paths.push((eps, i, sample_path(&s, ei, i)?));
        }
    }
    let text = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => report::paths_csv(s.d, &paths),
        Format::Json => {
            let recs: Vec<PathRecord> = paths
                .iter()
                .map(|(eps, i, p)| PathRecord {
                    eps: *eps,
                    path: *i,
                    stops: &p.stops,
                    t: p.times(),
                    x: p.states().collect(),
                })
                .collect();
            report::to_json(&recs)
        }
    };
    emit(c, &text)
}

fn sweep(c: &Common, statistic: Option<Statistic>) -> Outcome {
    let s = load(c)?;
    let stat = match statistic {
        Some(st) => st,
        None => verify::statistic_for(&s, label_of(&s)?.as_ref()),
    };
    let rows = eps_sweep(&s, stat, s.n_paths, c.level)?;
    let text = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => report::sweep_csv(&rows),
        Format::Json => report::to_json(&rows),
    };
    emit(c, &text)
}

fn run_verify(c: &Common) -> Outcome {
    let s = load(c)?;
    let label = label_of(&s)?;
    let report_only = verify::is_report_only(&s, label.as_ref());
    let prediction = match &label {
        Some(l) if s.theory != znl::dsl::Theory::None => Some(predict_scenario(&s, l.tag)?),
        _ => None,
    };
    let stat = verify::statistic_for(&s, label.as_ref());
    let rows = eps_sweep(&s, stat, s.n_paths, c.level)?;
    let checks = verify::checks(&s, label.as_ref(), prediction.as_ref(), &rows);
    let passed = checks.iter().all(|ch| ch.passed);
    for ch in &checks {
        eprintln!(
            "{} {}: {}",
            if ch.passed { "PASS" } else { "FAIL" },
            ch.name,
            ch.detail
        );
    }
    if report_only {
        eprintln!("{}: report only, no pass/fail claim", s.name);
    }
    let text = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => report::sweep_csv(&rows),
        Format::Json => report::to_json(&verify::Report {
            scenario: s.name.clone(),
            theory: s.theory.to_string(),
            report_only,
            label,
            prediction,
            rows,
            checks,
            passed,
        }),
    };
    emit(c, &text)?;
    if passed || report_only {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.verb {
        Verb::Classify(c) => classify(c),
        Verb::Simulate(c) => simulate(c),
        Verb::Predict(c) => predict(c),
        Verb::Verify(c) => run_verify(c),
        Verb::Sweep { common, statistic } => sweep(common, *statistic),
        Verb::Demo { out } => demo::write_all(out)
            .map(|files| files.iter().for_each(|f| println!("{f}")))
            .map_err(|e| Failure::Config(format!("{}: {e}", out.display()))),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
