use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpmax::config::{ExperimentConfig, Verb};
use lpmax::output::verify;
use lpmax::parallel::THREADS_ENV;
use lpmax::{run, CliError, Result, RunOptions};
use toml::{Table, Value};

/// Simulate and check ℓᵖ representations of simple max-stable fields.
///
/// Exit codes: 0 pass, 1 check failed, 2 usage or config error,
/// 3 inconclusive.
#[derive(Parser)]
#[command(name = "lpmax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Store wall-clock time in the report (breaks byte-identical reruns).
    #[arg(long, global = true)]
    record_timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a replicate matrix.
    Simulate(RunArgs),
    /// Compare empirical joint CDFs with the model's fidi.
    Fidi(RunArgs),
    /// Estimate extremal coefficients against their exact values.
    Ec(RunArgs),
    /// Check E max W <= θ <= 2^(1/p) (E max W)^(1-1/p) on site pairs.
    Bounds(RunArgs),
    /// Test f_p(x) = l(x^(1/p)) for conditional negative definiteness.
    CndCheck(RunArgs),
    /// Bracket the smallest ℓᵖ index of an stdf.
    Pmin(RunArgs),
    /// Compare an ℓᵖ field with its ℓ^q re-representation.
    TransformCheck(RunArgs),
    /// Stationarity, mixing and ergodicity diagnostics on ℤ.
    Diagnose(RunArgs),
    /// Check a run report against a config and the files it lists.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// TOML config; flags below override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short = 'm')]
    replicates: Option<usize>,
    /// Finite index or "inf".
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated integer site labels.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sites: Option<Vec<i64>>,
    /// Model kind without parameters, e.g. "constant-one".
    #[arg(long)]
    model: Option<String>,
    /// Compensated threshold truncation at this eps.
    #[arg(long, conflicts_with = "fixed_count")]
    eps: Option<f64>,
    /// Keep this many Poisson points.
    #[arg(long)]
    fixed_count: Option<usize>,
    /// Logistic stdf with this r for cnd-check and pmin.
    #[arg(long, conflicts_with = "independence")]
    logistic_r: Option<String>,
    /// Independence stdf for cnd-check and pmin.
    #[arg(long)]
    independence: bool,
    #[arg(long)]
    max_lag: Option<i64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stem: Option<String>,
    /// Also write the matrix as raw column-major f64.
    #[arg(long)]
    binary: bool,
    /// Any config key, as `dotted.key=<TOML value>`; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn p_value(s: &str) -> Value {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Value::Float(v),
        _ => Value::String(s.to_string()),
    }
}

fn set_path(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| CliError::Config(format!("bad key {key:?}")))?;
    let mut t = table;
    for part in parts {
        t = t
            .entry(part)
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{part} in {key:?} is not a table")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

fn parse_set(s: &str) -> Result<(String, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config(format!("--set {s:?}: expected KEY=VALUE")))?;
    let doc: Table = toml::from_str(&format!("v = {v}"))
        .or_else(|_| toml::from_str(&format!("v = {}", Value::String(v.to_string()))))
        .map_err(|e| CliError::Config(format!("--set {s:?}: {e}")))?;
    Ok((k.trim().to_string(), doc["v"].clone()))
}

fn build_config(verb: Verb, a: &RunArgs) -> Result<ExperimentConfig> {
    let mut t: Table = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Table::new(),
    };
    t.insert("verb".into(), Value::String(verb.name().into()));
    if let Some(v) = a.seed {
        t.insert("seed".into(), Value::Integer(v as i64));
    }
    if let Some(v) = a.replicates {
        t.insert("replicates".into(), Value::Integer(v as i64));
    }
    if let Some(v) = &a.p {
        t.insert("p".into(), p_value(v));
    }
    if let Some(v) = a.q {
        t.insert("q".into(), Value::Float(v));
    }
    if let Some(v) = &a.sites {
        t.insert("sites".into(), Value::Array(v.iter().map(|s| Value::Integer(*s)).collect()));
    }
    if let Some(v) = &a.model {
        t.insert("model".into(), Value::Table(Table::from_iter([("kind".to_string(), Value::String(v.clone()))])));
    }
    if let Some(eps) = a.eps {
        set_path(&mut t, "truncation", Value::Table(Table::new()))?;
        set_path(&mut t, "truncation.rule", Value::String("threshold".into()))?;
        set_path(&mut t, "truncation.eps", Value::Float(eps))?;
    }
    if let Some(n) = a.fixed_count {
        set_path(&mut t, "truncation", Value::Table(Table::new()))?;
        set_path(&mut t, "truncation.rule", Value::String("fixed-count".into()))?;
        set_path(&mut t, "truncation.n", Value::Integer(n as i64))?;
    }
    if let Some(r) = &a.logistic_r {
        set_path(&mut t, "check.stdf", Value::Table(Table::new()))?;
        set_path(&mut t, "check.stdf.source", Value::String("logistic".into()))?;
        set_path(&mut t, "check.stdf.r", p_value(r))?;
    }
    if a.independence {
        set_path(&mut t, "check.stdf", Value::Table(Table::new()))?;
        set_path(&mut t, "check.stdf.source", Value::String("independence".into()))?;
    }
    if let Some(v) = a.max_lag {
        set_path(&mut t, "check.max_lag", Value::Integer(v))?;
    }
    if let Some(v) = &a.out {
        set_path(&mut t, "output.dir", Value::String(v.display().to_string()))?;
    }
    if let Some(v) = &a.stem {
        set_path(&mut t, "output.stem", Value::String(v.clone()))?;
    }
    if a.binary {
        set_path(&mut t, "output.binary", Value::Boolean(true))?;
    }
    for s in &a.sets {
        let (k, v) = parse_set(s)?;
        set_path(&mut t, &k, v)?;
    }
    let config = ExperimentConfig::from_toml(&toml::to_string(&t).map_err(|e| CliError::Config(e.to_string()))?)?;
    config.validate()?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<i32> {
    let (verb, args) = match cli.command {
        Command::Verify { config, report } => {
            verify(&ExperimentConfig::load(&config)?, &report)?;
            println!("verify: ok ({})", report.display());
            return Ok(0);
        }
        Command::Simulate(a) => (Verb::Simulate, a),
        Command::Fidi(a) => (Verb::Fidi, a),
        Command::Ec(a) => (Verb::Ec, a),
        Command::Bounds(a) => (Verb::Bounds, a),
        Command::CndCheck(a) => (Verb::CndCheck, a),
        Command::Pmin(a) => (Verb::Pmin, a),
        Command::TransformCheck(a) => (Verb::TransformCheck, a),
        Command::Diagnose(a) => (Verb::Diagnose, a),
    };
    let config = build_config(verb, &args)?;
    let opts = RunOptions { threads: cli.threads, record_timing: cli.record_timing };
    let (path, report) = run(&config, &opts)?;
    let status = serde_json::to_value(report.status).expect("status serializes");
    print!("{}: {} ({})", verb.name(), status.as_str().unwrap_or_default(), path.display());
    match report.required_replicates {
        Some(n) => println!("; about {n} replicates needed for a decision"),
        None => println!(),
    }
    Ok(report.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("lpmax: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
