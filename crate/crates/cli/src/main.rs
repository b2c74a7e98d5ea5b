mod identity;
mod limit;
mod output;
mod prob;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use ptasep::bethe::solve_at;
use ptasep::ModelParams;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "ptasep", version, about = "Multi-point distributions of periodic TASEP")]
struct Cli {
    /// JSON object whose keys override the subcommand flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bethe roots of q_z as CSV.
    Bethe(BetheArgs),
    /// Finite-time multi-point probability as JSON.
    Prob(prob::ProbArgs),
    /// Relaxation-scale limit distribution on an x grid as CSV.
    Limit(limit::LimitArgs),
    /// Batches of random determinant-identity checks as JSON lines.
    Identity(identity::IdentityArgs),
}

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetheArgs {
    #[arg(long = "L")]
    #[serde(rename = "L")]
    l: usize,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    /// Normalized z as `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    z: String,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<ptasep::Error> for Failure {
    fn from(e: ptasep::Error) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

pub fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

/// Output text plus the exit code to finish with.
pub struct Outcome {
    pub text: String,
    pub code: u8,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, code: 0 }
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| usage(format!("cannot parse {what} entry '{p}' in '{s}'"))))
        .collect()
}

fn parse_complex(s: &str) -> Result<Complex<f64>, Failure> {
    let v: Vec<f64> = parse_list(s, "z")?;
    match v[..] {
        [re] => Ok(Complex::new(re, 0.0)),
        [re, im] => Ok(Complex::new(re, im)),
        _ => Err(usage(format!("z must be 're' or 're,im', got '{s}'"))),
    }
}

fn overlay<T: Serialize + DeserializeOwned>(args: T, config: &serde_json::Map<String, Value>) -> Result<T, Failure> {
    let mut base = serde_json::to_value(&args).map_err(|e| usage(e.to_string()))?;
    let obj = base.as_object_mut().expect("argument structs serialize to objects");
    for (k, v) in config {
        if k != "threads" && k != "output" {
            obj.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(base).map_err(|e| usage(format!("config: {e}")))
}

fn run_bethe(a: &BetheArgs) -> Result<Outcome, Failure> {
    let params = ModelParams::new(a.l, a.n)?;
    let roots = solve_at(&params, parse_complex(&a.z)?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure { code: 3, message: e.to_string() };
    w.write_record(["side", "index", "re", "im", "residual"]).map_err(io)?;
    for (side, set) in [("L", &roots.left), ("R", &roots.right)] {
        for (i, &v) in set.iter().enumerate() {
            let rec = [side.to_string(), i.to_string(), output::num(v.re), output::num(v.im), output::num(roots.residual_of(v))];
            w.write_record(&rec).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure { code: 3, message: e.to_string() })?;
    Ok(Outcome::ok(String::from_utf8(bytes).expect("csv output is utf-8")))
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let config = match &cli.config {
        None => serde_json::Map::new(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text).map_err(|e| usage(format!("config: {e}")))? {
                Value::Object(m) => m,
                _ => return Err(usage("config must be a JSON object")),
            }
        }
    };
    let threads = match config.get("threads") {
        Some(v) => Some(v.as_u64().ok_or_else(|| usage("config: threads must be a positive integer"))? as usize),
        None => cli.threads,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure { code: 3, message: e.to_string() })?;
    }
    let out_path = match config.get("output") {
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(usage("config: output must be a string")),
        None => cli.output.clone(),
    };
    let outcome = match cli.cmd {
        Command::Bethe(a) => run_bethe(&overlay(a, &config)?),
        Command::Prob(a) => prob::run(&overlay(a, &config)?),
        Command::Limit(a) => limit::run(&overlay(a, &config)?),
        Command::Identity(a) => identity::run(&overlay(a, &config)?),
    }?;
    match out_path {
        Some(p) => std::fs::write(&p, &outcome.text)
            .map_err(|e| Failure { code: 3, message: format!("cannot write {}: {e}", p.display()) })?,
        None => print!("{}", outcome.text),
    }
    Ok(Outcome { text: String::new(), code: outcome.code })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(o) => ExitCode::from(o.code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
