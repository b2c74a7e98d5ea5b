use crate::{output, parse_list, usage, Failure, Outcome};
use clap::Args;
use ptasep::limits::{limit_cdf, LimitIc, LimitSpec, DERIVATIVE_STEP};
use ptasep::{LimitCoordinates, LimitPoint};
use serde::{Deserialize, Serialize};

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitArgs {
    /// step, flat, stepflat, uniform_step or uniform.
    #[arg(long, default_value = "step")]
    pub kind: String,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Coordinates `gamma,tau[,x]`; repeat for several points.
    #[arg(long, allow_hyphen_values = true, required = true)]
    pub point: Vec<String>,
    /// Shifts added to every x: a list `a,b,c` or a range `lo:hi:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Circle radii, outermost first, comma separated.
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long, default_value_t = 16)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Starting node cutoff.
    #[arg(long)]
    pub xi: Option<f64>,
}

fn kind(a: &LimitArgs) -> Result<LimitIc, Failure> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("--{flag} is required for kind={}", a.kind)));
    Ok(match a.kind.as_str() {
        "step" => LimitIc::Step,
        "flat" => LimitIc::Flat,
        "stepflat" => LimitIc::StepFlat { mu: need(a.mu, "mu")? },
        "uniform_step" => LimitIc::UniformStep { alpha: need(a.alpha, "alpha")? },
        "uniform" => LimitIc::Uniform,
        other => return Err(usage(format!("unknown kind '{other}'"))),
    })
}

fn grid(s: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts[..] {
        [_] => parse_list(s, "x"),
        [lo, hi, count] => {
            let bad = || usage(format!("range must be 'lo:hi:count', got '{s}'"));
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let n: usize = count.trim().parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
        }
        _ => Err(usage(format!("cannot parse x grid '{s}'"))),
    }
}

fn coordinates(points: &[String]) -> Result<LimitCoordinates, Failure> {
    let mut pts = Vec::with_capacity(points.len());
    for p in points {
        let v: Vec<f64> = parse_list(p, "point")?;
        let (gamma, tau, x) = match v[..] {
            [g, t] => (g, t, 0.0),
            [g, t, x] => (g, t, x),
            _ => return Err(usage(format!("point must be 'gamma,tau[,x]', got '{p}'"))),
        };
        pts.push(LimitPoint { gamma, tau, x });
    }
    Ok(LimitCoordinates::new(pts)?)
}

fn joined(vals: impl Iterator<Item = f64>) -> String {
    vals.map(output::num).collect::<Vec<_>>().join(";")
}

pub fn run(a: &LimitArgs) -> Result<Outcome, Failure> {
    let kind = kind(a)?;
    let base = coordinates(&a.point)?;
    let shifts = match &a.x {
        Some(s) => grid(s)?,
        None => vec![0.0],
    };
    let radii = match &a.radii {
        Some(s) => Some(parse_list(s, "radii")?),
        None => None,
    };
    let spec = LimitSpec { radii, nodes: a.nodes, tol: a.tol, xi: a.xi, ..LimitSpec::default() };
    let io = |e: csv::Error| Failure { code: 3, message: e.to_string() };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "m", "gamma", "tau", "x", "value", "Xi", "M", "deriv_step", "outside_verified_regime"])
        .map_err(io)?;
    let deriv = if kind == LimitIc::Uniform { output::num(DERIVATIVE_STEP) } else { String::new() };
    for dx in shifts {
        let coords = base.shift_x(dx);
        let r = limit_cdf(&coords, kind, &spec)?;
        let pts = coords.points();
        let rec = [
            kind.name(),
            coords.m().to_string(),
            joined(pts.iter().map(|p| p.gamma)),
            joined(pts.iter().map(|p| p.tau)),
            joined(pts.iter().map(|p| p.x)),
            output::num(r.value),
            output::num(r.xi),
            r.m_final.to_string(),
            deriv.clone(),
            r.outside_verified_regime.to_string(),
        ];
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure { code: 3, message: e.to_string() })?;
    Ok(Outcome { text: String::from_utf8(bytes).expect("csv output is utf-8"), code: 0 })
}
