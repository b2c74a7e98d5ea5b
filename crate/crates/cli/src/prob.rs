use crate::{output, parse_list, usage, Failure, Outcome};
use clap::Args;
use ptasep::finite::{multipoint_prob, multipoint_prob_partial_uniform, multipoint_prob_uniform, ContourSpec};
use ptasep::sim::{ctmc_exact_prob, ctmc_exact_prob_random, estimate_joint_prob, IcSource};
use ptasep::toeplitz::multipoint_prob_oracle;
use ptasep::{Error, InitialCondition, ObsPoint, ObservationSet, RandomIc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Largest support averaged by the Toeplitz engine for random conditions.
const MAX_TOEPLITZ_SUPPORT: usize = 64;

pub const ENGINES: [&str; 4] = ["fredholm", "toeplitz", "mc", "ctmc"];

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbArgs {
    /// step, flat, stepflat, explicit, uniform or partial_uniform.
    #[arg(long, default_value = "step")]
    pub ic: String,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<usize>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub ls: Option<usize>,
    /// Particle positions, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    #[arg(long)]
    pub n1: Option<usize>,
    /// Observation `k,t,a`; repeat for several points.
    #[arg(long, allow_hyphen_values = true, required = true)]
    pub point: Vec<String>,
    #[arg(long, default_value = "fredholm")]
    pub engine: String,
    /// Run every engine and report pairwise deviations.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Circle radii, outermost first, comma separated.
    #[arg(long)]
    pub radii: Option<String>,
}

fn need<T: Copy>(v: Option<T>, flag: &str, ic: &str) -> Result<T, Failure> {
    v.ok_or_else(|| usage(format!("--{flag} is required for ic={ic}")))
}

fn source(a: &ProbArgs) -> Result<IcSource, Failure> {
    let ic = a.ic.as_str();
    let y = || -> Result<Vec<i64>, Failure> {
        let s = a.y.as_deref().ok_or_else(|| usage(format!("--y is required for ic={ic}")))?;
        parse_list(s, "y")
    };
    Ok(match ic {
        "step" => IcSource::Fixed(InitialCondition::step(need(a.l, "L", ic)?, need(a.n, "N", ic)?)?),
        "flat" => IcSource::Fixed(InitialCondition::flat(need(a.n, "N", ic)?, need(a.d, "d", ic)?)?),
        "stepflat" => {
            IcSource::Fixed(InitialCondition::stepflat(need(a.n, "N", ic)?, need(a.d, "d", ic)?, need(a.ls, "ls", ic)?)?)
        }
        "explicit" => IcSource::Fixed(InitialCondition::explicit(need(a.l, "L", ic)?, y()?)?),
        "uniform" => IcSource::Random(RandomIc::uniform(need(a.l, "L", ic)?, need(a.n, "N", ic)?)?),
        "partial_uniform" => IcSource::Random(RandomIc::partial_uniform(need(a.l, "L", ic)?, need(a.n1, "n1", ic)?, y()?)?),
        other => return Err(usage(format!("unknown ic '{other}'"))),
    })
}

fn observations(points: &[String]) -> Result<ObservationSet, Failure> {
    let mut pts = Vec::with_capacity(points.len());
    for p in points {
        let f: Vec<&str> = p.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(usage(format!("point must be 'k,t,a', got '{p}'")));
        }
        let bad = || usage(format!("cannot parse point '{p}'"));
        pts.push(ObsPoint {
            k: f[0].parse().map_err(|_| bad())?,
            t: f[1].parse().map_err(|_| bad())?,
            a: f[2].parse().map_err(|_| bad())?,
        });
    }
    Ok(ObservationSet::new(pts)?)
}

fn contour(a: &ProbArgs) -> Result<ContourSpec, Failure> {
    let radii = match &a.radii {
        Some(s) => Some(parse_list(s, "radii")?),
        None => None,
    };
    Ok(ContourSpec { radii, nodes: a.nodes, tol: a.tol, ..ContourSpec::default() })
}

/// One engine's result as a JSON object with at least `probability`.
fn run_engine(name: &str, src: &IcSource, obs: &ObservationSet, a: &ProbArgs) -> ptasep::Result<Value> {
    let spec = || contour(a).map_err(|f| Error::Parameter(f.message));
    match name {
        "fredholm" => {
            let spec = spec()?;
            let r = match src {
                IcSource::Fixed(ic) => multipoint_prob(ic, obs, &spec)?,
                IcSource::Random(RandomIc::Uniform { .. }) => multipoint_prob_uniform(&src_params(src), obs, &spec)?,
                IcSource::Random(RandomIc::PartialUniform { l, n1, y }) => {
                    multipoint_prob_partial_uniform(*l, y, *n1, obs, &spec)?
                }
            };
            Ok(serde_json::to_value(r).expect("results serialize"))
        }
        "toeplitz" => {
            let spec = spec()?;
            match src {
                IcSource::Fixed(ic) => Ok(serde_json::to_value(multipoint_prob_oracle(ic, obs, &spec)?).expect("results serialize")),
                IcSource::Random(ric) => {
                    // linearity in the initial law: average the deterministic oracle
                    let support = ric.support();
                    if support.len() > MAX_TOEPLITZ_SUPPORT {
                        return Err(Error::Size(format!(
                            "random condition has {} configurations, more than {MAX_TOEPLITZ_SUPPORT}",
                            support.len()
                        )));
                    }
                    let l = src_params(src).l();
                    let mut total = 0.0;
                    let mut m_final = 0;
                    for y in &support {
                        let r = multipoint_prob_oracle(&InitialCondition::explicit(l, y.clone())?, obs, &spec)?;
                        total += r.probability;
                        m_final = m_final.max(r.m_final);
                    }
                    Ok(json!({
                        "probability": total / support.len() as f64,
                        "configurations": support.len(),
                        "M_final": m_final,
                        "radii": spec.radii_for(obs.m())?,
                    }))
                }
            }
        }
        "mc" => {
            let r = estimate_joint_prob(src, obs, a.samples, a.seed)?;
            Ok(json!({"probability": r.p_hat, "std_err": r.std_err, "n_samples": r.n_samples, "seed": r.seed}))
        }
        "ctmc" => {
            let p = match src {
                IcSource::Fixed(ic) => ctmc_exact_prob(ic, obs)?,
                IcSource::Random(ric) => ctmc_exact_prob_random(ric, obs)?,
            };
            Ok(json!({ "probability": p }))
        }
        other => Err(Error::Parameter(format!("unknown engine '{other}'"))),
    }
}

fn src_params(src: &IcSource) -> ptasep::ModelParams {
    match src {
        IcSource::Fixed(ic) => ic.params(),
        IcSource::Random(r) => r.params(),
    }
}

fn describe(src: &IcSource) -> Value {
    match src {
        IcSource::Fixed(ic) => {
            let mut v = serde_json::to_value(ic).expect("conditions serialize");
            if let (Some(obj), Value::Object(kind)) = (v.as_object_mut(), serde_json::to_value(ic.kind).expect("kinds serialize")) {
                obj.extend(kind);
            }
            v
        }
        IcSource::Random(r) => serde_json::to_value(r).expect("conditions serialize"),
    }
}

fn provenance(a: &ProbArgs, results: &[(&str, &Value)]) -> Value {
    let mut m = Value::Null;
    let mut radii = Value::Null;
    for (_, r) in results {
        if m.is_null() {
            if let Some(v) = r.get("M_final") {
                m = v.clone();
                radii = r.get("radii").cloned().unwrap_or(Value::Null);
            }
        }
    }
    json!({"seed": a.seed, "samples": a.samples, "M": m, "radii": radii, "nodes": a.nodes, "tol": a.tol})
}

pub fn run(a: &ProbArgs) -> Result<Outcome, Failure> {
    let src = source(a)?;
    let obs = observations(&a.point)?;
    contour(a)?;
    let points: Vec<Value> = obs.points().iter().map(|p| json!({"k": p.k, "t": p.t, "a": p.a})).collect();
    if !a.compare {
        if !ENGINES.contains(&a.engine.as_str()) {
            return Err(usage(format!("unknown engine '{}'; expected one of {:?}", a.engine, ENGINES)));
        }
        let result = run_engine(&a.engine, &src, &obs, a)?;
        let prov = provenance(a, &[(&a.engine, &result)]);
        let doc = json!({"engine": a.engine, "ic": describe(&src), "points": points, "result": result, "provenance": prov});
        return Ok(Outcome::ok(output::json(&doc) + "\n"));
    }
    let mut ran: Vec<(&str, Value)> = vec![];
    let mut skipped = serde_json::Map::new();
    let mut first_err: Option<Error> = None;
    for name in ENGINES {
        match run_engine(name, &src, &obs, a) {
            Ok(v) => ran.push((name, v)),
            Err(e) => {
                skipped.insert(name.to_string(), json!({"reason": e.to_string(), "exit_code": e.exit_code()}));
                first_err.get_or_insert(e);
            }
        }
    }
    if ran.is_empty() {
        return Err(first_err.expect("every engine failed").into());
    }
    let prob = |v: &Value| v["probability"].as_f64().unwrap_or(f64::NAN);
    let mut deviations = vec![];
    for i in 0..ran.len() {
        for j in i + 1..ran.len() {
            let (pa, pb) = (prob(&ran[i].1), prob(&ran[j].1));
            let se = ran[i].1.get("std_err").or(ran[j].1.get("std_err")).and_then(Value::as_f64);
            let mut d = json!({"a": ran[i].0, "b": ran[j].0, "abs_diff": (pa - pb).abs()});
            if let Some(se) = se.filter(|s| *s > 0.0) {
                d["std_errs"] = json!((pa - pb).abs() / se);
            }
            deviations.push(d);
        }
    }
    let refs: Vec<(&str, &Value)> = ran.iter().map(|(n, v)| (*n, v)).collect();
    let prov = provenance(a, &refs);
    let engines: serde_json::Map<String, Value> = ran.iter().map(|(n, v)| (n.to_string(), v.clone())).collect();
    let doc = json!({
        "ic": describe(&src),
        "points": points,
        "engines": engines,
        "skipped": skipped,
        "deviations": deviations,
        "provenance": prov,
    });
    Ok(Outcome::ok(output::json(&doc) + "\n"))
}
