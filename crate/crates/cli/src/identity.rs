use crate::{output, usage, Failure, Outcome};
use clap::Args;
use num_complex::Complex;
use ptasep::toeplitz::{generic_identity_check, random_instance};
use ptasep::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Args, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityArgs {
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "m-max", default_value_t = 3)]
    pub m_max: usize,
    #[arg(long = "n-max", default_value_t = 4)]
    pub n_max: usize,
    #[arg(long = "size-max", default_value_t = 7)]
    pub size_max: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub threshold: f64,
    /// Zero one `h` value on `R_1` in every instance, which the check must refuse.
    #[arg(long = "zero-h")]
    pub zero_h: bool,
}

fn pair(z: Complex<f64>) -> Value {
    json!([z.re, z.im])
}

fn check_one(a: &IdentityArgs, index: usize) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    rng.set_stream(index as u64);
    let m = rng.gen_range(1..=a.m_max);
    let n = rng.gen_range(1..=a.n_max);
    let sizes: Vec<usize> = (0..m).map(|_| rng.gen_range(n..=a.size_max)).collect();
    let mut inst = random_instance(&mut rng, m, n, &sizes);
    if a.zero_h {
        let x = inst.r[0][0];
        inst.h[0][x] = Complex::new(0.0, 0.0);
    }
    let mut line = json!({"index": index, "m": m, "N": n, "sizes": sizes});
    match generic_identity_check(&inst) {
        Ok(r) => {
            line["rel_err"] = json!(r.rel_err);
            line["lhs"] = pair(r.lhs);
            line["rhs"] = pair(r.rhs);
            line["pass"] = json!(r.rel_err <= a.threshold);
        }
        Err(e) => {
            line["error"] = json!(e.to_string());
            line["exit_code"] = json!(e.exit_code());
            line["precondition"] = json!(matches!(e, Error::Precondition(_)));
        }
    }
    line
}

pub fn run(a: &IdentityArgs) -> Result<Outcome, Failure> {
    if a.count == 0 || a.m_max == 0 || a.n_max == 0 {
        return Err(usage("count, m-max and n-max must be positive"));
    }
    if a.size_max < a.n_max {
        return Err(usage(format!("size-max {} must be at least n-max {}", a.size_max, a.n_max)));
    }
    let lines: Vec<Value> = (0..a.count).into_par_iter().map(|i| check_one(a, i)).collect();
    let mut text = String::new();
    let mut max_err: Option<f64> = None;
    let (mut over, mut precondition, mut other) = (0usize, 0usize, 0usize);
    for l in &lines {
        text.push_str(&output::json(l));
        text.push('\n');
        if let Some(e) = l.get("rel_err").and_then(Value::as_f64) {
            max_err = Some(max_err.map_or(e, |m: f64| m.max(e)));
            if !(e <= a.threshold) {
                over += 1;
            }
        } else if l["precondition"] == json!(true) {
            precondition += 1;
        } else {
            other += 1;
        }
    }
    let summary = json!({"summary": {
        "count": a.count,
        "seed": a.seed,
        "threshold": a.threshold,
        "max_rel_err": max_err,
        "over_threshold": over,
        "precondition_failures": precondition,
        "other_failures": other,
    }});
    text.push_str(&output::json(&summary));
    text.push('\n');
    let code = if over > 0 || other > 0 {
        4
    } else if precondition > 0 {
        2
    } else {
        0
    };
    Ok(Outcome { text, code })
}
