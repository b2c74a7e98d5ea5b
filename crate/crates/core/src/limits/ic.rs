use super::functions::{b_diag, h_fn, h_minus};
use super::nodes::LimitNodeSet;
use crate::error::{bail, Result};
use crate::linalg::Matrix;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Initial conditions with a relaxation-scale limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitIc {
    Step,
    Flat,
    #[serde(rename = "stepflat")]
    StepFlat {
        mu: f64,
    },
    UniformStep {
        alpha: f64,
    },
    /// Enters only through the derivative form of the limit.
    Uniform,
}

impl LimitIc {
    pub fn name(&self) -> String {
        match self {
            LimitIc::Step => "step".into(),
            LimitIc::Flat => "flat".into(),
            LimitIc::StepFlat { mu } => format!("stepflat(mu={mu})"),
            LimitIc::UniformStep { alpha } => format!("uniform_step(alpha={alpha})"),
            LimitIc::Uniform => "uniform".into(),
        }
    }
}

/// `E_ic` and `chi_ic` for one of the deterministic-kernel initial
/// conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitIcData {
    kind: LimitIc,
}

/// `E_ic(z)` and, unless `chi == 1`, the `|R_z| x |L_z|` table `chi(eta, xi; z)`.
#[derive(Clone, Debug)]
pub struct IcTable {
    pub energy: C64,
    pub chi: Option<Matrix<C64>>,
}

pub fn ic_data(kind: LimitIc) -> Result<LimitIcData> {
    match kind {
        LimitIc::StepFlat { mu } if !(mu > 0.0 && mu.is_finite()) => bail!(Parameter, "mu must be positive, got {mu}"),
        LimitIc::UniformStep { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
            bail!(Parameter, "alpha must be positive, got {alpha}")
        }
        LimitIc::Uniform => bail!(Parameter, "the uniform limit has no (E, chi) pair; it is a derivative of the step limit"),
        _ => Ok(LimitIcData { kind }),
    }
}

impl LimitIcData {
    pub fn kind(&self) -> LimitIc {
        self.kind
    }

    pub fn energy(&self, z: C64) -> Result<C64> {
        match self.kind {
            LimitIc::Step => Ok(one()),
            LimitIc::Flat => energy_flat(z),
            LimitIc::StepFlat { mu } => energy_stepflat(z, mu),
            LimitIc::UniformStep { alpha } => energy_uniform_step(z, alpha),
            LimitIc::Uniform => unreachable!("rejected by ic_data"),
        }
    }

    /// `chi(eta, xi; z)` for `eta` in `R_z` and `xi` in `L_z`.
    pub fn chi(&self, eta: C64, xi: C64, z: C64) -> Result<C64> {
        match self.kind {
            LimitIc::Step => Ok(one()),
            LimitIc::Flat => chi_flat(eta, xi, z),
            LimitIc::StepFlat { mu } => chi_stepflat(eta, xi, z, mu),
            LimitIc::UniformStep { alpha } => {
                let e = energy_uniform_step(z, alpha)?;
                Ok(UsLine::new(eta, z, alpha)?.integral(eta, xi, alpha) / e)
            }
            LimitIc::Uniform => unreachable!("rejected by ic_data"),
        }
    }

    pub fn table(&self, nodes: &LimitNodeSet) -> Result<IcTable> {
        let z = nodes.z;
        let energy = self.energy(z)?;
        let (nr, nl) = (nodes.right.len(), nodes.left.len());
        let chi = match self.kind {
            LimitIc::Step => None,
            LimitIc::Flat | LimitIc::StepFlat { .. } => {
                let mut t = Matrix::zeros(nr, nl);
                for (a, &eta) in nodes.right.iter().enumerate() {
                    for (b, &xi) in nodes.left.iter().enumerate() {
                        t[(a, b)] = self.chi(eta, xi, z)?;
                    }
                }
                Some(t)
            }
            LimitIc::UniformStep { alpha } => {
                let mut lines: HashMap<u64, UsLine> = HashMap::new();
                let mut t = Matrix::zeros(nr, nl);
                for (a, &eta) in nodes.right.iter().enumerate() {
                    let c = us_contour(eta, alpha);
                    let line = match lines.entry(c.to_bits()) {
                        std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
                        std::collections::hash_map::Entry::Vacant(v) => v.insert(UsLine::new(eta, z, alpha)?),
                    };
                    for (b, &xi) in nodes.left.iter().enumerate() {
                        t[(a, b)] = line.integral(eta, xi, alpha) / energy;
                    }
                }
                Some(t)
            }
            LimitIc::Uniform => unreachable!("rejected by ic_data"),
        };
        Ok(IcTable { energy, chi })
    }
}

/// `(1 - z)^{-1/4} e^{-B(z)}`.
pub fn energy_flat(z: C64) -> Result<C64> {
    Ok((-0.25 * (one() - z).ln() - b_diag(z)?).exp())
}

/// Nonzero only on `xi = -eta`, where it equals `2 eta^2 e^{-2 h(eta, z)}`.
pub fn chi_flat(eta: C64, xi: C64, z: C64) -> Result<C64> {
    if (xi + eta).norm() > 1e-12 * eta.norm().max(1.0) {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok((-h_fn(xi, z)? - h_fn(eta, z)?).exp() * eta * (eta - xi))
}

/// `exp(-h(mu)/2 + (z^2/2) I)`, where `I` is the double integral over
/// `i R x i R`. Both lines are moved to `Re = c` with
/// `c = sqrt(-2 log|z|) / 2`, which crosses no pole because every
/// solution of `e^{-eta^2/2} = z` has `|Re eta| >= sqrt(-2 log|z|)`. On the
/// shifted lines the logarithm is smooth and a tensor trapezoid rule with
/// step `c / 6` converges geometrically.
pub fn energy_stepflat(z: C64, mu: f64) -> Result<C64> {
    let r = z.norm();
    let hmu = h_fn(C64::new(mu, 0.0), z)?;
    if r == 0.0 {
        return Ok((-0.5 * hmu).exp());
    }
    let c = 0.5 * (-2.0 * r.ln()).sqrt();
    let step = c / 6.0;
    let ymax = (c * c + 90.0).sqrt();
    let n = (ymax / step).ceil() as i64;
    let pts: Vec<(C64, C64)> = (-n..=n)
        .map(|k| {
            let eta = C64::new(c, k as f64 * step);
            (eta, eta / ((-0.5 * eta * eta).exp() - z))
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    for &(e1, a1) in &pts {
        let mut row = C64::new(0.0, 0.0);
        for &(e2, a2) in &pts {
            row += a2 * (e1 + e2 + 2.0 * mu).ln();
        }
        total += a1 * row;
    }
    let integral = total * (step / (2.0 * PI)).powi(2);
    Ok((-0.5 * hmu + 0.5 * z * z * integral).exp())
}

/// The step-flat characteristic function, continued analytically across
/// `Re(xi + 2 mu) = 0`.
pub fn chi_stepflat(eta: C64, xi: C64, z: C64, mu: f64) -> Result<C64> {
    let s = xi + eta + 2.0 * mu;
    if s.norm() < 1e-12 * (1.0 + mu) {
        bail!(Pole, "xi + eta + 2 mu vanishes at eta = {eta}, xi = {xi}");
    }
    let pre = 2.0 * (eta + mu) / s;
    let w = xi + 2.0 * mu;
    let tail = h_fn(-eta - 2.0 * mu, z)?;
    if w.re >= 0.0 {
        Ok(pre * (h_minus(-w, z)? - tail).exp())
    } else {
        Ok(pre * (one() - z * (0.5 * w * w).exp()) * (-h_fn(w, z)? - tail).exp())
    }
}

/// `int_{iR} e^{-h(zeta + alpha, z) + zeta^2/2} dzeta / (i sqrt(2 pi))`,
/// by the trapezoid rule in `y = Im zeta`. The integrand is analytic in
/// the strip `|Re zeta| < alpha`, so the step is tied to `alpha`.
pub fn energy_uniform_step(z: C64, alpha: f64) -> Result<C64> {
    let line = Line::new(0.0, z, alpha)?;
    Ok(line.weights.iter().fold(C64::new(0.0, 0.0), |acc, (_, w)| acc + w))
}

/// Samples of `e^{-h(zeta + alpha) + zeta^2/2} dy / sqrt(2 pi)` on
/// `Re zeta = c`.
struct Line {
    weights: Vec<(C64, C64)>,
}

impl Line {
    fn new(c: f64, z: C64, alpha: f64) -> Result<Self> {
        let step = alpha.min(1.0) / 8.0;
        let ymax = (c * c + 80.0).sqrt();
        let n = (ymax / step).ceil() as i64;
        let mut weights = Vec::with_capacity(2 * n as usize + 1);
        for k in -n..=n {
            let zeta = C64::new(c, k as f64 * step);
            let g = (-h_fn(zeta + alpha, z)? + 0.5 * zeta * zeta).exp();
            weights.push((zeta, g * step / (2.0 * PI).sqrt()));
        }
        Ok(Line { weights })
    }
}

/// Contour constant for `chi_us`: `c + alpha > Re eta` with unit margin, and
/// `c = 0` whenever that is allowed, so `e^{c^2/2}` stays small.
fn us_contour(eta: C64, alpha: f64) -> f64 {
    (eta.re - alpha + 1.0).max(0.0)
}

struct UsLine {
    line: Line,
}

impl UsLine {
    fn new(eta: C64, z: C64, alpha: f64) -> Result<Self> {
        Ok(UsLine { line: Line::new(us_contour(eta, alpha), z, alpha)? })
    }

    fn integral(&self, eta: C64, xi: C64, alpha: f64) -> C64 {
        self.line
            .weights
            .iter()
            .fold(C64::new(0.0, 0.0), |acc, &(zeta, w)| acc + w * (zeta + alpha - xi) / (zeta + alpha - eta))
    }
}
