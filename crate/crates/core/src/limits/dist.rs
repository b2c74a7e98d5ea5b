use super::ic::{ic_data, IcTable, LimitIc, LimitIcData};
use super::kernels::{c_step_prepared, kernels_prepared, PreparedCircle};
use crate::error::{bail, Error, Result};
use crate::finite::{fredholm_det, KernelPair, Side};
use crate::model::LimitCoordinates;
use crate::quad::pairwise_sum;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Working annulus for `|z|` on the limit contours.
pub const ANNULUS: (f64, f64) = (0.05, 0.9);

/// Step of the central difference used by the uniform limit.
pub const DERIVATIVE_STEP: f64 = 1e-4;

/// Quadrature controls for the limit distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimitSpec {
    /// Circle radii, outermost first; defaults to `0.5 * 0.6^(j-1)`. The
    /// outermost one plays the role of the `(r1, r2)` window.
    pub radii: Option<Vec<f64>>,
    /// Starting nodes per circle, a power of two no smaller than 8.
    pub nodes: usize,
    pub tol: f64,
    pub max_doublings: usize,
    /// Starting node cutoff; by default chosen from the smallest time step.
    pub xi: Option<f64>,
    pub max_xi_doublings: usize,
}

impl Default for LimitSpec {
    fn default() -> Self {
        LimitSpec { radii: None, nodes: 16, tol: 1e-8, max_doublings: 5, xi: None, max_xi_doublings: 3 }
    }
}

impl LimitSpec {
    pub fn radii_for(&self, m: usize) -> Result<Vec<f64>> {
        let radii = match &self.radii {
            Some(r) => r.clone(),
            None => (0..m).map(|j| 0.5 * 0.6f64.powi(j as i32)).collect(),
        };
        if radii.len() != m {
            bail!(Parameter, "{} radii for {m} circles", radii.len());
        }
        let (lo, hi) = ANNULUS;
        if radii.iter().any(|&r| !(lo..=hi).contains(&r)) || radii.windows(2).any(|p| p[1] >= p[0]) {
            bail!(Parameter, "radii {radii:?} must be strictly decreasing inside [{lo}, {hi}]");
        }
        if self.nodes < 8 || !self.nodes.is_power_of_two() {
            bail!(Parameter, "nodes per circle must be a power of two >= 8, got {}", self.nodes);
        }
        if !(self.tol > 0.0) {
            bail!(Parameter, "tolerance must be positive");
        }
        if let Some(x) = self.xi {
            if !(x > 0.0) {
                bail!(Parameter, "node cutoff must be positive");
            }
        }
        Ok(radii)
    }
}

/// Default starting cutoff: the cubic factor `e^{-dtau |zeta|^3 / (3 sqrt 2)}`
/// along the node asymptotes is below `1e-16` beyond it.
pub fn default_xi(coords: &LimitCoordinates) -> f64 {
    let mut prev = 0.0;
    let mut dmin = f64::INFINITY;
    for p in coords.points() {
        let d = p.tau - prev;
        if d > 0.0 {
            dmin = dmin.min(d);
        }
        prev = p.tau;
    }
    (5.5 * dmin.powf(-1.0 / 3.0)).clamp(5.0, 16.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitResult {
    pub value: f64,
    pub imag_residual: f64,
    /// Node cutoff at which the result settled.
    pub xi: f64,
    #[serde(rename = "M_final")]
    pub m_final: usize,
    pub radii: Vec<f64>,
    /// Set when two times coincide, a case the limit theorem covers only
    /// under extra tail assumptions.
    pub outside_verified_regime: bool,
}

fn apply_chi(kp: &mut KernelPair, chi: &crate::linalg::Matrix<C64>) {
    for (r, y) in kp.sets.s2.iter().enumerate() {
        if y.circle != 1 || y.side != Side::R {
            continue;
        }
        for (c, x) in kp.sets.s1.iter().enumerate() {
            if x.circle == 1 && x.side == Side::L {
                kp.k2[(r, c)] *= chi[(y.index, x.index)];
            }
        }
    }
}

/// `C_step D_ic`, without the energy factor.
fn step_part(circles: &[&PreparedCircle], coords: &LimitCoordinates, table: Option<&IcTable>) -> Result<C64> {
    let c = c_step_prepared(circles, coords)?;
    let mut kp = kernels_prepared(circles, coords)?;
    if let Some(IcTable { chi: Some(chi), .. }) = table {
        apply_chi(&mut kp, chi);
    }
    Ok(c * fredholm_det(&kp))
}

/// The integrand of the limit distribution at one tensor point.
fn integrand(kind: LimitIc, circles: &[&PreparedCircle], coords: &LimitCoordinates, table: Option<&IcTable>) -> Result<C64> {
    match kind {
        LimitIc::Uniform => {
            let h = DERIVATIVE_STEP;
            let up = step_part(circles, &coords.shift_x(h), None)?;
            let down = step_part(circles, &coords.shift_x(-h), None)?;
            Ok(-(2.0 * PI).sqrt() / circles[0].z() * (up - down) / (2.0 * h))
        }
        _ => {
            let t = table.expect("tables are built for every deterministic kind");
            Ok(t.energy * step_part(circles, coords, table)?)
        }
    }
}

/// `C_ic(z) D_ic(z)` at explicit `z`, with node sets cut at `xi`.
pub fn limit_integrand_at(kind: LimitIc, zs: &[C64], coords: &LimitCoordinates, xi: f64) -> Result<C64> {
    let circles: Vec<PreparedCircle> = zs.iter().map(|&z| PreparedCircle::new(z, xi)).collect::<Result<_>>()?;
    let refs: Vec<&PreparedCircle> = circles.iter().collect();
    let table = match kind {
        LimitIc::Uniform => None,
        k => Some(ic_data(k)?.table(&circles[0].nodes)?),
    };
    integrand(kind, &refs, coords, table.as_ref())
}

fn tensor_mean(
    kind: LimitIc,
    data: Option<&LimitIcData>,
    coords: &LimitCoordinates,
    radii: &[f64],
    nodes: usize,
    xi: f64,
) -> Result<C64> {
    let m = radii.len();
    let mut circles: Vec<Vec<PreparedCircle>> = Vec::with_capacity(m);
    for &r in radii {
        let ring = (0..nodes)
            .into_par_iter()
            .map(|k| PreparedCircle::new(C64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / nodes as f64), xi))
            .collect::<Result<Vec<_>>>()?;
        circles.push(ring);
    }
    let tables: Vec<Option<IcTable>> = match data {
        None => vec![None; nodes],
        Some(d) => circles[0].par_iter().map(|c| d.table(&c.nodes).map(Some)).collect::<Result<_>>()?,
    };
    let total = nodes.pow(m as u32);
    let values: Vec<C64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = flat;
            let mut refs = Vec::with_capacity(m);
            let mut first = 0;
            for (c, ring) in circles.iter().enumerate() {
                let k = idx % nodes;
                idx /= nodes;
                if c == 0 {
                    first = k;
                }
                refs.push(&ring[k]);
            }
            integrand(kind, &refs, coords, tables[first].as_ref())
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&values) / total as f64)
}

fn settle_nodes(
    kind: LimitIc,
    data: Option<&LimitIcData>,
    coords: &LimitCoordinates,
    radii: &[f64],
    spec: &LimitSpec,
    xi: f64,
) -> Result<(C64, usize)> {
    let mut nodes = spec.nodes;
    let mut prev = tensor_mean(kind, data, coords, radii, nodes, xi)?;
    for _ in 0..spec.max_doublings {
        nodes *= 2;
        let cur = tensor_mean(kind, data, coords, radii, nodes, xi)?;
        if (cur - prev).norm() <= spec.tol * cur.norm().max(1.0) {
            return Ok((cur, nodes));
        }
        prev = cur;
        if nodes.pow(radii.len() as u32) > 1 << 20 {
            break;
        }
    }
    bail!(Accuracy, "limit quadrature did not settle by M={nodes}; last estimate {prev}")
}

/// `F_ic(x; p)`: nested-circle quadrature of `C_ic D_ic` with node doubling,
/// then doubling of the node cutoff until two cutoffs agree within `tol`.
pub fn limit_cdf(coords: &LimitCoordinates, kind: LimitIc, spec: &LimitSpec) -> Result<LimitResult> {
    let radii = spec.radii_for(coords.m())?;
    let data = match kind {
        LimitIc::Uniform => None,
        k => Some(ic_data(k)?),
    };
    let mut xi = spec.xi.unwrap_or_else(|| default_xi(coords));
    let (mut value, mut m_final) = settle_nodes(kind, data.as_ref(), coords, &radii, spec, xi)?;
    let mut settled = false;
    for _ in 0..spec.max_xi_doublings {
        let wider = tensor_mean(kind, data.as_ref(), coords, &radii, m_final, 2.0 * xi)?;
        let close = (wider - value).norm() <= spec.tol * wider.norm().max(1.0);
        xi *= 2.0;
        if close {
            value = wider;
            settled = true;
            break;
        }
        (value, m_final) = settle_nodes(kind, data.as_ref(), coords, &radii, spec, xi)?;
    }
    if !settled {
        bail!(Accuracy, "node cutoff did not settle by xi={xi}; last estimate {value}");
    }
    let slack = (10.0 * spec.tol).max(1e-9);
    if value.im.abs() > slack {
        bail!(Accuracy, "imaginary part {} exceeds tolerance", value.im);
    }
    if value.re < -slack || value.re > 1.0 + slack {
        return Err(Error::Accuracy(format!("limit value {} lies outside [0, 1]", value.re)));
    }
    Ok(LimitResult {
        value: value.re.clamp(0.0, 1.0),
        imag_residual: value.im.abs(),
        xi,
        m_final,
        radii,
        outside_verified_regime: coords.has_equal_times(),
    })
}
