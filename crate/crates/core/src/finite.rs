//! Finite-time multi-point distributions: `C_step`, the kernels `K1`,
//! `K2`, the initial-condition modification, and nested-circle quadrature.

use crate::bethe::{log_delta, solve_at, BetheRootSet};
use crate::error::{bail, Error, Result};
use crate::linalg::{det_i_minus_product, Matrix};
use crate::model::{lambda_of, InitialCondition, ModelParams, ObsPoint, ObservationSet, RandomIc};
use crate::quad::pairwise_sum;
use crate::symfun::{CharTable, SymFun};
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

/// One element of an interleaved root set: which circle and side it came
/// from, its position in that side's list, and its value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub circle: usize,
    pub side: Side,
    pub index: usize,
    pub w: C64,
}

/// The sets `S1 = L_1 u R_2 u L_3 ...` and `S2 = R_1 u L_2 u R_3 ...`,
/// ordered by circle, then side list order.
#[derive(Clone, Debug, PartialEq)]
pub struct Interleaved {
    pub s1: Vec<Node>,
    pub s2: Vec<Node>,
}

impl Interleaved {
    pub fn new(roots: &[&BetheRootSet]) -> Self {
        let sides: Vec<(&[C64], &[C64])> = roots.iter().map(|r| (&r.left[..], &r.right[..])).collect();
        Self::from_sides(&sides)
    }

    /// The same interleaving from `(left, right)` lists, one pair per circle.
    pub fn from_sides(sides: &[(&[C64], &[C64])]) -> Self {
        let mut s1 = vec![];
        let mut s2 = vec![];
        for (c, (l, r)) in sides.iter().enumerate() {
            let circle = c + 1;
            let left = l.iter().enumerate().map(|(index, &w)| Node { circle, side: Side::L, index, w });
            let right = r.iter().enumerate().map(|(index, &w)| Node { circle, side: Side::R, index, w });
            if circle % 2 == 1 {
                s1.extend(left);
                s2.extend(right);
            } else {
                s1.extend(right);
                s2.extend(left);
            }
        }
        Interleaved { s1, s2 }
    }
}

#[derive(Clone, Debug)]
pub struct KernelPair {
    pub sets: Interleaved,
    /// `|S1| x |S2|`
    pub k1: Matrix<C64>,
    /// `|S2| x |S1|`
    pub k2: Matrix<C64>,
}

fn sgn(i: usize) -> i64 {
    if i % 2 == 0 {
        1
    } else {
        -1
    }
}

fn check_roots(roots: &[&BetheRootSet], obs: &ObservationSet) -> Result<()> {
    if roots.len() != obs.m() {
        bail!(Parameter, "{} root sets for {} observation points", roots.len(), obs.m());
    }
    if roots.is_empty() {
        bail!(Parameter, "at least one observation point is required");
    }
    let p = roots[0].params;
    if roots.iter().any(|r| r.params != p) {
        bail!(Parameter, "root sets come from different (L, N)");
    }
    for k in 1..roots.len() {
        let (a, b) = (roots[k - 1].z.z_norm, roots[k].z.z_norm);
        if (a - b).norm() <= 1e-14 * a.norm() {
            bail!(Pole, "z_{k}^L = z_{}^L makes C_step singular", k + 1);
        }
    }
    Ok(())
}

/// `log E_l(z)` for `l >= 1`; `E_0 = 1`.
fn log_e(r: &BetheRootSet, obs: &ObservationSet, ell: usize) -> C64 {
    if ell == 0 {
        return C64::new(0.0, 0.0);
    }
    let p = obs.points()[ell - 1];
    r.log_e(p.k, p.t, p.a)
}

/// `log C_step(z)`, a sum of logarithms of the four bracketed products.
pub fn c_step_log(roots: &[&BetheRootSet], obs: &ObservationSet) -> Result<C64> {
    check_roots(roots, obs)?;
    let r0 = roots[0];
    let (l, n) = (r0.l() as f64, r0.n() as f64);
    let m = roots.len();
    let mut s = C64::new(0.0, 0.0);
    for ell in 1..=m {
        let r = roots[ell - 1];
        s += log_e(r, obs, ell) - log_e(r, obs, ell - 1);
        s += n * r.products.log_neg_left + (l - n) * r.products.log_right_plus_one - log_delta(&r.right, &r.left);
    }
    for ell in 2..=m {
        let (prev, cur) = (roots[ell - 2], roots[ell - 1]);
        let (zp, zc) = (prev.z.z_norm, cur.z.z_norm);
        s += zp.ln() - (zp - zc).ln();
        s += log_delta(&cur.right, &prev.left) - n * prev.products.log_neg_left - (l - n) * cur.products.log_right_plus_one;
    }
    Ok(s)
}

pub fn c_step(roots: &[&BetheRootSet], obs: &ObservationSet) -> Result<C64> {
    Ok(c_step_log(roots, obs)?.exp())
}

/// `log F_l(w)` divided by the constant `|F_l(-rho)|`; the constant drops
/// out of the determinant because it acts as a diagonal similarity.
fn log_f_gauged(p: Option<&ObsPoint>, w: C64, n: usize, rho: f64) -> C64 {
    match p {
        None => C64::new(0.0, 0.0),
        Some(p) => {
            let (e1, e2) = ((-p.k + n as i64 + 1) as f64, (-p.a + p.k - n as i64) as f64);
            let raw = e1 * w.ln() + e2 * (w + 1.0).ln() + p.t * w;
            let gauge = e1 * rho.ln() + e2 * (1.0 - rho).ln() - p.t * rho;
            raw - gauge
        }
    }
}

fn f_ell(obs: &ObservationSet, ell: usize, w: C64, n: usize, rho: f64) -> C64 {
    let pts = obs.points();
    let prev = if ell >= 2 { Some(&pts[ell - 2]) } else { None };
    let d = log_f_gauged(prev, w, n, rho) - log_f_gauged(Some(&pts[ell - 1]), w, n, rho);
    if w.re > -rho {
        d.exp()
    } else {
        (-d).exp()
    }
}

fn j_fn(w: C64, l: usize, rho: f64) -> C64 {
    w * (w + 1.0) / (l as f64 * (w + rho))
}

/// `H_{z_c}(w)` with `z_0 = z_{m+1} = 0`.
fn h_at(roots: &[&BetheRootSet], c: i64, w: C64) -> Result<C64> {
    if c < 1 || c as usize > roots.len() {
        Ok(C64::new(1.0, 0.0))
    } else {
        roots[c as usize - 1].h(w)
    }
}

/// `(z_{c'}/z_c)^L` expressed through normalized parameters.
fn zl_ratio(roots: &[&BetheRootSet], num: i64, den: usize) -> C64 {
    if num < 1 || num as usize > roots.len() {
        C64::new(0.0, 0.0)
    } else {
        roots[num as usize - 1].z.z_norm / roots[den - 1].z.z_norm
    }
}

/// Kernels of the step initial condition.
pub fn build_kernels_step(roots: &[&BetheRootSet], obs: &ObservationSet) -> Result<KernelPair> {
    check_roots(roots, obs)?;
    let sets = Interleaved::new(roots);
    let (l, n, rho) = (roots[0].l(), roots[0].n(), roots[0].rho());
    // row and column factors of K1 and K2
    let mut a1 = Vec::with_capacity(sets.s1.len());
    let mut b1 = Vec::with_capacity(sets.s1.len());
    for node in &sets.s1 {
        let i = node.circle;
        let w = node.w;
        let hi = h_at(roots, i as i64, w)?;
        a1.push(j_fn(w, l, rho) * f_ell(obs, i, w, n, rho) * hi * hi / h_at(roots, i as i64 - sgn(i), w)?);
        b1.push(1.0 / h_at(roots, i as i64 + sgn(i), w)?);
    }
    let mut a2 = Vec::with_capacity(sets.s2.len());
    let mut b2 = Vec::with_capacity(sets.s2.len());
    for node in &sets.s2 {
        let j = node.circle;
        let w = node.w;
        let hj = h_at(roots, j as i64, w)?;
        a2.push(j_fn(w, l, rho) * f_ell(obs, j, w, n, rho) * hj * hj / h_at(roots, j as i64 + sgn(j), w)?);
        b2.push(1.0 / h_at(roots, j as i64 - sgn(j), w)?);
    }
    let m = roots.len();
    let q1: Vec<C64> = (1..=m).map(|j| 1.0 - zl_ratio(roots, j as i64 - sgn(j), j)).collect();
    let q2: Vec<C64> = (1..=m).map(|j| 1.0 - zl_ratio(roots, j as i64 + sgn(j), j)).collect();
    let mut k1 = Matrix::zeros(sets.s1.len(), sets.s2.len());
    for (r, x) in sets.s1.iter().enumerate() {
        for (c, y) in sets.s2.iter().enumerate() {
            let (i, j) = (x.circle as i64, y.circle as i64);
            if j == i || j == i - sgn(x.circle) {
                let d = x.w - y.w;
                if d.norm() == 0.0 {
                    bail!(Domain, "S1 and S2 share the point {}", x.w);
                }
                k1[(r, c)] = a1[r] * b2[c] * q1[y.circle - 1] / d;
            }
        }
    }
    let mut k2 = Matrix::zeros(sets.s2.len(), sets.s1.len());
    for (r, y) in sets.s2.iter().enumerate() {
        for (c, x) in sets.s1.iter().enumerate() {
            let (j, i) = (y.circle as i64, x.circle as i64);
            if i == j || i == j + sgn(y.circle) {
                let d = y.w - x.w;
                if d.norm() == 0.0 {
                    bail!(Domain, "S1 and S2 share the point {}", x.w);
                }
                k2[(r, c)] = a2[r] * b1[c] * q2[x.circle - 1] / d;
            }
        }
    }
    Ok(KernelPair { sets, k1, k2 })
}

/// Multiply the `R_{z_1} x L_{z_1}` block of `K2` by `ch(v, u; z_1)`.
pub fn apply_y_modification(kp: &mut KernelPair, table: &CharTable) {
    for (r, y) in kp.sets.s2.iter().enumerate() {
        if y.circle != 1 || y.side != Side::R {
            continue;
        }
        for (c, x) in kp.sets.s1.iter().enumerate() {
            if x.circle == 1 && x.side == Side::L {
                kp.k2[(r, c)] *= table.values[(y.index, x.index)];
            }
        }
    }
}

pub fn fredholm_det(kp: &KernelPair) -> C64 {
    det_i_minus_product(&kp.k1, &kp.k2)
}

/// How the initial condition enters at `z_1`.
#[derive(Clone, Copy, Debug)]
pub enum Modifier<'a> {
    Step,
    Table(&'a CharTable),
}

/// `C_Y(z) D_Y(z)` from solved root sets.
pub fn integrand(roots: &[&BetheRootSet], obs: &ObservationSet, modifier: Modifier) -> Result<C64> {
    let c = c_step_log(roots, obs)?;
    let mut kp = build_kernels_step(roots, obs)?;
    let e = match modifier {
        Modifier::Step => C64::new(1.0, 0.0),
        Modifier::Table(t) => {
            apply_y_modification(&mut kp, t);
            t.energy
        }
    };
    Ok(e * c.exp() * fredholm_det(&kp))
}

/// The modification data for `Y` at `z_1`, or `None` for the step shape.
pub fn modifier_table(ic: &InitialCondition, roots: &BetheRootSet) -> Result<Option<CharTable>> {
    let lambda = lambda_of(&ic.y);
    if lambda.iter().all(|&x| x == 0) {
        return Ok(None);
    }
    Ok(Some(SymFun::g(&lambda)?.char_table(&roots.right, &roots.left)?))
}

/// `C_Y(z) D_Y(z)` at explicit normalized parameters.
pub fn integrand_at(ic: &InitialCondition, z_norm: &[C64], obs: &ObservationSet) -> Result<C64> {
    let p = ic.params();
    let sets: Vec<BetheRootSet> = z_norm.iter().map(|&z| solve_at(&p, z)).collect::<Result<_>>()?;
    let refs: Vec<&BetheRootSet> = sets.iter().collect();
    match modifier_table(ic, &sets[0])? {
        None => integrand(&refs, obs, Modifier::Step),
        Some(t) => integrand(&refs, obs, Modifier::Table(&t)),
    }
}

/// Quadrature contours in normalized units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContourSpec {
    /// Circle radii, outermost first; defaults to `0.9 * 0.75^(j-1)`.
    pub radii: Option<Vec<f64>>,
    /// Starting nodes per circle, a power of two no smaller than 8.
    pub nodes: usize,
    pub tol: f64,
    pub max_doublings: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { radii: None, nodes: 16, tol: 1e-8, max_doublings: 6 }
    }
}

impl ContourSpec {
    pub fn radii_for(&self, m: usize) -> Result<Vec<f64>> {
        let radii = match &self.radii {
            Some(r) => r.clone(),
            None => (0..m).map(|j| 0.9 * 0.75f64.powi(j as i32)).collect(),
        };
        if radii.len() != m {
            bail!(Parameter, "{} radii for {m} circles", radii.len());
        }
        if radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) || radii.windows(2).any(|p| p[1] >= p[0]) {
            bail!(Parameter, "radii {radii:?} must satisfy 0 < r_m < ... < r_1 < 1");
        }
        if self.nodes < 8 || !self.nodes.is_power_of_two() {
            bail!(Parameter, "nodes per circle must be a power of two >= 8, got {}", self.nodes);
        }
        if !(self.tol > 0.0) {
            bail!(Parameter, "tolerance must be positive");
        }
        Ok(radii)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbResult {
    pub probability: f64,
    pub imag_residual: f64,
    #[serde(rename = "M_final")]
    pub m_final: usize,
    pub radii: Vec<f64>,
    pub retries: usize,
}

/// Per-circle data shared by all tensor nodes that use it.
struct CircleData {
    roots: Vec<BetheRootSet>,
    tables: Vec<Option<CharTable>>,
}

/// Mean of `f` over the tensor grid of `nodes` equispaced points on each
/// circle, with `z_norm = r_c e^{i 2 pi (k + 1/2) / nodes}`.
fn tensor_mean<T, F>(params: &ModelParams, radii: &[f64], nodes: usize, table: &T, f: &F) -> Result<C64>
where
    T: Fn(&BetheRootSet) -> Result<Option<CharTable>> + Sync,
    F: Fn(&[&BetheRootSet], Modifier) -> Result<C64> + Sync,
{
    let m = radii.len();
    let mut circles = Vec::with_capacity(m);
    for (c, &r) in radii.iter().enumerate() {
        let roots: Vec<BetheRootSet> = (0..nodes)
            .into_par_iter()
            .map(|k| solve_at(params, C64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / nodes as f64)))
            .collect::<Result<_>>()?;
        let tables = if c == 0 { roots.par_iter().map(table).collect::<Result<Vec<_>>>()? } else { vec![] };
        circles.push(CircleData { roots, tables });
    }
    let total = nodes.pow(m as u32);
    let values: Vec<C64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = flat;
            let mut sets = Vec::with_capacity(m);
            let mut first = 0;
            for (c, circle) in circles.iter().enumerate() {
                let k = idx % nodes;
                idx /= nodes;
                if c == 0 {
                    first = k;
                }
                sets.push(&circle.roots[k]);
            }
            let modifier = match &circles[0].tables[first] {
                None => Modifier::Step,
                Some(t) => Modifier::Table(t),
            };
            f(&sets, modifier)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&values) / total as f64)
}

/// Quadrature with node doubling and pole-avoiding radius retries.
pub(crate) fn converge<T, F>(params: &ModelParams, m: usize, spec: &ContourSpec, table: T, f: F) -> Result<ProbResult>
where
    T: Fn(&BetheRootSet) -> Result<Option<CharTable>> + Sync,
    F: Fn(&[&BetheRootSet], Modifier) -> Result<C64> + Sync,
{
    let mut radii = spec.radii_for(m)?;
    let mut retries = 0;
    loop {
        match converge_at(params, &radii, spec, &table, &f) {
            Ok((value, m_final)) => return finish(value, m_final, radii, retries, spec.tol),
            Err(Error::Pole(_)) if retries < 5 => {
                retries += 1;
                let outer_room = if m > 1 { radii[1] } else { 0.0 };
                let up = radii[0] * 1.01;
                radii[0] = if up < 1.0 { up } else { (radii[0] * 0.99).max(outer_room * 1.001) };
            }
            Err(e) => return Err(e),
        }
    }
}

fn converge_at<T, F>(params: &ModelParams, radii: &[f64], spec: &ContourSpec, table: &T, f: &F) -> Result<(C64, usize)>
where
    T: Fn(&BetheRootSet) -> Result<Option<CharTable>> + Sync,
    F: Fn(&[&BetheRootSet], Modifier) -> Result<C64> + Sync,
{
    let mut nodes = spec.nodes;
    let mut prev = tensor_mean(params, radii, nodes, table, f)?;
    for _ in 0..spec.max_doublings {
        nodes *= 2;
        let cur = tensor_mean(params, radii, nodes, table, f)?;
        if (cur - prev).norm() <= spec.tol * cur.norm().max(1.0) {
            return Ok((cur, nodes));
        }
        prev = cur;
        if nodes.pow(radii.len() as u32) > 1 << 24 {
            break;
        }
    }
    let last = tensor_mean(params, radii, nodes, table, f);
    bail!(Accuracy, "quadrature did not settle: last two estimates {prev} and {:?} at M={nodes}", last.ok())
}

fn finish(value: C64, m_final: usize, radii: Vec<f64>, retries: usize, tol: f64) -> Result<ProbResult> {
    let slack = 10.0 * tol.max(1e-12);
    if value.im.abs() > slack.max(1e-9) {
        bail!(Accuracy, "imaginary part {} exceeds tolerance", value.im);
    }
    if value.re < -slack.max(1e-9) || value.re > 1.0 + slack.max(1e-9) {
        bail!(Accuracy, "probability estimate {} lies outside [0, 1]", value.re);
    }
    Ok(ProbResult { probability: value.re.clamp(0.0, 1.0), imag_residual: value.im.abs(), m_final, radii, retries })
}

/// `P_Y(x_{k_l}(t_l) >= a_l for all l)`.
pub fn multipoint_prob(ic: &InitialCondition, obs: &ObservationSet, spec: &ContourSpec) -> Result<ProbResult> {
    obs.require_positive_times()?;
    let params = ic.params();
    converge(&params, obs.m(), spec, |r| modifier_table(ic, r), |sets, md| integrand(sets, obs, md))
}

fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The same probability for the uniformly random initial condition.
pub fn multipoint_prob_uniform(params: &ModelParams, obs: &ObservationSet, spec: &ContourSpec) -> Result<ProbResult> {
    obs.require_positive_times()?;
    let (l, n) = (params.l(), params.n());
    let plus = obs.shift_k(1);
    // (-1)^(N+1) / z_1^L = -1 / (r0^L z_norm_1)
    let scale = -1.0 / (binomial(l as i64, n as i64) * params.r0().powi(l as i32));
    converge(
        params,
        obs.m(),
        spec,
        |_| Ok(None),
        |sets, _| {
            let d = integrand(sets, &plus, Modifier::Step)? - integrand(sets, obs, Modifier::Step)?;
            Ok(scale * d / sets[0].z.z_norm)
        },
    )
}

/// The probability for a partially uniform initial condition: `N1`
/// uniform particles left of the deterministic block `y` (ending at 0).
pub fn multipoint_prob_partial_uniform(
    l: usize,
    y: &[i64],
    n1: usize,
    obs: &ObservationSet,
    spec: &ContourSpec,
) -> Result<ProbResult> {
    obs.require_positive_times()?;
    let ric = RandomIc::partial_uniform(l, n1, y.to_vec())?;
    let params = ric.params();
    let f = SymFun::g_tilde(&lambda_of(y), params.n())?;
    let scale = 1.0 / binomial(y[0] + l as i64 - 1, n1 as i64);
    converge(
        &params,
        obs.m(),
        spec,
        |r| Ok(Some(f.char_table(&r.right, &r.left)?)),
        |sets, md| Ok(scale * integrand(sets, obs, md)?),
    )
}
