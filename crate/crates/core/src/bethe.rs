//! Bethe roots of `q_z(w) = w^N (w+1)^(L-N) - z^L` and root-set products.

use crate::error::{bail, Result};
use crate::model::ModelParams;
use crate::C64;
use std::f64::consts::PI;

/// Largest period accepted by the double-precision solver.
pub const MAX_L: usize = 512;

/// A spectral parameter known through its normalized value
/// `z^L = (-1)^N r0^L z_norm`; only `z^L` enters any formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaledZ {
    pub z_norm: C64,
    pub z_phys: C64,
    /// `z^L`, computed directly from `z_norm`.
    pub zl: C64,
}

fn sign_n(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn rescale_z(z_norm: C64, params: &ModelParams) -> Result<RescaledZ> {
    if !(z_norm.norm() < 1.0) {
        bail!(Regime, "|z|>=1 (|z_norm| = {})", z_norm.norm());
    }
    let (l, n) = (params.l(), params.n());
    let s = sign_n(n);
    let zl = z_norm * s * params.r0().powi(l as i32);
    let z_phys = if z_norm == C64::new(0.0, 0.0) {
        C64::new(0.0, 0.0)
    } else {
        let odd = if n % 2 == 1 { PI } else { 0.0 };
        params.r0() * ((z_norm.ln() + C64::new(0.0, odd)) / l as f64).exp()
    };
    Ok(RescaledZ { z_norm, z_phys, zl })
}

impl RescaledZ {
    /// From the physical spectral parameter `z` with `|z| < r0`.
    pub fn from_phys(z: C64, params: &ModelParams) -> Result<Self> {
        let zl = z.powi(params.l() as i32);
        let z_norm = zl * sign_n(params.n()) / params.r0().powi(params.l() as i32);
        if !(z_norm.norm() < 1.0) {
            bail!(Regime, "|z|>=r0 (|z|/r0 = {})", z.norm() / params.r0());
        }
        Ok(RescaledZ { z_norm, z_phys: z, zl })
    }
}

/// Logarithmic sums over a root set, fixed at the time it is solved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetheProducts {
    /// sum over left roots of Log(-u)
    pub log_neg_left: C64,
    /// sum over right roots of Log(v+1)
    pub log_right_plus_one: C64,
    /// sum over right roots of v
    pub sum_right: C64,
    /// sum over right roots of Log(v)
    pub log_right: C64,
}

/// The `L` roots of `q_z`, split at `Re w = -rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetheRootSet {
    pub z: RescaledZ,
    pub left: Vec<C64>,
    pub right: Vec<C64>,
    /// Largest relative residual `|q_z(w)| / |z^L|` over all roots.
    pub max_residual: f64,
    pub products: BetheProducts,
    pub params: ModelParams,
}

#[inline]
fn log_g(w: C64, l: usize, n: usize) -> C64 {
    n as f64 * w.ln() + (l - n) as f64 * (w + 1.0).ln()
}

/// Relative residual `|q_z(w)| / |z^L|`, computed without forming the
/// possibly tiny `z^L` and `w^N (w+1)^(L-N)` explicitly.
#[inline]
fn residual(w: C64, log_zl: C64, l: usize, n: usize) -> f64 {
    ((log_g(w, l, n) - log_zl).exp() - 1.0).norm()
}

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// One cluster of roots, written as solutions of `x (1 + sigma x)^kappa = e^T`
/// with principal powers: right roots are `x = v` with `sigma = 1`, left roots
/// are `x = u + 1` with `sigma = -1`.
#[derive(Clone, Copy)]
struct Branch {
    kappa: f64,
    sigma: f64,
}

impl Branch {
    #[inline]
    fn f(&self, x: C64) -> C64 {
        x.ln() + self.kappa * (1.0 + self.sigma * x).ln()
    }

    #[inline]
    fn df(&self, x: C64) -> C64 {
        1.0 / x + self.kappa * self.sigma / (1.0 + self.sigma * x)
    }

    #[inline]
    fn newton(&self, x: C64, target: C64) -> C64 {
        (1.0 - (target - self.f(x)).exp()) / self.df(x)
    }

    fn polish(&self, x: &mut C64, target: C64, iters: usize, tol: f64) -> bool {
        for _ in 0..iters {
            let step = self.newton(*x, target);
            if !step.is_finite() {
                return false;
            }
            *x -= step;
            if step.norm() <= tol * x.norm() {
                return true;
            }
        }
        false
    }

    /// Track the root from a tiny target up to `target` along a ray.
    fn solve(&self, target: C64) -> Option<C64> {
        let start = target.re.min((0.01 / (1.0 + self.kappa)).ln());
        let mut cur = C64::new(start, target.im);
        let mut x = cur.exp();
        if !self.polish(&mut x, cur, 50, 1e-14) {
            return None;
        }
        let mut h: f64 = 0.5;
        while cur.re < target.re {
            let dt = h.min(target.re - cur.re);
            let next = if dt == target.re - cur.re { target } else { C64::new(cur.re + dt, target.im) };
            let pred = x + dt / self.df(x);
            let mut y = pred;
            let ok = self.polish(&mut y, next, 6, 1e-12) && (y - pred).norm() <= 0.25 * (pred - x).norm() + 1e-14 * x.norm();
            if ok {
                x = y;
                cur = next;
                h *= 1.5;
            } else {
                h *= 0.5;
                if h < 1e-12 {
                    return None;
                }
            }
        }
        self.polish(&mut x, target, 4, 1e-16);
        Some(x)
    }
}

/// `log z^L` taken straight from the normalized parameter, so that large
/// `L` never underflows.
fn log_zl_of(z: &RescaledZ, params: &ModelParams) -> C64 {
    let odd = if params.n() % 2 == 1 { PI } else { 0.0 };
    z.z_norm.ln() + C64::new(params.l() as f64 * params.r0().ln(), odd)
}

pub fn solve_bethe_roots(params: &ModelParams, z: &RescaledZ) -> Result<BetheRootSet> {
    let (l, n, rho) = (params.l(), params.n(), params.rho());
    if l > MAX_L {
        bail!(Parameter, "L={l} exceeds the supported maximum {MAX_L}");
    }
    if !(z.z_norm.norm() < 1.0) {
        bail!(Regime, "|z|>=1 (|z_norm| = {})", z.z_norm.norm());
    }
    if z.z_norm.norm() == 0.0 {
        bail!(Regime, "z=0 has no two-component root structure");
    }
    let log_zl = log_zl_of(z, params);
    let m = l - n;
    let right_branch = Branch { kappa: m as f64 / n as f64, sigma: 1.0 };
    let left_branch = Branch { kappa: n as f64 / m as f64, sigma: -1.0 };
    let mut w = Vec::with_capacity(l);
    for j in 0..n {
        let t = (log_zl + C64::new(0.0, 2.0 * PI * j as f64)) / n as f64;
        let t = C64::new(t.re, wrap_angle(t.im));
        match right_branch.solve(t) {
            Some(v) => w.push(v),
            None => bail!(Numerical, "root tracking failed (right, j={j}, L={l}, N={n})"),
        }
    }
    for j in 0..m {
        let t = (log_zl + C64::new(0.0, PI * n as f64 + 2.0 * PI * j as f64)) / m as f64;
        let t = C64::new(t.re, wrap_angle(t.im));
        match left_branch.solve(t) {
            Some(e) => w.push(e - 1.0),
            None => bail!(Numerical, "root tracking failed (left, j={j}, L={l}, N={n})"),
        }
    }
    let mut max_residual: f64 = 0.0;
    let mut max_backward: f64 = 0.0;
    for &wk in &w {
        let r = residual(wk, log_zl, l, n);
        // a root stored to full precision still leaves this much residual
        let floor = (l as f64 * wk + n as f64).norm() / (wk + 1.0).norm();
        max_residual = max_residual.max(r);
        max_backward = max_backward.max(r / floor.max(1.0));
    }
    let mut left = vec![];
    let mut right = vec![];
    for &wk in &w {
        let gap = wk.re + rho;
        if gap.abs() < 1e-12 {
            bail!(Numerical, "root {wk} sits on the separating line Re w = -rho");
        }
        if gap < 0.0 {
            left.push(wk);
        } else {
            right.push(wk);
        }
    }
    if left.len() != l - n || right.len() != n {
        bail!(
            Numerical,
            "partition mismatch: |L|={}, |R|={} (expected {}, {}), z_norm={}",
            left.len(),
            right.len(),
            l - n,
            n,
            z.z_norm
        );
    }
    let scale = |x: C64| x.norm().min((x + 1.0).norm());
    let mut min_sep = f64::INFINITY;
    for i in 0..l {
        for j in i + 1..l {
            min_sep = min_sep.min((w[i] - w[j]).norm() / scale(w[i]).max(scale(w[j])));
        }
    }
    if min_sep < 1e-8 {
        bail!(Numerical, "two root approximations coincided (separation {min_sep:e})");
    }
    if max_backward > 1e-12 {
        bail!(Numerical, "residual {max_residual:e} above tolerance");
    }
    let by_angle = |a: &C64, b: &C64| a.arg().partial_cmp(&b.arg()).unwrap();
    left.sort_by(|a, b| by_angle(&(a + 1.0), &(b + 1.0)));
    right.sort_by(by_angle);
    let products = BetheProducts {
        log_neg_left: left.iter().map(|u| (-u).ln()).sum(),
        log_right_plus_one: right.iter().map(|v| (v + 1.0).ln()).sum(),
        sum_right: right.iter().sum(),
        log_right: right.iter().map(|v| v.ln()).sum(),
    };
    Ok(BetheRootSet { z: *z, left, right, max_residual, products, params: *params })
}

/// Convenience wrapper taking the normalized spectral parameter.
pub fn solve_at(params: &ModelParams, z_norm: C64) -> Result<BetheRootSet> {
    solve_bethe_roots(params, &rescale_z(z_norm, params)?)
}

/// `sum_{v in R} sum_{u in L'} Log(v - u)`, the log of `Delta(R; L')`.
pub fn log_delta(r: &[C64], l: &[C64]) -> C64 {
    r.iter().flat_map(|v| l.iter().map(move |u| (v - u).ln())).sum()
}

impl BetheRootSet {
    pub fn l(&self) -> usize {
        self.params.l()
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn rho(&self) -> f64 {
        self.params.rho()
    }

    pub fn all_roots(&self) -> impl Iterator<Item = &C64> {
        self.left.iter().chain(self.right.iter())
    }

    /// Relative residual `|q_z(w)| / |z^L|` of one candidate root.
    pub fn residual_of(&self, w: C64) -> f64 {
        residual(w, self.z.zl.ln(), self.l(), self.n())
    }

    pub fn q(&self, w: C64) -> C64 {
        w.powi(self.n() as i32) * (w + 1.0).powi((self.l() - self.n()) as i32) - self.z.zl
    }

    pub fn q_left(&self, w: C64) -> C64 {
        self.left.iter().map(|u| w - u).product()
    }

    pub fn q_right(&self, w: C64) -> C64 {
        self.right.iter().map(|v| w - v).product()
    }

    /// Derivative of `q_right` at one of its own roots.
    pub fn q_right_prime(&self, v: C64) -> C64 {
        self.right.iter().filter(|&&x| x != v).map(|x| v - x).product()
    }

    /// `H_z(w)`, assembled from logarithms of linear factors.
    pub fn h(&self, w: C64) -> Result<C64> {
        let gap = w.re + self.rho();
        if gap.abs() < 1e-14 {
            bail!(Domain, "H_z is undefined on Re w = -rho (w = {w})");
        }
        let s: C64 = if gap > 0.0 {
            let d = w + 1.0;
            self.left.iter().map(|u| ((w - u) / d).ln()).sum()
        } else {
            self.right.iter().map(|v| ((w - v) / w).ln()).sum()
        };
        Ok(s.exp())
    }

    /// `log E_l(z)` for thresholds `(k, t, a)`.
    pub fn log_e(&self, k: i64, t: f64, a: i64) -> C64 {
        let n = self.n() as i64;
        let p = &self.products;
        (k - n - 1) as f64 * p.log_neg_left + (-a + k - n) as f64 * p.log_right_plus_one + t * p.sum_right
    }

    /// Relative defect of `prod (-u)^N = prod (v+1)^(L-N)`.
    pub fn product_identity_error(&self) -> f64 {
        let n = self.n() as f64;
        let m = (self.l() - self.n()) as f64;
        let d = n * self.products.log_neg_left - m * self.products.log_right_plus_one;
        (d.exp() - 1.0).norm()
    }
}

/// `H_z(w)` with the convention `H_0 = 1`.
pub fn h_or_one(roots: Option<&BetheRootSet>, w: C64) -> Result<C64> {
    match roots {
        Some(r) => r.h(w),
        None => Ok(C64::new(1.0, 0.0)),
    }
}
