//! The symmetric functions `G_lambda` and `G~_lambda`, and the energy and
//! characteristic functions they induce on the right Bethe roots.

use crate::bethe::BetheRootSet;
use crate::error::{bail, Result};
use crate::linalg::{Lu, Matrix};
use crate::model::{lambda_of, InitialCondition};
use crate::poly;
use crate::scalar::{c64_to_dd, dd_to_c64, powi, DoubleDouble, Field};
use crate::C64;
use num_complex::Complex;
use std::f64::consts::PI;

const MIN_SEPARATION: f64 = 1e-10;
/// Pivot-ratio level above which determinants are redone in double-double.
pub const DD_THRESHOLD: f64 = 1e8;
const MIN_ENERGY: f64 = 1e-10;

type Cdd = Complex<DoubleDouble>;

/// A ratio `det[p_j(w_i)] / det[w_i^(N-j)]` whose columns are monomials
/// `p_j(w) = w^a_j (w+1)^b_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymFun {
    cols: Vec<(i64, i64)>,
}

fn check_weakly_decreasing(lambda: &[i64]) -> Result<()> {
    if lambda.is_empty() {
        bail!(Parameter, "lambda must be nonempty");
    }
    if lambda.windows(2).any(|p| p[0] < p[1]) {
        bail!(Parameter, "lambda={lambda:?} is not weakly decreasing");
    }
    Ok(())
}

impl SymFun {
    /// `G_lambda` in `N = lambda.len()` variables.
    pub fn g(lambda: &[i64]) -> Result<Self> {
        check_weakly_decreasing(lambda)?;
        let n = lambda.len() as i64;
        let cols = lambda.iter().enumerate().map(|(j, &l)| (n - 1 - j as i64, l)).collect();
        Ok(SymFun { cols })
    }

    /// `G~_lambda(.; N2)` in `n` variables, with `N2 = lambda.len()`.
    pub fn g_tilde(lambda: &[i64], n: usize) -> Result<Self> {
        check_weakly_decreasing(lambda)?;
        let n2 = lambda.len();
        if n2 > n {
            bail!(Parameter, "N2={n2} exceeds N={n}");
        }
        let ni = n as i64;
        let last = lambda[n2 - 1];
        let cols = (0..n)
            .map(|j| {
                let jj = j as i64 + 1;
                if j < n2 {
                    (ni - jj, lambda[j])
                } else {
                    (ni - jj - 1, last + 1)
                }
            })
            .collect();
        Ok(SymFun { cols })
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }

    /// True when some column carries a negative power of `w`.
    pub fn has_pole_at_zero(&self) -> bool {
        self.cols.iter().any(|c| c.0 < 0)
    }

    #[inline]
    fn column<E: Field>(&self, j: usize, w: E) -> E {
        let (a, b) = self.cols[j];
        powi(w, a) * powi(w + E::one(), b)
    }

    /// Straight determinant ratio in any field; exact over the rationals.
    pub fn eval_exact<E: Field>(&self, w: &[E]) -> E {
        let n = self.n();
        let num = Matrix::from_fn(n, n, |i, j| self.column(j, w[i])).det();
        let den = Matrix::from_fn(n, n, |i, j| powi(w[i], (n - 1 - j) as i64)).det();
        num / den
    }

    fn check_points(&self, w: &[C64]) -> Result<()> {
        if w.len() != self.n() {
            bail!(Parameter, "expected {} variables, got {}", self.n(), w.len());
        }
        for (i, a) in w.iter().enumerate() {
            if !a.is_finite() {
                bail!(Domain, "non-finite variable {a}");
            }
            if self.has_pole_at_zero() && a.norm() == 0.0 {
                bail!(Pole, "variable at 0 with a negative power of w");
            }
            if (a + 1.0).norm() == 0.0 && self.cols.iter().any(|c| c.1 < 0) {
                bail!(Pole, "variable at -1 with a negative power of w+1");
            }
            for b in &w[i + 1..] {
                if (a - b).norm() <= MIN_SEPARATION {
                    bail!(Conditioning, "variables {a} and {b} are closer than {MIN_SEPARATION:e}");
                }
            }
        }
        Ok(())
    }

    /// Column-equilibrated numerator matrix and its column scales.
    fn scaled_matrix(&self, w: &[C64]) -> (Matrix<C64>, Vec<f64>) {
        let n = self.n();
        let raw = Matrix::from_fn(n, n, |i, j| self.column(j, w[i]));
        let scales: Vec<f64> = (0..n)
            .map(|j| {
                let m = (0..n).map(|i| raw[(i, j)].norm()).fold(0.0, f64::max);
                if m > 0.0 && m.is_finite() {
                    m
                } else {
                    1.0
                }
            })
            .collect();
        (Matrix::from_fn(n, n, |i, j| raw[(i, j)] / scales[j]), scales)
    }

    fn scaled_matrix_dd(&self, w: &[C64], scales: &[f64]) -> Matrix<Cdd> {
        let n = self.n();
        Matrix::from_fn(n, n, |i, j| self.column(j, c64_to_dd(w[i])) / c64_to_dd(C64::new(scales[j], 0.0)))
    }

    /// `log det` of the numerator; `None` when it is exactly singular.
    fn log_numerator(&self, w: &[C64]) -> (Option<C64>, bool) {
        let (a, scales) = self.scaled_matrix(w);
        let lu = a.lu();
        let (diag, flip, dd) = if lu.pivot_ratio() > DD_THRESHOLD {
            let lu = self.scaled_matrix_dd(w, &scales).lu();
            if lu.is_singular() {
                return (None, true);
            }
            let (d, f) = lu.diagonal();
            (d.into_iter().map(dd_to_c64).collect::<Vec<_>>(), f, true)
        } else {
            if lu.is_singular() {
                return (None, false);
            }
            let (d, f) = lu.diagonal();
            (d, f, false)
        };
        if diag.iter().any(|d| d.norm() == 0.0) {
            return (None, dd);
        }
        let mut s: C64 = diag.iter().map(|d| d.ln()).sum::<C64>() + scales.iter().map(|x| x.ln()).sum::<f64>();
        if flip {
            s += C64::new(0.0, PI);
        }
        (Some(s), dd)
    }

    /// Value at the points `w`, via log-determinants with a double-double
    /// retry for badly scaled inputs.
    pub fn eval(&self, w: &[C64]) -> Result<C64> {
        self.check_points(w)?;
        match self.log_numerator(w).0 {
            None => Ok(C64::new(0.0, 0.0)),
            Some(num) => Ok((num - log_vandermonde(w)).exp()),
        }
    }

    /// All ratios `G(W u {u} \ {w_i}) / G(W)` at once, from one inverse.
    pub fn char_table(&self, w: &[C64], us: &[C64]) -> Result<CharTable> {
        self.check_points(w)?;
        let n = self.n();
        let (a, scales) = self.scaled_matrix(w);
        let lu = a.lu();
        let used_dd = lu.pivot_ratio() > DD_THRESHOLD;
        let inv = if used_dd {
            let lu: Lu<Cdd> = self.scaled_matrix_dd(w, &scales).lu();
            if lu.is_singular() {
                bail!(Pole, "the energy vanishes at these roots");
            }
            lu.inverse().map(dd_to_c64)
        } else {
            if lu.is_singular() {
                bail!(Pole, "the energy vanishes at these roots");
            }
            lu.inverse()
        };
        let energy = self.eval(w)?;
        if energy.norm() < MIN_ENERGY {
            bail!(Pole, "|energy| = {:e} is below {MIN_ENERGY:e}", energy.norm());
        }
        let mut values = Matrix::zeros(n, us.len());
        for (k, &u) in us.iter().enumerate() {
            if self.has_pole_at_zero() && u.norm() == 0.0 {
                bail!(Pole, "u = 0 with a negative power of w");
            }
            let pu: Vec<C64> = (0..n).map(|j| self.column(j, u) / scales[j]).collect();
            for i in 0..n {
                let num: C64 = (0..n).map(|j| pu[j] * inv[(j, i)]).sum();
                let mut vf = C64::new(1.0, 0.0);
                for b in 0..n {
                    if b != i {
                        vf *= (w[i] - w[b]) / (u - w[b]);
                    }
                }
                values[(i, k)] = num * vf;
            }
        }
        Ok(CharTable { energy, values, used_dd })
    }
}

/// `log prod_{i<j} (w_i - w_j)`.
pub fn log_vandermonde(w: &[C64]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            s += (w[i] - w[j]).ln();
        }
    }
    s
}

/// Characteristic-function values `ch(v_i, u_k)` for one root set.
#[derive(Clone, Debug)]
pub struct CharTable {
    pub energy: C64,
    /// Row `i` is the right root `v_i`, column `k` the `k`-th argument `u`.
    pub values: Matrix<C64>,
    pub used_dd: bool,
}

pub fn g_lambda(lambda: &[i64], w: &[C64]) -> Result<C64> {
    SymFun::g(lambda)?.eval(w)
}

pub fn g_tilde(lambda: &[i64], w: &[C64], n2: usize) -> Result<C64> {
    if lambda.len() != n2 {
        bail!(Parameter, "lambda has length {} but N2={n2}", lambda.len());
    }
    SymFun::g_tilde(lambda, w.len())?.eval(w)
}

fn check_match(ic: &InitialCondition, roots: &BetheRootSet) -> Result<()> {
    if ic.l != roots.l() || ic.n != roots.n() {
        bail!(Parameter, "initial condition (L={}, N={}) does not match the root set (L={}, N={})", ic.l, ic.n, roots.l(), roots.n());
    }
    Ok(())
}

/// Global energy `E_Y(z) = G_lambda(Y)(R_z)`.
pub fn energy(ic: &InitialCondition, roots: &BetheRootSet) -> Result<C64> {
    check_match(ic, roots)?;
    g_lambda(&lambda_of(&ic.y), &roots.right)
}

fn right_index(roots: &BetheRootSet, v: C64) -> Result<usize> {
    let (i, d) = roots
        .right
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (r - v).norm()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if d > 1e-12 * (1.0 + v.norm()) {
        bail!(Domain, "{v} is not a right Bethe root of this set");
    }
    Ok(i)
}

/// `ch_Y(v, u; z)` straight from its definition as a ratio of two energies.
pub fn char_fn(ic: &InitialCondition, roots: &BetheRootSet, v: C64, u: C64) -> Result<C64> {
    check_match(ic, roots)?;
    let i = right_index(roots, v)?;
    let f = SymFun::g(&lambda_of(&ic.y))?;
    let e = f.eval(&roots.right)?;
    if e.norm() < MIN_ENERGY {
        bail!(Pole, "|energy| = {:e} is below {MIN_ENERGY:e}", e.norm());
    }
    let mut w = roots.right.clone();
    w[i] = u;
    Ok(f.eval(&w)? / e)
}

/// The full table `ch_Y(v_i, u_k)` over the right roots of `roots` and
/// arbitrary arguments `us`.
pub fn char_table(ic: &InitialCondition, roots: &BetheRootSet, us: &[C64]) -> Result<CharTable> {
    check_match(ic, roots)?;
    SymFun::g(&lambda_of(&ic.y))?.char_table(&roots.right, us)
}

/// `g(w, w') = (w(w+1)^(d-1) - w'(w'+1)^(d-1)) / (w - w')`, expanded so
/// that it is exact on the diagonal.
pub fn g_fn(w: C64, w2: C64, d: usize) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    let mut binom = 1.0;
    for k in 0..d {
        // w^(k+1) - w'^(k+1) over w - w'
        let mut h = C64::new(0.0, 0.0);
        let mut wp = C64::new(1.0, 0.0);
        for m in 0..=k {
            h += wp * w2.powi((k - m) as i32);
            wp *= w;
        }
        total += binom * h;
        binom = binom * (d - 1 - k) as f64 / (k + 1) as f64;
    }
    total
}

/// The `d-1` roots in `w` of `g(w, v)`.
pub fn u_set(v: C64, d: usize) -> Result<Vec<C64>> {
    if d < 2 {
        bail!(Parameter, "d must be at least 2");
    }
    let binom: Vec<f64> = (0..d)
        .scan(1.0, |b, k| {
            let cur = *b;
            *b = *b * (d - 1 - k) as f64 / (k + 1) as f64;
            Some(cur)
        })
        .collect();
    // coefficient of w^m is sum_{k>=m} C(d-1,k) v^(k-m)
    let coeffs: Vec<C64> = (0..d).map(|m| (m..d).map(|k| binom[k] * v.powi((k - m) as i32)).sum()).collect();
    let mut roots = poly::aberth_roots(&coeffs, 1e-15, 500)?;
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = poly::horner(&coeffs, *r);
            if dp.norm() == 0.0 {
                break;
            }
            *r -= p / dp;
        }
    }
    if roots.len() != d - 1 {
        bail!(Numerical, "found {} roots of g(., v), expected {}", roots.len(), d - 1);
    }
    Ok(roots)
}

/// Square-root product form of the energy shared by flat and step-flat data.
fn sqrt_energy(roots: &BetheRootSet, d: usize, us: &[C64]) -> Result<C64> {
    let n = roots.n() as f64;
    let df = d as f64;
    let mut s = C64::new(0.0, 0.0);
    let principal = |x: C64| -> Result<C64> {
        if x.im == 0.0 && x.re <= 0.0 {
            bail!(Domain, "square root argument {x} lies on the branch cut");
        }
        Ok(x.ln())
    };
    for &v in &roots.right {
        s += (df - (df - 1.0) * n) * principal(v + 1.0)? - principal(df * v + 1.0)?;
        for &u in us {
            s += principal(v - u)?;
        }
    }
    for &u in us {
        s -= n * principal(-u)?;
    }
    Ok((0.5 * s).exp())
}

/// Energy of the flat condition with spacing `d` (requires `L = dN`).
pub fn energy_flat(roots: &BetheRootSet, d: usize) -> Result<C64> {
    if roots.l() != d * roots.n() {
        bail!(Parameter, "flat energy needs L = dN, got L={}, N={}, d={d}", roots.l(), roots.n());
    }
    sqrt_energy(roots, d, &roots.left)
}

/// The set `U_z`, the union of `U(v)` over the right roots.
pub fn u_z(roots: &BetheRootSet, d: usize) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity((d - 1) * roots.n());
    for &v in &roots.right {
        out.extend(u_set(v, d)?);
    }
    Ok(out)
}

/// Energy of the step-flat condition (requires `L = dN + Ls`).
pub fn energy_stepflat(roots: &BetheRootSet, d: usize, ls: usize) -> Result<C64> {
    if roots.l() != d * roots.n() + ls {
        bail!(Parameter, "step-flat energy needs L = dN + Ls, got L={}, N={}, d={d}, Ls={ls}", roots.l(), roots.n());
    }
    let us = u_z(roots, d)?;
    sqrt_energy(roots, d, &us)
}

/// Closed form of the flat characteristic function.
pub fn ch_flat(roots: &BetheRootSet, d: usize, v: C64, u: C64) -> Result<C64> {
    if roots.l() != d * roots.n() {
        bail!(Parameter, "flat characteristic function needs L = dN");
    }
    let i = right_index(roots, v)?;
    let p = |w: C64| w * (w + 1.0).powi(d as i32 - 1);
    let pu = p(u);
    let partner = roots
        .right
        .iter()
        .enumerate()
        .map(|(k, &r)| (k, (p(r) - pu).norm()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
        .0;
    if partner != i {
        return Ok(C64::new(0.0, 0.0));
    }
    let n = roots.n() as i32;
    let num = roots.q_right_prime(v) * u.powi(n) * (u + 1.0).powi(d as i32 - 1) * (u - v);
    let den = roots.q_right(u) * v.powi(n) * (v + 1.0).powi(d as i32 - 1);
    Ok(num / den)
}

/// The flat characteristic function rewritten through `q_L(v)`; equal to
/// [`ch_flat`] on matched pairs.
pub fn ch_flat_via_left(roots: &BetheRootSet, d: usize, v: C64, u: C64) -> C64 {
    let (l, n) = (roots.l() as i32, roots.n() as i32);
    let rho = roots.rho();
    (v + 1.0).powi(l - n) * u.powi(n) / (roots.q_left(v) * roots.q_right(u))
        * ((u + 1.0) / (v + 1.0)).powi(d as i32 - 1)
        * (l as f64 * (v + rho) / (v * (v + 1.0)))
        * (u - v)
}

/// Step-flat characteristic function through products of `g`.
pub fn ch_stepflat(roots: &BetheRootSet, d: usize, v: C64, u: C64) -> Result<C64> {
    right_index(roots, v)?;
    let e = ((d - 1) * (roots.n() - 1)) as i32;
    let mut out = (v + 1.0).powi(e) * g_fn(v, v, d) / ((u + 1.0).powi(e) * g_fn(u, v, d));
    for &w in &roots.right {
        out *= g_fn(u, w, d) / g_fn(v, w, d);
    }
    Ok(out)
}
