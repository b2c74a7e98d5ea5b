//! The Toeplitz-like determinant: an independent route to the same
//! multi-point probabilities, and a checker for the general identity that
//! turns such determinants into Fredholm determinants.

use crate::bethe::{solve_at, BetheRootSet};
use crate::error::{bail, Result};
use crate::finite::{converge, ContourSpec, ProbResult};
use crate::linalg::{det_i_minus_product, Matrix};
use crate::model::{InitialCondition, ObsPoint, ObservationSet};
use crate::quad::pairwise_sum;
use crate::scalar::{powi, Field};
use crate::C64;
use rand::Rng;
use serde::Serialize;

/// Largest number of elementary terms a chained sum may touch.
pub const MAX_TERMS: usize = 10_000_000;
/// Smallest accepted `|det[p_i(v_j)] det[q_i(v_j)]|`.
pub const MIN_DET: f64 = 1e-10;

/// Discrete data for the identity `det T = det M det(I - K1 K2)`.
///
/// Functions on the finite sets are given by their values: `p[i][x]` is
/// `p_{i+1}` at `s[0][x]`, `q[j][x]` is `q_{j+1}` at `s[m-1][x]` and
/// `h[l][x]` is `h_{l+1}` at `s[l][x]`. `r[l]` lists the positions of
/// `R_{l+1}` inside `s[l]`.
#[derive(Clone, Debug)]
pub struct GenericIdentityInstance<E> {
    pub s: Vec<Vec<E>>,
    pub r: Vec<Vec<usize>>,
    pub p: Vec<Vec<E>>,
    pub q: Vec<Vec<E>>,
    pub h: Vec<Vec<E>>,
}

impl<E: Copy> GenericIdentityInstance<E> {
    /// The same instance over another scalar type.
    pub fn map<F>(&self, f: impl Fn(E) -> F + Copy) -> GenericIdentityInstance<F> {
        let conv = |v: &Vec<Vec<E>>| v.iter().map(|x| x.iter().map(|&e| f(e)).collect()).collect();
        GenericIdentityInstance { s: conv(&self.s), r: self.r.clone(), p: conv(&self.p), q: conv(&self.q), h: conv(&self.h) }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityReport<E> {
    pub lhs: E,
    pub rhs: E,
    pub rel_err: f64,
    /// `det M` by direct summation and by its product formula; `rhs` uses
    /// the latter.
    pub det_m: E,
    pub det_m_closed: E,
}

fn sign<E: Field>(odd: bool) -> E {
    if odd {
        -E::one()
    } else {
        E::one()
    }
}

/// `sum over w_1..w_m of p_i(w_1) q_j(w_m) prod h_l(w_l) / prod (w_l - w_{l-1})`,
/// with the m-fold sum evaluated one circle at a time.
pub fn chained_sum<E: Field>(s: &[&[E]], p: &[Vec<E>], q: &[Vec<E>], h: &[&[E]]) -> Result<Matrix<E>> {
    let m = s.len();
    let n = p.len();
    let terms: usize = s.windows(2).map(|w| w[0].len() * w[1].len()).sum::<usize>() * n + s[m - 1].len() * n * n;
    if terms > MAX_TERMS {
        bail!(Size, "chained sum needs {terms} terms");
    }
    let mut acc: Vec<Vec<E>> = p.iter().map(|pi| pi.iter().zip(h[0]).map(|(&a, &b)| a * b).collect()).collect();
    for l in 1..m {
        let mut next = vec![vec![E::zero(); s[l].len()]; n];
        for (y, &w) in s[l].iter().enumerate() {
            let mut col = Vec::with_capacity(s[l - 1].len());
            for &w_prev in s[l - 1] {
                let d = w - w_prev;
                if d.is_zero() {
                    bail!(Domain, "consecutive sets share the point {w:?}");
                }
                col.push(h[l][y] / d);
            }
            for i in 0..n {
                let parts: Vec<E> = acc[i].iter().zip(&col).map(|(&a, &b)| a * b).collect();
                next[i][y] = pairwise_sum(&parts);
            }
        }
        acc = next;
    }
    Ok(Matrix::from_fn(n, n, |i, j| {
        let parts: Vec<E> = acc[i].iter().zip(&q[j]).map(|(&a, &b)| a * b).collect();
        pairwise_sum(&parts)
    }))
}

fn vandermonde<E: Field>(v: &[E]) -> E {
    let mut d = E::one();
    for j in 0..v.len() {
        for i in 0..j {
            d = d * (v[j] - v[i]);
        }
    }
    d
}

/// `prod_{v in R} (w - v)`, identically one for an out-of-range circle.
fn r_poly<E: Field>(r: Option<&[E]>, w: E) -> E {
    r.map_or(E::one(), |r| r.iter().fold(E::one(), |acc, &v| acc * (w - v)))
}

fn r_prime<E: Field>(r: &[E], v: usize) -> E {
    r.iter().enumerate().filter(|&(b, _)| b != v).fold(E::one(), |acc, (_, &x)| acc * (r[v] - x))
}

/// `G(R u {u} \ {v}) / G(R)` for every `(v, u)` pair, by Cramer's rule on
/// the value matrix `[f_i(v_j)]`.
fn replacement_ratios<E: Field>(vals_r: &Matrix<E>, vals_l: &[Vec<E>], r: &[E], l: &[E]) -> Result<Matrix<E>> {
    let n = r.len();
    let lu = vals_r.lu();
    if lu.is_singular() {
        bail!(Precondition, "det[f_i(v_j)] vanishes on R");
    }
    let mut out = Matrix::zeros(n, l.len());
    for (c, &u) in l.iter().enumerate() {
        let col: Vec<E> = (0..n).map(|i| vals_l[i][c]).collect();
        let x = lu.solve(&col);
        for v in 0..n {
            let mut vd = E::one();
            for (b, &w) in r.iter().enumerate() {
                if b != v {
                    vd = vd * (r[v] - w) / (u - w);
                }
            }
            out[(v, c)] = x[v] * vd;
        }
    }
    Ok(out)
}

/// Which block `B_k` a point belongs to, as a row or as a column.
fn row_block(circle: usize, right: bool) -> usize {
    if right {
        circle - 1
    } else {
        circle
    }
}

fn col_block(circle: usize, right: bool) -> usize {
    if right {
        circle
    } else {
        circle - 1
    }
}

#[derive(Clone, Copy)]
struct Pt<E> {
    circle: usize,
    right: bool,
    pos: usize,
    w: E,
}

/// Both sides of the identity together with the two forms of `det M`.
pub fn generic_identity_check<E: Field>(inst: &GenericIdentityInstance<E>) -> Result<IdentityReport<E>> {
    let m = inst.s.len();
    if m == 0 || inst.r.len() != m || inst.h.len() != m {
        bail!(Precondition, "instance needs m >= 1 sets with matching R and h");
    }
    let n = inst.p.len();
    if n == 0 || inst.q.len() != n || inst.r.iter().any(|r| r.len() != n) {
        bail!(Precondition, "every R_i must have N = {n} points and P, Q must have N functions");
    }
    for l in 0..m {
        if inst.h[l].len() != inst.s[l].len() || inst.r[l].iter().any(|&x| x >= inst.s[l].len()) {
            bail!(Precondition, "h_{} or R_{} does not fit S_{}", l + 1, l + 1, l + 1);
        }
        if inst.r[l].iter().any(|&x| inst.h[l][x].is_zero()) {
            bail!(Precondition, "h_{} vanishes on R_{}", l + 1, l + 1);
        }
    }
    if inst.p.iter().any(|f| f.len() != inst.s[0].len()) || inst.q.iter().any(|f| f.len() != inst.s[m - 1].len()) {
        bail!(Precondition, "P lives on S_1 and Q on S_m");
    }
    for l in 1..m {
        if inst.s[l].iter().any(|a| inst.s[l - 1].contains(a)) {
            bail!(Precondition, "S_{} and S_{} intersect", l, l + 1);
        }
    }
    let p_r = Matrix::from_fn(n, n, |i, j| inst.p[i][inst.r[0][j]]);
    let q_r = Matrix::from_fn(n, n, |i, j| inst.q[i][inst.r[m - 1][j]]);
    let (det_p, det_q) = (p_r.det(), q_r.det());
    if (det_p * det_q).magnitude() <= MIN_DET {
        bail!(Precondition, "det[p_i(v_j)] det[q_i(v_j)] = {} is too close to zero", (det_p * det_q).magnitude());
    }
    let in_r: Vec<Vec<bool>> = (0..m)
        .map(|l| {
            let mut f = vec![false; inst.s[l].len()];
            inst.r[l].iter().for_each(|&x| f[x] = true);
            f
        })
        .collect();
    let rs: Vec<Vec<E>> = (0..m).map(|l| inst.r[l].iter().map(|&x| inst.s[l][x]).collect()).collect();
    let ls: Vec<Vec<usize>> = (0..m).map(|l| (0..inst.s[l].len()).filter(|&x| !in_r[l][x]).collect()).collect();

    let s_refs: Vec<&[E]> = inst.s.iter().map(|v| v.as_slice()).collect();
    let h_refs: Vec<&[E]> = inst.h.iter().map(|v| v.as_slice()).collect();
    let t = chained_sum(&s_refs, &inst.p, &inst.q, &h_refs)?;
    let pick = |f: &[Vec<E>], l: usize| -> Vec<Vec<E>> { f.iter().map(|g| inst.r[l].iter().map(|&x| g[x]).collect()).collect() };
    let hr: Vec<Vec<E>> = (0..m).map(|l| inst.r[l].iter().map(|&x| inst.h[l][x]).collect()).collect();
    let r_refs: Vec<&[E]> = rs.iter().map(|v| v.as_slice()).collect();
    let hr_refs: Vec<&[E]> = hr.iter().map(|v| v.as_slice()).collect();
    let m_mat = chained_sum(&r_refs, &pick(&inst.p, 0), &pick(&inst.q, m - 1), &hr_refs)?;

    // closed form of det M
    let mut closed = sign::<E>(((m - 1) * n * (n - 1) / 2) % 2 == 1) * det_p / vandermonde(&rs[0]) * det_q
        / vandermonde(&rs[m - 1]);
    for l in 0..m {
        let v = vandermonde(&rs[l]);
        closed = closed * v * v * hr[l].iter().fold(E::one(), |a, &b| a * b);
        if l >= 1 {
            for &a in &rs[l] {
                for &b in &rs[l - 1] {
                    closed = closed / (a - b);
                }
            }
        }
    }

    let lvals = |f: &[Vec<E>], l: usize| -> Vec<Vec<E>> { f.iter().map(|g| ls[l].iter().map(|&x| g[x]).collect()).collect() };
    let l_pts = |l: usize| -> Vec<E> { ls[l].iter().map(|&x| inst.s[l][x]).collect() };
    let ratio_p = replacement_ratios(&p_r, &lvals(&inst.p, 0), &rs[0], &l_pts(0))?;
    let ratio_q = replacement_ratios(&q_r, &lvals(&inst.q, m - 1), &rs[m - 1], &l_pts(m - 1))?;

    let mut s1 = vec![];
    let mut s2 = vec![];
    for l in 0..m {
        let circle = l + 1;
        let lefts = ls[l].iter().enumerate().map(|(pos, &x)| Pt { circle, right: false, pos, w: inst.s[l][x] });
        let rights = (0..n).map(|pos| Pt { circle, right: true, pos, w: rs[l][pos] });
        if circle % 2 == 1 {
            s1.extend(lefts);
            s2.extend(rights);
        } else {
            s1.extend(rights);
            s2.extend(lefts);
        }
    }
    let r_of = |c: usize| if c >= 1 && c <= m { Some(rs[c - 1].as_slice()) } else { None };
    let h_of = |p: &Pt<E>| if p.right { hr[p.circle - 1][p.pos] } else { inst.h[p.circle - 1][ls[p.circle - 1][p.pos]] };
    let entry = |x: &Pt<E>, y: &Pt<E>| -> E {
        let k = row_block(x.circle, x.right);
        if k != col_block(y.circle, y.right) {
            return E::zero();
        }
        let (rk, rk1) = (r_of(k), r_of(k + 1));
        match (x.right, y.right) {
            // B_k(u_k, v_k)
            (false, true) => {
                let mut e = h_of(x) * r_poly(rk, x.w) * r_poly(rk1, y.w)
                    / (r_prime(rk.unwrap(), y.pos) * r_poly(rk1, x.w) * (x.w - y.w));
                if k == m {
                    e = e * ratio_q[(y.pos, x.pos)];
                }
                e
            }
            // B_k(u_k, u_{k+1})
            (false, false) => {
                h_of(x) * r_poly(rk, x.w) * r_poly(rk1, y.w) / (r_poly(rk1, x.w) * r_poly(rk, y.w) * (x.w - y.w))
            }
            // B_k(v_{k+1}, v_k)
            (true, true) => {
                r_poly(rk, x.w) * r_poly(rk1, y.w)
                    / (h_of(x) * r_prime(rk1.unwrap(), x.pos) * r_prime(rk.unwrap(), y.pos) * (x.w - y.w))
            }
            // B_k(v_{k+1}, u_{k+1})
            (true, false) => {
                let mut e = r_poly(rk1, y.w) * r_poly(rk, x.w)
                    / (h_of(x) * r_prime(rk1.unwrap(), x.pos) * r_poly(rk, y.w) * (x.w - y.w));
                if k == 0 {
                    e = e * ratio_p[(x.pos, y.pos)];
                }
                e
            }
        }
    };
    let k1 = Matrix::from_fn(s1.len(), s2.len(), |a, b| entry(&s1[a], &s2[b]));
    let k2 = Matrix::from_fn(s2.len(), s1.len(), |a, b| entry(&s2[a], &s1[b]));
    let det_m = m_mat.det();
    let lhs = t.det();
    // the product form of det M is free of the cancellation that the
    // direct sum suffers when M is badly conditioned
    let rhs = closed * det_i_minus_product(&k1, &k2);
    let rel_err = (lhs - rhs).magnitude() / lhs.magnitude().max(rhs.magnitude()).max(f64::MIN_POSITIVE);
    Ok(IdentityReport { lhs, rhs, rel_err, det_m, det_m_closed: closed })
}

/// A well-conditioned random instance: points in the annulus
/// `0.2 <= |w| <= 2` at mutual distance at least `0.01`, and low-degree
/// polynomial functions with coefficients in the unit disk.
pub fn random_instance<G: Rng>(rng: &mut G, m: usize, n: usize, sizes: &[usize]) -> GenericIdentityInstance<C64> {
    assert_eq!(sizes.len(), m);
    let mut pool: Vec<C64> = vec![];
    let mut point = |rng: &mut G| loop {
        let w = C64::from_polar(rng.gen_range(0.2..2.0), rng.gen_range(0.0..std::f64::consts::TAU));
        if pool.iter().all(|x| (x - w).norm() >= 1e-2) {
            pool.push(w);
            return w;
        }
    };
    let s: Vec<Vec<C64>> = sizes.iter().map(|&k| (0..k).map(|_| point(rng)).collect()).collect();
    let r: Vec<Vec<usize>> = sizes
        .iter()
        .map(|&k| rand::seq::index::sample(rng, k, n).into_vec())
        .collect();
    let disk = |rng: &mut G| C64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
    let poly_on = |rng: &mut G, pts: &[C64], deg: usize| -> Vec<C64> {
        let c: Vec<C64> = (0..=deg).map(|_| disk(rng)).collect();
        pts.iter().map(|&w| c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * w + a)).collect()
    };
    let p = (0..n).map(|_| poly_on(rng, &s[0], n + 1)).collect();
    let q = (0..n).map(|_| poly_on(rng, &s[m - 1], n + 1)).collect();
    let h = s
        .iter()
        .map(|si| loop {
            let v = poly_on(rng, si, 2);
            if v.iter().all(|x| x.norm() > 1e-3) {
                break v;
            }
        })
        .collect();
    GenericIdentityInstance { s, r, p, q, h }
}

/// `(-1)^((k_m - 1)(N + 1) + m - 1) z_1^((k_1 - 1) L) prod_l z_l^((k_l - k_{l-1}) L) ((z_l / z_{l-1})^L - 1)^(N - 1)`.
///
/// The `(-1)^(m-1)` is needed for agreement with exact transition
/// probabilities once `m >= 2`.
pub fn c_factor(roots: &[&BetheRootSet], obs: &ObservationSet) -> C64 {
    let pts = obs.points();
    let m = pts.len();
    let n = roots[0].n() as i64;
    let odd = ((pts[m - 1].k - 1) * (n + 1) + m as i64 - 1).rem_euclid(2) == 1;
    let mut c = sign::<C64>(odd) * powi(roots[0].z.zl, pts[0].k - 1);
    for l in 1..m {
        let (zp, zc) = (roots[l - 1].z.zl, roots[l].z.zl);
        c *= powi(zc, pts[l].k - pts[l - 1].k) * powi(zc / zp - 1.0, n - 1);
    }
    c
}

/// `G_l(w)`; the previous point defaults to `k = a = t = 0`.
pub fn g_ell(obs: &ObservationSet, ell: usize, w: C64, l: usize, rho: f64) -> C64 {
    let origin = ObsPoint { k: 0, t: 0.0, a: 0 };
    let pts = obs.points();
    let cur = pts[ell - 1];
    let prev = if ell >= 2 { pts[ell - 2] } else { origin };
    let j = w * (w + 1.0) / (l as f64 * (w + rho));
    j * powi(w, prev.k - cur.k) * powi(w + 1.0, (cur.k - cur.a) - (prev.k - prev.a)) * ((cur.t - prev.t) * w).exp()
}

/// The Toeplitz-like determinant `D_Y(z)` at solved root sets.
pub fn toeplitz_d(y: &[i64], roots: &[&BetheRootSet], obs: &ObservationSet) -> Result<C64> {
    let m = roots.len();
    if m != obs.m() {
        bail!(Parameter, "{m} root sets for {} observation points", obs.m());
    }
    let (l, n, rho) = (roots[0].l(), roots[0].n(), roots[0].rho());
    if y.len() != n {
        bail!(Parameter, "initial condition has {} particles, roots are for N = {n}", y.len());
    }
    let s: Vec<Vec<C64>> = roots.iter().map(|r| r.all_roots().copied().collect()).collect();
    let h: Vec<Vec<C64>> = (0..m).map(|c| s[c].iter().map(|&w| g_ell(obs, c + 1, w, l, rho)).collect()).collect();
    let p: Vec<Vec<C64>> = (1..=n as i64)
        .map(|i| s[0].iter().map(|&w| powi(w, i) * powi(w + 1.0, y[i as usize - 1] - i)).collect())
        .collect();
    let q: Vec<Vec<C64>> = (1..=n as i64).map(|j| s[m - 1].iter().map(|&w| powi(w, -j)).collect()).collect();
    let s_refs: Vec<&[C64]> = s.iter().map(|v| v.as_slice()).collect();
    let h_refs: Vec<&[C64]> = h.iter().map(|v| v.as_slice()).collect();
    Ok(chained_sum(&s_refs, &p, &q, &h_refs)?.det())
}

/// `C(z) D_Y(z)` at explicit normalized parameters.
pub fn toeplitz_integrand_at(ic: &InitialCondition, z_norm: &[C64], obs: &ObservationSet) -> Result<C64> {
    let p = ic.params();
    let sets: Vec<BetheRootSet> = z_norm.iter().map(|&z| solve_at(&p, z)).collect::<Result<_>>()?;
    let refs: Vec<&BetheRootSet> = sets.iter().collect();
    Ok(c_factor(&refs, obs) * toeplitz_d(&ic.y, &refs, obs)?)
}

/// The multi-point probability from the Toeplitz-like formula, on the same
/// nested circles as the Fredholm evaluation.
pub fn multipoint_prob_oracle(ic: &InitialCondition, obs: &ObservationSet, spec: &ContourSpec) -> Result<ProbResult> {
    obs.require_positive_times()?;
    let params = ic.params();
    converge(&params, obs.m(), spec, |_| Ok(None), |sets, _| Ok(c_factor(sets, obs) * toeplitz_d(&ic.y, sets, obs)?))
}
