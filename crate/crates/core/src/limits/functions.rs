//! Polylogarithms, `A_1`, `A_2`, `B(z, z')` and `h(zeta, z)`.

use crate::error::{bail, Result};
use crate::quad::composite_gl;
use crate::C64;
use errorfunctions::ComplexErrorFunctions;
use std::f64::consts::PI;

/// Largest `|z|` accepted by the series evaluations.
pub const MAX_MODULUS: f64 = 0.95;

/// Largest `|z|` accepted by `h`; its series converges like `|z|^k / k`.
pub const MAX_H_MODULUS: f64 = 0.99;

const SERIES_TAIL: f64 = 1e-14;

fn check_range(z: C64, what: &str) -> Result<()> {
    if !(z.norm() <= MAX_MODULUS) {
        bail!(Regime, "{what} needs |z| <= {MAX_MODULUS}, got |z| = {}", z.norm());
    }
    Ok(())
}

/// `Li_s(z) = sum_{k>=1} z^k / k^s` for `|z| <= 0.95` and `s >= 0`.
///
/// Summation stops once `|z|^{K+1} / ((K+1)^s (1-|z|)) < 1e-14`, which bounds
/// the discarded tail.
pub fn polylog(s: f64, z: C64) -> Result<C64> {
    check_range(z, "Li_s")?;
    if !(s >= 0.0) {
        bail!(Parameter, "Li_s is evaluated for s >= 0 only, got {s}");
    }
    Ok(polylog_unchecked(s, z))
}

fn polylog_unchecked(s: f64, z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let mut sum = C64::new(0.0, 0.0);
    let mut zk = C64::new(1.0, 0.0);
    let mut rk = 1.0;
    let mut k = 1usize;
    loop {
        zk *= z;
        rk *= r;
        let kf = k as f64;
        sum += zk / kf.powf(s);
        let next = kf + 1.0;
        if rk * r / (next.powf(s) * (1.0 - r)) < SERIES_TAIL {
            return sum;
        }
        k += 1;
    }
}

pub fn a1(z: C64) -> Result<C64> {
    Ok(-polylog(1.5, z)? / (2.0 * PI).sqrt())
}

pub fn a2(z: C64) -> Result<C64> {
    Ok(-polylog(2.5, z)? / (2.0 * PI).sqrt())
}

/// Number of terms after which `r^k` bounds the remainder by `eps`.
fn terms_for(r: f64, eps: f64) -> usize {
    if r == 0.0 {
        return 0;
    }
    ((eps.ln() / r.ln()).ceil() as usize).max(1)
}

/// `B(z, z') = (1/4 pi) sum_{k,k'>=1} z^k z'^k' / ((k + k') sqrt(k k'))`,
/// truncated where the remainder is below `1e-13`.
pub fn b_fn(z: C64, zp: C64) -> Result<C64> {
    check_range(z, "B")?;
    check_range(zp, "B")?;
    let (r, rp) = (z.norm(), zp.norm());
    if r == 0.0 || rp == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let eps = 1e-13 * (1.0 - r) * (1.0 - rp);
    let weights = |w: C64, n: usize| -> Vec<C64> {
        let mut out = Vec::with_capacity(n);
        let mut p = C64::new(1.0, 0.0);
        for k in 1..=n {
            p *= w;
            out.push(p / (k as f64).sqrt());
        }
        out
    };
    let u = weights(z, terms_for(r, eps));
    let v = weights(zp, terms_for(rp, eps));
    let mut total = C64::new(0.0, 0.0);
    for (i, ui) in u.iter().enumerate() {
        let mut row = C64::new(0.0, 0.0);
        for (j, vj) in v.iter().enumerate() {
            row += vj / (i + j + 2) as f64;
        }
        total += ui * row;
    }
    Ok(total / (4.0 * PI))
}

pub fn b_diag(z: C64) -> Result<C64> {
    b_fn(z, z)
}

/// `B(z)` as `(1/4 pi) int_0^1 Li_{1/2}(z s)^2 / s ds`.
pub fn b_diag_integral(z: C64) -> Result<C64> {
    check_range(z, "B")?;
    let mut total = C64::new(0.0, 0.0);
    for (s, w) in composite_gl(0.0, 1.0, 8, 20) {
        let li = polylog_unchecked(0.5, z * s);
        total += li * li / s * w;
    }
    Ok(total / (4.0 * PI))
}

fn check_h_range(z: C64) -> Result<()> {
    if !(z.norm() <= MAX_H_MODULUS) {
        bail!(Regime, "h needs |z| <= {MAX_H_MODULUS}, got |z| = {}", z.norm());
    }
    Ok(())
}

/// `h` on the closed left half plane:
/// `h(zeta, z) = -(1/2) sum_k (z^k / k) w(-i zeta sqrt(k/2))` with the
/// Faddeeva function `w`. The arguments stay in the closed upper half plane,
/// where `|w| <= 1`, so the terms are bounded by `|z|^k / k`. On the
/// imaginary axis this is the limit from the left.
fn h_left(zeta: C64, z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let arg = C64::new(zeta.im, -zeta.re);
    let mut sum = C64::new(0.0, 0.0);
    let mut zk = C64::new(1.0, 0.0);
    let mut rk = 1.0;
    let mut k = 1usize;
    loop {
        zk *= z;
        rk *= r;
        let kf = k as f64;
        sum += zk / kf * (arg * (0.5 * kf).sqrt()).w();
        if rk * r / ((kf + 1.0) * (1.0 - r)) < 1e-17 {
            return -0.5 * sum;
        }
        k += 1;
    }
}

/// `h(zeta, z)` off the imaginary axis, extended evenly to `Re zeta > 0`.
/// At `zeta = 0` the function is continuous with value `log(1 - z) / 2`.
pub fn h_fn(zeta: C64, z: C64) -> Result<C64> {
    check_h_range(z)?;
    if zeta.re == 0.0 && zeta.im != 0.0 {
        bail!(Domain, "h jumps across the imaginary axis; use h_plus or h_minus at {zeta}");
    }
    Ok(if zeta.re <= 0.0 { h_left(zeta, z) } else { h_left(-zeta, z) })
}

/// Limit of `h` from `Re zeta < 0`.
pub fn h_minus(zeta: C64, z: C64) -> Result<C64> {
    check_h_range(z)?;
    if zeta.re > 0.0 {
        bail!(Domain, "h_minus is the left boundary value; got Re zeta = {}", zeta.re);
    }
    Ok(h_left(zeta, z))
}

/// Limit of `h` from `Re zeta > 0`.
pub fn h_plus(zeta: C64, z: C64) -> Result<C64> {
    check_h_range(z)?;
    if zeta.re < 0.0 {
        bail!(Domain, "h_plus is the right boundary value; got Re zeta = {}", zeta.re);
    }
    Ok(h_left(-zeta, z))
}

/// `h` for `Re zeta < 0` from the Cauchy transform
/// `(1/2 pi) int_R log(1 - z e^{-y^2/2}) / (i y - zeta) dy` by the trapezoid
/// rule. The step resolves both the pole at distance `|Re zeta|` and the
/// logarithmic branch points at distance `sqrt(-2 log|z|)`.
pub fn h_cauchy(zeta: C64, z: C64) -> Result<C64> {
    check_h_range(z)?;
    if !(zeta.re < 0.0) {
        bail!(Domain, "the Cauchy form of h needs Re zeta < 0, got {}", zeta.re);
    }
    let r = z.norm();
    if r == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let gap = (-zeta.re).min((-2.0 * r.ln()).sqrt());
    let step = (gap / 6.0).min(0.1);
    let ymax = (2.0 * (r * 1e17).ln()).max(1.0).sqrt();
    let n = (ymax / step).ceil() as i64;
    let mut total = C64::new(0.0, 0.0);
    for k in -n..=n {
        let y = k as f64 * step;
        let num = (C64::new(1.0, 0.0) - z * (-0.5 * y * y).exp()).ln();
        total += num / (C64::new(0.0, y) - zeta);
    }
    Ok(total * step / (2.0 * PI))
}

/// `h` for `Re zeta < 0` from
/// `-(1/sqrt(2 pi)) int_0^inf Li_{1/2}(z e^{(2 zeta u - u^2)/2}) du`, by
/// composite Gauss-Legendre with panels fine enough for the oscillation.
pub fn h_polylog_integral(zeta: C64, z: C64) -> Result<C64> {
    check_range(z, "the polylog form of h")?;
    if !(zeta.re < 0.0) {
        bail!(Domain, "the polylog form of h needs Re zeta < 0, got {}", zeta.re);
    }
    let r = z.norm();
    if r == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let a = zeta.re;
    let lam = (r / (1.0 - r) * 1e17).ln().max(1.0);
    let umax = a + (a * a + 2.0 * lam).sqrt();
    // Li_{1/2} is singular at 1, which sits close to the path when |z| is near 1.
    let panels = ((umax * (1.0 + zeta.im.abs()) / (1.5 * (1.0 - r).min(0.5) * 2.0)).ceil() as usize).max(4);
    let mut total = C64::new(0.0, 0.0);
    for (u, w) in composite_gl(0.0, umax, panels, 16) {
        let e = ((2.0 * zeta * u - u * u) * 0.5).exp();
        total += polylog_unchecked(0.5, z * e) * w;
    }
    Ok(-total / (2.0 * PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn li_one_is_minus_log() {
        let z = c(0.3, -0.4);
        let li = polylog(1.0, z).unwrap();
        assert!((li + (c(1.0, 0.0) - z).ln()).norm() < 1e-13);
    }

    #[test]
    fn li_three_halves_at_one_half() {
        let v = polylog(1.5, c(0.5, 0.0)).unwrap();
        assert!((v.re - 0.624_837_020_819_914).abs() < 1e-10);
    }

    #[test]
    fn polylog_rejects_outer_annulus() {
        assert!(matches!(polylog(0.5, c(0.96, 0.0)), Err(crate::Error::Regime(_))));
    }

    #[test]
    fn h_at_origin() {
        let z = c(0.4, 0.3);
        let h0 = h_fn(c(0.0, 0.0), z).unwrap();
        assert!((h0 - 0.5 * (c(1.0, 0.0) - z).ln()).norm() < 1e-13);
    }

    #[test]
    fn h_boundary_values_sum_to_log() {
        let z = c(0.5, -0.2);
        let zeta = c(0.0, 1.3);
        let s = h_plus(zeta, z).unwrap() + h_minus(zeta, z).unwrap();
        let want = (c(1.0, 0.0) - z * (zeta * zeta * 0.5).exp()).ln();
        assert!((s - want).norm() < 1e-12, "{s} vs {want}");
    }

    #[test]
    fn b_diag_two_ways() {
        let z = c(0.4, 0.0);
        let (a, b) = (b_diag(z).unwrap(), b_diag_integral(z).unwrap());
        assert!((a - b).norm() < 1e-10 * a.norm());
    }
}
