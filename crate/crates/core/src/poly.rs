//! Simultaneous root finding for polynomials given by coefficients.

use crate::error::{bail, Result};
use num_complex::Complex;
use num_traits::{Float, FloatConst};

/// Evaluate `sum c_k x^k` and its derivative by Horner's rule.
pub fn horner<F: Float>(coeffs: &[Complex<F>], x: Complex<F>) -> (Complex<F>, Complex<F>) {
    let mut p = Complex::new(F::zero(), F::zero());
    let mut dp = p;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// All roots of `sum_{k} coeffs[k] x^k` by the Aberth-Ehrlich iteration.
///
/// Seeds sit on a circle whose radius comes from the Cauchy bound, rotated
/// off the real axis to break symmetry.
pub fn aberth_roots<F: Float + FloatConst>(coeffs: &[Complex<F>], tol: F, max_iter: usize) -> Result<Vec<Complex<F>>> {
    let mut c: Vec<Complex<F>> = coeffs.to_vec();
    while c.last().map_or(false, |x| x.norm() == F::zero()) {
        c.pop();
    }
    if c.len() < 2 {
        return Ok(vec![]);
    }
    let deg = c.len() - 1;
    let lead = c[deg];
    let radius = c[..deg].iter().map(|x| (*x / lead).norm()).fold(F::zero(), F::max);
    let radius = (radius + F::one()).min(F::from(1e6).unwrap()) * F::from(0.5).unwrap() + F::from(0.1).unwrap();
    let two_pi = F::PI() + F::PI();
    let offset = F::from(0.4).unwrap();
    let mut z: Vec<Complex<F>> = (0..deg)
        .map(|k| Complex::from_polar(radius, two_pi * F::from(k).unwrap() / F::from(deg).unwrap() + offset))
        .collect();
    for _ in 0..max_iter {
        let mut worst = F::zero();
        for k in 0..deg {
            let (p, dp) = horner(&c, z[k]);
            if p.norm() == F::zero() {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex::new(F::zero(), F::zero());
            for j in 0..deg {
                if j != k {
                    s = s + Complex::new(F::one(), F::zero()) / (z[k] - z[j]);
                }
            }
            let step = ratio / (Complex::new(F::one(), F::zero()) - ratio * s);
            z[k] = z[k] - step;
            let rel = step.norm() / (F::one() + z[k].norm());
            if rel > worst {
                worst = rel;
            }
        }
        if worst < tol {
            return Ok(z);
        }
    }
    bail!(Numerical, "Aberth iteration did not converge for a degree-{deg} polynomial")
}

/// Coefficients of `prod (x - r)`, lowest degree first.
pub fn from_roots<F: Float>(roots: &[Complex<F>]) -> Vec<Complex<F>> {
    let mut c = vec![Complex::new(F::one(), F::zero())];
    for &r in roots {
        let mut next = vec![Complex::new(F::zero(), F::zero()); c.len() + 1];
        for (k, &a) in c.iter().enumerate() {
            next[k + 1] = next[k + 1] + a;
            next[k] = next[k] - a * r;
        }
        c = next;
    }
    c
}
