//! Summation and quadrature primitives.

use crate::scalar::Field;
use num_traits::{Float, FloatConst};

/// Pairwise (cascade) summation in fixed index order.
pub fn pairwise_sum<E: Field>(xs: &[E]) -> E {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().fold(E::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre<F: Float + FloatConst>(n: usize) -> (Vec<F>, Vec<F>) {
    let mut x = vec![F::zero(); n];
    let mut w = vec![F::zero(); n];
    let nf = F::from(n).unwrap();
    let one = F::one();
    let two = one + one;
    let quarter = F::from(0.25).unwrap();
    let half = F::from(0.5).unwrap();
    let eps = F::epsilon() * F::from(4.0).unwrap();
    for i in 0..(n + 1) / 2 {
        let fi = F::from(i).unwrap();
        let mut z = (F::PI() * (fi + one - quarter) / (nf + half)).cos();
        let mut dp = one;
        for _ in 0..100 {
            let mut p0 = one;
            let mut p1 = z;
            for k in 2..=n {
                let kf = F::from(k).unwrap();
                let p2 = ((two * kf - one) * z * p1 - (kf - one) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { one } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { one } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - one);
            let dz = pn / dp;
            z = z - dz;
            if dz.abs() < eps {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = two / ((one - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre::<f64>(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre::<f64>(5);
        // degree 9 is exact for 5 points
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl_in_single_precision() {
        let (x, w) = gauss_legendre::<f32>(4);
        let s: f32 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((s - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn composite_rule_on_exponential() {
        let s: f64 = composite_gl(0.0, 3.0, 4, 10).iter().map(|(x, w)| w * x.exp()).sum();
        assert!((s - (3.0f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
    }
}
