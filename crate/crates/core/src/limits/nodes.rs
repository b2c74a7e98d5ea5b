use crate::error::{bail, Result};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Solutions of `e^{-zeta^2/2} = z` with `|zeta| <= xi`, split by the sign of
/// the real part. `left[k] == -right[k]` for every `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitNodeSet {
    pub z: C64,
    pub left: Vec<C64>,
    pub right: Vec<C64>,
    pub xi: f64,
}

impl LimitNodeSet {
    pub fn len(&self) -> usize {
        self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.right.is_empty()
    }

    /// Largest `|e^{-zeta^2/2} - z|` over both sides.
    pub fn max_residual(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .map(|&w| ((-0.5 * w * w).exp() - self.z).norm())
            .fold(0.0, f64::max)
    }
}

/// `zeta^2 = -2 Log z - 4 pi i k` over the integers `k` admitted by the
/// cutoff, ordered by increasing `|zeta|`.
pub fn limiting_nodes(z: C64, xi: f64) -> Result<LimitNodeSet> {
    let r = z.norm();
    if !(r > 0.0 && r < 1.0) {
        bail!(Parameter, "node sets need 0 < |z| < 1, got |z| = {r}");
    }
    if !(xi > 0.0 && xi.is_finite()) {
        bail!(Parameter, "cutoff must be positive, got {xi}");
    }
    let c = -2.0 * z.ln();
    let xi2 = xi * xi;
    let mut right = vec![];
    if xi2 >= c.re {
        let span = (xi2 * xi2 - c.re * c.re).sqrt();
        let lo = ((c.im - span) / (4.0 * PI)).ceil() as i64;
        let hi = ((c.im + span) / (4.0 * PI)).floor() as i64;
        let mut ks: Vec<i64> = (lo..=hi).collect();
        ks.sort_by(|a, b| {
            let da = (c.im - 4.0 * PI * *a as f64).abs();
            let db = (c.im - 4.0 * PI * *b as f64).abs();
            da.total_cmp(&db).then(a.cmp(b))
        });
        for k in ks {
            let zeta = (c - C64::new(0.0, 4.0 * PI * k as f64)).sqrt();
            if zeta.norm() <= xi {
                right.push(zeta);
            }
        }
    }
    let left = right.iter().map(|&w| -w).collect();
    Ok(LimitNodeSet { z, left, right, xi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_nodes_for_e_to_minus_half() {
        let s = limiting_nodes(C64::new((-0.5f64).exp(), 0.0), 1.5).unwrap();
        assert_eq!(s.right.len(), 1);
        assert!((s.right[0] - 1.0).norm() < 1e-15);
        assert!((s.left[0] + 1.0).norm() < 1e-15);
    }

    #[test]
    fn residuals_and_signs() {
        let s = limiting_nodes(C64::from_polar(0.4, 2.0), 12.0).unwrap();
        assert!(s.max_residual() < 1e-12);
        assert!(s.right.iter().all(|w| w.re > 0.0 && w.norm() <= 12.0));
        assert!(s.left.iter().all(|w| w.re < 0.0));
    }
}
