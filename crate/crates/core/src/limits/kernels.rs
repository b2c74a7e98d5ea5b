use super::functions::{a1, a2, b_diag, b_fn, h_fn};
use super::nodes::{limiting_nodes, LimitNodeSet};
use crate::error::{bail, Result};
use crate::finite::{Interleaved, KernelPair, Node, Side};
use crate::linalg::Matrix;
use crate::model::{LimitCoordinates, LimitPoint};
use crate::C64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// A circle node `z` with its node set and the quantities that depend on
/// `z` alone.
#[derive(Clone, Debug)]
pub struct PreparedCircle {
    pub nodes: LimitNodeSet,
    /// `h(zeta, z)` on `left` and `right`.
    h_left: Vec<C64>,
    h_right: Vec<C64>,
    a1: C64,
    a2: C64,
    b: C64,
}

impl PreparedCircle {
    pub fn new(z: C64, xi: f64) -> Result<Self> {
        Self::from_nodes(limiting_nodes(z, xi)?)
    }

    pub fn from_nodes(nodes: LimitNodeSet) -> Result<Self> {
        let z = nodes.z;
        let h_left = nodes.left.iter().map(|&w| h_fn(w, z)).collect::<Result<_>>()?;
        let h_right = nodes.right.iter().map(|&w| h_fn(w, z)).collect::<Result<_>>()?;
        Ok(PreparedCircle { h_left, h_right, a1: a1(z)?, a2: a2(z)?, b: b_diag(z)?, nodes })
    }

    pub fn z(&self) -> C64 {
        self.nodes.z
    }
}

fn check_nested(zs: &[C64], m: usize) -> Result<()> {
    if zs.len() != m {
        bail!(Parameter, "{} circle points for {m} coordinates", zs.len());
    }
    for w in zs.windows(2) {
        if (w[0] - w[1]).norm() <= 1e-14 * w[0].norm() {
            bail!(Pole, "coincident z values make C_step singular");
        }
        if w[1].norm() >= w[0].norm() {
            bail!(Parameter, "need |z_1| > |z_2| > ... > 0");
        }
    }
    Ok(())
}

pub(crate) fn c_step_prepared(circles: &[&PreparedCircle], coords: &LimitCoordinates) -> Result<C64> {
    let zs: Vec<C64> = circles.iter().map(|c| c.z()).collect();
    check_nested(&zs, coords.m())?;
    let m = zs.len();
    let mut prefactor = C64::new(1.0, 0.0);
    let mut expo = zero();
    for (l, p) in coords.points().iter().enumerate() {
        let cur = circles[l];
        let (zn, a1n, a2n, bn) = if l + 1 < m {
            let next = circles[l + 1];
            (next.z(), next.a1, next.a2, b_fn(next.z(), cur.z())?)
        } else {
            (zero(), zero(), zero(), zero())
        };
        prefactor *= cur.z() / (cur.z() - zn);
        expo += p.x * (cur.a1 - a1n) + p.tau * (cur.a2 - a2n) + 2.0 * cur.b - 2.0 * bn;
    }
    Ok(prefactor * expo.exp())
}

/// `C_step(z)` for nested `z`, with `z_{m+1} = 0`.
pub fn c_step_limit(zs: &[C64], coords: &LimitCoordinates) -> Result<C64> {
    check_nested(zs, coords.m())?;
    let circles: Vec<PreparedCircle> = zs.iter().map(|&z| PreparedCircle::new(z, 1.0)).collect::<Result<_>>()?;
    let refs: Vec<&PreparedCircle> = circles.iter().collect();
    c_step_prepared(&refs, coords)
}

fn sgn(i: usize) -> i64 {
    if i % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Log of `f_i(zeta)`, with `tau_0 = gamma_0 = x_0 = 0`.
fn log_f(coords: &LimitCoordinates, i: usize, zeta: C64) -> C64 {
    let pts = coords.points();
    let prev = if i >= 2 { pts[i - 2] } else { LimitPoint { gamma: 0.0, tau: 0.0, x: 0.0 } };
    let cur = pts[i - 1];
    let e = -(cur.tau - prev.tau) / 3.0 * zeta * zeta * zeta
        + 0.5 * (cur.gamma - prev.gamma) * zeta * zeta
        + (cur.x - prev.x) * zeta;
    if zeta.re < 0.0 {
        e
    } else {
        -e
    }
}

/// Per-node exponent pieces: `h(zeta, z_c)`, `h(zeta, z_{c - (-1)^c})` and
/// `h(zeta, z_{c + (-1)^c})`, where out-of-range neighbours are `z = 0`.
struct NodeTerms {
    own: C64,
    minus: C64,
    plus: C64,
}

fn node_terms(circles: &[&PreparedCircle], node: &Node) -> Result<NodeTerms> {
    let m = circles.len() as i64;
    let c = node.circle;
    let pc = circles[c - 1];
    let own = match node.side {
        Side::L => pc.h_left[node.index],
        Side::R => pc.h_right[node.index],
    };
    let neighbour = |j: i64| -> Result<C64> {
        if j < 1 || j > m {
            Ok(zero())
        } else {
            h_fn(node.w, circles[(j - 1) as usize].z())
        }
    };
    Ok(NodeTerms { own, minus: neighbour(c as i64 - sgn(c))?, plus: neighbour(c as i64 + sgn(c))? })
}

fn z_at(circles: &[&PreparedCircle], j: i64) -> C64 {
    if j < 1 || j > circles.len() as i64 {
        zero()
    } else {
        circles[(j - 1) as usize].z()
    }
}

pub(crate) fn kernels_prepared(circles: &[&PreparedCircle], coords: &LimitCoordinates) -> Result<KernelPair> {
    let zs: Vec<C64> = circles.iter().map(|c| c.z()).collect();
    check_nested(&zs, coords.m())?;
    let sides: Vec<(&[C64], &[C64])> = circles.iter().map(|c| (&c.nodes.left[..], &c.nodes.right[..])).collect();
    let sets = Interleaved::from_sides(&sides);
    let t1: Vec<NodeTerms> = sets.s1.iter().map(|n| node_terms(circles, n)).collect::<Result<_>>()?;
    let t2: Vec<NodeTerms> = sets.s2.iter().map(|n| node_terms(circles, n)).collect::<Result<_>>()?;
    let q1 = |j: usize| C64::new(1.0, 0.0) - z_at(circles, j as i64 - sgn(j)) / z_at(circles, j as i64);
    let q2 = |i: usize| C64::new(1.0, 0.0) - z_at(circles, i as i64 + sgn(i)) / z_at(circles, i as i64);
    let (n1, n2) = (sets.s1.len(), sets.s2.len());
    let mut k1 = Matrix::zeros(n1, n2);
    let mut k2 = Matrix::zeros(n2, n1);
    for (r, x) in sets.s1.iter().enumerate() {
        let i = x.circle as i64;
        let fx = log_f(coords, x.circle, x.w);
        for (c, y) in sets.s2.iter().enumerate() {
            let j = y.circle as i64;
            if j == i || j == i - sgn(x.circle) {
                let d = x.w - y.w;
                if d.norm() < 1e-13 * x.w.norm() {
                    bail!(Pole, "nodes {} and {} coincide", x.w, y.w);
                }
                let e = fx + 2.0 * t1[r].own - t1[r].minus - t2[c].minus;
                k1[(r, c)] = e.exp() / (x.w * d) * q1(y.circle);
            }
        }
    }
    for (r, y) in sets.s2.iter().enumerate() {
        let j = y.circle as i64;
        let fy = log_f(coords, y.circle, y.w);
        for (c, x) in sets.s1.iter().enumerate() {
            let i = x.circle as i64;
            if i == j || i == j + sgn(y.circle) {
                let d = y.w - x.w;
                if d.norm() < 1e-13 * y.w.norm() {
                    bail!(Pole, "nodes {} and {} coincide", y.w, x.w);
                }
                let e = fy + 2.0 * t2[r].own - t2[r].plus - t1[c].plus;
                k2[(r, c)] = e.exp() / (y.w * d) * q2(x.circle);
            }
        }
    }
    Ok(KernelPair { sets, k1, k2 })
}

/// `K_1^step` and `K_2^step` on the interleaved limit node sets.
pub fn build_kernels_limit(nodes: &[LimitNodeSet], coords: &LimitCoordinates) -> Result<KernelPair> {
    let circles: Vec<PreparedCircle> = nodes.iter().cloned().map(PreparedCircle::from_nodes).collect::<Result<_>>()?;
    let refs: Vec<&PreparedCircle> = circles.iter().collect();
    kernels_prepared(&refs, coords)
}
