//! Monte Carlo simulation of periodic TASEP and exact probabilities for
//! small rings by uniformization of the generator.

use crate::error::{bail, Result};
use crate::model::{particle_position, InitialCondition, ObservationSet, RandomIc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Unwrapped positions of particles `1..=N` at time `time`, together with
/// the flux `J_0` through the bond `(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RingState {
    l: i64,
    positions: Vec<i64>,
    pub time: f64,
    pub flux: i64,
    eligible: Vec<usize>,
    slot: Vec<Option<usize>>,
}

impl RingState {
    pub fn new(ic: &InitialCondition) -> Self {
        let n = ic.n;
        let mut s = RingState {
            l: ic.l as i64,
            positions: ic.y.clone(),
            time: 0.0,
            flux: 0,
            eligible: Vec::with_capacity(n),
            slot: vec![None; n],
        };
        for k in 0..n {
            s.refresh(k);
        }
        s
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn position(&self, k: i64) -> i64 {
        particle_position(&self.positions, self.l, k)
    }

    fn gap(&self, k: usize) -> i64 {
        let n = self.positions.len();
        if k + 1 < n {
            self.positions[k + 1] - self.positions[k]
        } else {
            self.positions[0] + self.l - self.positions[k]
        }
    }

    fn refresh(&mut self, k: usize) {
        let free = self.gap(k) >= 2;
        match (free, self.slot[k]) {
            (true, None) => {
                self.slot[k] = Some(self.eligible.len());
                self.eligible.push(k);
            }
            (false, Some(i)) => {
                let last = self.eligible.pop().expect("slot implies nonempty");
                if last != k {
                    self.eligible[i] = last;
                    self.slot[last] = Some(i);
                }
                self.slot[k] = None;
            }
            _ => {}
        }
    }

    /// Advance by Gillespie steps until `t_target`.
    pub fn simulate_to<R: Rng>(&mut self, t_target: f64, rng: &mut R) {
        assert!(t_target >= self.time, "cannot simulate backwards in time");
        let n = self.positions.len();
        loop {
            let rate = self.eligible.len();
            if rate == 0 {
                self.time = t_target;
                return;
            }
            let u: f64 = rng.gen();
            let dt = -(1.0 - u).ln() / rate as f64;
            if self.time + dt > t_target {
                self.time = t_target;
                return;
            }
            self.time += dt;
            let k = self.eligible[rng.gen_range(0..rate)];
            if self.positions[k].rem_euclid(self.l) == 0 {
                self.flux += 1;
            }
            self.positions[k] += 1;
            self.refresh(k);
            self.refresh((k + n - 1) % n);
        }
    }

    /// `h(ell, t)` for `ell` in `lo..=hi`.
    pub fn height_profile(&self, lo: i64, hi: i64) -> Vec<i64> {
        let occupied = |j: i64| self.positions.iter().any(|&x| (j - x).rem_euclid(self.l) == 0);
        let step = |j: i64| if occupied(j) { -1 } else { 1 };
        (lo..=hi)
            .map(|ell| {
                let base = 2 * self.flux;
                if ell >= 0 {
                    base + (1..=ell).map(step).sum::<i64>()
                } else {
                    base - (ell + 1..=0).map(step).sum::<i64>()
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub p_hat: f64,
    pub std_err: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Either a fixed configuration or a random one.
#[derive(Clone, Debug, PartialEq)]
pub enum IcSource {
    Fixed(InitialCondition),
    Random(RandomIc),
}

fn trajectory_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn sample_subset<R: Rng>(lo: i64, hi: i64, k: usize, rng: &mut R) -> Vec<i64> {
    let span = (hi - lo + 1) as usize;
    let mut v: Vec<i64> = rand::seq::index::sample(rng, span, k).into_iter().map(|i| lo + i as i64).collect();
    v.sort_unstable();
    v
}

fn draw_ic<R: Rng>(src: &IcSource, rng: &mut R) -> InitialCondition {
    match src {
        IcSource::Fixed(ic) => ic.clone(),
        IcSource::Random(RandomIc::Uniform { l, n }) => {
            let y = sample_subset(-(*l as i64) + 1, 0, *n, rng);
            InitialCondition::explicit(*l, y).expect("sampled subsets are admissible")
        }
        IcSource::Random(RandomIc::PartialUniform { l, n1, y }) => {
            let mut x = sample_subset(-(*l as i64) + 1, y[0] - 1, *n1, rng);
            x.extend_from_slice(y);
            InitialCondition::explicit(*l, x).expect("sampled subsets are admissible")
        }
    }
}

fn event_holds(state: &mut RingState, obs: &ObservationSet, rng: &mut ChaCha8Rng) -> bool {
    for p in obs.points() {
        state.simulate_to(p.t, rng);
        if state.position(p.k) < p.a {
            return false;
        }
    }
    true
}

/// Fraction of `n_samples` trajectories on which the whole event holds.
pub fn estimate_joint_prob(src: &IcSource, obs: &ObservationSet, n_samples: usize, seed: u64) -> Result<EstimateResult> {
    if n_samples < 1000 {
        bail!(Parameter, "need at least 1000 samples, got {n_samples}");
    }
    let hits: usize = (0..n_samples as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = trajectory_rng(seed, id);
            let ic = draw_ic(src, &mut rng);
            let mut s = RingState::new(&ic);
            event_holds(&mut s, obs, &mut rng) as usize
        })
        .sum();
    let p = hits as f64 / n_samples as f64;
    Ok(EstimateResult { p_hat: p, std_err: (p * (1.0 - p) / n_samples as f64).sqrt(), n_samples, seed })
}

/// Largest number of states the exact oracle accepts.
pub const MAX_STATES: usize = 100_000;

/// Smallest `w` with `P(Poisson(mu) > w) < eps`.
fn poisson_cutoff(mu: f64, eps: f64) -> usize {
    let mut term = (-mu).exp();
    let mut cdf = term;
    let mut w = 0;
    while 1.0 - cdf >= eps && w < 100_000 {
        w += 1;
        term *= mu / w as f64;
        cdf += term;
        if term == 0.0 && cdf < 1.0 - eps {
            // e^{-mu} underflowed; fall back to a Gaussian bound
            return (mu + 12.0 * mu.sqrt() + 30.0) as usize;
        }
    }
    w
}

/// Exact event probability from the generator on (gap composition,
/// displacement of particle 1), truncated where Poisson mass < 1e-11.
pub fn ctmc_exact_prob(ic: &InitialCondition, obs: &ObservationSet) -> Result<f64> {
    let (l, n) = (ic.l as i64, ic.n);
    let t_max = obs.points().last().map(|p| p.t).unwrap_or(0.0);
    let w_max = poisson_cutoff(t_max, 1e-11) as i64;
    // enumerate reachable gap vectors by BFS
    let start_gaps: Vec<i64> = (0..n).map(|k| if k + 1 < n { ic.y[k + 1] - ic.y[k] } else { ic.y[0] + l - ic.y[k] }).collect();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut gaps: Vec<Vec<i64>> = vec![];
    index.insert(start_gaps.clone(), 0);
    gaps.push(start_gaps);
    let mut head = 0;
    while head < gaps.len() {
        let g = gaps[head].clone();
        head += 1;
        for k in 0..n {
            if g[k] >= 2 {
                let mut h = g.clone();
                h[k] -= 1;
                h[(k + n - 1) % n] += 1;
                if !index.contains_key(&h) {
                    index.insert(h.clone(), gaps.len());
                    gaps.push(h);
                }
            }
        }
        if gaps.len() * (w_max as usize + 2) > MAX_STATES {
            bail!(Size, "exact oracle needs more than {MAX_STATES} states (L={l}, N={n}, W={w_max})");
        }
    }
    let ng = gaps.len();
    let width = (w_max + 2) as usize; // displacement 0..=w_max, plus overflow
    let total = ng * width;
    let id = |g: usize, d: usize| g * width + d;
    // transitions: (from, to)
    let mut trans: Vec<(usize, usize, usize)> = Vec::new(); // (gap idx, next gap idx, particle moved)
    for (gi, g) in gaps.iter().enumerate() {
        for k in 0..n {
            if g[k] >= 2 {
                let mut h = g.clone();
                h[k] -= 1;
                h[(k + n - 1) % n] += 1;
                trans.push((gi, index[&h], k));
            }
        }
    }
    let lambda = n as f64;
    let mut p = vec![0.0; total];
    p[id(0, 0)] = 1.0;
    let mut t_now = 0.0;
    let position = |g: &[i64], d: i64, k: i64| {
        let mut x = vec![ic.y[0] + d; n];
        for i in 1..n {
            x[i] = x[i - 1] + g[i - 1];
        }
        particle_position(&x, l, k)
    };
    for pt in obs.points() {
        let dt = pt.t - t_now;
        if dt > 0.0 {
            p = uniformize(&p, dt, lambda, &gaps, &trans, width);
        }
        t_now = pt.t;
        for gi in 0..ng {
            for d in 0..width {
                let i = id(gi, d);
                if p[i] == 0.0 {
                    continue;
                }
                if d == width - 1 {
                    // overflow bucket: its mass is below the truncation bound
                    p[i] = 0.0;
                    continue;
                }
                if position(&gaps[gi], d as i64, pt.k) < pt.a {
                    p[i] = 0.0;
                }
            }
        }
    }
    Ok(p.iter().sum::<f64>().clamp(0.0, 1.0))
}

fn uniformize(p: &[f64], dt: f64, lambda: f64, gaps: &[Vec<i64>], trans: &[(usize, usize, usize)], width: usize) -> Vec<f64> {
    let mu = lambda * dt;
    let terms = poisson_cutoff(mu, 1e-13) + 1;
    let mut out = vec![0.0; p.len()];
    let mut cur = p.to_vec();
    // Poisson weights computed in log space to survive large mu
    let log_w = |k: usize| -mu + k as f64 * mu.ln() - ln_factorial(k);
    let exits: Vec<f64> = gaps.iter().map(|g| g.iter().filter(|&&x| x >= 2).count() as f64).collect();
    for k in 0..=terms {
        let w = log_w(k).exp();
        for (o, c) in out.iter_mut().zip(&cur) {
            *o += w * c;
        }
        // cur <- cur (I + Q / lambda)
        let mut next = vec![0.0; cur.len()];
        for (gi, e) in exits.iter().enumerate() {
            let stay = 1.0 - e / lambda;
            for d in 0..width {
                next[gi * width + d] += stay * cur[gi * width + d];
            }
        }
        for &(from, to, k) in trans {
            for d in 0..width {
                let c = cur[from * width + d];
                if c == 0.0 {
                    continue;
                }
                let nd = if k == 0 { (d + 1).min(width - 1) } else { d };
                next[to * width + nd] += c / lambda;
            }
        }
        cur = next;
    }
    out
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Exact probability averaged over a random initial condition.
pub fn ctmc_exact_prob_random(ric: &RandomIc, obs: &ObservationSet) -> Result<f64> {
    let l = ric.params().l();
    let support = ric.support();
    let mut total = 0.0;
    for y in &support {
        total += ctmc_exact_prob(&InitialCondition::explicit(l, y.clone())?, obs)?;
    }
    Ok(total / support.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_single_particle() {
        let ic = InitialCondition::step(2, 1).unwrap();
        let obs = ObservationSet::single(1, 1.0, 1).unwrap();
        let p = ctmc_exact_prob(&ic, &obs).unwrap();
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn eligibility_bookkeeping() {
        let ic = InitialCondition::step(7, 3).unwrap();
        let mut s = RingState::new(&ic);
        let mut rng = trajectory_rng(3, 0);
        for step in 1..200 {
            s.simulate_to(step as f64 * 0.5, &mut rng);
            let x = s.positions();
            assert!(x.windows(2).all(|w| w[0] < w[1]) && x[2] < x[0] + 7);
            let expect: Vec<usize> = (0..3).filter(|&k| s.gap(k) >= 2).collect();
            let mut got = s.eligible.clone();
            got.sort();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn height_shift_identity() {
        let ic = InitialCondition::explicit(6, vec![-4, -1, 0]).unwrap();
        let mut s = RingState::new(&ic);
        s.simulate_to(3.0, &mut trajectory_rng(1, 2));
        let h = s.height_profile(-6, 6);
        for i in 0..7 {
            assert_eq!(h[i + 6] - h[i], 6 - 2 * 3);
        }
    }
}
