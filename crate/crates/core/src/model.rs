//! Ring parameters, initial conditions, observation sets, and the
//! height-function to particle-event dictionary.

use crate::error::{bail, Result};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Period `L` and particle count `N` of the ring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    l: usize,
    n: usize,
    rho: f64,
    r0: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "N")]
    n: usize,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = crate::Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.l, r.n)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { l: p.l, n: p.n }
    }
}

impl ModelParams {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        if n == 0 || n >= l {
            bail!(Parameter, "need 0 < N < L, got L={l}, N={n}");
        }
        let rho = n as f64 / l as f64;
        let r0 = (rho * rho.ln() + (1.0 - rho) * (1.0 - rho).ln()).exp();
        Ok(ModelParams { l, n, rho, r0 })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rho_exact(&self) -> Ratio<i64> {
        Ratio::new(self.n as i64, self.l as i64)
    }

    /// Critical radius `rho^rho (1-rho)^(1-rho)`.
    pub fn r0(&self) -> f64 {
        self.r0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IcKind {
    Explicit,
    Step,
    Flat { d: usize },
    Stepflat { d: usize, ls: usize },
}

/// A deterministic initial condition `Y` in `X_N(L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub y: Vec<i64>,
    #[serde(default = "explicit_kind", skip_serializing)]
    pub kind: IcKind,
}

fn explicit_kind() -> IcKind {
    IcKind::Explicit
}

/// Returns true when `y_1 < ... < y_N < y_1 + L`.
pub fn is_admissible(y: &[i64], l: usize) -> bool {
    !y.is_empty() && y.windows(2).all(|w| w[0] < w[1]) && y[y.len() - 1] < y[0] + l as i64
}

impl InitialCondition {
    pub fn step(l: usize, n: usize) -> Result<Self> {
        ModelParams::new(l, n)?;
        let y = (1..=n as i64).map(|i| i - n as i64).collect();
        Ok(Self::checked(l, n, y, IcKind::Step))
    }

    pub fn flat(n: usize, d: usize) -> Result<Self> {
        if d < 2 || n == 0 {
            bail!(Parameter, "flat initial condition needs d >= 2 and N >= 1, got d={d}, N={n}");
        }
        let y = (1..=n as i64).map(|i| (i - n as i64) * d as i64).collect();
        Ok(Self::checked(d * n, n, y, IcKind::Flat { d }))
    }

    pub fn stepflat(n: usize, d: usize, ls: usize) -> Result<Self> {
        if d < 2 || n == 0 {
            bail!(Parameter, "step-flat initial condition needs d >= 2 and N >= 1");
        }
        if ls == 0 {
            bail!(Parameter, "step-flat initial condition needs 0 < Ls < L, got Ls=0");
        }
        let y = (1..=n as i64).map(|i| (i - n as i64) * d as i64).collect();
        Ok(Self::checked(d * n + ls, n, y, IcKind::Stepflat { d, ls }))
    }

    /// Any admissible configuration; labels are kept as given.
    pub fn explicit(l: usize, y: Vec<i64>) -> Result<Self> {
        let n = y.len();
        ModelParams::new(l, n)?;
        if !is_admissible(&y, l) {
            bail!(Parameter, "Y={y:?} is not in X_N(L) for L={l}");
        }
        Ok(InitialCondition { l, n, y, kind: IcKind::Explicit })
    }

    fn checked(l: usize, n: usize, y: Vec<i64>, kind: IcKind) -> Self {
        assert!(is_admissible(&y, l), "constructor produced a configuration outside X_N(L)");
        InitialCondition { l, n, y, kind }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.l, self.n).expect("validated at construction")
    }

    /// Relabel so that `y_N <= 0 < y_1 + L`. Returns the relabelled condition
    /// and the label shift `s`: old particle `k` is new particle `k - s`.
    pub fn normalized(&self) -> (InitialCondition, i64) {
        let (n, l) = (self.n as i64, self.l as i64);
        // largest label K with x_K(0) <= 0 under x_{i+pN} = y_i + pL
        let kmax = self
            .y
            .iter()
            .enumerate()
            .map(|(i, &yi)| (i as i64 + 1) + n * ((-yi).div_euclid(l)))
            .max()
            .expect("nonempty");
        let shift = kmax - n;
        let y = (1..=n).map(|j| particle_position(&self.y, l, j + shift)).collect();
        let kind = if shift == 0 { self.kind } else { IcKind::Explicit };
        (InitialCondition { l: self.l, n: self.n, y, kind }, shift)
    }

    /// Occupation of site `j` at time zero.
    pub fn occupied(&self, j: i64) -> bool {
        let l = self.l as i64;
        self.y.iter().any(|&yi| (j - yi).rem_euclid(l) == 0)
    }
}

/// Position of label `k` (any integer) under `x_{k+N} = x_k + L`.
pub fn particle_position(x: &[i64], l: i64, k: i64) -> i64 {
    let n = x.len() as i64;
    let idx = (k - 1).rem_euclid(n);
    let wraps = (k - 1).div_euclid(n);
    x[idx as usize] + wraps * l
}

/// `lambda(Y) = (y_N, y_{N-1}+1, ..., y_1+N-1)`.
pub fn lambda_of(y: &[i64]) -> Vec<i64> {
    let n = y.len();
    (0..n).map(|j| y[n - 1 - j] + j as i64).collect()
}

/// Random initial-condition descriptors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RandomIc {
    /// `N` particles uniform over `{-L+1, ..., 0}`.
    Uniform {
        #[serde(rename = "L")]
        l: usize,
        #[serde(rename = "N")]
        n: usize,
    },
    /// `N1` uniform particles left of a deterministic block `Y` ending at 0.
    PartialUniform {
        #[serde(rename = "L")]
        l: usize,
        n1: usize,
        y: Vec<i64>,
    },
}

impl RandomIc {
    pub fn uniform(l: usize, n: usize) -> Result<Self> {
        ModelParams::new(l, n)?;
        Ok(RandomIc::Uniform { l, n })
    }

    pub fn partial_uniform(l: usize, n1: usize, y: Vec<i64>) -> Result<Self> {
        if y.is_empty() {
            bail!(Precondition, "partially uniform condition needs N2 >= 1");
        }
        if *y.last().unwrap() != 0 {
            bail!(Precondition, "partially uniform condition needs y_N2 = 0, got {:?}", y);
        }
        if !y.windows(2).all(|w| w[0] < w[1]) || y[0] < -(l as i64) + n1 as i64 + 1 {
            bail!(Precondition, "need -L+N1+1 <= y_1 < ... < y_N2 = 0");
        }
        ModelParams::new(l, n1 + y.len())?;
        Ok(RandomIc::PartialUniform { l, n1, y })
    }

    pub fn params(&self) -> ModelParams {
        match self {
            RandomIc::Uniform { l, n } => ModelParams::new(*l, *n),
            RandomIc::PartialUniform { l, n1, y } => ModelParams::new(*l, n1 + y.len()),
        }
        .expect("validated at construction")
    }

    /// Every configuration in the support, each equally likely.
    pub fn support(&self) -> Vec<Vec<i64>> {
        match self {
            RandomIc::Uniform { l, n } => subsets(-(*l as i64) + 1, 0, *n),
            RandomIc::PartialUniform { l, n1, y } => subsets(-(*l as i64) + 1, y[0] - 1, *n1)
                .into_iter()
                .map(|mut s| {
                    s.extend_from_slice(y);
                    s
                })
                .collect(),
        }
    }
}

/// All increasing `k`-subsets of `lo..=hi`.
pub fn subsets(lo: i64, hi: i64, k: usize) -> Vec<Vec<i64>> {
    fn rec(start: i64, hi: i64, k: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        let mut s = start;
        while s + k as i64 - 1 <= hi {
            cur.push(s);
            rec(s + 1, hi, k - 1, cur, out);
            cur.pop();
            s += 1;
        }
    }
    let mut out = vec![];
    rec(lo, hi, k, &mut vec![], &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsPoint {
    pub k: i64,
    pub t: f64,
    pub a: i64,
}

/// The event `x_{k_l}(t_l) >= a_l` for all `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ObsPoint>", into = "Vec<ObsPoint>")]
pub struct ObservationSet {
    points: Vec<ObsPoint>,
}

impl TryFrom<Vec<ObsPoint>> for ObservationSet {
    type Error = crate::Error;
    fn try_from(p: Vec<ObsPoint>) -> Result<Self> {
        ObservationSet::new(p)
    }
}

impl From<ObservationSet> for Vec<ObsPoint> {
    fn from(o: ObservationSet) -> Self {
        o.points
    }
}

impl ObservationSet {
    pub fn new(points: Vec<ObsPoint>) -> Result<Self> {
        if points.is_empty() {
            bail!(Parameter, "observation set needs m >= 1 points");
        }
        for p in &points {
            if !(p.t >= 0.0) || !p.t.is_finite() {
                bail!(Parameter, "observation times must be finite and nonnegative, got {}", p.t);
            }
        }
        if !points.windows(2).all(|w| w[0].t <= w[1].t) {
            bail!(Parameter, "observation times must be nondecreasing");
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i].k == points[j].k && points[i].t == points[j].t {
                    bail!(Parameter, "observation points must be distinct as (k,t) pairs");
                }
            }
        }
        Ok(ObservationSet { points })
    }

    pub fn single(k: i64, t: f64, a: i64) -> Result<Self> {
        Self::new(vec![ObsPoint { k, t, a }])
    }

    pub fn points(&self) -> &[ObsPoint] {
        &self.points
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn shift_k(&self, dk: i64) -> Self {
        ObservationSet { points: self.points.iter().map(|p| ObsPoint { k: p.k + dk, ..*p }).collect() }
    }

    pub fn shift_a(&self, da: i64) -> Self {
        ObservationSet { points: self.points.iter().map(|p| ObsPoint { a: p.a + da, ..*p }).collect() }
    }

    /// Requires strictly positive times, as the contour formulas do.
    pub fn require_positive_times(&self) -> Result<()> {
        if self.points.iter().any(|p| p.t <= 0.0) {
            bail!(Precondition, "contour formulas require t > 0 at every observation point");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPoint {
    pub gamma: f64,
    pub tau: f64,
    pub x: f64,
}

/// Relaxation-scale coordinates `(gamma_j, tau_j, x_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LimitPoint>", into = "Vec<LimitPoint>")]
pub struct LimitCoordinates {
    points: Vec<LimitPoint>,
}

impl TryFrom<Vec<LimitPoint>> for LimitCoordinates {
    type Error = crate::Error;
    fn try_from(p: Vec<LimitPoint>) -> Result<Self> {
        LimitCoordinates::new(p)
    }
}

impl From<LimitCoordinates> for Vec<LimitPoint> {
    fn from(c: LimitCoordinates) -> Self {
        c.points
    }
}

impl LimitCoordinates {
    pub fn new(points: Vec<LimitPoint>) -> Result<Self> {
        if points.is_empty() {
            bail!(Parameter, "limit coordinates need m >= 1 points");
        }
        for p in &points {
            if !(p.tau > 0.0) {
                bail!(Parameter, "tau must be positive, got {}", p.tau);
            }
            if !(0.0..=1.0).contains(&p.gamma) {
                bail!(Parameter, "gamma must lie in [0,1], got {}", p.gamma);
            }
            if !p.x.is_finite() {
                bail!(Parameter, "x must be finite");
            }
        }
        for w in points.windows(2) {
            if w[0].tau > w[1].tau || (w[0].tau == w[1].tau && w[0].x >= w[1].x) {
                bail!(Parameter, "need tau nondecreasing, and x increasing where tau repeats");
            }
        }
        Ok(LimitCoordinates { points })
    }

    pub fn single(gamma: f64, tau: f64, x: f64) -> Result<Self> {
        Self::new(vec![LimitPoint { gamma, tau, x }])
    }

    pub fn points(&self) -> &[LimitPoint] {
        &self.points
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn shift_x(&self, dx: f64) -> Self {
        LimitCoordinates { points: self.points.iter().map(|p| LimitPoint { x: p.x + dx, ..*p }).collect() }
    }

    /// True when two consecutive times coincide, which is outside the
    /// regime the limit theorem covers without extra tail assumptions.
    pub fn has_equal_times(&self) -> bool {
        self.points.windows(2).any(|w| w[0].tau == w[1].tau)
    }
}

/// Height `h(ell, 0)` of the initial profile, with `J_0(0) = 0`.
pub fn initial_height(ic: &InitialCondition, ell: i64) -> i64 {
    let step = |j: i64| if ic.occupied(j) { -1 } else { 1 };
    if ell >= 0 {
        (1..=ell).map(step).sum()
    } else {
        -(ell + 1..=0).map(step).sum::<i64>()
    }
}

/// Map `{h(ell,t) >= b}` to `{x_k(t) >= a}`.
pub fn height_event_to_particle_event(ell: i64, b: i64, ic: &InitialCondition) -> Result<(i64, i64)> {
    if (b - ell).rem_euclid(2) != 0 {
        bail!(Domain, "b - ell must be even, got ell={ell}, b={b}");
    }
    let h0 = initial_height(ic, ell);
    if b < h0 {
        bail!(Domain, "b={b} lies below the initial height h({ell},0)={h0}");
    }
    let big_k = label_at_origin(ic);
    Ok((big_k - (b - ell) / 2 + 1, ell + 1))
}

/// The label `K` with `x_K(0) <= 0 < x_{K+1}(0)`.
pub fn label_at_origin(ic: &InitialCondition) -> i64 {
    let (n, l) = (ic.n as i64, ic.l as i64);
    ic.y.iter()
        .enumerate()
        .map(|(i, &yi)| (i as i64 + 1) + n * ((-yi).div_euclid(l)))
        .max()
        .expect("nonempty")
}

/// Translate relaxation-scale coordinates into particle thresholds for the
/// labelling `y_N <= 0 < y_1 + L`. Labels are then brought into `1..=N` with
/// the exact symmetry `(a, k) -> (a + L, k + N)`.
pub fn scaled_params(coords: &LimitCoordinates, params: &ModelParams) -> Result<ObservationSet> {
    let (l, n, rho) = (params.l() as f64, params.n() as i64, params.rho());
    let sig = (rho * (1.0 - rho)).sqrt();
    let mut pts = Vec::with_capacity(coords.m());
    for p in coords.points() {
        let t = p.tau * l.powf(1.5) / sig;
        let s = p.gamma * l;
        let ell_real = s + (1.0 - 2.0 * rho) * t;
        let b = ((1.0 - 2.0 * rho) * s + (1.0 - 2.0 * rho + 2.0 * rho * rho) * t - 2.0 * p.x * sig * l.sqrt()).round() as i64;
        let mut ell = ell_real.round() as i64;
        if (b - ell).rem_euclid(2) != 0 {
            ell += if ell_real >= ell as f64 { 1 } else { -1 };
        }
        let k = n - (b - ell) / 2 + 1;
        let a = ell + 1;
        let wraps = (k - 1).div_euclid(n);
        pts.push(ObsPoint { k: k - wraps * n, t, a: a - wraps * params.l() as i64 });
    }
    ObservationSet::new(pts)
}
