//! Concrete Gibbs-Markov systems.
//!
//! Two families are supported:
//!
//! * the Gauss map `T(x) = 1/x − ⌊1/x⌋` on (0, 1) with the Gauss measure
//!   `dμ = dx / ((1 + x) ln 2)` and partition elements `a_k = (1/(k+1), 1/k]`,
//!   so that the symbol of `x` is `⌊1/x⌋`;
//! * one-sided Markov shifts over a finite alphabet, realized directly as
//!   symbol streams.
//!
//! Gauss-map orbits are computed in `f64`. Each step loses roughly
//! `2·log2(k)` bits, so long orbits are only meaningful for measure-level
//! statistics, which is how every consumer in this crate uses them.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams::{self, StreamRng};

/// Metric base for the Gauss map (`|(T²)'| ≥ 9/4`).
pub const GAUSS_R: f64 = 2.0 / 3.0;

/// Default metric base for Markov shifts.
pub const MARKOV_R: f64 = 0.5;

/// Default truncation of the Gauss-map alphabet.
pub const DEFAULT_K_MAX: usize = 100_000;

/// A point handed to an observable. Markov-shift points are the remaining
/// symbol stream; observables read a finite prefix of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point<'a> {
    Real(f64),
    Symbols(&'a [usize]),
}

impl<'a> Point<'a> {
    pub fn real(self) -> f64 {
        match self {
            Point::Real(x) => x,
            Point::Symbols(_) => panic!("expected a real phase point"),
        }
    }

    pub fn symbols(self) -> &'a [usize] {
        match self {
            Point::Symbols(s) => s,
            Point::Real(_) => panic!("expected a symbolic phase point"),
        }
    }
}

/// A μ-distributed starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPoint {
    Real(f64),
    State(usize),
}

/// A finite stretch of an orbit.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Real(Vec<f64>),
    /// Symbol stream; it carries `lookahead` symbols beyond the last
    /// addressable time so that observables with a finite window can be
    /// evaluated at every time.
    Symbols { symbols: Vec<usize>, len: usize },
}

impl Trajectory {
    pub fn len(&self) -> usize {
        match self {
            Trajectory::Real(v) => v.len(),
            Trajectory::Symbols { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The point `T^j x`.
    pub fn point(&self, j: usize) -> Point<'_> {
        match self {
            Trajectory::Real(v) => Point::Real(v[j]),
            Trajectory::Symbols { symbols, .. } => Point::Symbols(&symbols[j..]),
        }
    }
}

/// Sequence of partition indices visited by an orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicItinerary {
    pub symbols: Vec<usize>,
}

impl SymbolicItinerary {
    pub fn depth(&self) -> usize {
        self.symbols.len()
    }
}

/// Row-stochastic transition matrix with its stationary vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    labels: Vec<String>,
    cumulative: Vec<Vec<f64>>,
    stationary_cumulative: Vec<f64>,
}

impl MarkovChain {
    /// Validates `p` and computes (or validates) the stationary vector.
    pub fn new(p: Vec<Vec<f64>>, labels: Option<Vec<String>>, pi: Option<Vec<f64>>) -> Result<Self> {
        let s = p.len();
        if s < 2 {
            return Err(Error::Config("a Markov shift needs at least two states".into()));
        }
        for (i, row) in p.iter().enumerate() {
            if row.len() != s {
                return Err(Error::Config(format!("row {i} has {} entries, expected {s}", row.len())));
            }
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Config(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("row {i} sums to {sum}, not 1")));
            }
        }
        let labels = match labels {
            Some(l) if l.len() != s => {
                return Err(Error::Config(format!("{} labels for {s} states", l.len())));
            }
            Some(l) => l,
            None => (0..s).map(|i| i.to_string()).collect(),
        };
        let stationary = match pi {
            Some(pi) => {
                if pi.len() != s {
                    return Err(Error::Config(format!("stationary vector has {} entries", pi.len())));
                }
                pi
            }
            None => stationary_vector(&p)?,
        };
        let total: f64 = stationary.iter().sum();
        if stationary.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::Config("stationary vector is not a probability vector".into()));
        }
        for j in 0..s {
            let pj: f64 = (0..s).map(|i| stationary[i] * p[i][j]).sum();
            if (pj - stationary[j]).abs() > 1e-10 {
                return Err(Error::Config(format!("πP ≠ π at state {j} ({pj} vs {})", stationary[j])));
            }
        }
        let cumulative = p.iter().map(|row| cumsum(row)).collect();
        let stationary_cumulative = cumsum(&stationary);
        Ok(Self { transition: p, stationary, labels, cumulative, stationary_cumulative })
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn draw_stationary(&self, rng: &mut StreamRng) -> usize {
        pick(&self.stationary_cumulative, rng.gen())
    }

    fn step(&self, state: usize, rng: &mut StreamRng) -> usize {
        pick(&self.cumulative[state], rng.gen())
    }
}

fn cumsum(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or_else(|| {
            // u landed in the rounding slack of the last entry
            cumulative.iter().rposition(|&c| c > 0.0).unwrap_or(cumulative.len() - 1)
        })
}

fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let s = p.len();
    let mut a = DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            a[(i, j)] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..s {
        a[(s - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(s);
    b[s - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Config("transition matrix has no unique stationary vector".into()))?;
    Ok(x.iter().map(|&v| if v.abs() < 1e-15 { 0.0 } else { v }).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    GaussMap,
    MarkovShift(MarkovChain),
}

/// A measure-preserving Gibbs-Markov map together with its metric base `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsMarkovSystem {
    kind: SystemKind,
    r: f64,
}

/// JSON description of a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    Gauss {},
    Markov {
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pi: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
    },
}

impl GibbsMarkovSystem {
    pub fn gauss() -> Self {
        Self { kind: SystemKind::GaussMap, r: GAUSS_R }
    }

    pub fn markov(chain: MarkovChain) -> Self {
        Self { kind: SystemKind::MarkovShift(chain), r: MARKOV_R }
    }

    /// Full two-shift with fair coin transitions.
    pub fn bernoulli_half() -> Self {
        Self::markov(MarkovChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], None, None).unwrap())
    }

    pub fn with_r(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Config(format!("metric base r = {r} is not in (0, 1)")));
        }
        if matches!(self.kind, SystemKind::GaussMap) && r != GAUSS_R {
            return Err(Error::Config("the Gauss map uses r = 2/3".into()));
        }
        self.r = r;
        Ok(self)
    }

    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        match config {
            SystemConfig::Gauss {} => Ok(Self::gauss()),
            SystemConfig::Markov { p, labels, pi, r } => {
                let sys = Self::markov(MarkovChain::new(p.clone(), labels.clone(), pi.clone())?);
                match r {
                    Some(r) => sys.with_r(*r),
                    None => Ok(sys),
                }
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: SystemConfig = serde_json::from_str(text)?;
        Self::from_config(&config)
    }

    pub fn to_config(&self) -> SystemConfig {
        match &self.kind {
            SystemKind::GaussMap => SystemConfig::Gauss {},
            SystemKind::MarkovShift(c) => SystemConfig::Markov {
                p: c.transition.clone(),
                labels: Some(c.labels.clone()),
                pi: Some(c.stationary.clone()),
                r: Some(self.r),
            },
        }
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn is_gauss(&self) -> bool {
        matches!(self.kind, SystemKind::GaussMap)
    }

    pub fn chain(&self) -> Option<&MarkovChain> {
        match &self.kind {
            SystemKind::MarkovShift(c) => Some(c),
            SystemKind::GaussMap => None,
        }
    }

    /// Number of inverse branches over a point; the Gauss count is the
    /// truncated alphabet size.
    pub fn branch_count(&self) -> usize {
        match &self.kind {
            SystemKind::GaussMap => DEFAULT_K_MAX,
            SystemKind::MarkovShift(c) => c.states(),
        }
    }

    /// One application of the map. On a Markov shift this drops the first
    /// symbol; orbits of the shift come from [`Self::sample_trajectory`].
    pub fn apply_map<'a>(&self, x: Point<'a>) -> Result<Point<'a>> {
        match (&self.kind, x) {
            (SystemKind::GaussMap, Point::Real(x)) => gauss_step(x).map(Point::Real),
            (SystemKind::MarkovShift(c), Point::Symbols(s)) => {
                if s.len() < 2 {
                    return Err(Error::Domain("symbol stream exhausted".into()));
                }
                if s[0] >= c.states() {
                    return Err(Error::Index(s[0]));
                }
                Ok(Point::Symbols(&s[1..]))
            }
            _ => Err(Error::Domain("point does not match the system".into())),
        }
    }

    /// Partition index of a point.
    pub fn symbol(&self, x: Point<'_>) -> Result<usize> {
        match (&self.kind, x) {
            (SystemKind::GaussMap, Point::Real(x)) => gauss_digit(x),
            (SystemKind::MarkovShift(c), Point::Symbols(s)) => match s.first() {
                Some(&k) if k < c.states() => Ok(k),
                Some(&k) => Err(Error::Index(k)),
                None => Err(Error::Domain("empty symbol stream".into())),
            },
            _ => Err(Error::Domain("point does not match the system".into())),
        }
    }

    pub fn itinerary(&self, x: Point<'_>, depth: usize) -> Result<SymbolicItinerary> {
        if depth == 0 {
            return Err(Error::Config("itinerary depth must be at least 1".into()));
        }
        let mut symbols = Vec::with_capacity(depth);
        let mut p = x;
        for j in 0..depth {
            symbols.push(self.symbol(p)?);
            if j + 1 < depth {
                p = self.apply_map(p)?;
            }
        }
        Ok(SymbolicItinerary { symbols })
    }

    /// `r^{s(x,y)}`, or 0 when the itineraries agree through `max_depth`.
    pub fn separation_metric(&self, x: Point<'_>, y: Point<'_>, max_depth: usize) -> Result<f64> {
        if max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(match self.separation_time(x, y, max_depth)? {
            Some(s) => self.r.powi(s as i32),
            None => 0.0,
        })
    }

    /// `s(x, y) = min{n + 1 : T^n x, T^n y in different elements}`, if it is
    /// at most `max_depth`.
    pub fn separation_time(&self, x: Point<'_>, y: Point<'_>, max_depth: usize) -> Result<Option<usize>> {
        let (mut px, mut py) = (x, y);
        for n in 0..max_depth {
            if px == py {
                return Ok(None);
            }
            if self.symbol(px)? != self.symbol(py)? {
                return Ok(Some(n + 1));
            }
            if n + 1 < max_depth {
                px = self.apply_map(px)?;
                py = self.apply_map(py)?;
            }
        }
        Ok(None)
    }

    /// μ(a_k).
    pub fn cylinder_measure(&self, k: usize) -> Result<f64> {
        match &self.kind {
            SystemKind::GaussMap => gauss_cylinder_measure(k),
            SystemKind::MarkovShift(c) => c.stationary.get(k).copied().ok_or(Error::Index(k)),
        }
    }

    /// One μ-distributed starting point.
    pub fn draw_initial(&self, rng: &mut StreamRng) -> InitialPoint {
        match &self.kind {
            SystemKind::GaussMap => InitialPoint::Real(draw_gauss(rng)),
            SystemKind::MarkovShift(c) => InitialPoint::State(c.draw_stationary(rng)),
        }
    }

    /// i.i.d. draws from μ; sample `i` uses stream `i` of `seed`.
    pub fn sample_invariant(&self, n_samples: usize, seed: u64) -> Vec<InitialPoint> {
        streams::par_samples(seed, n_samples, |_, rng| self.draw_initial(rng))
    }

    /// A μ-typical orbit stretch of `len` points. Symbolic trajectories carry
    /// `lookahead` extra symbols.
    pub fn sample_trajectory(&self, len: usize, lookahead: usize, rng: &mut StreamRng) -> Trajectory {
        let start = self.draw_initial(rng);
        self.trajectory_from(start, len, lookahead, rng)
    }

    /// Continues from `start`. Randomness is consumed only by the Markov
    /// transitions and by the rare Gauss re-draw after an orbit lands on 0.
    pub fn trajectory_from(
        &self,
        start: InitialPoint,
        len: usize,
        lookahead: usize,
        rng: &mut StreamRng,
    ) -> Trajectory {
        match (&self.kind, start) {
            (SystemKind::GaussMap, InitialPoint::Real(x0)) => {
                let mut v = Vec::with_capacity(len);
                let mut x = x0;
                for _ in 0..len {
                    v.push(x);
                    x = gauss_orbit_step(x, rng);
                }
                Trajectory::Real(v)
            }
            (SystemKind::MarkovShift(c), InitialPoint::State(s0)) => {
                let total = len + lookahead;
                let mut v = Vec::with_capacity(total);
                let mut s = s0;
                for j in 0..total {
                    v.push(s);
                    if j + 1 < total {
                        s = c.step(s, rng);
                    }
                }
                Trajectory::Symbols { symbols: v, len }
            }
            _ => panic!("initial point does not match the system"),
        }
    }

    /// Empirical max of `|v_k'(x)/v_k'(y) − 1| / r(x,y)` over sampled pairs,
    /// for the depth-one Gauss branches `v_k(x) = 1/(k + x)`. Pairs are drawn
    /// both globally and inside random cylinders around `x`.
    pub fn distortion_max(&self, n_pairs: usize, seed: u64) -> Result<f64> {
        if !self.is_gauss() {
            return Err(Error::Config("distortion probe is implemented for the Gauss map".into()));
        }
        let ratios = streams::par_samples(seed, n_pairs, |i, rng| -> Result<f64> {
            let x = draw_gauss(rng);
            let y = if i % 2 == 0 {
                draw_gauss(rng)
            } else {
                let depth = 1 + (rng.gen::<f64>() * 6.0) as usize;
                let prefix = self.itinerary(Point::Real(x), depth)?.symbols;
                gauss_branch(&prefix, draw_gauss(rng))
            };
            let k = if i % 3 == 0 { 1 } else { gauss_digit(draw_gauss(rng))? } as f64;
            let dist = self.separation_metric(Point::Real(x), Point::Real(y), 60)?;
            if dist == 0.0 {
                return Ok(0.0);
            }
            let ratio = ((k + y) / (k + x)).powi(2);
            Ok((ratio - 1.0).abs() / dist)
        });
        let mut max = 0.0f64;
        for r in ratios {
            max = max.max(r?);
        }
        Ok(max)
    }
}

/// `T(x) = 1/x − ⌊1/x⌋`.
pub fn gauss_step(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("Gauss map is undefined at {x}")));
    }
    let y = 1.0 / x;
    Ok(y - y.floor())
}

/// `⌊1/x⌋`, the index k of the element `(1/(k+1), 1/k]` containing x.
pub fn gauss_digit(x: f64) -> Result<usize> {
    if !(x > 0.0 && x < 1.0) && x != 1.0 {
        return Err(Error::Domain(format!("no Gauss digit at {x}")));
    }
    Ok((1.0 / x).floor() as usize)
}

/// `μ(a_k) = log2(1 + 1/(k(k+2)))`.
pub fn gauss_cylinder_measure(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Index(k));
    }
    let k = k as f64;
    Ok((1.0 / (k * (k + 2.0))).ln_1p() / std::f64::consts::LN_2)
}

/// Gauss measure of [a, b] ⊂ [0, 1].
pub fn gauss_interval_measure(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    ((b - a) / (1.0 + a)).ln_1p() / std::f64::consts::LN_2
}

/// Density of the Gauss measure.
pub fn gauss_density(x: f64) -> f64 {
    1.0 / ((1.0 + x) * std::f64::consts::LN_2)
}

/// Inverse-CDF draw `x = 2^u − 1`, re-drawn when it lands on 0.
pub fn draw_gauss(rng: &mut StreamRng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        let x = (u * std::f64::consts::LN_2).exp_m1();
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

fn gauss_orbit_step(x: f64, rng: &mut StreamRng) -> f64 {
    let y = 1.0 / x;
    let t = y - y.floor();
    if t > 0.0 && t < 1.0 {
        t
    } else {
        // a floating-point orbit hit a rational endpoint; restart from μ
        draw_gauss(rng)
    }
}

/// Inverse branch `v_w(t) = [0; w_1, …, w_d + t]` for the digit word `w`.
pub fn gauss_branch(word: &[usize], t: f64) -> f64 {
    let (p, q, p_prev, q_prev) = continuants(word);
    (p + t * p_prev) / (q + t * q_prev)
}

/// Endpoints of the depth-`d` cylinder with digit word `w`.
pub fn gauss_cylinder(word: &[usize]) -> (f64, f64) {
    let a = gauss_branch(word, 0.0);
    let b = gauss_branch(word, 1.0);
    (a.min(b), a.max(b))
}

fn continuants(word: &[usize]) -> (f64, f64, f64, f64) {
    let (mut p_prev, mut q_prev) = (1.0, 0.0);
    let (mut p, mut q) = (0.0, 1.0);
    for &k in word {
        let k = k as f64;
        let pn = k * p + p_prev;
        let qn = k * q + q_prev;
        p_prev = p;
        q_prev = q;
        p = pn;
        q = qn;
    }
    (p, q, p_prev, q_prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> GibbsMarkovSystem {
        GibbsMarkovSystem::markov(MarkovChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None, None).unwrap())
    }

    #[test]
    fn gauss_map_examples() {
        let g = GibbsMarkovSystem::gauss();
        assert_eq!(g.apply_map(Point::Real(0.4)).unwrap(), Point::Real(0.5));
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let tx = g.apply_map(Point::Real(phi)).unwrap().real();
        assert!((tx - (1.0 / phi - 1.0)).abs() < 1e-15);
        assert!((tx - phi).abs() < 1e-15);
        assert!(matches!(g.apply_map(Point::Real(0.0)), Err(Error::Domain(_))));
        assert!(matches!(g.apply_map(Point::Real(1.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn itinerary_examples() {
        let g = GibbsMarkovSystem::gauss();
        assert_eq!(g.itinerary(Point::Real(0.4), 2).unwrap().symbols, vec![2, 2]);
        let s = 2f64.sqrt() - 1.0;
        assert_eq!(g.itinerary(Point::Real(s), 3).unwrap().symbols, vec![2, 2, 2]);
        assert!(g.itinerary(Point::Real(0.4), 0).is_err());
    }

    #[test]
    fn separation_metric_examples() {
        let g = GibbsMarkovSystem::gauss();
        let d = g.separation_metric(Point::Real(0.4), Point::Real(0.45), 10).unwrap();
        assert!((d - 4.0 / 9.0).abs() < 1e-15);
        let d = g.separation_metric(Point::Real(0.4), Point::Real(0.7), 10).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.separation_metric(Point::Real(0.3), Point::Real(0.3), 10).unwrap(), 0.0);
    }

    #[test]
    fn inverse_cdf_sampling_values() {
        // u = 0.5 maps to √2 − 1
        let x = (0.5 * std::f64::consts::LN_2).exp_m1();
        assert!((x - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!((0.0f64 * std::f64::consts::LN_2).exp_m1(), 0.0);
    }

    #[test]
    fn cylinder_measures() {
        let g = GibbsMarkovSystem::gauss();
        assert!((g.cylinder_measure(1).unwrap() - (4.0f64 / 3.0).log2()).abs() < 1e-15);
        assert!(matches!(g.cylinder_measure(0), Err(Error::Index(0))));
        let m = GibbsMarkovSystem::markov(
            MarkovChain::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]], None, None).unwrap(),
        );
        assert!((m.cylinder_measure(0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(m.cylinder_measure(2), Err(Error::Index(2))));
    }

    #[test]
    fn markov_validation() {
        assert!(MarkovChain::new(vec![vec![0.9, 0.2], vec![0.2, 0.8]], None, None).is_err());
        assert!(MarkovChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], None, Some(vec![0.3, 0.7])).is_err());
        let c = MarkovChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None, None).unwrap();
        assert!((c.stationary()[0] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        let sys = GibbsMarkovSystem::from_json(r#"{"kind":"markov","P":[[0.9,0.1],[0.2,0.8]],"labels":["a","b"]}"#)
            .unwrap();
        assert_eq!(sys.chain().unwrap().labels(), &["a".to_string(), "b".to_string()]);
        assert!(GibbsMarkovSystem::from_json(r#"{"kind":"gauss","extra":1}"#).is_err());
        assert!(GibbsMarkovSystem::from_json(r#"{"kind":"markov","P":[[1.0]],"bogus":2}"#).is_err());
        assert!(GibbsMarkovSystem::from_json(r#"{"kind":"gauss"}"#).unwrap().is_gauss());
    }

    #[test]
    fn branch_word_inverts_itinerary() {
        let g = GibbsMarkovSystem::gauss();
        let x = gauss_branch(&[3, 1, 4], 0.25);
        assert_eq!(g.itinerary(Point::Real(x), 3).unwrap().symbols, vec![3, 1, 4]);
        let (a, b) = gauss_cylinder(&[2]);
        assert!((a - 1.0 / 3.0).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn markov_trajectory_has_lookahead() {
        let m = two_state();
        let mut rng = streams::stream(1, 0);
        let t = m.sample_trajectory(10, 3, &mut rng);
        assert_eq!(t.len(), 10);
        assert_eq!(t.point(9).symbols().len(), 4);
    }

    #[test]
    fn markov_shift_map_drops_a_symbol() {
        let m = two_state();
        let s = [0usize, 1, 1];
        assert_eq!(m.apply_map(Point::Symbols(&s)).unwrap(), Point::Symbols(&s[1..]));
        assert!(m.apply_map(Point::Symbols(&s[2..])).is_err());
        assert_eq!(m.itinerary(Point::Symbols(&s), 3).unwrap().symbols, vec![0, 1, 1]);
    }
}
