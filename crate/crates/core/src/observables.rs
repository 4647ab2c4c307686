//! Observables on Gibbs-Markov systems.
//!
//! An [`Observable`] wraps a thread-safe evaluator together with cached
//! metadata: its μ-mean (when known), a sup-norm bound, and Hölder estimates
//! per cylinder depth.
//!
//! Gauss-map observables accept either a real point or a continued-fraction
//! digit word ([`Point::Symbols`]). Digit words make deep cylinders exact,
//! which the Hölder estimator relies on: a depth-13 cylinder is already below
//! `f64` resolution for typical digits.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::streams::{self, StreamRng};
use crate::systems::{self, GibbsMarkovSystem, Point, SystemKind, Trajectory};

pub type Evaluator = Arc<dyn for<'a> Fn(Point<'a>) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Observable {
    eval: Evaluator,
    label: String,
    window: usize,
    mean: Option<f64>,
    sup_norm: f64,
    holder: BTreeMap<usize, f64>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("window", &self.window)
            .field("mean", &self.mean)
            .field("sup_norm", &self.sup_norm)
            .field("holder", &self.holder)
            .finish()
    }
}

/// Real coordinate of a Gauss-map point; digit words are read as the finite
/// continued fraction `[0; d_1, …, d_n]`.
pub fn gauss_coordinate(p: Point<'_>) -> f64 {
    match p {
        Point::Real(x) => x,
        Point::Symbols(ds) => systems::gauss_branch(ds, 0.0),
    }
}

/// Symbol at position `j` of the itinerary of `p`. Real points are stepped
/// with the Gauss map; 0 signals an orbit that left (0, 1).
pub fn symbol_at(p: Point<'_>, j: usize) -> usize {
    match p {
        Point::Symbols(s) => s.get(j).copied().unwrap_or(0),
        Point::Real(mut x) => {
            for _ in 0..j {
                match systems::gauss_step(x) {
                    Ok(t) => x = t,
                    Err(_) => return 0,
                }
            }
            systems::gauss_digit(x).unwrap_or(0)
        }
    }
}

impl Observable {
    /// `window` is the number of leading symbols the evaluator reads on a
    /// symbolic point.
    pub fn new<F>(label: impl Into<String>, window: usize, sup_norm: f64, f: F) -> Self
    where
        F: for<'a> Fn(Point<'a>) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            label: label.into(),
            window,
            mean: None,
            sup_norm,
            holder: BTreeMap::new(),
        }
    }

    /// A function of the Gauss-map coordinate.
    pub fn real<F>(label: impl Into<String>, sup_norm: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(label, 24, sup_norm, move |p| f(gauss_coordinate(p)))
    }

    pub fn constant(c: f64) -> Self {
        let mut o = Self::new(format!("const:{c}"), 0, c.abs(), move |_| c);
        o.mean = Some(c);
        o
    }

    /// `f(x) = x` on the Gauss map.
    pub fn identity() -> Self {
        Self::real("identity", 1.0, |x| x)
    }

    /// Indicator of the partition element `a_k` (Gauss digit k, or Markov state k).
    pub fn indicator(k: usize) -> Self {
        Self::new(format!("indicator:{k}"), 1, 1.0, move |p| {
            if symbol_at(p, 0) == k {
                1.0
            } else {
                0.0
            }
        })
    }

    /// `f(s) = values[s_0]` on a Markov shift.
    pub fn state_function(values: Vec<f64>) -> Self {
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self::new("state-function", 1, sup, move |p| values[p.symbols()[0]])
    }

    /// Function of the first `depth` symbols; `table` is indexed by the word
    /// read in base `states`, first symbol most significant.
    pub fn word_function(states: usize, depth: usize, table: Vec<f64>) -> Result<Self> {
        if table.len() != states.pow(depth as u32) {
            return Err(Error::GridMismatch { expected: states.pow(depth as u32), got: table.len() });
        }
        let sup = table.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self::new("word-function", depth, sup, move |p| {
            let s = p.symbols();
            let idx = s[..depth].iter().fold(0usize, |acc, &c| acc * states + c);
            table[idx]
        }))
    }

    /// `φ∘T − φ`.
    pub fn coboundary(phi: &Observable) -> Self {
        let inner = phi.eval.clone();
        let mut o = Self::new(
            format!("coboundary({})", phi.label),
            phi.window + 1,
            2.0 * phi.sup_norm,
            move |p| match p {
                Point::Real(x) => match systems::gauss_step(x) {
                    Ok(tx) => inner(Point::Real(tx)) - inner(p),
                    Err(_) => 0.0,
                },
                Point::Symbols(s) => inner(Point::Symbols(&s[1..])) - inner(p),
            },
        );
        o.mean = Some(0.0);
        o
    }

    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        let mut o = Self::new(format!("{c}*{}", self.label), self.window, c.abs() * self.sup_norm, move |p| {
            c * inner(p)
        });
        o.mean = self.mean.map(|m| c * m);
        o
    }

    pub fn plus(&self, other: &Observable) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let mut o = Self::new(
            format!("{}+{}", self.label, other.label),
            self.window.max(other.window),
            self.sup_norm + other.sup_norm,
            move |p| a(p) + b(p),
        );
        o.mean = match (self.mean, other.mean) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        };
        o
    }

    pub fn eval(&self, p: Point<'_>) -> f64 {
        (self.eval)(p)
    }

    pub fn at(&self, traj: &Trajectory, j: usize) -> f64 {
        (self.eval)(traj.point(j))
    }

    /// `Σ_{j=start}^{start+len−1} f(T^j x)` along a trajectory.
    pub fn birkhoff_sum(&self, traj: &Trajectory, start: usize, len: usize) -> f64 {
        (start..start + len).map(|j| self.at(traj, j)).sum()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn mean(&self) -> Option<f64> {
        self.mean
    }

    /// Records a known mean.
    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = Some(mean);
        self
    }

    pub fn is_centered(&self) -> bool {
        matches!(self.mean, Some(m) if m.abs() < 1e-8)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn with_sup_norm(mut self, sup: f64) -> Self {
        self.sup_norm = sup;
        self
    }

    pub fn holder_estimates(&self) -> &BTreeMap<usize, f64> {
        &self.holder
    }

    pub fn with_holder(mut self, depth: usize, estimate: f64) -> Self {
        self.holder.insert(depth, estimate);
        self
    }
}

/// Breakpoints `1/k` for `k ≤ 2048` with geometric refinement towards 0.
fn gauss_breaks(extra: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = (1..=2048).map(|k| 1.0 / k as f64).collect();
    let mut z = 1.0 / 2048.0;
    while z > 1e-12 {
        z *= 0.25;
        b.push(z);
    }
    b.push(0.0);
    b.extend(extra.iter().copied().filter(|x| (0.0..=1.0).contains(x)));
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup();
    b
}

/// `∫ f dμ` for the Gauss measure by composite Gauss-Legendre quadrature.
/// Discontinuities of `f` beyond the digit boundaries go in `extra_breaks`.
pub fn gauss_integral<F: Fn(f64) -> f64>(f: F, extra_breaks: &[f64]) -> f64 {
    let gl = GaussLegendre::new(10);
    gl.integrate_pieces(&gauss_breaks(extra_breaks), |x| f(x) * systems::gauss_density(x))
}

/// Exact stationary average of a function of the first `depth` symbols.
fn markov_integral(sys: &GibbsMarkovSystem, f: &Observable) -> Result<f64> {
    let chain = sys.chain().expect("markov system");
    let s = chain.states();
    let depth = f.window.max(1);
    if (s as f64).powi(depth as i32) > 4.0e6 {
        return Err(Error::Config(format!("window {depth} too large for exact averaging")));
    }
    let p = chain.transition();
    let mut total = 0.0;
    let mut word = vec![0usize; depth];
    for code in 0..s.pow(depth as u32) {
        let mut c = code;
        for slot in word.iter_mut().rev() {
            *slot = c % s;
            c /= s;
        }
        let mut w = chain.stationary()[word[0]];
        for k in 1..depth {
            w *= p[word[k - 1]][word[k]];
        }
        if w > 0.0 {
            total += w * f.eval(Point::Symbols(&word));
        }
    }
    Ok(total)
}

/// `∫ f dμ`.
pub fn integral(sys: &GibbsMarkovSystem, f: &Observable) -> Result<f64> {
    match sys.kind() {
        SystemKind::GaussMap => Ok(gauss_integral(|x| f.eval(Point::Real(x)), &[])),
        SystemKind::MarkovShift(_) => markov_integral(sys, f),
    }
}

/// `f − ∫ f dμ`, with the cached mean set to 0. A cached mean is trusted.
pub fn center(sys: &GibbsMarkovSystem, f: &Observable) -> Result<Observable> {
    if f.mean == Some(0.0) {
        return Ok(f.clone());
    }
    let m = match f.mean {
        Some(m) => m,
        None => integral(sys, f)?,
    };
    let inner = f.eval.clone();
    let mut o = Observable::new(f.label.clone(), f.window, f.sup_norm + m.abs(), move |p| inner(p) - m);
    o.mean = Some(0.0);
    Ok(o)
}

/// Candidate symbols tried during coordinate ascent on Gauss digit words.
pub const HOLDER_DIGIT_CAP: usize = 4096;

#[derive(Debug, Clone)]
struct Pair {
    x: Vec<usize>,
    y: Vec<usize>,
    ratio: f64,
}

/// Sampled lower bound for the Hölder constant of `f` on depth-`d` cylinders.
///
/// Pairs share a depth-`d` prefix and differ in the next symbol, so
/// `r(x, y) = r^{d+1}`. Random pairs are drawn first (tail digits are mixed
/// between μ-typical and log-uniform draws so that large digits appear),
/// then the best few are refined by coordinate ascent over the tail symbols.
pub fn holder_constant(
    sys: &GibbsMarkovSystem,
    f: &Observable,
    depth: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<f64> {
    if depth == 0 {
        return Err(Error::Config("holder depth must be at least 1".into()));
    }
    let tail_len = f.window.saturating_sub(depth).max(1) + 4;
    let denom = sys.r().powi(depth as i32 + 1);
    let ratio = |x: &[usize], y: &[usize]| (f.eval(Point::Symbols(x)) - f.eval(Point::Symbols(y))).abs() / denom;

    let mut pairs: Vec<Pair> = streams::par_samples(seed, n_pairs, |_, rng| {
        let (x, y) = draw_pair(sys, depth, tail_len, rng);
        let r = ratio(&x, &y);
        Pair { x, y, ratio: if r.is_finite() { r } else { 0.0 } }
    });
    pairs.sort_by(|a, b| b.ratio.partial_cmp(&a.ratio).unwrap());
    pairs.truncate(4);

    let mut best = pairs.first().map_or(0.0, |p| p.ratio);
    for mut pair in pairs {
        for _sweep in 0..2 {
            for side in 0..2 {
                for pos in depth..depth + tail_len {
                    let (cur, other) = if side == 0 { (&mut pair.x, &pair.y) } else { (&mut pair.y, &pair.x) };
                    let original = cur[pos];
                    let mut best_sym = original;
                    let mut best_ratio = pair.ratio;
                    for sym in candidates(sys) {
                        if pos == depth && sym == other[pos] {
                            continue;
                        }
                        if !admissible(sys, cur, pos, sym) {
                            continue;
                        }
                        cur[pos] = sym;
                        let r = if side == 0 { ratio(cur, other) } else { ratio(other, cur) };
                        if r.is_finite() && r > best_ratio {
                            best_ratio = r;
                            best_sym = sym;
                        }
                    }
                    cur[pos] = best_sym;
                    pair.ratio = best_ratio;
                }
            }
        }
        best = best.max(pair.ratio);
    }
    Ok(best)
}

fn candidates(sys: &GibbsMarkovSystem) -> std::ops::Range<usize> {
    match sys.kind() {
        SystemKind::GaussMap => 1..HOLDER_DIGIT_CAP + 1,
        SystemKind::MarkovShift(c) => 0..c.states(),
    }
}

fn admissible(sys: &GibbsMarkovSystem, word: &[usize], pos: usize, sym: usize) -> bool {
    match sys.kind() {
        SystemKind::GaussMap => true,
        SystemKind::MarkovShift(c) => {
            let p = c.transition();
            (pos == 0 || p[word[pos - 1]][sym] > 0.0) && (pos + 1 >= word.len() || p[sym][word[pos + 1]] > 0.0)
        }
    }
}

fn draw_gauss_digit(rng: &mut StreamRng) -> usize {
    if rng.gen::<bool>() {
        systems::gauss_digit(systems::draw_gauss(rng)).unwrap_or(1)
    } else {
        let u: f64 = rng.gen();
        ((u * (HOLDER_DIGIT_CAP as f64).ln()).exp().floor() as usize).clamp(1, HOLDER_DIGIT_CAP)
    }
}

fn draw_pair(sys: &GibbsMarkovSystem, depth: usize, tail_len: usize, rng: &mut StreamRng) -> (Vec<usize>, Vec<usize>) {
    let total = depth + tail_len;
    match sys.kind() {
        SystemKind::GaussMap => {
            let mut x: Vec<usize> = (0..depth)
                .map(|_| systems::gauss_digit(systems::draw_gauss(rng)).unwrap_or(1))
                .collect();
            let mut y = x.clone();
            for _ in 0..tail_len {
                x.push(draw_gauss_digit(rng));
                y.push(draw_gauss_digit(rng));
            }
            while y[depth] == x[depth] {
                y[depth] = draw_gauss_digit(rng);
            }
            (x, y)
        }
        SystemKind::MarkovShift(_) => loop {
            // rejection keeps both words admissible with a separating symbol
            let x = match sys.sample_trajectory(total, 0, rng) {
                Trajectory::Symbols { symbols, .. } => symbols,
                Trajectory::Real(_) => unreachable!(),
            };
            let start = systems::InitialPoint::State(x[depth - 1]);
            let cont = match sys.trajectory_from(start, tail_len + 1, 0, rng) {
                Trajectory::Symbols { symbols, .. } => symbols,
                Trajectory::Real(_) => unreachable!(),
            };
            if cont[1] != x[depth] {
                let mut y = x[..depth].to_vec();
                y.extend_from_slice(&cont[1..]);
                return (x, y);
            }
        },
    }
}

/// Parameters of the lesser-regularity continued-fraction observable
/// `f = Σ_{n ≤ N} γ_n g_n` with
/// `g_n = ℓ_n (1_{a_K} ∘ T^{m_n} − μ(a_K))`, `K = ⌊ℓ_n⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example5Spec {
    pub eta: f64,
    pub n_trunc: usize,
}

/// Per-index data of the construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example5Term {
    pub n: usize,
    pub m: usize,
    pub ell: f64,
    pub gamma: f64,
    pub digit: usize,
    pub mu: f64,
    pub sup_norm: f64,
    pub l2_norm: f64,
}

impl Example5Spec {
    pub fn new(eta: f64, n_trunc: usize) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(Error::Config(format!("eta = {eta} is not in (0, 1/2)")));
        }
        if n_trunc == 0 {
            return Err(Error::Config("truncation index must be at least 1".into()));
        }
        Ok(Self { eta, n_trunc })
    }

    pub fn truncated(&self, n_trunc: usize) -> Result<Self> {
        Self::new(self.eta, n_trunc)
    }

    /// `m_n = ⌊−log_r n²⌋` with `r = 2/3`.
    pub fn m(n: usize) -> usize {
        (2.0 * (n as f64).ln() / 1.5f64.ln() + 1e-12).floor() as usize
    }

    /// `ℓ_n = r^{−m_n} = 1.5^{m_n}`, exact in binary for the relevant range.
    pub fn ell(n: usize) -> f64 {
        1.5f64.powi(Self::m(n) as i32)
    }

    pub fn gamma(&self, n: usize) -> f64 {
        (2.0 / 3.0f64).powf((2.0 + self.eta) * Self::m(n) as f64)
    }

    pub fn digit(n: usize) -> usize {
        Self::ell(n).floor() as usize
    }

    pub fn term(&self, n: usize) -> Example5Term {
        let ell = Self::ell(n);
        let digit = Self::digit(n);
        let mu = systems::gauss_cylinder_measure(digit).expect("digit ≥ 1");
        Example5Term {
            n,
            m: Self::m(n),
            ell,
            gamma: self.gamma(n),
            digit,
            mu,
            sup_norm: ell * (1.0 - mu).max(mu),
            l2_norm: ell * (mu * (1.0 - mu)).sqrt(),
        }
    }

    pub fn terms(&self) -> Vec<Example5Term> {
        (1..=self.n_trunc).map(|n| self.term(n)).collect()
    }

    /// `Σ_{k=n+1}^{N} γ_k`.
    pub fn tail_sum(&self, n: usize) -> f64 {
        (n + 1..=self.n_trunc).map(|k| self.gamma(k)).sum()
    }

    /// Digit boundaries of every special element `a_K`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .terms()
            .iter()
            .flat_map(|t| [1.0 / t.digit as f64, 1.0 / (t.digit as f64 + 1.0)])
            .collect();
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup();
        b
    }

    /// Terms grouped by shift: `(m, Σ γ_k, ℓ, K, μ(a_K))`. Indices with a
    /// common `m` share `ℓ` and `K`, so their `g` coincide.
    fn grouped(&self) -> Vec<(usize, f64, f64, usize, f64)> {
        let mut groups: BTreeMap<usize, (f64, f64, usize, f64)> = BTreeMap::new();
        for t in self.terms() {
            let e = groups.entry(t.m).or_insert((0.0, t.ell, t.digit, t.mu));
            e.0 += t.gamma;
        }
        groups.into_iter().map(|(m, (c, l, k, mu))| (m, c, l, k, mu)).collect()
    }
}

/// `g_n` alone.
pub fn example5_term(spec: &Example5Spec, n: usize) -> Observable {
    let t = spec.term(n);
    let (m, ell, k, mu) = (t.m, t.ell, t.digit, t.mu);
    Observable::new(format!("g_{n}"), m + 1, t.sup_norm, move |p| {
        ell * (if symbol_at(p, m) == k { 1.0 } else { 0.0 } - mu)
    })
    .with_mean(0.0)
}

/// `f_N = Σ_{n ≤ N} γ_n g_n` for `N = spec.n_trunc`.
pub fn build_example5(sys: &GibbsMarkovSystem, spec: &Example5Spec) -> Result<Observable> {
    if !sys.is_gauss() {
        return Err(Error::Config("the continued-fraction example needs the Gauss map".into()));
    }
    let groups = spec.grouped();
    let window = groups.last().map_or(1, |g| g.0 + 1);
    let sup: f64 = spec.terms().iter().map(|t| t.gamma * t.sup_norm).sum();
    let obs = Observable::new(format!("example5(eta={},N={})", spec.eta, spec.n_trunc), window, sup, move |p| {
        match p {
            Point::Symbols(s) => groups
                .iter()
                .map(|&(m, c, l, k, mu)| c * l * (if s.get(m) == Some(&k) { 1.0 } else { 0.0 } - mu))
                .sum(),
            Point::Real(x0) => {
                let mut x = x0;
                let mut step = 0;
                let mut total = 0.0;
                for &(m, c, l, k, mu) in &groups {
                    while step < m {
                        x = systems::gauss_step(x).unwrap_or(0.5);
                        step += 1;
                    }
                    let hit = systems::gauss_digit(x).map_or(false, |d| d == k);
                    total += c * l * (if hit { 1.0 } else { 0.0 } - mu);
                }
                total
            }
        }
    });
    Ok(obs.with_mean(0.0))
}

/// `Σ_{n ≤ N} γ_n ℓ_n (1_{a_K} − μ(a_K))`: the construction with every
/// `T^{m_n}` removed. It differs from `f_N` by a coboundary, so it has the
/// same asymptotic variance, and it only depends on the first digit.
pub fn example5_depth_one(spec: &Example5Spec) -> Observable {
    let groups = spec.grouped();
    let sup: f64 = spec.terms().iter().map(|t| t.gamma * t.sup_norm).sum();
    Observable::new(format!("example5-depth-one(N={})", spec.n_trunc), 1, sup, move |p| {
        let d = symbol_at(p, 0);
        groups
            .iter()
            .map(|&(_, c, l, k, mu)| c * l * (if d == k { 1.0 } else { 0.0 } - mu))
            .sum()
    })
    .with_mean(0.0)
}

/// Fits `K = max_n tail(n) · n^{3+2η}` and returns it with the per-n ratios.
pub fn fit_tail_constant(spec: &Example5Spec, ns: &[usize]) -> (f64, Vec<f64>) {
    let ratios: Vec<f64> = ns
        .iter()
        .map(|&n| spec.tail_sum(n) * (n as f64).powf(3.0 + 2.0 * spec.eta))
        .collect();
    (ratios.iter().cloned().fold(0.0, f64::max), ratios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::MarkovChain;

    #[test]
    fn centering_constants_and_identity() {
        let g = GibbsMarkovSystem::gauss();
        let c = center(&g, &Observable::constant(3.5)).unwrap();
        assert_eq!(c.eval(Point::Real(0.3)), 0.0);
        let f = center(&g, &Observable::identity()).unwrap();
        let expected = 1.0 / std::f64::consts::LN_2 - 1.0;
        assert!((0.3 - f.eval(Point::Real(0.3)) - expected).abs() < 1e-12);
        let ff = center(&g, &f).unwrap();
        assert_eq!(ff.eval(Point::Real(0.71)), f.eval(Point::Real(0.71)));
    }

    #[test]
    fn markov_centering_is_exact() {
        let m = GibbsMarkovSystem::markov(MarkovChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None, None).unwrap());
        let f = center(&m, &Observable::indicator(0)).unwrap();
        assert!((f.eval(Point::Symbols(&[0])) - 1.0 / 3.0).abs() < 1e-14);
        let w = Observable::word_function(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        // μ([00]) = π_0 P_00
        assert!((integral(&m, &w).unwrap() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn locally_constant_functions_have_zero_holder_constant() {
        let g = GibbsMarkovSystem::gauss();
        assert_eq!(holder_constant(&g, &Observable::constant(1.0), 2, 200, 1).unwrap(), 0.0);
        assert_eq!(holder_constant(&g, &Observable::indicator(1), 1, 200, 1).unwrap(), 0.0);
        assert_eq!(holder_constant(&g, &Observable::indicator(1), 3, 200, 1).unwrap(), 0.0);
    }

    #[test]
    fn holder_of_state_function_on_shift() {
        let m = GibbsMarkovSystem::bernoulli_half();
        let f = Observable::word_function(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        // depends on the second symbol only: jump 1 at separation time 2
        let d = holder_constant(&m, &f, 1, 100, 3).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
    }

    #[test]
    fn example5_index_data() {
        let spec = Example5Spec::new(0.25, 32).unwrap();
        let t1 = spec.term(1);
        assert_eq!((t1.m, t1.ell, t1.gamma, t1.digit), (0, 1.0, 1.0, 1));
        let t2 = spec.term(2);
        assert_eq!(t2.m, 3);
        assert_eq!(t2.ell, 3.375);
        assert_eq!(t2.digit, 3);
        assert!((t2.gamma - (2.0f64 / 3.0).powf(6.75)).abs() < 1e-15);
        let ms: Vec<usize> = [4, 8, 16, 32].iter().map(|&n| Example5Spec::m(n)).collect();
        assert_eq!(ms, vec![6, 10, 13, 17]);
        assert!(Example5Spec::new(0.5, 3).is_err());
        assert!(Example5Spec::new(0.0, 3).is_err());
    }

    #[test]
    fn example5_real_and_symbolic_evaluation_agree() {
        let g = GibbsMarkovSystem::gauss();
        let spec = Example5Spec::new(0.25, 4).unwrap();
        let f = build_example5(&g, &spec).unwrap();
        let word = [1usize, 2, 1, 3, 1, 4, 2, 1, 1];
        let x = systems::gauss_branch(&word, 0.37);
        assert!((f.eval(Point::Real(x)) - f.eval(Point::Symbols(&word))).abs() < 1e-12);
    }
}
