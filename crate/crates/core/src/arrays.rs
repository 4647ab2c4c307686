//! Dynamical arrays: rows of block observables `F_{n,i}` launched at
//! initial times `τ_{n,i}`, their block decompositions, and Monte Carlo
//! checks of the array CLT hypotheses.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::stats;
use crate::streams;
use crate::systems::{GibbsMarkovSystem, Trajectory};

/// `F = Σ_{j<len} f∘T^j`, evaluated at time `tau`.
#[derive(Debug, Clone)]
pub struct Block {
    pub tau: usize,
    pub len: usize,
    pub f: Observable,
}

impl Block {
    pub fn new(tau: usize, len: usize, f: Observable) -> Self {
        Self { tau, len, f }
    }

    pub fn end(&self) -> usize {
        self.tau + self.len
    }

    pub fn eval(&self, traj: &Trajectory) -> f64 {
        self.f.birkhoff_sum(traj, self.tau, self.len)
    }
}

#[derive(Debug, Clone)]
pub struct DynamicalArrayRow {
    pub blocks: Vec<Block>,
    /// Minimal spacing `min_i (τ_i − τ_{i−1} − l_{i−1})`.
    pub m: usize,
    pub s_check: Option<f64>,
}

impl DynamicalArrayRow {
    /// Blocks must be sorted and non-overlapping. A single block has no
    /// spacing constraint; its `m` is 0 unless set with [`Self::with_spacing`].
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Config("a row needs at least one block".into()));
        }
        let mut m = usize::MAX;
        for w in blocks.windows(2) {
            if w[1].tau < w[0].end() {
                return Err(Error::Config(format!(
                    "block at τ = {} overlaps the block ending at {}",
                    w[1].tau,
                    w[0].end()
                )));
            }
            m = m.min(w[1].tau - w[0].end());
        }
        Ok(Self { blocks, m: if m == usize::MAX { 0 } else { m }, s_check: None })
    }

    /// Records the spacing of a one-block row taken from a schedule.
    pub fn with_spacing(mut self, m: usize) -> Self {
        if self.blocks.len() == 1 {
            self.m = m;
        }
        self
    }

    pub fn with_s_check(mut self, s: f64) -> Self {
        self.s_check = Some(s);
        self
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Orbit length needed to evaluate the row.
    pub fn span(&self) -> usize {
        self.blocks.last().map_or(0, Block::end)
    }

    /// Symbols a trajectory must carry past [`Self::span`].
    pub fn lookahead(&self) -> usize {
        self.blocks.iter().map(|b| b.f.window()).max().unwrap_or(0)
    }

    /// `Σ_i F_i(T^{τ_i} x)` along a trajectory started at `x`.
    pub fn row_sum(&self, traj: &Trajectory) -> Result<f64> {
        if traj.len() < self.span() {
            return Err(Error::Domain(format!(
                "trajectory of length {} is shorter than the row span {}",
                traj.len(),
                self.span()
            )));
        }
        Ok(self.blocks.iter().map(|b| b.eval(traj)).sum())
    }

    pub fn block_values(&self, traj: &Trajectory) -> Vec<f64> {
        self.blocks.iter().map(|b| b.eval(traj)).collect()
    }

    /// Time indices covered by the blocks.
    pub fn indices(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| b.tau..b.end()).collect()
    }
}

/// Main row, gap row and bookkeeping of a block decomposition of
/// `Σ_{j<n} f∘T^j`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub n: usize,
    pub l: usize,
    pub m: usize,
    /// Number of full main blocks `⌊n/(l+m)⌋`.
    pub k: usize,
    /// Length of the completion block appended to the main row (0 if none).
    pub completion: usize,
    /// Length of the trailing gap appended to the gap row (0 if none).
    pub trailing_gap: usize,
    pub main: Option<DynamicalArrayRow>,
    pub gaps: Option<DynamicalArrayRow>,
}

/// Main blocks of length `l` at `τ_i = (i−1)(l+m)`, gap blocks of length
/// `m` between them, then a completion block of length
/// `min(l, n − k(l+m))` and a trailing gap with whatever is left.
pub fn block_decompose(n: usize, l: usize, m: usize, f: &Observable) -> Result<Decomposition> {
    if !(l > m && m > 0) {
        return Err(Error::Config(format!("need l > m > 0, got l = {l}, m = {m}")));
    }
    let k = n / (l + m);
    let q = n - k * (l + m);
    let completion = q.min(l);
    let trailing_gap = q - completion;
    let mut main: Vec<Block> = (0..k).map(|i| Block::new(i * (l + m), l, f.clone())).collect();
    let mut gaps: Vec<Block> = (0..k).map(|i| Block::new(i * (l + m) + l, m, f.clone())).collect();
    if completion > 0 {
        main.push(Block::new(k * (l + m), completion, f.clone()));
    }
    if trailing_gap > 0 {
        gaps.push(Block::new(k * (l + m) + completion, trailing_gap, f.clone()));
    }
    let main = if main.is_empty() { None } else { Some(DynamicalArrayRow::new(main)?.with_spacing(m)) };
    let gaps = if gaps.is_empty() { None } else { Some(DynamicalArrayRow::new(gaps)?) };
    Ok(Decomposition { n, l, m, k, completion, trailing_gap, main, gaps })
}

impl Decomposition {
    /// True when main and gap blocks tile `{0, …, n−1}` without overlap.
    pub fn tiles(&self) -> bool {
        let mut seen = vec![0u8; self.n];
        for row in self.main.iter().chain(self.gaps.iter()) {
            for j in row.indices() {
                if j >= self.n {
                    return false;
                }
                seen[j] += 1;
            }
        }
        seen.iter().all(|&c| c == 1)
    }
}

/// Schedule `m_n = ⌈2 ln n / (−ln ρ)⌉`, so `ρ^{m_n} ≤ n^{−2}`, and
/// `l_n = max(⌊n^{exponent}⌋, m_n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockSchedule {
    pub rho: f64,
    pub exponent: f64,
}

impl BlockSchedule {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Config(format!("ρ = {rho} is not in (0, 1)")));
        }
        Ok(Self { rho, exponent: 0.4 })
    }

    pub fn m(&self, n: usize) -> usize {
        (2.0 * (n as f64).ln() / -self.rho.ln()).ceil() as usize
    }

    pub fn l(&self, n: usize) -> usize {
        ((n as f64).powf(self.exponent).floor() as usize).max(self.m(n) + 1)
    }

    pub fn decompose(&self, n: usize, f: &Observable) -> Result<Decomposition> {
        block_decompose(n, self.l(n), self.m(n), f)
    }
}

/// Monte Carlo summary of one row.
#[derive(Debug, Clone, Serialize)]
pub struct RowAnalysis {
    pub samples: usize,
    pub s_check: f64,
    pub s_check_se: f64,
    /// `E F_i²` per block.
    pub second_moments: Vec<f64>,
    /// `E |F_i|` per block.
    pub first_abs_moments: Vec<f64>,
    /// `ε → L_{n,ε}`.
    pub lindeberg: BTreeMap<String, f64>,
    /// Standard errors of the Lindeberg estimates, including the
    /// uncertainty of `š`.
    pub lindeberg_se: BTreeMap<String, f64>,
}

pub const DEFAULT_EPS: [f64; 4] = [0.05, 0.1, 0.25, 0.5];

pub fn eps_key(eps: f64) -> String {
    format!("{eps}")
}

fn sample_blocks(sys: &GibbsMarkovSystem, row: &DynamicalArrayRow, n_samples: usize, seed: u64) -> Vec<Vec<f64>> {
    streams::par_samples(seed, n_samples, |_, rng| {
        let traj = sys.sample_trajectory(row.span(), row.lookahead(), rng);
        row.block_values(&traj)
    })
}

/// Row sums over μ-typical starting points.
pub fn sample_row_sums(sys: &GibbsMarkovSystem, row: &DynamicalArrayRow, n_samples: usize, seed: u64) -> Vec<f64> {
    streams::par_samples(seed, n_samples, |_, rng| {
        let traj = sys.sample_trajectory(row.span(), row.lookahead(), rng);
        row.blocks.iter().map(|b| b.eval(&traj)).sum()
    })
}

/// Sample standard deviation `š` of the row sum, with its standard error.
pub fn estimate_s_check(
    sys: &GibbsMarkovSystem,
    row: &DynamicalArrayRow,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples < 1000 {
        return Err(Error::Config(format!("š needs at least 1000 samples, got {n_samples}")));
    }
    let sums = sample_row_sums(sys, row, n_samples, seed);
    s_from_sums(&sums)
}

fn s_from_sums(sums: &[f64]) -> Result<(f64, f64)> {
    let (var, var_se) = stats::variance_with_se(sums);
    if !(var >= 1e-10) {
        return Err(Error::DegenerateVariance(var));
    }
    let s = var.sqrt();
    Ok((s, var_se / (2.0 * s)))
}

/// `L_{n,ε} = (1/š²) Σ_i E[F_i² 1{|F_i| ≥ εš}]` with each `F_i` evaluated at
/// `T^{τ_i} x` along one orbit. `š` comes from the row when set, otherwise
/// from an independent sample.
pub fn lindeberg_functional(
    sys: &GibbsMarkovSystem,
    row: &DynamicalArrayRow,
    eps: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let a = analyze_row(sys, row, &[eps], n_samples, seed)?;
    Ok(a.lindeberg[&eps_key(eps)])
}

/// One Monte Carlo pass producing `š` (independent stream unless preset),
/// block moments and the Lindeberg functional on `eps_grid`.
pub fn analyze_row(
    sys: &GibbsMarkovSystem,
    row: &DynamicalArrayRow,
    eps_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<RowAnalysis> {
    if eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Config("ε must be positive".into()));
    }
    let (s, s_se) = match row.s_check {
        Some(s) if s > 0.0 => (s, 0.0),
        Some(s) => return Err(Error::DegenerateVariance(s * s)),
        None => estimate_s_check(sys, row, n_samples.max(1000), streams::derive(seed, streams::tag("s_check")))?,
    };
    let blocks = sample_blocks(sys, row, n_samples, seed);
    let k = row.k();
    let ns = n_samples as f64;
    let mut second = vec![0.0; k];
    let mut first_abs = vec![0.0; k];
    for sample in &blocks {
        for (i, &v) in sample.iter().enumerate() {
            second[i] += v * v;
            first_abs[i] += v.abs();
        }
    }
    second.iter_mut().for_each(|x| *x /= ns);
    first_abs.iter_mut().for_each(|x| *x /= ns);

    let s2 = s * s;
    let mut lindeberg = BTreeMap::new();
    let mut lindeberg_se = BTreeMap::new();
    for &eps in eps_grid {
        // per-sample contribution so that a standard error is available
        let per: Vec<f64> = blocks
            .iter()
            .map(|sample| sample.iter().filter(|v| v.abs() >= eps * s).map(|v| v * v).sum::<f64>() / s2)
            .collect();
        let (var, _) = if per.len() > 1 { stats::variance_with_se(&per) } else { (0.0, 0.0) };
        let l = stats::mean(&per);
        // L scales like š^{−2}, so an estimated š adds 2L·se(š)/š
        lindeberg.insert(eps_key(eps), l);
        lindeberg_se.insert(eps_key(eps), (var / ns).sqrt().hypot(2.0 * l * s_se / s));
    }
    Ok(RowAnalysis {
        samples: n_samples,
        s_check: s,
        s_check_se: s_se,
        second_moments: second,
        first_abs_moments: first_abs,
        lindeberg,
        lindeberg_se,
    })
}

/// Norm proxy for block observables `F = Σ_{j<l} f∘T^j`.
///
/// For `x, y` in one partition element, `f∘T^j` differs by at most
/// `D(f) r^{s−j}` when the orbits separate after step `j` and by `osc(f)`
/// otherwise, so `D(f∘T^j) ≤ r^{−j} max(D(f), osc(f))` and
/// `‖F‖ ≤ l‖f‖∞ + r^{1−l} max(D(f), osc(f)) / (1 − r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormProxy {
    pub sup_norm: f64,
    /// Sampled Hölder constant of `f` on partition elements.
    pub holder: f64,
    /// Sampled `sup f − inf f`.
    pub oscillation: f64,
    pub r: f64,
}

impl NormProxy {
    fn spread(&self) -> f64 {
        self.holder.max(self.oscillation) * self.r / (1.0 - self.r)
    }

    pub fn block_norm(&self, len: usize) -> f64 {
        len as f64 * self.sup_norm + self.r.powi(-(len as i32)) * self.spread()
    }

    /// `r^{l}·‖F‖`, computed without overflow.
    pub fn damped_block_norm(&self, len: usize) -> f64 {
        len as f64 * self.sup_norm * self.r.powi(len as i32) + self.spread()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisLedger {
    pub k: usize,
    pub m: usize,
    /// `k² ρ^m`.
    pub cond2: f64,
    /// `ρ^m Σ_i r^{l_i}‖F_i‖ / š`.
    pub cond3: f64,
    /// `cond3 · sup_i ‖F_i‖₁ / š`.
    pub cond3prime: f64,
    pub lindeberg: BTreeMap<String, f64>,
    /// `Σ_i E F_i² / š²`.
    pub variance_ratio: f64,
    /// `max_i E F_i² / š²`.
    pub max_block_ratio: f64,
    pub s_check: f64,
}

pub fn hypothesis_ledger(row: &DynamicalArrayRow, rho: f64, norms: &NormProxy, analysis: &RowAnalysis) -> Result<HypothesisLedger> {
    if !(rho > 0.0 && rho < 1.0) && rho != 0.0 {
        return Err(Error::Config(format!("ρ = {rho} is not in [0, 1)")));
    }
    let s = analysis.s_check;
    let k = row.k();
    let rho_m = rho.powi(row.m as i32);
    let cond2 = (k * k) as f64 * rho_m;
    let cond3 = rho_m * row.blocks.iter().map(|b| norms.damped_block_norm(b.len)).sum::<f64>() / s;
    let sup_l1 = analysis.first_abs_moments.iter().cloned().fold(0.0, f64::max);
    let s2 = s * s;
    Ok(HypothesisLedger {
        k,
        m: row.m,
        cond2,
        cond3,
        cond3prime: cond3 * sup_l1 / s,
        lindeberg: analysis.lindeberg.clone(),
        variance_ratio: analysis.second_moments.iter().sum::<f64>() / s2,
        max_block_ratio: analysis.second_moments.iter().cloned().fold(0.0, f64::max) / s2,
        s_check: s,
    })
}
