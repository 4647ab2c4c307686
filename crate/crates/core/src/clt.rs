//! Distributional testing of normalized sums against N(0, 1).

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::arrays::{self, DynamicalArrayRow, HypothesisLedger, NormProxy};
use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::stats::Moments;
use crate::streams;
use crate::systems::GibbsMarkovSystem;
use crate::transfer::{self, TransferOperator};

/// `Φ(x)` through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `sup_x |F_n(x) − F(x)|` for the empirical distribution of `samples`.
/// Tied samples are handled as one jump of the empirical CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    Ok(d)
}

/// Approximate standard deviation of the KS statistic under the null.
pub fn ks_sampling_sd(n_samples: usize) -> f64 {
    0.2603 / (n_samples as f64).sqrt()
}

/// True when each KS distance exceeds its predecessor by at most two
/// sampling standard deviations of the difference.
pub fn ks_nonincreasing(reports: &[CltReport]) -> bool {
    reports.windows(2).all(|w| {
        let sd = ks_sampling_sd(w[0].n_samples).hypot(ks_sampling_sd(w[1].n_samples));
        w[1].ks_distance <= w[0].ks_distance + 2.0 * sd
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassCriteria {
    pub ks_threshold: f64,
    pub var_tolerance: f64,
}

impl Default for PassCriteria {
    fn default() -> Self {
        Self { ks_threshold: 0.03, var_tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    /// Row index.
    pub n: usize,
    pub n_samples: usize,
    pub ks_distance: f64,
    pub moments: Moments,
    pub ledger: Option<HypothesisLedger>,
    pub criteria: PassCriteria,
    pub pass: bool,
    /// Scenario-specific numbers (normalization, ratios, ...).
    pub diagnostics: BTreeMap<String, f64>,
    /// `(x, F_n(x), Φ(x))` at evenly spaced order statistics, for plotting.
    #[serde(skip)]
    pub ecdf: Vec<[f64; 3]>,
}

impl CltReport {
    /// Scores normalized samples.
    pub fn from_samples(n: usize, samples: &[f64], criteria: PassCriteria) -> Result<Self> {
        let ks = ks_distance(samples, normal_cdf)?;
        let moments = Moments::of(samples);
        let ns = samples.len();
        let pass = ks < criteria.ks_threshold
            && moments.mean.abs() < 3.0 / (ns as f64).sqrt()
            && (moments.var - 1.0).abs() < criteria.var_tolerance;
        Ok(Self {
            n,
            n_samples: ns,
            ks_distance: ks,
            moments,
            ledger: None,
            criteria,
            pass,
            diagnostics: BTreeMap::new(),
            ecdf: ecdf_grid(samples, 200),
        })
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

/// Empirical CDF against `Φ` at up to `points` order statistics.
pub fn ecdf_grid(samples: &[f64], points: usize) -> Vec<[f64; 3]> {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
    let n = xs.len();
    let step = (n / points.max(1)).max(1);
    (step - 1..n)
        .step_by(step)
        .map(|i| [xs[i], (i + 1) as f64 / n as f64, normal_cdf(xs[i])])
        .collect()
}

/// Where the normalization `σ_n²` of a row comes from.
#[derive(Debug, Clone, Copy)]
pub enum SigmaSource<'a> {
    GreenKubo(&'a TransferOperator),
    Spectral(&'a TransferOperator),
    MonteCarlo { n: usize, samples: usize },
    Fixed(f64),
}

/// One row of a Birkhoff-sum sweep: `Σ_{j<k} f∘T^j`.
#[derive(Debug, Clone)]
pub struct BirkhoffRow {
    pub n: usize,
    pub k: usize,
    pub f: Observable,
}

/// `σ²` from the requested source, cross-checked against Green-Kubo when an
/// operator is at hand.
pub fn sigma2(sys: &GibbsMarkovSystem, f: &Observable, source: SigmaSource<'_>, seed: u64) -> Result<f64> {
    let s2 = match source {
        SigmaSource::GreenKubo(op) => {
            let gk = transfer::variance_green_kubo(op, f, transfer::GREEN_KUBO_CAP)?.sigma2;
            match transfer::variance_spectral(op, f, transfer::SPECTRAL_T0) {
                Ok(sp) if (sp - gk).abs() > 0.05 * gk.max(sp) => {
                    log::warn!("σ² cross-check: Green-Kubo {gk} vs spectral {sp}");
                }
                _ => {}
            }
            gk
        }
        SigmaSource::Spectral(op) => transfer::variance_spectral(op, f, transfer::SPECTRAL_T0)?,
        SigmaSource::MonteCarlo { n, samples } => transfer::variance_monte_carlo(sys, f, n, samples, seed)?.sigma2,
        SigmaSource::Fixed(s) => s,
    };
    Ok(s2)
}

pub const COBOUNDARY_FLOOR: f64 = 1e-10;

/// Samples `S_k / √(k σ²)` for every row and scores them.
pub fn clt_sweep_theorem41(
    sys: &GibbsMarkovSystem,
    rows: &[BirkhoffRow],
    source: SigmaSource<'_>,
    n_samples: usize,
    seed: u64,
    criteria: PassCriteria,
) -> Result<Vec<CltReport>> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let row_seed = streams::derive(seed, row.n as u64);
        let s2 = sigma2(sys, &row.f, source, streams::derive(row_seed, streams::tag("sigma")))?;
        if s2 < COBOUNDARY_FLOOR {
            return Err(Error::DegenerateVariance(s2));
        }
        let norm = (row.k as f64 * s2).sqrt();
        let samples = streams::par_samples(row_seed, n_samples, |_, rng| {
            let traj = sys.sample_trajectory(row.k, row.f.window(), rng);
            row.f.birkhoff_sum(&traj, 0, row.k) / norm
        });
        let ratio = row.f.sup_norm().powi(3) / ((row.k as f64).sqrt() * s2.powf(1.5));
        out.push(
            CltReport::from_samples(row.n, &samples, criteria)?
                .with("k", row.k as f64)
                .with("sigma2", s2)
                .with("norm_ratio", ratio),
        );
        log::info!("k = {}: KS {:.4}", row.k, out.last().unwrap().ks_distance);
    }
    Ok(out)
}

/// Array CLT: `row_sum / š` for each row with its hypothesis ledger. `š`
/// and the ledger use an independent stream from the scored samples.
pub fn clt_array_theorem54(
    sys: &GibbsMarkovSystem,
    rows: &[(usize, DynamicalArrayRow)],
    rho: f64,
    norms: &NormProxy,
    n_samples: usize,
    seed: u64,
    criteria: PassCriteria,
) -> Result<Vec<CltReport>> {
    let mut out = Vec::with_capacity(rows.len());
    for (n, row) in rows {
        let row_seed = streams::derive(seed, *n as u64);
        let analysis = arrays::analyze_row(
            sys,
            row,
            &arrays::DEFAULT_EPS,
            n_samples,
            streams::derive(row_seed, streams::tag("ledger")),
        )?;
        let ledger = arrays::hypothesis_ledger(row, rho, norms, &analysis)?;
        let s = analysis.s_check;
        let samples: Vec<f64> =
            arrays::sample_row_sums(sys, row, n_samples, row_seed).into_iter().map(|v| v / s).collect();
        let mut report = CltReport::from_samples(*n, &samples, criteria)?
            .with("k", row.k() as f64)
            .with("m", row.m as f64)
            .with("s_check", s)
            .with("s_check_se", analysis.s_check_se);
        for (eps, se) in &analysis.lindeberg_se {
            report = report.with(&format!("lindeberg_se:{eps}"), *se);
        }
        report.ledger = Some(ledger);
        log::info!("n = {n}: KS {:.4}, š {s:.4}", report.ks_distance);
        out.push(report);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        let d = normal_cdf(1.96) - 0.9750021048517795;
        assert!(d.abs() < 1e-11, "{d:e}");
        for x in [0.3, 1.0, 2.5, 6.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_distance(&[0.0], normal_cdf).unwrap(), 0.5);
        let n = 200;
        let q: Vec<f64> = (1..=n).map(|i| normal_quantile((i as f64 - 0.5) / n as f64)).collect();
        assert!((ks_distance(&q, normal_cdf).unwrap() - 0.5 / n as f64).abs() < 1e-9);
        assert!(matches!(ks_distance(&[], normal_cdf), Err(Error::EmptySample)));
    }

    #[test]
    fn ks_with_ties_matches_brute_force() {
        let xs = [0.1, 0.1, -0.4, 0.1, 1.2, -0.4, 0.0, 2.0, 0.0, 0.0];
        let n = xs.len() as f64;
        let mut brute = 0.0f64;
        for &x in &xs {
            let below = xs.iter().filter(|&&y| y < x).count() as f64 / n;
            let upto = xs.iter().filter(|&&y| y <= x).count() as f64 / n;
            let f = normal_cdf(x);
            brute = brute.max((f - below).abs()).max((upto - f).abs());
        }
        assert!((ks_distance(&xs, normal_cdf).unwrap() - brute).abs() < 1e-15);
    }
}
