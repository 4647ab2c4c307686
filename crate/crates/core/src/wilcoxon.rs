//! Two-sample Wilcoxon rank sums on dynamically generated series.
//!
//! For `X_i = φ(T^i x)` (`i < m`) and `Y_k = ψ(T^k y)` (`k < n`) the rank sum
//! `W` splits exactly as `W = A + m·B + n·C + D` with
//!
//! ```text
//! B = Σ_k (1 − F_φ(Y_k)) − n·θ_ψ        θ_ψ = ∫ (1 − F_φ) dμ_ψ
//! C = Σ_i F_ψ(X_i) − m·θ_φ              θ_φ = ∫ F_ψ dμ_φ
//! D = m·n·θ_φ + m(m+1)/2
//! ```
//!
//! and `A` the doubly centered remainder of `Σ_{i,k} 1{Y_k < X_i}` (ties
//! count one half, matching midranks).

use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::clt::{CltReport, PassCriteria};
use crate::error::{Error, Result};
use crate::stats;
use crate::streams::{self, StreamRng};
use crate::systems::{self, GibbsMarkovSystem, InitialPoint, Trajectory};
use rand::Rng;

/// Score functions applied to the orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Score {
    Identity,
    Indicator(usize),
    /// `x + c`.
    Shift(f64),
}

impl FromStr for Score {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown score '{s}' (identity, indicator:k, shift:c)"));
        match s.split_once(':') {
            None if s == "identity" => Ok(Score::Identity),
            Some(("indicator", k)) => k.parse().map(Score::Indicator).map_err(|_| bad()),
            Some(("shift", c)) => c.parse().map(Score::Shift).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl Score {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Score::Identity => x,
            Score::Shift(c) => x + c,
            Score::Indicator(k) => {
                if systems::gauss_digit(x).ok() == Some(*k) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Distribution function of a score under μ.
#[derive(Debug, Clone, PartialEq)]
pub enum Cdf {
    /// `log2(1 + t)` on [0, 1]: the identity under the Gauss measure.
    GaussIdentity,
    Uniform,
    /// `F(t − c)`.
    Shifted(Box<Cdf>, f64),
    /// Sorted calibration sample.
    Empirical(Vec<f64>),
}

impl Cdf {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Cdf::GaussIdentity => {
                if t <= 0.0 {
                    0.0
                } else if t >= 1.0 {
                    1.0
                } else {
                    t.ln_1p() / std::f64::consts::LN_2
                }
            }
            Cdf::Uniform => t.clamp(0.0, 1.0),
            Cdf::Shifted(base, c) => base.eval(t - c),
            Cdf::Empirical(xs) => xs.partition_point(|&v| v <= t) as f64 / xs.len() as f64,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Cdf::GaussIdentity | Cdf::Uniform => (0.0, 1.0),
            Cdf::Shifted(base, c) => {
                let (a, b) = base.support();
                (a + c, b + c)
            }
            Cdf::Empirical(xs) => (xs[0], xs[xs.len() - 1]),
        }
    }

    /// Sorts a calibration sample into an empirical CDF.
    pub fn empirical(mut sample: Vec<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Cdf::Empirical(sample))
    }
}

/// `∫ g dF` by a midpoint Stieltjes sum over the support of `F`; an
/// empirical `F` gives the sample mean of `g`.
pub fn stieltjes<G: Fn(f64) -> f64>(g: G, f: &Cdf) -> f64 {
    if let Cdf::Empirical(xs) = f {
        return xs.iter().map(|&x| g(x)).sum::<f64>() / xs.len() as f64;
    }
    let (a, b) = f.support();
    let panels = 200_000;
    let h = (b - a) / panels as f64;
    let mut prev = f.eval(a);
    let mut total = 0.0;
    for i in 0..panels {
        let right = f.eval(a + (i + 1) as f64 * h);
        total += g(a + (i as f64 + 0.5) * h) * (right - prev);
        prev = right;
    }
    total
}

/// Rank sum of `x` in the pooled sample, ties at midranks.
pub fn rank_sum(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut pooled: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("samples must not be NaN"));
    let mut w = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        w += midrank * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct TwoSampleSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub phi_cdf: Arc<Cdf>,
    pub psi_cdf: Arc<Cdf>,
    pub theta_phi: f64,
    pub theta_psi: f64,
}

/// `(θ_φ, θ_ψ)` for the given distribution functions.
pub fn thetas(phi_cdf: &Cdf, psi_cdf: &Cdf) -> (f64, f64) {
    let theta_phi = stieltjes(|s| psi_cdf.eval(s), phi_cdf);
    let theta_psi = stieltjes(|s| 1.0 - phi_cdf.eval(s), psi_cdf);
    (theta_phi, theta_psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonDecomposition {
    pub m: usize,
    pub n: usize,
    pub w: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub theta_phi: f64,
    pub theta_psi: f64,
}

impl WilcoxonDecomposition {
    pub fn identity_gap(&self) -> f64 {
        (self.a + self.m as f64 * self.b + self.n as f64 * self.c + self.d - self.w).abs()
    }
}

pub fn decompose(series: &TwoSampleSeries) -> Result<WilcoxonDecomposition> {
    let (x, y) = (&series.x, &series.y);
    let w = rank_sum(x, y)?;
    let (m, n) = (x.len(), y.len());
    let (mf, nf) = (m as f64, n as f64);
    let mut ys = y.clone();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let u: f64 = x
        .iter()
        .map(|&xi| {
            let less = ys.partition_point(|&v| v < xi);
            let upto = ys.partition_point(|&v| v <= xi);
            less as f64 + 0.5 * (upto - less) as f64
        })
        .sum();
    let sum_b: f64 = y.iter().map(|&v| 1.0 - series.phi_cdf.eval(v)).sum();
    let sum_c: f64 = x.iter().map(|&v| series.psi_cdf.eval(v)).sum();
    let (tp, tq) = (series.theta_phi, series.theta_psi);
    let b = sum_b - nf * tq;
    let c = sum_c - mf * tp;
    let d = mf * nf * tp + mf * (mf + 1.0) / 2.0;
    let a = u - mf * sum_b - nf * sum_c + mf * nf * tq;
    let dec = WilcoxonDecomposition { m, n, w, a, b, c, d, theta_phi: tp, theta_psi: tq };
    let gap = dec.identity_gap();
    if gap > 1e-9 * w.max(1.0) {
        return Err(Error::Domain(format!("decomposition identity off by {gap:e}")));
    }
    Ok(dec)
}

/// How the two series share the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coupling {
    /// X and Y come from independent μ-distributed starting points.
    Independent,
    /// Both read the same orbit.
    SameOrbit,
}

#[derive(Debug, Clone)]
pub enum SeriesModel {
    Dynamical { sys: GibbsMarkovSystem, phi: Score, psi: Score, coupling: Coupling },
    /// i.i.d. uniform draws pushed through the scores.
    IidUniform { phi: Score, psi: Score },
}

/// A model with its distribution functions and θ constants resolved.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    pub model: SeriesModel,
    pub phi_cdf: Arc<Cdf>,
    pub psi_cdf: Arc<Cdf>,
    pub theta_phi: f64,
    pub theta_psi: f64,
}

fn score_cdf(score: Score, base: &Cdf) -> Result<Cdf> {
    match score {
        Score::Identity => Ok(base.clone()),
        Score::Shift(c) => Ok(Cdf::Shifted(Box::new(base.clone()), c)),
        Score::Indicator(k) => Err(Error::CdfUnavailable(format!("indicator:{k} has an atomic law"))),
    }
}

impl SeriesModel {
    pub fn prepare(self) -> Result<PreparedModel> {
        let base = match &self {
            SeriesModel::Dynamical { sys, .. } if sys.is_gauss() => Cdf::GaussIdentity,
            SeriesModel::Dynamical { .. } => {
                return Err(Error::CdfUnavailable("scores on a finite shift have atomic laws".into()));
            }
            SeriesModel::IidUniform { .. } => Cdf::Uniform,
        };
        let (phi, psi) = match &self {
            SeriesModel::Dynamical { phi, psi, .. } | SeriesModel::IidUniform { phi, psi } => (*phi, *psi),
        };
        let phi_cdf = score_cdf(phi, &base)?;
        let psi_cdf = score_cdf(psi, &base)?;
        let (theta_phi, theta_psi) = thetas(&phi_cdf, &psi_cdf);
        Ok(PreparedModel { model: self, phi_cdf: Arc::new(phi_cdf), psi_cdf: Arc::new(psi_cdf), theta_phi, theta_psi })
    }
}

fn orbit(sys: &GibbsMarkovSystem, start: InitialPoint, len: usize, rng: &mut StreamRng) -> Vec<f64> {
    match sys.trajectory_from(start, len, 0, rng) {
        Trajectory::Real(v) => v,
        Trajectory::Symbols { .. } => unreachable!("scores need a real phase space"),
    }
}

impl PreparedModel {
    pub fn generate(&self, m: usize, n: usize, rng: &mut StreamRng) -> TwoSampleSeries {
        let (x, y) = match &self.model {
            SeriesModel::Dynamical { sys, phi, psi, coupling } => {
                let x0 = sys.draw_initial(rng);
                let len = if *coupling == Coupling::SameOrbit { m.max(n) } else { m };
                let ox = orbit(sys, x0, len, rng);
                let x: Vec<f64> = ox[..m].iter().map(|&v| phi.apply(v)).collect();
                let y: Vec<f64> = match coupling {
                    Coupling::SameOrbit => ox[..n].iter().map(|&v| psi.apply(v)).collect(),
                    Coupling::Independent => {
                        let y0 = sys.draw_initial(rng);
                        orbit(sys, y0, n, rng).into_iter().map(|v| psi.apply(v)).collect()
                    }
                };
                (x, y)
            }
            SeriesModel::IidUniform { phi, psi } => {
                let x = (0..m).map(|_| phi.apply(rng.gen::<f64>())).collect();
                let y = (0..n).map(|_| psi.apply(rng.gen::<f64>())).collect();
                (x, y)
            }
        };
        TwoSampleSeries {
            x,
            y,
            phi_cdf: self.phi_cdf.clone(),
            psi_cdf: self.psi_cdf.clone(),
            theta_phi: self.theta_phi,
            theta_psi: self.theta_psi,
        }
    }
}

/// `n(m) = round(λm)` for `λ ∈ (0, 1]`.
pub fn n_of_m(m: usize, lambda: f64) -> Result<usize> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Config(format!("λ = {lambda} is not in (0, 1]")));
    }
    Ok(((lambda * m as f64).round() as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaEstimate {
    pub m: usize,
    pub n: usize,
    pub reps: usize,
    /// `m² Var(B) + n² Var(C) + 2nm Cov(B, C)`.
    pub sigma2: f64,
    pub var_b: f64,
    pub var_c: f64,
    pub cov_bc: f64,
    pub var_a: f64,
    /// `Var(A) / σ_m²`.
    pub var_a_ratio: f64,
    /// `σ_m m^{−3/2}`.
    pub scaled_sigma: f64,
    /// Empirical `Var(W)` over the same replications.
    pub var_w: f64,
}

pub fn sigma_m_estimate(model: &PreparedModel, m: usize, lambda: f64, n_reps: usize, seed: u64) -> Result<SigmaEstimate> {
    if n_reps < 2 {
        return Err(Error::Config("σ_m needs at least two replications".into()));
    }
    let n = n_of_m(m, lambda)?;
    let decs = streams::par_samples(seed, n_reps, |_, rng| decompose(&model.generate(m, n, rng)));
    let decs: Vec<WilcoxonDecomposition> = decs.into_iter().collect::<Result<_>>()?;
    let bs: Vec<f64> = decs.iter().map(|d| d.b).collect();
    let cs: Vec<f64> = decs.iter().map(|d| d.c).collect();
    let as_: Vec<f64> = decs.iter().map(|d| d.a).collect();
    let ws: Vec<f64> = decs.iter().map(|d| d.w).collect();
    let (var_b, _) = stats::variance_with_se(&bs);
    let (var_c, _) = stats::variance_with_se(&cs);
    let (var_a, _) = stats::variance_with_se(&as_);
    let (var_w, _) = stats::variance_with_se(&ws);
    let cov_bc = stats::covariance(&bs, &cs);
    let (mf, nf) = (m as f64, n as f64);
    let sigma2 = mf * mf * var_b + nf * nf * var_c + 2.0 * nf * mf * cov_bc;
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateVariance(sigma2));
    }
    Ok(SigmaEstimate {
        m,
        n,
        reps: n_reps,
        sigma2,
        var_b,
        var_c,
        cov_bc,
        var_a,
        var_a_ratio: var_a / sigma2,
        scaled_sigma: sigma2.sqrt() * mf.powf(-1.5),
        var_w,
    })
}

/// KS report for `(W − D)/σ_m` over independent realizations. `σ_m` comes
/// from an independent replication set. The diagnostics also carry the
/// mean and z-score of `(W − D₀)/σ_m` for the null center
/// `D₀ = m(n+m+1)/2`, which is what a location alternative moves.
pub fn behrens_fisher_test(
    model: &PreparedModel,
    m: usize,
    lambda: f64,
    n_samples: usize,
    seed: u64,
    criteria: PassCriteria,
) -> Result<(CltReport, SigmaEstimate)> {
    let sigma = sigma_m_estimate(model, m, lambda, n_samples, streams::derive(seed, streams::tag("sigma_m")))?;
    let n = sigma.n;
    let s = sigma.sigma2.sqrt();
    let decs = streams::par_samples(seed, n_samples, |_, rng| decompose(&model.generate(m, n, rng)));
    let decs: Vec<WilcoxonDecomposition> = decs.into_iter().collect::<Result<_>>()?;
    let z: Vec<f64> = decs.iter().map(|d| (d.w - d.d) / s).collect();
    let d0 = m as f64 * (n + m + 1) as f64 / 2.0;
    let z0: Vec<f64> = decs.iter().map(|d| (d.w - d0) / s).collect();
    let (v0, _) = stats::variance_with_se(&z0);
    let mean0 = stats::mean(&z0);
    let se0 = (v0 / n_samples as f64).sqrt();
    let max_gap = decs.iter().map(|d| d.identity_gap()).fold(0.0, f64::max);
    let report = CltReport::from_samples(m, &z, criteria)?
        .with("n", n as f64)
        .with("sigma2", sigma.sigma2)
        .with("D", decs[0].d)
        .with("null_center", d0)
        .with("null_center_mean", mean0)
        .with("null_center_z", mean0 / se0.max(1e-300))
        .with("var_a_ratio", sigma.var_a_ratio)
        .with("scaled_sigma", sigma.scaled_sigma)
        .with("max_identity_gap", max_gap);
    Ok((report, sigma))
}
