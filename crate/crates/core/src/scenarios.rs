//! End-to-end runs shared by the command line and the acceptance suite.
//!
//! Each run returns its payload records (one per row plus a closing summary)
//! and a pass flag. Records only depend on the inputs and the seed.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::arrays::{self, BlockSchedule, NormProxy};
use crate::clt::{self, BirkhoffRow, CltReport, PassCriteria, SigmaSource};
use crate::error::{Error, Result};
use crate::observables::{self, Example5Spec, Observable};
use crate::streams;
use crate::systems::{GibbsMarkovSystem, MarkovChain, Point, SystemKind};
use crate::transfer::{self, Grid, GridFunction, SpectralOptions, TransferOperator, VarianceOptions};
use crate::wilcoxon::{self, Coupling, PreparedModel, Score, SeriesModel};

/// Records and verdict of one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub scenario: String,
    pub records: Vec<Value>,
    pub reports: Vec<CltReport>,
    pub checks: BTreeMap<String, bool>,
    pub pass: bool,
}

impl Outcome {
    fn new(scenario: &str) -> Self {
        Self { scenario: scenario.into(), records: Vec::new(), reports: Vec::new(), checks: BTreeMap::new(), pass: true }
    }

    fn push<T: Serialize>(&mut self, record: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if let Value::Object(map) = &mut v {
            map.insert("record".into(), json!(record));
            map.insert("scenario".into(), json!(self.scenario));
        }
        self.records.push(v);
        Ok(())
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.into(), ok);
    }

    fn finish(mut self, extra: Value) -> Self {
        self.pass = self.checks.values().all(|&c| c);
        self.records.push(json!({
            "record": "summary",
            "scenario": self.scenario,
            "checks": self.checks,
            "pass": self.pass,
            "extra": extra,
        }));
        self
    }
}

/// The 2-state chain `[[0.9, 0.1], [0.2, 0.8]]`.
pub fn two_state_chain() -> GibbsMarkovSystem {
    let chain = MarkovChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], None, None).expect("valid chain");
    GibbsMarkovSystem::markov(chain)
}

/// `gauss`, `bernoulli` or `markov2`.
pub fn preset_system(name: &str) -> Option<GibbsMarkovSystem> {
    match name {
        "gauss" => Some(GibbsMarkovSystem::gauss()),
        "bernoulli" => Some(GibbsMarkovSystem::bernoulli_half()),
        "markov2" => Some(two_state_chain()),
        _ => None,
    }
}

pub fn system_label(sys: &GibbsMarkovSystem) -> String {
    match sys.kind() {
        SystemKind::GaussMap => "gauss".into(),
        SystemKind::MarkovShift(c) => format!("markov({} states)", c.states()),
    }
}

/// Default observable name for a system.
pub fn default_observable(sys: &GibbsMarkovSystem) -> &'static str {
    if sys.is_gauss() {
        "identity"
    } else {
        "indicator:0"
    }
}

/// A centered observable by name, with the breakpoints at which it jumps.
///
/// Names: `identity` (Gauss), `coin` (indicator of state 0 on a 2-state shift),
/// `indicator:k`, `coboundary` (`φ∘T − φ` for the centered indicator of
/// symbol 1).
pub fn named_observable(sys: &GibbsMarkovSystem, name: &str) -> Result<(Observable, Vec<f64>)> {
    let digit_breaks = |k: usize| if sys.is_gauss() { vec![1.0 / k as f64, 1.0 / (k as f64 + 1.0)] } else { vec![] };
    let (f, breaks) = match name.split_once(':') {
        None if name == "identity" => {
            if !sys.is_gauss() {
                return Err(Error::Config("the identity observable needs the Gauss map".into()));
            }
            (Observable::identity(), vec![])
        }
        None if name == "coin" => match sys.chain() {
            Some(c) if c.states() == 2 => (Observable::state_function(vec![1.0, 0.0]).with_label("coin"), vec![]),
            _ => return Err(Error::Config("the coin observable needs a 2-state shift".into())),
        },
        None if name == "coboundary" => {
            let phi = observables::center(sys, &Observable::indicator(1))?;
            (Observable::coboundary(&phi), digit_breaks(1))
        }
        Some(("indicator", k)) => {
            let k: usize = k.parse().map_err(|_| Error::Config(format!("bad indicator '{name}'")))?;
            if sys.is_gauss() && k == 0 {
                return Err(Error::Config("Gauss digits start at 1".into()));
            }
            if let Some(c) = sys.chain() {
                if k >= c.states() {
                    return Err(Error::Index(k));
                }
            }
            (Observable::indicator(k), digit_breaks(k))
        }
        _ => return Err(Error::Config(format!("unknown observable '{name}'"))),
    };
    Ok((observables::center(sys, &f)?, breaks))
}

/// Ulam operator fine enough for `f`: shift cylinders at least as deep as
/// the window of `f`, Gauss cells refined at `breaks`.
pub fn operator_for(sys: &GibbsMarkovSystem, window: usize, resolution: usize, breaks: &[f64]) -> Result<TransferOperator> {
    let grid = match sys.kind() {
        SystemKind::GaussMap => Grid::gauss_with_breaks(resolution, breaks)?,
        SystemKind::MarkovShift(c) => {
            let depth = (1..).find(|&d| c.states().pow(d as u32) >= resolution).unwrap_or(1).max(window.max(1));
            Grid::cylinders(c, depth)?
        }
    };
    TransferOperator::build(sys, grid)
}

pub fn run_spectrum(sys: &GibbsMarkovSystem, resolution: usize) -> Result<Outcome> {
    let mut out = Outcome::new("spectrum");
    let (op, report) = transfer::build_ulam(sys, resolution)?;
    let one = op.apply(&GridFunction::constant(op.grid(), 1.0))?;
    let fixed_point_error = one.values.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    out.push(
        "spectrum",
        &json!({
            "system": system_label(sys),
            "cells": op.len(),
            "nnz": op.nnz(),
            "fixed_point_error": fixed_point_error,
            "report": report,
        }),
    )?;
    out.check("fixed_point", fixed_point_error < 1e-6);
    out.check("lambda1", (report.lambda1 - 1.0).abs() < 1e-8);
    Ok(out.finish(json!({ "rho": report.rho })))
}

/// Spectrum plus the cross-check against the dense eigensolver when the
/// grid is small enough.
pub fn spectral_summary(op: &TransferOperator) -> Result<(transfer::SpectralReport, Option<f64>)> {
    let report = transfer::spectral_report(op, SpectralOptions::default())?;
    let dense = (op.len() <= 256).then(|| transfer::dense_spectrum(op).get(1).map_or(0.0, |z| z.norm()));
    Ok((report, dense))
}

#[derive(Debug, Clone, Copy)]
pub struct VarianceParams {
    pub resolution: usize,
    pub options: VarianceOptions,
}

pub fn run_variance(sys: &GibbsMarkovSystem, obs: &str, p: VarianceParams) -> Result<Outcome> {
    let mut out = Outcome::new("variance");
    let (f, breaks) = named_observable(sys, obs)?;
    if sys.is_gauss() && obs == "coboundary" {
        return gauss_coboundary_variance(sys, &f, p, out);
    }
    let op = operator_for(sys, f.window(), p.resolution, &breaks)?;
    let est = transfer::estimate_variance(sys, &op, &f, p.options)?;
    let (gap, z) = est.agreement();
    let det_gap = (est.sigma2_green_kubo - est.sigma2_spectral).abs()
        / est.sigma2_green_kubo.max(est.sigma2_spectral).max(1e-300);
    out.push(
        "variance",
        &json!({
            "system": system_label(sys),
            "observable": obs,
            "cells": op.len(),
            "estimate": est,
            "relative_gap": gap,
            "monte_carlo_z": z,
            "coboundary": est.is_coboundary(),
        }),
    )?;
    if est.is_coboundary() {
        out.check("coboundary_detected", est.sigma2_spectral < 0.01 * est.variance);
    } else {
        out.check("deterministic_agreement", det_gap < 0.05);
        out.check("pairwise_agreement", gap < 0.05);
        out.check("monte_carlo_within_3se", z < 3.0);
    }
    Ok(out.finish(json!({ "sigma2": est.sigma2_green_kubo })))
}

/// The Ulam chain randomizes the map inside each cell, so it cannot see the
/// telescoping of a Gauss-map coboundary. Its variance is read from Birkhoff
/// sums instead, against `Var(f)` by quadrature.
fn gauss_coboundary_variance(sys: &GibbsMarkovSystem, f: &Observable, p: VarianceParams, mut out: Outcome) -> Result<Outcome> {
    let opts = p.options;
    let mc = transfer::variance_monte_carlo(sys, f, opts.mc_n, opts.mc_samples, opts.seed)?;
    // f = φ∘T − φ jumps where T x crosses 1/2
    let jumps: Vec<f64> = (1..=2048).map(|k| 2.0 / (2 * k + 1) as f64).collect();
    let variance = observables::gauss_integral(|x| f.eval(Point::Real(x)).powi(2), &jumps);
    let coboundary = mc.sigma2 < 0.01 * variance;
    out.push(
        "variance",
        &json!({
            "system": system_label(sys),
            "observable": "coboundary",
            "monte_carlo": mc,
            "variance": variance,
            "coboundary": coboundary,
        }),
    )?;
    out.check("coboundary_detected", coboundary);
    Ok(out.finish(json!({ "sigma2": mc.sigma2 })))
}

/// Shared Monte Carlo settings of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepParams {
    pub samples: usize,
    pub seed: u64,
    pub resolution: usize,
    pub criteria: PassCriteria,
}

fn ks_checks(out: &mut Outcome, reports: &[CltReport], threshold: f64) {
    let last = reports.last();
    out.check("terminal_ks", last.is_some_and(|r| r.ks_distance < threshold));
    out.check("terminal_moments", last.is_some_and(|r| r.pass));
    out.check("ks_nonincreasing", clt::ks_nonincreasing(reports));
}

/// Birkhoff sums of a fixed observable at lengths `ks`, normalized by the
/// Green-Kubo `σ²`.
pub fn run_thm41(sys: &GibbsMarkovSystem, obs: &str, ks: &[usize], p: SweepParams) -> Result<Outcome> {
    let mut out = Outcome::new("thm41");
    let (f, breaks) = named_observable(sys, obs)?;
    let op = operator_for(sys, f.window(), p.resolution, &breaks)?;
    let rows: Vec<BirkhoffRow> =
        ks.iter().enumerate().map(|(i, &k)| BirkhoffRow { n: i + 1, k, f: f.clone() }).collect();
    let reports = clt::clt_sweep_theorem41(sys, &rows, SigmaSource::GreenKubo(&op), p.samples, p.seed, p.criteria)?;
    for r in &reports {
        out.push("row", r)?;
    }
    ks_checks(&mut out, &reports, p.criteria.ks_threshold);
    out.reports = reports;
    Ok(out.finish(json!({ "system": system_label(sys), "observable": obs })))
}

/// `ρ` of the Ulam operator and the norm proxy of `f`.
fn array_inputs(sys: &GibbsMarkovSystem, f: &Observable, op: &TransferOperator, seed: u64) -> Result<(f64, NormProxy)> {
    let report = transfer::spectral_report(op, SpectralOptions::default())?;
    let holder = observables::holder_constant(sys, f, 1, 2000, streams::derive(seed, streams::tag("holder")))?;
    let values = streams::par_samples(streams::derive(seed, streams::tag("oscillation")), 10_000, |_, rng| {
        f.at(&sys.sample_trajectory(1, f.window(), rng), 0)
    });
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok((report.rho, NormProxy { sup_norm: f.sup_norm(), holder, oscillation: hi - lo, r: sys.r() }))
}

/// ρ used to size the spacing when the operator has no gap to speak of.
fn schedule_rho(rho: f64) -> f64 {
    rho.clamp(1e-3, 1.0 - 1e-9)
}

/// Main rows of the default block schedule: row sums over `š`, with the
/// hypothesis ledger per row.
pub fn run_thm54(sys: &GibbsMarkovSystem, obs: &str, ns: &[usize], p: SweepParams) -> Result<Outcome> {
    let mut out = Outcome::new("thm54");
    let (f, breaks) = named_observable(sys, obs)?;
    let op = operator_for(sys, f.window(), p.resolution, &breaks)?;
    let (rho, norms) = array_inputs(sys, &f, &op, p.seed)?;
    let schedule = BlockSchedule::new(schedule_rho(rho))?;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for &n in ns {
        let d = schedule.decompose(n, &f)?;
        let main = d.main.ok_or_else(|| Error::Config(format!("n = {n} leaves no main block")))?;
        rows.push((n, main));
        gaps.push(d.gaps);
    }
    let mut reports = clt::clt_array_theorem54(sys, &rows, rho, &norms, p.samples, p.seed, p.criteria)?;
    for ((report, (n, row)), gap) in reports.iter_mut().zip(&rows).zip(&gaps) {
        report.diagnostics.insert("l".into(), schedule.l(*n) as f64);
        report.diagnostics.insert("span".into(), row.span() as f64);
        if let Some(g) = gap {
            let seed = streams::derive(p.seed, streams::tag(&format!("gap:{n}")));
            let sums = arrays::sample_row_sums(sys, g, p.samples.max(1000), seed);
            let (v, _) = crate::stats::variance_with_se(&sums);
            let s = report.diagnostics["s_check"];
            report.diagnostics.insert("gap_variance_ratio".into(), v / (s * s));
        }
    }
    for r in &reports {
        out.push("row", r)?;
    }
    array_checks(&mut out, &reports);
    ks_checks(&mut out, &reports, p.criteria.ks_threshold);
    out.reports = reports;
    Ok(out.finish(json!({
        "system": system_label(sys),
        "observable": obs,
        "rho": rho,
        "norms": norms,
        "schedule": schedule,
    })))
}

/// Ledger trends from `n ≥ 256` on, the variance ratio from `n ≥ 4096` on.
fn array_checks(out: &mut Outcome, reports: &[CltReport]) {
    let tail: Vec<&CltReport> = reports.iter().filter(|r| r.n >= 256).collect();
    let ledgers: Vec<&arrays::HypothesisLedger> = tail.iter().filter_map(|r| r.ledger.as_ref()).collect();
    let nonincreasing = |key: fn(&arrays::HypothesisLedger) -> f64| {
        ledgers.windows(2).all(|w| key(w[1]) <= key(w[0]) * (1.0 + 1e-12))
    };
    out.check("cond2_nonincreasing", nonincreasing(|l| l.cond2));
    out.check("cond3_nonincreasing", nonincreasing(|l| l.cond3));
    out.check("ledger_finite", ledgers.iter().all(|l| l.cond2.is_finite() && l.cond3.is_finite() && l.cond3prime.is_finite()));
    let key = arrays::eps_key(0.1);
    let lind: Vec<(f64, f64)> = tail
        .iter()
        .filter_map(|r| {
            let l = r.ledger.as_ref()?.lindeberg.get(&key)?;
            Some((*l, r.diagnostics.get(&format!("lindeberg_se:{key}")).copied().unwrap_or(0.0)))
        })
        .collect();
    out.check(
        "lindeberg_decreasing",
        lind.windows(2).all(|w| w[1].0 <= w[0].0 + 2.0 * w[0].1.hypot(w[1].1)),
    );
    let big: Vec<f64> =
        reports.iter().filter(|r| r.n >= 4096).filter_map(|r| r.ledger.as_ref().map(|l| l.variance_ratio)).collect();
    out.check("variance_ratio", !big.is_empty() && big.iter().all(|v| (0.9..=1.1).contains(v)));
}

/// Full Birkhoff sums `S_n/√(nσ²)` along the block schedule, with the share
/// of variance carried by the gap row reported per `n`.
pub fn run_cor57(sys: &GibbsMarkovSystem, obs: &str, ns: &[usize], p: SweepParams) -> Result<Outcome> {
    let mut out = Outcome::new("cor57");
    let (f, breaks) = named_observable(sys, obs)?;
    let op = operator_for(sys, f.window(), p.resolution, &breaks)?;
    let report = transfer::spectral_report(&op, SpectralOptions::default())?;
    let schedule = BlockSchedule::new(schedule_rho(report.rho))?;
    let s2 = clt::sigma2(sys, &f, SigmaSource::GreenKubo(&op), p.seed)?;
    let rows: Vec<BirkhoffRow> = ns.iter().map(|&n| BirkhoffRow { n, k: n, f: f.clone() }).collect();
    let mut reports = clt::clt_sweep_theorem41(sys, &rows, SigmaSource::Fixed(s2), p.samples, p.seed, p.criteria)?;
    for (r, &n) in reports.iter_mut().zip(ns) {
        let d = schedule.decompose(n, &f)?;
        r.diagnostics.insert("l".into(), d.l as f64);
        r.diagnostics.insert("m".into(), d.m as f64);
        r.diagnostics.insert("blocks".into(), d.k as f64);
        if let Some(g) = &d.gaps {
            let seed = streams::derive(p.seed, streams::tag(&format!("gap:{n}")));
            let sums = arrays::sample_row_sums(sys, g, p.samples.max(1000), seed);
            let (v, _) = crate::stats::variance_with_se(&sums);
            r.diagnostics.insert("gap_variance_ratio".into(), v / (n as f64 * s2));
        }
    }
    for r in &reports {
        out.push("row", r)?;
    }
    ks_checks(&mut out, &reports, p.criteria.ks_threshold);
    out.reports = reports;
    Ok(out.finish(json!({ "system": system_label(sys), "observable": obs, "sigma2": s2, "schedule": schedule })))
}

#[derive(Debug, Clone)]
pub struct Example5Params {
    pub eta: f64,
    pub n_trunc: usize,
    /// Birkhoff lengths of the CLT rows; row `k` uses `f_{⌊k^{1/8}⌋}`.
    pub ks: Vec<usize>,
    pub holder_ns: Vec<usize>,
    pub holder_pairs: usize,
    pub sweep: SweepParams,
}

impl Default for Example5Params {
    fn default() -> Self {
        Self {
            eta: 0.25,
            n_trunc: 64,
            ks: vec![100, 1000, 10_000],
            holder_ns: vec![2, 4, 8, 16],
            holder_pairs: 4000,
            sweep: SweepParams {
                samples: 50_000,
                seed: 0,
                resolution: 512,
                criteria: PassCriteria { ks_threshold: 0.05, var_tolerance: 0.05 },
            },
        }
    }
}

/// `‖g_n‖∞` and `‖g_n‖₂` recomputed from the evaluator: values on and off
/// the special element, and a quadrature of `g_n²` (invariance lets the
/// shift `T^{m_n}` drop out).
fn term_norms_from_evaluator(spec: &Example5Spec, n: usize) -> (f64, f64) {
    let t = spec.term(n);
    let g = observables::example5_term(spec, n);
    let mut word = vec![1usize; t.m + 1];
    word[t.m] = t.digit;
    let on = g.eval(Point::Symbols(&word));
    word[t.m] = t.digit + 1;
    let off = g.eval(Point::Symbols(&word));
    let k = t.digit as f64;
    let (ell, mu) = (t.ell, t.mu);
    let sq = observables::gauss_integral(
        |x| {
            let d = if x > 1.0 / (k + 1.0) && x <= 1.0 / k { 1.0 } else { 0.0 };
            (ell * (d - mu)).powi(2)
        },
        &[1.0 / k, 1.0 / (k + 1.0)],
    );
    (on.abs().max(off.abs()), sq.sqrt())
}

/// σ² of `f_N` through its depth-one proxy on a grid aligned with every
/// special element.
pub fn example5_sigma2(spec: &Example5Spec, resolution: usize) -> Result<f64> {
    let sys = GibbsMarkovSystem::gauss();
    let proxy = observables::example5_depth_one(spec);
    let op = TransferOperator::build(&sys, Grid::gauss_with_breaks(resolution, &spec.breakpoints())?)?;
    Ok(transfer::variance_green_kubo(&op, &proxy, transfer::GREEN_KUBO_CAP)?.sigma2)
}

pub fn run_example5(p: &Example5Params) -> Result<Outcome> {
    let mut out = Outcome::new("example5");
    let sys = GibbsMarkovSystem::gauss();
    let spec = Example5Spec::new(p.eta, p.n_trunc)?;

    let mut closed_form_ok = true;
    for n in 1..=p.n_trunc.min(32) {
        let t = spec.term(n);
        let (sup, l2) = term_norms_from_evaluator(&spec, n);
        let (e_sup, e_l2) = ((sup - t.sup_norm).abs(), (l2 - t.l2_norm).abs());
        closed_form_ok &= e_sup < 1e-10 && e_l2 < 1e-10;
        out.push("term", &json!({ "term": t, "sup_error": e_sup, "l2_error": e_l2 }))?;
    }
    out.check("closed_forms", closed_form_ok);

    // tail of the untruncated series; the ratios beyond the fitting range
    // are reported only
    let wide = spec.truncated(4096)?;
    let fit_ns: Vec<usize> = (2..=32).collect();
    let (k_fit, ratios) = observables::fit_tail_constant(&wide, &fit_ns);
    let beyond: Vec<usize> = (33..=128).collect();
    let (k_beyond, _) = observables::fit_tail_constant(&wide, &beyond);
    let tail_ok = k_fit.is_finite()
        && fit_ns.iter().all(|&n| wide.tail_sum(n) <= k_fit * (n as f64).powf(-3.0 - 2.0 * p.eta) * (1.0 + 1e-12));
    out.push(
        "tail",
        &json!({ "fitted_constant": k_fit, "ns": fit_ns, "ratios": ratios, "drift_to_128": k_beyond / k_fit }),
    )?;
    out.check("tail_bound", tail_ok);

    let weighted: Vec<f64> = spec.terms().iter().map(|t| t.gamma * t.sup_norm).collect();
    let weighted_ok = weighted.iter().all(|&w| w < 10.0 * weighted[0]);
    out.check("weighted_norms_bounded", weighted_ok);

    let f = observables::build_example5(&sys, &spec)?;
    let mut holder = Vec::new();
    for &n in &p.holder_ns {
        let depth = Example5Spec::m(n).max(1);
        let seed = streams::derive(p.sweep.seed, streams::tag(&format!("holder:{n}")));
        let h = observables::holder_constant(&sys, &f, depth, p.holder_pairs, seed)?;
        out.push("holder", &json!({ "n": n, "depth": depth, "estimate": h }))?;
        holder.push(h);
    }
    out.check("holder_growth", holder.windows(2).all(|w| w[1] > w[0]));

    let mut reports = Vec::new();
    for (i, &k) in p.ks.iter().enumerate() {
        let trunc = ((k as f64).powf(0.125) + 1e-12).floor().max(1.0) as usize;
        let spec_k = spec.truncated(trunc)?;
        let fk = observables::build_example5(&sys, &spec_k)?;
        let s2 = example5_sigma2(&spec_k, p.sweep.resolution)?;
        let row = BirkhoffRow { n: i + 1, k, f: fk };
        let seed = streams::derive(p.sweep.seed, k as u64);
        let mut r = clt::clt_sweep_theorem41(&sys, &[row], SigmaSource::Fixed(s2), p.sweep.samples, seed, p.sweep.criteria)?
            .remove(0);
        r.diagnostics.insert("trunc".into(), trunc as f64);
        out.push("row", &r)?;
        reports.push(r);
    }
    let last = reports.last();
    out.check("terminal_ks", last.is_some_and(|r| r.ks_distance < p.sweep.criteria.ks_threshold));
    out.reports = reports;
    Ok(out.finish(json!({ "eta": p.eta, "n_trunc": p.n_trunc })))
}

#[derive(Debug, Clone)]
pub struct WilcoxonParams {
    pub ms: Vec<usize>,
    pub lambda: f64,
    pub reps: usize,
    pub seed: u64,
    pub criteria: PassCriteria,
}

/// `gauss` or `iid` series model.
pub fn wilcoxon_model(sys: Option<&GibbsMarkovSystem>, phi: Score, psi: Score, coupling: Coupling) -> Result<PreparedModel> {
    match sys {
        Some(s) => SeriesModel::Dynamical { sys: s.clone(), phi, psi, coupling }.prepare(),
        None => SeriesModel::IidUniform { phi, psi }.prepare(),
    }
}

/// Behrens-Fisher reports across `ms`. Equal scores are tested for
/// normality; different scores for a detectable shift of the null center.
pub fn run_wilcoxon(model: &PreparedModel, p: &WilcoxonParams) -> Result<Outcome> {
    let mut out = Outcome::new("wilcoxon");
    let (phi, psi, iid) = match &model.model {
        SeriesModel::Dynamical { phi, psi, .. } => (*phi, *psi, false),
        SeriesModel::IidUniform { phi, psi } => (*phi, *psi, true),
    };
    let mut reports = Vec::new();
    let mut gap = 0.0f64;
    for &m in &p.ms {
        let seed = streams::derive(p.seed, m as u64);
        let (mut r, sigma) = wilcoxon::behrens_fisher_test(model, m, p.lambda, p.reps, seed, p.criteria)?;
        let (mf, nf) = (m as f64, sigma.n as f64);
        let classical = mf * nf * (mf + nf + 1.0) / 12.0;
        r.diagnostics.insert("classical_sigma2".into(), classical);
        r.diagnostics.insert("sigma2_ratio".into(), sigma.sigma2 / classical);
        gap = gap.max(r.diagnostics["max_identity_gap"]);
        out.push("row", &json!({ "report": r, "sigma": sigma }))?;
        reports.push(r);
    }
    let last = reports.last().cloned();
    if phi == psi {
        ks_checks(&mut out, &reports, p.criteria.ks_threshold);
        if iid {
            out.check(
                "classical_variance",
                last.as_ref().is_some_and(|r| (r.diagnostics["sigma2_ratio"] - 1.0).abs() < 0.05),
            );
        }
    } else {
        out.check("alternative_detected", last.as_ref().is_some_and(|r| r.diagnostics["null_center_z"].abs() > 3.0));
    }
    out.check("identity", gap < 1e-9 * p.ms.iter().map(|&m| (m * m) as f64).fold(1.0, f64::max));
    out.reports = reports;
    Ok(out.finish(json!({ "phi": phi, "psi": psi, "lambda": p.lambda, "iid": iid })))
}
