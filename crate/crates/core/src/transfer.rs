//! Transfer operators and their Galerkin (Ulam) discretization.
//!
//! The operator here is normalized against μ, so it is the dual of the
//! Koopman operator in `L²(μ)`: `∫ (Lf)·g dμ = ∫ f·(g∘T) dμ`, and `L1 = 1`.
//! Its Ulam discretization on cells `c_1, …, c_N` starts from the joint
//! matrix `J_ij = μ(c_i ∩ T⁻¹c_j)`:
//!
//! ```text
//! (L̂f)_j = Σ_i J_ij f_i / μ(c_j)        Koopman:  M_ij = J_ij / μ(c_i)
//! ```
//!
//! `J` is assembled exactly. For the Gauss map each inverse branch maps a
//! cell onto an interval whose μ-measure is closed form, and all branches
//! `k ≥ ⌈1/c_1⌉` fall inside the first cell with total mass
//! `log2((K+b)/(K+a))` (a telescoping sum). For a Markov shift the cells are
//! cylinders of a fixed depth and `J` follows from the chain.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::quad::GaussLegendre;
use crate::stats;
use crate::streams;
use crate::systems::{self, GibbsMarkovSystem, MarkovChain, Point, SystemKind};

/// Partition of the phase space used by the discretization.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Cells `(b_i, b_{i+1}]` of (0, 1).
    Interval { breaks: Vec<f64>, weights: Vec<f64> },
    /// Depth-`depth` cylinders of positive measure; `codes` holds the word
    /// read in base `states`, first symbol most significant.
    Cylinder { states: usize, depth: usize, codes: Vec<usize>, weights: Vec<f64> },
}

impl Grid {
    pub fn gauss_uniform(n: usize) -> Result<Self> {
        Self::gauss_with_breaks(n, &[])
    }

    /// Uniform cells refined at the given extra breakpoints.
    pub fn gauss_with_breaks(n: usize, extra: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("resolution {n} is below 2")));
        }
        let mut breaks: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        breaks.extend(extra.iter().copied().filter(|&x| x > 0.0 && x < 1.0));
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let weights = breaks.windows(2).map(|w| systems::gauss_interval_measure(w[0], w[1])).collect();
        Ok(Grid::Interval { breaks, weights })
    }

    pub fn cylinders(chain: &MarkovChain, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Config("cylinder depth must be at least 1".into()));
        }
        let s = chain.states();
        let total = s.checked_pow(depth as u32).filter(|&t| t <= 1 << 22).ok_or_else(|| {
            Error::Config(format!("{s}^{depth} cylinders exceed the supported grid size"))
        })?;
        let p = chain.transition();
        let mut codes = Vec::new();
        let mut weights = Vec::new();
        for code in 0..total {
            let w = decode(code, s, depth);
            let mut m = chain.stationary()[w[0]];
            for k in 1..depth {
                m *= p[w[k - 1]][w[k]];
            }
            if m > 0.0 {
                codes.push(code);
                weights.push(m);
            }
        }
        Ok(Grid::Cylinder { states: s, depth, codes, weights })
    }

    /// Grid of `resolution` cells: uniform for the Gauss map, cylinders of
    /// depth `log_S(resolution)` for an `S`-state shift.
    pub fn for_system(sys: &GibbsMarkovSystem, resolution: usize) -> Result<Self> {
        match sys.kind() {
            SystemKind::GaussMap => Self::gauss_uniform(resolution),
            SystemKind::MarkovShift(c) => {
                let s = c.states();
                let mut depth = 0;
                let mut size = 1usize;
                while size < resolution {
                    size = size.saturating_mul(s);
                    depth += 1;
                }
                if size != resolution || depth == 0 {
                    return Err(Error::Config(format!(
                        "resolution {resolution} is not a positive power of the {s} states"
                    )));
                }
                Self::cylinders(c, depth)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.weights().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// μ of every cell.
    pub fn weights(&self) -> &[f64] {
        match self {
            Grid::Interval { weights, .. } | Grid::Cylinder { weights, .. } => weights,
        }
    }

    /// `∫ f dμ` of a grid function.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Cell averages `(1/μ(c_i)) ∫_{c_i} f dμ`. Cylinder grids evaluate `f`
    /// on the cell word, so `f` must not read past the grid depth.
    pub fn project(&self, f: &Observable) -> Result<GridFunction> {
        let values = match self {
            Grid::Interval { breaks, weights } => {
                let gl = GaussLegendre::new(6);
                breaks
                    .par_windows(2)
                    .zip(weights.par_iter())
                    .map(|(w, &m)| {
                        gl.integrate(w[0], w[1], |x| f.eval(Point::Real(x)) * systems::gauss_density(x)) / m
                    })
                    .collect()
            }
            Grid::Cylinder { states, depth, codes, .. } => {
                if f.window() > *depth {
                    return Err(Error::Config(format!(
                        "observable reads {} symbols but cells have depth {depth}",
                        f.window()
                    )));
                }
                codes.iter().map(|&c| f.eval(Point::Symbols(&decode(c, *states, *depth)))).collect()
            }
        };
        Ok(GridFunction { values })
    }
}

fn decode(code: usize, states: usize, depth: usize) -> Vec<usize> {
    let mut w = vec![0; depth];
    let mut c = code;
    for slot in w.iter_mut().rev() {
        *slot = c % states;
        c /= states;
    }
    w
}

/// One value per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { values: vec![c; grid.len()] }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sparse Ulam operator `L̂` in CSR form (row `j` of `L̂` is column `j` of `J`).
#[derive(Debug, Clone)]
pub struct TransferOperator {
    grid: Grid,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TransferOperator {
    pub fn build(sys: &GibbsMarkovSystem, grid: Grid) -> Result<Self> {
        let rows: Vec<Vec<(usize, f64)>> = match (sys.kind(), &grid) {
            (SystemKind::GaussMap, Grid::Interval { breaks, weights }) => (0..weights.len())
                .into_par_iter()
                .map(|j| gauss_joint_column(breaks, j))
                .collect(),
            (SystemKind::MarkovShift(chain), Grid::Cylinder { states, depth, codes, weights }) => {
                markov_joint_columns(chain, *states, *depth, codes, weights)
            }
            _ => return Err(Error::Config("grid does not match the system".into())),
        };
        let weights = grid.weights();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (j, row) in rows.into_iter().enumerate() {
            for (i, jij) in row {
                cols.push(i);
                vals.push(jij / weights[j]);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { grid, row_ptr, cols, vals })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.values.len() != self.len() {
            return Err(Error::GridMismatch { expected: self.len(), got: f.values.len() });
        }
        Ok(GridFunction { values: self.apply_slice(&f.values) })
    }

    pub fn apply_slice(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|j| {
                let (a, b) = (self.row_ptr[j], self.row_ptr[j + 1]);
                self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&i, &v)| v * f[i]).sum()
            })
            .collect()
    }

    pub fn apply_complex(&self, f: &[Complex64]) -> Vec<Complex64> {
        (0..self.len())
            .into_par_iter()
            .map(|j| {
                let (a, b) = (self.row_ptr[j], self.row_ptr[j + 1]);
                self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&i, &v)| f[i] * v).sum()
            })
            .collect()
    }

    /// Entries `(i, j, M_ij)` of the Koopman matrix `M_ij = J_ij / μ(c_i)`,
    /// sorted by row.
    pub fn koopman_entries(&self) -> Vec<(usize, usize, f64)> {
        let w = self.grid.weights();
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.len() {
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                let i = self.cols[k];
                out.push((i, j, self.vals[k] * w[j] / w[i]));
            }
        }
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    /// Writes the Koopman matrix as `row,col,value` lines.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io { path: path.display().to_string(), source };
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(file, "row,col,value").map_err(io)?;
        for (i, j, v) in self.koopman_entries() {
            writeln!(file, "{i},{j},{v:e}").map_err(io)?;
        }
        file.flush().map_err(io)
    }

    /// Dense copy of `L̂`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                m[(j, self.cols[k])] += self.vals[k];
            }
        }
        m
    }
}

/// Column `j` of `J` for an interval grid, as `(i, J_ij)` pairs.
fn gauss_joint_column(breaks: &[f64], j: usize) -> Vec<(usize, f64)> {
    let (a, b) = (breaks[j], breaks[j + 1]);
    let n = breaks.len() - 1;
    let mut col = vec![0.0; n];
    let k_tail = (1.0 / breaks[1]).ceil().max(1.0) as usize;
    for k in 1..k_tail {
        let kf = k as f64;
        let (lo, hi) = (1.0 / (kf + b), 1.0 / (kf + a));
        let mut i = breaks.partition_point(|&c| c <= lo).saturating_sub(1);
        while i < n && breaks[i] < hi {
            let (l, h) = (lo.max(breaks[i]), hi.min(breaks[i + 1]));
            if h > l {
                col[i] += systems::gauss_interval_measure(l, h);
            }
            i += 1;
        }
    }
    let kt = k_tail as f64;
    col[0] += ((b - a) / (kt + a)).ln_1p() / std::f64::consts::LN_2;
    col.into_iter().enumerate().filter(|&(_, v)| v > 0.0).collect()
}

fn markov_joint_columns(
    chain: &MarkovChain,
    states: usize,
    depth: usize,
    codes: &[usize],
    weights: &[f64],
) -> Vec<Vec<(usize, f64)>> {
    let p = chain.transition();
    let mut index = std::collections::HashMap::with_capacity(codes.len());
    for (cell, &c) in codes.iter().enumerate() {
        index.insert(c, cell);
    }
    let stride = states.pow(depth as u32 - 1);
    codes
        .par_iter()
        .map(|&cw| {
            let w = decode(cw, states, depth);
            let mut col = Vec::new();
            for s in 0..states {
                // predecessor u = (s, w_0, …, w_{d−2})
                let cu = s * stride + cw / states;
                if let Some(&iu) = index.get(&cu) {
                    let last = if depth == 1 { s } else { w[depth - 2] };
                    let jij = weights[iu] * p[last][w[depth - 1]];
                    if jij > 0.0 {
                        col.push((iu, jij));
                    }
                }
            }
            col.sort_by_key(|e| e.0);
            col
        })
        .collect()
}

/// Pointwise μ-normalized Gauss transfer operator
/// `(Lf)(x) = Σ_k (1+x)/((k+x)(k+x+1)) · f(1/(k+x))`, truncated at `k_max`
/// with the remaining weight `(1+x)/(k_max+1+x)` assigned to
/// `f(1/(k_max+1+x))`.
pub fn gauss_transfer_at<F: Fn(f64) -> f64>(f: F, x: f64, k_max: usize) -> f64 {
    let mut sum = 0.0;
    for k in (1..=k_max).rev() {
        let kx = k as f64 + x;
        sum += (1.0 + x) / (kx * (kx + 1.0)) * f(1.0 / kx);
    }
    let tail_x = k_max as f64 + 1.0 + x;
    sum + (1.0 + x) / tail_x * f(1.0 / tail_x)
}

/// Tuning for [`spectral_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub block: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { max_iterations: 5000, tolerance: 1e-10, block: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub resolution: usize,
    pub lambda1: f64,
    pub rho: f64,
    pub power_iterations: usize,
    pub residual: f64,
    pub subspace_iterations: usize,
    pub rho_residual: f64,
    /// Ritz values on the mean-zero subspace as `(re, im)`, by modulus.
    pub ritz_values: Vec<(f64, f64)>,
}

const CONVERGENCE_LIMIT: f64 = 1e-8;

/// Builds `L̂` on `resolution` cells and reports its leading spectrum.
pub fn build_ulam(sys: &GibbsMarkovSystem, resolution: usize) -> Result<(TransferOperator, SpectralReport)> {
    if sys.is_gauss() && resolution < 8 {
        return Err(Error::Config(format!("resolution {resolution} is below 8")));
    }
    let op = TransferOperator::build(sys, Grid::for_system(sys, resolution)?)?;
    let report = spectral_report(&op, SpectralOptions::default())?;
    Ok((op, report))
}

pub fn spectral_report(op: &TransferOperator, opts: SpectralOptions) -> Result<SpectralReport> {
    let (lambda1, power_iterations, residual) = leading_eigenvalue(op, opts)?;
    let (ritz, subspace_iterations, rho_residual) = subleading_spectrum(op, opts)?;
    let rho = ritz.first().map_or(0.0, |z| z.norm());
    Ok(SpectralReport {
        resolution: op.len(),
        lambda1,
        rho,
        power_iterations,
        residual,
        subspace_iterations,
        rho_residual,
        ritz_values: ritz.iter().map(|z| (z.re, z.im)).collect(),
    })
}

/// Power iteration from a positive non-constant start.
fn leading_eigenvalue(op: &TransferOperator, opts: SpectralOptions) -> Result<(f64, usize, f64)> {
    let grid = op.grid();
    let n = op.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
    let mut lambda = 1.0;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let w = op.apply_slice(&v);
        lambda = grid.integrate(&w) / grid.integrate(&v);
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        residual = w.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - lambda * b).abs())) / scale;
        v = w.iter().map(|x| x / lambda).collect();
        if residual < opts.tolerance {
            return Ok((lambda, it, residual));
        }
    }
    if residual > CONVERGENCE_LIMIT {
        return Err(Error::Convergence { iterations: opts.max_iterations, residual });
    }
    Ok((lambda, opts.max_iterations, residual))
}

fn center_in_place(grid: &Grid, v: &mut [f64]) {
    let m = grid.integrate(v) / grid.weights().iter().sum::<f64>();
    v.iter_mut().for_each(|x| *x -= m);
}

/// Modified Gram-Schmidt; columns that collapse are replaced by fresh
/// mean-zero random vectors. Returns false when every input column vanished.
fn orthonormalize(grid: &Grid, cols: &mut [Vec<f64>], rng: &mut streams::StreamRng) -> bool {
    let mut any = false;
    for c in 0..cols.len() {
        let mut tries = 0;
        loop {
            let before = norm(&cols[c]);
            for prev in 0..c {
                let d = dot(&cols[prev], &cols[c]);
                let (head, tail) = cols.split_at_mut(c);
                tail[0].iter_mut().zip(&head[prev]).for_each(|(x, q)| *x -= d * q);
            }
            let after = norm(&cols[c]);
            if after > 1e-10 * before.max(1e-300) && after > 1e-280 {
                if tries == 0 {
                    any = true;
                }
                cols[c].iter_mut().for_each(|x| *x /= after);
                break;
            }
            tries += 1;
            if tries > 8 {
                cols[c].iter_mut().for_each(|x| *x = 0.0);
                break;
            }
            cols[c] = (0..grid.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
            center_in_place(grid, &mut cols[c]);
        }
    }
    any
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Subspace iteration on the μ-mean-zero subspace (invariant under `L̂`)
/// with Rayleigh-Ritz extraction.
fn subleading_spectrum(op: &TransferOperator, opts: SpectralOptions) -> Result<(Vec<Complex64>, usize, f64)> {
    let grid = op.grid();
    let n = op.len();
    let p = opts.block.min(n.saturating_sub(1));
    if p == 0 {
        return Ok((Vec::new(), 0, 0.0));
    }
    let mut rng = streams::stream(0x5eed_0f5b, 0);
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let mut c: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            center_in_place(grid, &mut c);
            c
        })
        .collect();
    orthonormalize(grid, &mut v, &mut rng);

    let mut residual = f64::INFINITY;
    let mut ritz = Vec::new();
    for it in 1..=opts.max_iterations {
        let mut w: Vec<Vec<f64>> = v.iter().map(|c| op.apply_slice(c)).collect();
        for c in &mut w {
            center_in_place(grid, c);
        }
        let frob: f64 = w.iter().map(|c| dot(c, c)).sum::<f64>().sqrt();
        if frob < 1e-14 {
            // L̂ annihilates the mean-zero subspace
            return Ok((vec![Complex64::new(0.0, 0.0)], it, 0.0));
        }
        let h = DMatrix::from_fn(p, p, |a, b| dot(&v[a], &w[b]));
        let mut vals: Vec<Complex64> = h.complex_eigenvalues().iter().copied().collect();
        vals.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        let theta = vals[0];
        let y = ritz_vector(&h, theta);
        // ‖L̂ V y − θ V y‖ / ‖V y‖
        let (mut num, mut den) = (0.0, 0.0);
        for r in 0..n {
            let mut vy = Complex64::new(0.0, 0.0);
            let mut wy = Complex64::new(0.0, 0.0);
            for c in 0..p {
                vy += y[c] * v[c][r];
                wy += y[c] * w[c][r];
            }
            num += (wy - theta * vy).norm_sqr();
            den += vy.norm_sqr();
        }
        residual = if den > 0.0 { (num / den).sqrt() } else { f64::INFINITY };
        ritz = vals;
        if residual < opts.tolerance {
            return Ok((ritz, it, residual));
        }
        if !orthonormalize(grid, &mut w, &mut rng) {
            return Ok((vec![Complex64::new(0.0, 0.0)], it, 0.0));
        }
        v = w;
    }
    if residual > CONVERGENCE_LIMIT {
        return Err(Error::Convergence { iterations: opts.max_iterations, residual });
    }
    Ok((ritz, opts.max_iterations, residual))
}

/// Eigenvector of `h` for the eigenvalue `theta` by shifted inverse iteration.
fn ritz_vector(h: &DMatrix<f64>, theta: Complex64) -> Vec<Complex64> {
    let p = h.nrows();
    let shift = theta + Complex64::new(1e-10 * (1.0 + theta.norm()), 0.0);
    let hc = DMatrix::from_fn(p, p, |a, b| {
        Complex64::new(h[(a, b)], 0.0) - if a == b { shift } else { Complex64::new(0.0, 0.0) }
    });
    let lu = hc.lu();
    let mut y = nalgebra::DVector::from_element(p, Complex64::new(1.0, 0.0));
    for _ in 0..3 {
        match lu.solve(&y) {
            Some(z) => {
                let nz = z.norm();
                if nz == 0.0 || !nz.is_finite() {
                    break;
                }
                y = z / Complex64::new(nz, 0.0);
            }
            None => break,
        }
    }
    y.iter().copied().collect()
}

/// All eigenvalues of the dense `L̂`, by decreasing modulus. Intended for
/// small grids as a cross-check of [`spectral_report`].
pub fn dense_spectrum(op: &TransferOperator) -> Vec<Complex64> {
    let mut vals: Vec<Complex64> = op.to_dense().complex_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    vals
}

/// Default bound on `|t|·‖f‖∞` for twisted operators.
pub const SMALLNESS_THRESHOLD: f64 = 0.5;

/// Leading eigenvalue of `g ↦ L̂(e^{itf} g)` by power iteration.
pub fn twisted_eigenvalue(op: &TransferOperator, f: &Observable, t: f64) -> Result<Complex64> {
    let values = op.grid().project(f)?;
    twisted_eigenvalue_values(op, &values, values.sup_norm(), t)
}

pub fn twisted_eigenvalue_values(op: &TransferOperator, f: &GridFunction, sup: f64, t: f64) -> Result<Complex64> {
    if f.values.len() != op.len() {
        return Err(Error::GridMismatch { expected: op.len(), got: f.values.len() });
    }
    let size = t.abs() * sup;
    if size > SMALLNESS_THRESHOLD {
        return Err(Error::SmallnessViolation { value: size, threshold: SMALLNESS_THRESHOLD });
    }
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let grid = op.grid();
    let w = grid.weights();
    let sign = t.signum();
    // computing sin at |t| keeps λ(−t) = conj λ(t) bit for bit
    let phase: Vec<Complex64> = f
        .values
        .iter()
        .map(|&x| {
            let a = t.abs() * x;
            Complex64::new(a.cos(), sign * a.sin())
        })
        .collect();
    let integrate = |v: &[Complex64]| -> Complex64 { v.iter().zip(w).map(|(z, &m)| z * m).sum() };
    let mut v = vec![Complex64::new(1.0, 0.0); op.len()];
    let mut lambda = Complex64::new(1.0, 0.0);
    let mut residual = f64::INFINITY;
    let max_iter = 20_000;
    for _ in 0..max_iter {
        let twisted: Vec<Complex64> = v.iter().zip(&phase).map(|(a, b)| a * b).collect();
        let next = op.apply_complex(&twisted);
        let new_lambda = integrate(&next) / integrate(&v);
        let scale = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        residual = next
            .iter()
            .zip(&v)
            .fold(0.0f64, |m, (a, b)| m.max((a - new_lambda * b).norm()))
            / scale;
        v = next.iter().map(|z| z / new_lambda).collect();
        let settled = (new_lambda - lambda).norm() <= 1e-16;
        lambda = new_lambda;
        if residual < 1e-14 || (settled && residual < 1e-12) {
            return Ok(lambda);
        }
    }
    if residual > CONVERGENCE_LIMIT {
        return Err(Error::Convergence { iterations: max_iter, residual });
    }
    Ok(lambda)
}

/// Green-Kubo sum with its stopping lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenKubo {
    pub sigma2: f64,
    pub lags: usize,
    pub variance: f64,
}

pub const GREEN_KUBO_CAP: usize = 10_000;

/// `σ² = ∫f² dμ + 2 Σ_{k≥1} ∫ (L̂^k f)·f dμ`, stopping once a term drops
/// below 1e-10 in magnitude or at `cap` lags.
pub fn variance_green_kubo(op: &TransferOperator, f: &Observable, cap: usize) -> Result<GreenKubo> {
    let values = op.grid().project(f)?;
    variance_green_kubo_values(op, &values, cap)
}

pub fn variance_green_kubo_values(op: &TransferOperator, f: &GridFunction, cap: usize) -> Result<GreenKubo> {
    if f.values.len() != op.len() {
        return Err(Error::GridMismatch { expected: op.len(), got: f.values.len() });
    }
    if cap == 0 {
        return Err(Error::Config("Green-Kubo lag cap must be at least 1".into()));
    }
    let grid = op.grid();
    let mean = grid.integrate(&f.values);
    if mean.abs() >= 1e-8 {
        return Err(Error::NotCentered(mean));
    }
    let v: Vec<f64> = f.values.iter().map(|x| x - mean).collect();
    let c0: f64 = grid.weights().iter().zip(&v).map(|(w, x)| w * x * x).sum();
    let mut sum = c0;
    let mut g = v.clone();
    let mut lags = cap;
    for k in 1..=cap {
        g = op.apply_slice(&g);
        let term: f64 = grid.weights().iter().zip(g.iter().zip(&v)).map(|(w, (a, b))| w * a * b).sum();
        sum += 2.0 * term;
        if term.abs() < 1e-10 {
            lags = k;
            break;
        }
    }
    if sum < 0.0 {
        log::warn!("Green-Kubo sum {sum:e} is negative; clipping to 0");
        sum = 0.0;
    }
    Ok(GreenKubo { sigma2: sum, lags, variance: c0 })
}

/// Default step of the eigenvalue-curvature estimator.
pub const SPECTRAL_T0: f64 = 1e-2;

/// `σ² ≈ 2(1 − Re λ_t)/t²`, Richardson-extrapolated over `t0` and `t0/2`.
pub fn variance_spectral(op: &TransferOperator, f: &Observable, t0: f64) -> Result<f64> {
    let values = op.grid().project(f)?;
    let sup = values.sup_norm();
    let mean = op.grid().integrate(&values.values);
    if mean.abs() >= 1e-8 {
        return Err(Error::NotCentered(mean));
    }
    let centered = GridFunction { values: values.values.iter().map(|x| x - mean).collect() };
    let s = |t: f64| -> Result<f64> {
        let lambda = twisted_eigenvalue_values(op, &centered, sup, t)?;
        Ok(2.0 * (1.0 - lambda.re) / (t * t))
    };
    let (coarse, fine) = (s(t0)?, s(t0 / 2.0)?);
    Ok(((4.0 * fine - coarse) / 3.0).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloVariance {
    pub sigma2: f64,
    pub standard_error: f64,
    pub n: usize,
    pub samples: usize,
}

/// `Var(S_n)/n` for Birkhoff sums over `n_samples` μ-typical orbits.
pub fn variance_monte_carlo(
    sys: &GibbsMarkovSystem,
    f: &Observable,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloVariance> {
    if n == 0 || n_samples < 2 {
        return Err(Error::Config("need n ≥ 1 and at least two samples".into()));
    }
    let sums = streams::par_samples(seed, n_samples, |_, rng| {
        let traj = sys.sample_trajectory(n, f.window(), rng);
        f.birkhoff_sum(&traj, 0, n)
    });
    let (var, se) = stats::variance_with_se(&sums);
    Ok(MonteCarloVariance { sigma2: var / n as f64, standard_error: se / n as f64, n, samples: n_samples })
}

/// The three estimators side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub sigma2_green_kubo: f64,
    pub sigma2_spectral: f64,
    pub sigma2_monte_carlo: f64,
    pub monte_carlo_se: f64,
    pub variance: f64,
    pub lag: usize,
    pub t0: f64,
}

impl VarianceEstimate {
    /// The observable looks like a coboundary: `σ² < 0.01·Var(f)`.
    pub fn is_coboundary(&self) -> bool {
        self.sigma2_green_kubo < 0.01 * self.variance
    }

    /// Largest pairwise relative gap between the two deterministic
    /// estimators and the Monte Carlo one, and the Monte Carlo z-score
    /// against Green-Kubo.
    pub fn agreement(&self) -> (f64, f64) {
        let gk = self.sigma2_green_kubo;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        let gap = rel(gk, self.sigma2_spectral)
            .max(rel(gk, self.sigma2_monte_carlo))
            .max(rel(self.sigma2_spectral, self.sigma2_monte_carlo));
        let z = (self.sigma2_monte_carlo - gk).abs() / self.monte_carlo_se.max(1e-300);
        (gap, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceOptions {
    pub lag_cap: usize,
    pub t0: f64,
    pub mc_n: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self { lag_cap: GREEN_KUBO_CAP, t0: SPECTRAL_T0, mc_n: 1000, mc_samples: 10_000, seed: 0 }
    }
}

pub fn estimate_variance(
    sys: &GibbsMarkovSystem,
    op: &TransferOperator,
    f: &Observable,
    opts: VarianceOptions,
) -> Result<VarianceEstimate> {
    let gk = variance_green_kubo(op, f, opts.lag_cap)?;
    let sp = variance_spectral(op, f, opts.t0)?;
    let mc = variance_monte_carlo(sys, f, opts.mc_n, opts.mc_samples, opts.seed)?;
    let gap = (gk.sigma2 - sp).abs() / gk.sigma2.max(sp).max(1e-300);
    if gap > 0.05 {
        log::warn!("Green-Kubo ({}) and spectral ({sp}) variances differ by {:.1}%", gk.sigma2, 100.0 * gap);
    }
    Ok(VarianceEstimate {
        sigma2_green_kubo: gk.sigma2,
        sigma2_spectral: sp,
        sigma2_monte_carlo: mc.sigma2,
        monte_carlo_se: mc.standard_error,
        variance: gk.variance,
        lag: gk.lags,
        t0: opts.t0,
    })
}
