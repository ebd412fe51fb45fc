//! Extreme learning machine that regresses relay hybrid beamformers from
//! noisy channel estimates.
//!
//! Inputs are the real and imaginary parts of the three vectorized channels;
//! targets are the digital blocks (real/imaginary) and the analog phases.
//! Only the output layer is trained, by closed-form ridge regression.

mod dataset;
pub mod store;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::mm::{normalize_fbbt, RelayHbf};
use crate::numerics::{solve_named, ComplexMatrix};
use crate::rng::seeded;
use crate::system::SystemConfig;

pub use dataset::{generate_dataset, held_out_samples, Dataset, DatasetMeta, HeldOut, Sample, SkippedRealization};

pub type RealMatrix = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    MultiquadricRbf,
    Prelu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::MultiquadricRbf => "multiquadric_rbf",
            Activation::Prelu => "prelu",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "multiquadric_rbf" | "rbf" => Ok(Activation::MultiquadricRbf),
            "prelu" => Ok(Activation::Prelu),
            other => Err(Error::InvalidParameter(format!(
                "unknown activation '{other}' (expected sigmoid, multiquadric_rbf or prelu)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElmParams {
    pub hidden: usize,
    pub lambda: f64,
    pub activation: Activation,
    pub prelu_slope: f64,
    pub seed: u64,
}

impl Default for ElmParams {
    fn default() -> Self {
        Self { hidden: 500, lambda: 100.0, activation: Activation::Prelu, prelu_slope: 0.25, seed: 0 }
    }
}

impl ElmParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::InvalidParameter("elm hidden must be >= 1".into()));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("elm lambda must be > 0, got {}", self.lambda)));
        }
        if !self.prelu_slope.is_finite() {
            return Err(Error::InvalidParameter("elm prelu_slope must be finite".into()));
        }
        Ok(())
    }
}

/// Relay dimensions that fix the target layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelayDims {
    pub n_t: usize,
    pub n_r: usize,
    pub n_rft: usize,
    pub n_rfr: usize,
    pub n_s: usize,
}

impl RelayDims {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            n_t: cfg.relay_tx_antennas,
            n_r: cfg.relay_rx_antennas,
            n_rft: cfg.relay_tx_rf,
            n_rfr: cfg.relay_rx_rf,
            n_s: cfg.relay_streams,
        }
    }

    pub fn output_len(&self) -> usize {
        self.n_t * self.n_rft + self.n_r * self.n_rfr + 2 * self.n_s * (self.n_rft + self.n_rfr)
    }
}

/// `2 (n_r N_t + N_r n_t + n_r n_t)`.
pub fn input_len(cfg: &SystemConfig) -> usize {
    let n_r = cfg.relay_rx_antennas;
    let n_t = cfg.relay_tx_antennas;
    2 * (n_r * cfg.source_antennas + cfg.dest_antennas * n_t + n_r * n_t)
}

fn push_re_im(out: &mut Vec<f64>, m: &ComplexMatrix) {
    out.extend(m.iter().map(|z| z.re));
    out.extend(m.iter().map(|z| z.im));
}

/// `[Re vec H_RD, Im vec H_RD, Re vec H_SR, Im vec H_SR, Re vec H_SI, Im vec H_SI]`.
pub fn build_input_vector(ch: &ChannelSet) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * (ch.h_rd.len() + ch.h_sr.len() + ch.h_si.len()));
    push_re_im(&mut x, &ch.h_rd);
    push_re_im(&mut x, &ch.h_sr);
    push_re_im(&mut x, &ch.h_si);
    x
}

/// Phase in `(-pi, pi]`.
fn wrapped_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// `[Re vec F_BBT, Im vec F_BBT, Re vec F_BBR, Im vec F_BBR, arg vec F_RFT, arg vec F_RFR]`.
pub fn build_target_vector(bf: &RelayHbf) -> Result<Vec<f64>> {
    crate::mm::check_unit_modulus(&bf.f_rft, 1e-9)?;
    crate::mm::check_unit_modulus(&bf.f_rfr, 1e-9)?;
    let mut t = Vec::new();
    push_re_im(&mut t, &bf.f_bbt);
    push_re_im(&mut t, &bf.f_bbr);
    t.extend(bf.f_rft.iter().map(|&z| wrapped_arg(z)));
    t.extend(bf.f_rfr.iter().map(|&z| wrapped_arg(z)));
    Ok(t)
}

fn take_complex(t: &[f64], offset: &mut usize, rows: usize, cols: usize) -> ComplexMatrix {
    let n = rows * cols;
    let (re, im) = (&t[*offset..*offset + n], &t[*offset + n..*offset + 2 * n]);
    *offset += 2 * n;
    ComplexMatrix::from_iterator(rows, cols, re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)))
}

fn take_phases(t: &[f64], offset: &mut usize, rows: usize, cols: usize) -> ComplexMatrix {
    let n = rows * cols;
    let m = ComplexMatrix::from_iterator(rows, cols, t[*offset..*offset + n].iter().map(|&p| Complex64::from_polar(1.0, p)));
    *offset += n;
    m
}

/// Unpacks a target layout without renormalizing.
pub fn unpack_target(t: &[f64], dims: &RelayDims) -> Result<RelayHbf> {
    if t.len() != dims.output_len() {
        return Err(Error::dims("unpack_target", dims.output_len(), t.len()));
    }
    let mut at = 0;
    let f_bbt = take_complex(t, &mut at, dims.n_rft, dims.n_s);
    let f_bbr = take_complex(t, &mut at, dims.n_rfr, dims.n_s);
    let f_rft = take_phases(t, &mut at, dims.n_t, dims.n_rft);
    let f_rfr = take_phases(t, &mut at, dims.n_r, dims.n_rfr);
    Ok(RelayHbf { f_rft, f_bbt, f_rfr, f_bbr })
}

/// Feasible relay beamformers from a (predicted) target vector: unit-modulus
/// analog blocks and `||F_RFT F_BBT||^2 = n_s`.
pub fn reconstruct_beamformers(t: &[f64], dims: &RelayDims) -> Result<RelayHbf> {
    let mut bf = unpack_target(t, dims)?;
    bf.f_bbt = match normalize_fbbt(&bf.f_rft, &bf.f_bbt, dims.n_s) {
        Ok(b) => b,
        Err(_) => {
            // a zero digital block carries no direction; fall back to an equal-power pattern
            let fallback = ComplexMatrix::from_fn(dims.n_rft, dims.n_s, |i, j| {
                Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
            });
            normalize_fbbt(&bf.f_rft, &fallback, dims.n_s)?
        }
    };
    Ok(bf)
}

/// Single hidden-node response `g(w, x, b)`.
pub fn activation_eval(kind: Activation, w: &[f64], x: &[f64], b: f64, slope: f64) -> f64 {
    match kind {
        Activation::Sigmoid => {
            let z: f64 = w.iter().zip(x).map(|(a, c)| a * c).sum();
            1.0 / (1.0 + (-z - b).exp())
        }
        Activation::MultiquadricRbf => {
            let d: f64 = w.iter().zip(x).map(|(a, c)| (c - a) * (c - a)).sum();
            (d + b * b).sqrt()
        }
        Activation::Prelu => {
            let z: f64 = w.iter().zip(x).map(|(a, c)| a * c).sum();
            z.max(0.0) + slope * z.min(0.0)
        }
    }
}

/// Hidden-layer output `G` (`N x L`) for inputs `x` (`N x N_I`) and weights `w` (`L x N_I`).
pub fn hidden_matrix(x: &RealMatrix, w: &RealMatrix, b: &[f64], kind: Activation, slope: f64) -> RealMatrix {
    let (n, l) = (x.nrows(), w.nrows());
    // transpose the (small) input rather than the L x N_I weight matrix
    let affine = || (w * x.transpose()).transpose();
    match kind {
        Activation::Sigmoid => {
            let mut z = affine();
            for (j, mut col) in z.column_iter_mut().enumerate() {
                col.apply(|v| *v = 1.0 / (1.0 + (-*v - b[j]).exp()));
            }
            z
        }
        Activation::Prelu => {
            let mut z = affine();
            z.apply(|v| *v = v.max(0.0) + slope * v.min(0.0));
            z
        }
        Activation::MultiquadricRbf => {
            let xt = x.transpose();
            let wt = w.transpose();
            RealMatrix::from_fn(n, l, |r, c| {
                let d: f64 = xt.column(r).iter().zip(wt.column(c).iter()).map(|(p, q)| (p - q) * (p - q)).sum();
                (d + b[c] * b[c]).sqrt()
            })
        }
    }
}

/// `G^T (I / lambda + G G^T)^-1 T`, the `N x N` form.
pub fn train_dual(g: &RealMatrix, t: &RealMatrix, lambda: f64) -> Result<RealMatrix> {
    let n = g.nrows();
    let system = RealMatrix::identity(n, n) / lambda + g * g.transpose();
    Ok(g.transpose() * solve_named(&system, t, "ELM ridge system")?)
}

/// `(I / lambda + G^T G)^-1 G^T T`, the `L x L` form.
pub fn train_primal(g: &RealMatrix, t: &RealMatrix, lambda: f64) -> Result<RealMatrix> {
    let l = g.ncols();
    let system = RealMatrix::identity(l, l) / lambda + g.transpose() * g;
    solve_named(&system, &(g.transpose() * t), "ELM ridge system")
}

/// Ridge output weights, solving whichever system is smaller.
pub fn train_elm(g: &RealMatrix, t: &RealMatrix, lambda: f64) -> Result<RealMatrix> {
    if g.nrows() != t.nrows() {
        return Err(Error::dims("train_elm", format!("{} target rows", g.nrows()), t.nrows()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("ridge lambda must be > 0, got {lambda}")));
    }
    if g.nrows() <= g.ncols() {
        train_dual(g, t, lambda)
    } else {
        train_primal(g, t, lambda)
    }
}

/// Gradient of `(lambda/2) ||G beta - T||^2 + (1/2) ||beta||^2`.
pub fn ridge_gradient(g: &RealMatrix, t: &RealMatrix, beta: &RealMatrix, lambda: f64) -> RealMatrix {
    g.transpose() * (g * beta - t) * lambda + beta
}

/// Trained network. Inputs are standardized with `mean`/`std` before the hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    pub params: ElmParams,
    pub dims: RelayDims,
    /// `L x N_I`.
    pub w: RealMatrix,
    pub b: Vec<f64>,
    /// `L x N_o`.
    pub beta: RealMatrix,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-feature mean and standard deviation; constant features get unit scale.
pub fn feature_stats(x: &RealMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut mean = Vec::with_capacity(x.ncols());
    let mut std = Vec::with_capacity(x.ncols());
    for col in x.column_iter() {
        let m = col.sum() / n;
        let v = col.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / n;
        let s = v.sqrt();
        mean.push(m);
        std.push(if s > 1e-12 * (1.0 + m.abs()) { s } else { 1.0 });
    }
    (mean, std)
}

impl ElmModel {
    /// Draws `w ~ U[-1, 1]`, `b ~ U[0, 1]` from `params.seed`.
    pub fn random_layer<R: Rng + ?Sized>(hidden: usize, n_in: usize, rng: &mut R) -> (RealMatrix, Vec<f64>) {
        let w = RealMatrix::from_fn(hidden, n_in, |_, _| rng.random_range(-1.0..=1.0));
        let b = (0..hidden).map(|_| rng.random_range(0.0..=1.0)).collect();
        (w, b)
    }

    pub fn n_inputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.beta.ncols()
    }

    /// Trains on `x` (`N x N_I`) and `t` (`N x N_o`).
    pub fn fit(x: &RealMatrix, t: &RealMatrix, dims: RelayDims, params: &ElmParams) -> Result<Self> {
        params.validate()?;
        if x.nrows() == 0 || x.nrows() != t.nrows() {
            return Err(Error::dims("ElmModel::fit", format!("{} target rows (>0)", x.nrows()), t.nrows()));
        }
        if t.ncols() != dims.output_len() {
            return Err(Error::dims("ElmModel::fit", dims.output_len(), t.ncols()));
        }
        let (mean, std) = feature_stats(x);
        let mut rng = seeded(params.seed);
        let (w, b) = Self::random_layer(params.hidden, x.ncols(), &mut rng);
        let xs = standardize(x, &mean, &std);
        let g = hidden_matrix(&xs, &w, &b, params.activation, params.prelu_slope);
        let beta = train_elm(&g, t, params.lambda)?;
        Ok(Self { params: params.clone(), dims, w, b, beta, mean, std })
    }

    pub fn fit_dataset(data: &Dataset, params: &ElmParams) -> Result<Self> {
        let (x, t) = data.matrices()?;
        Self::fit(&x, &t, data.meta.dims(), params)
    }

    /// Predicted target vectors for the rows of `x`.
    pub fn predict_batch(&self, x: &RealMatrix) -> Result<RealMatrix> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::dims("ElmModel::predict", self.n_inputs(), x.ncols()));
        }
        let xs = standardize(x, &self.mean, &self.std);
        let g = hidden_matrix(&xs, &self.w, &self.b, self.params.activation, self.params.prelu_slope);
        Ok(g * &self.beta)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let row = RealMatrix::from_row_slice(1, x.len(), x);
        Ok(self.predict_batch(&row)?.iter().copied().collect())
    }

    /// Relay beamformers for a noisy channel estimate.
    pub fn predict_beamformers(&self, noisy: &ChannelSet) -> Result<RelayHbf> {
        let t = self.predict(&build_input_vector(noisy))?;
        reconstruct_beamformers(&t, &self.dims)
    }
}

fn standardize(x: &RealMatrix, mean: &[f64], std: &[f64]) -> RealMatrix {
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let (m, s) = (mean[j], std[j]);
        col.apply(|v| *v = (*v - m) / s);
    }
    out
}

/// Stacks equally long rows into a matrix.
pub fn stack_rows(rows: &[&[f64]]) -> Result<RealMatrix> {
    let cols = rows.first().map_or(0, |r| r.len());
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::dims("stack_rows", cols, bad.len()));
    }
    Ok(RealMatrix::from_row_iterator(rows.len(), cols, rows.iter().flat_map(|r| r.iter().copied())))
}
