//! Majorization-minimization factorization into analog and digital beamformers.
//!
//! Every analog update minimizes `J(F) = ||T - F Y||^2` over unit-modulus `F`
//! for some fixed `Y` and target `T`. With `f = vec F`,
//! `J = f^H Q f - 2 Re(e^H f) + ||T||^2` where `Q = (Y Y^H)^T kron I` and
//! `e = vec(T Y^H)`. The surrogate replaces `Q` by `lambda I` around the
//! current iterate, and its minimizer on the torus is a per-entry phase.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{frobenius_sq, max_eig_hermitian, phase_of, pinv, ComplexMatrix};
use crate::rng::{complex_normal_matrix, random_phase_matrix};

/// Tolerance on `| |z| - 1 |` for analog entries.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmParams {
    pub outer_max: usize,
    pub inner_max: usize,
    pub tol_inner: f64,
    pub tol_outer: f64,
}

impl Default for MmParams {
    fn default() -> Self {
        Self { outer_max: 50, inner_max: 20, tol_inner: 1e-8, tol_outer: 1e-8 }
    }
}

impl MmParams {
    pub fn validate(&self) -> Result<()> {
        if self.outer_max == 0 || self.inner_max == 0 {
            return Err(Error::InvalidParameter("mm iteration budgets must be >= 1".into()));
        }
        if !(self.tol_inner > 0.0 && self.tol_outer > 0.0) {
            return Err(Error::InvalidParameter("mm tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// Relay hybrid beamformers. `F_T = f_rft f_bbt`, `F_R = f_rfr f_bbr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayHbf {
    pub f_rft: ComplexMatrix,
    pub f_bbt: ComplexMatrix,
    pub f_rfr: ComplexMatrix,
    pub f_bbr: ComplexMatrix,
}

impl RelayHbf {
    pub fn f_t(&self) -> ComplexMatrix {
        &self.f_rft * &self.f_bbt
    }

    pub fn f_r(&self) -> ComplexMatrix {
        &self.f_rfr * &self.f_bbr
    }

    /// `F_T F_R^H`.
    pub fn product(&self) -> ComplexMatrix {
        self.f_t() * self.f_r().adjoint()
    }

    pub fn check_unit_modulus(&self) -> Result<()> {
        check_unit_modulus(&self.f_rft, UNIT_MODULUS_TOL)?;
        check_unit_modulus(&self.f_rfr, UNIT_MODULUS_TOL)
    }
}

/// Hybrid beamformer of a source or destination node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeHbf {
    pub rf: ComplexMatrix,
    pub bb: ComplexMatrix,
}

impl NodeHbf {
    pub fn product(&self) -> ComplexMatrix {
        &self.rf * &self.bb
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Source precoder, normalized to `||V||^2 = streams`.
    Precoder,
    /// Destination combiner, unnormalized.
    Combiner,
}

pub fn check_unit_modulus(m: &ComplexMatrix, tol: f64) -> Result<()> {
    match m.iter().enumerate().find(|(_, z)| (z.norm() - 1.0).abs() > tol) {
        Some((index, z)) => Err(Error::NonUnitModulus { index, modulus: z.norm() }),
        None => Ok(()),
    }
}

/// `||target - f y||^2`.
pub fn factor_objective(f: &ComplexMatrix, y: &ComplexMatrix, target: &ComplexMatrix) -> f64 {
    frobenius_sq(&(target - f * y))
}

/// Largest eigenvalue of `(Y Y^H)^T kron I`, i.e. of the small Gram matrix `Y Y^H`.
fn majorizer_weight(y: &ComplexMatrix) -> Result<f64> {
    max_eig_hermitian(&(y * y.adjoint()))
}

fn check_step_dims(f: &ComplexMatrix, y: &ComplexMatrix, target: &ComplexMatrix) -> Result<()> {
    if f.ncols() != y.nrows() || target.shape() != (f.nrows(), y.ncols()) {
        return Err(Error::dims(
            "mm step",
            format!("F {}x{}, target {}x{}", target.nrows(), y.nrows(), target.nrows(), y.ncols()),
            format!("F {}x{}, target {}x{}", f.nrows(), f.ncols(), target.nrows(), target.ncols()),
        ));
    }
    Ok(())
}

/// Surrogate `Jbar(F; F_i)` built around `f_i` for `||target - F Y||^2`.
pub fn surrogate(
    f: &ComplexMatrix,
    f_i: &ComplexMatrix,
    y: &ComplexMatrix,
    target: &ComplexMatrix,
) -> Result<f64> {
    check_step_dims(f, y, target)?;
    let lambda = majorizer_weight(y)?;
    let gram = y * y.adjoint();
    let q_fi = f_i * &gram;
    let e = target * y.adjoint();
    let inner = |a: &ComplexMatrix, b: &ComplexMatrix| a.dotc(b).re;
    // ||T||^2 + lambda f^H f + 2 Re f^H (Q - lambda I) f_i + f_i^H (lambda I - Q) f_i - 2 Re f^H e
    Ok(frobenius_sq(target) + lambda * frobenius_sq(f)
        + 2.0 * (inner(f, &q_fi) - lambda * inner(f, f_i))
        + lambda * frobenius_sq(f_i)
        - inner(f_i, &q_fi)
        - 2.0 * inner(f, &e))
}

/// One MM step for `min ||target - F Y||^2` over unit-modulus `F`:
/// `F <- -exp(j arg((Q - lambda I) f_i - e))`.
pub fn mm_step(f_i: &ComplexMatrix, y: &ComplexMatrix, target: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_step_dims(f_i, y, target)?;
    let lambda = majorizer_weight(y)?;
    let direction = f_i * (y * y.adjoint()) - f_i.scale(lambda) - target * y.adjoint();
    Ok(direction.map(|z| -phase_of(z)))
}

/// Repeats [`mm_step`] until the relative objective change is below `tol` or `max_iters`.
/// Returns the final iterate and the objective after every step (index 0 is the start).
pub fn mm_inner(
    f0: &ComplexMatrix,
    y: &ComplexMatrix,
    target: &ComplexMatrix,
    max_iters: usize,
    tol: f64,
) -> Result<(ComplexMatrix, Vec<f64>)> {
    let mut f = f0.clone();
    let mut history = vec![factor_objective(&f, y, target)];
    let floor = 1e-300_f64.max(1e-15 * frobenius_sq(target));
    for _ in 0..max_iters {
        let next = mm_step(&f, y, target)?;
        let value = factor_objective(&next, y, target);
        let prev = *history.last().expect("nonempty");
        f = next;
        history.push(value);
        if (prev - value).abs() <= tol * prev.max(floor) {
            break;
        }
    }
    Ok((f, history))
}

/// Analog transmit update with `Y_T = F_BBT F_BBR^H F_RFR^H`.
pub fn mm_update_frft(
    f_rft_i: &ComplexMatrix,
    y_t: &ComplexMatrix,
    f_opt_hat: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    mm_step(f_rft_i, y_t, f_opt_hat)
}

/// Analog receive update with `Y_R = F_RFT F_BBT F_BBR^H`; objective `||F^H - F_RFR Y_R^H||^2`.
pub fn mm_update_frfr(
    f_rfr_i: &ComplexMatrix,
    y_r: &ComplexMatrix,
    f_opt_hat: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    mm_step(f_rfr_i, &y_r.adjoint(), &f_opt_hat.adjoint())
}

/// `pinv(F_RFT) F pinv(F_BBR^H F_RFR^H)`.
pub fn update_fbbt(
    f_opt_hat: &ComplexMatrix,
    f_rft: &ComplexMatrix,
    f_bbr: &ComplexMatrix,
    f_rfr: &ComplexMatrix,
) -> ComplexMatrix {
    pinv(f_rft) * f_opt_hat * pinv(&(f_bbr.adjoint() * f_rfr.adjoint()))
}

/// `pinv(F_RFR) F^H pinv(F_BBT^H F_RFT^H)`.
pub fn update_fbbr(
    f_opt_hat: &ComplexMatrix,
    f_rft: &ComplexMatrix,
    f_bbt: &ComplexMatrix,
    f_rfr: &ComplexMatrix,
) -> ComplexMatrix {
    pinv(f_rfr) * f_opt_hat.adjoint() * pinv(&(f_bbt.adjoint() * f_rft.adjoint()))
}

/// Scales `f_bbt` so that `||f_rft f_bbt||^2 = n_s`.
pub fn normalize_fbbt(f_rft: &ComplexMatrix, f_bbt: &ComplexMatrix, n_s: usize) -> Result<ComplexMatrix> {
    let norm = frobenius_sq(&(f_rft * f_bbt)).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm("F_RFT F_BBT"));
    }
    Ok(f_bbt.scale((n_s as f64).sqrt() / norm))
}

/// `||F - F_RFT F_BBT F_BBR^H F_RFR^H||^2`.
pub fn relay_objective(f_opt_hat: &ComplexMatrix, hbf: &RelayHbf) -> f64 {
    frobenius_sq(&(f_opt_hat - hbf.product()))
}

/// Moves an invertible `n_s x n_s` factor between the two digital blocks so that
/// `F_RFR F_BBR` has orthonormal columns. The product `F_T F_R^H` is unchanged.
pub fn rebalance(hbf: &RelayHbf) -> RelayHbf {
    let f_r = hbf.f_r();
    let qr = f_r.clone().qr();
    let r = qr.r();
    let n_s = r.nrows().min(r.ncols());
    let diag_max = (0..n_s).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    let diag_min = (0..n_s).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if r.is_square() && diag_min > 1e-10 * diag_max {
        if let Some(r_inv) = r.clone().try_inverse() {
            return RelayHbf {
                f_rft: hbf.f_rft.clone(),
                f_bbt: &hbf.f_bbt * r.adjoint(),
                f_rfr: hbf.f_rfr.clone(),
                f_bbr: &hbf.f_bbr * r_inv,
            };
        }
    }
    // Rank-deficient receive factor: only the overall scale can be moved.
    let scale = (frobenius_sq(&f_r) / n_s.max(1) as f64).sqrt();
    if scale > 0.0 && scale.is_finite() {
        RelayHbf {
            f_rft: hbf.f_rft.clone(),
            f_bbt: hbf.f_bbt.scale(scale),
            f_rfr: hbf.f_rfr.clone(),
            f_bbr: hbf.f_bbr.unscale(scale),
        }
    } else {
        hbf.clone()
    }
}

#[derive(Debug, Clone)]
pub struct MmOutcome {
    pub hbf: RelayHbf,
    /// Objective after each outer iteration, before the final normalization.
    pub trace: Vec<f64>,
    /// True-objective history of every inner MM run, in execution order.
    pub inner_traces: Vec<Vec<f64>>,
    pub pre_normalization_objective: f64,
    pub objective: f64,
    pub converged: bool,
}

/// Relay hybrid factorization from random analog phases and a Gaussian `F_BBR`.
pub fn run_mm_hbf<R: Rng + ?Sized>(
    f_opt_hat: &ComplexMatrix,
    n_rft: usize,
    n_rfr: usize,
    n_s: usize,
    params: &MmParams,
    rng: &mut R,
) -> Result<MmOutcome> {
    let (n_t, n_r) = f_opt_hat.shape();
    let init = RelayHbf {
        f_rft: random_phase_matrix(rng, n_t, n_rft),
        f_bbt: ComplexMatrix::zeros(n_rft, n_s),
        f_rfr: random_phase_matrix(rng, n_r, n_rfr),
        f_bbr: complex_normal_matrix(rng, n_rfr, n_s),
    };
    run_mm_hbf_from(f_opt_hat, init, params)
}

/// Runs the outer loop from a given starting point (`f_bbt` of `init` is ignored).
pub fn run_mm_hbf_from(f_opt_hat: &ComplexMatrix, init: RelayHbf, params: &MmParams) -> Result<MmOutcome> {
    params.validate()?;
    let (n_t, n_r) = f_opt_hat.shape();
    let n_s = init.f_bbr.ncols();
    if init.f_rft.nrows() != n_t || init.f_rfr.nrows() != n_r || init.f_bbr.nrows() != init.f_rfr.ncols() {
        return Err(Error::dims(
            "run_mm_hbf",
            format!("F_RFT {n_t}x_, F_RFR {n_r}x_"),
            format!("F_RFT {}x{}, F_RFR {}x{}", init.f_rft.nrows(), init.f_rft.ncols(), init.f_rfr.nrows(), init.f_rfr.ncols()),
        ));
    }
    if n_s == 0 || n_s > init.f_rft.ncols() || n_s > init.f_rfr.ncols() {
        return Err(Error::InvalidParameter(format!(
            "streams {n_s} must not exceed RF chains ({}, {})",
            init.f_rft.ncols(),
            init.f_rfr.ncols()
        )));
    }
    check_unit_modulus(&init.f_rft, 1e-9)?;
    check_unit_modulus(&init.f_rfr, 1e-9)?;

    let floor = 1e-15 * frobenius_sq(f_opt_hat).max(f64::MIN_POSITIVE);
    let mut hbf = init;
    let mut trace = Vec::with_capacity(params.outer_max);
    let mut inner_traces = Vec::with_capacity(2 * params.outer_max);
    let mut converged = false;

    for _ in 0..params.outer_max {
        hbf.f_bbt = update_fbbt(f_opt_hat, &hbf.f_rft, &hbf.f_bbr, &hbf.f_rfr);
        let y_t = &hbf.f_bbt * hbf.f_bbr.adjoint() * hbf.f_rfr.adjoint();
        let (f_rft, hist) = mm_inner(&hbf.f_rft, &y_t, f_opt_hat, params.inner_max, params.tol_inner)?;
        hbf.f_rft = f_rft;
        inner_traces.push(hist);

        hbf.f_bbr = update_fbbr(f_opt_hat, &hbf.f_rft, &hbf.f_bbt, &hbf.f_rfr);
        let y_r = &hbf.f_rft * &hbf.f_bbt * hbf.f_bbr.adjoint();
        let (f_rfr, hist) =
            mm_inner(&hbf.f_rfr, &y_r.adjoint(), &f_opt_hat.adjoint(), params.inner_max, params.tol_inner)?;
        hbf.f_rfr = f_rfr;
        inner_traces.push(hist);

        let objective = relay_objective(f_opt_hat, &hbf);
        let prev = trace.last().copied();
        trace.push(objective);
        if let Some(prev) = prev {
            if (prev - objective).abs() <= params.tol_outer * f64::max(prev, floor) {
                converged = true;
                break;
            }
        }
    }

    let pre_normalization_objective = *trace.last().expect("outer_max >= 1");
    let mut hbf = rebalance(&hbf);
    hbf.f_bbt = normalize_fbbt(&hbf.f_rft, &hbf.f_bbt, n_s)?;
    let objective = relay_objective(f_opt_hat, &hbf);
    Ok(MmOutcome { hbf, trace, inner_traces, pre_normalization_objective, objective, converged })
}

/// Single-sided hybrid design approximating the dominant `streams` singular
/// vectors of `channel`: right vectors for a precoder, left vectors for a combiner.
pub fn design_node_hbf<R: Rng + ?Sized>(
    channel: &ComplexMatrix,
    side: Side,
    rf_chains: usize,
    streams: usize,
    params: &MmParams,
    rng: &mut R,
) -> Result<NodeHbf> {
    params.validate()?;
    let dec = crate::numerics::svd(channel);
    let (basis, antennas) = match side {
        Side::Precoder => (dec.v, channel.ncols()),
        Side::Combiner => (dec.u, channel.nrows()),
    };
    if streams == 0 || streams > rf_chains || rf_chains > antennas || streams > dec.s.len() {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= streams ({streams}) <= rf_chains ({rf_chains}) <= antennas ({antennas}) and streams <= rank bound {}",
            dec.s.len()
        )));
    }
    let target = basis.columns(0, streams).into_owned();
    let rf0 = random_phase_matrix(rng, antennas, rf_chains);
    let mut node = fit_node(&target, rf0, params)?;
    if side == Side::Precoder {
        let norm = frobenius_sq(&node.product()).sqrt();
        if !(norm > 0.0) {
            return Err(Error::ZeroNorm("V_RF V_BB"));
        }
        node.bb = node.bb.scale((streams as f64).sqrt() / norm);
    }
    Ok(node)
}

/// Alternates `BB = pinv(RF) target` with inner MM on `RF`.
pub fn fit_node(target: &ComplexMatrix, rf0: ComplexMatrix, params: &MmParams) -> Result<NodeHbf> {
    let floor = 1e-15 * frobenius_sq(target).max(f64::MIN_POSITIVE);
    let mut rf = rf0;
    let mut prev: Option<f64> = None;
    let mut bb = pinv(&rf) * target;
    for _ in 0..params.outer_max {
        bb = pinv(&rf) * target;
        let (next, _) = mm_inner(&rf, &bb, target, params.inner_max, params.tol_inner)?;
        rf = next;
        let objective = factor_objective(&rf, &bb, target);
        if let Some(p) = prev {
            if (p - objective).abs() <= params.tol_outer * p.max(floor) {
                break;
            }
        }
        prev = Some(objective);
    }
    let refit = pinv(&rf) * target;
    if factor_objective(&rf, &refit, target) <= factor_objective(&rf, &bb, target) {
        bb = refit;
    }
    Ok(NodeHbf { rf, bb })
}
