//! SI-nulling factorization of the relay target.
//!
//! Approximates `F_opt` by `F_T F_R^H` subject to `F_R^H H_SI F_T = 0` with
//! scaled-form ADMM on the augmented Lagrangian
//!
//! ```text
//! L(F_T, F_R, Z) = ||F_opt - F_T F_R^H||^2 + rho ||F_R^H H_SI F_T + Z / rho||^2
//! ```
//!
//! Both primal updates are exact minimizers obtained from a Kronecker-form
//! linear system; the multiplier takes a plain dual ascent step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eye, frobenius_sq, kron, solve_named, svd, unvec, vec, ComplexMatrix};
use crate::rng::complex_normal_matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmParams {
    pub rho: f64,
    pub max_iters: usize,
    /// Bound on `||F_R^H H_SI F_T||_F` (not squared).
    pub tol_primal: f64,
    /// Bound on the relative change of `||F_opt - F_T F_R^H||^2`.
    pub tol_obj: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self { rho: 1.0, max_iters: 500, tol_primal: 1e-8, tol_obj: 1e-8 }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParameter(format!("admm rho must be > 0, got {}", self.rho)));
        }
        if !(self.tol_primal > 0.0 && self.tol_obj > 0.0) {
            return Err(Error::InvalidParameter("admm tolerances must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("admm max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub f_t: ComplexMatrix,
    pub f_r: ComplexMatrix,
    pub z: ComplexMatrix,
    pub iter: usize,
}

/// Per-iteration objective `||F_opt - F_T F_R^H||^2` and SI power `||F_R^H H_SI F_T||^2`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdmmTrace {
    pub objective: Vec<f64>,
    pub si_power: Vec<f64>,
    pub converged: bool,
}

impl AdmmTrace {
    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }

    /// SI power in dB, `-inf` for an exact zero.
    pub fn si_power_db(&self) -> Vec<f64> {
        self.si_power.iter().map(|&p| 10.0 * p.log10()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub f_t: ComplexMatrix,
    pub f_r: ComplexMatrix,
    pub trace: AdmmTrace,
    /// Index into the trace of the returned iterate.
    pub best_iter: usize,
}

impl AdmmOutcome {
    pub fn product(&self) -> ComplexMatrix {
        &self.f_t * self.f_r.adjoint()
    }
}

/// Unconstrained relay target and its two SVD factors.
#[derive(Debug, Clone)]
pub struct RelayTarget {
    /// `F_TSVD F_RSVD^H`, `n_t x n_r`.
    pub f_opt: ComplexMatrix,
    /// Dominant right-singular vectors of `H_RD`, `n_t x n_s`.
    pub f_tsvd: ComplexMatrix,
    /// Dominant left-singular vectors of `H_SR`, `n_r x n_s`.
    pub f_rsvd: ComplexMatrix,
}

pub fn build_f_opt(h_sr: &ComplexMatrix, h_rd: &ComplexMatrix, n_s: usize) -> Result<RelayTarget> {
    let sr = svd(h_sr);
    let rd = svd(h_rd);
    let available = sr.s.len().min(rd.s.len());
    if n_s == 0 || n_s > available {
        return Err(Error::InvalidParameter(format!(
            "relay streams {n_s} must be in 1..={available} (singular vectors available)"
        )));
    }
    let f_rsvd = sr.u.columns(0, n_s).into_owned();
    let f_tsvd = rd.v.columns(0, n_s).into_owned();
    Ok(RelayTarget { f_opt: &f_tsvd * f_rsvd.adjoint(), f_tsvd, f_rsvd })
}

/// Solves `X a + b X = c` for `X` through `(a^T kron I + I kron b) vec X = vec c`.
fn solve_two_sided(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    what: &'static str,
) -> Result<ComplexMatrix> {
    let (m, k) = c.shape();
    let system = kron(&a.transpose(), &eye(m)) + kron(&eye(k), b);
    let x = solve_named(&system, &vec(c), what)?;
    unvec(&x, m, k)
}

fn check_dims(f_opt: &ComplexMatrix, h_si: &ComplexMatrix) -> Result<()> {
    if f_opt.shape() != (h_si.ncols(), h_si.nrows()) {
        return Err(Error::dims(
            "admm",
            format!("F_opt {}x{}", h_si.ncols(), h_si.nrows()),
            format!("F_opt {}x{}", f_opt.nrows(), f_opt.ncols()),
        ));
    }
    Ok(())
}

/// Exact minimizer of `L` over `F_T`: solves
/// `F_T F_R^H F_R + rho H^H F_R F_R^H H F_T = F_opt F_R - H^H F_R Z`.
pub fn update_ft(
    f_r: &ComplexMatrix,
    z: &ComplexMatrix,
    f_opt: &ComplexMatrix,
    h_si: &ComplexMatrix,
    rho: f64,
) -> Result<ComplexMatrix> {
    check_dims(f_opt, h_si)?;
    let hr = h_si.adjoint() * f_r;
    let b = (&hr * hr.adjoint()).scale(rho);
    let a = f_r.adjoint() * f_r;
    let c = f_opt * f_r - &hr * z;
    solve_two_sided(&a, &b, &c, "F_T update system")
}

/// Exact minimizer of `L` over `F_R`: solves
/// `F_R F_T^H F_T + rho H F_T F_T^H H^H F_R = F_opt^H F_T - H F_T Z^H`.
pub fn update_fr(
    f_t: &ComplexMatrix,
    z: &ComplexMatrix,
    f_opt: &ComplexMatrix,
    h_si: &ComplexMatrix,
    rho: f64,
) -> Result<ComplexMatrix> {
    check_dims(f_opt, h_si)?;
    let ht = h_si * f_t;
    let b = (&ht * ht.adjoint()).scale(rho);
    let a = f_t.adjoint() * f_t;
    let c = f_opt.adjoint() * f_t - &ht * z.adjoint();
    solve_two_sided(&a, &b, &c, "F_R update system")
}

/// `Z + rho F_R^H H_SI F_T`.
pub fn update_z(
    z: &ComplexMatrix,
    f_t: &ComplexMatrix,
    f_r: &ComplexMatrix,
    h_si: &ComplexMatrix,
    rho: f64,
) -> ComplexMatrix {
    z + (f_r.adjoint() * h_si * f_t).scale(rho)
}

/// Scaled augmented Lagrangian.
pub fn lagrangian(
    f_t: &ComplexMatrix,
    f_r: &ComplexMatrix,
    z: &ComplexMatrix,
    f_opt: &ComplexMatrix,
    h_si: &ComplexMatrix,
    rho: f64,
) -> f64 {
    let fit = frobenius_sq(&(f_opt - f_t * f_r.adjoint()));
    let constraint = f_r.adjoint() * h_si * f_t + z.unscale(rho);
    fit + rho * frobenius_sq(&constraint)
}

pub fn si_power(f_t: &ComplexMatrix, f_r: &ComplexMatrix, h_si: &ComplexMatrix) -> f64 {
    frobenius_sq(&(f_r.adjoint() * h_si * f_t))
}

/// Runs the ADMM iteration from a random `F_R` and `Z = 0`.
///
/// Stops once both the SI residual norm and the relative objective change are
/// below tolerance. Without convergence the iterate with the smallest SI power
/// is returned and `trace.converged` is false.
pub fn run_admm<R: Rng + ?Sized>(
    f_opt: &ComplexMatrix,
    h_si: &ComplexMatrix,
    n_s: usize,
    params: &AdmmParams,
    rng: &mut R,
) -> Result<AdmmOutcome> {
    params.validate()?;
    check_dims(f_opt, h_si)?;
    let f_r0 = complex_normal_matrix(rng, f_opt.ncols(), n_s);
    run_admm_from(f_opt, h_si, f_r0, params).map(|(outcome, _)| outcome)
}

/// Same as [`run_admm`] from a caller-supplied `F_R`; also returns the final state.
pub fn run_admm_from(
    f_opt: &ComplexMatrix,
    h_si: &ComplexMatrix,
    f_r0: ComplexMatrix,
    params: &AdmmParams,
) -> Result<(AdmmOutcome, AdmmState)> {
    params.validate()?;
    check_dims(f_opt, h_si)?;
    let n_s = f_r0.ncols();
    let rho = params.rho;
    let floor = 1e-12 * frobenius_sq(f_opt).max(f64::MIN_POSITIVE);

    let mut state = AdmmState {
        f_t: ComplexMatrix::zeros(f_opt.nrows(), n_s),
        f_r: f_r0,
        z: ComplexMatrix::zeros(n_s, n_s),
        iter: 0,
    };
    let mut trace = AdmmTrace::default();
    let mut best: Option<(f64, usize, ComplexMatrix, ComplexMatrix)> = None;

    while state.iter < params.max_iters {
        state.f_t = update_ft(&state.f_r, &state.z, f_opt, h_si, rho)?;
        state.f_r = update_fr(&state.f_t, &state.z, f_opt, h_si, rho)?;
        state.z = update_z(&state.z, &state.f_t, &state.f_r, h_si, rho);
        state.iter += 1;

        let objective = frobenius_sq(&(f_opt - &state.f_t * state.f_r.adjoint()));
        let si = si_power(&state.f_t, &state.f_r, h_si);
        let prev = trace.objective.last().copied();
        trace.objective.push(objective);
        trace.si_power.push(si);

        if best.as_ref().is_none_or(|b| si < b.0) {
            best = Some((si, trace.len() - 1, state.f_t.clone(), state.f_r.clone()));
        }
        if let Some(prev) = prev {
            let obj_ok = (objective - prev).abs() <= params.tol_obj * prev.max(floor);
            if obj_ok && si.sqrt() <= params.tol_primal {
                trace.converged = true;
                break;
            }
        }
        log::trace!("admm iter {} objective {objective:.6e} si {si:.6e}", state.iter);
    }

    let outcome = if trace.converged {
        AdmmOutcome {
            f_t: state.f_t.clone(),
            f_r: state.f_r.clone(),
            best_iter: trace.len() - 1,
            trace,
        }
    } else {
        let (_, best_iter, f_t, f_r) = best.expect("at least one iteration");
        log::debug!("admm did not converge in {} iterations", params.max_iters);
        AdmmOutcome { f_t, f_r, trace, best_iter }
    };
    Ok((outcome, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    struct Instance {
        f_opt: ComplexMatrix,
        h_si: ComplexMatrix,
        f_t: ComplexMatrix,
        f_r: ComplexMatrix,
        z: ComplexMatrix,
    }

    fn instance(seed: u64, n: usize, n_s: usize) -> Instance {
        let mut rng = seeded(seed);
        let h_sr = complex_normal_matrix(&mut rng, n, n);
        let h_rd = complex_normal_matrix(&mut rng, n, n);
        Instance {
            f_opt: build_f_opt(&h_sr, &h_rd, n_s).unwrap().f_opt,
            h_si: complex_normal_matrix(&mut rng, n, n),
            f_t: complex_normal_matrix(&mut rng, n, n_s),
            f_r: complex_normal_matrix(&mut rng, n, n_s),
            z: complex_normal_matrix(&mut rng, n_s, n_s),
        }
    }

    fn ft_residual(p: &Instance, f_t: &ComplexMatrix, rho: f64) -> f64 {
        let h = &p.h_si;
        let lhs = f_t * p.f_r.adjoint() * &p.f_r
            + (h.adjoint() * &p.f_r * p.f_r.adjoint() * h * f_t).scale(rho);
        let rhs = &p.f_opt * &p.f_r - h.adjoint() * &p.f_r * &p.z;
        frobenius_sq(&(&lhs - &rhs)).sqrt() / frobenius_sq(&rhs).sqrt()
    }

    fn fr_residual(p: &Instance, f_r: &ComplexMatrix, rho: f64) -> f64 {
        let h = &p.h_si;
        let lhs = f_r * p.f_t.adjoint() * &p.f_t
            + (h * &p.f_t * p.f_t.adjoint() * h.adjoint() * f_r).scale(rho);
        let rhs = p.f_opt.adjoint() * &p.f_t - h * &p.f_t * p.z.adjoint();
        frobenius_sq(&(&lhs - &rhs)).sqrt() / frobenius_sq(&rhs).sqrt()
    }

    #[test]
    fn identity_channels_give_canonical_target() {
        let f = build_f_opt(&eye(4), &eye(4), 2).unwrap();
        assert_relative_eq!(frobenius_sq(&f.f_opt), 2.0, epsilon = 1e-12);
        // the product of two orthonormal bases of the same subspace is a projector-like partial isometry
        let gram = f.f_opt.adjoint() * &f.f_opt;
        assert!(frobenius_sq(&(&gram * &gram - &gram)) < 1e-20);
    }

    #[test]
    fn rank_one_target() {
        let mut rng = seeded(1);
        let a = complex_normal_matrix(&mut rng, 5, 1);
        let b = complex_normal_matrix(&mut rng, 1, 4);
        let h_sr = &a * &b;
        let h_rd = complex_normal_matrix(&mut rng, 3, 1) * complex_normal_matrix(&mut rng, 1, 6);
        let f = build_f_opt(&h_sr, &h_rd, 1).unwrap();
        assert_eq!(f.f_opt.shape(), (6, 5));
        assert_relative_eq!(frobenius_sq(&f.f_opt), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn svd_factors_are_orthonormal() {
        let mut rng = seeded(2);
        let f = build_f_opt(&complex_normal_matrix(&mut rng, 8, 6), &complex_normal_matrix(&mut rng, 7, 9), 3)
            .unwrap();
        assert!(frobenius_sq(&(f.f_tsvd.adjoint() * &f.f_tsvd - eye(3))) < 1e-20);
        assert!(frobenius_sq(&(f.f_rsvd.adjoint() * &f.f_rsvd - eye(3))) < 1e-20);
        assert_eq!(f.f_opt.shape(), (9, 8));
    }

    #[test]
    fn too_many_streams_rejected() {
        assert!(build_f_opt(&eye(3), &eye(4), 4).is_err());
        assert!(build_f_opt(&eye(3), &eye(4), 0).is_err());
    }

    #[test]
    fn unconstrained_updates_are_least_squares() {
        let p = instance(3, 6, 2);
        let zero_h = ComplexMatrix::zeros(6, 6);
        let zero_z = ComplexMatrix::zeros(2, 2);
        let f_t = update_ft(&p.f_r, &zero_z, &p.f_opt, &zero_h, 1.0).unwrap();
        let gram = p.f_r.adjoint() * &p.f_r;
        let expect = &p.f_opt * &p.f_r * gram.try_inverse().unwrap();
        assert!(frobenius_sq(&(&f_t - expect)) < 1e-20);

        let f_r = update_fr(&p.f_t, &zero_z, &p.f_opt, &zero_h, 1.0).unwrap();
        let gram = p.f_t.adjoint() * &p.f_t;
        let expect = p.f_opt.adjoint() * &p.f_t * gram.try_inverse().unwrap();
        assert!(frobenius_sq(&(&f_r - expect)) < 1e-20);

        let q = svd(&p.f_r).u;
        let f_t = update_ft(&q, &zero_z, &p.f_opt, &zero_h, 1.0).unwrap();
        assert!(frobenius_sq(&(&f_t - &p.f_opt * &q)) < 1e-20);
    }

    #[test]
    fn stationarity_residuals() {
        for seed in 0..10 {
            let p = instance(100 + seed, 8, 2);
            for rho in [0.1, 1.0, 10.0] {
                let f_t = update_ft(&p.f_r, &p.z, &p.f_opt, &p.h_si, rho).unwrap();
                assert!(ft_residual(&p, &f_t, rho) < 1e-10);
                let f_r = update_fr(&p.f_t, &p.z, &p.f_opt, &p.h_si, rho).unwrap();
                assert!(fr_residual(&p, &f_r, rho) < 1e-10);
            }
        }
    }

    #[test]
    fn fr_update_beats_perturbations() {
        let p = instance(7, 6, 2);
        let f_r = update_fr(&p.f_t, &p.z, &p.f_opt, &p.h_si, 1.0).unwrap();
        let best = lagrangian(&p.f_t, &f_r, &p.z, &p.f_opt, &p.h_si, 1.0);
        let mut rng = seeded(8);
        for k in 0..100 {
            let eps = 10f64.powi(-(k % 5));
            let delta = complex_normal_matrix(&mut rng, 6, 2).scale(eps);
            let value = lagrangian(&p.f_t, &(&f_r + delta), &p.z, &p.f_opt, &p.h_si, 1.0);
            assert!(value >= best - 1e-10 * best.abs());
        }
    }

    #[test]
    fn z_update_cases() {
        let p = instance(9, 4, 2);
        let zero = ComplexMatrix::zeros(2, 2);
        let z1 = update_z(&zero, &p.f_t, &p.f_r, &p.h_si, 1.0);
        assert_eq!(z1, p.f_r.adjoint() * &p.h_si * &p.f_t);
        let z2 = update_z(&z1, &p.f_t, &p.f_r, &p.h_si, 1.0);
        assert!(frobenius_sq(&(z2 - z1.scale(2.0))) < 1e-24);
        let unchanged = update_z(&p.z, &p.f_t, &p.f_r, &ComplexMatrix::zeros(4, 4), 3.0);
        assert_eq!(unchanged, p.z);
    }

    #[test]
    fn each_block_update_decreases_lagrangian() {
        let p = instance(10, 8, 2);
        let (mut f_t, mut f_r, mut z) = (p.f_t.clone(), p.f_r.clone(), p.z.clone());
        for _ in 0..20 {
            let before = lagrangian(&f_t, &f_r, &z, &p.f_opt, &p.h_si, 1.0);
            f_t = update_ft(&f_r, &z, &p.f_opt, &p.h_si, 1.0).unwrap();
            let mid = lagrangian(&f_t, &f_r, &z, &p.f_opt, &p.h_si, 1.0);
            assert!(mid <= before + 1e-9 * before.abs().max(1.0));
            f_r = update_fr(&f_t, &z, &p.f_opt, &p.h_si, 1.0).unwrap();
            let after = lagrangian(&f_t, &f_r, &z, &p.f_opt, &p.h_si, 1.0);
            assert!(after <= mid + 1e-9 * mid.abs().max(1.0));
            z = update_z(&z, &f_t, &f_r, &p.h_si, 1.0);
        }
    }

    #[test]
    fn without_si_converges_immediately() {
        let p = instance(11, 8, 2);
        let out = run_admm(&p.f_opt, &ComplexMatrix::zeros(8, 8), 2, &AdmmParams::default(), &mut seeded(1))
            .unwrap();
        assert!(out.trace.converged);
        assert!(out.trace.len() <= 2);
        assert!(frobenius_sq(&(&p.f_opt - out.product())) < 1e-20);
    }

    #[test]
    fn converged_run_meets_primal_tolerance() {
        let p = instance(12, 16, 2);
        let params = AdmmParams::default();
        let out = run_admm(&p.f_opt, &p.h_si, 2, &params, &mut seeded(2)).unwrap();
        assert_eq!(out.trace.objective.len(), out.trace.si_power.len());
        if out.trace.converged {
            assert!(*out.trace.si_power.last().unwrap() <= params.tol_primal.powi(2));
        }
        let first = out.trace.si_power[0];
        assert!(si_power(&out.f_t, &out.f_r, &p.h_si) <= 1e-6 * first);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = instance(13, 8, 2);
        let params = AdmmParams { max_iters: 50, ..Default::default() };
        let a = run_admm(&p.f_opt, &p.h_si, 2, &params, &mut seeded(5)).unwrap();
        let b = run_admm(&p.f_opt, &p.h_si, 2, &params, &mut seeded(5)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.f_t, b.f_t);
    }

    #[test]
    fn rejects_mismatched_dims() {
        let f_opt = ComplexMatrix::from_element(3, 4, c(1.0, 0.0));
        let err = update_ft(&ComplexMatrix::zeros(4, 1), &ComplexMatrix::zeros(1, 1), &f_opt, &eye(3), 1.0);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        assert!(AdmmParams { rho: 0.0, ..Default::default() }.validate().is_err());
    }
}
