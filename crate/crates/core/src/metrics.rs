//! End-to-end spectral efficiency and fully digital reference designs.

use serde::{Deserialize, Serialize};

use crate::admm::build_f_opt;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::mm::{NodeHbf, RelayHbf};
use crate::numerics::{eye, frobenius_sq, log_det_hpd, norm1, solve_named, svd, ComplexMatrix, Lu, MAX_CONDITION};
use crate::system::SystemConfig;

/// Effective beamformers of the whole link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBeamformers {
    /// Source precoder `V`, `N_t x N_s`.
    pub v: ComplexMatrix,
    /// Relay transmit beamformer `F_T`, `n_t x n_s`.
    pub f_t: ComplexMatrix,
    /// Relay receive combiner `F_R`, `n_r x n_s`.
    pub f_r: ComplexMatrix,
    /// Destination combiner `U`, `N_r x N_s`.
    pub u: ComplexMatrix,
}

impl LinkBeamformers {
    pub fn from_hybrid(source: &NodeHbf, relay: &RelayHbf, destination: &NodeHbf) -> Self {
        Self { v: source.product(), f_t: relay.f_t(), f_r: relay.f_r(), u: destination.product() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    SiFree,
    WithSi,
    HalfDuplex,
}

impl BaselineMode {
    pub fn label(self) -> &'static str {
        match self {
            BaselineMode::SiFree => "full_digital_si_free",
            BaselineMode::WithSi => "full_digital_with_si",
            BaselineMode::HalfDuplex => "full_digital_half_duplex",
        }
    }
}

fn check_dims(ch: &ChannelSet, bf: &LinkBeamformers) -> Result<()> {
    let ok = bf.v.nrows() == ch.h_sr.ncols()
        && bf.f_r.nrows() == ch.h_sr.nrows()
        && bf.f_r.nrows() == ch.h_si.nrows()
        && bf.f_t.nrows() == ch.h_si.ncols()
        && bf.f_t.nrows() == ch.h_rd.ncols()
        && bf.u.nrows() == ch.h_rd.nrows()
        && bf.f_t.ncols() == bf.f_r.ncols()
        && bf.u.ncols() == bf.v.ncols();
    if ok {
        Ok(())
    } else {
        Err(Error::dims(
            "spectral_efficiency",
            format!(
                "V {}x_, F_R {}x_, F_T {}x_, U {}x_ with matching stream counts",
                ch.h_sr.ncols(),
                ch.h_sr.nrows(),
                ch.h_rd.ncols(),
                ch.h_rd.nrows()
            ),
            format!(
                "V {:?}, F_R {:?}, F_T {:?}, U {:?}",
                bf.v.shape(),
                bf.f_r.shape(),
                bf.f_t.shape(),
                bf.u.shape()
            ),
        ))
    }
}

/// Log-det rate in bits/s/Hz:
/// `log2 |I + (P_S P_R / N_s) Sigma^-1 A A^H|` with
/// `B = U^H H_RD F_T Xi^-1 F_R^H`, `A = B H_SR V`,
/// `Sigma = sigma^2 (P_R B B^H + U^H U)` and `Xi = I - sqrt(P_R) F_R^H H_SI F_T`.
pub fn spectral_efficiency(ch: &ChannelSet, bf: &LinkBeamformers, cfg: &SystemConfig) -> Result<f64> {
    check_dims(ch, bf)?;
    let n_s = bf.f_t.ncols();
    let p_r = cfg.relay_power;
    let loop_gain = (bf.f_r.adjoint() * &ch.h_si * &bf.f_t).scale(p_r.sqrt());
    let xi = eye(n_s) - &loop_gain;
    let relay_out = solve_feedback(&xi, 1.0 + norm1(&loop_gain), &bf.f_r.adjoint())?;
    let b = bf.u.adjoint() * &ch.h_rd * &bf.f_t * relay_out;
    let a = &b * &ch.h_sr * &bf.v;
    let sigma = (&b * b.adjoint()).scale(p_r) + bf.u.adjoint() * &bf.u;
    let sigma = sigma.scale(cfg.noise_power);
    let gain = cfg.source_power * p_r / bf.v.ncols() as f64;
    let signal = &sigma + (&a * a.adjoint()).scale(gain);
    let singular = || Error::Singular { what: "noise covariance Sigma", condition: f64::INFINITY };
    let base = log_det_hpd(&sigma).ok_or_else(singular)?;
    let total = log_det_hpd(&signal).ok_or_else(singular)?;
    Ok(((total - base) / std::f64::consts::LN_2).max(0.0))
}

/// Solves `xi X = rhs`, treating `xi` as singular when `||xi^-1|| * scale` is
/// too large; `scale` bounds the size of the terms that cancel inside `xi`.
fn solve_feedback(xi: &ComplexMatrix, scale: f64, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
    let what = "SI feedback matrix Xi_R";
    let lu = Lu::factor(xi).map_err(|_| Error::Singular { what, condition: f64::INFINITY })?;
    let condition = lu.inverse_norm1_estimate() * scale;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { what, condition });
    }
    solve_named(xi, rhs, what)
}

/// Unconstrained beamformers: truncated-SVD `V`, `U`, `F_T`, `F_R`.
pub fn full_digital_beamformers(ch: &ChannelSet, cfg: &SystemConfig) -> Result<LinkBeamformers> {
    let target = build_f_opt(&ch.h_sr, &ch.h_rd, cfg.relay_streams)?;
    let sr = svd(&ch.h_sr);
    let rd = svd(&ch.h_rd);
    let n = cfg.streams;
    if n == 0 || n > sr.s.len() || n > rd.s.len() {
        return Err(Error::InvalidParameter(format!("streams {n} exceed channel rank bound")));
    }
    Ok(LinkBeamformers {
        v: sr.v.columns(0, n).into_owned(),
        f_t: target.f_tsvd,
        f_r: target.f_rsvd,
        u: rd.u.columns(0, n).into_owned(),
    })
}

pub fn full_digital_baseline(ch: &ChannelSet, cfg: &SystemConfig, mode: BaselineMode) -> Result<f64> {
    let bf = full_digital_beamformers(ch, cfg)?;
    match mode {
        BaselineMode::SiFree => spectral_efficiency(&ch.without_si(), &bf, cfg),
        BaselineMode::WithSi => spectral_efficiency(ch, &bf, cfg),
        BaselineMode::HalfDuplex => Ok(spectral_efficiency(&ch.without_si(), &bf, cfg)? / 2.0),
    }
}

/// `||F_R^H H_SI F_T||_F^2`.
pub fn residual_si_power(f_r: &ComplexMatrix, h_si: &ComplexMatrix, f_t: &ComplexMatrix) -> f64 {
    frobenius_sq(&(f_r.adjoint() * h_si * f_t))
}

/// `||target - product||_F^2`.
pub fn factorization_mse(target: &ComplexMatrix, product: &ComplexMatrix) -> Result<f64> {
    if target.shape() != product.shape() {
        return Err(Error::dims("factorization_mse", format!("{:?}", target.shape()), format!("{:?}", product.shape())));
    }
    Ok(frobenius_sq(&(target - product)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::rng::{complex_normal_matrix, seeded};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn setup(seed: u64) -> (ChannelSet, SystemConfig) {
        let cfg = SystemConfig::symmetric(8, 4, 4, 2).with_snr_db(5.0);
        (ChannelSet::generate(&cfg, &ChannelParams::default(), seed).unwrap(), cfg)
    }

    #[test]
    fn zero_source_power_gives_zero_rate() {
        let (ch, mut cfg) = setup(1);
        cfg.source_power = 0.0;
        let bf = full_digital_beamformers(&ch, &cfg).unwrap();
        assert_eq!(spectral_efficiency(&ch, &bf, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn perfect_cancellation_matches_si_free_bitwise() {
        let (mut ch, cfg) = setup(2);
        let mut bf = full_digital_beamformers(&ch, &cfg).unwrap();
        // F_R supported on the first two receive antennas, H_SI zero there
        bf.f_r = ComplexMatrix::zeros(8, 2);
        bf.f_r[(0, 0)] = Complex64::new(1.0, 0.0);
        bf.f_r[(1, 1)] = Complex64::new(0.0, 1.0);
        for j in 0..8 {
            ch.h_si[(0, j)] = Complex64::new(0.0, 0.0);
            ch.h_si[(1, j)] = Complex64::new(0.0, 0.0);
        }
        let with = spectral_efficiency(&ch, &bf, &cfg).unwrap();
        let without = spectral_efficiency(&ch.without_si(), &bf, &cfg).unwrap();
        assert_eq!(with.to_bits(), without.to_bits());
    }

    #[test]
    fn invariant_to_unitary_rotation_of_combiner() {
        let (ch, cfg) = setup(3);
        let mut bf = full_digital_beamformers(&ch, &cfg).unwrap();
        let base = spectral_efficiency(&ch, &bf, &cfg).unwrap();
        let mut rng = seeded(4);
        for _ in 0..5 {
            let q = svd(&complex_normal_matrix(&mut rng, 2, 2)).u;
            let rotated = LinkBeamformers { u: &bf.u * q, ..bf.clone() };
            assert_relative_eq!(spectral_efficiency(&ch, &rotated, &cfg).unwrap(), base, max_relative = 1e-9);
        }
        bf.u = bf.u.scale(3.0);
        assert_relative_eq!(spectral_efficiency(&ch, &bf, &cfg).unwrap(), base, max_relative = 1e-9);
    }

    #[test]
    fn monotone_in_source_power() {
        let (ch, mut cfg) = setup(5);
        let bf = full_digital_beamformers(&ch, &cfg).unwrap();
        let mut prev = -1.0;
        for p in [0.0, 0.1, 1.0, 10.0, 100.0] {
            cfg.source_power = p;
            let r = spectral_efficiency(&ch, &bf, &cfg).unwrap();
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn baselines_ordering() {
        let mut above = 0;
        for seed in 0..100 {
            let (ch, cfg) = setup(100 + seed);
            let free = full_digital_baseline(&ch, &cfg, BaselineMode::SiFree).unwrap();
            let hd = full_digital_baseline(&ch, &cfg, BaselineMode::HalfDuplex).unwrap();
            assert_eq!(hd, free / 2.0);
            let with = full_digital_baseline(&ch, &cfg, BaselineMode::WithSi);
            if let Ok(with) = with {
                if with <= free {
                    above += 1;
                }
            }
        }
        assert!(above >= 95, "si-free dominated on only {above}/100 seeds");
    }

    #[test]
    fn singular_feedback_reported() {
        let (mut ch, cfg) = setup(6);
        let bf = full_digital_beamformers(&ch, &cfg).unwrap();
        // make F_R^H H_SI F_T = I so Xi = 0
        let pinv_r = crate::numerics::pinv(&bf.f_r.adjoint());
        let pinv_t = crate::numerics::pinv(&bf.f_t);
        ch.h_si = pinv_r * pinv_t;
        let err = spectral_efficiency(&ch, &bf, &cfg).unwrap_err();
        assert!(err.to_string().contains("Xi_R"));
    }

    #[test]
    fn diagnostic_metrics() {
        let mut rng = seeded(7);
        let f_r = complex_normal_matrix(&mut rng, 4, 2);
        let f_t = complex_normal_matrix(&mut rng, 5, 2);
        let h = complex_normal_matrix(&mut rng, 4, 5);
        assert_eq!(residual_si_power(&f_r, &ComplexMatrix::zeros(4, 5), &f_t), 0.0);
        let direct: f64 = (f_r.adjoint() * &h * &f_t).iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(residual_si_power(&f_r, &h, &f_t), direct, max_relative = 1e-14);
        assert_eq!(factorization_mse(&h, &h).unwrap(), 0.0);
        assert_relative_eq!(factorization_mse(&h, &(-&h)).unwrap(), 4.0 * frobenius_sq(&h), max_relative = 1e-14);
        assert!(factorization_mse(&h, &f_r).is_err());
    }
}
