//! Channel generation.
//!
//! Desired links follow the clustered (extended Saleh-Valenzuela) narrowband
//! model over uniform linear arrays. The relay self-interference channel is a
//! weighted sum of a near-field spherical-wave LOS term and a clustered NLOS
//! term.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{frobenius_sq, ComplexMatrix};
use crate::rng::{complex_normal, seeded, SimRng};
use crate::system::SystemConfig;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Placement of the relay's transmit and receive arrays relative to a common
/// reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiGeometry {
    /// Distance from the reference point to the first receive element (m).
    pub a0: f64,
    /// Distance from the reference point to the first transmit element (m).
    pub b0: f64,
    /// Angle between the two arrays (rad).
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathlossMode {
    /// Channels keep unit average per-entry power; pathloss is folded into the SNR.
    Normalized,
    /// `61.5 + 20 log10(r) + eps` dB with `eps ~ N(0, shadowing_db^2)`.
    LogDistance { r_sr: f64, r_rd: f64, shadowing_db: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub n_clusters: usize,
    pub n_paths: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    /// Carrier frequency (Hz).
    pub carrier_hz: f64,
    pub si_geometry: SiGeometry,
    pub kappa_los: f64,
    pub kappa_nlos: f64,
    pub pathloss: PathlossMode,
}

impl Default for ChannelParams {
    fn default() -> Self {
        let carrier_hz = 28e9;
        let wavelength = SPEED_OF_LIGHT / carrier_hz;
        Self {
            n_clusters: 5,
            n_paths: 10,
            spacing: 0.5,
            carrier_hz,
            si_geometry: SiGeometry { a0: 2.0 * wavelength, b0: 2.0 * wavelength, phi: PI / 2.0 },
            kappa_los: std::f64::consts::FRAC_1_SQRT_2,
            kappa_nlos: std::f64::consts::FRAC_1_SQRT_2,
            pathloss: PathlossMode::Normalized,
        }
    }
}

impl ChannelParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_clusters and n_paths must be >= 1".into()));
        }
        if !(self.spacing > 0.0) || !(self.carrier_hz > 0.0) {
            return Err(Error::InvalidParameter("spacing and carrier_hz must be > 0".into()));
        }
        if !(self.kappa_los >= 0.0 && self.kappa_nlos >= 0.0)
            || self.kappa_los.powi(2) + self.kappa_nlos.powi(2) <= 0.0
        {
            return Err(Error::InvalidParameter("kappa_los, kappa_nlos must be >= 0 and not both zero".into()));
        }
        let g = &self.si_geometry;
        if !(g.a0 > 0.0 && g.b0 > 0.0) {
            return Err(Error::InvalidParameter("si_geometry a0 and b0 must be > 0".into()));
        }
        Ok(())
    }
}

/// One realization of the three channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Source to relay, `relay_rx_antennas x source_antennas`.
    pub h_sr: ComplexMatrix,
    /// Relay to destination, `dest_antennas x relay_tx_antennas`.
    pub h_rd: ComplexMatrix,
    /// Relay transmit array to relay receive array, `relay_rx_antennas x relay_tx_antennas`.
    pub h_si: ComplexMatrix,
    pub seed: u64,
}

impl ChannelSet {
    /// Draws all three channels from a generator seeded with `seed`.
    pub fn generate(cfg: &SystemConfig, params: &ChannelParams, seed: u64) -> Result<Self> {
        let mut rng = seeded(seed);
        let mut set = gen_channel_set(cfg, params, &mut rng)?;
        set.seed = seed;
        Ok(set)
    }

    /// Noise-corrupted copy, each entry at per-entry SNR `snr_db`.
    pub fn with_noise<R: Rng + ?Sized>(&self, snr_db: f64, rng: &mut R) -> Self {
        Self {
            h_sr: add_channel_noise(&self.h_sr, snr_db, rng),
            h_rd: add_channel_noise(&self.h_rd, snr_db, rng),
            h_si: add_channel_noise(&self.h_si, snr_db, rng),
            seed: self.seed,
        }
    }

    /// Same desired links with the self-interference channel zeroed.
    pub fn without_si(&self) -> Self {
        Self { h_si: ComplexMatrix::zeros(self.h_si.nrows(), self.h_si.ncols()), ..self.clone() }
    }
}

/// Normalized ULA response: entry `k` is `exp(-j 2 pi spacing k sin(theta)) / sqrt(n)`.
pub fn array_response(theta: f64, n: usize, spacing: f64) -> ComplexMatrix {
    let amp = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, 1, |k, _| {
        Complex64::from_polar(amp, -TAU * spacing * k as f64 * theta.sin())
    })
}

/// Clustered channel `sqrt(NR NT / (Nc Np)) sum alpha a_r(theta_r) a_t(theta_t)^H`.
pub fn gen_sv_channel<R: Rng + ?Sized>(
    n_rx: usize,
    n_tx: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> ComplexMatrix {
    let paths = params.n_clusters * params.n_paths;
    let gain = ((n_rx * n_tx) as f64 / paths as f64).sqrt();
    let mut h = ComplexMatrix::zeros(n_rx, n_tx);
    for _ in 0..paths {
        let alpha = complex_normal(rng);
        let theta_r = rng.random_range(0.0..TAU);
        let theta_t = rng.random_range(0.0..TAU);
        let ar = array_response(theta_r, n_rx, params.spacing);
        let at = array_response(theta_t, n_tx, params.spacing);
        h += (ar * at.adjoint()) * alpha;
    }
    h * Complex64::new(gain, 0.0)
}

/// Near-field spherical-wave LOS channel scaled so that `||H||_F^2 = n_r n_t`.
pub fn gen_los_si(n_r: usize, n_t: usize, params: &ChannelParams) -> Result<ComplexMatrix> {
    let g = &params.si_geometry;
    if !(g.a0 > 0.0 && g.b0 > 0.0) {
        return Err(Error::InvalidParameter("si_geometry a0 and b0 must be > 0".into()));
    }
    let lambda = params.wavelength();
    let d = params.spacing * lambda;
    let mut h = ComplexMatrix::zeros(n_r, n_t);
    for m in 0..n_r {
        for n in 0..n_t {
            let dist = element_distance(g, d, m, n);
            if !(dist > 1e-12 * (g.a0 + g.b0)) {
                return Err(Error::DegenerateGeometry { m, n });
            }
            h[(m, n)] = Complex64::from_polar(1.0 / dist, -TAU * dist / lambda);
        }
    }
    let rho = ((n_r * n_t) as f64 / frobenius_sq(&h)).sqrt();
    Ok(h * Complex64::new(rho, 0.0))
}

/// Law-of-cosines distance between receive element `m` and transmit element `n` (0-based).
pub fn element_distance(g: &SiGeometry, spacing_m: f64, m: usize, n: usize) -> f64 {
    let a = g.a0 + m as f64 * spacing_m;
    let b = g.b0 + n as f64 * spacing_m;
    (a * a + b * b - 2.0 * a * b * g.phi.cos()).max(0.0).sqrt()
}

/// `kappa_los H_los + kappa_nlos H_nlos`.
pub fn gen_si_channel<R: Rng + ?Sized>(
    n_r: usize,
    n_t: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let los = gen_los_si(n_r, n_t, params)?;
    let nlos = gen_sv_channel(n_r, n_t, params, rng);
    Ok(los * Complex64::new(params.kappa_los, 0.0) + nlos * Complex64::new(params.kappa_nlos, 0.0))
}

/// Adds CN(0, |h|^2 10^(-snr/10)) to every entry independently.
pub fn add_channel_noise<R: Rng + ?Sized>(h: &ComplexMatrix, snr_db: f64, rng: &mut R) -> ComplexMatrix {
    let ratio = 10f64.powf(-snr_db / 20.0);
    h.map(|z| z + complex_normal(rng) * (z.norm() * ratio))
}

pub fn pathloss_db(distance_m: f64, shadowing_db: f64) -> f64 {
    61.5 + 20.0 * distance_m.log10() + shadowing_db
}

/// Draws `H_SR`, `H_RD`, `H_SI` in that order, then applies pathloss if configured.
pub fn gen_channel_set(cfg: &SystemConfig, params: &ChannelParams, rng: &mut SimRng) -> Result<ChannelSet> {
    params.validate()?;
    let mut h_sr = gen_sv_channel(cfg.relay_rx_antennas, cfg.source_antennas, params, rng);
    let mut h_rd = gen_sv_channel(cfg.dest_antennas, cfg.relay_tx_antennas, params, rng);
    let h_si = gen_si_channel(cfg.relay_rx_antennas, cfg.relay_tx_antennas, params, rng)?;
    if let PathlossMode::LogDistance { r_sr, r_rd, shadowing_db } = params.pathloss {
        let shadow = Normal::new(0.0, shadowing_db)
            .map_err(|e| Error::InvalidParameter(format!("shadowing_db: {e}")))?;
        let amp = |r: f64, eps: f64| Complex64::new(10f64.powf(-pathloss_db(r, eps) / 20.0), 0.0);
        let (eps_sr, eps_rd) = (shadow.sample(rng), shadow.sample(rng));
        h_sr *= amp(r_sr, eps_sr);
        h_rd *= amp(r_rd, eps_rd);
    }
    Ok(ChannelSet { h_sr, h_rd, h_si, seed: 0 })
}
