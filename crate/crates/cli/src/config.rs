//! Experiment configuration: one TOML file, every key optional.
//!
//! Keys may be written as tables or as dotted paths (`sweep.snr_db = [0.0]`).

use std::path::{Path, PathBuf};

use fdhbf_core::{AdmmParams, ChannelParams, ElmParams, MmParams, SolverParams, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
    /// Output path; each command has its own default when unset.
    pub out: Option<PathBuf>,
    pub link: LinkConfig,
    pub channel: ChannelParams,
    pub admm: AdmmParams,
    pub mm: MmParams,
    pub elm: ElmParams,
    pub dataset: DatasetConfig,
    pub sweep: SweepConfig,
    pub bench: BenchConfig,
}

/// RF chains and powers shared by every sweep point. Antenna counts, stream
/// counts and noise power come from the sweep grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub source_rf: usize,
    pub relay_tx_rf: usize,
    pub relay_rx_rf: usize,
    pub dest_rf: usize,
    pub source_power: f64,
    pub relay_power: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { source_rf: 6, relay_tx_rf: 6, relay_rx_rf: 4, dest_rf: 4, source_power: 1.0, relay_power: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub antennas: usize,
    pub streams: usize,
    pub samples: usize,
    pub realizations: usize,
    pub snr_train_db: f64,
    /// Transmit SNR stored with the system configuration.
    pub snr_db: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { antennas: 16, streams: 2, samples: 1000, realizations: 10, snr_train_db: 25.0, snr_db: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    pub antennas: Vec<usize>,
    pub streams: Vec<usize>,
    /// Channel-estimation SNR of the estimates the hybrid designs start from.
    pub snr_test_db: Vec<f64>,
    pub realizations: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            antennas: vec![16],
            streams: vec![2],
            snr_test_db: vec![25.0],
            realizations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub reps: usize,
    pub warmup: usize,
    /// Distinct channels cycled through during timing.
    pub channels: usize,
    /// Size of the throwaway training set used when no matching model is given.
    pub train_samples: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { reps: 30, warmup: 5, channels: 8, train_samples: 20 }
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub antennas: usize,
    pub streams: usize,
    pub snr_db: f64,
    pub snr_test_db: f64,
}

fn field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn solver(&self) -> SolverParams {
        SolverParams { admm: self.admm.clone(), mm: self.mm.clone() }
    }

    pub fn system(&self, antennas: usize, streams: usize, snr_db: f64) -> SystemConfig {
        let l = &self.link;
        SystemConfig {
            source_antennas: antennas,
            dest_antennas: antennas,
            relay_tx_antennas: antennas,
            relay_rx_antennas: antennas,
            source_rf: l.source_rf,
            relay_tx_rf: l.relay_tx_rf,
            relay_rx_rf: l.relay_rx_rf,
            dest_rf: l.dest_rf,
            streams,
            relay_streams: streams,
            source_power: l.source_power,
            relay_power: l.relay_power,
            noise_power: l.source_power * 10f64.powf(-snr_db / 10.0),
        }
    }

    pub fn dataset_system(&self) -> SystemConfig {
        self.system(self.dataset.antennas, self.dataset.streams, self.dataset.snr_db)
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let s = &self.sweep;
        let mut out = Vec::new();
        for &antennas in &s.antennas {
            for &streams in &s.streams {
                for &snr_test_db in &s.snr_test_db {
                    for &snr_db in &s.snr_db {
                        out.push(SweepPoint { antennas, streams, snr_db, snr_test_db });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.sweep;
        for (name, empty) in [
            ("sweep.snr_db", s.snr_db.is_empty()),
            ("sweep.antennas", s.antennas.is_empty()),
            ("sweep.streams", s.streams.is_empty()),
            ("sweep.snr_test_db", s.snr_test_db.is_empty()),
        ] {
            if empty {
                return Err(field(name, "grid must not be empty"));
            }
        }
        if let Some(v) = s.snr_db.iter().chain(&s.snr_test_db).find(|v| !v.is_finite()) {
            return Err(field("sweep", format!("SNR values must be finite, got {v}")));
        }
        if s.realizations == 0 {
            return Err(field("sweep.realizations", "must be >= 1"));
        }
        for &n in &s.antennas {
            for &k in &s.streams {
                self.system(n, k, 0.0)
                    .validate()
                    .map_err(|e| field("sweep", format!("antennas {n}, streams {k}: {e}")))?;
            }
        }
        let d = &self.dataset;
        self.dataset_system().validate().map_err(|e| field("dataset", e))?;
        if d.samples == 0 {
            return Err(field("dataset.samples", "must be >= 1"));
        }
        if d.realizations == 0 || d.realizations > d.samples {
            return Err(field("dataset.realizations", format!("must be in 1..={}", d.samples)));
        }
        if !d.snr_train_db.is_finite() || !d.snr_db.is_finite() {
            return Err(field("dataset", "SNR values must be finite"));
        }
        if self.bench.reps == 0 {
            return Err(field("bench.reps", "must be >= 1"));
        }
        if self.bench.channels == 0 {
            return Err(field("bench.channels", "must be >= 1"));
        }
        if self.bench.train_samples < 2 {
            return Err(field("bench.train_samples", "must be >= 2"));
        }
        if !(self.link.source_power > 0.0 && self.link.source_power.is_finite()) {
            return Err(field("link.source_power", "must be > 0 (the SNR grid is relative to it)"));
        }
        self.channel.validate().map_err(|e| field("channel", e))?;
        self.admm.validate().map_err(|e| field("admm", e))?;
        self.mm.validate().map_err(|e| field("mm", e))?;
        self.elm.validate().map_err(|e| field("elm", e))?;
        Ok(())
    }
}
