use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_input_vector, build_target_vector, stack_rows, RealMatrix, RelayDims};
use crate::channel::{ChannelParams, ChannelSet};
use crate::error::{Error, Result};
use crate::pipeline::{design_relay, SolverParams};
use crate::rng::{derive_seed, seeded};
use crate::system::SystemConfig;

pub const DATASET_SCHEMA_VERSION: u32 = 1;

const NOISE_STREAM: u64 = 1;
const SOLVER_STREAM: u64 = 2;
const TEST_NOISE_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRealization {
    pub realization: usize,
    pub channel_seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub system: SystemConfig,
    pub channel: ChannelParams,
    pub solver: SolverParams,
    pub snr_train_db: f64,
    pub base_seed: u64,
    pub n_realizations: usize,
    /// Channel seed of each realization, `base_seed + index`.
    pub realization_seeds: Vec<u64>,
    /// Realization index of every stored sample.
    pub sample_realization: Vec<usize>,
    pub skipped: Vec<SkippedRealization>,
}

impl DatasetMeta {
    pub fn dims(&self) -> RelayDims {
        RelayDims::from_config(&self.system)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `X` (`N x N_I`) and `T` (`N x N_o`).
    pub fn matrices(&self) -> Result<(RealMatrix, RealMatrix)> {
        if self.samples.is_empty() {
            return Err(Error::InvalidParameter("dataset has no samples".into()));
        }
        let xs: Vec<&[f64]> = self.samples.iter().map(|s| s.x.as_slice()).collect();
        let ts: Vec<&[f64]> = self.samples.iter().map(|s| s.t.as_slice()).collect();
        Ok((stack_rows(&xs)?, stack_rows(&ts)?))
    }
}

/// Number of noisy copies drawn for realization `r`.
fn copies_for(r: usize, n_samples: usize, n_realizations: usize) -> usize {
    n_samples / n_realizations + usize::from(r < n_samples % n_realizations)
}

/// Builds `n_samples` noisy training samples spread over `n_realizations` channels.
///
/// Each realization is labelled once, by the optimizer pipeline run on its
/// first noisy copy; all copies of that realization share the label. A
/// realization whose label cannot be computed is skipped and recorded.
#[allow(clippy::too_many_arguments)]
pub fn generate_dataset(
    cfg: &SystemConfig,
    channel: &ChannelParams,
    solver: &SolverParams,
    n_samples: usize,
    n_realizations: usize,
    snr_train_db: f64,
    seed: u64,
) -> Result<Dataset> {
    cfg.validate()?;
    channel.validate()?;
    solver.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    if n_realizations == 0 || n_realizations > n_samples {
        return Err(Error::InvalidParameter(format!(
            "n_realizations must be in 1..={n_samples}, got {n_realizations}"
        )));
    }
    let realization_seeds: Vec<u64> = (0..n_realizations as u64).map(|r| seed.wrapping_add(r)).collect();

    let results: Vec<std::result::Result<Vec<Sample>, SkippedRealization>> = (0..n_realizations)
        .into_par_iter()
        .map(|r| {
            let skip = |reason: String| SkippedRealization { realization: r, channel_seed: realization_seeds[r], reason };
            let clean = ChannelSet::generate(cfg, channel, realization_seeds[r]).map_err(|e| skip(e.to_string()))?;
            let mut noise_rng = seeded(derive_seed(seed, r as u64, NOISE_STREAM));
            let copies: Vec<ChannelSet> =
                (0..copies_for(r, n_samples, n_realizations)).map(|_| clean.with_noise(snr_train_db, &mut noise_rng)).collect();
            let mut solver_rng = seeded(derive_seed(seed, r as u64, SOLVER_STREAM));
            let label = design_relay(&copies[0], cfg, solver, &mut solver_rng)
                .and_then(|d| build_target_vector(&d.mm.hbf))
                .map_err(|e| skip(e.to_string()))?;
            Ok(copies.iter().map(|c| Sample { x: build_input_vector(c), t: label.clone() }).collect())
        })
        .collect();

    let mut samples = Vec::with_capacity(n_samples);
    let mut sample_realization = Vec::with_capacity(n_samples);
    let mut skipped = Vec::new();
    for (r, result) in results.into_iter().enumerate() {
        match result {
            Ok(batch) => {
                sample_realization.extend(std::iter::repeat_n(r, batch.len()));
                samples.extend(batch);
            }
            Err(s) => {
                log::warn!("skipping realization {} (seed {}): {}", s.realization, s.channel_seed, s.reason);
                skipped.push(s);
            }
        }
    }
    Ok(Dataset {
        samples,
        meta: DatasetMeta {
            schema_version: DATASET_SCHEMA_VERSION,
            system: cfg.clone(),
            channel: channel.clone(),
            solver: solver.clone(),
            snr_train_db,
            base_seed: seed,
            n_realizations,
            realization_seeds,
            sample_realization,
            skipped,
        },
    })
}

/// A test channel: the true realization and a fresh noisy estimate of it.
#[derive(Debug, Clone)]
pub struct HeldOut {
    pub realization: usize,
    pub clean: ChannelSet,
    pub noisy: ChannelSet,
}

/// `n_test` new noisy copies of the dataset's realizations (round robin, skipped
/// realizations excluded) at `snr_test_db`, with noise drawn from `seed`.
pub fn held_out_samples(meta: &DatasetMeta, n_test: usize, snr_test_db: f64, seed: u64) -> Result<Vec<HeldOut>> {
    let usable: Vec<usize> = (0..meta.n_realizations)
        .filter(|r| !meta.skipped.iter().any(|s| s.realization == *r))
        .collect();
    if usable.is_empty() {
        return Err(Error::InvalidParameter("dataset has no usable realizations".into()));
    }
    (0..n_test)
        .map(|i| {
            let r = usable[i % usable.len()];
            let clean = ChannelSet::generate(&meta.system, &meta.channel, meta.realization_seeds[r])?;
            let mut rng = seeded(derive_seed(seed, i as u64, TEST_NOISE_STREAM));
            let noisy = clean.with_noise(snr_test_db, &mut rng);
            Ok(HeldOut { realization: r, clean, noisy })
        })
        .collect()
}
