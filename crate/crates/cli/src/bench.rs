//! Median wall-clock of relay optimization versus relay ELM prediction.

use std::path::Path;
use std::time::Instant;

use fdhbf_core::channel::ChannelSet;
use fdhbf_core::elm::{generate_dataset, RelayDims};
use fdhbf_core::pipeline::design_relay;
use fdhbf_core::rng::{derive_seed, seeded};
use fdhbf_core::ElmModel;
use serde::{Deserialize, Serialize};

use crate::eval::load_learned;
use crate::{median, CliError, ExperimentConfig};

const SOLVER_STREAM: u64 = 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "N_r")]
    pub n_r: usize,
    pub n_s: usize,
    #[serde(rename = "N_RFT")]
    pub n_rft: usize,
    #[serde(rename = "N_RFR")]
    pub n_rfr: usize,
    pub reps: usize,
    pub warmup: usize,
    pub optimize_median_s: f64,
    pub predict_median_s: f64,
    /// `optimize_median_s / predict_median_s`.
    pub speedup: f64,
    pub seed: u64,
}

fn median_time<E>(reps: usize, warmup: usize, mut f: impl FnMut(usize) -> Result<(), E>) -> Result<f64, E> {
    for i in 0..warmup {
        f(i)?;
    }
    let mut times = Vec::with_capacity(reps);
    for i in 0..reps {
        let started = Instant::now();
        f(warmup + i)?;
        times.push(started.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

pub fn bench(cfg: &ExperimentConfig, model: Option<&Path>) -> Result<Vec<TimingRow>, CliError> {
    let given = model.map(load_learned).transpose()?.map(|l| l.model);
    let streams = cfg.sweep.streams[0];
    let solver = cfg.solver();
    let b = &cfg.bench;
    let mut rows = Vec::new();
    for &antennas in &cfg.sweep.antennas {
        let sys = cfg.system(antennas, streams, cfg.sweep.snr_db[0]);
        let model = match &given {
            Some(m) if m.dims == RelayDims::from_config(&sys) => m.clone(),
            _ => {
                // prediction cost depends only on the network's size
                log::info!("training a throwaway model for N_t={antennas}");
                let data = generate_dataset(
                    &sys,
                    &cfg.channel,
                    &solver,
                    b.train_samples,
                    2.min(b.train_samples),
                    cfg.dataset.snr_train_db,
                    cfg.seed,
                )?;
                ElmModel::fit_dataset(&data, &cfg.elm)?
            }
        };
        let channels = (0..b.channels as u64)
            .map(|k| ChannelSet::generate(&sys, &cfg.channel, cfg.seed.wrapping_add(k)))
            .collect::<Result<Vec<_>, _>>()?;
        let pick = |i: usize| &channels[i % channels.len()];
        let optimize = median_time(b.reps, b.warmup, |i| {
            design_relay(pick(i), &sys, &solver, &mut seeded(derive_seed(cfg.seed, i as u64, SOLVER_STREAM))).map(|_| ())
        })?;
        let predict = median_time(b.reps, b.warmup, |i| model.predict_beamformers(pick(i)).map(|_| ()))?;
        rows.push(TimingRow {
            n_t: antennas,
            n_r: antennas,
            n_s: streams,
            n_rft: sys.relay_tx_rf,
            n_rfr: sys.relay_rx_rf,
            reps: b.reps,
            warmup: b.warmup,
            optimize_median_s: optimize,
            predict_median_s: predict,
            speedup: optimize / predict,
            seed: cfg.seed,
        });
    }
    Ok(rows)
}

pub fn cmd_bench(cfg: &ExperimentConfig, model: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let rows = bench(cfg, model)?;
    let mut w = crate::csv_with_preamble(out, "fdhbf timing", cfg)?;
    for row in &rows {
        w.serialize(row)?;
        println!(
            "N_t={}: optimize {:.3e} s, predict {:.3e} s, speedup {:.1}x",
            row.n_t, row.optimize_median_s, row.predict_median_s, row.speedup
        );
    }
    w.flush()?;
    Ok(())
}
