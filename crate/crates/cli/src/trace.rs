//! Per-iteration convergence traces of the relay optimizer.

use std::path::Path;

use fdhbf_core::channel::ChannelSet;
use fdhbf_core::pipeline::design_relay;
use fdhbf_core::rng::{derive_seed, seeded};
use serde::{Deserialize, Serialize};

use crate::{CliError, ExperimentConfig};

const SOLVER_STREAM: u64 = 31;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    /// `admm` or `mm`.
    pub algorithm: String,
    /// 1-based.
    pub iteration: usize,
    /// `||F_opt - F_T F_R^H||^2` for ADMM, the hybrid factorization error for MM.
    pub objective: f64,
    /// Absolute residual SI power in dB; empty for MM.
    pub si_power_db: Option<f64>,
}

/// One channel (seed `cfg.seed`) per antenna count of the sweep.
pub fn traces(cfg: &ExperimentConfig) -> Result<Vec<TraceRow>, CliError> {
    let mut rows = Vec::new();
    let streams = cfg.sweep.streams[0];
    for &antennas in &cfg.sweep.antennas {
        let sys = cfg.system(antennas, streams, cfg.sweep.snr_db[0]);
        let ch = ChannelSet::generate(&sys, &cfg.channel, cfg.seed)?;
        let mut rng = seeded(derive_seed(cfg.seed, antennas as u64, SOLVER_STREAM));
        let design = design_relay(&ch, &sys, &cfg.solver(), &mut rng)?;
        let admm = &design.admm.trace;
        for (i, (&objective, db)) in admm.objective.iter().zip(admm.si_power_db()).enumerate() {
            rows.push(TraceRow { n_t: antennas, algorithm: "admm".into(), iteration: i + 1, objective, si_power_db: Some(db) });
        }
        for (i, &objective) in design.mm.trace.iter().enumerate() {
            rows.push(TraceRow { n_t: antennas, algorithm: "mm".into(), iteration: i + 1, objective, si_power_db: None });
        }
        log::info!(
            "N_t={antennas}: admm {} iterations (converged {}), mm {} iterations",
            admm.len(),
            admm.converged,
            design.mm.trace.len()
        );
    }
    Ok(rows)
}

pub fn cmd_trace(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let rows = traces(cfg)?;
    let mut w = crate::csv_with_preamble(out, "fdhbf convergence trace", cfg)?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    println!("wrote {} trace rows to {}", rows.len(), out.display());
    Ok(())
}
