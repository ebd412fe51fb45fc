//! Sweep evaluation.
//!
//! Every hybrid design starts from a noisy estimate of the channel at the
//! point's `snr_test_db`; all rates are measured on the true channel. The
//! fully digital references are designed from the true channel. Designs do
//! not depend on the transmit SNR, so each realization is designed once per
//! (antennas, streams, snr_test_db) group and scored at every SNR of the grid.

use std::path::Path;
use std::time::Instant;

use fdhbf_core::channel::{ChannelParams, ChannelSet};
use fdhbf_core::elm::store::read_model;
use fdhbf_core::elm::{DatasetMeta, RelayDims};
use fdhbf_core::metrics::{full_digital_beamformers, residual_si_power, spectral_efficiency, BaselineMode};
use fdhbf_core::pipeline::{design_endpoints, design_relay};
use fdhbf_core::rng::{derive_seed, seeded};
use fdhbf_core::{ElmModel, LinkBeamformers, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{CliError, ExperimentConfig, SweepPoint};

pub const RESULTS_HEADER: &str = "method,N_t,N_r,n_s,N_RFT,N_RFR,snr_db,snr_test_db,se_mean,se_std,si_resid_db,time_s,seed";
pub const RESULTS_SCHEMA: u32 = 1;

const NOISE_STREAM: u64 = 11;
const SOLVER_STREAM: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MmAdmmHbf,
    ElmHbf,
    FullDigital(BaselineMode),
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::MmAdmmHbf => "mm_admm_hbf",
            Method::ElmHbf => "elm_hbf",
            Method::FullDigital(mode) => mode.label(),
        }
    }
}

const METHODS: [Method; 5] = [
    Method::MmAdmmHbf,
    Method::ElmHbf,
    Method::FullDigital(BaselineMode::SiFree),
    Method::FullDigital(BaselineMode::WithSi),
    Method::FullDigital(BaselineMode::HalfDuplex),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    #[serde(rename = "N_t")]
    pub n_t: usize,
    #[serde(rename = "N_r")]
    pub n_r: usize,
    pub n_s: usize,
    #[serde(rename = "N_RFT")]
    pub n_rft: usize,
    #[serde(rename = "N_RFR")]
    pub n_rfr: usize,
    pub snr_db: f64,
    pub snr_test_db: f64,
    pub se_mean: f64,
    pub se_std: f64,
    /// `10 log10` of the mean residual SI power; NaN where SI is not modelled.
    pub si_resid_db: f64,
    /// Mean design time per channel (relay only for the hybrid methods).
    pub time_s: f64,
    pub seed: u64,
}

/// Instances dropped from one row's statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub method: &'static str,
    pub point: SweepPoint,
    pub excluded: usize,
    pub total: usize,
}

/// One design evaluated on one realization: rate per transmit SNR, residual SI, time.
#[derive(Debug, Clone)]
struct Scored {
    se: Vec<Result<f64, String>>,
    si: Option<f64>,
    time_s: f64,
}

type Outcome = Result<Scored, String>;

/// What the sweep needs from an optional trained model.
pub struct LearnedRelay {
    pub model: ElmModel,
    pub meta: Option<DatasetMeta>,
}

pub fn load_learned(path: &Path) -> Result<LearnedRelay, CliError> {
    let (model, provenance) =
        read_model(path).map_err(|e| CliError::Runtime(format!("cannot load model {}: {e}", path.display())))?;
    let meta = provenance
        .get("dataset_meta")
        .and_then(|m| serde_json::from_value::<DatasetMeta>(m.clone()).ok());
    Ok(LearnedRelay { model, meta })
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    channel: ChannelParams,
    channel_seeds: Vec<u64>,
    learned: Option<&'a LearnedRelay>,
}

impl Context<'_> {
    /// Realization `r` reuses the model's training channels when a model with
    /// recorded provenance is given (held-out noisy copies of the same
    /// realizations), otherwise channel seed `seed + r`.
    fn channel_seed(&self, r: usize) -> u64 {
        if self.channel_seeds.is_empty() {
            self.cfg.seed.wrapping_add(r as u64)
        } else {
            self.channel_seeds[r % self.channel_seeds.len()]
        }
    }
}

fn score(clean: &ChannelSet, bf: &LinkBeamformers, systems: &[SystemConfig], half: bool) -> Vec<Result<f64, String>> {
    systems
        .iter()
        .map(|sys| {
            let r = if half {
                spectral_efficiency(&clean.without_si(), bf, sys).map(|r| r / 2.0)
            } else {
                spectral_efficiency(clean, bf, sys)
            };
            r.map_err(|e| e.to_string())
        })
        .collect()
}

/// All methods on realization `r` of one design group.
fn run_realization(ctx: &Context, systems: &[SystemConfig], snr_test_db: f64, r: usize) -> Vec<(Method, Outcome)> {
    let cfg = ctx.cfg;
    let sys = &systems[0];
    let clean = match ChannelSet::generate(sys, &ctx.channel, ctx.channel_seed(r)) {
        Ok(c) => c,
        Err(e) => return METHODS.iter().map(|&m| (m, Err(format!("channel generation: {e}")))).collect(),
    };
    let noisy = clean.with_noise(snr_test_db, &mut seeded(derive_seed(cfg.seed, r as u64, NOISE_STREAM)));
    let mut rng = seeded(derive_seed(cfg.seed, r as u64, SOLVER_STREAM));
    let solver = cfg.solver();
    let mut out = Vec::with_capacity(METHODS.len());

    let endpoints = design_endpoints(&noisy, sys, &solver.mm, &mut rng).map_err(|e| format!("endpoint design: {e}"));
    let hybrid = |relay: fdhbf_core::RelayHbf, time_s: f64| -> Outcome {
        let (source, dest) = endpoints.as_ref().map_err(Clone::clone)?;
        let bf = LinkBeamformers::from_hybrid(source, &relay, dest);
        let si = residual_si_power(&bf.f_r, &clean.h_si, &bf.f_t);
        Ok(Scored { se: score(&clean, &bf, systems, false), si: Some(si), time_s })
    };

    let started = Instant::now();
    let relay = design_relay(&noisy, sys, &solver, &mut rng);
    let elapsed = started.elapsed().as_secs_f64();
    out.push((Method::MmAdmmHbf, relay.map_err(|e| e.to_string()).and_then(|d| hybrid(d.mm.hbf, elapsed))));

    if let Some(learned) = ctx.learned.filter(|l| l.model.dims == RelayDims::from_config(sys)) {
        let started = Instant::now();
        let relay = learned.model.predict_beamformers(&noisy);
        let elapsed = started.elapsed().as_secs_f64();
        out.push((Method::ElmHbf, relay.map_err(|e| e.to_string()).and_then(|h| hybrid(h, elapsed))));
    }

    let started = Instant::now();
    let full = full_digital_beamformers(&clean, sys);
    let elapsed = started.elapsed().as_secs_f64();
    match full {
        Ok(bf) => {
            let si = residual_si_power(&bf.f_r, &clean.h_si, &bf.f_t);
            for mode in [BaselineMode::SiFree, BaselineMode::WithSi, BaselineMode::HalfDuplex] {
                let scored = match mode {
                    BaselineMode::SiFree => Scored { se: score(&clean.without_si(), &bf, systems, false), si: None, time_s: elapsed },
                    BaselineMode::WithSi => Scored { se: score(&clean, &bf, systems, false), si: Some(si), time_s: elapsed },
                    BaselineMode::HalfDuplex => Scored { se: score(&clean, &bf, systems, true), si: None, time_s: elapsed },
                };
                out.push((Method::FullDigital(mode), Ok(scored)));
            }
        }
        Err(e) => {
            for mode in [BaselineMode::SiFree, BaselineMode::WithSi, BaselineMode::HalfDuplex] {
                out.push((Method::FullDigital(mode), Err(format!("fully digital design: {e}"))));
            }
        }
    }
    out
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the sweep; rows come back in grid order, methods in a fixed order.
pub fn evaluate(cfg: &ExperimentConfig, learned: Option<&LearnedRelay>) -> Result<(Vec<ResultRow>, Vec<Exclusion>), CliError> {
    let (channel, channel_seeds) = match learned.and_then(|l| l.meta.as_ref()) {
        Some(meta) => {
            if meta.channel != cfg.channel {
                log::warn!("using the model's channel parameters, which differ from the configuration");
            }
            let usable = (0..meta.n_realizations)
                .filter(|r| !meta.skipped.iter().any(|s| s.realization == *r))
                .map(|r| meta.realization_seeds[r])
                .collect();
            (meta.channel.clone(), usable)
        }
        None => (cfg.channel.clone(), Vec::new()),
    };
    let ctx = Context { cfg, channel, channel_seeds, learned };
    let n_real = cfg.sweep.realizations;
    let mut rows = Vec::new();
    let mut exclusions = Vec::new();

    for &antennas in &cfg.sweep.antennas {
        for &streams in &cfg.sweep.streams {
            if let Some(l) = learned {
                if l.model.dims != RelayDims::from_config(&cfg.system(antennas, streams, 0.0)) {
                    log::info!("model dimensions do not match antennas {antennas}, streams {streams}: no ELM rows");
                }
            }
            for &snr_test_db in &cfg.sweep.snr_test_db {
                let systems: Vec<SystemConfig> =
                    cfg.sweep.snr_db.iter().map(|&snr| cfg.system(antennas, streams, snr)).collect();
                let per_real: Vec<Vec<(Method, Outcome)>> =
                    (0..n_real).into_par_iter().map(|r| run_realization(&ctx, &systems, snr_test_db, r)).collect();

                let mut group = Vec::new();
                for (mi, method) in METHODS.into_iter().enumerate() {
                    let results: Vec<(usize, &Outcome)> = per_real
                        .iter()
                        .enumerate()
                        .filter_map(|(r, v)| v.iter().find(|(m, _)| *m == method).map(|(_, o)| (r, o)))
                        .collect();
                    if results.is_empty() {
                        continue;
                    }
                    for (k, &snr_db) in cfg.sweep.snr_db.iter().enumerate() {
                        let point = SweepPoint { antennas, streams, snr_db, snr_test_db };
                        let (mut se, mut si, mut time) = (vec![], vec![], vec![]);
                        for &(r, outcome) in &results {
                            match outcome.as_ref().and_then(|s| s.se[k].as_ref().map(|v| (s, *v))) {
                                Ok((s, v)) => {
                                    se.push(v);
                                    si.extend(s.si);
                                    time.push(s.time_s);
                                }
                                Err(reason) => log::warn!(
                                    "{} N_t={antennas} n_s={streams} snr_db={snr_db} snr_test_db={snr_test_db} realization {r} excluded: {reason}",
                                    method.label()
                                ),
                            }
                        }
                        let excluded = results.len() - se.len();
                        if excluded > 0 {
                            exclusions.push(Exclusion { method: method.label(), point, excluded, total: results.len() });
                        }
                        let (se_mean, se_std) = mean_std(&se);
                        let si_resid_db = if si.is_empty() { f64::NAN } else { 10.0 * mean_std(&si).0.log10() };
                        let sys = &systems[k];
                        group.push((k, mi, ResultRow {
                            method: method.label().to_string(),
                            n_t: sys.source_antennas,
                            n_r: sys.dest_antennas,
                            n_s: streams,
                            n_rft: sys.relay_tx_rf,
                            n_rfr: sys.relay_rx_rf,
                            snr_db,
                            snr_test_db,
                            se_mean,
                            se_std,
                            si_resid_db,
                            time_s: mean_std(&time).0,
                            seed: cfg.seed,
                        }));
                    }
                }
                // grid order: transmit SNR, then method
                group.sort_by_key(|&(k, mi, _)| (k, mi));
                rows.extend(group.into_iter().map(|(_, _, row)| row));
            }
        }
    }
    Ok((rows, exclusions))
}

pub fn write_results(path: &Path, cfg: &ExperimentConfig, rows: &[ResultRow], exclusions: &[Exclusion]) -> Result<(), CliError> {
    let mut w = csv_writer(path, cfg)?;
    for row in rows {
        w.serialize(row)?;
    }
    let mut inner = w.into_inner().map_err(|e| CliError::Runtime(format!("CSV error: {e}")))?;
    use std::io::Write;
    for e in exclusions {
        writeln!(
            inner,
            "# excluded method={} N_t={} n_s={} snr_db={} snr_test_db={} count={}/{}",
            e.method, e.point.antennas, e.point.streams, e.point.snr_db, e.point.snr_test_db, e.excluded, e.total
        )?;
    }
    inner.flush()?;
    Ok(())
}

fn csv_writer(path: &Path, cfg: &ExperimentConfig) -> Result<csv::Writer<std::io::BufWriter<std::fs::File>>, CliError> {
    crate::csv_with_preamble(path, &format!("fdhbf results schema {RESULTS_SCHEMA}"), cfg)
}

pub fn cmd_eval(cfg: &ExperimentConfig, model: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let learned = model.map(load_learned).transpose()?;
    let (rows, exclusions) = evaluate(cfg, learned.as_ref())?;
    write_results(out, cfg, &rows, &exclusions)?;
    let excluded: usize = exclusions.iter().map(|e| e.excluded).sum();
    println!("wrote {} rows to {} ({excluded} excluded instances)", rows.len(), out.display());
    for e in &exclusions {
        eprintln!(
            "excluded {} of {} {} instances at N_t={} n_s={} snr_db={} snr_test_db={}",
            e.excluded, e.total, e.method, e.point.antennas, e.point.streams, e.point.snr_db, e.point.snr_test_db
        );
    }
    Ok(())
}
