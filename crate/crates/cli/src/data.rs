use std::path::Path;
use std::time::Instant;

use fdhbf_core::elm::store::{read_dataset, write_dataset, write_model};
use fdhbf_core::elm::{generate_dataset, input_len};
use fdhbf_core::ElmModel;
use serde_json::json;

use crate::{CliError, ExperimentConfig};

pub fn cmd_gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let d = &cfg.dataset;
    let system = cfg.dataset_system();
    let started = Instant::now();
    let data = generate_dataset(&system, &cfg.channel, &cfg.solver(), d.samples, d.realizations, d.snr_train_db, cfg.seed)?;
    write_dataset(out, &data)?;
    println!(
        "wrote {}: N={} N_I={} N_o={} skipped={} ({:.2} s)",
        out.display(),
        data.len(),
        input_len(&system),
        data.meta.dims().output_len(),
        data.meta.skipped.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn cmd_train(cfg: &ExperimentConfig, data_path: &Path, out: &Path) -> Result<(), CliError> {
    let data = read_dataset(data_path)
        .map_err(|e| CliError::Runtime(format!("cannot load dataset {}: {e}", data_path.display())))?;
    if data.is_empty() {
        return Err(CliError::Runtime(format!("dataset {} has no samples", data_path.display())));
    }
    let started = Instant::now();
    let model = ElmModel::fit_dataset(&data, &cfg.elm)?;
    let seconds = started.elapsed().as_secs_f64();
    let provenance = json!({
        "dataset_path": data_path.display().to_string(),
        "dataset_meta": data.meta,
        "config": cfg,
        "training_time_s": seconds,
    });
    write_model(out, &model, &provenance)?;
    println!(
        "wrote {}: activation={} L={} lambda={} N={} training {:.4} s",
        out.display(),
        cfg.elm.activation.name(),
        cfg.elm.hidden,
        cfg.elm.lambda,
        data.len(),
        seconds
    );
    Ok(())
}
