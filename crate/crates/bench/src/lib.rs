//! Shared fixtures for the benchmarks.

use fdhbf_core::admm::build_f_opt;
use fdhbf_core::channel::{ChannelParams, ChannelSet};
use fdhbf_core::elm::{generate_dataset, Dataset};
use fdhbf_core::pipeline::SolverParams;
use fdhbf_core::{ComplexMatrix, ElmModel, ElmParams, SystemConfig};

/// Relay with `antennas` elements per array, 6 transmit and 4 receive RF chains, 2 streams.
pub fn system(antennas: usize) -> SystemConfig {
    SystemConfig::symmetric(antennas, 6, 4, 2)
}

pub fn channel(antennas: usize, seed: u64) -> ChannelSet {
    ChannelSet::generate(&system(antennas), &ChannelParams::default(), seed).expect("valid fixture")
}

/// `(F_opt, H_SI)` for the ADMM stage.
pub fn admm_input(antennas: usize, seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    let ch = channel(antennas, seed);
    let target = build_f_opt(&ch.h_sr, &ch.h_rd, 2).expect("valid fixture");
    (target.f_opt, ch.h_si)
}

pub fn dataset(antennas: usize, samples: usize, realizations: usize) -> Dataset {
    generate_dataset(&system(antennas), &ChannelParams::default(), &SolverParams::default(), samples, realizations, 25.0, 1)
        .expect("valid fixture")
}

pub fn model(data: &Dataset, params: &ElmParams) -> ElmModel {
    ElmModel::fit_dataset(data, params).expect("valid fixture")
}
