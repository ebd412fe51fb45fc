//! Optimizer pipeline: SI-nulling factorization followed by hybrid factorization
//! at the relay, and single-sided hybrid designs at source and destination.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::admm::{build_f_opt, run_admm, AdmmOutcome, AdmmParams, AdmmTrace, RelayTarget};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::metrics::LinkBeamformers;
use crate::mm::{design_node_hbf, run_mm_hbf, MmOutcome, MmParams, NodeHbf, RelayHbf, Side};
use crate::numerics::{frobenius_sq, ComplexMatrix};
use crate::system::SystemConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub admm: AdmmParams,
    pub mm: MmParams,
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        self.admm.validate()?;
        self.mm.validate()
    }
}

#[derive(Debug, Clone)]
pub struct RelayDesign {
    pub target: RelayTarget,
    pub admm: AdmmOutcome,
    /// ADMM product rescaled to `||.||_F^2 = n_s`; the hybrid factorization target.
    pub mm_target: ComplexMatrix,
    pub mm: MmOutcome,
}

/// Scales `m` to squared Frobenius norm `n_s`.
pub fn power_normalize(m: &ComplexMatrix, n_s: usize) -> Result<ComplexMatrix> {
    let norm = frobenius_sq(m).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm("relay product F_T F_R^H"));
    }
    Ok(m.scale((n_s as f64).sqrt() / norm))
}

pub fn design_relay<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    params: &SolverParams,
    rng: &mut R,
) -> Result<RelayDesign> {
    let n_s = cfg.relay_streams;
    let target = build_f_opt(&ch.h_sr, &ch.h_rd, n_s)?;
    let admm = run_admm(&target.f_opt, &ch.h_si, n_s, &params.admm, rng)?;
    let mm_target = power_normalize(&admm.product(), n_s)?;
    let mm = run_mm_hbf(&mm_target, cfg.relay_tx_rf, cfg.relay_rx_rf, n_s, &params.mm, rng)?;
    Ok(RelayDesign { target, admm, mm_target, mm })
}

/// Source precoder and destination combiner.
pub fn design_endpoints<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    params: &MmParams,
    rng: &mut R,
) -> Result<(NodeHbf, NodeHbf)> {
    let source = design_node_hbf(&ch.h_sr, Side::Precoder, cfg.source_rf, cfg.streams, params, rng)?;
    let dest = design_node_hbf(&ch.h_rd, Side::Combiner, cfg.dest_rf, cfg.streams, params, rng)?;
    Ok((source, dest))
}

#[derive(Debug, Clone)]
pub struct LinkDesign {
    pub source: NodeHbf,
    pub relay: RelayHbf,
    pub destination: NodeHbf,
    pub admm_trace: AdmmTrace,
    pub mm_trace: Vec<f64>,
}

impl LinkDesign {
    pub fn beamformers(&self) -> LinkBeamformers {
        LinkBeamformers::from_hybrid(&self.source, &self.relay, &self.destination)
    }
}

/// Full hybrid design of the link from (possibly noisy) channel knowledge.
pub fn design_link<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    params: &SolverParams,
    rng: &mut R,
) -> Result<LinkDesign> {
    cfg.validate()?;
    params.validate()?;
    let relay = design_relay(ch, cfg, params, rng)?;
    let (source, destination) = design_endpoints(ch, cfg, &params.mm, rng)?;
    Ok(LinkDesign {
        source,
        relay: relay.mm.hbf,
        destination,
        admm_trace: relay.admm.trace,
        mm_trace: relay.mm.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::metrics::{full_digital_baseline, spectral_efficiency, BaselineMode};
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    #[test]
    fn link_design_is_feasible() {
        let cfg = SystemConfig::symmetric(8, 4, 4, 2);
        let ch = ChannelSet::generate(&cfg, &ChannelParams::default(), 1).unwrap();
        let d = design_link(&ch, &cfg, &SolverParams::default(), &mut seeded(2)).unwrap();
        d.relay.check_unit_modulus().unwrap();
        assert_relative_eq!(frobenius_sq(&d.relay.f_t()), 2.0, max_relative = 1e-9);
        assert_relative_eq!(frobenius_sq(&d.source.product()), 2.0, max_relative = 1e-9);
        let se = spectral_efficiency(&ch, &d.beamformers(), &cfg).unwrap();
        let bound = full_digital_baseline(&ch, &cfg, BaselineMode::SiFree).unwrap();
        assert!(se > 0.0 && se <= bound * 1.05, "se {se} vs bound {bound}");
    }

    #[test]
    fn power_normalize_rejects_zero() {
        assert!(power_normalize(&ComplexMatrix::zeros(2, 2), 2).is_err());
        let m = ComplexMatrix::identity(3, 3);
        assert_relative_eq!(frobenius_sq(&power_normalize(&m, 2).unwrap()), 2.0, max_relative = 1e-14);
    }
}
