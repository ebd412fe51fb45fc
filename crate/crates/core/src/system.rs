//! Link dimensions and powers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Antenna, RF-chain and stream counts for source, relay and destination,
/// plus transmit powers and receiver noise power (all linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Source transmit antennas.
    pub source_antennas: usize,
    /// Destination receive antennas.
    pub dest_antennas: usize,
    /// Relay transmit antennas.
    pub relay_tx_antennas: usize,
    /// Relay receive antennas.
    pub relay_rx_antennas: usize,
    pub source_rf: usize,
    pub relay_tx_rf: usize,
    pub relay_rx_rf: usize,
    pub dest_rf: usize,
    /// Source-to-destination streams.
    pub streams: usize,
    /// Streams carried through the relay.
    pub relay_streams: usize,
    pub source_power: f64,
    pub relay_power: f64,
    pub noise_power: f64,
}

impl SystemConfig {
    /// Every node has the same array size; transmit sides share `tx_rf`
    /// chains and receive sides share `rx_rf`. Unit powers and 0 dB SNR.
    pub fn symmetric(antennas: usize, tx_rf: usize, rx_rf: usize, streams: usize) -> Self {
        Self {
            source_antennas: antennas,
            dest_antennas: antennas,
            relay_tx_antennas: antennas,
            relay_rx_antennas: antennas,
            source_rf: tx_rf,
            relay_tx_rf: tx_rf,
            relay_rx_rf: rx_rf,
            dest_rf: rx_rf,
            streams,
            relay_streams: streams,
            source_power: 1.0,
            relay_power: 1.0,
            noise_power: 1.0,
        }
    }

    /// Sets the noise power so that `P / sigma^2 = snr_db` with unit powers.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.source_power = 1.0;
        self.relay_power = 1.0;
        self.noise_power = 10f64.powf(-snr_db / 10.0);
        self
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.source_power / self.noise_power).log10()
    }

    pub fn validate(&self) -> Result<()> {
        let chain = |name: &str, streams: usize, rf: usize, antennas: usize| -> Result<()> {
            if streams == 0 || streams > rf || rf > antennas {
                return Err(Error::InvalidParameter(format!(
                    "{name}: need 1 <= streams ({streams}) <= rf chains ({rf}) <= antennas ({antennas})"
                )));
            }
            Ok(())
        };
        chain("source", self.streams, self.source_rf, self.source_antennas)?;
        chain("relay tx", self.relay_streams, self.relay_tx_rf, self.relay_tx_antennas)?;
        chain("relay rx", self.relay_streams, self.relay_rx_rf, self.relay_rx_antennas)?;
        chain("destination", self.streams, self.dest_rf, self.dest_antennas)?;
        for (name, v) in [("source_power", self.source_power), ("relay_power", self.relay_power)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise_power must be > 0, got {}", self.noise_power)));
        }
        Ok(())
    }
}
