//! Deterministic link budget: received power, Shannon capacity and the
//! distance at which a node's minimum capacity is met exactly.
//!
//! All optimization runs on the mean channel (fading factor 1). The Rician
//! sampler at the bottom of the module is only used to report faded
//! capacities after a step has been decided.

use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Point3, Result};

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Aggregate antenna/frequency gain `Q_i`.
    pub gain: f64,
    /// Pathloss exponent `alpha_i`.
    pub pathloss_exp: f64,
    /// Channel bandwidth in Hz.
    pub bandwidth: f64,
    /// Noise power in W over the channel bandwidth.
    pub noise_power: f64,
    /// Background interference in W.
    pub interference: f64,
    /// Rician K-factor, only used by the evaluation-mode fading sampler.
    #[serde(default)]
    pub rician_factor: f64,
}

impl ChannelParams {
    pub fn new(
        gain: f64,
        pathloss_exp: f64,
        bandwidth: f64,
        noise_power: f64,
        interference: f64,
        rician_factor: f64,
    ) -> Result<Self> {
        let ch = ChannelParams {
            gain,
            pathloss_exp,
            bandwidth,
            noise_power,
            interference,
            rician_factor,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Builds a channel whose noise is `density_dbm_hz` integrated over `bandwidth`.
    pub fn from_noise_density(
        gain: f64,
        pathloss_exp: f64,
        bandwidth: f64,
        density_dbm_hz: f64,
        interference_dbm: f64,
    ) -> Result<Self> {
        Self::new(
            gain,
            pathloss_exp,
            bandwidth,
            dbm_to_watts(density_dbm_hz) * bandwidth,
            dbm_to_watts(interference_dbm),
            0.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.gain > 0.0
            && self.pathloss_exp >= 2.0
            && self.bandwidth > 0.0
            && self.noise_power > 0.0
            && self.interference >= 0.0
            && self.rician_factor >= 0.0
            && [
                self.gain,
                self.pathloss_exp,
                self.bandwidth,
                self.noise_power,
                self.interference,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "invalid channel parameters {self:?}"
            )))
        }
    }

    /// `N_i + I`.
    pub fn noise_plus_interference(&self) -> f64 {
        self.noise_power + self.interference
    }

    /// SNR per watt of transmit power at distance `d`: `Q d^-alpha / (N + I)`.
    pub fn link_gain(&self, d: f64) -> f64 {
        self.gain * d.powf(-self.pathloss_exp) / self.noise_plus_interference()
    }

    /// `2^(c / B) - 1`, the SNR needed for capacity `c`.
    pub fn snr_for_capacity(&self, c: f64) -> f64 {
        (c / self.bandwidth * std::f64::consts::LN_2).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: usize,
    pub position: Point3,
    /// Minimum capacity `C_i^min` in bit/s.
    pub qos_min: f64,
    pub channel: ChannelParams,
}

impl NodeState {
    pub fn validate(&self) -> Result<()> {
        if !(self.qos_min >= 0.0 && self.qos_min.is_finite()) {
            return Err(Error::Domain(format!(
                "node {}: minimum capacity must be finite and >= 0",
                self.id
            )));
        }
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!(
                "node {}: non-finite position",
                self.id
            )));
        }
        self.channel.validate()
    }

    pub fn distance(&self, q: &Point3) -> f64 {
        (q - self.position).norm()
    }
}

/// Mean received power `Q p d^-alpha`.
pub fn received_power(p_tx: f64, distance: f64, ch: &ChannelParams) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!(
            "received power undefined at distance {distance}"
        )));
    }
    Ok(ch.gain * p_tx * distance.powf(-ch.pathloss_exp))
}

/// Shannon capacity `B log2(1 + p_rx / (N + I))` in bit/s.
pub fn capacity(p_rx: f64, ch: &ChannelParams) -> f64 {
    ch.bandwidth * (p_rx / ch.noise_plus_interference()).ln_1p() / std::f64::consts::LN_2
}

/// Capacity of every node for FlyBS position `q` and power vector `p`.
pub fn node_capacities(q: &Point3, nodes: &[NodeState], p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != nodes.len() {
        return Err(Error::Contract(format!(
            "power vector has {} entries for {} nodes",
            p.len(),
            nodes.len()
        )));
    }
    nodes
        .iter()
        .zip(p)
        .map(|(n, &pi)| {
            let rx = received_power(pi, n.distance(q), &n.channel)
                .map_err(|_| Error::Domain(format!("FlyBS coincides with node {}", n.id)))?;
            Ok(capacity(rx, &n.channel))
        })
        .collect()
}

/// Exact sum capacity `C_tot`.
pub fn sum_capacity(q: &Point3, nodes: &[NodeState], p: &[f64]) -> Result<f64> {
    Ok(node_capacities(q, nodes, p)?.iter().sum())
}

/// Radius of the ball around the node inside which power `p_i` meets its
/// minimum capacity. Infinite when the node has no requirement, zero when it
/// has one but no power.
pub fn qos_radius(node: &NodeState, p_i: f64) -> f64 {
    if node.qos_min <= 0.0 {
        return f64::INFINITY;
    }
    if p_i <= 0.0 {
        return 0.0;
    }
    let ch = &node.channel;
    let base = ch.gain * p_i / (ch.snr_for_capacity(node.qos_min) * ch.noise_plus_interference());
    base.powf(1.0 / ch.pathloss_exp)
}

/// Samples a unit-mean Rician power gain for reporting faded capacities.
pub fn sample_fading_gain<R: Rng + ?Sized>(k_factor: f64, rng: &mut R) -> f64 {
    let los_w = (k_factor / (k_factor + 1.0)).sqrt();
    let nlos_w = (1.0 / (k_factor + 1.0)).sqrt();
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    let h_re = los_w * phase.cos() + nlos_w * re * std::f64::consts::FRAC_1_SQRT_2;
    let h_im = los_w * phase.sin() + nlos_w * im * std::f64::consts::FRAC_1_SQRT_2;
    h_re * h_re + h_im * h_im
}
