//! Reward formulations, used as post-run scoring metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulator::ModulatorConfig;
use crate::phase::{wrap_pi, FOOTFALL_PHASE};
use crate::registry::Registry;

const UNIT_TOL: f64 = 1e-6;

fn check_unit(v: [f64; 2], what: &str) -> Result<()> {
    let norm = v[0].hypot(v[1]);
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::Validation(format!("{what} has norm {norm}, expected 1")));
    }
    Ok(())
}

/// ‖φ_obs − θ_obs‖² on the unit ring, in [0, 4].
pub fn ring_distance_sq(phi_obs: [f64; 2], theta_obs: [f64; 2]) -> Result<f64> {
    check_unit(phi_obs, "phi_obs")?;
    check_unit(theta_obs, "theta_obs")?;
    let dx = phi_obs[0] - theta_obs[0];
    let dy = phi_obs[1] - theta_obs[1];
    Ok(dx * dx + dy * dy)
}

/// Rhythm consistency reward exp(−σ_r·‖φ_obs − θ_obs‖²).
pub fn reward_rhythm(phi_obs: [f64; 2], theta_obs: [f64; 2], sigma_r: f64) -> Result<f64> {
    Ok((-sigma_r * ring_distance_sq(phi_obs, theta_obs)?).exp())
}

/// Beat-weighted footfall reward B(t)·exp(−(φ − 3π/2)²), wrapped difference.
pub fn reward_r1(smoothed_beat: f64, phi_osc: f64) -> f64 {
    let d = wrap_pi(phi_osc - FOOTFALL_PHASE);
    smoothed_beat * (-d * d).exp()
}

/// −1 when a music beat falls in the tick without a kinematic beat, else +1.
pub fn reward_r2(music_beat_in_tick: bool, kinematic_beat_in_tick: bool) -> f64 {
    if music_beat_in_tick && !kinematic_beat_in_tick {
        -1.0
    } else {
        1.0
    }
}

/// Swing-contact penalty −Σ G_i·sin φ_i.
pub fn reward_phase(g_norm: &[f64; 4], phases: &[f64; 4]) -> f64 {
    -g_norm.iter().zip(phases).map(|(g, p)| g * p.sin()).sum::<f64>()
}

/// Reported objective of a rhythm-sync run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RewardVariant {
    Rhythm,
    R1,
    R2,
}

impl RewardVariant {
    pub fn metric_name(self) -> &'static str {
        match self {
            RewardVariant::Rhythm => "rhythm",
            RewardVariant::R1 => "r1",
            RewardVariant::R2 => "r2",
        }
    }
}

/// Everything a reward can see at one modulator tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTick {
    pub t: f64,
    pub phi_j: f64,
    pub phi_obs_j: [f64; 2],
    pub theta_obs: [f64; 2],
    pub smoothed_beat: f64,
    pub music_beat: bool,
    pub kinematic_beat: bool,
    pub g_norm: [f64; 4],
    pub phases: [f64; 4],
}

pub trait RewardMetric: Send {
    fn name(&self) -> &'static str;
    fn score(&self, tick: &RewardTick) -> Result<f64>;
}

struct Rhythm {
    sigma_r: f64,
}

impl RewardMetric for Rhythm {
    fn name(&self) -> &'static str {
        "rhythm"
    }
    fn score(&self, tick: &RewardTick) -> Result<f64> {
        reward_rhythm(tick.phi_obs_j, tick.theta_obs, self.sigma_r)
    }
}

struct R1;

impl RewardMetric for R1 {
    fn name(&self) -> &'static str {
        "r1"
    }
    fn score(&self, tick: &RewardTick) -> Result<f64> {
        Ok(reward_r1(tick.smoothed_beat, tick.phi_j))
    }
}

struct R2;

impl RewardMetric for R2 {
    fn name(&self) -> &'static str {
        "r2"
    }
    fn score(&self, tick: &RewardTick) -> Result<f64> {
        Ok(reward_r2(tick.music_beat, tick.kinematic_beat))
    }
}

struct PhaseReward;

impl RewardMetric for PhaseReward {
    fn name(&self) -> &'static str {
        "phase"
    }
    fn score(&self, tick: &RewardTick) -> Result<f64> {
        Ok(reward_phase(&tick.g_norm, &tick.phases))
    }
}

pub fn reward_metrics() -> Registry<dyn RewardMetric, ModulatorConfig> {
    let mut reg: Registry<dyn RewardMetric, ModulatorConfig> = Registry::new("reward metric");
    reg.register("rhythm", |c| Ok(Box::new(Rhythm { sigma_r: c.sigma_r })))
        .register("r1", |_| Ok(Box::new(R1)))
        .register("r2", |_| Ok(Box::new(R2)))
        .register("phase", |_| Ok(Box::new(PhaseReward)));
    reg
}
