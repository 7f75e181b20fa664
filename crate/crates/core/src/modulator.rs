//! Phase modulator: sets ω̃ = ω_m + δω at 20 Hz so the tracked leg's
//! footfall phase follows the music phase.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillator::{in_band, F_CMD_BAND};
use crate::phase::{ring, ring_error, Leg};
use crate::registry::Registry;

pub const DEFAULT_CONTROLLER: &str = "cycle-averaged";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModulatorConfig {
    /// Proportional gain k (1/s).
    pub gain: f64,
    /// Clamp on |δω| (rad/s); `None` selects min(0.5·ω_m, π).
    pub delta_max: Option<f64>,
    /// Tracked leg, 1-based (1 = RF).
    pub target_leg: usize,
    /// Rhythm reward scale σ_r.
    pub sigma_r: f64,
    pub rate_hz: f64,
    /// Registered [`PhaseController`] name.
    pub controller: String,
}

impl Default for ModulatorConfig {
    fn default() -> Self {
        ModulatorConfig {
            gain: 2.0,
            delta_max: None,
            target_leg: 1,
            sigma_r: 1.0,
            rate_hz: 20.0,
            controller: DEFAULT_CONTROLLER.into(),
        }
    }
}

impl ModulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::Config(format!("modulator gain {} must be > 0", self.gain)));
        }
        if let Some(d) = self.delta_max {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("delta_max {d} must be > 0")));
            }
        }
        if Leg::from_number(self.target_leg).is_none() {
            return Err(Error::Config(format!("target leg {} not in 1..=4", self.target_leg)));
        }
        if !(self.sigma_r.is_finite() && self.sigma_r >= 0.0) {
            return Err(Error::Config(format!("sigma_r {} must be >= 0", self.sigma_r)));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::Config(format!("modulator rate {} Hz", self.rate_hz)));
        }
        Ok(())
    }

    pub fn leg(&self) -> Leg {
        Leg::from_number(self.target_leg).unwrap_or(Leg::RF)
    }

    /// Clamp for a given ω_m; must stay below ω_m so ω̃ remains positive.
    pub fn delta_max_for(&self, omega_m: f64) -> Result<f64> {
        let d = self.delta_max.unwrap_or_else(|| (0.5 * omega_m).min(PI));
        if d >= omega_m {
            return Err(Error::Config(format!(
                "delta_max {d} rad/s must be below omega_m {omega_m} rad/s"
            )));
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulatorCommand {
    pub t: f64,
    pub omega_m: f64,
    pub delta_omega: f64,
    pub omega_tilde: f64,
    /// Wrapped φ_j − θ_m in (−π, π].
    pub phase_error: f64,
}

/// Folds a music angular frequency by octaves into the gait band (1, 4] Hz.
pub fn fold_omega(omega_m: f64) -> Result<f64> {
    if !(omega_m.is_finite() && omega_m > 0.0) {
        return Err(Error::TempoRange { omega_m });
    }
    let mut f = omega_m / TAU;
    while f <= F_CMD_BAND.0 {
        f *= 2.0;
    }
    while f > F_CMD_BAND.1 {
        f /= 2.0;
    }
    if f <= F_CMD_BAND.0 {
        return Err(Error::TempoRange { omega_m });
    }
    Ok(TAU * f)
}

fn check_band(omega_m: f64) -> Result<()> {
    if !in_band(omega_m / TAU) {
        return Err(Error::TempoRange { omega_m });
    }
    Ok(())
}

/// One modulator decision from the clamped proportional law δω = −k·e.
pub fn modulate(
    phi_obs_j: [f64; 2],
    theta_obs: [f64; 2],
    omega_m: f64,
    config: &ModulatorConfig,
    t: f64,
) -> Result<ModulatorCommand> {
    check_band(omega_m)?;
    let delta_max = config.delta_max_for(omega_m)?;
    let e = ring_error(phi_obs_j, theta_obs);
    let delta_omega = (-config.gain * e).clamp(-delta_max, delta_max);
    Ok(ModulatorCommand {
        t,
        omega_m,
        delta_omega,
        omega_tilde: omega_m + delta_omega,
        phase_error: e,
    })
}

/// Inputs available to a controller at one modulator tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub t: f64,
    pub phase_error: f64,
    pub omega_m: f64,
}

/// Strategy producing the unclamped δω at each modulator tick.
pub trait PhaseController: Send {
    fn name(&self) -> &'static str;
    fn delta_omega(&mut self, input: &ControlInput) -> f64;
}

/// Open loop: ω̃ = ω_m.
pub struct Fixed;

impl PhaseController for Fixed {
    fn name(&self) -> &'static str {
        "fixed"
    }
    fn delta_omega(&mut self, _: &ControlInput) -> f64 {
        0.0
    }
}

/// δω = −k·e on the instantaneous error.
pub struct Proportional {
    pub gain: f64,
}

impl PhaseController for Proportional {
    fn name(&self) -> &'static str {
        "proportional"
    }
    fn delta_omega(&mut self, input: &ControlInput) -> f64 {
        -self.gain * input.phase_error
    }
}

/// δω = −k·ē where ē is the circular mean of the error over exactly one beat
/// period of ticks (the oldest tick fractionally weighted). The load-sharing
/// feedback makes the instantaneous error ripple once per stride; averaging
/// over a stride removes it from ω̃.
pub struct CycleAveraged {
    pub gain: f64,
    rate_hz: f64,
    history: VecDeque<f64>,
}

impl CycleAveraged {
    pub fn new(gain: f64, rate_hz: f64) -> Self {
        CycleAveraged {
            gain,
            rate_hz,
            history: VecDeque::new(),
        }
    }
}

impl PhaseController for CycleAveraged {
    fn name(&self) -> &'static str {
        "cycle-averaged"
    }
    fn delta_omega(&mut self, input: &ControlInput) -> f64 {
        let span = (self.rate_hz * TAU / input.omega_m).max(1.0);
        let whole = span.floor() as usize;
        let frac = span - whole as f64;
        self.history.push_back(input.phase_error);
        while self.history.len() > whole + 1 {
            self.history.pop_front();
        }
        let full = self.history.len() == whole + 1;
        let (s, c) = self.history.iter().enumerate().fold((0.0, 0.0), |(s, c), (i, e)| {
            let w = if full && i == 0 { frac } else { 1.0 };
            let [ce, se] = ring(*e);
            (s + w * se, c + w * ce)
        });
        -self.gain * s.atan2(c)
    }
}

pub fn controllers() -> Registry<dyn PhaseController, ModulatorConfig> {
    let mut reg: Registry<dyn PhaseController, ModulatorConfig> = Registry::new("phase controller");
    reg.register("fixed", |_| Ok(Box::new(Fixed)))
        .register("proportional", |c| Ok(Box::new(Proportional { gain: c.gain })))
        .register("cycle-averaged", |c| Ok(Box::new(CycleAveraged::new(c.gain, c.rate_hz))));
    reg
}

/// Stateful modulator: a controller plus the clamp, with the last command held.
pub struct Modulator {
    config: ModulatorConfig,
    controller: Box<dyn PhaseController>,
    omega_m: f64,
    delta_max: f64,
    last: Option<ModulatorCommand>,
}

impl Modulator {
    /// `omega_m` must already be folded into the gait band.
    pub fn new(config: ModulatorConfig, omega_m: f64) -> Result<Self> {
        config.validate()?;
        check_band(omega_m)?;
        let delta_max = config.delta_max_for(omega_m)?;
        let controller = controllers().create(&config.controller, &config)?;
        Ok(Modulator {
            config,
            controller,
            omega_m,
            delta_max,
            last: None,
        })
    }

    pub fn config(&self) -> &ModulatorConfig {
        &self.config
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    pub fn last(&self) -> Option<&ModulatorCommand> {
        self.last.as_ref()
    }

    /// Zero-order-held ω̃; ω_m before the first tick.
    pub fn omega_tilde(&self) -> f64 {
        self.last.map_or(self.omega_m, |c| c.omega_tilde)
    }

    pub fn tick(&mut self, phi_obs_j: [f64; 2], theta_obs: [f64; 2], t: f64) -> ModulatorCommand {
        let e = ring_error(phi_obs_j, theta_obs);
        let raw = self.controller.delta_omega(&ControlInput {
            t,
            phase_error: e,
            omega_m: self.omega_m,
        });
        let delta_omega = raw.clamp(-self.delta_max, self.delta_max);
        let cmd = ModulatorCommand {
            t,
            omega_m: self.omega_m,
            delta_omega,
            omega_tilde: self.omega_m + delta_omega,
            phase_error: e,
        };
        self.last = Some(cmd);
        cmd
    }
}
