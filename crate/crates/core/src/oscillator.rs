//! Distributed GRF-feedback phase oscillators, one per leg.
//!
//! Each leg integrates
//!
//! ```text
//! φ̇ᵢ = ω̃ − σ · Gᵢ · (cos φᵢ + ξ)
//! ```
//!
//! with forward Euler and wraps to `[0, 2π)`. Parameters come from a two-row
//! schedule keyed on the commanded forward speed: a stationary row that holds
//! every leg at the footfall phase, and a moving row that seeds a trot by
//! putting the lower-loaded diagonal pair half a cycle ahead.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{ring, wrap_2pi, Leg};

/// Commanded speed at or below which the stationary parameter row applies (m/s).
pub const STATIONARY_SPEED: f64 = 0.5;
/// Band of commanded stepping frequencies (Hz) in moving mode, open below and
/// closed above so the 4.0 Hz tracking command is admissible.
pub const F_CMD_BAND: (f64, f64) = (1.0, 4.0);

/// Whether `f_cmd` (Hz) lies in (1.0, 4.0].
pub fn in_band(f_cmd: f64) -> bool {
    f_cmd > F_CMD_BAND.0 && f_cmd <= F_CMD_BAND.1
}
/// Largest accepted integration step (s).
pub const MAX_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Intrinsic angular frequency ω̃ (rad/s).
    pub omega_tilde: f64,
    /// Feedback gain σ.
    pub sigma: f64,
    /// Offset bias ξ.
    pub xi: f64,
    /// Phase applied at a mode transition (rad).
    pub phi0: f64,
}

impl OscillatorParams {
    pub const STATIONARY: OscillatorParams = OscillatorParams {
        omega_tilde: 1.0,
        sigma: 4.0,
        xi: 1.0,
        phi0: 1.5 * PI,
    };

    pub fn moving(omega: f64, phi0: f64) -> Self {
        OscillatorParams {
            omega_tilde: omega,
            sigma: TAU,
            xi: 0.0,
            phi0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma >= 0.0
            && self.omega_tilde >= 0.0
            && (0.0..TAU).contains(&self.phi0)
            && self.xi.is_finite()
            && self.omega_tilde.is_finite()
            && self.sigma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid oscillator params {self:?}")))
        }
    }
}

/// Instantaneous phase rate for one leg.
#[inline]
pub fn phase_rate(params: &OscillatorParams, phi: f64, g_norm: f64) -> f64 {
    params.omega_tilde - params.sigma * g_norm * (phi.cos() + params.xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitMode {
    Stationary,
    Moving,
}

impl GaitMode {
    /// The gate uses the commanded, not measured, forward speed.
    pub fn from_command(v_x_cmd: f64) -> Self {
        if v_x_cmd.abs() <= STATIONARY_SPEED {
            GaitMode::Stationary
        } else {
            GaitMode::Moving
        }
    }
}

/// The symmetric leg pair carrying less load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowLoadPair {
    /// Legs 1 and 4 (RF, LH).
    RfLh,
    /// Legs 2 and 3 (LF, RH).
    LfRh,
}

impl LowLoadPair {
    pub fn legs(self) -> [Leg; 2] {
        match self {
            LowLoadPair::RfLh => [Leg::RF, Leg::LH],
            LowLoadPair::LfRh => [Leg::LF, Leg::RH],
        }
    }

    pub fn contains(self, leg: Leg) -> bool {
        self.legs().contains(&leg)
    }

    /// 1-based leg numbers.
    pub fn numbers(self) -> [usize; 2] {
        let [a, b] = self.legs();
        [a.number(), b.number()]
    }
}

fn check_forces(forces: &[f64; 4]) -> Result<()> {
    for (i, f) in forces.iter().enumerate() {
        if !f.is_finite() || *f < 0.0 {
            return Err(Error::RejectedInput(format!(
                "force on leg {} is {f}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// `Gᵢ = min(Nᵢ / (g·mass), 1)`.
pub fn normalize_grf(forces: &[f64; 4], mass: f64, g: f64) -> Result<[f64; 4]> {
    if !(mass > 0.0 && g > 0.0 && mass.is_finite() && g.is_finite()) {
        return Err(Error::RejectedInput(format!("mass {mass} / g {g}")));
    }
    check_forces(forces)?;
    let weight = mass * g;
    Ok(forces.map(|n| (n / weight).min(1.0)))
}

/// Ties fall to the "otherwise" branch, {2, 3}.
pub fn select_low_load_pair(forces: &[f64; 4]) -> Result<LowLoadPair> {
    if forces.iter().any(|f| !f.is_finite()) {
        return Err(Error::RejectedInput(format!("non-finite forces {forces:?}")));
    }
    if forces[0] + forces[3] < forces[1] + forces[2] {
        Ok(LowLoadPair::RfLh)
    } else {
        Ok(LowLoadPair::LfRh)
    }
}

pub fn select_params(v_x_cmd: f64, f_cmd: f64, forces: &[f64; 4]) -> Result<[OscillatorParams; 4]> {
    match GaitMode::from_command(v_x_cmd) {
        GaitMode::Stationary => Ok([OscillatorParams::STATIONARY; 4]),
        GaitMode::Moving => {
            if !in_band(f_cmd) {
                return Err(Error::CommandRange { f_cmd });
            }
            let pair = select_low_load_pair(forces)?;
            let omega = TAU * f_cmd;
            Ok(Leg::ALL.map(|leg| {
                let phi0 = if pair.contains(leg) { 0.5 * PI } else { 1.5 * PI };
                OscillatorParams::moving(omega, phi0)
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorBank {
    pub phases: [f64; 4],
    pub params: [OscillatorParams; 4],
    pub t: f64,
}

impl OscillatorBank {
    /// Bank at `t = 0` with every phase seeded from `params[i].phi0`.
    pub fn new(params: [OscillatorParams; 4]) -> Result<Self> {
        for p in &params {
            p.validate()?;
        }
        Ok(OscillatorBank {
            phases: params.map(|p| p.phi0),
            params,
            t: 0.0,
        })
    }

    /// Standing bank: stationary row on every leg.
    pub fn standing() -> Self {
        OscillatorBank {
            phases: [OscillatorParams::STATIONARY.phi0; 4],
            params: [OscillatorParams::STATIONARY; 4],
            t: 0.0,
        }
    }

    /// Mode transition: installs new parameters and re-seeds every phase.
    pub fn transition(&mut self, params: [OscillatorParams; 4]) -> Result<()> {
        for p in &params {
            p.validate()?;
        }
        self.params = params;
        self.phases = params.map(|p| p.phi0);
        Ok(())
    }

    /// Overrides ω̃ on every leg (the modulator's output).
    pub fn set_omega_tilde(&mut self, omega_tilde: f64) {
        for p in &mut self.params {
            p.omega_tilde = omega_tilde;
        }
    }

    pub fn phase(&self, leg: Leg) -> f64 {
        self.phases[leg.index()]
    }

    /// One forward-Euler step in place.
    pub fn advance(&mut self, g_norm: &[f64; 4], dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(Error::Precondition(format!("dt {dt} outside (0, {MAX_DT}]")));
        }
        if g_norm.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::RejectedInput(format!("G_norm {g_norm:?} outside [0, 1]")));
        }
        for i in 0..4 {
            let phi = self.phases[i] + dt * phase_rate(&self.params[i], self.phases[i], g_norm[i]);
            if !phi.is_finite() {
                return Err(Error::IntegrationDiverged { t: self.t, leg: i + 1 });
            }
            self.phases[i] = wrap_2pi(phi);
        }
        self.t += dt;
        Ok(())
    }

    /// Value-returning form of [`advance`](Self::advance).
    pub fn step(&self, g_norm: &[f64; 4], dt: f64) -> Result<Self> {
        let mut next = *self;
        next.advance(g_norm, dt)?;
        Ok(next)
    }

    pub fn observation(&self) -> PhaseObservation {
        phase_observation(self)
    }
}

/// Per-leg `(cos φ, sin φ)` in fixed leg order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseObservation {
    pub pairs: [[f64; 2]; 4],
}

impl PhaseObservation {
    pub fn leg(&self, leg: Leg) -> [f64; 2] {
        self.pairs[leg.index()]
    }

    /// Flat 8-vector `[cos φ₁, sin φ₁, …, cos φ₄, sin φ₄]`.
    pub fn to_vec8(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (i, p) in self.pairs.iter().enumerate() {
            out[2 * i] = p[0];
            out[2 * i + 1] = p[1];
        }
        out
    }
}

pub fn phase_observation(bank: &OscillatorBank) -> PhaseObservation {
    PhaseObservation {
        pairs: bank.phases.map(ring),
    }
}

/// Per-leg load record at one plant tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfSample {
    pub forces: [f64; 4],
    pub normalized: [f64; 4],
    pub t: f64,
}

impl GrfSample {
    pub fn new(forces: [f64; 4], mass: f64, g: f64, t: f64) -> Result<Self> {
        let normalized = normalize_grf(&forces, mass, g)?;
        Ok(GrfSample { forces, normalized, t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const M: f64 = 12.0;
    const G: f64 = 9.81;

    #[test]
    fn normalize_examples() {
        let mg = M * G;
        let out = normalize_grf(&[mg, 2.0 * mg, 0.5 * mg, 0.0], M, G).unwrap();
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], 1.0);
        assert_abs_diff_eq!(out[2], 0.5, epsilon = 1e-15);
        assert_eq!(out[3], 0.0);
    }

    #[test]
    fn normalize_rejects_bad_forces() {
        assert!(matches!(
            normalize_grf(&[-1.0, 0.0, 0.0, 0.0], M, G),
            Err(Error::RejectedInput(_))
        ));
        assert!(normalize_grf(&[f64::NAN, 0.0, 0.0, 0.0], M, G).is_err());
        assert!(normalize_grf(&[1.0; 4], 0.0, G).is_err());
    }

    #[test]
    fn low_load_pair_examples() {
        assert_eq!(select_low_load_pair(&[100.0, 120.0, 110.0, 90.0]).unwrap(), LowLoadPair::RfLh);
        assert_eq!(select_low_load_pair(&[120.0, 100.0, 90.0, 110.0]).unwrap(), LowLoadPair::LfRh);
        assert_eq!(select_low_load_pair(&[100.0; 4]).unwrap(), LowLoadPair::LfRh);
        assert_eq!(LowLoadPair::RfLh.numbers(), [1, 4]);
        assert!(select_low_load_pair(&[f64::INFINITY, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn params_stationary_row() {
        for f in [0.0, 2.0, 9.0] {
            let p = select_params(0.0, f, &[1.0; 4]).unwrap();
            assert!(p.iter().all(|p| *p == OscillatorParams::STATIONARY));
        }
        let s = OscillatorParams::STATIONARY;
        assert_eq!((s.omega_tilde, s.sigma, s.xi, s.phi0), (1.0, 4.0, 1.0, 1.5 * PI));
    }

    #[test]
    fn params_moving_rows() {
        let p = select_params(0.8, 2.0, &[100.0, 120.0, 110.0, 90.0]).unwrap();
        for leg in [0, 3] {
            assert_eq!(p[leg], OscillatorParams { omega_tilde: 4.0 * PI, sigma: TAU, xi: 0.0, phi0: 0.5 * PI });
        }
        for leg in [1, 2] {
            assert_eq!(p[leg], OscillatorParams { omega_tilde: 4.0 * PI, sigma: TAU, xi: 0.0, phi0: 1.5 * PI });
        }
        // negative commanded speed also moves
        assert_eq!(select_params(-0.8, 2.0, &[100.0, 120.0, 110.0, 90.0]).unwrap(), p);
    }

    #[test]
    fn params_command_range() {
        assert!(matches!(select_params(0.8, 5.0, &[1.0; 4]), Err(Error::CommandRange { .. })));
        assert!(matches!(select_params(0.8, 1.0, &[1.0; 4]), Err(Error::CommandRange { .. })));
        assert!(select_params(0.8, 4.0, &[1.0; 4]).is_ok());
        assert!(matches!(select_params(0.8, 4.01, &[1.0; 4]), Err(Error::CommandRange { .. })));
    }

    #[test]
    fn step_pure_ramp() {
        let mut bank = OscillatorBank::new([OscillatorParams::moving(TAU, 0.0); 4]).unwrap();
        bank.advance(&[0.0; 4], 0.001).unwrap();
        assert_abs_diff_eq!(bank.phases[0], 0.0062831853, epsilon = 1e-10);
        assert_abs_diff_eq!(bank.t, 0.001);
    }

    #[test]
    fn stationary_null_point() {
        // cos π + ξ = 0 ⇒ φ̇ = ω̃ regardless of load
        for g in [0.0, 0.3, 1.0] {
            assert_eq!(phase_rate(&OscillatorParams::STATIONARY, PI, g), 1.0);
        }
    }

    #[test]
    fn stationary_rate_derived() {
        // 1 − 4·0.25·(cos 0 + 1) = −1
        assert_eq!(phase_rate(&OscillatorParams::STATIONARY, 0.0, 0.25), -1.0);
    }

    #[test]
    fn standing_posture_is_equilibrium() {
        let mut bank = OscillatorBank::standing();
        for _ in 0..1000 {
            bank.advance(&[0.25; 4], 1e-3).unwrap();
        }
        for p in bank.phases {
            assert_abs_diff_eq!(p, 1.5 * PI, epsilon = 1e-9);
        }
    }

    #[test]
    fn step_rejects_bad_inputs() {
        let bank = OscillatorBank::standing();
        assert!(bank.step(&[0.25; 4], 0.0).is_err());
        assert!(bank.step(&[0.25; 4], 0.02).is_err());
        assert!(bank.step(&[1.5, 0.0, 0.0, 0.0], 1e-3).is_err());
    }

    #[test]
    fn divergence_detected() {
        let mut p = OscillatorParams::moving(TAU, 0.0);
        p.omega_tilde = f64::MAX;
        let mut bank = OscillatorBank { phases: [0.0; 4], params: [p; 4], t: 0.0 };
        bank.params[0].omega_tilde = f64::INFINITY;
        assert!(matches!(
            bank.advance(&[0.0; 4], 1e-3),
            Err(Error::IntegrationDiverged { leg: 1, .. })
        ));
    }

    #[test]
    fn observation_examples() {
        let bank = OscillatorBank {
            phases: [0.0, 1.5 * PI, 0.25 * PI, PI],
            params: [OscillatorParams::STATIONARY; 4],
            t: 0.0,
        };
        let obs = bank.observation();
        assert_eq!(obs.pairs[0], [1.0, 0.0]);
        assert_abs_diff_eq!(obs.pairs[1][0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(obs.pairs[1][1], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(obs.pairs[2][0], 2f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(obs.pairs[2][1], 2f64.sqrt() / 2.0, epsilon = 1e-15);
        for p in obs.pairs {
            assert_abs_diff_eq!(p[0].hypot(p[1]), 1.0, epsilon = 1e-9);
        }
        assert_eq!(obs.to_vec8()[0..2], [1.0, 0.0]);
    }

    #[test]
    fn transition_reseeds() {
        let mut bank = OscillatorBank::standing();
        let p = select_params(0.8, 2.0, &[100.0; 4]).unwrap();
        bank.transition(p).unwrap();
        assert_eq!(bank.phases, [1.5 * PI, 0.5 * PI, 0.5 * PI, 1.5 * PI]);
    }
}
