//! Surrogate stance plant.
//!
//! Stands in for a trained locomotion policy plus rigid-body physics: vertical
//! ground reaction forces are an analytic function of the oscillator phases.
//! A leg bears load only in its stance half-cycle `[π, 2π)`, weighted by a
//! half-sine that peaks at the footfall phase, and body weight is shared in
//! proportion to those weights. The sharing is what couples the otherwise
//! independent oscillators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillator::GrfSample;
use crate::phase::Leg;

/// Below this total stance weight the robot is in flight and every force is zero.
pub const FLIGHT_EPS: f64 = 1e-6;

/// Relative tolerance used to group equal force maxima into one plateau.
const PLATEAU_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    /// Body mass (kg).
    pub mass: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Exponent applied to the half-sine stance weight.
    pub stance_exponent: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            mass: 12.0,
            g: 9.81,
            stance_exponent: 1.0,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Config(format!("plant mass must be > 0, got {}", self.mass)));
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::Config(format!("plant g must be > 0, got {}", self.g)));
        }
        if !(self.stance_exponent > 0.0 && self.stance_exponent.is_finite()) {
            return Err(Error::Config(format!(
                "stance exponent must be > 0, got {}",
                self.stance_exponent
            )));
        }
        Ok(())
    }

    pub fn weight(&self) -> f64 {
        self.mass * self.g
    }

    pub fn stance_weight(&self, phi: f64) -> f64 {
        let w = stance_weight(phi);
        if self.stance_exponent == 1.0 {
            w
        } else {
            w.powf(self.stance_exponent)
        }
    }
}

/// 0 in swing `[0, π)`, `sin(φ − π)` in stance `[π, 2π)`.
pub fn stance_weight(phi: f64) -> f64 {
    if phi >= PI {
        (phi - PI).sin().max(0.0)
    } else {
        0.0
    }
}

/// Vertical forces from phases by proportional load sharing.
pub fn grf_from_phases(phases: &[f64; 4], config: &PlantConfig) -> [f64; 4] {
    let w = phases.map(|p| config.stance_weight(p));
    let total: f64 = w.iter().sum();
    if total <= FLIGHT_EPS {
        return [0.0; 4];
    }
    let weight = config.weight();
    w.map(|wi| weight * wi / total)
}

/// Uniformly sampled force record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrfTimeline {
    /// Sample spacing (s).
    pub period: f64,
    pub samples: Vec<GrfSample>,
}

impl GrfTimeline {
    pub fn new(period: f64) -> Self {
        GrfTimeline {
            period,
            samples: Vec::new(),
        }
    }

    pub fn with_capacity(period: f64, n: usize) -> Self {
        GrfTimeline {
            period,
            samples: Vec::with_capacity(n),
        }
    }

    /// Builds a timeline from raw forces at `t0 + k·period`.
    pub fn from_forces(t0: f64, period: f64, forces: &[[f64; 4]], config: &PlantConfig) -> Result<Self> {
        let mut tl = GrfTimeline::with_capacity(period, forces.len());
        for (k, f) in forces.iter().enumerate() {
            tl.push(GrfSample::new(*f, config.mass, config.g, t0 + k as f64 * period)?)?;
        }
        Ok(tl)
    }

    pub fn push(&mut self, sample: GrfSample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if sample.t <= last.t {
                return Err(Error::Validation(format!(
                    "timeline timestamps must increase ({} after {})",
                    sample.t, last.t
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn leg_forces(&self, leg: Leg) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |s| s.forces[leg.index()])
    }
}

/// Timestamps of kinematic beats, one per complete stance period.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BeatEventSeries(pub Vec<f64>);

impl BeatEventSeries {
    pub fn times(&self) -> &[f64] {
        &self.0
    }
}

/// Instants where a leg's force goes from zero to positive.
pub fn contact_onsets(timeline: &GrfTimeline, leg: Leg) -> Vec<f64> {
    let i = leg.index();
    timeline
        .samples
        .windows(2)
        .filter(|w| w[0].forces[i] <= 0.0 && w[1].forces[i] > 0.0)
        .map(|w| w[1].t)
        .collect()
}

/// Maximal runs `[start, end)` of positive force that lie strictly inside the timeline.
fn stance_runs(forces: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut k = 0;
    while k < forces.len() {
        if forces[k] > 0.0 {
            let start = k;
            while k < forces.len() && forces[k] > 0.0 {
                k += 1;
            }
            if start > 0 && k < forces.len() {
                runs.push((start, k));
            }
        } else {
            k += 1;
        }
    }
    runs
}

/// Index of the force peak within a stance run. Equal maxima that form a
/// contiguous plateau resolve to its midpoint (earlier of two central samples);
/// separate equal peaks resolve to the earliest.
fn peak_index(seg: &[f64]) -> usize {
    let max = seg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max - PLATEAU_RTOL * max.abs();
    let first = seg.iter().position(|&f| f >= floor).unwrap_or(0);
    let len = seg[first..].iter().take_while(|&&f| f >= floor).count();
    first + (len - 1) / 2
}

/// Kinematic beats: the force peak of each complete stance period of `leg`.
/// Stance periods cut by either end of the timeline are skipped.
pub fn kinematic_beats(timeline: &GrfTimeline, leg: Leg) -> BeatEventSeries {
    let forces: Vec<f64> = timeline.leg_forces(leg).collect();
    let beats = stance_runs(&forces)
        .into_iter()
        .map(|(s, e)| timeline.samples[s + peak_index(&forces[s..e])].t)
        .collect();
    BeatEventSeries(beats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteppingStats {
    /// Instantaneous stepping frequency per onset interval (Hz).
    pub frequencies: Vec<f64>,
    pub mean: f64,
    /// Population variance (Hz²).
    pub variance: f64,
}

pub fn stepping_frequency(onsets: &[f64]) -> Result<SteppingStats> {
    if onsets.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "stepping frequency needs at least 3 onsets, got {}",
            onsets.len()
        )));
    }
    let frequencies: Vec<f64> = onsets.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
    let n = frequencies.len() as f64;
    let mean = frequencies.iter().sum::<f64>() / n;
    let variance = frequencies.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
    Ok(SteppingStats {
        frequencies,
        mean,
        variance,
    })
}
