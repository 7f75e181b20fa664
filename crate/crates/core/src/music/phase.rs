//! Music phase θ_m: linear within each beat interval, 3π/2 on every beat.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::beats::BeatGrid;
use crate::error::{Error, Result};
use crate::phase::{wrap_2pi, FOOTFALL_PHASE};

/// Beats older than this many periods mark an extrapolated phase as stale.
pub const STALE_PERIODS: f64 = 4.0;

fn phase_from(anchor: f64, interval: f64, t: f64) -> f64 {
    let frac = (t - anchor) / interval;
    if frac == 0.0 {
        return FOOTFALL_PHASE;
    }
    wrap_2pi(FOOTFALL_PHASE + TAU * frac)
}

/// θ_m at time `t`, interpolating linearly inside the enclosing beat interval.
/// Outside the grid the nearest interval (or the tempo period for a single
/// beat) is extrapolated.
pub fn interpolate_phase(grid: &BeatGrid, t: f64) -> Result<f64> {
    let b = &grid.beat_times;
    if b.is_empty() {
        return Err(Error::Precondition("empty beat grid".into()));
    }
    if b.len() == 1 {
        return Ok(phase_from(b[0], grid.period(), t));
    }
    let i = b.partition_point(|&x| x <= t);
    let k = i.clamp(1, b.len() - 1) - 1;
    let (start, end) = (b[k], b[k + 1]);
    // past the last beat, extrapolate from it with the final interval
    let anchor = if i == b.len() { end } else { start };
    Ok(phase_from(anchor, end - start, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub theta: f64,
    /// The newest beat used is more than [`STALE_PERIODS`] periods old.
    pub stale: bool,
}

/// θ_m at wall time `now`, extrapolated from the latest beat at or before
/// `now` with the current tempo, so capture-to-query latency does not bias it.
pub fn phase_at(grid: &BeatGrid, tempo_bpm: f64, now: f64) -> Result<PhaseEstimate> {
    let b = &grid.beat_times;
    if b.is_empty() {
        return Err(Error::Precondition("empty beat grid".into()));
    }
    if !(tempo_bpm.is_finite() && tempo_bpm > 0.0) {
        return Err(Error::Precondition(format!("tempo {tempo_bpm} BPM")));
    }
    let period = 60.0 / tempo_bpm;
    let i = b.partition_point(|&x| x <= now);
    let anchor = b[i.saturating_sub(1)];
    Ok(PhaseEstimate {
        theta: phase_from(anchor, period, now),
        stale: now - anchor > STALE_PERIODS * period,
    })
}
