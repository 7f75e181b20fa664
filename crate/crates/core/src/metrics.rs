//! Evaluation quantities: beat alignment, σ(ω̃), frequency deviation, RPD.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::wrap_pi;
use crate::plant::SteppingStats;

/// Default warm-up discarded before scoring beat alignment (s).
pub const DEFAULT_WARMUP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatAlignment {
    /// Kinematic beat times scored (s).
    pub kinematic: Vec<f64>,
    /// Signed offset to the nearest music beat (s).
    pub delta_t: Vec<f64>,
    pub delta_t_max: f64,
}

/// Δt for every kinematic beat at or after `warmup_s`: its signed distance to
/// the nearest music beat. A beat equidistant from two music beats is
/// assigned to the later one, giving the negative offset.
pub fn beat_alignment(kin_beats: &[f64], music_beats: &[f64], warmup_s: f64) -> Result<BeatAlignment> {
    if music_beats.is_empty() {
        return Err(Error::InsufficientData("no music beats".into()));
    }
    let kinematic: Vec<f64> = kin_beats.iter().copied().filter(|&t| t >= warmup_s).collect();
    if kinematic.is_empty() {
        return Err(Error::InsufficientData(format!("no kinematic beats after {warmup_s} s warm-up")));
    }
    let delta_t: Vec<f64> = kinematic
        .iter()
        .map(|&k| {
            let i = music_beats.partition_point(|&m| m < k);
            let later = music_beats.get(i).map(|&m| k - m);
            let earlier = i.checked_sub(1).map(|j| k - music_beats[j]);
            match (earlier, later) {
                (Some(e), Some(l)) if e.abs() < l.abs() => e,
                (_, Some(l)) => l,
                (Some(e), None) => e,
                (None, None) => unreachable!("music beats are non-empty"),
            }
        })
        .collect();
    let delta_t_max = delta_t.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
    Ok(BeatAlignment { kinematic, delta_t, delta_t_max })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Population standard deviation σ(ω̃) of the command log.
pub fn frequency_variance(omega_series: &[f64]) -> Result<f64> {
    if omega_series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} omega samples, need at least 2",
            omega_series.len()
        )));
    }
    Ok(variance(omega_series).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDeviation {
    /// mean |f_i − f_cmd| (Hz).
    pub mean: f64,
    /// var(f_i) (Hz²).
    pub variance: f64,
}

pub fn frequency_deviation(measured: &SteppingStats, f_cmd: f64) -> FrequencyDeviation {
    let f = &measured.frequencies;
    FrequencyDeviation {
        mean: f.iter().map(|x| (x - f_cmd).abs()).sum::<f64>() / f.len() as f64,
        variance: variance(f),
    }
}

/// Entry (i, k) = wrap(φ_i − φ_k) in (−π, π].
pub fn relative_phase_differences(phases: &[f64; 4]) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|k| if i == k { 0.0 } else { wrap_pi(phases[i] - phases[k]) }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub delta_t_series: Vec<f64>,
    pub delta_t_max: f64,
    /// σ(ω̃) over the post-warm-up command log (rad/s).
    pub omega_std: f64,
    pub freq_dev_mean: f64,
    pub freq_dev_var: f64,
    /// RPD at the end of the run (rad).
    pub rpd_matrix: [[f64; 4]; 4],
}
