//! Comb-search beat tracker and the smoothed beat curve B(t).

use serde::{Deserialize, Serialize};

use super::onset::OnsetEnvelope;
use super::tempo::parabolic_offset;
use crate::error::{Error, Result};

/// Gaussian smoothing kernel width (frames).
pub const KERNEL_SIGMA: f64 = 3.0;
/// Kernel support (frames), centred on the beat frame.
pub const KERNEL_SUPPORT: usize = 15;

/// Minimum envelope peak, relative to the envelope maximum, accepted as a beat onset.
const PEAK_FRACTION: f64 = 0.2;
const REFINE_PASSES: usize = 2;
const COMB_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatGrid {
    pub beat_times: Vec<f64>,
    pub tempo_bpm: f64,
    /// Fraction of grid positions backed by an envelope peak.
    pub confidence: f64,
}

impl BeatGrid {
    pub fn period(&self) -> f64 {
        60.0 / self.tempo_bpm
    }

    /// Angular frequency of the beat, ω_m = 2π·BPM/60 (rad/s).
    pub fn omega(&self) -> f64 {
        std::f64::consts::TAU * self.tempo_bpm / 60.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tempo_bpm.is_finite() && self.tempo_bpm > 0.0) {
            return Err(Error::Validation(format!("tempo {} BPM", self.tempo_bpm)));
        }
        let p = self.period();
        for w in self.beat_times.windows(2) {
            let d = w[1] - w[0];
            if !(d > 0.0) {
                return Err(Error::Validation("beat times not strictly increasing".into()));
            }
            if (d - p).abs() > 0.2 * p {
                return Err(Error::Validation(format!("beat interval {d} s deviates >20% from {p} s")));
            }
        }
        Ok(())
    }
}

fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Some((my - slope * mx, slope))
}

/// Beat grid of period 60/tempo over the whole envelope.
///
/// The comb offset maximizing the mean envelope at the teeth is found on a
/// 0.1-frame lattice. Offset and period are then refined by a straight-line
/// fit through the sub-frame envelope peaks found within a quarter period of
/// each tooth. Teeth without a peak still emit a beat.
pub fn detect_beats(env: &OnsetEnvelope, tempo_bpm: f64) -> Result<BeatGrid> {
    if !(tempo_bpm.is_finite() && tempo_bpm > 0.0) {
        return Err(Error::Precondition(format!("tempo {tempo_bpm} BPM")));
    }
    let n = env.len();
    let mut period = 60.0 * env.frame_rate / tempo_bpm;
    if (n as f64) < 4.0 * period {
        return Err(Error::Precondition(format!(
            "envelope of {n} frames covers fewer than 4 beat periods of {period:.2} frames"
        )));
    }
    let last = (n - 1) as f64;

    let comb = |offset: f64, period: f64| {
        let (mut sum, mut count) = (0.0, 0usize);
        let mut pos = offset;
        while pos <= last {
            sum += env.sample(pos);
            count += 1;
            pos += period;
        }
        sum / count.max(1) as f64
    };
    let steps = (period / COMB_STEP).ceil() as usize;
    let mut offset = (0..steps)
        .map(|s| s as f64 * COMB_STEP)
        .max_by(|&a, &b| comb(a, period).total_cmp(&comb(b, period)))
        .unwrap_or(0.0);

    let max = env.values.iter().cloned().fold(0.0, f64::max);
    let threshold = PEAK_FRACTION * max;
    let mut backed = 0usize;
    for _ in 0..REFINE_PASSES {
        let mut points = Vec::new();
        let mut k = 0usize;
        loop {
            let g = offset + k as f64 * period;
            if g > last {
                break;
            }
            let lo = ((g - period / 4.0).ceil().max(1.0)) as usize;
            let hi = ((g + period / 4.0).floor().min(last - 1.0)).max(0.0) as usize;
            if lo <= hi {
                let i = (lo..=hi).max_by(|&a, &b| env.values[a].total_cmp(&env.values[b])).unwrap();
                let v = &env.values;
                if v[i] > 0.0 && v[i] >= threshold && v[i] >= v[i - 1] && v[i] >= v[i + 1] {
                    points.push((k as f64, i as f64 + parabolic_offset(v[i - 1], v[i], v[i + 1])));
                }
            }
            k += 1;
        }
        backed = points.len();
        match fit_line(&points) {
            Some((a, b)) if (b - period).abs() < 0.05 * period => {
                offset = a;
                period = b;
            }
            _ => break,
        }
    }

    // shift the origin tooth to the first position inside the envelope
    let first_k = ((-0.5 - offset) / period).ceil();
    let origin = offset + first_k * period;
    let beat_times: Vec<f64> = (0..)
        .map(|k| origin + k as f64 * period)
        .take_while(|&pos| pos < last + 0.5)
        .map(|pos| env.time_of(pos))
        .collect();
    let confidence = if beat_times.is_empty() {
        0.0
    } else {
        (backed as f64 / beat_times.len() as f64).min(1.0)
    };
    let grid = BeatGrid {
        beat_times,
        tempo_bpm: 60.0 * env.frame_rate / period,
        confidence,
    };
    grid.validate()?;
    Ok(grid)
}

/// Truncated Gaussian kernel with unit centre tap.
pub fn beat_kernel() -> [f64; KERNEL_SUPPORT] {
    let half = (KERNEL_SUPPORT / 2) as f64;
    std::array::from_fn(|j| {
        let d = j as f64 - half;
        (-d * d / (2.0 * KERNEL_SIGMA * KERNEL_SIGMA)).exp()
    })
}

/// B(t) over `len` frames starting at `t0`: unit impulses at the beat frames
/// convolved with [`beat_kernel`].
pub fn smooth_beats(grid: &BeatGrid, frame_rate: f64, t0: f64, len: usize) -> Vec<f64> {
    let kernel = beat_kernel();
    let half = (KERNEL_SUPPORT / 2) as isize;
    let mut out = vec![0.0; len];
    for &bt in &grid.beat_times {
        let centre = ((bt - t0) * frame_rate).round() as isize;
        for (j, w) in kernel.iter().enumerate() {
            let idx = centre + j as isize - half;
            if idx >= 0 && (idx as usize) < len {
                out[idx as usize] += w;
            }
        }
    }
    out
}
