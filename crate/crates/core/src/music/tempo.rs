//! Autocorrelation tempo estimator and the size-5 median tempo filter.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::onset::OnsetEnvelope;
use crate::error::{Error, Result};

pub const BPM_RANGE: (f64, f64) = (60.0, 200.0);
pub const QUEUE_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempoEstimate {
    pub bpm: f64,
    /// Normalized autocorrelation at the winning lag, in [0, 1].
    pub confidence: f64,
}

/// Sub-sample vertex offset of the parabola through three equally spaced points.
pub(crate) fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..=max_lag)
        .map(|lag| x.iter().zip(&x[lag.min(x.len())..]).map(|(a, b)| a * b).sum::<f64>() / n)
        .collect()
}

/// Sub-frame refined peak of `r` near `centre`, searching `radius` lags either side.
fn refined_peak(r: &[f64], centre: f64, radius: usize) -> Option<(f64, f64)> {
    let c = centre.round() as usize;
    let lo = c.saturating_sub(radius).max(1);
    let hi = (c + radius).min(r.len().checked_sub(2)?);
    if lo > hi {
        return None;
    }
    let i = (lo..=hi).max_by(|&a, &b| r[a].total_cmp(&r[b]))?;
    Some((i as f64 + parabolic_offset(r[i - 1], r[i], r[i + 1]), r[i]))
}

/// Tempo of the trailing `window_s` seconds of the envelope.
///
/// The beat lag maximizes the mean-removed autocorrelation over the 60–200 BPM
/// lag range, is parabolic-refined, then sharpened by a least-squares fit over
/// its integer multiples that remain strong.
pub fn estimate_tempo(env: &OnsetEnvelope, window_s: f64) -> Result<TempoEstimate> {
    let rate = env.frame_rate;
    let slowest_period = 60.0 / BPM_RANGE.0;
    if window_s < 4.0 * slowest_period {
        return Err(Error::Precondition(format!(
            "tempo window {window_s} s covers fewer than 4 beats at {} BPM",
            BPM_RANGE.0
        )));
    }
    if env.duration() + 0.5 / rate < window_s {
        return Err(Error::Precondition(format!(
            "envelope spans {:.3} s, shorter than the {window_s} s tempo window",
            env.duration()
        )));
    }
    let seg = env.tail(window_s);
    let n = seg.values.len();
    let mean = seg.values.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = seg.values.iter().map(|v| v - mean).collect();

    let min_lag = (60.0 * rate / BPM_RANGE.1).ceil() as usize;
    let max_lag = (60.0 * rate / BPM_RANGE.0).floor() as usize;
    let r = autocorrelation(&x, (n / 2).max(max_lag + 1));
    if !(r[0] > 0.0) {
        return Err(Error::NoTempo);
    }
    let best = (min_lag..=max_lag).max_by(|&a, &b| r[a].total_cmp(&r[b])).ok_or(Error::NoTempo)?;
    if r[best] <= 0.0 {
        return Err(Error::NoTempo);
    }
    let mut base = best as f64 + parabolic_offset(r[best - 1], r[best], r[best + 1]);
    let mut peak_value = r[best];

    // A fractional beat lag splits its peak across two integer lags and can
    // lose to its own near-integer multiple; prefer the shortest sub-multiple
    // that is itself strongly periodic.
    for m in [3usize, 2] {
        let centre = base / m as f64;
        if centre < min_lag as f64 - 0.5 {
            continue;
        }
        if let Some((lag, peak)) = refined_peak(&r, centre, 1) {
            if peak >= 0.5 * r[best] {
                base = lag;
                peak_value = peak;
                break;
            }
        }
    }

    let (mut num, mut den) = (base, 1.0);
    for m in 2.. {
        let centre = m as f64 * base;
        if centre + 2.0 > (n / 2) as f64 {
            break;
        }
        match refined_peak(&r, centre, (m / 2).max(1)) {
            Some((lag, peak)) if peak > 0.5 * peak_value => {
                num += m as f64 * lag;
                den += (m * m) as f64;
            }
            _ => break,
        }
    }
    let lag = num / den;
    Ok(TempoEstimate {
        bpm: 60.0 * rate / lag,
        confidence: (peak_value / r[0]).clamp(0.0, 1.0),
    })
}

/// The last five raw tempo estimates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TempoQueue {
    values: VecDeque<f64>,
}

impl TempoQueue {
    pub fn new() -> Self {
        TempoQueue {
            values: VecDeque::with_capacity(QUEUE_LEN),
        }
    }

    pub fn push(&mut self, bpm: f64) {
        if self.values.len() == QUEUE_LEN {
            self.values.pop_front();
        }
        self.values.push_back(bpm);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    /// Median of the current contents; even counts average the middle pair.
    pub fn median(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.values.iter().copied().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let mid = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
    }
}

pub fn smooth_tempo(queue: &mut TempoQueue, new_estimate: f64) -> f64 {
    queue.push(new_estimate);
    queue.median().expect("queue is non-empty after push")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::music::audio::{synth_click_track, ClickSpec};
    use crate::music::onset::onset_envelope;

    fn click_env(bpm: f64, duration_s: f64) -> OnsetEnvelope {
        let spec = ClickSpec { bpm, duration_s, ..Default::default() };
        onset_envelope(&synth_click_track(&spec).unwrap()).unwrap()
    }

    #[test]
    fn click_train_tempi() {
        for bpm in [120.0, 89.6] {
            let est = estimate_tempo(&click_env(bpm, 5.0), 5.0).unwrap();
            assert!((est.bpm - bpm).abs() <= 1.0, "{bpm}: {est:?}");
            assert!(est.confidence > 0.3);
        }
    }

    #[test]
    fn silence_has_no_tempo() {
        let env = OnsetEnvelope::new(vec![0.0; 600], 0.0);
        assert!(matches!(estimate_tempo(&env, 5.0), Err(Error::NoTempo)));
    }

    #[test]
    fn window_preconditions() {
        let env = OnsetEnvelope::new(vec![0.0; 300], 0.0);
        assert!(matches!(estimate_tempo(&env, 3.0), Err(Error::Precondition(_))));
        assert!(matches!(estimate_tempo(&env, 5.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn parabola_vertex() {
        // y = -(x - 0.25)^2 sampled at -1, 0, 1
        let f = |x: f64| -(x - 0.25) * (x - 0.25);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.25).abs() < 1e-12);
        assert_eq!(parabolic_offset(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn median_filter_examples() {
        let run = |xs: &[f64]| {
            let mut q = TempoQueue::new();
            xs.iter().map(|&x| smooth_tempo(&mut q, x)).last().unwrap()
        };
        assert_eq!(run(&[120.0, 120.0, 240.0, 120.0, 120.0]), 120.0);
        assert_eq!(run(&[118.0]), 118.0);
        assert_eq!(run(&[89.0, 90.0, 90.0, 91.0, 180.0]), 90.0);
        assert_eq!(run(&[100.0; 9]), 100.0);
    }

    #[test]
    fn queue_capacity_is_five() {
        let mut q = TempoQueue::new();
        for i in 0..12 {
            q.push(i as f64);
        }
        assert_eq!(q.len(), 5);
        assert_eq!(q.values().collect::<Vec<_>>(), vec![7.0, 8.0, 9.0, 10.0, 11.0]);
    }
}
