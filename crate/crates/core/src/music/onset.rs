//! Spectral-flux onset envelope resampled to the 100 Hz feature rate.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::audio::AudioClip;
use crate::error::{Error, Result};

pub const FEATURE_RATE: f64 = 100.0;
pub const WINDOW: usize = 1024;
pub const HOP: usize = WINDOW / 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetEnvelope {
    pub values: Vec<f64>,
    pub frame_rate: f64,
    /// Timestamp of `values[0]` (s).
    pub t0: f64,
}

impl OnsetEnvelope {
    pub fn new(values: Vec<f64>, t0: f64) -> Self {
        OnsetEnvelope {
            values,
            frame_rate: FEATURE_RATE,
            t0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.frame_rate
    }

    pub fn time_of(&self, frame: f64) -> f64 {
        self.t0 + frame / self.frame_rate
    }

    /// The trailing `seconds` of the envelope.
    pub fn tail(&self, seconds: f64) -> OnsetEnvelope {
        let n = ((seconds * self.frame_rate).round() as usize).min(self.values.len());
        let start = self.values.len() - n;
        OnsetEnvelope {
            values: self.values[start..].to_vec(),
            frame_rate: self.frame_rate,
            t0: self.time_of(start as f64),
        }
    }

    /// Linear interpolation at a fractional frame index; zero outside.
    pub fn sample(&self, frame: f64) -> f64 {
        if frame < 0.0 || frame > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = frame.floor() as usize;
        let frac = frame - i as f64;
        match self.values.get(i + 1) {
            Some(&next) => self.values[i] * (1.0 - frac) + next * frac,
            None => self.values[i],
        }
    }
}

/// Half-wave-rectified spectral flux over Hann-windowed frames centred at
/// `k·HOP` (zero padded at both ends), linearly resampled to 100 Hz.
pub fn onset_envelope(clip: &AudioClip) -> Result<OnsetEnvelope> {
    clip.validate()?;
    if clip.samples.len() < WINDOW {
        return Err(Error::Precondition(format!(
            "clip has {} samples, fewer than one {WINDOW}-sample analysis frame",
            clip.samples.len()
        )));
    }
    let sr = clip.sample_rate as f64;
    let window: Vec<f32> = (0..WINDOW)
        .map(|n| (0.5 - 0.5 * (2.0 * PI * n as f64 / WINDOW as f64).cos()) as f32)
        .collect();
    let fft = FftPlanner::<f32>::new().plan_fft_forward(WINDOW);
    let bins = WINDOW / 2 + 1;
    let n_frames = clip.samples.len() / HOP + 1;

    let mut prev = vec![0.0f32; bins];
    let mut mag = vec![0.0f32; bins];
    let mut buf = vec![Complex::new(0.0f32, 0.0); WINDOW];
    let mut flux = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let centre = (k * HOP) as isize;
        for (j, b) in buf.iter_mut().enumerate() {
            let idx = centre - (WINDOW / 2) as isize + j as isize;
            let s = if idx >= 0 {
                clip.samples.get(idx as usize).copied().unwrap_or(0.0)
            } else {
                0.0
            };
            *b = Complex::new(s * window[j], 0.0);
        }
        fft.process(&mut buf);
        for (m, c) in mag.iter_mut().zip(&buf[..bins]) {
            *m = c.norm();
        }
        let f: f64 = mag.iter().zip(&prev).map(|(m, p)| (m - p).max(0.0) as f64).sum();
        flux.push(f);
        std::mem::swap(&mut prev, &mut mag);
    }

    let frame_dt = HOP as f64 / sr;
    let n_out = (clip.duration() * FEATURE_RATE).floor() as usize + 1;
    let values = (0..n_out)
        .map(|i| {
            let pos = (i as f64 / FEATURE_RATE) / frame_dt;
            let k = pos.floor() as usize;
            let frac = pos - k as f64;
            match (flux.get(k), flux.get(k + 1)) {
                (Some(a), Some(b)) => a * (1.0 - frac) + b * frac,
                (Some(a), None) => *a,
                _ => 0.0,
            }
        })
        .collect();
    Ok(OnsetEnvelope::new(values, clip.t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::music::audio::{synth_click_track, ClickSpec};

    fn argmax(v: &[f64]) -> usize {
        v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
    }

    #[test]
    fn silence_gives_zero_envelope() {
        let clip = AudioClip::new(vec![0.0; 44_100], 44_100, 0.0).unwrap();
        let env = onset_envelope(&clip).unwrap();
        assert_eq!(env.frame_rate, 100.0);
        assert!(env.values.iter().all(|&v| v == 0.0));
        assert_eq!(env.len(), 101);
    }

    #[test]
    fn single_click_is_local() {
        let mut samples = vec![0.0f32; 44_100];
        let at = 0.437;
        let start = (at * 44_100.0) as usize;
        for j in 0..441 {
            samples[start + j] = (2.0 * PI * 1000.0 * j as f64 / 44_100.0).sin() as f32;
        }
        let env = onset_envelope(&AudioClip::new(samples, 44_100, 0.0).unwrap()).unwrap();
        let peak = argmax(&env.values) as f64;
        assert!((peak - at * 100.0).abs() <= 1.0, "peak frame {peak}");
        // dominant: nothing else comes close
        let second = env
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| (*i as f64 - peak).abs() > 3.0)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        assert!(second < 0.05 * env.values[peak as usize]);
    }

    #[test]
    fn click_train_peak_spacing() {
        let spec = ClickSpec { bpm: 120.0, duration_s: 4.0, offset_s: 0.25, ..Default::default() };
        let env = onset_envelope(&synth_click_track(&spec).unwrap()).unwrap();
        let max = env.values.iter().cloned().fold(0.0, f64::max);
        let peaks: Vec<usize> = (1..env.len() - 1)
            .filter(|&i| env.values[i] > 0.5 * max && env.values[i] >= env.values[i - 1] && env.values[i] > env.values[i + 1])
            .collect();
        assert_eq!(peaks.len(), spec.click_times().len());
        for w in peaks.windows(2) {
            assert!((w[1] as f64 - w[0] as f64 - 50.0).abs() <= 1.0);
        }
    }

    #[test]
    fn too_short_and_bad_rate() {
        assert!(matches!(
            onset_envelope(&AudioClip { samples: vec![0.0; 100], sample_rate: 44_100, t0: 0.0 }),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            onset_envelope(&AudioClip { samples: vec![0.0; 4096], sample_rate: 11_025, t0: 0.0 }),
            Err(Error::UnsupportedFormat(_))
        ));
    }
}
