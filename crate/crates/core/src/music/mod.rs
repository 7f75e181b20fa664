//! Audio to 100 Hz music features: onset envelope, tempo, beat grid, smoothed
//! beat curve B(t) and music phase θ_m.

pub mod audio;
pub mod beats;
pub mod onset;
pub mod phase;
pub mod realtime;
pub mod tempo;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use audio::{read_wav, synth_click_track, write_wav, AudioClip, ClickSpec};
pub use beats::{detect_beats, smooth_beats, BeatGrid};
pub use onset::{onset_envelope, OnsetEnvelope, FEATURE_RATE};
pub use phase::{interpolate_phase, phase_at, PhaseEstimate};
pub use tempo::{estimate_tempo, smooth_tempo, TempoEstimate, TempoQueue};

use crate::error::{Error, Result};
use crate::phase::ring;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Tempo analysis window (s).
    pub window_s: f64,
    /// Spacing of sliding tempo estimates (s).
    pub hop_s: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { window_s: 5.0, hop_s: 0.5 }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_s > 0.0 && self.hop_s > 0.0 && self.hop_s <= self.window_s) {
            return Err(Error::Config(format!("analysis window {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicFrame {
    pub t: f64,
    pub envelope: f64,
    pub smoothed_beat: f64,
    pub theta: f64,
    pub theta_obs: [f64; 2],
    pub omega_m: f64,
    /// Median-filtered sliding tempo at this frame (BPM).
    pub tempo_bpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicAnalysis {
    pub envelope: OnsetEnvelope,
    pub grid: BeatGrid,
    /// (window end time, median-filtered BPM) for each sliding window.
    pub tempo_track: Vec<(f64, f64)>,
    pub frames: Vec<MusicFrame>,
}

impl MusicAnalysis {
    pub fn omega_m(&self) -> f64 {
        self.grid.omega()
    }
}

/// Offline analysis of a whole clip.
///
/// The beat grid comes from the whole-clip tempo; the per-frame tempo column
/// reports the sliding, median-filtered estimate a streaming run would see.
pub fn analyze_clip(clip: &AudioClip, config: &AnalysisConfig) -> Result<MusicAnalysis> {
    config.validate()?;
    let envelope = onset_envelope(clip)?;
    let rate = envelope.frame_rate;

    let mut queue = TempoQueue::new();
    let mut tempo_track = Vec::new();
    let mut end = config.window_s;
    while end <= envelope.duration() + 1e-9 {
        let frames = ((end * rate).round() as usize).min(envelope.len());
        let prefix = OnsetEnvelope {
            values: envelope.values[..frames].to_vec(),
            frame_rate: rate,
            t0: envelope.t0,
        };
        match estimate_tempo(&prefix, config.window_s) {
            Ok(est) => tempo_track.push((envelope.t0 + end, smooth_tempo(&mut queue, est.bpm))),
            Err(Error::NoTempo) => {}
            Err(e) => return Err(e),
        }
        end += config.hop_s;
    }

    let global = estimate_tempo(&envelope, envelope.duration())
        .map_err(|e| match e {
            Error::Precondition(msg) => Error::InsufficientData(msg),
            other => other,
        })?;
    let grid = detect_beats(&envelope, global.bpm)?;
    let smoothed = smooth_beats(&grid, rate, envelope.t0, envelope.len());
    let omega_m = grid.omega();

    let mut frames = Vec::with_capacity(envelope.len());
    let mut track = tempo_track.iter().peekable();
    let mut tempo_now = grid.tempo_bpm;
    for (i, (&e, &b)) in envelope.values.iter().zip(&smoothed).enumerate() {
        let t = envelope.time_of(i as f64);
        while let Some(&&(te, bpm)) = track.peek() {
            if te > t + 1e-9 {
                break;
            }
            tempo_now = bpm;
            track.next();
        }
        let theta = interpolate_phase(&grid, t)?;
        frames.push(MusicFrame {
            t,
            envelope: e,
            smoothed_beat: b,
            theta,
            theta_obs: ring(theta),
            omega_m,
            tempo_bpm: tempo_now,
        });
    }
    Ok(MusicAnalysis { envelope, grid, tempo_track, frames })
}

/// Music feature log with columns `t,envelope,B,theta,tempo_bpm`.
pub fn write_music_csv(path: impl AsRef<Path>, frames: &[MusicFrame]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,envelope,B,theta,tempo_bpm")?;
    for f in frames {
        writeln!(w, "{},{},{},{},{}", f.t, f.envelope, f.smoothed_beat, f.theta, f.tempo_bpm)?;
    }
    w.flush()?;
    Ok(())
}
