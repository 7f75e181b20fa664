use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUPPORTED_RATES: [u32; 4] = [16_000, 22_050, 44_100, 48_000];

/// Mono PCM audio with its capture timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    /// Capture time of the first sample (s).
    pub t0: f64,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32, t0: f64) -> Result<Self> {
        let clip = AudioClip { samples, sample_rate, t0 };
        clip.validate()?;
        Ok(clip)
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_RATES.contains(&self.sample_rate) {
            return Err(Error::UnsupportedFormat(format!(
                "sample rate {} Hz (supported: {:?})",
                self.sample_rate, SUPPORTED_RATES
            )));
        }
        if self.samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::UnsupportedFormat("non-finite sample".into()));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Reads 16-bit integer or 32-bit float WAV; stereo and wider are averaged to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader.samples::<f32>().collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit {fmt:?} WAV")));
        }
    };
    let samples = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect();
    AudioClip::new(samples, spec.sample_rate, 0.0)
}

/// Writes a mono 32-bit float WAV.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in &clip.samples {
        writer.write_sample(s)?;
    }
    writer.finalize()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClickSpec {
    pub bpm: f64,
    pub duration_s: f64,
    /// Length of each click burst (s).
    pub click_s: f64,
    pub amplitude: f64,
    /// Time of the first click (s).
    pub offset_s: f64,
    pub sample_rate: u32,
    /// Carrier frequency of the click burst (Hz).
    pub carrier_hz: f64,
}

impl Default for ClickSpec {
    fn default() -> Self {
        ClickSpec {
            bpm: 120.0,
            duration_s: 30.0,
            click_s: 0.010,
            amplitude: 1.0,
            offset_s: 0.0,
            sample_rate: 44_100,
            carrier_hz: 1000.0,
        }
    }
}

impl ClickSpec {
    pub fn period(&self) -> f64 {
        60.0 / self.bpm
    }

    /// Click onset times inside the clip.
    pub fn click_times(&self) -> Vec<f64> {
        let p = self.period();
        (0..)
            .map(|k| self.offset_s + k as f64 * p)
            .take_while(|&t| t < self.duration_s)
            .collect()
    }
}

/// Synthesizes a metronome click track: one sine burst per beat.
pub fn synth_click_track(spec: &ClickSpec) -> Result<AudioClip> {
    if !(spec.bpm > 0.0 && spec.duration_s > 0.0 && spec.click_s > 0.0) {
        return Err(Error::Config(format!("invalid click spec {spec:?}")));
    }
    let sr = spec.sample_rate as f64;
    let n = (spec.duration_s * sr).round() as usize;
    let mut samples = vec![0.0f32; n];
    let len = (spec.click_s * sr).round() as usize;
    for t in spec.click_times() {
        let start = (t * sr).round() as usize;
        for j in 0..len {
            if let Some(s) = samples.get_mut(start + j) {
                *s = (spec.amplitude * (TAU * spec.carrier_hz * j as f64 / sr).sin()) as f32;
            }
        }
    }
    AudioClip::new(samples, spec.sample_rate, 0.0)
}
