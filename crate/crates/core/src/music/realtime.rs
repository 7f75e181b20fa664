//! Sliding-window analyzer for streamed audio.
//!
//! A producer pushes timestamped chunks through a bounded channel; the
//! analyzer thread publishes beat-grid snapshots; the control loop reads the
//! latest snapshot without waiting and extrapolates the phase to its own clock.

use std::collections::VecDeque;
use std::sync::mpsc::Receiver;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::audio::AudioClip;
use super::beats::{detect_beats, BeatGrid};
use super::onset::onset_envelope;
use super::phase::{phase_at, PhaseEstimate};
use super::tempo::{estimate_tempo, smooth_tempo, TempoQueue};
use super::AnalysisConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AudioChunk {
    pub samples: Vec<f32>,
    /// Capture time of the first sample (s).
    pub t_capture: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub grid: BeatGrid,
    /// Median-filtered tempo.
    pub tempo_bpm: f64,
    /// Capture time of the end of the analyzed window (s).
    pub window_end: f64,
}

impl Snapshot {
    pub fn phase_at(&self, now: f64) -> Result<PhaseEstimate> {
        phase_at(&self.grid, self.tempo_bpm, now)
    }
}

pub struct StreamingAnalyzer {
    sample_rate: u32,
    config: AnalysisConfig,
    window_len: usize,
    hop_len: usize,
    buffer: VecDeque<f32>,
    buffer_end: f64,
    since_hop: usize,
    queue: TempoQueue,
    latest: Option<Snapshot>,
}

impl StreamingAnalyzer {
    pub fn new(sample_rate: u32, config: AnalysisConfig) -> Result<Self> {
        config.validate()?;
        AudioClip::new(Vec::new(), sample_rate, 0.0)?;
        let sr = sample_rate as f64;
        let window_len = (config.window_s * sr).round() as usize;
        Ok(StreamingAnalyzer {
            sample_rate,
            config,
            window_len,
            hop_len: (config.hop_s * sr).round() as usize,
            buffer: VecDeque::with_capacity(window_len),
            buffer_end: 0.0,
            since_hop: 0,
            queue: TempoQueue::new(),
            latest: None,
        })
    }

    pub fn latest(&self) -> Option<&Snapshot> {
        self.latest.as_ref()
    }

    /// Appends a chunk; returns a new snapshot when a hop boundary was crossed
    /// on a full window that carried a tempo.
    pub fn push(&mut self, chunk: &AudioChunk) -> Result<Option<Snapshot>> {
        self.buffer.extend(chunk.samples.iter().copied());
        while self.buffer.len() > self.window_len {
            self.buffer.pop_front();
        }
        self.buffer_end = chunk.t_capture + chunk.samples.len() as f64 / self.sample_rate as f64;
        self.since_hop += chunk.samples.len();
        if self.buffer.len() < self.window_len || self.since_hop < self.hop_len {
            return Ok(None);
        }
        self.since_hop %= self.hop_len.max(1);
        self.analyze()
    }

    fn analyze(&mut self) -> Result<Option<Snapshot>> {
        let clip = AudioClip::new(
            self.buffer.iter().copied().collect(),
            self.sample_rate,
            self.buffer_end - self.config.window_s,
        )?;
        let env = onset_envelope(&clip)?;
        let raw = match estimate_tempo(&env, self.config.window_s) {
            Ok(est) => est.bpm,
            Err(Error::NoTempo) => return Ok(None),
            Err(e) => return Err(e),
        };
        let tempo_bpm = smooth_tempo(&mut self.queue, raw);
        let grid = detect_beats(&env, tempo_bpm)?;
        let snap = Snapshot {
            tempo_bpm: grid.tempo_bpm,
            grid,
            window_end: self.buffer_end,
        };
        self.latest = Some(snap.clone());
        Ok(Some(snap))
    }
}

type Shared = Arc<Mutex<Option<Snapshot>>>;

/// Consumer-side handle: never waits on the analyzer thread.
#[derive(Debug, Clone)]
pub struct PhaseReader {
    shared: Shared,
    cached: Option<Snapshot>,
}

impl PhaseReader {
    fn refresh(&mut self) {
        if let Ok(guard) = self.shared.try_lock() {
            if guard.is_some() {
                self.cached = guard.clone();
            }
        }
    }

    pub fn snapshot(&mut self) -> Option<&Snapshot> {
        self.refresh();
        self.cached.as_ref()
    }

    /// Music phase at `now`, or `None` before the first snapshot.
    pub fn phase_at(&mut self, now: f64) -> Option<PhaseEstimate> {
        self.refresh();
        self.cached.as_ref().and_then(|s| s.phase_at(now).ok())
    }
}

/// Runs a [`StreamingAnalyzer`] on its own thread until the sender hangs up.
pub fn spawn_analyzer(
    rx: Receiver<AudioChunk>,
    sample_rate: u32,
    config: AnalysisConfig,
) -> Result<(JoinHandle<Result<()>>, PhaseReader)> {
    let mut analyzer = StreamingAnalyzer::new(sample_rate, config)?;
    let shared: Shared = Arc::new(Mutex::new(None));
    let publish = Arc::clone(&shared);
    let handle = std::thread::spawn(move || {
        for chunk in rx {
            if let Some(snap) = analyzer.push(&chunk)? {
                *publish.lock().expect("snapshot lock poisoned") = Some(snap);
            }
        }
        Ok(())
    });
    Ok((handle, PhaseReader { shared, cached: None }))
}
