//! Scenario configuration: one JSON document, overridable from the CLI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::grf_sources;
use crate::modulator::{controllers, ModulatorConfig};
use crate::music::{AnalysisConfig, ClickSpec};
use crate::oscillator::in_band;
use crate::plant::PlantConfig;
use crate::rewards::RewardVariant;

/// Frequency-tracking commands swept by default (Hz).
pub const DEFAULT_F_SWEEP: [f64; 6] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
pub const MIN_CURRICULUM_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FreqTrack,
    RhythmSync,
    EstimatorCurriculum,
}

impl Mode {
    pub fn default_duration(self) -> f64 {
        match self {
            Mode::FreqTrack | Mode::EstimatorCurriculum => 5.0,
            Mode::RhythmSync => 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioSource {
    /// Synthetic click track; its duration follows the run duration.
    Synth(ClickSpec),
    Wav(PathBuf),
}

impl Default for AudioSource {
    fn default() -> Self {
        AudioSource::Synth(ClickSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub oscillator_hz: u32,
    pub plant_hz: u32,
    pub modulator_hz: u32,
    /// Rate of the force record used for stepping-frequency analysis.
    pub analysis_hz: u32,
}

impl Default for Rates {
    fn default() -> Self {
        Rates {
            oscillator_hz: 1000,
            plant_hz: 100,
            modulator_hz: 20,
            analysis_hz: 500,
        }
    }
}

impl Rates {
    pub fn validate(&self) -> Result<()> {
        let Rates { oscillator_hz: o, plant_hz: p, modulator_hz: m, analysis_hz: a } = *self;
        if o == 0 || p == 0 || m == 0 || a == 0 {
            return Err(Error::Config(format!("rates must be positive: {self:?}")));
        }
        if o % p != 0 || p % m != 0 || o % a != 0 {
            return Err(Error::Config(format!(
                "rates must divide evenly (oscillator/plant, plant/modulator, oscillator/analysis): {self:?}"
            )));
        }
        if 1.0 / o as f64 > crate::oscillator::MAX_DT {
            return Err(Error::Config(format!("oscillator rate {o} Hz gives dt above 10 ms")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    /// N: iterations 0..=N run with ρ = iteration/N.
    pub iterations: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig { iterations: MIN_CURRICULUM_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    /// Commanded forward speed (m/s); gates stationary vs moving parameters.
    pub v_cmd: f64,
    /// Commanded stepping frequency (Hz) for frequency tracking and the curriculum.
    pub f_cmd: f64,
    /// Run length (s); per-episode length for the curriculum. Mode default when absent.
    pub duration_s: Option<f64>,
    pub audio: AudioSource,
    /// Reward reported as the run objective.
    pub reward: RewardVariant,
    pub seed: u64,
    pub rates: Rates,
    /// Prefix excluded from alignment, σ(ω̃) and reward scoring (s).
    pub warmup_s: f64,
    /// Standing time before the stationary→moving transition (s).
    pub stand_s: f64,
    /// Half-width of the uniform perturbation added to initial phases at the transition (rad).
    pub perturbation_rad: f64,
    /// Registered GRF feedback source.
    pub feedback: String,
    pub plant: PlantConfig,
    pub modulator: ModulatorConfig,
    pub analysis: AnalysisConfig,
    pub curriculum: CurriculumConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            mode: Mode::FreqTrack,
            v_cmd: 0.8,
            f_cmd: 2.0,
            duration_s: None,
            audio: AudioSource::default(),
            reward: RewardVariant::Rhythm,
            seed: 0,
            rates: Rates::default(),
            warmup_s: crate::metrics::DEFAULT_WARMUP,
            stand_s: 0.0,
            perturbation_rad: 0.0,
            feedback: "simulated".into(),
            plant: PlantConfig::default(),
            modulator: ModulatorConfig::default(),
            analysis: AnalysisConfig::default(),
            curriculum: CurriculumConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn new(mode: Mode) -> Self {
        ScenarioConfig { mode, ..Default::default() }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn duration(&self) -> f64 {
        self.duration_s.unwrap_or_else(|| self.mode.default_duration())
    }

    /// Fills defaults that depend on other fields and validates the result.
    pub fn resolve(mut self) -> Result<Self> {
        let duration = self.duration();
        self.duration_s = Some(duration);
        if let AudioSource::Synth(spec) = &mut self.audio {
            spec.duration_s = duration;
        }
        self.modulator.rate_hz = self.rates.modulator_hz as f64;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        self.plant.validate()?;
        self.modulator.validate()?;
        self.analysis.validate()?;
        let duration = self.duration();
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Config(format!("duration {duration} s must be > 0")));
        }
        for (name, v) in [("v_cmd", self.v_cmd), ("warmup_s", self.warmup_s), ("stand_s", self.stand_s), ("perturbation_rad", self.perturbation_rad)] {
            if !v.is_finite() || (name != "v_cmd" && v < 0.0) {
                return Err(Error::Config(format!("{name} = {v}")));
            }
        }
        if self.stand_s >= duration {
            return Err(Error::Config(format!("stand_s {} must be shorter than the run", self.stand_s)));
        }
        if !controllers().contains(&self.modulator.controller) {
            return Err(Error::Config(format!("unknown phase controller '{}'", self.modulator.controller)));
        }
        if !grf_sources().contains(&self.feedback) {
            return Err(Error::Config(format!("unknown GRF source '{}'", self.feedback)));
        }
        if matches!(self.mode, Mode::FreqTrack | Mode::EstimatorCurriculum)
            && !in_band(self.f_cmd)
        {
            return Err(Error::CommandRange { f_cmd: self.f_cmd });
        }
        if self.mode == Mode::EstimatorCurriculum && self.curriculum.iterations < MIN_CURRICULUM_ITERATIONS {
            return Err(Error::Config(format!(
                "curriculum needs at least {MIN_CURRICULUM_ITERATIONS} iterations, got {}",
                self.curriculum.iterations
            )));
        }
        if let AudioSource::Synth(spec) = &self.audio {
            if !(spec.bpm.is_finite() && spec.bpm > 0.0) {
                return Err(Error::Config(format!("click bpm {}", spec.bpm)));
            }
        }
        Ok(())
    }
}
