//! Per-stream run records and their CSV form.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::modulator::ModulatorCommand;
use crate::plant::{GrfTimeline, PlantConfig};

/// One CSV line per record.
pub trait CsvRow {
    const HEADER: &'static str;
    fn write_row(&self, w: &mut dyn Write) -> std::io::Result<()>;
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Oscillator stream (oscillator rate), state before the step at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorRow {
    pub t: f64,
    pub phases: [f64; 4],
    pub omega_tilde: f64,
    /// Wrapped φ_j − θ target, when music drives the run.
    pub phase_error: Option<f64>,
}

impl CsvRow for OscillatorRow {
    const HEADER: &'static str = "t,phi1,phi2,phi3,phi4,omega_tilde,phase_error";
    fn write_row(&self, w: &mut dyn Write) -> std::io::Result<()> {
        let e = self.phase_error.map(|e| e.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", self.t, join(&self.phases), self.omega_tilde, e)
    }
}

/// Plant stream (plant rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlantRow {
    pub t: f64,
    pub forces: [f64; 4],
    pub g_sim: [f64; 4],
    /// G handed to the oscillators by the feedback source.
    pub g_feedback: [f64; 4],
}

impl CsvRow for PlantRow {
    const HEADER: &'static str = "t,N1,N2,N3,N4,G_sim1,G_sim2,G_sim3,G_sim4,G1,G2,G3,G4";
    fn write_row(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{},{},{},{}", self.t, join(&self.forces), join(&self.g_sim), join(&self.g_feedback))
    }
}

/// Force record for stepping-frequency analysis (analysis rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceRow {
    pub t: f64,
    pub forces: [f64; 4],
}

impl CsvRow for ForceRow {
    const HEADER: &'static str = "t,N1,N2,N3,N4";
    fn write_row(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{},{}", self.t, join(&self.forces))
    }
}

impl CsvRow for ModulatorCommand {
    const HEADER: &'static str = "t,omega_m,delta_omega,omega_tilde,phase_error";
    fn write_row(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{},{},{},{},{}", self.t, self.omega_m, self.delta_omega, self.omega_tilde, self.phase_error)
    }
}

/// Reward traces (modulator rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardRow {
    pub t: f64,
    pub rhythm: f64,
    pub r1: f64,
    pub r2: f64,
    pub phase: f64,
}

impl CsvRow for RewardRow {
    const HEADER: &'static str = "t,rhythm,r1,r2,phase";
    fn write_row(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{},{},{},{},{}", self.t, self.rhythm, self.r1, self.r2, self.phase)
    }
}

/// Per-beat alignment record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeatRow {
    pub t_kinematic: f64,
    pub delta_t: f64,
}

impl CsvRow for BeatRow {
    const HEADER: &'static str = "t_kinematic,delta_t";
    fn write_row(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{},{}", self.t_kinematic, self.delta_t)
    }
}

/// Everything recorded during one simulated episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub seed: u64,
    pub oscillator: Vec<OscillatorRow>,
    pub plant: Vec<PlantRow>,
    pub forces: Vec<ForceRow>,
    pub commands: Vec<ModulatorCommand>,
}

impl RunLog {
    pub fn new(seed: u64) -> Self {
        RunLog { seed, ..Default::default() }
    }

    fn timeline(rows: impl Iterator<Item = (f64, [f64; 4])>, period: f64, plant: &PlantConfig) -> Result<GrfTimeline> {
        let mut tl = GrfTimeline::new(period);
        for (t, forces) in rows {
            tl.push(crate::oscillator::GrfSample::new(forces, plant.mass, plant.g, t)?)?;
        }
        Ok(tl)
    }

    /// Plant-rate force timeline.
    pub fn plant_timeline(&self, period: f64, plant: &PlantConfig) -> Result<GrfTimeline> {
        Self::timeline(self.plant.iter().map(|r| (r.t, r.forces)), period, plant)
    }

    /// Analysis-rate force timeline.
    pub fn force_timeline(&self, period: f64, plant: &PlantConfig) -> Result<GrfTimeline> {
        Self::timeline(self.forces.iter().map(|r| (r.t, r.forces)), period, plant)
    }
}

/// Writes `rows` as CSV preceded by a `#` header line carrying provenance.
pub fn write_csv<R: CsvRow>(path: impl AsRef<Path>, comment: Option<&str>, rows: &[R]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{}", R::HEADER)?;
    for r in rows {
        r.write_row(&mut w)?;
    }
    w.flush()?;
    Ok(())
}
