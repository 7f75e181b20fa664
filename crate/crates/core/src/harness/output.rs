//! Run artifacts: per-stream CSVs, `report.json` and `config.echo.json`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ScenarioConfig;
use super::runlog::{write_csv, CsvRow};
use super::scenarios::{IterationRecord, RunOutput};
use crate::error::Result;
use crate::music::write_music_csv;

/// Pretty JSON with a trailing newline. Maps serialize in key order, so the
/// bytes depend only on the value.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes every artifact of `out` into `dir` and returns the paths written.
pub fn write_outputs(dir: impl AsRef<Path>, config: &ScenarioConfig, out: &RunOutput) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let comment = format!("seed={} mode={:?}", out.log.seed, config.mode);
    let c = Some(comment.as_str());
    let mut written = Vec::new();
    let mut path = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    write_csv(path("runlog_oscillator.csv"), c, &out.log.oscillator)?;
    write_csv(path("runlog_plant.csv"), c, &out.log.plant)?;
    write_csv(path("runlog_grf_analysis.csv"), c, &out.log.forces)?;
    if !out.log.commands.is_empty() {
        write_csv(path("runlog_commands.csv"), c, &out.log.commands)?;
    }
    if !out.rewards.is_empty() {
        write_csv(path("runlog_rewards.csv"), c, &out.rewards)?;
    }
    if !out.beats.is_empty() {
        write_csv(path("beat_alignment.csv"), c, &out.beats)?;
    }
    if let Some(cur) = &out.report.curriculum {
        write_csv(path("curriculum.csv"), c, &cur.iterations)?;
    }
    if let Some(music) = &out.music {
        write_music_csv(path("music.csv"), &music.frames)?;
    }
    write_json(path("report.json"), &out.report)?;
    write_json(path("config.echo.json"), config)?;
    Ok(written)
}

impl CsvRow for IterationRecord {
    const HEADER: &'static str = "iteration,rho,samples,mse,rank_deficient";
    fn write_row(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "{},{},{},{},{}", self.iteration, self.rho, self.samples, self.mse, self.rank_deficient)
    }
}
