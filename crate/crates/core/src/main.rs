use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use gaitsync::harness::config::DEFAULT_F_SWEEP;
use gaitsync::harness::output::write_json;
use gaitsync::harness::{run, write_outputs, AudioSource, Mode, RunReport, ScenarioConfig};
use gaitsync::music::{analyze_clip, read_wav, synth_click_track, write_music_csv, write_wav, AnalysisConfig, ClickSpec};
use gaitsync::rewards::RewardVariant;
use gaitsync::Result;

#[derive(Parser)]
#[command(name = "gaitsync", version, about = "Rhythm-synchronized quadruped gait engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON scenario file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run length in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Registered GRF feedback source.
    #[arg(long)]
    feedback: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed loop at a commanded stepping frequency, modulator off.
    FreqTrack {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f_cmd: Option<f64>,
        /// Run every default command frequency, one subdirectory each.
        #[arg(long, conflicts_with = "f_cmd")]
        sweep: bool,
    },
    /// Gait synchronized to a click track or WAV file.
    RhythmSync {
        #[command(flatten)]
        common: Common,
        /// Synthesize a click track at this tempo.
        #[arg(long, conflicts_with = "wav")]
        bpm: Option<f64>,
        /// Drive the run from a WAV file.
        #[arg(long)]
        wav: Option<PathBuf>,
        #[arg(long, value_enum)]
        reward: Option<RewardVariant>,
        /// Registered phase controller.
        #[arg(long)]
        controller: Option<String>,
        /// Controller gain k.
        #[arg(long)]
        gain: Option<f64>,
    },
    /// Estimator curriculum followed by a learned-feedback tracking run.
    Curriculum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f_cmd: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Write a synthetic click track as WAV.
    SynthClick {
        #[arg(long, default_value_t = 120.0)]
        bpm: f64,
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long, default_value = "click.wav")]
        out: PathBuf,
    },
    /// Music analysis only: tempo, beat grid and feature CSV.
    Analyze {
        wav: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn base_config(common: &Common, mode: Mode) -> Result<ScenarioConfig> {
    let mut c = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::new(mode),
    };
    c.mode = mode;
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(d) = common.duration {
        c.duration_s = Some(d);
    }
    if let Some(f) = &common.feedback {
        c.feedback = f.clone();
    }
    Ok(c)
}

fn execute(config: ScenarioConfig, out: &Path) -> Result<RunReport> {
    let config = config.resolve()?;
    let output = run(&config)?;
    for p in write_outputs(out, &config, &output)? {
        info!("wrote {}", p.display());
    }
    Ok(output.report)
}

fn summarize(r: &RunReport) {
    match r.mode {
        Mode::FreqTrack | Mode::EstimatorCurriculum => println!(
            "f_cmd {:.3} Hz: RF mean dev {:.4} Hz, variance {:.6} Hz²",
            r.target_hz, r.sync.freq_dev_mean, r.sync.freq_dev_var
        ),
        Mode::RhythmSync => {
            let m = r.music.as_ref().expect("rhythm runs carry music");
            println!(
                "tempo {:.2} BPM, gait {:.3} Hz: Δt_max {:.4} s, σ(ω̃) {:.4} rad/s",
                m.tempo_bpm, m.gait_hz, r.sync.delta_t_max, r.sync.omega_std
            );
            if let Some(o) = &r.objective {
                println!("objective {} = {:.4}", o.metric, o.mean);
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::FreqTrack { common, f_cmd, sweep } => {
            let mut c = base_config(&common, Mode::FreqTrack)?;
            if sweep {
                for f in DEFAULT_F_SWEEP {
                    let cf = ScenarioConfig { f_cmd: f, ..c.clone() };
                    summarize(&execute(cf, &common.out.join(format!("f_{f:.1}")))?);
                }
                return Ok(());
            }
            if let Some(f) = f_cmd {
                c.f_cmd = f;
            }
            summarize(&execute(c, &common.out)?);
        }
        Command::RhythmSync { common, bpm, wav, reward, controller, gain } => {
            let mut c = base_config(&common, Mode::RhythmSync)?;
            if let Some(b) = bpm {
                c.audio = AudioSource::Synth(ClickSpec { bpm: b, ..ClickSpec::default() });
            }
            if let Some(w) = wav {
                c.audio = AudioSource::Wav(w);
            }
            if let Some(r) = reward {
                c.reward = r;
            }
            if let Some(name) = controller {
                c.modulator.controller = name;
            }
            if let Some(k) = gain {
                c.modulator.gain = k;
            }
            summarize(&execute(c, &common.out)?);
        }
        Command::Curriculum { common, f_cmd, iterations } => {
            let mut c = base_config(&common, Mode::EstimatorCurriculum)?;
            if let Some(f) = f_cmd {
                c.f_cmd = f;
            }
            if let Some(n) = iterations {
                c.curriculum.iterations = n;
            }
            let r = execute(c, &common.out)?;
            if let Some(cur) = &r.curriculum {
                let last = cur.iterations.last().expect("curriculum has iterations");
                println!("final MSE {:.3e} after {} iterations", last.mse, cur.iterations.len());
            }
            summarize(&r);
        }
        Command::SynthClick { bpm, duration, out } => {
            let spec = ClickSpec { bpm, duration_s: duration, ..ClickSpec::default() };
            write_wav(&out, &synth_click_track(&spec)?)?;
            println!("wrote {} ({bpm} BPM, {duration} s)", out.display());
        }
        Command::Analyze { wav, out } => {
            let music = analyze_clip(&read_wav(&wav)?, &AnalysisConfig::default())?;
            std::fs::create_dir_all(&out)?;
            write_music_csv(out.join("music.csv"), &music.frames)?;
            write_json(out.join("beats.json"), &music.grid)?;
            println!(
                "tempo {:.2} BPM, {} beats, confidence {:.3}",
                music.grid.tempo_bpm,
                music.grid.beat_times.len(),
                music.grid.confidence
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

