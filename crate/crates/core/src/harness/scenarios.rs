//! End-to-end scenarios: frequency tracking, rhythm synchronization and the
//! estimator curriculum.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{AudioSource, Mode, ScenarioConfig};
use super::runlog::{BeatRow, RewardRow, RunLog};
use super::scheduler::{simulate, BeatTarget, Episode, MusicDrive, Scheduler};
use crate::error::{Error, Result};
use crate::estimator::{fit, CurriculumState, EstimatorInput, FittedModel};
use crate::feedback::{grf_sources, SourceConfig};
use crate::metrics::{beat_alignment, frequency_deviation, frequency_variance, relative_phase_differences, SyncReport};
use crate::modulator::{fold_omega, Modulator};
use crate::music::{analyze_clip, read_wav, synth_click_track, MusicAnalysis};
use crate::phase::{ring, wrap_pi, Leg};
use crate::plant::{contact_onsets, kinematic_beats, stepping_frequency};
use crate::rewards::{reward_metrics, RewardTick};

/// Mean |f − f_cmd| bound for a passing frequency-tracking run (Hz).
pub const FREQ_DEV_MEAN_MAX: f64 = 0.05;
/// Stepping-frequency variance bound for a passing run (Hz²).
pub const FREQ_DEV_VAR_MAX: f64 = 0.01;
/// Half-width of the window in which a beat counts toward a modulator tick (s).
pub const REWARD_TICK_S: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegStats {
    pub leg: Leg,
    pub onsets: usize,
    pub mean_hz: f64,
    pub variance: f64,
    pub mean_dev: f64,
}

/// Worst deviation of diagonal pairs from 0 and lateral pairs from π (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpdSummary {
    pub diagonal_max_dev: f64,
    pub lateral_max_dev: f64,
    /// Same, restricted to `settle_s` after the transition onward.
    pub diagonal_max_dev_settled: f64,
    pub lateral_max_dev_settled: f64,
    pub settle_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickCounts {
    pub oscillator: usize,
    pub plant: usize,
    pub analysis: usize,
    pub modulator: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicSummary {
    pub tempo_bpm: f64,
    pub confidence: f64,
    pub beats: usize,
    /// Beat angular frequency before folding (rad/s).
    pub omega_beat: f64,
    /// Folded gait angular frequency (rad/s).
    pub omega_m: f64,
    pub gait_hz: f64,
    /// Gait cycles per beat.
    pub fold_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub metric: String,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub rho: f64,
    pub samples: usize,
    pub mse: f64,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumReport {
    pub iterations: Vec<IterationRecord>,
    pub model: FittedModel,
    pub final_freq_dev_mean: f64,
    pub final_freq_dev_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub seed: u64,
    pub duration_s: f64,
    pub feedback: String,
    pub controller: Option<String>,
    /// Gait frequency the run tracks (Hz).
    pub target_hz: f64,
    pub sync: SyncReport,
    pub legs: Vec<LegStats>,
    pub rpd: RpdSummary,
    /// max |φ_j − θ| after warm-up at oscillator rate (rad).
    pub phase_error_max: Option<f64>,
    /// Post-warm-up mean of every reward metric.
    pub rewards: BTreeMap<String, f64>,
    pub objective: Option<Objective>,
    pub music: Option<MusicSummary>,
    pub ticks: TickCounts,
    pub curriculum: Option<CurriculumReport>,
}

/// Report plus everything needed to write the run's CSV files.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub log: RunLog,
    pub music: Option<MusicAnalysis>,
    pub rewards: Vec<RewardRow>,
    pub beats: Vec<BeatRow>,
}

pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    match config.mode {
        Mode::FreqTrack => run_frequency_tracking(config),
        Mode::RhythmSync => run_rhythm_sync(config),
        Mode::EstimatorCurriculum => run_estimator_curriculum(config),
    }
}

fn episode(config: &ScenarioConfig, f_cmd: f64) -> Episode {
    Episode {
        plant: config.plant,
        v_cmd: config.v_cmd,
        f_cmd,
        stand_s: config.stand_s,
        perturbation_rad: config.perturbation_rad,
    }
}

fn ticks(log: &RunLog) -> TickCounts {
    TickCounts {
        oscillator: log.oscillator.len(),
        plant: log.plant.len(),
        analysis: log.forces.len(),
        modulator: log.commands.len(),
    }
}

fn leg_stats(config: &ScenarioConfig, log: &RunLog, f_target: f64, from_s: f64) -> Result<Vec<LegStats>> {
    let tl = log.force_timeline(1.0 / config.rates.analysis_hz as f64, &config.plant)?;
    Leg::ALL
        .iter()
        .map(|&leg| {
            let onsets: Vec<f64> = contact_onsets(&tl, leg).into_iter().filter(|&t| t >= from_s).collect();
            let stats = stepping_frequency(&onsets)?;
            let dev = frequency_deviation(&stats, f_target);
            Ok(LegStats {
                leg,
                onsets: onsets.len(),
                mean_hz: stats.mean,
                variance: stats.variance,
                mean_dev: dev.mean,
            })
        })
        .collect()
}

fn rpd_summary(log: &RunLog, from_s: f64, settle_s: f64) -> RpdSummary {
    let dev = |p: &[f64; 4]| {
        let d = wrap_pi(p[0] - p[3]).abs().max(wrap_pi(p[1] - p[2]).abs());
        let l = wrap_pi(p[0] - p[1] - PI).abs().max(wrap_pi(p[2] - p[3] - PI).abs());
        (d, l)
    };
    let mut s = RpdSummary {
        diagonal_max_dev: 0.0,
        lateral_max_dev: 0.0,
        diagonal_max_dev_settled: 0.0,
        lateral_max_dev_settled: 0.0,
        settle_s,
    };
    for row in log.oscillator.iter().filter(|r| r.t >= from_s) {
        let (d, l) = dev(&row.phases);
        s.diagonal_max_dev = s.diagonal_max_dev.max(d);
        s.lateral_max_dev = s.lateral_max_dev.max(l);
        if row.t >= from_s + settle_s {
            s.diagonal_max_dev_settled = s.diagonal_max_dev_settled.max(d);
            s.lateral_max_dev_settled = s.lateral_max_dev_settled.max(l);
        }
    }
    s
}

fn final_rpd(log: &RunLog) -> [[f64; 4]; 4] {
    log.oscillator
        .last()
        .map(|r| relative_phase_differences(&r.phases))
        .unwrap_or_default()
}

/// Closed loop at a fixed commanded frequency with the given feedback source.
fn track(config: &ScenarioConfig, sources: &SourceConfig, rng: &mut ChaCha8Rng) -> Result<(RunLog, Vec<LegStats>)> {
    let scheduler = Scheduler::new(config.rates)?;
    let mut source = grf_sources().create(&config.feedback, sources)?;
    let (log, _) = simulate(
        &scheduler,
        &episode(config, config.f_cmd),
        scheduler.ticks(config.duration()),
        rng,
        source.as_mut(),
        None,
        None,
        config.seed,
    )?;
    let legs = leg_stats(config, &log, config.f_cmd, config.stand_s)?;
    Ok((log, legs))
}

fn tracking_report(config: &ScenarioConfig, log: &RunLog, legs: Vec<LegStats>) -> Result<RunReport> {
    let rf = &legs[Leg::RF.index()];
    let omega: Vec<f64> = log.oscillator.iter().map(|r| r.omega_tilde).collect();
    Ok(RunReport {
        mode: config.mode,
        seed: config.seed,
        duration_s: config.duration(),
        feedback: config.feedback.clone(),
        controller: None,
        target_hz: config.f_cmd,
        sync: SyncReport {
            delta_t_series: Vec::new(),
            delta_t_max: 0.0,
            omega_std: frequency_variance(&omega)?,
            freq_dev_mean: rf.mean_dev,
            freq_dev_var: rf.variance,
            rpd_matrix: final_rpd(log),
        },
        rpd: rpd_summary(log, config.stand_s, config.warmup_s),
        legs,
        phase_error_max: None,
        rewards: BTreeMap::new(),
        objective: None,
        music: None,
        ticks: ticks(log),
        curriculum: None,
    })
}

/// Oscillator and plant at ω̃ = 2π·f_cmd, modulator disabled.
pub fn run_frequency_tracking(config: &ScenarioConfig) -> Result<RunOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (log, legs) = track(config, &SourceConfig::default(), &mut rng)?;
    let report = tracking_report(config, &log, legs)?;
    Ok(RunOutput { report, log, music: None, rewards: Vec::new(), beats: Vec::new() })
}

/// Decodes or synthesizes the configured audio and analyzes it.
pub fn load_music(config: &ScenarioConfig) -> Result<MusicAnalysis> {
    let clip = match &config.audio {
        AudioSource::Synth(spec) => synth_click_track(spec)?,
        AudioSource::Wav(path) => read_wav(path)?,
    };
    analyze_clip(&clip, &config.analysis)
}

fn any_in(times: &[f64], lo: f64, hi: f64) -> bool {
    let i = times.partition_point(|&x| x < lo);
    times.get(i).is_some_and(|&x| x < hi)
}

/// Full hierarchical loop driven by the configured audio.
pub fn run_rhythm_sync(config: &ScenarioConfig) -> Result<RunOutput> {
    let music = load_music(config)?;
    let omega_beat = music.omega_m();
    let omega_m = fold_omega(omega_beat)?;
    let target = BeatTarget::new(music.grid.clone(), omega_m)?;
    let footfalls = target.footfall_times();
    let modulator = Modulator::new(config.modulator.clone(), omega_m)?;
    let mut drive = MusicDrive { target, modulator };

    let scheduler = Scheduler::new(config.rates)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut source = grf_sources().create(&config.feedback, &SourceConfig::default())?;
    let (log, _) = simulate(
        &scheduler,
        &episode(config, omega_m / TAU),
        scheduler.ticks(config.duration()),
        &mut rng,
        source.as_mut(),
        Some(&mut drive),
        None,
        config.seed,
    )?;

    let leg = config.modulator.leg();
    let warm = config.warmup_s;
    let plant_tl = log.plant_timeline(1.0 / config.rates.plant_hz as f64, &config.plant)?;
    let kin = kinematic_beats(&plant_tl, leg).0;
    let alignment = beat_alignment(&kin, &footfalls, warm)?;
    let beats = alignment
        .kinematic
        .iter()
        .zip(&alignment.delta_t)
        .map(|(&t_kinematic, &delta_t)| BeatRow { t_kinematic, delta_t })
        .collect();

    let omega: Vec<f64> = log.commands.iter().filter(|c| c.t >= warm).map(|c| c.omega_tilde).collect();
    let omega_std = frequency_variance(&omega)?;
    let gait_hz = omega_m / TAU;
    let legs = leg_stats(config, &log, gait_hz, warm)?;
    let phase_error_max = log
        .oscillator
        .iter()
        .filter(|r| r.t > warm)
        .filter_map(|r| r.phase_error)
        .fold(0.0, |m: f64, e| m.max(e.abs()));

    // Reward traces at modulator ticks.
    let metrics = reward_metrics();
    let scorers = metrics
        .names()
        .map(|n| metrics.create(n, &config.modulator).map(|m| (n, m)))
        .collect::<Result<Vec<_>>>()?;
    let osc_hz = config.rates.oscillator_hz as f64;
    let plant_hz = config.rates.plant_hz as f64;
    let frame_rate = music.envelope.frame_rate;
    let mut rewards = Vec::with_capacity(log.commands.len());
    for cmd in &log.commands {
        let t = cmd.t;
        let phases = log.oscillator[(t * osc_hz).round() as usize].phases;
        let g_norm = log.plant[(t * plant_hz).round() as usize].g_sim;
        let phi_j = phases[leg.index()];
        let frame = ((t - music.envelope.t0) * frame_rate).round();
        let smoothed_beat = music
            .frames
            .get(frame.max(0.0) as usize)
            .filter(|_| frame >= 0.0)
            .map_or(0.0, |f| f.smoothed_beat);
        let tick = RewardTick {
            t,
            phi_j,
            phi_obs_j: ring(phi_j),
            theta_obs: ring(drive.target.phase(t)?),
            smoothed_beat,
            music_beat: any_in(&footfalls, t - REWARD_TICK_S, t),
            kinematic_beat: any_in(&kin, t - REWARD_TICK_S, t),
            g_norm,
            phases,
        };
        let mut score = BTreeMap::new();
        for (name, m) in &scorers {
            score.insert(*name, m.score(&tick)?);
        }
        rewards.push(RewardRow { t, rhythm: score["rhythm"], r1: score["r1"], r2: score["r2"], phase: score["phase"] });
    }
    let scored: Vec<&RewardRow> = rewards.iter().filter(|r| r.t >= warm).collect();
    let mean_of = |f: fn(&RewardRow) -> f64| scored.iter().map(|r| f(r)).sum::<f64>() / scored.len().max(1) as f64;
    let reward_means: BTreeMap<String, f64> = [
        ("phase", mean_of(|r| r.phase)),
        ("r1", mean_of(|r| r.r1)),
        ("r2", mean_of(|r| r.r2)),
        ("rhythm", mean_of(|r| r.rhythm)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let objective = Objective {
        metric: config.reward.metric_name().into(),
        mean: reward_means[config.reward.metric_name()],
    };

    let target_leg = &legs[leg.index()];
    let report = RunReport {
        mode: config.mode,
        seed: config.seed,
        duration_s: config.duration(),
        feedback: config.feedback.clone(),
        controller: Some(config.modulator.controller.clone()),
        target_hz: gait_hz,
        sync: SyncReport {
            delta_t_series: alignment.delta_t.clone(),
            delta_t_max: alignment.delta_t_max,
            omega_std,
            freq_dev_mean: target_leg.mean_dev,
            freq_dev_var: target_leg.variance,
            rpd_matrix: final_rpd(&log),
        },
        rpd: rpd_summary(&log, config.stand_s, warm),
        legs,
        phase_error_max: Some(phase_error_max),
        rewards: reward_means,
        objective: Some(objective),
        music: Some(MusicSummary {
            tempo_bpm: music.grid.tempo_bpm,
            confidence: music.grid.confidence,
            beats: music.grid.beat_times.len(),
            omega_beat,
            omega_m,
            gait_hz,
            fold_ratio: drive.target.ratio,
        }),
        ticks: ticks(&log),
        curriculum: None,
    };
    Ok(RunOutput { report, log, music: Some(music), rewards, beats })
}

/// Episodes 0..=N blend plant and predicted G with ρ = k/N, refitting the
/// estimator on all data so far after each; the ρ = 1 closed loop on the
/// final model must then pass the frequency-tracking bounds.
pub fn run_estimator_curriculum(config: &ScenarioConfig) -> Result<RunOutput> {
    let n = config.curriculum.iterations;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scheduler = Scheduler::new(config.rates)?;
    let ep = episode(config, config.f_cmd);
    let mut dataset: Vec<(EstimatorInput, [f64; 4])> = Vec::new();
    let mut model: Option<FittedModel> = None;
    let mut records = Vec::with_capacity(n + 1);

    for k in 0..=n {
        let wrap = |e: Error| Error::Curriculum { iteration: k, source: Box::new(e) };
        let curriculum = CurriculumState::new(k, n)?;
        let sources = SourceConfig { model: model.clone(), curriculum };
        let mut source = grf_sources().create("curriculum", &sources)?;
        simulate(
            &scheduler,
            &ep,
            scheduler.ticks(config.duration()),
            &mut rng,
            source.as_mut(),
            None,
            Some(&mut dataset),
            config.seed,
        )
        .map_err(wrap)?;
        let fitted = fit(&dataset).map_err(wrap)?;
        records.push(IterationRecord {
            iteration: k,
            rho: curriculum.rho,
            samples: fitted.samples,
            mse: fitted.mse,
            rank_deficient: fitted.rank_deficient,
        });
        model = Some(fitted);
    }

    let model = model.expect("at least one iteration ran");
    let learned = ScenarioConfig { feedback: "learned".into(), ..config.clone() };
    let sources = SourceConfig { model: Some(model.clone()), curriculum: CurriculumState::fixed(1.0)? };
    let (log, legs) = track(&learned, &sources, &mut rng).map_err(|e| Error::Curriculum { iteration: n, source: Box::new(e) })?;
    let rf = &legs[Leg::RF.index()];
    if !(rf.mean_dev < FREQ_DEV_MEAN_MAX && rf.variance < FREQ_DEV_VAR_MAX) {
        return Err(Error::Curriculum {
            iteration: n,
            source: Box::new(Error::Validation(format!(
                "learned closed loop misses tracking bounds: mean dev {} Hz, variance {} Hz²",
                rf.mean_dev, rf.variance
            ))),
        });
    }
    let (final_mean, final_var) = (rf.mean_dev, rf.variance);
    let mut report = tracking_report(&learned, &log, legs)?;
    report.mode = config.mode;
    report.curriculum = Some(CurriculumReport {
        iterations: records,
        model,
        final_freq_dev_mean: final_mean,
        final_freq_dev_var: final_var,
    });
    Ok(RunOutput { report, log, music: None, rewards: Vec::new(), beats: Vec::new() })
}
