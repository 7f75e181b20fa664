//! Multi-rate loop: oscillators every tick, plant/feedback and modulator on
//! integer sub-multiples, zero-order hold in between.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::Rates;
use super::runlog::{ForceRow, OscillatorRow, PlantRow, RunLog};
use crate::error::{Error, Result};
use crate::estimator::EstimatorInput;
use crate::feedback::{estimator_input, GrfSource, PlantTick};
use crate::modulator::Modulator;
use crate::music::{interpolate_phase, BeatGrid};
use crate::oscillator::{select_params, GaitMode, GrfSample, OscillatorBank};
use crate::phase::{ring, wrap_2pi, wrap_pi, Leg, FOOTFALL_PHASE};
use crate::plant::{grf_from_phases, PlantConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Due {
    pub plant: bool,
    pub modulator: bool,
    pub analysis: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheduler {
    pub rates: Rates,
    plant_every: u64,
    modulator_every: u64,
    analysis_every: u64,
}

impl Scheduler {
    pub fn new(rates: Rates) -> Result<Self> {
        rates.validate()?;
        let o = rates.oscillator_hz as u64;
        Ok(Scheduler {
            rates,
            plant_every: o / rates.plant_hz as u64,
            modulator_every: o / rates.modulator_hz as u64,
            analysis_every: o / rates.analysis_hz as u64,
        })
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rates.oscillator_hz as f64
    }

    /// Time of `tick`, computed from the count so it never drifts.
    pub fn time(&self, tick: u64) -> f64 {
        tick as f64 / self.rates.oscillator_hz as f64
    }

    pub fn ticks(&self, duration_s: f64) -> u64 {
        (duration_s * self.rates.oscillator_hz as f64).round() as u64
    }

    pub fn due(&self, tick: u64) -> Due {
        Due {
            plant: tick.is_multiple_of(self.plant_every),
            modulator: tick.is_multiple_of(self.modulator_every),
            analysis: tick.is_multiple_of(self.analysis_every),
        }
    }
}

/// Footfall target derived from a beat grid. When the gait frequency is an
/// octave multiple of the tempo, the target phase advances `ratio` cycles per beat.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatTarget {
    pub grid: BeatGrid,
    /// Gait frequency over beat frequency, a power of two.
    pub ratio: f64,
}

impl BeatTarget {
    pub fn new(grid: BeatGrid, omega_gait: f64) -> Result<Self> {
        if grid.beat_times.is_empty() {
            return Err(Error::InsufficientData("beat grid is empty".into()));
        }
        let ratio = 2f64.powi((omega_gait / grid.omega()).log2().round() as i32);
        Ok(BeatTarget { grid, ratio })
    }

    /// Continuous beat count: k at the k-th beat, linear in between.
    fn beat_count(&self, t: f64) -> f64 {
        let b = &self.grid.beat_times;
        if b.len() == 1 {
            return (t - b[0]) / self.grid.period();
        }
        let i = b.partition_point(|&x| x <= t);
        let k = i.clamp(1, b.len() - 1) - 1;
        let interval = b[k + 1] - b[k];
        if i == b.len() {
            (b.len() - 1) as f64 + (t - b[b.len() - 1]) / interval
        } else {
            k as f64 + (t - b[k]) / interval
        }
    }

    /// Target footfall phase at `t`; θ_m itself when the ratio is 1.
    pub fn phase(&self, t: f64) -> Result<f64> {
        if self.ratio == 1.0 {
            return interpolate_phase(&self.grid, t);
        }
        Ok(wrap_2pi(FOOTFALL_PHASE + TAU * self.ratio * self.beat_count(t)))
    }

    /// Instants where the target phase equals 3π/2.
    pub fn footfall_times(&self) -> Vec<f64> {
        let b = &self.grid.beat_times;
        if self.ratio <= 1.0 {
            let step = (1.0 / self.ratio).round() as usize;
            return b.iter().copied().step_by(step).collect();
        }
        let r = self.ratio as usize;
        let mut out = Vec::with_capacity(b.len() * r);
        for w in b.windows(2) {
            out.extend((0..r).map(|j| w[0] + (w[1] - w[0]) * j as f64 / r as f64));
        }
        out.extend(b.last());
        out
    }
}

/// Music-driven part of a run: target phase plus modulator.
pub struct MusicDrive {
    pub target: BeatTarget,
    pub modulator: Modulator,
}

/// Per-run settings consumed by the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Episode {
    pub plant: PlantConfig,
    pub v_cmd: f64,
    /// Commanded gait frequency (Hz) used when entering moving mode.
    pub f_cmd: f64,
    pub stand_s: f64,
    pub perturbation_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub tick: u64,
    pub bank: OscillatorBank,
    pub mode: GaitMode,
    /// Feedback G held between plant updates.
    pub g_hold: [f64; 4],
}

impl SimState {
    pub fn standing() -> Self {
        SimState {
            tick: 0,
            bank: OscillatorBank::standing(),
            mode: GaitMode::Stationary,
            g_hold: [0.0; 4],
        }
    }
}

pub struct TickContext<'a> {
    pub scheduler: &'a Scheduler,
    pub episode: &'a Episode,
    pub rng: &'a mut ChaCha8Rng,
    pub source: &'a mut dyn GrfSource,
    pub drive: Option<&'a mut MusicDrive>,
    pub log: &'a mut RunLog,
    /// Collects (estimator input, G_sim) at every plant update when present.
    pub dataset: Option<&'a mut Vec<(EstimatorInput, [f64; 4])>>,
}

/// Advances the loop by one oscillator step.
pub fn scheduler_tick(state: &mut SimState, ctx: &mut TickContext<'_>) -> Result<()> {
    let t = ctx.scheduler.time(state.tick);
    let due = ctx.scheduler.due(state.tick);
    let ep = ctx.episode;

    let v = if t < ep.stand_s { 0.0 } else { ep.v_cmd };
    let mode = GaitMode::from_command(v);
    if mode != state.mode {
        let forces = grf_from_phases(&state.bank.phases, &ep.plant);
        let mut params = select_params(v, ep.f_cmd, &forces)?;
        if mode == GaitMode::Moving && ep.perturbation_rad > 0.0 {
            for p in &mut params {
                p.phi0 = wrap_2pi(p.phi0 + ctx.rng.gen_range(-ep.perturbation_rad..=ep.perturbation_rad));
            }
        }
        state.bank.transition(params)?;
        state.mode = mode;
    }

    let phases = state.bank.phases;
    if due.plant {
        let forces = grf_from_phases(&phases, &ep.plant);
        let sample = GrfSample::new(forces, ep.plant.mass, ep.plant.g, t)?;
        let input = estimator_input(&phases, &ep.plant);
        let g = ctx.source.feedback(&PlantTick {
            t,
            phases,
            forces,
            g_sim: sample.normalized,
            input,
        })?;
        state.g_hold = g;
        ctx.log.plant.push(PlantRow {
            t,
            forces,
            g_sim: sample.normalized,
            g_feedback: g,
        });
        if let Some(ds) = ctx.dataset.as_deref_mut() {
            ds.push((input, sample.normalized));
        }
    }
    if due.analysis {
        ctx.log.forces.push(ForceRow {
            t,
            forces: grf_from_phases(&phases, &ep.plant),
        });
    }

    let mut phase_error = None;
    if let (Some(drive), GaitMode::Moving) = (ctx.drive.as_deref_mut(), state.mode) {
        let leg: Leg = drive.modulator.config().leg();
        let phi_j = phases[leg.index()];
        let theta = drive.target.phase(t)?;
        if due.modulator {
            let cmd = drive.modulator.tick(ring(phi_j), ring(theta), t);
            state.bank.set_omega_tilde(cmd.omega_tilde);
            ctx.log.commands.push(cmd);
        }
        phase_error = Some(wrap_pi(phi_j - theta));
    }
    ctx.log.oscillator.push(OscillatorRow {
        t,
        phases,
        omega_tilde: state.bank.params[0].omega_tilde,
        phase_error,
    });

    state.bank.advance(&state.g_hold, ctx.scheduler.dt())?;
    state.tick += 1;
    Ok(())
}

/// Runs `ticks` steps from a standing start.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    scheduler: &Scheduler,
    episode: &Episode,
    ticks: u64,
    rng: &mut ChaCha8Rng,
    source: &mut dyn GrfSource,
    drive: Option<&mut MusicDrive>,
    dataset: Option<&mut Vec<(EstimatorInput, [f64; 4])>>,
    seed: u64,
) -> Result<(RunLog, SimState)> {
    let mut log = RunLog::new(seed);
    let mut state = SimState::standing();
    let mut ctx = TickContext {
        scheduler,
        episode,
        rng,
        source,
        drive,
        log: &mut log,
        dataset,
    };
    for _ in 0..ticks {
        scheduler_tick(&mut state, &mut ctx)?;
    }
    Ok((log, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::Simulated;
    use crate::modulator::ModulatorConfig;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn episode() -> Episode {
        Episode {
            plant: PlantConfig::default(),
            v_cmd: 0.8,
            f_cmd: 2.0,
            stand_s: 0.0,
            perturbation_rad: 0.0,
        }
    }

    fn run(ticks: u64, drive: Option<&mut MusicDrive>) -> (RunLog, SimState) {
        let sched = Scheduler::new(Rates::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        simulate(&sched, &episode(), ticks, &mut rng, &mut Simulated, drive, None, 0).unwrap()
    }

    #[test]
    fn rate_accounting() {
        let (log, state) = run(1000, None);
        assert_eq!(state.tick, 1000);
        assert_eq!(log.oscillator.len(), 1000);
        assert_eq!(log.plant.len(), 100);
        assert_eq!(log.forces.len(), 500);
        let sched = Scheduler::new(Rates::default()).unwrap();
        assert_eq!((0..1000).filter(|&k| sched.due(k).modulator).count(), 20);
    }

    #[test]
    fn zero_order_hold_of_g() {
        let sched = Scheduler::new(Rates::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ep = episode();
        let mut log = RunLog::new(0);
        let mut state = SimState::standing();
        let mut src = Simulated;
        let mut ctx = TickContext { scheduler: &sched, episode: &ep, rng: &mut rng, source: &mut src, drive: None, log: &mut log, dataset: None };
        for _ in 0..35 {
            scheduler_tick(&mut state, &mut ctx).unwrap();
            let last = ctx.log.plant.last().unwrap().g_feedback;
            assert_eq!(state.g_hold, last);
        }
    }

    #[test]
    fn transition_installs_trot() {
        let (log, _) = run(1, None);
        // standing forces are equal, so legs 2 and 3 take π/2
        assert_eq!(log.oscillator[0].phases, [1.5 * PI, 0.5 * PI, 0.5 * PI, 1.5 * PI]);
        assert_eq!(log.oscillator[0].omega_tilde, TAU * 2.0);
    }

    #[test]
    fn modulator_holds_between_ticks() {
        let grid = BeatGrid { beat_times: (0..20).map(|k| 0.1 + 0.5 * k as f64).collect(), tempo_bpm: 120.0, confidence: 1.0 };
        let target = BeatTarget::new(grid, TAU * 2.0).unwrap();
        let modulator = Modulator::new(ModulatorConfig::default(), TAU * 2.0).unwrap();
        let mut drive = MusicDrive { target, modulator };
        let (log, _) = run(1000, Some(&mut drive));
        assert_eq!(log.commands.len(), 20);
        for row in &log.oscillator {
            let k = (row.t * 20.0 + 1e-9).floor() as usize;
            assert_eq!(row.omega_tilde, log.commands[k].omega_tilde);
        }
    }

    #[test]
    fn beat_target_folding() {
        let grid = BeatGrid { beat_times: vec![0.0, 1.0, 2.0, 3.0], tempo_bpm: 60.0, confidence: 1.0 };
        let double = BeatTarget::new(grid.clone(), TAU * 2.0).unwrap();
        assert_eq!(double.ratio, 2.0);
        assert_eq!(double.footfall_times(), vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        assert!((double.phase(0.5).unwrap() - FOOTFALL_PHASE).abs() < 1e-12);
        assert!((double.phase(0.25).unwrap() - 0.5 * PI).abs() < 1e-12);
        let same = BeatTarget::new(grid.clone(), TAU).unwrap();
        assert_eq!(same.phase(2.0).unwrap(), FOOTFALL_PHASE);
        let half = BeatTarget::new(grid, PI).unwrap();
        assert_eq!(half.footfall_times(), vec![0.0, 2.0]);
        assert!((half.phase(1.0).unwrap() - 0.5 * PI).abs() < 1e-12);
    }
}
