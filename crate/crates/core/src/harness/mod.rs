//! Scenario harness: configuration, multi-rate loop, scenarios and artifacts.

pub mod config;
pub mod output;
pub mod runlog;
pub mod scenarios;
pub mod scheduler;

pub use config::{AudioSource, Mode, Rates, ScenarioConfig};
pub use output::write_outputs;
pub use scenarios::{run, run_estimator_curriculum, run_frequency_tracking, run_rhythm_sync, RunOutput, RunReport};
pub use scheduler::{scheduler_tick, simulate, BeatTarget, Episode, MusicDrive, Scheduler, SimState, TickContext};
