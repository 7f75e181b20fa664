//! Sources of the normalized GRF fed back into the oscillators.

use crate::error::Result;
use crate::estimator::{mix, CurriculumState, EstimatorInput, FittedModel, GrfEstimator};
use crate::plant::PlantConfig;
use crate::registry::Registry;

/// Plant state visible to a feedback source at one plant update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantTick {
    pub t: f64,
    pub phases: [f64; 4],
    pub forces: [f64; 4],
    /// Normalized simulated forces G_sim.
    pub g_sim: [f64; 4],
    pub input: EstimatorInput,
}

/// Estimator observation derived from leg phases: stance indicator and stance weight.
pub fn estimator_input(phases: &[f64; 4], plant: &PlantConfig) -> EstimatorInput {
    let stance_weights = phases.map(|p| plant.stance_weight(p));
    EstimatorInput {
        contact_indicators: stance_weights.map(|w| w > 0.0),
        stance_weights,
    }
}

pub trait GrfSource: Send {
    fn name(&self) -> &'static str;
    fn feedback(&mut self, tick: &PlantTick) -> Result<[f64; 4]>;
}

/// Construction parameters shared by all sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub model: Option<FittedModel>,
    pub curriculum: CurriculumState,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            model: None,
            curriculum: CurriculumState { iteration: 0, total: 1, rho: 0.0 },
        }
    }
}

/// G_sim straight from the plant.
pub struct Simulated;

impl GrfSource for Simulated {
    fn name(&self) -> &'static str {
        "simulated"
    }
    fn feedback(&mut self, tick: &PlantTick) -> Result<[f64; 4]> {
        Ok(tick.g_sim)
    }
}

/// Degraded mode: the estimator's constant fallback.
pub struct Constant {
    estimator: GrfEstimator,
}

impl GrfSource for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn feedback(&mut self, tick: &PlantTick) -> Result<[f64; 4]> {
        self.estimator.predict(&tick.input)
    }
}

/// Fitted estimator prediction only.
pub struct Learned {
    estimator: GrfEstimator,
}

impl GrfSource for Learned {
    fn name(&self) -> &'static str {
        "learned"
    }
    fn feedback(&mut self, tick: &PlantTick) -> Result<[f64; 4]> {
        self.estimator.predict(&tick.input)
    }
}

/// min((1 − ρ)·G_sim + ρ·G_pred, 1). At ρ = 0 no fitted model is needed.
pub struct Curriculum {
    estimator: GrfEstimator,
    state: CurriculumState,
}

impl GrfSource for Curriculum {
    fn name(&self) -> &'static str {
        "curriculum"
    }
    fn feedback(&mut self, tick: &PlantTick) -> Result<[f64; 4]> {
        if self.state.rho == 0.0 {
            return Ok(tick.g_sim);
        }
        let pred = self.estimator.predict(&tick.input)?;
        Ok(mix(&tick.g_sim, &pred, &self.state))
    }
}

pub fn grf_sources() -> Registry<dyn GrfSource, SourceConfig> {
    let mut reg: Registry<dyn GrfSource, SourceConfig> = Registry::new("GRF source");
    reg.register("simulated", |_| Ok(Box::new(Simulated)))
        .register("constant", |_| Ok(Box::new(Constant { estimator: GrfEstimator::fallback() })))
        .register("learned", |c| {
            Ok(Box::new(Learned {
                estimator: GrfEstimator::learned(c.model.clone()),
            }))
        })
        .register("curriculum", |c| {
            Ok(Box::new(Curriculum {
                estimator: GrfEstimator::learned(c.model.clone()),
                state: c.curriculum,
            }))
        });
    reg
}
