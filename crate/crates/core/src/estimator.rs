//! Normalized-GRF estimator and curriculum mixing.
//!
//! The learned model is per-leg linear least squares on contact-masked
//! features. The load-share feature `xᵢ = Iᵢ·wᵢ / Σₖ Iₖ·wₖ` makes the surrogate
//! plant exactly representable, so a clean fit reaches round-off MSE.

use log::warn;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::FLIGHT_EPS;

/// Constant feedback used when no force estimate is available.
pub const FALLBACK_G: f64 = 0.25;
/// Minimum training set size.
pub const MIN_SAMPLES: usize = 100;
/// Ridge added to a rank-deficient normal matrix.
pub const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorInput {
    pub contact_indicators: [bool; 4],
    /// Plant-visible stance weights, each in `[0, 1]`.
    pub stance_weights: [f64; 4],
}

impl EstimatorInput {
    pub fn validate(&self) -> Result<()> {
        if self.stance_weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::RejectedInput(format!(
                "stance weights {:?} outside [0, 1]",
                self.stance_weights
            )));
        }
        Ok(())
    }

    /// Per-leg `[xᵢ, Iᵢ, 1]`.
    fn features(&self) -> [Vector3<f64>; 4] {
        let masked: [f64; 4] = std::array::from_fn(|i| {
            if self.contact_indicators[i] {
                self.stance_weights[i]
            } else {
                0.0
            }
        });
        let total: f64 = masked.iter().sum();
        std::array::from_fn(|i| {
            let share = if total > FLIGHT_EPS { masked[i] / total } else { 0.0 };
            let ind = if self.contact_indicators[i] { 1.0 } else { 0.0 };
            Vector3::new(share, ind, 1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub iteration: usize,
    pub total: usize,
    pub rho: f64,
}

impl CurriculumState {
    pub fn new(iteration: usize, total: usize) -> Result<Self> {
        if total == 0 || iteration > total {
            return Err(Error::Config(format!(
                "curriculum iteration {iteration} of {total} is out of range"
            )));
        }
        Ok(CurriculumState {
            iteration,
            total,
            rho: iteration as f64 / total as f64,
        })
    }

    /// Fixed mixing weight outside a curriculum schedule.
    pub fn fixed(rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Config(format!("rho {rho} outside [0, 1]")));
        }
        Ok(CurriculumState { iteration: 0, total: 0, rho })
    }
}

/// `min((1 − ρ)·G_sim + ρ·G_pred, 1)`.
pub fn mix(g_sim: &[f64; 4], g_pred: &[f64; 4], curriculum: &CurriculumState) -> [f64; 4] {
    let rho = curriculum.rho;
    std::array::from_fn(|i| ((1.0 - rho) * g_sim[i] + rho * g_pred[i]).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    /// Per-leg coefficients on `[share, indicator, 1]`.
    pub coefficients: [[f64; 3]; 4],
    /// Training-set mean squared residual.
    pub mse: f64,
    pub samples: usize,
    /// Set when the ridge-regularized solve was needed.
    pub rank_deficient: bool,
}

impl FittedModel {
    fn predict(&self, input: &EstimatorInput) -> [f64; 4] {
        let feats = input.features();
        std::array::from_fn(|i| {
            if !input.contact_indicators[i] {
                return 0.0;
            }
            let beta = Vector3::from(self.coefficients[i]);
            beta.dot(&feats[i]).clamp(0.0, 1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorMode {
    Learned,
    Fallback { constant: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfEstimator {
    pub mode: EstimatorMode,
    pub model: Option<FittedModel>,
}

impl GrfEstimator {
    pub fn learned(model: Option<FittedModel>) -> Self {
        GrfEstimator {
            mode: EstimatorMode::Learned,
            model,
        }
    }

    pub fn fallback() -> Self {
        GrfEstimator {
            mode: EstimatorMode::Fallback { constant: FALLBACK_G },
            model: None,
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.model.is_some()
    }

    pub fn predict(&self, input: &EstimatorInput) -> Result<[f64; 4]> {
        match self.mode {
            EstimatorMode::Fallback { constant } => Ok([constant; 4]),
            EstimatorMode::Learned => {
                input.validate()?;
                let model = self.model.as_ref().ok_or(Error::NotFitted)?;
                Ok(model.predict(input))
            }
        }
    }
}

/// Closed-form per-leg least squares over `(input, G_sim)` pairs.
pub fn fit(dataset: &[(EstimatorInput, [f64; 4])]) -> Result<FittedModel> {
    if dataset.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "estimator fit needs at least {MIN_SAMPLES} samples, got {}",
            dataset.len()
        )));
    }
    let mut normal = [Matrix3::<f64>::zeros(); 4];
    let mut rhs = [Vector3::<f64>::zeros(); 4];
    for (input, target) in dataset {
        input.validate()?;
        for (i, x) in input.features().iter().enumerate() {
            normal[i] += x * x.transpose();
            rhs[i] += x * target[i];
        }
    }

    let mut coefficients = [[0.0; 3]; 4];
    let mut rank_deficient = false;
    for i in 0..4 {
        let sv = normal[i].singular_values();
        let smax = sv.max();
        let full_rank = smax > 0.0 && sv.min() > smax * 1e-12;
        let a = if full_rank {
            normal[i]
        } else {
            rank_deficient = true;
            normal[i] + Matrix3::identity() * RIDGE
        };
        let beta = a
            .cholesky()
            .map(|c| c.solve(&rhs[i]))
            .or_else(|| a.lu().solve(&rhs[i]))
            .ok_or_else(|| Error::Validation(format!("normal equations for leg {} are singular", i + 1)))?;
        coefficients[i] = [beta[0], beta[1], beta[2]];
    }
    if rank_deficient {
        warn!("estimator design is rank deficient; used ridge {RIDGE}");
    }

    let mut model = FittedModel {
        coefficients,
        mse: 0.0,
        samples: dataset.len(),
        rank_deficient,
    };
    let sse: f64 = dataset
        .iter()
        .map(|(input, target)| {
            let p = model.predict(input);
            (0..4).map(|i| (p[i] - target[i]).powi(2)).sum::<f64>()
        })
        .sum();
    model.mse = sse / (4 * dataset.len()) as f64;
    Ok(model)
}
