//! Rhythm-synchronized quadruped gait engine.
//!
//! Four GRF-feedback phase oscillators drive a surrogate stance plant; a
//! music pipeline turns audio into beat phase; a phase modulator binds one
//! leg's footfall to the beat.

// `!(x > 0.0)` comparisons are deliberate: they reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Leg-indexed loops mirror the per-leg math and often touch several arrays.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod estimator;
pub mod feedback;
pub mod harness;
pub mod metrics;
pub mod modulator;
pub mod music;
pub mod oscillator;
pub mod phase;
pub mod plant;
pub mod registry;
pub mod rewards;

pub use error::{Error, Result};
pub use phase::Leg;
