#![no_std]
extern crate alloc;

pub mod config;
pub mod exec;
pub mod fixpoint;
pub mod error;
pub mod model;
pub mod observables;
pub mod j2;
pub mod logic;
pub mod scalar;
pub mod stats;
pub mod trace;
pub mod transport;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use model::{
    advance, step, time_to_first_expiry, transition, validate_model, EventId, Expiry, GeneralizedState, GsmpModel,
    ModelBuilder, ResetDistribution, ResetKey, Severity, StateDef, StateId, Transition, ValidationReport, Violation,
};
pub use trace::{delay, sample_trace, DelayPrefix, Segment, TimedTrace};
