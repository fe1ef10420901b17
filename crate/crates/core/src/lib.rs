//! Simulation and verification toolkit for differentially private
//! prediction with expert advice: a report-noisy-max follow-the-leader
//! learner with epoch doubling and optional Bernoulli resampling, noise
//! families, exact calculators and a command-line front end.

pub mod analysis;
pub mod cli;
pub mod domain;
pub mod engine;
pub mod error;
pub mod harness;
pub mod instances;
pub mod mechanism;
pub mod noise;
pub mod quadrature;

pub use domain::{
    EpochAction, Instance, LossModel, MechanismSpec, NoiseKind, RegretEstimate, RunRecord,
};
pub use engine::{run_rnm_ftnl, trace_rnm_ftnl};
pub use error::{Error, Result};
pub use noise::RngStream;
