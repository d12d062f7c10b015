//! Online Bayesian filtering for regression models whose parameters drift
//! over time, with exponential-family responses.
//!
//! The filter keeps a Gaussian belief over the parameter vector and, for each
//! observation, runs a prediction step through linear dynamics followed by a
//! second-order update around the predicted signal. With a Gaussian response
//! this is exactly the Kalman filter; with other responses it is the extended
//! Kalman filter for a dynamic GLM.
//!
//! The crate is `no_std` and needs only `alloc`.
//!
//! * [`expfam`]: observation models (Gaussian, Poisson, exponential,
//!   Bernoulli/logit, independent products).
//! * [`statespace`]: beliefs, dynamics and the prediction step.
//! * [`filter`]: the estimation step in naive, stable and scalar forms, plus
//!   the exact Kalman update.
//! * [`bandit`]: contexts, Thompson sampling and regret.
//! * [`sim`]: the seeded bandit simulation.

#![no_std]

extern crate alloc;

pub mod bandit;
pub mod error;
pub mod expfam;
pub mod filter;
pub mod linalg;
pub mod sim;
pub mod statespace;

pub use error::{Error, Result};
pub use expfam::{Model, ObservationModel, SignalDerivatives};
pub use filter::{
    kalman_update, update, update_naive, update_stable, update_univariate, Observation,
    UpdateDiagnostics,
};
pub use linalg::{Matrix, Vector};
pub use statespace::{predict, predict_signal, Belief, DynamicsSpec, PriorPrediction, SignalPrediction};
