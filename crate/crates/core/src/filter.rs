//! Estimation step: folds one observation into the prior `(a_t, R_t)` to give
//! the posterior `(m_t, C_t)`.
//!
//! The log-likelihood is expanded to second order around the predicted signal
//! `f_t = X' a_t`, with gradient `g` and Hessian `H` taken from the model:
//!
//! ```text
//! Q = (−H)⁻¹ + Ω          C = R − R X Q⁻¹ X' R          m = a + C X g
//! ```
//!
//! Three routes compute the same posterior:
//! * [`update_naive`] forms `(−H)⁻¹` and solves against `Q`;
//! * [`update_stable`] uses `Q⁻¹ = E − E Ω (I + E Ω)⁻¹ E` with `E = −H`, which
//!   never inverts the Hessian;
//! * [`update_univariate`] handles a scalar signal with a rank-one update and
//!   no solves at all.
//!
//! [`update`] picks between the first two, and [`kalman_update`] is the exact
//! linear-Gaussian posterior.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::expfam::{ObservationModel, SignalDerivatives};
use crate::linalg::{
    condition_estimate, min_abs_eigenvalue, solve_general, solve_spd, symmetrize,
    Matrix, Vector,
};
use crate::statespace::{predict, predict_signal, Belief, DynamicsSpec, PriorPrediction};

/// Below this smallest Hessian eigenvalue magnitude, [`update`] takes the
/// stable route.
pub const STABLE_SWITCH_THRESHOLD: f64 = 1e-8;

/// One round's predictor matrix `X` (k×c) and response `y` (length d).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub predictor: Matrix,
    pub response: Vector,
}

impl Observation {
    pub fn new(predictor: Matrix, response: Vector) -> Self {
        Self {
            predictor,
            response,
        }
    }

    /// Single-column predictor with a scalar response.
    pub fn scalar(x: Vector, y: f64) -> Self {
        let k = x.len();
        Self {
            predictor: Matrix::from_column_slice(k, 1, x.as_slice()),
            response: Vector::from_element(1, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDiagnostics {
    /// `f_t` after any domain clamp.
    pub predicted_signal: Vector,
    pub gradient_norm: f64,
    pub hessian_condition_estimate: f64,
    /// True when the stable route or a domain clamp was engaged.
    pub stabilized: bool,
    /// True when the predicted signal was clamped into the model domain.
    pub clamped: bool,
}

struct Linearized {
    cross_cov: Matrix,
    signal_cov: Matrix,
    derivs: SignalDerivatives,
    diagnostics: UpdateDiagnostics,
}

fn check_observation<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    obs: &Observation,
    model: &M,
) -> Result<()> {
    if obs.predictor.nrows() != prior.dim() {
        return Err(Error::DimensionMismatch {
            context: "predictor rows",
            expected: prior.dim(),
            found: obs.predictor.nrows(),
        });
    }
    if obs.predictor.ncols() != model.signal_dim() {
        return Err(Error::DimensionMismatch {
            context: "predictor columns",
            expected: model.signal_dim(),
            found: obs.predictor.ncols(),
        });
    }
    model.check_response(&obs.response)
}

fn clamp_and_check<M: ObservationModel + ?Sized>(
    model: &M,
    signal: &mut Vector,
) -> Result<bool> {
    let clamped = model.clamp_signal(signal);
    if model.check_signal(signal).is_err() {
        return Err(Error::Filtering {
            reason: "predicted signal outside the model domain after clamping",
            diagnostics: UpdateDiagnostics {
                predicted_signal: signal.clone(),
                gradient_norm: f64::NAN,
                hessian_condition_estimate: f64::NAN,
                stabilized: clamped,
                clamped,
            },
        });
    }
    Ok(clamped)
}

fn linearize<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    obs: &Observation,
    model: &M,
) -> Result<Linearized> {
    check_observation(prior, obs, model)?;
    let signal = predict_signal(prior, &obs.predictor)?;
    let mut f = signal.mean;
    let clamped = clamp_and_check(model, &mut f)?;
    let derivs = model.signal_derivatives(&obs.response, &f)?;
    let diagnostics = UpdateDiagnostics {
        gradient_norm: derivs.gradient.norm(),
        hessian_condition_estimate: condition_estimate(&derivs.hessian),
        predicted_signal: f,
        stabilized: clamped,
        clamped,
    };
    Ok(Linearized {
        cross_cov: signal.cross_cov,
        signal_cov: signal.cov,
        derivs,
        diagnostics,
    })
}

/// `C = R − (X'R)' Q⁻¹ (X'R)`, `m = a + C X g`.
fn finish(
    prior: &PriorPrediction,
    predictor: &Matrix,
    cross_cov: &Matrix,
    q_inv_cross: &Matrix,
    gradient: &Vector,
) -> Result<Belief> {
    let mut cov = prior.cov() - cross_cov.transpose() * q_inv_cross;
    symmetrize(&mut cov);
    let mean = prior.mean() + &cov * (predictor * gradient);
    Belief::new(mean, cov, prior.step())
}

/// Posterior by the direct route: forms `(−H)⁻¹ + Ω` and solves against it.
pub fn update_naive<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    obs: &Observation,
    model: &M,
) -> Result<(Belief, UpdateDiagnostics)> {
    naive_from(prior, obs, linearize(prior, obs, model)?)
}

fn naive_from(
    prior: &PriorPrediction,
    obs: &Observation,
    lin: Linearized,
) -> Result<(Belief, UpdateDiagnostics)> {
    let c = lin.signal_cov.nrows();
    let neg_hessian = -&lin.derivs.hessian;
    let curvature_inv = solve_general(&neg_hessian, &Matrix::identity(c, c), "negative Hessian")
        .map_err(|_| Error::SingularInnovation)?;
    let mut q = curvature_inv + &lin.signal_cov;
    symmetrize(&mut q);
    let q_inv_cross =
        solve_general(&q, &lin.cross_cov, "Q").map_err(|_| Error::SingularInnovation)?;
    let belief = finish(
        prior,
        &obs.predictor,
        &lin.cross_cov,
        &q_inv_cross,
        &lin.derivs.gradient,
    )?;
    Ok((belief, lin.diagnostics))
}

/// Posterior by the Woodbury route `Q⁻¹ = E − E Ω (I + E Ω)⁻¹ E`, `E = −H`.
pub fn update_stable<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    obs: &Observation,
    model: &M,
) -> Result<(Belief, UpdateDiagnostics)> {
    stable_from(prior, obs, linearize(prior, obs, model)?)
}

fn stable_from(
    prior: &PriorPrediction,
    obs: &Observation,
    mut lin: Linearized,
) -> Result<(Belief, UpdateDiagnostics)> {
    lin.diagnostics.stabilized = true;
    let c = lin.signal_cov.nrows();
    let e = -&lin.derivs.hessian;
    let e_omega = &e * &lin.signal_cov;
    let inner = Matrix::identity(c, c) + &e_omega;
    let z = match solve_general(&inner, &e, "I + EΩ") {
        Ok(z) => z,
        Err(_) => {
            let mut diagnostics = lin.diagnostics;
            diagnostics.hessian_condition_estimate = condition_estimate(&inner);
            return Err(Error::Filtering {
                reason: "solve against (I − HΩ) failed",
                diagnostics,
            });
        }
    };
    let mut q_inv = &e - &e_omega * z;
    symmetrize(&mut q_inv);
    let q_inv_cross = q_inv * &lin.cross_cov;
    let belief = finish(
        prior,
        &obs.predictor,
        &lin.cross_cov,
        &q_inv_cross,
        &lin.derivs.gradient,
    )?;
    Ok((belief, lin.diagnostics))
}

/// Estimation step. Uses [`update_stable`] when the Hessian is close to
/// singular and [`update_naive`] otherwise.
pub fn update<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    obs: &Observation,
    model: &M,
) -> Result<(Belief, UpdateDiagnostics)> {
    let lin = linearize(prior, obs, model)?;
    if min_abs_eigenvalue(&lin.derivs.hessian) < STABLE_SWITCH_THRESHOLD {
        stable_from(prior, obs, lin)
    } else {
        naive_from(prior, obs, lin)
    }
}

/// Scalar-signal update with a rank-one correction:
/// `C = R + H/(1 − H x'Rx) (Rx)(Rx)'`, `m = a + C x g`.
pub fn update_univariate<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    x: &Vector,
    y: f64,
    model: &M,
) -> Result<(Belief, UpdateDiagnostics)> {
    if model.signal_dim() != 1 || model.response_dim() != 1 {
        return Err(Error::DimensionMismatch {
            context: "univariate update requires a scalar signal and response",
            expected: 1,
            found: model.signal_dim().max(model.response_dim()),
        });
    }
    if x.len() != prior.dim() {
        return Err(Error::DimensionMismatch {
            context: "predictor rows",
            expected: prior.dim(),
            found: x.len(),
        });
    }
    let response = Vector::from_element(1, y);
    model.check_response(&response)?;
    let mut f = Vector::from_element(1, x.dot(prior.mean()));
    let clamped = clamp_and_check(model, &mut f)?;
    let d = model.signal_derivatives(&response, &f)?;
    let (g, h) = (d.gradient[0], d.hessian[(0, 0)]);

    let rx = prior.cov() * x;
    let spread = x.dot(&rx);
    let denom = 1.0 - h * spread;
    let diagnostics = UpdateDiagnostics {
        predicted_signal: f,
        gradient_norm: g.abs(),
        hessian_condition_estimate: if h == 0.0 { f64::INFINITY } else { 1.0 },
        stabilized: clamped,
        clamped,
    };
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Filtering {
            reason: "non-positive denominator 1 − H x'Rx",
            diagnostics,
        });
    }
    let mut cov = prior.cov().clone();
    cov.ger(h / denom, &rx, &rx, 1.0);
    symmetrize(&mut cov);
    let mean = prior.mean() + &cov * x * g;
    Ok((Belief::new(mean, cov, prior.step())?, diagnostics))
}

/// Exact Gaussian posterior for `y ~ N(X'θ, Σ)`:
/// `Q = Σ + X'RX`, `C = R − RXQ⁻¹X'R`, `m = a + C X Σ⁻¹ (y − X'a)`.
pub fn kalman_update(
    prior: &PriorPrediction,
    obs: &Observation,
    noise_cov: &Matrix,
) -> Result<Belief> {
    let d = obs.response.len();
    if obs.predictor.nrows() != prior.dim() {
        return Err(Error::DimensionMismatch {
            context: "predictor rows",
            expected: prior.dim(),
            found: obs.predictor.nrows(),
        });
    }
    if obs.predictor.ncols() != d || noise_cov.nrows() != d || noise_cov.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "noise covariance",
            expected: obs.predictor.ncols(),
            found: noise_cov.nrows(),
        });
    }
    let signal = predict_signal(prior, &obs.predictor)?;
    let mut q = noise_cov + &signal.cov;
    symmetrize(&mut q);
    let q_inv_cross = solve_spd(&q, &signal.cross_cov, "Q")?;
    let mut cov = prior.cov() - signal.cross_cov.transpose() * q_inv_cross;
    symmetrize(&mut cov);
    let innovation = &obs.response - &signal.mean;
    let weighted = solve_spd(
        noise_cov,
        &Matrix::from_column_slice(d, 1, innovation.as_slice()),
        "noise covariance",
    )?;
    let mean = prior.mean() + &cov * (&obs.predictor * weighted.column(0));
    Belief::new(mean, cov, prior.step())
}

/// One predict-then-update cycle.
pub fn step<M: ObservationModel + ?Sized>(
    belief: &Belief,
    dynamics: &DynamicsSpec,
    obs: &Observation,
    model: &M,
) -> Result<(Belief, UpdateDiagnostics)> {
    let prior = predict(belief, dynamics)?;
    update(&prior, obs, model)
}

/// Checks `later ⪯ earlier` in the Loewner order within `tol`.
pub fn loewner_le(later: &Matrix, earlier: &Matrix, tol: f64) -> bool {
    let diff = earlier - later;
    if Cholesky::new(diff.clone()).is_some() {
        return true;
    }
    crate::linalg::min_eigenvalue(&diff) >= -tol
}
