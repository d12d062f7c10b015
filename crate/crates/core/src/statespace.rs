//! Linear parameter dynamics `θ_t = G θ_{t−1} + B u_{t−1} + ω_t` and the exact
//! prediction step for the parameter belief.

use crate::error::{Error, Result};
use crate::linalg::{enforce_psd, Matrix, Vector};

/// Mean and covariance of the parameters after incorporating observations up
/// to `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    mean: Vector,
    cov: Matrix,
    step: u64,
}

impl Belief {
    /// Validates dimensions, re-symmetrizes `cov` and applies the PSD repair
    /// policy.
    pub fn new(mean: Vector, cov: Matrix, step: u64) -> Result<Self> {
        check_square("belief covariance", &cov, mean.len())?;
        let cov = enforce_psd(cov, "belief covariance")?;
        Ok(Self { mean, cov, step })
    }

    /// `N(0, scale · I)` at step 0.
    pub fn isotropic(dim: usize, scale: f64) -> Result<Self> {
        Self::new(Vector::zeros(dim), Matrix::identity(dim, dim) * scale, 0)
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn into_parts(self) -> (Vector, Matrix, u64) {
        (self.mean, self.cov, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Transition {
    Identity,
    Dense(Matrix),
}

/// One step of parameter dynamics: transition `G`, the pre-multiplied input
/// term `B u`, and process-noise covariance `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSpec {
    transition: Transition,
    input_effect: Vector,
    process_noise: Matrix,
}

impl DynamicsSpec {
    pub fn new(transition: Matrix, input_effect: Vector, process_noise: Matrix) -> Result<Self> {
        let k = input_effect.len();
        check_square("transition", &transition, k)?;
        check_square("process noise", &process_noise, k)?;
        let process_noise = enforce_psd(process_noise, "process noise")?;
        let transition = if transition == Matrix::identity(k, k) {
            Transition::Identity
        } else {
            Transition::Dense(transition)
        };
        Ok(Self {
            transition,
            input_effect,
            process_noise,
        })
    }

    /// `G = I`, `B u = 0`, `W = 0`: parameters held fixed.
    pub fn static_params(dim: usize) -> Self {
        Self {
            transition: Transition::Identity,
            input_effect: Vector::zeros(dim),
            process_noise: Matrix::zeros(dim, dim),
        }
    }

    /// `G = I`, `B u = 0` with the given diffusion covariance.
    pub fn random_walk(process_noise: Matrix) -> Result<Self> {
        let k = process_noise.nrows();
        check_square("process noise", &process_noise, k)?;
        Ok(Self {
            transition: Transition::Identity,
            input_effect: Vector::zeros(k),
            process_noise: enforce_psd(process_noise, "process noise")?,
        })
    }

    pub fn dim(&self) -> usize {
        self.input_effect.len()
    }

    pub fn transition(&self) -> Matrix {
        match &self.transition {
            Transition::Identity => Matrix::identity(self.dim(), self.dim()),
            Transition::Dense(g) => g.clone(),
        }
    }

    pub fn input_effect(&self) -> &Vector {
        &self.input_effect
    }

    pub fn process_noise(&self) -> &Matrix {
        &self.process_noise
    }
}

/// Mean `a_t` and covariance `R_t` of the parameters before the step-`t`
/// observation is seen.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorPrediction {
    mean: Vector,
    cov: Matrix,
    step: u64,
}

impl PriorPrediction {
    pub fn new(mean: Vector, cov: Matrix, step: u64) -> Result<Self> {
        check_square("prior covariance", &cov, mean.len())?;
        let cov = enforce_psd(cov, "prior covariance")?;
        Ok(Self { mean, cov, step })
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

impl From<Belief> for PriorPrediction {
    /// Treats a posterior as the prior of the same step (no dynamics).
    fn from(b: Belief) -> Self {
        Self {
            mean: b.mean,
            cov: b.cov,
            step: b.step,
        }
    }
}

/// Distribution of the signal `λ = X' θ` under the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPrediction {
    /// `f = X' a`.
    pub mean: Vector,
    /// `Ω = X' R X`.
    pub cov: Matrix,
    /// `X' R`, the signal/parameter cross-covariance.
    pub cross_cov: Matrix,
}

/// Prediction step: `a = G m + B u`, `R = G C G' + W`.
pub fn predict(belief: &Belief, dynamics: &DynamicsSpec) -> Result<PriorPrediction> {
    if belief.dim() != dynamics.dim() {
        return Err(Error::DimensionMismatch {
            context: "predict",
            expected: belief.dim(),
            found: dynamics.dim(),
        });
    }
    let (mean, cov) = match &dynamics.transition {
        Transition::Identity => (
            &belief.mean + &dynamics.input_effect,
            &belief.cov + &dynamics.process_noise,
        ),
        Transition::Dense(g) => (
            g * &belief.mean + &dynamics.input_effect,
            g * &belief.cov * g.transpose() + &dynamics.process_noise,
        ),
    };
    Ok(PriorPrediction {
        mean,
        cov: enforce_psd(cov, "prior covariance")?,
        step: belief.step + 1,
    })
}

/// Signal moments for predictor `X` (k×c): `f = X'a`, `Ω = X'RX`, cross `X'R`.
pub fn predict_signal(prior: &PriorPrediction, predictor: &Matrix) -> Result<SignalPrediction> {
    if predictor.nrows() != prior.dim() {
        return Err(Error::DimensionMismatch {
            context: "predictor rows",
            expected: prior.dim(),
            found: predictor.nrows(),
        });
    }
    let xt = predictor.transpose();
    let cross_cov = &xt * &prior.cov;
    let mut cov = &cross_cov * predictor;
    crate::linalg::symmetrize(&mut cov);
    Ok(SignalPrediction {
        mean: &xt * &prior.mean,
        cov,
        cross_cov,
    })
}

fn check_square(context: &'static str, m: &Matrix, dim: usize) -> Result<()> {
    if m.nrows() != dim {
        return Err(Error::DimensionMismatch {
            context,
            expected: dim,
            found: m.nrows(),
        });
    }
    if m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context,
            expected: dim,
            found: m.ncols(),
        });
    }
    Ok(())
}
