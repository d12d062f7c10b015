//! Observation models in natural exponential form.
//!
//! A model maps a signal `λ` (length `signal_dim`) to a distribution over a
//! response `y` (length `response_dim`) whose log-likelihood is
//! `η' Φ⁻¹ y − b(η) + c(y)`. All shipped models use the canonical link, so the
//! natural parameter equals the signal and the signal derivatives reduce to
//! `Φ⁻¹ (y − h(λ))` and `−Φ⁻¹ Σ_y(λ) Φ⁻¹`.
//!
//! Log-likelihoods drop the `c(y)` term. The dropped constant is listed on each
//! model so values stay comparable across calls with the same `y`.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::Cholesky;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Poisson as PoissonDist, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{block_diagonal, Matrix, Vector};

/// Smallest signal accepted by the exponential model.
pub const EXPONENTIAL_MIN_SIGNAL: f64 = 1e-8;
/// Exponent ceiling for the Poisson mean; larger signals saturate.
pub const POISSON_EXP_CEILING: f64 = 700.0;

/// First and second derivatives of the log-likelihood with respect to the
/// signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDerivatives {
    pub gradient: Vector,
    pub hessian: Matrix,
}

/// Contract every response distribution satisfies.
///
/// Implementations are immutable and all methods are pure.
pub trait ObservationModel: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn response_dim(&self) -> usize;
    fn signal_dim(&self) -> usize;
    /// The nuisance matrix `Φ`.
    fn nuisance(&self) -> Matrix;
    /// True when the natural parameter equals the signal.
    fn is_canonical(&self) -> bool;

    fn check_signal(&self, signal: &Vector) -> Result<()>;
    fn check_response(&self, y: &Vector) -> Result<()>;

    fn log_likelihood(&self, y: &Vector, signal: &Vector) -> Result<f64>;
    /// `h(λ) = E[y | λ]`.
    fn response_mean(&self, signal: &Vector) -> Result<Vector>;
    /// `Σ_y(λ)`.
    fn response_cov(&self, signal: &Vector) -> Result<Matrix>;
    fn signal_derivatives(&self, y: &Vector, signal: &Vector) -> Result<SignalDerivatives>;
    /// The log-partition function `b(η)` at a natural parameter.
    fn log_partition(&self, natural: &Vector) -> Result<f64>;

    /// Moves a predicted signal into the region where the derivatives are
    /// defined. Returns true if anything changed.
    fn clamp_signal(&self, _signal: &mut Vector) -> bool {
        false
    }

    fn sample_response(&self, signal: &Vector, rng: &mut dyn RngCore) -> Result<Vector>;
}

/// `1 / (1 + e^{-x})` without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow for large `|x|`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// Scalar canonical family; the blanket impl below lifts it to the
/// vector-valued [`ObservationModel`] contract.
trait ScalarFamily: fmt::Debug + Send + Sync {
    const NAME: &'static str;
    /// Scalar nuisance `φ`.
    fn phi(&self) -> f64;
    fn check_signal_scalar(&self, _l: f64) -> Result<()> {
        Ok(())
    }
    fn check_response_scalar(&self, y: f64) -> Result<()>;
    fn log_likelihood_scalar(&self, y: f64, l: f64) -> f64;
    fn mean_scalar(&self, l: f64) -> f64;
    fn variance_scalar(&self, l: f64) -> f64;
    fn log_partition_scalar(&self, eta: f64) -> Result<f64>;
    fn clamp_scalar(&self, _l: &mut f64) -> bool {
        false
    }
    fn sample_scalar(&self, l: f64, rng: &mut dyn RngCore) -> Result<f64>;
}

impl<T: ScalarFamily> ObservationModel for T {
    fn name(&self) -> &'static str {
        T::NAME
    }

    fn response_dim(&self) -> usize {
        1
    }

    fn signal_dim(&self) -> usize {
        1
    }

    fn nuisance(&self) -> Matrix {
        Matrix::from_element(1, 1, self.phi())
    }

    fn is_canonical(&self) -> bool {
        true
    }

    fn check_signal(&self, signal: &Vector) -> Result<()> {
        check_dim("signal", 1, signal.len())?;
        if !signal[0].is_finite() {
            return Err(Error::SignalDomain {
                model: T::NAME,
                detail: format!("non-finite signal {}", signal[0]),
            });
        }
        self.check_signal_scalar(signal[0])
    }

    fn check_response(&self, y: &Vector) -> Result<()> {
        check_dim("response", 1, y.len())?;
        self.check_response_scalar(y[0])
    }

    fn log_likelihood(&self, y: &Vector, signal: &Vector) -> Result<f64> {
        self.check_signal(signal)?;
        self.check_response(y)?;
        Ok(self.log_likelihood_scalar(y[0], signal[0]))
    }

    fn response_mean(&self, signal: &Vector) -> Result<Vector> {
        self.check_signal(signal)?;
        Ok(Vector::from_element(1, self.mean_scalar(signal[0])))
    }

    fn response_cov(&self, signal: &Vector) -> Result<Matrix> {
        self.check_signal(signal)?;
        Ok(Matrix::from_element(1, 1, self.variance_scalar(signal[0])))
    }

    fn signal_derivatives(&self, y: &Vector, signal: &Vector) -> Result<SignalDerivatives> {
        self.check_signal(signal)?;
        self.check_response(y)?;
        let l = signal[0];
        let phi = self.phi();
        let gradient = (y[0] - self.mean_scalar(l)) / phi;
        let hessian = -self.variance_scalar(l) / (phi * phi);
        Ok(SignalDerivatives {
            gradient: Vector::from_element(1, gradient),
            hessian: Matrix::from_element(1, 1, hessian),
        })
    }

    fn log_partition(&self, natural: &Vector) -> Result<f64> {
        check_dim("natural parameter", 1, natural.len())?;
        self.log_partition_scalar(natural[0])
    }

    fn clamp_signal(&self, signal: &mut Vector) -> bool {
        if signal.len() != 1 {
            return false;
        }
        self.clamp_scalar(&mut signal[0])
    }

    fn sample_response(&self, signal: &Vector, rng: &mut dyn RngCore) -> Result<Vector> {
        self.check_signal(signal)?;
        Ok(Vector::from_element(1, self.sample_scalar(signal[0], rng)?))
    }
}

/// Poisson counts with mean `e^λ`. Drops `−log(y!)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Poisson;

impl ScalarFamily for Poisson {
    const NAME: &'static str = "poisson";

    fn phi(&self) -> f64 {
        1.0
    }

    fn check_response_scalar(&self, y: f64) -> Result<()> {
        if y.is_finite() && y >= 0.0 && y.fract() == 0.0 {
            Ok(())
        } else {
            Err(Error::ResponseDomain {
                model: Self::NAME,
                detail: format!("expected a non-negative integer count, got {y}"),
            })
        }
    }

    fn log_likelihood_scalar(&self, y: f64, l: f64) -> f64 {
        y * l - self.mean_scalar(l)
    }

    fn mean_scalar(&self, l: f64) -> f64 {
        l.min(POISSON_EXP_CEILING).exp()
    }

    fn variance_scalar(&self, l: f64) -> f64 {
        self.mean_scalar(l)
    }

    fn log_partition_scalar(&self, eta: f64) -> Result<f64> {
        Ok(self.mean_scalar(eta))
    }

    fn sample_scalar(&self, l: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let mean = self.mean_scalar(l);
        let dist = PoissonDist::new(mean).map_err(|_| Error::SignalDomain {
            model: Self::NAME,
            detail: format!("cannot sample with mean {mean}"),
        })?;
        Ok(dist.sample(rng))
    }
}

/// Exponential waiting times with rate `λ` (mean `1/λ`), `φ = −1`.
/// Nothing is dropped: `l = −yλ + log λ` is the full log-density.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Exponential;

impl Exponential {
    /// Lower bound applied to predicted signals inside the filter.
    pub const FILTER_CLAMP: f64 = 1e-3;
}

impl ScalarFamily for Exponential {
    const NAME: &'static str = "exponential";

    fn phi(&self) -> f64 {
        -1.0
    }

    fn check_signal_scalar(&self, l: f64) -> Result<()> {
        if l >= EXPONENTIAL_MIN_SIGNAL {
            Ok(())
        } else {
            Err(Error::SignalDomain {
                model: Self::NAME,
                detail: format!("rate must be at least {EXPONENTIAL_MIN_SIGNAL:e}, got {l}"),
            })
        }
    }

    fn check_response_scalar(&self, y: f64) -> Result<()> {
        if y.is_finite() && y >= 0.0 {
            Ok(())
        } else {
            Err(Error::ResponseDomain {
                model: Self::NAME,
                detail: format!("expected a non-negative value, got {y}"),
            })
        }
    }

    fn log_likelihood_scalar(&self, y: f64, l: f64) -> f64 {
        -y * l + l.ln()
    }

    fn mean_scalar(&self, l: f64) -> f64 {
        1.0 / l
    }

    fn variance_scalar(&self, l: f64) -> f64 {
        1.0 / (l * l)
    }

    fn log_partition_scalar(&self, eta: f64) -> Result<f64> {
        self.check_signal_scalar(eta)?;
        Ok(-eta.ln())
    }

    fn clamp_scalar(&self, l: &mut f64) -> bool {
        if *l < Self::FILTER_CLAMP || l.is_nan() {
            *l = Self::FILTER_CLAMP;
            true
        } else {
            false
        }
    }

    fn sample_scalar(&self, l: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let dist = Exp::new(l).map_err(|_| Error::SignalDomain {
            model: Self::NAME,
            detail: format!("cannot sample with rate {l}"),
        })?;
        Ok(dist.sample(rng))
    }
}

/// Bernoulli response with success probability `1/(1+e^{−λ})`.
/// Nothing is dropped: `l = yλ − log(1+e^λ)` is the full log-mass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BernoulliLogit;

impl ScalarFamily for BernoulliLogit {
    const NAME: &'static str = "bernoulli_logit";

    fn phi(&self) -> f64 {
        1.0
    }

    fn check_response_scalar(&self, y: f64) -> Result<()> {
        if y == 0.0 || y == 1.0 {
            Ok(())
        } else {
            Err(Error::ResponseDomain {
                model: Self::NAME,
                detail: format!("expected 0 or 1, got {y}"),
            })
        }
    }

    fn log_likelihood_scalar(&self, y: f64, l: f64) -> f64 {
        y * l - softplus(l)
    }

    fn mean_scalar(&self, l: f64) -> f64 {
        sigmoid(l)
    }

    fn variance_scalar(&self, l: f64) -> f64 {
        // p(1-p) with both factors computed directly so neither cancels.
        sigmoid(l) * sigmoid(-l)
    }

    fn log_partition_scalar(&self, eta: f64) -> Result<f64> {
        Ok(softplus(eta))
    }

    fn sample_scalar(&self, l: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let u: f64 = rng.random();
        Ok(if u < sigmoid(l) { 1.0 } else { 0.0 })
    }
}

/// Gaussian response `y ~ N(λ, Σ)` with known covariance, `Φ = Σ`.
/// Drops `−½ log|Σ| − (d/2) log 2π`.
#[derive(Clone)]
pub struct Gaussian {
    cov: Matrix,
    precision: Matrix,
    chol_lower: Matrix,
}

impl fmt::Debug for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gaussian").field("cov", &self.cov).finish()
    }
}

impl PartialEq for Gaussian {
    fn eq(&self, other: &Self) -> bool {
        self.cov == other.cov
    }
}

impl Gaussian {
    pub fn new(cov: Matrix) -> Result<Self> {
        check_dim("gaussian covariance", cov.nrows(), cov.ncols())?;
        if cov.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "gaussian covariance",
                expected: 1,
                found: 0,
            });
        }
        let asym = crate::linalg::max_asymmetry(&cov);
        if asym > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::NotSymmetric {
                what: "gaussian covariance",
                asymmetry: asym,
            });
        }
        let mut cov = cov;
        crate::linalg::symmetrize(&mut cov);
        let chol = Cholesky::new(cov.clone()).ok_or(Error::NotPositiveSemidefinite {
            what: "gaussian covariance",
            min_eigenvalue: crate::linalg::min_eigenvalue(&cov),
        })?;
        let mut precision = chol.inverse();
        crate::linalg::symmetrize(&mut precision);
        Ok(Self {
            chol_lower: chol.l(),
            precision,
            cov,
        })
    }

    pub fn univariate(variance: f64) -> Result<Self> {
        Self::new(Matrix::from_element(1, 1, variance))
    }

    pub fn covariance(&self) -> &Matrix {
        &self.cov
    }

    pub fn precision(&self) -> &Matrix {
        &self.precision
    }

    fn dim(&self) -> usize {
        self.cov.nrows()
    }
}

impl ObservationModel for Gaussian {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn response_dim(&self) -> usize {
        self.dim()
    }

    fn signal_dim(&self) -> usize {
        self.dim()
    }

    fn nuisance(&self) -> Matrix {
        self.cov.clone()
    }

    fn is_canonical(&self) -> bool {
        true
    }

    fn check_signal(&self, signal: &Vector) -> Result<()> {
        check_dim("signal", self.dim(), signal.len())?;
        if signal.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::SignalDomain {
                model: "gaussian",
                detail: "non-finite signal".into(),
            })
        }
    }

    fn check_response(&self, y: &Vector) -> Result<()> {
        check_dim("response", self.dim(), y.len())?;
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::ResponseDomain {
                model: "gaussian",
                detail: "non-finite response".into(),
            })
        }
    }

    fn log_likelihood(&self, y: &Vector, signal: &Vector) -> Result<f64> {
        self.check_signal(signal)?;
        self.check_response(y)?;
        let e = y - signal;
        Ok(-0.5 * e.dot(&(&self.precision * &e)))
    }

    fn response_mean(&self, signal: &Vector) -> Result<Vector> {
        self.check_signal(signal)?;
        Ok(signal.clone())
    }

    fn response_cov(&self, signal: &Vector) -> Result<Matrix> {
        self.check_signal(signal)?;
        Ok(self.cov.clone())
    }

    fn signal_derivatives(&self, y: &Vector, signal: &Vector) -> Result<SignalDerivatives> {
        self.check_signal(signal)?;
        self.check_response(y)?;
        Ok(SignalDerivatives {
            gradient: &self.precision * (y - signal),
            hessian: -&self.precision,
        })
    }

    fn log_partition(&self, natural: &Vector) -> Result<f64> {
        check_dim("natural parameter", self.dim(), natural.len())?;
        Ok(0.5 * natural.dot(&(&self.precision * natural)))
    }

    fn sample_response(&self, signal: &Vector, rng: &mut dyn RngCore) -> Result<Vector> {
        self.check_signal(signal)?;
        let z = Vector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|_| StandardNormal.sample(&mut *rng)),
        );
        Ok(signal + &self.chol_lower * z)
    }
}

/// Independent composition of models. The composite log-likelihood is the
/// sum over parts; each part reads its own slice of the signal and its own
/// contiguous block of the response.
#[derive(Debug, Clone, PartialEq)]
pub struct Product {
    parts: Vec<Model>,
    signal_slices: Vec<Range<usize>>,
    response_slices: Vec<Range<usize>>,
    signal_dim: usize,
    response_dim: usize,
}

impl Product {
    /// One contiguous signal slice per part, in order.
    pub fn new(parts: Vec<Model>) -> Result<Self> {
        let mut slices = Vec::with_capacity(parts.len());
        let mut at = 0;
        for p in &parts {
            slices.push(at..at + p.signal_dim());
            at += p.signal_dim();
        }
        Self::with_slices(parts, slices)
    }

    /// Explicit signal slices; they must partition `0..signal_dim` and match
    /// each part's signal dimension.
    pub fn with_slices(parts: Vec<Model>, signal_slices: Vec<Range<usize>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidSlices("a product needs at least one part".into()));
        }
        if parts.len() != signal_slices.len() {
            return Err(Error::InvalidSlices(format!(
                "{} parts but {} slices",
                parts.len(),
                signal_slices.len()
            )));
        }
        for (i, (p, s)) in parts.iter().zip(&signal_slices).enumerate() {
            if s.end < s.start || s.len() != p.signal_dim() {
                return Err(Error::InvalidSlices(format!(
                    "slice {i} ({}..{}) does not match part signal dimension {}",
                    s.start,
                    s.end,
                    p.signal_dim()
                )));
            }
        }
        let signal_dim: usize = signal_slices.iter().map(|s| s.len()).sum();
        let mut covered = alloc::vec![false; signal_dim];
        for s in &signal_slices {
            for j in s.clone() {
                if j >= signal_dim {
                    return Err(Error::InvalidSlices(format!(
                        "index {j} outside composite signal of length {signal_dim}"
                    )));
                }
                if covered[j] {
                    return Err(Error::InvalidSlices(format!("signal index {j} assigned twice")));
                }
                covered[j] = true;
            }
        }
        let mut response_slices = Vec::with_capacity(parts.len());
        let mut at = 0;
        for p in &parts {
            response_slices.push(at..at + p.response_dim());
            at += p.response_dim();
        }
        Ok(Self {
            parts,
            signal_slices,
            response_slices,
            signal_dim,
            response_dim: at,
        })
    }

    pub fn parts(&self) -> &[Model] {
        &self.parts
    }

    pub fn signal_slices(&self) -> &[Range<usize>] {
        &self.signal_slices
    }

    fn signal_part(&self, i: usize, signal: &Vector) -> Vector {
        signal.rows_range(self.signal_slices[i].clone()).into_owned()
    }

    fn response_part(&self, i: usize, y: &Vector) -> Vector {
        y.rows_range(self.response_slices[i].clone()).into_owned()
    }
}

impl ObservationModel for Product {
    fn name(&self) -> &'static str {
        "product"
    }

    fn response_dim(&self) -> usize {
        self.response_dim
    }

    fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    fn nuisance(&self) -> Matrix {
        let blocks: Vec<Matrix> = self.parts.iter().map(|p| p.nuisance()).collect();
        block_diagonal(&blocks)
    }

    fn is_canonical(&self) -> bool {
        self.parts.iter().all(|p| p.is_canonical())
            && self
                .signal_slices
                .iter()
                .zip(&self.response_slices)
                .all(|(s, r)| s == r)
    }

    fn check_signal(&self, signal: &Vector) -> Result<()> {
        check_dim("signal", self.signal_dim, signal.len())?;
        for (i, p) in self.parts.iter().enumerate() {
            p.check_signal(&self.signal_part(i, signal))?;
        }
        Ok(())
    }

    fn check_response(&self, y: &Vector) -> Result<()> {
        check_dim("response", self.response_dim, y.len())?;
        for (i, p) in self.parts.iter().enumerate() {
            p.check_response(&self.response_part(i, y))?;
        }
        Ok(())
    }

    fn log_likelihood(&self, y: &Vector, signal: &Vector) -> Result<f64> {
        check_dim("signal", self.signal_dim, signal.len())?;
        check_dim("response", self.response_dim, y.len())?;
        let mut total = 0.0;
        for (i, p) in self.parts.iter().enumerate() {
            total += p.log_likelihood(&self.response_part(i, y), &self.signal_part(i, signal))?;
        }
        Ok(total)
    }

    fn response_mean(&self, signal: &Vector) -> Result<Vector> {
        check_dim("signal", self.signal_dim, signal.len())?;
        let mut out = Vector::zeros(self.response_dim);
        for (i, p) in self.parts.iter().enumerate() {
            let m = p.response_mean(&self.signal_part(i, signal))?;
            out.rows_range_mut(self.response_slices[i].clone())
                .copy_from(&m);
        }
        Ok(out)
    }

    fn response_cov(&self, signal: &Vector) -> Result<Matrix> {
        check_dim("signal", self.signal_dim, signal.len())?;
        let mut blocks = Vec::with_capacity(self.parts.len());
        for (i, p) in self.parts.iter().enumerate() {
            blocks.push(p.response_cov(&self.signal_part(i, signal))?);
        }
        Ok(block_diagonal(&blocks))
    }

    fn signal_derivatives(&self, y: &Vector, signal: &Vector) -> Result<SignalDerivatives> {
        check_dim("signal", self.signal_dim, signal.len())?;
        check_dim("response", self.response_dim, y.len())?;
        let mut gradient = Vector::zeros(self.signal_dim);
        let mut hessian = Matrix::zeros(self.signal_dim, self.signal_dim);
        for (i, p) in self.parts.iter().enumerate() {
            let d = p.signal_derivatives(&self.response_part(i, y), &self.signal_part(i, signal))?;
            let s = &self.signal_slices[i];
            gradient.rows_range_mut(s.clone()).copy_from(&d.gradient);
            hessian
                .view_mut((s.start, s.start), (s.len(), s.len()))
                .copy_from(&d.hessian);
        }
        Ok(SignalDerivatives { gradient, hessian })
    }

    fn log_partition(&self, natural: &Vector) -> Result<f64> {
        check_dim("natural parameter", self.response_dim, natural.len())?;
        let mut total = 0.0;
        for (i, p) in self.parts.iter().enumerate() {
            total += p.log_partition(&self.response_part(i, natural))?;
        }
        Ok(total)
    }

    fn clamp_signal(&self, signal: &mut Vector) -> bool {
        if signal.len() != self.signal_dim {
            return false;
        }
        let mut changed = false;
        for (i, p) in self.parts.iter().enumerate() {
            let mut part = self.signal_part(i, signal);
            if p.clamp_signal(&mut part) {
                signal
                    .rows_range_mut(self.signal_slices[i].clone())
                    .copy_from(&part);
                changed = true;
            }
        }
        changed
    }

    fn sample_response(&self, signal: &Vector, rng: &mut dyn RngCore) -> Result<Vector> {
        check_dim("signal", self.signal_dim, signal.len())?;
        let mut out = Vector::zeros(self.response_dim);
        for (i, p) in self.parts.iter().enumerate() {
            let y = p.sample_response(&self.signal_part(i, signal), rng)?;
            out.rows_range_mut(self.response_slices[i].clone())
                .copy_from(&y);
        }
        Ok(out)
    }
}

/// The shipped models as one closed type.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gaussian(Gaussian),
    Poisson(Poisson),
    Exponential(Exponential),
    BernoulliLogit(BernoulliLogit),
    Product(Product),
}

impl Model {
    pub fn gaussian(variance: f64) -> Result<Self> {
        Gaussian::univariate(variance).map(Model::Gaussian)
    }

    pub fn gaussian_multivariate(cov: Matrix) -> Result<Self> {
        Gaussian::new(cov).map(Model::Gaussian)
    }

    pub fn poisson() -> Self {
        Model::Poisson(Poisson)
    }

    pub fn exponential() -> Self {
        Model::Exponential(Exponential)
    }

    pub fn bernoulli_logit() -> Self {
        Model::BernoulliLogit(BernoulliLogit)
    }

    pub fn product(parts: Vec<Model>) -> Result<Self> {
        Product::new(parts).map(Model::Product)
    }

    fn inner(&self) -> &dyn ObservationModel {
        match self {
            Model::Gaussian(m) => m,
            Model::Poisson(m) => m,
            Model::Exponential(m) => m,
            Model::BernoulliLogit(m) => m,
            Model::Product(m) => m,
        }
    }
}

impl ObservationModel for Model {
    fn name(&self) -> &'static str {
        self.inner().name()
    }
    fn response_dim(&self) -> usize {
        self.inner().response_dim()
    }
    fn signal_dim(&self) -> usize {
        self.inner().signal_dim()
    }
    fn nuisance(&self) -> Matrix {
        self.inner().nuisance()
    }
    fn is_canonical(&self) -> bool {
        self.inner().is_canonical()
    }
    fn check_signal(&self, signal: &Vector) -> Result<()> {
        self.inner().check_signal(signal)
    }
    fn check_response(&self, y: &Vector) -> Result<()> {
        self.inner().check_response(y)
    }
    fn log_likelihood(&self, y: &Vector, signal: &Vector) -> Result<f64> {
        self.inner().log_likelihood(y, signal)
    }
    fn response_mean(&self, signal: &Vector) -> Result<Vector> {
        self.inner().response_mean(signal)
    }
    fn response_cov(&self, signal: &Vector) -> Result<Matrix> {
        self.inner().response_cov(signal)
    }
    fn signal_derivatives(&self, y: &Vector, signal: &Vector) -> Result<SignalDerivatives> {
        self.inner().signal_derivatives(y, signal)
    }
    fn log_partition(&self, natural: &Vector) -> Result<f64> {
        self.inner().log_partition(natural)
    }
    fn clamp_signal(&self, signal: &mut Vector) -> bool {
        self.inner().clamp_signal(signal)
    }
    fn sample_response(&self, signal: &Vector, rng: &mut dyn RngCore) -> Result<Vector> {
        self.inner().sample_response(signal, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn poisson_values() {
        let m = Model::poisson();
        assert_eq!(m.log_likelihood(&v(&[0.0]), &v(&[0.0])).unwrap(), -1.0);
        assert_eq!(m.response_mean(&v(&[0.0])).unwrap()[0], 1.0);
        assert_relative_eq!(m.response_cov(&v(&[1.0])).unwrap()[(0, 0)], core::f64::consts::E);
    }

    #[test]
    fn bernoulli_values() {
        let m = Model::bernoulli_logit();
        assert_relative_eq!(
            m.log_likelihood(&v(&[1.0]), &v(&[0.0])).unwrap(),
            0.5_f64.ln(),
            epsilon = 1e-15
        );
        assert_eq!(m.response_mean(&v(&[0.0])).unwrap()[0], 0.5);
        assert_eq!(m.response_cov(&v(&[0.0])).unwrap()[(0, 0)], 0.25);
        let d = m.signal_derivatives(&v(&[1.0]), &v(&[0.0])).unwrap();
        assert_eq!(d.gradient[0], 0.5);
        assert_eq!(d.hessian[(0, 0)], -0.25);
    }

    #[test]
    fn exponential_values() {
        let m = Model::exponential();
        assert_relative_eq!(
            m.log_likelihood(&v(&[1.0]), &v(&[2.0])).unwrap(),
            -2.0 + 2.0_f64.ln(),
            epsilon = 1e-15
        );
        assert_eq!(m.response_mean(&v(&[2.0])).unwrap()[0], 0.5);
        let d = m.signal_derivatives(&v(&[1.0]), &v(&[2.0])).unwrap();
        assert_eq!(d.gradient[0], -0.5);
        assert_eq!(d.hessian[(0, 0)], -0.25);
    }

    #[test]
    fn domain_errors() {
        let e = Model::exponential();
        assert!(matches!(
            e.log_likelihood(&v(&[1.0]), &v(&[0.0])),
            Err(Error::SignalDomain { .. })
        ));
        assert!(e.response_mean(&v(&[-1.0])).is_err());
        assert!(e.response_mean(&v(&[1e-9])).is_err());
        assert!(e.response_mean(&v(&[1e-8])).is_ok());
        let b = Model::bernoulli_logit();
        assert!(matches!(
            b.log_likelihood(&v(&[0.5]), &v(&[0.0])),
            Err(Error::ResponseDomain { .. })
        ));
        let p = Model::poisson();
        assert!(p.log_likelihood(&v(&[-1.0]), &v(&[0.0])).is_err());
        assert!(p.log_likelihood(&v(&[1.5]), &v(&[0.0])).is_err());
    }

    #[test]
    fn saturation_instead_of_overflow() {
        let b = Model::bernoulli_logit();
        for l in [-800.0, -40.0, 40.0, 800.0] {
            let ll = b.log_likelihood(&v(&[1.0]), &v(&[l])).unwrap();
            assert!(ll.is_finite());
            let d = b.signal_derivatives(&v(&[0.0]), &v(&[l])).unwrap();
            assert!(d.gradient[0].is_finite() && d.hessian[(0, 0)].is_finite());
        }
        assert!(sigmoid(30.0) < 1.0);
        assert!((sigmoid(30.0) * sigmoid(-30.0) - 9.357622968839299e-14).abs() < 1e-20);
        let p = Model::poisson();
        assert!(p.response_mean(&v(&[1000.0])).unwrap()[0].is_finite());
    }

    #[test]
    fn gaussian_covariance_independent_of_signal() {
        let cov = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let g = Model::gaussian_multivariate(cov.clone()).unwrap();
        assert_eq!(g.response_cov(&v(&[0.0, 0.0])).unwrap(), cov);
        assert_eq!(g.response_cov(&v(&[5.0, -3.0])).unwrap(), cov);
        assert_eq!(g.nuisance(), cov);
    }

    #[test]
    fn logistic_matches_generic_chain_rule() {
        // gradient = h'(λ) Σ⁻¹ (y − h), hessian = h''(λ) Σ⁻¹ (y − h) + h' d(Σ⁻¹)/dλ (y − h) − h' Σ⁻¹ h'
        // For the logistic model h' = p(1−p) = Σ so both collapse to the canonical forms.
        let m = Model::bernoulli_logit();
        for &l in &[-3.0, -0.4, 0.0, 0.7, 2.5] {
            for &y in &[0.0, 1.0] {
                let p = 1.0 / (1.0 + (-l as f64).exp());
                let dh = p * (1.0 - p);
                let sigma = p * (1.0 - p);
                let generic_grad = dh / sigma * (y - p);
                // d/dλ [h'/Σ] = 0 here, leaving −h'Σ⁻¹h'.
                let generic_hess = -dh / sigma * dh;
                let d = m.signal_derivatives(&v(&[y]), &v(&[l])).unwrap();
                assert_relative_eq!(d.gradient[0], generic_grad, epsilon = 1e-14);
                assert_relative_eq!(d.hessian[(0, 0)], generic_hess, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn single_part_product_is_identity() {
        let part = Model::poisson();
        let prod = Model::product(vec![part.clone()]).unwrap();
        let y = v(&[3.0]);
        let l = v(&[0.4]);
        assert_eq!(prod.log_likelihood(&y, &l).unwrap(), part.log_likelihood(&y, &l).unwrap());
        assert_eq!(prod.response_mean(&l).unwrap(), part.response_mean(&l).unwrap());
        assert_eq!(prod.response_cov(&l).unwrap(), part.response_cov(&l).unwrap());
        assert_eq!(
            prod.signal_derivatives(&y, &l).unwrap(),
            part.signal_derivatives(&y, &l).unwrap()
        );
        assert_eq!(prod.nuisance(), part.nuisance());
        assert!(prod.is_canonical());
    }

    #[test]
    fn composite_layout_of_the_bandit_response() {
        let prod = Model::product(vec![
            Model::bernoulli_logit(),
            Model::gaussian(1.0).unwrap(),
            Model::bernoulli_logit(),
        ])
        .unwrap();
        assert_eq!(prod.nuisance(), Matrix::identity(3, 3));
        let l = v(&[0.3, -1.2, 2.0]);
        let cov = prod.response_cov(&l).unwrap();
        let p1 = sigmoid(0.3);
        let p3 = sigmoid(2.0);
        let expected = Matrix::from_diagonal(&v(&[p1 * (1.0 - p1), 1.0, p3 * (1.0 - p3)]));
        assert!((cov - expected).amax() < 1e-15);
    }

    #[test]
    fn product_slice_validation() {
        let parts = vec![Model::poisson(), Model::bernoulli_logit()];
        assert!(Product::with_slices(parts.clone(), vec![0..1, 0..1]).is_err());
        assert!(Product::with_slices(parts.clone(), vec![0..1, 2..3]).is_err());
        assert!(Product::with_slices(parts.clone(), vec![0..1]).is_err());
        let swapped = Product::with_slices(parts, vec![1..2, 0..1]).unwrap();
        assert!(!swapped.is_canonical());
        // Part 0 (poisson) reads signal index 1.
        let mean = swapped.response_mean(&v(&[0.0, 1.0])).unwrap();
        assert_relative_eq!(mean[0], core::f64::consts::E);
        assert_eq!(mean[1], 0.5);
    }

    #[test]
    fn sampled_responses_live_in_support() {
        let prod = Model::product(vec![
            Model::bernoulli_logit(),
            Model::gaussian(2.0).unwrap(),
            Model::poisson(),
            Model::exponential(),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let y = prod.sample_response(&v(&[0.2, 1.0, 0.5, 2.0]), &mut rng).unwrap();
            prod.check_response(&y).unwrap();
        }
    }

    #[test]
    fn exponential_clamp() {
        let m = Model::exponential();
        let mut s = v(&[-0.5]);
        assert!(m.clamp_signal(&mut s));
        assert_eq!(s[0], 1e-3);
        let mut ok = v(&[0.5]);
        assert!(!m.clamp_signal(&mut ok));
    }
}
