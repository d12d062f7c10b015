//! Seeded simulation of a drifting contextual bandit played with Thompson
//! sampling.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(config.seed)`; repetition `r` runs on stream `r` of that
//! generator. Each round draws one `u64` from the repetition stream to seed the
//! Thompson sampler, which derives per-arm streams from it.
//!
//! Per round `t`:
//! 1. draw `W_t` and move the true parameters `θ_t = θ_{t−1} + ω_t`;
//! 2. predict `(a_t, R_t)` from the previous posterior with the same `W_t`;
//! 3. draw `X_c` (columns from `N(0, Σ_c)`) and a uniform one-hot `x_d`;
//! 4. pick an arm by Thompson sampling and score it against `θ_t`;
//! 5. sample the response of the played arm and update the posterior.

use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::Cholesky;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::bandit::{
    build_context, param_dim, regret, thompson_select_with, ContextFactors, RewardSpec,
    ThompsonVariant,
};
use crate::error::{Error, Result};
use crate::expfam::{Model, ObservationModel};
use crate::filter::{update, Observation};
use crate::linalg::{clipped_sqrt, Matrix, Vector};
use crate::statespace::{predict, Belief, DynamicsSpec};

/// Number of response entries (and signal columns) in the simulated model.
pub const RESPONSE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_arms: usize,
    pub rounds: usize,
    pub repetitions: usize,
    pub k1: usize,
    pub k2: usize,
    /// Rate `c₁` of the exponential draws for the diagonal of `W_t`.
    pub drift_rate: f64,
    /// Correlation between entries of `ω_t`.
    pub drift_corr: f64,
    /// Correlation between continuous predictors.
    pub cont_corr: f64,
    /// Variance of the Gaussian response entry.
    pub sigma_y2: f64,
    pub seed: u64,
    pub thompson_variant: ThompsonVariant,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_arms: 10,
            rounds: 2000,
            repetitions: 30,
            k1: 5,
            k2: 3,
            drift_rate: 1e5,
            drift_corr: 0.2,
            cont_corr: -0.1,
            sigma_y2: 1.0,
            seed: 0,
            thompson_variant: ThompsonVariant::PerArm,
        }
    }
}

impl SimConfig {
    pub fn param_dim(&self) -> usize {
        param_dim(self.num_arms, self.k1, self.k2)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.num_arms == 0 {
            return fail("num_arms must be positive");
        }
        if self.repetitions == 0 {
            return fail("repetitions must be positive");
        }
        if !(self.drift_rate > 0.0 && self.drift_rate.is_finite()) {
            return fail("drift_rate must be positive");
        }
        if !(self.sigma_y2 > 0.0 && self.sigma_y2.is_finite()) {
            return fail("sigma_y2 must be positive");
        }
        for (name, rho) in [("drift_corr", self.drift_corr), ("cont_corr", self.cont_corr)] {
            if !(rho > -1.0 && rho < 1.0) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{name} must lie in (-1, 1), got {rho}"
                )));
            }
        }
        // An equicorrelation matrix of size n is PSD iff ρ ≥ −1/(n−1).
        for (name, rho, n) in [
            ("drift_corr", self.drift_corr, self.param_dim()),
            ("cont_corr", self.cont_corr, self.k1),
        ] {
            if n > 1 && rho < -1.0 / (n as f64 - 1.0) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{name} = {rho} gives an indefinite {n}x{n} covariance"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub chosen_arm: usize,
    pub optimal_arm: usize,
    pub reward: f64,
    pub regret: f64,
    pub random_regret: f64,
}

/// Cumulative per-round metrics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    /// Fraction of rounds `1..=t` in which the optimal arm was not played.
    pub error_fraction: Vec<f64>,
    /// Mean regret over rounds `1..=t`.
    pub regret_rate: Vec<f64>,
    /// Mean regret of the uniform-random policy over rounds `1..=t`.
    pub random_regret_rate: Vec<f64>,
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.error_fraction.len()
    }

    pub fn is_empty(&self) -> bool {
        self.error_fraction.is_empty()
    }

    pub fn from_records(records: &[RoundRecord]) -> Self {
        let mut out = MetricSeries {
            error_fraction: Vec::with_capacity(records.len()),
            regret_rate: Vec::with_capacity(records.len()),
            random_regret_rate: Vec::with_capacity(records.len()),
        };
        let (mut misses, mut regret, mut random) = (0usize, 0.0, 0.0);
        for (i, r) in records.iter().enumerate() {
            let t = (i + 1) as f64;
            if r.chosen_arm != r.optimal_arm {
                misses += 1;
            }
            regret += r.regret;
            random += r.random_regret;
            out.error_fraction.push(misses as f64 / t);
            out.regret_rate.push(regret / t);
            out.random_regret_rate.push(random / t);
        }
        out
    }

    /// Pointwise mean, in the given order.
    pub fn mean(series: &[MetricSeries]) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::InvalidConfig("nothing to average".to_string()))?;
        let n = first.len();
        if series.iter().any(|s| s.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "metric series length",
                expected: n,
                found: series.iter().map(|s| s.len()).find(|&l| l != n).unwrap_or(n),
            });
        }
        let avg = |pick: fn(&MetricSeries) -> &Vec<f64>| -> Vec<f64> {
            (0..n)
                .map(|t| series.iter().map(|s| pick(s)[t]).sum::<f64>() / series.len() as f64)
                .collect()
        };
        Ok(MetricSeries {
            error_fraction: avg(|s| &s.error_fraction),
            regret_rate: avg(|s| &s.regret_rate),
            random_regret_rate: avg(|s| &s.random_regret_rate),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub records: Vec<RoundRecord>,
    pub series: MetricSeries,
    /// Mean of the diagonal entries of every `W_t` drawn.
    pub mean_drift_variance: f64,
}

/// Response model of the simulation: logistic, Gaussian, logistic.
pub fn simulation_model(sigma_y2: f64) -> Result<Model> {
    Model::product(alloc::vec![
        Model::bernoulli_logit(),
        Model::gaussian(sigma_y2)?,
        Model::bernoulli_logit(),
    ])
}

/// The generator for repetition `repetition` of a run seeded with `seed`.
pub fn repetition_rng(seed: u64, repetition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition);
    rng
}

/// Diagonal entries i.i.d. exponential(`rate`), off-diagonals
/// `corr · sqrt(D_i D_j)`.
pub fn correlated_exponential_cov<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rate: f64,
    corr: f64,
) -> Result<Matrix> {
    let exp = Exp::new(rate).map_err(|_| Error::InvalidConfig("exponential rate".to_string()))?;
    let diag: Vec<f64> = (0..dim).map(|_| exp.sample(rng)).collect();
    Ok(Matrix::from_fn(dim, dim, |i, j| {
        if i == j {
            diag[i]
        } else {
            corr * (diag[i] * diag[j]).sqrt()
        }
    }))
}

/// Lower factor for sampling from `N(0, cov)`; falls back to the eigenvalue
/// clipped projection when `cov` is not numerically positive definite.
/// The returned covariance is the one the factor represents.
fn noise_factor(cov: Matrix) -> (Matrix, Matrix) {
    match Cholesky::new(cov.clone()) {
        Some(ch) => (ch.l(), cov),
        None => {
            let (f, _) = clipped_sqrt(&cov);
            let projected = &f * f.transpose();
            (f, projected)
        }
    }
}

fn standard_normal(rng: &mut dyn RngCore, n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut *rng)))
}

/// Runs repetition 0 of `config`.
pub fn run_simulation(config: &SimConfig) -> Result<SimulationRun> {
    run_repetition(config, 0)
}

/// Runs one repetition on its own generator stream.
pub fn run_repetition(config: &SimConfig, repetition: u64) -> Result<SimulationRun> {
    config.validate()?;
    let mut rng = repetition_rng(config.seed, repetition);
    let k = config.param_dim();
    let arms = config.num_arms;
    let model = simulation_model(config.sigma_y2)?;
    let reward = RewardSpec::Coordinate(0);

    let cont_cov = correlated_exponential_cov(&mut rng, config.k1, 1.0, config.cont_corr)?;
    let (cont_factor, cont_cov) = noise_factor(cont_cov);

    let init_exp = Exp::new(1.0).expect("rate 1");
    let mut theta = Vector::from_iterator(
        k,
        (0..k).map(|_| {
            let v: f64 = init_exp.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            v.sqrt() * z
        }),
    );
    let mut belief = Belief::isotropic(k, 1.0)?;

    let mut records = Vec::with_capacity(config.rounds);
    let mut drift_diag_sum = 0.0;
    for round in 1..=config.rounds {
        let at_round = |e: Error| Error::Round {
            round,
            source: alloc::boxed::Box::new(e),
        };

        let w = correlated_exponential_cov(&mut rng, k, config.drift_rate, config.drift_corr)?;
        let (w_factor, w) = noise_factor(w);
        drift_diag_sum += w.diagonal().sum();
        theta += &w_factor * standard_normal(&mut rng, k);
        let prior = predict(&belief, &DynamicsSpec::random_walk(w).map_err(at_round)?)
            .map_err(at_round)?;

        let continuous = Matrix::from_columns(
            &(0..RESPONSE_DIM)
                .map(|_| &cont_factor * standard_normal(&mut rng, config.k1))
                .collect::<Vec<_>>(),
        );
        let mut categorical = Vector::zeros(config.k2);
        if config.k2 > 0 {
            categorical[rng.random_range(0..config.k2)] = 1.0;
        }
        let factors = ContextFactors::new(arms, continuous, categorical, cont_cov.clone())?;
        let contexts = (0..arms)
            .map(|a| build_context(&factors, a))
            .collect::<Result<Vec<_>>>()?;

        let round_seed = rng.next_u64();
        let chosen = thompson_select_with(
            &prior,
            &contexts,
            &model,
            &reward,
            round_seed,
            config.thompson_variant,
        )
        .map_err(at_round)?;
        let outcome = regret(&theta, &contexts, chosen, &model, &reward).map_err(at_round)?;

        let signal = contexts[chosen].tr_mul(&theta);
        let y = model
            .sample_response(&signal, &mut rng)
            .map_err(at_round)?;
        let r = reward.reward(&y)?;
        let obs = Observation::new(contexts[chosen].clone(), y);
        belief = update(&prior, &obs, &model).map_err(at_round)?.0;

        records.push(RoundRecord {
            round,
            chosen_arm: chosen,
            optimal_arm: outcome.optimal_arm,
            reward: r,
            regret: outcome.regret,
            random_regret: outcome.random_regret,
        });
    }

    let series = MetricSeries::from_records(&records);
    let mean_drift_variance = if config.rounds == 0 {
        0.0
    } else {
        drift_diag_sum / (config.rounds * k) as f64
    };
    Ok(SimulationRun {
        records,
        series,
        mean_drift_variance,
    })
}

/// Runs every repetition in order and averages the series.
pub fn aggregate_sequential(config: &SimConfig) -> Result<MetricSeries> {
    config.validate()?;
    let runs = (0..config.repetitions as u64)
        .map(|r| run_repetition(config, r).map(|run| run.series))
        .collect::<Result<Vec<_>>>()?;
    MetricSeries::mean(&runs)
}
