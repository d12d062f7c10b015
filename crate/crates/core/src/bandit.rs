//! Contextual bandit pieces: Kronecker-structured context matrices, Thompson
//! sampling over a Gaussian parameter belief, and regret accounting.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::expfam::ObservationModel;
use crate::linalg::{sampling_factor, Matrix, Vector};
use crate::statespace::PriorPrediction;

/// Raw predictors for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextFactors {
    num_arms: usize,
    /// `X_c`, k₁×c.
    continuous: Matrix,
    /// `x_d`, one-hot of length k₂ (empty when there is no categorical
    /// predictor).
    categorical: Vector,
    /// `Σ_c`, the covariance the continuous columns were drawn from.
    continuous_cov: Matrix,
}

impl ContextFactors {
    pub fn new(
        num_arms: usize,
        continuous: Matrix,
        categorical: Vector,
        continuous_cov: Matrix,
    ) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::InvalidConfig("at least one arm is required".into()));
        }
        if continuous_cov.nrows() != continuous.nrows()
            || continuous_cov.ncols() != continuous.nrows()
        {
            return Err(Error::DimensionMismatch {
                context: "continuous predictor covariance",
                expected: continuous.nrows(),
                found: continuous_cov.nrows(),
            });
        }
        if !categorical.is_empty() {
            let ones = categorical.iter().filter(|&&v| v == 1.0).count();
            let zeros = categorical.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != categorical.len() {
                return Err(Error::NotOneHot);
            }
        }
        Ok(Self {
            num_arms,
            continuous,
            categorical,
            continuous_cov,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn continuous(&self) -> &Matrix {
        &self.continuous
    }

    pub fn categorical(&self) -> &Vector {
        &self.categorical
    }

    pub fn continuous_cov(&self) -> &Matrix {
        &self.continuous_cov
    }

    /// Number of signal columns `c`.
    pub fn signal_dim(&self) -> usize {
        self.continuous.ncols()
    }

    /// `k = A + (k₁ + k₂)(A + 1)`.
    pub fn param_dim(&self) -> usize {
        param_dim(
            self.num_arms,
            self.continuous.nrows(),
            self.categorical.len(),
        )
    }
}

/// Parameter count of the context layout for `num_arms` arms with `k1`
/// continuous and `k2` categorical predictors.
pub fn param_dim(num_arms: usize, k1: usize, k2: usize) -> usize {
    num_arms + (k1 + k2) * (num_arms + 1)
}

/// Context matrix `X(a)` (k×c). Row blocks, top to bottom:
///
/// | rows  | block              |
/// |-------|--------------------|
/// | A     | `1' ⊗ i(a)`        |
/// | k₁    | `X_c`              |
/// | k₂    | `1' ⊗ x_d`         |
/// | k₁·A  | `i(a) ⊗ X_c`       |
/// | k₂·A  | `i(a) ⊗ (1' ⊗ x_d)`|
pub fn build_context(factors: &ContextFactors, arm: usize) -> Result<Matrix> {
    let a_count = factors.num_arms;
    if arm >= a_count {
        return Err(Error::ArmOutOfRange {
            arm,
            num_arms: a_count,
        });
    }
    let k1 = factors.continuous.nrows();
    let k2 = factors.categorical.len();
    let c = factors.signal_dim();
    let mut x = Matrix::zeros(factors.param_dim(), c);

    x.row_mut(arm).fill(1.0);
    let mut at = a_count;
    x.view_mut((at, 0), (k1, c)).copy_from(&factors.continuous);
    at += k1;
    for j in 0..k2 {
        x.row_mut(at + j).fill(factors.categorical[j]);
    }
    at += k2;
    x.view_mut((at + arm * k1, 0), (k1, c))
        .copy_from(&factors.continuous);
    at += k1 * a_count;
    for j in 0..k2 {
        x.row_mut(at + arm * k2 + j).fill(factors.categorical[j]);
    }
    Ok(x)
}

/// Deterministic map from a response vector to a scalar reward.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardSpec {
    /// `r = y[i]`.
    Coordinate(usize),
    /// `r = w' y`.
    Linear(Vector),
}

impl RewardSpec {
    pub fn reward(&self, y: &Vector) -> Result<f64> {
        self.apply(y)
    }

    /// Expected reward given the response mean. Exact because both extractors
    /// are linear.
    pub fn expected(&self, response_mean: &Vector) -> Result<f64> {
        self.apply(response_mean)
    }

    fn apply(&self, v: &Vector) -> Result<f64> {
        match self {
            RewardSpec::Coordinate(i) => v.get(*i).copied().ok_or(Error::DimensionMismatch {
                context: "reward coordinate",
                expected: *i + 1,
                found: v.len(),
            }),
            RewardSpec::Linear(w) => {
                if w.len() != v.len() {
                    return Err(Error::DimensionMismatch {
                        context: "reward weights",
                        expected: v.len(),
                        found: w.len(),
                    });
                }
                Ok(w.dot(v))
            }
        }
    }
}

/// Which Thompson-sampling variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThompsonVariant {
    /// An independent parameter draw for every arm.
    #[default]
    PerArm,
    /// One parameter draw shared by all arms.
    Shared,
}

impl ThompsonVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ThompsonVariant::PerArm => "per_arm",
            ThompsonVariant::Shared => "shared",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per_arm" => Some(ThompsonVariant::PerArm),
            "shared" => Some(ThompsonVariant::Shared),
            _ => None,
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Expected reward of each arm when the parameters equal `theta`.
pub fn expected_rewards<M: ObservationModel + ?Sized>(
    theta: &Vector,
    contexts: &[Matrix],
    model: &M,
    reward: &RewardSpec,
) -> Result<Vec<f64>> {
    contexts
        .iter()
        .map(|x| arm_reward(theta, x, model, reward))
        .collect()
}

fn arm_reward<M: ObservationModel + ?Sized>(
    theta: &Vector,
    x: &Matrix,
    model: &M,
    reward: &RewardSpec,
) -> Result<f64> {
    if x.nrows() != theta.len() {
        return Err(Error::DimensionMismatch {
            context: "context rows",
            expected: theta.len(),
            found: x.nrows(),
        });
    }
    let signal = x.tr_mul(theta);
    reward.expected(&model.response_mean(&signal)?)
}

/// Per-arm draw source: stream `arm` of ChaCha8 seeded with the round seed.
fn arm_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(mean: &Vector, factor: &Matrix, rng: &mut ChaCha8Rng) -> Vector {
    let z = Vector::from_iterator(
        mean.len(),
        (0..mean.len()).map(|_| StandardNormal.sample(&mut *rng)),
    );
    mean + factor * z
}

/// Sampled expected reward of every arm, as used for the Thompson choice.
pub fn thompson_scores<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    contexts: &[Matrix],
    model: &M,
    reward: &RewardSpec,
    seed: u64,
    variant: ThompsonVariant,
) -> Result<Vec<f64>> {
    if contexts.is_empty() {
        return Err(Error::InvalidConfig("no arms to choose from".into()));
    }
    let factor = sampling_factor(prior.cov())?;
    match variant {
        ThompsonVariant::PerArm => contexts
            .iter()
            .enumerate()
            .map(|(arm, x)| {
                let theta = draw(prior.mean(), &factor, &mut arm_rng(seed, arm as u64));
                arm_reward(&theta, x, model, reward)
            })
            .collect(),
        ThompsonVariant::Shared => {
            let theta = draw(prior.mean(), &factor, &mut arm_rng(seed, 0));
            expected_rewards(&theta, contexts, model, reward)
        }
    }
}

/// Thompson sampling with an independent draw per arm.
pub fn thompson_select<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    contexts: &[Matrix],
    model: &M,
    reward: &RewardSpec,
    seed: u64,
) -> Result<usize> {
    thompson_select_with(prior, contexts, model, reward, seed, ThompsonVariant::PerArm)
}

pub fn thompson_select_with<M: ObservationModel + ?Sized>(
    prior: &PriorPrediction,
    contexts: &[Matrix],
    model: &M,
    reward: &RewardSpec,
    seed: u64,
    variant: ThompsonVariant,
) -> Result<usize> {
    let scores = thompson_scores(prior, contexts, model, reward, seed, variant)?;
    argmax_lowest(&scores).ok_or(Error::InvalidConfig("no arms to choose from".into()))
}

/// Regret of one round under the true parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretOutcome {
    pub regret: f64,
    pub optimal_arm: usize,
    /// Expected regret of choosing an arm uniformly at random.
    pub random_regret: f64,
}

pub fn regret<M: ObservationModel + ?Sized>(
    true_params: &Vector,
    contexts: &[Matrix],
    chosen: usize,
    model: &M,
    reward: &RewardSpec,
) -> Result<RegretOutcome> {
    if chosen >= contexts.len() {
        return Err(Error::ArmOutOfRange {
            arm: chosen,
            num_arms: contexts.len(),
        });
    }
    let rewards = expected_rewards(true_params, contexts, model, reward)?;
    let optimal_arm = argmax_lowest(&rewards).expect("non-empty");
    let best = rewards[optimal_arm];
    let gap_sum: f64 = rewards.iter().map(|r| best - r).sum();
    Ok(RegretOutcome {
        regret: best - rewards[chosen],
        optimal_arm,
        random_regret: gap_sum / rewards.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::{sigmoid, Model};
    use alloc::vec;
    use rand::Rng;

    fn factors(a: usize, k1: usize, k2: usize, hot: usize, rng: &mut ChaCha8Rng) -> ContextFactors {
        let xc = Matrix::from_fn(k1, 3, |_, _| rng.random_range(-1.0..1.0));
        let mut xd = Vector::zeros(k2);
        if k2 > 0 {
            xd[hot] = 1.0;
        }
        ContextFactors::new(a, xc, xd, Matrix::identity(k1, k1)).unwrap()
    }

    fn bandit_model() -> Model {
        Model::product(vec![
            Model::bernoulli_logit(),
            Model::gaussian(1.0).unwrap(),
            Model::bernoulli_logit(),
        ])
        .unwrap()
    }

    #[test]
    fn context_row_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = factors(10, 5, 3, 1, &mut rng);
        assert_eq!(build_context(&f, 4).unwrap().nrows(), 98);

        let f = factors(1, 0, 1, 0, &mut rng);
        let x = build_context(&f, 0).unwrap();
        assert_eq!(x.nrows(), 3);
        assert!(x.row(0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn interaction_blocks_touch_only_the_arm_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, k1, k2) = (4, 2, 3);
        let f = factors(a, k1, k2, 2, &mut rng);
        let x1 = build_context(&f, 1).unwrap();
        let x3 = build_context(&f, 3).unwrap();
        let shared = a + k1 + k2;
        let support = |x: &Matrix| -> Vec<usize> {
            (shared..x.nrows())
                .filter(|&r| x.row(r).iter().any(|&v| v != 0.0))
                .collect()
        };
        let arm_rows = |arm: usize| -> Vec<usize> {
            let cont = (0..k1).map(move |j| shared + arm * k1 + j);
            let cat = (0..k2).map(move |j| shared + a * k1 + arm * k2 + j);
            cont.chain(cat).collect()
        };
        for (x, arm) in [(&x1, 1), (&x3, 3)] {
            let s = support(x);
            let allowed = arm_rows(arm);
            assert!(!s.is_empty());
            assert!(s.iter().all(|r| allowed.contains(r)));
        }
        // Shared rows agree across arms except the arm indicator block.
        assert_eq!(x1.rows(a, k1 + k2), x3.rows(a, k1 + k2));
        // Each column has exactly two nonzeros in the categorical blocks.
        for col in 0..3 {
            let shared_cat = (a + k1..a + k1 + k2).filter(|&r| x1[(r, col)] != 0.0).count();
            let inter_start = shared + a * k1;
            let inter_cat = (inter_start..x1.nrows()).filter(|&r| x1[(r, col)] != 0.0).count();
            assert_eq!(shared_cat + inter_cat, 2);
        }
    }

    #[test]
    fn arm_out_of_range_and_one_hot() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = factors(2, 1, 2, 0, &mut rng);
        assert!(matches!(build_context(&f, 2), Err(Error::ArmOutOfRange { .. })));
        let bad = ContextFactors::new(
            2,
            Matrix::zeros(1, 3),
            Vector::from_column_slice(&[1.0, 1.0]),
            Matrix::identity(1, 1),
        );
        assert_eq!(bad, Err(Error::NotOneHot));
    }

    #[test]
    fn zero_covariance_selects_the_mean_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = factors(5, 2, 2, 1, &mut rng);
        let k = f.param_dim();
        let contexts: Vec<Matrix> = (0..5).map(|a| build_context(&f, a).unwrap()).collect();
        let model = bandit_model();
        let reward = RewardSpec::Coordinate(0);
        for trial in 0..10 {
            let mean = Vector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
            let prior = PriorPrediction::new(mean.clone(), Matrix::zeros(k, k), 1).unwrap();
            let at_mean = expected_rewards(&mean, &contexts, &model, &reward).unwrap();
            let expected = argmax_lowest(&at_mean).unwrap();
            let chosen = thompson_select(&prior, &contexts, &model, &reward, trial).unwrap();
            assert_eq!(chosen, expected);
        }
    }

    #[test]
    fn identical_arms_are_chosen_uniformly() {
        let a = 4;
        let k = 6;
        let x = Matrix::from_fn(k, 3, |i, j| ((i + j) % 3) as f64 * 0.3);
        let contexts = vec![x; a];
        let prior = PriorPrediction::new(Vector::zeros(k), Matrix::identity(k, k), 1).unwrap();
        let model = bandit_model();
        let reward = RewardSpec::Coordinate(0);
        let mut counts = vec![0usize; a];
        let draws = 10_000;
        for seed in 0..draws {
            counts[thompson_select(&prior, &contexts, &model, &reward, seed).unwrap()] += 1;
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / a as f64).abs() < 0.02, "frequency {freq}");
        }
    }

    #[test]
    fn logistic_reward_is_monotone_in_first_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = factors(6, 3, 2, 0, &mut rng);
        let contexts: Vec<Matrix> = (0..6).map(|a| build_context(&f, a).unwrap()).collect();
        let k = f.param_dim();
        let prior = PriorPrediction::new(
            Vector::from_fn(k, |_, _| rng.random_range(-0.5..0.5)),
            Matrix::identity(k, k) * 0.5,
            1,
        )
        .unwrap();
        let model = bandit_model();
        for seed in 0..50 {
            let scores = thompson_scores(
                &prior,
                &contexts,
                &model,
                &RewardSpec::Coordinate(0),
                seed,
                ThompsonVariant::PerArm,
            )
            .unwrap();
            // Recover λ₁ from π₁ and check the argmax agrees.
            let logits: Vec<f64> = scores.iter().map(|p| (p / (1.0 - p)).ln()).collect();
            assert_eq!(argmax_lowest(&scores), argmax_lowest(&logits));
        }
    }

    #[test]
    fn regret_values() {
        // Two arms whose first signal is 1 and 0.
        let mut x0 = Matrix::zeros(2, 3);
        x0[(0, 0)] = 1.0;
        let x1 = Matrix::zeros(2, 3);
        let theta = Vector::from_column_slice(&[1.0, 0.0]);
        let model = bandit_model();
        let reward = RewardSpec::Coordinate(0);
        let out = regret(&theta, &[x0.clone(), x1.clone()], 1, &model, &reward).unwrap();
        assert_eq!(out.optimal_arm, 0);
        assert!((out.regret - (sigmoid(1.0) - 0.5)).abs() < 1e-15);
        assert!((out.regret - 0.2311).abs() < 1e-4);
        assert!((out.random_regret - out.regret / 2.0).abs() < 1e-15);
        let best = regret(&theta, &[x0, x1], 0, &model, &reward).unwrap();
        assert_eq!(best.regret, 0.0);
    }

    #[test]
    fn shared_variant_uses_one_draw() {
        let k = 3;
        let x = Matrix::from_fn(k, 3, |i, _| i as f64 + 1.0);
        let contexts = vec![x.clone(), x * 2.0];
        let prior = PriorPrediction::new(Vector::zeros(k), Matrix::identity(k, k), 1).unwrap();
        let model = bandit_model();
        let reward = RewardSpec::Linear(Vector::from_column_slice(&[0.0, 1.0, 0.0]));
        for seed in 0..20 {
            let s = thompson_scores(&prior, &contexts, &model, &reward, seed, ThompsonVariant::Shared)
                .unwrap();
            // Gaussian coordinate: arm 1's signal is exactly twice arm 0's.
            assert!((s[1] - 2.0 * s[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_lowest(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax_lowest(&[]), None);
    }
}
