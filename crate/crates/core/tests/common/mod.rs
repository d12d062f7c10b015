//! Independent oracles and random-instance generators shared by the
//! integration tests. Nothing here calls into the filter.

#![allow(dead_code)]

use dglm_core::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut *rng)))
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_iterator(r, c, (0..r * c).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut *rng)))
}

/// `A A' / n + floor I`, well conditioned for moderate `floor`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, scale: f64, floor: f64) -> Matrix {
    let a = normal_matrix(rng, n, n, 1.0);
    (&a * a.transpose()) * (scale / n as f64) + Matrix::identity(n, n) * floor
}

/// `Q diag(λ) Q'` with `λ ~ U(lo, hi)` and `Q` a random rotation.
pub fn bounded_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Matrix {
    let q = normal_matrix(rng, n, n, 1.0).qr().q();
    let d = Matrix::from_diagonal(&Vector::from_iterator(n, (0..n).map(|_| uniform(rng, lo, hi))));
    &q * d * q.transpose()
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Naive triple-loop product.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = Matrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut s = 0.0;
            for l in 0..a.ncols() {
                s += a[(i, l)] * b[(l, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = Matrix::identity(n, n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        m.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let p = m[(col, col)];
        assert!(p.abs() > 1e-300, "singular matrix in oracle");
        for j in 0..n {
            m[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[(i, col)];
                if f != 0.0 {
                    for j in 0..n {
                        m[(i, j)] -= f * m[(col, j)];
                        inv[(i, j)] -= f * inv[(col, j)];
                    }
                }
            }
        }
    }
    inv
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_min_eigenvalue(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min)
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |w, (x, y)| w.max((x - y).abs()))
}

pub fn max_abs_diff_vec(a: &Vector, b: &Vector) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).fold(0.0, |w, (x, y)| w.max((x - y).abs()))
}

/// Scalar log-likelihoods written out independently of the library.
pub fn logistic_loglik(y: f64, l: f64) -> f64 {
    // y l − log(1 + e^l), evaluated stably
    y * l - (l.max(0.0) + (-l.abs()).exp().ln_1p())
}

pub fn poisson_loglik(y: f64, l: f64) -> f64 {
    y * l - l.exp()
}

/// Posterior moments of `θ ~ N(m0, C0)` with scalar observations
/// `y_i ~ p(y_i | x_i'θ)`, by tensor-grid quadrature in one or two
/// dimensions.
///
/// The grid spans ±`half_width` standard deviations around `center` along
/// each coordinate, with `center` and `spread` supplied by the caller.
pub struct GridPosterior {
    pub mean: Vector,
    pub cov: Matrix,
}

pub fn grid_posterior(
    m0: &Vector,
    c0: &Matrix,
    data: &[(Vector, f64)],
    loglik: fn(f64, f64) -> f64,
    center: &Vector,
    spread: &Vector,
    points: usize,
    half_width: f64,
) -> GridPosterior {
    let k = m0.len();
    assert!(k == 1 || k == 2);
    let p0 = invert(c0);
    let axis = |d: usize, i: usize| {
        let lo = center[d] - half_width * spread[d];
        let step = 2.0 * half_width * spread[d] / (points - 1) as f64;
        lo + step * i as f64
    };
    let log_post = |theta: &[f64]| {
        let mut q = 0.0;
        for i in 0..k {
            for j in 0..k {
                q += (theta[i] - m0[i]) * p0[(i, j)] * (theta[j] - m0[j]);
            }
        }
        let mut lp = -0.5 * q;
        for (x, y) in data {
            let l: f64 = (0..k).map(|i| x[i] * theta[i]).sum();
            lp += loglik(*y, l);
        }
        lp
    };
    let mut nodes: Vec<([f64; 2], f64)> = Vec::with_capacity(points.pow(k as u32));
    if k == 1 {
        for i in 0..points {
            let t = [axis(0, i), 0.0];
            nodes.push((t, log_post(&t[..1])));
        }
    } else {
        for i in 0..points {
            for j in 0..points {
                let t = [axis(0, i), axis(1, j)];
                nodes.push((t, log_post(&t)));
            }
        }
    }
    let top = nodes.iter().map(|n| n.1).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut s1 = [0.0; 2];
    let mut s2 = [[0.0; 2]; 2];
    for (t, lp) in &nodes {
        let w = (lp - top).exp();
        z += w;
        for i in 0..k {
            s1[i] += w * t[i];
            for j in 0..k {
                s2[i][j] += w * t[i] * t[j];
            }
        }
    }
    let mean = Vector::from_iterator(k, (0..k).map(|i| s1[i] / z));
    let mut cov = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            cov[(i, j)] = s2[i][j] / z - mean[i] * mean[j];
        }
    }
    GridPosterior { mean, cov }
}

/// Central difference of `f` at `x` along coordinate `i`.
pub fn central_diff(f: &dyn Fn(&Vector) -> f64, x: &Vector, i: usize, h: f64) -> f64 {
    let mut up = x.clone();
    let mut down = x.clone();
    up[i] += h;
    down[i] -= h;
    (f(&up) - f(&down)) / (2.0 * h)
}

/// Relative error with a small floor so values near zero compare absolutely.
pub fn rel_err(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(1e-3)
}

#[derive(Clone, Copy, Debug)]
pub enum Family {
    Logistic,
    Poisson,
}

/// A Gaussian prior and one scalar observation, for comparing an estimation
/// step with the exact posterior.
pub struct OracleProblem {
    pub family: Family,
    pub m0: Vector,
    pub c0: Matrix,
    pub x: Vector,
    pub y: f64,
}

impl OracleProblem {
    /// Prior eigenvalues in `[spread/2, 3 spread/2]`; `θ` is drawn from the
    /// prior and `y` from the model at `x'θ`.
    pub fn random(rng: &mut ChaCha8Rng, family: Family, k: usize, spread: f64) -> Self {
        let m0 = normal_vector(rng, k, 0.3);
        let c0 = bounded_spd(rng, k, spread / 2.0, 1.5 * spread);
        let factor = c0.clone().cholesky().unwrap().l();
        let theta = &m0 + factor * normal_vector(rng, k, 1.0);
        let x = normal_vector(rng, k, 1.0);
        let l = x.dot(&theta);
        let y = match family {
            Family::Logistic => {
                if uniform(rng, 0.0, 1.0) < 1.0 / (1.0 + (-l).exp()) {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Poisson => rand_distr::Poisson::new(l.exp()).unwrap().sample(rng),
        };
        Self { family, m0, c0, x, y }
    }

    pub fn model(&self) -> dglm_core::Model {
        match self.family {
            Family::Logistic => dglm_core::Model::bernoulli_logit(),
            Family::Poisson => dglm_core::Model::poisson(),
        }
    }

    pub fn prior(&self) -> dglm_core::PriorPrediction {
        dglm_core::PriorPrediction::new(self.m0.clone(), self.c0.clone(), 1).unwrap()
    }

    pub fn observation(&self) -> dglm_core::Observation {
        dglm_core::Observation::scalar(self.x.clone(), self.y)
    }

    /// Exact posterior moments: a prior-scaled grid, then four passes
    /// recentred on the running estimate.
    pub fn exact(&self) -> GridPosterior {
        let k = self.m0.len();
        let ll = match self.family {
            Family::Logistic => logistic_loglik,
            Family::Poisson => poisson_loglik,
        };
        let data = [(self.x.clone(), self.y)];
        let mut spread = Vector::from_iterator(k, (0..k).map(|i| self.c0[(i, i)].sqrt()));
        let mut half = 10.0;
        let mut g = grid_posterior(&self.m0, &self.c0, &data, ll, &self.m0, &spread, 400, half);
        for _ in 0..4 {
            let cell = 2.0 * half / 399.0;
            spread = Vector::from_iterator(k, (0..k).map(|i| {
                g.cov[(i, i)].sqrt().max(cell * spread[i])
            }));
            half = 9.0;
            let center = g.mean.clone();
            g = grid_posterior(&self.m0, &self.c0, &data, ll, &center, &spread, 400, half);
        }
        g
    }

    /// Largest absolute mean error and largest relative standard-deviation
    /// error of `(mean, cov)` against the exact posterior.
    pub fn gap(&self, mean: &Vector, cov: &Matrix) -> (f64, f64) {
        let truth = self.exact();
        let dm = max_abs_diff_vec(mean, &truth.mean);
        let dsd = (0..mean.len())
            .map(|j| (cov[(j, j)].sqrt() / truth.cov[(j, j)].sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        (dm, dsd)
    }
}
