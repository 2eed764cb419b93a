//! Monte-Carlo validation of the statistical model: response generation,
//! least-squares fitting, and empirical-covariance comparison against the
//! analytic information matrices.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::criteria::Criterion;
use crate::design::{
    contrast_residual, model_matrix_binary, scaled_info_signed, ternary_components,
    TernaryStimulusDesign,
};
use crate::sequence::BinaryDesign;
use crate::{Error, Result};

/// Noise model for the scan measurements.
#[derive(Debug, Clone)]
pub enum NoiseSpec {
    Iid { sigma2: f64 },
    /// cov(eps) = alpha I + beta j^T + j beta^T; positive definiteness is
    /// checked when the factor is built.
    Compound { alpha: f64, beta: Vec<f64> },
}

impl NoiseSpec {
    /// Default compound spec: alpha = 1, beta = 0.1 j / N.
    pub fn default_compound(n: usize) -> Self {
        NoiseSpec::Compound {
            alpha: 1.0,
            beta: vec![0.1 / n as f64; n],
        }
    }

    /// Square-root factor S with cov = S S^T.
    fn factor(&self, n: usize) -> Result<NoiseFactor> {
        match self {
            NoiseSpec::Iid { sigma2 } => {
                if *sigma2 < 0.0 {
                    return Err(Error::CovarianceNotPositiveDefinite);
                }
                Ok(NoiseFactor::Scalar(sigma2.sqrt()))
            }
            NoiseSpec::Compound { alpha, beta } => {
                if beta.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "beta has length {}, design has {n} points",
                        beta.len()
                    )));
                }
                let mut cov = DMatrix::from_element(n, n, 0.0);
                for i in 0..n {
                    cov[(i, i)] = *alpha;
                    for j in 0..n {
                        cov[(i, j)] += beta[i] + beta[j];
                    }
                }
                let eig = nalgebra::SymmetricEigen::new(cov);
                if eig.eigenvalues.min() <= 0.0 {
                    return Err(Error::CovarianceNotPositiveDefinite);
                }
                let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt()));
                Ok(NoiseFactor::Dense(&eig.eigenvectors * sqrt))
            }
        }
    }
}

/// Covariance square root, kept scalar in the iid case so drawing noise
/// stays O(N) per replicate.
enum NoiseFactor {
    Scalar(f64),
    Dense(DMatrix<f64>),
}

impl NoiseFactor {
    fn apply(&self, z: DVector<f64>) -> DVector<f64> {
        match self {
            NoiseFactor::Scalar(s) => z * *s,
            NoiseFactor::Dense(m) => m * z,
        }
    }
}

/// True parameter values used to generate responses.
#[derive(Debug, Clone)]
pub enum GroundTruth {
    Hrf { gamma: f64, h: Vec<f64> },
    TwoStim {
        gamma: f64,
        h1: Vec<f64>,
        h2: Vec<f64>,
    },
}

/// The stimulus schedule a simulation runs on.
#[derive(Debug, Clone)]
pub enum SimDesign {
    Single(BinaryDesign),
    TwoStim(TernaryStimulusDesign),
}

impl SimDesign {
    fn n(&self) -> usize {
        match self {
            SimDesign::Single(d) => d.len(),
            SimDesign::TwoStim(u) => u.len(),
        }
    }
}

fn standard_normals(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    // Box-Muller, consuming two uniforms per pair
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(r * theta.cos());
        out.push(r * theta.sin());
    }
    out.truncate(n);
    DVector::from_vec(out)
}

/// Seedable generator with one independent stream per replicate.
fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn mean_response(design: &SimDesign, truth: &GroundTruth) -> Result<DVector<f64>> {
    let n = design.n();
    match (design, truth) {
        (SimDesign::Single(d), GroundTruth::Hrf { gamma, h }) => {
            let k = h.len();
            let x = model_matrix_binary(d, k)?.to_f64();
            Ok(DVector::from_element(n, *gamma) + x * DVector::from_vec(h.clone()))
        }
        (SimDesign::TwoStim(u), GroundTruth::TwoStim { gamma, h1, h2 }) => {
            if h1.len() != h2.len() {
                return Err(Error::DimensionMismatch(
                    "h1 and h2 must have the same length".into(),
                ));
            }
            let k = h1.len();
            let (e, f) = ternary_components(u, k)?;
            let eta = DVector::from_vec(h1.iter().zip(h2).map(|(a, b)| a + b).collect());
            let zeta = DVector::from_vec(h1.iter().zip(h2).map(|(a, b)| a - b).collect());
            Ok(DVector::from_element(n, *gamma) + e * eta + f * zeta)
        }
        _ => Err(Error::DimensionMismatch(
            "design kind does not match ground truth kind".into(),
        )),
    }
}

/// Draw one response vector y = gamma j + X h + eps (or the two-stimulus
/// analogue), reproducibly from the seed.
pub fn generate_responses(
    design: &SimDesign,
    truth: &GroundTruth,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = design.n();
    let mean = mean_response(design, truth)?;
    let factor = noise.factor(n)?;
    let mut rng = replicate_rng(seed, 0);
    let eps = factor.apply(standard_normals(&mut rng, n));
    Ok((mean + eps).iter().copied().collect())
}

/// What a least-squares fit estimated.
#[derive(Debug, Clone)]
pub enum FitEstimates {
    Hrf { h: Vec<f64> },
    Contrast { eta: Vec<f64>, zeta: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub gamma: f64,
    pub estimates: FitEstimates,
    pub residual_variance: f64,
}

fn solve_ols(z: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let p = z.ncols();
    let svd = z.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    if rank < p {
        return Err(Error::SingularFit { rank, expected: p });
    }
    svd.solve(y, 1e-10 * smax)
        .map_err(|_| Error::SingularFit { rank, expected: p })
}

/// Ordinary least squares with intercept. Single-stimulus designs regress
/// on [j, X]. Two-stimulus designs estimate the HRF difference through the
/// projector onto the orthocomplement of span[j, E] (E may be collinear
/// with j, e.g. for zero-free schedules), then back out the sum part by a
/// minimum-norm fit.
pub fn ols_fit(y: &[f64], design: &SimDesign, k: usize) -> Result<FitResult> {
    let n = design.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "response length {} vs design length {n}",
            y.len()
        )));
    }
    let yv = DVector::from_vec(y.to_vec());
    match design {
        SimDesign::Single(d) => {
            let x = model_matrix_binary(d, k)?.to_f64();
            let mut z = DMatrix::zeros(n, 1 + k);
            z.column_mut(0).fill(1.0);
            z.columns_mut(1, k).copy_from(&x);
            let beta = solve_ols(&z, &yv)?;
            let resid = &yv - &z * &beta;
            let dof = (n as f64 - z.ncols() as f64).max(1.0);
            Ok(FitResult {
                gamma: beta[0],
                estimates: FitEstimates::Hrf {
                    h: beta.rows(1, k).iter().copied().collect(),
                },
                residual_variance: resid.norm_squared() / dof,
            })
        }
        SimDesign::TwoStim(u) => {
            let (resid_f, span_rank) = contrast_residual(u, k)?;
            let m_u = resid_f.transpose() * &resid_f;
            let m_inv = m_u.clone().try_inverse().ok_or_else(|| {
                let svd = m_u.svd(false, false);
                let smax = svd.singular_values.max();
                Error::SingularFit {
                    rank: svd
                        .singular_values
                        .iter()
                        .filter(|&&s| s > 1e-10 * smax)
                        .count(),
                    expected: k,
                }
            })?;
            let zeta = m_inv * (resid_f.transpose() * &yv);
            // sum part: minimum-norm fit of the remainder on [j, E]
            let (e, f) = ternary_components(u, k)?;
            let mut span = DMatrix::zeros(n, 1 + k);
            span.column_mut(0).fill(1.0);
            span.columns_mut(1, k).copy_from(&e);
            let left = &yv - &f * &zeta;
            let svd = span.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let beta = svd
                .solve(&left, 1e-8 * smax)
                .map_err(|_| Error::SingularFit { rank: 0, expected: k + 1 })?;
            let fitted = &span * &beta + &f * &zeta;
            let dof = (n as f64 - (span_rank + k) as f64).max(1.0);
            Ok(FitResult {
                gamma: beta[0],
                estimates: FitEstimates::Contrast {
                    eta: beta.rows(1, k).iter().copied().collect(),
                    zeta: zeta.iter().copied().collect(),
                },
                residual_variance: (&yv - fitted).norm_squared() / dof,
            })
        }
    }
}

/// Kahan-compensated accumulator, so parallel- or re-ordered replicate sums
/// stay reproducible at the tolerance level.
#[derive(Debug, Clone)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn new() -> Self {
        Self { sum: 0.0, c: 0.0 }
    }
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Empirical mean and covariance of the target estimate over replicates.
pub struct MonteCarloSummary {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub replicates: u64,
}

/// Repeatedly generate responses and refit, accumulating moments of the
/// HRF estimate (single design) or contrast estimate (two-stimulus design).
/// Each replicate draws from its own RNG stream of the shared seed.
pub fn monte_carlo_cov(
    design: &SimDesign,
    truth: &GroundTruth,
    noise: &NoiseSpec,
    replicates: u64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    let n = design.n();
    let mean = mean_response(design, truth)?;
    let factor = noise.factor(n)?;
    let k = match truth {
        GroundTruth::Hrf { h, .. } => h.len(),
        GroundTruth::TwoStim { h1, .. } => h1.len(),
    };
    // the design is fixed, so the target estimate is one precomputed k-by-N
    // linear map applied per replicate
    let solver: DMatrix<f64> = match design {
        SimDesign::Single(d) => {
            let x = model_matrix_binary(d, k)?.to_f64();
            let mut z = DMatrix::zeros(n, 1 + k);
            z.column_mut(0).fill(1.0);
            z.columns_mut(1, k).copy_from(&x);
            let gram = z.transpose() * &z;
            let inv = gram.try_inverse().ok_or(Error::SingularFit {
                rank: 0,
                expected: 1 + k,
            })?;
            (inv * z.transpose()).rows(1, k).into_owned()
        }
        SimDesign::TwoStim(u) => {
            let (resid_f, _) = contrast_residual(u, k)?;
            let m_u = resid_f.transpose() * &resid_f;
            let inv = m_u.try_inverse().ok_or(Error::SingularFit {
                rank: 0,
                expected: k,
            })?;
            inv * resid_f.transpose()
        }
    };

    let mut sum = vec![Compensated::new(); k];
    let mut cross = vec![Compensated::new(); k * k];
    for rep in 0..replicates {
        let mut rng = replicate_rng(seed, rep);
        let eps = factor.apply(standard_normals(&mut rng, n));
        let y = &mean + eps;
        let est = &solver * y;
        for i in 0..k {
            sum[i].add(est[i]);
            for j in 0..k {
                cross[i * k + j].add(est[i] * est[j]);
            }
        }
    }
    let r = replicates as f64;
    let mean_est = DVector::from_fn(k, |i, _| sum[i].sum / r);
    let covariance = DMatrix::from_fn(k, k, |i, j| {
        cross[i * k + j].sum / r - mean_est[i] * mean_est[j]
    });
    Ok(MonteCarloSummary {
        mean: mean_est,
        covariance,
        replicates,
    })
}

/// One row of an efficiency table.
#[derive(Debug, Clone)]
pub struct EfficiencyRow {
    pub label: String,
    pub value: f64,
    /// best value / this value, in [0, 1]; 0 for singular designs.
    pub efficiency: f64,
}

/// Relative efficiencies of a set of designs under one criterion, computed
/// from the signed information matrices.
pub fn efficiency_report(
    designs: &[(String, BinaryDesign)],
    k: usize,
    criterion: &Criterion,
) -> Result<Vec<EfficiencyRow>> {
    let mut values = Vec::with_capacity(designs.len());
    for (label, d) in designs {
        let m = scaled_info_signed(d, k)?.to_f64();
        values.push((label.clone(), criterion.evaluate(&m)?));
    }
    let best = values
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    Ok(values
        .into_iter()
        .map(|(label, value)| EfficiencyRow {
            label,
            efficiency: if value.is_finite() && best.is_finite() {
                best / value
            } else {
                0.0
            },
            value,
        })
        .collect())
}
