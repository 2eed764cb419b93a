//! Optimality criteria on information matrices: the Phi_p family
//! (D at p = 0, A at p = 1, E at p = infinity), generic type 1 functionals,
//! and the (M,S) two-stage comparison.

use nalgebra::DMatrix;

use crate::design::ScaledInfoMatrix;
use crate::{Error, Result};

/// Relative clamp for eigenvalues that should be nonnegative.
pub const EIGEN_CLAMP_REL: f64 = 1e-10;

/// Eigenvalues of a symmetric nonnegative definite matrix, descending.
/// Values within `EIGEN_CLAMP_REL * lambda_max` of zero are clamped to zero;
/// anything more negative is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(pub Vec<f64>);

impl Spectrum {
    pub fn min(&self) -> f64 {
        *self.0.last().expect("nonempty spectrum")
    }

    pub fn is_singular(&self) -> bool {
        self.min() == 0.0
    }
}

/// Which criterion to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum Criterion {
    /// Phi_p for p in [0, inf].
    PhiP(f64),
    /// Sum of f over the spectrum for a decreasing convex f with f(0) = inf.
    Type1(fn(f64) -> f64),
}

impl Criterion {
    pub fn evaluate(&self, m: &DMatrix<f64>) -> Result<f64> {
        match self {
            Criterion::PhiP(p) => phi_p(m, *p),
            Criterion::Type1(f) => type1_value(m, *f),
        }
    }
}

/// Descending eigenvalues of a symmetric matrix, with the nonnegativity clamp.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Spectrum> {
    let k = m.nrows();
    if m.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
    for i in 0..k {
        for j in (i + 1)..k {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let lmax = eig[0].max(0.0);
    let clamp = EIGEN_CLAMP_REL * lmax;
    for l in eig.iter_mut() {
        if l.abs() <= clamp {
            *l = 0.0;
        }
    }
    Ok(Spectrum(eig))
}

/// Phi_p value of a spectrum: |M|^{-1/K} at p = 0, [tr{M^-p}/K]^{1/p} on
/// (0, inf), 1/lambda_min at p = inf. Singular matrices score +inf.
pub fn phi_p_of_spectrum(spec: &Spectrum, p: f64) -> Result<f64> {
    if p < 0.0 {
        return Err(Error::NegativeP(p));
    }
    if spec.is_singular() || spec.min() < 0.0 {
        return Ok(f64::INFINITY);
    }
    let k = spec.0.len() as f64;
    let v = if p == 0.0 {
        // geometric mean of the inverse eigenvalues, via logs
        (-spec.0.iter().map(|l| l.ln()).sum::<f64>() / k).exp()
    } else if p.is_infinite() {
        1.0 / spec.min()
    } else {
        (spec.0.iter().map(|l| l.powf(-p)).sum::<f64>() / k).powf(1.0 / p)
    };
    Ok(v)
}

pub fn phi_p(m: &DMatrix<f64>, p: f64) -> Result<f64> {
    if p < 0.0 {
        return Err(Error::NegativeP(p));
    }
    phi_p_of_spectrum(&eigenvalues(m)?, p)
}

/// Type 1 criterion value: sum of f over the eigenvalues, +inf on a
/// singular matrix.
pub fn type1_value(m: &DMatrix<f64>, f: fn(f64) -> f64) -> Result<f64> {
    let spec = eigenvalues(m)?;
    if spec.is_singular() {
        return Ok(f64::INFINITY);
    }
    Ok(spec.0.iter().map(|&l| f(l)).sum())
}

/// f(x) = 1/x, the type 1 function matching the (unnormalized) A-criterion.
pub fn type1_inverse(x: f64) -> f64 {
    1.0 / x
}

/// f(x) = -log x, the type 1 function matching the D-criterion.
pub fn type1_neg_log(x: f64) -> f64 {
    -x.ln()
}

/// Outcome of an (M,S) comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsOrdering {
    Better,
    Worse,
    Tie,
}

/// (M,S) screening order on exact scaled integers: first maximize the trace,
/// then minimize the trace of the square. Divisors may differ; comparisons
/// cross-multiply so they stay exact.
pub fn ms_compare(m1: &ScaledInfoMatrix, m2: &ScaledInfoMatrix) -> Result<MsOrdering> {
    if m1.k != m2.k {
        return Err(Error::DimensionMismatch(format!(
            "(M,S) comparison of {}x{} against {}x{}",
            m1.k, m1.k, m2.k, m2.k
        )));
    }
    let (n1, n2) = (m1.divisor as i128, m2.divisor as i128);
    let t1 = m1.trace_scaled() as i128 * n2;
    let t2 = m2.trace_scaled() as i128 * n1;
    if t1 != t2 {
        return Ok(if t1 > t2 {
            MsOrdering::Better
        } else {
            MsOrdering::Worse
        });
    }
    let s1 = m1.trace_square_scaled() * n2 * n2;
    let s2 = m2.trace_square_scaled() * n1 * n1;
    Ok(match s1.cmp(&s2) {
        std::cmp::Ordering::Less => MsOrdering::Better,
        std::cmp::Ordering::Greater => MsOrdering::Worse,
        std::cmp::Ordering::Equal => MsOrdering::Tie,
    })
}
