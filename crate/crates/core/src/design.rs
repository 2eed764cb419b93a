//! Circulant model matrices, exact scaled information matrices, and the
//! signed / ternary transformations linking spring- and chemical-balance
//! weighing forms.

use nalgebra::DMatrix;

use crate::sequence::BinaryDesign;
use crate::{Error, Result};

/// A chemical-balance sequence with entries in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedDesign(pub Vec<i8>);

/// A chemical-balance sequence allowing rest points: entries in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedTernaryDesign(pub Vec<i8>);

/// A two-stimulus schedule: entry q > 0 presents a stimulus of type q,
/// 0 is rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TernaryStimulusDesign(pub Vec<u8>);

impl TernaryStimulusDesign {
    pub fn new(entries: Vec<u8>) -> Result<Self> {
        if entries.iter().any(|&e| e > 2) {
            return Err(Error::InvalidRecord(
                "ternary design entries must be 0, 1 or 2".into(),
            ));
        }
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// N-by-K matrix whose column k is the circular downward shift by k-1 of the
/// source sequence. Entries stay in the source alphabet, held exactly as
/// integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMatrix {
    pub n: usize,
    pub k: usize,
    data: Vec<i64>, // row-major
}

impl ModelMatrix {
    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.k + col]
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.k, |r, c| self.get(r, c) as f64)
    }

    /// Column sums, i.e. X^T j.
    pub fn column_sums(&self) -> Vec<i64> {
        let mut s = vec![0i64; self.k];
        for r in 0..self.n {
            for (c, sc) in s.iter_mut().enumerate() {
                *sc += self.get(r, c);
            }
        }
        s
    }
}

/// Exact integer representation of N * M_b (or N * M): entry (i, j) of the
/// information matrix is `scaled[i][j] / N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledInfoMatrix {
    pub k: usize,
    /// The common divisor N.
    pub divisor: i64,
    pub biased: bool,
    scaled: Vec<i64>, // row-major, N * M
}

impl ScaledInfoMatrix {
    pub fn from_entries(k: usize, divisor: i64, biased: bool, scaled: Vec<i64>) -> Self {
        assert_eq!(scaled.len(), k * k);
        Self {
            k,
            divisor,
            biased,
            scaled,
        }
    }

    pub fn get_scaled(&self, i: usize, j: usize) -> i64 {
        self.scaled[i * self.k + j]
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k, self.k, |i, j| {
            self.get_scaled(i, j) as f64 / self.divisor as f64
        })
    }

    /// N * tr{M}.
    pub fn trace_scaled(&self) -> i64 {
        (0..self.k).map(|i| self.get_scaled(i, i)).sum()
    }

    /// N^2 * tr{M^2}.
    pub fn trace_square_scaled(&self) -> i128 {
        let mut acc: i128 = 0;
        for i in 0..self.k {
            for j in 0..self.k {
                let e = self.get_scaled(i, j) as i128;
                acc += e * self.get_scaled(j, i) as i128;
            }
        }
        acc
    }
}

/// d~ = sign * (j - 2d).
pub fn to_signed(d: &BinaryDesign, sign: i8) -> SignedDesign {
    assert!(sign == 1 || sign == -1);
    SignedDesign(
        d.bits()
            .iter()
            .map(|&b| sign * (1 - 2 * b as i8))
            .collect(),
    )
}

/// Inverse of [`to_signed`]: d = (j - sign * d~) / 2.
pub fn from_signed(d: &SignedDesign, sign: i8) -> Vec<u8> {
    d.0.iter().map(|&e| ((1 - sign * e) / 2) as u8).collect()
}

/// Circulant model matrix of any integer sequence: row n, column k holds
/// seq[(n - k) mod N].
pub fn model_matrix(seq: &[i64], k: usize) -> Result<ModelMatrix> {
    let n = seq.len();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut data = vec![0i64; n * k];
    for row in 0..n {
        for col in 0..k {
            data[row * k + col] = seq[(row + n - col) % n];
        }
    }
    Ok(ModelMatrix { n, k, data })
}

pub fn model_matrix_binary(d: &BinaryDesign, k: usize) -> Result<ModelMatrix> {
    let seq: Vec<i64> = d.bits().iter().map(|&b| b as i64).collect();
    model_matrix(&seq, k)
}

pub fn model_matrix_signed(d: &SignedDesign, k: usize) -> Result<ModelMatrix> {
    let seq: Vec<i64> = d.0.iter().map(|&e| e as i64).collect();
    model_matrix(&seq, k)
}

pub fn model_matrix_signed_ternary(d: &SignedTernaryDesign, k: usize) -> Result<ModelMatrix> {
    let seq: Vec<i64> = d.0.iter().map(|&e| e as i64).collect();
    model_matrix(&seq, k)
}

/// Exact information matrix, scaled by N.
///
/// Biased: N * M_b = N * X^T X - (X^T j)(X^T j)^T. Raw: N * X^T X.
pub fn info_matrix(x: &ModelMatrix, biased: bool) -> ScaledInfoMatrix {
    let (n, k) = (x.n, x.k);
    let mut gram = vec![0i64; k * k];
    for i in 0..k {
        for j in i..k {
            let mut acc = 0i64;
            for r in 0..n {
                acc += x.get(r, i) * x.get(r, j);
            }
            gram[i * k + j] = acc;
            gram[j * k + i] = acc;
        }
    }
    let nn = n as i64;
    let mut scaled = vec![0i64; k * k];
    if biased {
        let s = x.column_sums();
        for i in 0..k {
            for j in 0..k {
                scaled[i * k + j] = nn * gram[i * k + j] - s[i] * s[j];
            }
        }
    } else {
        for (dst, &g) in scaled.iter_mut().zip(gram.iter()) {
            *dst = nn * g;
        }
    }
    ScaledInfoMatrix::from_entries(k, nn, biased, scaled)
}

/// Convenience: N * M_b of the signed version of a binary design.
pub fn scaled_info_signed(d: &BinaryDesign, k: usize) -> Result<ScaledInfoMatrix> {
    let x = model_matrix_signed(&to_signed(d, 1), k)?;
    Ok(info_matrix(&x, true))
}

/// Type-q indicator sequence of a two-stimulus design.
pub fn indicator(u: &TernaryStimulusDesign, q: u8) -> Vec<i64> {
    u.0.iter().map(|&e| (e == q) as i64).collect()
}

/// The half-sum and half-difference model matrices of the two stimulus
/// indicators: E = (X_1 + X_2) / 2, F = (X_1 - X_2) / 2.
pub fn ternary_components(
    u: &TernaryStimulusDesign,
    k: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let x1 = model_matrix(&indicator(u, 1), k)?.to_f64();
    let x2 = model_matrix(&indicator(u, 2), k)?.to_f64();
    Ok(((&x1 + &x2) / 2.0, (&x1 - &x2) / 2.0))
}

/// Information matrix for the HRF contrast of a two-stimulus design:
/// M_u = F^T (I - P) F with P the orthogonal projector onto span[j, E].
///
/// The projector is formed from a rank-revealing SVD with tolerance
/// 1e-8 times the largest singular value, so rank-deficient [j, E] is
/// projected onto its actual column space.
pub fn contrast_info(u: &TernaryStimulusDesign, k: usize) -> Result<DMatrix<f64>> {
    let (resid, _) = contrast_residual(u, k)?;
    Ok(resid.transpose() * &resid)
}

/// (I - P) F for the projector P onto span[j, E], plus the rank of that
/// span. This is the regressor block behind the contrast estimator.
pub fn contrast_residual(
    u: &TernaryStimulusDesign,
    k: usize,
) -> Result<(DMatrix<f64>, usize)> {
    let n = u.len();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let (e, f) = ternary_components(u, k)?;
    let mut span = DMatrix::zeros(n, k + 1);
    span.column_mut(0).fill(1.0);
    span.columns_mut(1, k).copy_from(&e);
    let svd = span.svd(true, false);
    let u_mat = svd.u.as_ref().expect("svd with u");
    let smax = svd.singular_values.max();
    let tol = 1e-8 * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let q = u_mat.columns(0, rank);
    // (I - QQ^T) F; the projector is idempotent
    Ok((&f - &q * (q.transpose() * &f), rank))
}

/// Map a two-stimulus design to its signed ternary form: 0 -> 0, 1 -> 1,
/// 2 -> -1.
pub fn signed_from_ternary(u: &TernaryStimulusDesign) -> SignedTernaryDesign {
    SignedTernaryDesign(
        u.0.iter()
            .map(|&e| match e {
                0 => 0,
                1 => 1,
                _ => -1,
            })
            .collect(),
    )
}

/// Which binary-to-ternary lifting to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftVariant {
    /// u = j + d: 0 -> 1, 1 -> 2.
    JPlusD,
    /// u = 2j - d: 0 -> 2, 1 -> 1.
    TwoJMinusD,
}

/// Lift a binary design to a zero-free two-stimulus design.
pub fn ternary_from_binary(d: &BinaryDesign, variant: LiftVariant) -> TernaryStimulusDesign {
    TernaryStimulusDesign(
        d.bits()
            .iter()
            .map(|&b| match variant {
                LiftVariant::JPlusD => 1 + b,
                LiftVariant::TwoJMinusD => 2 - b,
            })
            .collect(),
    )
}
