//! Optimality certificates: the cubic lower bound on the design length,
//! exact target information-matrix forms per residue of N mod 4, and
//! classification of designs for both the single-HRF and contrast
//! objectives.

use serde::Serialize;

use crate::design::{
    info_matrix, model_matrix_signed, model_matrix_signed_ternary, signed_from_ternary,
    to_signed, ScaledInfoMatrix, TernaryStimulusDesign,
};
use crate::sequence::{BinaryDesign, Provenance};
use crate::{Error, Result};

/// Which structural target the information matrix matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetForm {
    /// (N+1)[I - J/N], attainable when N = 4t - 1.
    Hadamard4tMinus1,
    /// N I, attainable when N = 4t (circulant orthogonal array).
    CirculantOa4t,
    /// (N-1)[I + J/N], attainable when N = 4t + 1.
    NearOa4tPlus1,
    None,
}

/// Criterion family a matched design is certified for.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CoveredFamily {
    /// Phi_p for all p in [lo, hi], backed by the explicit cubic bound.
    PhiPRange { lo: f64, hi: f64 },
    /// Every orthogonally invariant, scale-monotone convex criterion.
    Universal,
    /// Every type 1 criterion.
    Type1All,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub n0: f64,
    pub satisfied: bool,
    /// N - N0(K, 1).
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InsertionCheck {
    pub g: usize,
    pub k: usize,
    pub satisfied: bool,
}

/// What the design was certified for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    EstimateHrf,
    Contrast,
}

/// Record of which optimality result applies to a design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub n: usize,
    pub k: usize,
    pub residue_mod_4: u8,
    pub objective: Objective,
    pub matched_form: TargetForm,
    pub bound: Option<BoundCheck>,
    pub insertion: Option<InsertionCheck>,
    pub family: CoveredFamily,
    /// Short label for the optimality result backing the certificate.
    pub label: String,
    pub notes: Vec<String>,
}

/// Coefficients of the cubic whose greatest real root bounds the design
/// length needed for the A-criterion certificate.
pub fn bound_cubic(k: usize, x: f64) -> f64 {
    let kf = k as f64;
    2.0 * x.powi(3) + (10.0 - 7.0 * kf) * x.powi(2) + 2.0 * (2.0 * kf - 5.0) * (kf - 1.0) * x
        + 4.0 * kf * kf
        - 7.0 * kf
}

/// Greatest real root of the bound cubic, for K >= 4. Always exceeds 2K - 1.
pub fn n0_cubic(k: usize) -> Result<f64> {
    if k < 4 {
        return Err(Error::BoundRequiresK4(k));
    }
    let mut lo = 2.0 * k as f64 - 1.0;
    debug_assert!(bound_cubic(k, lo) < 0.0);
    let mut hi = lo.max(1.0);
    while bound_cubic(k, hi) <= 0.0 {
        hi *= 2.0;
    }
    // bisect to machine precision, then one Newton polish
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bound_cubic(k, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let kf = k as f64;
    for _ in 0..3 {
        let dc = 6.0 * x * x + 2.0 * (10.0 - 7.0 * kf) * x + 2.0 * (2.0 * kf - 5.0) * (kf - 1.0);
        if dc.abs() > 0.0 {
            x -= bound_cubic(k, x) / dc;
        }
    }
    Ok(x)
}

/// Exact scaled target form N * M_b for the given length, or `None` for
/// N = 2 (mod 4), where no optimal form is known.
pub fn target_info_matrix(n: usize, k: usize) -> Result<Option<ScaledInfoMatrix>> {
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let nn = n as i64;
    let (diag, off) = match n % 4 {
        3 => (nn * (nn + 1) - (nn + 1), -(nn + 1)), // (N+1)[I - J/N]
        0 => (nn * nn, 0),                          // N I
        1 => (nn * (nn - 1) + (nn - 1), nn - 1),    // (N-1)[I + J/N]
        _ => return Ok(None),
    };
    let mut scaled = vec![off; k * k];
    for i in 0..k {
        scaled[i * k + i] = diag;
    }
    Ok(Some(ScaledInfoMatrix::from_entries(k, nn, true, scaled)))
}

/// Shared classification once the exact scaled M_b of the +-1/0 sequence is
/// in hand.
fn classify(
    n: usize,
    k: usize,
    objective: Objective,
    m_scaled: &ScaledInfoMatrix,
    p_cap: f64,
    insertion: Option<InsertionCheck>,
) -> Result<Certificate> {
    let residue = (n % 4) as u8;
    let target = target_info_matrix(n, k)?;
    let matched = match &target {
        Some(t) => t == m_scaled,
        None => false,
    };
    let mut notes = Vec::new();
    let mut bound = None;
    let (matched_form, family, label) = if !matched {
        if residue == 2 {
            notes.push("no optimal target form is known for N = 2 (mod 4)".into());
        }
        (TargetForm::None, CoveredFamily::None, "unmatched".to_string())
    } else {
        match residue {
            3 => {
                if k >= 4 {
                    let n0 = n0_cubic(k)?;
                    let satisfied = n as f64 >= n0;
                    bound = Some(BoundCheck {
                        n0,
                        satisfied,
                        margin: n as f64 - n0,
                    });
                    if satisfied {
                        if p_cap > 1.0 {
                            notes.push(
                                "claims for p > 1 are asymptotic (no explicit bound)".into(),
                            );
                        }
                        (
                            TargetForm::Hadamard4tMinus1,
                            CoveredFamily::PhiPRange {
                                lo: 0.0,
                                hi: p_cap.min(1.0),
                            },
                            "hadamard-phi-p".to_string(),
                        )
                    } else {
                        notes.push(
                            "form matched but N is below the explicit A-criterion bound".into(),
                        );
                        (
                            TargetForm::Hadamard4tMinus1,
                            CoveredFamily::None,
                            "hadamard-form-only".to_string(),
                        )
                    }
                } else {
                    notes.push("form matched; explicit bound unavailable (K < 4)".into());
                    (
                        TargetForm::Hadamard4tMinus1,
                        CoveredFamily::None,
                        "hadamard-form-only".to_string(),
                    )
                }
            }
            0 => (
                TargetForm::CirculantOa4t,
                CoveredFamily::Universal,
                "circulant-oa-universal".to_string(),
            ),
            1 => (
                TargetForm::NearOa4tPlus1,
                CoveredFamily::Type1All,
                "near-oa-type1".to_string(),
            ),
            _ => unreachable!("residue 2 never matches"),
        }
    };
    Ok(Certificate {
        n,
        k,
        residue_mod_4: residue,
        objective,
        matched_form,
        bound,
        insertion,
        family,
        label,
        notes,
    })
}

/// Certify a binary design for HRF estimation by exact structural match of
/// its signed information matrix against the target form for N mod 4.
pub fn certify_estimation(d: &BinaryDesign, k: usize, p_cap: f64) -> Result<Certificate> {
    let n = d.len();
    let x = model_matrix_signed(&to_signed(d, 1), k)?;
    let m_scaled = info_matrix(&x, true);
    let insertion = match d.provenance() {
        Provenance::Insertion { g, .. } => Some(InsertionCheck {
            g: *g,
            k,
            satisfied: k <= g + 1,
        }),
        _ => None,
    };
    classify(n, k, Objective::EstimateHrf, &m_scaled, p_cap, insertion)
}

/// Certify a two-stimulus design for the HRF contrast. The signed ternary
/// sequence is matched against the same targets; for N = 4t - 1 the
/// zero-count and sequence-sum consequences of a match are verified too.
pub fn certify_contrast(
    u: &TernaryStimulusDesign,
    k: usize,
    p_cap: f64,
) -> Result<Certificate> {
    let n = u.len();
    let dbar = signed_from_ternary(u);
    let x = model_matrix_signed_ternary(&dbar, k)?;
    let m_scaled = info_matrix(&x, true);
    let mut cert = classify(n, k, Objective::Contrast, &m_scaled, p_cap, None)?;
    if cert.matched_form == TargetForm::Hadamard4tMinus1 {
        // a matched form forces |j^T dbar| = 1, no zeros, and the raw Gram
        // matrix (N+1)I - J; confirm all three
        let a: i64 = dbar.0.iter().map(|&e| e as i64).sum();
        let zeros = dbar.0.iter().filter(|&&e| e == 0).count();
        let raw = info_matrix(&x, false);
        let nn = n as i64;
        let raw_ok = (0..k).all(|i| {
            (0..k).all(|j| {
                let want = if i == j { nn * nn } else { -nn };
                raw.get_scaled(i, j) == want
            })
        });
        if a.abs() == 1 && zeros == 0 && raw_ok {
            cert.notes
                .push("verified: unit sequence sum, no rest points, two-level Gram".into());
        } else {
            return Err(Error::InvalidRecord(format!(
                "matched form with inconsistent structure: |sum| = {}, zeros = {zeros}",
                a.abs()
            )));
        }
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{ternary_from_binary, LiftVariant};
    use crate::sequence::{insert_zeros, paley_hadamard_sequence};

    #[test]
    fn n0_example_value() {
        let n0 = n0_cubic(9).unwrap();
        assert!((n0 - 21.34).abs() < 0.01, "n0(9) = {n0}");
    }

    #[test]
    fn n0_k4() {
        let n0 = n0_cubic(4).unwrap();
        assert!((n0 - 7.47).abs() < 0.01, "n0(4) = {n0}");
    }

    #[test]
    fn n0_root_and_bracket_properties() {
        for k in 4..=100 {
            let n0 = n0_cubic(k).unwrap();
            assert!(bound_cubic(k, n0).abs() < 1e-6, "c(n0({k})) = {}", bound_cubic(k, n0));
            assert!(bound_cubic(k, n0 + 1.0) > 0.0);
            assert!(bound_cubic(k, 2.0 * k as f64 - 1.0) < 0.0);
            assert!(n0 > 2.0 * k as f64 - 1.0);
        }
    }

    #[test]
    fn n0_requires_k4() {
        assert!(matches!(n0_cubic(3), Err(Error::BoundRequiresK4(3))));
    }

    #[test]
    fn target_forms() {
        let t = target_info_matrix(7, 3).unwrap().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.get_scaled(i, j), if i == j { 48 } else { -8 });
            }
        }
        let t = target_info_matrix(8, 3).unwrap().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.get_scaled(i, j), if i == j { 64 } else { 0 });
            }
        }
        let t = target_info_matrix(9, 3).unwrap().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.get_scaled(i, j), if i == j { 80 } else { 8 });
            }
        }
        assert!(target_info_matrix(10, 3).unwrap().is_none());
    }

    #[test]
    fn certify_paley_small_k() {
        let d = paley_hadamard_sequence(7).unwrap();
        let cert = certify_estimation(&d, 3, 1.0).unwrap();
        assert_eq!(cert.matched_form, TargetForm::Hadamard4tMinus1);
        assert_eq!(cert.family, CoveredFamily::None);
        assert!(cert.bound.is_none());
    }

    #[test]
    fn certify_paley_large() {
        let d = paley_hadamard_sequence(151).unwrap();
        let cert = certify_estimation(&d, 9, 1.0).unwrap();
        assert_eq!(cert.matched_form, TargetForm::Hadamard4tMinus1);
        let bound = cert.bound.unwrap();
        assert!(bound.satisfied);
        assert!((bound.n0 - 21.34).abs() < 0.01);
        assert_eq!(cert.family, CoveredFamily::PhiPRange { lo: 0.0, hi: 1.0 });
    }

    #[test]
    fn certify_insertion_universal() {
        let d1 = insert_zeros(&paley_hadamard_sequence(7).unwrap(), 1).unwrap();
        let cert = certify_estimation(&d1, 3, 1.0).unwrap();
        assert_eq!(cert.matched_form, TargetForm::CirculantOa4t);
        assert_eq!(cert.family, CoveredFamily::Universal);
        let ins = cert.insertion.unwrap();
        assert!(ins.satisfied);
        assert_eq!(ins.g, 2);
    }

    #[test]
    fn certify_two_zero_insertion_type1() {
        let d2 = insert_zeros(&paley_hadamard_sequence(7).unwrap(), 2).unwrap();
        let cert = certify_estimation(&d2, 3, 1.0).unwrap();
        assert_eq!(cert.matched_form, TargetForm::NearOa4tPlus1);
        assert_eq!(cert.family, CoveredFamily::Type1All);
    }

    #[test]
    fn certify_all_ones_unmatched() {
        let d = crate::sequence::BinaryDesign::new(
            vec![1; 8],
            crate::sequence::Provenance::User,
        )
        .unwrap();
        let cert = certify_estimation(&d, 3, 1.0).unwrap();
        assert_eq!(cert.matched_form, TargetForm::None);
        assert_eq!(cert.family, CoveredFamily::None);
    }

    #[test]
    fn certify_contrast_lifted_paley() {
        let d = paley_hadamard_sequence(151).unwrap();
        for variant in [LiftVariant::JPlusD, LiftVariant::TwoJMinusD] {
            let u = ternary_from_binary(&d, variant);
            let cert = certify_contrast(&u, 9, 1.0).unwrap();
            assert_eq!(cert.objective, Objective::Contrast);
            assert_eq!(cert.matched_form, TargetForm::Hadamard4tMinus1);
            assert_eq!(cert.family, CoveredFamily::PhiPRange { lo: 0.0, hi: 1.0 });
        }
    }

    #[test]
    fn certify_contrast_all_ones_unmatched() {
        let u = TernaryStimulusDesign::new(vec![1; 7]).unwrap();
        let cert = certify_contrast(&u, 3, 1.0).unwrap();
        assert_eq!(cert.matched_form, TargetForm::None);
    }

    #[test]
    fn monotone_in_p_cap() {
        let d = paley_hadamard_sequence(151).unwrap();
        let full = certify_estimation(&d, 9, 1.0).unwrap();
        let half = certify_estimation(&d, 9, 0.5).unwrap();
        match (&full.family, &half.family) {
            (
                CoveredFamily::PhiPRange { hi: h1, .. },
                CoveredFamily::PhiPRange { hi: h2, .. },
            ) => assert!(h2 <= h1),
            _ => panic!("expected phi_p families"),
        }
    }
}
