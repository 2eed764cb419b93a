//! Exhaustive brute-force optimization over small design spaces: the
//! ground-truth oracle for every optimality claim at desk scale.

use std::time::{Duration, Instant};

use crate::criteria::Criterion;
use crate::design::{
    contrast_info, info_matrix, model_matrix, TernaryStimulusDesign,
};
use crate::{Error, Result};

pub const DEFAULT_EVAL_CAP: u64 = 1 << 24;

/// Which design space to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// {0,1}^N, evaluated through the signed information matrix.
    Binary,
    /// {-1,+1}^N.
    Signed,
    /// {0,1,2}^N two-stimulus designs, evaluated on the contrast
    /// information matrix.
    TernaryTwoStim,
}

impl Space {
    fn radix(self) -> u64 {
        match self {
            Space::Binary | Space::Signed => 2,
            Space::TernaryTwoStim => 3,
        }
    }
}

/// Outcome of an exhaustive run.
#[derive(Debug, Clone)]
pub struct SearchReport {
    pub space: Space,
    pub n: usize,
    pub k: usize,
    pub best_value: f64,
    /// Canonicalized argmin designs as symbol strings, sorted, deduplicated.
    pub argmins: Vec<String>,
    pub evaluated: u64,
    pub wall_time: Duration,
}

fn decode(space: Space, n: usize, mut index: u64) -> Vec<i8> {
    let radix = space.radix();
    let mut digits = Vec::with_capacity(n);
    for _ in 0..n {
        let d = (index % radix) as i8;
        index /= radix;
        digits.push(match space {
            Space::Binary | Space::TernaryTwoStim => d,
            Space::Signed => 2 * d - 1,
        });
    }
    digits
}

fn symbol_string(space: Space, seq: &[i8]) -> String {
    seq.iter()
        .map(|&e| match (space, e) {
            (Space::Signed, -1) => '-',
            (Space::Signed, _) => '+',
            (_, e) => char::from(b'0' + e as u8),
        })
        .collect()
}

/// Every element of the symmetry orbit of a design: circular shifts, plus
/// global sign flip in the signed space and the stimulus-label swap in the
/// ternary space.
pub fn orbit(space: Space, seq: &[i8]) -> Vec<Vec<i8>> {
    let n = seq.len();
    let mut variants: Vec<Vec<i8>> = vec![seq.to_vec()];
    match space {
        Space::Binary => {}
        Space::Signed => variants.push(seq.iter().map(|&e| -e).collect()),
        Space::TernaryTwoStim => variants.push(
            seq.iter()
                .map(|&e| match e {
                    1 => 2,
                    2 => 1,
                    _ => 0,
                })
                .collect(),
        ),
    }
    let mut out = Vec::with_capacity(variants.len() * n);
    for v in &variants {
        for s in 0..n {
            out.push((0..n).map(|i| v[(i + s) % n]).collect());
        }
    }
    out
}

/// Lexicographically smallest orbit element.
pub fn canonical(space: Space, seq: &[i8]) -> Vec<i8> {
    orbit(space, seq).into_iter().min().unwrap()
}

fn evaluate(space: Space, seq: &[i8], k: usize, criterion: &Criterion) -> Result<f64> {
    match space {
        Space::Binary => {
            let signed: Vec<i64> = seq.iter().map(|&b| 1 - 2 * b as i64).collect();
            let m = info_matrix(&model_matrix(&signed, k)?, true);
            criterion.evaluate(&m.to_f64())
        }
        Space::Signed => {
            let signed: Vec<i64> = seq.iter().map(|&e| e as i64).collect();
            let m = info_matrix(&model_matrix(&signed, k)?, true);
            criterion.evaluate(&m.to_f64())
        }
        Space::TernaryTwoStim => {
            let u = TernaryStimulusDesign::new(seq.iter().map(|&e| e as u8).collect())?;
            let m = contrast_info(&u, k)?;
            criterion.evaluate(&m)
        }
    }
}

fn space_size(space: Space, n: usize) -> Option<u64> {
    space.radix().checked_pow(n as u32)
}

/// Global minimum of a criterion over a design space.
///
/// With `symmetry_reduce`, only the canonical representative of each orbit
/// is evaluated; criterion values are orbit-invariant so the minimum is
/// unchanged. The cap bounds the number of index visits; exceeding it
/// refuses with the required budget.
pub fn exhaustive_best(
    space: Space,
    n: usize,
    k: usize,
    criterion: &Criterion,
    symmetry_reduce: bool,
    cap: Option<u64>,
) -> Result<SearchReport> {
    let cap = cap.unwrap_or(DEFAULT_EVAL_CAP);
    let total = space_size(space, n).ok_or(Error::CapExceeded {
        required: u64::MAX,
        cap,
    })?;
    if total > cap {
        return Err(Error::CapExceeded {
            required: total,
            cap,
        });
    }
    let start = Instant::now();
    let mut best = f64::INFINITY;
    let mut ties: Vec<(f64, String)> = Vec::new();
    let mut evaluated = 0u64;
    let tie_tol = |b: f64| 1e-10 * b.abs().max(1e-300);
    for index in 0..total {
        let seq = decode(space, n, index);
        if symmetry_reduce && canonical(space, &seq) != seq {
            continue;
        }
        let value = evaluate(space, &seq, k, criterion)?;
        evaluated += 1;
        if !value.is_finite() {
            continue;
        }
        if value < best - tie_tol(best) {
            best = value;
            let tol = tie_tol(best);
            ties.retain(|(v, _)| *v <= best + tol);
        }
        if value <= best + tie_tol(best) {
            best = best.min(value);
            ties.push((value, symbol_string(space, &canonical(space, &seq))));
        }
    }
    let mut argmins: Vec<String> = ties.into_iter().map(|(_, s)| s).collect();
    argmins.sort();
    argmins.dedup();
    Ok(SearchReport {
        space,
        n,
        k,
        best_value: best,
        argmins,
        evaluated,
        wall_time: start.elapsed(),
    })
}

/// Check one design against the exhaustive optimum. The margin is the
/// design's criterion value minus the global best.
pub fn verify_optimal(
    space: Space,
    seq: &[i8],
    k: usize,
    criterion: &Criterion,
    cap: Option<u64>,
) -> Result<(bool, f64)> {
    let report = exhaustive_best(space, seq.len(), k, criterion, true, cap)?;
    let value = evaluate(space, seq, k, criterion)?;
    let margin = value - report.best_value;
    let is_optimal = margin <= 1e-10 * report.best_value.abs();
    Ok((is_optimal, margin))
}
