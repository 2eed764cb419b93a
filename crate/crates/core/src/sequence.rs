//! Stimulus sequence constructions: Paley quadratic-residue sequences,
//! LFSR m-sequences, and zero-insertion extensions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How a binary design was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Provenance {
    Paley { n: usize },
    MSequence { degree: u32, taps: u64, seed: u64 },
    /// `g` is the length of the zero run in the base sequence before
    /// insertion; `inserted` is how many zeros were added to it.
    Insertion { g: usize, inserted: usize },
    User,
}

/// A binary on/off stimulus schedule of length N, used circularly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDesign {
    bits: Vec<u8>,
    provenance: Provenance,
}

impl BinaryDesign {
    pub fn new(bits: Vec<u8>, provenance: Provenance) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::ConstructionUnavailable("empty design".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::ConstructionUnavailable(
                "binary design entries must be 0 or 1".into(),
            ));
        }
        Ok(Self { bits, provenance })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn count_zeros(&self) -> usize {
        self.len() - self.count_ones()
    }

    /// Lexicographically smallest circular rotation.
    pub fn canonical_rotation(&self) -> BinaryDesign {
        let n = self.len();
        let mut best = self.bits.clone();
        for s in 1..n {
            let rot: Vec<u8> = (0..n).map(|i| self.bits[(i + s) % n]).collect();
            if rot < best {
                best = rot;
            }
        }
        BinaryDesign {
            bits: best,
            provenance: self.provenance.clone(),
        }
    }
}

/// A maximal circular run of zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroRun {
    /// 1-based start index of the run.
    pub start: usize,
    /// Run length g.
    pub len: usize,
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Hadamard sequence from the quadratic residues of a prime N = 3 (mod 4):
/// bit n is 0 exactly when n-1 is a nonzero quadratic residue mod N.
pub fn paley_hadamard_sequence(n: usize) -> Result<BinaryDesign> {
    if !is_prime(n) {
        return Err(Error::ConstructionUnavailable(format!(
            "N = {n} is not prime; Paley construction needs a prime N = 3 (mod 4)"
        )));
    }
    if n % 4 != 3 {
        return Err(Error::ConstructionUnavailable(format!(
            "N = {n} is not 3 (mod 4); Paley construction needs a prime N = 3 (mod 4)"
        )));
    }
    let mut residue = vec![false; n];
    for x in 1..=(n - 1) / 2 {
        residue[x * x % n] = true;
    }
    let bits = (0..n).map(|i| if residue[i] { 0 } else { 1 }).collect();
    BinaryDesign::new(bits, Provenance::Paley { n })
}

/// Period-(2^r - 1) output of a Fibonacci LFSR.
///
/// `taps` holds the feedback polynomial coefficients of x^0..x^{r-1} (the
/// leading x^r term is implicit). Primitivity is established by running the
/// register for a full cycle and checking the period.
pub fn m_sequence(degree: u32, taps: u64, seed: u64) -> Result<BinaryDesign> {
    if degree < 2 {
        return Err(Error::ConstructionUnavailable(
            "LFSR degree must be at least 2".into(),
        ));
    }
    let mask = (1u64 << degree) - 1;
    let seed = seed & mask;
    if seed == 0 {
        return Err(Error::ZeroSeed);
    }
    let expected = (1usize << degree) - 1;
    let mut state = seed;
    let mut bits = Vec::with_capacity(expected);
    for step in 0..=expected {
        // output bit 0, shift down, feed parity of tapped bits into the top
        let fb = ((state & taps & mask).count_ones() & 1) as u64;
        bits.push((state & 1) as u8);
        state = (state >> 1) | (fb << (degree - 1));
        if state == seed {
            let period = step + 1;
            if period != expected {
                return Err(Error::NonPrimitivePolynomial { period, expected });
            }
            break;
        }
    }
    if bits.len() > expected {
        // never returned to the seed inside 2^r steps (taps without x^0)
        return Err(Error::NonPrimitivePolynomial {
            period: bits.len(),
            expected,
        });
    }
    BinaryDesign::new(
        bits,
        Provenance::MSequence {
            degree,
            taps,
            seed,
        },
    )
}

/// Default primitive feedback polynomial for each supported degree,
/// in the tap-mask convention of [`m_sequence`].
pub fn default_taps(degree: u32) -> Option<u64> {
    let taps = match degree {
        2 => 0b11,
        3 => 0b011,          // x^3 + x + 1
        4 => 0b0011,         // x^4 + x + 1
        5 => 0b00101,        // x^5 + x^2 + 1
        6 => 0b000011,       // x^6 + x + 1
        7 => 0b0000011,      // x^7 + x + 1
        8 => 0b0001_1101,    // x^8 + x^4 + x^3 + x^2 + 1
        9 => 0b0_0001_0001,  // x^9 + x^4 + 1
        10 => 0b00_0000_1001, // x^10 + x^3 + 1
        _ => return None,
    };
    Some(taps)
}

/// All maximal circular zero runs, longest first, ties by start index.
pub fn zero_runs(d: &BinaryDesign) -> Vec<ZeroRun> {
    let n = d.len();
    let bits = d.bits();
    if bits.iter().all(|&b| b == 0) {
        return vec![ZeroRun { start: 1, len: n }];
    }
    let mut runs = Vec::new();
    // scan starting just after some 1 so no run is split by the wrap
    let anchor = bits.iter().position(|&b| b == 1).unwrap();
    let mut i = 0;
    while i < n {
        let pos = (anchor + 1 + i) % n;
        if bits[pos] == 0 {
            let start = pos;
            let mut len = 0;
            while i < n && bits[(anchor + 1 + i) % n] == 0 {
                len += 1;
                i += 1;
            }
            runs.push(ZeroRun {
                start: start + 1,
                len,
            });
        } else {
            i += 1;
        }
    }
    runs.sort_by(|a, b| b.len.cmp(&a.len).then(a.start.cmp(&b.start)));
    runs
}

/// Insert `count` zeros (1 or 2) into the longest circular zero run of `d`,
/// leftmost run on ties. The new zeros go immediately after the run's first
/// zero; the run length of the base sequence is recorded as `g`.
pub fn insert_zeros(d: &BinaryDesign, count: usize) -> Result<BinaryDesign> {
    assert!(count == 1 || count == 2, "count must be 1 or 2");
    let runs = zero_runs(d);
    let Some(run) = runs.first() else {
        return Err(Error::NoZeroRun);
    };
    let mut bits = Vec::with_capacity(d.len() + count);
    for (i, &b) in d.bits().iter().enumerate() {
        bits.push(b);
        if i + 1 == run.start {
            for _ in 0..count {
                bits.push(0);
            }
        }
    }
    BinaryDesign::new(
        bits,
        Provenance::Insertion {
            g: run.len,
            inserted: count,
        },
    )
}
