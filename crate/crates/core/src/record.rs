//! On-disk catalog format: line-oriented JSON records with the sequence
//! stored as a symbol string.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certify::Certificate;
use crate::design::TernaryStimulusDesign;
use crate::sequence::{BinaryDesign, Provenance};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    Binary,
    Ternary,
}

/// Condensed certificate carried alongside a stored design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub label: String,
    pub family: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CertificateSummary {
    pub fn from_certificate(cert: &Certificate) -> Self {
        Self {
            label: cert.label.clone(),
            family: format!("{:?}", cert.family),
            notes: cert.notes.clone(),
        }
    }
}

/// One stored design. Sequences are symbol strings ("1001011", "12021...")
/// so records diff cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub schema: u32,
    pub n: usize,
    pub alphabet: Alphabet,
    pub sequence: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSummary>,
}

impl DesignRecord {
    pub fn from_binary(d: &BinaryDesign) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            n: d.len(),
            alphabet: Alphabet::Binary,
            sequence: d.bits().iter().map(|&b| char::from(b'0' + b)).collect(),
            provenance: d.provenance().clone(),
            certificate: None,
        }
    }

    pub fn from_ternary(u: &TernaryStimulusDesign, provenance: Provenance) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            n: u.len(),
            alphabet: Alphabet::Ternary,
            sequence: u.0.iter().map(|&e| char::from(b'0' + e)).collect(),
            provenance,
            certificate: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::InvalidRecord(format!(
                "unsupported schema version {}",
                self.schema
            )));
        }
        if self.sequence.chars().count() != self.n {
            return Err(Error::InvalidRecord(format!(
                "sequence length {} does not match n = {}",
                self.sequence.chars().count(),
                self.n
            )));
        }
        let allowed = match self.alphabet {
            Alphabet::Binary => "01",
            Alphabet::Ternary => "012",
        };
        if let Some(bad) = self.sequence.chars().find(|c| !allowed.contains(*c)) {
            return Err(Error::InvalidRecord(format!(
                "symbol '{bad}' not in {:?} alphabet",
                self.alphabet
            )));
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Result<BinaryDesign> {
        self.validate()?;
        if self.alphabet != Alphabet::Binary {
            return Err(Error::InvalidRecord(
                "record does not hold a binary design".into(),
            ));
        }
        let bits = self.sequence.bytes().map(|b| b - b'0').collect();
        BinaryDesign::new(bits, self.provenance.clone())
    }

    pub fn to_ternary(&self) -> Result<TernaryStimulusDesign> {
        self.validate()?;
        if self.alphabet != Alphabet::Ternary {
            return Err(Error::InvalidRecord(
                "record does not hold a ternary design".into(),
            ));
        }
        TernaryStimulusDesign::new(self.sequence.bytes().map(|b| b - b'0').collect())
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(line: &str) -> Result<Self> {
        let record: DesignRecord = serde_json::from_str(line)?;
        record.validate()?;
        Ok(record)
    }
}

/// Write records one JSON object per line.
pub fn write_records(path: &Path, records: &[DesignRecord]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for r in records {
        writeln!(file, "{}", r.to_json_line()?)?;
    }
    Ok(())
}

/// Read a line-oriented record file, skipping blank lines.
pub fn read_records(path: &Path) -> Result<Vec<DesignRecord>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(DesignRecord::from_json(&line)?);
    }
    Ok(out)
}
