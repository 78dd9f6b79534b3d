use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How raw class labels map to (public, private) bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelRule {
    /// 2-bit class in `0..4`: public = least significant bit, private = most significant bit.
    BitSplit,
    /// Digit in `0..10`: public = odd (Parity), private = greater than 4 (Magnitude).
    ParityMagnitude,
}

impl LabelRule {
    pub fn name(self) -> &'static str {
        match self {
            LabelRule::BitSplit => "bit-split",
            LabelRule::ParityMagnitude => "parity-magnitude",
        }
    }

    fn alphabet(self) -> u8 {
        match self {
            LabelRule::BitSplit => 4,
            LabelRule::ParityMagnitude => 10,
        }
    }

    pub fn apply(self, raw: u8) -> Result<(u8, u8)> {
        if raw >= self.alphabet() {
            return Err(Error::usage(format!(
                "raw label {raw} outside 0..{} for rule {}",
                self.alphabet(),
                self.name()
            )));
        }
        Ok(match self {
            LabelRule::BitSplit => (raw & 1, (raw >> 1) & 1),
            LabelRule::ParityMagnitude => (raw % 2, u8::from(raw > 4)),
        })
    }
}

impl fmt::Display for LabelRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bit-split" => Ok(LabelRule::BitSplit),
            "parity-magnitude" => Ok(LabelRule::ParityMagnitude),
            other => Err(Error::config(format!("unknown label rule {other:?}"))),
        }
    }
}

/// Splits raw labels into `(public, private)` vectors.
pub fn derive_labels(raw: &[u8], rule: LabelRule) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut public = Vec::with_capacity(raw.len());
    let mut private = Vec::with_capacity(raw.len());
    for &r in raw {
        let (p, s) = rule.apply(r)?;
        public.push(p);
        private.push(s);
    }
    Ok((public, private))
}
