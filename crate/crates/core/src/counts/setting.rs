use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::protocol::{InputStatePrep, DATA_QUBITS};
use crate::quantum::linalg::{self, CMatrix};
use crate::quantum::{positions, BasisKet};
use crate::{Error, Result};

/// Product projector `⊗ |k><k|` over analyzed qubits, optionally tagged with
/// the input preparation it was recorded for.
///
/// Labels look like `q1:+, q4:i`, or `+0 | q1:+, q4:i` with a preparation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementSetting {
    input: Option<(BasisKet, BasisKet)>,
    analyzers: Vec<(String, BasisKet)>,
}

impl MeasurementSetting {
    pub fn new(analyzers: Vec<(String, BasisKet)>) -> Result<Self> {
        if analyzers.is_empty() {
            return Err(Error::EmptySelection);
        }
        let labels: Vec<String> = analyzers.iter().map(|(l, _)| l.clone()).collect();
        crate::quantum::check_unique(&labels)?;
        Ok(Self {
            input: None,
            analyzers,
        })
    }

    /// Analyzer pair on the data qubits.
    pub fn data(a: BasisKet, b: BasisKet) -> Self {
        Self {
            input: None,
            analyzers: vec![(DATA_QUBITS[0].to_string(), a), (DATA_QUBITS[1].to_string(), b)],
        }
    }

    pub fn with_input(mut self, prep: (BasisKet, BasisKet)) -> Self {
        self.input = Some(prep);
        self
    }

    pub fn input(&self) -> Option<(BasisKet, BasisKet)> {
        self.input
    }

    pub fn input_prep(&self) -> Option<InputStatePrep> {
        self.input.map(|(a, b)| InputStatePrep::Kets(a, b))
    }

    pub fn analyzers(&self) -> &[(String, BasisKet)] {
        &self.analyzers
    }

    pub fn labels(&self) -> Vec<String> {
        self.analyzers.iter().map(|(l, _)| l.clone()).collect()
    }

    /// The same analyzers without the preparation tag.
    pub fn analysis_only(&self) -> Self {
        Self {
            input: None,
            analyzers: self.analyzers.clone(),
        }
    }

    /// Projector on the analyzed qubits, in analyzer order.
    pub fn projector(&self) -> CMatrix {
        self.analyzers
            .iter()
            .fold(CMatrix::identity(1, 1), |acc, (_, k)| acc.kronecker(&k.projector()))
    }

    /// Projector embedded in `register` (identity on unanalyzed qubits).
    pub fn projector_on(&self, register: &[String]) -> Result<CMatrix> {
        let pos = positions(register, &self.labels())?;
        Ok(linalg::embed(&self.projector(), &pos, register.len()))
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((a, b)) = self.input {
            write!(f, "{a}{b} | ")?;
        }
        for (i, (label, ket)) in self.analyzers.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{label}:{ket}")?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = |why: &str| Error::InvalidToken {
            token: s.to_string(),
            expected: format!("setting like \"q1:+, q4:i\" or \"+0 | q1:+, q4:i\" ({why})"),
        };
        let (input, body) = match s.split_once('|') {
            Some((prep, body)) => {
                let prep: InputStatePrep = prep.trim().parse().map_err(|_| invalid("bad input"))?;
                match prep {
                    InputStatePrep::Kets(a, b) => (Some((a, b)), body),
                    InputStatePrep::Amplitudes(_) => return Err(invalid("bad input")),
                }
            }
            None => (None, s),
        };
        let mut analyzers = Vec::new();
        for part in body.split(',') {
            let (label, sym) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| invalid("missing ':'"))?;
            let mut chars = sym.trim().chars();
            let ket = chars
                .next()
                .and_then(BasisKet::from_symbol)
                .ok_or_else(|| invalid("unknown ket"))?;
            if chars.next().is_some() || label.trim().is_empty() {
                return Err(invalid("malformed analyzer"));
            }
            analyzers.push((label.trim().to_string(), ket));
        }
        let mut setting = MeasurementSetting::new(analyzers).map_err(|_| invalid("duplicate label"))?;
        setting.input = input;
        Ok(setting)
    }
}

impl Serialize for MeasurementSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MeasurementSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The 16 settings `{0, 1, +, i}⊗2` on the data qubits, `q1` major.
pub fn tomographic_settings() -> Vec<MeasurementSetting> {
    let mut out = Vec::with_capacity(16);
    for a in BasisKet::TOMOGRAPHIC {
        for b in BasisKet::TOMOGRAPHIC {
            out.push(MeasurementSetting::data(a, b));
        }
    }
    out
}

/// The four computational-basis settings `|00>..|11>`.
pub fn computational_settings() -> Vec<MeasurementSetting> {
    let z = [BasisKet::Zero, BasisKet::One];
    z.iter()
        .flat_map(|&a| z.iter().map(move |&b| MeasurementSetting::data(a, b)))
        .collect()
}

/// The 16 tomographic input preparations, `q1` major.
pub fn tomographic_inputs() -> Vec<(BasisKet, BasisKet)> {
    let mut out = Vec::with_capacity(16);
    for a in BasisKet::TOMOGRAPHIC {
        for b in BasisKet::TOMOGRAPHIC {
            out.push((a, b));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_round_trip() {
        for s in tomographic_settings() {
            assert_eq!(s.label().parse::<MeasurementSetting>().unwrap(), s);
        }
        let s = MeasurementSetting::data(BasisKet::Plus, BasisKet::PlusI);
        assert_eq!(s.label(), "q1:+, q4:i");
        let tagged = s.clone().with_input((BasisKet::Minus, BasisKet::One));
        assert_eq!(tagged.label(), "-1 | q1:+, q4:i");
        assert_eq!(tagged.label().parse::<MeasurementSetting>().unwrap(), tagged);
        assert_eq!(tagged.analysis_only(), s);
    }

    #[test]
    fn rejects_malformed_labels() {
        for bad in ["", "q1", "q1:x", "q1:+, q1:0", "q1:++", "zz | q1:0", ":0"] {
            assert!(bad.parse::<MeasurementSetting>().is_err(), "{bad}");
        }
    }

    #[test]
    fn projectors_are_normalized_rank_one() {
        for s in tomographic_settings() {
            let p = s.projector();
            assert!((&p * &p - &p).norm() < 1e-12);
            assert!((linalg::trace(&p).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn embedded_projector_pads_with_identity() {
        let s: MeasurementSetting = "q4:1".parse().unwrap();
        let reg: Vec<String> = ["q1", "q4"].iter().map(|x| x.to_string()).collect();
        let p = s.projector_on(&reg).unwrap();
        assert!((p[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!((p[(3, 3)].re - 1.0).abs() < 1e-15);
        assert!(p[(0, 0)].norm() < 1e-15);
    }
}
