use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure::ExponentRule;

/// Times along which an orbit is sampled.
///
/// Discrete forms index powers of the cogenerator; `Grid` indexes the
/// continuous-time group and is only meaningful for bridged cyclic models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SequenceSpec {
    /// `n_k = b^k`, `k = 1..=len`.
    Powers { base: u64, len: usize },
    /// `n_k = b^{e_k}` for the exponent rule `e`, `k = 1..=len`.
    Tower { base: u64, exponents: ExponentRule, len: usize },
    /// `n_k = start + (k − 1)·step`.
    Arithmetic { start: u64, step: u64, len: usize },
    Explicit { values: Vec<u64> },
    Grid { times: Vec<f64> },
}

/// Largest power usable as an exponent of a cyclic frequency.
const MAX_INDEX: u64 = i64::MAX as u64;

impl SequenceSpec {
    pub fn len(&self) -> usize {
        match self {
            SequenceSpec::Powers { len, .. }
            | SequenceSpec::Tower { len, .. }
            | SequenceSpec::Arithmetic { len, .. } => *len,
            SequenceSpec::Explicit { values } => values.len(),
            SequenceSpec::Grid { times } => times.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, SequenceSpec::Grid { .. })
    }

    /// The same family cut to its first `len` entries.
    pub fn truncated(&self, len: usize) -> SequenceSpec {
        let mut s = self.clone();
        match &mut s {
            SequenceSpec::Powers { len: l, .. }
            | SequenceSpec::Tower { len: l, .. }
            | SequenceSpec::Arithmetic { len: l, .. } => *l = (*l).min(len),
            SequenceSpec::Explicit { values } => values.truncate(len),
            SequenceSpec::Grid { times } => times.truncate(len),
        }
        s
    }

    /// Discrete indices `n_1 < … < n_K`, all representable as `i64`.
    pub fn indices(&self) -> Result<Vec<u64>> {
        let overflow = |k: usize| LabError::InvalidSequence(format!("entry {k} of {self:?} overflows"));
        let v: Vec<u64> = match self {
            SequenceSpec::Powers { base, len } => {
                if *base < 2 {
                    return Err(LabError::InvalidSequence(format!("powers need base ≥ 2, got {base}")));
                }
                (1..=*len)
                    .map(|k| u32::try_from(k).ok().and_then(|e| base.checked_pow(e)).ok_or_else(|| overflow(k)))
                    .collect::<Result<_>>()?
            }
            SequenceSpec::Tower { base, exponents, len } => {
                if *base < 2 {
                    return Err(LabError::InvalidSequence(format!("tower needs base ≥ 2, got {base}")));
                }
                (1..=*len)
                    .map(|k| {
                        exponents
                            .exponent(k)
                            .and_then(|e| u32::try_from(e).ok())
                            .and_then(|e| base.checked_pow(e))
                            .ok_or_else(|| overflow(k))
                    })
                    .collect::<Result<_>>()?
            }
            SequenceSpec::Arithmetic { start, step, len } => {
                if *step == 0 {
                    return Err(LabError::InvalidSequence("arithmetic step must be positive".into()));
                }
                (0..*len as u64)
                    .map(|k| step.checked_mul(k).and_then(|d| d.checked_add(*start)).ok_or_else(|| overflow(k as usize + 1)))
                    .collect::<Result<_>>()?
            }
            SequenceSpec::Explicit { values } => values.clone(),
            SequenceSpec::Grid { .. } => {
                return Err(LabError::InvalidSequence("a time grid has no discrete indices".into()));
            }
        };
        if v.is_empty() {
            return Err(LabError::InvalidSequence("sequence must have at least one entry".into()));
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::InvalidSequence(format!("sequence {v:?} is not strictly increasing")));
        }
        if let Some(&big) = v.iter().find(|&&n| n > MAX_INDEX) {
            return Err(LabError::InvalidSequence(format!("index {big} exceeds the supported range")));
        }
        Ok(v)
    }

    /// Continuous times `t_1 < … < t_K`.
    pub fn times(&self) -> Result<Vec<f64>> {
        let SequenceSpec::Grid { times } = self else {
            return Ok(self.indices()?.into_iter().map(|n| n as f64).collect());
        };
        if times.is_empty() {
            return Err(LabError::InvalidSequence("time grid must have at least one entry".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::InvalidSequence(format!("time grid {times:?} is not strictly increasing")));
        }
        Ok(times.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tower_of_dirichlet_exponents() {
        let s = SequenceSpec::Tower { base: 2, exponents: ExponentRule::Power { base: 2 }, len: 5 };
        assert_eq!(s.indices().unwrap(), vec![4, 16, 256, 65536, 1 << 32]);
        let too_long = SequenceSpec::Tower { base: 2, exponents: ExponentRule::Power { base: 2 }, len: 6 };
        assert!(too_long.indices().is_err());
    }

    #[test]
    fn rejects_non_increasing_lists() {
        assert!(SequenceSpec::Explicit { values: vec![3, 3] }.indices().is_err());
        assert!(SequenceSpec::Explicit { values: vec![] }.indices().is_err());
        assert!(SequenceSpec::Grid { times: vec![1.0, 0.5] }.times().is_err());
    }

    #[test]
    fn json_forms() {
        let s: SequenceSpec = serde_json::from_str(r#"{"form":"powers","base":3,"len":8}"#).unwrap();
        assert_eq!(s.indices().unwrap().last(), Some(&6561));
        let t: SequenceSpec =
            serde_json::from_str(r#"{"form":"tower","base":2,"exponents":{"form":"power","base":2},"len":3}"#).unwrap();
        assert_eq!(t.indices().unwrap(), vec![4, 16, 256]);
        let a: SequenceSpec = serde_json::from_str(r#"{"form":"arithmetic","start":1,"step":1,"len":3}"#).unwrap();
        assert_eq!(a.indices().unwrap(), vec![1, 2, 3]);
    }
}
