use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

use crate::error::{LabError, Result};
use crate::numeric::{as_exact_integer, cis_turns};

/// A point of the circle `[0, 1)`, measured in turns.
///
/// Angles built from rationals stay exact, so `e^{2πinθ}` at integer `n` is
/// computed by modular arithmetic rather than by a floating-point product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Rational(Ratio<i64>),
    Float(f64),
}

impl Angle {
    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(LabError::InvalidMeasure("angle with zero denominator".into()));
        }
        let r = Ratio::new(num, den);
        let reduced = r - r.floor();
        Ok(Angle::Rational(reduced))
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(LabError::InvalidMeasure(format!("non-finite angle {x}")));
        }
        Ok(Angle::Float(x.rem_euclid(1.0)))
    }

    pub fn turns(&self) -> f64 {
        match self {
            Angle::Rational(r) => *r.numer() as f64 / *r.denom() as f64,
            Angle::Float(x) => *x,
        }
    }

    pub fn is_half(&self) -> bool {
        match self {
            Angle::Rational(r) => *r == Ratio::new(1, 2),
            Angle::Float(x) => *x == 0.5,
        }
    }

    /// `e^{2πi ξ θ}`.
    pub fn phase(&self, xi: f64) -> Complex64 {
        match (self, as_exact_integer(xi)) {
            (Angle::Rational(r), Some(n)) => {
                let p = *r.numer() as i128;
                let q = *r.denom() as i128;
                let k = (n as i128 * p).rem_euclid(q);
                cis_turns(k as f64 / q as f64)
            }
            _ => cis_turns(xi * self.turns()),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Angle::Float(x) => write!(f, "{x}"),
        }
    }
}

impl std::str::FromStr for Angle {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| LabError::Schema(format!("bad angle {s:?}")))?;
            let d: i64 = d.trim().parse().map_err(|_| LabError::Schema(format!("bad angle {s:?}")))?;
            Angle::rational(n, d)
        } else {
            let x: f64 = s.parse().map_err(|_| LabError::Schema(format!("bad angle {s:?}")))?;
            Angle::from_f64(x)
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Angle::Rational(_) => s.serialize_str(&self.to_string()),
            Angle::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Angle::from_f64(x).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
