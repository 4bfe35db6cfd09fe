use num_complex::Complex64;
use std::f64::consts::PI;

pub const TAU: f64 = 2.0 * PI;

/// `e^{2πi x}`, reducing `x` modulo 1 first. Quarter turns are exact.
pub fn cis_turns(x: f64) -> Complex64 {
    let f = x.rem_euclid(1.0);
    if f == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if f == 0.25 {
        return Complex64::new(0.0, 1.0);
    }
    if f == 0.5 {
        return Complex64::new(-1.0, 0.0);
    }
    if f == 0.75 {
        return Complex64::new(0.0, -1.0);
    }
    let (s, c) = (TAU * f).sin_cos();
    Complex64::new(c, s)
}

/// `b^{-n}` in floating point; underflows to zero for large `n`.
pub fn inv_pow(base: u64, n: u64) -> f64 {
    if n > 4000 {
        return 0.0;
    }
    (base as f64).powi(-(n as i32))
}

/// `b^n` as an exact integer if it fits.
pub fn checked_pow(base: u64, n: u64) -> Option<i128> {
    let n: u32 = n.try_into().ok()?;
    (base as i128).checked_pow(n)
}

/// Fractional part of `num / b^n` computed with exact integer reduction
/// whenever `b^n` fits in an `i128`.
pub fn frac_of_ratio(num: i128, base: u64, n: u64) -> f64 {
    match checked_pow(base, n) {
        Some(den) => {
            let r = num.rem_euclid(den);
            r as f64 / den as f64
        }
        None => (num as f64 * inv_pow(base, n)).rem_euclid(1.0),
    }
}

/// Integer value of `xi` when it is integral and small enough for exact
/// modular arithmetic.
pub fn as_exact_integer(xi: f64) -> Option<i64> {
    if xi.fract() == 0.0 && xi.abs() < 9.0e15 {
        Some(xi as i64)
    } else {
        None
    }
}

/// Serde helpers that encode complex numbers as `[re, im]` pairs.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

pub mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

pub mod complex_matrix {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<Complex64>], s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Complex64>>, D::Error> {
        let raw = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|row| row.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect())
    }
}
