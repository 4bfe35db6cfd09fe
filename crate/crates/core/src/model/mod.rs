//! Structured contractions and the vectors they act on.
//!
//! Vectors are finite combinations over a model-specific frame: characters
//! `e_n(θ) = e^{2πinθ}` for cyclic unitaries, basis indices for the shift and
//! coordinates for finite matrices. Powers of cyclic unitaries and of the
//! shift act by exact index arithmetic, so the only floating-point error in an
//! inner product comes from the Fourier oracle.

pub mod laguerre;
mod schema;

pub use laguerre::{translate, TranslationReport};
pub use schema::ModelSpec;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_tol, LabError, Result};
use crate::exec::Execution;
use crate::measure::{CircleMeasure, FourierValue};

pub const NORM_SLACK: f64 = 1e-12;

/// Dense complex matrix with operator norm at most `1 + 1e-12`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteContraction {
    matrix: DMatrix<Complex64>,
    norm: f64,
    unitary: bool,
}

impl FiniteContraction {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(LabError::InvalidModel(format!(
                "finite contraction must be a nonempty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::InvalidModel("matrix has non-finite entries".into()));
        }
        let norm = matrix.clone().singular_values().max();
        if norm > 1.0 + NORM_SLACK {
            return Err(LabError::InvalidModel(format!("operator norm {norm} exceeds 1")));
        }
        let id = DMatrix::<Complex64>::identity(matrix.nrows(), matrix.ncols());
        let adj = matrix.adjoint();
        let unitary = (&adj * &matrix - &id).iter().all(|z| z.norm() <= NORM_SLACK)
            && (&matrix * &adj - &id).iter().all(|z| z.norm() <= NORM_SLACK);
        Ok(Self { matrix, norm, unitary })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn power(&self, n: u64) -> DMatrix<Complex64> {
        matrix_power(&self.matrix, n)
    }
}

/// `m^n` by repeated squaring.
pub fn matrix_power(m: &DMatrix<Complex64>, mut n: u64) -> DMatrix<Complex64> {
    let mut result = DMatrix::<Complex64>::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub enum OperatorModel {
    CyclicUnitary(CircleMeasure),
    UnilateralShift { truncation: usize },
    FiniteContraction(FiniteContraction),
    DirectSum(Vec<OperatorModel>),
}

impl OperatorModel {
    pub fn shift(truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(LabError::InvalidModel("shift truncation must be at least 1".into()));
        }
        Ok(OperatorModel::UnilateralShift { truncation })
    }

    pub fn finite(matrix: DMatrix<Complex64>) -> Result<Self> {
        Ok(OperatorModel::FiniteContraction(FiniteContraction::new(matrix)?))
    }

    pub fn direct_sum(components: Vec<OperatorModel>) -> Result<Self> {
        if components.is_empty() {
            return Err(LabError::InvalidModel("direct sum needs at least one component".into()));
        }
        Ok(OperatorModel::DirectSum(components))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            OperatorModel::CyclicUnitary(_) => "cyclic_unitary",
            OperatorModel::UnilateralShift { .. } => "shift",
            OperatorModel::FiniteContraction(_) => "finite",
            OperatorModel::DirectSum(_) => "direct_sum",
        }
    }

    /// Direct summands in order; a single model is its own only component.
    pub fn components(&self) -> Vec<&OperatorModel> {
        match self {
            OperatorModel::DirectSum(c) => c.iter().collect(),
            other => vec![other],
        }
    }

    pub fn is_invertible(&self) -> bool {
        match self {
            OperatorModel::CyclicUnitary(_) => true,
            OperatorModel::UnilateralShift { .. } => false,
            OperatorModel::FiniteContraction(f) => f.is_unitary(),
            OperatorModel::DirectSum(c) => c.iter().all(|m| m.is_invertible()),
        }
    }

    pub fn zero_vector(&self) -> VectorRep {
        match self {
            OperatorModel::CyclicUnitary(_) => VectorRep::Cyclic(BTreeMap::new()),
            OperatorModel::UnilateralShift { .. } => VectorRep::Shift(BTreeMap::new()),
            OperatorModel::FiniteContraction(f) => VectorRep::Finite(DVector::zeros(f.dim())),
            OperatorModel::DirectSum(c) => VectorRep::Sum(c.iter().map(|m| m.zero_vector()).collect()),
        }
    }

    /// Checks that `x` has the shape of a vector for this model.
    pub fn check(&self, x: &VectorRep) -> Result<()> {
        match (self, x) {
            (OperatorModel::CyclicUnitary(_), VectorRep::Cyclic(_))
            | (OperatorModel::UnilateralShift { .. }, VectorRep::Shift(_)) => Ok(()),
            (OperatorModel::FiniteContraction(f), VectorRep::Finite(v)) if v.len() == f.dim() => Ok(()),
            (OperatorModel::DirectSum(ms), VectorRep::Sum(vs)) if ms.len() == vs.len() => {
                ms.iter().zip(vs).try_for_each(|(m, v)| m.check(v))
            }
            _ => Err(LabError::ShapeMismatch(format!("{} vector for a {} model", x.kind(), self.kind()))),
        }
    }
}

/// Finite linear combination over a model's frame.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorRep {
    /// `Σ c_n e_n` over integer frequencies.
    Cyclic(BTreeMap<i64, Complex64>),
    /// `Σ c_k basis_k`, `k ≥ 0`.
    Shift(BTreeMap<u64, Complex64>),
    Finite(DVector<Complex64>),
    Sum(Vec<VectorRep>),
}

impl VectorRep {
    pub fn character(n: i64) -> Self {
        VectorRep::Cyclic(BTreeMap::from([(n, Complex64::new(1.0, 0.0))]))
    }

    pub fn basis(k: u64) -> Self {
        VectorRep::Shift(BTreeMap::from([(k, Complex64::new(1.0, 0.0))]))
    }

    pub fn coordinates(v: Vec<Complex64>) -> Self {
        VectorRep::Finite(DVector::from_vec(v))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            VectorRep::Cyclic(_) => "cyclic",
            VectorRep::Shift(_) => "shift",
            VectorRep::Finite(_) => "finite",
            VectorRep::Sum(_) => "direct_sum",
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VectorRep::Cyclic(m) => m.values().all(|c| *c == Complex64::default()),
            VectorRep::Shift(m) => m.values().all(|c| *c == Complex64::default()),
            VectorRep::Finite(v) => v.iter().all(|c| *c == Complex64::default()),
            VectorRep::Sum(v) => v.iter().all(|c| c.is_zero()),
        }
    }

    /// `Σ |coefficient|`.
    pub fn l1_norm(&self) -> f64 {
        match self {
            VectorRep::Cyclic(m) => m.values().map(|c| c.norm()).sum(),
            VectorRep::Shift(m) => m.values().map(|c| c.norm()).sum(),
            VectorRep::Finite(v) => v.iter().map(|c| c.norm()).sum(),
            VectorRep::Sum(v) => v.iter().map(|c| c.l1_norm()).sum(),
        }
    }

    pub fn scale(&self, a: Complex64) -> VectorRep {
        match self {
            VectorRep::Cyclic(m) => VectorRep::Cyclic(m.iter().map(|(&k, c)| (k, c * a)).collect()),
            VectorRep::Shift(m) => VectorRep::Shift(m.iter().map(|(&k, c)| (k, c * a)).collect()),
            VectorRep::Finite(v) => VectorRep::Finite(v * a),
            VectorRep::Sum(v) => VectorRep::Sum(v.iter().map(|c| c.scale(a)).collect()),
        }
    }

    pub fn add(&self, other: &VectorRep) -> Result<VectorRep> {
        Ok(match (self, other) {
            (VectorRep::Cyclic(a), VectorRep::Cyclic(b)) => VectorRep::Cyclic(merge(a, b)),
            (VectorRep::Shift(a), VectorRep::Shift(b)) => VectorRep::Shift(merge(a, b)),
            (VectorRep::Finite(a), VectorRep::Finite(b)) if a.len() == b.len() => VectorRep::Finite(a + b),
            (VectorRep::Sum(a), VectorRep::Sum(b)) if a.len() == b.len() => {
                VectorRep::Sum(a.iter().zip(b).map(|(x, y)| x.add(y)).collect::<Result<_>>()?)
            }
            _ => {
                return Err(LabError::ShapeMismatch(format!("cannot add {} and {} vectors", self.kind(), other.kind())))
            }
        })
    }

    pub fn sub(&self, other: &VectorRep) -> Result<VectorRep> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Drops explicit zero coefficients from sparse maps.
    pub fn pruned(&self) -> VectorRep {
        match self {
            VectorRep::Cyclic(m) => VectorRep::Cyclic(m.iter().filter(|(_, c)| c.norm() != 0.0).map(|(&k, &c)| (k, c)).collect()),
            VectorRep::Shift(m) => VectorRep::Shift(m.iter().filter(|(_, c)| c.norm() != 0.0).map(|(&k, &c)| (k, c)).collect()),
            VectorRep::Finite(v) => VectorRep::Finite(v.clone()),
            VectorRep::Sum(v) => VectorRep::Sum(v.iter().map(|c| c.pruned()).collect()),
        }
    }
}

fn merge<K: Ord + Copy>(a: &BTreeMap<K, Complex64>, b: &BTreeMap<K, Complex64>) -> BTreeMap<K, Complex64> {
    let mut out = a.clone();
    for (k, c) in b {
        *out.entry(*k).or_default() += c;
    }
    out
}

/// `⟨x, y⟩`, linear in `x`. For cyclic parts every `μ̂` value is requested at
/// `tol / (Σ|c| Σ|d|)` so the total error is at most `tol`.
pub fn inner_product(model: &OperatorModel, x: &VectorRep, y: &VectorRep, tol: f64) -> Result<FourierValue> {
    inner_product_with(model, x, y, tol, Execution::default())
}

pub fn inner_product_with(
    model: &OperatorModel,
    x: &VectorRep,
    y: &VectorRep,
    tol: f64,
    exec: Execution,
) -> Result<FourierValue> {
    check_tol(tol)?;
    model.check(x)?;
    model.check(y)?;
    pair(model, x, y, tol, exec)
}

fn pair(model: &OperatorModel, x: &VectorRep, y: &VectorRep, tol: f64, exec: Execution) -> Result<FourierValue> {
    match (model, x, y) {
        (OperatorModel::CyclicUnitary(mu), VectorRep::Cyclic(c), VectorRep::Cyclic(d)) => {
            cyclic_pairing(mu, c, d, tol, exec)
        }
        (OperatorModel::UnilateralShift { .. }, VectorRep::Shift(c), VectorRep::Shift(d)) => {
            let v = c.iter().filter_map(|(k, a)| d.get(k).map(|b| a * b.conj())).sum();
            Ok(FourierValue::exact(v))
        }
        (OperatorModel::FiniteContraction(_), VectorRep::Finite(a), VectorRep::Finite(b)) => {
            Ok(FourierValue::exact(a.iter().zip(b.iter()).map(|(p, q)| p * q.conj()).sum()))
        }
        (OperatorModel::DirectSum(ms), VectorRep::Sum(xs), VectorRep::Sum(ys)) => {
            let weights: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a.l1_norm() * b.l1_norm()).collect();
            let total: f64 = weights.iter().sum();
            let mut acc = FourierValue::exact(Complex64::default());
            for ((m, (a, b)), w) in ms.iter().zip(xs.iter().zip(ys)).zip(weights) {
                if w == 0.0 {
                    continue;
                }
                acc = acc + pair(m, a, b, tol * w / total, exec)?;
            }
            Ok(acc)
        }
        _ => Err(LabError::ShapeMismatch("vector does not match model".into())),
    }
}

/// `Σ_{n,m} c_n conj(d_m) μ̂(n − m)`, evaluating each distinct difference once.
pub fn cyclic_pairing(
    mu: &CircleMeasure,
    c: &BTreeMap<i64, Complex64>,
    d: &BTreeMap<i64, Complex64>,
    tol: f64,
    exec: Execution,
) -> Result<FourierValue> {
    let scale = c.values().map(|z| z.norm()).sum::<f64>() * d.values().map(|z| z.norm()).sum::<f64>();
    if scale == 0.0 {
        return Ok(FourierValue::exact(Complex64::default()));
    }
    let each = tol / scale;
    let diffs: Vec<i64> = c
        .keys()
        .flat_map(|n| d.keys().map(move |m| n - m))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let values = exec.map(&diffs, |&k| mu.fourier_at(k, each));
    let mut table = HashMap::with_capacity(diffs.len());
    for (k, v) in diffs.iter().zip(values) {
        table.insert(*k, v?);
    }
    let mut value = Complex64::default();
    let mut error = 0.0;
    for (n, a) in c {
        for (m, b) in d {
            let f = table[&(n - m)];
            let w = a * b.conj();
            value += w * f.value;
            error += w.norm() * f.error_bound;
        }
    }
    Ok(FourierValue::new(value, error))
}

/// `‖x‖²` with its certified error.
pub fn norm_sq(model: &OperatorModel, x: &VectorRep, tol: f64) -> Result<FourierValue> {
    let v = inner_product(model, x, x, tol)?;
    Ok(FourierValue::new(Complex64::new(v.value.re, 0.0), v.error_bound))
}

/// `T^n x`. Negative powers are allowed only on invertible components.
pub fn apply_power(model: &OperatorModel, n: i64, x: &VectorRep) -> Result<VectorRep> {
    model.check(x)?;
    power(model, n, x)
}

fn power(model: &OperatorModel, n: i64, x: &VectorRep) -> Result<VectorRep> {
    Ok(match (model, x) {
        (OperatorModel::CyclicUnitary(_), VectorRep::Cyclic(c)) => {
            VectorRep::Cyclic(c.iter().map(|(&k, &v)| (k + n, v)).collect())
        }
        (OperatorModel::UnilateralShift { .. }, VectorRep::Shift(c)) => {
            if n < 0 {
                return Err(LabError::NonInvertible { power: n });
            }
            VectorRep::Shift(c.iter().map(|(&k, &v)| (k + n as u64, v)).collect())
        }
        (OperatorModel::FiniteContraction(f), VectorRep::Finite(v)) => {
            if n >= 0 {
                VectorRep::Finite(f.power(n as u64) * v)
            } else if f.is_unitary() {
                VectorRep::Finite(matrix_power(&f.matrix.adjoint(), n.unsigned_abs()) * v)
            } else {
                return Err(LabError::NonInvertible { power: n });
            }
        }
        (OperatorModel::DirectSum(ms), VectorRep::Sum(vs)) => {
            VectorRep::Sum(ms.iter().zip(vs).map(|(m, v)| power(m, n, v)).collect::<Result<_>>()?)
        }
        _ => return Err(LabError::ShapeMismatch("vector does not match model".into())),
    })
}

/// `T*^n x`.
pub fn apply_adjoint_power(model: &OperatorModel, n: u64, x: &VectorRep) -> Result<VectorRep> {
    model.check(x)?;
    Ok(adjoint_power(model, n, x))
}

fn adjoint_power(model: &OperatorModel, n: u64, x: &VectorRep) -> VectorRep {
    match (model, x) {
        (OperatorModel::CyclicUnitary(_), VectorRep::Cyclic(c)) => {
            VectorRep::Cyclic(c.iter().map(|(&k, &v)| (k - n as i64, v)).collect())
        }
        (OperatorModel::UnilateralShift { .. }, VectorRep::Shift(c)) => {
            VectorRep::Shift(c.iter().filter(|(&k, _)| k >= n).map(|(&k, &v)| (k - n, v)).collect())
        }
        (OperatorModel::FiniteContraction(f), VectorRep::Finite(v)) => {
            VectorRep::Finite(matrix_power(&f.matrix.adjoint(), n) * v)
        }
        (OperatorModel::DirectSum(ms), VectorRep::Sum(vs)) => {
            VectorRep::Sum(ms.iter().zip(vs).map(|(m, v)| adjoint_power(m, n, v)).collect())
        }
        _ => unreachable!("shape checked by caller"),
    }
}

/// `W_t x` for the translation semigroup whose cogenerator is the shift,
/// reported in the first `truncation` Laguerre coordinates.
pub fn shift_semigroup_element(model: &OperatorModel, t: f64, x: &VectorRep, tol: f64) -> Result<TranslationReport> {
    match (model, x) {
        (OperatorModel::UnilateralShift { truncation }, VectorRep::Shift(c)) => translate(t, c, *truncation, tol),
        _ => Err(LabError::ShapeMismatch("translation semigroup needs a shift model and vector".into())),
    }
}
