use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{FiniteContraction, OperatorModel, VectorRep};
use crate::error::{LabError, Result};
use crate::measure::MeasureSpec;

/// Wire form of [`OperatorModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    CyclicUnitary { measure: MeasureSpec },
    Shift { truncation: usize },
    Finite { matrix: MatrixSpec },
    DirectSum { components: Vec<ModelSpec> },
}

/// Row-major complex matrix: either nested rows or a flat square list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<[f64; 2]>>),
    Flat(Vec<[f64; 2]>),
}

impl MatrixSpec {
    fn into_matrix(self) -> Result<DMatrix<Complex64>> {
        let rows = match self {
            MatrixSpec::Rows(r) => r,
            MatrixSpec::Flat(v) => {
                let d = (v.len() as f64).sqrt().round() as usize;
                if d * d != v.len() {
                    return Err(LabError::Schema(format!("flat matrix of length {} is not square", v.len())));
                }
                v.chunks(d.max(1)).map(|c| c.to_vec()).collect()
            }
        };
        let d = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(LabError::Schema(format!("matrix row {i} has {} entries, expected {d}", r.len())));
        }
        Ok(DMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
    }
}

impl TryFrom<ModelSpec> for OperatorModel {
    type Error = LabError;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::CyclicUnitary { measure } => Ok(OperatorModel::CyclicUnitary(measure.try_into()?)),
            ModelSpec::Shift { truncation } => OperatorModel::shift(truncation),
            ModelSpec::Finite { matrix } => OperatorModel::finite(matrix.into_matrix()?),
            ModelSpec::DirectSum { components } => OperatorModel::direct_sum(
                components.into_iter().map(OperatorModel::try_from).collect::<Result<_>>()?,
            ),
        }
    }
}

impl From<OperatorModel> for ModelSpec {
    fn from(m: OperatorModel) -> Self {
        match m {
            OperatorModel::CyclicUnitary(mu) => ModelSpec::CyclicUnitary { measure: mu.into() },
            OperatorModel::UnilateralShift { truncation } => ModelSpec::Shift { truncation },
            OperatorModel::FiniteContraction(FiniteContraction { matrix, .. }) => ModelSpec::Finite {
                matrix: MatrixSpec::Rows(
                    matrix.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
                ),
            },
            OperatorModel::DirectSum(c) => ModelSpec::DirectSum { components: c.into_iter().map(Into::into).collect() },
        }
    }
}

fn pair(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(n) => Ok(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or_else(|| LabError::Schema(format!("bad coefficient {v}")))?;
            let im = a[1].as_f64().ok_or_else(|| LabError::Schema(format!("bad coefficient {v}")))?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(LabError::Schema(format!("coefficient must be a number or [re, im], got {v}"))),
    }
}

fn sparse<K: std::str::FromStr + Ord>(v: &Value) -> Result<BTreeMap<K, Complex64>> {
    let obj = v.as_object().ok_or_else(|| LabError::Schema(format!("expected a sparse map, got {v}")))?;
    obj.iter()
        .map(|(k, c)| {
            let key = k.trim().parse::<K>().map_err(|_| LabError::Schema(format!("bad index {k:?}")))?;
            Ok((key, pair(c)?))
        })
        .collect()
}

impl VectorRep {
    /// Parses a vector for `model`: sparse `{"index": [re, im]}` maps for
    /// cyclic, shift and finite components, a list of those for direct sums.
    /// Finite vectors may also be given as a dense list.
    pub fn from_json(model: &OperatorModel, v: &Value) -> Result<VectorRep> {
        let rep = match model {
            OperatorModel::CyclicUnitary(_) => VectorRep::Cyclic(sparse(v)?),
            OperatorModel::UnilateralShift { .. } => VectorRep::Shift(sparse(v)?),
            OperatorModel::FiniteContraction(f) => {
                let mut out = DVector::<Complex64>::zeros(f.dim());
                match v {
                    Value::Array(a) if a.len() == f.dim() => {
                        for (i, c) in a.iter().enumerate() {
                            out[i] = pair(c)?;
                        }
                    }
                    _ => {
                        for (i, c) in sparse::<usize>(v)? {
                            if i >= f.dim() {
                                return Err(LabError::ShapeMismatch(format!("coordinate {i} outside dimension {}", f.dim())));
                            }
                            out[i] = c;
                        }
                    }
                }
                VectorRep::Finite(out)
            }
            OperatorModel::DirectSum(ms) => {
                let parts = v.as_array().ok_or_else(|| LabError::Schema("direct-sum vector must be a list".into()))?;
                if parts.len() != ms.len() {
                    return Err(LabError::ShapeMismatch(format!(
                        "direct-sum vector has {} parts, model has {}",
                        parts.len(),
                        ms.len()
                    )));
                }
                VectorRep::Sum(ms.iter().zip(parts).map(|(m, p)| VectorRep::from_json(m, p)).collect::<Result<_>>()?)
            }
        };
        Ok(rep)
    }

    pub fn to_json(&self) -> Value {
        let pair = |c: &Complex64| Value::from(vec![c.re, c.im]);
        match self {
            VectorRep::Cyclic(m) => Value::Object(m.iter().map(|(k, c)| (k.to_string(), pair(c))).collect::<Map<_, _>>()),
            VectorRep::Shift(m) => Value::Object(m.iter().map(|(k, c)| (k.to_string(), pair(c))).collect::<Map<_, _>>()),
            VectorRep::Finite(v) => Value::Array(v.iter().map(pair).collect()),
            VectorRep::Sum(v) => Value::Array(v.iter().map(|c| c.to_json()).collect()),
        }
    }
}

impl Serialize for VectorRep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}
