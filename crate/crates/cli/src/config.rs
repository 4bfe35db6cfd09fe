//! Experiment configuration: command-line options plus the model file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use limitlab::algebra::EntanglementPolicy;
use limitlab::dynamics::SequenceSpec;
use limitlab::{Execution, OperatorModel, VectorRep};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?}, expected json or csv")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// Largest power visited when sampling limit operators.
    pub budget: u64,
    pub radius: f64,
    /// Power at which flight-space decay is checked.
    pub decay_power: u64,
    pub decay_tol: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { budget: 1000, radius: 0.1, decay_power: 500, decay_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WanderParams {
    pub count: usize,
    pub epsilon: f64,
    pub n_max: u64,
}

impl Default for WanderParams {
    fn default() -> Self {
        Self { count: 4, epsilon: 0.1, n_max: 19683 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFileRaw {
    model: OperatorModel,
    #[serde(default)]
    policy: Option<EntanglementPolicy>,
    #[serde(default)]
    vectors: Option<Vectors>,
    #[serde(default)]
    frequencies: Option<Vec<f64>>,
    #[serde(default)]
    oracle: Option<OracleParams>,
    #[serde(default)]
    wander: Option<WanderParams>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Vectors {
    x: Option<Value>,
    y: Option<Value>,
}

/// Parsed model file. Either `{"model": …, …}` or a bare model object.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: OperatorModel,
    pub policy: EntanglementPolicy,
    pub x: Option<VectorRep>,
    pub y: Option<VectorRep>,
    pub frequencies: Option<Vec<f64>>,
    pub oracle: OracleParams,
    pub wander: WanderParams,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let raw: ModelFileRaw = if v.get("model").is_some() {
            serde_json::from_str(text)?
        } else {
            ModelFileRaw {
                model: serde_json::from_str(text)?,
                policy: None,
                vectors: None,
                frequencies: None,
                oracle: None,
                wander: None,
            }
        };
        let vectors = raw.vectors.unwrap_or_default();
        let vector = |v: Option<Value>| -> Result<Option<VectorRep>> {
            v.map(|v| VectorRep::from_json(&raw.model, &v)).transpose().map_err(Into::into)
        };
        Ok(Self {
            x: vector(vectors.x)?,
            y: vector(vectors.y)?,
            policy: raw.policy.unwrap_or_default(),
            frequencies: raw.frequencies,
            oracle: raw.oracle.unwrap_or_default(),
            wander: raw.wander.unwrap_or_default(),
            model: raw.model,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading model file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("model file {}", path.display()))
    }

    /// `x` from the file, or the canonical unit vector of the model.
    pub fn x(&self) -> VectorRep {
        self.x.clone().unwrap_or_else(|| unit_vector(&self.model))
    }

    pub fn y(&self) -> VectorRep {
        self.y.clone().unwrap_or_else(|| self.x())
    }
}

/// `e_0`, `basis_0` or the first coordinate vector, summed over components.
pub fn unit_vector(model: &OperatorModel) -> VectorRep {
    match model {
        OperatorModel::CyclicUnitary(_) => VectorRep::character(0),
        OperatorModel::UnilateralShift { .. } => VectorRep::basis(0),
        OperatorModel::FiniteContraction(f) => {
            let mut v = vec![limitlab::Complex64::default(); f.dim()];
            v[0] = limitlab::Complex64::new(1.0, 0.0);
            VectorRep::coordinates(v)
        }
        OperatorModel::DirectSum(ms) => VectorRep::Sum(ms.iter().map(unit_vector).collect()),
    }
}

/// Everything one subcommand run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model_path: PathBuf,
    pub file: ModelFile,
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub seq: Option<SequenceSpec>,
    pub frame: Option<Vec<VectorRep>>,
    pub format: Format,
    pub execution: Execution,
}

impl ExperimentConfig {
    /// Loads the model file and parses the JSON-valued options against it.
    pub fn new(
        model_path: &Path,
        out: &Path,
        tol: Option<f64>,
        seq: Option<&str>,
        frame: Option<&str>,
        format: Format,
    ) -> Result<Self> {
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                bail!("--tol must be positive and finite, got {t}");
            }
        }
        let file = ModelFile::load(model_path)?;
        let seq = seq.map(|s| serde_json::from_str::<SequenceSpec>(s).context("--seq")).transpose()?;
        let frame = match frame {
            Some(s) => {
                let v: Value = serde_json::from_str(s).context("--frame")?;
                let items = v.as_array().context("--frame must be a JSON list of vectors")?;
                Some(
                    items
                        .iter()
                        .map(|f| VectorRep::from_json(&file.model, f))
                        .collect::<limitlab::Result<Vec<_>>>()
                        .context("--frame")?,
                )
            }
            None => None,
        };
        Ok(Self {
            model_path: model_path.to_path_buf(),
            file,
            out: out.to_path_buf(),
            tol,
            seq,
            frame,
            format,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.execution = exec;
        self
    }
}
