use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    Atom, AtomicMeasure, CircleMeasure, ExponentRule, InfiniteConvolution, Mixture, SelfSimilar, TrigDensity,
    DEFAULT_J_MAX,
};
use crate::error::LabError;

/// Wire form of [`CircleMeasure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Atomic {
        atoms: Vec<Atom>,
    },
    Lebesgue,
    TrigDensity {
        #[serde(with = "crate::numeric::complex_vec")]
        coefficients: Vec<Complex64>,
    },
    SelfSimilar {
        base: u64,
        digits: Vec<u64>,
        /// Uniform when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    InfiniteConvolution {
        base: u64,
        exponents: ExponentRuleSpec,
        #[serde(default = "default_j_max")]
        j_max: usize,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub measure: MeasureSpec,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleForm {
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentRuleSpec {
    Rule { form: RuleForm, base: u64 },
    List(Vec<u64>),
}

impl From<ExponentRuleSpec> for ExponentRule {
    fn from(spec: ExponentRuleSpec) -> Self {
        match spec {
            ExponentRuleSpec::Rule { form: RuleForm::Power, base } => ExponentRule::Power { base },
            ExponentRuleSpec::List(v) => ExponentRule::Explicit(v),
        }
    }
}

impl From<ExponentRule> for ExponentRuleSpec {
    fn from(rule: ExponentRule) -> Self {
        match rule {
            ExponentRule::Power { base } => ExponentRuleSpec::Rule { form: RuleForm::Power, base },
            ExponentRule::Explicit(v) => ExponentRuleSpec::List(v),
        }
    }
}

fn default_j_max() -> usize {
    DEFAULT_J_MAX
}

impl TryFrom<MeasureSpec> for CircleMeasure {
    type Error = LabError;

    fn try_from(spec: MeasureSpec) -> Result<Self, LabError> {
        Ok(match spec {
            MeasureSpec::Atomic { atoms } => CircleMeasure::Atomic(AtomicMeasure::new(atoms)?),
            MeasureSpec::Lebesgue => CircleMeasure::Lebesgue,
            MeasureSpec::TrigDensity { coefficients } => CircleMeasure::TrigDensity(TrigDensity::new(coefficients)?),
            MeasureSpec::SelfSimilar { base, digits, weights } => CircleMeasure::SelfSimilar(match weights {
                Some(w) => SelfSimilar::new(base, digits, w)?,
                None => SelfSimilar::uniform(base, digits)?,
            }),
            MeasureSpec::InfiniteConvolution { base, exponents, j_max } => {
                CircleMeasure::InfiniteConvolution(InfiniteConvolution::new(base, exponents.into(), j_max)?)
            }
            MeasureSpec::Mixture { components } => {
                let parts = components
                    .into_iter()
                    .map(|c| Ok((CircleMeasure::try_from(c.measure)?, c.weight)))
                    .collect::<Result<Vec<_>, LabError>>()?;
                CircleMeasure::Mixture(Mixture::new(parts)?)
            }
        })
    }
}

impl From<CircleMeasure> for MeasureSpec {
    fn from(m: CircleMeasure) -> Self {
        match m {
            CircleMeasure::Atomic(a) => MeasureSpec::Atomic { atoms: a.atoms },
            CircleMeasure::Lebesgue => MeasureSpec::Lebesgue,
            CircleMeasure::TrigDensity(d) => MeasureSpec::TrigDensity { coefficients: d.coeffs },
            CircleMeasure::SelfSimilar(s) => {
                MeasureSpec::SelfSimilar { base: s.base, digits: s.digits, weights: Some(s.weights) }
            }
            CircleMeasure::InfiniteConvolution(c) => MeasureSpec::InfiniteConvolution {
                base: c.base,
                exponents: c.rule.into(),
                j_max: c.j_max,
            },
            CircleMeasure::Mixture(m) => MeasureSpec::Mixture {
                components: m
                    .parts
                    .into_iter()
                    .map(|(p, weight)| MixtureComponent { measure: p.into(), weight })
                    .collect(),
            },
        }
    }
}
