use serde::Serialize;

use super::{Certificate, Tier};
use crate::error::{LabError, Result};
use crate::exec::Execution;
use crate::measure::FourierValue;
use crate::model::{apply_power, inner_product_with, OperatorModel, VectorRep};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WanderOutcome {
    Found { certificate: Certificate },
    Failed {
        /// Indices accepted before the search ran out of room.
        partial: Vec<u64>,
        /// Smallest `ε` that would have admitted one more index `≤ N_max`.
        best_epsilon: f64,
        requested: usize,
    },
}

/// Pairing tolerance for the precomputed table.
const PAIRING_TOL: f64 = 1e-12;

/// Greedy search for `0 = k_0 < … < k_{m−1} ≤ N_max` with
/// `|⟨T^{k_j} x, T^{k_l} x⟩| ≤ ε` for `j ≠ l`, always taking the smallest
/// admissible index. Needs an isometric model, so that the pairing depends
/// only on `k_j − k_l`.
pub fn weakly_wandering_search(
    model: &OperatorModel,
    x: &VectorRep,
    m: usize,
    epsilon: f64,
    n_max: u64,
    exec: Execution,
) -> Result<WanderOutcome> {
    if m < 2 {
        return Err(LabError::InvalidSequence(format!("weakly wandering search needs m ≥ 2, got {m}")));
    }
    if !(epsilon >= 0.0) {
        return Err(LabError::InvalidTolerance(epsilon));
    }
    model.check(x)?;
    if !is_isometric(model) {
        return Err(LabError::Unsupported(format!("weakly wandering search needs an isometric model, got {}", model.kind())));
    }
    // p[d] = ⟨T^d x, x⟩, d = 1..=N_max; for isometries ⟨T^a x, T^b x⟩ = p[a − b] when a ≥ b.
    let table: Vec<FourierValue> = exec
        .map_range(n_max as usize, |i| {
            let tx = apply_power(model, i as i64 + 1, x)?;
            inner_product_with(model, &tx, x, PAIRING_TOL, Execution::Sequential)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let worst = |k: u64, chosen: &[u64]| -> f64 {
        chosen
            .iter()
            .map(|&j| {
                let p = table[(k - j - 1) as usize];
                p.value.norm() + p.error_bound
            })
            .fold(0.0, f64::max)
    };
    let mut chosen = vec![0u64];
    for k in 1..=n_max {
        if chosen.len() == m {
            break;
        }
        if worst(k, &chosen) <= epsilon {
            chosen.push(k);
        }
    }
    if chosen.len() < m {
        let last = *chosen.last().expect("nonempty");
        let best_epsilon = (last + 1..=n_max).map(|k| worst(k, &chosen)).fold(f64::INFINITY, f64::min);
        return Ok(WanderOutcome::Failed { partial: chosen, best_epsilon, requested: m });
    }
    let max_observed = verify(model, x, &chosen, exec)?;
    if max_observed > epsilon {
        return Err(LabError::PrecisionUnreachable { best_bound: max_observed, requested: epsilon });
    }
    Ok(WanderOutcome::Found {
        certificate: Certificate::WeaklyWandering { tier: Tier::Certified, indices: chosen, epsilon, max_observed },
    })
}

fn is_isometric(model: &OperatorModel) -> bool {
    match model {
        OperatorModel::CyclicUnitary(_) | OperatorModel::UnilateralShift { .. } => true,
        OperatorModel::FiniteContraction(f) => f.is_unitary(),
        OperatorModel::DirectSum(ms) => ms.iter().all(is_isometric),
    }
}

/// Re-evaluates every off-diagonal pairing on explicit vectors `T^{k_j} x`.
fn verify(model: &OperatorModel, x: &VectorRep, indices: &[u64], exec: Execution) -> Result<f64> {
    let orbit: Vec<VectorRep> = indices.iter().map(|&k| apply_power(model, k as i64, x)).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> =
        (0..indices.len()).flat_map(|a| (a + 1..indices.len()).map(move |b| (a, b))).collect();
    let vals = exec.map(&pairs, |&(a, b)| inner_product_with(model, &orbit[a], &orbit[b], PAIRING_TOL, Execution::Sequential));
    let mut max: f64 = 0.0;
    for v in vals {
        let v = v?;
        max = max.max(v.value.norm() + v.error_bound);
    }
    Ok(max)
}
