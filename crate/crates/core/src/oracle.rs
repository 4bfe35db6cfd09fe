//! Brute-force analysis of finite-dimensional contractions.
//!
//! In finite dimensions everything is computable: the unitary part is the
//! largest subspace on which every power of `T` and `T*` is isometric, the
//! rest decays geometrically, and the closure of `{Uⁿ}` for a unitary `U` can
//! be sampled directly. These results serve as ground truth for the
//! spectral-measure machinery.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exec::Execution;
use crate::model::{matrix_power, NORM_SLACK};

/// Singular values at or below this are treated as zero.
pub const RANK_THRESHOLD: f64 = 1e-9;

pub const SCOPE_NOTE: &str = "finite-dimensional oracle: point spectrum only, \
flight vectors decay strongly so H_m within the flight space is trivial";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteAnalysis {
    pub dim: usize,
    #[serde(with = "matrix_serde")]
    pub unitary_basis: DMatrix<Complex64>,
    #[serde(with = "matrix_serde")]
    pub cnu_basis: DMatrix<Complex64>,
    #[serde(with = "crate::numeric::complex_vec")]
    pub unitary_eigenvalues: Vec<Complex64>,
    /// `max |(T|_{H_u})* (T|_{H_u}) − I|` together with the invariance defect.
    pub restriction_defect: f64,
    pub threshold: f64,
}

impl FiniteAnalysis {
    pub fn unitary_dim(&self) -> usize {
        self.unitary_basis.ncols()
    }
}

fn check_contraction(t: &DMatrix<Complex64>) -> Result<()> {
    if !t.is_square() || t.nrows() == 0 {
        return Err(LabError::InvalidModel("oracle needs a nonempty square matrix".into()));
    }
    let norm = t.clone().singular_values().max();
    if norm > 1.0 + NORM_SLACK {
        return Err(LabError::InvalidModel(format!("operator norm {norm} exceeds 1")));
    }
    Ok(())
}

/// Orthonormal basis of `{v : m v = 0}` restricted to the columns' span.
fn null_space(m: &DMatrix<Complex64>, threshold: f64) -> DMatrix<Complex64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad so that the SVD returns a full set of right singular vectors.
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::<Complex64>::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let keep: Vec<usize> = (0..cols).filter(|&i| svd.singular_values[i] <= threshold).collect();
    let mut out = DMatrix::<Complex64>::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        for r in 0..cols {
            out[(r, c)] = v_t[(i, r)].conj();
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the columns of `q`.
fn complement(q: &DMatrix<Complex64>, dim: usize) -> DMatrix<Complex64> {
    let proj = DMatrix::<Complex64>::identity(dim, dim) - q * q.adjoint();
    let eig = proj.symmetric_eigen();
    let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    DMatrix::from_fn(dim, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

/// `H_u = ⋂_{n ≤ d} ker(I − T*ⁿTⁿ) ∩ ker(I − TⁿT*ⁿ)`.
pub fn unitary_part(t: &DMatrix<Complex64>) -> Result<FiniteAnalysis> {
    check_contraction(t)?;
    let d = t.nrows();
    let id = DMatrix::<Complex64>::identity(d, d);
    let mut basis = id.clone();
    let mut tn = id.clone();
    for _ in 1..=d {
        if basis.ncols() == 0 {
            break;
        }
        tn = &tn * t;
        let a = &id - tn.adjoint() * &tn;
        let b = &id - &tn * tn.adjoint();
        let mut stacked = DMatrix::<Complex64>::zeros(2 * d, basis.ncols());
        stacked.view_mut((0, 0), (d, basis.ncols())).copy_from(&(&a * &basis));
        stacked.view_mut((d, 0), (d, basis.ncols())).copy_from(&(&b * &basis));
        let kernel = null_space(&stacked, RANK_THRESHOLD);
        basis = &basis * kernel;
    }
    let r = basis.ncols();
    let (eigen, defect) = if r == 0 {
        (Vec::new(), 0.0)
    } else {
        let tu = basis.adjoint() * t * &basis;
        let unitarity = (tu.adjoint() * &tu - DMatrix::<Complex64>::identity(r, r)).camax();
        let invariance = (t * &basis - &basis * &tu).camax();
        let eig = tu.clone().schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default();
        (eig, unitarity.max(invariance))
    };
    Ok(FiniteAnalysis {
        dim: d,
        cnu_basis: complement(&basis, d),
        unitary_basis: basis,
        unitary_eigenvalues: eigen,
        restriction_defect: defect,
        threshold: RANK_THRESHOLD,
    })
}

pub fn spectral_radius(t: &DMatrix<Complex64>) -> f64 {
    if t.nrows() == 0 {
        return 0.0;
    }
    t.clone()
        .schur()
        .eigenvalues()
        .map(|v| v.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY)
}

/// Reversible (unitary, point-spectrum) part versus flight part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSplitting {
    pub analysis: FiniteAnalysis,
    /// Every flight vector is weakly stable, so `H_w` is the flight space.
    #[serde(with = "matrix_serde")]
    pub h_w_basis: DMatrix<Complex64>,
    /// Dimension of `H_m` inside the flight space; always zero here.
    pub h_m_flight_dim: usize,
    pub flight_spectral_radius: f64,
    pub scope: String,
}

pub fn classify_finite(t: &DMatrix<Complex64>) -> Result<FiniteSplitting> {
    let analysis = unitary_part(t)?;
    let flight = analysis.cnu_basis.clone();
    let rho = if flight.ncols() == 0 { 0.0 } else { spectral_radius(&(flight.adjoint() * t * &flight)) };
    Ok(FiniteSplitting {
        h_w_basis: flight,
        h_m_flight_dim: 0,
        flight_spectral_radius: rho,
        scope: SCOPE_NOTE.to_string(),
        analysis,
    })
}

/// `max_{i,j} |⟨Tⁿ f_i, f_j⟩|` over the columns of `frame`.
pub fn decay_at(t: &DMatrix<Complex64>, frame: &DMatrix<Complex64>, n: u64) -> f64 {
    if frame.ncols() == 0 {
        return 0.0;
    }
    (frame.adjoint() * matrix_power(t, n) * frame).camax()
}

/// A cluster of visited powers `Uⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    /// First visited power in the cluster; serves as its representative.
    pub power: u64,
    #[serde(with = "matrix_serde")]
    pub matrix: DMatrix<Complex64>,
    pub members: usize,
    /// Largest Frobenius distance from a member to the representative.
    pub radius: f64,
}

/// Greedy clustering of `{Uⁿ : 1 ≤ n ≤ budget}` with Frobenius radius `radius`.
pub fn sample_limit_operators(
    u: &DMatrix<Complex64>,
    budget: u64,
    radius: f64,
    exec: Execution,
) -> Result<Vec<LimitSample>> {
    check_contraction(u)?;
    let d = u.nrows();
    let defect = (u.adjoint() * u - DMatrix::<Complex64>::identity(d, d)).camax();
    if defect > 1e-9 {
        return Err(LabError::InvalidModel(format!("matrix is not unitary (defect {defect:e})")));
    }
    if !(radius > 0.0) {
        return Err(LabError::InvalidTolerance(radius));
    }
    let mut samples: Vec<LimitSample> = Vec::new();
    let mut p = DMatrix::<Complex64>::identity(d, d);
    for n in 1..=budget {
        p = &p * u;
        let dists = exec.map(&samples, |s| (&p - &s.matrix).norm());
        match dists.iter().position(|&dist| dist <= radius) {
            Some(i) => {
                samples[i].members += 1;
                samples[i].radius = samples[i].radius.max(dists[i]);
            }
            None => samples.push(LimitSample { power: n, matrix: p.clone(), members: 1, radius: 0.0 }),
        }
    }
    Ok(samples)
}

mod matrix_serde {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect();
        (m.nrows(), m.ncols(), rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<Complex64>, D::Error> {
        let (r, c, rows) = <(usize, usize, Vec<Vec<[f64; 2]>>)>::deserialize(d)?;
        Ok(DMatrix::from_fn(r, c, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(entries: &[Complex64]) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(entries))
    }

    #[test]
    fn diagonal_unitary_part_is_first_axis() {
        let t = diag(&[Complex64::from_polar(1.0, 0.7), Complex64::new(0.5, 0.0)]);
        let a = unitary_part(&t).unwrap();
        assert_eq!(a.unitary_dim(), 1);
        assert!((a.unitary_basis[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(a.restriction_defect < 1e-12);
    }

    #[test]
    fn jordan_block_has_no_unitary_part() {
        let t = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.9, 0.0), Complex64::new(0.1, 0.0), Complex64::default(), Complex64::new(0.9, 0.0)],
        );
        let t = &t / Complex64::new(t.clone().singular_values().max(), 0.0);
        assert_eq!(unitary_part(&t).unwrap().unitary_dim(), 0);
    }

    #[test]
    fn nilpotent_shift_is_all_flight() {
        let mut t = DMatrix::<Complex64>::zeros(8, 8);
        for i in 1..8 {
            t[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        let s = classify_finite(&t).unwrap();
        assert_eq!(s.analysis.unitary_dim(), 0);
        assert_eq!(s.h_w_basis.ncols(), 8);
        assert!(decay_at(&t, &s.h_w_basis, 8) == 0.0);
    }

    #[test]
    fn rational_rotation_has_q_clusters() {
        let u = diag(&[Complex64::from_polar(1.0, std::f64::consts::TAU * 2.0 / 5.0)]);
        let s = sample_limit_operators(&u, 100, 1e-6, Execution::Sequential).unwrap();
        assert_eq!(s.len(), 5);
        let id = sample_limit_operators(&diag(&[Complex64::new(1.0, 0.0)]), 50, 1e-6, Execution::Sequential).unwrap();
        assert_eq!(id.len(), 1);
    }
}
