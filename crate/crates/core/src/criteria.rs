//! Bias-aware MSE decomposition of the reduced-model least-squares estimator
//! and the scalar design criteria built on it.
//!
//! For a design with partitioned moment matrix `M` and standardised bias
//! parameter `ψ`, the estimator's scaled MSE matrix is `R = S1 + S2` with
//! `S1 = M11⁻¹` and `S2 = (M11⁻¹ M12 ψ)(M11⁻¹ M12 ψ)ᵀ`. The σ²/N prefactor
//! does not depend on the design and is left out of every criterion.

use crate::design::{MonomialBasis, PartitionedMoment};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Relative agreement required between the factorized and the direct
/// determinant of `R`.
pub const DET_IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BiasMse {
    pub s1: Matrix,
    pub s2: Matrix,
    pub trace_s1: f64,
    pub trace_s2: f64,
    pub psi: Vec<f64>,
}

impl BiasMse {
    pub fn r(&self) -> Matrix {
        &self.s1 + &self.s2
    }
}

fn check_psi(moment: &PartitionedMoment, psi: &[f64]) -> Result<()> {
    if psi.len() != moment.q() {
        return Err(Error::DimensionMismatch(format!(
            "psi has length {} but the bias basis has {} terms",
            psi.len(),
            moment.q()
        )));
    }
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("psi".into()));
    }
    Ok(())
}

/// `M11⁻¹ M12 ψ`, the bias direction of the estimator.
fn bias_vector(m11_inv: &Matrix, moment: &PartitionedMoment, psi: &[f64]) -> Result<Vec<f64>> {
    m11_inv.mul_vec(&moment.m12.mul_vec(psi)?)
}

pub fn bias_mse(moment: &PartitionedMoment, psi: &[f64]) -> Result<BiasMse> {
    check_psi(moment, psi)?;
    let s1 = moment.m11.invert()?;
    let b = bias_vector(&s1, moment, psi)?;
    let col = Matrix::column(&b);
    let s2 = &col * &col.transpose();
    Ok(BiasMse {
        trace_s1: s1.trace(),
        trace_s2: b.iter().map(|v| v * v).sum(),
        s1,
        s2,
        psi: psi.to_vec(),
    })
}

/// Trace criterion `trace(S1) + trace(S2)`.
pub fn a_criterion(mse: &BiasMse) -> f64 {
    mse.trace_s1 + mse.trace_s2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DCriterion {
    /// `det(S1) · (1 + ψᵀ M21 M11⁻¹ M12 ψ)`.
    pub value: f64,
    /// `det(S1 + S2)` from the assembled matrix.
    pub direct: f64,
    /// The factor `1 + ψᵀ M21 M11⁻¹ M12 ψ`.
    pub bias_factor: f64,
}

/// Determinant criterion through the matrix-determinant-lemma factorization,
/// cross-checked against the direct determinant of `R`.
pub fn d_criterion(moment: &PartitionedMoment, psi: &[f64]) -> Result<DCriterion> {
    check_psi(moment, psi)?;
    let s1 = moment.m11.invert()?;
    let m12_psi = moment.m12.mul_vec(psi)?;
    let bias_factor = 1.0 + s1.quadratic_form(&m12_psi)?;
    let value = s1.determinant()? * bias_factor;

    let b = s1.mul_vec(&m12_psi)?;
    let col = Matrix::column(&b);
    let r = &s1 + &(&col * &col.transpose());
    let direct = r.determinant()?;

    let scale = value.abs().max(direct.abs());
    if scale > 0.0 && (value - direct).abs() > DET_IDENTITY_TOL * scale {
        return Err(Error::IllConditioned(format!(
            "determinant identity violated: factorized {value:e} vs direct {direct:e}"
        )));
    }
    Ok(DCriterion { value, direct, bias_factor })
}

/// `Q1 = M21 M11⁻² M12` (q×q).
pub fn q1_matrix(moment: &PartitionedMoment) -> Result<Matrix> {
    let inv = moment.m11.invert()?;
    let a = inv.matmul(&moment.m12)?;
    Ok(symmetrize(&a.transpose().matmul(&a)?))
}

/// Worst-case `trace(S2)` over `‖ψ‖₂ = 1`: the largest eigenvalue of `Q1`.
pub fn q1_criterion(moment: &PartitionedMoment) -> Result<f64> {
    q1_matrix(moment)?.max_eigenvalue()
}

fn symmetrize(m: &Matrix) -> Matrix {
    (&*m + &m.transpose()).scale(0.5)
}

/// `Q2 = X1 M11⁻² X1ᵀ` for the design list `x_design`, where `X1` stacks
/// `f(x)` row by row and `M11 = Σ wᵢ f(xᵢ) f(xᵢ)ᵀ`. Weights default to equal.
pub fn q2_matrix(
    x_design: &[Vec<f64>],
    f: &MonomialBasis,
    weights: Option<&[f64]>,
) -> Result<Matrix> {
    let n = x_design.len();
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    let uniform;
    let weights = match weights {
        Some(w) if w.len() != n => {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {n} design points",
                w.len()
            )))
        }
        Some(w) => w,
        None => {
            uniform = vec![1.0 / n as f64; n];
            &uniform
        }
    };
    let rows = x_design.iter().map(|x| f.evaluate(x)).collect::<Result<Vec<_>>>()?;
    let x1 = Matrix::from_rows(&rows)?;
    let p = f.len();
    let mut m11 = Matrix::zeros(p, p);
    for (row, &w) in rows.iter().zip(weights) {
        for r in 0..p {
            for c in 0..p {
                m11[(r, c)] += w * row[r] * row[c];
            }
        }
    }
    let inv = m11.invert()?;
    let a = x1.matmul(&inv)?;
    Ok(symmetrize(&a.matmul(&a.transpose())?))
}

/// Exact `max hᵀ Q2 h` over `h = Φc, ‖c‖ = 1`, where the columns of `Φ` are the
/// dictionary vectors: `λ_max(Φᵀ Q2 Φ)`.
pub fn q2_worst_bias(
    x_design: &[Vec<f64>],
    f: &MonomialBasis,
    dictionary: &[Vec<f64>],
    weights: Option<&[f64]>,
) -> Result<f64> {
    let q2 = q2_matrix(x_design, f, weights)?;
    worst_bias_against(&q2, dictionary)
}

pub fn worst_bias_against(q2: &Matrix, dictionary: &[Vec<f64>]) -> Result<f64> {
    if dictionary.is_empty() {
        return Err(Error::DimensionMismatch("empty dictionary".into()));
    }
    let n = q2.rows();
    if let Some(bad) = dictionary.iter().find(|h| h.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "dictionary vector of length {} over {n} design points",
            bad.len()
        )));
    }
    let phi = Matrix::from_rows(dictionary)?.transpose();
    let reduced = phi.transpose().matmul(&q2.matmul(&phi)?)?;
    symmetrize(&reduced).max_eigenvalue()
}
