//! Two-group (treatment/control) covariate balance.
//!
//! With a ±1 group indicator and a centred covariate `z`, the reduced model
//! `y = θ0 + θ1 t` ignores `φ z`; its bias term is `ψ² ‖z̄1 − z̄2‖² / 4`, which
//! vanishes exactly when the group means agree.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SYMMETRY_TOL};

/// Tolerance on stratum weights summing to one.
const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoGroupData {
    group1: Vec<Vec<f64>>,
    group2: Vec<Vec<f64>>,
    psi: f64,
}

impl TwoGroupData {
    pub fn new(group1: Vec<Vec<f64>>, group2: Vec<Vec<f64>>, psi: f64) -> Result<Self> {
        if group1.is_empty() || group2.is_empty() {
            return Err(Error::InvalidGroups("both groups must be nonempty".into()));
        }
        if group1.len() != group2.len() {
            return Err(Error::InvalidGroups(format!(
                "unequal group sizes {} and {}",
                group1.len(),
                group2.len()
            )));
        }
        let dim = group1[0].len();
        if dim == 0 {
            return Err(Error::InvalidGroups("covariate vectors are empty".into()));
        }
        if group1.iter().chain(&group2).any(|z| z.len() != dim) {
            return Err(Error::InvalidGroups("covariate vectors differ in dimension".into()));
        }
        if !psi.is_finite() || group1.iter().chain(&group2).flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("group data".into()));
        }
        Ok(Self { group1, group2, psi })
    }

    /// Convenience constructor for a scalar covariate.
    pub fn scalar(group1: &[f64], group2: &[f64], psi: f64) -> Result<Self> {
        let wrap = |g: &[f64]| g.iter().map(|&v| vec![v]).collect();
        Self::new(wrap(group1), wrap(group2), psi)
    }

    pub fn group1(&self) -> &[Vec<f64>] {
        &self.group1
    }

    pub fn group2(&self) -> &[Vec<f64>] {
        &self.group2
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn dim(&self) -> usize {
        self.group1[0].len()
    }

    /// Units per group (`N/2`).
    pub fn group_size(&self) -> usize {
        self.group1.len()
    }

    pub fn mean1(&self) -> Vec<f64> {
        mean(&self.group1)
    }

    pub fn mean2(&self) -> Vec<f64> {
        mean(&self.group2)
    }

    /// `z̄1 − z̄2`.
    pub fn mean_difference(&self) -> Vec<f64> {
        self.mean1().iter().zip(self.mean2()).map(|(a, b)| a - b).collect()
    }
}

fn mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![0.0; rows[0].len()];
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / rows.len() as f64).collect()
}

pub fn two_group_bias(data: &TwoGroupData) -> f64 {
    let d2: f64 = data.mean_difference().iter().map(|d| d * d).sum();
    data.psi * data.psi * d2 / 4.0
}

/// `M = XᵀX / N` for the columns `(1, t, z − z̄)` with `t = ±1` for group 1/2:
/// unit diagonal on the first two entries, `(z̄1 − z̄2)/2` coupling `t` and
/// `z`, and `s = Σ (z − z̄)² / N` last.
pub fn two_group_moment(data: &TwoGroupData) -> Result<Matrix> {
    if data.dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "the 3×3 moment needs a scalar covariate, got dimension {}",
            data.dim()
        )));
    }
    let all = || data.group1.iter().chain(&data.group2).map(|z| z[0]);
    let n_total = 2 * data.group_size();
    let grand = all().sum::<f64>() / n_total as f64;
    let s = all().map(|z| (z - grand).powi(2)).sum::<f64>() / n_total as f64;
    let half_diff = data.mean_difference()[0] / 2.0;
    Matrix::from_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, half_diff],
        vec![0.0, half_diff, s],
    ])
}

/// `Σ_k w_k (z̄1,k − z̄2,k)`.
pub fn stratified_difference(strata: &[TwoGroupData], weights: &[f64]) -> Result<Vec<f64>> {
    if strata.is_empty() {
        return Err(Error::WeightMismatch("no strata".into()));
    }
    if weights.len() != strata.len() {
        return Err(Error::WeightMismatch(format!(
            "{} weights for {} strata",
            weights.len(),
            strata.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::WeightMismatch("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::WeightMismatch(format!("weights sum to {total}")));
    }
    let dim = strata[0].dim();
    if strata.iter().any(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch("strata differ in covariate dimension".into()));
    }
    let mut acc = vec![0.0; dim];
    for (stratum, &w) in strata.iter().zip(weights) {
        for (a, d) in acc.iter_mut().zip(stratum.mean_difference()) {
            *a += w * d;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    /// `(treated index, control index)` in the order the pairs were formed.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of Mahalanobis distances (not squared) over the pairs.
    pub total_distance: f64,
}

/// Greedy matching: repeatedly take the globally closest unmatched
/// (treated, control) pair under `d² = (a − b)ᵀ Σ⁻¹ (a − b)`, ties going to
/// the lexicographically smallest `(treated, control)` index pair.
pub fn mahalanobis_pairing(
    treated: &[Vec<f64>],
    controls: &[Vec<f64>],
    covariance: &Matrix,
) -> Result<Pairing> {
    let dim = covariance.rows();
    if !covariance.is_square() {
        return Err(Error::DimensionMismatch("covariance must be square".into()));
    }
    let asym = covariance.asymmetry();
    if asym > SYMMETRY_TOL * covariance.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    if treated.iter().chain(controls).any(|z| z.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "unit covariates must have dimension {dim}"
        )));
    }
    let precision = covariance.invert()?;
    if precision.min_eigenvalue()? <= 0.0 {
        return Err(Error::ParameterOutOfRange("covariance is not positive definite".into()));
    }

    let mut candidates = Vec::with_capacity(treated.len() * controls.len());
    for (i, a) in treated.iter().enumerate() {
        for (j, b) in controls.iter().enumerate() {
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let d2 = precision.quadratic_form(&diff)?.max(0.0);
            candidates.push((d2, i, j));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut treated_used = vec![false; treated.len()];
    let mut control_used = vec![false; controls.len()];
    let target = treated.len().min(controls.len());
    let mut pairs = Vec::with_capacity(target);
    let mut total_distance = 0.0;
    for (d2, i, j) in candidates {
        if pairs.len() == target {
            break;
        }
        if treated_used[i] || control_used[j] {
            continue;
        }
        treated_used[i] = true;
        control_used[j] = true;
        pairs.push((i, j));
        total_distance += d2.sqrt();
    }
    Ok(Pairing { pairs, total_distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::bias_mse;
    use crate::design::PartitionedMoment;

    #[test]
    fn bias_formula_examples() {
        let d = TwoGroupData::scalar(&[1.0, 3.0], &[2.0, 0.0], 2.0).unwrap();
        assert_eq!(two_group_bias(&d), 1.0);
        let d3 = TwoGroupData::scalar(&[1.0, 3.0], &[2.0, 0.0], 6.0).unwrap();
        assert!((two_group_bias(&d3) - 9.0).abs() < 1e-12);
        let balanced = TwoGroupData::scalar(&[1.0, 3.0], &[0.0, 4.0], 2.0).unwrap();
        assert_eq!(two_group_bias(&balanced), 0.0);
    }

    #[test]
    fn group_validation() {
        assert!(matches!(
            TwoGroupData::scalar(&[1.0, 2.0], &[1.0], 1.0),
            Err(Error::InvalidGroups(_))
        ));
        assert!(TwoGroupData::scalar(&[], &[], 1.0).is_err());
        assert!(TwoGroupData::new(vec![vec![1.0]], vec![vec![1.0, 2.0]], 1.0).is_err());
    }

    #[test]
    fn moment_examples() {
        let d = TwoGroupData::scalar(&[1.0, -1.0], &[1.0, -1.0], 1.0).unwrap();
        assert_eq!(two_group_moment(&d).unwrap(), Matrix::identity(3));
        let c = TwoGroupData::scalar(&[2.5, 2.5], &[2.5, 2.5], 1.0).unwrap();
        let m = two_group_moment(&c).unwrap();
        assert_eq!(m[(2, 2)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
        let v = TwoGroupData::new(vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]], 1.0).unwrap();
        assert!(matches!(two_group_moment(&v), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn moment_feeds_the_bias_decomposition() {
        let d = TwoGroupData::scalar(&[0.3, 1.9, -0.4], &[1.1, -2.0, 0.2], 1.7).unwrap();
        let m = two_group_moment(&d).unwrap();
        let pm = PartitionedMoment::from_full(&m, 2).unwrap();
        let mse = bias_mse(&pm, &[d.psi()]).unwrap();
        assert!((mse.trace_s2 - two_group_bias(&d)).abs() < 1e-12);
    }

    #[test]
    fn stratified_examples() {
        let s = |a: f64| TwoGroupData::scalar(&[a], &[0.0], 1.0).unwrap();
        assert_eq!(stratified_difference(&[s(1.0), s(-1.0)], &[0.5, 0.5]).unwrap(), vec![0.0]);
        let v = stratified_difference(&[s(2.0), s(1.0)], &[0.3, 0.7]).unwrap();
        assert!((v[0] - 1.3).abs() < 1e-12);
        assert!(matches!(
            stratified_difference(&[s(2.0), s(1.0)], &[0.3, 0.6]),
            Err(Error::WeightMismatch(_))
        ));
        assert!(matches!(stratified_difference(&[s(2.0)], &[0.5, 0.5]), Err(Error::WeightMismatch(_))));
    }

    #[test]
    fn pairing_tie_goes_to_lower_control_index() {
        let p = mahalanobis_pairing(
            &[vec![0.0, 0.0]],
            &[vec![1.0, 0.0], vec![0.0, 3.0]],
            &Matrix::diag(&[1.0, 9.0]),
        )
        .unwrap();
        assert_eq!(p.pairs, vec![(0, 0)]);
        assert!((p.total_distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_identical_lists() {
        let units = vec![vec![0.0, 1.0], vec![5.0, -2.0], vec![3.0, 3.0]];
        let p = mahalanobis_pairing(&units, &units, &Matrix::identity(2)).unwrap();
        let mut pairs = p.pairs.clone();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(p.total_distance, 0.0);
    }

    #[test]
    fn pairing_rejects_bad_covariance() {
        let u = vec![vec![0.0, 0.0]];
        let singular = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(mahalanobis_pairing(&u, &u, &singular), Err(Error::SingularMatrix));
        let asym = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(mahalanobis_pairing(&u, &u, &asym), Err(Error::NotSymmetric(_))));
        assert!(mahalanobis_pairing(&u, &u, &Matrix::identity(3)).is_err());
    }
}
