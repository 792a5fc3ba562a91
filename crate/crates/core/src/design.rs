//! Regression bases, finite design measures over (x, z)-space, and the
//! partitioned moment matrix.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const FACTORIZATION_TOL: f64 = 1e-10;

/// A list of monomials over the coordinates of a point. Each term is an
/// exponent tuple; `[0, 0]` is the constant, `[1, 0]` is the first coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    terms: Vec<Vec<u32>>,
}

impl MonomialBasis {
    pub fn new(terms: Vec<Vec<u32>>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidBasis("basis needs at least one term".into()));
        };
        let arity = first.len();
        if terms.iter().any(|t| t.len() != arity) {
            return Err(Error::InvalidBasis("terms have differing arity".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].contains(t) {
                return Err(Error::InvalidBasis(format!("duplicate term {t:?}")));
            }
        }
        Ok(Self { terms })
    }

    /// `{1, x}` over a single coordinate.
    pub fn linear_1d() -> Self {
        Self { terms: vec![vec![0], vec![1]] }
    }

    /// `{z}` over a single coordinate.
    pub fn identity_1d() -> Self {
        Self { terms: vec![vec![1]] }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.terms[0].len()
    }

    pub fn terms(&self) -> &[Vec<u32>] {
        &self.terms
    }

    /// Evaluates every term at `point`, in term order. `0^0` is 1.
    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), got: point.len() });
        }
        Ok(self
            .terms
            .iter()
            .map(|exps| point.iter().zip(exps).map(|(&c, &e)| c.powi(e as i32)).product())
            .collect())
    }
}

pub fn evaluate_basis(point: &[f64], basis: &MonomialBasis) -> Result<Vec<f64>> {
    basis.evaluate(point)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl DesignPoint {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Self {
        Self { x, z }
    }
}

/// Finite-support probability measure over (x, z)-space.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMeasure {
    support: Vec<DesignPoint>,
    weights: Vec<f64>,
}

impl DesignMeasure {
    pub fn new(support: Vec<DesignPoint>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        if support.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        let (dx, dz) = (support[0].x.len(), support[0].z.len());
        for p in &support {
            if p.x.len() != dx || p.z.len() != dz {
                return Err(Error::InvalidMeasure("support points have differing arity".into()));
            }
            if p.x.iter().chain(&p.z).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("support coordinate".into()));
            }
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidMeasure(format!("weight {w} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        for (i, p) in support.iter().enumerate() {
            if support[..i].contains(p) {
                return Err(Error::InvalidMeasure(format!(
                    "duplicate support point x={:?} z={:?}",
                    p.x, p.z
                )));
            }
        }
        Ok(Self { support, weights })
    }

    /// Equal weights over `support`.
    pub fn uniform(support: Vec<DesignPoint>) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn support(&self) -> &[DesignPoint] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn x_arity(&self) -> usize {
        self.support[0].x.len()
    }

    pub fn z_arity(&self) -> usize {
        self.support[0].z.len()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Reorders support points (and their weights) by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        Self::new(
            order.iter().map(|&i| self.support[i].clone()).collect(),
            order.iter().map(|&i| self.weights[i]).collect(),
        )
    }
}

/// Blocks of the full moment matrix `[[M11, M12], [M21, M22]]` with
/// `M21 = M12ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedMoment {
    pub m11: Matrix,
    pub m12: Matrix,
    pub m22: Matrix,
}

impl PartitionedMoment {
    pub fn new(m11: Matrix, m12: Matrix, m22: Matrix) -> Result<Self> {
        let p = m11.rows();
        let q = m22.rows();
        if !m11.is_square() || !m22.is_square() || m12.rows() != p || m12.cols() != q {
            return Err(Error::DimensionMismatch(format!(
                "blocks {}x{}, {}x{}, {}x{} do not partition a square matrix",
                m11.rows(),
                m11.cols(),
                m12.rows(),
                m12.cols(),
                m22.rows(),
                m22.cols()
            )));
        }
        Ok(Self { m11, m12, m22 })
    }

    /// Splits a full (p+q)×(p+q) matrix after its first `p` rows and columns.
    pub fn from_full(full: &Matrix, p: usize) -> Result<Self> {
        let n = full.rows();
        if !full.is_square() || p == 0 || p >= n {
            return Err(Error::DimensionMismatch(format!(
                "cannot split a {}x{} matrix at p = {p}",
                full.rows(),
                full.cols()
            )));
        }
        let q = n - p;
        let block = |r0: usize, c0: usize, rows: usize, cols: usize| {
            let mut m = Matrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    m[(r, c)] = full[(r0 + r, c0 + c)];
                }
            }
            m
        };
        Self::new(block(0, 0, p, p), block(0, p, p, q), block(p, p, q, q))
    }

    pub fn p(&self) -> usize {
        self.m11.rows()
    }

    pub fn q(&self) -> usize {
        self.m22.rows()
    }

    pub fn m21(&self) -> Matrix {
        self.m12.transpose()
    }

    pub fn full(&self) -> Matrix {
        let (p, q) = (self.p(), self.q());
        let mut m = Matrix::zeros(p + q, p + q);
        for r in 0..p {
            for c in 0..p {
                m[(r, c)] = self.m11[(r, c)];
            }
            for c in 0..q {
                m[(r, p + c)] = self.m12[(r, c)];
                m[(p + c, r)] = self.m12[(r, c)];
            }
        }
        for r in 0..q {
            for c in 0..q {
                m[(p + r, p + c)] = self.m22[(r, c)];
            }
        }
        m
    }
}

/// `M = Σ wᵢ vᵢ vᵢᵀ` with `vᵢ = (f(xᵢ), g(zᵢ))`, split into blocks by the
/// basis sizes.
pub fn moment_matrix(
    measure: &DesignMeasure,
    f: &MonomialBasis,
    g: &MonomialBasis,
) -> Result<PartitionedMoment> {
    weighted_moment(measure.support(), measure.weights(), f, g)
}

/// Same Gram sum for an arbitrary coefficient per point. Coefficients need not
/// be a probability vector, which makes this usable for weight derivatives.
pub(crate) fn weighted_moment(
    support: &[DesignPoint],
    coefficients: &[f64],
    f: &MonomialBasis,
    g: &MonomialBasis,
) -> Result<PartitionedMoment> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let (p, q) = (f.len(), g.len());
    let mut full = Matrix::zeros(p + q, p + q);
    for (point, &w) in support.iter().zip(coefficients) {
        let mut v = f.evaluate(&point.x)?;
        v.extend(g.evaluate(&point.z)?);
        for r in 0..p + q {
            for c in r..p + q {
                full[(r, c)] += w * v[r] * v[c];
            }
        }
    }
    for r in 0..p + q {
        for c in 0..r {
            full[(r, c)] = full[(c, r)];
        }
    }
    PartitionedMoment::from_full(&full, p)
}

/// The four-point design family `(1,1), (0,1), (0,−1), (−1,−1)` (or any other
/// four points in scalar (x, z)) carrying weights
/// `(αβ, (1−α)β, α(1−β), (1−α)(1−β))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBetaFamily {
    pub points: [(f64, f64); 4],
}

impl Default for AlphaBetaFamily {
    fn default() -> Self {
        Self { points: [(1.0, 1.0), (0.0, 1.0), (0.0, -1.0), (-1.0, -1.0)] }
    }
}

impl AlphaBetaFamily {
    pub fn new(points: [(f64, f64); 4]) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p.0.is_finite() || !p.1.is_finite() {
                return Err(Error::NonFinite("family point".into()));
            }
            if points[..i].contains(p) {
                return Err(Error::InvalidMeasure(format!("duplicate family point {p:?}")));
            }
        }
        Ok(Self { points })
    }

    pub fn weights(alpha: f64, beta: f64) -> [f64; 4] {
        [alpha * beta, (1.0 - alpha) * beta, alpha * (1.0 - beta), (1.0 - alpha) * (1.0 - beta)]
    }

    /// Partial derivatives of [`Self::weights`] with respect to α and β.
    pub fn weight_gradients(alpha: f64, beta: f64) -> ([f64; 4], [f64; 4]) {
        (
            [beta, -beta, 1.0 - beta, -(1.0 - beta)],
            [alpha, 1.0 - alpha, -alpha, -(1.0 - alpha)],
        )
    }

    pub fn support(&self) -> Vec<DesignPoint> {
        self.points.iter().map(|&(x, z)| DesignPoint::new(vec![x], vec![z])).collect()
    }

    /// Causal basis `{1, x}` and bias basis `{z}` of the family's model.
    pub fn bases() -> (MonomialBasis, MonomialBasis) {
        (MonomialBasis::linear_1d(), MonomialBasis::identity_1d())
    }

    pub fn measure(&self, alpha: f64, beta: f64) -> Result<DesignMeasure> {
        alpha_beta_measure(self, alpha, beta)
    }

    pub fn moment(&self, alpha: f64, beta: f64) -> Result<PartitionedMoment> {
        check_unit(alpha, "alpha")?;
        check_unit(beta, "beta")?;
        let (f, g) = Self::bases();
        weighted_moment(&self.support(), &Self::weights(alpha, beta), &f, &g)
    }
}

fn check_unit(v: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::ParameterOutOfRange(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

pub fn alpha_beta_measure(family: &AlphaBetaFamily, alpha: f64, beta: f64) -> Result<DesignMeasure> {
    check_unit(alpha, "alpha")?;
    check_unit(beta, "beta")?;
    DesignMeasure::new(family.support(), AlphaBetaFamily::weights(alpha, beta).to_vec())
}

/// Outcome of the two product-structure tests on a design measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductCheck {
    /// Support equals the Cartesian product of its x- and z-projections.
    pub support_is_product: bool,
    /// Every z-level carries the same number of points and the same
    /// conditional weight vector over its x-points taken in ascending order,
    /// so the weights are (z-marginal) × (common within-level law).
    pub weights_factorize: bool,
}

impl ProductCheck {
    pub fn is_product(&self) -> bool {
        self.support_is_product && self.weights_factorize
    }
}

fn key(v: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same coordinate
    v.iter().map(|c| if *c == 0.0 { 0 } else { c.to_bits() }).collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

pub fn is_product_design(measure: &DesignMeasure) -> ProductCheck {
    let support = measure.support();
    let weights = measure.weights();

    let mut xs: Vec<&Vec<f64>> = Vec::new();
    let mut zs: Vec<&Vec<f64>> = Vec::new();
    for p in support {
        if !xs.iter().any(|x| key(x) == key(&p.x)) {
            xs.push(&p.x);
        }
        if !zs.iter().any(|z| key(z) == key(&p.z)) {
            zs.push(&p.z);
        }
    }
    let support_is_product = support.len() == xs.len() * zs.len();

    let mut slices: BTreeMap<Vec<u64>, (f64, Vec<(&[f64], f64)>)> = BTreeMap::new();
    for (p, &w) in support.iter().zip(weights) {
        let entry = slices.entry(key(&p.z)).or_insert((0.0, Vec::new()));
        entry.0 += w;
        entry.1.push((&p.x, w));
    }
    let mut conditionals: Vec<Vec<f64>> = Vec::new();
    for (mass, points) in slices.values_mut() {
        points.sort_by(|a, b| lex_cmp(a.0, b.0));
        if *mass > 0.0 {
            conditionals.push(points.iter().map(|(_, w)| w / *mass).collect());
        } else {
            conditionals.push(Vec::new());
        }
    }
    let sizes: Vec<usize> = slices.values().map(|(_, pts)| pts.len()).collect();
    let sizes_agree = sizes.windows(2).all(|w| w[0] == w[1]);
    let nonempty: Vec<&Vec<f64>> = conditionals.iter().filter(|c| !c.is_empty()).collect();
    let weights_factorize = sizes_agree
        && nonempty.windows(2).all(|w| {
            w[0].iter().zip(w[1].iter()).all(|(a, b)| (a - b).abs() <= FACTORIZATION_TOL)
        });

    ProductCheck { support_is_product, weights_factorize }
}
