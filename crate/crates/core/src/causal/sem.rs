use std::collections::BTreeMap;
use std::io::{self, Write};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::Dag;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Relative pivot tolerance for the OLS normal equations.
const GRAM_TOL: f64 = 1e-10;

/// Linear Gaussian structural equations on a DAG:
/// `X_v = intercept_v + Σ_{p→v} coef_{p,v} X_p + sd_v ε_v` with standard
/// normal `ε_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSem {
    dag: Dag,
    coefficients: Vec<f64>,
    intercepts: Vec<f64>,
    noise_sd: Vec<f64>,
}

impl LinearSem {
    /// `coefficients` follow the DAG's edge order; `intercepts` and
    /// `noise_sd` follow its node order.
    pub fn new(
        dag: Dag,
        coefficients: Vec<f64>,
        intercepts: Vec<f64>,
        noise_sd: Vec<f64>,
    ) -> Result<Self> {
        if coefficients.len() != dag.edges().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} edges",
                coefficients.len(),
                dag.edges().len()
            )));
        }
        if intercepts.len() != dag.len() || noise_sd.len() != dag.len() {
            return Err(Error::DimensionMismatch(
                "intercepts and noise scales need one entry per node".into(),
            ));
        }
        if coefficients.iter().chain(&intercepts).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SEM parameter".into()));
        }
        if let Some(sd) = noise_sd.iter().find(|s| !s.is_finite() || **s <= 0.0) {
            return Err(Error::ParameterOutOfRange(format!("noise scale {sd} must be positive")));
        }
        Ok(Self { dag, coefficients, intercepts, noise_sd })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn noise_sd(&self) -> &[f64] {
        &self.noise_sd
    }
}

/// Nodes forced to constants, severing their structural equations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Intervention {
    pub assignments: BTreeMap<String, f64>,
}

impl Intervention {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, node: &str, value: f64) -> Self {
        self.assignments.insert(node.to_string(), value);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Standard normal deviates by the Marsaglia polar method on top of ChaCha8.
///
/// Uniforms on (−1, 1) are built from the top 53 bits of each `next_u64`
/// draw. Deviates come in pairs; the second is cached.
pub struct NormalSampler {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    fn uniform_pm1(&mut self) -> f64 {
        let unit = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * unit - 1.0
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = self.uniform_pm1();
            let v = self.uniform_pm1();
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }
}

/// Column-major table of simulated node values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub labels: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, label: &str) -> Result<&[f64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    pub fn mean(&self, label: &str) -> Result<f64> {
        let col = self.column(label)?;
        Ok(col.iter().sum::<f64>() / col.len() as f64)
    }

    /// Sample standard deviation (n − 1 denominator).
    pub fn std_dev(&self, label: &str) -> Result<f64> {
        let col = self.column(label)?;
        let n = col.len();
        if n < 2 {
            return Ok(0.0);
        }
        let mean = col.iter().sum::<f64>() / n as f64;
        Ok((col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt())
    }

    /// CSV with a header row of labels; values in shortest round-trip form,
    /// LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.labels.join(","))?;
        let mut line = String::new();
        for r in 0..self.n_rows() {
            line.clear();
            for (c, col) in self.columns.iter().enumerate() {
                if c > 0 {
                    line.push(',');
                }
                line.push_str(&col[r].to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Draws `n` rows from the SEM. Every node consumes one normal deviate per
/// row, intervened or not, so non-intervened nodes see the same noise stream
/// under any intervention with the same seed.
pub fn simulate(
    sem: &LinearSem,
    n: usize,
    seed: u64,
    intervention: Option<&Intervention>,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InsufficientData("run count must be at least 1".into()));
    }
    let dag = sem.dag();
    let mut fixed: Vec<Option<f64>> = vec![None; dag.len()];
    if let Some(iv) = intervention {
        for (label, &value) in &iv.assignments {
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("intervention value for `{label}`")));
            }
            fixed[dag.index_of(label)?] = Some(value);
        }
    }
    // incoming (parent, coefficient) per node
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dag.len()];
    for (&(p, c), &coef) in dag.edges().iter().zip(sem.coefficients()) {
        incoming[c].push((p, coef));
    }

    let mut sampler = NormalSampler::new(seed);
    let mut columns = vec![Vec::with_capacity(n); dag.len()];
    let mut row = vec![0.0; dag.len()];
    for _ in 0..n {
        for &v in dag.topological_order() {
            let noise = sampler.next_normal();
            row[v] = match fixed[v] {
                Some(value) => value,
                None => {
                    sem.intercepts()[v]
                        + incoming[v].iter().map(|&(p, coef)| coef * row[p]).sum::<f64>()
                        + sem.noise_sd()[v] * noise
                }
            };
        }
        for (col, &v) in columns.iter_mut().zip(&row) {
            col.push(v);
        }
    }
    Ok(Dataset { labels: dag.labels().to_vec(), columns })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Term names; `"(intercept)"` first when fitted.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub residual_variance: f64,
    pub n: usize,
}

impl OlsFit {
    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms.iter().position(|t| t == term).map(|i| self.coefficients[i])
    }

    pub fn standard_error(&self, term: &str) -> Option<f64> {
        self.terms.iter().position(|t| t == term).map(|i| self.standard_errors[i])
    }
}

pub const INTERCEPT_TERM: &str = "(intercept)";

/// Least squares through the normal equations `(XᵀX)⁻¹ Xᵀy`. Standard errors
/// use the residual variance with `n − k` degrees of freedom.
pub fn ols_fit<S: AsRef<str>>(
    data: &Dataset,
    response: &str,
    regressors: &[S],
    with_intercept: bool,
) -> Result<OlsFit> {
    let y = data.column(response)?;
    let xs: Vec<&[f64]> =
        regressors.iter().map(|r| data.column(r.as_ref())).collect::<Result<_>>()?;
    let k = xs.len() + usize::from(with_intercept);
    let n = y.len();
    if k == 0 {
        return Err(Error::InsufficientData("no regressors".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!("{n} rows for {k} coefficients")));
    }
    let design_row = |i: usize, out: &mut Vec<f64>| {
        out.clear();
        if with_intercept {
            out.push(1.0);
        }
        out.extend(xs.iter().map(|c| c[i]));
    };

    let mut gram = Matrix::zeros(k, k);
    let mut xty = vec![0.0; k];
    let mut row = Vec::with_capacity(k);
    for i in 0..n {
        design_row(i, &mut row);
        for a in 0..k {
            xty[a] += row[a] * y[i];
            for b in 0..k {
                gram[(a, b)] += row[a] * row[b];
            }
        }
    }
    let inv = gram.invert_with_tolerance(GRAM_TOL)?;
    let coefficients = inv.mul_vec(&xty)?;

    let mut rss = 0.0;
    for i in 0..n {
        design_row(i, &mut row);
        let fitted: f64 = row.iter().zip(&coefficients).map(|(a, b)| a * b).sum();
        rss += (y[i] - fitted).powi(2);
    }
    let residual_variance = rss / (n - k) as f64;
    let standard_errors = (0..k).map(|j| (residual_variance * inv[(j, j)]).sqrt()).collect();

    let mut terms = Vec::with_capacity(k);
    if with_intercept {
        terms.push(INTERCEPT_TERM.to_string());
    }
    terms.extend(regressors.iter().map(|r| r.as_ref().to_string()));
    Ok(OlsFit { terms, coefficients, standard_errors, residual_variance, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_sem(theta: f64) -> LinearSem {
        let dag =
            Dag::new(&["X1", "X2", "X3", "X4"], &[("X1", "X2"), ("X2", "X3"), ("X3", "X4")])
                .unwrap();
        LinearSem::new(dag, vec![theta; 3], vec![theta, 0.0, 0.0, 0.0], vec![1.0; 4]).unwrap()
    }

    #[test]
    fn sem_validation() {
        let dag = Dag::new(&["A", "B"], &[("A", "B")]).unwrap();
        assert!(LinearSem::new(dag.clone(), vec![], vec![0.0; 2], vec![1.0; 2]).is_err());
        assert!(LinearSem::new(dag.clone(), vec![1.0], vec![0.0; 2], vec![1.0, 0.0]).is_err());
        assert!(LinearSem::new(dag, vec![1.0], vec![0.0; 1], vec![1.0; 2]).is_err());
    }

    #[test]
    fn same_seed_same_data() {
        let sem = chain_sem(1.0);
        let a = simulate(&sem, 500, 42, None).unwrap();
        let b = simulate(&sem, 500, 42, None).unwrap();
        assert_eq!(a, b);
        let c = simulate(&sem, 500, 43, None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn intervention_fixes_node_and_keeps_upstream() {
        let sem = chain_sem(1.0);
        let iv = Intervention::new().set("X3", 2.0);
        let passive = simulate(&sem, 200, 9, None).unwrap();
        let forced = simulate(&sem, 200, 9, Some(&iv)).unwrap();
        assert!(forced.column("X3").unwrap().iter().all(|&v| v == 2.0));
        assert_eq!(passive.column("X1").unwrap(), forced.column("X1").unwrap());
        assert_eq!(passive.column("X2").unwrap(), forced.column("X2").unwrap());
    }

    #[test]
    fn unknown_intervention_node() {
        let iv = Intervention::new().set("Q", 1.0);
        assert_eq!(simulate(&chain_sem(1.0), 10, 1, Some(&iv)), Err(Error::UnknownNode("Q".into())));
        assert!(simulate(&chain_sem(1.0), 0, 1, None).is_err());
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5 - 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let data = Dataset { labels: vec!["x".into(), "y".into()], columns: vec![x, y] };
        let fit = ols_fit(&data, "y", &["x"], false).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-10);
        let fit = ols_fit(&data, "y", &["x"], true).unwrap();
        assert!(fit.coefficient("(intercept)").unwrap().abs() < 1e-10);
        assert!((fit.coefficient("x").unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn ols_errors() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let data = Dataset {
            labels: vec!["x".into(), "x2".into(), "y".into()],
            columns: vec![x.clone(), x.iter().map(|v| 2.0 * v).collect(), x.clone()],
        };
        assert_eq!(ols_fit(&data, "y", &["x", "x2"], true), Err(Error::SingularMatrix));
        assert!(matches!(ols_fit(&data, "y", &["x", "x2", "y", "x"], true), Err(Error::InsufficientData(_))));
        assert!(matches!(ols_fit(&data, "y", &["nope"], true), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn polar_deviates_have_unit_moments() {
        let mut s = NormalSampler::new(1);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| s.next_normal()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let data = Dataset {
            labels: vec!["a".into(), "b".into()],
            columns: vec![vec![1.0, 2.5], vec![-0.125, 3.0]],
        };
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,-0.125\n2.5,3\n");
    }
}
