//! Problem-file schema. Every object rejects unknown fields.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Problem {
    Design(DesignProblem),
    Game(GameProblem),
    Dag(DagProblem),
    Sem(SemProblem),
    Balance(BalanceProblem),
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Design(_) => "design",
            Problem::Game(_) => "game",
            Problem::Dag(_) => "dag",
            Problem::Sem(_) => "sem",
            Problem::Balance(_) => "balance",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignProblem {
    /// Exponent tuples of the fitted basis `f(x)`.
    pub causal_basis: Vec<Vec<u32>>,
    /// Exponent tuples of the omitted basis `g(z)`.
    pub bias_basis: Vec<Vec<u32>>,
    pub psi: Vec<f64>,
    #[serde(default)]
    pub support: Option<Vec<SupportPoint>>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub weight: f64,
}

/// The α/β four-point family; `points` defaults to the standard square.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub points: Option<[[f64; 2]; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameProblem {
    #[serde(default = "one")]
    pub psi: f64,
    #[serde(default)]
    pub points: Option<[[f64; 2]; 4]>,
    #[serde(default)]
    pub starts: Option<Vec<[f64; 2]>>,
    /// Explicit loss matrix: rows are the randomizer's actions.
    #[serde(default)]
    pub payoff: Option<Vec<Vec<f64>>>,
    /// Assignment game whose losses are `hᵀ Q2(a) h`.
    #[serde(default)]
    pub minimax: Option<AssignmentGame>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentGame {
    pub causal_basis: Vec<Vec<u32>>,
    /// Each assignment lists one x-point per run.
    pub assignments: Vec<Vec<Vec<f64>>>,
    pub dictionary: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DagProblem {
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
    #[serde(default)]
    pub cause: Option<String>,
    #[serde(default)]
    pub effect: Option<String>,
    #[serde(default)]
    pub set: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemProblem {
    pub nodes: Vec<String>,
    pub edges: Vec<SemEdge>,
    #[serde(default)]
    pub intercepts: BTreeMap<String, f64>,
    #[serde(default)]
    pub noise_sd: BTreeMap<String, f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub intervention: BTreeMap<String, f64>,
    #[serde(default)]
    pub fit: Option<FitSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemEdge {
    pub from: String,
    pub to: String,
    pub coef: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub response: String,
    pub regressors: Vec<String>,
    #[serde(default = "yes")]
    pub intercept: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceProblem {
    #[serde(default = "one")]
    pub psi: f64,
    #[serde(default)]
    pub group1: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub group2: Option<Vec<Vec<f64>>>,
    /// CSV of units, resolved relative to the problem file.
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub strata: Option<Vec<Stratum>>,
    #[serde(default)]
    pub covariance: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stratum {
    pub group1: Vec<Vec<f64>>,
    pub group2: Vec<Vec<f64>>,
    pub weight: f64,
}

pub fn parse(bytes: &[u8], path: &Path) -> Result<Problem, CliError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))?;
    serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("{}: schema error: {e}", path.display())))
}

/// Unit groups from a CSV with a header row whose last column is the group
/// label (1 or 2).
pub fn groups_from_csv(bytes: &[u8], path: &Path) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let width = reader.headers().map_err(|e| bad(e.to_string()))?.len();
    if width < 2 {
        return Err(bad("need at least one covariate column and a group column".into()));
    }
    let (mut g1, mut g2) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let values = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", line + 2)))?;
        let (label, z) = values.split_last().expect("row width checked by the reader");
        match *label {
            l if l == 1.0 => g1.push(z.to_vec()),
            l if l == 2.0 => g2.push(z.to_vec()),
            l => return Err(bad(format!("row {}: group label {l} is not 1 or 2", line + 2))),
        }
    }
    Ok((g1, g2))
}

/// Numeric matrix from a headerless CSV.
pub fn matrix_from_csv(bytes: &[u8], path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| bad(e.to_string()))?;
            r.iter().map(|f| f.trim().parse::<f64>().map_err(|e| bad(e.to_string()))).collect()
        })
        .collect()
}
