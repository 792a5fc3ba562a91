use std::fs;
use std::path::{Path, PathBuf};

use bias_design::balance::{
    mahalanobis_pairing, stratified_difference, two_group_bias, two_group_moment, TwoGroupData,
};
use bias_design::causal::{
    backdoor_admissible, descendants, minimal_backdoor_sets, ols_fit, simulate, Dag, Intervention,
    LinearSem,
};
use bias_design::criteria::{a_criterion, bias_mse, d_criterion, q1_criterion};
use bias_design::design::{
    is_product_design, moment_matrix, AlphaBetaFamily, DesignMeasure, DesignPoint, MonomialBasis,
};
use bias_design::game::{
    assignment_payoff, default_starts, joint_optimum, literal_minimax, nash_solve,
    randomization_minimax,
};
use bias_design::{Error as CoreError, Matrix};
use serde_json::Value;

use crate::error::CliError;
use crate::problem::{self, BalanceProblem, DagProblem, DesignProblem, GameProblem, Problem, SemProblem};
use crate::report::{digest, object, real, real_rows, reals, Report};

/// A finished command: the report, plus the error to exit with when the
/// result is only partial.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn complete(report: Report) -> Self {
        Self { report, failure: None }
    }
}

pub struct Input {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Input {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), bytes })
    }

    fn digest(&self) -> String {
        digest(&self.bytes)
    }

    fn problem(&self) -> Result<Problem, CliError> {
        problem::parse(&self.bytes, &self.path)
    }

    fn is_csv(&self) -> bool {
        self.path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    }
}

fn wrong_kind(command: &str, expected: &str, got: &Problem) -> CliError {
    CliError::Input(format!(
        "`{command}` needs a `{expected}` problem, got `{}`",
        got.kind()
    ))
}

fn strs(v: &[String]) -> Value {
    Value::Array(v.iter().map(|s| Value::String(s.clone())).collect())
}

fn matrix_value(m: &Matrix) -> Value {
    real_rows(&m.to_rows())
}

fn family_from(points: Option<[[f64; 2]; 4]>) -> Result<AlphaBetaFamily, CliError> {
    Ok(match points {
        Some(p) => AlphaBetaFamily::new(p.map(|[x, z]| (x, z)))?,
        None => AlphaBetaFamily::default(),
    })
}

// ---------------------------------------------------------------------------
// criteria

pub fn criteria(input: &Input, psi_override: Option<f64>) -> Result<Outcome, CliError> {
    let problem = match input.problem()? {
        Problem::Design(d) => d,
        other => return Err(wrong_kind("criteria", "design", &other)),
    };
    let DesignProblem { causal_basis, bias_basis, mut psi, support, family } = problem;
    let f = MonomialBasis::new(causal_basis)?;
    let g = MonomialBasis::new(bias_basis)?;
    if let Some(p) = psi_override {
        psi.iter_mut().for_each(|v| *v = p);
    }

    let (measure, family_params) = match (support, family) {
        (Some(points), None) => {
            let (pts, w): (Vec<DesignPoint>, Vec<f64>) =
                points.into_iter().map(|p| (DesignPoint::new(p.x, p.z), p.weight)).unzip();
            (DesignMeasure::new(pts, w)?, Value::Null)
        }
        (None, Some(fam)) => {
            let family = family_from(fam.points)?;
            let measure = family.measure(fam.alpha, fam.beta)?;
            (measure, object([("alpha", real(fam.alpha)), ("beta", real(fam.beta))]))
        }
        _ => {
            return Err(CliError::Input(
                "design problem needs exactly one of `support` or `family`".into(),
            ))
        }
    };

    let moment = moment_matrix(&measure, &f, &g)?;
    let mse = bias_mse(&moment, &psi)?;
    let d = d_criterion(&moment, &psi)?;
    let q1 = q1_criterion(&moment)?;
    let product = is_product_design(&measure);

    let results = object([
        ("a_criterion", real(a_criterion(&mse))),
        (
            "d_criterion",
            object([
                ("bias_factor", real(d.bias_factor)),
                ("direct", real(d.direct)),
                ("value", real(d.value)),
            ]),
        ),
        ("family", family_params),
        (
            "moment",
            object([
                ("m11", matrix_value(&moment.m11)),
                ("m12", matrix_value(&moment.m12)),
                ("m22", matrix_value(&moment.m22)),
            ]),
        ),
        (
            "product_design",
            object([
                ("is_product", Value::Bool(product.is_product())),
                ("support_is_product", Value::Bool(product.support_is_product)),
                ("weights_factorize", Value::Bool(product.weights_factorize)),
            ]),
        ),
        ("psi", reals(&psi)),
        ("q1_criterion", real(q1)),
        ("trace_s1", real(mse.trace_s1)),
        ("trace_s2", real(mse.trace_s2)),
        ("weights", reals(measure.weights())),
    ]);
    let diagnostics = object([(
        "determinant_gap",
        real((d.value - d.direct).abs() / d.direct.abs().max(f64::MIN_POSITIVE)),
    )]);
    Ok(Outcome::complete(Report {
        command: "criteria",
        input_digest: input.digest(),
        results,
        diagnostics,
    }))
}

// ---------------------------------------------------------------------------
// nash

fn game_problem(input: &Input, command: &str) -> Result<GameProblem, CliError> {
    match input.problem()? {
        Problem::Game(g) => Ok(g),
        other => Err(wrong_kind(command, "game", &other)),
    }
}

pub fn nash(
    input: &Input,
    psi_override: Option<f64>,
    starts_override: Option<Vec<(f64, f64)>>,
) -> Result<Outcome, CliError> {
    let game = game_problem(input, "nash")?;
    let family = family_from(game.points)?;
    let psi = psi_override.unwrap_or(game.psi);
    let starts = match (starts_override, game.starts) {
        (Some(s), _) => s,
        (None, Some(s)) => s.into_iter().map(|[a, b]| (a, b)).collect(),
        (None, None) => default_starts(),
    };

    let report = nash_solve(&family, psi, &starts)?;
    let joint = joint_optimum(&family, psi);

    let equilibria: Vec<Value> = report
        .points
        .iter()
        .map(|p| {
            object([
                ("a_criterion", real(p.trace_s1 + p.trace_s2)),
                ("alice_global_best", Value::Bool(p.alice_global_best)),
                ("alpha", real(p.alpha)),
                ("beta", real(p.beta)),
                ("bob_global_best", Value::Bool(p.bob_global_best)),
                ("classification", Value::String(p.classification.as_str().into())),
                ("fd_gradient", reals(&[p.fd_gradient.0, p.fd_gradient.1])),
                ("second_derivatives", reals(&[p.second_derivatives.0, p.second_derivatives.1])),
                ("starts", Value::Array(p.starts.iter().map(|&i| Value::from(i)).collect())),
                ("trace_s1", real(p.trace_s1)),
                ("trace_s2", real(p.trace_s2)),
            ])
        })
        .collect();

    let mut comparison: Vec<Value> = report
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            object([
                ("alpha", real(p.alpha)),
                ("beta", real(p.beta)),
                ("label", Value::String(format!("equilibrium {} ({})", i + 1, p.classification.as_str()))),
                ("total", real(p.trace_s1 + p.trace_s2)),
                ("trace_s1", real(p.trace_s1)),
                ("trace_s2", real(p.trace_s2)),
            ])
        })
        .collect();
    let (joint_s1, joint_s2) = bias_mse(&family.moment(joint.alpha, joint.beta)?, &[psi])
        .map(|m| (m.trace_s1, m.trace_s2))?;
    comparison.push(object([
        ("alpha", real(joint.alpha)),
        ("beta", real(joint.beta)),
        ("label", Value::String("joint optimum".into())),
        ("total", real(joint.value)),
        ("trace_s1", real(joint_s1)),
        ("trace_s2", real(joint_s2)),
    ]));

    let failed = report.failed_starts();
    let results = object([
        ("comparison", Value::Array(comparison)),
        ("equilibria", Value::Array(equilibria)),
        (
            "joint_optimum",
            object([
                ("alpha", real(joint.alpha)),
                ("beta", real(joint.beta)),
                ("value", real(joint.value)),
            ]),
        ),
        ("partial", Value::Bool(!failed.is_empty())),
        ("psi", real(psi)),
    ]);
    let diagnostics = object([(
        "starts",
        Value::Array(
            report
                .starts
                .iter()
                .map(|s| {
                    object([
                        ("converged", Value::Bool(s.converged)),
                        ("end", reals(&[s.end.0, s.end.1])),
                        ("iterations", Value::from(s.iterations)),
                        ("residual", real(s.residual)),
                        ("start", reals(&[s.start.0, s.start.1])),
                    ])
                })
                .collect(),
        ),
    )]);
    Ok(Outcome {
        report: Report { command: "nash", input_digest: input.digest(), results, diagnostics },
        failure: report.check_converged().err().map(CliError::from),
    })
}

// ---------------------------------------------------------------------------
// minimax

pub fn minimax(input: &Input) -> Result<Outcome, CliError> {
    let game = game_problem(input, "minimax")?;
    let payoff = match (game.payoff, game.minimax) {
        (Some(p), None) => p,
        (None, Some(a)) => {
            let f = MonomialBasis::new(a.causal_basis)?;
            assignment_payoff(&a.assignments, &f, &a.dictionary)?
        }
        _ => {
            return Err(CliError::Input(
                "minimax needs exactly one of `payoff` or `minimax` in the game problem".into(),
            ))
        }
    };
    let sol = randomization_minimax(&payoff)?;
    let literal = literal_minimax(&payoff)?;

    let results = object([
        ("adversary", reals(&sol.adversary.probabilities)),
        ("converged", Value::Bool(sol.converged)),
        ("duality_gap", real(sol.duality_gap)),
        (
            "literal",
            object([
                ("row", Value::from(literal.strategy.atoms[0])),
                ("value", real(literal.value)),
            ]),
        ),
        ("payoff", real_rows(&payoff)),
        ("strategy", reals(&sol.strategy.probabilities)),
        ("upper", real(sol.upper)),
        ("value", real(sol.value)),
    ]);
    let diagnostics = object([("iterations", Value::from(sol.iterations))]);
    let failure = (!sol.converged).then(|| {
        CliError::NotConverged(format!(
            "duality gap {:e} above tolerance after {} iterations",
            sol.duality_gap, sol.iterations
        ))
    });
    Ok(Outcome {
        report: Report { command: "minimax", input_digest: input.digest(), results, diagnostics },
        failure,
    })
}

// ---------------------------------------------------------------------------
// backdoor

fn build_dag(nodes: &[String], edges: &[[String; 2]]) -> Result<Dag, CliError> {
    let pairs: Vec<(String, String)> = edges.iter().map(|[a, b]| (a.clone(), b.clone())).collect();
    Ok(Dag::new(nodes, &pairs)?)
}

pub fn backdoor(
    input: &Input,
    cause: Option<String>,
    effect: Option<String>,
    set: Option<Vec<String>>,
) -> Result<Outcome, CliError> {
    let DagProblem { nodes, edges, cause: file_cause, effect: file_effect, set: file_set } =
        match input.problem()? {
            Problem::Dag(d) => d,
            other => return Err(wrong_kind("backdoor", "dag", &other)),
        };
    let dag = build_dag(&nodes, &edges)?;
    let missing = |what: &str| CliError::Input(format!("no {what} given in the file or on the command line"));
    let cause = cause.or(file_cause).ok_or_else(|| missing("cause"))?;
    let effect = effect.or(file_effect).ok_or_else(|| missing("effect"))?;
    let set = set.or(file_set);

    let desc = descendants(&dag, &cause)?;
    let mut fields = vec![
        ("cause", Value::String(cause.clone())),
        ("effect", Value::String(effect.clone())),
        ("descendants_of_cause", strs(&desc)),
    ];
    match &set {
        Some(s) => {
            let v = backdoor_admissible(&dag, &cause, &effect, s)?;
            fields.push((
                "verdict",
                object([
                    ("admissible", Value::Bool(v.admissible())),
                    ("blocks_backdoor_paths", Value::Bool(v.blocks_backdoor_paths)),
                    ("no_descendants", Value::Bool(v.no_descendants)),
                    ("offending_descendants", strs(&v.offending_descendants)),
                    ("set", strs(s)),
                ]),
            ));
        }
        None => {
            let sets = minimal_backdoor_sets(&dag, &cause, &effect)?;
            fields.push(("minimal_sets", Value::Array(sets.iter().map(|s| strs(s)).collect())));
        }
    }
    let results = Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect());
    let diagnostics = object([
        ("edges", Value::from(dag.edges().len())),
        ("nodes", Value::from(dag.len())),
    ]);
    Ok(Outcome::complete(Report {
        command: "backdoor",
        input_digest: input.digest(),
        results,
        diagnostics,
    }))
}

// ---------------------------------------------------------------------------
// simulate

pub struct SimulateArgs {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub interventions: Vec<(String, f64)>,
    pub fit: Option<Vec<String>>,
    pub csv_out: Option<PathBuf>,
}

const DEFAULT_RUNS: usize = 1000;

pub fn simulate_cmd(input: &Input, args: SimulateArgs) -> Result<Outcome, CliError> {
    let SemProblem { nodes, edges, intercepts, noise_sd, n, seed, intervention, fit } =
        match input.problem()? {
            Problem::Sem(s) => s,
            other => return Err(wrong_kind("simulate", "sem", &other)),
        };
    let pairs: Vec<[String; 2]> = edges.iter().map(|e| [e.from.clone(), e.to.clone()]).collect();
    let dag = build_dag(&nodes, &pairs)?;
    let per_node = |map: &std::collections::BTreeMap<String, f64>, default: f64| {
        for key in map.keys() {
            dag.index_of(key)?;
        }
        Ok::<_, CoreError>(
            dag.labels().iter().map(|l| map.get(l).copied().unwrap_or(default)).collect::<Vec<_>>(),
        )
    };
    let sem = LinearSem::new(
        dag.clone(),
        edges.iter().map(|e| e.coef).collect(),
        per_node(&intercepts, 0.0)?,
        per_node(&noise_sd, 1.0)?,
    )?;

    let n = args.n.or(n).unwrap_or(DEFAULT_RUNS);
    let seed = args.seed.or(seed).unwrap_or(0);
    let mut iv = Intervention { assignments: intervention };
    for (node, value) in args.interventions {
        iv.assignments.insert(node, value);
    }
    let data = simulate(&sem, n, seed, (!iv.is_empty()).then_some(&iv))?;

    let mut csv = Vec::new();
    data.write_csv(&mut csv).expect("writing to memory cannot fail");
    if let Some(path) = &args.csv_out {
        fs::write(path, &csv).map_err(|e| CliError::io(path, e))?;
    }

    let mut means = serde_json::Map::new();
    let mut mean_se = serde_json::Map::new();
    for label in &data.labels {
        means.insert(label.clone(), real(data.mean(label)?));
        mean_se.insert(label.clone(), real(data.std_dev(label)? / (n as f64).sqrt()));
    }

    let fit_spec = match (args.fit, fit) {
        (Some(list), _) => {
            let (response, regressors) = list
                .split_first()
                .ok_or_else(|| CliError::Input("--fit needs a response".into()))?;
            Some((response.clone(), regressors.to_vec(), true))
        }
        (None, Some(f)) => Some((f.response, f.regressors, f.intercept)),
        (None, None) => None,
    };
    let fit_value = match fit_spec {
        Some((response, regressors, intercept)) => {
            let fit = ols_fit(&data, &response, &regressors, intercept)?;
            object([
                ("coefficients", reals(&fit.coefficients)),
                ("residual_variance", real(fit.residual_variance)),
                ("response", Value::String(response)),
                ("standard_errors", reals(&fit.standard_errors)),
                ("terms", strs(&fit.terms)),
            ])
        }
        None => Value::Null,
    };

    let results = object([
        ("fit", fit_value),
        (
            "intervention",
            Value::Object(iv.assignments.iter().map(|(k, v)| (k.clone(), real(*v))).collect()),
        ),
        ("mean_standard_errors", Value::Object(mean_se)),
        ("means", Value::Object(means)),
        ("n", Value::from(n)),
        ("seed", Value::from(seed)),
    ]);
    let diagnostics = object([
        ("csv_digest", Value::String(digest(&csv))),
        ("csv_written", Value::Bool(args.csv_out.is_some())),
    ]);
    Ok(Outcome::complete(Report {
        command: "simulate",
        input_digest: input.digest(),
        results,
        diagnostics,
    }))
}

// ---------------------------------------------------------------------------
// balance

pub enum Covariance {
    Identity,
    File(PathBuf),
}

pub fn balance(
    input: &Input,
    psi_override: Option<f64>,
    pair: bool,
    cov: Option<Covariance>,
) -> Result<Outcome, CliError> {
    let problem = if input.is_csv() {
        BalanceProblem {
            psi: 1.0,
            group1: None,
            group2: None,
            csv: None,
            strata: None,
            covariance: None,
        }
    } else {
        match input.problem()? {
            Problem::Balance(b) => b,
            other => return Err(wrong_kind("balance", "balance", &other)),
        }
    };
    let psi = psi_override.unwrap_or(problem.psi);

    let (g1, g2) = if input.is_csv() {
        problem::groups_from_csv(&input.bytes, &input.path)?
    } else {
        match (problem.group1, problem.group2, &problem.csv) {
            (Some(a), Some(b), None) => (a, b),
            (None, None, Some(rel)) => {
                let base = input.path.parent().unwrap_or(Path::new("."));
                let path = base.join(rel);
                let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
                problem::groups_from_csv(&bytes, &path)?
            }
            _ => {
                return Err(CliError::Input(
                    "balance problem needs `group1` and `group2`, or `csv`".into(),
                ))
            }
        }
    };
    let data = TwoGroupData::new(g1, g2, psi).map_err(|e| CliError::Input(e.to_string()))?;

    let moment = if data.dim() == 1 { matrix_value(&two_group_moment(&data)?) } else { Value::Null };

    let stratified = match problem.strata {
        Some(strata) => {
            let mut groups = Vec::with_capacity(strata.len());
            let mut weights = Vec::with_capacity(strata.len());
            for s in strata {
                groups.push(
                    TwoGroupData::new(s.group1, s.group2, psi)
                        .map_err(|e| CliError::Input(format!("stratum: {e}")))?,
                );
                weights.push(s.weight);
            }
            reals(&stratified_difference(&groups, &weights)?)
        }
        None => Value::Null,
    };

    let pairing = if pair {
        let cov = match cov {
            Some(Covariance::File(path)) => {
                let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
                Matrix::from_rows(&problem::matrix_from_csv(&bytes, &path)?)?
            }
            Some(Covariance::Identity) => Matrix::identity(data.dim()),
            None => match problem.covariance {
                Some(rows) => Matrix::from_rows(&rows)?,
                None => Matrix::identity(data.dim()),
            },
        };
        let p = mahalanobis_pairing(data.group1(), data.group2(), &cov)?;
        object([
            (
                "pairs",
                Value::Array(
                    p.pairs.iter().map(|&(t, c)| Value::Array(vec![t.into(), c.into()])).collect(),
                ),
            ),
            ("total_distance", real(p.total_distance)),
        ])
    } else {
        Value::Null
    };

    let results = object([
        ("group_size", Value::from(data.group_size())),
        ("mean1", reals(&data.mean1())),
        ("mean2", reals(&data.mean2())),
        ("mean_difference", reals(&data.mean_difference())),
        ("moment", moment),
        ("pairing", pairing),
        ("psi", real(psi)),
        ("stratified_difference", stratified),
        ("two_group_bias", real(two_group_bias(&data))),
    ]);
    let diagnostics = object([("covariate_dimension", Value::from(data.dim()))]);
    Ok(Outcome::complete(Report {
        command: "balance",
        input_digest: input.digest(),
        results,
        diagnostics,
    }))
}
