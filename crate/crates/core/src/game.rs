//! The two-player design game on the α/β four-point family.
//!
//! Alice picks α to minimize `trace(S1)`; Bob picks β to minimize
//! `trace(S2) = ψ² M21 M11⁻² M12`. Equilibria are located as roots of the
//! stationarity system `(∂trace(S1)/∂α, ∂trace(S2)/∂β) = 0` and then
//! classified by each player's own second-order condition. A zero-sum
//! randomization game over a finite set of assignments is solved separately
//! by optimistic multiplicative weights.

use crate::criteria::{bias_mse, BiasMse};
use crate::design::{AlphaBetaFamily, PartitionedMoment};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const GRID_POINTS: usize = 401;
const GOLDEN_WIDTH: f64 = 1e-10;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

const NASH_MAX_ITER: usize = 1000;
const NASH_STEP_TOL: f64 = 1e-9;
const NASH_RESIDUAL_TOL: f64 = 1e-10;
const NASH_DEDUP_TOL: f64 = 1e-6;
const JACOBIAN_STEP: f64 = 1e-7;
const EDGE_TOL: f64 = 1e-12;

/// Step used for the central-difference gradient check on reported points.
pub const FD_GRADIENT_STEP: f64 = 1e-5;
/// Step used for the second-difference classification.
pub const SECOND_DIFF_STEP: f64 = 1e-4;
/// Minimum second derivative for a strict local minimum.
pub const STRICT_MIN_TOL: f64 = 1e-8;

const JOINT_GRID: usize = 201;
const JOINT_TOL: f64 = 1e-8;

/// Duality gap at which the randomization game is considered solved.
pub const MINIMAX_GAP_TOL: f64 = 1e-6;
pub const MINIMAX_MAX_ITER: usize = 1_000_000;
const POLISH_EVERY: usize = 500;

// ---------------------------------------------------------------------------
// Player objectives

/// Alice's cost `trace(M11⁻¹)`; +∞ where M11 is singular.
pub fn trace_s1(family: &AlphaBetaFamily, alpha: f64, beta: f64) -> f64 {
    mse_at(family, alpha, beta, 1.0).map_or(f64::INFINITY, |m| m.trace_s1)
}

/// Bob's cost `ψ² M21 M11⁻² M12`; +∞ where M11 is singular.
pub fn trace_s2(family: &AlphaBetaFamily, alpha: f64, beta: f64, psi: f64) -> f64 {
    mse_at(family, alpha, beta, psi).map_or(f64::INFINITY, |m| m.trace_s2)
}

fn mse_at(family: &AlphaBetaFamily, alpha: f64, beta: f64, psi: f64) -> Result<BiasMse> {
    bias_mse(&family.moment(alpha, beta)?, &[psi])
}

fn moment_derivatives(
    family: &AlphaBetaFamily,
    alpha: f64,
    beta: f64,
) -> Result<(PartitionedMoment, PartitionedMoment)> {
    let (f, g) = AlphaBetaFamily::bases();
    let (da, db) = AlphaBetaFamily::weight_gradients(alpha, beta);
    let support = family.support();
    Ok((
        crate::design::weighted_moment(&support, &da, &f, &g)?,
        crate::design::weighted_moment(&support, &db, &f, &g)?,
    ))
}

/// Analytic `(∂trace(S1)/∂α, ∂trace(S2)/∂β)`.
///
/// With `u = M11⁻¹ M12 ψ`: `∂trace(M11⁻¹) = −trace(M11⁻¹ dM11 M11⁻¹)` and
/// `∂|u|² = 2 uᵀ M11⁻¹ (dM12 ψ − dM11 u)`.
pub fn stationarity_residual(
    family: &AlphaBetaFamily,
    alpha: f64,
    beta: f64,
    psi: f64,
) -> Result<(f64, f64)> {
    let moment = family.moment(alpha, beta)?;
    let inv = moment.m11.invert()?;
    let (d_alpha, d_beta) = moment_derivatives(family, alpha, beta)?;

    let g_alpha = -(&(&inv * &d_alpha.m11) * &inv).trace();

    let u = inv.mul_vec(&moment.m12.mul_vec(&[psi])?)?;
    let dm12 = d_beta.m12.mul_vec(&[psi])?;
    let dm11_u = d_beta.m11.mul_vec(&u)?;
    let rhs: Vec<f64> = dm12.iter().zip(&dm11_u).map(|(a, b)| a - b).collect();
    let du = inv.mul_vec(&rhs)?;
    let g_beta = 2.0 * u.iter().zip(&du).map(|(a, b)| a * b).sum::<f64>();
    Ok((g_alpha, g_beta))
}

// ---------------------------------------------------------------------------
// One-dimensional searches

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Picks the better of two candidates, preferring the smaller abscissa on a
/// tie.
fn better(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    if fb < fa || (fb == fa && b < a) {
        b
    } else {
        a
    }
}

/// Global minimizer on [0, 1]: grid scan, then golden-section refinement in
/// the neighbouring grid cells. `None` when every grid value is infinite.
fn grid_golden_minimize(f: impl Fn(f64) -> f64) -> Option<f64> {
    let step = 1.0 / (GRID_POINTS - 1) as f64;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..GRID_POINTS {
        let v = f(i as f64 * step);
        if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    let (i, _) = best?;
    let lo = i.saturating_sub(1) as f64 * step;
    let hi = ((i + 1).min(GRID_POINTS - 1)) as f64 * step;
    let refined = golden_section(&f, lo, hi, GOLDEN_WIDTH);
    Some(better(&f, i as f64 * step, refined))
}

/// Local minimizer on [0, 1] reached by walking downhill from `from`.
fn local_minimize(f: impl Fn(f64) -> f64, from: f64) -> f64 {
    let from = from.clamp(0.0, 1.0);
    let f0 = f(from);
    let mut step = 1e-3;
    let dir = if f((from + step).min(1.0)) < f0 {
        1.0
    } else if f((from - step).max(0.0)) < f0 {
        -1.0
    } else {
        return golden_section(&f, (from - step).max(0.0), (from + step).min(1.0), GOLDEN_WIDTH);
    };
    let mut prev = from;
    let mut cur = (from + dir * step).clamp(0.0, 1.0);
    let mut f_cur = f(cur);
    loop {
        step *= 2.0;
        let next = (cur + dir * step).clamp(0.0, 1.0);
        let f_next = f(next);
        if f_next >= f_cur || next == cur {
            let (lo, hi) = if dir > 0.0 { (prev, next) } else { (next, prev) };
            return golden_section(&f, lo, hi, GOLDEN_WIDTH);
        }
        prev = cur;
        cur = next;
        f_cur = f_next;
    }
}

fn check_unit(v: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::ParameterOutOfRange(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

/// Alice's global best response: `argmin_α trace(S1(α, β))` on [0, 1].
pub fn best_response_alice(beta: f64, family: &AlphaBetaFamily) -> Result<f64> {
    check_unit(beta, "beta")?;
    grid_golden_minimize(|a| trace_s1(family, a, beta)).ok_or(Error::SingularMatrix)
}

/// Bob's global best response: `argmin_β trace(S2(α, β))` on [0, 1].
///
/// `ψ` only rescales the objective by ψ², so the search runs on the unit-ψ
/// objective and the argmin is bit-identical for every ψ ≠ 0.
pub fn best_response_bob(alpha: f64, family: &AlphaBetaFamily, psi: f64) -> Result<f64> {
    check_unit(alpha, "alpha")?;
    check_psi(psi)?;
    grid_golden_minimize(|b| trace_s2(family, alpha, b, 1.0)).ok_or(Error::SingularMatrix)
}

/// Bob's best response within the basin of attraction of `from`.
pub fn local_best_response_bob(
    alpha: f64,
    family: &AlphaBetaFamily,
    psi: f64,
    from: f64,
) -> Result<f64> {
    check_unit(alpha, "alpha")?;
    check_unit(from, "from")?;
    check_psi(psi)?;
    Ok(local_minimize(|b| trace_s2(family, alpha, b, 1.0), from))
}

/// Alice's best response within the basin of attraction of `from`.
pub fn local_best_response_alice(beta: f64, family: &AlphaBetaFamily, from: f64) -> Result<f64> {
    check_unit(beta, "beta")?;
    check_unit(from, "from")?;
    Ok(local_minimize(|a| trace_s1(family, a, beta), from))
}

fn check_psi(psi: f64) -> Result<()> {
    if !psi.is_finite() || psi == 0.0 {
        return Err(Error::ParameterOutOfRange(format!("psi = {psi} must be finite and non-zero")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Equilibria

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Each coordinate is a strict local minimum of its player's cost.
    Nash,
    /// Stationary, but some player's second difference is not positive.
    StationaryOnly,
    /// On the edge of the unit square with the blocked derivative pointing out.
    Boundary,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Nash => "nash",
            Classification::StationaryOnly => "stationary-only",
            Classification::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    pub alpha: f64,
    pub beta: f64,
    pub classification: Classification,
    pub trace_s1: f64,
    pub trace_s2: f64,
    /// Central finite-difference `(∂trace(S1)/∂α, ∂trace(S2)/∂β)`.
    pub fd_gradient: (f64, f64),
    /// Second derivative estimates of each player's own cost.
    pub second_derivatives: (f64, f64),
    /// Whether α is also Alice's global best response to β.
    pub alice_global_best: bool,
    /// Whether β is also Bob's global best response to α.
    pub bob_global_best: bool,
    /// Indices of the starts that converged here.
    pub starts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartDiagnostics {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub iterations: usize,
    /// Scaled residual `|∂α trace(S1)| + |∂β trace(S2)| / ψ²` at the end point,
    /// with blocked boundary components removed.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// Distinct equilibria, sorted by (α, β).
    pub points: Vec<EquilibriumPoint>,
    pub starts: Vec<StartDiagnostics>,
    pub psi: f64,
}

impl EquilibriumReport {
    pub fn failed_starts(&self) -> Vec<(f64, f64)> {
        self.starts.iter().filter(|s| !s.converged).map(|s| s.start).collect()
    }

    /// `Err(NoConvergence)` listing the failed starts, if any.
    pub fn check_converged(&self) -> Result<()> {
        let failed = self.failed_starts();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::NoConvergence { failed_starts: failed })
        }
    }
}

/// The default 5×5 grid of starts at the cell centres of the unit square.
pub fn default_starts() -> Vec<(f64, f64)> {
    let levels = [0.1, 0.3, 0.5, 0.7, 0.9];
    levels.iter().flat_map(|&a| levels.iter().map(move |&b| (a, b))).collect()
}

struct NewtonOutcome {
    point: (f64, f64),
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Projected residual: components blocked at an edge (derivative pushing
/// outward) count as satisfied.
fn projected(p: (f64, f64), g: (f64, f64)) -> (f64, f64) {
    let block = |x: f64, d: f64| (x <= EDGE_TOL && d > 0.0) || (x >= 1.0 - EDGE_TOL && d < 0.0);
    (
        if block(p.0, g.0) { 0.0 } else { g.0 },
        if block(p.1, g.1) { 0.0 } else { g.1 },
    )
}

fn scaled_norm(g: (f64, f64), bob_scale: f64) -> f64 {
    g.0.abs() + g.1.abs() / bob_scale
}

fn newton_from(family: &AlphaBetaFamily, psi: f64, start: (f64, f64)) -> NewtonOutcome {
    let bob_scale = psi * psi;
    let residual_at = |p: (f64, f64)| -> Option<((f64, f64), f64)> {
        let g = stationarity_residual(family, p.0, p.1, psi).ok()?;
        if !g.0.is_finite() || !g.1.is_finite() {
            return None;
        }
        let pg = projected(p, g);
        Some((g, scaled_norm(pg, bob_scale)))
    };

    let mut p = (start.0.clamp(0.0, 1.0), start.1.clamp(0.0, 1.0));
    if residual_at(p).is_none() {
        p = (p.0.clamp(1e-6, 1.0 - 1e-6), p.1.clamp(1e-6, 1.0 - 1e-6));
    }
    let Some((mut g, mut merit)) = residual_at(p) else {
        return NewtonOutcome { point: p, iterations: 0, residual: f64::INFINITY, converged: false };
    };

    let mut last_step = f64::INFINITY;
    for iter in 0..NASH_MAX_ITER {
        if merit < NASH_RESIDUAL_TOL && last_step < NASH_STEP_TOL {
            return NewtonOutcome { point: p, iterations: iter, residual: merit, converged: true };
        }
        let directions = search_directions(family, psi, p, g);
        let mut moved = false;
        for d in directions {
            let mut lambda = 1.0;
            while lambda > 1e-10 {
                let q = (
                    (p.0 + lambda * d.0).clamp(0.0, 1.0),
                    (p.1 + lambda * d.1).clamp(0.0, 1.0),
                );
                if let Some((gq, mq)) = residual_at(q) {
                    if mq < merit || (mq == merit && mq < NASH_RESIDUAL_TOL) {
                        last_step = (q.0 - p.0).abs().max((q.1 - p.1).abs());
                        p = q;
                        g = gq;
                        merit = mq;
                        moved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if moved {
                break;
            }
        }
        if !moved {
            // No direction improves the merit: either we sit on a root to
            // machine precision or the iteration has stalled.
            return NewtonOutcome {
                point: p,
                iterations: iter,
                residual: merit,
                converged: merit < NASH_RESIDUAL_TOL,
            };
        }
    }
    NewtonOutcome {
        point: p,
        iterations: NASH_MAX_ITER,
        residual: merit,
        converged: merit < NASH_RESIDUAL_TOL && last_step < NASH_STEP_TOL,
    }
}

/// Candidate steps in order of preference: the Newton step on the free
/// coordinates, then a per-player curvature-scaled descent step.
fn search_directions(
    family: &AlphaBetaFamily,
    psi: f64,
    p: (f64, f64),
    g: (f64, f64),
) -> Vec<(f64, f64)> {
    let pg = projected(p, g);
    let free = (pg.0 != 0.0 || g.0 == 0.0, pg.1 != 0.0 || g.1 == 0.0);
    let h = JACOBIAN_STEP;
    let eval = |a: f64, b: f64| {
        stationarity_residual(family, a.clamp(0.0, 1.0), b.clamp(0.0, 1.0), psi).ok()
    };
    let mut out = Vec::new();
    let (Some(ga_p), Some(ga_m), Some(gb_p), Some(gb_m)) =
        (eval(p.0 + h, p.1), eval(p.0 - h, p.1), eval(p.0, p.1 + h), eval(p.0, p.1 - h))
    else {
        return out;
    };
    let ha = (p.0 + h).min(1.0) - (p.0 - h).max(0.0);
    let hb = (p.1 + h).min(1.0) - (p.1 - h).max(0.0);
    let j = [
        [(ga_p.0 - ga_m.0) / ha, (gb_p.0 - gb_m.0) / hb],
        [(ga_p.1 - ga_m.1) / ha, (gb_p.1 - gb_m.1) / hb],
    ];
    match free {
        (true, true) => {
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() > 1e-300 {
                out.push((
                    -(j[1][1] * g.0 - j[0][1] * g.1) / det,
                    -(-j[1][0] * g.0 + j[0][0] * g.1) / det,
                ));
            }
        }
        (true, false) if j[0][0] != 0.0 => out.push((-g.0 / j[0][0], 0.0)),
        (false, true) if j[1][1] != 0.0 => out.push((0.0, -g.1 / j[1][1])),
        _ => {}
    }
    let descend = |gi: f64, hii: f64, is_free: bool| {
        if !is_free {
            0.0
        } else {
            -gi / hii.abs().max(1e-3)
        }
    };
    out.push((descend(g.0, j[0][0], free.0), descend(g.1, j[1][1], free.1)));
    out
}

fn second_derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = SECOND_DIFF_STEP;
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = FD_GRADIENT_STEP;
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn describe_point(
    family: &AlphaBetaFamily,
    psi: f64,
    (alpha, beta): (f64, f64),
) -> EquilibriumPoint {
    let on_edge = |v: f64| v <= EDGE_TOL || v >= 1.0 - EDGE_TOL;
    let alice = |a: f64| trace_s1(family, a, beta);
    let bob = |b: f64| trace_s2(family, alpha, b, psi);
    let boundary = on_edge(alpha) || on_edge(beta);
    let (fd_gradient, second_derivatives) = if boundary {
        ((f64::NAN, f64::NAN), (f64::NAN, f64::NAN))
    } else {
        (
            (central_difference(alice, alpha), central_difference(bob, beta)),
            (second_derivative(alice, alpha), second_derivative(bob, beta)),
        )
    };
    let classification = if boundary {
        Classification::Boundary
    } else if second_derivatives.0 > STRICT_MIN_TOL
        && second_derivatives.1 > STRICT_MIN_TOL * psi * psi
    {
        Classification::Nash
    } else {
        Classification::StationaryOnly
    };
    let alice_global_best = best_response_alice(beta, family)
        .map(|a| alice(a) >= alice(alpha) - 1e-12 * alice(alpha).abs())
        .unwrap_or(false);
    let bob_global_best = best_response_bob(alpha, family, psi)
        .map(|b| bob(b) >= bob(beta) - 1e-12 * bob(beta).abs())
        .unwrap_or(false);
    EquilibriumPoint {
        alpha,
        beta,
        classification,
        trace_s1: alice(alpha),
        trace_s2: bob(beta),
        fd_gradient,
        second_derivatives,
        alice_global_best,
        bob_global_best,
        starts: Vec::new(),
    }
}

/// Locates equilibria of the design game from each start.
///
/// Each start runs a damped Newton iteration on the stationarity system until
/// the step falls below 1e-9 in sup-norm with a vanishing residual, or 1000
/// iterations pass. Converged points are deduplicated within 1e-6 and
/// classified. Non-converged starts are listed in the report; use
/// [`EquilibriumReport::check_converged`] to turn them into an error.
pub fn nash_solve(
    family: &AlphaBetaFamily,
    psi: f64,
    starts: &[(f64, f64)],
) -> Result<EquilibriumReport> {
    check_psi(psi)?;
    if starts.is_empty() {
        return Err(Error::ParameterOutOfRange("at least one start is required".into()));
    }
    for &(a, b) in starts {
        check_unit(a, "start alpha")?;
        check_unit(b, "start beta")?;
    }

    let mut diagnostics = Vec::with_capacity(starts.len());
    let mut found: Vec<((f64, f64), Vec<usize>)> = Vec::new();
    for (idx, &start) in starts.iter().enumerate() {
        let out = newton_from(family, psi, start);
        diagnostics.push(StartDiagnostics {
            start,
            end: out.point,
            iterations: out.iterations,
            residual: out.residual,
            converged: out.converged,
        });
        if !out.converged {
            continue;
        }
        let p = out.point;
        match found.iter_mut().find(|(q, _)| {
            (q.0 - p.0).abs().max((q.1 - p.1).abs()) < NASH_DEDUP_TOL
        }) {
            Some((_, idxs)) => idxs.push(idx),
            None => found.push((p, vec![idx])),
        }
    }

    let mut points: Vec<EquilibriumPoint> = found
        .into_iter()
        .map(|(p, idxs)| EquilibriumPoint { starts: idxs, ..describe_point(family, psi, p) })
        .collect();
    points.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.beta.total_cmp(&b.beta)));
    Ok(EquilibriumReport { points, starts: diagnostics, psi })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOptimum {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

/// Global minimizer of `trace(S1) + trace(S2)` over [0, 1]²: a 201×201 grid
/// scan followed by coordinate descent.
pub fn joint_optimum(family: &AlphaBetaFamily, psi: f64) -> JointOptimum {
    let cost = |a: f64, b: f64| {
        mse_at(family, a, b, psi).map_or(f64::INFINITY, |m| m.trace_s1 + m.trace_s2)
    };
    let step = 1.0 / (JOINT_GRID - 1) as f64;
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..JOINT_GRID {
        for j in 0..JOINT_GRID {
            let (a, b) = (i as f64 * step, j as f64 * step);
            let v = cost(a, b);
            if v < best.2 {
                best = (a, b, v);
            }
        }
    }
    let (mut a, mut b, _) = best;
    for _ in 0..500 {
        let a_new = golden_section(
            &|x| cost(x, b),
            (a - step).max(0.0),
            (a + step).min(1.0),
            GOLDEN_WIDTH,
        );
        let a_new = better(&|x| cost(x, b), a, a_new);
        let b_new = golden_section(
            &|y| cost(a_new, y),
            (b - step).max(0.0),
            (b + step).min(1.0),
            GOLDEN_WIDTH,
        );
        let b_new = better(&|y| cost(a_new, y), b, b_new);
        let change = (a_new - a).abs().max((b_new - b).abs());
        a = a_new;
        b = b_new;
        if change < JOINT_TOL {
            break;
        }
    }
    JointOptimum { alpha: a, beta: b, value: cost(a, b) }
}

// ---------------------------------------------------------------------------
// Randomization minimax

/// Probability distribution over a finite action set.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    pub atoms: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(atoms: Vec<usize>, probabilities: Vec<f64>) -> Result<Self> {
        if atoms.len() != probabilities.len() || atoms.is_empty() {
            return Err(Error::DimensionMismatch("atoms and probabilities differ in length".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(Error::InvalidMeasure(format!("duplicate atom {a}")));
            }
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidMeasure("negative or non-finite probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("probabilities sum to {total}")));
        }
        Ok(Self { atoms, probabilities })
    }

    pub fn point_mass(atom: usize) -> Self {
        Self { atoms: vec![atom], probabilities: vec![1.0] }
    }

    /// Dense probability vector over `n` actions.
    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&a, &p) in self.atoms.iter().zip(&self.probabilities) {
            out[a] = p;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxSolution {
    /// The minimizing randomization over rows.
    pub strategy: MixedStrategy,
    /// The adversary's mixed strategy over columns.
    pub adversary: MixedStrategy,
    /// Certified lower bound `min_a Σ_h v(a,h) y(h)` on the game value.
    pub value: f64,
    /// `max_h Σ_a P(a) v(a,h)`, the guaranteed cost of `strategy`.
    pub upper: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Literal-mode result: the expectation of a row-wise maximum is linear in
/// the randomization, so its optimum is a point mass on the best row.
#[derive(Debug, Clone, PartialEq)]
pub struct PureMinimax {
    pub strategy: MixedStrategy,
    pub value: f64,
}

fn validate_payoff(payoff: &[Vec<f64>]) -> Result<(usize, usize)> {
    let m = payoff.len();
    let n = payoff.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return Err(Error::EmptyPayoff);
    }
    if payoff.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("ragged payoff matrix".into()));
    }
    if payoff.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("payoff entry".into()));
    }
    Ok((m, n))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// `min_P max_h Σ_a P(a) v(a,h)` by optimistic multiplicative weights on both
/// players, stopping once the duality gap is below [`MINIMAX_GAP_TOL`].
///
/// Every few hundred rounds, and once more on convergence, the iterates are
/// used to guess the equilibrium supports; the equalizer system on those
/// supports is solved exactly and accepted only if its duality gap is within
/// tolerance. Either way, the reported gap is computed from the returned
/// strategies.
pub fn randomization_minimax(payoff: &[Vec<f64>]) -> Result<MinimaxSolution> {
    let (m, n) = validate_payoff(payoff)?;
    let lo = payoff.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let hi = payoff.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eta = 0.1 / if hi > lo { hi - lo } else { 1.0 };

    let mut x_logits = vec![0.0; m];
    let mut y_logits = vec![0.0; n];
    let mut x = vec![1.0 / m as f64; m];
    let mut y = vec![1.0 / n as f64; n];
    let mut x_sum = vec![0.0; m];
    let mut y_sum = vec![0.0; n];
    let mut prev_costs = vec![0.0; m];
    let mut prev_gains = vec![0.0; n];

    let mut iterations = 0;
    let (mut lower, mut upper);
    loop {
        let costs = row_costs(payoff, &y);
        let gains = column_payoffs(payoff, &x);
        lower = min_of(&costs);
        upper = max_of(&gains);
        if upper - lower < MINIMAX_GAP_TOL {
            if let Some((px, py, l, u)) = polish(payoff, &x, &y) {
                (x, y, lower, upper) = (px, py, l, u);
            }
            break;
        }
        if iterations >= MINIMAX_MAX_ITER {
            break;
        }
        if iterations > 0 && iterations % POLISH_EVERY == 0 {
            if let Some((px, py, l, u)) = polish(payoff, &x_sum, &y_sum) {
                (x, y, lower, upper) = (px, py, l, u);
                break;
            }
        }
        for a in 0..m {
            x_logits[a] -= eta * (2.0 * costs[a] - prev_costs[a]);
        }
        for h in 0..n {
            y_logits[h] += eta * (2.0 * gains[h] - prev_gains[h]);
        }
        prev_costs = costs;
        prev_gains = gains;
        x = softmax(&x_logits);
        y = softmax(&y_logits);
        x_sum.iter_mut().zip(&x).for_each(|(s, v)| *s += v);
        y_sum.iter_mut().zip(&y).for_each(|(s, v)| *s += v);
        iterations += 1;
    }
    let x = normalized(x);
    let y = normalized(y);
    Ok(MinimaxSolution {
        strategy: MixedStrategy { atoms: (0..m).collect(), probabilities: x },
        adversary: MixedStrategy { atoms: (0..n).collect(), probabilities: y },
        value: lower,
        upper,
        duality_gap: upper - lower,
        iterations,
        converged: upper - lower < MINIMAX_GAP_TOL,
    })
}

fn row_costs(payoff: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    payoff.iter().map(|r| r.iter().zip(y).map(|(a, b)| a * b).sum()).collect()
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Indices sorted by decreasing weight, ties to the lower index.
fn ranked(weights: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    idx
}

/// Solves `Σ_{i∈own} p_i v_i(j) = w` for every `j ∈ other` with `Σ p = 1`,
/// where `v_i(j) = entry(i, j)`. Returns the dense probability vector.
fn equalizer(
    own: &[usize],
    other: &[usize],
    len: usize,
    entry: impl Fn(usize, usize) -> f64,
) -> Option<Vec<f64>> {
    let k = own.len();
    let mut a = Matrix::zeros(k + 1, k + 1);
    let mut rhs = vec![0.0; k + 1];
    for (r, &j) in other.iter().enumerate() {
        for (c, &i) in own.iter().enumerate() {
            a[(r, c)] = entry(i, j);
        }
        a[(r, k)] = -1.0;
    }
    for c in 0..k {
        a[(k, c)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = a.invert().ok()?.mul_vec(&rhs).ok()?;
    if sol[..k].iter().any(|p| !p.is_finite() || *p < -1e-12) {
        return None;
    }
    let mut dense = vec![0.0; len];
    for (&i, &p) in own.iter().zip(&sol) {
        dense[i] = p.max(0.0);
    }
    Some(normalized(dense))
}

fn polish(
    payoff: &[Vec<f64>],
    x_weight: &[f64],
    y_weight: &[f64],
) -> Option<(Vec<f64>, Vec<f64>, f64, f64)> {
    let (m, n) = (x_weight.len(), y_weight.len());
    let rows = ranked(x_weight);
    let cols = ranked(y_weight);
    for k in 1..=m.min(n) {
        let (r, c) = (&rows[..k], &cols[..k]);
        let Some(x) = equalizer(r, c, m, |i, j| payoff[i][j]) else { continue };
        let Some(y) = equalizer(c, r, n, |j, i| payoff[i][j]) else { continue };
        let lower = min_of(&row_costs(payoff, &y));
        let upper = max_of(&column_payoffs(payoff, &x));
        if upper - lower < MINIMAX_GAP_TOL {
            return Some((x, y, lower, upper));
        }
    }
    None
}

/// `min_a max_h v(a,h)`, ties to the lower row index.
pub fn literal_minimax(payoff: &[Vec<f64>]) -> Result<PureMinimax> {
    validate_payoff(payoff)?;
    let (row, value) = payoff
        .iter()
        .map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    Ok(PureMinimax { strategy: MixedStrategy::point_mass(row), value })
}

/// Expected payoff of row strategy `p` against each column.
pub fn column_payoffs(payoff: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    let n = payoff.first().map_or(0, Vec::len);
    (0..n).map(|h| payoff.iter().zip(p).map(|(r, w)| w * r[h]).sum()).collect()
}

/// Payoff matrix `v(a, h) = hᵀ Q2(a) h` for each assignment `a` (a list of
/// x-points) against each dictionary vector `h`.
pub fn assignment_payoff(
    assignments: &[Vec<Vec<f64>>],
    f: &crate::design::MonomialBasis,
    dictionary: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    assignments
        .iter()
        .map(|design| {
            let q2 = crate::criteria::q2_matrix(design, f, None)?;
            dictionary
                .iter()
                .map(|h| crate::criteria::worst_bias_against(&q2, std::slice::from_ref(h)))
                .collect()
        })
        .collect()
}
