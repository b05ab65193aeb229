//! Cut-generating decomposition for the bootstrap-weighted two-stage model,
//! plus the classical single-cut variant for the plain sample average.
//!
//! Each iteration solves a master LP over `(x, eta)`, scans scenarios in
//! index order for infeasible recourse (adding one feasibility cut per
//! iteration from phase-I duals), and otherwise prices the risk functional
//! by sorting the M weighted scenario-cost aggregates `r_m` and assembling
//! one aggregated optimality cut from the recourse duals. The sort is what
//! keeps the per-iteration cost at O(MN + M log M) regardless of M.

use crate::bounds::kahan_sum;
use crate::lp::{solve_lp, solve_phase1_feasibility, LpError, LpProblem, LpStatus};
use crate::model::{evaluate_recourse, tail_start, ModelError, Recourse, TwoStageProblem};
use crate::sampling::BootstrapWeights;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LShapedError {
    #[error("first-stage feasible set is empty")]
    ModelInfeasible,
    #[error("master problem is unbounded; the first stage needs explicit bounds")]
    MasterUnbounded,
    #[error("iteration cap {cap} exceeded")]
    IterationCapExceeded { cap: usize },
    #[error("recourse infeasible at scenario {scenario} during gamma evaluation")]
    RecourseInfeasible { scenario: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutKind {
    Feasibility,
    Optimality,
}

/// A master-problem cut: `coeff'x >= rhs` (feasibility) or
/// `coeff'x + eta >= rhs` (optimality).
#[derive(Debug, Clone, Serialize)]
pub struct Cut {
    pub kind: CutKind,
    pub coeff: Vec<f64>,
    pub rhs: f64,
}

/// One generated cut together with the iterate it was built at.
/// `reference` is the separation value: `u_n(x)` for feasibility cuts and
/// the tail aggregate `lambda` for optimality cuts.
#[derive(Debug, Clone)]
pub struct CutTrace {
    pub cut: Cut,
    pub x_hat: Vec<f64>,
    pub reference: f64,
}

/// Iteration record of one decomposition solve. The objective trace lists
/// the master optimum `c'x + eta` from the first optimality-cut iteration
/// onward (earlier masters carry no eta term); it is nondecreasing.
#[derive(Debug, Clone, Serialize)]
pub struct SolveLog {
    pub iterations: usize,
    pub feasibility_cuts: usize,
    pub optimality_cuts: usize,
    pub wall_time_secs: f64,
    pub master_objective_trace: Vec<f64>,
    pub final_x: Vec<f64>,
    pub final_value: f64,
}

impl SolveLog {
    /// Per-iteration CSV rows: `iteration,feasibility_cuts,optimality_cuts,master_obj`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,master_obj\n");
        for (i, v) in self.master_objective_trace.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, v));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LShapedOutcome {
    pub value: f64,
    pub x: Vec<f64>,
    pub log: SolveLog,
}

#[derive(Debug, Clone, Copy)]
pub struct LShapedConfig {
    /// Relative stopping tolerance on `eta >= lambda`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 * (N + M)`.
    pub max_iter: Option<usize>,
}

impl Default for LShapedConfig {
    fn default() -> Self {
        LShapedConfig {
            tol: 1e-7,
            max_iter: None,
        }
    }
}

/// Risk functional value at `x`, its sorting permutation, and the weight
/// each sorted position carries. `r` holds the unsorted aggregates and
/// `recourse_values`/`duals` the per-scenario solves behind them.
#[derive(Debug, Clone)]
pub struct GammaInfo {
    pub gamma: f64,
    pub sorted_perm: Vec<usize>,
    pub lambda_weights: Vec<f64>,
    pub r: Vec<f64>,
    pub recourse_values: Vec<f64>,
    pub duals: Vec<Vec<f64>>,
}

fn weighted_aggregates(
    weights: &[BootstrapWeights],
    recourse_values: &[f64],
) -> Vec<f64> {
    let n = recourse_values.len() as f64;
    weights
        .iter()
        .map(|w| {
            let s: f64 = w
                .counts()
                .iter()
                .zip(recourse_values)
                .map(|(&v, &q)| v as f64 * q)
                .sum();
            s / n
        })
        .collect()
}

fn sort_permutation(r: &[f64]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..r.len()).collect();
    // Stable by (value, original index): equal values keep draw order.
    perm.sort_by(|&a, &b| r[a].total_cmp(&r[b]));
    perm
}

/// Tail aggregate `lambda = (1 - (M-J)/(alpha M)) r_(J) + (1/(alpha M))
/// sum_{m>J} r_(m)` over the sorted sequence.
fn lambda_from_sorted(r: &[f64], perm: &[usize], alpha: f64) -> f64 {
    let m = r.len();
    let j = tail_start(alpha, m);
    let am = alpha * m as f64;
    let tail = kahan_sum(perm[j..].iter().map(|&idx| r[idx])) / am;
    if j == 0 {
        tail
    } else {
        (1.0 - (m - j) as f64 / am) * r[perm[j - 1]] + tail
    }
}

fn position_weights(m: usize, alpha: f64) -> Vec<f64> {
    let j = tail_start(alpha, m);
    let am = alpha * m as f64;
    let mut w = vec![0.0; m];
    for wk in w[j..].iter_mut() {
        *wk = 1.0 / am;
    }
    if j > 0 {
        w[j - 1] = 1.0 - (m - j) as f64 / am;
    }
    w
}

/// Evaluates all scenario recourses at `x` and aggregates them into the
/// risk functional `gamma(x) = min_t t + (1/(alpha M)) sum_m [r_m(x) - t]_+`.
pub fn compute_gamma(
    problem: &TwoStageProblem,
    x: &[f64],
    alpha: f64,
    weights: &[BootstrapWeights],
) -> Result<GammaInfo, LShapedError> {
    check_inputs(problem, alpha, weights)?;
    let n = problem.n_scenarios();
    let mut recourse_values = Vec::with_capacity(n);
    let mut duals = Vec::with_capacity(n);
    for idx in 0..n {
        match evaluate_recourse(problem, idx, x)? {
            Recourse::Feasible { value, duals: d } => {
                recourse_values.push(value);
                duals.push(d);
            }
            Recourse::Infeasible => {
                return Err(LShapedError::RecourseInfeasible { scenario: idx })
            }
        }
    }
    let r = weighted_aggregates(weights, &recourse_values);
    let sorted_perm = sort_permutation(&r);
    let gamma = lambda_from_sorted(&r, &sorted_perm, alpha);
    let lambda_weights = position_weights(r.len(), alpha);
    Ok(GammaInfo {
        gamma,
        sorted_perm,
        lambda_weights,
        r,
        recourse_values,
        duals,
    })
}

/// Aggregated optimality cut `E'x + eta >= e` built from recourse duals at
/// the generating point: scenario `n` enters with weight
/// `w_J V_{(J),n}/N + (1/(alpha M)) sum_{m>J} V_{(m),n}/N`.
pub fn build_optimality_cut(
    duals: &[Vec<f64>],
    weights: &[BootstrapWeights],
    sorted_perm: &[usize],
    alpha: f64,
    problem: &TwoStageProblem,
) -> Cut {
    let m = weights.len();
    let n = problem.n_scenarios();
    let j = tail_start(alpha, m);
    let am = alpha * m as f64;
    let inv_n = 1.0 / n as f64;
    let mut scenario_weight = vec![0.0; n];
    if j > 0 {
        let w_j = 1.0 - (m - j) as f64 / am;
        for (sw, &v) in scenario_weight
            .iter_mut()
            .zip(weights[sorted_perm[j - 1]].counts())
        {
            *sw += w_j * v as f64 * inv_n;
        }
    }
    for &idx in &sorted_perm[j..] {
        for (sw, &v) in scenario_weight.iter_mut().zip(weights[idx].counts()) {
            *sw += v as f64 * inv_n / am;
        }
    }
    let d = problem.first_stage_dim();
    let mut coeff = vec![0.0; d];
    let mut rhs = 0.0;
    for ((scenario, psi), &w) in problem.scenarios.iter().zip(duals).zip(&scenario_weight) {
        if w == 0.0 {
            continue;
        }
        let psi_t = scenario.t.left_mul_vec(psi);
        for (c, v) in coeff.iter_mut().zip(&psi_t) {
            *c += w * v;
        }
        rhs += w * psi.iter().zip(&scenario.h).map(|(a, b)| a * b).sum::<f64>();
    }
    Cut {
        kind: CutKind::Optimality,
        coeff,
        rhs,
    }
}

fn check_inputs(
    problem: &TwoStageProblem,
    alpha: f64,
    weights: &[BootstrapWeights],
) -> Result<(), LShapedError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LShapedError::Invalid(format!(
            "alpha must be in (0, 1], got {alpha}"
        )));
    }
    if weights.is_empty() {
        return Err(LShapedError::Invalid("no bootstrap weights".into()));
    }
    let n = problem.n_scenarios();
    if weights.iter().any(|w| w.len() != n) {
        return Err(LShapedError::Invalid(
            "weight vectors must have one count per scenario".into(),
        ));
    }
    Ok(())
}

struct Master<'a> {
    problem: &'a TwoStageProblem,
    cuts: Vec<Cut>,
    with_eta: bool,
}

impl Master<'_> {
    /// Master LP: `min c'x (+ eta)  s.t.  Ax = b, cuts, x >= 0`, with one
    /// surplus column per cut row.
    fn solve(&self) -> Result<(Vec<f64>, f64), LShapedError> {
        let p = self.problem;
        let d = p.first_stage_dim();
        let r_a = p.a.rows();
        let n_cuts = self.cuts.len();
        let eta_cols = usize::from(self.with_eta);
        let n_cols = d + eta_cols + n_cuts;
        let n_rows = r_a + n_cuts;
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_cols];
        let mut objective = vec![0.0; n_cols];
        let mut free = vec![false; n_cols];
        let mut rhs = vec![0.0; n_rows];
        for j in 0..d {
            objective[j] = p.c[j];
            for i in 0..r_a {
                let v = p.a.get(i, j);
                if v != 0.0 {
                    cols[j].push((i as u32, v));
                }
            }
        }
        rhs[..r_a].copy_from_slice(&p.b);
        if self.with_eta {
            objective[d] = 1.0;
            free[d] = true;
        }
        for (k, cut) in self.cuts.iter().enumerate() {
            let row = (r_a + k) as u32;
            for (j, &v) in cut.coeff.iter().enumerate() {
                if v != 0.0 {
                    cols[j].push((row, v));
                }
            }
            if cut.kind == CutKind::Optimality {
                debug_assert!(self.with_eta);
                cols[d].push((row, 1.0));
            }
            // Surplus turns `>=` into an equality.
            cols[d + eta_cols + k].push((row, -1.0));
            rhs[r_a + k] = cut.rhs;
        }
        let lp = LpProblem::from_columns(objective, n_rows, cols, rhs, free)
            .map_err(LShapedError::Lp)?;
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {
                let x = sol.primal[..d].to_vec();
                let eta = if self.with_eta {
                    sol.primal[d]
                } else {
                    f64::NEG_INFINITY
                };
                Ok((x, eta))
            }
            LpStatus::Infeasible => Err(LShapedError::ModelInfeasible),
            LpStatus::Unbounded => Err(LShapedError::MasterUnbounded),
        }
    }
}

/// Decomposition solve of the bootstrap-weighted model. Returns the optimal
/// value, the first-stage solution, and the iteration log.
pub fn solve_apub_lshaped(
    problem: &TwoStageProblem,
    alpha: f64,
    weights: &[BootstrapWeights],
    config: &LShapedConfig,
) -> Result<LShapedOutcome, LShapedError> {
    solve_apub_lshaped_traced(problem, alpha, weights, config).map(|(outcome, _)| outcome)
}

/// As [`solve_apub_lshaped`], additionally returning every generated cut
/// with its generating point.
pub fn solve_apub_lshaped_traced(
    problem: &TwoStageProblem,
    alpha: f64,
    weights: &[BootstrapWeights],
    config: &LShapedConfig,
) -> Result<(LShapedOutcome, Vec<CutTrace>), LShapedError> {
    check_inputs(problem, alpha, weights)?;
    let start = Instant::now();
    let n = problem.n_scenarios();
    let m = weights.len();
    let cap = config.max_iter.unwrap_or(10 * (n + m));
    let mut master = Master {
        problem,
        cuts: Vec::new(),
        with_eta: false,
    };
    let mut traces: Vec<CutTrace> = Vec::new();
    let mut trace = Vec::new();
    let mut feasibility_cuts = 0usize;
    let mut optimality_cuts = 0usize;
    let feas_norm = |rhs: &[f64]| rhs.iter().fold(0.0f64, |a, &v| a.max(v.abs()));

    for iteration in 1..=cap {
        let (x_hat, eta_hat) = master.solve()?;
        if master.with_eta {
            let cx: f64 = problem.c.iter().zip(&x_hat).map(|(c, x)| c * x).sum();
            trace.push(cx + eta_hat);
        }

        // Feasibility scan in scenario order; one cut per iteration.
        let mut added_feasibility = false;
        for (idx, scenario) in problem.scenarios.iter().enumerate() {
            let rhs = scenario.recourse_rhs(&x_hat);
            let (u, phi) = solve_phase1_feasibility(&scenario.w, &rhs)?;
            if u > 1e-7 * (1.0 + feas_norm(&rhs)) {
                let coeff = scenario.t.left_mul_vec(&phi);
                let cut_rhs: f64 = phi
                    .iter()
                    .zip(&scenario.h)
                    .map(|(a, b)| a * b)
                    .sum();
                let cut = Cut {
                    kind: CutKind::Feasibility,
                    coeff,
                    rhs: cut_rhs,
                };
                traces.push(CutTrace {
                    cut: cut.clone(),
                    x_hat: x_hat.clone(),
                    reference: u,
                });
                master.cuts.push(cut);
                feasibility_cuts += 1;
                added_feasibility = true;
                let _ = idx;
                break;
            }
        }
        if added_feasibility {
            continue;
        }

        // Optimality step: price the tail aggregate and test eta against it.
        let info = compute_gamma(problem, &x_hat, alpha, weights)?;
        let lambda = info.gamma;
        if eta_hat >= lambda - config.tol * (1.0 + lambda.abs()) {
            let cx: f64 = problem.c.iter().zip(&x_hat).map(|(c, x)| c * x).sum();
            let value = cx + lambda;
            let log = SolveLog {
                iterations: iteration,
                feasibility_cuts,
                optimality_cuts,
                wall_time_secs: start.elapsed().as_secs_f64(),
                master_objective_trace: trace,
                final_x: x_hat.clone(),
                final_value: value,
            };
            return Ok((
                LShapedOutcome {
                    value,
                    x: x_hat,
                    log,
                },
                traces,
            ));
        }
        let cut = build_optimality_cut(&info.duals, weights, &info.sorted_perm, alpha, problem);
        traces.push(CutTrace {
            cut: cut.clone(),
            x_hat: x_hat.clone(),
            reference: lambda,
        });
        master.cuts.push(cut);
        master.with_eta = true;
        optimality_cuts += 1;
    }
    Err(LShapedError::IterationCapExceeded { cap })
}

/// Classical single-cut decomposition for the plain sample-average model,
/// i.e. the weight-free special case: one uniform weight vector at full
/// level collapses every aggregate to the scenario mean.
pub fn solve_saa_lshaped(
    problem: &TwoStageProblem,
    config: &LShapedConfig,
) -> Result<LShapedOutcome, LShapedError> {
    let uniform = vec![BootstrapWeights::ones(problem.n_scenarios())];
    solve_apub_lshaped(problem, 1.0, &uniform, config)
}
