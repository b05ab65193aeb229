//! Two-stage linear stochastic programs with random recourse: problem
//! representation, per-scenario recourse evaluation, the bootstrap-weighted
//! extensive-form LP, and out-of-sample cost evaluation.
//!
//! A problem is `min c'x + risk(E[Q(x, xi)])  s.t.  Ax = b, x >= 0` with
//! `Q(x, xi) = min q'y  s.t.  W y = h - T x, y >= 0`. Scenarios carry their
//! own `W`, so the recourse matrix may vary across them. Inequality models
//! are converted to this equality form with explicit slack columns when the
//! instance is constructed.

use crate::bounds::ceil_snapped;
use crate::lp::{LpError, LpProblem, LpSolution, LpStatus};
use crate::matrix::Mat;
use crate::sampling::BootstrapWeights;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cost charged for an infeasible recourse when evaluating a candidate on a
/// test set. Kept large enough to dominate any realistic scenario cost.
pub const INFEASIBLE_RECOURSE_PENALTY: f64 = 1e6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite data: {0}")]
    NonFinite(String),
    #[error("recourse problem {scenario} is unbounded below")]
    UnboundedRecourse { scenario: usize },
    #[error("strong duality check failed on scenario {scenario}: gap {gap}")]
    DualityGap { scenario: usize, gap: f64 },
    #[error("first-stage point violates Ax = b, x >= 0")]
    InfeasibleFirstStage,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// One scenario `xi = (q, h, T, W)` of the second stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Mat,
    #[serde(rename = "W")]
    pub w: Mat,
}

impl Scenario {
    pub fn rows(&self) -> usize {
        self.h.len()
    }

    pub fn n_recourse_vars(&self) -> usize {
        self.w.cols()
    }

    fn validate(&self, idx: usize, first_stage_dim: usize) -> Result<(), ModelError> {
        if self.w.rows() != self.h.len() || self.t.rows() != self.h.len() {
            return Err(ModelError::Dimension(format!(
                "scenario {idx}: W has {} rows, T has {}, h has {} entries",
                self.w.rows(),
                self.t.rows(),
                self.h.len()
            )));
        }
        if self.t.cols() != first_stage_dim {
            return Err(ModelError::Dimension(format!(
                "scenario {idx}: T has {} columns, first stage has {first_stage_dim}",
                self.t.cols()
            )));
        }
        if self.q.len() != self.w.cols() {
            return Err(ModelError::Dimension(format!(
                "scenario {idx}: q has {} entries, W has {} columns",
                self.q.len(),
                self.w.cols()
            )));
        }
        let finite = self.q.iter().chain(&self.h).all(|v| v.is_finite())
            && self.t.all_finite()
            && self.w.all_finite();
        if !finite {
            return Err(ModelError::NonFinite(format!("scenario {idx}")));
        }
        Ok(())
    }

    /// `h - T x`.
    pub fn recourse_rhs(&self, x: &[f64]) -> Vec<f64> {
        let tx = self.t.mul_vec(x);
        self.h.iter().zip(&tx).map(|(h, t)| h - t).collect()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub name: String,
    pub seed: u64,
}

/// First-stage data plus the empirical scenario support (equal weights 1/N).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStageProblem {
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Mat,
    pub b: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub meta: ProblemMeta,
}

impl TwoStageProblem {
    pub fn new(
        c: Vec<f64>,
        a: Mat,
        b: Vec<f64>,
        scenarios: Vec<Scenario>,
        meta: ProblemMeta,
    ) -> Result<Self, ModelError> {
        let p = TwoStageProblem {
            c,
            a,
            b,
            scenarios,
            meta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let d = self.c.len();
        if d == 0 {
            return Err(ModelError::Dimension("first stage has no variables".into()));
        }
        if self.a.rows() != self.b.len() {
            return Err(ModelError::Dimension(format!(
                "A has {} rows, b has {} entries",
                self.a.rows(),
                self.b.len()
            )));
        }
        if !self.a.is_empty() && self.a.cols() != d {
            return Err(ModelError::Dimension(format!(
                "A has {} columns, c has {d} entries",
                self.a.cols()
            )));
        }
        if self.scenarios.is_empty() {
            return Err(ModelError::Dimension("no scenarios".into()));
        }
        if !self.c.iter().chain(&self.b).all(|v| v.is_finite()) || !self.a.all_finite() {
            return Err(ModelError::NonFinite("first stage".into()));
        }
        for (idx, s) in self.scenarios.iter().enumerate() {
            s.validate(idx, d)?;
        }
        Ok(())
    }

    pub fn first_stage_dim(&self) -> usize {
        self.c.len()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let p: TwoStageProblem = serde_json::from_str(s)
            .map_err(|e| ModelError::Dimension(format!("problem JSON: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    /// `||Ax - b||_inf <= tol` and `x >= -1e-9`.
    pub fn first_stage_feasible(&self, x: &[f64]) -> bool {
        if x.len() != self.first_stage_dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if x.iter().any(|&v| v < -1e-9) {
            return false;
        }
        if self.a.is_empty() {
            return true;
        }
        let norm_b = self.b.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let ax = self.a.mul_vec(x);
        ax.iter()
            .zip(&self.b)
            .all(|(l, r)| (l - r).abs() <= 1e-6 * (1.0 + norm_b))
    }
}

/// Outcome of one recourse solve.
#[derive(Debug, Clone)]
pub enum Recourse {
    Feasible { value: f64, duals: Vec<f64> },
    Infeasible,
}

/// Solves `Q(x, xi) = min q'y  s.t.  W y = h - T x, y >= 0` for one scenario
/// and verifies strong duality `psi'(h - Tx) = Q` on feasible solves.
pub fn solve_recourse(scenario: &Scenario, x: &[f64], idx: usize) -> Result<Recourse, ModelError> {
    let rhs = scenario.recourse_rhs(x);
    let sol = solve_scenario_lp(scenario, rhs.clone())?;
    match sol.status {
        LpStatus::Optimal => {
            let value = sol.objective_value;
            let dual_value: f64 = sol.duals.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            let gap = (dual_value - value).abs();
            if gap > 1e-7 * (1.0 + value.abs()) {
                return Err(ModelError::DualityGap { scenario: idx, gap });
            }
            Ok(Recourse::Feasible {
                value,
                duals: sol.duals,
            })
        }
        LpStatus::Infeasible => Ok(Recourse::Infeasible),
        LpStatus::Unbounded => Err(ModelError::UnboundedRecourse { scenario: idx }),
    }
}

fn solve_scenario_lp(scenario: &Scenario, rhs: Vec<f64>) -> Result<LpSolution, ModelError> {
    let m = scenario.rows();
    let n = scenario.n_recourse_vars();
    let mut cols: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut col = Vec::new();
        for i in 0..m {
            let v = scenario.w.get(i, j);
            if v != 0.0 {
                col.push((i as u32, v));
            }
        }
        cols.push(col);
    }
    let p = LpProblem::from_columns(scenario.q.clone(), m, cols, rhs, vec![false; n])?;
    Ok(crate::lp::solve_lp(&p)?)
}

/// Per-scenario recourse value and duals for scenario `scenario_index`.
pub fn evaluate_recourse(
    problem: &TwoStageProblem,
    scenario_index: usize,
    x: &[f64],
) -> Result<Recourse, ModelError> {
    if x.len() != problem.first_stage_dim() || x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Dimension(
            "first-stage point has wrong dimension or non-finite entries".into(),
        ));
    }
    solve_recourse(&problem.scenarios[scenario_index], x, scenario_index)
}

/// One monolithic LP equivalent to the bootstrap-weighted two-stage model:
///
/// `min c'x + t + (1/(alpha M)) sum_m s_m`
/// subject to `Ax = b`,
/// `s_m + t >= (1/N) sum_n V_{m,n} g_n`,
/// `g_n = q_n' y_n`,
/// `W_n y_n = h_n - T_n x`, with `x, y, s >= 0` and `t, g` free.
///
/// Column layout: `x (d) | t | g_1..g_N | y_1..y_N | s_1..s_M | coupling
/// slacks (M)`. Row layout: `A | coupling (M) | g definitions (N) | scenario
/// blocks`. The scenario-cost variables `g_n` keep every coupling row at N
/// nonzeros instead of N * dim(y); each `y_n` block is shared across all m.
pub fn build_extensive_form(
    problem: &TwoStageProblem,
    alpha: f64,
    weights: &[BootstrapWeights],
) -> Result<LpProblem, ModelError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ModelError::Dimension(format!(
            "alpha must be in (0, 1], got {alpha}"
        )));
    }
    let n_scen = problem.n_scenarios();
    let m_boot = weights.len();
    if m_boot == 0 {
        return Err(ModelError::Dimension("no bootstrap weights".into()));
    }
    for (m, w) in weights.iter().enumerate() {
        if w.len() != n_scen {
            return Err(ModelError::Dimension(format!(
                "weight vector {m} has length {}, expected {n_scen}",
                w.len()
            )));
        }
    }
    let d = problem.first_stage_dim();
    let r_a = problem.a.rows();

    // Row offsets.
    let coupling0 = r_a;
    let gdef0 = coupling0 + m_boot;
    let mut scen_row0 = Vec::with_capacity(n_scen);
    let mut next = gdef0 + n_scen;
    for s in &problem.scenarios {
        scen_row0.push(next);
        next += s.rows();
    }
    let n_rows = next;

    // Column offsets.
    let t_col = d;
    let g0 = t_col + 1;
    let mut y0 = Vec::with_capacity(n_scen);
    let mut col_next = g0 + n_scen;
    for s in &problem.scenarios {
        y0.push(col_next);
        col_next += s.n_recourse_vars();
    }
    let s0 = col_next;
    let slack0 = s0 + m_boot;
    let n_cols = slack0 + m_boot;

    let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_cols];
    let mut objective = vec![0.0; n_cols];
    let mut free = vec![false; n_cols];
    let mut rhs = vec![0.0; n_rows];

    // First stage.
    for j in 0..d {
        objective[j] = problem.c[j];
        for i in 0..r_a {
            let v = problem.a.get(i, j);
            if v != 0.0 {
                cols[j].push((i as u32, v));
            }
        }
    }
    rhs[..r_a].copy_from_slice(&problem.b);

    // t: objective 1, free, appears in every coupling row.
    objective[t_col] = 1.0;
    free[t_col] = true;
    for m in 0..m_boot {
        cols[t_col].push(((coupling0 + m) as u32, -1.0));
    }

    // g_n: free, defined by g_n - q_n' y_n = 0, weighted into coupling rows.
    let inv_n = 1.0 / n_scen as f64;
    for n in 0..n_scen {
        free[g0 + n] = true;
        for (m, w) in weights.iter().enumerate() {
            let v = w.counts()[n];
            if v > 0 {
                cols[g0 + n].push(((coupling0 + m) as u32, v as f64 * inv_n));
            }
        }
        cols[g0 + n].push(((gdef0 + n) as u32, 1.0));
    }

    // Scenario blocks.
    for (n, s) in problem.scenarios.iter().enumerate() {
        let base = scen_row0[n];
        for j in 0..d {
            for i in 0..s.rows() {
                let v = s.t.get(i, j);
                if v != 0.0 {
                    cols[j].push(((base + i) as u32, v));
                }
            }
        }
        for k in 0..s.n_recourse_vars() {
            let col = &mut cols[y0[n] + k];
            if s.q[k] != 0.0 {
                col.push(((gdef0 + n) as u32, -s.q[k]));
            }
            for i in 0..s.rows() {
                let v = s.w.get(i, k);
                if v != 0.0 {
                    col.push(((base + i) as u32, v));
                }
            }
        }
        rhs[base..base + s.rows()].copy_from_slice(&s.h);
    }

    // s_m and the coupling slacks: coupling row m is
    // (1/N) sum_n V_{m,n} g_n - t - s_m + slack_m = 0.
    let s_cost = 1.0 / (alpha * m_boot as f64);
    for m in 0..m_boot {
        objective[s0 + m] = s_cost;
        cols[s0 + m].push(((coupling0 + m) as u32, -1.0));
        cols[slack0 + m].push(((coupling0 + m) as u32, 1.0));
    }

    // Columns must list rows in increasing order for the solver's crash scan
    // determinism; x columns interleave A and scenario rows already sorted by
    // construction, g columns are sorted, the rest are singletons or built in
    // order.
    Ok(LpProblem::from_columns(objective, n_rows, cols, rhs, free)?)
}

/// The plain sample-average extensive form
/// `min c'x + (1/N) sum_n q_n' y_n  s.t.  Ax = b, W_n y_n = h_n - T_n x`.
pub fn build_saa_extensive_form(problem: &TwoStageProblem) -> Result<LpProblem, ModelError> {
    let d = problem.first_stage_dim();
    let n_scen = problem.n_scenarios();
    let r_a = problem.a.rows();
    let mut scen_row0 = Vec::with_capacity(n_scen);
    let mut next = r_a;
    for s in &problem.scenarios {
        scen_row0.push(next);
        next += s.rows();
    }
    let n_rows = next;
    let mut y0 = Vec::with_capacity(n_scen);
    let mut col_next = d;
    for s in &problem.scenarios {
        y0.push(col_next);
        col_next += s.n_recourse_vars();
    }
    let n_cols = col_next;

    let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_cols];
    let mut objective = vec![0.0; n_cols];
    let mut rhs = vec![0.0; n_rows];
    let inv_n = 1.0 / n_scen as f64;

    for j in 0..d {
        objective[j] = problem.c[j];
        for i in 0..r_a {
            let v = problem.a.get(i, j);
            if v != 0.0 {
                cols[j].push((i as u32, v));
            }
        }
    }
    rhs[..r_a].copy_from_slice(&problem.b);
    for (n, s) in problem.scenarios.iter().enumerate() {
        let base = scen_row0[n];
        for j in 0..d {
            for i in 0..s.rows() {
                let v = s.t.get(i, j);
                if v != 0.0 {
                    cols[j].push(((base + i) as u32, v));
                }
            }
        }
        for k in 0..s.n_recourse_vars() {
            objective[y0[n] + k] = s.q[k] * inv_n;
            for i in 0..s.rows() {
                let v = s.w.get(i, k);
                if v != 0.0 {
                    cols[y0[n] + k].push(((base + i) as u32, v));
                }
            }
        }
        rhs[base..base + s.rows()].copy_from_slice(&s.h);
    }
    Ok(LpProblem::from_columns(
        objective,
        n_rows,
        cols,
        rhs,
        vec![false; n_cols],
    )?)
}

/// Out-of-sample evaluation of a first-stage candidate.
#[derive(Debug, Clone, Serialize)]
pub struct OosReport {
    /// `c'x + mean Q` with infeasible scenarios charged the penalty.
    pub mean_cost: f64,
    /// `c'x + mean Q` over feasible scenarios only; `None` if none are.
    pub mean_feasible_cost: Option<f64>,
    pub infeasible: usize,
    pub n: usize,
}

/// `c'x + average Q(x, xi)` over a test set. Infeasible recourse contributes
/// [`INFEASIBLE_RECOURSE_PENALTY`] to `mean_cost` and is counted separately.
pub fn evaluate_out_of_sample(
    c: &[f64],
    a: &Mat,
    b: &[f64],
    x: &[f64],
    test_scenarios: &[Scenario],
) -> Result<OosReport, ModelError> {
    if x.len() != c.len() || x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Dimension("candidate has wrong dimension".into()));
    }
    if x.iter().any(|&v| v < -1e-9) {
        return Err(ModelError::InfeasibleFirstStage);
    }
    if !a.is_empty() {
        let norm_b = b.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let ax = a.mul_vec(x);
        if !ax
            .iter()
            .zip(b)
            .all(|(l, r)| (l - r).abs() <= 1e-6 * (1.0 + norm_b))
        {
            return Err(ModelError::InfeasibleFirstStage);
        }
    }
    let fixed: f64 = c.iter().zip(x).map(|(ci, xi)| ci * xi).sum();
    let mut total = 0.0;
    let mut feasible_total = 0.0;
    let mut infeasible = 0usize;
    for (idx, s) in test_scenarios.iter().enumerate() {
        match solve_recourse(s, x, idx)? {
            Recourse::Feasible { value, .. } => {
                total += value;
                feasible_total += value;
            }
            Recourse::Infeasible => {
                total += INFEASIBLE_RECOURSE_PENALTY;
                infeasible += 1;
            }
        }
    }
    let n = test_scenarios.len();
    let feasible_n = n - infeasible;
    Ok(OosReport {
        mean_cost: fixed + total / n as f64,
        mean_feasible_cost: (feasible_n > 0).then(|| fixed + feasible_total / feasible_n as f64),
        infeasible,
        n,
    })
}

/// `J = ceil((1 - alpha) M)` with integer snapping, shared by the sorted
/// CVaR formula and the cut construction.
pub(crate) fn tail_start(alpha: f64, m: usize) -> usize {
    ceil_snapped((1.0 - alpha) * m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_lp;

    fn toy_scenario(q: Vec<f64>, h: Vec<f64>, t: Vec<Vec<f64>>, w: Vec<Vec<f64>>) -> Scenario {
        Scenario {
            q,
            h,
            t: Mat::from_rows(&t).unwrap(),
            w: Mat::from_rows(&w).unwrap(),
        }
    }

    #[test]
    fn recourse_one_by_one_system() {
        let s = toy_scenario(vec![1.0], vec![4.0], vec![vec![1.0]], vec![vec![1.0]]);
        match solve_recourse(&s, &[1.0], 0).unwrap() {
            Recourse::Feasible { value, duals } => {
                assert!((value - 3.0).abs() < 1e-9);
                assert!((duals[0] - 1.0).abs() < 1e-9);
            }
            Recourse::Infeasible => panic!("expected feasible"),
        }
    }

    #[test]
    fn recourse_infeasible_negative_rhs() {
        let s = toy_scenario(vec![1.0], vec![-1.0], vec![vec![1.0]], vec![vec![1.0]]);
        assert!(matches!(
            solve_recourse(&s, &[0.0], 0).unwrap(),
            Recourse::Infeasible
        ));
    }

    #[test]
    fn recourse_covered_demand_costs_nothing() {
        // Shortfall/budget scenario with x = 12, demand 10, price 1: the
        // budget row forces y = 0 and the demand row is slack.
        let s = toy_scenario(
            vec![2.5, 1.0, 0.0, 0.0],
            vec![10.0, 12.0],
            vec![vec![1.0], vec![1.0]],
            vec![vec![1.0, 1.0, -1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]],
        );
        match solve_recourse(&s, &[12.0], 0).unwrap() {
            Recourse::Feasible { value, .. } => assert!(value.abs() < 1e-9),
            Recourse::Infeasible => panic!("expected feasible"),
        }
    }

    #[test]
    fn recourse_unbounded_is_model_error() {
        // min -y s.t. 0*y = 0: improving ray.
        let s = toy_scenario(vec![-1.0], vec![0.0], vec![vec![0.0]], vec![vec![0.0]]);
        assert!(matches!(
            solve_recourse(&s, &[0.0], 3),
            Err(ModelError::UnboundedRecourse { scenario: 3 })
        ));
    }

    fn tiny_problem() -> TwoStageProblem {
        // min 2x + Q(x), x + s = 2; Q(x) = min y s.t. y = 4 - x.
        TwoStageProblem::new(
            vec![2.0, 0.0],
            Mat::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![2.0],
            vec![toy_scenario(
                vec![1.0],
                vec![4.0],
                vec![vec![1.0, 0.0]],
                vec![vec![1.0]],
            )],
            ProblemMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn extensive_single_scenario_degenerates_to_deterministic() {
        let p = tiny_problem();
        let weights = vec![BootstrapWeights::ones(1)];
        for &alpha in &[0.3, 0.7, 1.0] {
            let lp = build_extensive_form(&p, alpha, &weights).unwrap();
            let sol = solve_lp(&lp).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            // Optimal x = 0 (cost 2 vs recourse saving 1), value 0 + 4.
            assert!(
                (sol.objective_value - 4.0).abs() < 1e-8,
                "alpha {alpha}: {}",
                sol.objective_value
            );
        }
    }

    #[test]
    fn extensive_uniform_single_weight_matches_saa() {
        let mut scenarios = Vec::new();
        for k in 0..4 {
            scenarios.push(toy_scenario(
                vec![1.0, 0.5],
                vec![3.0 + k as f64, 5.0],
                vec![vec![1.0, 0.0], vec![0.5, 0.0]],
                vec![vec![1.0, -1.0], vec![0.0, 1.0]],
            ));
        }
        let p = TwoStageProblem::new(
            vec![1.0, 0.0],
            Mat::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![3.0],
            scenarios,
            ProblemMeta::default(),
        )
        .unwrap();
        let saa = solve_lp(&build_saa_extensive_form(&p).unwrap()).unwrap();
        let ones = vec![BootstrapWeights::ones(4)];
        for &alpha in &[0.4, 1.0] {
            let ext = solve_lp(&build_extensive_form(&p, alpha, &ones).unwrap()).unwrap();
            assert!(
                (ext.objective_value - saa.objective_value).abs()
                    <= 1e-6 * (1.0 + saa.objective_value.abs()),
                "alpha {alpha}: {} vs {}",
                ext.objective_value,
                saa.objective_value
            );
        }
    }

    #[test]
    fn oos_examples() {
        let p = tiny_problem();
        // Zero-cost recourse: q = 0.
        let free_scen = toy_scenario(
            vec![0.0],
            vec![4.0],
            vec![vec![1.0, 0.0]],
            vec![vec![1.0]],
        );
        let rep = evaluate_out_of_sample(
            &p.c,
            &p.a,
            &p.b,
            &[1.0, 1.0],
            &[free_scen.clone(), free_scen.clone()],
        )
        .unwrap();
        assert!((rep.mean_cost - 2.0).abs() < 1e-9);
        assert_eq!(rep.infeasible, 0);

        // Single scenario: c'x + Q.
        let one = toy_scenario(vec![1.0], vec![4.0], vec![vec![1.0, 0.0]], vec![vec![1.0]]);
        let rep = evaluate_out_of_sample(&p.c, &p.a, &p.b, &[1.0, 1.0], &[one]).unwrap();
        assert!((rep.mean_cost - (2.0 + 3.0)).abs() < 1e-9);
    }

    #[test]
    fn oos_penalizes_and_counts_infeasible() {
        let p = tiny_problem();
        let bad = toy_scenario(vec![1.0], vec![-1.0], vec![vec![0.0, 0.0]], vec![vec![1.0]]);
        let good = toy_scenario(vec![1.0], vec![4.0], vec![vec![1.0, 0.0]], vec![vec![1.0]]);
        let rep =
            evaluate_out_of_sample(&p.c, &p.a, &p.b, &[1.0, 1.0], &[bad, good]).unwrap();
        assert_eq!(rep.infeasible, 1);
        assert!((rep.mean_cost - (2.0 + (INFEASIBLE_RECOURSE_PENALTY + 3.0) / 2.0)).abs() < 1e-9);
        assert!((rep.mean_feasible_cost.unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn oos_rejects_infeasible_first_stage() {
        let p = tiny_problem();
        let s = toy_scenario(vec![1.0], vec![4.0], vec![vec![1.0, 0.0]], vec![vec![1.0]]);
        assert!(matches!(
            evaluate_out_of_sample(&p.c, &p.a, &p.b, &[5.0, 5.0], &[s]),
            Err(ModelError::InfeasibleFirstStage)
        ));
    }

    #[test]
    fn json_round_trip_preserves_problem() {
        let p = tiny_problem();
        let s = p.to_json();
        let back = TwoStageProblem::from_json(&s).unwrap();
        assert_eq!(back.c, p.c);
        assert_eq!(back.b, p.b);
        assert_eq!(back.scenarios.len(), p.scenarios.len());
        assert_eq!(back.scenarios[0].h, p.scenarios[0].h);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn dimension_validation_catches_mismatches() {
        let bad = TwoStageProblem::new(
            vec![1.0],
            Mat::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![2.0],
            vec![toy_scenario(
                vec![1.0],
                vec![4.0],
                vec![vec![1.0]],
                vec![vec![1.0]],
            )],
            ProblemMeta::default(),
        );
        assert!(bad.is_err());
    }
}
