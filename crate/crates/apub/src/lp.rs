//! Two-phase revised simplex for linear programs in standard equality form
//! `min c'x  s.t.  Ax = b, x_j >= 0 (or x_j free)`, returning dual
//! multipliers for optimal solves and a Farkas-type certificate extracted
//! from the phase-I duals for infeasible ones.
//!
//! The constraint matrix is held column-wise and sparse; the basis inverse is
//! held explicitly and updated by rank-one pivots, which is adequate at the
//! problem sizes this crate produces (a few thousand rows). Pricing uses the
//! Dantzig rule with an automatic switch to Bland's rule to break cycling.

use crate::matrix::Mat;
use thiserror::Error;

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const OPTIMALITY_TOL: f64 = 1e-7;
pub const PIVOT_TOL: f64 = 1e-9;
const BREAKDOWN_TOL: f64 = 1e-11;
const REFRESH_INTERVAL: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("numerical breakdown: pivot below {BREAKDOWN_TOL} under Bland's rule")]
    NumericalBreakdown,
    #[error("simplex iteration limit reached ({0} iterations)")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `min c'x  s.t.  eq_matrix x = eq_rhs`, with `var_lower[j]` either `0.0`
/// (constrained variable) or `-inf` (free variable).
#[derive(Debug, Clone)]
pub struct LpProblem {
    objective: Vec<f64>,
    cols: Vec<Vec<(u32, f64)>>,
    n_rows: usize,
    rhs: Vec<f64>,
    free: Vec<bool>,
}

impl LpProblem {
    /// Dense-row constructor. `var_lower` entries must be `0.0` or `-inf`.
    pub fn from_dense(
        objective: Vec<f64>,
        rows: &[Vec<f64>],
        rhs: Vec<f64>,
        var_lower: &[f64],
    ) -> Result<Self, LpError> {
        let n = objective.len();
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::InvalidProblem(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols[j].push((i as u32, v));
                }
            }
        }
        Self::from_columns(objective, rows.len(), cols, rhs, free_mask(var_lower)?)
    }

    /// Sparse-column constructor; `cols[j]` lists `(row, coefficient)`.
    pub fn from_columns(
        objective: Vec<f64>,
        n_rows: usize,
        cols: Vec<Vec<(u32, f64)>>,
        rhs: Vec<f64>,
        free: Vec<bool>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        if n == 0 {
            return Err(LpError::InvalidProblem("problem has no variables".into()));
        }
        if cols.len() != n || free.len() != n {
            return Err(LpError::InvalidProblem(
                "objective, columns and bound marks must have equal length".into(),
            ));
        }
        if rhs.len() != n_rows {
            return Err(LpError::InvalidProblem(format!(
                "rhs has {} entries, expected {n_rows}",
                rhs.len()
            )));
        }
        if objective.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::InvalidProblem(
                "objective and rhs must be finite".into(),
            ));
        }
        for (j, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                if r as usize >= n_rows {
                    return Err(LpError::InvalidProblem(format!(
                        "column {j} references row {r}, but there are {n_rows} rows"
                    )));
                }
                if !v.is_finite() {
                    return Err(LpError::InvalidProblem(format!(
                        "column {j} has a non-finite coefficient"
                    )));
                }
            }
        }
        Ok(LpProblem {
            objective,
            cols,
            n_rows,
            rhs,
            free,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Residual `||Ax - b||_inf` for a candidate point.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n_rows];
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj != 0.0 {
                for &(r, v) in col {
                    ax[r as usize] += v * xj;
                }
            }
        }
        ax.iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `y' * A_j` for every column, used by certificate checks.
    pub fn left_mul(&self, y: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(r, v)| y[r as usize] * v).sum())
            .collect()
    }

    pub fn is_free(&self, j: usize) -> bool {
        self.free[j]
    }
}

fn free_mask(var_lower: &[f64]) -> Result<Vec<bool>, LpError> {
    var_lower
        .iter()
        .map(|&l| {
            if l == 0.0 {
                Ok(false)
            } else if l == f64::NEG_INFINITY {
                Ok(true)
            } else {
                Err(LpError::InvalidProblem(format!(
                    "variable lower bounds must be 0 or -inf, got {l}"
                )))
            }
        })
        .collect()
}

/// Solution of one LP solve. `duals` is populated when `Optimal`;
/// `certificate` holds the phase-I simplex multipliers when `Infeasible`
/// (they satisfy `y'A <= 0` on constrained columns and `y'b > 0`).
/// `objective_value` is `+inf` for infeasible and `-inf` for unbounded
/// problems.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    pub duals: Vec<f64>,
    pub certificate: Vec<f64>,
}

// Standard-form expansion: free variables split into x+ - x-, rows flipped so
// every rhs is nonnegative.
struct StandardForm {
    m: usize,
    cols: Vec<Vec<(u32, f64)>>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    flipped: Vec<bool>,
    // std column -> (original variable, sign)
    origin: Vec<(usize, f64)>,
}

fn expand(p: &LpProblem) -> StandardForm {
    let m = p.n_rows;
    let mut flipped = vec![false; m];
    let mut rhs = p.rhs.clone();
    for (i, r) in rhs.iter_mut().enumerate() {
        if *r < 0.0 {
            *r = -*r;
            flipped[i] = true;
        }
    }
    let sign_of = |r: u32, v: f64| if flipped[r as usize] { -v } else { v };
    let mut cols = Vec::with_capacity(p.n_vars() + 4);
    let mut cost = Vec::with_capacity(p.n_vars() + 4);
    let mut origin = Vec::with_capacity(p.n_vars() + 4);
    for (j, col) in p.cols.iter().enumerate() {
        let fixed: Vec<(u32, f64)> = col.iter().map(|&(r, v)| (r, sign_of(r, v))).collect();
        cols.push(fixed.clone());
        cost.push(p.objective[j]);
        origin.push((j, 1.0));
        if p.free[j] {
            cols.push(fixed.iter().map(|&(r, v)| (r, -v)).collect());
            cost.push(-p.objective[j]);
            origin.push((j, -1.0));
        }
    }
    StandardForm {
        m,
        cols,
        cost,
        rhs,
        flipped,
        origin,
    }
}

struct Simplex {
    m: usize,
    n_structural: usize,
    cols: Vec<Vec<(u32, f64)>>, // structural columns then artificials
    rhs: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>, // m x m, row-major
    xb: Vec<f64>,
    art_banned: Vec<bool>, // artificial left the basis and may not return
}

enum Step {
    Optimal,
    Unbounded,
}

impl Simplex {
    fn new(sf: &StandardForm) -> Self {
        let m = sf.m;
        let n = sf.cols.len();
        let mut cols = sf.cols.clone();
        let mut basis = vec![usize::MAX; m];
        let mut in_basis = vec![false; n];
        let mut binv = vec![0.0; m * m];
        let mut xb = vec![0.0; m];

        // Crash: claim singleton columns as the initial basic variable of
        // their row whenever that keeps the start point feasible.
        let mut nnz = vec![0usize; n];
        for (j, col) in cols.iter().enumerate() {
            nnz[j] = col.len();
        }
        for j in 0..n {
            if nnz[j] != 1 {
                continue;
            }
            let (r, a) = cols[j][0];
            let row = r as usize;
            if basis[row] != usize::MAX {
                continue;
            }
            let b = sf.rhs[row];
            if (b > 0.0 && a > 0.0) || (b == 0.0 && a != 0.0) {
                basis[row] = j;
                in_basis[j] = true;
                binv[row * m + row] = 1.0 / a;
                xb[row] = b / a;
            }
        }
        // Artificial columns for the remaining rows.
        for row in 0..m {
            if basis[row] == usize::MAX {
                let j = cols.len();
                cols.push(vec![(row as u32, 1.0)]);
                basis[row] = j;
                binv[row * m + row] = 1.0;
                xb[row] = sf.rhs[row];
            }
        }
        let n_total = cols.len();
        let mut in_basis_full = in_basis;
        in_basis_full.resize(n_total, false);
        for &j in &basis {
            in_basis_full[j] = true;
        }
        Simplex {
            m,
            n_structural: n,
            cols,
            rhs: sf.rhs.clone(),
            basis,
            in_basis: in_basis_full,
            binv,
            xb,
            art_banned: vec![false; n_total],
        }
    }

    fn n_artificials(&self) -> usize {
        self.cols.len() - self.n_structural
    }

    fn has_basic_artificial(&self) -> bool {
        self.basis.iter().any(|&j| j >= self.n_structural)
    }

    /// y = c_B' B^-1, skipping zero-cost basic rows.
    fn btran(&self, cost: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.binv[i * self.m..(i + 1) * self.m];
                for (yk, &bk) in y.iter_mut().zip(row) {
                    *yk += cb * bk;
                }
            }
        }
    }

    /// w = B^-1 a_j.
    fn ftran(&self, j: usize, w: &mut [f64]) {
        w.iter_mut().for_each(|v| *v = 0.0);
        for &(r, v) in &self.cols[j] {
            let r = r as usize;
            for i in 0..self.m {
                w[i] += v * self.binv[i * self.m + r];
            }
        }
    }

    fn price(&self, cost: &[f64], y: &[f64], phase2: bool, bland: bool) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (j, col) in self.cols.iter().enumerate() {
            if self.in_basis[j] {
                continue;
            }
            if j >= self.n_structural {
                // Artificials never re-enter; in phase 2 they are fixed out.
                continue;
            }
            let _ = phase2;
            let rc = cost[j] - col.iter().map(|&(r, v)| y[r as usize] * v).sum::<f64>();
            if rc < -OPTIMALITY_TOL {
                if bland {
                    return Some(j);
                }
                match best {
                    Some((b, _)) if rc >= b => {}
                    _ => best = Some((rc, j)),
                }
            }
        }
        best.map(|(_, j)| j)
    }

    /// Standard minimum-ratio test. In phase 2, rows still holding an
    /// artificial at value zero leave first (either pivot sign), so the
    /// original-problem feasibility is preserved.
    fn ratio_test(&self, w: &[f64], phase2: bool, bland: bool) -> Option<usize> {
        let mut best_row: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..self.m {
            let wi = w[i];
            let artificial_row = phase2 && self.basis[i] >= self.n_structural;
            let eligible = wi > PIVOT_TOL || (artificial_row && wi.abs() > PIVOT_TOL);
            if !eligible {
                continue;
            }
            let ratio = if artificial_row {
                0.0
            } else {
                self.xb[i].max(0.0) / wi
            };
            let better = match best_row {
                None => true,
                Some(p) => {
                    if ratio < best_ratio - 1e-12 {
                        true
                    } else if ratio > best_ratio + 1e-12 {
                        false
                    } else if bland {
                        self.basis[i] < self.basis[p]
                    } else {
                        // Prefer the larger pivot for stability, then the
                        // smaller basis index for determinism.
                        let cur = w[p].abs();
                        wi.abs() > cur + 1e-12
                            || (wi.abs() >= cur - 1e-12 && self.basis[i] < self.basis[p])
                    }
                }
            };
            if better {
                best_row = Some(i);
                best_ratio = ratio;
            }
        }
        best_row
    }

    fn pivot(&mut self, p: usize, q: usize, w: &[f64]) {
        let m = self.m;
        let wp = w[p];
        let leaving = self.basis[p];
        // Scale pivot row of B^-1 and xb.
        let inv = 1.0 / wp;
        {
            let row_p = &mut self.binv[p * m..(p + 1) * m];
            for v in row_p.iter_mut() {
                *v *= inv;
            }
        }
        let theta = self.xb[p].max(0.0) * inv;
        // Eliminate the entering column from all other rows.
        for i in 0..m {
            if i == p {
                continue;
            }
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            let (head, tail) = self.binv.split_at_mut(p.max(i) * m);
            let (row_i, row_p) = if i < p {
                (
                    &mut head[i * m..(i + 1) * m],
                    &tail[..m],
                )
            } else {
                (&mut tail[..m], &head[p * m..(p + 1) * m])
            };
            for (a, &b) in row_i.iter_mut().zip(row_p.iter()) {
                *a -= wi * b;
            }
            self.xb[i] -= wi * theta;
        }
        self.xb[p] = theta;
        self.basis[p] = q;
        self.in_basis[leaving] = false;
        self.in_basis[q] = true;
        if leaving >= self.n_structural {
            self.art_banned[leaving] = true;
        }
    }

    fn refresh_xb(&mut self) {
        let m = self.m;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.xb[i] = row.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        }
    }

    fn optimize(&mut self, cost: &[f64], phase2: bool) -> Result<Step, LpError> {
        let size = self.m + self.cols.len();
        let bland_after = 3 * size;
        let hard_cap = 50 * size + 10_000;
        let mut y = vec![0.0; self.m];
        let mut w = vec![0.0; self.m];
        let mut iter = 0usize;
        loop {
            iter += 1;
            if iter > hard_cap {
                return Err(LpError::IterationLimit(hard_cap));
            }
            if iter % REFRESH_INTERVAL == 0 {
                self.refresh_xb();
            }
            let mut bland = iter > bland_after;
            self.btran(cost, &mut y);
            let Some(q) = self.price(cost, &y, phase2, bland) else {
                return Ok(Step::Optimal);
            };
            self.ftran(q, &mut w);
            let Some(p) = self.ratio_test(&w, phase2, bland) else {
                return Ok(Step::Unbounded);
            };
            if w[p].abs() < BREAKDOWN_TOL {
                if bland {
                    return Err(LpError::NumericalBreakdown);
                }
                // Retry the whole step under Bland's rule before giving up.
                bland = true;
                let Some(q2) = self.price(cost, &y, phase2, bland) else {
                    return Ok(Step::Optimal);
                };
                self.ftran(q2, &mut w);
                let Some(p2) = self.ratio_test(&w, phase2, bland) else {
                    return Ok(Step::Unbounded);
                };
                if w[p2].abs() < BREAKDOWN_TOL {
                    return Err(LpError::NumericalBreakdown);
                }
                self.pivot(p2, q2, &w);
                continue;
            }
            self.pivot(p, q, &w);
        }
    }

    /// Pivots basic artificials out wherever a structural replacement column
    /// has a usable pivot element; rows without one are redundant and keep
    /// their artificial at value zero.
    fn drive_out_artificials(&mut self) {
        let mut w = vec![0.0; self.m];
        for p in 0..self.m {
            if self.basis[p] < self.n_structural {
                continue;
            }
            let mut replacement = None;
            for j in 0..self.n_structural {
                if self.in_basis[j] {
                    continue;
                }
                // (B^-1 A_j)_p without the full FTRAN.
                let alpha: f64 = self.cols[j]
                    .iter()
                    .map(|&(r, v)| self.binv[p * self.m + r as usize] * v)
                    .sum();
                if alpha.abs() > 1e-7 {
                    replacement = Some(j);
                    break;
                }
            }
            if let Some(j) = replacement {
                self.ftran(j, &mut w);
                self.pivot(p, j, &w);
            }
        }
    }
}

/// Solves an LP. Deterministic: identical inputs produce bit-identical
/// solutions.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    if p.n_rows == 0 {
        return solve_row_free(p);
    }
    let sf = expand(p);
    let mut sx = Simplex::new(&sf);
    let norm_b = sf.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let feas_threshold = FEASIBILITY_TOL * (1.0 + norm_b);

    if sx.n_artificials() > 0 {
        let mut cost1 = vec![0.0; sx.cols.len()];
        for c in cost1[sx.n_structural..].iter_mut() {
            *c = 1.0;
        }
        match sx.optimize(&cost1, false)? {
            Step::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
            Step::Optimal => {}
        }
        let infeas: f64 = sx
            .basis
            .iter()
            .zip(&sx.xb)
            .filter(|(&j, _)| j >= sx.n_structural)
            .map(|(_, &v)| v.max(0.0))
            .sum();
        if infeas > feas_threshold {
            let mut y = vec![0.0; sx.m];
            sx.btran(&cost1, &mut y);
            // Phase-I duals certify infeasibility; restore original row signs
            // and the orientation y'b > 0.
            let certificate: Vec<f64> = y
                .iter()
                .zip(&sf.flipped)
                .map(|(&v, &fl)| if fl { -v } else { v })
                .collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: vec![0.0; p.n_vars()],
                objective_value: f64::INFINITY,
                duals: Vec::new(),
                certificate,
            });
        }
        sx.drive_out_artificials();
    }

    let mut cost2 = vec![0.0; sx.cols.len()];
    cost2[..sx.n_structural].copy_from_slice(&sf.cost);
    let step = sx.optimize(&cost2, true)?;
    if matches!(step, Step::Unbounded) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            primal: vec![0.0; p.n_vars()],
            objective_value: f64::NEG_INFINITY,
            duals: Vec::new(),
            certificate: Vec::new(),
        });
    }

    // Guard against drift in the long pivot sequences of large instances.
    if sx.has_basic_artificial() {
        let stray: f64 = sx
            .basis
            .iter()
            .zip(&sx.xb)
            .filter(|(&j, _)| j >= sx.n_structural)
            .map(|(_, &v)| v.abs())
            .fold(0.0, f64::max);
        if stray > feas_threshold {
            return Err(LpError::NumericalBreakdown);
        }
    }

    let mut primal = vec![0.0; p.n_vars()];
    for (i, &j) in sx.basis.iter().enumerate() {
        if j < sx.n_structural {
            let (orig, sign) = sf.origin[j];
            primal[orig] += sign * sx.xb[i].max(0.0);
        }
    }
    let mut y = vec![0.0; sx.m];
    sx.btran(&cost2, &mut y);
    let duals: Vec<f64> = y
        .iter()
        .zip(&sf.flipped)
        .map(|(&v, &fl)| if fl { -v } else { v })
        .collect();
    let objective_value = p
        .objective
        .iter()
        .zip(&primal)
        .map(|(c, x)| c * x)
        .sum();

    if p.residual(&primal) > 10.0 * feas_threshold {
        return Err(LpError::NumericalBreakdown);
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        objective_value,
        duals,
        certificate: Vec::new(),
    })
}

/// LPs with no equality rows: each constrained variable sits at zero, and a
/// negative cost on any other direction is unbounded.
fn solve_row_free(p: &LpProblem) -> Result<LpSolution, LpError> {
    let unbounded = p
        .objective
        .iter()
        .enumerate()
        .any(|(j, &c)| c < -OPTIMALITY_TOL || (p.free[j] && c.abs() > OPTIMALITY_TOL));
    if unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            primal: vec![0.0; p.n_vars()],
            objective_value: f64::NEG_INFINITY,
            duals: Vec::new(),
            certificate: Vec::new(),
        });
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal: vec![0.0; p.n_vars()],
        objective_value: 0.0,
        duals: Vec::new(),
        certificate: Vec::new(),
    })
}

/// Phase-I feasibility value of the system `W y = rhs, y >= 0`:
///
/// `u = min 1'v+ + 1'v-  s.t.  W y + v+ - v- = rhs, y, v+, v- >= 0`.
///
/// Returns `(u, multipliers)` where the multipliers are the optimal duals of
/// this LP and satisfy `multipliers' rhs = u`. `u = 0` iff the system is
/// feasible.
pub fn solve_phase1_feasibility(
    recourse_matrix: &Mat,
    rhs: &[f64],
) -> Result<(f64, Vec<f64>), LpError> {
    let m = recourse_matrix.rows();
    if rhs.len() != m {
        return Err(LpError::InvalidProblem(format!(
            "rhs length {} does not match matrix rows {m}",
            rhs.len()
        )));
    }
    let n_y = recourse_matrix.cols();
    let n = n_y + 2 * m;
    let mut cols: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    for j in 0..n_y {
        let mut col = Vec::new();
        for i in 0..m {
            let v = recourse_matrix.get(i, j);
            if v != 0.0 {
                col.push((i as u32, v));
            }
        }
        cols.push(col);
    }
    for i in 0..m {
        cols.push(vec![(i as u32, 1.0)]);
    }
    for i in 0..m {
        cols.push(vec![(i as u32, -1.0)]);
    }
    let mut objective = vec![0.0; n];
    for c in objective[n_y..].iter_mut() {
        *c = 1.0;
    }
    let problem = LpProblem::from_columns(objective, m, cols, rhs.to_vec(), vec![false; n])?;
    let sol = solve_lp(&problem)?;
    debug_assert_eq!(sol.status, LpStatus::Optimal);
    Ok((sol.objective_value.max(0.0), sol.duals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_dense(
        c: Vec<f64>,
        rows: &[Vec<f64>],
        rhs: Vec<f64>,
        lower: &[f64],
    ) -> LpSolution {
        let p = LpProblem::from_dense(c, rows, rhs, lower).unwrap();
        solve_lp(&p).unwrap()
    }

    #[test]
    fn one_constraint_lp() {
        let s = solve_dense(
            vec![1.0, 1.0],
            &[vec![1.0, 1.0]],
            vec![1.0],
            &[0.0, 0.0],
        );
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-9);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sign_infeasible_equality() {
        let s = solve_dense(vec![0.0], &[vec![1.0]], vec![-1.0], &[0.0]);
        assert_eq!(s.status, LpStatus::Infeasible);
        let y = &s.certificate;
        assert!((y[0] + 1.0).abs() < 1e-9, "certificate {y:?}");
        // y'A <= 0 and y'b > 0.
        assert!(y[0] * 1.0 <= 1e-9);
        assert!(y[0] * -1.0 > 0.0);
    }

    #[test]
    fn single_bounded_ray() {
        let s = solve_dense(
            vec![-1.0, 0.0],
            &[vec![1.0, 1.0]],
            vec![2.0],
            &[0.0, 0.0],
        );
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value + 2.0).abs() < 1e-9);
        assert!((s.primal[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        // min -x1 with x1 - x2 = 0: the ray (1,1) is improving and feasible.
        let s = solve_dense(
            vec![-1.0, 0.0],
            &[vec![1.0, -1.0]],
            vec![0.0],
            &[0.0, 0.0],
        );
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variable_split() {
        // min -t s.t. t + s = -3, s >= 0, t free: optimum t = -3.
        let s = solve_dense(
            vec![-1.0, 0.0],
            &[vec![1.0, 1.0]],
            vec![-3.0],
            &[f64::NEG_INFINITY, 0.0],
        );
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] + 3.0).abs() < 1e-9);
        assert!((s.objective_value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn strong_duality_on_random_instances() {
        let mut rng = crate::sampling::RngStream::new(99, 0);
        let mut optimal_seen = 0;
        for _ in 0..300 {
            let n = 2 + rng.next_below(4) as usize;
            let m = 1 + rng.next_below(3) as usize;
            let c: Vec<f64> = (0..n).map(|_| (rng.next_below(11) as f64) - 5.0).collect();
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| (rng.next_below(11) as f64) - 5.0).collect())
                .collect();
            let rhs: Vec<f64> = (0..m).map(|_| (rng.next_below(11) as f64) - 5.0).collect();
            let p = LpProblem::from_dense(c, &rows, rhs, &vec![0.0; n]).unwrap();
            let s = solve_lp(&p).unwrap();
            match s.status {
                LpStatus::Optimal => {
                    optimal_seen += 1;
                    let yb: f64 = s.duals.iter().zip(p.rhs()).map(|(y, b)| y * b).sum();
                    assert!(
                        (s.objective_value - yb).abs()
                            <= 1e-7 * (1.0 + s.objective_value.abs()),
                        "duality gap: {} vs {yb}",
                        s.objective_value
                    );
                    assert!(p.residual(&s.primal) <= 1e-7 * (1.0 + 5.0));
                    // Dual feasibility on all columns.
                    let ya = p.left_mul(&s.duals);
                    for (j, (&cj, &yaj)) in p.objective().iter().zip(&ya).enumerate() {
                        assert!(cj - yaj >= -1e-7, "column {j}: rc {}", cj - yaj);
                    }
                }
                LpStatus::Infeasible => {
                    let ya = p.left_mul(&s.certificate);
                    assert!(ya.iter().all(|&v| v <= 1e-9), "certificate yA: {ya:?}");
                    let yb: f64 = s
                        .certificate
                        .iter()
                        .zip(p.rhs())
                        .map(|(y, b)| y * b)
                        .sum();
                    assert!(yb > 0.0, "certificate yb = {yb}");
                }
                LpStatus::Unbounded => {}
            }
        }
        assert!(optimal_seen > 50, "too few optimal instances: {optimal_seen}");
    }

    #[test]
    fn deterministic_bitwise() {
        let c = vec![1.0, -2.0, 0.5, 0.0];
        let rows = vec![
            vec![1.0, 1.0, 0.0, 1.0],
            vec![0.0, 1.0, 2.0, -1.0],
        ];
        let rhs = vec![4.0, 3.0];
        let p = LpProblem::from_dense(c, &rows, rhs, &[0.0; 4]).unwrap();
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
        for (x, y) in a.primal.iter().zip(&b.primal) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.duals.iter().zip(&b.duals) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn rejects_nan_and_inconsistent_dims() {
        assert!(LpProblem::from_dense(
            vec![f64::NAN],
            &[vec![1.0]],
            vec![1.0],
            &[0.0]
        )
        .is_err());
        assert!(LpProblem::from_dense(
            vec![1.0, 1.0],
            &[vec![1.0]],
            vec![1.0],
            &[0.0, 0.0]
        )
        .is_err());
        assert!(LpProblem::from_dense(vec![1.0], &[vec![1.0]], vec![1.0], &[-1.0]).is_err());
    }

    #[test]
    fn phase1_feasibility_examples() {
        let w = Mat::from_rows(&[vec![1.0]]).unwrap();
        let (v, _) = solve_phase1_feasibility(&w, &[3.0]).unwrap();
        assert!(v.abs() < 1e-9);

        let (v, mult) = solve_phase1_feasibility(&w, &[-2.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        assert!((mult[0] + 1.0).abs() < 1e-9);
        assert!((mult[0] * -2.0 - v).abs() < 1e-9);

        let w2 = Mat::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let (v, _) = solve_phase1_feasibility(&w2, &[0.0]).unwrap();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn phase1_value_zero_iff_lp_feasible() {
        let mut rng = crate::sampling::RngStream::new(123, 0);
        for _ in 0..200 {
            let n = 1 + rng.next_below(3) as usize;
            let m = 1 + rng.next_below(2) as usize;
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| (rng.next_below(7) as f64) - 3.0).collect())
                .collect();
            let rhs: Vec<f64> = (0..m).map(|_| (rng.next_below(7) as f64) - 3.0).collect();
            let w = Mat::from_rows(&rows).unwrap();
            let (u, mult) = solve_phase1_feasibility(&w, &rhs).unwrap();
            let p = LpProblem::from_dense(vec![0.0; n], &rows, rhs.clone(), &vec![0.0; n])
                .unwrap();
            let s = solve_lp(&p).unwrap();
            if u < 1e-9 {
                assert_eq!(s.status, LpStatus::Optimal);
            } else {
                assert_eq!(s.status, LpStatus::Infeasible);
            }
            let mr: f64 = mult.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            assert!((mr - u).abs() <= 1e-7 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn degenerate_zero_rhs_rows() {
        // Redundant zero row plus a normal row.
        let s = solve_dense(
            vec![1.0, 2.0],
            &[vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![0.0, 1.0],
            &[0.0, 0.0],
        );
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_rows_lp() {
        let p = LpProblem::from_dense(vec![1.0, 0.0], &[], vec![], &[0.0, 0.0]).unwrap();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective_value, 0.0);
        let p = LpProblem::from_dense(vec![-1.0], &[], vec![], &[0.0]).unwrap();
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }
}
