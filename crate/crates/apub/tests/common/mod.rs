//! Shared helpers for the integration suites: an independent basic-feasible-
//! solution enumeration oracle for tiny LPs, recession-ray checks, feasible-
//! point sampling around instance anchors, and a thread-CPU clock for the
//! scalability measurements.

#![allow(dead_code)]

use apub::lp::solve_phase1_feasibility;
use apub::model::TwoStageProblem;
use apub::sampling::RngStream;

/// Solves the square system `B z = rhs` by Gaussian elimination with partial
/// pivoting. Returns `None` when the basis matrix is numerically singular.
fn solve_square(b: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = b.iter().cloned().collect();
    let mut x = rhs.to_vec();
    for col in 0..n {
        let (pivot_row, pivot_val) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|l, r| l.1.total_cmp(&r.1))?;
        if pivot_val < 1e-9 {
            return None;
        }
        a.swap(col, pivot_row);
        x.swap(col, pivot_row);
        let inv = 1.0 / a[col][col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col] * inv;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[r][k] -= f * v;
            }
            x[r] -= f * x[col];
        }
    }
    Some((0..n).map(|i| x[i] / a[i][i]).collect())
}

/// Minimum objective over all basic feasible solutions of
/// `min c'x s.t. rows x = rhs, x >= 0`, or `None` if no feasible basis
/// exists. Exhaustive over column subsets, so only for tiny instances.
pub fn enumerate_best_bfs(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Option<f64> {
    let n = c.len();
    let m = rows.len();
    if m == 0 {
        return Some(0.0);
    }
    if m > n {
        return None;
    }
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let basis: Vec<Vec<f64>> = (0..m)
            .map(|i| subset.iter().map(|&j| rows[i][j]).collect())
            .collect();
        if let Some(xb) = solve_square(&basis, rhs) {
            if xb.iter().all(|&v| v >= -1e-9) {
                let obj: f64 = subset.iter().zip(&xb).map(|(&j, &v)| c[j] * v).sum();
                best = Some(match best {
                    Some(b) => b.min(obj),
                    None => obj,
                });
            }
        }
        // Next m-subset of {0..n-1} in lexicographic order.
        let mut i = m;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + n - m {
                subset[i] += 1;
                for k in i + 1..m {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Minimum of `c'd` over the normalized recession cone
/// `{d : A d = 0, sum d + s = 1, d, s >= 0}`. A value below `-1e-9` proves
/// the original LP (if feasible) unbounded; a nonnegative value proves it
/// bounded.
pub fn ray_minimum(c: &[f64], rows: &[Vec<f64>], n: usize) -> f64 {
    let mut aug_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = r.clone();
            v.push(0.0);
            v
        })
        .collect();
    aug_rows.push(vec![1.0; n + 1]);
    let mut rhs = vec![0.0; rows.len()];
    rhs.push(1.0);
    let mut cost = c.to_vec();
    cost.push(0.0);
    enumerate_best_bfs(&cost, &aug_rows, &rhs).expect("normalized ray LP is always feasible")
}

/// Random small instances for the cross-oracle suites, cycling over a fixed
/// level grid.
pub const ALPHA_CYCLE: [f64; 5] = [0.1, 0.3, 0.5, 0.8, 1.0];

/// Finds points near the anchor that stay first-stage feasible with feasible
/// recourse in every scenario; falls back to the anchor itself.
pub fn feasible_points_near_anchor(
    problem: &TwoStageProblem,
    anchor: &[f64],
    count: usize,
    rng: &mut RngStream,
) -> Vec<Vec<f64>> {
    let dim_x = anchor.len() / 2;
    let mut out = Vec::with_capacity(count);
    'outer: for _ in 0..count {
        let mut delta = 0.10;
        for _ in 0..8 {
            let mut x = anchor.to_vec();
            for j in 0..dim_x {
                let ub = anchor[j] + anchor[dim_x + j];
                let shift = delta * (1.0 + anchor[j].abs()) * (2.0 * rng.next_f64() - 1.0);
                x[j] = (anchor[j] + shift).clamp(0.0, ub);
                x[dim_x + j] = ub - x[j];
            }
            if recourse_feasible_everywhere(problem, &x) {
                out.push(x);
                continue 'outer;
            }
            delta *= 0.5;
        }
        out.push(anchor.to_vec());
    }
    out
}

pub fn recourse_feasible_everywhere(problem: &TwoStageProblem, x: &[f64]) -> bool {
    problem.scenarios.iter().all(|s| {
        let rhs = s.recourse_rhs(x);
        let (u, _) = solve_phase1_feasibility(&s.w, &rhs).expect("phase-1 LP solves");
        u <= 1e-7 * (1.0 + rhs.iter().fold(0.0f64, |a, &v| a.max(v.abs())))
    })
}

/// CPU time of the calling thread, immune to co-scheduled load.
pub fn thread_cpu_time_secs() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0);
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Compensated mean, used where acceptance thresholds are near machine
/// precision.
pub fn kahan_mean(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum / values.len() as f64
}
