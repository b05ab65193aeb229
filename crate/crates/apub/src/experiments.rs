//! Instance generators and the Monte Carlo replication harness: the
//! day-ahead charging example, the generated product-mix family, the
//! Gamma-mean bound study, bootstrap-size convergence runs, and plot-ready
//! CSV/JSON emission. All randomness flows through substreams derived from a
//! single master seed, so every experiment is replayable byte for byte.

use crate::bounds::{
    apub_bootstrap, efron_bootstrap, kahan_mean, normal_ucb, var_of_samples, BoundError,
    SampleSet,
};
use crate::lshaped::{solve_apub_lshaped, solve_saa_lshaped, LShapedConfig};
use crate::matrix::Mat;
use crate::model::{evaluate_out_of_sample, ModelError, ProblemMeta, Scenario, TwoStageProblem};
use crate::sampling::{
    derive_substream, draw_bootstrap_weights, sample_gamma, sample_scenario_mixture,
    BootstrapWeights, GumbelMixtureSpec, RngStream,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Which instance family an experiment draws from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InstanceKind {
    EvCharging,
    ProductMix {
        n_products: usize,
        n_departments: usize,
    },
    GammaBounds,
}

/// Harness configuration. `alpha_grid` lists tail levels in (0, 1], sorted
/// ascending; the entry `1.0` is the nominal-level-zero point and routes to
/// the plain sample-average solver. `m_grid`/`n_grid` only apply to the
/// convergence and bound studies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub m_bootstrap: usize,
    pub alpha_grid: Vec<f64>,
    pub replications: usize,
    pub instance: InstanceKind,
    #[serde(default)]
    pub m_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_train == 0 || self.replications == 0 {
            return Err(ExperimentError::InvalidConfig(
                "n_train and replications must be positive".into(),
            ));
        }
        if self.alpha_grid.is_empty() {
            return Err(ExperimentError::InvalidConfig("empty alpha grid".into()));
        }
        if self
            .alpha_grid
            .iter()
            .any(|&a| !(a > 0.0 && a <= 1.0) || !a.is_finite())
        {
            return Err(ExperimentError::InvalidConfig(
                "alpha grid entries must lie in (0, 1]".into(),
            ));
        }
        if self.alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::InvalidConfig(
                "alpha grid must be strictly increasing".into(),
            ));
        }
        if let InstanceKind::ProductMix {
            n_products,
            n_departments,
        } = self.instance
        {
            if n_products == 0 || n_departments == 0 {
                return Err(ExperimentError::InvalidConfig(
                    "product mix dimensions must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One (replication, alpha) record of the out-of-sample study.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationResult {
    pub alpha: f64,
    pub replication: usize,
    pub optimal_value: f64,
    pub x_opt: Vec<f64>,
    pub oos_cost: f64,
    pub covered: bool,
    pub oos_infeasible: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureRecord {
    pub replication: usize,
    pub alpha: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub results: Vec<ReplicationResult>,
    pub failures: Vec<FailureRecord>,
}

// ---------------------------------------------------------------------------
// Day-ahead charging instance
// ---------------------------------------------------------------------------

const EV_PRICE: f64 = 1.0;
const EV_BUDGET: f64 = 12.0;
const EV_SHORTFALL_PENALTY: f64 = 2.5;
const EV_P_REGULAR: f64 = 0.7;

/// Day-ahead purchasing with real-time recourse: first stage
/// `min x  s.t.  x <= 12, x >= 0` (the unit price is folded into the
/// objective), second stage
/// `min 2.5 u + w y  s.t.  u + y >= d - x, w y <= 12 - x, u, y >= 0`
/// in equality form with two slack columns. Demand and the real-time price
/// are uniform, doubled in the rare worst-case regime.
#[derive(Debug, Clone)]
pub struct EvInstance {
    pub c: Vec<f64>,
    pub a: Mat,
    pub b: Vec<f64>,
}

pub fn make_ev_instance() -> EvInstance {
    EvInstance {
        c: vec![EV_PRICE, 0.0],
        a: Mat::from_rows(&[vec![1.0, 1.0]]).unwrap(),
        b: vec![EV_BUDGET],
    }
}

impl EvInstance {
    /// Scenario for a given demand and real-time price. Variables are
    /// `(shortfall u, real-time purchase y, demand slack, budget slack)`.
    pub fn scenario_from(&self, demand: f64, price: f64) -> Scenario {
        Scenario {
            q: vec![EV_SHORTFALL_PENALTY, price, 0.0, 0.0],
            h: vec![demand, EV_BUDGET],
            t: Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            w: Mat::from_rows(&[
                vec![1.0, 1.0, -1.0, 0.0],
                vec![0.0, price, 0.0, 1.0],
            ])
            .unwrap(),
        }
    }

    pub fn sample_scenario(&self, rng: &mut RngStream) -> Scenario {
        let regular = rng.next_f64() < EV_P_REGULAR;
        let demand = rng.uniform(5.0, 15.0);
        let price = rng.uniform(0.5, 1.2);
        if regular {
            self.scenario_from(demand, price)
        } else {
            self.scenario_from(2.0 * demand, 2.0 * price)
        }
    }

    pub fn problem(&self, scenarios: Vec<Scenario>, seed: u64) -> TwoStageProblem {
        TwoStageProblem::new(
            self.c.clone(),
            self.a.clone(),
            self.b.clone(),
            scenarios,
            ProblemMeta {
                name: "ev_charging".into(),
                seed,
            },
        )
        .expect("instance dimensions are consistent")
    }
}

// ---------------------------------------------------------------------------
// Product-mix instance family
// ---------------------------------------------------------------------------

const PM_STREAM_INSTANCE: u64 = 0x5052_4F44;
const PM_X_MAX: f64 = 100.0;

/// Contracted production with uncertain labor: first stage chooses product
/// quantities `x_i` (boxed at 100 with slack columns), the second stage
/// covers the labor requirement `sum_i t_ij x_i` of each department with
/// permanent employees `z_j` (which must total the turnout `h1`) and
/// temporary workers `y_j` of efficiency `w_j` (capped at `h2`). The random
/// scenario is `(h1, h2, q, w)` drawn from a two-regime Gumbel mixture.
#[derive(Debug, Clone)]
pub struct ProductMixInstance {
    pub n_products: usize,
    pub n_departments: usize,
    pub c: Vec<f64>,
    pub a: Mat,
    pub b: Vec<f64>,
    pub unit_profit: Vec<f64>,
    pub labor: Mat,
    pub mixture: GumbelMixtureSpec,
}

/// Deterministic generator keyed by `(n_products, n_departments, seed)`.
/// The distribution defaults are documented in the README; they are the
/// repo's self-contained stand-in for unpublished benchmark data.
pub fn make_product_mix_instance(
    n_products: usize,
    n_departments: usize,
    seed: u64,
) -> ProductMixInstance {
    assert!(n_products > 0 && n_departments > 0);
    let mut rng = RngStream::new(seed, PM_STREAM_INSTANCE);
    let unit_profit: Vec<f64> = (0..n_products).map(|_| rng.uniform(-6.0, -2.0)).collect();
    let labor_rows: Vec<Vec<f64>> = (0..n_products)
        .map(|_| (0..n_departments).map(|_| rng.uniform(0.5, 2.0)).collect())
        .collect();
    let labor = Mat::from_rows(&labor_rows).unwrap();

    let j = n_departments;
    let mut bounds_regular = vec![(60.0, 100.0), (40.0, 80.0)];
    let mut bounds_worst = vec![(20.0, 50.0), (20.0, 40.0)];
    bounds_regular.extend(std::iter::repeat((6.0, 12.0)).take(j));
    bounds_worst.extend(std::iter::repeat((12.0, 30.0)).take(j));
    bounds_regular.extend(std::iter::repeat((0.7, 1.1)).take(j));
    bounds_worst.extend(std::iter::repeat((0.3, 0.8)).take(j));
    let mixture = GumbelMixtureSpec {
        p_regular: 0.9,
        lambda_regular: 1.5,
        lambda_worst: 3.0,
        bounds_regular,
        bounds_worst,
    };
    mixture.validate().expect("mixture defaults are valid");

    // First stage: x_i + slack_i = X_MAX.
    let d = 2 * n_products;
    let mut c = vec![0.0; d];
    c[..n_products].copy_from_slice(&unit_profit);
    let mut a = Mat::zeros(n_products, d);
    for i in 0..n_products {
        a.set(i, i, 1.0);
        a.set(i, n_products + i, 1.0);
    }
    ProductMixInstance {
        n_products,
        n_departments,
        c,
        a,
        b: vec![PM_X_MAX; n_products],
        unit_profit,
        labor,
        mixture,
    }
}

impl ProductMixInstance {
    /// Scenario from an `(h1, h2, q_1..q_J, w_1..w_J)` draw. Variables are
    /// `(y_1..y_J, z_1..z_J, demand surplus u_1..u_J, capacity slack)`.
    pub fn scenario_from(&self, draw: &[f64]) -> Scenario {
        let jn = self.n_departments;
        debug_assert_eq!(draw.len(), 2 + 2 * jn);
        let h1 = draw[0];
        let h2 = draw[1];
        let q_j = &draw[2..2 + jn];
        let w_j = &draw[2 + jn..];
        let n_y = 3 * jn + 1;
        let rows = jn + 2;
        let d = 2 * self.n_products;

        let mut w = Mat::zeros(rows, n_y);
        let mut t = Mat::zeros(rows, d);
        let mut q = vec![0.0; n_y];
        let mut h = vec![0.0; rows];
        for dept in 0..jn {
            w.set(dept, dept, w_j[dept]); // temporary workers
            w.set(dept, jn + dept, 1.0); // permanent employees
            w.set(dept, 2 * jn + dept, -1.0); // surplus labor
            q[dept] = q_j[dept];
            for i in 0..self.n_products {
                // h - Tx must equal the labor requirement, so T carries the
                // negated coefficients.
                t.set(dept, i, -self.labor.get(i, dept));
            }
        }
        // All permanent employees are assigned: sum z_j = h1.
        for dept in 0..jn {
            w.set(jn, jn + dept, 1.0);
        }
        h[jn] = h1;
        // Temporary hiring capacity: sum y_j + slack = h2.
        for dept in 0..jn {
            w.set(jn + 1, dept, 1.0);
        }
        w.set(jn + 1, 3 * jn, 1.0);
        h[jn + 1] = h2;

        Scenario { q, h, t, w }
    }

    pub fn sample_scenario(&self, rng: &mut RngStream) -> Scenario {
        let draw = sample_scenario_mixture(&self.mixture, rng)
            .expect("mixture spec validated at construction");
        self.scenario_from(&draw)
    }

    pub fn problem(&self, scenarios: Vec<Scenario>, seed: u64) -> TwoStageProblem {
        TwoStageProblem::new(
            self.c.clone(),
            self.a.clone(),
            self.b.clone(),
            scenarios,
            ProblemMeta {
                name: format!(
                    "product_mix_{}x{}",
                    self.n_products, self.n_departments
                ),
                seed,
            },
        )
        .expect("instance dimensions are consistent")
    }
}

// ---------------------------------------------------------------------------
// Random test instances
// ---------------------------------------------------------------------------

/// Small random two-stage instance for cross-oracle testing, together with
/// an interior first-stage anchor whose recourse is feasible in every
/// scenario. The recourse matrix is `[G | I]`, so infeasible first-stage
/// points exist and feasibility cuts get exercised.
pub fn make_random_instance(
    dim_x: usize,
    n_scenarios: usize,
    rng: &mut RngStream,
) -> (TwoStageProblem, Vec<f64>) {
    let d = 2 * dim_x; // x plus box slacks
    let box_ub: Vec<f64> = (0..dim_x)
        .map(|_| 1.0 + rng.next_below(5) as f64)
        .collect();
    let mut c = vec![0.0; d];
    for ci in c.iter_mut().take(dim_x) {
        *ci = rng.next_below(7) as f64 - 3.0;
    }
    let mut a = Mat::zeros(dim_x, d);
    for i in 0..dim_x {
        a.set(i, i, 1.0);
        a.set(i, dim_x + i, 1.0);
    }
    let x0: Vec<f64> = box_ub.iter().map(|&u| u * rng.uniform(0.2, 0.8)).collect();
    let mut anchor = vec![0.0; d];
    for i in 0..dim_x {
        anchor[i] = x0[i];
        anchor[dim_x + i] = box_ub[i] - x0[i];
    }

    let scenarios: Vec<Scenario> = (0..n_scenarios)
        .map(|_| {
            let m = 1 + rng.next_below(2) as usize;
            let k = 1 + rng.next_below(3) as usize;
            let n_y = k + m;
            let mut w = Mat::zeros(m, n_y);
            for i in 0..m {
                for jj in 0..k {
                    w.set(i, jj, rng.next_below(7) as f64 - 3.0);
                }
                w.set(i, k + i, 1.0);
            }
            let mut q = vec![0.0; n_y];
            for qi in q.iter_mut().take(k) {
                *qi = 0.5 + rng.next_below(5) as f64;
            }
            for qi in q.iter_mut().skip(k) {
                *qi = rng.next_below(3) as f64;
            }
            let mut t = Mat::zeros(m, d);
            for i in 0..m {
                for jj in 0..dim_x {
                    t.set(i, jj, rng.next_below(5) as f64 - 2.0);
                }
            }
            // Anchor the right-hand side so the recourse is feasible (with
            // interior y) at x0.
            let y0: Vec<f64> = (0..n_y).map(|_| rng.uniform(0.5, 2.0)).collect();
            let wy = w.mul_vec(&y0);
            let tx = t.mul_vec(&anchor);
            let h: Vec<f64> = wy.iter().zip(&tx).map(|(a, b)| a + b).collect();
            Scenario { q, h, t, w }
        })
        .collect();
    let problem = TwoStageProblem::new(
        c,
        a,
        box_ub,
        scenarios,
        ProblemMeta {
            name: "random".into(),
            seed: 0,
        },
    )
    .expect("random instance is dimensionally consistent");
    (problem, anchor)
}

// ---------------------------------------------------------------------------
// Replication harness
// ---------------------------------------------------------------------------

enum Sampler {
    Ev(EvInstance),
    Pm(Box<ProductMixInstance>),
}

impl Sampler {
    fn from_config(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        match cfg.instance {
            InstanceKind::EvCharging => Ok(Sampler::Ev(make_ev_instance())),
            InstanceKind::ProductMix {
                n_products,
                n_departments,
            } => Ok(Sampler::Pm(Box::new(make_product_mix_instance(
                n_products,
                n_departments,
                cfg.master_seed,
            )))),
            InstanceKind::GammaBounds => Err(ExperimentError::InvalidConfig(
                "the bound study is not a two-stage instance".into(),
            )),
        }
    }

    fn sample(&self, rng: &mut RngStream) -> Scenario {
        match self {
            Sampler::Ev(i) => i.sample_scenario(rng),
            Sampler::Pm(i) => i.sample_scenario(rng),
        }
    }

    fn problem(&self, scenarios: Vec<Scenario>, seed: u64) -> TwoStageProblem {
        match self {
            Sampler::Ev(i) => i.problem(scenarios, seed),
            Sampler::Pm(i) => i.problem(scenarios, seed),
        }
    }
}

/// Runs the full out-of-sample study: for each replication, a training set
/// from substream `(seed, r)` and a test set from `(seed, R + r)`; each grid
/// level is solved on the same training data and bootstrap draws, with the
/// level `1.0` routed to the sample-average solver. Solver failures mark the
/// affected (replication, level) pair failed instead of aborting the run.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let sampler = Sampler::from_config(cfg)?;
    let r_total = cfg.replications;
    let per_rep: Vec<(Vec<ReplicationResult>, Vec<FailureRecord>)> = (0..r_total)
        .into_par_iter()
        .map(|rep| run_one_replication(cfg, &sampler, rep))
        .collect();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (mut res, mut fails) in per_rep {
        results.append(&mut res);
        failures.append(&mut fails);
    }
    sort_results(&mut results);
    Ok(RunOutput { results, failures })
}

fn sort_results(results: &mut [ReplicationResult]) {
    results.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(a.replication.cmp(&b.replication))
    });
}

fn run_one_replication(
    cfg: &ExperimentConfig,
    sampler: &Sampler,
    rep: usize,
) -> (Vec<ReplicationResult>, Vec<FailureRecord>) {
    let mut rng = derive_substream(cfg.master_seed, rep as u64);
    let train: Vec<Scenario> = (0..cfg.n_train).map(|_| sampler.sample(&mut rng)).collect();
    let weights: Vec<BootstrapWeights> = (0..cfg.m_bootstrap)
        .map(|_| draw_bootstrap_weights(cfg.n_train, &mut rng))
        .collect();
    let mut test_rng = derive_substream(cfg.master_seed, (cfg.replications + rep) as u64);
    let test: Vec<Scenario> = (0..cfg.n_test)
        .map(|_| sampler.sample(&mut test_rng))
        .collect();
    let problem = sampler.problem(train, cfg.master_seed);
    let config = LShapedConfig::default();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for &alpha in &cfg.alpha_grid {
        let solved = if alpha >= 1.0 {
            solve_saa_lshaped(&problem, &config)
        } else {
            solve_apub_lshaped(&problem, alpha, &weights, &config)
        };
        match solved {
            Ok(out) => {
                match evaluate_out_of_sample(&problem.c, &problem.a, &problem.b, &out.x, &test)
                {
                    Ok(report) => {
                        let oos = report.mean_feasible_cost.unwrap_or(report.mean_cost);
                        results.push(ReplicationResult {
                            alpha,
                            replication: rep,
                            optimal_value: out.value,
                            x_opt: out.x,
                            oos_cost: oos,
                            covered: out.value >= oos,
                            oos_infeasible: report.infeasible,
                        });
                    }
                    Err(e) => failures.push(FailureRecord {
                        replication: rep,
                        alpha,
                        error: e.to_string(),
                    }),
                }
            }
            Err(e) => failures.push(FailureRecord {
                replication: rep,
                alpha,
                error: e.to_string(),
            }),
        }
    }
    (results, failures)
}

/// Per-level aggregate of the replication results.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub mean_oos: f64,
    pub p10: f64,
    pub p90: f64,
    pub extreme_points: Vec<f64>,
    pub coverage_rate: f64,
    pub mean_optval: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    pub per_alpha: Vec<AlphaSummary>,
    /// Grid level with the smallest mean out-of-sample cost (the "star").
    pub best_alpha: f64,
}

/// Aggregates per level: mean/percentile band of the out-of-sample cost,
/// points outside the band, and the empirical coverage rate.
pub fn summarize(results: &[ReplicationResult]) -> Result<SummaryReport, ExperimentError> {
    if results.is_empty() {
        return Err(ExperimentError::InvalidConfig(
            "cannot summarize an empty result set".into(),
        ));
    }
    let mut alphas: Vec<f64> = results.iter().map(|r| r.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let mut per_alpha = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let group: Vec<&ReplicationResult> =
            results.iter().filter(|r| r.alpha == alpha).collect();
        let oos: Vec<f64> = group.iter().map(|r| r.oos_cost).collect();
        let p10 = var_of_samples(&oos, 0.9)?;
        let p90 = var_of_samples(&oos, 0.1)?;
        let extreme_points: Vec<f64> = {
            let mut pts: Vec<f64> = oos
                .iter()
                .copied()
                .filter(|&v| v < p10 || v > p90)
                .collect();
            pts.sort_by(f64::total_cmp);
            pts
        };
        let coverage_rate =
            group.iter().filter(|r| r.covered).count() as f64 / group.len() as f64;
        per_alpha.push(AlphaSummary {
            alpha,
            mean_oos: kahan_mean(&oos),
            p10,
            p90,
            extreme_points,
            coverage_rate,
            mean_optval: kahan_mean(&group.iter().map(|r| r.optimal_value).collect::<Vec<_>>()),
            replications: group.len(),
        });
    }
    let best_alpha = per_alpha
        .iter()
        .min_by(|a, b| a.mean_oos.total_cmp(&b.mean_oos))
        .map(|s| s.alpha)
        .unwrap();
    Ok(SummaryReport {
        per_alpha,
        best_alpha,
    })
}

// ---------------------------------------------------------------------------
// Gamma-mean bound study
// ---------------------------------------------------------------------------

const GAMMA_SHAPE: f64 = 2.0;
const GAMMA_SCALE: f64 = 1.0;
/// Population mean of the Gamma(2, 1) study distribution.
pub const GAMMA_TRUE_MEAN: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct GammaBoundRow {
    pub method: &'static str,
    pub n: usize,
    pub alpha: f64,
    pub replication: usize,
    pub bound: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaMethodSummary {
    pub method: &'static str,
    pub n: usize,
    pub alpha: f64,
    pub coverage: f64,
    pub mean_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaStudyOutput {
    pub rows: Vec<GammaBoundRow>,
    pub summary: Vec<GammaMethodSummary>,
}

/// Coverage study of the three mean upper bounds on Gamma(2, 1) data.
/// For each `(n, replication)` one sample is drawn from substream
/// `(seed, n_index * R + replication)` and all methods and levels are
/// evaluated on it; the bootstrap methods then consume the same stream in
/// level order (percentile first, then tail-average).
pub fn run_gamma_bound_study(
    cfg: &ExperimentConfig,
    n_grid: &[usize],
) -> Result<GammaStudyOutput, ExperimentError> {
    cfg.validate()?;
    if n_grid.is_empty() || n_grid.iter().any(|&n| n < 2) {
        return Err(ExperimentError::InvalidConfig(
            "the bound study needs sample sizes of at least 2".into(),
        ));
    }
    let r_total = cfg.replications;
    let jobs: Vec<(usize, usize)> = n_grid
        .iter()
        .enumerate()
        .flat_map(|(ni, &n)| (0..r_total).map(move |rep| (ni * r_total + rep, n)))
        .collect();
    let rows: Vec<Vec<GammaBoundRow>> = jobs
        .par_iter()
        .map(|&(stream_idx, n)| {
            let rep = stream_idx % r_total;
            let mut rng = derive_substream(cfg.master_seed, stream_idx as u64);
            let values: Vec<f64> = (0..n)
                .map(|_| sample_gamma(GAMMA_SHAPE, GAMMA_SCALE, &mut rng))
                .collect();
            let sample = SampleSet::new(values).expect("gamma draws are finite");
            let mut out = Vec::with_capacity(3 * cfg.alpha_grid.len());
            for &alpha in &cfg.alpha_grid {
                let push = |out: &mut Vec<GammaBoundRow>, method, bound: f64| {
                    out.push(GammaBoundRow {
                        method,
                        n,
                        alpha,
                        replication: rep,
                        bound,
                        covered: bound >= GAMMA_TRUE_MEAN,
                    });
                };
                if alpha < 1.0 {
                    let nb = normal_ucb(&sample, alpha).expect("n >= 2");
                    push(&mut out, "normal", nb);
                    let eb = efron_bootstrap(&sample, alpha, cfg.m_bootstrap, &mut rng)
                        .expect("m >= 2");
                    push(&mut out, "efron", eb);
                }
                let ab = apub_bootstrap(&sample, alpha, cfg.m_bootstrap, &mut rng)
                    .expect("m >= 2");
                push(&mut out, "apub", ab.value);
            }
            out
        })
        .collect();
    let mut flat: Vec<GammaBoundRow> = rows.into_iter().flatten().collect();
    flat.sort_by(|a, b| {
        a.method
            .cmp(b.method)
            .then(a.n.cmp(&b.n))
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.replication.cmp(&b.replication))
    });
    let mut summary = Vec::new();
    for method in ["apub", "efron", "normal"] {
        for &n in n_grid {
            for &alpha in &cfg.alpha_grid {
                let group: Vec<&GammaBoundRow> = flat
                    .iter()
                    .filter(|r| r.method == method && r.n == n && r.alpha == alpha)
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let bounds: Vec<f64> = group.iter().map(|r| r.bound).collect();
                summary.push(GammaMethodSummary {
                    method,
                    n,
                    alpha,
                    coverage: group.iter().filter(|r| r.covered).count() as f64
                        / group.len() as f64,
                    mean_bound: kahan_mean(&bounds),
                });
            }
        }
    }
    Ok(GammaStudyOutput { rows: flat, summary })
}

// ---------------------------------------------------------------------------
// Bootstrap-size convergence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct MConvergenceRow {
    pub m: usize,
    pub replication: usize,
    pub optimal_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MConvergenceOutput {
    pub rows: Vec<MConvergenceRow>,
    /// Standard deviation of the optimal values per bootstrap size.
    pub sd_per_m: Vec<(usize, f64)>,
}

/// Optimal-value spread as the number of bootstrap samples grows: one fixed
/// training set (substream `(seed, 0)`), `replications` independent weight
/// draws per grid size (substream `(seed, 1 + m_index * R + replication)`),
/// solved at the first grid level. The across-replication spread at a given
/// `m` then isolates the bootstrap-approximation noise.
pub fn run_m_convergence(
    cfg: &ExperimentConfig,
    m_grid: &[usize],
) -> Result<MConvergenceOutput, ExperimentError> {
    cfg.validate()?;
    if m_grid.is_empty() || m_grid.iter().any(|&m| m < 2) {
        return Err(ExperimentError::InvalidConfig(
            "m grid entries must be at least 2".into(),
        ));
    }
    let sampler = Sampler::from_config(cfg)?;
    let alpha = cfg.alpha_grid[0];
    let mut rng = derive_substream(cfg.master_seed, 0);
    let train: Vec<Scenario> = (0..cfg.n_train).map(|_| sampler.sample(&mut rng)).collect();
    let problem = sampler.problem(train, cfg.master_seed);
    let r_total = cfg.replications;
    let jobs: Vec<(usize, usize, usize)> = m_grid
        .iter()
        .enumerate()
        .flat_map(|(mi, &m)| (0..r_total).map(move |rep| (mi, m, rep)))
        .collect();
    let mut rows: Vec<MConvergenceRow> = jobs
        .par_iter()
        .map(|&(mi, m, rep)| {
            let mut wrng =
                derive_substream(cfg.master_seed, (1 + mi * r_total + rep) as u64);
            let weights: Vec<BootstrapWeights> = (0..m)
                .map(|_| draw_bootstrap_weights(cfg.n_train, &mut wrng))
                .collect();
            let out = solve_apub_lshaped(&problem, alpha, &weights, &LShapedConfig::default())
                .expect("convergence-study instances are well posed");
            MConvergenceRow {
                m,
                replication: rep,
                optimal_value: out.value,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.m.cmp(&b.m).then(a.replication.cmp(&b.replication)));
    let sd_per_m = m_grid
        .iter()
        .map(|&m| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.m == m)
                .map(|r| r.optimal_value)
                .collect();
            let mean = kahan_mean(&vals);
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len().max(2) - 1) as f64;
            (m, var.sqrt())
        })
        .collect();
    Ok(MConvergenceOutput { rows, sd_per_m })
}

// ---------------------------------------------------------------------------
// CSV / JSON emission
// ---------------------------------------------------------------------------

pub fn replications_csv(results: &[ReplicationResult]) -> String {
    let mut out = String::from("alpha,replication,optval,oos,covered\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.alpha, r.replication, r.optimal_value, r.oos_cost, r.covered
        ));
    }
    out
}

pub fn gamma_bounds_csv(rows: &[GammaBoundRow]) -> String {
    let mut out = String::from("method,n,alpha,replication,bound,covered\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method, r.n, r.alpha, r.replication, r.bound, r.covered
        ));
    }
    out
}

pub fn m_convergence_csv(rows: &[MConvergenceRow]) -> String {
    let mut out = String::from("m,replication,optval\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.m, r.replication, r.optimal_value));
    }
    out
}

/// Runs the named experiment and writes its CSV and JSON summary into
/// `out_dir`. Returns the summary value that was written.
pub fn run_experiment_to_dir(
    name: &str,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<serde_json::Value, ExperimentError> {
    std::fs::create_dir_all(out_dir)?;
    let summary = match name {
        "ev" | "productmix" => {
            let output = run_replications(cfg)?;
            let report = summarize(&output.results)?;
            std::fs::write(
                out_dir.join("replications.csv"),
                replications_csv(&output.results),
            )?;
            let infeasible_total: usize =
                output.results.iter().map(|r| r.oos_infeasible).sum();
            json!({
                "experiment": name,
                "config": cfg,
                "summary": report,
                "failures": output.failures,
                "oos_infeasible_total": infeasible_total,
            })
        }
        "gamma-bounds" => {
            let grid = cfg
                .n_grid
                .clone()
                .unwrap_or_else(|| vec![80, 320, 1000, 3200, 10_000]);
            let output = run_gamma_bound_study(cfg, &grid)?;
            std::fs::write(out_dir.join("bounds.csv"), gamma_bounds_csv(&output.rows))?;
            json!({
                "experiment": name,
                "config": cfg,
                "summary": output.summary,
            })
        }
        "m-convergence" => {
            let grid = cfg
                .m_grid
                .clone()
                .unwrap_or_else(|| vec![500, 1000, 2000, 3000, 5000, 8000]);
            let output = run_m_convergence(cfg, &grid)?;
            std::fs::write(
                out_dir.join("m_convergence.csv"),
                m_convergence_csv(&output.rows),
            )?;
            json!({
                "experiment": name,
                "config": cfg,
                "summary": { "sd_per_m": output.sd_per_m },
            })
        }
        other => {
            return Err(ExperimentError::InvalidConfig(format!(
                "unknown experiment '{other}'"
            )))
        }
    };
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(summary)
}
