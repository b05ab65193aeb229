//! Upper-bound statistics for a sample mean: VaR/CVaR of finite samples,
//! the bootstrap percentile bound, the average percentile upper bound (APUB)
//! in exact-enumeration and bootstrap-approximation form, and the classical
//! large-sample normal bound used as a comparator.
//!
//! APUB at level `alpha` is the CVaR at level `alpha` of the bootstrap
//! distribution of the sample mean; the percentile (VaR) analogue is the
//! Efron bootstrap bound. Exact mode enumerates the full multinomial
//! resampling support, which is only tractable for tiny samples.

use crate::sampling::{draw_bootstrap_weights, BootstrapWeights, RngStream};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("alpha must lie in {0}, got {1}")]
    InvalidAlpha(&'static str, f64),
    #[error("sample must be nonempty with finite entries")]
    InvalidSample,
    #[error("operation needs at least {needed} values, got {got}")]
    NotEnoughData { needed: usize, got: usize },
    #[error("exact enumeration supports N <= {cap}, got {got}")]
    EnumerationTooLarge { cap: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Observed cost values underlying the empirical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self, BoundError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(BoundError::InvalidSample);
        }
        Ok(SampleSet { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees N >= 1
    }

    pub fn mean(&self) -> f64 {
        kahan_mean(&self.values)
    }

    /// Population-style standard deviation (divide by N).
    pub fn std_pop(&self) -> f64 {
        let m = self.mean();
        let ss = kahan_sum(self.values.iter().map(|&v| (v - m) * (v - m)));
        (ss / self.values.len() as f64).sqrt()
    }
}

/// An APUB value together with how it was obtained. `n_bootstrap` is the
/// number of bootstrap resamples (0 for exact enumeration) and `std_error`
/// a batch-means Monte Carlo error estimate (0 for exact mode).
#[derive(Debug, Clone, PartialEq)]
pub struct ApubEstimate {
    pub value: f64,
    pub alpha: f64,
    pub n_bootstrap: usize,
    pub std_error: f64,
}

/// Compensated (Kahan) sum, so that near-exact identities like the
/// alpha = 1 mean reduction hold to machine precision.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

pub(crate) fn kahan_mean(values: &[f64]) -> f64 {
    kahan_sum(values.iter().copied()) / values.len() as f64
}

/// Ceiling that snaps values within 1e-9 of an integer to that integer, so
/// that index formulas like `J = ceil((1-alpha) M)` are immune to the
/// floating-point representation of `alpha`.
pub(crate) fn ceil_snapped(v: f64) -> usize {
    debug_assert!(v >= -1e-9);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * (1.0 + r.abs()) {
        r.max(0.0) as usize
    } else {
        v.ceil() as usize
    }
}

fn check_alpha_half_open(alpha: f64) -> Result<(), BoundError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BoundError::InvalidAlpha("(0, 1]", alpha));
    }
    Ok(())
}

fn check_alpha_open(alpha: f64) -> Result<(), BoundError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BoundError::InvalidAlpha("(0, 1)", alpha));
    }
    Ok(())
}

fn check_values(values: &[f64]) -> Result<(), BoundError> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(BoundError::InvalidSample);
    }
    Ok(())
}

/// CVaR at level `alpha` of an equally weighted sample, by the sorted-tail
/// formula: with `J = ceil((1-alpha) M)`,
///
/// `(1 - (M-J)/(alpha M)) r_(J) + (1/(alpha M)) sum_{m>J} r_(m)`.
///
/// Equals `min_t t + (1/(alpha M)) sum_m [r_m - t]_+`. At `alpha = 1` the
/// `r_(J)` term carries weight zero and the result is the plain mean.
pub fn cvar_of_samples(values: &[f64], alpha: f64) -> Result<f64, BoundError> {
    check_values(values)?;
    check_alpha_half_open(alpha)?;
    let m = values.len();
    let j = ceil_snapped((1.0 - alpha) * m as f64);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let am = alpha * m as f64;
    let tail = kahan_sum(sorted[j..].iter().copied()) / am;
    if j == 0 {
        Ok(tail)
    } else {
        let w_j = 1.0 - (m - j) as f64 / am;
        Ok(w_j * sorted[j - 1] + tail)
    }
}

/// Empirical (1-alpha)-quantile: the sorted value at 1-based index
/// `ceil((1-alpha) M)`, i.e. `inf { t : (1/M) #{values <= t} >= 1-alpha }`.
pub fn var_of_samples(values: &[f64], alpha: f64) -> Result<f64, BoundError> {
    check_values(values)?;
    check_alpha_open(alpha)?;
    let m = values.len();
    let idx = ceil_snapped((1.0 - alpha) * m as f64).max(1);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[idx - 1])
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Probability of one multinomial(n, 1/n) count vector:
/// `n! / (n^n * v_1! ... v_n!)`. Evaluated in log space.
pub fn multinomial_pmf(n: usize, counts: &BootstrapWeights) -> Result<f64, BoundError> {
    if counts.len() != n {
        return Err(BoundError::InvalidInput(format!(
            "counts have length {} but n = {n}",
            counts.len()
        )));
    }
    let n_f = n as f64;
    let mut log_p = ln_factorial(n as u64) - n_f * n_f.ln();
    for &v in counts.counts() {
        log_p -= ln_factorial(v as u64);
    }
    Ok(log_p.exp())
}

const EXACT_ENUMERATION_CAP: usize = 8;

/// Exact APUB by full enumeration of the multinomial resampling support
/// (size `C(2N-1, N)`), capped at N = 8.
pub fn apub_exact(sample: &SampleSet, alpha: f64) -> Result<ApubEstimate, BoundError> {
    check_alpha_half_open(alpha)?;
    let n = sample.len();
    if n > EXACT_ENUMERATION_CAP {
        return Err(BoundError::EnumerationTooLarge {
            cap: EXACT_ENUMERATION_CAP,
            got: n,
        });
    }
    let values = sample.values();
    let n_f = n as f64;
    let log_n_fact = ln_factorial(n as u64);
    let mut outcomes: Vec<(f64, f64)> = Vec::new(); // (resampled mean, probability)
    let mut counts = vec![0u32; n];
    enumerate_compositions(&mut counts, 0, n as u32, &mut |c| {
        let mut log_p = log_n_fact - n_f * n_f.ln();
        let mut s = 0.0;
        for (i, &v) in c.iter().enumerate() {
            log_p -= ln_factorial(v as u64);
            s += v as f64 * values[i];
        }
        outcomes.push((s / n_f, log_p.exp()));
    });
    let value = cvar_discrete(&mut outcomes, alpha);
    Ok(ApubEstimate {
        value,
        alpha,
        n_bootstrap: 0,
        std_error: 0.0,
    })
}

fn enumerate_compositions(
    counts: &mut [u32],
    idx: usize,
    remaining: u32,
    visit: &mut impl FnMut(&[u32]),
) {
    if idx + 1 == counts.len() {
        counts[idx] = remaining;
        visit(counts);
        return;
    }
    for v in 0..=remaining {
        counts[idx] = v;
        enumerate_compositions(counts, idx + 1, remaining - v, visit);
    }
}

/// CVaR at level `alpha` of a finite weighted distribution. The minimizing
/// `t` is the (1-alpha)-quantile; with atoms the formula
/// `t* + (1/alpha) E[(r - t*)_+]` stays exact.
fn cvar_discrete(outcomes: &mut [(f64, f64)], alpha: f64) -> f64 {
    outcomes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let target = 1.0 - alpha;
    let mut cum = 0.0;
    let mut t_star = outcomes[outcomes.len() - 1].0;
    for &(r, p) in outcomes.iter() {
        cum += p;
        if cum >= target - 1e-12 {
            t_star = r;
            break;
        }
    }
    let excess = kahan_sum(
        outcomes
            .iter()
            .map(|&(r, p)| p * (r - t_star).max(0.0)),
    );
    t_star + excess / alpha
}

/// The `M` resampled means `r_m = (1/N) sum_n V_{m,n} F_n` for fresh
/// multinomial weight draws. Exposed so callers can evaluate several levels
/// against the same draws.
pub fn bootstrap_resampled_means(sample: &SampleSet, m: usize, rng: &mut RngStream) -> Vec<f64> {
    let n = sample.len();
    (0..m)
        .map(|_| draw_bootstrap_weights(n, rng).resampled_mean(sample.values()))
        .collect()
}

fn batch_means_std_error(r: &[f64], alpha: f64) -> f64 {
    let m = r.len();
    let b = 20.min(m);
    if b < 2 {
        return 0.0;
    }
    let base = m / b;
    let extra = m % b;
    let mut start = 0;
    let mut batch_values = Vec::with_capacity(b);
    for k in 0..b {
        let size = base + usize::from(k < extra);
        let batch = &r[start..start + size];
        start += size;
        batch_values.push(cvar_of_samples(batch, alpha).expect("batch is nonempty"));
    }
    let mean = kahan_mean(&batch_values);
    let var = kahan_sum(batch_values.iter().map(|&v| (v - mean) * (v - mean)))
        / (b as f64 - 1.0);
    (var / b as f64).sqrt()
}

/// Bootstrap-approximation APUB: CVaR at `alpha` of `m_bootstrap` resampled
/// means, with a 20-batch batch-means standard error.
pub fn apub_bootstrap(
    sample: &SampleSet,
    alpha: f64,
    m_bootstrap: usize,
    rng: &mut RngStream,
) -> Result<ApubEstimate, BoundError> {
    check_alpha_half_open(alpha)?;
    if m_bootstrap < 2 {
        return Err(BoundError::NotEnoughData {
            needed: 2,
            got: m_bootstrap,
        });
    }
    let r = bootstrap_resampled_means(sample, m_bootstrap, rng);
    let value = cvar_of_samples(&r, alpha)?;
    let std_error = batch_means_std_error(&r, alpha);
    Ok(ApubEstimate {
        value,
        alpha,
        n_bootstrap: m_bootstrap,
        std_error,
    })
}

/// Finite-M percentile bootstrap bound: the empirical (1-alpha)-quantile of
/// the resampled means.
pub fn efron_bootstrap(
    sample: &SampleSet,
    alpha: f64,
    m_bootstrap: usize,
    rng: &mut RngStream,
) -> Result<f64, BoundError> {
    check_alpha_open(alpha)?;
    if m_bootstrap < 2 {
        return Err(BoundError::NotEnoughData {
            needed: 2,
            got: m_bootstrap,
        });
    }
    let r = bootstrap_resampled_means(sample, m_bootstrap, rng);
    var_of_samples(&r, alpha)
}

/// Classical large-sample bound `mean + z_{1-alpha} * std / sqrt(N)` with the
/// population-style (divide by N) standard deviation.
pub fn normal_ucb(sample: &SampleSet, alpha: f64) -> Result<f64, BoundError> {
    check_alpha_open(alpha)?;
    let n = sample.len();
    if n < 2 {
        return Err(BoundError::NotEnoughData { needed: 2, got: n });
    }
    let z = normal_quantile(1.0 - alpha)?;
    Ok(sample.mean() + z * sample.std_pop() / (n as f64).sqrt())
}

/// Standard normal quantile to |error| <= 1e-8: Acklam's piecewise rational
/// approximation refined by one Halley step against a high-accuracy CDF.
pub fn normal_quantile(p: f64) -> Result<f64, BoundError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(BoundError::InvalidAlpha("(0, 1)", p));
    }
    let mut x = acklam(p);
    // One Halley refinement: e = Phi(x) - p, u = e * sqrt(2 pi) * exp(x^2/2).
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x -= u / (1.0 + 0.5 * x * u);
    Ok(x)
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -39.696_830_286_653_8,
        220.946_098_424_521,
        -275.928_510_446_969,
        138.357_751_867_269,
        -30.664_798_066_147_2,
        2.506_628_277_459_24,
    ];
    const B: [f64; 5] = [
        -54.476_098_798_224_1,
        161.585_836_858_041,
        -155.698_979_859_887,
        66.801_311_887_719_7,
        -13.280_681_552_885_7,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_29e-3,
        -0.322_396_458_041_136,
        -2.400_758_277_161_84,
        -2.549_732_539_343_73,
        4.374_664_141_464_97,
        2.938_163_982_698_78,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_46e-3,
        0.322_467_129_070_04,
        2.445_134_137_143,
        3.754_408_661_907_42,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Standard normal CDF via erfc, accurate to ~1e-15.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function: Taylor series of erf below 2, Lentz
/// continued fraction above.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

fn erf_series(x: f64) -> f64 {
    // 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

fn erfc_continued_fraction(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + (2/2)/(x + ...)))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = f64::MAX;
    let mut d = 0.0;
    for n in 1..200 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;
    use proptest::prelude::*;

    /// Independent oracle: minimize t + 1/(alpha M) sum [v - t]_+ over t
    /// restricted to the sample values, which is exact for empirical
    /// distributions.
    fn cvar_min_over_t(values: &[f64], alpha: f64) -> f64 {
        let m = values.len() as f64;
        values
            .iter()
            .map(|&t| {
                t + values.iter().map(|&v| (v - t).max(0.0)).sum::<f64>() / (alpha * m)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cvar_examples() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!((cvar_of_samples(&v, 0.5).unwrap() - 3.5).abs() < 1e-12);
        assert!((cvar_of_samples(&v, 1.0).unwrap() - 2.5).abs() < 1e-12);
        let expect = (1.0 - 1.0 / 1.2) * 3.0 + (1.0 / 1.2) * 4.0;
        assert!((cvar_of_samples(&v, 0.3).unwrap() - expect).abs() < 1e-12);
        assert_eq!(cvar_of_samples(&[7.0], 0.2).unwrap(), 7.0);
    }

    #[test]
    fn cvar_alpha_below_one_over_m_returns_max() {
        let v = [3.0, 9.0, 1.0];
        assert_eq!(cvar_of_samples(&v, 0.05).unwrap(), 9.0);
    }

    #[test]
    fn cvar_rejects_bad_alpha() {
        assert!(cvar_of_samples(&[1.0], 0.0).is_err());
        assert!(cvar_of_samples(&[1.0], 1.5).is_err());
    }

    #[test]
    fn cvar_matches_minimization_oracle_on_random_cases() {
        let mut rng = RngStream::new(7, 0);
        for _ in 0..500 {
            let m = 1 + rng.next_below(50) as usize;
            let values: Vec<f64> = (0..m).map(|_| rng.uniform(-10.0, 10.0)).collect();
            let alpha = rng.uniform(0.02, 1.0);
            let fast = cvar_of_samples(&values, alpha).unwrap();
            let slow = cvar_min_over_t(&values, alpha);
            assert!(
                (fast - slow).abs() <= 1e-10,
                "cvar mismatch: {fast} vs {slow} (alpha {alpha}, m {m})"
            );
        }
    }

    #[test]
    fn var_examples() {
        assert_eq!(var_of_samples(&[1.0, 2.0, 3.0, 4.0], 0.25).unwrap(), 3.0);
        assert_eq!(var_of_samples(&[5.0, 5.0, 5.0], 0.4).unwrap(), 5.0);
        assert_eq!(var_of_samples(&[0.0, 1.0, 1.0, 2.0], 0.5).unwrap(), 1.0);
        assert!(var_of_samples(&[1.0], 1.0).is_err());
    }

    #[test]
    fn pmf_examples() {
        let w = BootstrapWeights::new(vec![1, 1]).unwrap();
        assert!((multinomial_pmf(2, &w).unwrap() - 0.5).abs() < 1e-14);
        let w = BootstrapWeights::new(vec![2, 0]).unwrap();
        assert!((multinomial_pmf(2, &w).unwrap() - 0.25).abs() < 1e-14);
        let w = BootstrapWeights::new(vec![1]).unwrap();
        assert_eq!(multinomial_pmf(1, &w).unwrap(), 1.0);
        assert!(multinomial_pmf(3, &w).is_err());
    }

    #[test]
    fn pmf_sums_to_one_over_support() {
        for n in 1..=6usize {
            let mut total = 0.0;
            let mut counts = vec![0u32; n];
            enumerate_compositions(&mut counts, 0, n as u32, &mut |c| {
                let w = BootstrapWeights::new(c.to_vec()).unwrap();
                total += multinomial_pmf(n, &w).unwrap();
            });
            assert!((total - 1.0).abs() < 1e-12, "N = {n}: total {total}");
        }
    }

    #[test]
    fn apub_exact_examples() {
        let s = SampleSet::new(vec![0.0, 2.0]).unwrap();
        assert!((apub_exact(&s, 0.5).unwrap().value - 1.5).abs() < 1e-12);
        assert!((apub_exact(&s, 1.0).unwrap().value - 1.0).abs() < 1e-12);
        let c = SampleSet::new(vec![3.25; 5]).unwrap();
        assert!((apub_exact(&c, 0.37).unwrap().value - 3.25).abs() < 1e-12);
        let big = SampleSet::new(vec![1.0; 9]).unwrap();
        assert!(matches!(
            apub_exact(&big, 0.5),
            Err(BoundError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn apub_exact_dominates_mean() {
        let mut rng = RngStream::new(13, 0);
        for _ in 0..50 {
            let n = 1 + rng.next_below(6) as usize;
            let values: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
            let s = SampleSet::new(values).unwrap();
            let alpha = rng.uniform(0.05, 1.0);
            let est = apub_exact(&s, alpha).unwrap();
            assert!(est.value >= s.mean() - 1e-9);
        }
    }

    #[test]
    fn apub_bootstrap_brackets_exact() {
        let s = SampleSet::new(vec![0.0, 2.0]).unwrap();
        let mut rng = RngStream::new(17, 0);
        let est = apub_bootstrap(&s, 0.5, 200_000, &mut rng).unwrap();
        assert!(
            (est.value - 1.5).abs() <= 3.0 * est.std_error,
            "value {} se {}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn apub_bootstrap_alpha_one_tracks_sample_mean() {
        let s = SampleSet::new(vec![1.0, 4.0, -2.0, 0.5, 3.0]).unwrap();
        let mut rng = RngStream::new(19, 0);
        let est = apub_bootstrap(&s, 1.0, 100_000, &mut rng).unwrap();
        assert!((est.value - s.mean()).abs() <= 3.0 * est.std_error.max(1e-12));
    }

    #[test]
    fn apub_bootstrap_singleton_degenerates() {
        let s = SampleSet::new(vec![5.0]).unwrap();
        let mut rng = RngStream::new(23, 0);
        let est = apub_bootstrap(&s, 0.5, 10, &mut rng).unwrap();
        assert_eq!(est.value, 5.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn apub_monotone_in_alpha_on_shared_draws() {
        let s = SampleSet::new(vec![0.3, -1.2, 4.0, 2.2, 0.0, 7.5]).unwrap();
        let mut rng = RngStream::new(29, 0);
        let r = bootstrap_resampled_means(&s, 5000, &mut rng);
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
        let mut prev = f64::INFINITY;
        for &a in &grid {
            let v = cvar_of_samples(&r, a).unwrap();
            assert!(v <= prev + 1e-12, "alpha {a}: {v} > {prev}");
            prev = v;
        }
        let mean_r = kahan_mean(&r);
        assert!((cvar_of_samples(&r, 1.0).unwrap() - mean_r).abs() <= 1e-12);
    }

    #[test]
    fn bound_dominance_on_shared_draws() {
        // APUB >= Efron bound >= nothing-below-it at matching alpha.
        let s = SampleSet::new(vec![1.0, 2.0, 8.0, -3.0, 0.0]).unwrap();
        let mut rng = RngStream::new(31, 0);
        let r = bootstrap_resampled_means(&s, 20_000, &mut rng);
        for &a in &[0.05, 0.1, 0.25, 0.5, 0.9] {
            let apub = cvar_of_samples(&r, a).unwrap();
            let efron = var_of_samples(&r, a).unwrap();
            assert!(apub >= efron - 1e-12, "alpha {a}: {apub} < {efron}");
        }
    }

    #[test]
    fn efron_deterministic_and_degenerate() {
        let s = SampleSet::new(vec![0.0, 2.0]).unwrap();
        let mut a = RngStream::new(37, 4);
        let mut b = RngStream::new(37, 4);
        assert_eq!(
            efron_bootstrap(&s, 0.5, 50_000, &mut a).unwrap(),
            efron_bootstrap(&s, 0.5, 50_000, &mut b).unwrap()
        );
        let c = SampleSet::new(vec![4.5; 3]).unwrap();
        let mut rng = RngStream::new(37, 5);
        assert_eq!(efron_bootstrap(&c, 0.3, 100, &mut rng).unwrap(), 4.5);
    }

    #[test]
    fn efron_large_m_approaches_exact_quantile() {
        // For sample [0, 2], resampled means are 0/1/2 with probs 1/4, 1/2,
        // 1/4, so the 0.5-quantile is 1.
        let s = SampleSet::new(vec![0.0, 2.0]).unwrap();
        let mut rng = RngStream::new(41, 0);
        let q = efron_bootstrap(&s, 0.5, 200_000, &mut rng).unwrap();
        assert_eq!(q, 1.0);
    }

    #[test]
    fn normal_ucb_examples() {
        let ones = SampleSet::new(vec![1.0; 4]).unwrap();
        assert_eq!(normal_ucb(&ones, 0.05).unwrap(), 1.0);
        let s = SampleSet::new(vec![3.0, 1.0, 4.0, 1.5]).unwrap();
        assert!((normal_ucb(&s, 0.5).unwrap() - s.mean()).abs() < 1e-12);
        let z = SampleSet::new(vec![0.0, 2.0]).unwrap();
        let expect = 1.0 + 1.6448536269514722 / 2.0_f64.sqrt();
        assert!((normal_ucb(&z, 0.05).unwrap() - expect).abs() < 1e-7);
        let tiny = SampleSet::new(vec![1.0]).unwrap();
        assert!(normal_ucb(&tiny, 0.05).is_err());
    }

    #[test]
    fn normal_quantile_reference_points() {
        assert!(normal_quantile(0.5).unwrap().abs() < 1e-12);
        assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-8);
        assert!((normal_quantile(0.95).unwrap() - 1.644_853_626_951_472).abs() < 1e-8);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    /// Bisection against an independent Taylor-series CDF, valid for
    /// |x| <= 3.5.
    fn quantile_bisect_oracle(p: f64) -> f64 {
        let phi = |x: f64| 0.5 + 0.5 * erf_series(x / std::f64::consts::SQRT_2);
        let (mut lo, mut hi) = (-3.5f64, 3.5f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn normal_quantile_matches_bisection_oracle() {
        for k in 1..40 {
            let p = k as f64 / 40.0;
            let got = normal_quantile(p).unwrap();
            let want = quantile_bisect_oracle(p);
            assert!((got - want).abs() < 1e-8, "p {p}: {got} vs {want}");
        }
    }

    #[test]
    fn batch_means_error_shrinks_with_m() {
        let s = SampleSet::new(vec![0.0, 1.0, 5.0, -2.0]).unwrap();
        let mut rng = RngStream::new(43, 0);
        let small = apub_bootstrap(&s, 0.2, 500, &mut rng).unwrap();
        let large = apub_bootstrap(&s, 0.2, 50_000, &mut rng).unwrap();
        assert!(large.std_error < small.std_error);
    }

    proptest! {
        #[test]
        fn apub_exact_translation_scale(
            values in prop::collection::vec(-10.0..10.0f64, 1..6),
            alpha in 0.05..1.0f64,
            a in 0.0..3.0f64,
            b in -5.0..5.0f64,
        ) {
            let s = SampleSet::new(values.clone()).unwrap();
            let scaled = SampleSet::new(values.iter().map(|v| a * v + b).collect()).unwrap();
            let lhs = apub_exact(&scaled, alpha).unwrap().value;
            let rhs = a * apub_exact(&s, alpha).unwrap().value + b;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn cvar_never_below_mean(
            values in prop::collection::vec(-100.0..100.0f64, 1..40),
            alpha in 0.01..1.0f64,
        ) {
            let cvar = cvar_of_samples(&values, alpha).unwrap();
            let mean = kahan_mean(&values);
            prop_assert!(cvar >= mean - 1e-9 * (1.0 + mean.abs()));
        }
    }
}
