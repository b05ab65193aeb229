//! Seedable random number generation with reproducible substreams, plus the
//! samplers used by the estimators and experiment instances: multinomial
//! bootstrap weights, Gamma variates, Gumbel-copula vectors, and the
//! two-regime scenario mixture.
//!
//! The generator is specified by algorithm, not by library, so that any
//! implementation can reproduce the exact streams. See `docs/rng.md` for the
//! normative description of the state transition and output function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0x5851_F42D_4C95_7F2D;

/// SplitMix64 output mixer. Also used to derive initial states from seeds.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based 64-bit generator (SplitMix64) with explicit substreams.
///
/// Identical `(seed, stream_id)` pairs replay identical output sequences;
/// distinct stream ids start at well-separated points of the underlying
/// period-2^64 sequence. A stream is an owned value: share-nothing across
/// threads, clone or re-derive instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    state: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let state = mix64(seed ^ mix64(stream_id ^ STREAM_SALT));
        RngStream { state, stream_id }
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform integer in `[0, n)` by rejection.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let v = self.next_u64();
            if v >= threshold {
                return v % n;
            }
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard exponential, strictly positive.
    pub fn exp1(&mut self) -> f64 {
        -self.next_open01().ln()
    }

    /// Standard normal via the Marsaglia polar method. The second variate of
    /// each accepted pair is discarded so consumption stays call-sequenced.
    pub fn normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// Gamma(shape, scale) via the Marsaglia–Tsang squeeze method, with the
    /// usual boost for shape < 1.
    pub fn gamma(&mut self, shape: f64, scale: f64) -> f64 {
        assert!(
            shape > 0.0 && scale > 0.0,
            "gamma parameters must be positive"
        );
        if shape < 1.0 {
            let boost = self.next_open01().powf(1.0 / shape);
            return self.gamma(shape + 1.0, scale) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (3.0 * d.sqrt());
        loop {
            let x = self.normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.next_open01();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v * scale;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v * scale;
            }
        }
    }
}

/// Deterministic substream for a replication index.
pub fn derive_substream(master_seed: u64, replication: u64) -> RngStream {
    RngStream::new(master_seed, replication)
}

/// One multinomial resample-count vector: `counts[n]` is how many times
/// original sample point `n` appears in a bootstrap resample of size `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapWeights {
    counts: Vec<u32>,
}

impl BootstrapWeights {
    /// Validates that counts sum to exactly `len`.
    pub fn new(counts: Vec<u32>) -> Result<Self, SamplingError> {
        let n = counts.len() as u64;
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if total != n {
            return Err(SamplingError::InvalidParameter(format!(
                "bootstrap counts must sum to {n}, got {total}"
            )));
        }
        Ok(BootstrapWeights { counts })
    }

    /// The all-ones vector, i.e. the identity resample.
    pub fn ones(n: usize) -> Self {
        BootstrapWeights {
            counts: vec![1; n],
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(1/N) * sum_n counts[n] * values[n]`, the resampled mean.
    pub fn resampled_mean(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.counts.len());
        let s: f64 = self
            .counts
            .iter()
            .zip(values)
            .map(|(&c, &v)| c as f64 * v)
            .sum();
        s / self.counts.len() as f64
    }
}

/// Draws one multinomial(N, 1/N) weight vector by tallying `n` uniform
/// indices, which is an exact multinomial draw.
pub fn draw_bootstrap_weights(n: usize, rng: &mut RngStream) -> BootstrapWeights {
    assert!(n >= 1, "bootstrap resample size must be at least 1");
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.next_below(n as u64) as usize] += 1;
    }
    BootstrapWeights { counts }
}

/// Gumbel-copula vector in `(0,1)^dim` with dependence parameter
/// `lambda >= 1`; `lambda = 1` is the independence copula.
///
/// Uses the Marshall–Olkin construction: a positive stable frailty `S` with
/// index `1/lambda` (Chambers–Mallows–Stuck / Kanter representation), then
/// `U_i = exp(-(E_i/S)^(1/lambda))` with `E_i` iid standard exponentials.
pub fn sample_gumbel_copula(
    dim: usize,
    lambda: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>, SamplingError> {
    if !(lambda >= 1.0) {
        return Err(SamplingError::InvalidParameter(format!(
            "gumbel copula requires lambda >= 1, got {lambda}"
        )));
    }
    if lambda == 1.0 {
        // The general formula degenerates at lambda = 1; independence is exact.
        return Ok((0..dim).map(|_| rng.next_open01()).collect());
    }
    let a = 1.0 / lambda; // stable index in (0, 1)
    let theta = std::f64::consts::PI * rng.next_open01();
    let w = rng.exp1();
    // Kanter's representation of the one-sided stable law with Laplace
    // transform exp(-s^a).
    let zolotarev = (a * theta).sin().powf(a / (1.0 - a)) * ((1.0 - a) * theta).sin()
        / theta.sin().powf(1.0 / (1.0 - a));
    let s = (zolotarev / w).powf((1.0 - a) / a);
    Ok((0..dim)
        .map(|_| {
            let e = rng.exp1();
            (-(e / s).powf(a)).exp()
        })
        .collect())
}

/// Two-regime scenario distribution: with probability `p_regular` the vector
/// of `(h, q, w)` components is a Gumbel-copula draw rescaled into the
/// regular bounds, otherwise into the worst-case bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GumbelMixtureSpec {
    pub p_regular: f64,
    pub lambda_regular: f64,
    pub lambda_worst: f64,
    pub bounds_regular: Vec<(f64, f64)>,
    pub bounds_worst: Vec<(f64, f64)>,
}

impl GumbelMixtureSpec {
    pub fn validate(&self) -> Result<(), SamplingError> {
        if !(0.0..=1.0).contains(&self.p_regular) {
            return Err(SamplingError::InvalidParameter(format!(
                "p_regular must be in [0,1], got {}",
                self.p_regular
            )));
        }
        if self.lambda_regular < 1.0 || self.lambda_worst < 1.0 {
            return Err(SamplingError::InvalidParameter(
                "copula parameters must be >= 1".into(),
            ));
        }
        if self.bounds_regular.len() != self.bounds_worst.len() {
            return Err(SamplingError::InvalidParameter(
                "regular and worst-case bounds must have equal dimension".into(),
            ));
        }
        for &(lo, hi) in self.bounds_regular.iter().chain(&self.bounds_worst) {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(SamplingError::InvalidParameter(format!(
                    "each coordinate needs finite lower < upper, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.bounds_regular.len()
    }
}

/// Draws one concatenated `(h, q, w)` vector from the two-regime mixture.
pub fn sample_scenario_mixture(
    spec: &GumbelMixtureSpec,
    rng: &mut RngStream,
) -> Result<Vec<f64>, SamplingError> {
    let regular = rng.next_f64() < spec.p_regular;
    let (lambda, bounds) = if regular {
        (spec.lambda_regular, &spec.bounds_regular)
    } else {
        (spec.lambda_worst, &spec.bounds_worst)
    };
    let u = sample_gumbel_copula(bounds.len(), lambda, rng)?;
    Ok(u.iter()
        .zip(bounds)
        .map(|(&ui, &(lo, hi))| lo + (hi - lo) * ui)
        .collect())
}

/// Gamma(shape, scale) draw; thin wrapper so callers can stay on the free-
/// function sampler surface.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> f64 {
    rng.gamma(shape, scale)
}
