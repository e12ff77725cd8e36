//! Closed-form recovery guarantees, the Cramér–Rao bound and the probability
//! bounds they rest on.
//!
//! `log` is the natural logarithm throughout. Probabilities are clipped to
//! `[0, 1]` for reporting and the unclipped value is kept next to them.

use alloc::format;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::coherence::CoherenceProfile;
use crate::error::{Error, Result};
use crate::linalg::{self, BlockedDictionary};

/// Upper end of the α search interval.
pub const ALPHA_MAX: f64 = 1e3;

/// Relative tolerance of the α bisection.
const ALPHA_RTOL: f64 = 1e-10;

/// Block recovery algorithm a guarantee refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Algorithm {
    /// Block thresholding.
    Bth,
    /// Block OMP.
    Bomp,
}

/// Noise model a guarantee refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NoiseKind {
    /// Deterministic noise with `‖w‖₂ <= ε`.
    Adversarial,
    /// i.i.d. `N(0, σ²)` noise.
    Gaussian,
}

/// Which expression bounds the probability that the noise correlations stay small.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ProbabilityForm {
    /// `0.8 (2αd log N)^{d/2−1} / N^{αd−1}`.
    #[default]
    Lemma5,
    /// The same with an extra factor `d`.
    Theorem4,
}

macro_rules! named_enum {
    ($ty:ident, $what:literal, $($var:ident => $name:literal),+) => {
        impl $ty {
            /// Lowercase name as used on the command line and in JSON.
            pub fn name(self) -> &'static str {
                match self {
                    $($ty::$var => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$var),)+
                    _ => Err(Error::invalid(format!(
                        concat!("unknown ", $what, " '{}', expected one of: ", $($name, " "),+),
                        s
                    ))),
                }
            }
        }
    };
}

named_enum!(Algorithm, "algorithm", Bth => "bth", Bomp => "bomp");
named_enum!(NoiseKind, "noise model", Adversarial => "adversarial", Gaussian => "gaussian");
named_enum!(ProbabilityForm, "probability form", Lemma5 => "lemma5", Theorem4 => "theorem4");

/// Outcome of a guarantee evaluation for one algorithm and noise model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GuaranteeReport {
    /// Algorithm.
    pub algorithm: Algorithm,
    /// Noise model.
    pub noise_model: NoiseKind,
    /// Whether the recovery condition holds.
    pub condition_holds: bool,
    /// Left minus right side of the recovery condition.
    pub condition_margin: f64,
    /// Bound on `‖x̂ − x‖₂²`; present iff the condition holds.
    pub error_bound: Option<f64>,
    /// α fixed by the confidence level (Gaussian only).
    pub alpha: Option<f64>,
    /// Bound on the failure probability, clipped to `[0, 1]` (Gaussian only).
    pub failure_probability_bound: Option<f64>,
    /// Unclipped failure probability bound (Gaussian only).
    pub failure_probability_raw: Option<f64>,
    /// Largest σ for which the condition holds at this α (Gaussian only).
    pub sigma_max: Option<f64>,
}

/// Magnitude assumptions on the nonzero blocks of `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockNorms {
    /// Lower bound on `‖x[i]‖₂` over the support.
    pub xmin: f64,
    /// Upper bound on `‖x[i]‖₂` over the support.
    pub xmax: f64,
}

impl BlockNorms {
    /// Validated pair.
    pub fn new(xmin: f64, xmax: f64) -> Result<Self> {
        if !(xmin >= 0.0) || !xmax.is_finite() || xmin > xmax {
            return Err(Error::invalid(format!(
                "block norms need 0 <= xmin <= xmax < inf, got xmin={xmin}, xmax={xmax}"
            )));
        }
        Ok(BlockNorms { xmin, xmax })
    }

    fn worst(&self, algo: Algorithm) -> f64 {
        match algo {
            Algorithm::Bth => self.xmax,
            Algorithm::Bomp => self.xmin,
        }
    }
}

fn check_k(profile: &CoherenceProfile, k: usize) -> Result<()> {
    if k == 0 || k > profile.num_blocks {
        return Err(Error::invalid(format!(
            "k must be in 1..={}, got {k}",
            profile.num_blocks
        )));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
    }
    Ok(())
}

/// `(1 − (d−1)ν) xmin − (2k−1) d μ_B x*`, with `x* = xmax` for BTH and `xmin` for BOMP.
fn signal_margin(profile: &CoherenceProfile, k: usize, norms: BlockNorms, algo: Algorithm) -> f64 {
    let d = profile.block_size as f64;
    let spread = profile.intra_block_spread();
    (1.0 - spread) * norms.xmin - (2.0 * k as f64 - 1.0) * d * profile.mu_block * norms.worst(algo)
}

fn positive_floor(profile: &CoherenceProfile, k: usize) -> Result<f64> {
    let den = profile.gram_eigen_floor(k);
    if den > 0.0 {
        Ok(den)
    } else {
        Err(Error::Solver(format!(
            "recovery condition holds but 1 - (d-1)nu - (k-1)d mu_B = {den} is not positive"
        )))
    }
}

/// Support-recovery guarantee under bounded noise `‖w‖₂ <= ε`.
///
/// The condition is
/// `(1 − (d−1)ν) xmin > 2ε √(1 + (d−1)ν) + (2k−1) d μ_B x*`
/// with `x* = xmax` for BTH and `x* = xmin` for BOMP; when it holds the
/// squared error is at most `ε² / (1 − (d−1)ν − (k−1) d μ_B)`.
pub fn adversarial_guarantee(
    profile: &CoherenceProfile,
    k: usize,
    norms: BlockNorms,
    epsilon: f64,
    algo: Algorithm,
) -> Result<GuaranteeReport> {
    check_k(profile, k)?;
    check_nonneg("epsilon", epsilon)?;
    let noise = 2.0 * epsilon * (1.0 + profile.intra_block_spread()).sqrt();
    let margin = signal_margin(profile, k, norms, algo) - noise;
    let holds = margin > 0.0;
    let error_bound = if holds {
        Some(epsilon * epsilon / positive_floor(profile, k)?)
    } else {
        None
    };
    Ok(GuaranteeReport {
        algorithm: algo,
        noise_model: NoiseKind::Adversarial,
        condition_holds: holds,
        condition_margin: margin,
        error_bound,
        alpha: None,
        failure_probability_bound: None,
        failure_probability_raw: None,
        sigma_max: None,
    })
}

/// Exact-recovery condition without noise.
///
/// BOMP: `(d−1)ν + (2k−1) d μ_B < 1`.
/// BTH: `(d−1)ν + (2k−1) d μ_B · xmax/xmin < 1`, which is the bounded-noise
/// condition at `ε = 0` divided by `xmin`.
pub fn noiseless_condition(
    profile: &CoherenceProfile,
    k: usize,
    norms: BlockNorms,
    algo: Algorithm,
) -> Result<bool> {
    check_k(profile, k)?;
    let d = profile.block_size as f64;
    let spread = profile.intra_block_spread();
    let coupling = (2.0 * k as f64 - 1.0) * d * profile.mu_block;
    Ok(match algo {
        Algorithm::Bomp => spread + coupling < 1.0,
        Algorithm::Bth => {
            if norms.xmin <= 0.0 {
                false
            } else {
                spread + coupling * (norms.xmax / norms.xmin) < 1.0
            }
        }
    })
}

/// Cramér–Rao bound for a support `S` of the declared sparsity.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrbResult {
    /// `σ² Tr((D_SᵀD_S)⁻¹)`, present only when `|S| = k`.
    pub bound: Option<f64>,
    /// Whether a finite-variance unbiased estimator can exist, i.e. `|S| = k`.
    pub unbiased_estimable: bool,
}

/// `σ² Tr((D_SᵀD_S)⁻¹)` for the ascending block set `support` at sparsity `k`.
///
/// When `|S| < k` no unbiased estimator with finite variance exists and the
/// bound is omitted. The rank of `D_S` is checked in either case.
pub fn crb(dict: &BlockedDictionary, support: &[usize], sigma2: f64, k: usize) -> Result<CrbResult> {
    check_nonneg("sigma2", sigma2)?;
    linalg::check_block_set(support, dict.num_blocks())?;
    if support.len() > k {
        return Err(Error::invalid(format!(
            "support has {} blocks, more than k = {k}",
            support.len()
        )));
    }
    if support.is_empty() {
        return Ok(CrbResult {
            bound: None,
            unbiased_estimable: false,
        });
    }
    let qr = linalg::factor_restricted(dict, support)?;
    let estimable = support.len() == k;
    Ok(CrbResult {
        bound: estimable.then(|| sigma2 * qr.inverse_gram_trace()),
        unbiased_estimable: estimable,
    })
}

/// A probability bound, clipped and raw.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClippedBound {
    /// `min(raw, 1)`.
    pub value: f64,
    /// The expression as evaluated.
    pub raw: f64,
}

impl ClippedBound {
    fn new(raw: f64) -> Self {
        ClippedBound {
            value: raw.clamp(0.0, 1.0),
            raw,
        }
    }
}

/// Two upper bounds on `Pr{‖u‖₂ >= t}` for `u ~ N(0, I_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailBound {
    /// `(d−2)!! ⌈d/2⌉ / (2^{d/2−1} Γ(d/2)) · t^{d−2} e^{−t²/2}`.
    pub tight: ClippedBound,
    /// `0.8 d t^{d−2} e^{−t²/2}`.
    pub loose: ClippedBound,
}

/// `n!!` with `(−1)!! = 0!! = 1`.
fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut i = n;
    while i > 1 {
        acc *= i as f64;
        i -= 2;
    }
    acc
}

/// Tail bounds for the norm of a standard Gaussian vector in `d` dimensions; `t >= 1`.
pub fn chi_square_tail_bound(d: usize, t: f64) -> Result<TailBound> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be at least 1"));
    }
    if !(t >= 1.0) || !t.is_finite() {
        return Err(Error::invalid(format!(
            "chi-square tail bound requires t >= 1, got {t}"
        )));
    }
    let df = d as f64;
    let shape = t.powf(df - 2.0) * (-0.5 * t * t).exp();
    let coef = double_factorial(d as i64 - 2) * d.div_ceil(2) as f64
        / (2.0.powf(df / 2.0 - 1.0) * libm::tgamma(df / 2.0));
    Ok(TailBound {
        tight: ClippedBound::new(coef * shape),
        loose: ClippedBound::new(0.8 * df * shape),
    })
}

/// Smallest admissible α, `1 / (2d log N)`.
pub fn alpha_min(n: usize, d: usize) -> f64 {
    1.0 / (2.0 * d as f64 * (n as f64).ln())
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if d == 0 || n < 2 || !n.is_multiple_of(d) {
        return Err(Error::invalid(format!(
            "need N >= 2 divisible by d >= 1, got N={n}, d={d}"
        )));
    }
    Ok(())
}

fn event_b_raw(n: usize, d: usize, alpha: f64, form: ProbabilityForm) -> f64 {
    let df = d as f64;
    let ln_n = (n as f64).ln();
    let ln_p = 0.8.ln() + (df / 2.0 - 1.0) * (2.0 * alpha * df * ln_n).ln() - (alpha * df - 1.0) * ln_n;
    let p = ln_p.exp();
    match form {
        ProbabilityForm::Lemma5 => p,
        ProbabilityForm::Theorem4 => df * p,
    }
}

/// Bound on the probability that some block of `Dᵀw` has norm above `τ`,
/// `τ² = 2αdσ²(1 + (d−1)ν) log N`.
///
/// Requires `α >= 1 / (2d log N)`.
pub fn event_b_failure_bound(
    n: usize,
    d: usize,
    alpha: f64,
    form: ProbabilityForm,
) -> Result<ClippedBound> {
    check_dims(n, d)?;
    let lo = alpha_min(n, d);
    if !(alpha >= lo * (1.0 - 1e-12)) || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "alpha must be at least 1/(2 d log N) = {lo}, got {alpha}"
        )));
    }
    Ok(ClippedBound::new(event_b_raw(n, d, alpha, form)))
}

/// Smallest α whose failure bound is at most `1 − confidence`.
pub fn solve_alpha(n: usize, d: usize, confidence: f64, form: ProbabilityForm) -> Result<f64> {
    check_dims(n, d)?;
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let target = 1.0 - confidence;
    let f = |a: f64| event_b_raw(n, d, a, form);
    let a_min = alpha_min(n, d);
    if f(a_min) <= target {
        return Ok(a_min);
    }
    // The bound increases up to (d−2)/(2d log N) and decreases after it.
    let peak = (d as f64 - 2.0) / (2.0 * d as f64 * (n as f64).ln());
    let mut lo = a_min.max(peak);
    let mut hi = ALPHA_MAX;
    if f(hi) > target {
        return Err(Error::Solver(format!(
            "confidence {confidence} is not reached for alpha <= {ALPHA_MAX}"
        )));
    }
    while hi - lo > ALPHA_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `√(2αd(1 + (d−1)ν) log N)`, so that `τ = σ` times this.
fn tau_per_sigma(profile: &CoherenceProfile, alpha: f64) -> f64 {
    let d = profile.block_size as f64;
    let ln_n = (profile.signal_len() as f64).ln();
    (2.0 * alpha * d * (1.0 + profile.intra_block_spread()) * ln_n).sqrt()
}

/// Support-recovery guarantee under Gaussian noise at the given confidence.
///
/// With α from [`solve_alpha`], the condition is
/// `(1 − (d−1)ν) xmin − (2k−1) d μ_B x* >= 2σ √(2αd(1 + (d−1)ν) log N)`
/// and a positive left side. When it holds,
/// `‖x̂ − x‖₂² <= 2α(1 + (d−1)ν) d k σ² log N / (1 − (d−1)ν − (k−1) d μ_B)²`.
/// `sigma_max` is present whenever the left side is positive.
#[allow(clippy::too_many_arguments)]
pub fn gaussian_guarantee(
    profile: &CoherenceProfile,
    k: usize,
    norms: BlockNorms,
    sigma: f64,
    confidence: f64,
    algo: Algorithm,
    form: ProbabilityForm,
) -> Result<GuaranteeReport> {
    check_k(profile, k)?;
    check_nonneg("sigma", sigma)?;
    let n = profile.signal_len();
    let d = profile.block_size;
    let alpha = solve_alpha(n, d, confidence, form)?;
    let fail = ClippedBound::new(event_b_raw(n, d, alpha, form));
    let lhs = signal_margin(profile, k, norms, algo);
    let tau1 = tau_per_sigma(profile, alpha);
    let margin = lhs - 2.0 * sigma * tau1;
    let holds = lhs > 0.0 && margin >= 0.0;
    let error_bound = if holds {
        positive_floor(profile, k)?;
        gaussian_error_coefficient(profile, k, alpha)?.map(|c| c * sigma * sigma)
    } else {
        None
    };
    Ok(GuaranteeReport {
        algorithm: algo,
        noise_model: NoiseKind::Gaussian,
        condition_holds: holds,
        condition_margin: margin,
        error_bound,
        alpha: Some(alpha),
        failure_probability_bound: Some(fail.value),
        failure_probability_raw: Some(fail.raw),
        sigma_max: (lhs > 0.0).then(|| lhs / (2.0 * tau1)),
    })
}

/// `2α(1 + (d−1)ν) d k log N / (1 − (d−1)ν − (k−1) d μ_B)²`, the Gaussian
/// error bound divided by `σ²`. `None` when the denominator is not positive.
pub fn gaussian_error_coefficient(profile: &CoherenceProfile, k: usize, alpha: f64) -> Result<Option<f64>> {
    check_k(profile, k)?;
    check_nonneg("alpha", alpha)?;
    let den = profile.gram_eigen_floor(k);
    if den <= 0.0 {
        return Ok(None);
    }
    let tau1 = tau_per_sigma(profile, alpha);
    Ok(Some(k as f64 * tau1 * tau1 / (den * den)))
}

/// Diagnostic variant of `sigma_max` with the factor `d` dropped from under
/// the square root, `lhs / (2 √(2α(1 + (d−1)ν) log N))`.
///
/// This is not implied by the recovery condition; it is exposed only to
/// compare against published tables computed that way.
pub fn sigma_max_without_block_factor(
    profile: &CoherenceProfile,
    k: usize,
    norms: BlockNorms,
    alpha: f64,
    algo: Algorithm,
) -> Result<Option<f64>> {
    check_k(profile, k)?;
    check_nonneg("alpha", alpha)?;
    let lhs = signal_margin(profile, k, norms, algo);
    let root = tau_per_sigma(profile, alpha) / (profile.block_size as f64).sqrt();
    Ok((lhs > 0.0).then(|| lhs / (2.0 * root)))
}
