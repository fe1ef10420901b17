//! Exact calculators and numeric checks for the deterministic setting and
//! the supporting inequalities: the softmax gap function `f`, the exact
//! deterministic Gumbel regret, binomial CDFs, tail bounds and the Gumbel
//! privacy ratio.

use std::f64::consts::LN_2;

use num_bigint::BigUint;

use crate::domain::{MechanismSpec, NoiseKind};
use crate::error::{Error, Result};
use crate::mechanism::{
    gumbel_selection_pmf, max_probability_ratio, rnm_pmf_oracle, softmax_neg, ScoreVector,
};

/// Nonnegative weights `a_i` with at least one zero, the argument of the
/// softmax gap function `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxSpec {
    a: Vec<f64>,
}

impl SoftmaxSpec {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::EmptyInstance);
        }
        if let Some(&bad) = a.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::OutOfRange {
                what: "softmax weight must be finite and nonnegative",
                value: bad,
            });
        }
        if !a.contains(&0.0) {
            return Err(Error::InvalidArgument(
                "softmax weights must contain a zero".into(),
            ));
        }
        Ok(SoftmaxSpec { a })
    }

    /// Weights `Δ_j · ε` of a gap vector.
    pub fn from_gaps(gaps: &[f64], epsilon: f64) -> Result<Self> {
        Self::new(gaps.iter().map(|g| g * epsilon).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.a
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }
}

/// `f(x) = Σ 2^x a_i e^{-2^x a_i} / Σ e^{-2^x a_i}`.
pub fn softmax_f(spec: &SoftmaxSpec, x: f64) -> f64 {
    let s = x.exp2();
    let floor = spec.a.iter().copied().fold(f64::INFINITY, f64::min);
    let mut num = 0.0;
    let mut den = 0.0;
    for &a in &spec.a {
        let w = (-s * (a - floor)).exp();
        den += w;
        if w > 0.0 {
            num += s * a * w;
        }
    }
    num / den
}

/// Largest `f'(x) − ln 2 · f(x)` over `xs`, with `f'` from central
/// differences of step `h`.
pub fn check_derivative_bound(spec: &SoftmaxSpec, xs: &[f64], h: f64) -> f64 {
    assert!(h > 0.0, "step must be positive");
    xs.iter()
        .map(|&x| {
            let derivative = (softmax_f(spec, x + h) - softmax_f(spec, x - h)) / (2.0 * h);
            derivative - LN_2 * softmax_f(spec, x)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `Σ_{r=1}^{rounds} f(r)`.
pub fn partial_sum_f(spec: &SoftmaxSpec, rounds: u32) -> f64 {
    assert!(rounds >= 1, "need at least one term");
    (1..=rounds).map(|r| softmax_f(spec, f64::from(r))).sum()
}

/// `(1 + ln 2) / ln 2 · ln K`, an upper bound on every partial sum of `f`.
pub fn partial_sum_bound(k: usize) -> f64 {
    (1.0 + LN_2) / LN_2 * (k as f64).ln()
}

/// Contribution of one epoch to the exact deterministic Gumbel regret.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochContribution {
    pub r: u32,
    pub length: u64,
    /// `E[Δ_{J_{r-1}}]`.
    pub expected_gap: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GumbelRegretBreakdown {
    pub epochs: Vec<EpochContribution>,
    pub total: f64,
}

impl GumbelRegretBreakdown {
    /// Contribution of the last epoch, a witness of convergence in `R`.
    pub fn tail(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.regret)
    }
}

/// Per-epoch expected regret of the non-resampling Gumbel learner on the
/// deterministic instance `means` over `T = 2^rounds − 1`.
pub fn exact_det_gumbel_breakdown(
    means: &[f64],
    epsilon: f64,
    rounds: u32,
) -> GumbelRegretBreakdown {
    assert!(
        rounds >= 1 && epsilon > 0.0,
        "need rounds >= 1 and epsilon > 0"
    );
    assert!(!means.is_empty(), "need at least one action");
    let best = means.iter().copied().fold(f64::INFINITY, f64::min);
    let gaps: Vec<f64> = means.iter().map(|m| m - best).collect();
    let k = gaps.len() as f64;
    let mut epochs = vec![EpochContribution {
        r: 1,
        length: 1,
        expected_gap: gaps.iter().sum::<f64>() / k,
        regret: 0.0,
    }];
    epochs[0].regret = epochs[0].expected_gap;
    for r in 2..=rounds {
        // J_{r-1} is selected from G_{r-1} = 2^{r-2} · μ.
        let scores: Vec<f64> = gaps.iter().map(|g| g * (r as f64 - 2.0).exp2()).collect();
        let pmf = gumbel_selection_pmf(&ScoreVector(scores), epsilon);
        let expected_gap: f64 = pmf.iter().zip(&gaps).map(|(p, g)| p * g).sum();
        let length = 1u64 << (r - 1);
        epochs.push(EpochContribution {
            r,
            length,
            expected_gap,
            regret: length as f64 * expected_gap,
        });
    }
    let total = epochs.iter().map(|e| e.regret).sum();
    GumbelRegretBreakdown { epochs, total }
}

pub fn exact_det_gumbel_regret(means: &[f64], epsilon: f64, rounds: u32) -> f64 {
    exact_det_gumbel_breakdown(means, epsilon, rounds).total
}

/// `P[Bin(n, p) ≤ k]`, summed from log-space terms.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    assert!(
        k <= n && (0.0..=1.0).contains(&p),
        "need k <= n and p in [0, 1]"
    );
    if k == n || p == 0.0 {
        return 1.0;
    }
    if p == 1.0 {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut log_choose = 0.0;
    let mut terms = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        if i > 0 {
            log_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        terms.push(log_choose + i as f64 * lp + (n - i) as f64 * lq);
    }
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    (peak + sum.ln()).exp().min(1.0)
}

/// Outcome of comparing binomial CDFs across a grid of success probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonotonicityReport {
    pub comparisons: u64,
    pub violations: u64,
}

/// Checks `F(k; n, p₁) ≥ F(k; n, p₂)` for every `n ≤ n_max`, `k ≤ n` and
/// grid points `p₁ = m₁/d < p₂ = m₂/d`, in exact integer arithmetic:
/// `d^n · F(k; n, m/d) = Σ_{i≤k} C(n,i) m^i (d−m)^{n−i}`.
pub fn binomial_monotonicity_exact(n_max: u32, denominator: u32) -> MonotonicityReport {
    let d = denominator;
    let mut report = MonotonicityReport {
        comparisons: 0,
        violations: 0,
    };
    for n in 0..=n_max {
        let choose: Vec<BigUint> = (0..=n).map(|i| binomial_coefficient(n, i)).collect();
        // scaled[m][k] = d^n · F(k; n, m/d)
        let scaled: Vec<Vec<BigUint>> = (0..=d)
            .map(|m| {
                let mut acc = BigUint::from(0u32);
                (0..=n)
                    .map(|i| {
                        acc += &choose[i as usize]
                            * BigUint::from(m).pow(i)
                            * BigUint::from(d - m).pow(n - i);
                        acc.clone()
                    })
                    .collect()
            })
            .collect();
        for (i, lower) in scaled.iter().enumerate() {
            for higher in &scaled[i + 1..] {
                for (lo, hi) in lower.iter().zip(higher) {
                    report.comparisons += 1;
                    if lo < hi {
                        report.violations += 1;
                    }
                }
            }
        }
    }
    report
}

/// The same grid check on [`binomial_cdf`], allowing `tol` of rounding.
pub fn binomial_monotonicity_float(n_max: u32, denominator: u32, tol: f64) -> MonotonicityReport {
    let mut report = MonotonicityReport {
        comparisons: 0,
        violations: 0,
    };
    for n in 0..=u64::from(n_max) {
        for k in 0..=n {
            let column: Vec<f64> = (0..=denominator)
                .map(|m| binomial_cdf(k, n, f64::from(m) / f64::from(denominator)))
                .collect();
            for (i, &lo) in column.iter().enumerate() {
                for &hi in &column[i + 1..] {
                    report.comparisons += 1;
                    if hi > lo + tol {
                        report.violations += 1;
                    }
                }
            }
        }
    }
    report
}

fn binomial_coefficient(n: u32, k: u32) -> BigUint {
    (0..k).fold(BigUint::from(1u32), |acc, i| {
        acc * BigUint::from(n - i) / BigUint::from(i + 1)
    })
}

/// Constants of the epoch tail bounds that the analysis leaves unspecified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstants {
    pub laplace_c1: f64,
    pub laplace_c2: f64,
    /// Factor on the Gumbel noise exponent; 1/2 for noise of scale `2/ε`.
    pub gumbel_exponent: f64,
}

impl Default for TailConstants {
    fn default() -> Self {
        TailConstants {
            laplace_c1: 2.0,
            laplace_c2: 16.0,
            gumbel_exponent: 0.5,
        }
    }
}

/// Upper bound on `P[J_r = j]` for an action with gap `delta`, where
/// `J_r` is selected from the scores of an epoch of length `n = 2^{r−1}`.
pub fn tail_bound(
    kind: NoiseKind,
    r: u32,
    delta: f64,
    epsilon: f64,
    constants: &TailConstants,
) -> f64 {
    let n = f64::from(r - 1).exp2();
    let sampling = (-n * delta * delta / 4.0).exp();
    match kind {
        NoiseKind::Exponential => sampling + (-epsilon * n * delta / 2.0).exp(),
        NoiseKind::Gumbel => {
            (-n * delta * epsilon / 2.0 * constants.gumbel_exponent).exp() + sampling
        }
        NoiseKind::Laplace => {
            constants.laplace_c1
                * (-2.0 * n * delta * delta.min(epsilon) / constants.laplace_c2).exp()
        }
        NoiseKind::NoNoise => sampling,
    }
}

/// `max_j p_j(G) / p_j(G')` for the Gumbel selection law.
pub fn gumbel_privacy_ratio(g: &[f64], g_prime: &[f64], epsilon: f64) -> Result<f64> {
    check_adjacent(g, g_prime)?;
    let p = gumbel_selection_pmf(&ScoreVector(g.to_vec()), epsilon);
    let q = gumbel_selection_pmf(&ScoreVector(g_prime.to_vec()), epsilon);
    Ok(max_probability_ratio(&p, &q))
}

fn check_adjacent(g: &[f64], g_prime: &[f64]) -> Result<()> {
    if g.len() != g_prime.len() {
        return Err(Error::InvalidArgument(format!(
            "score vectors differ in length: {} vs {}",
            g.len(),
            g_prime.len()
        )));
    }
    for (index, (a, b)) in g.iter().zip(g_prime).enumerate() {
        let diff = (a - b).abs();
        if diff > 1.0 + 1e-12 {
            return Err(Error::AdjacencyViolation { index, diff });
        }
    }
    Ok(())
}

/// Worst selection-probability ratio found by a privacy audit.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyAudit {
    pub max_ratio: f64,
    pub worst: Option<(Vec<f64>, Vec<f64>)>,
    pub pairs: u64,
}

/// Enumerates every `G' = G + d` with each `d_i` drawn from `offsets`
/// (which must lie in `[−1, 1]`) for every base vector `G`, and records the
/// largest ratio `max_j p_j(G)/p_j(G')`. Gumbel uses the closed-form law;
/// the other kinds use the quadrature oracle.
pub fn privacy_audit(
    kind: NoiseKind,
    epsilon: f64,
    bases: &[Vec<f64>],
    offsets: &[f64],
) -> Result<PrivacyAudit> {
    let spec = MechanismSpec::new(false, kind, epsilon)?;
    let pmf = |g: &[f64]| -> Result<Vec<f64>> {
        let scores = ScoreVector(g.to_vec());
        match kind {
            NoiseKind::Gumbel => Ok(gumbel_selection_pmf(&scores, epsilon)),
            _ => rnm_pmf_oracle(&scores, &spec),
        }
    };
    let mut audit = PrivacyAudit {
        max_ratio: 0.0,
        worst: None,
        pairs: 0,
    };
    for base in bases {
        let p = pmf(base)?;
        let k = base.len();
        let combos = offsets.len().pow(k as u32);
        for code in 0..combos {
            let mut c = code;
            let neighbour: Vec<f64> = base
                .iter()
                .map(|g| {
                    let d = offsets[c % offsets.len()];
                    c /= offsets.len();
                    g + d
                })
                .collect();
            check_adjacent(base, &neighbour)?;
            let q = pmf(&neighbour)?;
            audit.pairs += 1;
            for (a, b, swap) in [(&p, &q, false), (&q, &p, true)] {
                let ratio = max_probability_ratio(a, b);
                if ratio > audit.max_ratio {
                    audit.max_ratio = ratio;
                    audit.worst = Some(if swap {
                        (neighbour.clone(), base.clone())
                    } else {
                        (base.clone(), neighbour.clone())
                    });
                }
            }
        }
    }
    Ok(audit)
}

/// Rescales softmax weights so that `p_j ∝ exp(-a_j)`; used to tie `f` to
/// the selection law of an epoch.
pub fn softmax_weights_pmf(spec: &SoftmaxSpec, x: f64) -> Vec<f64> {
    let s = x.exp2();
    softmax_neg(&spec.a.iter().map(|a| a * s).collect::<Vec<_>>(), 1.0)
}
