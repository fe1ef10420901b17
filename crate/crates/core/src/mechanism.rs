//! Per-epoch selection: Bernoulli resampling, report-noisy-max and exact
//! selection probabilities.
//!
//! The learner selects `argmax_j (-G_j + Q_j)` with `Q_j` i.i.d. noise, so
//! actions with small accumulated loss `G_j` are favoured. With Gumbel noise
//! of scale `β = 2/ε` the selection law is the softmax of `-G/β`.

use crate::domain::{MechanismSpec, NoiseKind};
use crate::error::{Error, Result};
use crate::noise::{NoiseDist, RngStream};
use crate::quadrature;

/// Largest `K` accepted by [`rnm_pmf_oracle`].
pub const ORACLE_MAX_ACTIONS: usize = 8;
/// Absolute tolerance of each oracle integral.
pub const ORACLE_ABS_TOL: f64 = 1e-9;
/// Tail mass discarded on each side of the noise density by the oracle.
pub const ORACLE_TAIL: f64 = 1e-12;

/// Accumulated (possibly resampled) losses of each action over one epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn zeros(k: usize) -> Self {
        ScoreVector(vec![0.0; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ScoreVector {
    fn from(v: Vec<f64>) -> Self {
        ScoreVector(v)
    }
}

impl From<&[f64]> for ScoreVector {
    fn from(v: &[f64]) -> Self {
        ScoreVector(v.to_vec())
    }
}

/// Replaces every coordinate by an independent Bernoulli bit with that mean.
pub fn bernoulli_resample(loss: &[f64], rng: &mut RngStream) -> Result<Vec<u8>> {
    if let Some(&bad) = loss.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfRange {
            what: "loss coordinate must lie in [0, 1]",
            value: bad,
        });
    }
    Ok(loss.iter().map(|&p| resample_bit(p, rng)).collect())
}

#[inline]
pub(crate) fn resample_bit(p: f64, rng: &mut RngStream) -> u8 {
    u8::from(rng.uniform() < p)
}

/// Report-noisy-max: `argmax_j (-G_j + Q_j)`.
///
/// Noise draws are taken for `j = 0..K` in order; exact ties (certain
/// without noise) are then broken uniformly with one extra draw.
pub fn report_noisy_max(scores: &ScoreVector, spec: &MechanismSpec, rng: &mut RngStream) -> usize {
    let dist = NoiseDist::for_spec(spec);
    let noisy = spec.noise != NoiseKind::NoNoise;
    let values: Vec<f64> = scores
        .0
        .iter()
        .map(|&g| if noisy { -g + dist.sample(rng) } else { -g })
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut winners = values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == best)
        .map(|(j, _)| j);
    let ties = values.iter().filter(|&&v| v == best).count();
    if ties > 1 {
        let pick = rng.index(ties);
        return winners.nth(pick).expect("pick < ties");
    }
    winners.next().unwrap_or(0)
}

/// Softmax of `-G/β` with `β = 2/ε`; the exact law of report-noisy-max
/// with Gumbel noise of that scale.
pub fn gumbel_selection_pmf(scores: &ScoreVector, epsilon: f64) -> Vec<f64> {
    softmax_neg(scores.as_slice(), 2.0 / epsilon)
}

/// `p_j ∝ exp(-(G_j - min G) / β)`.
pub fn softmax_neg(scores: &[f64], scale: f64) -> Vec<f64> {
    let lowest = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = scores
        .iter()
        .map(|&g| (-(g - lowest) / scale).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Selection probabilities of report-noisy-max by direct integration:
/// `p_j = ∫ f_Q(q) Π_{i≠j} F_Q(q + G_i - G_j) dq`.
///
/// Independent of the samplers and of the Gumbel closed form; used to
/// verify both on small instances.
pub fn rnm_pmf_oracle(scores: &ScoreVector, spec: &MechanismSpec) -> Result<Vec<f64>> {
    let g = scores.as_slice();
    let k = g.len();
    if k > ORACLE_MAX_ACTIONS {
        return Err(Error::TooManyActions {
            got: k,
            max: ORACLE_MAX_ACTIONS,
        });
    }
    if k == 0 {
        return Err(Error::EmptyInstance);
    }
    if spec.noise == NoiseKind::NoNoise {
        let lowest = g.iter().copied().fold(f64::INFINITY, f64::min);
        let count = g.iter().filter(|&&x| x == lowest).count() as f64;
        return Ok(g
            .iter()
            .map(|&x| if x == lowest { 1.0 / count } else { 0.0 })
            .collect());
    }
    let dist = NoiseDist::for_spec(spec);
    let (lo, hi) = dist.support_bounds(ORACLE_TAIL);
    let pmf = (0..k)
        .map(|j| {
            // Kinks where an opponent's CDF argument crosses 0 (Laplace and
            // exponential) and at the density's own kink at 0.
            let mut breaks: Vec<f64> = (0..k).filter(|&i| i != j).map(|i| g[j] - g[i]).collect();
            breaks.push(0.0);
            let integrand = |q: f64| {
                let mut value = dist.pdf(q);
                for (i, &gi) in g.iter().enumerate() {
                    if i != j {
                        value *= dist.cdf(q + gi - g[j]);
                    }
                }
                value
            };
            quadrature::integrate(integrand, lo, hi, &breaks, ORACLE_ABS_TOL, 4096).value
        })
        .collect();
    Ok(pmf)
}

/// `max_j p_j / q_j` over two probability vectors.
pub fn max_probability_ratio(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a / b
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(noise: NoiseKind, epsilon: f64) -> MechanismSpec {
        MechanismSpec::new(false, noise, epsilon).unwrap()
    }

    fn band(p: f64, n: usize) -> f64 {
        3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    fn empirical(scores: &ScoreVector, spec: &MechanismSpec, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed);
        let mut counts = vec![0usize; scores.k()];
        for _ in 0..n {
            counts[report_noisy_max(scores, spec, &mut rng)] += 1;
        }
        counts.into_iter().map(|c| c as f64 / n as f64).collect()
    }

    #[test]
    fn resample_degenerate_coordinates() {
        let mut rng = RngStream::new(1);
        for _ in 0..1000 {
            assert_eq!(
                bernoulli_resample(&[0.0, 1.0], &mut rng).unwrap(),
                vec![0, 1]
            );
        }
    }

    #[test]
    fn resample_mean_and_support() {
        let mut rng = RngStream::new(2);
        let n = 1_000_000;
        let mut ones = 0u64;
        for _ in 0..n {
            let bits = bernoulli_resample(&[0.3], &mut rng).unwrap();
            assert!(bits[0] <= 1);
            ones += u64::from(bits[0]);
        }
        assert!((ones as f64 / n as f64 - 0.3).abs() < 0.002);
    }

    #[test]
    fn resample_rejects_out_of_range() {
        let mut rng = RngStream::new(3);
        assert!(matches!(
            bernoulli_resample(&[0.5, 1.2], &mut rng),
            Err(Error::OutOfRange { .. })
        ));
        assert!(bernoulli_resample(&[-0.1], &mut rng).is_err());
    }

    #[test]
    fn no_noise_picks_unique_minimum() {
        let mut rng = RngStream::new(4);
        let s = MechanismSpec::non_private(false);
        assert_eq!(
            report_noisy_max(&vec![1.0, 2.0, 3.0].into(), &s, &mut rng),
            0
        );
    }

    #[test]
    fn no_noise_breaks_ties_uniformly() {
        let s = MechanismSpec::non_private(false);
        let n = 90_000;
        let freq = empirical(&vec![2.0, 1.0, 1.0, 1.0].into(), &s, n, 5);
        assert_eq!(freq[0], 0.0);
        for &f in &freq[1..] {
            assert!((f - 1.0 / 3.0).abs() <= band(1.0 / 3.0, n), "{freq:?}");
        }
    }

    #[test]
    fn exponential_two_action_selection() {
        let n = 1_000_000;
        let p = 0.5 * (-1.0f64).exp();
        let freq = empirical(
            &vec![0.0, 1.0].into(),
            &spec(NoiseKind::Exponential, 1.0),
            n,
            6,
        );
        assert!((freq[1] - p).abs() <= band(p, n), "{} vs {p}", freq[1]);
    }

    #[test]
    fn laplace_two_action_selection() {
        let n = 1_000_000;
        let (g, b) = (1.0f64, 2.0f64);
        let p = 0.25 * (2.0 + g / b) * (-g / b).exp();
        assert!((p - 0.3791).abs() < 1e-4);
        let freq = empirical(&vec![0.0, 1.0].into(), &spec(NoiseKind::Laplace, 1.0), n, 7);
        assert!((freq[1] - p).abs() <= band(p, n), "{} vs {p}", freq[1]);
    }

    #[test]
    fn gumbel_pmf_examples() {
        assert_eq!(
            gumbel_selection_pmf(&vec![0.0, 0.0].into(), 0.7),
            vec![0.5, 0.5]
        );
        let p = gumbel_selection_pmf(&vec![0.0, 1.0].into(), 2.0);
        let e = (-1.0f64).exp();
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-15);
        let far = gumbel_selection_pmf(&vec![0.0, 1e6].into(), 1.0);
        assert_eq!(far[0], 1.0);
        assert!(far[1] >= 0.0 && far[1] < 1e-300);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_gumbel_closed_form() {
        let g: ScoreVector = vec![0.0, 0.5, 2.0].into();
        let exact = gumbel_selection_pmf(&g, 1.0);
        let oracle = rnm_pmf_oracle(&g, &spec(NoiseKind::Gumbel, 1.0)).unwrap();
        for (a, b) in exact.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{exact:?} vs {oracle:?}");
        }
    }

    #[test]
    fn oracle_matches_two_action_closed_forms() {
        let g: ScoreVector = vec![0.0, 1.0].into();
        let exp = rnm_pmf_oracle(&g, &spec(NoiseKind::Exponential, 1.0)).unwrap();
        let p = 0.5 * (-1.0f64).exp();
        assert!(
            (exp[1] - p).abs() < 1e-6 && (exp[0] - (1.0 - p)).abs() < 1e-6,
            "{exp:?}"
        );
        assert!((exp[0] - 0.8161).abs() < 1e-4);

        let lap = rnm_pmf_oracle(&g, &spec(NoiseKind::Laplace, 1.0)).unwrap();
        let p = 0.25 * 2.5 * (-0.5f64).exp();
        assert!((lap[1] - p).abs() < 1e-6, "{lap:?}");
    }

    #[test]
    fn oracle_near_the_non_private_limit() {
        for kind in NoiseKind::NOISY {
            let p = rnm_pmf_oracle(&vec![0.0, 1.0].into(), &spec(kind, 100.0)).unwrap();
            assert!(
                (p[0] - 1.0).abs() < 1e-4 && p[1].abs() < 1e-4,
                "{kind}: {p:?}"
            );
        }
    }

    #[test]
    fn oracle_outputs_probability_vectors() {
        let cases: [&[f64]; 4] = [
            &[0.0],
            &[0.0, 0.0, 0.0],
            &[3.0, 0.5, 1.5, 0.0],
            &[0.0, 1.0, 2.0, 4.0, 8.0, 0.5, 0.25, 3.0],
        ];
        for g in cases {
            for kind in [
                NoiseKind::Laplace,
                NoiseKind::Exponential,
                NoiseKind::Gumbel,
                NoiseKind::NoNoise,
            ] {
                let p = rnm_pmf_oracle(&g.into(), &spec(kind, 0.8)).unwrap();
                assert!(p.iter().all(|&x| x >= -1e-12), "{kind} {p:?}");
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-7, "{kind} {p:?}");
            }
        }
    }

    #[test]
    fn oracle_rejects_large_k() {
        let g = ScoreVector::zeros(9);
        assert_eq!(
            rnm_pmf_oracle(&g, &spec(NoiseKind::Laplace, 1.0)),
            Err(Error::TooManyActions { got: 9, max: 8 })
        );
    }

    #[test]
    fn oracle_agrees_with_sampler_for_each_family() {
        let g: ScoreVector = vec![0.0, 0.7, 1.4].into();
        let n = 200_000;
        for (i, kind) in NoiseKind::NOISY.into_iter().enumerate() {
            let s = spec(kind, 1.0);
            let exact = rnm_pmf_oracle(&g, &s).unwrap();
            let freq = empirical(&g, &s, n, 40 + i as u64);
            for (p, f) in exact.iter().zip(&freq) {
                assert!(
                    (p - f).abs() <= band(*p, n),
                    "{kind}: {exact:?} vs {freq:?}"
                );
            }
        }
    }
}
