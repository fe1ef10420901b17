//! Seeded randomness and the three noise families (Laplace, exponential,
//! Gumbel), all sampled by inverting their CDFs so that every draw is a
//! function of the underlying uniform stream alone.

use rand::distributions::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{MechanismSpec, NoiseKind};

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under base seed `base`: `mix64(base ^ mix64(index))`.
///
/// Depends only on `(base, index)`, so trials can run in any order.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index))
}

/// Single-owner deterministic generator (ChaCha8 keyed by a 64-bit seed).
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn derived(base: u64, index: u64) -> Self {
        Self::new(derive_seed(base, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

pub fn laplace_quantile(scale: f64, u: f64) -> f64 {
    let c = u - 0.5;
    -scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

pub fn laplace_cdf(scale: f64, x: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

pub fn laplace_pdf(scale: f64, x: f64) -> f64 {
    (-x.abs() / scale).exp() / (2.0 * scale)
}

pub fn exponential_quantile(scale: f64, u: f64) -> f64 {
    -scale * (-u).ln_1p()
}

pub fn exponential_cdf(scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x / scale).exp_m1()
    }
}

pub fn exponential_pdf(scale: f64, x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        (-x / scale).exp() / scale
    }
}

pub fn gumbel_quantile(scale: f64, u: f64) -> f64 {
    -scale * (-u.ln()).ln()
}

pub fn gumbel_cdf(scale: f64, x: f64) -> f64 {
    (-(-x / scale).exp()).exp()
}

pub fn gumbel_pdf(scale: f64, x: f64) -> f64 {
    let z = x / scale;
    (-z - (-z).exp()).exp() / scale
}

/// Laplace with location 0 and scale `β` (density `e^{-|x|/β} / 2β`).
pub fn sample_laplace(scale: f64, rng: &mut RngStream) -> f64 {
    laplace_quantile(scale, rng.uniform_open())
}

/// Exponential with mean `β`.
pub fn sample_exponential(scale: f64, rng: &mut RngStream) -> f64 {
    exponential_quantile(scale, rng.uniform())
}

/// Gumbel (maximum) with location 0 and scale `β`: `-β ln(-ln u)`.
pub fn sample_gumbel(scale: f64, rng: &mut RngStream) -> f64 {
    gumbel_quantile(scale, rng.uniform_open())
}

pub fn noise_scale(spec: &MechanismSpec) -> f64 {
    spec.scale()
}

/// A noise family at a fixed scale, with sampling and distribution functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDist {
    pub kind: NoiseKind,
    pub scale: f64,
}

impl NoiseDist {
    pub fn new(kind: NoiseKind, scale: f64) -> Self {
        NoiseDist { kind, scale }
    }

    pub fn for_spec(spec: &MechanismSpec) -> Self {
        NoiseDist {
            kind: spec.noise,
            scale: spec.scale(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self.kind {
            NoiseKind::Laplace => sample_laplace(self.scale, rng),
            NoiseKind::Exponential => sample_exponential(self.scale, rng),
            NoiseKind::Gumbel => sample_gumbel(self.scale, rng),
            NoiseKind::NoNoise => 0.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            NoiseKind::Laplace => laplace_cdf(self.scale, x),
            NoiseKind::Exponential => exponential_cdf(self.scale, x),
            NoiseKind::Gumbel => gumbel_cdf(self.scale, x),
            NoiseKind::NoNoise => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.kind {
            NoiseKind::Laplace => laplace_pdf(self.scale, x),
            NoiseKind::Exponential => exponential_pdf(self.scale, x),
            NoiseKind::Gumbel => gumbel_pdf(self.scale, x),
            NoiseKind::NoNoise => 0.0,
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self.kind {
            NoiseKind::Laplace => laplace_quantile(self.scale, u),
            NoiseKind::Exponential => exponential_quantile(self.scale, u),
            NoiseKind::Gumbel => gumbel_quantile(self.scale, u),
            NoiseKind::NoNoise => 0.0,
        }
    }

    /// Interval outside which each tail carries less than `tail` mass.
    pub fn support_bounds(&self, tail: f64) -> (f64, f64) {
        let upper = self.quantile(1.0 - tail);
        let lower = match self.kind {
            NoiseKind::Exponential => 0.0,
            _ => self.quantile(tail),
        };
        (lower, upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 1_000_000;

    fn moments(samples: &[f64]) -> (f64, f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    fn ks_distance(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn quantiles_at_reference_points() {
        assert_eq!(laplace_quantile(2.0, 0.5), 0.0);
        assert_eq!(exponential_quantile(1.0, 0.0), 0.0);
        assert!((gumbel_quantile(1.0, (-1.0f64).exp()) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_moments() {
        let mut rng = RngStream::new(11);
        let xs: Vec<f64> = (0..N).map(|_| sample_laplace(2.0, &mut rng)).collect();
        let (mean, var) = moments(&xs);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 8.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn exponential_moments_and_support() {
        let mut rng = RngStream::new(12);
        let xs: Vec<f64> = (0..N).map(|_| sample_exponential(1.0, &mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let (mean, _) = moments(&xs);
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn gumbel_mean_is_euler_gamma() {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let mut rng = RngStream::new(13);
        let xs: Vec<f64> = (0..N).map(|_| sample_gumbel(1.0, &mut rng)).collect();
        let (mean, _) = moments(&xs);
        assert!((mean - EULER_GAMMA).abs() < 0.01, "mean {mean}");
    }

    fn gumbel_win_rate(scores: [f64; 2], draws: usize, seed: u64) -> f64 {
        let mut rng = RngStream::new(seed);
        let wins = (0..draws)
            .filter(|_| {
                let a = scores[0] + sample_gumbel(1.0, &mut rng);
                let b = scores[1] + sample_gumbel(1.0, &mut rng);
                a > b
            })
            .count();
        wins as f64 / draws as f64
    }

    #[test]
    fn gumbel_argmax_follows_softmax() {
        let draws = 100_000;
        let band = |p: f64| 3.0 * (p * (1.0 - p) / draws as f64).sqrt();

        let even = gumbel_win_rate([0.0, 0.0], draws, 21);
        assert!((even - 0.5).abs() <= band(0.5), "{even}");

        let e = std::f64::consts::E;
        let p = e / (e + 1.0);
        let skew = gumbel_win_rate([0.0, -1.0], draws, 22);
        assert!((skew - p).abs() <= band(p), "{skew} vs {p}");
    }

    #[test]
    fn ks_distance_against_analytic_cdfs() {
        for (i, &scale) in [0.5, 1.0, 2.0].iter().enumerate() {
            for kind in NoiseKind::NOISY {
                let dist = NoiseDist::new(kind, scale);
                let mut rng = RngStream::new(100 + i as u64);
                let xs: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
                let d = ks_distance(xs, |x| dist.cdf(x));
                assert!(d < 0.01, "{kind} scale {scale}: KS {d}");
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_streams() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for kind in NoiseKind::NOISY {
            let dist = NoiseDist::new(kind, 1.3);
            for _ in 0..1000 {
                assert_eq!(dist.sample(&mut a).to_bits(), dist.sample(&mut b).to_bits());
            }
        }
        let mut c = RngStream::derived(42, 1);
        let mut d = RngStream::derived(42, 2);
        assert_ne!(c.uniform(), d.uniform());
    }

    #[test]
    fn densities_integrate_to_cdf_increments() {
        // Coarse midpoint rule; checks the 1/(2β) Laplace normalization.
        for kind in NoiseKind::NOISY {
            let dist = NoiseDist::new(kind, 0.7);
            let a = if kind == NoiseKind::Exponential {
                0.0
            } else {
                -1.0
            };
            let b = 2.0;
            let n = 200_000;
            let h = (b - a) / n as f64;
            let integral: f64 = (0..n).map(|i| dist.pdf(a + (i as f64 + 0.5) * h) * h).sum();
            assert!(
                (integral - (dist.cdf(b) - dist.cdf(a))).abs() < 1e-6,
                "{kind}"
            );
        }
    }

    #[test]
    fn spec_scales() {
        let lap = MechanismSpec::new(false, NoiseKind::Laplace, 2.0).unwrap();
        let exp = MechanismSpec::new(false, NoiseKind::Exponential, 4.0).unwrap();
        assert_eq!(noise_scale(&lap), 1.0);
        assert_eq!(noise_scale(&exp), 0.25);
        assert_eq!(noise_scale(&MechanismSpec::non_private(true)), 0.0);
    }
}
