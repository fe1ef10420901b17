//! Verification suites behind `dpexperts verify`. Each suite returns one
//! [`CheckResult`] per property; Monte Carlo checks use 3σ binomial slack.

use crate::analysis::{
    binomial_monotonicity_exact, binomial_monotonicity_float, check_derivative_bound,
    exact_det_gumbel_regret, partial_sum_bound, partial_sum_f, privacy_audit, tail_bound,
    SoftmaxSpec, TailConstants,
};
use crate::domain::{make_instance, LossModel, MechanismSpec, NoiseKind};
use crate::engine::{epoch_lengths, run_rnm_ftnl};
use crate::error::{Error, Result};
use crate::harness::{
    estimate_pseudoregret, read_csv, relative_spread, selection_frequency, sweep_with, write_csv,
    Execution, NamedInstance, SweepGrid,
};
use crate::instances::{
    bernoulli_instance, deterministic_instance, lower_bound_family, uniform_grid_means,
};
use crate::mechanism::{gumbel_selection_pmf, report_noisy_max, rnm_pmf_oracle, ScoreVector};
use crate::noise::{NoiseDist, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Domain,
    Noise,
    Gumbel,
    Privacy,
    Oracle,
    Epochs,
    Monotonicity,
    Tails,
    Instances,
    Harness,
    Binomial,
    Derivative,
    PartialSum,
    Shape,
    LaplaceShape,
    Cli,
}

impl Suite {
    pub const ALL: [Suite; 16] = [
        Suite::Domain,
        Suite::Noise,
        Suite::Gumbel,
        Suite::Privacy,
        Suite::Oracle,
        Suite::Epochs,
        Suite::Monotonicity,
        Suite::Tails,
        Suite::Instances,
        Suite::Harness,
        Suite::Binomial,
        Suite::Derivative,
        Suite::PartialSum,
        Suite::Shape,
        Suite::LaplaceShape,
        Suite::Cli,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Domain => "domain",
            Suite::Noise => "noise",
            Suite::Gumbel => "gumbel",
            Suite::Privacy => "privacy",
            Suite::Oracle => "oracle",
            Suite::Epochs => "epochs",
            Suite::Monotonicity => "monotonicity",
            Suite::Tails => "tails",
            Suite::Instances => "instances",
            Suite::Harness => "harness",
            Suite::Binomial => "binomial",
            Suite::Derivative => "derivative",
            Suite::PartialSum => "partial-sum",
            Suite::Shape => "shape",
            Suite::LaplaceShape => "laplace-shape",
            Suite::Cli => "cli",
        }
    }
}

/// Resolves a suite name, or every suite for `all`.
pub fn select(name: &str) -> Result<Vec<Suite>> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Suite::ALL
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .map(|s| vec![s])
        .ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            Error::InvalidArgument(format!(
                "unknown suite `{name}`; expected all or one of {}",
                names.join(", ")
            ))
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = RngStream::derived(seed, suite as u64);
    match suite {
        Suite::Domain => domain_checks(&mut rng),
        Suite::Noise => noise_checks(&mut rng),
        Suite::Gumbel => gumbel_checks(&mut rng),
        Suite::Privacy => privacy_checks(&mut rng),
        Suite::Oracle => oracle_checks(&mut rng),
        Suite::Epochs => epoch_checks(&mut rng),
        Suite::Monotonicity => monotonicity_checks(&mut rng),
        Suite::Tails => tail_checks(&mut rng),
        Suite::Instances => instance_checks(&mut rng),
        Suite::Harness => harness_checks(&mut rng),
        Suite::Binomial => Ok(binomial_checks()),
        Suite::Derivative => Ok(derivative_checks(&mut rng)),
        Suite::PartialSum => Ok(partial_sum_checks(&mut rng)),
        Suite::Shape => Ok(shape_checks()),
        Suite::LaplaceShape => laplace_shape_checks(&mut rng),
        Suite::Cli => cli_checks(&mut rng),
    }
}

fn sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn random_model(rng: &mut RngStream) -> LossModel {
    match rng.index(3) {
        0 => LossModel::point(rng.uniform()),
        1 => LossModel::bernoulli(rng.uniform()),
        _ => {
            let n = 1 + rng.index(6);
            let weights: Vec<f64> = (0..n).map(|_| rng.uniform() + 1e-3).collect();
            let total: f64 = weights.iter().sum();
            LossModel::finite(weights.iter().map(|w| (rng.uniform(), w / total)).collect())
        }
    }
}

/// `a · b = p + e` exactly.
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Double-double summation of exact products.
fn dot_double_double(pairs: &[(f64, f64)]) -> f64 {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for &(a, b) in pairs {
        let (p, e) = two_product(a, b);
        let s = hi + p;
        let bp = s - hi;
        let err = (hi - (s - bp)) + (p - bp);
        hi = s;
        lo += err + e;
    }
    hi + lo
}

fn domain_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let mut gap_failures = 0;
    for _ in 0..500 {
        let k = 1 + rng.index(10);
        let inst = make_instance((0..k).map(|_| random_model(rng)).collect())?;
        let best = inst.means().iter().copied().fold(f64::INFINITY, f64::min);
        let min_gap = inst.gaps().iter().copied().fold(f64::INFINITY, f64::min);
        let exact = inst
            .gaps()
            .iter()
            .zip(inst.means())
            .all(|(g, m)| *g == m - best);
        if min_gap != 0.0 || !exact {
            gap_failures += 1;
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = 1 + rng.index(20);
        let weights: Vec<f64> = (0..n).map(|_| rng.uniform() + 1e-6).collect();
        let total: f64 = weights.iter().sum();
        let atoms: Vec<(f64, f64)> = weights.iter().map(|w| (rng.uniform(), w / total)).collect();
        let model = LossModel::finite(atoms.clone());
        model.validate()?;
        worst = worst.max((model.mean() - dot_double_double(&atoms)).abs());
    }
    Ok(vec![
        CheckResult::new(
            "gaps are exact offsets from the best mean",
            gap_failures == 0,
            format!("{gap_failures}/500 failures"),
        ),
        CheckResult::new(
            "finite-support mean vs double-double sum",
            worst <= 1e-12,
            format!("max error {worst:.2e}"),
        ),
    ])
}

fn ks_distance(mut samples: Vec<f64>, dist: &NoiseDist) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn noise_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    for kind in NoiseKind::NOISY {
        for scale in [0.5, 1.0, 2.0] {
            let dist = NoiseDist::new(kind, scale);
            let samples: Vec<f64> = (0..100_000).map(|_| dist.sample(rng)).collect();
            worst = worst.max(ks_distance(samples, &dist));
        }
    }
    out.push(CheckResult::new(
        "KS distance < 0.01 (3 families x 3 scales)",
        worst < 0.01,
        format!("max {worst:.4}"),
    ));
    let seed = rng.index(1 << 30) as u64;
    let draw = |seed| {
        let mut r = RngStream::new(seed);
        NoiseKind::NOISY
            .iter()
            .flat_map(|&k| {
                (0..1000)
                    .map(|_| NoiseDist::new(k, 1.0).sample(&mut r))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let (a, b) = (draw(seed), draw(seed));
    let identical = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    out.push(CheckResult::new(
        "same seed gives bitwise-identical samples",
        identical,
        format!("{} samples", a.len()),
    ));
    Ok(out)
}

fn gumbel_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let draws = 100_000u64;
    let mut failures = 0;
    let mut comparisons = 0;
    for eps in [0.5, 1.0, 2.0] {
        let k = 2 + rng.index(4);
        let scores = ScoreVector((0..k).map(|_| 5.0 * rng.uniform()).collect());
        let pmf = gumbel_selection_pmf(&scores, eps);
        let spec = MechanismSpec::new(false, NoiseKind::Gumbel, eps)?;
        let mut counts = vec![0u64; k];
        for _ in 0..draws {
            counts[report_noisy_max(&scores, &spec, rng)] += 1;
        }
        for (p, c) in pmf.iter().zip(&counts) {
            comparisons += 1;
            if (*c as f64 / draws as f64 - p).abs() > 3.0 * sigma(*p, draws) {
                failures += 1;
            }
        }
    }
    Ok(vec![CheckResult::new(
        "Gumbel argmax frequencies match softmax",
        failures == 0,
        format!("{failures}/{comparisons} outside 3 sigma, {draws} draws each"),
    )])
}

fn random_bases(rng: &mut RngStream, count: usize, max_k: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            (0..2 + rng.index(max_k - 1))
                .map(|_| (rng.uniform() * 6.0).round() / 2.0)
                .collect()
        })
        .collect()
}

fn privacy_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let bases = random_bases(rng, 12, 4);
    let fine = [-1.0, -0.5, 0.0, 0.5, 1.0];
    for eps in [0.5, 1.0, 2.0] {
        let audit = privacy_audit(NoiseKind::Gumbel, eps, &bases, &fine)?;
        out.push(CheckResult::new(
            format!("Gumbel exact ratio <= e^eps at eps={eps}"),
            audit.max_ratio <= eps.exp() + 1e-9,
            format!(
                "max {:.6} vs {:.6} over {} pairs",
                audit.max_ratio,
                eps.exp(),
                audit.pairs
            ),
        ));
    }
    let oracle_bases = random_bases(rng, 4, 4);
    for kind in [NoiseKind::Laplace, NoiseKind::Exponential] {
        let eps = 1.0;
        let audit = privacy_audit(kind, eps, &oracle_bases, &[-1.0, 0.0, 1.0])?;
        let worst = audit
            .worst
            .as_ref()
            .map_or(String::new(), |(g, h)| format!(" at {g:?} vs {h:?}"));
        out.push(CheckResult::new(
            format!("{kind} oracle ratio <= e^eps at eps={eps}"),
            audit.max_ratio <= eps.exp() + 1e-6,
            format!("max {:.6} vs {:.6}{worst}", audit.max_ratio, eps.exp()),
        ));
    }
    Ok(out)
}

fn oracle_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let mut worst = 0.0f64;
    let mut negative = 0;
    for kind in [
        NoiseKind::Laplace,
        NoiseKind::Exponential,
        NoiseKind::Gumbel,
        NoiseKind::NoNoise,
    ] {
        for _ in 0..10 {
            let k = 1 + rng.index(8);
            let scores = ScoreVector((0..k).map(|_| 5.0 * rng.uniform()).collect());
            let spec = match kind {
                NoiseKind::NoNoise => MechanismSpec::non_private(false),
                _ => MechanismSpec::new(false, kind, 0.5 + 1.5 * rng.uniform())?,
            };
            let pmf = rnm_pmf_oracle(&scores, &spec)?;
            negative += pmf.iter().filter(|&&p| p < 0.0).count();
            worst = worst.max((pmf.iter().sum::<f64>() - 1.0).abs());
        }
    }
    Ok(vec![CheckResult::new(
        "quadrature pmf is a probability vector",
        negative == 0 && worst <= 1e-7,
        format!("max |sum - 1| = {worst:.2e}, {negative} negative entries"),
    )])
}

fn epoch_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let covered = (1..=1000u64).all(|t| epoch_lengths(t).iter().sum::<u64>() == t);
    let inst = make_instance(vec![
        LossModel::point(0.3),
        LossModel::bernoulli(0.4),
        random_model(rng),
    ])?;
    let mut reproducible = true;
    for resample in [false, true] {
        for kind in NoiseKind::NOISY {
            let spec = MechanismSpec::new(resample, kind, 1.0)?;
            let seed = rng.index(1 << 30) as u64;
            let a = run_rnm_ftnl(&inst, &spec, 500, &mut RngStream::new(seed))?;
            let b = run_rnm_ftnl(&inst, &spec, 500, &mut RngStream::new(seed))?;
            reproducible &= a == b;
        }
    }
    Ok(vec![
        CheckResult::new("epoch lengths partition T = 1..1000", covered, ""),
        CheckResult::new(
            "identical seeds give identical run records",
            reproducible,
            "6 specs",
        ),
    ])
}

fn monotonicity_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let trials = 100_000;
    let inst = bernoulli_instance(&[0.2, 0.5, 0.8])?;
    let mut out = Vec::new();
    for kind in NoiseKind::NOISY {
        let spec = MechanismSpec::new(true, kind, 1.0)?;
        let freq = selection_frequency(&inst, &spec, 6, trials, rng.index(1 << 30) as u64)?;
        let mut ok = true;
        for j in 0..freq.len() {
            ok &= freq[j] <= 1.0 / (j + 1) as f64 + 3.0 * sigma(freq[j], trials);
            if j > 0 {
                let (a, b) = (freq[j - 1], freq[j]);
                let diff_sigma = ((a + b - (a - b).powi(2)) / trials as f64).sqrt();
                ok &= b <= a + 3.0 * diff_sigma;
            }
        }
        out.push(CheckResult::new(
            format!("selection frequencies monotone, <= 1/j ({kind})"),
            ok,
            format!("{freq:.4?}"),
        ));
    }
    Ok(out)
}

fn tail_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let trials = 100_000;
    let inst = bernoulli_instance(&[0.1, 0.6])?;
    let constants = TailConstants::default();
    let mut out = Vec::new();
    for kind in NoiseKind::NOISY {
        let spec = MechanismSpec::new(true, kind, 1.0)?;
        let mut ok = true;
        let mut detail = Vec::new();
        for r in 4..=8 {
            let freq = selection_frequency(&inst, &spec, r, trials, rng.index(1 << 30) as u64)?;
            let bound = tail_bound(kind, r, 0.5, 1.0, &constants);
            ok &= freq[1] <= bound + 3.0 * sigma(freq[1], trials);
            detail.push(format!("r={r}: {:.4} <= {:.4}", freq[1], bound));
        }
        out.push(CheckResult::new(
            format!("P[J_r = suboptimal] <= tail bound ({kind})"),
            ok,
            detail.join(", "),
        ));
    }
    Ok(out)
}

fn instance_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let mut shape_ok = true;
    let mut deterministic = true;
    for _ in 0..200 {
        let k = 6 + rng.index(100);
        let delta = 0.001 + 0.998 * rng.uniform();
        let l = 1 + rng.index(k);
        let inst = lower_bound_family(k, delta, l)?;
        let m = inst.means();
        shape_ok &= m.iter().filter(|&&x| x == 0.0).count() == 1
            && m.iter().filter(|&&x| x == delta).count() == 2
            && m.iter().filter(|&&x| x == 1.0).count() == k - 3;
        deterministic &= inst == lower_bound_family(k, delta, l)?;
    }
    Ok(vec![
        CheckResult::new(
            "lower-bound family has one 0, two delta, K-3 ones",
            shape_ok,
            "200 random (K, delta, l)",
        ),
        CheckResult::new("constructors are deterministic", deterministic, ""),
    ])
}

fn harness_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let grid = SweepGrid {
        instances: vec![
            NamedInstance::new("bern:0.2,0.5,0.6", bernoulli_instance(&[0.2, 0.5, 0.6])?),
            NamedInstance::new(
                "lower-bound:K=6,delta=0.2,l=3",
                lower_bound_family(6, 0.2, 3)?,
            ),
        ],
        specs: vec![
            MechanismSpec::new(true, NoiseKind::Laplace, 1.0)?,
            MechanismSpec::new(false, NoiseKind::Gumbel, 0.5)?,
        ],
        horizons: vec![63, 200],
    };
    let seed = rng.index(1 << 30) as u64;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_csv(&sweep_with(Execution::Parallel, &grid, 500, seed)?, &mut a)?;
    write_csv(
        &sweep_with(Execution::Sequential, &grid, 500, seed)?,
        &mut b,
    )?;
    let inst = bernoulli_instance(&[0.1, 0.3, 0.5])?;
    let spec = MechanismSpec::new(true, NoiseKind::Gumbel, 1.0)?;
    let small = estimate_pseudoregret(&inst, &spec, 255, 5_000, rng.index(1 << 30) as u64)?;
    let large = estimate_pseudoregret(&inst, &spec, 255, 20_000, rng.index(1 << 30) as u64)?;
    let ratio = small.stderr / large.stderr;
    Ok(vec![
        CheckResult::new(
            "parallel and sequential sweeps write identical CSV",
            a == b,
            format!("{} bytes", a.len()),
        ),
        CheckResult::new(
            "stderr halves when trials quadruple (20%)",
            (ratio - 2.0).abs() <= 0.4,
            format!("ratio {ratio:.3}"),
        ),
    ])
}

fn binomial_checks() -> Vec<CheckResult> {
    let exact = binomial_monotonicity_exact(50, 20);
    let float = binomial_monotonicity_float(50, 20, 1e-12);
    vec![
        CheckResult::new(
            "binomial CDF decreasing in p (exact, n <= 50)",
            exact.violations == 0,
            format!(
                "{} violations in {} comparisons",
                exact.violations, exact.comparisons
            ),
        ),
        CheckResult::new(
            "binomial CDF decreasing in p (floating point)",
            float.violations == 0,
            format!(
                "{} violations in {} comparisons",
                float.violations, float.comparisons
            ),
        ),
    ]
}

fn random_softmax_spec(rng: &mut RngStream, k: usize, max: f64) -> SoftmaxSpec {
    let mut a: Vec<f64> = (0..k).map(|_| max * rng.uniform()).collect();
    a[rng.index(k)] = 0.0;
    SoftmaxSpec::new(a).expect("valid weights")
}

fn derivative_checks(rng: &mut RngStream) -> Vec<CheckResult> {
    let xs: Vec<f64> = (0..=240).map(|i| -2.0 + f64::from(i) * 0.05).collect();
    let worst = (0..100)
        .map(|_| {
            let k = 2 + rng.index(15);
            check_derivative_bound(&random_softmax_spec(rng, k, 8.0), &xs, 1e-5)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    vec![CheckResult::new(
        "f'(x) <= ln2 f(x) on 100 random weight vectors",
        worst <= 1e-6,
        format!("max violation {worst:.2e}"),
    )]
}

fn partial_sum_checks(rng: &mut RngStream) -> Vec<CheckResult> {
    [2usize, 8, 64, 512]
        .into_iter()
        .map(|k| {
            let bound = partial_sum_bound(k);
            let worst = (0..100)
                .map(|_| partial_sum_f(&random_softmax_spec(rng, k, 8.0), 60))
                .fold(0.0, f64::max);
            CheckResult::new(
                format!("sum f(r) <= (1+ln2)/ln2 ln K for K={k}"),
                worst <= bound,
                format!("max {worst:.4} vs {bound:.4}"),
            )
        })
        .collect()
}

/// `regret / ln K` of the exact calculator across `K = 8, 16, …, 4096`.
pub fn k_shape_ratios() -> Vec<(usize, f64)> {
    (3..=12)
        .map(|p| 1usize << p)
        .map(|k| {
            (
                k,
                exact_det_gumbel_regret(&uniform_grid_means(k), 1.0, 40) / (k as f64).ln(),
            )
        })
        .collect()
}

/// `regret · ε` of the exact calculator at `K = 64`.
pub fn epsilon_shape_products() -> Vec<(f64, f64)> {
    let means = uniform_grid_means(64);
    [0.25, 0.5, 1.0, 2.0, 4.0]
        .into_iter()
        .map(|e| (e, exact_det_gumbel_regret(&means, e, 40) * e))
        .collect()
}

fn shape_checks() -> Vec<CheckResult> {
    let ratios: Vec<f64> = k_shape_ratios().into_iter().map(|(_, r)| r).collect();
    let (lo, hi) = (
        ratios.iter().copied().fold(f64::INFINITY, f64::min),
        ratios.iter().copied().fold(0.0, f64::max),
    );
    let products: Vec<f64> = epsilon_shape_products()
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let spread = relative_spread(&products);
    vec![
        CheckResult::new(
            "regret/ln K bounded across K = 8..4096",
            hi <= 2.0 * lo,
            format!("range {lo:.4}..{hi:.4}"),
        ),
        CheckResult::new(
            "regret*eps spread < 10% across eps at K = 64",
            spread < 0.10,
            format!("spread {:.2}%", 100.0 * spread),
        ),
    ]
}

/// Monte Carlo `regret · ε / ln² K` of the non-resampling Laplace learner
/// on uniform-grid instances, with standard errors.
pub fn laplace_log_squared_ratios(
    ks: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<(usize, f64, f64)>> {
    let spec = MechanismSpec::new(false, NoiseKind::Laplace, 1.0)?;
    ks.iter()
        .enumerate()
        .map(|(i, &k)| {
            let inst = deterministic_instance(&uniform_grid_means(k))?;
            let est = estimate_pseudoregret(
                &inst,
                &spec,
                (1 << 18) - 1,
                trials,
                seed.wrapping_add(i as u64),
            )?;
            let norm = (k as f64).ln().powi(2) / spec.epsilon;
            Ok((k, est.mean / norm, est.stderr / norm))
        })
        .collect()
}

fn laplace_shape_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    // C is fitted on the three smallest K and must cover the rest.
    let ks: Vec<usize> = (3..=10).map(|p| 1usize << p).collect();
    let ratios = laplace_log_squared_ratios(&ks, 2_000, rng.index(1 << 30) as u64)?;
    let fitted = ratios[..3]
        .iter()
        .map(|r| r.1 + 3.0 * r.2)
        .fold(0.0, f64::max);
    let covered = ratios[3..].iter().all(|r| r.1 - 3.0 * r.2 <= fitted);
    let detail: Vec<String> = ratios
        .iter()
        .map(|(k, r, _)| format!("K={k}: {r:.3}"))
        .collect();
    Ok(vec![CheckResult::new(
        "Laplace regret <= C ln^2 K / eps with C fitted on K <= 32",
        covered,
        format!("C = {fitted:.3}; {}", detail.join(", ")),
    )])
}

fn cli_checks(rng: &mut RngStream) -> Result<Vec<CheckResult>> {
    let seed = (rng.index(1 << 30)).to_string();
    let args = [
        "dpexperts",
        "run",
        "--instance",
        "det:0,0.5,1",
        "--noise",
        "laplace",
        "--eps",
        "0.5,1",
        "--T",
        "15,63",
        "--trials",
        "200",
        "--seed",
        &seed,
    ];
    let run = |args: &[&str]| {
        let mut out = Vec::new();
        let code = super::main_with(args.iter().copied(), &mut out, &mut std::io::sink());
        (code, out)
    };
    let (code_a, a) = run(&args);
    let (code_b, b) = run(&args);
    let rows = read_csv(a.as_slice());
    let plotted = rows
        .as_ref()
        .ok()
        .map(|rows| super::plot::render_svg(rows, crate::harness::Axis::T));
    let plot_ok = matches!(plotted, Some(Ok(ref svg)) if svg.matches("<polyline").count() == 2);
    Ok(vec![
        CheckResult::new("run output is accepted by plot", code_a == 0 && plot_ok, ""),
        CheckResult::new(
            "--seed fixes every output byte",
            code_a == 0 && code_b == 0 && a == b,
            format!("{} bytes", a.len()),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_resolve() {
        assert_eq!(select("all").unwrap().len(), Suite::ALL.len());
        for s in Suite::ALL {
            assert_eq!(select(s.name()).unwrap(), vec![s]);
        }
        assert!(select("bogus").is_err());
    }

    #[test]
    fn double_double_dot_is_exact_on_representable_sums() {
        assert_eq!(dot_double_double(&[(0.1, 0.5), (0.3, 0.5)]), 0.2);
        assert_eq!(
            dot_double_double(&[(1e16, 1.0), (1.0, 1.0), (-1e16, 1.0)]),
            1.0
        );
    }

    #[test]
    fn cheap_suites_pass() {
        for suite in [
            Suite::Domain,
            Suite::Binomial,
            Suite::Derivative,
            Suite::PartialSum,
            Suite::Shape,
            Suite::Epochs,
            Suite::Instances,
            Suite::Cli,
        ] {
            for check in run_suite(suite, 1).unwrap() {
                assert!(
                    check.passed,
                    "{}: {} ({})",
                    suite.name(),
                    check.name,
                    check.detail
                );
            }
        }
    }

    #[test]
    fn shape_numbers() {
        let ratios = k_shape_ratios();
        assert_eq!(ratios.len(), 10);
        assert!(
            ratios.iter().all(|&(_, r)| r > 5.0 && r < 6.0),
            "{ratios:?}"
        );
        let products = epsilon_shape_products();
        assert!(
            (products[0].1 - 23.88).abs() < 0.01 && (products[4].1 - 22.45).abs() < 0.01,
            "{products:?}"
        );
    }
}
