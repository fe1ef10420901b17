//! Monte Carlo estimation of pseudoregret and selection frequencies, grid
//! sweeps with CSV output, and scaling tables along one axis.
//!
//! Trial `i` of a cell seeded with `s` always runs on
//! `RngStream::derived(s, i)`, and per-trial results are reduced in trial
//! order. Parallel and sequential execution are therefore bitwise identical.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Instance, MechanismSpec, NoiseKind, RegretEstimate};
use crate::engine::{run_rnm_ftnl, selection_after_epochs};
use crate::error::{Error, Result};
use crate::noise::RngStream;

/// Exact CSV header of sweep output.
pub const CSV_HEADER: &str =
    "run_id,instance,K,B,noise,epsilon,T,trials,regret_mean,regret_stderr,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

fn map_trials<T, F>(exec: Execution, trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if trials < 1 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    match exec {
        Execution::Parallel => (0..trials).into_par_iter().map(f).collect(),
        Execution::Sequential => (0..trials).map(f).collect(),
    }
}

pub fn estimate_pseudoregret(
    instance: &Instance,
    spec: &MechanismSpec,
    horizon: u64,
    trials: u64,
    base_seed: u64,
) -> Result<RegretEstimate> {
    estimate_pseudoregret_with(
        Execution::default(),
        instance,
        spec,
        horizon,
        trials,
        base_seed,
    )
}

pub fn estimate_pseudoregret_with(
    exec: Execution,
    instance: &Instance,
    spec: &MechanismSpec,
    horizon: u64,
    trials: u64,
    base_seed: u64,
) -> Result<RegretEstimate> {
    let samples = map_trials(exec, trials, |i| {
        let mut rng = RngStream::derived(base_seed, i);
        run_rnm_ftnl(instance, spec, horizon, &mut rng).map(|rec| rec.pseudoregret)
    })?;
    RegretEstimate::from_samples(&samples)
}

/// Empirical law of `J_r` over independent simulations of epochs `1..=r`.
pub fn selection_frequency(
    instance: &Instance,
    spec: &MechanismSpec,
    r: u32,
    trials: u64,
    base_seed: u64,
) -> Result<Vec<f64>> {
    selection_frequency_with(Execution::default(), instance, spec, r, trials, base_seed)
}

pub fn selection_frequency_with(
    exec: Execution,
    instance: &Instance,
    spec: &MechanismSpec,
    r: u32,
    trials: u64,
    base_seed: u64,
) -> Result<Vec<f64>> {
    let picks = map_trials(exec, trials, |i| {
        let mut rng = RngStream::derived(base_seed, i);
        selection_after_epochs(instance, spec, r, &mut rng)
    })?;
    let mut counts = vec![0u64; instance.k()];
    for j in picks {
        counts[j] += 1;
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / trials as f64)
        .collect())
}

/// Normal-approximation half-width `z·sqrt(p(1-p)/n)` of a binomial proportion.
pub fn binomial_band(p: f64, trials: u64, z: f64) -> f64 {
    z * (p * (1.0 - p) / trials as f64).sqrt()
}

/// An instance together with the string that describes it in output.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedInstance {
    pub descriptor: String,
    pub instance: Instance,
}

impl NamedInstance {
    pub fn new(descriptor: impl Into<String>, instance: Instance) -> Self {
        NamedInstance {
            descriptor: descriptor.into(),
            instance,
        }
    }
}

/// Cartesian grid of instances × specs × horizons.
#[derive(Debug, Clone, Default)]
pub struct SweepGrid {
    pub instances: Vec<NamedInstance>,
    pub specs: Vec<MechanismSpec>,
    pub horizons: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub run_id: usize,
    pub instance: String,
    pub k: usize,
    pub delta_min: Option<f64>,
    pub spec: MechanismSpec,
    pub horizon: u64,
    pub trials: u64,
    /// Cell seed: `base_seed + run_id`.
    pub seed: u64,
    pub estimate: RegretEstimate,
}

/// Evaluates every cell in instance-major, then spec, then horizon order.
pub fn sweep(grid: &SweepGrid, trials: u64, base_seed: u64) -> Result<Vec<SweepCell>> {
    sweep_with(Execution::default(), grid, trials, base_seed)
}

pub fn sweep_with(
    exec: Execution,
    grid: &SweepGrid,
    trials: u64,
    base_seed: u64,
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for named in &grid.instances {
        for spec in &grid.specs {
            for &horizon in &grid.horizons {
                let run_id = cells.len();
                let seed = base_seed.wrapping_add(run_id as u64);
                let estimate =
                    estimate_pseudoregret_with(exec, &named.instance, spec, horizon, trials, seed)?;
                cells.push(SweepCell {
                    run_id,
                    instance: named.descriptor.clone(),
                    k: named.instance.k(),
                    delta_min: named.instance.delta_min(),
                    spec: *spec,
                    horizon,
                    trials,
                    seed,
                    estimate,
                });
            }
        }
    }
    Ok(cells)
}

/// One CSV row; numeric fields are kept as their `Display` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub run_id: usize,
    pub instance: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "B")]
    pub b: u8,
    pub noise: String,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub t: u64,
    pub trials: u64,
    pub regret_mean: f64,
    pub regret_stderr: f64,
    pub seed: u64,
}

impl From<&SweepCell> for CsvRow {
    fn from(c: &SweepCell) -> Self {
        CsvRow {
            run_id: c.run_id,
            instance: c.instance.clone(),
            k: c.k,
            b: c.spec.resample_bit(),
            noise: c.spec.noise.name().to_string(),
            epsilon: if c.spec.noise == NoiseKind::NoNoise {
                f64::INFINITY
            } else {
                c.spec.epsilon
            },
            t: c.horizon,
            trials: c.trials,
            regret_mean: c.estimate.mean,
            regret_stderr: c.estimate.stderr,
            seed: c.seed,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

pub fn write_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
    for cell in cells {
        let row = CsvRow::from(cell);
        w.write_record([
            row.run_id.to_string(),
            row.instance,
            row.k.to_string(),
            row.b.to_string(),
            row.noise,
            row.epsilon.to_string(),
            row.t.to_string(),
            row.trials.to_string(),
            row.regret_mean.to_string(),
            row.regret_stderr.to_string(),
            row.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::InvalidArgument(format!(
            "unexpected CSV header `{}`",
            header.join(",")
        )));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(csv_error))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    K,
    Epsilon,
    T,
    DeltaMin,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::K => "K",
            Axis::Epsilon => "epsilon",
            Axis::T => "T",
            Axis::DeltaMin => "delta_min",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K" | "k" => Ok(Axis::K),
            "epsilon" | "eps" => Ok(Axis::Epsilon),
            "T" | "t" => Ok(Axis::T),
            "delta_min" | "delta" => Ok(Axis::DeltaMin),
            other => Err(Error::InvalidArgument(format!("unknown axis `{other}`"))),
        }
    }
}

/// One row of a scaling table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub axis_value: f64,
    pub regret: f64,
    pub stderr: f64,
    /// `regret / ln K` (NaN for `K = 1`).
    pub per_log_k: f64,
    pub times_epsilon: f64,
    /// `regret · Δ_min` (NaN when `Δ_min` is undefined).
    pub times_delta_min: f64,
}

impl ScalingRow {
    pub fn normalized(&self, axis: Axis) -> f64 {
        match axis {
            Axis::K => self.per_log_k,
            Axis::Epsilon => self.times_epsilon,
            Axis::T => self.regret,
            Axis::DeltaMin => self.times_delta_min,
        }
    }
}

fn all_equal<T: PartialEq>(cells: &[SweepCell], f: impl Fn(&SweepCell) -> T) -> bool {
    cells.windows(2).all(|w| f(&w[0]) == f(&w[1]))
}

/// Regret along one axis, with the normalizations `regret/ln K`,
/// `regret·ε` and `regret·Δ_min`, sorted by axis value.
///
/// Fails with [`Error::AxisMismatch`] when the cells also vary in a
/// parameter that is not tied to `axis`.
pub fn scaling_report(cells: &[SweepCell], axis: Axis) -> Result<Vec<ScalingRow>> {
    let mismatch = |varying| {
        Err(Error::AxisMismatch {
            axis: axis.name(),
            varying,
        })
    };
    if !all_equal(cells, |c| (c.spec.resample, c.spec.noise)) {
        return mismatch("mechanism");
    }
    if axis != Axis::Epsilon && !all_equal(cells, |c| c.spec.epsilon.to_bits()) {
        return mismatch("epsilon");
    }
    if axis != Axis::T && !all_equal(cells, |c| c.horizon) {
        return mismatch("T");
    }
    match axis {
        Axis::K => {}
        Axis::DeltaMin => {
            if !all_equal(cells, |c| c.k) {
                return mismatch("K");
            }
        }
        Axis::Epsilon | Axis::T => {
            if !all_equal(cells, |c| c.instance.clone()) {
                return mismatch("instance");
            }
        }
    }
    let mut rows: Vec<ScalingRow> = cells
        .iter()
        .map(|c| {
            let regret = c.estimate.mean;
            let axis_value = match axis {
                Axis::K => c.k as f64,
                Axis::Epsilon => c.spec.epsilon,
                Axis::T => c.horizon as f64,
                Axis::DeltaMin => c.delta_min.unwrap_or(f64::NAN),
            };
            ScalingRow {
                axis_value,
                regret,
                stderr: c.estimate.stderr,
                per_log_k: if c.k > 1 {
                    regret / (c.k as f64).ln()
                } else {
                    f64::NAN
                },
                times_epsilon: regret * c.spec.epsilon,
                times_delta_min: c.delta_min.map_or(f64::NAN, |d| regret * d),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
    Ok(rows)
}

/// `(max - min) / min` of a column.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::exact_det_gumbel_regret;
    use crate::instances::{
        bernoulli_instance, deterministic_instance, lower_bound_family, uniform_grid_means,
    };
    use crate::mechanism::gumbel_selection_pmf;

    fn gumbel(epsilon: f64) -> MechanismSpec {
        MechanismSpec::new(false, NoiseKind::Gumbel, epsilon).unwrap()
    }

    #[test]
    fn trivial_estimates() {
        let spec = MechanismSpec::new(true, NoiseKind::Laplace, 1.0).unwrap();
        let one =
            estimate_pseudoregret(&bernoulli_instance(&[0.3]).unwrap(), &spec, 100, 50, 1).unwrap();
        assert_eq!((one.mean, one.stderr, one.trials), (0.0, 0.0, 50));
        let same =
            estimate_pseudoregret(&bernoulli_instance(&[0.6; 4]).unwrap(), &spec, 100, 50, 1)
                .unwrap();
        assert_eq!(same.mean, 0.0);
        assert!(
            estimate_pseudoregret(&bernoulli_instance(&[0.3]).unwrap(), &spec, 100, 0, 1).is_err()
        );
    }

    #[test]
    fn deterministic_non_private_estimate() {
        let inst = deterministic_instance(&[0.0, 1.0]).unwrap();
        let est = estimate_pseudoregret(&inst, &MechanismSpec::non_private(false), 63, 100_000, 8)
            .unwrap();
        assert!((est.mean - 0.5).abs() <= 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn symmetric_instance_has_uniform_selection() {
        let trials = 100_000;
        let inst = bernoulli_instance(&[0.4; 4]).unwrap();
        for spec in [
            MechanismSpec::non_private(true),
            MechanismSpec::new(false, NoiseKind::Exponential, 1.0).unwrap(),
        ] {
            let freq = selection_frequency(&inst, &spec, 4, trials, 2).unwrap();
            for f in freq {
                assert!((f - 0.25).abs() <= binomial_band(0.25, trials, 3.0), "{f}");
            }
        }
    }

    #[test]
    fn deterministic_gumbel_frequencies_match_softmax() {
        let trials = 100_000;
        let means = [0.0, 0.1, 0.25, 0.3];
        let inst = deterministic_instance(&means).unwrap();
        let r = 4;
        let scores: Vec<f64> = means.iter().map(|m| 8.0 * m).collect();
        let exact = gumbel_selection_pmf(&scores.into(), 1.0);
        let freq = selection_frequency(&inst, &gumbel(1.0), r, trials, 3).unwrap();
        for (p, f) in exact.iter().zip(&freq) {
            assert!(
                (p - f).abs() <= binomial_band(*p, trials, 3.0),
                "{exact:?} vs {freq:?}"
            );
        }
    }

    #[test]
    fn parallel_and_sequential_sweeps_write_identical_csv() {
        let grid = SweepGrid {
            instances: vec![
                NamedInstance::new("bern:0.2,0.5", bernoulli_instance(&[0.2, 0.5]).unwrap()),
                NamedInstance::new(
                    "lower-bound:K=6,delta=0.1,l=1",
                    lower_bound_family(6, 0.1, 1).unwrap(),
                ),
            ],
            specs: vec![
                MechanismSpec::new(true, NoiseKind::Laplace, 1.0).unwrap(),
                MechanismSpec::non_private(false),
            ],
            horizons: vec![31, 100],
        };
        let par = sweep_with(Execution::Parallel, &grid, 300, 5).unwrap();
        let seq = sweep_with(Execution::Sequential, &grid, 300, 5).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_csv(&par, &mut a).unwrap();
        write_csv(&seq, &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(par.len(), 8);
        assert!(par
            .iter()
            .enumerate()
            .all(|(i, c)| c.run_id == i && c.seed == 5 + i as u64));
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        let rows = read_csv(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].instance, "bern:0.2,0.5");
        assert!(rows[2].epsilon.is_infinite());
    }

    #[test]
    fn sweep_edge_cases() {
        assert!(sweep(&SweepGrid::default(), 10, 0).unwrap().is_empty());
        let inst = bernoulli_instance(&[0.1, 0.4, 0.5]).unwrap();
        let spec = MechanismSpec::new(true, NoiseKind::Gumbel, 0.5).unwrap();
        let grid = SweepGrid {
            instances: vec![NamedInstance::new("x", inst.clone())],
            specs: vec![spec],
            horizons: vec![200],
        };
        let cells = sweep(&grid, 500, 17).unwrap();
        assert_eq!(cells.len(), 1);
        let direct = estimate_pseudoregret(&inst, &spec, 200, 500, 17).unwrap();
        assert_eq!(cells[0].estimate, direct);
    }

    #[test]
    fn stderr_halves_when_trials_quadruple() {
        let inst = bernoulli_instance(&[0.1, 0.3, 0.5]).unwrap();
        let spec = MechanismSpec::new(true, NoiseKind::Laplace, 0.5).unwrap();
        let small = estimate_pseudoregret(&inst, &spec, 255, 4_000, 1).unwrap();
        let large = estimate_pseudoregret(&inst, &spec, 255, 16_000, 2).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((ratio - 2.0).abs() <= 0.4, "{ratio}");
    }

    #[test]
    fn scaling_report_axes() {
        let spec = gumbel(1.0);
        let instances: Vec<NamedInstance> = [0.2, 0.4]
            .into_iter()
            .map(|m| {
                NamedInstance::new(
                    format!("det:0,{m}"),
                    deterministic_instance(&[0.0, m]).unwrap(),
                )
            })
            .collect();
        let grid = SweepGrid {
            instances: instances[..1].to_vec(),
            specs: vec![spec],
            horizons: vec![1023, 4095, 16383],
        };
        let cells = sweep(&grid, 2_000, 3).unwrap();
        let rows = scaling_report(&cells, Axis::T).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.axis_value).collect::<Vec<_>>(),
            vec![1023.0, 4095.0, 16383.0]
        );
        // Regret has converged long before T = 1023.
        for w in rows.windows(2) {
            assert!(
                (w[0].regret - w[1].regret).abs() <= 3.0 * (w[0].stderr.hypot(w[1].stderr)) + 1e-12
            );
        }
        assert!(matches!(
            scaling_report(&cells, Axis::Epsilon),
            Err(Error::AxisMismatch { .. })
        ));

        let grid = SweepGrid {
            instances,
            specs: vec![spec],
            horizons: vec![63],
        };
        let cells = sweep(&grid, 100, 3).unwrap();
        assert!(matches!(
            scaling_report(&cells, Axis::T),
            Err(Error::AxisMismatch { .. })
        ));
        let rows = scaling_report(&cells, Axis::DeltaMin).unwrap();
        assert_eq!(rows[0].axis_value, 0.2);
        assert!((rows[1].times_delta_min - rows[1].regret * 0.4).abs() < 1e-15);
    }

    #[test]
    fn epsilon_sweep_normalizes_against_exact_calculator() {
        let means = uniform_grid_means(16);
        let inst = deterministic_instance(&means).unwrap();
        let specs: Vec<MechanismSpec> = [0.5, 1.0, 2.0].into_iter().map(gumbel).collect();
        let grid = SweepGrid {
            instances: vec![NamedInstance::new("grid:K=16", inst)],
            specs,
            horizons: vec![255],
        };
        let cells = sweep(&grid, 20_000, 10).unwrap();
        let rows = scaling_report(&cells, Axis::Epsilon).unwrap();
        for row in rows {
            let exact = exact_det_gumbel_regret(&means, row.axis_value, 8);
            assert!(
                (row.regret - exact).abs() <= 3.0 * row.stderr,
                "{row:?} vs {exact}"
            );
            assert!(
                (row.times_epsilon - exact * row.axis_value).abs()
                    <= 3.0 * row.stderr * row.axis_value
            );
        }
    }

    #[test]
    fn relative_spread_of_constant_column_is_zero() {
        assert_eq!(relative_spread(&[2.0, 2.0, 2.0]), 0.0);
        assert!((relative_spread(&[1.0, 1.1]) - 0.1).abs() < 1e-12);
    }
}
