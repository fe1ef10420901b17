//! Full trajectories of the epoch-doubling private follow-the-leader learner.
//!
//! Epoch `r` covers steps `2^{r-1} ..= 2^r - 1` (cut at the horizon) and
//! plays the action chosen at the end of epoch `r - 1`; `J_0` is uniform.
//!
//! Randomness is consumed from a single [`RngStream`] in this order:
//! 1. one uniform index for `J_0`;
//! 2. for every step, one uniform per non-point-mass action (losses, in
//!    action order), then under resampling one uniform per action (bits);
//! 3. at the end of every epoch that is followed by another epoch, one
//!    noise draw per action, then one index draw if the maximum is tied.
//!
//! Point masses consume no randomness, so without resampling their
//! accumulated loss is added once per epoch as `length · value`.

use crate::domain::{EpochAction, Instance, LossModel, MechanismSpec, RunRecord};
use crate::error::{Error, Result};
use crate::mechanism::{report_noisy_max, resample_bit, ScoreVector};
use crate::noise::RngStream;

/// One epoch of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochTrace {
    /// 1-based epoch index.
    pub r: u32,
    /// Action played throughout the epoch (`J_{r-1}`).
    pub action: usize,
    pub length: u64,
    /// Accumulated losses `G_r` at the end of the epoch.
    pub final_scores: ScoreVector,
    /// Action selected from `final_scores`; `None` when no epoch follows.
    pub selected: Option<usize>,
}

/// First and last step of epoch `r` before truncation.
pub fn epoch_bounds(r: u32) -> (u64, u64) {
    (1u64 << (r - 1), (1u64 << r) - 1)
}

/// Lengths of the epochs that partition `1..=horizon`.
pub fn epoch_lengths(horizon: u64) -> Vec<u64> {
    let mut lengths = Vec::new();
    let mut r = 1;
    loop {
        let (start, end) = epoch_bounds(r);
        if start > horizon {
            break;
        }
        lengths.push(end.min(horizon) - start + 1);
        r += 1;
    }
    lengths
}

/// Accumulates `length` steps of (optionally resampled) loss vectors.
fn accumulate_epoch(
    instance: &Instance,
    spec: &MechanismSpec,
    length: u64,
    rng: &mut RngStream,
    loss: &mut [f64],
) -> ScoreVector {
    let models = instance.models();
    let mut scores = ScoreVector::zeros(models.len());
    if !spec.resample {
        for (g, model) in scores.0.iter_mut().zip(models) {
            if let LossModel::PointMass { value } = model {
                *g = length as f64 * value;
            }
        }
        if instance.is_deterministic() {
            return scores;
        }
    }
    for _ in 0..length {
        for (l, model) in loss.iter_mut().zip(models) {
            *l = match model {
                LossModel::PointMass { value } => *value,
                _ => model.sample_with(rng.uniform()),
            };
        }
        if spec.resample {
            for (g, &l) in scores.0.iter_mut().zip(loss.iter()) {
                *g += f64::from(resample_bit(l, rng));
            }
        } else {
            for ((g, &l), model) in scores.0.iter_mut().zip(loss.iter()).zip(models) {
                if !model.is_point_mass() {
                    *g += l;
                }
            }
        }
    }
    scores
}

struct Trajectory {
    epochs: Vec<EpochTrace>,
    pseudoregret: f64,
}

fn simulate(
    instance: &Instance,
    spec: &MechanismSpec,
    horizon: u64,
    select_last: bool,
    rng: &mut RngStream,
) -> Trajectory {
    let gaps = instance.gaps();
    let mut loss = vec![0.0; instance.k()];
    let mut current = rng.index(instance.k());
    let mut epochs = Vec::new();
    let mut pseudoregret = 0.0;
    let mut r = 1;
    loop {
        let (start, nominal_end) = epoch_bounds(r);
        if start > horizon {
            break;
        }
        let end = nominal_end.min(horizon);
        let length = end - start + 1;
        pseudoregret += length as f64 * gaps[current];
        let scores = accumulate_epoch(instance, spec, length, rng, &mut loss);
        let selected = (end < horizon || select_last).then(|| report_noisy_max(&scores, spec, rng));
        epochs.push(EpochTrace {
            r,
            action: current,
            length,
            final_scores: scores,
            selected,
        });
        match selected {
            Some(next) => current = next,
            None => break,
        }
        r += 1;
    }
    Trajectory {
        epochs,
        pseudoregret,
    }
}

/// Runs the learner for `horizon` steps and records its pseudoregret.
pub fn run_rnm_ftnl(
    instance: &Instance,
    spec: &MechanismSpec,
    horizon: u64,
    rng: &mut RngStream,
) -> Result<RunRecord> {
    trace_rnm_ftnl(instance, spec, horizon, rng).map(|(record, _)| record)
}

/// Like [`run_rnm_ftnl`], also returning the per-epoch accumulators.
pub fn trace_rnm_ftnl(
    instance: &Instance,
    spec: &MechanismSpec,
    horizon: u64,
    rng: &mut RngStream,
) -> Result<(RunRecord, Vec<EpochTrace>)> {
    if horizon < 1 {
        return Err(Error::InvalidHorizon(horizon));
    }
    let seed = rng.seed();
    let traj = simulate(instance, spec, horizon, false, rng);
    let record = RunRecord {
        horizon,
        epochs: traj
            .epochs
            .iter()
            .map(|e| EpochAction {
                r: e.r,
                action: e.action,
                length: e.length,
            })
            .collect(),
        pseudoregret: traj.pseudoregret,
        seed,
    };
    Ok((record, traj.epochs))
}

/// Simulates epochs `1..=r` in full and returns `J_r`, the action selected
/// at the end of epoch `r`.
pub fn selection_after_epochs(
    instance: &Instance,
    spec: &MechanismSpec,
    r: u32,
    rng: &mut RngStream,
) -> Result<usize> {
    if r < 1 {
        return Err(Error::InvalidArgument(
            "epoch index must be at least 1".into(),
        ));
    }
    let traj = simulate(instance, spec, epoch_bounds(r).1, true, rng);
    Ok(traj
        .epochs
        .last()
        .and_then(|e| e.selected)
        .expect("epoch r selects"))
}
