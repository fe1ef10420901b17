//! Constructors for the instance families used in examples, bounds and
//! lower-bound constructions. All are deterministic.

use crate::domain::{make_instance, Instance, LossModel};
use crate::error::{Error, Result};

/// Two actions: a point mass at 0.3 against a loss that is 0.4 w.p. 0.8 and
/// 0 w.p. 0.2 (means 0.3 and 0.32). The first action is optimal, yet without
/// resampling the second wins the first selection whenever its loss is 0.
pub fn paper_example_two_actions() -> Instance {
    make_instance(vec![
        LossModel::point(0.3),
        LossModel::finite(vec![(0.4, 0.8), (0.0, 0.2)]),
    ])
    .expect("valid constant instance")
}

/// Cyclic lower-bound family: `μ_l = 0`, `μ_{l±1} = delta_min` (indices
/// modulo `K`), every other mean 1. `l` is 1-based.
pub fn lower_bound_family(k: usize, delta_min: f64, l: usize) -> Result<Instance> {
    if k < 6 {
        return Err(Error::BadK(k));
    }
    if !(delta_min > 0.0 && delta_min < 1.0) {
        return Err(Error::OutOfRange {
            what: "delta_min must lie in (0, 1)",
            value: delta_min,
        });
    }
    if l < 1 || l > k {
        return Err(Error::OutOfRange {
            what: "l must lie in 1..=K",
            value: l as f64,
        });
    }
    let centre = l - 1;
    let prev = (centre + k - 1) % k;
    let next = (centre + 1) % k;
    let means: Vec<f64> = (0..k)
        .map(|i| {
            if i == centre {
                0.0
            } else if i == prev || i == next {
                delta_min
            } else {
                1.0
            }
        })
        .collect();
    deterministic_instance(&means)
}

/// Non-private worst case `(0, Δ, …, Δ)`.
pub fn worst_nonprivate_instance(k: usize, delta_min: f64) -> Result<Instance> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "worst-case instance needs K >= 2, got {k}"
        )));
    }
    let mut means = vec![delta_min; k];
    means[0] = 0.0;
    deterministic_instance(&means)
}

/// All-point-mass instance with the given means.
pub fn deterministic_instance(means: &[f64]) -> Result<Instance> {
    check_means(means)?;
    make_instance(means.iter().map(|&m| LossModel::point(m)).collect())
}

/// Evenly spaced means `μ_j = (j-1)/(K-1)`; a single action gets mean 0.
pub fn uniform_grid_means(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.0];
    }
    (0..k).map(|j| j as f64 / (k - 1) as f64).collect()
}

pub fn bernoulli_instance(means: &[f64]) -> Result<Instance> {
    check_means(means)?;
    make_instance(means.iter().map(|&m| LossModel::bernoulli(m)).collect())
}

fn check_means(means: &[f64]) -> Result<()> {
    if means.is_empty() {
        return Err(Error::EmptyInstance);
    }
    match means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        Some(&bad) => Err(Error::OutOfRange {
            what: "mean must lie in [0, 1]",
            value: bad,
        }),
        None => Ok(()),
    }
}
