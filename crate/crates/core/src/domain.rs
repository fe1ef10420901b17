//! Shared problem types: per-action loss models, validated instances,
//! mechanism configurations and the records produced by simulation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating probabilities and supports.
pub const VALIDATION_TOL: f64 = 1e-12;

/// Loss distribution of a single action, supported on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossModel {
    #[serde(rename = "point")]
    PointMass {
        value: f64,
    },
    Bernoulli {
        mean: f64,
    },
    /// `(value, probability)` pairs.
    #[serde(rename = "finite")]
    FiniteSupport {
        atoms: Vec<(f64, f64)>,
    },
}

impl LossModel {
    pub fn point(value: f64) -> Self {
        LossModel::PointMass { value }
    }

    pub fn bernoulli(mean: f64) -> Self {
        LossModel::Bernoulli { mean }
    }

    pub fn finite(atoms: Vec<(f64, f64)>) -> Self {
        LossModel::FiniteSupport { atoms }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LossModel::PointMass { value } => check_unit(*value),
            LossModel::Bernoulli { mean } => check_unit(*mean),
            LossModel::FiniteSupport { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidProbabilities { sum: 0.0 });
                }
                for &(value, _) in atoms {
                    check_unit(value)?;
                }
                let mut sum = 0.0;
                for &(_, prob) in atoms {
                    if prob < 0.0 || !prob.is_finite() {
                        return Err(Error::InvalidProbabilities { sum: prob });
                    }
                    sum += prob;
                }
                if (sum - 1.0).abs() > VALIDATION_TOL {
                    return Err(Error::InvalidProbabilities { sum });
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            LossModel::PointMass { value } => *value,
            LossModel::Bernoulli { mean } => *mean,
            LossModel::FiniteSupport { atoms } => atoms.iter().map(|&(v, p)| v * p).sum(),
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, LossModel::PointMass { .. })
    }

    /// Draws one loss from a uniform variate `u` in `[0, 1)` by inversion.
    pub fn sample_with(&self, u: f64) -> f64 {
        match self {
            LossModel::PointMass { value } => *value,
            LossModel::Bernoulli { mean } => {
                if u < *mean {
                    1.0
                } else {
                    0.0
                }
            }
            LossModel::FiniteSupport { atoms } => {
                let mut acc = 0.0;
                for &(value, prob) in atoms {
                    acc += prob;
                    if u < acc {
                        return value;
                    }
                }
                atoms[atoms.len() - 1].0
            }
        }
    }
}

fn check_unit(value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidSupport { value })
    }
}

/// A validated problem instance: `K` actions, their means and gaps.
///
/// Actions keep the caller's order; gaps are measured against the minimum
/// mean wherever it sits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    models: Vec<LossModel>,
    means: Vec<f64>,
    gaps: Vec<f64>,
    delta_min: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    models: Vec<LossModel>,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        make_instance(doc.models)
    }
}

impl From<Instance> for InstanceDoc {
    fn from(instance: Instance) -> Self {
        InstanceDoc {
            models: instance.models,
        }
    }
}

/// Validates the models and derives means, gaps and the minimum positive gap.
pub fn make_instance(models: Vec<LossModel>) -> Result<Instance> {
    if models.is_empty() {
        return Err(Error::EmptyInstance);
    }
    for model in &models {
        model.validate()?;
    }
    let means: Vec<f64> = models.iter().map(LossModel::mean).collect();
    let best = means.iter().copied().fold(f64::INFINITY, f64::min);
    let gaps: Vec<f64> = means.iter().map(|&m| m - best).collect();
    let delta_min = gaps
        .iter()
        .copied()
        .filter(|&g| g > 0.0)
        .fold(None, |acc: Option<f64>, g| {
            Some(acc.map_or(g, |a| a.min(g)))
        });
    Ok(Instance {
        models,
        means,
        gaps,
        delta_min,
    })
}

impl Instance {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization cannot fail")
    }

    pub fn k(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[LossModel] {
        &self.models
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Smallest strictly positive gap; `None` when every mean is equal.
    pub fn delta_min(&self) -> Option<f64> {
        self.delta_min
    }

    /// First action attaining the minimum mean.
    pub fn optimal_action(&self) -> usize {
        self.gaps.iter().position(|&g| g == 0.0).unwrap_or(0)
    }

    /// True when every action is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.models.iter().all(LossModel::is_point_mass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Laplace,
    Exponential,
    Gumbel,
    #[serde(rename = "none")]
    NoNoise,
}

impl NoiseKind {
    pub const NOISY: [NoiseKind; 3] = [
        NoiseKind::Laplace,
        NoiseKind::Exponential,
        NoiseKind::Gumbel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Laplace => "laplace",
            NoiseKind::Exponential => "exponential",
            NoiseKind::Gumbel => "gumbel",
            NoiseKind::NoNoise => "none",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "laplace" | "lap" => Ok(NoiseKind::Laplace),
            "exponential" | "exp" => Ok(NoiseKind::Exponential),
            "gumbel" => Ok(NoiseKind::Gumbel),
            "none" | "nonoise" | "no-noise" => Ok(NoiseKind::NoNoise),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise kind `{other}`"
            ))),
        }
    }
}

/// One configuration of the learner: resampling bit, noise family, privacy level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub resample: bool,
    pub noise: NoiseKind,
    pub epsilon: f64,
}

impl MechanismSpec {
    pub fn new(resample: bool, noise: NoiseKind, epsilon: f64) -> Result<Self> {
        if noise != NoiseKind::NoNoise && (epsilon.is_nan() || epsilon <= 0.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(MechanismSpec {
            resample,
            noise,
            epsilon,
        })
    }

    /// The non-private learner (`ε = ∞`).
    pub fn non_private(resample: bool) -> Self {
        MechanismSpec {
            resample,
            noise: NoiseKind::NoNoise,
            epsilon: f64::INFINITY,
        }
    }

    /// Noise scale: `2/ε` for Laplace and Gumbel, `1/ε` for exponential, 0 without noise.
    pub fn scale(&self) -> f64 {
        match self.noise {
            NoiseKind::Laplace | NoiseKind::Gumbel => 2.0 / self.epsilon,
            NoiseKind::Exponential => 1.0 / self.epsilon,
            NoiseKind::NoNoise => 0.0,
        }
    }

    pub fn resample_bit(&self) -> u8 {
        u8::from(self.resample)
    }
}

/// Action played during one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochAction {
    /// 1-based epoch index.
    pub r: u32,
    pub action: usize,
    pub length: u64,
}

/// Outcome of a single trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub horizon: u64,
    pub epochs: Vec<EpochAction>,
    /// `Σ_t Δ_{I_t}` computed from the true gaps.
    pub pseudoregret: f64,
    pub seed: u64,
}

/// Mean and standard error of the pseudoregret over independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl RegretEstimate {
    /// Sample mean and `s / √n` with the unbiased sample deviation.
    ///
    /// Samples are reduced in the order given, so the result is bitwise
    /// reproducible for a fixed trial ordering.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one trial is required".into(),
            ));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let stderr = if samples.len() > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        Ok(RegretEstimate {
            mean,
            stderr,
            trials: samples.len() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_action_example_means_and_gaps() {
        let inst = make_instance(vec![
            LossModel::point(0.3),
            LossModel::finite(vec![(0.4, 0.8), (0.0, 0.2)]),
        ])
        .unwrap();
        assert!((inst.means()[0] - 0.3).abs() < 1e-15);
        assert!((inst.means()[1] - 0.32).abs() < 1e-15);
        assert_eq!(inst.gaps()[0], 0.0);
        assert!((inst.gaps()[1] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn single_action_has_no_delta_min() {
        let inst = make_instance(vec![LossModel::bernoulli(0.5)]).unwrap();
        assert_eq!(inst.means(), &[0.5]);
        assert_eq!(inst.gaps(), &[0.0]);
        assert_eq!(inst.delta_min(), None);
    }

    #[test]
    fn tied_suboptimal_point_masses() {
        let inst = make_instance(vec![
            LossModel::point(0.0),
            LossModel::point(1.0),
            LossModel::point(1.0),
        ])
        .unwrap();
        assert_eq!(inst.gaps(), &[0.0, 1.0, 1.0]);
        assert_eq!(inst.delta_min(), Some(1.0));
    }

    #[test]
    fn unsorted_actions_measure_gaps_against_the_minimum() {
        let inst = make_instance(vec![
            LossModel::point(0.7),
            LossModel::point(0.2),
            LossModel::point(0.2),
        ])
        .unwrap();
        assert_eq!(inst.optimal_action(), 1);
        assert!((inst.gaps()[0] - 0.5).abs() < 1e-15);
        assert_eq!(&inst.gaps()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_models() {
        assert_eq!(make_instance(vec![]), Err(Error::EmptyInstance));
        assert!(matches!(
            make_instance(vec![LossModel::point(1.5)]),
            Err(Error::InvalidSupport { .. })
        ));
        assert!(matches!(
            make_instance(vec![LossModel::finite(vec![(0.2, 0.5), (1.2, 0.5)])]),
            Err(Error::InvalidSupport { .. })
        ));
        assert!(matches!(
            make_instance(vec![LossModel::finite(vec![(0.2, 0.5), (0.4, 0.4)])]),
            Err(Error::InvalidProbabilities { .. })
        ));
        assert!(matches!(
            make_instance(vec![LossModel::finite(vec![(0.2, 1.5), (0.4, -0.5)])]),
            Err(Error::InvalidProbabilities { .. })
        ));
    }

    #[test]
    fn json_document_round_trip() {
        let text = r#"{"models":[{"kind":"point","value":0.3},{"kind":"bernoulli","mean":0.5},{"kind":"finite","atoms":[[0.4,0.8],[0.0,0.2]]}]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.k(), 3);
        assert_eq!(inst.models()[1], LossModel::bernoulli(0.5));
        assert_eq!(inst.to_json(), text);
        assert!(Instance::from_json(r#"{"models":[{"kind":"point","value":2.0}]}"#).is_err());
    }

    #[test]
    fn noise_scales() {
        assert_eq!(
            MechanismSpec::new(false, NoiseKind::Laplace, 2.0)
                .unwrap()
                .scale(),
            1.0
        );
        assert_eq!(
            MechanismSpec::new(false, NoiseKind::Exponential, 4.0)
                .unwrap()
                .scale(),
            0.25
        );
        assert_eq!(
            MechanismSpec::new(true, NoiseKind::Gumbel, 1.0)
                .unwrap()
                .scale(),
            2.0
        );
        assert_eq!(MechanismSpec::non_private(false).scale(), 0.0);
        assert!(MechanismSpec::new(false, NoiseKind::Gumbel, 0.0).is_err());
    }

    #[test]
    fn estimate_from_samples() {
        let est = RegretEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(est.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((est.stderr - sd / 2.0).abs() < 1e-15);
        assert_eq!(RegretEstimate::from_samples(&[7.0]).unwrap().stderr, 0.0);
    }
}
