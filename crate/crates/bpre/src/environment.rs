//! Random environments: i.i.d. (or periodic) sequences of offspring laws.
//!
//! An [`Environment`] is a lazily realized sequence xi_0, xi_1, ... of
//! offspring laws. Realization is addressed, not streamed: law n is a pure
//! function of (model, base seed, replicate, n), so shifted views, repeated
//! passes, and parallel consumers all see the same sequence. [`shift`]
//! produces the environment theta^k xi (drop the first k laws) sharing the
//! same realized cache.
//!
//! [`shift`]: Environment::shift

use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logdomain::TailScalar;
use crate::pgf::{LawDescriptor, LawError, OffspringLaw};
use crate::stream::{uniform_at, STREAM_ENVIRONMENT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("alpha range must satisfy 0 < min <= max < 1, got [{min}, {max}]")]
    BadAlphaRange { min: f64, max: f64 },
    #[error("mixture needs at least one component")]
    EmptyMixture,
    #[error("mixture probabilities must be positive and sum to 1 within 1e-12, got sum {sum}")]
    MixtureWeights { sum: f64 },
    #[error("component {index}: {source}")]
    BadComponent { index: usize, source: LawError },
    #[error("cycle needs at least one law")]
    EmptyCycle,
    #[error("realized sequence disagrees with the model at position {position}")]
    RealizedMismatch { position: usize },
    #[error("law evaluation failed: {source}")]
    Law {
        #[from]
        source: LawError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub prob: f64,
    pub law: LawDescriptor,
}

/// Generative description of the environment sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentModel {
    /// xi_n heavy-tailed with tail exponent drawn uniformly from
    /// [alpha_min, alpha_max], i.i.d. over n.
    SibuyaUniform { alpha_min: f64, alpha_max: f64 },
    /// xi_n drawn i.i.d. from a finite set of laws with fixed probabilities.
    FiniteMixture { components: Vec<MixtureComponent> },
    /// Deterministic periodic sequence: xi_n = laws[n mod len]. A single
    /// entry gives the constant environment of the classical single-law
    /// process.
    Cycle { laws: Vec<LawDescriptor> },
}

impl EnvironmentModel {
    pub fn validate(&self) -> Result<(), EnvError> {
        match self {
            EnvironmentModel::SibuyaUniform {
                alpha_min,
                alpha_max,
            } => {
                let ok = *alpha_min > 0.0
                    && alpha_min <= alpha_max
                    && *alpha_max < 1.0
                    && alpha_min.is_finite()
                    && alpha_max.is_finite();
                if !ok {
                    return Err(EnvError::BadAlphaRange {
                        min: *alpha_min,
                        max: *alpha_max,
                    });
                }
                Ok(())
            }
            EnvironmentModel::FiniteMixture { components } => {
                if components.is_empty() {
                    return Err(EnvError::EmptyMixture);
                }
                let sum: f64 = components.iter().map(|c| c.prob).sum();
                if (sum - 1.0).abs() > 1e-12 || components.iter().any(|c| c.prob <= 0.0) {
                    return Err(EnvError::MixtureWeights { sum });
                }
                for (index, c) in components.iter().enumerate() {
                    OffspringLaw::from_descriptor(&c.law)
                        .map_err(|source| EnvError::BadComponent { index, source })?;
                }
                Ok(())
            }
            EnvironmentModel::Cycle { laws } => {
                if laws.is_empty() {
                    return Err(EnvError::EmptyCycle);
                }
                for (index, d) in laws.iter().enumerate() {
                    OffspringLaw::from_descriptor(d)
                        .map_err(|source| EnvError::BadComponent { index, source })?;
                }
                Ok(())
            }
        }
    }

    /// Is the sequence non-random? (Draws consume no environment stream.)
    pub fn is_deterministic(&self) -> bool {
        matches!(self, EnvironmentModel::Cycle { .. })
    }

    /// Exact structural check of the no-extinction assumption: no law the
    /// model can emit puts mass at zero offspring.
    pub fn a1_holds(&self) -> bool {
        fn descriptor_ok(d: &LawDescriptor) -> bool {
            match d {
                LawDescriptor::Sibuya { .. } => true,
                LawDescriptor::Finite { weights } => {
                    weights.first().is_none_or(|&w| w == 0.0)
                }
            }
        }
        match self {
            EnvironmentModel::SibuyaUniform { .. } => true,
            EnvironmentModel::FiniteMixture { components } => {
                components.iter().all(|c| descriptor_ok(&c.law))
            }
            EnvironmentModel::Cycle { laws } => laws.iter().all(descriptor_ok),
        }
    }
}

#[derive(Debug)]
struct EnvCore {
    model: EnvironmentModel,
    base_seed: u64,
    replicate: u64,
    /// Prebuilt component laws for mixture / cycle models, shared by index.
    prebuilt: Vec<Arc<OffspringLaw>>,
    /// Realized laws by absolute position.
    realized: RwLock<Vec<Arc<OffspringLaw>>>,
}

/// A view of one realized environment sequence, possibly shifted.
#[derive(Debug, Clone)]
pub struct Environment {
    core: Arc<EnvCore>,
    offset: usize,
}

impl Environment {
    pub fn new(
        model: EnvironmentModel,
        base_seed: u64,
        replicate: u64,
    ) -> Result<Self, EnvError> {
        model.validate()?;
        let prebuilt = match &model {
            EnvironmentModel::SibuyaUniform { .. } => Vec::new(),
            EnvironmentModel::FiniteMixture { components } => components
                .iter()
                .map(|c| Arc::new(OffspringLaw::from_descriptor(&c.law).unwrap()))
                .collect(),
            EnvironmentModel::Cycle { laws } => laws
                .iter()
                .map(|d| Arc::new(OffspringLaw::from_descriptor(d).unwrap()))
                .collect(),
        };
        Ok(Environment {
            core: Arc::new(EnvCore {
                model,
                base_seed,
                replicate,
                prebuilt,
                realized: RwLock::new(Vec::new()),
            }),
            offset: 0,
        })
    }

    /// The convenience constant environment: every level uses `law`.
    pub fn constant(law: &OffspringLaw, base_seed: u64, replicate: u64) -> Self {
        Environment::new(
            EnvironmentModel::Cycle {
                laws: vec![law.describe()],
            },
            base_seed,
            replicate,
        )
        .expect("single-law cycle is always valid")
    }

    /// Constant environment over a law admitted by a relaxed constructor
    /// (mass at zero, or the identity pgf). Bypasses model validation:
    /// the stated theory does not cover such laws, and records written
    /// from this environment fail [`EnvironmentRecord::reconstruct`]
    /// because the strict descriptor path rejects the law. Exploratory
    /// use only.
    pub fn constant_relaxed(law: OffspringLaw) -> Self {
        let model = EnvironmentModel::Cycle {
            laws: vec![law.describe()],
        };
        Environment {
            core: Arc::new(EnvCore {
                model,
                base_seed: 0,
                replicate: 0,
                prebuilt: vec![Arc::new(law)],
                realized: RwLock::new(Vec::new()),
            }),
            offset: 0,
        }
    }

    pub fn model(&self) -> &EnvironmentModel {
        &self.core.model
    }

    pub fn base_seed(&self) -> u64 {
        self.core.base_seed
    }

    pub fn replicate(&self) -> u64 {
        self.core.replicate
    }

    /// How far this view is shifted from the root sequence.
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// theta^k: the environment with the first k laws dropped. Shares the
    /// realized cache with the parent, so law identity is preserved.
    pub fn shift(&self, k: usize) -> Environment {
        Environment {
            core: Arc::clone(&self.core),
            offset: self.offset + k,
        }
    }

    /// The law at position n of this view (absolute position offset + n).
    pub fn law(&self, n: usize) -> Arc<OffspringLaw> {
        let absolute = self.offset + n;
        if let Some(law) = self.core.prebuilt_law(absolute) {
            return law;
        }
        {
            let realized = self.core.realized.read().unwrap();
            if let Some(law) = realized.get(absolute) {
                return Arc::clone(law);
            }
        }
        let mut realized = self.core.realized.write().unwrap();
        while realized.len() <= absolute {
            let law = self.core.generate(realized.len());
            realized.push(Arc::new(law));
        }
        Arc::clone(&realized[absolute])
    }

    /// Tail exponent at position n, if the law there is heavy-tailed.
    pub fn alpha(&self, n: usize) -> Option<f64> {
        self.law(n).stable_index()
    }

    /// Serializable record of the first `levels` realized laws.
    pub fn record(&self, levels: usize) -> EnvironmentRecord {
        EnvironmentRecord {
            model: self.core.model.clone(),
            base_seed: self.core.base_seed,
            replicate_index: self.core.replicate,
            realized: (0..levels)
                .map(|n| {
                    self.core
                        .prebuilt_law(n)
                        .unwrap_or_else(|| {
                            let root = Environment {
                                core: Arc::clone(&self.core),
                                offset: 0,
                            };
                            root.law(n)
                        })
                        .describe()
                })
                .collect(),
        }
    }
}

impl EnvCore {
    /// Cycle laws resolve without touching the realized cache.
    fn prebuilt_law(&self, absolute: usize) -> Option<Arc<OffspringLaw>> {
        match &self.model {
            EnvironmentModel::Cycle { laws } => {
                Some(Arc::clone(&self.prebuilt[absolute % laws.len()]))
            }
            _ => None,
        }
    }

    /// Realize the law at an absolute position from its address alone.
    fn generate(&self, absolute: usize) -> OffspringLaw {
        let u = uniform_at(
            self.base_seed,
            &[STREAM_ENVIRONMENT, self.replicate, absolute as u64],
        );
        match &self.model {
            EnvironmentModel::SibuyaUniform {
                alpha_min,
                alpha_max,
            } => {
                let alpha = alpha_min + (alpha_max - alpha_min) * u;
                // u < 1 and the range is validated, so alpha < 1 holds.
                OffspringLaw::sibuya(alpha.max(*alpha_min)).expect("validated range")
            }
            EnvironmentModel::FiniteMixture { components } => {
                let mut acc = 0.0;
                for (i, c) in components.iter().enumerate() {
                    acc += c.prob;
                    if u < acc {
                        return self.prebuilt[i].as_ref().clone();
                    }
                }
                self.prebuilt[components.len() - 1].as_ref().clone()
            }
            EnvironmentModel::Cycle { .. } => unreachable!("cycle laws are prebuilt"),
        }
    }
}

/// On-disk form of a realized environment: the generative model, the
/// addressing seeds, and the realized prefix for independent verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRecord {
    pub model: EnvironmentModel,
    pub base_seed: u64,
    pub replicate_index: u64,
    pub realized: Vec<LawDescriptor>,
}

impl EnvironmentRecord {
    /// Rebuilds the environment and checks the stored realized prefix
    /// against what the model regenerates.
    pub fn reconstruct(&self) -> Result<Environment, EnvError> {
        let env = Environment::new(self.model.clone(), self.base_seed, self.replicate_index)?;
        for (position, stored) in self.realized.iter().enumerate() {
            if env.law(position).describe() != *stored {
                return Err(EnvError::RealizedMismatch { position });
            }
        }
        Ok(env)
    }
}

/// Probe sizes and thresholds for the assumption check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionProbe {
    /// Depth of each defect-ratio chain.
    pub n_probe: usize,
    /// Points s to probe.
    pub s_grid: Vec<f64>,
    /// Environments sampled from the model.
    pub replicates: u64,
    /// Final ratios all at or below this: consistent with a zero defect.
    pub consistent_below: f64,
    /// Any final ratio at or above this: evidence of a positive defect.
    pub inconsistent_above: f64,
}

impl Default for AssumptionProbe {
    fn default() -> Self {
        AssumptionProbe {
            n_probe: 30,
            s_grid: vec![0.5, 1.0, 2.0],
            replicates: 5,
            consistent_below: 1e-6,
            inconsistent_above: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionVerdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

/// One probed chain: the defect ratio reached at depth `n_probe`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectProbe {
    pub replicate: u64,
    pub s: f64,
    pub final_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// No-extinction assumption, decided exactly from the law structure.
    pub a1_holds: bool,
    /// Vanishing-defect probes; empty when the probe was vacuous or the
    /// model failed to build.
    pub probes: Vec<DefectProbe>,
    /// Verdict on the vanishing-defect assumption. Never a proof: the
    /// defect is a limit and only finitely many ratios are seen.
    pub verdict: AssumptionVerdict,
    pub consistent_below: f64,
    pub inconsistent_above: f64,
}

/// Probe a model against the standing assumptions: the no-extinction
/// condition is checked exactly, the vanishing-defect condition
/// heuristically through defect-ratio trends on sampled environments.
/// Infallible by design; uncertainty lands in the verdict.
pub fn validate_assumptions(
    model: &EnvironmentModel,
    base_seed: u64,
    probe: &AssumptionProbe,
) -> AssumptionReport {
    let a1_holds = model.a1_holds();
    let mut probes = Vec::new();
    if probe.n_probe >= 1 {
        for replicate in 0..probe.replicates {
            let Ok(env) = Environment::new(model.clone(), base_seed, replicate) else {
                break;
            };
            for &s in &probe.s_grid {
                let Ok(ratios) =
                    crate::compose::defect_ratios(&env, TailScalar::from_value(s), probe.n_probe)
                else {
                    continue;
                };
                if let Some(&final_ratio) = ratios.last() {
                    probes.push(DefectProbe {
                        replicate,
                        s,
                        final_ratio,
                    });
                }
            }
        }
    }
    let verdict = if probes.is_empty() {
        AssumptionVerdict::Inconclusive
    } else if probes.iter().any(|p| p.final_ratio >= probe.inconsistent_above) {
        AssumptionVerdict::Inconsistent
    } else if probes.iter().all(|p| p.final_ratio <= probe.consistent_below) {
        AssumptionVerdict::Consistent
    } else {
        AssumptionVerdict::Inconclusive
    };
    AssumptionReport {
        a1_holds,
        probes,
        verdict,
        consistent_below: probe.consistent_below,
        inconsistent_above: probe.inconsistent_above,
    }
}
