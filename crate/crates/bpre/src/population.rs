//! Population trajectories along a realized environment.
//!
//! Sizes are tracked exactly (big integers) while they fit under a
//! configured budget, and in log scale afterwards. With a heavy-tailed
//! law at the current level, a large population of size N steps to
//! N^(1/alpha) times a one-sided stable multiplier; laws with finite
//! mean have no such scaling limit, so past the budget the trajectory
//! truncates instead of guessing.
//!
//! Each trajectory also tracks the standardized statistic
//! T_n = k_n(1 / Z_n) and Y_n = e^{-T_n}: Y_n converges almost surely,
//! and its limit is uniform on (0,1) exactly when the environment is
//! regular, which is what the distributional acceptance checks consume.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compose::{compose_h, compose_k};
use crate::environment::Environment;
use crate::logdomain::TailScalar;
use crate::pgf::{LawError, Offspring, OffspringLaw};
use crate::stable::sample_ln_stable;
use crate::stream::{rng_at, STREAM_OFFSPRING, STREAM_STABLE};

/// Controls for one trajectory. Z_0 = 1 always.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Hard cap on the number of levels.
    pub n_max: usize,
    /// Stop once |Y_n - Y_{n-1}| drops below this.
    pub y_tol: f64,
    /// Populations above this step asymptotically instead of individual
    /// by individual.
    pub exact_budget: u64,
    /// Allow the stable-limit step past the budget; when false the
    /// trajectory truncates there instead.
    pub asymptotic_enabled: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_max: 40,
            y_tol: 1e-4,
            exact_budget: 1_000_000,
            asymptotic_enabled: true,
        }
    }
}

/// How a level's size was advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    /// ln Z_n.
    pub ln_z: f64,
    /// The exact size, while it is stored exactly.
    pub count: Option<u64>,
    /// How the size at this level was computed (level 0 counts as exact).
    pub mode: StepMode,
    /// T_n = k_n(1/Z_n) = -ln Y_n.
    pub t_statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub levels: Vec<LevelRecord>,
    /// First level at which the Y increment fell under tolerance, if any.
    pub stabilized_at: Option<usize>,
    /// True when the run stopped early because the budget was exceeded
    /// and no asymptotic step was available.
    pub truncated: bool,
    /// Individual offspring draws consumed.
    pub offspring_draws: u64,
    /// Stable-multiplier draws consumed.
    pub stable_draws: u64,
    /// Final T = -ln Y.
    pub t: f64,
    /// Final Y = e^{-T}.
    pub y: f64,
}

impl Trajectory {
    /// Level index of the first log-only size, if the trajectory ever
    /// left exact storage.
    pub fn mode_switch_index(&self) -> Option<usize> {
        self.levels.iter().position(|l| l.count.is_none())
    }

    /// Y_n at a recorded level.
    pub fn y_at(&self, n: usize) -> f64 {
        (-self.levels[n].t_statistic).exp()
    }

    pub fn final_level(&self) -> &LevelRecord {
        self.levels.last().expect("at least level 0")
    }
}

/// One point of the martingale sequence X_n = e^{-Z_n h_n(s)}, kept as
/// log X to survive astronomically large Z_n h_n products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSample {
    pub n: usize,
    pub s: f64,
    /// ln X_n = -Z_n h_n(s) = -exp(ln Z_n + ln h_n).
    pub log_x: f64,
}

/// ln X_n for a recorded trajectory level.
pub fn compute_martingale_log_x(
    env: &Environment,
    traj: &Trajectory,
    s: f64,
    n: usize,
) -> Result<MartingaleSample, LawError> {
    let h_n = compose_h(env, n, TailScalar::from_value(s))?;
    let log_x = -(traj.levels[n].ln_z + h_n.ln()).exp();
    Ok(MartingaleSample { n, s, log_x })
}

enum Size {
    Exact(BigUint),
    LogScale(f64),
}

impl Size {
    fn ln(&self) -> f64 {
        match self {
            Size::Exact(z) => ln_biguint(z),
            Size::LogScale(ln_z) => *ln_z,
        }
    }
}

/// ln of a big natural number, exact to f64 resolution at any width.
pub fn ln_biguint(z: &BigUint) -> f64 {
    if let Some(v) = z.to_f64() {
        if v.is_finite() {
            return v.ln();
        }
    }
    // Beyond f64: take the top 64 bits as mantissa and shift back.
    let bits = z.bits();
    let top = (z >> (bits - 64)).to_f64().expect("64-bit window fits");
    top.ln() + (bits - 64) as f64 * std::f64::consts::LN_2
}

/// Advance a population of exact size z by one generation, the sum of z
/// independent offspring draws. Returns None without consuming any
/// randomness when z exceeds the budget.
pub fn step_exact<R: Rng + ?Sized>(
    z: &BigUint,
    law: &OffspringLaw,
    rng: &mut R,
    budget: u64,
) -> Option<BigUint> {
    let z_small = z.to_u64().filter(|&v| v <= budget)?;
    Some(sum_offspring(z_small, law, rng))
}

fn sum_offspring<R: Rng + ?Sized>(z: u64, law: &OffspringLaw, rng: &mut R) -> BigUint {
    let mut small: u128 = 0;
    let mut big: Option<BigUint> = None;
    for _ in 0..z {
        match law.sample_offspring(rng) {
            Offspring::Small(v) => small += v as u128,
            Offspring::Big(b) => {
                big = Some(match big.take() {
                    Some(acc) => acc + b,
                    None => b,
                });
            }
        }
    }
    match big {
        Some(acc) => acc + BigUint::from(small),
        None => BigUint::from(small),
    }
}

/// Advance ln Z by one generation in the large-population regime:
/// ln Z' = ln Z / alpha + ln S_alpha. Only heavy-tailed laws admit this
/// scaling limit.
pub fn step_asymptotic<R: Rng + ?Sized>(
    ln_z: f64,
    law: &OffspringLaw,
    rng: &mut R,
) -> Result<f64, LawError> {
    match law.stable_index() {
        Some(alpha) => Ok(ln_z / alpha + sample_ln_stable(alpha, rng)),
        None => Err(LawError::NoStableIndex),
    }
}

/// Run one full trajectory. `traj_index` addresses the randomness: the
/// same (environment base seed, traj_index) always replays the same
/// path, and distinct indices are independent, so many trajectories can
/// share one fixed environment.
pub fn simulate_trajectory(
    env: &Environment,
    traj_index: u64,
    config: &SimulationConfig,
) -> Trajectory {
    let base = env.base_seed();
    let mut size = Size::Exact(BigUint::from(1u32));
    let mut levels = Vec::with_capacity(config.n_max + 1);
    let mut stabilized_at = None;
    let mut truncated = false;
    let mut offspring_draws = 0u64;
    let mut stable_draws = 0u64;
    let mut prev_y = None;
    let mut mode = StepMode::Exact;

    for n in 0..=config.n_max {
        let ln_z = size.ln();
        let count = match &size {
            Size::Exact(z) => z.to_u64(),
            Size::LogScale(_) => None,
        };
        let t = compose_k(env, n, TailScalar::from_ln(-ln_z)).value();
        levels.push(LevelRecord {
            n,
            ln_z,
            count,
            mode,
            t_statistic: t,
        });
        let y = (-t).exp();
        if let Some(p) = prev_y {
            if (y - p as f64).abs() < config.y_tol && stabilized_at.is_none() {
                stabilized_at = Some(n);
            }
        }
        prev_y = Some(y);
        if stabilized_at.is_some() || n == config.n_max {
            break;
        }

        let law = env.law(n);
        size = match size {
            Size::Exact(z) => {
                let mut rng = rng_at(base, &[STREAM_OFFSPRING, traj_index, n as u64]);
                match step_exact(&z, &law, &mut rng, config.exact_budget) {
                    Some(next) => {
                        offspring_draws += z.to_u64().expect("under budget");
                        mode = StepMode::Exact;
                        if next <= BigUint::from(config.exact_budget) {
                            Size::Exact(next)
                        } else {
                            // The step itself was exact; only the storage
                            // changes representation.
                            Size::LogScale(ln_biguint(&next))
                        }
                    }
                    None => {
                        // Exact sizes only arise under the budget, so the
                        // refusal path is unreachable here; keep it as a
                        // defensive truncation.
                        truncated = true;
                        break;
                    }
                }
            }
            Size::LogScale(ln_z) => {
                if !config.asymptotic_enabled {
                    truncated = true;
                    break;
                }
                let mut rng = rng_at(base, &[STREAM_STABLE, traj_index, n as u64]);
                match step_asymptotic(ln_z, &law, &mut rng) {
                    Ok(next) => {
                        stable_draws += 1;
                        mode = StepMode::Asymptotic;
                        Size::LogScale(next)
                    }
                    Err(_) => {
                        truncated = true;
                        break;
                    }
                }
            }
        };
    }

    let last = levels.last().expect("at least one level");
    Trajectory {
        t: last.t_statistic,
        y: (-last.t_statistic).exp(),
        stabilized_at,
        truncated,
        offspring_draws,
        stable_draws,
        levels,
    }
}
