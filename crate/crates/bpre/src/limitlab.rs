//! Monte Carlo verification of the limit laws.
//!
//! The quenched normalizations admit several distributional limits:
//! the Y statistic converges to a uniform variable on (0,1) exactly in
//! the regular case; log Z_n rescaled by the environment constants c_n
//! converges to the law F solving F(a u) = f_0(F(u)) across the shift;
//! the products h_n * c_n sort normalization schemes into a four-case
//! growth taxonomy. Each operation here estimates one of these objects
//! from replicated trajectories and reports a test statistic next to
//! the raw samples, so reports stay auditable.
//!
//! All replicate loops are order-indexed: results are collected by
//! replicate number and aggregated sequentially, so the worker count
//! never changes an output bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compose::compose_h;
use crate::environment::{EnvError, Environment, EnvironmentModel};
use crate::logdomain::{ln_one_minus_exp_neg, TailScalar};
use crate::pgf::LawError;
use crate::population::{simulate_trajectory, SimulationConfig};
use crate::stats::{self, KsResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("need at least {need} replicates, got {got}")]
    TooFewReplicates { got: u64, need: u64 },
    #[error("{what} must be nonempty")]
    EmptyInput { what: &'static str },
    #[error("{what}")]
    BadParameter { what: &'static str },
    #[error("all {failures} replicates failed to stabilize; nothing to test")]
    AllReplicatesFailed { failures: u64 },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Law(#[from] LawError),
}

/// Distributional claims need a sample, not an anecdote.
pub const MIN_REPLICATES: u64 = 100;

/// The slowly varying map U of a normalization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UMap {
    /// U(x) = log x, the scale on which the heavy-tailed worked example
    /// normalizes: U(1/h_n) is just -log h_n.
    Log,
}

/// Rule generating the per-environment constants c_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CnRule {
    /// c_n = prod_{i<n} 1/alpha_i: the natural scale of an environment
    /// of heavy-tailed laws.
    SibuyaProduct,
    /// c_n = value for every n; value 1 leaves the process unnormalized.
    Constant { value: f64 },
    /// c_n = max(n, 1): a polynomial scale no limit law here matches.
    Linear,
    /// c_n = exp(exp(rate * n)): outruns every h_n.
    DoubleExponential { rate: f64 },
    /// c_n = 1/h_n(s0) for the probed environment itself.
    ReciprocalH { s0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationScheme {
    pub u: UMap,
    pub c_n: CnRule,
}

impl Default for NormalizationScheme {
    fn default() -> Self {
        NormalizationScheme {
            u: UMap::Log,
            c_n: CnRule::SibuyaProduct,
        }
    }
}

/// ln c_n under a rule, in the probed environment.
pub fn ln_c_n(env: &Environment, rule: &CnRule, n: usize) -> Result<f64, LimitError> {
    match rule {
        CnRule::SibuyaProduct => {
            let mut acc = 0.0;
            for i in 0..n {
                let alpha = env.alpha(i).ok_or(LawError::NoStableIndex)?;
                acc -= alpha.ln();
            }
            Ok(acc)
        }
        CnRule::Constant { value } => {
            if !(*value > 0.0) {
                return Err(LimitError::BadParameter {
                    what: "constant c_n must be positive",
                });
            }
            Ok(value.ln())
        }
        CnRule::Linear => Ok((n.max(1) as f64).ln()),
        CnRule::DoubleExponential { rate } => Ok((rate * n as f64).exp()),
        CnRule::ReciprocalH { s0 } => {
            if !(*s0 > 0.0) {
                return Err(LimitError::BadParameter {
                    what: "reciprocal-h rule needs s0 > 0",
                });
            }
            let h_n = compose_h(env, n, TailScalar::from_value(*s0))?;
            Ok(-h_n.ln())
        }
    }
}

/// x / c_n with c_n given in logs, safe when c_n overflows a plain f64.
pub fn scale_by_c(x: f64, ln_c: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x.signum() * (x.abs().ln() - ln_c).exp()
}

/// The sequence U(1/h_n(s))/c_n for n = 1..n_max, whose limit is the
/// slowly-varying-profile value H(s).
pub fn compute_h_profile(
    env: &Environment,
    scheme: &NormalizationScheme,
    s: f64,
    n_max: usize,
) -> Result<Vec<f64>, LimitError> {
    if !(s > 0.0) {
        return Err(LimitError::BadParameter { what: "s must be positive" });
    }
    let mut out = Vec::with_capacity(n_max);
    let mut iterate = TailScalar::from_value(s);
    let mut ln_c_acc = LnCAccumulator::new(scheme.c_n);
    for n in 1..=n_max {
        iterate = env.law(n - 1).h(iterate)?;
        let UMap::Log = scheme.u;
        let u_val = -iterate.ln();
        out.push(scale_by_c(u_val, ln_c_acc.advance_to(env, n)?));
    }
    Ok(out)
}

/// Incremental ln c_n evaluation: product rules advance by one factor
/// per level instead of resumming.
struct LnCAccumulator {
    rule: CnRule,
    acc: f64,
    at: usize,
}

impl LnCAccumulator {
    fn new(rule: CnRule) -> Self {
        LnCAccumulator { rule, acc: 0.0, at: 0 }
    }

    fn advance_to(&mut self, env: &Environment, n: usize) -> Result<f64, LimitError> {
        match self.rule {
            CnRule::SibuyaProduct => {
                while self.at < n {
                    let alpha = env.alpha(self.at).ok_or(LawError::NoStableIndex)?;
                    self.acc -= alpha.ln();
                    self.at += 1;
                }
                Ok(self.acc)
            }
            _ => ln_c_n(env, &self.rule, n),
        }
    }
}

/// The ratio sequence c_{n-1}(shifted env)/c_n(env) for n = 1..n_max;
/// its limit is the contraction factor a of the functional equation.
pub fn compute_alpha_ratio(
    env: &Environment,
    scheme: &NormalizationScheme,
    n_max: usize,
) -> Result<Vec<f64>, LimitError> {
    if n_max < 1 {
        return Err(LimitError::BadParameter { what: "n_max must be at least 1" });
    }
    let shifted = env.shift(1);
    (1..=n_max)
        .map(|n| {
            Ok((ln_c_n(&shifted, &scheme.c_n, n - 1)? - ln_c_n(env, &scheme.c_n, n)?).exp())
        })
        .collect()
}

/// The Y-limit sample: replicated environments, each simulated to
/// Y-stabilization, tested against the uniform law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YDistribution {
    pub y_samples: Vec<f64>,
    /// t_samples[i] = -log(y_samples[i]) bit-for-bit.
    pub t_samples: Vec<f64>,
    pub ks_uniform: KsResult,
    pub replicates: u64,
    /// Trajectories that never met the stabilization rule; excluded
    /// from the samples above.
    pub stabilization_failures: u64,
    /// Trajectories cut short by the exact budget with no asymptotic
    /// step available (a subset of the failures).
    pub truncated: u64,
}

fn run_replicates<T, F>(
    model: &EnvironmentModel,
    base_seed: u64,
    replicates: u64,
    per_replicate: F,
) -> Result<Vec<T>, LimitError>
where
    T: Send,
    F: Fn(u64, &Environment) -> T + Sync,
{
    model.validate()?;
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let env = Environment::new(model.clone(), base_seed, r)?;
            Ok(per_replicate(r, &env))
        })
        .collect()
}

pub fn estimate_y_distribution(
    model: &EnvironmentModel,
    base_seed: u64,
    replicates: u64,
    sim: &SimulationConfig,
) -> Result<YDistribution, LimitError> {
    if replicates < MIN_REPLICATES {
        return Err(LimitError::TooFewReplicates {
            got: replicates,
            need: MIN_REPLICATES,
        });
    }
    let runs = run_replicates(model, base_seed, replicates, |r, env| {
        simulate_trajectory(env, r, sim)
    })?;

    let mut y_samples = Vec::with_capacity(runs.len());
    let mut t_samples = Vec::with_capacity(runs.len());
    let mut failures = 0u64;
    let mut truncated = 0u64;
    for traj in &runs {
        if traj.truncated {
            truncated += 1;
        }
        if traj.stabilized_at.is_some() {
            let y = traj.y;
            y_samples.push(y);
            t_samples.push(-y.ln());
        } else {
            failures += 1;
        }
    }
    if y_samples.is_empty() {
        return Err(LimitError::AllReplicatesFailed { failures });
    }
    let ks_uniform = stats::ks_uniform(&y_samples);
    Ok(YDistribution {
        y_samples,
        t_samples,
        ks_uniform,
        replicates,
        stabilization_failures: failures,
        truncated,
    })
}

/// Dead band for the atom classifier: |log(Z_n h_n)| inside it is too
/// close to call at finite n.
pub const ATOM_DEAD_BAND: f64 = 5.0;

/// Atom structure of the martingale limit W at one point: fractions of
/// paths headed to the zero and infinity atoms, plus the mean of
/// X_n = e^{-Z_n h_n(s)} whose conditional expectation is e^{-s}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WAtoms {
    pub s: f64,
    pub n: usize,
    pub replicates: u64,
    pub count_zero: u64,
    pub count_infinity: u64,
    pub count_ambiguous: u64,
    pub frac_zero: f64,
    pub frac_infinity: f64,
    pub frac_ambiguous: f64,
    pub mean_x: f64,
    pub se_x: f64,
    pub dead_band: f64,
}

pub fn estimate_w_atoms(
    env: &Environment,
    s: f64,
    replicates: u64,
    n: usize,
) -> Result<WAtoms, LimitError> {
    if !(s > 0.0) {
        return Err(LimitError::BadParameter { what: "s must be positive" });
    }
    if replicates < 2 {
        return Err(LimitError::TooFewReplicates { got: replicates, need: 2 });
    }
    let ln_h_n = compose_h(env, n, TailScalar::from_value(s))?.ln();
    let cfg = SimulationConfig {
        n_max: n,
        y_tol: 0.0, // the statistic lives at level n exactly
        ..SimulationConfig::default()
    };
    let verdicts: Vec<(i8, Option<f64>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let traj = simulate_trajectory(env, r, &cfg);
            if traj.levels.len() <= n {
                // Truncated before reaching level n: no statistic.
                return (0i8, None);
            }
            let v = traj.levels[n].ln_z + ln_h_n;
            let x = (-v.exp()).exp();
            let side = if v < -ATOM_DEAD_BAND {
                -1
            } else if v > ATOM_DEAD_BAND {
                1
            } else {
                0
            };
            (side, Some(x))
        })
        .collect();

    let mut count_zero = 0u64;
    let mut count_infinity = 0u64;
    let mut count_ambiguous = 0u64;
    let mut xs = Vec::with_capacity(verdicts.len());
    for (side, x) in verdicts {
        match side {
            // log(Z_n h_n) -> -inf means X -> 1: the W = 0 branch.
            -1 => count_zero += 1,
            1 => count_infinity += 1,
            _ => count_ambiguous += 1,
        }
        if let Some(x) = x {
            xs.push(x);
        }
    }
    if xs.len() < 2 {
        return Err(LimitError::AllReplicatesFailed {
            failures: replicates,
        });
    }
    let (mean_x, se_x) = stats::mean_se(&xs);
    let total = replicates as f64;
    Ok(WAtoms {
        s,
        n,
        replicates,
        count_zero,
        count_infinity,
        count_ambiguous,
        frac_zero: count_zero as f64 / total,
        frac_infinity: count_infinity as f64 / total,
        frac_ambiguous: count_ambiguous as f64 / total,
        mean_x,
        se_x,
        dead_band: ATOM_DEAD_BAND,
    })
}

/// Samples of U(Z_n)/c_n at each trajectory's final level, alongside
/// the faster-converging transform -log(1 - Y). Both target the same
/// limit law; for the heavy-tailed product scheme that law is Exp(1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedLimit {
    pub direct_samples: Vec<f64>,
    pub y_transform_samples: Vec<f64>,
    pub ks_direct_exponential: KsResult,
    pub ks_y_transform_exponential: KsResult,
    pub replicates: u64,
    pub stabilization_failures: u64,
}

fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// -log(1 - e^{-t}) without losing the tail when t is small or large.
fn neg_log_one_minus_y(t: f64) -> f64 {
    -ln_one_minus_exp_neg(t.ln())
}

pub fn normalized_limit_sample(
    model: &EnvironmentModel,
    base_seed: u64,
    scheme: &NormalizationScheme,
    replicates: u64,
    sim: &SimulationConfig,
) -> Result<NormalizedLimit, LimitError> {
    if replicates < MIN_REPLICATES {
        return Err(LimitError::TooFewReplicates {
            got: replicates,
            need: MIN_REPLICATES,
        });
    }
    let runs: Vec<Result<Option<(f64, f64)>, LimitError>> =
        run_replicates(model, base_seed, replicates, |r, env| {
            let traj = simulate_trajectory(env, r, sim);
            if traj.stabilized_at.is_none() {
                return Ok(None);
            }
            let last = traj.final_level();
            let direct = scale_by_c(last.ln_z, ln_c_n(env, &scheme.c_n, last.n)?);
            Ok(Some((direct, neg_log_one_minus_y(traj.t))))
        })?;

    let mut direct_samples = Vec::with_capacity(runs.len());
    let mut y_transform_samples = Vec::with_capacity(runs.len());
    let mut failures = 0u64;
    for run in runs {
        match run? {
            Some((direct, transform)) => {
                direct_samples.push(direct);
                y_transform_samples.push(transform);
            }
            None => failures += 1,
        }
    }
    if direct_samples.is_empty() {
        return Err(LimitError::AllReplicatesFailed { failures });
    }
    Ok(NormalizedLimit {
        ks_direct_exponential: stats::ks_against_cdf(&direct_samples, exp1_cdf),
        ks_y_transform_exponential: stats::ks_against_cdf(&y_transform_samples, exp1_cdf),
        direct_samples,
        y_transform_samples,
        replicates,
        stabilization_failures: failures,
    })
}

/// Which distribution function to place on both sides of the shift
/// equation F(a u) = f_0(F(u)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FSpec {
    /// The closed form F(x) = 1 - e^{-x} of the worked example.
    ExampleExponential,
    /// Empirical distribution functions built from normalized-limit
    /// samples under the environment and its shift, with the same
    /// trajectory seeds on both sides.
    Empirical { replicates: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEquationReport {
    pub max_residual: f64,
    /// Max residual per sampled environment, in replicate order.
    pub per_environment: Vec<f64>,
    pub environments: u64,
    pub u_grid: Vec<f64>,
}

fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

pub fn verify_functional_equation(
    model: &EnvironmentModel,
    base_seed: u64,
    scheme: &NormalizationScheme,
    f_spec: &FSpec,
    u_grid: &[f64],
    environments: u64,
    sim: &SimulationConfig,
) -> Result<FunctionalEquationReport, LimitError> {
    if u_grid.is_empty() {
        return Err(LimitError::EmptyInput { what: "u grid" });
    }
    if environments == 0 {
        return Err(LimitError::BadParameter {
            what: "need at least one environment",
        });
    }
    model.validate()?;
    let per_environment: Vec<f64> = (0..environments)
        .into_par_iter()
        .map(|e| -> Result<f64, LimitError> {
            let env = Environment::new(model.clone(), base_seed, e)?;
            // The contraction factor from the normalization scheme; for
            // the product scheme every ratio term already equals it.
            let alpha = *compute_alpha_ratio(&env, scheme, 1)?.last().expect("n_max 1");
            let law0 = env.law(0);
            let residual_at = |u: f64, f_env: &dyn Fn(f64) -> f64, f_shifted: &dyn Fn(f64) -> f64| {
                let left = f_env(alpha * u);
                let right = law0.pgf(f_shifted(u).clamp(0.0, 1.0))?;
                Ok::<f64, LimitError>((left - right).abs())
            };
            match f_spec {
                FSpec::ExampleExponential => {
                    let f = |x: f64| exp1_cdf(x);
                    let mut worst = 0.0f64;
                    for &u in u_grid {
                        worst = worst.max(residual_at(u, &f, &f)?);
                    }
                    Ok(worst)
                }
                FSpec::Empirical { replicates } => {
                    let shifted = env.shift(1);
                    let mut side_env = Vec::new();
                    let mut side_shifted = Vec::new();
                    for t in 0..*replicates {
                        // Identical trajectory indices on both sides.
                        for (view, side) in [(&env, &mut side_env), (&shifted, &mut side_shifted)]
                        {
                            let traj = simulate_trajectory(view, t, sim);
                            if traj.stabilized_at.is_some() {
                                let last = traj.final_level();
                                side.push(scale_by_c(
                                    last.ln_z,
                                    ln_c_n(view, &scheme.c_n, last.n)?,
                                ));
                            }
                        }
                    }
                    if side_env.is_empty() || side_shifted.is_empty() {
                        return Err(LimitError::AllReplicatesFailed {
                            failures: *replicates,
                        });
                    }
                    side_env.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
                    side_shifted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
                    let f_env = |x: f64| ecdf(&side_env, x);
                    let f_shifted = |x: f64| ecdf(&side_shifted, x);
                    let mut worst = 0.0f64;
                    for &u in u_grid {
                        worst = worst.max(residual_at(u, &f_env, &f_shifted)?);
                    }
                    Ok(worst)
                }
            }
        })
        .collect::<Result<_, _>>()?;
    let max_residual = per_environment.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(FunctionalEquationReport {
        max_residual,
        per_environment,
        environments,
        u_grid: u_grid.to_vec(),
    })
}

/// The four-case growth taxonomy of h_n * c_n trends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthCase {
    A,
    B,
    C,
    D,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductTrend {
    DivergesUp,
    DivergesDown,
    StalledFinite,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub s: f64,
    /// ln(h_n c_n) at the last computed level.
    pub final_log_product: f64,
    pub slope: Option<f64>,
    pub trend: ProductTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthDiagnosis {
    pub case: GrowthCase,
    /// The split location for the mixed case: a stalled grid point if
    /// one exists, otherwise the midpoint of the sign change.
    pub split_point: Option<f64>,
    pub points: Vec<GrowthPoint>,
}

/// |ln product| beyond this at the final level counts as divergence.
const GROWTH_DIVERGE_LOG: f64 = 40.0;
/// A flat trend within this distance of ln 1 = 0 counts as a finite
/// positive limit.
const GROWTH_STALL_LEVEL: f64 = 0.5;
const GROWTH_SLOPE_WINDOW: usize = 10;
const GROWTH_SLOPE_TOL: f64 = 1e-3;

fn classify_product_trend(log_products: &[f64]) -> (ProductTrend, Option<f64>) {
    let last = match log_products.last() {
        Some(&v) => v,
        None => return (ProductTrend::Undecided, None),
    };
    if last.is_nan() {
        return (ProductTrend::Undecided, None);
    }
    if last >= GROWTH_DIVERGE_LOG {
        return (ProductTrend::DivergesUp, None);
    }
    if last <= -GROWTH_DIVERGE_LOG {
        return (ProductTrend::DivergesDown, None);
    }
    if log_products.len() < GROWTH_SLOPE_WINDOW {
        return (ProductTrend::Undecided, None);
    }
    let tail = &log_products[log_products.len() - GROWTH_SLOPE_WINDOW..];
    if tail.iter().any(|v| !v.is_finite()) {
        return (ProductTrend::Undecided, None);
    }
    let xs: Vec<f64> = (0..GROWTH_SLOPE_WINDOW).map(|i| i as f64).collect();
    let slope = stats::slope(&xs, tail);
    if slope.abs() < GROWTH_SLOPE_TOL && last.abs() <= GROWTH_STALL_LEVEL {
        (ProductTrend::StalledFinite, Some(slope))
    } else {
        (ProductTrend::Undecided, Some(slope))
    }
}

pub fn diagnose_growth_case(
    env: &Environment,
    rule: &CnRule,
    s_grid: &[f64],
    n_max: usize,
) -> Result<GrowthDiagnosis, LimitError> {
    if s_grid.is_empty() {
        return Err(LimitError::EmptyInput { what: "s grid" });
    }
    let mut points = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        if !(s > 0.0) {
            return Err(LimitError::BadParameter { what: "s must be positive" });
        }
        let mut iterate = TailScalar::from_value(s);
        let mut log_products = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            iterate = env.law(n - 1).h(iterate)?;
            log_products.push(iterate.ln() + ln_c_n(env, rule, n)?);
        }
        let (trend, slope) = classify_product_trend(&log_products);
        points.push(GrowthPoint {
            s,
            final_log_product: log_products.last().copied().unwrap_or(f64::NAN),
            slope,
            trend,
        });
    }

    let up: Vec<f64> = points
        .iter()
        .filter(|p| p.trend == ProductTrend::DivergesUp)
        .map(|p| p.s)
        .collect();
    let down: Vec<f64> = points
        .iter()
        .filter(|p| p.trend == ProductTrend::DivergesDown)
        .map(|p| p.s)
        .collect();
    let stalled: Vec<f64> = points
        .iter()
        .filter(|p| p.trend == ProductTrend::StalledFinite)
        .map(|p| p.s)
        .collect();

    let (case, split_point) = if up.len() == points.len() {
        (GrowthCase::A, None)
    } else if down.len() == points.len() {
        (GrowthCase::B, None)
    } else if !up.is_empty() && !down.is_empty() {
        let down_max = down.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let up_min = up.iter().cloned().fold(f64::INFINITY, f64::min);
        if down_max < up_min {
            let split = stalled
                .iter()
                .cloned()
                .find(|&s| s > down_max && s < up_min)
                .unwrap_or(0.5 * (down_max + up_min));
            (GrowthCase::C, Some(split))
        } else {
            // Interleaved divergence directions: no monotone split.
            (GrowthCase::Inconclusive, None)
        }
    } else if !stalled.is_empty()
        && points
            .iter()
            .all(|p| p.trend != ProductTrend::Undecided)
    {
        (GrowthCase::D, Some(stalled[0]))
    } else {
        (GrowthCase::Inconclusive, None)
    };

    Ok(GrowthDiagnosis {
        case,
        split_point,
        points,
    })
}

/// Per-point profile record for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HProfile {
    pub s: f64,
    pub values: Vec<f64>,
}

/// One taxonomy probe: a c_n rule and its diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyProbe {
    pub rule: CnRule,
    pub diagnosis: GrowthDiagnosis,
}

/// Everything the limit pipeline produces, in one serializable bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub y: YDistribution,
    pub normalized: NormalizedLimit,
    pub h_profile: Vec<HProfile>,
    pub alpha_ratio: Vec<f64>,
    pub functional_equation: FunctionalEquationReport,
    pub taxonomy: Vec<TaxonomyProbe>,
}

/// Sizes and grids for a full limit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRunSpec {
    pub replicates: u64,
    pub sim: SimulationConfig,
    pub scheme: NormalizationScheme,
    /// Grid for the h profile and the growth taxonomy.
    pub s_grid: Vec<f64>,
    /// Grid for the functional-equation residual.
    pub u_grid: Vec<f64>,
    pub fe_environments: u64,
    /// Depth of the profile, ratio, and taxonomy sequences.
    pub n_profile: usize,
}

impl Default for LimitRunSpec {
    fn default() -> Self {
        LimitRunSpec {
            replicates: 2000,
            sim: SimulationConfig::default(),
            scheme: NormalizationScheme::default(),
            s_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            u_grid: (1..=50).map(|k| 0.1 * k as f64).collect(),
            fe_environments: 100,
            n_profile: 30,
        }
    }
}

/// Run the whole limit pipeline on one model. Profiles, ratios, and the
/// taxonomy are probed on the replicate-0 environment; distributional
/// estimates aggregate over all replicates.
pub fn run_limit_report(
    model: &EnvironmentModel,
    base_seed: u64,
    spec: &LimitRunSpec,
) -> Result<LimitReport, LimitError> {
    let y = estimate_y_distribution(model, base_seed, spec.replicates, &spec.sim)?;
    let normalized =
        normalized_limit_sample(model, base_seed, &spec.scheme, spec.replicates, &spec.sim)?;
    let probe_env = Environment::new(model.clone(), base_seed, 0)?;
    let mut h_profile = Vec::with_capacity(spec.s_grid.len());
    for &s in &spec.s_grid {
        h_profile.push(HProfile {
            s,
            values: compute_h_profile(&probe_env, &spec.scheme, s, spec.n_profile)?,
        });
    }
    let alpha_ratio = compute_alpha_ratio(&probe_env, &spec.scheme, spec.n_profile)?;
    let functional_equation = verify_functional_equation(
        model,
        base_seed,
        &spec.scheme,
        &FSpec::ExampleExponential,
        &spec.u_grid,
        spec.fe_environments,
        &spec.sim,
    )?;
    let taxonomy = [spec.scheme.c_n, CnRule::Constant { value: 1.0 }]
        .iter()
        .map(|rule| {
            Ok(TaxonomyProbe {
                rule: *rule,
                diagnosis: diagnose_growth_case(&probe_env, rule, &spec.s_grid, spec.n_profile)?,
            })
        })
        .collect::<Result<_, LimitError>>()?;
    Ok(LimitReport {
        y,
        normalized,
        h_profile,
        alpha_ratio,
        functional_equation,
        taxonomy,
    })
}

/// Mean of the martingale variable X_n = e^{-Z_n h_n(s)} over many
/// trajectories in one fixed environment, with its standard error.
pub fn martingale_mean(
    env: &Environment,
    s: f64,
    n: usize,
    replicates: u64,
) -> Result<(f64, f64), LimitError> {
    let atoms = estimate_w_atoms(env, s, replicates, n)?;
    Ok((atoms.mean_x, atoms.se_x))
}
