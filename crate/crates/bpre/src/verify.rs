//! Acceptance suite: ten self-contained checks covering the limit
//! theory (AC1-AC4), the regularity machinery (AC5), the functional
//! equation (AC6), the stable-step plumbing (AC7), defect probes
//! (AC8), the atom split of W (AC9), and end-to-end determinism
//! (AC10).
//!
//! Every tolerance and sample size is pinned here as a named constant.
//! The same runners back the `verify` subcommand and the acceptance
//! integration test, so a criterion cannot drift between the two.

use std::f64::consts::LN_2;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compose::{compose_h, defect_ratios, h_iterates};
use crate::config::ConfigBuilder;
use crate::environment::{
    validate_assumptions, AssumptionProbe, AssumptionVerdict, Environment, EnvironmentModel,
};
use crate::limitlab::{
    estimate_w_atoms, estimate_y_distribution, martingale_mean, normalized_limit_sample,
    verify_functional_equation, FSpec, NormalizationScheme,
};
use crate::logdomain::{ln_one_minus_exp_neg, TailScalar};
use crate::pgf::{LawDescriptor, Offspring, OffspringLaw};
use crate::population::SimulationConfig;
use crate::regularity::{
    check_sufficient_criterion, classify_point, q_log_products, ClassifyConfig, Verdict,
};
use crate::stable::sample_stable;
use crate::stats::ks_two_sample;
use crate::stream::rng_at;

/// Seed of the standard acceptance run. Every criterion derives its
/// streams from this value.
pub const ACCEPTANCE_SEED: u64 = 42;

const AC1_REPLICATES: u64 = 2000;
const AC1_KS_LIMIT: f64 = 0.0304;
const AC2_TRANSFORM_KS_LIMIT: f64 = 0.0304;
const AC2_DIRECT_KS_LIMIT: f64 = 0.05;
const AC3_REPLICATES: u64 = 100_000;
const AC3_GENERATION: usize = 6;
const AC3_SE_FACTOR: f64 = 3.0;
const AC4_PAIR_REL: f64 = 1e-12;
const AC4_IDENTITY_REL: f64 = 1e-9;
const AC4_ENVIRONMENTS: u64 = 100;
const AC4_DEPTH: usize = 30;
const AC5_ENVIRONMENTS: u64 = 100;
const AC5_PRODUCT_DEPTH: usize = 200;
const AC5_PRODUCT_LIMIT: f64 = -40.0;
const AC5_SUFFICIENT_C: f64 = 0.7;
const AC6_ANALYTIC_LIMIT: f64 = 1e-12;
const AC6_ANALYTIC_ENVIRONMENTS: u64 = 100;
const AC6_EMPIRICAL_LIMIT: f64 = 0.06;
const AC6_EMPIRICAL_ENVIRONMENTS: u64 = 3;
const AC6_EMPIRICAL_REPLICATES: u64 = 2000;
const AC7_ALPHAS: [f64; 3] = [0.3, 0.5, 0.7];
const AC7_SUM_LENGTH: u64 = 10_000;
const AC7_REPLICATES: u64 = 2000;
const AC7_KS_LIMIT: f64 = 0.05;
const AC8_DEFECT_LIMIT: f64 = 1e-6;
const AC8_DOUBLING_RATIO: f64 = 0.5;
const AC8_DOUBLING_TOL: f64 = 1e-9;
const AC8_DOUBLING_DEPTH: usize = 30;
const AC9_REPLICATES: u64 = 10_000;
const AC9_GENERATION: usize = 12;
/// Binomial standard error of a 0.5 fraction at AC9_REPLICATES.
const AC9_SE: f64 = 0.005;
const AC9_SE_FACTOR: f64 = 3.0;
const AC9_AMBIGUOUS_LIMIT: f64 = 0.02;
const AC10_REPLICATES: u64 = 500;
const AC10_WORKERS: [usize; 2] = [1, 8];

/// Stream tags private to the acceptance suite so its draws never
/// collide with simulation streams under the same seed.
const STREAM_AC7_SUM: u64 = 0x56;
const STREAM_AC7_STABLE: u64 = 0x57;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

fn criterion(id: &str, run: impl FnOnce() -> Result<(bool, String), String>) -> CriterionResult {
    match run() {
        Ok((pass, detail)) => CriterionResult {
            id: id.to_string(),
            pass,
            detail,
        },
        Err(message) => CriterionResult {
            id: id.to_string(),
            pass: false,
            detail: format!("error: {message}"),
        },
    }
}

/// The heavy-tailed i.i.d. environment every criterion runs against.
fn acceptance_model() -> EnvironmentModel {
    EnvironmentModel::SibuyaUniform {
        alpha_min: 0.2,
        alpha_max: 0.7,
    }
}

fn acceptance_s_grid() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0]
}

fn acceptance_u_grid() -> Vec<f64> {
    (1..=50).map(|k| 0.1 * k as f64).collect()
}

/// Run AC1 through AC10 in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        ac1(),
        ac2(),
        ac3(),
        ac4(),
        ac5(),
        ac6(),
        ac7(),
        ac8(),
        ac9(),
        ac10(),
    ]
}

/// AC1: the stabilized statistic Y is Uniform(0,1) over replicates.
pub fn ac1() -> CriterionResult {
    criterion("AC1", || {
        let sim = SimulationConfig::default();
        let y = estimate_y_distribution(&acceptance_model(), ACCEPTANCE_SEED, AC1_REPLICATES, &sim)
            .map_err(|e| e.to_string())?;
        let d = y.ks_uniform.statistic;
        Ok((
            d <= AC1_KS_LIMIT,
            format!(
                "KS(Y, U(0,1)) = {d:.4} (limit {AC1_KS_LIMIT}), {} replicates, {} stabilization misses",
                y.replicates, y.stabilization_failures
            ),
        ))
    })
}

/// AC2: -log(1-Y) and the directly normalized size are both Exp(1).
pub fn ac2() -> CriterionResult {
    criterion("AC2", || {
        let sim = SimulationConfig::default();
        let scheme = NormalizationScheme::default();
        let limit = normalized_limit_sample(
            &acceptance_model(),
            ACCEPTANCE_SEED,
            &scheme,
            AC1_REPLICATES,
            &sim,
        )
        .map_err(|e| e.to_string())?;
        let d_transform = limit.ks_y_transform_exponential.statistic;
        let d_direct = limit.ks_direct_exponential.statistic;
        Ok((
            d_transform <= AC2_TRANSFORM_KS_LIMIT && d_direct <= AC2_DIRECT_KS_LIMIT,
            format!(
                "KS(-log(1-Y), Exp(1)) = {d_transform:.4} (limit {AC2_TRANSFORM_KS_LIMIT}); \
                 KS(log Z_n / c_n, Exp(1)) = {d_direct:.4} (limit {AC2_DIRECT_KS_LIMIT})"
            ),
        ))
    })
}

/// AC3: the quenched martingale mean E[X_n | environment] = e^{-s}.
pub fn ac3() -> CriterionResult {
    criterion("AC3", || {
        let env = Environment::new(acceptance_model(), ACCEPTANCE_SEED, 0)
            .map_err(|e| e.to_string())?;
        let (mean, se) = martingale_mean(&env, LN_2, AC3_GENERATION, AC3_REPLICATES)
            .map_err(|e| e.to_string())?;
        let gap = (mean - 0.5).abs();
        let band = AC3_SE_FACTOR * se;
        Ok((
            gap <= band,
            format!(
                "|mean X_{AC3_GENERATION} - 0.5| = {gap:.2e} vs {AC3_SE_FACTOR}*SE = {band:.2e} \
                 ({AC3_REPLICATES} replicates)"
            ),
        ))
    })
}

/// AC4: closed-form h_n values for pure power-tail laws.
pub fn ac4() -> CriterionResult {
    criterion("AC4", || {
        // Two half-exponent steps: h_2(log 2) = -log(1 - (1 - 1/2)^{1/4})
        // = -log(0.9375) after unwinding the tail algebra.
        let pair = Environment::new(
            EnvironmentModel::Cycle {
                laws: vec![LawDescriptor::Sibuya { alpha: 0.5 }],
            },
            0,
            0,
        )
        .map_err(|e| e.to_string())?;
        let h2 = compose_h(&pair, 2, TailScalar::from_value(LN_2))
            .map_err(|e| e.to_string())?
            .value();
        let expected = -(0.9375f64.ln());
        let pair_rel = (h2 - expected).abs() / expected;

        // General identity: log(1 - e^{-h_n(s)}) = (prod 1/alpha_i) * log(1 - e^{-s}).
        let ln_w0 = ln_one_minus_exp_neg(TailScalar::from_value(LN_2).ln());
        let mut worst_rel = 0.0f64;
        for r in 0..AC4_ENVIRONMENTS {
            let env = Environment::new(acceptance_model(), ACCEPTANCE_SEED, r)
                .map_err(|e| e.to_string())?;
            let iterates = h_iterates(&env, AC4_DEPTH, TailScalar::from_value(LN_2))
                .map_err(|e| e.to_string())?;
            let mut product = 1.0f64;
            for (n, h_n) in iterates.iter().enumerate().skip(1) {
                let alpha = env
                    .alpha(n - 1)
                    .ok_or_else(|| format!("environment {r} has no tail exponent at {}", n - 1))?;
                product /= alpha;
                let lhs = ln_one_minus_exp_neg(h_n.ln());
                let rhs = product * ln_w0;
                worst_rel = worst_rel.max((lhs - rhs).abs() / rhs.abs());
            }
        }
        Ok((
            pair_rel <= AC4_PAIR_REL && worst_rel <= AC4_IDENTITY_REL,
            format!(
                "two-step h_2 relative error {pair_rel:.2e} (limit {AC4_PAIR_REL:.0e}); \
                 identity over {AC4_ENVIRONMENTS} environments, n <= {AC4_DEPTH}: \
                 worst relative error {worst_rel:.2e} (limit {AC4_IDENTITY_REL:.0e})"
            ),
        ))
    })
}

/// AC5: the heavy-tailed model is regular everywhere, with vanishing
/// Q products and a strict sufficient bound.
pub fn ac5() -> CriterionResult {
    criterion("AC5", || {
        let grid = acceptance_s_grid();
        let config = ClassifyConfig::default();
        let verdicts: Vec<(Verdict, f64)> = (0..AC5_ENVIRONMENTS)
            .into_par_iter()
            .map(|r| -> Result<Vec<(Verdict, f64)>, String> {
                let env = Environment::new(acceptance_model(), ACCEPTANCE_SEED, r)
                    .map_err(|e| e.to_string())?;
                grid.iter()
                    .map(|&s| {
                        let point = classify_point(&env, s, &config).map_err(|e| e.to_string())?;
                        let products = q_log_products(&env, s, AC5_PRODUCT_DEPTH)
                            .map_err(|e| e.to_string())?;
                        let last = products
                            .partial_sums
                            .last()
                            .copied()
                            .unwrap_or(f64::INFINITY);
                        Ok((point.verdict, last))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>, String>>()?
            .into_iter()
            .flatten()
            .collect();
        let total = verdicts.len();
        let regular = verdicts
            .iter()
            .filter(|(v, _)| *v == Verdict::Regular)
            .count();
        let worst_product = verdicts.iter().map(|&(_, q)| q).fold(f64::NEG_INFINITY, f64::max);

        let sufficient =
            check_sufficient_criterion(&acceptance_model(), ACCEPTANCE_SEED, AC5_ENVIRONMENTS)
                .map_err(|e| e.to_string())?;
        let c = sufficient.c_estimate.unwrap_or(1.0);
        Ok((
            regular == total
                && worst_product <= AC5_PRODUCT_LIMIT
                && sufficient.holds
                && c <= AC5_SUFFICIENT_C,
            format!(
                "{regular}/{total} points regular; worst log Q product at depth \
                 {AC5_PRODUCT_DEPTH} = {worst_product:.1} (limit {AC5_PRODUCT_LIMIT}); \
                 sufficient criterion holds = {} with c = {c:.3} (limit {AC5_SUFFICIENT_C})",
                sufficient.holds
            ),
        ))
    })
}

/// AC6: the limit law satisfies F(alpha u) = f(F(shifted u)), checked
/// in closed form and against empirical distributions.
pub fn ac6() -> CriterionResult {
    criterion("AC6", || {
        let sim = SimulationConfig::default();
        let scheme = NormalizationScheme::default();
        let u_grid = acceptance_u_grid();
        let analytic = verify_functional_equation(
            &acceptance_model(),
            ACCEPTANCE_SEED,
            &scheme,
            &FSpec::ExampleExponential,
            &u_grid,
            AC6_ANALYTIC_ENVIRONMENTS,
            &sim,
        )
        .map_err(|e| e.to_string())?;
        let empirical = verify_functional_equation(
            &acceptance_model(),
            ACCEPTANCE_SEED,
            &scheme,
            &FSpec::Empirical {
                replicates: AC6_EMPIRICAL_REPLICATES,
            },
            &u_grid,
            AC6_EMPIRICAL_ENVIRONMENTS,
            &sim,
        )
        .map_err(|e| e.to_string())?;
        Ok((
            analytic.max_residual <= AC6_ANALYTIC_LIMIT
                && empirical.max_residual <= AC6_EMPIRICAL_LIMIT,
            format!(
                "analytic residual {:.2e} over {AC6_ANALYTIC_ENVIRONMENTS} environments \
                 (limit {AC6_ANALYTIC_LIMIT:.0e}); empirical residual {:.3} over \
                 {AC6_EMPIRICAL_ENVIRONMENTS} environments x {AC6_EMPIRICAL_REPLICATES} \
                 replicates/side (limit {AC6_EMPIRICAL_LIMIT})",
                analytic.max_residual, empirical.max_residual
            ),
        ))
    })
}

/// AC7: scaled sums of heavy-tailed offspring match direct one-sided
/// stable draws, validating the asymptotic step.
pub fn ac7() -> CriterionResult {
    criterion("AC7", || {
        let mut details = Vec::new();
        let mut pass = true;
        for (idx, &alpha) in AC7_ALPHAS.iter().enumerate() {
            let law = OffspringLaw::sibuya(alpha).map_err(|e| e.to_string())?;
            let scale = (AC7_SUM_LENGTH as f64).powf(-1.0 / alpha);
            let scaled: Vec<f64> = (0..AC7_REPLICATES)
                .into_par_iter()
                .map(|r| {
                    let mut rng = rng_at(ACCEPTANCE_SEED, &[STREAM_AC7_SUM, idx as u64, r]);
                    let mut sum = 0.0f64;
                    for _ in 0..AC7_SUM_LENGTH {
                        sum += match law.sample_offspring(&mut rng) {
                            Offspring::Small(v) => v as f64,
                            Offspring::Big(b) => b.to_f64().unwrap_or(f64::MAX),
                        };
                    }
                    sum * scale
                })
                .collect();
            let direct: Vec<f64> = (0..AC7_REPLICATES)
                .into_par_iter()
                .map(|r| {
                    let mut rng = rng_at(ACCEPTANCE_SEED, &[STREAM_AC7_STABLE, idx as u64, r]);
                    sample_stable(alpha, &mut rng)
                })
                .collect();
            let ks = ks_two_sample(&scaled, &direct);
            pass &= ks.statistic <= AC7_KS_LIMIT;
            details.push(format!("alpha {alpha}: KS = {:.4}", ks.statistic));
        }
        Ok((
            pass,
            format!(
                "{} over sums of {AC7_SUM_LENGTH}, {AC7_REPLICATES} replicates/side \
                 (limit {AC7_KS_LIMIT})",
                details.join("; ")
            ),
        ))
    })
}

/// AC8: defect ratios vanish for the heavy-tailed model and equal 1/2
/// exactly for the doubling law.
pub fn ac8() -> CriterionResult {
    criterion("AC8", || {
        let probe = AssumptionProbe::default();
        let report = validate_assumptions(&acceptance_model(), ACCEPTANCE_SEED, &probe);
        let worst_defect = report
            .probes
            .iter()
            .map(|p| p.final_ratio)
            .fold(0.0f64, f64::max);
        let vanishing_ok = report.verdict == AssumptionVerdict::Consistent
            && !report.probes.is_empty()
            && worst_defect <= AC8_DEFECT_LIMIT;

        let doubling = Environment::new(
            EnvironmentModel::Cycle {
                laws: vec![LawDescriptor::Finite {
                    weights: vec![0.0, 0.0, 1.0],
                }],
            },
            0,
            0,
        )
        .map_err(|e| e.to_string())?;
        let ratios = defect_ratios(&doubling, TailScalar::from_value(1.0), AC8_DOUBLING_DEPTH)
            .map_err(|e| e.to_string())?;
        let worst_doubling = ratios
            .iter()
            .map(|&r| (r - AC8_DOUBLING_RATIO).abs())
            .fold(0.0f64, f64::max);
        let doubling_ok = !ratios.is_empty() && worst_doubling <= AC8_DOUBLING_TOL;

        Ok((
            vanishing_ok && doubling_ok,
            format!(
                "heavy-tailed model: worst defect ratio {worst_defect:.2e} over {} probes \
                 (limit {AC8_DEFECT_LIMIT:.0e}); doubling law: max |ratio - {AC8_DOUBLING_RATIO}| \
                 = {worst_doubling:.2e} over n <= {AC8_DOUBLING_DEPTH} (limit {AC8_DOUBLING_TOL:.0e})",
                report.probes.len()
            ),
        ))
    })
}

/// AC9: the limit W splits its mass evenly between 0 and infinity at
/// s = log 2, with few ambiguous trajectories.
pub fn ac9() -> CriterionResult {
    criterion("AC9", || {
        let env = Environment::new(acceptance_model(), ACCEPTANCE_SEED, 0)
            .map_err(|e| e.to_string())?;
        let atoms = estimate_w_atoms(&env, LN_2, AC9_REPLICATES, AC9_GENERATION)
            .map_err(|e| e.to_string())?;
        let band = AC9_SE_FACTOR * AC9_SE;
        let zero_gap = (atoms.frac_zero - 0.5).abs();
        let inf_gap = (atoms.frac_infinity - 0.5).abs();
        Ok((
            zero_gap <= band && inf_gap <= band && atoms.frac_ambiguous <= AC9_AMBIGUOUS_LIMIT,
            format!(
                "frac(W=0) = {:.4}, frac(W=inf) = {:.4} (each within {band:.3} of 0.5 required); \
                 ambiguous = {:.4} (limit {AC9_AMBIGUOUS_LIMIT})",
                atoms.frac_zero, atoms.frac_infinity, atoms.frac_ambiguous
            ),
        ))
    })
}

/// AC10: a full limits run writes byte-identical artifacts under
/// worker counts 1 and 8.
pub fn ac10() -> CriterionResult {
    criterion("AC10", || {
        let artifacts = ["run_record.json", "samples.csv", "report.json"];
        let mut captured: Vec<Vec<Vec<u8>>> = Vec::new();
        for &workers in &AC10_WORKERS {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut config = ConfigBuilder::default()
                .finish()
                .map_err(|e| e.to_string())?;
            config.replicates = AC10_REPLICATES;
            config.workers = workers;
            config.out = dir.path().to_path_buf();
            crate::cli::execute_limits(&config).map_err(|e| e.to_string())?;
            let mut bytes = Vec::new();
            for name in &artifacts {
                bytes.push(std::fs::read(dir.path().join(name)).map_err(|e| e.to_string())?);
            }
            captured.push(bytes);
        }
        let identical = captured[0] == captured[1];
        let sizes: Vec<String> = artifacts
            .iter()
            .zip(&captured[0])
            .map(|(name, bytes)| format!("{name} {} bytes", bytes.len()))
            .collect();
        Ok((
            identical,
            format!(
                "limits run x{AC10_REPLICATES} replicates with workers {} vs {}: artifacts {}",
                AC10_WORKERS[0],
                AC10_WORKERS[1],
                if identical {
                    format!("byte-identical ({})", sizes.join(", "))
                } else {
                    "DIFFER".to_string()
                }
            ),
        ))
    })
}
