//! Regularity classification.
//!
//! A point s is regular when the martingale limit W(s) concentrates on
//! {0, infinity}. Two numerical criteria probe this:
//!
//! * the product criterion: prod_n Q_{xi_n}(e^{-h_{n+1}(s)}) = 0, with
//!   Q(s) = f'(s)(1-s)/(1-f(s)) in [0,1); divergence of the log partial
//!   sums below a threshold certifies regularity evidence;
//! * the ratio criterion: h_n(t)/h_n(s) -> 0 for every t < s exactly at
//!   regular points; a ratio stabilizing at a positive limit is the
//!   deciding evidence for irregularity.
//!
//! A slowly diverging product is numerically indistinguishable from a
//! convergent one, so Irregular is never declared from the product
//! alone; the verdict logic is Regular only when both criteria agree,
//! Irregular only on ratio stabilization, Inconclusive otherwise.

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, EnvironmentModel};
use crate::logdomain::{ln_one_minus_exp_neg, TailScalar};
use crate::pgf::LawError;
use crate::stats;

/// Log partial sums at or below this value certify a vanished product
/// (e^-40 is far below recovery for a product of factors in [0,1)).
pub const DEFAULT_REGULAR_THRESHOLD: f64 = -40.0;
/// A trend's least-squares slope over the last window is "flat" below
/// this magnitude.
pub const RATIO_SLOPE_TOLERANCE: f64 = 1e-3;
/// Stall window: a flat log-ratio with level in (-LEVEL_SLOPE * n, 0]
/// declares a positive limit. The window widens linearly with depth, so
/// any fixed negative level is eventually caught while truly vanishing
/// ratios outrun it.
pub const RATIO_LEVEL_SLOPE: f64 = 1e-3;
/// Points used for the trend slope fit.
const SLOPE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Iteration depth for both criteria.
    pub n_max: usize,
    /// Log-product divergence threshold.
    pub regular_threshold: f64,
    /// Ratio probe points t as fractions of s, each in (0,1).
    pub ratio_grid: Vec<f64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            // Deep enough that the stall window engulfs log(t/s) for the
            // default grid; the chains are cheap.
            n_max: 2000,
            regular_threshold: DEFAULT_REGULAR_THRESHOLD,
            ratio_grid: vec![0.25, 0.5, 0.75],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    Irregular,
    Inconclusive,
}

/// The thresholds a verdict was computed under, echoed in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub regular_threshold: f64,
    pub slope_tolerance: f64,
    pub level_slope: f64,
}

/// One ratio probe: the trace of ln(h_n(t)/h_n(s)) and what its trend
/// supports. Recording stops when either chain leaves f64 log range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTrend {
    pub t: f64,
    pub log_ratio: Vec<f64>,
    /// Least-squares slope over the last window, when long enough.
    pub slope: Option<f64>,
    /// Flat slope at a level inside the stall window: positive limit.
    pub stabilized: bool,
    /// Final level below the stall window: ratio vanishing.
    pub trending_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointVerdict {
    pub s: f64,
    pub verdict: Verdict,
    pub log_q_products: Vec<f64>,
    pub ratio_trends: Vec<RatioTrend>,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessVerdict {
    pub verdict: Verdict,
    pub points: Vec<PointVerdict>,
}

/// Q-product evidence: partial sums of ln Q_{xi_i} at the inner points
/// e^{-h_{i+1}(s)}, plus the trace of those points in complement logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QProducts {
    /// partial_sums[n-1] = sum_{i<n} ln Q_{xi_i}(e^{-h_{i+1}}).
    pub partial_sums: Vec<f64>,
    /// inner_ln_complement[n-1] = ln(1 - e^{-h_n(s)}).
    pub inner_ln_complement: Vec<f64>,
}

/// The log partial sums of the regularity product, computed in
/// complement coordinates so deep iterates keep full resolution.
pub fn q_log_products(
    env: &Environment,
    s: f64,
    n_max: usize,
) -> Result<QProducts, LawError> {
    check_point(s)?;
    let mut iterate = TailScalar::from_value(s);
    let mut acc = 0.0;
    let mut partial_sums = Vec::with_capacity(n_max);
    let mut inner_ln_complement = Vec::with_capacity(n_max);
    for i in 0..n_max {
        let law = env.law(i);
        iterate = law.h(iterate)?;
        let ln_w = ln_one_minus_exp_neg(iterate.ln());
        acc += law.ln_q_from_complement(ln_w);
        partial_sums.push(acc);
        inner_ln_complement.push(ln_w);
    }
    Ok(QProducts {
        partial_sums,
        inner_ln_complement,
    })
}

fn check_point(s: f64) -> Result<(), LawError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(LawError::Domain {
            value: s,
            domain: "(0, inf)",
        });
    }
    Ok(())
}

fn check_config(config: &ClassifyConfig) -> Result<(), LawError> {
    for &frac in &config.ratio_grid {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(LawError::Domain {
                value: frac,
                domain: "(0, 1) ratio fractions",
            });
        }
    }
    Ok(())
}

/// Classify one point by combining the product and ratio criteria.
pub fn classify_point(
    env: &Environment,
    s: f64,
    config: &ClassifyConfig,
) -> Result<PointVerdict, LawError> {
    check_point(s)?;
    check_config(config)?;

    let mut s_chain = TailScalar::from_value(s);
    let mut t_chains: Vec<TailScalar> = config
        .ratio_grid
        .iter()
        .map(|&frac| TailScalar::from_value(frac * s))
        .collect();
    let mut traces: Vec<Vec<f64>> = vec![Vec::new(); t_chains.len()];
    let mut acc = 0.0;
    let mut log_q_products = Vec::with_capacity(config.n_max);

    for i in 0..config.n_max {
        let law = env.law(i);
        s_chain = law.h(s_chain)?;
        let ln_w = ln_one_minus_exp_neg(s_chain.ln());
        acc += law.ln_q_from_complement(ln_w);
        log_q_products.push(acc);
        for (chain, trace) in t_chains.iter_mut().zip(traces.iter_mut()) {
            *chain = law.h(*chain)?;
            let diff = chain.ln() - s_chain.ln();
            // Record while both chains resolve; past f64 log range the
            // trend is already decided.
            if diff.is_finite() && trace.len() == i {
                trace.push(diff);
            }
        }
    }

    let ratio_trends: Vec<RatioTrend> = config
        .ratio_grid
        .iter()
        .zip(traces)
        .map(|(&frac, log_ratio)| judge_trend(frac * s, log_ratio))
        .collect();

    let products_diverged = log_q_products
        .last()
        .is_some_and(|&v| v <= config.regular_threshold);
    let any_stabilized = ratio_trends.iter().any(|r| r.stabilized);
    let all_vanishing =
        !ratio_trends.is_empty() && ratio_trends.iter().all(|r| r.trending_zero);

    let verdict = if any_stabilized {
        Verdict::Irregular
    } else if products_diverged && all_vanishing {
        Verdict::Regular
    } else {
        Verdict::Inconclusive
    };

    Ok(PointVerdict {
        s,
        verdict,
        log_q_products,
        ratio_trends,
        thresholds: Thresholds {
            regular_threshold: config.regular_threshold,
            slope_tolerance: RATIO_SLOPE_TOLERANCE,
            level_slope: RATIO_LEVEL_SLOPE,
        },
    })
}

fn judge_trend(t: f64, log_ratio: Vec<f64>) -> RatioTrend {
    let n = log_ratio.len();
    if n < SLOPE_WINDOW {
        return RatioTrend {
            t,
            log_ratio,
            slope: None,
            stabilized: false,
            trending_zero: false,
        };
    }
    let tail = &log_ratio[n - SLOPE_WINDOW..];
    let xs: Vec<f64> = (0..SLOPE_WINDOW).map(|i| i as f64).collect();
    let slope = stats::slope(&xs, tail);
    let level = log_ratio[n - 1];
    let window_floor = -RATIO_LEVEL_SLOPE * n as f64;
    let stabilized = slope.abs() < RATIO_SLOPE_TOLERANCE && level > window_floor && level <= 1e-9;
    let trending_zero = level <= window_floor;
    RatioTrend {
        t,
        log_ratio,
        slope: Some(slope),
        stabilized,
        trending_zero,
    }
}

/// Classify a process over a grid of points: Regular needs every point
/// Regular, any Irregular point decides Irregular, anything else is
/// Inconclusive.
pub fn classify_process(
    env: &Environment,
    s_grid: &[f64],
    config: &ClassifyConfig,
) -> Result<ProcessVerdict, LawError> {
    if s_grid.is_empty() {
        return Err(LawError::Domain {
            value: 0.0,
            domain: "nonempty s grid",
        });
    }
    let mut points = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        points.push(classify_point(env, s, config)?);
    }
    let verdict = combine_verdicts(points.iter().map(|p| p.verdict));
    Ok(ProcessVerdict { verdict, points })
}

pub(crate) fn combine_verdicts<I: IntoIterator<Item = Verdict>>(verdicts: I) -> Verdict {
    let mut all_regular = true;
    for v in verdicts {
        match v {
            Verdict::Irregular => return Verdict::Irregular,
            Verdict::Inconclusive => all_regular = false,
            Verdict::Regular => {}
        }
    }
    if all_regular {
        Verdict::Regular
    } else {
        Verdict::Inconclusive
    }
}

/// Outcome of the positive-probability uniform-bound criterion
/// sup_s Q(s) <= c < 1, estimated over sampled laws on a dense grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientReport {
    pub holds: bool,
    /// Max observed supremum among the laws witnessing the bound.
    pub c_estimate: Option<f64>,
    /// Fraction of sampled laws with supremum under the bound margin.
    pub bounded_fraction: f64,
}

/// A grid supremum within this distance of 1 is treated as unbounded
/// (finite-mean laws have Q -> 1 at the fixed point, so their grid
/// suprema crowd 1 from below).
pub const SUFFICIENT_BOUND_MARGIN: f64 = 1e-3;

/// Estimate sup_s Q(s) for one law over a dense grid, refined toward
/// s = 1 in complement coordinates.
pub fn q_supremum_on_grid(law: &crate::pgf::OffspringLaw) -> Result<f64, LawError> {
    let mut sup: f64 = 0.0;
    for j in 0..100 {
        sup = sup.max(law.q_ratio(j as f64 / 100.0)?);
    }
    for k in 2..=6 {
        let ln_w = -(10f64.powi(k)).ln();
        sup = sup.max(law.ln_q_from_complement(ln_w).exp());
    }
    Ok(sup)
}

/// The sufficient criterion holds when a positive fraction of sampled
/// first-generation laws have their Q supremum bounded away from 1.
pub fn check_sufficient_criterion(
    model: &EnvironmentModel,
    base_seed: u64,
    samples: u64,
) -> Result<SufficientReport, crate::environment::EnvError> {
    let mut bounded = 0u64;
    let mut c: Option<f64> = None;
    for replicate in 0..samples.max(1) {
        let env = Environment::new(model.clone(), base_seed, replicate)?;
        let sup = q_supremum_on_grid(&env.law(0))?;
        if sup <= 1.0 - SUFFICIENT_BOUND_MARGIN {
            bounded += 1;
            c = Some(c.map_or(sup, |prev: f64| prev.max(sup)));
        }
    }
    Ok(SufficientReport {
        holds: bounded > 0,
        c_estimate: c,
        bounded_fraction: bounded as f64 / samples.max(1) as f64,
    })
}

/// Result of probing [h_{xi_0}(s), s] in the shifted environment for a
/// regular point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularPointSearch {
    /// Interval endpoints probed, [h_{xi_0}(s), s].
    pub interval: (f64, f64),
    pub found: Option<f64>,
    pub probes: Vec<PointVerdict>,
}

/// Search the interval [h_{xi_0}(s), s] in the shifted environment for
/// a point classified Regular. Under a vanishing defect such a point
/// exists; failure to find one is reported, not treated as an error.
pub fn find_regular_point(
    env: &Environment,
    s: f64,
    config: &ClassifyConfig,
) -> Result<RegularPointSearch, LawError> {
    check_point(s)?;
    let lo = env.law(0).h(TailScalar::from_value(s))?.value();
    let shifted = env.shift(1);
    let probes_at = 5usize;
    let mut probes = Vec::with_capacity(probes_at);
    let mut found = None;
    for j in 0..probes_at {
        let frac = j as f64 / (probes_at - 1) as f64;
        let t = lo + frac * (s - lo);
        let verdict = classify_point(&shifted, t, config)?;
        let is_regular = verdict.verdict == Verdict::Regular;
        probes.push(verdict);
        if is_regular {
            found = Some(t);
            break;
        }
    }
    Ok(RegularPointSearch {
        interval: (lo, s),
        found,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::compose_h;
    use crate::environment::MixtureComponent;
    use crate::pgf::{LawDescriptor, OffspringLaw};

    fn sibuya_env(alpha: f64) -> Environment {
        Environment::constant(&OffspringLaw::sibuya(alpha).unwrap(), 0, 0)
    }

    fn doubling_env() -> Environment {
        Environment::constant(&OffspringLaw::finite_pmf(&[0.0, 0.0, 1.0]).unwrap(), 0, 0)
    }

    #[test]
    fn products_match_heavy_closed_form() {
        // Q is identically alpha and the inner complements contract by
        // exactly 1/alpha per level in log coordinate.
        let env = sibuya_env(0.37);
        let s = 0.8f64;
        let q = q_log_products(&env, s, 40).unwrap();
        let ln_w0 = ln_one_minus_exp_neg(TailScalar::from_value(s).ln());
        for (i, (&sum, &ln_w)) in q
            .partial_sums
            .iter()
            .zip(&q.inner_ln_complement)
            .enumerate()
        {
            let n = (i + 1) as f64;
            let expect_sum = n * 0.37f64.ln();
            assert!((sum - expect_sum).abs() < 1e-12 * expect_sum.abs());
            let expect_w = ln_w0 / 0.37f64.powi(i as i32 + 1);
            assert!(
                (ln_w - expect_w).abs() < 1e-12 * expect_w.abs(),
                "n={}: {ln_w} vs {expect_w}",
                i + 1
            );
        }
        for w in q.partial_sums.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(q_log_products(&env, s, 0).unwrap().partial_sums.is_empty());
    }

    #[test]
    fn constant_heavy_law_classifies_regular() {
        let v = classify_point(&sibuya_env(0.5), 1.0, &ClassifyConfig::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Regular);
        assert!(*v.log_q_products.last().unwrap() <= DEFAULT_REGULAR_THRESHOLD);
        for trend in &v.ratio_trends {
            assert!(trend.trending_zero);
            assert!(!trend.stabilized);
            assert!(trend.log_ratio.len() >= 100);
        }
    }

    #[test]
    fn doubling_law_classifies_irregular_via_ratios() {
        // h_n(t)/h_n(s) = t/s at every depth: the trend stalls at a
        // positive level while the product converges harmlessly.
        let v = classify_point(&doubling_env(), 1.0, &ClassifyConfig::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Irregular);
        assert!(*v.log_q_products.last().unwrap() > -1.0);
        let stalled: Vec<&RatioTrend> =
            v.ratio_trends.iter().filter(|r| r.stabilized).collect();
        assert!(!stalled.is_empty());
        for trend in stalled {
            let expect = trend.t.ln() - 1.0f64.ln();
            let level = *trend.log_ratio.last().unwrap();
            assert!((level - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_law_classifies_irregular_under_relaxed_flag() {
        let identity = OffspringLaw::finite_pmf_relaxed(&[0.0, 1.0]).unwrap();
        let env = Environment::constant_relaxed(identity);
        let v = classify_point(&env, 1.0, &ClassifyConfig::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Irregular);
        // Q = 1 identically: the product contributes nothing.
        assert!(v.log_q_products.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn shallow_depth_is_inconclusive() {
        let cfg = ClassifyConfig {
            n_max: 1,
            ..ClassifyConfig::default()
        };
        let v = classify_point(&sibuya_env(0.5), 1.0, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn process_verdict_policy() {
        use Verdict::*;
        assert_eq!(combine_verdicts([Regular, Regular]), Regular);
        assert_eq!(combine_verdicts([Regular, Irregular]), Irregular);
        assert_eq!(combine_verdicts([Inconclusive, Irregular]), Irregular);
        assert_eq!(combine_verdicts([Regular, Inconclusive]), Inconclusive);
        let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
        let p = classify_process(&sibuya_env(0.6), &grid, &ClassifyConfig::default()).unwrap();
        assert_eq!(p.verdict, Verdict::Regular);
        assert_eq!(p.points.len(), 5);
        let q = classify_process(&doubling_env(), &grid, &ClassifyConfig::default()).unwrap();
        assert_eq!(q.verdict, Verdict::Irregular);
    }

    #[test]
    fn verdicts_are_stable_in_depth() {
        for n_max in [1500usize, 3000] {
            let cfg = ClassifyConfig {
                n_max,
                ..ClassifyConfig::default()
            };
            let a = classify_point(&sibuya_env(0.5), 1.0, &cfg).unwrap();
            assert_eq!(a.verdict, Verdict::Regular, "n_max {n_max}");
            let b = classify_point(&doubling_env(), 1.0, &cfg).unwrap();
            assert_eq!(b.verdict, Verdict::Irregular, "n_max {n_max}");
        }
    }

    #[test]
    fn regular_points_shift_consistently() {
        let env = Environment::new(
            EnvironmentModel::SibuyaUniform {
                alpha_min: 0.3,
                alpha_max: 0.7,
            },
            5,
            0,
        )
        .unwrap();
        let s = 1.0;
        let cfg = ClassifyConfig::default();
        assert_eq!(classify_point(&env, s, &cfg).unwrap().verdict, Verdict::Regular);
        let k = 3;
        let hk = compose_h(&env, k, TailScalar::from_value(s)).unwrap().value();
        let shifted = classify_point(&env.shift(k), hk, &cfg).unwrap();
        assert_eq!(shifted.verdict, Verdict::Regular);
    }

    #[test]
    fn sufficient_criterion_on_models() {
        let heavy = EnvironmentModel::SibuyaUniform {
            alpha_min: 0.2,
            alpha_max: 0.7,
        };
        let r = check_sufficient_criterion(&heavy, 42, 50).unwrap();
        assert!(r.holds);
        assert!(r.c_estimate.unwrap() <= 0.7);
        assert_eq!(r.bounded_fraction, 1.0);

        let doubling_only = EnvironmentModel::Cycle {
            laws: vec![LawDescriptor::Finite {
                weights: vec![0.0, 0.0, 1.0],
            }],
        };
        let r = check_sufficient_criterion(&doubling_only, 42, 20).unwrap();
        assert!(!r.holds);
        assert_eq!(r.c_estimate, None);

        let half = EnvironmentModel::FiniteMixture {
            components: vec![
                MixtureComponent {
                    prob: 0.5,
                    law: LawDescriptor::Sibuya { alpha: 0.5 },
                },
                MixtureComponent {
                    prob: 0.5,
                    law: LawDescriptor::Finite {
                        weights: vec![0.0, 0.0, 1.0],
                    },
                },
            ],
        };
        let r = check_sufficient_criterion(&half, 7, 200).unwrap();
        assert!(r.holds);
        assert!((r.c_estimate.unwrap() - 0.5).abs() < 1e-12);
        assert!((r.bounded_fraction - 0.5).abs() < 0.15);
    }

    #[test]
    fn regular_point_search_succeeds_on_heavy_and_fails_on_doubling() {
        let cfg = ClassifyConfig::default();
        let search = find_regular_point(&sibuya_env(0.5), 1.0, &cfg).unwrap();
        assert!(search.found.is_some());
        assert!(search.interval.0 < search.interval.1);
        let t = search.found.unwrap();
        assert!(t >= search.interval.0 && t <= search.interval.1);

        let failure = find_regular_point(&doubling_env(), 1.0, &cfg).unwrap();
        assert_eq!(failure.found, None);
        assert_eq!(failure.probes.len(), 5);
        // The interval is [s/2, s] for the doubling law.
        assert!((failure.interval.0 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let env = sibuya_env(0.5);
        assert!(classify_point(&env, 0.0, &ClassifyConfig::default()).is_err());
        assert!(classify_point(&env, -1.0, &ClassifyConfig::default()).is_err());
        let bad = ClassifyConfig {
            ratio_grid: vec![1.5],
            ..ClassifyConfig::default()
        };
        assert!(classify_point(&env, 1.0, &bad).is_err());
        assert!(classify_process(&env, &[], &ClassifyConfig::default()).is_err());
    }
}
