//! Iterated transforms along an environment sequence.
//!
//! With k and h the per-law exponential-coordinate maps, the n-fold
//! compositions are
//!
//! * k_n = k_{xi_0} o k_{xi_1} o ... o k_{xi_{n-1}}   (last law innermost)
//! * h_n = h_{xi_{n-1}} o ... o h_{xi_1} o h_{xi_0}   (first law innermost)
//!
//! so that k_n and h_n are functional inverses and satisfy the shift
//! identity h_n(xi, t) = h_{n-k}(theta^k xi, h_k(xi, t)). The h iterates
//! collapse double-exponentially; everything stays in [`TailScalar`] log
//! space.

use crate::environment::Environment;
use crate::logdomain::TailScalar;
use crate::pgf::LawError;

/// k_n(s): the population-side composition.
pub fn compose_k(env: &Environment, n: usize, s: TailScalar) -> TailScalar {
    let mut acc = s;
    for i in (0..n).rev() {
        acc = env.law(i).k(acc);
    }
    acc
}

/// h_n(s): the inverse composition.
pub fn compose_h(env: &Environment, n: usize, s: TailScalar) -> Result<TailScalar, LawError> {
    let mut acc = s;
    for i in 0..n {
        acc = env.law(i).h(acc)?;
    }
    Ok(acc)
}

/// All iterates h_0(s) = s, h_1(s), ..., h_n(s) in one pass.
pub fn h_iterates(
    env: &Environment,
    n: usize,
    s: TailScalar,
) -> Result<Vec<TailScalar>, LawError> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = s;
    out.push(acc);
    for i in 0..n {
        acc = env.law(i).h(acc)?;
        out.push(acc);
    }
    Ok(out)
}

/// Successive ratios h_{n+1}(xi, s) / h_n(theta xi, s) for n = 1..=n_max.
///
/// Their limit is the defect of the environment at s: zero exactly when
/// mass cannot park at the current level forever. Both orbits run along
/// the shifted environment from the split points h_{xi_0}(s) and s, so
/// each ratio costs two h applications. Once both orbits collapse below
/// log-f64 resolution the ratio is reported as 0.
pub fn defect_ratios(
    env: &Environment,
    s: TailScalar,
    n_max: usize,
) -> Result<Vec<f64>, LawError> {
    let shifted = env.shift(1);
    let mut upper = env.law(0).h(s)?;
    let mut lower = s;
    let mut out = Vec::with_capacity(n_max);
    for i in 0..n_max {
        let law = shifted.law(i);
        upper = law.h(upper)?;
        lower = law.h(lower)?;
        if upper.is_zero() {
            out.push(0.0);
        } else {
            out.push((upper / lower).value());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::EnvironmentModel;
    use crate::logdomain::ln_one_minus_exp_neg;
    use crate::pgf::OffspringLaw;

    fn iid_env(seed: u64) -> Environment {
        Environment::new(
            EnvironmentModel::SibuyaUniform {
                alpha_min: 0.35,
                alpha_max: 0.85,
            },
            seed,
            0,
        )
        .unwrap()
    }

    #[test]
    fn constant_heavy_env_matches_closed_form() {
        // For a constant heavy-tailed law, 1 - e^{-h_n(s)} =
        // (1 - e^{-s})^{alpha^{-n}} and 1 - e^{-k_n(s)} = u^{alpha^n}.
        let alpha = 0.5f64;
        let law = OffspringLaw::sibuya(alpha).unwrap();
        let env = Environment::constant(&law, 0, 0);
        let s = TailScalar::from_value(2f64.ln()); // u = 1/2
        let ln_u = ln_one_minus_exp_neg(s.ln());
        for n in 0..=30 {
            let h_n = compose_h(&env, n, s).unwrap();
            let expect = alpha.powi(-(n as i32)) * ln_u;
            let got = ln_one_minus_exp_neg(h_n.ln());
            assert!(
                (got - expect).abs() <= 1e-12 * expect.abs(),
                "n={n}: {got} vs {expect}"
            );
            let k_n = compose_k(&env, n, s);
            let expect_k = alpha.powi(n as i32) * ln_u;
            let got_k = ln_one_minus_exp_neg(k_n.ln());
            assert!(
                (got_k - expect_k).abs() <= 1e-12 * expect_k.abs(),
                "n={n}: {got_k} vs {expect_k}"
            );
        }
        // Frozen spot value: n = 2 gives h_2 = -ln(1 - 1/16) = -ln(0.9375).
        let h2 = compose_h(&env, 2, s).unwrap().value();
        let frozen = 0.064_538_521_137_571_18_f64;
        assert!((h2 - frozen).abs() <= 1e-12 * frozen, "h2 = {h2:.17}");
    }

    #[test]
    fn compose_round_trip() {
        let env = iid_env(11);
        let s = TailScalar::from_value(0.8);
        for n in [1usize, 3, 10, 25] {
            let down = compose_h(&env, n, s).unwrap();
            let back = compose_k(&env, n, down);
            assert!(
                (back.ln() - s.ln()).abs() <= 1e-9,
                "n={n}: {} vs {}",
                back.ln(),
                s.ln()
            );
        }
    }

    #[test]
    fn shift_identity_holds_along_random_environments() {
        // h_n(xi, t) = h_{n-k}(theta^k xi, h_k(xi, t)) to 1e-9 relative.
        for seed in [3u64, 8, 21] {
            let env = iid_env(seed);
            let t = TailScalar::from_value(1.3);
            let n = 30;
            let full = compose_h(&env, n, t).unwrap();
            for k in [1usize, 5, 15, 29] {
                let inner = compose_h(&env, k, t).unwrap();
                let outer = compose_h(&env.shift(k), n - k, inner).unwrap();
                assert!(
                    (outer.ln() - full.ln()).abs() <= 1e-9,
                    "seed={seed} k={k}: {} vs {}",
                    outer.ln(),
                    full.ln()
                );
            }
        }
    }

    #[test]
    fn h_iterates_agree_with_stepwise_composition() {
        let env = iid_env(4);
        let s = TailScalar::from_value(0.5);
        let iterates = h_iterates(&env, 12, s).unwrap();
        assert_eq!(iterates.len(), 13);
        for (n, &it) in iterates.iter().enumerate() {
            let direct = compose_h(&env, n, s).unwrap();
            assert_eq!(it.ln(), direct.ln(), "n={n}");
        }
        // Strictly decreasing: each h contracts below the identity.
        for w in iterates.windows(2) {
            assert!(w[1].ln() < w[0].ln());
        }
    }

    #[test]
    fn defect_of_doubling_law_is_one_half() {
        // f(s) = s^2 has h(s) = s/2: the two orbits stay in ratio
        // h(s)/s = 1/2 forever, a textbook positive defect.
        let law = OffspringLaw::finite_pmf(&[0.0, 0.0, 1.0]).unwrap();
        let env = Environment::constant(&law, 0, 0);
        let ratios = defect_ratios(&env, TailScalar::from_value(1.0), 40).unwrap();
        assert_eq!(ratios.len(), 40);
        for (n, &r) in ratios.iter().enumerate() {
            assert!((r - 0.5).abs() <= 1e-9, "n={n}: {r}");
        }
    }

    #[test]
    fn defect_of_heavy_law_collapses_to_zero() {
        // Constant heavy-tailed law: ratio_n = u^{alpha^{-n}(1/alpha - 1)}
        // plunges double-exponentially.
        let law = OffspringLaw::sibuya(0.5).unwrap();
        let env = Environment::constant(&law, 0, 0);
        let ratios = defect_ratios(&env, TailScalar::from_value(2f64.ln()), 30).unwrap();
        assert!(ratios[4] < 1e-9, "ratio_5 = {}", ratios[4]);
        assert_eq!(*ratios.last().unwrap(), 0.0);
        // And on a genuinely random heavy environment as well.
        let ratios = defect_ratios(&iid_env(6), TailScalar::from_value(1.0), 30).unwrap();
        assert!(*ratios.last().unwrap() < 1e-12);
    }
}
