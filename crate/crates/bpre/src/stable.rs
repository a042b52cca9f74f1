//! One-sided stable variables with Laplace transform e^{-lambda^alpha}.
//!
//! Sampled by Kanter's exact representation
//!
//!   S = B(pi U)^(1/alpha) * E^(-(1-alpha)/alpha),
//!   B(x) = sin(alpha x)^alpha * sin((1-alpha) x)^(1-alpha) / sin(x),
//!
//! with U uniform on (0,1) and E unit exponential. (At alpha = 1/2 this
//! collapses to 1/(4 cos^2(pi U/2) E), the classical reciprocal-chi-square
//! form.) Every draw consumes exactly two uniforms, keeping streams
//! aligned for counter-based reproducibility. These are the
//! level-to-level multipliers of a population whose offspring tail has
//! exponent alpha: conditioned on the current size N being large, the
//! next size over N^(1/alpha) converges in law to S.

use rand::Rng;

/// Kanter's angular factor B(x) on (0, pi).
pub fn kanter_b(alpha: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0 && x < std::f64::consts::PI);
    (alpha * x).sin().powf(alpha) * ((1.0 - alpha) * x).sin().powf(1.0 - alpha) / x.sin()
}

/// One exact draw of the stable multiplier for tail exponent alpha in (0,1).
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    sample_ln_stable(alpha, rng).exp()
}

/// ln S directly, for log-domain population stepping: avoids overflow when
/// the tail produces astronomically large multipliers.
pub fn sample_ln_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    // U in (0,1): nudge 0 to the smallest positive uniform step.
    let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    // E = -ln(U') with U' in (0,1].
    let e = -(1.0 - rng.gen::<f64>()).ln();
    let b = kanter_b(alpha, std::f64::consts::PI * u);
    (b.ln() - (1.0 - alpha) * e.ln()) / alpha
}
