//! Log-domain scalar types for quantities that collapse or explode
//! double-exponentially fast.
//!
//! Iterating the generating-function transforms drives values like h_n or
//! 1 - f_n^(-1) to magnitudes far outside what an f64 can hold (think
//! exp(-2^40)).  Everything here stores the natural log of the value and
//! provides the handful of conversions that can be done without leaving the
//! representable range.

use std::fmt;

/// A nonnegative real stored as its natural logarithm.
///
/// `ln_value = -inf` encodes exact zero and `ln_value = +inf` encodes
/// infinity.  Multiplication, division and powers are exact log-space
/// arithmetic; conversion to a plain f64 is exact (up to rounding) whenever
/// `ln_value` is within roughly [-700, 700] and saturates to 0 or +inf
/// outside of that.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct TailScalar {
    ln_value: f64,
}

impl TailScalar {
    pub const ZERO: TailScalar = TailScalar {
        ln_value: f64::NEG_INFINITY,
    };
    pub const ONE: TailScalar = TailScalar { ln_value: 0.0 };
    pub const INFINITY: TailScalar = TailScalar {
        ln_value: f64::INFINITY,
    };

    /// Wraps a plain nonnegative value. Negative or NaN input panics: callers
    /// own their sign conventions and a silent NaN here would poison every
    /// downstream log.
    pub fn from_value(v: f64) -> Self {
        assert!(v >= 0.0, "TailScalar requires a nonnegative value, got {v}");
        TailScalar { ln_value: v.ln() }
    }

    /// Wraps a value given directly as its natural log. NaN panics.
    pub fn from_ln(ln_value: f64) -> Self {
        assert!(!ln_value.is_nan(), "TailScalar log must not be NaN");
        TailScalar { ln_value }
    }

    pub fn ln(self) -> f64 {
        self.ln_value
    }

    /// Converts back to a plain value; underflows to 0 and overflows to +inf.
    pub fn value(self) -> f64 {
        self.ln_value.exp()
    }

    pub fn is_zero(self) -> bool {
        self.ln_value == f64::NEG_INFINITY
    }

    pub fn is_infinite(self) -> bool {
        self.ln_value == f64::INFINITY
    }

    pub fn is_finite(self) -> bool {
        self.ln_value < f64::INFINITY
    }

    /// self^p in exact log arithmetic.
    pub fn powf(self, p: f64) -> Self {
        TailScalar::from_ln(self.ln_value * p)
    }

    pub fn recip(self) -> Self {
        TailScalar::from_ln(-self.ln_value)
    }
}

impl std::ops::Mul for TailScalar {
    type Output = TailScalar;
    fn mul(self, rhs: TailScalar) -> TailScalar {
        TailScalar::from_ln(self.ln_value + rhs.ln_value)
    }
}

impl std::ops::Div for TailScalar {
    type Output = TailScalar;
    fn div(self, rhs: TailScalar) -> TailScalar {
        TailScalar::from_ln(self.ln_value - rhs.ln_value)
    }
}

impl fmt::Debug for TailScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TailScalar(ln={})", self.ln_value)
    }
}

impl fmt::Display for TailScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ln_value.abs() < 700.0 {
            write!(f, "{}", self.ln_value.exp())
        } else {
            write!(f, "exp({})", self.ln_value)
        }
    }
}

/// A coordinate u = 1 - x for x in [0, 1], stored in log space.
///
/// Working with the distance to the fixed point 1 instead of with x itself is
/// what keeps the pgf iterations from losing every significant digit once x
/// gets within 1e-16 of 1.  The invariant is `ln_u <= 0`, i.e. u in [0, 1].
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct ComplementCoord {
    ln_u: f64,
}

impl ComplementCoord {
    /// u = 0, i.e. x = 1.
    pub const AT_ONE: ComplementCoord = ComplementCoord {
        ln_u: f64::NEG_INFINITY,
    };
    /// u = 1, i.e. x = 0.
    pub const AT_ZERO: ComplementCoord = ComplementCoord { ln_u: 0.0 };

    /// Wraps u = 1 - x computed by the caller; u must lie in [0, 1].
    pub fn from_value(u: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&u),
            "complement coordinate must lie in [0,1], got {u}"
        );
        ComplementCoord { ln_u: u.ln() }
    }

    /// Builds the coordinate for x directly, evaluating 1 - x stably.
    pub fn from_base_point(x: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&x),
            "base point must lie in [0,1], got {x}"
        );
        // ln(1-x) straight from x; accurate for x near both ends.
        ComplementCoord { ln_u: (-x).ln_1p() }
    }

    pub fn from_ln(ln_u: f64) -> Self {
        assert!(
            ln_u <= 0.0,
            "complement coordinate log must be <= 0, got {ln_u}"
        );
        ComplementCoord { ln_u }
    }

    pub fn ln(self) -> f64 {
        self.ln_u
    }

    /// u as a plain value (may underflow to 0).
    pub fn value(self) -> f64 {
        self.ln_u.exp()
    }

    /// x = 1 - u, evaluated stably; only meaningful when u is representable.
    pub fn base_point(self) -> f64 {
        -self.ln_u.exp_m1()
    }

    pub fn is_at_one(self) -> bool {
        self.ln_u == f64::NEG_INFINITY
    }
}

impl fmt::Debug for ComplementCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplementCoord(ln_u={})", self.ln_u)
    }
}

/// ln(1 - e^{-s}) computed from ln(s).
///
/// This is the map s -> u sending the exponential coordinate to the
/// complement coordinate.  Accurate over the whole usable range:
/// for s below 1e-16 the first-order expansion u = s(1 - s/2) is exact to
/// f64, for s above 36 the complement 1 - e^{-s} is within one ulp of 1 and
/// the log is -e^{-s} to full precision, and in between the direct expm1
/// evaluation is exact.  Requires s <= ~700 as a value (ln_s <= 6.55);
/// beyond that e^{-s} underflows and the result would round to -0.
pub fn ln_one_minus_exp_neg(ln_s: f64) -> f64 {
    if ln_s == f64::NEG_INFINITY {
        return f64::NEG_INFINITY; // s = 0 -> u = 0
    }
    if ln_s < -37.0 {
        // u = s - s^2/2 + ...; the log picks up -s/2 relative correction.
        let s = ln_s.exp();
        return ln_s + (-s / 2.0).ln_1p();
    }
    let s = ln_s.exp();
    if s > std::f64::consts::LN_2 {
        // u > 1/2: ln_1p(-e^{-s}) keeps full relative precision all the
        // way to u -> 1, where a plain ln of 1 - e^{-s} would be limited
        // to absolute 1e-16.
        return (-(-s).exp()).ln_1p();
    }
    // u <= 1/2: |ln u| >= ln 2, so a plain ln of the exact complement
    // carries full relative precision.
    (-(-s).exp_m1()).ln()
}

/// ln(-ln(1 - v)) computed from ln(v): the exact inverse of
/// [`ln_one_minus_exp_neg`], mapping the complement coordinate back to the
/// exponential coordinate.
///
/// For v below 1e-16 the expansion -ln(1-v) = v(1 + v/2 + ...) keeps full
/// relative precision; for v within 1e-4 of 1 the complement 1 - v is
/// recovered by expm1 before taking logs.
pub fn ln_neg_ln_one_minus(ln_v: f64) -> f64 {
    if ln_v == f64::NEG_INFINITY {
        return f64::NEG_INFINITY; // v = 0 -> s = 0
    }
    assert!(ln_v <= 0.0, "complement log must be <= 0, got {ln_v}");
    if ln_v < -37.0 {
        // s = v + v^2/2 + ...: relative correction v/2 on the log.
        let v = ln_v.exp();
        return ln_v + (v / 2.0).ln_1p();
    }
    if ln_v > -1e-4 {
        // v near 1: 1 - v = -expm1(ln v) is exact, s = -ln(1-v) is large.
        let one_minus_v = -ln_v.exp_m1();
        return (-one_minus_v.ln()).ln();
    }
    let v = ln_v.exp();
    (-(-v).ln_1p()).ln()
}

/// ln(a + b) given ln(a) and ln(b).
pub fn ln_add_exp(ln_a: f64, ln_b: f64) -> f64 {
    if ln_a == f64::NEG_INFINITY {
        return ln_b;
    }
    if ln_b == f64::NEG_INFINITY {
        return ln_a;
    }
    let (hi, lo) = if ln_a >= ln_b { (ln_a, ln_b) } else { (ln_b, ln_a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_scalar_round_trips() {
        // exp(ln(v)) is faithful to 1 ulp of the log, i.e. ~|ln v| * eps
        // relative on the value; endpoints are exact.
        for &v in &[1e-300, 0.25, 1.0, 3.5, 1e300] {
            let t = TailScalar::from_value(v);
            let tol = 4.0 * f64::EPSILON * t.ln().abs().max(1.0) * v;
            assert!(
                (t.value() - v).abs() <= tol,
                "round trip failed for {v}: {}",
                t.value()
            );
        }
        assert_eq!(TailScalar::from_value(0.0).value(), 0.0);
        assert!(TailScalar::ZERO.is_zero());
        assert!(TailScalar::INFINITY.is_infinite());
        assert_eq!(TailScalar::ONE.value(), 1.0);
    }

    #[test]
    fn tail_scalar_arithmetic_is_log_exact() {
        let a = TailScalar::from_ln(-1.0e9);
        let b = TailScalar::from_ln(2.5e8);
        assert_eq!((a * b).ln(), -7.5e8);
        assert_eq!((a / b).ln(), -1.25e9);
        assert_eq!(a.powf(2.0).ln(), -2.0e9);
        assert_eq!(a.recip().ln(), 1.0e9);
        // No silent overflow anywhere near the f64 exponent range.
        let huge = TailScalar::from_ln(1e300);
        assert_eq!((huge * huge).ln(), 2e300);
    }

    #[test]
    fn complement_coord_endpoints() {
        assert!(ComplementCoord::AT_ONE.is_at_one());
        assert_eq!(ComplementCoord::AT_ZERO.value(), 1.0);
        let c = ComplementCoord::from_base_point(0.75);
        assert!((c.value() - 0.25).abs() < 1e-16);
        assert!((c.base_point() - 0.75).abs() < 1e-16);
    }

    // Oracle: direct f64 evaluation of ln(1 - e^{-s}) at moderate s, where
    // naive arithmetic is trustworthy.
    #[test]
    fn ln_one_minus_exp_neg_matches_direct_eval() {
        // Naive 1 - exp(-s) is oracle-grade only for s large enough that
        // the subtraction does not cancel; smaller s is covered by the
        // series test below.
        for &s in &[1e-2f64, 0.1, 0.5, 1.0, 2.0, 10.0, 30.0] {
            let s_rt = s.ln().exp(); // the argument the function actually sees
            let direct = (1.0 - (-s_rt).exp()).ln();
            let got = ln_one_minus_exp_neg(s.ln());
            assert!(
                (got - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "s={s}: got {got}, direct {direct}"
            );
        }
    }

    #[test]
    fn ln_one_minus_exp_neg_small_s_series() {
        // Independent oracle from the expansion
        // ln(1 - e^{-s}) = ln s - s/2 + s^2/24 + O(s^4).
        for &s in &[1e-10f64, 1e-8, 1e-6, 1e-4] {
            let s_rt = s.ln().exp();
            let expect = s_rt.ln() - s_rt / 2.0 + s_rt * s_rt / 24.0;
            let got = ln_one_minus_exp_neg(s.ln());
            assert!(
                (got - expect).abs() <= 1e-13 * expect.abs(),
                "s={s}: got {got}, expect {expect}"
            );
        }
    }

    #[test]
    fn ln_one_minus_exp_neg_tiny_s_first_order() {
        // For tiny s, u = s to first order: ln u = ln s - s/2 + O(s^2).
        let ln_s = -200.0f64;
        let got = ln_one_minus_exp_neg(ln_s);
        assert!((got - ln_s).abs() < 1e-80, "got {got}");
        // Representable but small: the -s/2 correction must be present.
        let s = 1e-10f64;
        let got = ln_one_minus_exp_neg(s.ln());
        let expect = s.ln() - s / 2.0;
        assert!((got - expect).abs() < 1e-15 * expect.abs());
    }

    #[test]
    fn ln_one_minus_exp_neg_large_s() {
        // s = 50: 1 - e^{-50} rounds to 1.0, the log must still resolve.
        let s_rt = 50f64.ln().exp();
        let got = ln_one_minus_exp_neg(50f64.ln());
        let expect = -(-s_rt).exp(); // ln(1 - e^{-s}) = -e^{-s} to 1e-21 rel
        assert!(
            (got - expect).abs() < 1e-14 * expect.abs(),
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn ln_neg_ln_one_minus_matches_direct_eval() {
        // Direct arithmetic holds up for moderate v; tiny v cancels in the
        // naive form and is covered by the series test below.
        for &v in &[1e-2f64, 0.1, 0.5, 0.9, 0.999] {
            let v_rt = v.ln().exp();
            let direct = (-(1.0 - v_rt).ln()).ln();
            let got = ln_neg_ln_one_minus(v.ln());
            assert!(
                (got - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "v={v}: got {got}, direct {direct}"
            );
        }
    }

    #[test]
    fn ln_neg_ln_one_minus_small_v_series() {
        // -ln(1-v) = v (1 + v/2 + v^2/3 + ...), so the log is
        // ln v + v/2 + 5 v^2/24 + O(v^3); keep v small enough that the
        // truncation sits below the tolerance.
        for &v in &[1e-10f64, 1e-7, 1e-5] {
            let v_rt = v.ln().exp();
            let expect = v_rt.ln() + v_rt / 2.0 + 5.0 * v_rt * v_rt / 24.0;
            let got = ln_neg_ln_one_minus(v.ln());
            assert!(
                (got - expect).abs() <= 1e-13 * expect.abs(),
                "v={v}: got {got}, expect {expect}"
            );
        }
    }

    #[test]
    fn complement_helpers_are_mutual_inverses() {
        // s -> u -> s and u -> s -> u across 60 orders of magnitude.
        for k in -60..=5 {
            let ln_s = k as f64;
            let ln_u = ln_one_minus_exp_neg(ln_s);
            let back = ln_neg_ln_one_minus(ln_u);
            assert!(
                (back - ln_s).abs() <= 1e-13 * ln_s.abs().max(1.0),
                "ln_s={ln_s}: round trip gave {back}"
            );
        }
    }

    #[test]
    fn ln_add_exp_basic() {
        let got = ln_add_exp(0.0, 0.0); // 1 + 1 = 2
        assert!((got - 2f64.ln()).abs() < 1e-15);
        assert_eq!(ln_add_exp(f64::NEG_INFINITY, -3.0), -3.0);
        // Huge imbalance: the small term vanishes.
        assert_eq!(ln_add_exp(0.0, -1e9), 0.0);
    }
}
