//! Scalar abstraction shared by all numerical code.
//!
//! [`Real`] is satisfied by `f32`, `f64` and [`Wide`]. `Wide` keeps an `f64`
//! mantissa but widens the binary exponent to 64 bits, which is what the
//! composed sampling constants need: their logarithms alone overflow `f64`.

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

/// Floating point scalar usable by every generic routine in the crate.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Euler's number.
    #[inline]
    fn e() -> Self {
        Self::lit(std::f64::consts::E)
    }

    #[inline]
    fn pi() -> Self {
        Self::lit(std::f64::consts::PI)
    }

    /// Lossy conversion; saturates to ±inf or 0 outside the `f64` range.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + fmt::Debug
        + fmt::Display
        + Default
        + Send
        + Sync
        + 'static
{
}

const EXP_MAX: i64 = i64::MAX / 4;
const EXP_MIN: i64 = -EXP_MAX;
const LN2_HI: f64 = 6.931_471_803_691_238e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;

/// Splits a finite nonzero `f64` into a mantissa in `[0.5, 1)` and an exponent.
fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal: rescale into the normal range first
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let m_bits = (bits & !(0x7ffu64 << 52)) | (1022u64 << 52);
    (f64::from_bits(m_bits), raw - 1022)
}

fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    if e > 2100 {
        return m.signum() * f64::INFINITY;
    }
    if e < -2200 {
        return m.signum() * 0.0;
    }
    let e = e as i32;
    let half = e / 2;
    m * 2f64.powi(half) * 2f64.powi(e - half)
}

/// `f64` mantissa with a 64-bit binary exponent.
///
/// Value is `m * 2^e` with `|m|` in `[0.5, 1)`; zero, infinities and NaN keep
/// `e = 0` and store the special value in `m`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Wide {
    m: f64,
    e: i64,
}

impl Wide {
    pub const ZERO: Wide = Wide { m: 0.0, e: 0 };
    pub const ONE: Wide = Wide { m: 0.5, e: 1 };

    fn norm(m: f64, e: i64) -> Wide {
        if m == 0.0 || !m.is_finite() {
            return Wide { m, e: 0 };
        }
        let (fm, fe) = frexp(m);
        let e = e.saturating_add(fe);
        if e > EXP_MAX {
            Wide { m: fm.signum() * f64::INFINITY, e: 0 }
        } else if e < EXP_MIN {
            Wide { m: fm.signum() * 0.0, e: 0 }
        } else {
            Wide { m: fm, e }
        }
    }

    pub fn from_f64(x: f64) -> Wide {
        Wide::norm(x, 0)
    }

    pub fn value_f64(self) -> f64 {
        ldexp(self.m, self.e)
    }

    /// Mantissa in `[0.5, 1)` (or the special value).
    pub fn mantissa(self) -> f64 {
        self.m
    }

    /// Binary exponent.
    pub fn exponent(self) -> i64 {
        self.e
    }

    /// Builds `2^k` for any integer `k` in range.
    pub fn pow2(k: i64) -> Wide {
        Wide::norm(1.0, k)
    }

    fn special(self) -> bool {
        self.m == 0.0 || !self.m.is_finite()
    }

    fn cmp_mag(self, other: Wide) -> Ordering {
        let (a, b) = (self.m.abs(), other.m.abs());
        match (a == 0.0, b == 0.0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match (a.is_infinite(), b.is_infinite()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Greater,
            (false, true) => return Ordering::Less,
            _ => {}
        }
        self.e.cmp(&other.e).then(a.partial_cmp(&b).unwrap_or(Ordering::Equal))
    }

    /// Natural logarithm returned as a plain `f64`; always representable.
    pub fn ln_f64(self) -> f64 {
        if self.m < 0.0 || self.m.is_nan() {
            return f64::NAN;
        }
        if self.m == 0.0 {
            return f64::NEG_INFINITY;
        }
        if self.m.is_infinite() {
            return f64::INFINITY;
        }
        self.m.ln() + self.e as f64 * std::f64::consts::LN_2
    }

    /// Decimal logarithm of `|self|` as `f64`.
    pub fn log10_abs_f64(self) -> f64 {
        self.abs().ln_f64() / std::f64::consts::LN_10
    }

    fn exp_wide(x: Wide) -> Wide {
        if x.m.is_nan() {
            return x;
        }
        let xf = x.value_f64();
        if xf.abs() < 700.0 {
            return Wide::from_f64(xf.exp());
        }
        if !xf.is_finite() || xf.abs() / std::f64::consts::LN_2 > EXP_MAX as f64 {
            return if x.m > 0.0 { Wide::from_f64(f64::INFINITY) } else { Wide::ZERO };
        }
        let k = (xf / std::f64::consts::LN_2).floor();
        let r = (-k).mul_add(LN2_HI, xf) - k * LN2_LO;
        Wide::norm(r.exp(), k as i64)
    }

    fn powi_wide(self, n: i64) -> Wide {
        if n == 0 {
            return Wide::ONE;
        }
        let mut base = if n < 0 { Wide::ONE / self } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = Wide::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    fn via_f64(self, f: impl Fn(f64) -> f64) -> Wide {
        Wide::from_f64(f(self.value_f64()))
    }
}

impl fmt::Debug for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Wide({} * 2^{})", self.m, self.e)
    }
}

impl fmt::Display for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value_f64();
        if self.special() || (v != 0.0 && v.is_finite()) {
            return fmt::Display::fmt(&v, f);
        }
        let l = self.log10_abs_f64();
        let mut k = l.floor();
        let mut mant = 10f64.powf(l - k);
        if format!("{mant:.12}").starts_with("10") {
            mant /= 10.0;
            k += 1.0;
        }
        write!(f, "{:.12}e{k}", mant * self.m.signum())
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Wide) -> Option<Ordering> {
        if self.m.is_nan() || other.m.is_nan() {
            return None;
        }
        let sa = if self.m == 0.0 { 0 } else if self.m > 0.0 { 1 } else { -1 };
        let sb = if other.m == 0.0 { 0 } else if other.m > 0.0 { 1 } else { -1 };
        if sa != sb {
            return Some(sa.cmp(&sb));
        }
        let mag = self.cmp_mag(*other);
        Some(if sa < 0 { mag.reverse() } else { mag })
    }
}

impl Neg for Wide {
    type Output = Wide;
    fn neg(self) -> Wide {
        Wide { m: -self.m, e: self.e }
    }
}

impl Add for Wide {
    type Output = Wide;
    fn add(self, rhs: Wide) -> Wide {
        if self.m == 0.0 {
            return if rhs.m == 0.0 { Wide::from_f64(self.m + rhs.m) } else { rhs };
        }
        if rhs.m == 0.0 {
            return self;
        }
        if !self.m.is_finite() || !rhs.m.is_finite() {
            return Wide::from_f64(self.m + rhs.m);
        }
        let (big, small) = if self.e >= rhs.e { (self, rhs) } else { (rhs, self) };
        let diff = big.e - small.e;
        if diff > 64 {
            return big;
        }
        Wide::norm(big.m + small.m * 2f64.powi(-(diff as i32)), big.e)
    }
}

impl Sub for Wide {
    type Output = Wide;
    fn sub(self, rhs: Wide) -> Wide {
        self + (-rhs)
    }
}

impl Mul for Wide {
    type Output = Wide;
    fn mul(self, rhs: Wide) -> Wide {
        if self.special() || rhs.special() {
            return Wide::from_f64(self.m * rhs.m);
        }
        Wide::norm(self.m * rhs.m, self.e.saturating_add(rhs.e))
    }
}

impl Div for Wide {
    type Output = Wide;
    fn div(self, rhs: Wide) -> Wide {
        if self.special() || rhs.special() {
            return Wide::from_f64(self.m / rhs.m);
        }
        Wide::norm(self.m / rhs.m, self.e.saturating_sub(rhs.e))
    }
}

impl Rem for Wide {
    type Output = Wide;
    fn rem(self, rhs: Wide) -> Wide {
        self - rhs * (self / rhs).trunc()
    }
}

macro_rules! assign_op {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Wide {
            fn $f(&mut self, rhs: Wide) {
                *self = *self $op rhs;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);
assign_op!(RemAssign, rem_assign, %);

impl Zero for Wide {
    fn zero() -> Wide {
        Wide::ZERO
    }
    fn is_zero(&self) -> bool {
        self.m == 0.0
    }
}

impl One for Wide {
    fn one() -> Wide {
        Wide::ONE
    }
}

impl Num for Wide {
    type FromStrRadixErr = num_traits::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Wide, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Wide::from_f64)
    }
}

impl ToPrimitive for Wide {
    fn to_i64(&self) -> Option<i64> {
        let v = self.value_f64();
        (v.is_finite() && v.abs() < 9.2e18).then_some(v as i64)
    }
    fn to_u64(&self) -> Option<u64> {
        let v = self.value_f64();
        (v.is_finite() && (0.0..1.8e19).contains(&v)).then_some(v as u64)
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.value_f64())
    }
}

impl FromPrimitive for Wide {
    fn from_i64(n: i64) -> Option<Wide> {
        Some(Wide::from_f64(n as f64))
    }
    fn from_u64(n: u64) -> Option<Wide> {
        Some(Wide::from_f64(n as f64))
    }
    fn from_f64(n: f64) -> Option<Wide> {
        Some(Wide::from_f64(n))
    }
}

impl NumCast for Wide {
    fn from<T: ToPrimitive>(n: T) -> Option<Wide> {
        n.to_f64().map(Wide::from_f64)
    }
}

impl From<f64> for Wide {
    fn from(x: f64) -> Wide {
        Wide::from_f64(x)
    }
}

impl Float for Wide {
    fn nan() -> Wide {
        Wide::from_f64(f64::NAN)
    }
    fn infinity() -> Wide {
        Wide::from_f64(f64::INFINITY)
    }
    fn neg_infinity() -> Wide {
        Wide::from_f64(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Wide {
        Wide::from_f64(-0.0)
    }
    fn min_value() -> Wide {
        -Wide::max_value()
    }
    fn min_positive_value() -> Wide {
        Wide { m: 0.5, e: EXP_MIN }
    }
    fn epsilon() -> Wide {
        Wide::from_f64(f64::EPSILON)
    }
    fn max_value() -> Wide {
        Wide { m: 1.0 - f64::EPSILON / 2.0, e: EXP_MAX }
    }
    fn is_nan(self) -> bool {
        self.m.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.m.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.m.is_finite()
    }
    fn is_normal(self) -> bool {
        self.m.is_finite() && self.m != 0.0
    }
    fn classify(self) -> FpCategory {
        if self.m.is_nan() {
            FpCategory::Nan
        } else if self.m.is_infinite() {
            FpCategory::Infinite
        } else if self.m == 0.0 {
            FpCategory::Zero
        } else {
            FpCategory::Normal
        }
    }
    fn floor(self) -> Wide {
        if self.special() || self.e >= 53 {
            self
        } else {
            self.via_f64(f64::floor)
        }
    }
    fn ceil(self) -> Wide {
        if self.special() || self.e >= 53 {
            self
        } else {
            self.via_f64(f64::ceil)
        }
    }
    fn round(self) -> Wide {
        if self.special() || self.e >= 53 {
            self
        } else {
            self.via_f64(f64::round)
        }
    }
    fn trunc(self) -> Wide {
        if self.special() || self.e >= 53 {
            self
        } else {
            self.via_f64(f64::trunc)
        }
    }
    fn fract(self) -> Wide {
        self - self.trunc()
    }
    fn abs(self) -> Wide {
        Wide { m: self.m.abs(), e: self.e }
    }
    fn signum(self) -> Wide {
        Wide::from_f64(self.m.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.m.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.m.is_sign_negative()
    }
    fn mul_add(self, a: Wide, b: Wide) -> Wide {
        self * a + b
    }
    fn recip(self) -> Wide {
        Wide::ONE / self
    }
    fn powi(self, n: i32) -> Wide {
        self.powi_wide(n as i64)
    }
    fn powf(self, y: Wide) -> Wide {
        if y.m == 0.0 || self == Wide::ONE {
            return Wide::ONE;
        }
        if self.m.is_nan() || y.m.is_nan() {
            return Wide::nan();
        }
        if self.m == 0.0 {
            return if y.m > 0.0 { Wide::ZERO } else { Wide::infinity() };
        }
        if self.m < 0.0 {
            if y.fract().m != 0.0 {
                return Wide::nan();
            }
            let odd = y.e <= 53 && (y.value_f64() as i64) % 2 != 0;
            let r = (-self).powf(y);
            return if odd { -r } else { r };
        }
        if y.e <= 31 && y.fract().m == 0.0 {
            return self.powi_wide(y.value_f64() as i64);
        }
        Wide::exp_wide(y * self.ln())
    }
    fn sqrt(self) -> Wide {
        if self.m < 0.0 {
            return Wide::nan();
        }
        if self.special() {
            return Wide::from_f64(self.m.sqrt());
        }
        if self.e.rem_euclid(2) == 0 {
            Wide::norm(self.m.sqrt(), self.e / 2)
        } else {
            Wide::norm((2.0 * self.m).sqrt(), (self.e - 1) / 2)
        }
    }
    fn cbrt(self) -> Wide {
        if self.special() {
            return Wide::from_f64(self.m.cbrt());
        }
        let r = self.e.rem_euclid(3);
        Wide::norm((self.m * 2f64.powi(r as i32)).cbrt(), (self.e - r) / 3)
    }
    fn exp(self) -> Wide {
        Wide::exp_wide(self)
    }
    fn exp2(self) -> Wide {
        Wide::exp_wide(self * Wide::from_f64(std::f64::consts::LN_2))
    }
    fn ln(self) -> Wide {
        Wide::from_f64(self.ln_f64())
    }
    fn log(self, base: Wide) -> Wide {
        self.ln() / base.ln()
    }
    fn log2(self) -> Wide {
        if self.special() || self.m < 0.0 {
            return Wide::from_f64(self.m.log2());
        }
        Wide::from_f64(self.m.log2() + self.e as f64)
    }
    fn log10(self) -> Wide {
        Wide::from_f64(self.ln_f64() / std::f64::consts::LN_10)
    }
    fn max(self, other: Wide) -> Wide {
        if self.m.is_nan() || other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Wide) -> Wide {
        if self.m.is_nan() || other < self {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Wide) -> Wide {
        if self > other {
            self - other
        } else {
            Wide::ZERO
        }
    }
    fn hypot(self, other: Wide) -> Wide {
        (self * self + other * other).sqrt()
    }
    fn sin(self) -> Wide {
        self.via_f64(f64::sin)
    }
    fn cos(self) -> Wide {
        self.via_f64(f64::cos)
    }
    fn tan(self) -> Wide {
        self.via_f64(f64::tan)
    }
    fn asin(self) -> Wide {
        self.via_f64(f64::asin)
    }
    fn acos(self) -> Wide {
        self.via_f64(f64::acos)
    }
    fn atan(self) -> Wide {
        self.via_f64(f64::atan)
    }
    fn atan2(self, other: Wide) -> Wide {
        Wide::from_f64(self.value_f64().atan2(other.value_f64()))
    }
    fn sin_cos(self) -> (Wide, Wide) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Wide {
        if self.value_f64().abs() < 1.0 {
            self.via_f64(f64::exp_m1)
        } else {
            self.exp() - Wide::ONE
        }
    }
    fn ln_1p(self) -> Wide {
        if self.value_f64().abs() < 1.0 {
            self.via_f64(f64::ln_1p)
        } else {
            (self + Wide::ONE).ln()
        }
    }
    fn sinh(self) -> Wide {
        (self.exp() - (-self).exp()) / Wide::from_f64(2.0)
    }
    fn cosh(self) -> Wide {
        (self.exp() + (-self).exp()) / Wide::from_f64(2.0)
    }
    fn tanh(self) -> Wide {
        self.via_f64(f64::tanh)
    }
    fn asinh(self) -> Wide {
        self.via_f64(f64::asinh)
    }
    fn acosh(self) -> Wide {
        self.via_f64(f64::acosh)
    }
    fn atanh(self) -> Wide {
        self.via_f64(f64::atanh)
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        // exponent is clamped to i16; lossy for very large magnitudes
        let (mant, exp, sign) = self.m.integer_decode();
        let e = (exp as i64 + self.e).clamp(i16::MIN as i64, i16::MAX as i64) as i16;
        (mant, e, sign)
    }
    fn to_degrees(self) -> Wide {
        self * Wide::from_f64(180.0 / std::f64::consts::PI)
    }
    fn to_radians(self) -> Wide {
        self * Wide::from_f64(std::f64::consts::PI / 180.0)
    }
}

/// Natural logarithm of any [`Real`], used for log-domain bookkeeping.
pub fn ln_of<S: Real>(x: S) -> S {
    x.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(x: f64) -> Wide {
        Wide::from_f64(x)
    }

    #[test]
    fn round_trip() {
        for x in [1.0, -3.5, 1e-300, 4.9e-320, 1.7e308, 0.1] {
            assert_eq!(w(x).value_f64(), x);
        }
    }

    #[test]
    fn arithmetic_matches_f64() {
        let xs = [0.3, -2.5, 7.0, 1e-5, 123456.789];
        for &a in &xs {
            for &b in &xs {
                assert!(((w(a) + w(b)).value_f64() - (a + b)).abs() <= 1e-15 * (a.abs() + b.abs()));
                assert!(((w(a) * w(b)).value_f64() - a * b).abs() <= 1e-15 * (a * b).abs());
                assert!(((w(a) / w(b)).value_f64() - a / b).abs() <= 1e-15 * (a / b).abs());
                assert_eq!(w(a) < w(b), a < b);
            }
        }
    }

    #[test]
    fn beyond_f64_range() {
        let big = w(1e300) * w(1e300) * w(1e300);
        assert!(big.value_f64().is_infinite());
        assert!((big.log10_abs_f64() - 900.0).abs() < 1e-10);
        let back = big / w(1e300) / w(1e300);
        assert!((back.value_f64() / 1e300 - 1.0).abs() < 1e-14);
        let e = w(5000.0).exp();
        assert!((e.ln_f64() - 5000.0).abs() < 1e-9);
        assert!(w(-1e6).exp() > Wide::ZERO);
    }

    #[test]
    fn pow_sqrt_cbrt() {
        let x = w(2.0).powi(5000);
        assert_eq!(x.exponent(), 5001);
        assert!((x.sqrt().log2().value_f64() - 2500.0).abs() < 1e-9);
        assert!((x.cbrt().log2().value_f64() - 5000.0 / 3.0).abs() < 1e-9);
        assert!((w(3.0).powf(w(0.5)).value_f64() - 3f64.sqrt()).abs() < 1e-15);
        assert!((w(0.344).powf(w(-5e4)).log10_abs_f64() - 5e4 * -(0.344f64.log10())).abs() < 1e-6);
    }

    #[test]
    fn rounding_and_display() {
        assert_eq!(w(2.7).floor().value_f64(), 2.0);
        assert_eq!(w(-2.2).ceil().value_f64(), -2.0);
        let big = w(10.0).powi(400);
        let text = format!("{big}");
        let (mant, exp) = text.split_once('e').unwrap();
        let mant: f64 = mant.parse().unwrap();
        let exp: f64 = exp.parse().unwrap();
        assert!((mant.log10() + exp - 400.0).abs() < 1e-11, "{text}");
        assert!((1.0..10.0).contains(&mant));
    }
}
