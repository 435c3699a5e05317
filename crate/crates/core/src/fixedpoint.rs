//! Deterministic extended-precision reals.
//!
//! A [`FixedReal`] is a scaled integer `m / 2^P` together with a bound on
//! its accumulated error, counted in units of the last place (`2^-P`).
//! Every operation is integer-only, so results are bit-identical on every
//! host. Cubic roots are isolated by rational bisection and polished by
//! Newton's method in scaled-integer arithmetic.
//!
//! [`TorusAngle`] is a 128-bit fractional representation used by the hot
//! loops of the frequency scans: `{n * alpha}` becomes a wrapping `u128`
//! multiplication.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of fractional bits.
pub const DEFAULT_PRECISION: u32 = 192;

/// Bits of the fractional representation used by [`TorusAngle`].
pub const TORUS_BITS: u32 = 128;

/// A fixed-point real `scaled / 2^precision` with a tracked error bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedReal {
    scaled: BigInt,
    precision: u32,
    err_ulps: u128,
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

fn abs_ceil_int(x: &BigInt, precision: u32) -> u128 {
    // ceil(|x| / 2^precision) + 1, saturating
    let int = x.abs() >> precision as usize;
    int.to_u128().map_or(u128::MAX, |v| v.saturating_add(1))
}

impl FixedReal {
    pub fn zero(precision: u32) -> Self {
        Self::from_scaled(BigInt::zero(), precision, 0)
    }

    pub fn from_int(value: impl Into<BigInt>, precision: u32) -> Self {
        Self::from_scaled(value.into() << precision as usize, precision, 0)
    }

    /// Builds a value from its scaled integer representation.
    pub fn from_scaled(scaled: BigInt, precision: u32, err_ulps: u128) -> Self {
        Self {
            scaled,
            precision,
            err_ulps,
        }
    }

    /// `num / 2^shift`, truncated toward negative infinity if `shift > precision`.
    pub fn from_dyadic(num: impl Into<BigInt>, shift: u32, precision: u32) -> Self {
        let num = num.into();
        if shift <= precision {
            Self::from_scaled(num << (precision - shift) as usize, precision, 0)
        } else {
            let (q, r) = num.div_mod_floor(&pow2(shift - precision));
            let err = u128::from(!r.is_zero());
            Self::from_scaled(q, precision, err)
        }
    }

    /// Exact conversion of a finite `f64` (every finite double is dyadic).
    pub fn from_f64(x: f64, precision: u32) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value {x}")));
        }
        if x == 0.0 {
            return Ok(Self::zero(precision));
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let m = if negative {
            -BigInt::from(mantissa)
        } else {
            BigInt::from(mantissa)
        };
        if exp >= 0 {
            Ok(Self::from_scaled(m << (exp as usize + precision as usize), precision, 0))
        } else {
            Ok(Self::from_dyadic(m, (-exp) as u32, precision))
        }
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn scaled(&self) -> &BigInt {
        &self.scaled
    }

    /// Accumulated error bound in units of `2^-precision`.
    pub fn error_ulps(&self) -> u128 {
        self.err_ulps
    }

    /// Accumulated error bound as a real number.
    pub fn error_bound(&self) -> f64 {
        self.err_ulps as f64 * (-(self.precision as f64)).exp2()
    }

    pub fn signum(&self) -> i8 {
        match self.scaled.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.scaled.is_zero()
    }

    /// Integer part of the magnitude.
    pub fn int_part(&self) -> BigInt {
        self.scaled.abs() >> self.precision as usize
    }

    /// Fractional binary digits of the magnitude, as an integer below `2^precision`.
    pub fn frac_bits(&self) -> BigUint {
        let mask: BigInt = pow2(self.precision) - 1;
        (self.scaled.abs() & mask)
            .to_biguint()
            .expect("masked magnitude is nonnegative")
    }

    pub fn floor(&self) -> BigInt {
        self.scaled.div_floor(&pow2(self.precision))
    }

    /// `self mod 1`, in `[0, 1)`.
    pub fn fract(&self) -> Self {
        Self::from_scaled(
            self.scaled.mod_floor(&pow2(self.precision)),
            self.precision,
            self.err_ulps,
        )
    }

    fn check_precision(&self, other: &Self) {
        assert_eq!(
            self.precision, other.precision,
            "fixed-point operands must share a precision"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_precision(other);
        Self::from_scaled(
            &self.scaled + &other.scaled,
            self.precision,
            self.err_ulps.saturating_add(other.err_ulps),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_precision(other);
        Self::from_scaled(
            &self.scaled - &other.scaled,
            self.precision,
            self.err_ulps.saturating_add(other.err_ulps),
        )
    }

    pub fn neg(&self) -> Self {
        Self::from_scaled(-&self.scaled, self.precision, self.err_ulps)
    }

    /// Exact multiplication by an integer; the error bound scales by `|j|`.
    pub fn mul_int(&self, j: i64) -> Self {
        Self::from_scaled(
            &self.scaled * j,
            self.precision,
            self.err_ulps.saturating_mul(j.unsigned_abs() as u128),
        )
    }

    /// Product truncated to `precision` bits; adds one ulp of rounding error
    /// plus the propagated operand errors.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_precision(other);
        let product = (&self.scaled * &other.scaled).div_floor(&pow2(self.precision));
        let a = abs_ceil_int(&self.scaled, self.precision);
        let b = abs_ceil_int(&other.scaled, self.precision);
        let cross = if self.err_ulps > 0 && other.err_ulps > 0 {
            1
        } else {
            0
        };
        let err = a
            .saturating_mul(other.err_ulps)
            .saturating_add(b.saturating_mul(self.err_ulps))
            .saturating_add(cross)
            .saturating_add(1);
        Self::from_scaled(product, self.precision, err)
    }

    /// Floor division by a nonzero integer.
    pub fn div_int(&self, d: i64) -> Self {
        assert!(d != 0, "division by zero");
        let (q, r) = self.scaled.div_mod_floor(&BigInt::from(d));
        let mag = d.unsigned_abs() as u128;
        let err = self.err_ulps.div_ceil(mag) + u128::from(!r.is_zero());
        Self::from_scaled(q, self.precision, err)
    }

    /// Re-expresses the value at another precision (truncating when narrowing).
    pub fn with_precision(&self, precision: u32) -> Self {
        match precision.cmp(&self.precision) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let shift = precision - self.precision;
                let err = if shift >= 128 {
                    if self.err_ulps == 0 {
                        0
                    } else {
                        u128::MAX
                    }
                } else {
                    self.err_ulps.saturating_mul(1u128 << shift)
                };
                Self::from_scaled(self.scaled.clone() << shift as usize, precision, err)
            }
            Ordering::Less => {
                let shift = self.precision - precision;
                let (q, r) = self.scaled.div_mod_floor(&pow2(shift));
                let carried = if shift >= 128 {
                    u128::from(self.err_ulps > 0)
                } else {
                    self.err_ulps.div_ceil(1u128 << shift)
                };
                Self::from_scaled(q, precision, carried + u128::from(!r.is_zero()))
            }
        }
    }

    /// `{j * self}` for `j >= 0`; error at most `j` times the input error.
    pub fn frac_mul(&self, j: u64) -> Self {
        let j = i64::try_from(j).expect("multiplier fits in i64");
        self.mul_int(j).fract()
    }

    /// Distance to the nearest integer, `min({u}, 1 - {u})`.
    pub fn nearest_int_dist(&self) -> Self {
        let f = self.fract();
        let one = pow2(self.precision);
        let complement = &one - &f.scaled;
        let scaled = if complement < f.scaled {
            complement
        } else {
            f.scaled
        };
        Self::from_scaled(scaled, self.precision, self.err_ulps)
    }

    pub fn to_f64(&self) -> f64 {
        // keep 64 significant bits before converting so huge mantissas stay finite
        let bits = self.scaled.bits();
        if bits <= 1000 {
            let v = self.scaled.to_f64().unwrap_or(f64::NAN);
            return v * (-(self.precision as f64)).exp2();
        }
        let drop = bits - 64;
        let top = (&self.scaled >> drop as usize).to_f64().unwrap_or(f64::NAN);
        top * (drop as f64 - self.precision as f64).exp2()
    }

    /// Top [`TORUS_BITS`] bits of `{self}` (truncated).
    pub fn torus_angle(&self) -> TorusAngle {
        let f = self.fract().scaled;
        let v = if self.precision >= TORUS_BITS {
            f >> (self.precision - TORUS_BITS) as usize
        } else {
            f << (TORUS_BITS - self.precision) as usize
        };
        TorusAngle(v.to_u128().expect("fraction fits in 128 bits"))
    }

    /// Decimal expansion with `sig` significant digits, truncated.
    pub fn to_decimal(&self, sig: usize) -> String {
        if self.scaled.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        if self.scaled.is_negative() {
            out.push('-');
        }
        let int = self.int_part();
        let mut frac = BigInt::from(self.frac_bits());
        let one = pow2(self.precision);
        let int_digits = int.to_string();
        let mut produced = if int.is_zero() { 0 } else { int_digits.len() };
        out.push_str(&int_digits);
        if produced >= sig {
            return out;
        }
        out.push('.');
        let mut seen_nonzero = !int.is_zero();
        let mut guard = 0usize;
        while produced < sig {
            frac *= 10;
            let (d, r) = frac.div_rem(&one);
            frac = r;
            let digit = d.to_u8().unwrap_or(0);
            out.push(char::from(b'0' + digit));
            if digit != 0 {
                seen_nonzero = true;
            }
            if seen_nonzero {
                produced += 1;
            }
            guard += 1;
            if !seen_nonzero && frac.is_zero() {
                break;
            }
            if guard > sig + self.precision as usize {
                break;
            }
        }
        out
    }
}

impl PartialOrd for FixedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FixedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.precision.cmp(&other.precision) {
            Ordering::Equal => self.scaled.cmp(&other.scaled),
            Ordering::Less => (self.scaled.clone() << (other.precision - self.precision) as usize)
                .cmp(&other.scaled),
            Ordering::Greater => self
                .scaled
                .cmp(&(other.scaled.clone() << (self.precision - other.precision) as usize)),
        }
    }
}

impl fmt::Display for FixedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(30))
    }
}

/// A point of `R/Z` stored as `value * 2^128` (wrapping arithmetic is reduction mod 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TorusAngle(pub u128);

impl TorusAngle {
    pub const HALF: TorusAngle = TorusAngle(1u128 << 127);

    pub fn mul_int(self, n: i64) -> TorusAngle {
        let m = self.0.wrapping_mul(n.unsigned_abs() as u128);
        if n < 0 {
            TorusAngle(m.wrapping_neg())
        } else {
            TorusAngle(m)
        }
    }

    pub fn add(self, other: TorusAngle) -> TorusAngle {
        TorusAngle(self.0.wrapping_add(other.0))
    }

    /// `||u||` scaled by `2^128`, in `[0, 2^127]`.
    pub fn nearest_int_dist_raw(self) -> u128 {
        self.0.min(self.0.wrapping_neg())
    }

    pub fn nearest_int_dist(self) -> f64 {
        raw_to_f64(self.nearest_int_dist_raw())
    }

    pub fn to_f64(self) -> f64 {
        raw_to_f64(self.0)
    }
}

/// Converts a 128-bit fraction numerator to `f64`.
pub fn raw_to_f64(raw: u128) -> f64 {
    raw as f64 * (-(TORUS_BITS as f64)).exp2()
}

/// A rational number `num/den` used for root brackets; serialized as `"p/q"` or an integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let g = num.gcd(&den).max(1);
        let s = den.signum();
        Ok(Self {
            num: s * num / g,
            den: s * den / g,
        })
    }

    pub fn integer(v: i64) -> Self {
        Self { num: v, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl std::str::FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("not a rational: {s:?}"));
        match s.trim().split_once('/') {
            Some((p, q)) => Rational::new(
                p.trim().parse().map_err(|_| bad())?,
                q.trim().parse().map_err(|_| bad())?,
            ),
            None => Ok(Rational::integer(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.den == 1 {
            s.serialize_i64(self.num)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(Rational::integer(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// The monic cubic `x^3 + c2 x^2 + c1 x + c0` with an isolating bracket for one real root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorConfig", into = "GeneratorConfig")]
pub struct CubicGenerator {
    poly: [i64; 3],
    bracket: [Rational; 2],
    precision: u32,
}

/// Structured-text form of a [`CubicGenerator`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// `[c0, c1, c2]` for `x^3 + c2 x^2 + c1 x + c0`.
    pub poly: [i64; 3],
    pub bracket: [Rational; 2],
    #[serde(default = "default_precision")]
    pub precision: u32,
}

fn default_precision() -> u32 {
    DEFAULT_PRECISION
}

impl TryFrom<GeneratorConfig> for CubicGenerator {
    type Error = Error;

    fn try_from(c: GeneratorConfig) -> Result<Self> {
        CubicGenerator::new(c.poly, c.bracket, c.precision)
    }
}

impl From<CubicGenerator> for GeneratorConfig {
    fn from(g: CubicGenerator) -> Self {
        GeneratorConfig {
            poly: g.poly,
            bracket: g.bracket,
            precision: g.precision,
        }
    }
}

impl CubicGenerator {
    /// Validates irreducibility (no rational root) and the sign change on the bracket.
    pub fn new(poly: [i64; 3], bracket: [Rational; 2], precision: u32) -> Result<Self> {
        if let Some(root) = integer_root(poly) {
            return Err(Error::Reducible {
                c0: poly[0],
                c1: poly[1],
                c2: poly[2],
                root,
            });
        }
        Self::new_unchecked(poly, bracket, precision)
    }

    /// Skips the irreducibility check; the bracket is still validated.
    pub(crate) fn new_unchecked(
        poly: [i64; 3],
        bracket: [Rational; 2],
        precision: u32,
    ) -> Result<Self> {
        if precision < TORUS_BITS {
            return Err(Error::InvalidArgument(format!(
                "precision {precision} is below {TORUS_BITS} bits"
            )));
        }
        let g = Self {
            poly,
            bracket,
            precision,
        };
        let [lo, hi] = bracket;
        let lo_q = (BigInt::from(lo.num), BigInt::from(lo.den));
        let hi_q = (BigInt::from(hi.num), BigInt::from(hi.den));
        let ordered = BigInt::from(lo.num) * hi.den < BigInt::from(hi.num) * lo.den;
        let s_lo = g.sign_at(&lo_q.0, &lo_q.1);
        let s_hi = g.sign_at(&hi_q.0, &hi_q.1);
        if !ordered || (s_lo == s_hi && s_lo != Ordering::Equal) {
            return Err(Error::InvalidBracket {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        Ok(g)
    }

    /// `x^3 - x - 1` on `[1, 2]`; its real root is the plastic number.
    pub fn plastic() -> Self {
        Self::new([-1, -1, 0], [Rational::integer(1), Rational::integer(2)], DEFAULT_PRECISION)
            .expect("built-in generator is valid")
    }

    /// `x^3 - 2` on `[1, 2]`.
    pub fn cube_root_two() -> Self {
        Self::new([-2, 0, 0], [Rational::integer(1), Rational::integer(2)], DEFAULT_PRECISION)
            .expect("built-in generator is valid")
    }

    /// `x^3 - 2x^2 + 1 = (x - 1)(x^2 - x - 1)` on `[3/2, 2]`: isolates the golden ratio.
    pub(crate) fn golden_reducible(precision: u32) -> Self {
        Self::new_unchecked(
            [1, 0, -2],
            [Rational::new(3, 2).unwrap(), Rational::integer(2)],
            precision,
        )
        .expect("golden bracket is valid")
    }

    pub fn poly(&self) -> [i64; 3] {
        self.poly
    }

    pub fn bracket(&self) -> [Rational; 2] {
        self.bracket
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn with_precision(&self, precision: u32) -> Result<Self> {
        Self::new_unchecked(self.poly, self.bracket, precision)
    }

    pub fn is_irreducible(&self) -> bool {
        integer_root(self.poly).is_none()
    }

    /// Sign of `p(num/den)` for `den > 0`.
    fn sign_at(&self, num: &BigInt, den: &BigInt) -> Ordering {
        let [c0, c1, c2] = self.poly;
        let n2 = num * num;
        let d2 = den * den;
        let v = &n2 * num + BigInt::from(c2) * &n2 * den + BigInt::from(c1) * num * &d2
            + BigInt::from(c0) * &d2 * den;
        v.sign_cmp()
    }
}

trait SignCmp {
    fn sign_cmp(&self) -> Ordering;
}

impl SignCmp for BigInt {
    fn sign_cmp(&self) -> Ordering {
        match self.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }
}

/// An integer root of the monic cubic, if any (rational roots of monic integer
/// polynomials are integers dividing the constant term).
fn integer_root(poly: [i64; 3]) -> Option<i64> {
    let [c0, c1, c2] = poly;
    let eval = |x: i128| {
        let (c0, c1, c2) = (c0 as i128, c1 as i128, c2 as i128);
        x.checked_mul(x)?
            .checked_mul(x)?
            .checked_add(c2.checked_mul(x)?.checked_mul(x)?)?
            .checked_add(c1.checked_mul(x)?)?
            .checked_add(c0)
    };
    if c0 == 0 {
        return Some(0);
    }
    let m = c0.unsigned_abs();
    let mut d = 1u64;
    while d.saturating_mul(d) <= m {
        if m % d == 0 {
            for cand in [d, m / d] {
                for s in [1i128, -1] {
                    let x = s * cand as i128;
                    if eval(x) == Some(0) {
                        return Some(x as i64);
                    }
                }
            }
        }
        d += 1;
    }
    None
}

/// The bracketed real root of the generator to `precision` fractional bits,
/// truncated: `0 <= xi - result < 2^-P`.
pub fn fx_cubic_root(gen: &CubicGenerator) -> Result<FixedReal> {
    let p = gen.precision;
    let [lo, hi] = gen.bracket;
    let mut lo_q = (BigInt::from(lo.num), BigInt::from(lo.den));
    let mut hi_q = (BigInt::from(hi.num), BigInt::from(hi.den));
    let s_lo = gen.sign_at(&lo_q.0, &lo_q.1);
    let s_hi = gen.sign_at(&hi_q.0, &hi_q.1);
    if s_lo == Ordering::Equal {
        return Ok(FixedReal::from_scaled(
            (&lo_q.0 << p as usize).div_floor(&lo_q.1),
            p,
            u128::from(!(&lo_q.0 << p as usize).is_multiple_of(&lo_q.1)),
        ));
    }
    if s_hi == Ordering::Equal {
        return Ok(FixedReal::from_scaled(
            (&hi_q.0 << p as usize).div_floor(&hi_q.1),
            p,
            u128::from(!(&hi_q.0 << p as usize).is_multiple_of(&hi_q.1)),
        ));
    }

    // rational bisection until the bracket is narrower than 2^-64
    let two64 = pow2(64);
    loop {
        let width = &hi_q.0 * &lo_q.1 - &lo_q.0 * &hi_q.1;
        if width * &two64 <= &lo_q.1 * &hi_q.1 {
            break;
        }
        let mid = (&lo_q.0 * &hi_q.1 + &hi_q.0 * &lo_q.1, &lo_q.1 * &hi_q.1 * 2);
        match gen.sign_at(&mid.0, &mid.1) {
            Ordering::Equal => {
                let shifted = &mid.0 << p as usize;
                let exact = shifted.is_multiple_of(&mid.1);
                return Ok(FixedReal::from_scaled(
                    shifted.div_floor(&mid.1),
                    p,
                    u128::from(!exact),
                ));
            }
            s if s == s_lo => lo_q = reduce(mid),
            _ => hi_q = reduce(mid),
        }
    }

    // Newton polish in W-bit scaled integers
    let w = p + 32;
    let [c0, c1, c2] = gen.poly;
    let (c0, c1, c2) = (BigInt::from(c0), BigInt::from(c1), BigInt::from(c2));
    let one_w = pow2(w);
    let mut x = (&lo_q.0 << w as usize).div_floor(&lo_q.1);
    for _ in 0..64 {
        let x2 = &x * &x;
        let value = &x2 * &x + &c2 * &x2 * &one_w + &c1 * &x * &one_w * &one_w
            + &c0 * &one_w * &one_w * &one_w;
        let slope = BigInt::from(3) * &x2 + BigInt::from(2) * &c2 * &x * &one_w + &c1 * &one_w * &one_w;
        if slope.is_zero() {
            break;
        }
        let step = value.div_floor(&slope);
        x -= &step;
        if step.abs() <= BigInt::one() {
            break;
        }
    }

    // certify: find m with the sign change between m/2^P and (m+1)/2^P
    let den = pow2(p);
    let mut m = x >> (w - p) as usize;
    let lo_m = (&lo_q.0 << p as usize).div_floor(&lo_q.1);
    let hi_m = (&hi_q.0 << p as usize).div_floor(&hi_q.1) + 1;
    let mut steps = 0;
    loop {
        let s_m = gen.sign_at(&m, &den);
        if s_m == Ordering::Equal {
            return Ok(FixedReal::from_scaled(m, p, 0));
        }
        let next = &m + 1;
        let s_next = gen.sign_at(&next, &den);
        if s_next == Ordering::Equal {
            return Ok(FixedReal::from_scaled(next, p, 0));
        }
        if s_m == s_lo && s_next != s_lo {
            return Ok(FixedReal::from_scaled(m, p, 1));
        }
        steps += 1;
        if steps > 64 {
            break;
        }
        if s_m != s_lo {
            m -= 1;
        } else {
            m += 1;
        }
    }

    // fallback: integer bisection on the scaled bracket
    let (mut a, mut b) = (lo_m, hi_m);
    while &b - &a > BigInt::one() {
        let mid: BigInt = (&a + &b) >> 1usize;
        match gen.sign_at(&mid, &den) {
            Ordering::Equal => return Ok(FixedReal::from_scaled(mid, p, 0)),
            s if s == s_lo => a = mid,
            _ => b = mid,
        }
    }
    Ok(FixedReal::from_scaled(a, p, 1))
}

fn reduce((n, d): (BigInt, BigInt)) -> (BigInt, BigInt) {
    let g = n.gcd(&d);
    if g.is_one() || g.is_zero() {
        (n, d)
    } else {
        (n / &g, d / g)
    }
}

/// `{j * u}` for `j >= 0`.
pub fn fx_frac_mul(u: &FixedReal, j: u64) -> FixedReal {
    u.frac_mul(j)
}

/// `||u||`, the distance from `u` to the nearest integer.
pub fn fx_nearest_int_dist(u: &FixedReal) -> FixedReal {
    u.nearest_int_dist()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: bisection on `floor(xi * 2^64)` in i128/u128 with exact
    /// big-integer sign checks.
    fn bisection_oracle_64(poly: [i64; 3], lo: i64, hi: i64) -> f64 {
        let sign = |m: &BigInt| {
            let den = BigInt::one() << 64usize;
            let [c0, c1, c2] = poly;
            let v = m * m * m + BigInt::from(c2) * m * m * &den
                + BigInt::from(c1) * m * &den * &den
                + BigInt::from(c0) * &den * &den * &den;
            v.sign()
        };
        let mut a = BigInt::from(lo) << 64usize;
        let mut b = BigInt::from(hi) << 64usize;
        let sa = sign(&a);
        while &b - &a > BigInt::one() {
            let mid: BigInt = (&a + &b) >> 1usize;
            if sign(&mid) == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        a.to_f64().unwrap() / 2f64.powi(64)
    }

    #[test]
    fn cube_root_of_two() {
        let xi = fx_cubic_root(&CubicGenerator::cube_root_two()).unwrap();
        let oracle = bisection_oracle_64([-2, 0, 0], 1, 2);
        assert!((xi.to_f64() - oracle).abs() < 1e-15);
        assert!(xi.to_decimal(16).starts_with("1.259921049894873"));
        assert!(xi.error_ulps() <= 1);
    }

    #[test]
    fn plastic_number() {
        let xi = fx_cubic_root(&CubicGenerator::plastic()).unwrap();
        let oracle = bisection_oracle_64([-1, -1, 0], 1, 2);
        assert!((xi.to_f64() - oracle).abs() < 1e-15);
        assert!(xi.to_decimal(16).starts_with("1.324717957244746"));
    }

    #[test]
    fn integer_root_is_exact() {
        let g = CubicGenerator::new_unchecked(
            [-8, 0, 0],
            [Rational::integer(1), Rational::integer(3)],
            192,
        )
        .unwrap();
        let xi = fx_cubic_root(&g).unwrap();
        assert_eq!(xi, FixedReal::from_int(2, 192));
        assert_eq!(xi.error_ulps(), 0);
        assert!(xi.frac_bits().is_zero());
        // the checked constructor refuses the reducible polynomial
        assert!(matches!(
            CubicGenerator::new([-8, 0, 0], [Rational::integer(1), Rational::integer(3)], 192),
            Err(Error::Reducible { root: 2, .. })
        ));
    }

    #[test]
    fn bracket_without_sign_change_is_rejected() {
        let err = CubicGenerator::new([-2, 0, 0], [Rational::integer(2), Rational::integer(3)], 192);
        assert!(matches!(err, Err(Error::InvalidBracket { .. })));
    }

    #[test]
    fn root_is_truncation_of_true_value() {
        // the root at P bits lies in [m, m+1) ulps: check by sign evaluation
        let g = CubicGenerator::plastic();
        let xi = fx_cubic_root(&g).unwrap();
        let den = pow2(192);
        assert_eq!(g.sign_at(xi.scaled(), &den), Ordering::Less);
        assert_eq!(g.sign_at(&(xi.scaled() + 1), &den), Ordering::Greater);
    }

    #[test]
    fn precision_384_truncates_to_192() {
        for g in [CubicGenerator::plastic(), CubicGenerator::cube_root_two()] {
            let a = fx_cubic_root(&g).unwrap();
            let b = fx_cubic_root(&g.with_precision(384).unwrap()).unwrap();
            let t = b.with_precision(192);
            let diff = (a.scaled() - t.scaled()).abs();
            assert!(diff <= BigInt::from(4), "diff {diff}");
        }
    }

    #[test]
    fn frac_mul_examples() {
        let xi = fx_cubic_root(&CubicGenerator::cube_root_two()).unwrap();
        let u = xi.fract();
        assert!(fx_frac_mul(&u, 0).is_zero());
        let half = FixedReal::from_dyadic(1, 1, 192);
        assert_eq!(fx_frac_mul(&half, 3), half);
        let two = fx_frac_mul(&u, 2).to_f64();
        let expect = (2f64.cbrt() - 1.0) * 2.0;
        assert!((two - expect).abs() < 1e-12);
        assert!(fx_frac_mul(&u, 2).to_decimal(6).starts_with("0.519842"));
    }

    #[test]
    fn frac_mul_error_bound_scales_with_multiplier() {
        let xi = fx_cubic_root(&CubicGenerator::plastic()).unwrap();
        let v = fx_frac_mul(&xi, 10_000_000);
        assert!(v.error_ulps() <= 10_000_000);
        // 128 correct bits: error far below 2^-128
        assert!(v.error_bound() < 2f64.powi(-128));
    }

    #[test]
    fn nearest_int_dist_examples() {
        let xi = fx_cubic_root(&CubicGenerator::cube_root_two()).unwrap();
        let d = fx_nearest_int_dist(&xi.fract());
        assert_eq!(d, xi.fract());
        let q = FixedReal::from_dyadic(3, 2, 192);
        assert_eq!(fx_nearest_int_dist(&q), FixedReal::from_dyadic(1, 2, 192));
        assert!(fx_nearest_int_dist(&FixedReal::from_int(3, 192)).is_zero());
    }

    #[test]
    fn from_f64_is_exact() {
        for x in [0.5, 0.1, -3.25, 1e-300, 12345.678] {
            let f = FixedReal::from_f64(x, 192).unwrap();
            if x.abs() > 1e-50 {
                assert_eq!(f.to_f64(), x);
            }
        }
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(FixedReal::from_dyadic(1, 2, 192).to_decimal(3), "0.250");
        assert_eq!(FixedReal::from_int(0, 192).to_decimal(5), "0");
        assert_eq!(FixedReal::from_dyadic(-5, 1, 192).to_decimal(3), "-2.50");
    }

    #[test]
    fn torus_angle_agrees_with_fixed() {
        let xi = fx_cubic_root(&CubicGenerator::plastic()).unwrap();
        let t = xi.torus_angle();
        for n in [-7i64, -1, 1, 3, 1000] {
            let exact = xi.mul_int(n).fract().to_f64();
            assert!((t.mul_int(n).to_f64() - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn serde_round_trip() {
        let g = CubicGenerator::plastic();
        let text = toml::to_string(&g).unwrap();
        assert!(text.contains("poly = [-1, -1, 0]"));
        let back: CubicGenerator = toml::from_str(&text).unwrap();
        assert_eq!(back, g);
        let parsed: CubicGenerator =
            toml::from_str("poly = [-2, 0, 0]\nbracket = [\"5/4\", 2]\nprecision = 256").unwrap();
        assert_eq!(parsed.precision(), 256);
        assert!(toml::from_str::<CubicGenerator>("poly = [-8, 0, 0]\nbracket = [1, 3]").is_err());
    }

    proptest! {
        #[test]
        fn frac_mul_is_additive(a in 0u64..100_000, b in 0u64..100_000) {
            let xi = fx_cubic_root(&CubicGenerator::plastic()).unwrap();
            let lhs = fx_frac_mul(&xi, a + b);
            let rhs = fx_frac_mul(&xi, a).add(&fx_frac_mul(&xi, b)).fract();
            let tol = BigInt::from(lhs.error_ulps() + rhs.error_ulps());
            let one = pow2(192);
            let d = (lhs.scaled() - rhs.scaled()).abs();
            let d = d.clone().min(&one - d);
            prop_assert!(d <= tol);
        }

        #[test]
        fn nearest_int_dist_is_symmetric(bits in any::<u64>(), low in any::<u64>()) {
            let u = FixedReal::from_scaled(
                (BigInt::from(bits) << 128usize) + (BigInt::from(low) << 64usize),
                192,
                0,
            );
            let one = FixedReal::from_int(1, 192);
            prop_assert_eq!(fx_nearest_int_dist(&u), fx_nearest_int_dist(&one.sub(&u)));
        }
    }
}
