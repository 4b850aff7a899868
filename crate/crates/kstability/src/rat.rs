//! Exact rational scalars and rational complex numbers.
//!
//! Every predicate in this crate is decided over `Q` (or `Q[i]`); floating
//! point only ever appears in human-facing reports.  `BigRational` is used
//! throughout rather than a fixed-width ratio: envelope comparisons
//! cross-multiply denominators that grow with the square of the rank bound,
//! and the comfort of never overflowing outweighs the (here irrelevant)
//! speed difference.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Exact rational scalar.
pub type Rat = BigRational;

/// Build a rational from an integer pair, reducing as usual.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Build a rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

/// Render a rational in canonical form: lowest terms, `p/q` with `q > 1`,
/// plain integer when the denominator is one.
pub fn rat_str(x: &Rat) -> String {
    if x.denom() == &BigInt::from(1) {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Render a rational always as `p/q`, even for integers (`0` prints `0/1`).
/// Used where a slope is displayed and the denominator carries meaning
/// (for exceptional classes it equals the rank).
pub fn slope_str(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parse `p`, `-p`, or `p/q` into a rational.
pub fn rat_from_str(s: &str) -> Result<Rat, RatParseError> {
    let s = s.trim();
    let (num_s, den_s) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num_s
        .parse()
        .map_err(|_| RatParseError(s.to_string()))?;
    let den: BigInt = den_s
        .parse()
        .map_err(|_| RatParseError(s.to_string()))?;
    if den.is_zero() {
        return Err(RatParseError(s.to_string()));
    }
    Ok(Rat::new(num, den))
}

/// Convert to `f64` for report output.  Exact values in this crate stay well
/// within `f64` range, so the conversion is total in practice.
pub fn rat_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as a rational (expected `p` or `p/q` with q != 0)")]
pub struct RatParseError(pub String);

/// A complex number with exact rational real and imaginary parts.
///
/// This is the scalar field for central charges and slice coordinates.  It is
/// deliberately not a float wrapper: chamber membership and wall detection
/// are sign conditions on such numbers and must be decided exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatComplex {
    pub re: Rat,
    pub im: Rat,
}

impl RatComplex {
    pub fn new(re: Rat, im: Rat) -> Self {
        RatComplex { re, im }
    }

    pub fn zero() -> Self {
        RatComplex { re: Rat::zero(), im: Rat::zero() }
    }

    pub fn one() -> Self {
        RatComplex { re: rat_int(1), im: Rat::zero() }
    }

    pub fn from_rat(re: Rat) -> Self {
        RatComplex { re, im: Rat::zero() }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        RatComplex { re: rat_int(re), im: rat_int(im) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        RatComplex { re: self.re.clone(), im: -self.im.clone() }
    }

    /// |z|² as an exact rational.
    pub fn norm_sq(&self) -> Rat {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sq();
        Some(RatComplex { re: &self.re / &n, im: -&self.im / &n })
    }

    /// Scale by a rational.
    pub fn scale(&self, s: &Rat) -> Self {
        RatComplex { re: &self.re * s, im: &self.im * s }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (rat_f64(&self.re), rat_f64(&self.im))
    }

    /// |z| in floating point, for mass reports only.
    pub fn abs_f64(&self) -> f64 {
        let (re, im) = self.to_f64_pair();
        re.hypot(im)
    }

    /// Argument in floating point, for phase reports only.
    pub fn arg_f64(&self) -> f64 {
        let (re, im) = self.to_f64_pair();
        im.atan2(re)
    }
}

impl fmt::Display for RatComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", rat_str(&self.re));
        }
        if self.re.is_zero() {
            return write!(f, "{}i", rat_str(&self.im));
        }
        if self.im.is_negative() {
            write!(f, "{}{}i", rat_str(&self.re), rat_str(&self.im))
        } else {
            write!(f, "{}+{}i", rat_str(&self.re), rat_str(&self.im))
        }
    }
}

/// Parse a rational complex number: `a`, `a/b`, `ai`, `a+bi`, `a-b/ci`, `i`, `-i`.
pub fn rat_complex_from_str(s: &str) -> Result<RatComplex, RatParseError> {
    let s0 = s.trim();
    let err = || RatParseError(s0.to_string());
    if s0.is_empty() {
        return Err(err());
    }
    if let Some(body) = s0.strip_suffix(['i', 'j']) {
        // Pure imaginary or full a+bi form: split at the last +/- that is not
        // the leading sign and not inside the real part's fraction.
        let body = body.trim();
        if body.is_empty() || body == "+" {
            return Ok(RatComplex::from_ints(0, 1));
        }
        if body == "-" {
            return Ok(RatComplex::from_ints(0, -1));
        }
        // Find a split point: a sign character with a digit on the left.
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-')
                && bytes[k - 1].is_ascii_digit()
            {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re = rat_from_str(&body[..k])?;
                let im_s = &body[k..];
                let im = if im_s == "+" {
                    rat_int(1)
                } else if im_s == "-" {
                    rat_int(-1)
                } else {
                    rat_from_str(im_s)?
                };
                Ok(RatComplex::new(re, im))
            }
            None => Ok(RatComplex::new(Rat::zero(), rat_from_str(body)?)),
        }
    } else {
        Ok(RatComplex::from_rat(rat_from_str(s0)?))
    }
}

impl Add for &RatComplex {
    type Output = RatComplex;
    fn add(self, rhs: &RatComplex) -> RatComplex {
        RatComplex { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &RatComplex {
    type Output = RatComplex;
    fn sub(self, rhs: &RatComplex) -> RatComplex {
        RatComplex { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Mul for &RatComplex {
    type Output = RatComplex;
    fn mul(self, rhs: &RatComplex) -> RatComplex {
        RatComplex {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Div for &RatComplex {
    type Output = RatComplex;
    fn div(self, rhs: &RatComplex) -> RatComplex {
        let inv = rhs.inv().expect("division by zero RatComplex");
        self * &inv
    }
}

impl Neg for &RatComplex {
    type Output = RatComplex;
    fn neg(self) -> RatComplex {
        RatComplex { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl Add for RatComplex {
    type Output = RatComplex;
    fn add(self, rhs: RatComplex) -> RatComplex {
        &self + &rhs
    }
}

impl Sub for RatComplex {
    type Output = RatComplex;
    fn sub(self, rhs: RatComplex) -> RatComplex {
        &self - &rhs
    }
}

impl Mul for RatComplex {
    type Output = RatComplex;
    fn mul(self, rhs: RatComplex) -> RatComplex {
        &self * &rhs
    }
}

impl Div for RatComplex {
    type Output = RatComplex;
    fn div(self, rhs: RatComplex) -> RatComplex {
        &self / &rhs
    }
}

impl Neg for RatComplex {
    type Output = RatComplex;
    fn neg(self) -> RatComplex {
        RatComplex { re: -self.re, im: -self.im }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_rationals() {
        assert_eq!(rat_from_str("3/4").unwrap(), rat(3, 4));
        assert_eq!(rat_from_str("-1/8").unwrap(), rat(-1, 8));
        assert_eq!(rat_from_str("7").unwrap(), rat_int(7));
        assert_eq!(rat_from_str(" -6/4 ").unwrap(), rat(-3, 2));
        assert!(rat_from_str("1/0").is_err());
        assert!(rat_from_str("x").is_err());
        assert_eq!(rat_str(&rat(6, 4)), "3/2");
        assert_eq!(rat_str(&rat_int(-5)), "-5");
        assert_eq!(slope_str(&rat_int(0)), "0/1");
    }

    #[test]
    fn parse_complex_forms() {
        assert_eq!(rat_complex_from_str("i").unwrap(), RatComplex::from_ints(0, 1));
        assert_eq!(rat_complex_from_str("-i").unwrap(), RatComplex::from_ints(0, -1));
        assert_eq!(
            rat_complex_from_str("1/2-3i").unwrap(),
            RatComplex::new(rat(1, 2), rat_int(-3))
        );
        assert_eq!(
            rat_complex_from_str("-1/8+1/4i").unwrap(),
            RatComplex::new(rat(-1, 8), rat(1, 4))
        );
        assert_eq!(rat_complex_from_str("2/3").unwrap(), RatComplex::new(rat(2, 3), rat_int(0)));
        assert_eq!(rat_complex_from_str("5i").unwrap(), RatComplex::from_ints(0, 5));
    }

    #[test]
    fn complex_field_ops() {
        let z = RatComplex::from_ints(1, 2);
        let w = RatComplex::from_ints(3, -1);
        let p = &z * &w;
        assert_eq!(p, RatComplex::from_ints(5, 5));
        let q = &p / &w;
        assert_eq!(q, z);
        assert_eq!(z.norm_sq(), rat_int(5));
        assert!(RatComplex::zero().inv().is_none());
    }

    #[test]
    fn display_round_trips() {
        for s in ["3/2", "-1/8+1/4i", "2i", "-7", "1+i"] {
            let z = rat_complex_from_str(s).unwrap();
            let z2 = rat_complex_from_str(&z.to_string()).unwrap();
            assert_eq!(z, z2, "round-trip failed for {s}");
        }
    }
}
