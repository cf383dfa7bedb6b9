//! Rational functions in `d` with integer coefficients, kept in lowest terms.

use std::fmt;

use num_integer::Integer;

use super::poly::Poly;
use super::ring::{Field, Ring};

/// `num / den` with `gcd(num, den) = 1` over Q[d], joint integer content 1,
/// and a positive leading coefficient on `den`. Zero is `0/1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFunc::from_poly(Poly::one())
    }

    pub fn d() -> Self {
        RatFunc::from_poly(Poly::d())
    }

    pub fn from_int(c: i128) -> Self {
        RatFunc::from_poly(Poly::constant(c))
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    /// Build and normalize `num / den`. Panics if `den` is zero.
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        if num.is_zero() {
            return RatFunc::zero();
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides numerator"), den.div_exact(&g).expect("gcd divides denominator"))
        };
        let c = num.content().gcd(&den.content());
        if c > 1 {
            num = num.div_exact_int(c);
            den = den.div_exact_int(c);
        }
        if den.leading() < 0 {
            num = num.neg();
            den = den.neg();
        }
        RatFunc { num, den }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    pub fn parse(text: &str) -> Result<RatFunc, String> {
        let t = text.trim();
        match split_fraction(t) {
            Some((a, b)) => {
                let den = Poly::parse(strip_parens(b))?;
                if den.is_zero() {
                    return Err("zero denominator".into());
                }
                Ok(RatFunc::new(Poly::parse(strip_parens(a))?, den))
            }
            None => Ok(RatFunc::from_poly(Poly::parse(strip_parens(t))?)),
        }
    }
}

fn strip_parens(s: &str) -> &str {
    let s = s.trim();
    if s.starts_with('(') && s.ends_with(')') {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Split at a top-level `/`.
fn split_fraction(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '/' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFunc({self})")
    }
}

impl Ring for RatFunc {
    fn zero_like(&self) -> Self {
        RatFunc::zero()
    }
    fn one_like(&self) -> Self {
        RatFunc::one()
    }
    fn from_i128_like(&self, v: i128) -> Self {
        RatFunc::from_int(v)
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        if self.num.is_zero() {
            return other.clone();
        }
        if other.num.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return RatFunc::new(self.num.add(&other.num), self.den.clone());
        }
        RatFunc::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn mul(&self, other: &Self) -> Self {
        if self.num.is_zero() || other.num.is_zero() {
            return RatFunc::zero();
        }
        if self.den.is_one() && other.den.is_one() {
            return RatFunc::from_poly(self.num.mul(&other.num));
        }
        RatFunc::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }
    fn neg(&self) -> Self {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }
}

impl Field for RatFunc {
    fn inv(&self) -> Option<Self> {
        if self.num.is_zero() {
            None
        } else {
            Some(RatFunc::new(self.den.clone(), self.num.clone()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> RatFunc {
        RatFunc::parse(s).unwrap()
    }

    #[test]
    fn test_normalization_is_canonical() {
        assert_eq!(r("(2*d^2 - 2)/(4*d - 4)"), r("(d + 1)/(2)"));
        assert_eq!(r("(d)/(-d^2)"), r("(-1)/(d)"));
        assert_eq!(r("(d)/(-d^2)").to_string(), "(-1)/(d)");
        assert!(r("(d^2-1)/(d-1)").is_polynomial());
    }

    #[test]
    fn test_field_ops() {
        let a = r("(d^2 - 1)/(d)");
        let b = r("(d)/(d + 1)");
        assert_eq!(a.mul(&b), r("d - 1"));
        assert_eq!(a.mul(&a.inv().unwrap()), RatFunc::one());
        assert_eq!(a.sub(&a), RatFunc::zero());
        assert_eq!(r("1/d").add(&r("1/d")), r("2/d"));
    }

    #[test]
    fn test_text_roundtrip() {
        for s in ["(d^2 - 1)/(d)", "d^3 - 2*d", "(-3)/(d^2 + 1)"] {
            assert_eq!(r(s).to_string(), s);
            assert_eq!(r(&r(s).to_string()), r(s));
        }
    }
}
