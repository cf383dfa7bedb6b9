//! Dense univariate polynomials in `d` with integer coefficients.
//!
//! Coefficients are stored as `i128` with checked arithmetic; the gcd runs on
//! big integers internally because pseudo-remainder sequences grow quickly.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::ring::Ring;

/// Polynomial `c[0] + c[1] d + c[2] d^2 + ...` with no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<i128>,
}

fn overflow() -> ! {
    panic!("polynomial coefficient overflow (exceeds i128)")
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(1)
    }

    pub fn constant(c: i128) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// The indeterminate `d`.
    pub fn d() -> Self {
        Poly::monomial(1, 1)
    }

    pub fn monomial(c: i128, k: usize) -> Self {
        let mut v = vec![0; k + 1];
        v[k] = c;
        Poly::from_coeffs(v)
    }

    pub fn from_coeffs(mut coeffs: Vec<i128>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> i128 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = other.coeffs.get(i).copied().unwrap_or(0);
            v.push(a.checked_add(b).unwrap_or_else(|| overflow()));
        }
        Poly::from_coeffs(v)
    }

    pub fn neg(&self) -> Poly {
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.checked_neg().unwrap_or_else(|| overflow()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![0i128; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let p = a.checked_mul(b).unwrap_or_else(|| overflow());
                v[i + j] = v[i + j].checked_add(p).unwrap_or_else(|| overflow());
            }
        }
        Poly::from_coeffs(v)
    }

    pub fn scale(&self, c: i128) -> Poly {
        Poly::from_coeffs(
            self.coeffs
                .iter()
                .map(|a| a.checked_mul(c).unwrap_or_else(|| overflow()))
                .collect(),
        )
    }

    /// Multiply by `d^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![0; k];
        v.extend_from_slice(&self.coeffs);
        Poly { coeffs: v }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Gcd of the integer coefficients (non-negative; zero for the zero polynomial).
    pub fn content(&self) -> i128 {
        self.coeffs.iter().fold(0i128, |g, &c| g.gcd(&c))
    }

    /// Divide every coefficient by `c`, which must divide all of them.
    pub fn div_exact_int(&self, c: i128) -> Poly {
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .map(|a| {
                    debug_assert_eq!(a % c, 0);
                    a / c
                })
                .collect(),
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
    }

    /// Horner evaluation in an arbitrary ring, given the value of `d` there.
    pub fn eval_in<R: Ring>(&self, x: &R) -> R {
        let mut acc = x.zero_like();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(&x.from_i128_like(c));
        }
        acc
    }

    pub(crate) fn to_big(&self) -> Vec<BigInt> {
        self.coeffs.iter().map(|&c| BigInt::from(c)).collect()
    }

    pub(crate) fn from_big(v: &[BigInt]) -> Poly {
        Poly::from_coeffs(
            v.iter()
                .map(|c| c.to_i128().unwrap_or_else(|| overflow()))
                .collect(),
        )
    }

    /// Exact quotient `self / other`, or `None` if `other` does not divide `self` over Z.
    pub fn div_exact(&self, other: &Poly) -> Option<Poly> {
        assert!(!other.is_zero(), "division by the zero polynomial");
        let mut rem = self.to_big();
        let b = other.to_big();
        let db = b.len() - 1;
        let lb = &b[db];
        if rem.len() < b.len() {
            return if self.is_zero() { Some(Poly::zero()) } else { None };
        }
        let mut q = vec![BigInt::zero(); rem.len() - db];
        for i in (0..q.len()).rev() {
            let top = &rem[i + db];
            if top.is_zero() {
                continue;
            }
            let (qc, r) = top.div_rem(lb);
            if !r.is_zero() {
                return None;
            }
            for (j, bj) in b.iter().enumerate() {
                rem[i + j] -= &qc * bj;
            }
            q[i] = qc;
        }
        if rem.iter().all(|c| c.is_zero()) {
            Some(Poly::from_big(&q))
        } else {
            None
        }
    }

    /// Primitive gcd over Z[d], with positive leading coefficient.
    /// `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.normalized_sign_primitive();
        }
        if other.is_zero() {
            return self.normalized_sign_primitive();
        }
        let mut a = primitive_big(&self.to_big());
        let mut b = primitive_big(&other.to_big());
        if a.len() < b.len() {
            std::mem::swap(&mut a, &mut b);
        }
        loop {
            if b.len() == 1 {
                return Poly::one();
            }
            let r = prem_big(&a, &b);
            if r.is_empty() {
                let g = Poly::from_big(&b);
                return if g.leading() < 0 { g.neg() } else { g };
            }
            a = b;
            b = primitive_big(&r);
        }
    }

    fn normalized_sign_primitive(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let c = self.content();
        let p = self.div_exact_int(c);
        if p.leading() < 0 {
            p.neg()
        } else {
            p
        }
    }

    /// Parse text like `3*d^2 - d + 1` (also accepts `3d^2`, whitespace, and `d**2`).
    pub fn parse(text: &str) -> Result<Poly, String> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let s = s.replace("**", "^");
        if s.is_empty() {
            return Err("empty polynomial".into());
        }
        let mut terms = Vec::new();
        let mut cur = String::new();
        for (i, ch) in s.chars().enumerate() {
            if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        terms.push(cur);
        let mut acc = Poly::zero();
        for t in terms {
            acc = acc.add(&parse_term(&t)?);
        }
        Ok(acc)
    }
}

fn parse_term(t: &str) -> Result<Poly, String> {
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1i128, rest),
        None => (1, t.strip_prefix('+').unwrap_or(t)),
    };
    if body.is_empty() {
        return Err(format!("dangling sign in term '{t}'"));
    }
    let (coef_part, var_part) = match body.find('d') {
        Some(pos) => (&body[..pos], Some(&body[pos..])),
        None => (body, None),
    };
    let coef_part = coef_part.trim_end_matches('*');
    let coef: i128 = if coef_part.is_empty() {
        1
    } else {
        coef_part
            .parse()
            .map_err(|_| format!("bad coefficient '{coef_part}'"))?
    };
    let power = match var_part {
        None => 0,
        Some(v) => {
            let rest = &v[1..];
            if rest.is_empty() {
                1
            } else if let Some(e) = rest.strip_prefix('^') {
                e.parse().map_err(|_| format!("bad exponent '{e}'"))?
            } else {
                return Err(format!("unexpected text '{v}'"));
            }
        }
    };
    Ok(Poly::monomial(sign * coef, power))
}

fn trim_big(mut v: Vec<BigInt>) -> Vec<BigInt> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn primitive_big(v: &[BigInt]) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    if g.is_zero() || g.is_one() {
        return v.to_vec();
    }
    v.iter().map(|c| c / &g).collect()
}

/// Pseudo-remainder of `a` by `b` (both trimmed, `b` nonzero).
fn prem_big(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lb = b[db].clone();
    while r.len() > db {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        for c in r.iter_mut() {
            *c *= &lb;
        }
        let shift = dr - db;
        for (j, bj) in b.iter().enumerate() {
            r[shift + j] -= &lr * bj;
        }
        r = trim_big(r);
    }
    r
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let neg = c < 0;
            let a = c.unsigned_abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            match k {
                0 => write!(f, "{a}")?,
                _ => {
                    if a != 1 {
                        write!(f, "{a}*")?;
                    }
                    if k == 1 {
                        write!(f, "d")?;
                    } else {
                        write!(f, "d^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

impl Ring for Poly {
    fn zero_like(&self) -> Self {
        Poly::zero()
    }
    fn one_like(&self) -> Self {
        Poly::one()
    }
    fn from_i128_like(&self, v: i128) -> Self {
        Poly::constant(v)
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        Poly::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        Poly::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Poly::mul(self, other)
    }
    fn neg(&self) -> Self {
        Poly::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        Poly::parse(s).unwrap()
    }

    #[test]
    fn test_parse_display_roundtrip() {
        for s in ["d^2 - 1", "-3*d^4 + d - 7", "d", "0", "12"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("2d^2+3"), p("2*d^2 + 3"));
    }

    #[test]
    fn test_gcd_and_exact_division() {
        let a = p("d^2 - 1");
        let b = p("d^2 + 2*d + 1");
        assert_eq!(a.gcd(&b), p("d + 1"));
        assert_eq!(a.div_exact(&p("d - 1")), Some(p("d + 1")));
        assert_eq!(a.div_exact(&p("d - 2")), None);
        assert_eq!(p("6*d + 4").gcd(&p("3*d + 2")), p("3*d + 2"));
        assert_eq!(p("2").gcd(&p("4*d")), Poly::one());
    }

    #[test]
    fn test_gcd_of_coprime_high_degree() {
        let a = p("d^5 - 4*d^3 + 3*d");
        let b = p("d^4 - 3*d^2 + 1");
        assert_eq!(a.gcd(&b), Poly::one());
    }

    #[test]
    fn test_eval() {
        let a = p("d^3 - 2*d");
        assert_eq!(a.eval_f64(2.0), 4.0);
        assert_eq!(a.eval_in(&3i128.to_f64().unwrap()), 21.0);
    }
}
