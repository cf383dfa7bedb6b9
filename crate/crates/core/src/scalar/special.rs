//! Exact arithmetic in Q(δ) with δ = 2cos(π/(ℓ+2)).
//!
//! Elements are coordinate vectors over the power basis {1, δ, …, δ^{k-1}}
//! where k is the degree of δ's minimal polynomial.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ring::{Field, Ring};

/// Per-level field data.
#[derive(Debug)]
pub struct SpecialField {
    pub ell: u32,
    /// Monic minimal polynomial of δ, low → high, leading 1 included.
    pub minpoly: Vec<i64>,
    pub delta: f64,
}

impl SpecialField {
    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

fn build_field(ell: u32) -> SpecialField {
    let n = (ell + 2) as u64;
    let roots: Vec<f64> = (1..n)
        .filter(|&k| gcd_u64(k, 2 * n) == 1)
        .map(|k| 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos())
        .collect();
    // Expand prod (x - r) in floats, then round; the coefficients are integers.
    let mut poly = vec![1.0f64];
    for r in &roots {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        poly = next;
    }
    let minpoly: Vec<i64> = poly
        .iter()
        .map(|c| {
            let r = c.round();
            assert!((c - r).abs() < 1e-6, "minimal polynomial rounding failed for level {ell}");
            r as i64
        })
        .collect();
    SpecialField { ell, minpoly, delta: 2.0 * (std::f64::consts::PI / n as f64).cos() }
}

/// Shared field data for level `ell` (built once, then cached).
pub fn special_field(ell: u32) -> &'static SpecialField {
    assert!(ell >= 1, "special values need level >= 1");
    static CACHE: OnceLock<RwLock<HashMap<u32, &'static SpecialField>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(f) = cache.read().unwrap().get(&ell) {
        return f;
    }
    let mut w = cache.write().unwrap();
    w.entry(ell).or_insert_with(|| Box::leak(Box::new(build_field(ell))))
}

/// An element of Q(δ) at level `ell`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpecialElem {
    ell: u32,
    coords: Vec<BigRational>,
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl SpecialElem {
    pub fn zero(ell: u32) -> Self {
        let k = special_field(ell).degree();
        SpecialElem { ell, coords: vec![BigRational::zero(); k] }
    }

    pub fn from_int(ell: u32, v: i128) -> Self {
        let mut z = SpecialElem::zero(ell);
        z.coords[0] = BigRational::from_integer(BigInt::from(v));
        z
    }

    pub fn from_rational(ell: u32, v: BigRational) -> Self {
        let mut z = SpecialElem::zero(ell);
        z.coords[0] = v;
        z
    }

    /// δ itself.
    pub fn delta(ell: u32) -> Self {
        let f = special_field(ell);
        if f.degree() == 1 {
            // δ is rational: minpoly x + c0 has root -c0.
            return SpecialElem::from_int(ell, -f.minpoly[0] as i128);
        }
        let mut z = SpecialElem::zero(ell);
        z.coords[1] = BigRational::one();
        z
    }

    /// Build from coordinates over {1, δ, …}; shorter vectors are zero-padded.
    pub fn from_coords(ell: u32, coords: Vec<BigRational>) -> Self {
        let k = special_field(ell).degree();
        assert!(coords.len() <= k, "too many coordinates for level {ell}");
        let mut c = coords;
        c.resize(k, BigRational::zero());
        SpecialElem { ell, coords: c }
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn field(&self) -> &'static SpecialField {
        special_field(self.ell)
    }

    pub fn to_f64(&self) -> f64 {
        let delta = self.field().delta;
        self.coords
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * delta + c.to_f64().unwrap_or(f64::NAN))
    }

    /// The rational value if the element lies in Q.
    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.coords[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coords[0])
        } else {
            None
        }
    }

    fn check_same(&self, other: &Self) {
        assert_eq!(self.ell, other.ell, "mixing special fields of different levels");
    }

    /// Reduce a polynomial in δ (low → high) modulo the minimal polynomial.
    fn reduce(ell: u32, mut v: Vec<BigRational>) -> Self {
        let f = special_field(ell);
        let k = f.degree();
        while v.len() > k {
            let top = v.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let base = v.len() - k;
            for i in 0..k {
                let c = f.minpoly[i];
                if c != 0 {
                    v[base + i] -= &top * q(c);
                }
            }
        }
        v.resize(k, BigRational::zero());
        SpecialElem { ell, coords: v }
    }

    /// Exact sign, decided from a float evaluation with an exact zero test.
    pub fn signum(&self) -> i32 {
        if Ring::is_zero(self) {
            0
        } else if self.to_f64() > 0.0 {
            1
        } else {
            -1
        }
    }

    /// Text form `special(ℓ)[c0, c1, …]` with rational coordinates.
    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        format!("special({})[{}]", self.ell, parts.join(", "))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let rest = t.strip_prefix("special(").ok_or("expected 'special('")?;
        let close = rest.find(')').ok_or("missing ')'")?;
        let ell: u32 = rest[..close].trim().parse().map_err(|_| "bad level")?;
        if ell == 0 {
            return Err("level must be positive".into());
        }
        let body = rest[close + 1..].trim();
        let body = body
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or("expected [coords]")?;
        let mut coords = Vec::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            coords.push(parse_rational(part)?);
        }
        if coords.len() > special_field(ell).degree() {
            return Err("too many coordinates".into());
        }
        Ok(SpecialElem::from_coords(ell, coords))
    }
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let (a, b) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let a: BigInt = a.parse().map_err(|_| format!("bad rational '{s}'"))?;
    let b: BigInt = b.parse().map_err(|_| format!("bad rational '{s}'"))?;
    if b.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(BigRational::new(a, b))
}

impl fmt::Display for SpecialElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl fmt::Debug for SpecialElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (~{:.6})", self.to_text(), self.to_f64())
    }
}

/// Polynomial helpers over Q used for inversion.
fn qpoly_trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn qpoly_divrem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (Vec::new(), qpoly_trim(r));
    }
    let mut quo = vec![BigRational::zero(); r.len() - db];
    let lb = &b[db];
    for i in (0..quo.len()).rev() {
        let c = &r[i + db] / lb;
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            r[i + j] -= &c * bj;
        }
        quo[i] = c;
    }
    r.truncate(db);
    (qpoly_trim(quo), qpoly_trim(r))
}

fn qpoly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut v = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            v[i + j] += x * y;
        }
    }
    qpoly_trim(v)
}

fn qpoly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let z = BigRational::zero();
    qpoly_trim((0..n).map(|i| a.get(i).unwrap_or(&z) - b.get(i).unwrap_or(&z)).collect())
}

impl Ring for SpecialElem {
    fn zero_like(&self) -> Self {
        SpecialElem::zero(self.ell)
    }
    fn one_like(&self) -> Self {
        SpecialElem::from_int(self.ell, 1)
    }
    fn from_i128_like(&self, v: i128) -> Self {
        SpecialElem::from_int(self.ell, v)
    }
    fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
    fn add(&self, other: &Self) -> Self {
        self.check_same(other);
        SpecialElem {
            ell: self.ell,
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        }
    }
    fn sub(&self, other: &Self) -> Self {
        self.check_same(other);
        SpecialElem {
            ell: self.ell,
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(),
        }
    }
    fn mul(&self, other: &Self) -> Self {
        self.check_same(other);
        let k = self.coords.len();
        if k == 1 {
            return SpecialElem { ell: self.ell, coords: vec![&self.coords[0] * &other.coords[0]] };
        }
        let mut v = vec![BigRational::zero(); 2 * k - 1];
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coords.iter().enumerate() {
                if !b.is_zero() {
                    v[i + j] += a * b;
                }
            }
        }
        SpecialElem::reduce(self.ell, v)
    }
    fn neg(&self) -> Self {
        SpecialElem { ell: self.ell, coords: self.coords.iter().map(|c| -c).collect() }
    }
}

impl Field for SpecialElem {
    fn inv(&self) -> Option<Self> {
        if Ring::is_zero(self) {
            return None;
        }
        if self.coords.len() == 1 {
            return Some(SpecialElem { ell: self.ell, coords: vec![self.coords[0].recip()] });
        }
        // Extended Euclid: find s with s*a ≡ 1 (mod m).
        let m: Vec<BigRational> = self.field().minpoly.iter().map(|&c| q(c)).collect();
        let a = qpoly_trim(self.coords.clone());
        let (mut r0, mut r1) = (m, a);
        let (mut s0, mut s1): (Vec<BigRational>, Vec<BigRational>) = (Vec::new(), vec![BigRational::one()]);
        while r1.len() > 1 {
            let (quo, rem) = qpoly_divrem(&r0, &r1);
            let s2 = qpoly_sub(&s0, &qpoly_mul(&quo, &s1));
            r0 = std::mem::replace(&mut r1, rem);
            s0 = std::mem::replace(&mut s1, s2);
        }
        // r1 is a nonzero constant since the minimal polynomial is irreducible.
        let c = r1[0].clone();
        let inv: Vec<BigRational> = s1.iter().map(|x| x / &c).collect();
        Some(SpecialElem::reduce(self.ell, inv))
    }
}

impl SpecialElem {
    /// Is this element (numerically) positive?  Convenience for tests.
    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    /// Absolute value helper for rational elements.
    pub fn abs_rational(&self) -> Option<BigRational> {
        self.as_rational().map(|r| r.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_minimal_polynomials() {
        assert_eq!(special_field(1).minpoly, vec![-1, 1]);
        assert_eq!(special_field(2).minpoly, vec![-2, 0, 1]);
        assert_eq!(special_field(3).minpoly, vec![-1, -1, 1]);
        assert_eq!(special_field(4).minpoly, vec![-3, 0, 1]);
        assert_eq!(special_field(5).minpoly, vec![1, -2, -1, 1]);
    }

    #[test]
    fn test_delta_values() {
        for ell in 1..=8 {
            let d = SpecialElem::delta(ell);
            let expect = 2.0 * (std::f64::consts::PI / (ell as f64 + 2.0)).cos();
            assert!((d.to_f64() - expect).abs() < 1e-12);
        }
        let d = SpecialElem::delta(2);
        assert_eq!(d.mul(&d), SpecialElem::from_int(2, 2));
        let phi = SpecialElem::delta(3);
        assert_eq!(phi.mul(&phi), phi.add(&SpecialElem::from_int(3, 1)));
    }

    #[test]
    fn test_inverse() {
        for ell in 1..=6 {
            let x = SpecialElem::delta(ell).add(&SpecialElem::from_int(ell, 3));
            let y = x.inv().unwrap();
            assert_eq!(x.mul(&y), SpecialElem::from_int(ell, 1));
        }
    }

    #[test]
    fn test_text_roundtrip() {
        let x = SpecialElem::from_coords(3, vec![BigRational::new(1.into(), 2.into()), q(-3)]);
        let s = x.to_text();
        assert_eq!(s, "special(3)[1/2, -3]");
        assert_eq!(SpecialElem::parse(&s).unwrap(), x);
    }
}
