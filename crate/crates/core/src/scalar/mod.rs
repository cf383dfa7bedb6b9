//! Coefficient arithmetic: rational functions in `d`, exact values at the
//! special points d = 2cos(π/(ℓ+2)), and floats.

mod poly;
mod ratfunc;
mod ring;
mod special;

use std::fmt;

pub use poly::Poly;
pub use ratfunc::RatFunc;
pub use ring::{Field, Ring};
pub use special::{special_field, SpecialElem, SpecialField};

use crate::error::{Error, Result};

/// Where a computation is carried out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Rational functions in the indeterminate `d`.
    Generic,
    /// Exact arithmetic at d = 2cos(π/(ℓ+2)).
    Special(u32),
    /// Floating point at the given value of `d`.
    Float(f64),
}

impl Backend {
    /// The loop value `d` in this backend.
    pub fn d(&self) -> Scalar {
        match *self {
            Backend::Generic => Scalar::Generic(RatFunc::d()),
            Backend::Special(ell) => Scalar::Special(SpecialElem::delta(ell)),
            Backend::Float(x) => Scalar::Float(x),
        }
    }

    pub fn from_int(&self, v: i128) -> Scalar {
        match *self {
            Backend::Generic => Scalar::Generic(RatFunc::from_int(v)),
            Backend::Special(ell) => Scalar::Special(SpecialElem::from_int(ell, v)),
            Backend::Float(_) => Scalar::Float(v as f64),
        }
    }

    pub fn zero(&self) -> Scalar {
        self.from_int(0)
    }

    pub fn one(&self) -> Scalar {
        self.from_int(1)
    }

    /// Numeric value of `d`.
    pub fn d_f64(&self) -> Option<f64> {
        match *self {
            Backend::Generic => None,
            Backend::Special(ell) => Some(special_field(ell).delta),
            Backend::Float(x) => Some(x),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Backend::Float(_))
    }

    /// Evaluate a polynomial in `d` in this backend.
    pub fn eval_poly(&self, p: &Poly) -> Scalar {
        match *self {
            Backend::Generic => Scalar::Generic(RatFunc::from_poly(p.clone())),
            Backend::Special(ell) => Scalar::Special(p.eval_in(&SpecialElem::delta(ell))),
            Backend::Float(x) => Scalar::Float(p.eval_f64(x)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Backend::Generic => "generic".into(),
            Backend::Special(ell) => format!("special({ell})"),
            Backend::Float(x) => format!("float({x})"),
        }
    }
}

/// A coefficient in one of the three backends. Mixing backends panics.
#[derive(Clone, PartialEq)]
pub enum Scalar {
    Generic(RatFunc),
    Special(SpecialElem),
    Float(f64),
}

impl Scalar {
    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Generic(_) => Backend::Generic,
            Scalar::Special(x) => Backend::Special(x.ell()),
            // The float payload does not remember `d`; callers that need it
            // carry the backend separately.
            Scalar::Float(_) => Backend::Float(f64::NAN),
        }
    }

    /// Numeric value; generic scalars must be evaluated with [`Scalar::eval_f64`].
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Generic(r) => {
                assert!(r.is_polynomial() && r.numer().degree().unwrap_or(0) == 0, "generic scalar {r} has no fixed value");
                r.numer().coeffs().first().copied().unwrap_or(0) as f64
            }
            Scalar::Special(x) => x.to_f64(),
            Scalar::Float(x) => *x,
        }
    }

    /// Numeric value with `d` set to `x` (only meaningful for generic scalars).
    pub fn eval_f64(&self, x: f64) -> f64 {
        match self {
            Scalar::Generic(r) => r.eval_f64(x),
            other => other.to_f64(),
        }
    }

    pub fn as_generic(&self) -> Option<&RatFunc> {
        match self {
            Scalar::Generic(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_special(&self) -> Option<&SpecialElem> {
        match self {
            Scalar::Special(x) => Some(x),
            _ => None,
        }
    }

    /// Move a scalar into `target`. Generic values may go anywhere; other
    /// backends only convert to themselves (or special → float).
    pub fn convert(&self, target: Backend) -> Result<Scalar> {
        match (self, target) {
            (Scalar::Generic(r), Backend::Generic) => Ok(Scalar::Generic(r.clone())),
            (Scalar::Generic(_), Backend::Special(ell)) => specialize(self, ell),
            (Scalar::Generic(r), Backend::Float(x)) => {
                let den = r.denom().eval_f64(x);
                let scale = r.denom().coeffs().iter().map(|c| c.abs() as f64).sum::<f64>().max(1.0);
                if den.abs() <= 1e-12 * scale {
                    return Err(Error::PoleAtSpecialValue { ell: 0, denominator: r.denom().to_string() });
                }
                Ok(Scalar::Float(r.numer().eval_f64(x) / den))
            }
            (Scalar::Special(s), Backend::Special(ell)) if s.ell() == ell => Ok(self.clone()),
            (Scalar::Special(s), Backend::Float(_)) => Ok(Scalar::Float(s.to_f64())),
            (Scalar::Float(v), Backend::Float(_)) => Ok(Scalar::Float(*v)),
            (s, t) => panic!("cannot convert {s:?} to backend {}", t.label()),
        }
    }

    /// Text form: `p(d)/q(d)` for generic, `special(ℓ)[c0, c1]` for special,
    /// `float:<value>` for float.
    pub fn to_text(&self) -> String {
        match self {
            Scalar::Generic(r) => r.to_string(),
            Scalar::Special(x) => x.to_text(),
            Scalar::Float(v) => format!("float:{v:?}"),
        }
    }

    pub fn parse(text: &str) -> std::result::Result<Scalar, String> {
        let t = text.trim();
        if let Some(v) = t.strip_prefix("float:") {
            return v.trim().parse::<f64>().map(Scalar::Float).map_err(|e| e.to_string());
        }
        if t.starts_with("special(") {
            return SpecialElem::parse(t).map(Scalar::Special);
        }
        RatFunc::parse(t).map(Scalar::Generic)
    }

    /// Approximate equality for floats, exact otherwise.
    pub fn approx_eq(&self, other: &Scalar, rel_tol: f64) -> bool {
        match (self, other) {
            (Scalar::Float(a), Scalar::Float(b)) => {
                (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0)
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Generic(r) => write!(f, "{r:?}"),
            Scalar::Special(x) => write!(f, "{x:?}"),
            Scalar::Float(v) => write!(f, "Float({v})"),
        }
    }
}

fn mismatch(a: &Scalar, b: &Scalar) -> ! {
    panic!("scalar backend mismatch: {a:?} vs {b:?}")
}

impl Ring for Scalar {
    fn zero_like(&self) -> Self {
        match self {
            Scalar::Generic(_) => Scalar::Generic(RatFunc::zero()),
            Scalar::Special(x) => Scalar::Special(x.zero_like()),
            Scalar::Float(_) => Scalar::Float(0.0),
        }
    }
    fn one_like(&self) -> Self {
        self.from_i128_like(1)
    }
    fn from_i128_like(&self, v: i128) -> Self {
        match self {
            Scalar::Generic(_) => Scalar::Generic(RatFunc::from_int(v)),
            Scalar::Special(x) => Scalar::Special(x.from_i128_like(v)),
            Scalar::Float(_) => Scalar::Float(v as f64),
        }
    }
    fn is_zero(&self) -> bool {
        match self {
            Scalar::Generic(r) => Ring::is_zero(r),
            Scalar::Special(x) => Ring::is_zero(x),
            Scalar::Float(v) => *v == 0.0,
        }
    }
    fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (Scalar::Generic(a), Scalar::Generic(b)) => Scalar::Generic(Ring::add(a, b)),
            (Scalar::Special(a), Scalar::Special(b)) => Scalar::Special(Ring::add(a, b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a + b),
            _ => mismatch(self, other),
        }
    }
    fn sub(&self, other: &Self) -> Self {
        match (self, other) {
            (Scalar::Generic(a), Scalar::Generic(b)) => Scalar::Generic(Ring::sub(a, b)),
            (Scalar::Special(a), Scalar::Special(b)) => Scalar::Special(Ring::sub(a, b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a - b),
            _ => mismatch(self, other),
        }
    }
    fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (Scalar::Generic(a), Scalar::Generic(b)) => Scalar::Generic(Ring::mul(a, b)),
            (Scalar::Special(a), Scalar::Special(b)) => Scalar::Special(Ring::mul(a, b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a * b),
            _ => mismatch(self, other),
        }
    }
    fn neg(&self) -> Self {
        match self {
            Scalar::Generic(a) => Scalar::Generic(Ring::neg(a)),
            Scalar::Special(a) => Scalar::Special(Ring::neg(a)),
            Scalar::Float(a) => Scalar::Float(-a),
        }
    }
}

impl Field for Scalar {
    fn inv(&self) -> Option<Self> {
        match self {
            Scalar::Generic(a) => a.inv().map(Scalar::Generic),
            Scalar::Special(a) => a.inv().map(Scalar::Special),
            Scalar::Float(a) => a.inv().map(Scalar::Float),
        }
    }
}

/// Evaluate a generic scalar at d = 2cos(π/(ℓ+2)).
pub fn specialize(x: &Scalar, ell: u32) -> Result<Scalar> {
    match x {
        Scalar::Generic(r) => specialize_ratfunc(r, ell).map(Scalar::Special),
        Scalar::Special(s) if s.ell() == ell => Ok(x.clone()),
        other => panic!("specialize expects a generic scalar, got {other:?}"),
    }
}

pub fn specialize_ratfunc(r: &RatFunc, ell: u32) -> Result<SpecialElem> {
    let delta = SpecialElem::delta(ell);
    let den = r.denom().eval_in(&delta);
    let inv = den.inv().ok_or_else(|| Error::PoleAtSpecialValue {
        ell,
        denominator: r.denom().to_string(),
    })?;
    Ok(r.numer().eval_in(&delta).mul(&inv))
}

/// [m] as a polynomial in `d`: [0]=0, [1]=1, [m+1] = d[m] − [m−1], [−m] = −[m].
pub fn quantum_integer_poly(m: i64) -> Poly {
    if m < 0 {
        return quantum_integer_poly(-m).neg();
    }
    let (mut prev, mut cur) = (Poly::zero(), Poly::one());
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let next = Poly::d().mul(&cur).sub(&prev);
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumInteger {
    pub m: i64,
    pub value: Scalar,
}

pub fn quantum_integer(m: i64) -> QuantumInteger {
    QuantumInteger { m, value: Scalar::Generic(RatFunc::from_poly(quantum_integer_poly(m))) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(s: &str) -> Scalar {
        Scalar::Generic(RatFunc::parse(s).unwrap())
    }

    #[test]
    fn test_specialize_examples() {
        let d = specialize(&g("d"), 2).unwrap();
        assert!((d.to_f64() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.mul(&d), Backend::Special(2).from_int(2));
        assert!(specialize(&g("d^2 - 1"), 1).unwrap().is_zero());
        assert!(matches!(specialize(&g("1/(d^2 - 1)"), 1), Err(Error::PoleAtSpecialValue { .. })));
    }

    #[test]
    fn test_quantum_integer_examples() {
        assert_eq!(quantum_integer(2).value, g("d"));
        assert_eq!(quantum_integer(3).value, g("d^2 - 1"));
        assert_eq!(quantum_integer(-3).value, g("1 - d^2"));
        for ell in 1..=3u32 {
            let q = specialize(&quantum_integer(ell as i64 + 2).value, ell).unwrap();
            assert!(q.is_zero(), "[ℓ+2] should vanish at level {ell}");
        }
    }

    #[test]
    fn test_quantum_integer_matches_closed_form() {
        // [m] = sin(mθ)/sin θ with d = 2cos θ.
        let theta = 0.37f64;
        for m in 0..12 {
            let v = quantum_integer_poly(m).eval_f64(2.0 * theta.cos());
            let expect = (m as f64 * theta).sin() / theta.sin();
            assert!((v - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn test_product_expansion_identity() {
        for m in 1..=8i64 {
            for n in 1..=8i64 {
                let lhs = quantum_integer_poly(m).mul(&quantum_integer_poly(n));
                let rhs = (0..m.min(n)).fold(Poly::zero(), |acc, k| acc.add(&quantum_integer_poly(m + n - 1 - 2 * k)));
                assert_eq!(lhs, rhs, "[{m}][{n}]");
            }
        }
    }

    #[test]
    fn test_text_roundtrip() {
        for s in [g("(d^2 - 1)/(d)"), Backend::Special(3).d(), Scalar::Float(0.125)] {
            assert_eq!(Scalar::parse(&s.to_text()).unwrap(), s);
        }
    }

    fn small_poly() -> impl Strategy<Value = Poly> {
        prop::collection::vec(-4i128..=4, 1..4).prop_map(Poly::from_coeffs)
    }

    fn ratfunc() -> impl Strategy<Value = RatFunc> {
        (small_poly(), small_poly())
            .prop_filter("nonzero denominator", |(_, b)| !b.is_zero())
            .prop_map(|(a, b)| RatFunc::new(a, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn prop_generic_field_axioms(a in ratfunc(), b in ratfunc(), c in ratfunc()) {
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.add(&b), b.add(&a));
            if !Ring::is_zero(&a) {
                prop_assert_eq!(a.mul(&a.inv().unwrap()), RatFunc::one());
            }
        }

        #[test]
        fn prop_special_field_axioms(ell in 1u32..=6, a in prop::collection::vec(-5i64..=5, 3), b in prop::collection::vec(-5i64..=5, 3)) {
            let mk = |v: &[i64]| {
                let k = special_field(ell).degree();
                let coords = v.iter().take(k).map(|&x| num_rational::BigRational::from_integer(x.into())).collect();
                SpecialElem::from_coords(ell, coords)
            };
            let (x, y) = (mk(&a), mk(&b));
            prop_assert_eq!(x.mul(&y), y.mul(&x));
            prop_assert!((x.mul(&y).to_f64() - x.to_f64() * y.to_f64()).abs() < 1e-9);
            if !Ring::is_zero(&x) {
                prop_assert_eq!(x.mul(&x.inv().unwrap()), x.one_like());
            }
        }

        #[test]
        fn prop_specialize_commutes(a in ratfunc(), b in ratfunc(), ell in 1u32..=4) {
            let (sa, sb) = (specialize_ratfunc(&a, ell), specialize_ratfunc(&b, ell));
            let prod = a.mul(&b);
            if let (Ok(sa), Ok(sb), Ok(sp)) = (sa, sb, specialize_ratfunc(&prod, ell)) {
                prop_assert_eq!(sa.mul(&sb), sp);
            }
            let sum = a.add(&b);
            if let (Ok(sa), Ok(sb), Ok(ss)) = (specialize_ratfunc(&a, ell), specialize_ratfunc(&b, ell), specialize_ratfunc(&sum, ell)) {
                prop_assert_eq!(sa.add(&sb), ss);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn prop_float_roundtrip(a in ratfunc(), ell in 1u32..=6) {
            if let Ok(s) = specialize_ratfunc(&a, ell) {
                let delta = special_field(ell).delta;
                let direct = a.eval_f64(delta);
                prop_assert!((s.to_f64() - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }
}
