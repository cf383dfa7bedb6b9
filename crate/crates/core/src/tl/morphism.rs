//! Formal linear combinations of diagrams with a fixed signature.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::diagram::TlDiagram;
use crate::error::{Error, Result};
use crate::scalar::{Backend, Ring, Scalar};

#[derive(Clone, PartialEq, Debug)]
pub struct TlMorphism<R: Ring = Scalar> {
    m: usize,
    n: usize,
    terms: BTreeMap<TlDiagram, R>,
}

fn sig_err(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::SignatureMismatch(format!("{what}: ({},{}) vs ({},{})", a.0, a.1, b.0, b.1))
}

impl<R: Ring> TlMorphism<R> {
    pub fn zero(m: usize, n: usize) -> Self {
        TlMorphism { m, n, terms: BTreeMap::new() }
    }

    pub fn from_diagram(d: TlDiagram, c: R) -> Self {
        let mut x = TlMorphism::zero(d.m(), d.n());
        x.add_term(d, c);
        x
    }

    pub fn identity(n: usize, one: &R) -> Self {
        TlMorphism::from_diagram(TlDiagram::identity(n), one.one_like())
    }

    pub fn u(n: usize, i: usize, one: &R) -> Self {
        TlMorphism::from_diagram(TlDiagram::u(n, i), one.one_like())
    }

    pub fn cap(one: &R) -> Self {
        TlMorphism::from_diagram(TlDiagram::cap(), one.one_like())
    }

    pub fn cup(one: &R) -> Self {
        TlMorphism::from_diagram(TlDiagram::cup(), one.one_like())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn terms(&self) -> &BTreeMap<TlDiagram, R> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, d: &TlDiagram) -> Option<&R> {
        self.terms.get(d)
    }

    /// Add `c · d`, dropping the term if it cancels.
    pub fn add_term(&mut self, d: TlDiagram, c: R) {
        assert_eq!((d.m(), d.n()), (self.m, self.n), "diagram signature mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(d) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.signature() != other.signature() {
            return Err(sig_err("add", self.signature(), other.signature()));
        }
        let mut out = self.clone();
        for (d, c) in &other.terms {
            out.add_term(d.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.neg())
    }

    pub fn scale(&self, s: &R) -> Self {
        if s.is_zero() {
            return TlMorphism::zero(self.m, self.n);
        }
        let mut out = TlMorphism::zero(self.m, self.n);
        for (d, c) in &self.terms {
            out.add_term(d.clone(), c.mul(s));
        }
        out
    }

    /// `self ∘ b` with `b` on top; each closed loop contributes a factor `d`.
    pub fn compose(&self, b: &Self, d: &R) -> Result<Self> {
        if b.n != self.m {
            return Err(sig_err("compose", self.signature(), b.signature()));
        }
        let mut powers = vec![d.one_like()];
        for k in 1..=self.m / 2 + 1 {
            powers.push(powers[k - 1].mul(d));
        }
        let mut acc: BTreeMap<TlDiagram, R> = BTreeMap::new();
        for (da, ca) in &self.terms {
            for (db, cb) in &b.terms {
                let (dd, loops) = da.compose_unchecked(db);
                let c = ca.mul(cb).mul(&powers[loops]);
                match acc.get_mut(&dd) {
                    Some(x) => *x = x.add(&c),
                    None => {
                        acc.insert(dd, c);
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(TlMorphism { m: b.m, n: self.n, terms: acc })
    }

    pub fn tensor(&self, b: &Self) -> Self {
        let mut out = TlMorphism::zero(self.m + b.m, self.n + b.n);
        for (da, ca) in &self.terms {
            for (db, cb) in &b.terms {
                out.add_term(da.tensor(db), ca.mul(cb));
            }
        }
        out
    }

    /// Reflection; coefficients are real so no conjugation is needed.
    pub fn bar(&self) -> Self {
        TlMorphism {
            m: self.n,
            n: self.m,
            terms: self.terms.iter().map(|(d, c)| (d.bar(), c.clone())).collect(),
        }
    }

    pub fn trace(&self, d: &R) -> Result<R> {
        if self.m != self.n {
            return Err(Error::SignatureMismatch(format!("trace of Hom({},{})", self.m, self.n)));
        }
        let mut acc = d.zero_like();
        for (dg, c) in &self.terms {
            let loops = dg.trace_loops()?;
            acc = acc.add(&c.mul(&d.pow(loops as u32)));
        }
        Ok(acc)
    }

    pub fn map_coeffs<S: Ring>(&self, f: impl Fn(&R) -> S) -> TlMorphism<S> {
        let mut out = TlMorphism::zero(self.m, self.n);
        for (d, c) in &self.terms {
            out.add_term(d.clone(), f(c));
        }
        out
    }

    pub fn try_map_coeffs<S: Ring>(&self, f: impl Fn(&R) -> Result<S>) -> Result<TlMorphism<S>> {
        let mut out = TlMorphism::zero(self.m, self.n);
        for (d, c) in &self.terms {
            out.add_term(d.clone(), f(c)?);
        }
        Ok(out)
    }

    /// Coordinates over `basis` (all diagrams of the signature, in order).
    pub fn coords(&self, basis: &[TlDiagram], zero: &R) -> Vec<R> {
        basis.iter().map(|d| self.terms.get(d).cloned().unwrap_or_else(|| zero.clone())).collect()
    }

    pub fn from_coords(m: usize, n: usize, basis: &[TlDiagram], coords: &[R]) -> Self {
        let mut out = TlMorphism::zero(m, n);
        for (d, c) in basis.iter().zip(coords) {
            out.add_term(d.clone(), c.clone());
        }
        out
    }
}

impl TlMorphism<Scalar> {
    pub fn convert(&self, backend: Backend) -> Result<TlMorphism<Scalar>> {
        self.try_map_coeffs(|c| c.convert(backend))
    }

    /// JSON form: signature plus `(pairing, scalar text)` terms.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(d, c)| json!({"pairing": d.pairing(), "coeff": c.to_text()}))
            .collect();
        json!({"m": self.m, "n": self.n, "terms": terms})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |s: &str| Error::ConfigInvalid(format!("morphism JSON: {s}"));
        let m = v["m"].as_u64().ok_or_else(|| bad("missing m"))? as usize;
        let n = v["n"].as_u64().ok_or_else(|| bad("missing n"))? as usize;
        let mut out = TlMorphism::zero(m, n);
        for t in v["terms"].as_array().ok_or_else(|| bad("missing terms"))? {
            let pairing: Vec<u8> = t["pairing"]
                .as_array()
                .ok_or_else(|| bad("missing pairing"))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as u8).ok_or_else(|| bad("pairing entry")))
                .collect::<Result<_>>()?;
            let d = TlDiagram::new(m, n, pairing)?;
            let c = Scalar::parse(t["coeff"].as_str().ok_or_else(|| bad("missing coeff"))?).map_err(|e| bad(&e))?;
            out.add_term(d, c);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::RatFunc;

    fn g(s: &str) -> Scalar {
        Scalar::Generic(RatFunc::parse(s).unwrap())
    }

    #[test]
    fn test_u_squared_is_d_u() {
        let one = g("1");
        let d = g("d");
        let u = TlMorphism::u(2, 1, &one);
        assert_eq!(u.compose(&u, &d).unwrap(), u.scale(&d));
        let (u1, u2) = (TlMorphism::u(3, 1, &one), TlMorphism::u(3, 2, &one));
        assert_eq!(u1.compose(&u2, &d).unwrap().compose(&u1, &d).unwrap(), u1);
        let loop_ = TlMorphism::cup(&one).compose(&TlMorphism::cap(&one), &d).unwrap();
        assert_eq!(loop_, TlMorphism::identity(0, &one).scale(&d));
    }

    #[test]
    fn test_signature_mismatch() {
        let one = g("1");
        let a = TlMorphism::identity(2, &one);
        let b = TlMorphism::identity(3, &one);
        assert!(matches!(a.compose(&b, &g("d")), Err(Error::SignatureMismatch(_))));
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn test_traces() {
        let one = g("1");
        let d = g("d");
        assert_eq!(TlMorphism::identity(2, &one).trace(&d).unwrap(), g("d^2"));
        assert_eq!(TlMorphism::u(3, 1, &one).trace(&d).unwrap(), g("d^2"));
        let p2 = TlMorphism::identity(2, &one).sub(&TlMorphism::u(2, 1, &one).scale(&g("1/d"))).unwrap();
        assert_eq!(p2.trace(&d).unwrap(), g("d^2 - 1"));
    }

    #[test]
    fn test_bar_of_scaled_diagram() {
        let x = TlMorphism::cap(&g("1")).scale(&g("d + 2"));
        assert_eq!(x.bar(), TlMorphism::cup(&g("1")).scale(&g("d + 2")));
    }

    #[test]
    fn test_json_roundtrip() {
        let one = g("1");
        let p2 = TlMorphism::identity(2, &one).sub(&TlMorphism::u(2, 1, &one).scale(&g("1/d"))).unwrap();
        let back = TlMorphism::from_json(&p2.to_json()).unwrap();
        assert_eq!(back, p2);
    }
}
