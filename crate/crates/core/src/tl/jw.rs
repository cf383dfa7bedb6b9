//! Jones-Wenzl projectors via the Wenzl recursion.
//!
//! Projectors are stored fraction-free as `numer / denom` with a polynomial
//! numerator morphism, which keeps the recursion in integer polynomial
//! arithmetic. Scalar views for each backend are derived on demand.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::diagram::TlDiagram;
use super::morphism::TlMorphism;
use crate::error::{Error, Result};
use crate::scalar::{quantum_integer_poly, specialize_ratfunc, Backend, Poly, RatFunc, Scalar};

/// p_k = numer / denom.
#[derive(Debug, Clone)]
pub struct JwProjector {
    pub k: usize,
    pub numer: TlMorphism<Poly>,
    pub denom: Poly,
}

impl JwProjector {
    /// Coefficient of a diagram as a reduced rational function.
    pub fn coeff(&self, d: &TlDiagram) -> RatFunc {
        match self.numer.coeff(d) {
            Some(c) => RatFunc::new(c.clone(), self.denom.clone()),
            None => RatFunc::zero(),
        }
    }

    /// Checks p∘p = p, U_i∘p = p∘U_i = 0, and Tr(p) = [k+1], exactly.
    pub fn verify(&self) -> Result<()> {
        let d = Poly::d();
        let one = Poly::one();
        let k = self.k;
        let sq = self.numer.compose(&self.numer, &d)?;
        if sq != self.numer.scale(&self.denom) {
            return Err(Error::InvariantViolation(format!("p_{k} is not idempotent")));
        }
        for i in 1..k {
            let u = TlMorphism::u(k, i, &one);
            if !u.compose(&self.numer, &d)?.is_zero() || !self.numer.compose(&u, &d)?.is_zero() {
                return Err(Error::InvariantViolation(format!("U_{i} does not annihilate p_{k}")));
            }
        }
        let tr = self.numer.trace(&d)?;
        if tr != self.denom.mul(&quantum_integer_poly(k as i64 + 1)) {
            return Err(Error::InvariantViolation(format!("Tr(p_{k}) differs from [{}]", k + 1)));
        }
        if self.numer.coeff(&TlDiagram::identity(k)) != Some(&self.denom) {
            return Err(Error::InvariantViolation(format!("identity coefficient of p_{k} is not 1")));
        }
        Ok(())
    }
}

fn next_projector(p: &JwProjector) -> JwProjector {
    let k = p.k;
    let d = Poly::d();
    let one = Poly::one();
    let id1 = TlMorphism::identity(1, &one);
    let pk1 = p.numer.tensor(&id1);
    let u = TlMorphism::u(k + 1, k, &one);
    let sandwich = pk1
        .compose(&u, &d)
        .and_then(|x| x.compose(&pk1, &d))
        .expect("signatures agree");
    let qk = quantum_integer_poly(k as i64);
    let qk1 = quantum_integer_poly(k as i64 + 1);
    let numer = pk1
        .scale(&qk1.mul(&p.denom))
        .sub(&sandwich.scale(&qk))
        .expect("signatures agree");
    let mut denom = qk1.mul(&p.denom).mul(&p.denom);
    let mut g = denom.clone();
    for c in numer.terms().values() {
        if g.is_one() {
            break;
        }
        g = g.gcd(c);
    }
    let numer = if g.is_one() || g.is_zero() {
        numer
    } else {
        denom = denom.div_exact(&g).expect("gcd divides");
        numer.map_coeffs(|c| c.div_exact(&g).expect("gcd divides"))
    };
    let (numer, denom) = if denom.leading() < 0 { (numer.neg(), denom.neg()) } else { (numer, denom) };
    JwProjector { k: k + 1, numer, denom }
}

fn cache() -> &'static RwLock<Vec<Arc<JwProjector>>> {
    static CACHE: OnceLock<RwLock<Vec<Arc<JwProjector>>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let one = Poly::one();
        RwLock::new(vec![Arc::new(JwProjector { k: 1, numer: TlMorphism::identity(1, &one), denom: one })])
    })
}

/// Exact generic projector p_k (k ≥ 1), memoized.
pub fn jones_wenzl_exact(k: usize) -> Arc<JwProjector> {
    assert!(k >= 1, "Jones-Wenzl projectors start at k = 1");
    if let Some(p) = cache().read().unwrap().get(k - 1) {
        return p.clone();
    }
    let mut w = cache().write().unwrap();
    while w.len() < k {
        let next = next_projector(w.last().unwrap());
        w.push(Arc::new(next));
    }
    w[k - 1].clone()
}

fn special_cache() -> &'static RwLock<HashMap<(usize, u32), Arc<TlMorphism<Scalar>>>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, u32), Arc<TlMorphism<Scalar>>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// p_k as a Scalar morphism in the requested backend.
pub fn jones_wenzl(k: usize, backend: Backend) -> Result<TlMorphism<Scalar>> {
    let p = jones_wenzl_exact(k);
    match backend {
        Backend::Generic => Ok(p.numer.map_coeffs(|c| Scalar::Generic(RatFunc::new(c.clone(), p.denom.clone())))),
        Backend::Special(ell) => {
            if let Some(x) = special_cache().read().unwrap().get(&(k, ell)) {
                return Ok((**x).clone());
            }
            let x = p
                .numer
                .try_map_coeffs(|c| specialize_ratfunc(&RatFunc::new(c.clone(), p.denom.clone()), ell).map(Scalar::Special))?;
            special_cache().write().unwrap().insert((k, ell), Arc::new(x.clone()));
            Ok(x)
        }
        Backend::Float(_) => p.numer.try_map_coeffs(|c| Scalar::Generic(RatFunc::new(c.clone(), p.denom.clone())).convert(backend)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Ring;

    fn g(s: &str) -> Scalar {
        Scalar::Generic(RatFunc::parse(s).unwrap())
    }

    #[test]
    fn test_small_projectors() {
        let one = g("1");
        assert_eq!(jones_wenzl(1, Backend::Generic).unwrap(), TlMorphism::identity(1, &one));
        let p2 = TlMorphism::identity(2, &one).sub(&TlMorphism::u(2, 1, &one).scale(&g("1/d"))).unwrap();
        assert_eq!(jones_wenzl(2, Backend::Generic).unwrap(), p2);
    }

    #[test]
    fn test_projector_properties_small() {
        for k in 1..=5 {
            jones_wenzl_exact(k).verify().unwrap();
        }
    }

    #[test]
    fn test_trace_vanishes_at_special_values() {
        for ell in 1..=3u32 {
            let p = jones_wenzl(ell as usize + 1, Backend::Special(ell)).unwrap();
            let tr = p.trace(&Backend::Special(ell).d()).unwrap();
            assert!(tr.is_zero());
        }
    }

    #[test]
    fn test_pole_beyond_level() {
        // p_{ℓ+2} divides by [ℓ+2], which vanishes at level ℓ.
        assert!(matches!(jones_wenzl(3, Backend::Special(1)), Err(Error::PoleAtSpecialValue { .. })));
    }
}
