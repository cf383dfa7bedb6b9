//! Closed curves in the annulus: closures of TL elements as polynomials in the
//! essential ring R, the annular ideal generated by p_{ℓ+1}, and the β
//! combinations of ring powers.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modular::{s_entry, SConvention};
use crate::scalar::{Backend, Field, Ring, Scalar};
use crate::tl::{jones_wenzl, TlDiagram, TlMorphism};

/// Σ c_k R^k with trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct RPolynomial {
    coeffs: Vec<Scalar>,
}

impl RPolynomial {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        RPolynomial { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// c · R^k
    pub fn monomial(c: Scalar, k: usize) -> Self {
        let mut v = vec![c.zero_like(); k + 1];
        v[k] = c;
        RPolynomial::new(v)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            v.push(match (self.coeffs.get(i), other.coeffs.get(i)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            });
        }
        RPolynomial::new(v)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        RPolynomial::new(self.coeffs.iter().map(|x| x.mul(c)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return RPolynomial::zero();
        }
        let z = self.coeffs[0].zero_like();
        let mut v = vec![z; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                v[i + j] = v[i + j].add(&a.mul(b));
            }
        }
        RPolynomial::new(v)
    }

    /// Remainder modulo a nonzero polynomial (exact backends).
    pub fn rem(&self, m: &Self) -> Self {
        let dm = m.degree().expect("nonzero modulus");
        let lead_inv = m.coeffs[dm].inv().expect("nonzero leading coefficient");
        let mut r = self.coeffs.clone();
        while r.len() > dm && !r.is_empty() {
            let top = r.len() - 1;
            let c = r[top].mul(&lead_inv);
            if !c.is_zero() {
                for (j, mj) in m.coeffs.iter().enumerate() {
                    r[top - dm + j] = r[top - dm + j].sub(&c.mul(mj));
                }
            }
            r.pop();
            while r.last().is_some_and(|x| x.is_zero()) {
                r.pop();
            }
        }
        RPolynomial::new(r)
    }

    pub fn monic(&self) -> Self {
        match self.coeffs.last() {
            None => self.clone(),
            Some(l) => self.scale(&l.inv().expect("nonzero")),
        }
    }

    /// Monic gcd by Euclid's algorithm.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = x.zero_like();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64()).collect()
    }

    /// Real parts of the roots via companion-matrix eigenvalues, ascending,
    /// plus the largest imaginary part seen.
    pub fn float_roots(&self) -> (Vec<f64>, f64) {
        float_roots(&self.to_f64())
    }
}

pub fn float_roots(c: &[f64]) -> (Vec<f64>, f64) {
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return (Vec::new(), 0.0);
    }
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let ev = comp.complex_eigenvalues();
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    let im = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    re.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (re, im)
}

/// Closure data of a single diagram: (contractible loops, essential loops),
/// and the net seam crossing of every traced loop.
pub fn closure_loops(dg: &TlDiagram) -> Result<(usize, usize, Vec<i32>)> {
    if dg.m() != dg.n() {
        return Err(Error::SignatureMismatch(format!("annular closure of Hom({},{})", dg.m(), dg.n())));
    }
    let n = dg.n();
    let mut seen = vec![false; 2 * n];
    let (mut trivial, mut essential) = (0, 0);
    let mut windings = Vec::new();
    for s in 0..2 * n {
        if seen[s] {
            continue;
        }
        let mut winding = 0i32;
        let mut cur = s;
        loop {
            seen[cur] = true;
            let q = dg.partner(cur);
            seen[q] = true;
            // Closure strand from q: bottom k goes around to top k (+1), top to bottom (−1).
            let next = if q < n {
                winding -= 1;
                q + n
            } else {
                winding += 1;
                q - n
            };
            if next == s {
                break;
            }
            cur = next;
        }
        windings.push(winding);
        if winding == 0 {
            trivial += 1;
        } else {
            essential += 1;
        }
    }
    Ok((trivial, essential, windings))
}

/// Closure of a square morphism into the annulus.
pub fn annular_closure(a: &TlMorphism<Scalar>, d: &Scalar) -> Result<RPolynomial> {
    let mut acc = RPolynomial::zero();
    for (dg, c) in a.terms() {
        let (t, e, _) = closure_loops(dg)?;
        acc = acc.add(&RPolynomial::monomial(c.mul(&d.pow(t as u32)), e));
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
pub struct AnnularIdeal {
    pub ell: u32,
    pub generator: RPolynomial,
    pub grade_cap: usize,
    pub closures_used: usize,
}

/// Ideal in the closed-curve algebra generated by closures of
/// x∘(p_{ℓ+1}⊗1_k)∘y. By conjugation invariance of the closure these are the
/// closures of (p_{ℓ+1}⊗1_k)∘z for z in TL_{ℓ+1+k}.
pub fn annular_ideal(ell: u32, grade_cap: usize) -> Result<AnnularIdeal> {
    let k0 = ell as usize + 1;
    if grade_cap < k0 {
        return Err(Error::IndexOutOfRange(format!("grade cap {grade_cap} below {k0}")));
    }
    let backend = Backend::Special(ell);
    let d = backend.d();
    let one = backend.one();
    let p = jones_wenzl(k0, backend)?;
    let mut generator = RPolynomial::zero();
    let mut used = 0;
    for nn in k0..=grade_cap {
        let pk = p.tensor(&TlMorphism::identity(nn - k0, &one));
        for z in TlDiagram::enumerate(nn, nn) {
            let x = pk.compose(&TlMorphism::from_diagram(z, one.clone()), &d)?;
            let c = annular_closure(&x, &d)?;
            used += 1;
            if !c.is_zero() {
                generator = generator.gcd(&c);
            }
        }
    }
    Ok(AnnularIdeal { ell, generator, grade_cap, closures_used: used })
}

/// −(A^{2p+2} + A^{−2p−2}) with A = i·e^{iπ/(2ℓ+4)}.
pub fn ring_eigenvalue(ell: u32, p: usize) -> Complex<f64> {
    let a = Complex::new(0.0, 1.0) * Complex::from_polar(1.0, std::f64::consts::PI / (2.0 * ell as f64 + 4.0));
    let e = 2 * p as i32 + 2;
    -(a.powi(e) + a.powi(-e))
}

/// β_n = Σ_{x=0}^{⌊(ℓ+2)/2⌋} S_{2n,2x} R^x as float coefficients (unreduced).
pub fn beta_raw(n: usize, ell: u32, conv: SConvention) -> Result<Vec<f64>> {
    let top = (ell as usize + 2) / 2;
    if n > top {
        return Err(Error::IndexOutOfRange(format!("β index {n} exceeds {top}")));
    }
    Ok((0..=top).map(|x| s_entry(ell, 2 * n, 2 * x, conv)).collect())
}

fn poly_mul_f(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut v = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            v[i + j] += x * y;
        }
    }
    v
}

/// Remainder modulo a monic float polynomial, padded to its degree.
fn poly_rem_f(a: &[f64], m: &[f64]) -> Vec<f64> {
    let dm = m.len() - 1;
    let mut r = a.to_vec();
    while r.len() > dm {
        let top = r.len() - 1;
        let c = r[top] / m[dm];
        for (j, mj) in m.iter().enumerate() {
            r[top - dm + j] -= c * mj;
        }
        r.pop();
    }
    r.resize(dm, 0.0);
    r
}

/// β_n reduced modulo the ideal generator.
pub fn beta_projector(n: usize, ell: u32, conv: SConvention, generator: &RPolynomial) -> Result<Vec<f64>> {
    let raw = beta_raw(n, ell, conv)?;
    Ok(poly_rem_f(&raw, &generator.monic().to_f64()))
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaReport {
    pub convention: String,
    pub betas: Vec<Vec<f64>>,
    /// Largest |β_n β_m| (n ≠ m) in the quotient, relative to the β norms.
    pub max_cross_product: f64,
    /// Per n: fitted scalar c with β_n² ≈ c β_n, and the relative residual.
    pub idempotent_scalars: Vec<f64>,
    pub idempotent_residuals: Vec<f64>,
    pub span_rank: usize,
    pub quotient_dim: usize,
    pub orthogonal: bool,
    pub idempotent_up_to_scalar: bool,
    pub spans: bool,
    pub passes: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Test the β family in the quotient by `generator` for one convention.
pub fn beta_check(ell: u32, conv: SConvention, generator: &RPolynomial, tol: f64) -> Result<BetaReport> {
    let m = generator.monic().to_f64();
    let q = m.len() - 1;
    let top = (ell as usize + 2) / 2;
    let betas: Vec<Vec<f64>> = (0..=top).map(|n| beta_projector(n, ell, conv, generator)).collect::<Result<_>>()?;
    let scale = betas.iter().map(|b| norm(b)).fold(0.0, f64::max).max(1e-300);
    let mut max_cross: f64 = 0.0;
    for i in 0..betas.len() {
        for j in 0..betas.len() {
            if i != j {
                let pr = poly_rem_f(&poly_mul_f(&betas[i], &betas[j]), &m);
                max_cross = max_cross.max(norm(&pr) / (scale * scale));
            }
        }
    }
    let mut scalars = Vec::new();
    let mut residuals = Vec::new();
    let mut idem = true;
    for b in &betas {
        let sq = poly_rem_f(&poly_mul_f(b, b), &m);
        let bb: f64 = b.iter().map(|x| x * x).sum();
        if bb <= (tol * scale).powi(2) {
            scalars.push(0.0);
            residuals.push(f64::INFINITY);
            idem = false;
            continue;
        }
        let c = sq.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / bb;
        let res: Vec<f64> = sq.iter().zip(b).map(|(x, y)| x - c * y).collect();
        let rel = norm(&res) / (scale * scale);
        scalars.push(c);
        residuals.push(rel);
        if rel > tol || c.abs() <= tol {
            idem = false;
        }
    }
    let mat = DMatrix::from_fn(betas.len(), q, |i, j| betas[i][j]);
    let sv = mat.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let span_rank = sv.iter().filter(|&&s| s > tol * smax.max(1e-300)).count();
    let orthogonal = max_cross <= tol;
    let spans = span_rank == q;
    Ok(BetaReport {
        convention: conv.name().into(),
        betas,
        max_cross_product: max_cross,
        idempotent_scalars: scalars,
        idempotent_residuals: residuals,
        span_rank,
        quotient_dim: q,
        orthogonal,
        idempotent_up_to_scalar: idem,
        spans,
        passes: orthogonal && idem && spans,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnularReport {
    pub ell: u32,
    pub grade_cap: usize,
    pub generator: Vec<String>,
    pub generator_f64: Vec<f64>,
    pub roots: Vec<f64>,
    pub family: Vec<f64>,
    pub roots_match_family: bool,
    /// Same family with A = e^{iπ/(2ℓ+4)}; diagnostic only.
    pub family_real_a: Vec<f64>,
    pub roots_match_family_real_a: bool,
    pub beta: Vec<BetaReport>,
    pub selected_convention: Option<String>,
}

/// Compare generator roots with −(A^{2p+2}+A^{−2p−2}), p = 0..deg−1.
pub fn family_values(ell: u32, count: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..count).map(|p| ring_eigenvalue(ell, p).re).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn family_values_real_a(ell: u32, count: usize) -> Vec<f64> {
    let t = std::f64::consts::PI / (ell as f64 + 2.0);
    let mut v: Vec<f64> = (0..count).map(|p| -2.0 * (t * (p as f64 + 1.0)).cos()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn same_values(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
}

pub fn annular_report(ell: u32, grade_cap: usize) -> Result<AnnularReport> {
    let ideal = annular_ideal(ell, grade_cap)?;
    let g = &ideal.generator;
    let (roots, _) = g.float_roots();
    let family = family_values(ell, roots.len());
    let roots_match_family = same_values(&roots, &family);
    let family_real_a = family_values_real_a(ell, roots.len());
    let roots_match_family_real_a = same_values(&roots, &family_real_a);
    let mut beta = Vec::new();
    for conv in [SConvention::Shifted, SConvention::Unshifted] {
        beta.push(beta_check(ell, conv, g, 1e-9)?);
    }
    let selected_convention = beta.iter().find(|b| b.passes).map(|b| b.convention.clone());
    Ok(AnnularReport {
        ell,
        grade_cap,
        generator: g.coeffs().iter().map(|c| c.to_text()).collect(),
        generator_f64: g.to_f64(),
        roots,
        family,
        roots_match_family,
        family_real_a,
        roots_match_family_real_a,
        beta,
        selected_convention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(k: usize, c: i128) -> RPolynomial {
        RPolynomial::monomial(Backend::Generic.from_int(c), k)
    }

    #[test]
    fn test_closure_examples() {
        let b = Backend::Generic;
        let (d, one) = (b.d(), b.one());
        assert_eq!(annular_closure(&TlMorphism::identity(2, &one), &d).unwrap(), r(2, 1));
        assert_eq!(annular_closure(&TlMorphism::u(2, 1, &one), &d).unwrap(), RPolynomial::monomial(d.clone(), 0));
        let p2 = jones_wenzl(2, b).unwrap();
        assert_eq!(annular_closure(&p2, &d).unwrap(), r(2, 1).add(&r(0, -1)));
    }

    #[test]
    fn test_windings_are_embedded() {
        for n in 1..=6 {
            for dg in TlDiagram::enumerate(n, n) {
                let (_, _, w) = closure_loops(&dg).unwrap();
                assert!(w.iter().all(|x| x.abs() <= 1));
            }
        }
    }

    #[test]
    fn test_ideal_examples() {
        let i1 = annular_ideal(1, 3).unwrap();
        let target = RPolynomial::new(vec![Backend::Special(1).from_int(-1), Backend::Special(1).zero(), Backend::Special(1).one()]);
        assert!(target.rem(&i1.generator).is_zero());
        let i2 = annular_ideal(2, 4).unwrap();
        assert!(i2.generator.degree().unwrap() <= 3);
        for ell in 1..=3 {
            let g = annular_ideal(ell, ell as usize + 2).unwrap().generator;
            assert!(g.eval(&Backend::Special(ell).d()).is_zero());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_closure_is_conjugation_invariant(n in 1usize..=4, i in 0usize..100, j in 0usize..100) {
            let b = Backend::Generic;
            let (d, one) = (b.d(), b.one());
            let basis = TlDiagram::enumerate(n, n);
            let x = TlMorphism::from_diagram(basis[i % basis.len()].clone(), one.clone());
            let y = TlMorphism::from_diagram(basis[j % basis.len()].clone(), one.clone());
            prop_assert_eq!(annular_closure(&x.compose(&y, &d).unwrap(), &d).unwrap(),
                            annular_closure(&y.compose(&x, &d).unwrap(), &d).unwrap());
        }

        #[test]
        fn prop_closure_rectangular_cyclic(i in 0usize..100, j in 0usize..100) {
            // closure(x∘y) = closure(y∘x) for x ∈ Hom(4,2), y ∈ Hom(2,4).
            let b = Backend::Generic;
            let (d, one) = (b.d(), b.one());
            let xs = TlDiagram::enumerate(4, 2);
            let ys = TlDiagram::enumerate(2, 4);
            let x = TlMorphism::from_diagram(xs[i % xs.len()].clone(), one.clone());
            let y = TlMorphism::from_diagram(ys[j % ys.len()].clone(), one.clone());
            prop_assert_eq!(annular_closure(&x.compose(&y, &d).unwrap(), &d).unwrap(),
                            annular_closure(&y.compose(&x, &d).unwrap(), &d).unwrap());
        }
    }
}
