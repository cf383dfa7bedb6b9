//! Markov-trace pairing on Hom-spaces and its radical at special values.

use nalgebra::DMatrix;
use serde::Serialize;

use super::diagram::TlDiagram;
use super::jw::jones_wenzl;
use super::morphism::TlMorphism;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{Backend, Field, Ring, Scalar};

fn arcs(k: usize, top: bool) -> TlDiagram {
    let unit = if top { TlDiagram::cup() } else { TlDiagram::cap() };
    (0..k).fold(TlDiagram::identity(0), |acc, _| acc.tensor(&unit))
}

/// Square embedding of a rectangular diagram: Hom(m,n) → Hom(max, max) by
/// tensoring arcs onto the shorter side.
pub fn embed_diagram(d: &TlDiagram) -> TlDiagram {
    let (m, n) = (d.m(), d.n());
    if m >= n {
        d.tensor(&arcs((m - n) / 2, false))
    } else {
        d.tensor(&arcs((n - m) / 2, true))
    }
}

pub fn embed<R: Ring>(a: &TlMorphism<R>) -> TlMorphism<R> {
    let mut out = TlMorphism::zero(a.m().max(a.n()), a.m().max(a.n()));
    for (d, c) in a.terms() {
        out.add_term(embed_diagram(d), c.clone());
    }
    out
}

/// Left inverse of [`embed`] back to Hom(m, n), including the d^{-k} factor.
pub fn embed_left_inverse(x: &TlMorphism<Scalar>, m: usize, n: usize, d: &Scalar) -> Result<TlMorphism<Scalar>> {
    let s = m.max(n);
    if x.signature() != (s, s) || (m + n) % 2 == 1 {
        return Err(Error::SignatureMismatch(format!("left inverse to ({m},{n}) from ({},{})", x.m(), x.n())));
    }
    let one = d.one_like();
    let k = (m.max(n) - m.min(n)) / 2;
    let factor = d.pow(k as u32).inv().expect("d is nonzero");
    let y = if m >= n {
        let left = TlMorphism::from_diagram(TlDiagram::identity(n).tensor(&arcs(k, true)), one);
        left.compose(x, d)?
    } else {
        let right = TlMorphism::from_diagram(TlDiagram::identity(m).tensor(&arcs(k, false)), one);
        x.compose(&right, d)?
    };
    Ok(y.scale(&factor))
}

/// Loop counts of Tr(E(D_i) ∘ bar(E(D_j))) over the diagram basis of Hom(m, n).
pub fn gram_loops(m: usize, n: usize) -> Vec<Vec<usize>> {
    let basis: Vec<TlDiagram> = TlDiagram::enumerate(m, n).iter().map(embed_diagram).collect();
    let bars: Vec<TlDiagram> = basis.iter().map(|d| d.bar()).collect();
    basis
        .iter()
        .map(|di| {
            bars.iter()
                .map(|bj| {
                    let (c, loops) = di.compose_unchecked(bj);
                    loops + c.trace_loops().expect("square")
                })
                .collect()
        })
        .collect()
}

/// Gram matrix in a backend; entries are powers of d.
pub fn gram_matrix(m: usize, n: usize, backend: Backend) -> Vec<Vec<Scalar>> {
    let loops = gram_loops(m, n);
    let maxl = loops.iter().flatten().copied().max().unwrap_or(0);
    let d = backend.d();
    let mut pw = vec![backend.one()];
    for k in 1..=maxl {
        pw.push(pw[k - 1].mul(&d));
    }
    loops.iter().map(|row| row.iter().map(|&l| pw[l].clone()).collect()).collect()
}

pub fn gram_matrix_f64(m: usize, n: usize, d: f64) -> DMatrix<f64> {
    let loops = gram_loops(m, n);
    let k = loops.len();
    DMatrix::from_fn(k, k, |i, j| d.powi(loops[i][j] as i32))
}

/// Exact basis of the Gram null space of TL_n at level ℓ.
pub fn radical_basis(n: usize, ell: u32) -> Vec<TlMorphism<Scalar>> {
    let backend = Backend::Special(ell);
    let g = gram_matrix(n, n, backend);
    let basis = TlDiagram::enumerate(n, n);
    linalg::null_space(&g, basis.len(), &backend.zero())
        .into_iter()
        .map(|v| TlMorphism::from_coords(n, n, &basis, &v))
        .collect()
}

/// Exact corank of the grade-n Gram matrix at level ℓ.
pub fn gram_corank(n: usize, ell: u32) -> usize {
    let g = gram_matrix(n, n, Backend::Special(ell));
    g.len() - linalg::rank(&g)
}

/// Does `x` lie in the span of `basis` (all in Hom(n,n))?
pub fn in_span(x: &TlMorphism<Scalar>, basis: &[TlMorphism<Scalar>], zero: &Scalar) -> bool {
    let n = x.m();
    let diagrams = TlDiagram::enumerate(n, x.n());
    let mut span = linalg::EchelonSpan::new(diagrams.len());
    for b in basis {
        span.insert(&b.coords(&diagrams, zero));
    }
    span.contains(&x.coords(&diagrams, zero))
}

/// Is p_{ℓ+1} (specialized) proportional to the single radical vector at grade ℓ+1?
pub fn radical_is_jw(ell: u32) -> Result<bool> {
    let k = ell as usize + 1;
    let rad = radical_basis(k, ell);
    let p = jones_wenzl(k, Backend::Special(ell))?;
    Ok(rad.len() == 1 && in_span(&p, &rad, &Backend::Special(ell).zero()))
}

/// Relative tolerance for calling a Gram eigenvalue zero.
pub const SIGNATURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct GradeSignature {
    pub n: usize,
    pub dim: usize,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub min_eigenvalue: f64,
}

/// Inertia of the grade-n Gram matrix at a float d.
pub fn grade_signature(n: usize, d: f64) -> GradeSignature {
    let ev = linalg::symmetric_eigenvalues(&gram_matrix_f64(n, n, d));
    let scale = ev.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = SIGNATURE_TOL * scale;
    GradeSignature {
        n,
        dim: ev.len(),
        positive: ev.iter().filter(|&&x| x > tol).count(),
        negative: ev.iter().filter(|&&x| x < -tol).count(),
        zero: ev.iter().filter(|&&x| x.abs() <= tol).count(),
        min_eigenvalue: ev.first().copied().unwrap_or(0.0),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SignatureScan {
    pub d: f64,
    pub grades: Vec<GradeSignature>,
    pub nonnegative: bool,
    pub mixed: bool,
}

pub fn signature_scan(d: f64, n_max: usize) -> SignatureScan {
    let grades: Vec<GradeSignature> = (1..=n_max).map(|n| grade_signature(n, d)).collect();
    SignatureScan {
        d,
        nonnegative: grades.iter().all(|g| g.negative == 0),
        mixed: grades.iter().any(|g| g.negative > 0 && g.positive > 0),
        grades,
    }
}

/// Float signature at a special value cross-checked with exact coranks.
#[derive(Debug, Clone, Serialize)]
pub struct SpecialSignature {
    pub ell: u32,
    pub scan: SignatureScan,
    pub exact_coranks: Vec<usize>,
    /// Float zero counts equal the exact coranks at every grade.
    pub float_agrees: bool,
    /// Corank 0 below grade ℓ+1 and exactly 1 at ℓ+1.
    pub corank_pattern: bool,
    /// The grade-(ℓ+1) kernel is spanned by p_{ℓ+1}.
    pub kernel_is_jw: bool,
}

pub fn special_signature(ell: u32, n_max: usize) -> Result<SpecialSignature> {
    let d = Backend::Special(ell).d_f64().expect("special value");
    let scan = signature_scan(d, n_max);
    let exact_coranks: Vec<usize> = (1..=n_max).map(|n| gram_corank(n, ell)).collect();
    let float_agrees = scan.grades.iter().zip(&exact_coranks).all(|(g, &c)| g.zero == c);
    let k = ell as usize + 1;
    let corank_pattern =
        exact_coranks.iter().enumerate().all(|(i, &c)| if i + 1 < k { c == 0 } else if i + 1 == k { c == 1 } else { true });
    let kernel_is_jw = k <= n_max && radical_is_jw(ell)?;
    Ok(SpecialSignature { ell, scan, exact_coranks, float_agrees, corank_pattern, kernel_is_jw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::RatFunc;

    #[test]
    fn test_tl2_gram() {
        let g = gram_matrix(2, 2, Backend::Generic);
        let r = |s: &str| Scalar::Generic(RatFunc::parse(s).unwrap());
        assert_eq!(g, vec![vec![r("d^2"), r("d")], vec![r("d"), r("d^2")]]);
        let g1 = gram_matrix_f64(2, 2, 1.0);
        assert!(g1.determinant().abs() < 1e-12);
        let g2 = gram_matrix(2, 2, Backend::Special(2));
        assert_eq!(linalg::rank(&g2), 2);
    }

    #[test]
    fn test_radical_examples() {
        assert!(radical_basis(2, 2).is_empty());
        assert_eq!(radical_basis(3, 2).len(), 1);
        assert!(radical_is_jw(2).unwrap());
        let r = radical_basis(2, 1);
        assert_eq!(r.len(), 1);
        let one = Backend::Special(1).one();
        let target = TlMorphism::identity(2, &one).sub(&TlMorphism::u(2, 1, &one)).unwrap();
        assert!(in_span(&target, &r, &Backend::Special(1).zero()));
    }

    #[test]
    fn test_embedding_left_inverse() {
        let b = Backend::Generic;
        let d = b.d();
        for (m, n) in [(4, 2), (1, 3), (0, 4), (3, 3)] {
            for dg in TlDiagram::enumerate(m, n) {
                let a = TlMorphism::from_diagram(dg, b.one());
                let back = embed_left_inverse(&embed(&a), m, n, &d).unwrap();
                assert_eq!(back, a);
            }
        }
    }

    #[test]
    fn test_rectangular_gram_is_scaled_square_pairing() {
        // Tr(E(a)∘bar(E(b))) = d^k Tr(a∘bar(b)) with k = |m-n|/2.
        let loops = gram_loops(4, 2);
        let basis = TlDiagram::enumerate(4, 2);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let (c, l) = a.compose(&b.bar()).unwrap();
                assert_eq!(loops[i][j], l + c.trace_loops().unwrap() + 1);
            }
        }
    }

    #[test]
    fn test_signature_scan() {
        for d in [2.0, 2.5, 3.0] {
            assert!(signature_scan(d, 5).nonnegative);
        }
        for d in [0.5, 1.3] {
            assert!(signature_scan(d, 5).mixed);
        }
        for ell in 1..=3 {
            let s = special_signature(ell, 5).unwrap();
            assert!(s.scan.nonnegative && s.float_agrees && s.corank_pattern && s.kernel_is_jw, "{s:?}");
        }
    }
}
