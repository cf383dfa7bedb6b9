//! Two-row Young diagrams, Bratteli paths, conditional expectations, and the
//! ideal-uniqueness check at small grade.
//!
//! Public functions take the main-text level ℓ; the root order used for
//! criticality is ℓ + 2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, EchelonSpan};
use crate::scalar::{Backend, Field, Ring, Scalar};
use crate::tl::{gram_matrix, jones_wenzl, radical_basis, TlDiagram, TlMorphism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct YoungDiagram2 {
    pub rows: [usize; 2],
}

impl YoungDiagram2 {
    pub fn new(l1: usize, l2: usize) -> Result<Self> {
        if l2 > l1 {
            return Err(Error::InvariantViolation(format!("[{l1},{l2}] is not a Young diagram")));
        }
        Ok(YoungDiagram2 { rows: [l1, l2] })
    }

    pub fn size(&self) -> usize {
        self.rows[0] + self.rows[1]
    }

    pub fn width(&self) -> usize {
        self.rows[0] - self.rows[1] + 1
    }

    /// All two-row diagrams with `n` boxes.
    pub fn all(n: usize) -> Vec<YoungDiagram2> {
        (0..=n / 2).map(|l2| YoungDiagram2 { rows: [n - l2, l2] }).collect()
    }

    /// Diagrams reachable by adding one box.
    pub fn successors(&self) -> Vec<YoungDiagram2> {
        let [a, b] = self.rows;
        let mut out = vec![YoungDiagram2 { rows: [a + 1, b] }];
        if b < a {
            out.push(YoungDiagram2 { rows: [a, b + 1] });
        }
        out
    }

    /// Diagrams obtained by removing one box.
    pub fn predecessors(&self) -> Vec<YoungDiagram2> {
        let [a, b] = self.rows;
        let mut out = Vec::new();
        if a > b {
            out.push(YoungDiagram2 { rows: [a - 1, b] });
        }
        if b > 0 {
            out.push(YoungDiagram2 { rows: [a, b - 1] });
        }
        out
    }
}

/// A path in the Bratteli diagram starting at the empty diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrattPath(Vec<YoungDiagram2>);

impl BrattPath {
    pub fn new(steps: Vec<YoungDiagram2>) -> Result<Self> {
        if steps.first() != Some(&YoungDiagram2 { rows: [0, 0] }) {
            return Err(Error::InvariantViolation("path must start at the empty diagram".into()));
        }
        for w in steps.windows(2) {
            if !w[0].successors().contains(&w[1]) {
                return Err(Error::InvariantViolation(format!("{:?} → {:?} is not a one-box step", w[0], w[1])));
            }
        }
        Ok(BrattPath(steps))
    }

    pub fn end(&self) -> YoungDiagram2 {
        *self.0.last().unwrap()
    }

    pub fn steps(&self) -> &[YoungDiagram2] {
        &self.0
    }

    /// All paths ending at `lambda`.
    pub fn enumerate(lambda: YoungDiagram2) -> Vec<BrattPath> {
        if lambda.size() == 0 {
            return vec![BrattPath(vec![lambda])];
        }
        let mut out = Vec::new();
        for p in lambda.predecessors() {
            for mut path in BrattPath::enumerate(p) {
                path.0.push(lambda);
                out.push(path);
            }
        }
        out
    }
}

/// f_λ: number of Bratteli paths to λ.
pub fn path_count(lambda: YoungDiagram2) -> u128 {
    let [a, b] = lambda.rows;
    // f[i][j] over diagrams [i, j] with j ≤ i.
    let mut f = vec![vec![0u128; b + 1]; a + 1];
    f[0][0] = 1;
    for i in 0..=a {
        for j in 0..=b.min(i) {
            if i == 0 && j == 0 {
                continue;
            }
            let mut v = 0;
            if i > 0 && i > j {
                v += f[i - 1][j];
            }
            if j > 0 {
                v += f[i][j - 1];
            }
            f[i][j] = v;
        }
    }
    f[a][b]
}

/// Is λ critical for root order `ell_app` (= ℓ + 2)?
pub fn is_critical(lambda: YoungDiagram2, ell_app: usize) -> Result<bool> {
    if ell_app < 3 {
        return Err(Error::IndexOutOfRange(format!("root order {ell_app} must be at least 3")));
    }
    Ok(lambda.width().is_multiple_of(ell_app))
}

/// Smallest number of boxes at which a critical diagram exists for level ℓ.
pub fn first_critical_grade(ell: u32) -> usize {
    let ell_app = ell as usize + 2;
    (0..)
        .find(|&n| YoungDiagram2::all(n).iter().any(|&l| is_critical(l, ell_app).unwrap()))
        .unwrap()
}

/// ε_n: close the last strand of an element of TL_{n+1}.
pub fn conditional_expectation(a: &TlMorphism<Scalar>, d: &Scalar) -> Result<TlMorphism<Scalar>> {
    if a.m() != a.n() || a.m() == 0 {
        return Err(Error::SignatureMismatch(format!("conditional expectation of Hom({},{})", a.m(), a.n())));
    }
    let n = a.m() - 1;
    let one = d.one_like();
    let id_n = TlMorphism::identity(n, &one);
    let top = id_n.tensor(&TlMorphism::cap(&one));
    let bottom = id_n.tensor(&TlMorphism::cup(&one));
    let mid = a.tensor(&TlMorphism::identity(1, &one));
    bottom.compose(&mid.compose(&top, d)?, d)
}

/// Outcome of one Lemma 1.2 instance: ε(f) = γ p with γ = Tr(f)/Tr(p).
#[derive(Debug, Clone)]
pub struct ExpectationCheck {
    pub gamma: Scalar,
    pub trace_preserved: bool,
    pub formula_holds: bool,
}

/// Compress `x ∈ TL_{k+1}` by p⊗1 and check the expectation formula for p.
pub fn check_expectation_formula(p: &TlMorphism<Scalar>, x: &TlMorphism<Scalar>, d: &Scalar) -> Result<ExpectationCheck> {
    let one = d.one_like();
    let pe = p.tensor(&TlMorphism::identity(1, &one));
    let f = pe.compose(&x.compose(&pe, d)?, d)?;
    let e = conditional_expectation(&f, d)?;
    let tr_f = f.trace(d)?;
    let tr_p = p.trace(d)?;
    let trace_preserved = e.trace(d)? == tr_f;
    let gamma = tr_f.div(&tr_p).ok_or_else(|| Error::InvariantViolation("Tr(p) vanishes".into()))?;
    let formula_holds = e == p.scale(&gamma);
    Ok(ExpectationCheck { gamma, trace_preserved, formula_holds })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationSuiteReport {
    pub seed: u64,
    pub samples: usize,
    pub trace_failures: usize,
    pub formula_failures: usize,
}

/// Runs the expectation formula on `samples` random elements x ∈ TL_{k+1}
/// compressed by p_k ⊗ 1 for k ∈ {1, 2, 3}, over the generic backend.
pub fn expectation_suite(samples: usize, seed: u64) -> Result<ExpectationSuiteReport> {
    use rand::{Rng, SeedableRng};
    let b = Backend::Generic;
    let d = b.d();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let projectors: Vec<TlMorphism<Scalar>> = (1..=3).map(|k| jones_wenzl(k, b)).collect::<Result<_>>()?;
    let bases: Vec<Vec<TlDiagram>> = (2..=4).map(|n| TlDiagram::enumerate(n, n)).collect();
    let (mut trace_failures, mut formula_failures) = (0, 0);
    for i in 0..samples {
        let k = i % 3;
        let basis = &bases[k];
        let mut x = TlMorphism::zero(k + 2, k + 2);
        for _ in 0..rng.gen_range(1..=4) {
            let dg = basis[rng.gen_range(0..basis.len())].clone();
            x.add_term(dg, b.from_int(rng.gen_range(-3..=3)));
        }
        let c = check_expectation_formula(&projectors[k], &x, &d)?;
        trace_failures += usize::from(!c.trace_preserved);
        formula_failures += usize::from(!c.formula_holds);
    }
    Ok(ExpectationSuiteReport { seed, samples, trace_failures, formula_failures })
}

/// Basis (as coordinate vectors over the diagram basis of TL_n) of the
/// grade-n part of the two-sided ideal generated by `g ∈ TL_m`.
///
/// Every a∘(g⊗1_k)∘b with m+k = N ≤ n is, up to a power of d, A∘Z_N∘B with
/// A, B ∈ TL_n and Z_N = (g⊗1_{N−m}) ⊗ U^{⊗(n−N)/2}; so the span is the TL_n
/// bimodule generated by the Z_N. Terms with N > n are not enumerated: when
/// `g` is negligible they lie in the radical, so equality of this span with
/// the radical already pins down the full ideal.
pub fn ideal_span(g: &TlMorphism<Scalar>, n: usize, backend: Backend) -> Result<EchelonSpan<Scalar>> {
    if g.m() != g.n() {
        return Err(Error::SignatureMismatch("ideal generator must be square".into()));
    }
    let m = g.m();
    let d = backend.d();
    let one = backend.one();
    let zero = backend.zero();
    let basis = TlDiagram::enumerate(n, n);
    let mut span = EchelonSpan::new(basis.len());
    let u_pair = TlMorphism::u(2, 1, &one);
    let mut frontier: Vec<TlMorphism<Scalar>> = Vec::new();
    let mut nn = m;
    while nn <= n {
        if (n - nn).is_multiple_of(2) {
            let mut z = g.tensor(&TlMorphism::identity(nn - m, &one));
            for _ in 0..(n - nn) / 2 {
                z = z.tensor(&u_pair);
            }
            if span.insert(&z.coords(&basis, &zero)) {
                frontier.push(z);
            }
        }
        nn += 1;
    }
    let gens: Vec<TlMorphism<Scalar>> = (1..n).map(|i| TlMorphism::u(n, i, &one)).collect();
    while let Some(x) = frontier.pop() {
        for u in &gens {
            for y in [u.compose(&x, &d)?, x.compose(u, &d)?] {
                if span.insert(&y.coords(&basis, &zero)) {
                    frontier.push(y);
                }
            }
        }
    }
    Ok(span)
}

#[derive(Debug, Clone, Serialize)]
pub struct GradeReport {
    pub grade: usize,
    pub radical_dim: usize,
    pub ideal_dim: usize,
    pub equal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdealTheoremReport {
    pub ell: u32,
    pub n_max: usize,
    pub grades: Vec<GradeReport>,
}

/// Compare the ideal generated by p_{ℓ+1} with the Gram radical at each grade.
pub fn verify_ideal_theorem(ell: u32, n_max: usize) -> Result<IdealTheoremReport> {
    let backend = Backend::Special(ell);
    let p = jones_wenzl(ell as usize + 1, backend)?;
    let zero = backend.zero();
    let mut grades = Vec::new();
    for n in 0..=n_max {
        let gram = gram_matrix(n, n, backend);
        let radical_dim = gram.len() - linalg::rank(&gram);
        let span = ideal_span(&p, n, backend)?;
        let inside = span
            .basis()
            .iter()
            .all(|v| linalg::mat_vec(&gram, v, &zero).iter().all(|x| x.is_zero()));
        let equal = inside && span.dim() == radical_dim;
        grades.push(GradeReport { grade: n, radical_dim, ideal_dim: span.dim(), equal });
        if !equal {
            return Err(Error::MismatchAtGrade(n));
        }
    }
    Ok(IdealTheoremReport { ell, n_max, grades })
}

/// Are U_i∘x, x∘U_i, x⊗1 and 1⊗x negligible for every radical basis vector x?
pub fn radical_is_stable(n: usize, ell: u32) -> Result<bool> {
    let backend = Backend::Special(ell);
    let d = backend.d();
    let one = backend.one();
    let zero = backend.zero();
    let negligible = |y: &TlMorphism<Scalar>| {
        let k = y.m();
        let g = gram_matrix(k, k, backend);
        let v = y.coords(&TlDiagram::enumerate(k, k), &zero);
        linalg::mat_vec(&g, &v, &zero).iter().all(|x| x.is_zero())
    };
    let id1 = TlMorphism::identity(1, &one);
    for x in radical_basis(n, ell) {
        for i in 1..n {
            let u = TlMorphism::u(n, i, &one);
            if !negligible(&u.compose(&x, &d)?) || !negligible(&x.compose(&u, &d)?) {
                return Ok(false);
            }
        }
        if !negligible(&x.tensor(&id1)) || !negligible(&id1.tensor(&x)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tl::catalan;
    use proptest::prelude::*;

    fn yd(a: usize, b: usize) -> YoungDiagram2 {
        YoungDiagram2::new(a, b).unwrap()
    }

    #[test]
    fn test_path_counts() {
        assert_eq!(path_count(yd(1, 1)), 1);
        assert_eq!(path_count(yd(2, 1)), 2);
        let s: u128 = YoungDiagram2::all(4).iter().map(|&l| path_count(l).pow(2)).sum();
        assert_eq!(s, 14);
        for n in 0..=12 {
            let s: u128 = YoungDiagram2::all(n).iter().map(|&l| path_count(l).pow(2)).sum();
            assert_eq!(s, catalan(n), "grade {n}");
        }
    }

    #[test]
    fn test_bratteli_recursion_and_paths() {
        for n in 1..=10 {
            for mu in YoungDiagram2::all(n) {
                let rec: u128 = mu.predecessors().iter().map(|&l| path_count(l)).sum();
                assert_eq!(path_count(mu), rec);
                assert_eq!(BrattPath::enumerate(mu).len() as u128, path_count(mu));
            }
        }
        assert!(BrattPath::new(vec![yd(0, 0), yd(1, 0), yd(1, 1)]).is_ok());
        assert!(BrattPath::new(vec![yd(0, 0), yd(2, 0)]).is_err());
    }

    #[test]
    fn test_criticality() {
        assert!(is_critical(yd(4, 0), 5).unwrap());
        assert!(!is_critical(yd(2, 0), 4).unwrap());
        for k in 0..6 {
            assert!(!is_critical(yd(k, k), 5).unwrap());
        }
        for ell in 1..=3 {
            assert_eq!(first_critical_grade(ell), ell as usize + 1);
        }
    }

    #[test]
    fn test_conditional_expectation_examples() {
        let b = Backend::Generic;
        let (d, one) = (b.d(), b.one());
        let e = conditional_expectation(&TlMorphism::identity(2, &one), &d).unwrap();
        assert_eq!(e, TlMorphism::identity(1, &one).scale(&d));
        let e = conditional_expectation(&TlMorphism::u(2, 1, &one), &d).unwrap();
        assert_eq!(e, TlMorphism::identity(1, &one));
        let chk = check_expectation_formula(&TlMorphism::identity(1, &one), &TlMorphism::u(2, 1, &one), &d).unwrap();
        assert!(chk.formula_holds && chk.trace_preserved);
        assert_eq!(chk.gamma, one);
    }

    #[test]
    fn test_expectation_suite_small() {
        let r = expectation_suite(12, 5).unwrap();
        assert_eq!((r.trace_failures, r.formula_failures), (0, 0));
    }

    #[test]
    fn test_ideal_span_examples() {
        let b1 = Backend::Special(1);
        let p2 = jones_wenzl(2, b1).unwrap();
        assert_eq!(ideal_span(&p2, 2, b1).unwrap().dim(), 1);
        let b2 = Backend::Special(2);
        let p3 = jones_wenzl(3, b2).unwrap();
        assert_eq!(ideal_span(&p3, 3, b2).unwrap().dim(), 1);
        let one = TlMorphism::identity(1, &b2.one());
        assert_eq!(ideal_span(&one, 1, b2).unwrap().dim(), 1);
    }

    #[test]
    fn test_ideal_theorem_small() {
        let r = verify_ideal_theorem(1, 4).unwrap();
        assert!(r.grades.iter().all(|g| g.equal));
        assert!(radical_is_stable(3, 1).unwrap());
    }

    fn random_tl(k: usize, coeffs: &[i64]) -> TlMorphism<Scalar> {
        let b = Backend::Generic;
        let basis = TlDiagram::enumerate(k, k);
        let cs: Vec<Scalar> = basis.iter().enumerate().map(|(i, _)| b.from_int(coeffs[i % coeffs.len()] as i128)).collect();
        TlMorphism::from_coords(k, k, &basis, &cs)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_expectation_bimodule(n in 1usize..=3, c in prop::collection::vec(-3i64..=3, 1..6),
                                     cx in prop::collection::vec(-2i64..=2, 1..4), cy in prop::collection::vec(-2i64..=2, 1..4)) {
            let b = Backend::Generic;
            let (d, one) = (b.d(), b.one());
            let a = random_tl(n + 1, &c);
            let x = random_tl(n, &cx);
            let y = random_tl(n, &cy);
            let id1 = TlMorphism::identity(1, &one);
            let lhs = conditional_expectation(&x.tensor(&id1).compose(&a.compose(&y.tensor(&id1), &d).unwrap(), &d).unwrap(), &d).unwrap();
            let rhs = x.compose(&conditional_expectation(&a, &d).unwrap().compose(&y, &d).unwrap(), &d).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(conditional_expectation(&a, &d).unwrap().trace(&d).unwrap(), a.trace(&d).unwrap());
        }
    }
}
