//! Two independent null-space solvers for constraint systems.
//!
//! `kernel_propagate` is exact and only handles two-term rows: it walks each
//! connected block, pushing amplitude ratios along a spanning tree and
//! checking every other row. `kernel_dense` is floating point and makes no
//! assumption on row shape: SVD for small blocks, sparse elimination with
//! threshold pivoting for large ones.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::ConstraintSystem;
use crate::error::{Error, Result};
use crate::lattice::UnionFind;
use crate::linalg;
use crate::scalar::{Field, Ring, Scalar};

pub const DENSE_STATE_CAP: usize = 300_000;
const SVD_BLOCK_LIMIT: usize = 400;
const SVD_REL_TOL: f64 = 1e-8;
const ELIM_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseVec<T> {
    pub idx: Vec<u32>,
    pub val: Vec<T>,
}

impl<T> SparseVec<T> {
    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ExactKernel {
    /// One vector per consistent block, normalized to 1 at the block's
    /// smallest state.
    pub vectors: Vec<SparseVec<Scalar>>,
    /// Connected blocks of the row graph (state indices, ascending).
    pub components: Vec<Vec<u32>>,
    pub component_of: Vec<u32>,
    /// Blocks forced to zero by one-term rows.
    pub zero_components: usize,
}

impl ExactKernel {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// The kernel vector whose support contains state index `i`.
    pub fn vector_through(&self, i: u32) -> Option<&SparseVec<Scalar>> {
        self.vectors.iter().find(|v| v.idx.binary_search(&i).is_ok())
    }
}

#[derive(Debug, Clone)]
pub struct FloatKernel {
    /// Orthonormal; vectors from different blocks have disjoint supports.
    pub vectors: Vec<SparseVec<f64>>,
    pub blocks: usize,
    pub svd_blocks: usize,
    pub eliminated_blocks: usize,
    /// max over rows and vectors of |row·v| / ‖row‖.
    pub max_residual: f64,
}

impl FloatKernel {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

/// Blocks of the row graph: states joined by any common row.
fn blocks(cs: &ConstraintSystem) -> (Vec<Vec<u32>>, Vec<u32>) {
    let n = cs.state_count();
    let mut uf = UnionFind::new(n);
    for r in 0..cs.row_count() {
        let mut it = cs.row(r);
        if let Some((a, _)) = it.next() {
            for (b, _) in it {
                uf.union(a as usize, b as usize);
            }
        }
    }
    let mut id = vec![u32::MAX; n];
    let mut out: Vec<Vec<u32>> = Vec::new();
    for i in 0..n {
        let root = uf.find(i);
        if id[root] == u32::MAX {
            id[root] = out.len() as u32;
            out.push(Vec::new());
        }
        out[id[root] as usize].push(i as u32);
    }
    let mut of = vec![0u32; n];
    for (b, states) in out.iter().enumerate() {
        for &s in states {
            of[s as usize] = b as u32;
        }
    }
    (out, of)
}

/// Rows incident to each state.
fn incidence(cs: &ConstraintSystem) -> Vec<Vec<u32>> {
    let mut inc = vec![Vec::new(); cs.state_count()];
    for r in 0..cs.row_count() {
        let mut last = u32::MAX;
        for (i, _) in cs.row(r) {
            if i != last {
                inc[i as usize].push(r as u32);
                last = i;
            }
        }
    }
    inc
}

/// A ratio ±d^k, or a general field element when the coefficient table is
/// not monomial in d.
#[derive(Clone, PartialEq)]
enum Amp {
    Mono(bool, i32),
    Full(Scalar),
}

struct RatioRules {
    /// (negative, exponent) for each coefficient id when all are monomial.
    mono: Option<Vec<(bool, i32)>>,
    /// d^k distinguishes different k.
    exp_matters: bool,
    d: Scalar,
}

impl RatioRules {
    fn new(cs: &ConstraintSystem) -> Self {
        let b = cs.backend();
        let d = b.d();
        let one = b.one();
        let exp_matters = !d.is_one() && d != one.neg();
        let inv = d.inv();
        let mut mono = Some(Vec::new());
        for c in cs.coeff_table() {
            let mut found = None;
            'search: for k in 0..=12i32 {
                let pk = d.pow(k as u32);
                for (e, p) in [(k, pk.clone()), (-k, inv.clone().map(|i| i.pow(k as u32)).unwrap_or(pk))] {
                    if *c == p {
                        found = Some((false, e));
                        break 'search;
                    }
                    if *c == p.neg() {
                        found = Some((true, e));
                        break 'search;
                    }
                }
            }
            match (found, mono.as_mut()) {
                (Some(f), Some(v)) => v.push(f),
                _ => mono = None,
            }
        }
        RatioRules { mono, exp_matters, d }
    }

    fn one(&self) -> Amp {
        match self.mono {
            Some(_) => Amp::Mono(false, 0),
            None => Amp::Full(self.d.one_like()),
        }
    }

    /// a_t given a_s and the row c_s·a_s + c_t·a_t = 0.
    fn step(&self, cs: &ConstraintSystem, a_s: &Amp, cs_id: u16, ct_id: u16) -> Amp {
        match (a_s, &self.mono) {
            (Amp::Mono(neg, k), Some(m)) => {
                let (n1, e1) = m[cs_id as usize];
                let (n2, e2) = m[ct_id as usize];
                Amp::Mono(!(neg ^ n1 ^ n2), if self.exp_matters { k + e1 - e2 } else { 0 })
            }
            (Amp::Full(x), _) => {
                let c1 = &cs.coeff_table()[cs_id as usize];
                let c2 = &cs.coeff_table()[ct_id as usize];
                Amp::Full(x.mul(c1).div(c2).expect("nonzero coefficient").neg())
            }
            _ => unreachable!("amplitude kinds are uniform"),
        }
    }

    fn value(&self, a: &Amp) -> Scalar {
        match a {
            Amp::Mono(neg, k) => {
                let p = if *k >= 0 { self.d.pow(*k as u32) } else { self.d.inv().expect("nonzero d").pow((-k) as u32) };
                if *neg {
                    p.neg()
                } else {
                    p
                }
            }
            Amp::Full(x) => x.clone(),
        }
    }
}

/// Exact kernel of a system of one- and two-term rows.
pub fn kernel_propagate(cs: &ConstraintSystem) -> Result<ExactKernel> {
    if !cs.backend().is_exact() {
        return Err(Error::ConfigInvalid("exact propagation needs an exact backend".into()));
    }
    if let Some(r) = (0..cs.row_count()).find(|&r| cs.row_len(r) > 2) {
        return Err(Error::ConfigInvalid(format!("row {r} has {} terms; propagation handles two-term rows", cs.row_len(r))));
    }
    let rules = RatioRules::new(cs);
    let inc = incidence(cs);
    let n = cs.state_count();
    let mut amp: Vec<Option<Amp>> = vec![None; n];
    let mut component_of = vec![u32::MAX; n];
    let mut components = Vec::new();
    let mut vectors = Vec::new();
    let mut zero_components = 0;
    for root in 0..n {
        if component_of[root] != u32::MAX {
            continue;
        }
        let cid = components.len() as u32;
        let mut members = vec![root as u32];
        component_of[root] = cid;
        amp[root] = Some(rules.one());
        let mut forced_zero = false;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let a_u = amp[u].clone().expect("visited");
            for &r in &inc[u] {
                let terms: Vec<(u32, u16)> = cs.row(r as usize).collect();
                let (own, other): (Vec<_>, Vec<_>) = terms.iter().partition(|(i, _)| *i as usize == u);
                if other.is_empty() {
                    // One distinct state: the summed coefficient must vanish.
                    let sum = own.iter().fold(cs.backend().zero(), |acc, (_, c)| acc.add(&cs.coeff_table()[*c as usize]));
                    if !sum.is_zero() {
                        forced_zero = true;
                    }
                    continue;
                }
                let (v, cv) = other[0];
                let a_v = rules.step(cs, &a_u, own[0].1, cv);
                match &amp[v as usize] {
                    None => {
                        amp[v as usize] = Some(a_v);
                        component_of[v as usize] = cid;
                        members.push(v);
                        queue.push_back(v as usize);
                    }
                    Some(existing) => {
                        if *existing != a_v && rules.value(existing) != rules.value(&a_v) {
                            return Err(Error::InconsistentCycle { component: cid as usize });
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        if forced_zero {
            zero_components += 1;
        } else {
            let val = members.iter().map(|&i| rules.value(amp[i as usize].as_ref().unwrap())).collect();
            vectors.push(SparseVec { idx: members.clone(), val });
        }
        components.push(members);
    }
    Ok(ExactKernel { vectors, components, component_of, zero_components })
}

fn float_coeffs(cs: &ConstraintSystem) -> Vec<f64> {
    cs.coeff_table().iter().map(|c| c.to_f64()).collect()
}

/// Floating-point kernel, block by block.
pub fn kernel_dense(cs: &ConstraintSystem) -> Result<FloatKernel> {
    if cs.state_count() > DENSE_STATE_CAP {
        return Err(Error::StateSpaceTooLarge { states: cs.state_count(), cap: DENSE_STATE_CAP });
    }
    let coeff = float_coeffs(cs);
    let (blocks, block_of) = blocks(cs);
    let mut block_rows: Vec<Vec<u32>> = vec![Vec::new(); blocks.len()];
    for r in 0..cs.row_count() {
        if let Some((i, _)) = cs.row(r).next() {
            block_rows[block_of[i as usize] as usize].push(r as u32);
        }
    }
    let results: Vec<(Vec<SparseVec<f64>>, bool)> = blocks
        .par_iter()
        .zip(block_rows.par_iter())
        .map(|(states, rows)| {
            if states.len() <= SVD_BLOCK_LIMIT {
                (svd_block(cs, &coeff, states, rows), true)
            } else {
                (eliminate_block(cs, &coeff, states, rows), false)
            }
        })
        .collect();
    let svd_blocks = results.iter().filter(|r| r.1).count();
    let vectors: Vec<SparseVec<f64>> = results.into_iter().flat_map(|r| r.0).collect();
    let max_residual = residual(cs, &coeff, &vectors);
    Ok(FloatKernel { vectors, blocks: blocks.len(), svd_blocks, eliminated_blocks: blocks.len() - svd_blocks, max_residual })
}

fn residual(cs: &ConstraintSystem, coeff: &[f64], vectors: &[SparseVec<f64>]) -> f64 {
    let mut val = vec![0.0f64; cs.state_count()];
    let mut owner = vec![u32::MAX; cs.state_count()];
    let mut worst = 0.0f64;
    for (k, v) in vectors.iter().enumerate() {
        for (i, x) in v.idx.iter().zip(&v.val) {
            val[*i as usize] = *x;
            owner[*i as usize] = k as u32;
        }
    }
    // Vectors in one block share support; a row only sees one block.
    for r in 0..cs.row_count() {
        let norm: f64 = cs.row(r).map(|(_, c)| coeff[c as usize].powi(2)).sum::<f64>().sqrt();
        let mut by_owner: Vec<(u32, f64)> = Vec::new();
        for (i, c) in cs.row(r) {
            let o = owner[i as usize];
            if o == u32::MAX {
                continue;
            }
            match by_owner.iter_mut().find(|(k, _)| *k == o) {
                Some(e) => e.1 += coeff[c as usize] * val[i as usize],
                None => by_owner.push((o, coeff[c as usize] * val[i as usize])),
            }
        }
        for (_, x) in by_owner {
            worst = worst.max(x.abs() / norm.max(f64::MIN_POSITIVE));
        }
    }
    worst
}

fn svd_block(cs: &ConstraintSystem, coeff: &[f64], states: &[u32], rows: &[u32]) -> Vec<SparseVec<f64>> {
    let local = |i: u32| states.binary_search(&i).expect("state in block");
    let mut m = DMatrix::<f64>::zeros(rows.len(), states.len());
    for (k, &r) in rows.iter().enumerate() {
        for (i, c) in cs.row(r as usize) {
            m[(k, local(i))] += coeff[c as usize];
        }
    }
    linalg::svd_null_space(&m, SVD_REL_TOL)
        .into_iter()
        .map(|v| {
            let (idx, val): (Vec<u32>, Vec<f64>) =
                states.iter().zip(v).filter(|(_, x)| x.abs() > 0.0).map(|(&s, x)| (s, x)).unzip();
            SparseVec { idx, val }
        })
        .collect()
}

/// Row echelon form kept as pivot relations x_p = −Σ c_j x_j.
struct Echelon {
    pivot_row: Vec<Option<Vec<(u32, f64)>>>,
    order: Vec<u32>,
}

impl Echelon {
    fn reduce(&self, mut row: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
        let mut scale = row.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
        loop {
            let Some(pos) = row.iter().position(|(j, _)| self.pivot_row[*j as usize].is_some()) else {
                break;
            };
            let (p, a) = row.swap_remove(pos);
            for &(j, c) in self.pivot_row[p as usize].as_ref().unwrap() {
                let x = a * c;
                match row.iter_mut().find(|e| e.0 == j) {
                    Some(e) => e.1 -= x,
                    None => row.push((j, -x)),
                }
                scale = scale.max(x.abs());
            }
            row.retain(|e| e.1.abs() > ELIM_REL_TOL * scale);
        }
        row.retain(|e| e.1.abs() > ELIM_REL_TOL * scale);
        row
    }
}

fn eliminate_block(cs: &ConstraintSystem, coeff: &[f64], states: &[u32], rows: &[u32]) -> Vec<SparseVec<f64>> {
    let local = |i: u32| states.binary_search(&i).expect("state in block") as u32;
    let n = states.len();
    // Breadth-first column order from the smallest state; rows are taken in
    // order of their newest column so that each row tends to introduce one
    // new column, which then becomes its pivot.
    let mut inc: Vec<Vec<u32>> = vec![Vec::new(); n];
    let local_rows: Vec<Vec<(u32, f64)>> = rows
        .iter()
        .map(|&r| {
            let mut v: Vec<(u32, f64)> = Vec::new();
            for (i, c) in cs.row(r as usize) {
                let j = local(i);
                match v.iter_mut().find(|e| e.0 == j) {
                    Some(e) => e.1 += coeff[c as usize],
                    None => v.push((j, coeff[c as usize])),
                }
            }
            v
        })
        .collect();
    for (k, row) in local_rows.iter().enumerate() {
        for &(j, _) in row {
            inc[j as usize].push(k as u32);
        }
    }
    let mut rank = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut queue = VecDeque::from([0u32]);
    rank[0] = 0;
    next += 1;
    while let Some(u) = queue.pop_front() {
        for &k in &inc[u as usize] {
            for &(j, _) in &local_rows[k as usize] {
                if rank[j as usize] == u32::MAX {
                    rank[j as usize] = next;
                    next += 1;
                    queue.push_back(j);
                }
            }
        }
    }
    let mut row_order: Vec<usize> = (0..local_rows.len()).collect();
    row_order.sort_by_key(|&k| local_rows[k].iter().map(|e| rank[e.0 as usize]).max().unwrap_or(0));
    let mut ech = Echelon { pivot_row: vec![None; n], order: Vec::new() };
    for k in row_order {
        let reduced = ech.reduce(local_rows[k].clone());
        if reduced.is_empty() {
            continue;
        }
        let max = reduced.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
        let &(p, a) = reduced
            .iter()
            .filter(|e| e.1.abs() >= 1e-6 * max)
            .max_by_key(|e| rank[e.0 as usize])
            .expect("nonempty row");
        let rel: Vec<(u32, f64)> = reduced.iter().filter(|e| e.0 != p).map(|&(j, c)| (j, c / a)).collect();
        ech.pivot_row[p as usize] = Some(rel);
        ech.order.push(p);
    }
    let free: Vec<u32> = (0..n as u32).filter(|&j| ech.pivot_row[j as usize].is_none()).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(free.len());
    for &f in &free {
        let mut x = vec![0.0f64; n];
        x[f as usize] = 1.0;
        for &p in ech.order.iter().rev() {
            let rel = ech.pivot_row[p as usize].as_ref().unwrap();
            x[p as usize] = -rel.iter().map(|&(j, c)| c * x[j as usize]).sum::<f64>();
        }
        // Modified Gram-Schmidt against earlier vectors of this block.
        for b in &basis {
            let dot: f64 = b.iter().zip(&x).map(|(u, v)| u * v).sum();
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= dot * bi;
            }
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for xi in x.iter_mut() {
            *xi /= norm;
        }
        basis.push(x);
    }
    basis
        .into_iter()
        .map(|x| {
            let (idx, val): (Vec<u32>, Vec<f64>) =
                states.iter().zip(x).filter(|(_, v)| *v != 0.0).map(|(&s, v)| (s, v)).unzip();
            SparseVec { idx, val }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{build_hprime, build_ring_exchange, RowTag};
    use super::*;
    use crate::lattice::{all_components, LatticeSpec, Model, SurfaceLattice};
    use crate::scalar::Backend;

    #[test]
    fn test_propagate_matches_components() {
        let lat = SurfaceLattice::new(LatticeSpec::square_torus(2, 2)).unwrap();
        let comps = all_components(&lat, Model::HPrime, 20).unwrap();
        for ell in [1u32, 2, 3] {
            let cs = build_hprime(&lat, Backend::Special(ell)).unwrap();
            let k = kernel_propagate(&cs).unwrap();
            assert_eq!(k.dim(), comps.len());
            assert_eq!(k.dim(), 10);
            let f = kernel_dense(&cs).unwrap();
            assert_eq!(f.dim(), k.dim());
            assert!(f.max_residual < 1e-9);
        }
    }

    #[test]
    fn test_amplitudes_follow_loop_count() {
        let lat = SurfaceLattice::new(LatticeSpec::square_torus(2, 2)).unwrap();
        let b = Backend::Special(3);
        let cs = build_hprime(&lat, b).unwrap();
        let k = kernel_propagate(&cs).unwrap();
        let d = b.d();
        for v in &k.vectors {
            let base = lat.trivial_loop_count(cs.state(v.idx[0] as usize)) as u32;
            for (i, x) in v.idx.iter().zip(&v.val) {
                let l = lat.trivial_loop_count(cs.state(*i as usize)) as u32;
                assert_eq!(x.mul(&d.pow(base)), d.pow(l));
            }
        }
    }

    #[test]
    fn test_inconsistent_cycle_detected() {
        let b = Backend::Special(2);
        let mut cs = ConstraintSystem::full(2, b).unwrap();
        let one = b.one();
        let m = b.from_int(-1);
        let md = b.d().neg();
        cs.push_row(RowTag::G, &[(0, one.clone()), (1, m.clone())]).unwrap();
        cs.push_row(RowTag::G, &[(1, one.clone()), (2, m.clone())]).unwrap();
        cs.push_row(RowTag::G, &[(2, one), (0, md)]).unwrap();
        assert!(matches!(kernel_propagate(&cs), Err(Error::InconsistentCycle { component: 0 })));
        // The float solver reports the same system as having no kernel there.
        assert_eq!(kernel_dense(&cs).unwrap().dim(), 1);
    }

    #[test]
    fn test_dense_trivial_cases() {
        let b = Backend::Special(2);
        let cs = ConstraintSystem::full(3, b).unwrap();
        assert_eq!(kernel_dense(&cs).unwrap().dim(), 8);
        assert_eq!(kernel_propagate(&cs).unwrap().dim(), 8);
        let mut full = ConstraintSystem::full(2, b).unwrap();
        for s in 0..4u64 {
            full.push_row(RowTag::Skein, &[(s, b.one()), ((s + 1) % 4, b.d())]).unwrap();
        }
        full.push_row(RowTag::Skein, &[(0, b.one()), (1, b.one()), (2, b.one())]).unwrap();
        assert_eq!(kernel_dense(&full).unwrap().dim(), 0);
    }

    #[test]
    fn test_elimination_path_agrees_with_svd() {
        // The 3×3 ring-exchange system has blocks above the SVD limit.
        let lat = SurfaceLattice::new(LatticeSpec::square_torus(3, 3)).unwrap();
        let cs = build_ring_exchange(&lat, Backend::Special(1)).unwrap();
        let f = kernel_dense(&cs).unwrap();
        assert!(f.eliminated_blocks > 0);
        assert_eq!(f.dim(), kernel_propagate(&cs).unwrap().dim());
        assert!(f.max_residual < 1e-9);
    }
}
