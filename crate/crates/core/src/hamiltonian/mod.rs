//! Constraint-row form of the loop Hamiltonians and their ground spaces.
//!
//! Every Hamiltonian here is a positive sum of rank-one projectors, so its
//! ground space is the common null space of the projectors' defining vectors.
//! A [`ConstraintSystem`] stores those vectors as sparse rows over an indexed
//! list of spin configurations.

mod kernel;
mod pauli;
mod skein;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Cell, LatticeKind, Model, MoveKind, SurfaceLattice};
use crate::linalg;
use crate::scalar::{Backend, Field, Ring, Scalar};

pub use kernel::{kernel_dense, kernel_propagate, ExactKernel, FloatKernel, SparseVec, DENSE_STATE_CAP};
pub use pauli::{pauli_expand_check, PauliCheck, PauliDisplay};
pub use skein::{
    code_space_probe, compile_skein_instances, joint_kernel, CodeSpaceProbe, JointKernelReport, SkeinInstances,
    SkeinWindow, Trichotomy,
};

/// Largest bond/plaque count for which the full state space is indexed.
pub const MAX_ENUMERATED_SITES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RowTag {
    /// Isotopy term of the plaque model.
    G,
    /// Loop-birth term of the plaque model.
    H,
    Box,
    DualBox,
    RingExchange,
    Skein,
}

#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    backend: Backend,
    site_count: usize,
    /// Sorted configurations.
    states: Vec<u64>,
    full: bool,
    coeffs: Vec<Scalar>,
    row_ptr: Vec<usize>,
    term_state: Vec<u32>,
    term_coeff: Vec<u16>,
    tags: Vec<RowTag>,
}

impl ConstraintSystem {
    /// Empty system over all 2^sites configurations.
    pub fn full(site_count: usize, backend: Backend) -> Result<Self> {
        if site_count > MAX_ENUMERATED_SITES {
            return Err(Error::StateSpaceTooLarge { states: 1usize << site_count.min(62), cap: 1 << MAX_ENUMERATED_SITES });
        }
        Ok(ConstraintSystem {
            backend,
            site_count,
            states: (0..1u64 << site_count).collect(),
            full: true,
            coeffs: Vec::new(),
            row_ptr: vec![0],
            term_state: Vec::new(),
            term_coeff: Vec::new(),
            tags: Vec::new(),
        })
    }

    /// Empty system over an explicit configuration list.
    pub fn over_states(site_count: usize, mut states: Vec<u64>, backend: Backend) -> Self {
        states.sort_unstable();
        states.dedup();
        let full = states.len() == 1usize << site_count && states.iter().enumerate().all(|(i, &s)| s == i as u64);
        ConstraintSystem {
            backend,
            site_count,
            states,
            full,
            coeffs: Vec::new(),
            row_ptr: vec![0],
            term_state: Vec::new(),
            term_coeff: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn index_of(&self, s: u64) -> Option<u32> {
        if self.full {
            return ((s as usize) < self.states.len()).then_some(s as u32);
        }
        self.states.binary_search(&s).ok().map(|i| i as u32)
    }

    pub fn row_count(&self) -> usize {
        self.tags.len()
    }

    pub fn coeff_table(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn intern(&mut self, c: &Scalar) -> u16 {
        if let Some(i) = self.coeffs.iter().position(|x| x == c) {
            return i as u16;
        }
        assert!(self.coeffs.len() < u16::MAX as usize, "coefficient table overflow");
        self.coeffs.push(c.clone());
        (self.coeffs.len() - 1) as u16
    }

    /// Appends a row; terms are (configuration, coefficient id).
    pub fn push_row_ids(&mut self, tag: RowTag, terms: &[(u64, u16)]) -> Result<()> {
        for &(s, c) in terms {
            let i = self.index_of(s).ok_or_else(|| Error::IndexOutOfRange(format!("configuration {s:x} is not indexed")))?;
            self.term_state.push(i);
            self.term_coeff.push(c);
        }
        self.row_ptr.push(self.term_state.len());
        self.tags.push(tag);
        Ok(())
    }

    pub fn push_row(&mut self, tag: RowTag, terms: &[(u64, Scalar)]) -> Result<()> {
        let ids: Vec<(u64, u16)> = terms.iter().map(|(s, c)| (*s, self.intern(c))).collect();
        self.push_row_ids(tag, &ids)
    }

    /// Terms of row `r` as (state index, coefficient id).
    pub fn row(&self, r: usize) -> impl Iterator<Item = (u32, u16)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.term_state[a..b].iter().copied().zip(self.term_coeff[a..b].iter().copied())
    }

    pub fn row_len(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn tag(&self, r: usize) -> RowTag {
        self.tags[r]
    }

    pub fn rows_by_tag(&self) -> BTreeMap<RowTag, usize> {
        let mut m = BTreeMap::new();
        for &t in &self.tags {
            *m.entry(t).or_insert(0) += 1;
        }
        m
    }

    /// Row · v, exactly, for a vector given on state indices.
    pub fn apply_row(&self, r: usize, value: impl Fn(u32) -> Option<Scalar>) -> Scalar {
        let mut acc = self.backend.zero();
        for (i, c) in self.row(r) {
            if let Some(v) = value(i) {
                acc = acc.add(&self.coeffs[c as usize].mul(&v));
            }
        }
        acc
    }

    /// Appends every row of `other` (same states and backend).
    pub fn extend(&mut self, other: &ConstraintSystem) -> Result<()> {
        if other.states != self.states || other.backend != self.backend {
            return Err(Error::SignatureMismatch("constraint systems index different states or backends".into()));
        }
        let map: Vec<u16> = other.coeffs.iter().map(|c| self.intern(c)).collect();
        for r in 0..other.row_count() {
            for (i, c) in other.row(r) {
                self.term_state.push(i);
                self.term_coeff.push(map[c as usize]);
            }
            self.row_ptr.push(self.term_state.len());
            self.tags.push(other.tags[r]);
        }
        Ok(())
    }
}

fn model_system(lat: &SurfaceLattice, model: Model, backend: Backend) -> Result<ConstraintSystem> {
    let mut cs = ConstraintSystem::full(lat.site_count(), backend)?;
    let one = cs.intern(&backend.one());
    let minus_one = cs.intern(&backend.from_int(-1));
    let inv_d = backend.d().inv().ok_or_else(|| Error::ConfigInvalid("d = 0 has no loop-birth rows".into()))?;
    let minus_inv_d = cs.intern(&inv_d.neg());
    let n = 1u64 << lat.site_count();
    // Rows are emitted from the configuration that lacks the extra loop, and
    // once per unordered pair for ratio-1 moves.
    let per_state: Vec<Vec<(RowTag, u64, u64, u16)>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let moves = lat.local_moves(model, s).expect("model checked by caller");
            moves
                .into_iter()
                .filter_map(|m| {
                    let tag = match (model, m.cell, m.kind) {
                        (Model::H0, _, MoveKind::Isotopy) if s < m.target => RowTag::G,
                        (Model::H0, _, MoveKind::LoopBirth) => RowTag::H,
                        (Model::HPrime, Cell::Face(_), MoveKind::LoopBirth) => RowTag::Box,
                        (Model::HPrime, Cell::Vertex(_), MoveKind::LoopBirth) => RowTag::DualBox,
                        (Model::HDoublePrime, _, MoveKind::RingExchange) if s < m.target => RowTag::RingExchange,
                        _ => return None,
                    };
                    let c = if m.kind == MoveKind::LoopBirth { minus_inv_d } else { minus_one };
                    Some((tag, s, m.target, c))
                })
                .collect()
        })
        .collect();
    for (tag, s, t, c) in per_state.into_iter().flatten() {
        cs.push_row_ids(tag, &[(s, one), (t, c)])?;
    }
    Ok(cs)
}

fn require(lat: &SurfaceLattice, plaque: bool, what: &str) -> Result<()> {
    if lat.is_plaque_model() != plaque {
        return Err(Error::ConfigInvalid(format!("{what} needs a {} lattice", if plaque { "plaque-spin" } else { "bond-spin" })));
    }
    Ok(())
}

/// Isotopy (g) and loop-birth (h) rows of the plaque model, κ = 1.
pub fn build_h0(lat: &SurfaceLattice, backend: Backend) -> Result<ConstraintSystem> {
    require(lat, true, "the plaque model")?;
    model_system(lat, Model::H0, backend)
}

/// Box and dual-box rows of the bond model.
pub fn build_hprime(lat: &SurfaceLattice, backend: Backend) -> Result<ConstraintSystem> {
    require(lat, false, "the box/dual-box model")?;
    model_system(lat, Model::HPrime, backend)
}

/// Ring-exchange rows, cyclic shifts around cells and vertices.
pub fn build_ring_exchange(lat: &SurfaceLattice, backend: Backend) -> Result<ConstraintSystem> {
    require(lat, false, "ring exchange")?;
    model_system(lat, Model::HDoublePrime, backend)
}

pub fn build_model(lat: &SurfaceLattice, model: Model, backend: Backend) -> Result<ConstraintSystem> {
    match model {
        Model::H0 => build_h0(lat, backend),
        Model::HPrime => build_hprime(lat, backend),
        Model::HDoublePrime => build_ring_exchange(lat, backend),
    }
}

/// Number of Hamiltonian terms (projectors, before tensoring with the
/// remaining sites) per tag. Computed from cell degrees, so it works on
/// lattices far too large to enumerate.
pub fn term_counts(lat: &SurfaceLattice, model: Model) -> BTreeMap<RowTag, usize> {
    let mut m = BTreeMap::new();
    match model {
        Model::H0 => {
            for c in 0..lat.vertex_count() {
                let k = lat.vertex_neighbors(c).len();
                // One contiguous run of 1..k−1 wall edges: k·(k−1) patterns.
                *m.entry(RowTag::G).or_insert(0) += k * (k - 1);
                *m.entry(RowTag::H).or_insert(0) += 2;
            }
        }
        Model::HPrime | Model::HDoublePrime => {
            let (ft, vt) = if model == Model::HPrime { (RowTag::Box, RowTag::DualBox) } else { (RowTag::RingExchange, RowTag::RingExchange) };
            for f in lat.interior_faces() {
                *m.entry(ft).or_insert(0) += lat.face_edges(f).len();
            }
            for v in lat.interior_vertices() {
                *m.entry(vt).or_insert(0) += lat.vertex_edges(v).len();
            }
        }
    }
    m
}

/// Does every row annihilate the vector exactly?
pub fn annihilates(cs: &ConstraintSystem, v: &SparseVec<Scalar>) -> bool {
    let mut dense: HashMap<u32, &Scalar> = HashMap::with_capacity(v.idx.len());
    for (i, x) in v.idx.iter().zip(&v.val) {
        dense.insert(*i, x);
    }
    (0..cs.row_count()).into_par_iter().all(|r| {
        if !cs.row(r).any(|(i, _)| dense.contains_key(&i)) {
            return true;
        }
        cs.apply_row(r, |i| dense.get(&i).map(|x| (*x).clone())).is_zero()
    })
}

/// Exact check that every kernel vector of `small` lies in the null space
/// of `large`'s rows (both over the same state list).
pub fn containment_check(small: &ExactKernel, large: &ConstraintSystem) -> bool {
    small.vectors.iter().all(|v| annihilates(large, v))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    /// ⟨θ₀|H|θ₀⟩ for θ₀ ∝ Σ (−1)^{#−} |s⟩.
    pub signed: String,
    pub signed_f64: f64,
    /// Same with all amplitudes +1.
    pub symmetric: String,
    pub symmetric_f64: f64,
    pub rows: usize,
}

/// Expectation of the sum of (unnormalized) row projectors in the uniform
/// superpositions, θ normalized over all 2^sites configurations.
pub fn uniform_state_energy(cs: &ConstraintSystem) -> Result<EnergyReport> {
    if cs.site_count() > MAX_ENUMERATED_SITES {
        return Err(Error::StateSpaceTooLarge { states: cs.state_count(), cap: 1 << MAX_ENUMERATED_SITES });
    }
    // Rows are grouped by (coefficient id, sign) pattern; each group
    // contributes count · (Σ c·sign)².
    let mut groups: HashMap<Vec<(u16, bool)>, usize> = HashMap::new();
    for r in 0..cs.row_count() {
        let mut key: Vec<(u16, bool)> =
            cs.row(r).map(|(i, c)| (c, (cs.site_count() - cs.state(i as usize).count_ones() as usize) % 2 == 1)).collect();
        key.sort_unstable();
        *groups.entry(key).or_insert(0) += 1;
    }
    let b = cs.backend();
    let mut signed = b.zero();
    let mut symmetric = b.zero();
    for (key, count) in groups {
        let mut a = b.zero();
        let mut s = b.zero();
        for (c, odd) in key {
            let x = &cs.coeff_table()[c as usize];
            a = if odd { a.sub(x) } else { a.add(x) };
            s = s.add(x);
        }
        let n = b.from_int(count as i128);
        signed = signed.add(&n.mul(&a.mul(&a)));
        symmetric = symmetric.add(&n.mul(&s.mul(&s)));
    }
    let norm = b.from_int(1i128 << cs.site_count()).inv().expect("nonzero");
    let signed = signed.mul(&norm);
    let symmetric = symmetric.mul(&norm);
    Ok(EnergyReport {
        signed_f64: signed.to_f64(),
        symmetric_f64: symmetric.to_f64(),
        signed: signed.to_text(),
        symmetric: symmetric.to_text(),
        rows: cs.row_count(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SwapSplit {
    pub plus: usize,
    pub minus: usize,
    /// The involution maps the kernel into itself.
    pub preserves_kernel: bool,
}

/// Splits an exact kernel into ±1 eigenspaces of the global swap.
pub fn swap_split(lat: &SurfaceLattice, cs: &ConstraintSystem, kernel: &ExactKernel) -> Result<SwapSplit> {
    let n = kernel.vectors.len();
    let b = cs.backend();
    let zero = b.zero();
    let mut owner: HashMap<u32, (usize, &Scalar)> = HashMap::new();
    for (k, v) in kernel.vectors.iter().enumerate() {
        for (i, x) in v.idx.iter().zip(&v.val) {
            owner.insert(*i, (k, x));
        }
    }
    // Column k of P: coordinates of swap(v_k). Vectors have disjoint
    // supports, so each image block is read off at one support point.
    let mut p = vec![vec![zero.clone(); n]; n];
    let mut preserves = true;
    for (k, v) in kernel.vectors.iter().enumerate() {
        let mut seen: Vec<Option<Scalar>> = vec![None; n];
        for (i, x) in v.idx.iter().zip(&v.val) {
            let t = lat.swap_symmetry(cs.state(*i as usize));
            let Some(j) = cs.index_of(t) else {
                preserves = false;
                continue;
            };
            match owner.get(&j) {
                Some(&(c, y)) => {
                    let ratio = x.div(y).expect("support values are nonzero");
                    match &seen[c] {
                        Some(r) if *r != ratio => preserves = false,
                        Some(_) => {}
                        None => seen[c] = Some(ratio),
                    }
                }
                None => preserves = false,
            }
        }
        for (c, r) in seen.into_iter().enumerate() {
            if let Some(r) = r {
                p[c][k] = r;
            }
        }
    }
    let eig = |sign: i128| {
        let m: Vec<Vec<Scalar>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { p[i][j].sub(&b.from_int(sign)) } else { p[i][j].clone() }).collect())
            .collect();
        n - linalg::rank(&m)
    };
    Ok(SwapSplit { plus: eig(1), minus: eig(-1), preserves_kernel: preserves })
}

/// Kernel dimensions of a model on w×w square tori, w = 2..=w_max.
pub fn torus_kernel_dimensions(model: Model, backend: Backend, w_max: usize) -> Result<Vec<(usize, usize)>> {
    (2..=w_max)
        .map(|w| {
            let lat = SurfaceLattice::new(crate::lattice::LatticeSpec { kind: LatticeKind::SquareTorus, w, h: w })?;
            let cs = build_model(&lat, model, backend)?;
            Ok((w, kernel_propagate(&cs)?.dim()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{explore_component, LatticeSpec, DEFAULT_COMPONENT_CAP};

    fn torus(w: usize, h: usize) -> SurfaceLattice {
        SurfaceLattice::new(LatticeSpec::square_torus(w, h)).unwrap()
    }

    #[test]
    fn test_term_counts() {
        let big = torus(10, 10);
        assert_eq!(term_counts(&big, Model::HPrime)[&RowTag::Box], 400);
        let small = torus(2, 2);
        let t = term_counts(&small, Model::HPrime);
        assert_eq!((t[&RowTag::Box], t[&RowTag::DualBox]), (16, 16));
        let tri = SurfaceLattice::new(LatticeSpec::triangulated_torus(3, 3)).unwrap();
        let t = term_counts(&tri, Model::H0);
        assert_eq!((t[&RowTag::G], t[&RowTag::H]), (270, 18));
    }

    #[test]
    fn test_row_counts_match_terms() {
        // Each term is tensored with every assignment of the other sites.
        let lat = torus(2, 2);
        let cs = build_hprime(&lat, Backend::Special(2)).unwrap();
        let by = cs.rows_by_tag();
        assert_eq!(by[&RowTag::Box], 16 << 4);
        assert_eq!(by[&RowTag::DualBox], 16 << 4);
        let tri = SurfaceLattice::new(LatticeSpec::triangulated_torus(3, 3)).unwrap();
        let cs = build_h0(&tri, Backend::Special(2)).unwrap();
        let by = cs.rows_by_tag();
        assert_eq!(by[&RowTag::G], 270 << 2);
        assert_eq!(by[&RowTag::H], 18 << 2);
    }

    #[test]
    fn test_box_relation_on_kernel() {
        // d·a(one marked −) = a(all +) on every box row.
        let lat = torus(2, 2);
        let b = Backend::Special(2);
        let cs = build_hprime(&lat, b).unwrap();
        let k = kernel_propagate(&cs).unwrap();
        let mut amp: HashMap<u32, Scalar> = HashMap::new();
        for v in &k.vectors {
            for (i, x) in v.idx.iter().zip(&v.val) {
                amp.insert(*i, x.clone());
            }
        }
        for r in 0..cs.row_count() {
            let t: Vec<(u32, u16)> = cs.row(r).collect();
            let (s, l) = (t[0].0, t[1].0);
            assert_eq!(b.d().mul(&amp[&s]), amp[&l]);
        }
    }

    #[test]
    fn test_energy_closed_form() {
        for ell in [1u32, 2, 3] {
            let b = Backend::Special(ell);
            let lat = torus(2, 2);
            let e = uniform_state_energy(&build_hprime(&lat, b).unwrap()).unwrap();
            let d = b.d_f64().unwrap();
            assert!((e.signed_f64 - 2.0 * (1.0 + 1.0 / d).powi(2)).abs() < 1e-12);
            assert!((e.symmetric_f64 - 2.0 * (1.0 - 1.0 / d).powi(2)).abs() < 1e-12);
            if ell == 1 {
                assert!(Scalar::parse(&e.symmetric).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn test_swap_split_2x2() {
        let lat = torus(2, 2);
        let cs = build_hprime(&lat, Backend::Special(2)).unwrap();
        let k = kernel_propagate(&cs).unwrap();
        let s = swap_split(&lat, &cs, &k).unwrap();
        assert!(s.preserves_kernel);
        assert_eq!(s.plus + s.minus, k.dim());
        // Orbit count of the swap on components is the + dimension.
        let mut orbits = 0;
        let mut done = vec![false; k.components.len()];
        for (c, comp) in k.components.iter().enumerate() {
            if done[c] {
                continue;
            }
            done[c] = true;
            orbits += 1;
            let img = lat.swap_symmetry(cs.state(comp[0] as usize));
            let j = k.component_of[cs.index_of(img).unwrap() as usize] as usize;
            done[j] = true;
        }
        assert_eq!(s.plus, orbits);
    }

    #[test]
    fn test_ring_exchange_components_are_kernel() {
        let lat = torus(2, 2);
        let cs = build_ring_exchange(&lat, Backend::Special(3)).unwrap();
        let k = kernel_propagate(&cs).unwrap();
        assert_eq!(k.dim(), 40);
        for v in &k.vectors {
            assert!(v.val.iter().all(|x| x.is_one()));
        }
        for st in lat.staircases().unwrap() {
            let c = explore_component(&lat, Model::HDoublePrime, st, DEFAULT_COMPONENT_CAP).unwrap();
            assert!(k.components.iter().any(|comp| comp.len() == c.len()));
        }
    }

    #[test]
    fn test_h0_kernel_counts_components() {
        let tri = SurfaceLattice::new(LatticeSpec::triangulated_torus(3, 3)).unwrap();
        let cs = build_h0(&tri, Backend::Special(3)).unwrap();
        let k = kernel_propagate(&cs).unwrap();
        let comps = crate::lattice::all_components(&tri, Model::H0, 20).unwrap();
        assert_eq!(k.dim(), comps.len());
        assert_eq!(kernel_dense(&cs).unwrap().dim(), k.dim());
    }
}
