//! Lattice instances of the Jones-Wenzl projector p_{ℓ+1} and the joint
//! kernel they cut out of the box/dual-box ground space.
//!
//! Mid-lattice strands are read in a time direction along one lattice axis.
//! Bond midpoints then form a brickwork of TL nodes: a bond parallel to the
//! strands is a U exactly when it is `|−⟩`, a transverse bond is a U exactly
//! when it is `|+⟩`. A window is ℓ+1 adjacent strand slots over a few
//! layers; the nodes just outside the window are pinned to the identity so
//! that the window is a disk crossed by ℓ+1 strands.

use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{build_hprime, kernel_dense, kernel_propagate, ConstraintSystem, RowTag};
use crate::error::{Error, Result};
use crate::lattice::{LatticeKind, SurfaceLattice};
use crate::linalg::{self, EchelonSpan};
use crate::modular;
use crate::scalar::{Backend, Ring, Scalar, SpecialElem};
use crate::tl::{jones_wenzl, TlDiagram};

#[derive(Debug, Clone, Serialize)]
pub struct SkeinWindow {
    /// 0: strands run along +y; 1: strands run along +x.
    pub orientation: u8,
    pub layer: usize,
    pub slot: usize,
    /// Internal node bonds, bottom layer first.
    pub internal: Vec<usize>,
    /// (bond, spin) pins of the neighbouring nodes.
    pub pinned: Vec<(usize, bool)>,
    /// All bonds fixed by the window.
    pub mask: u64,
    /// `|+⟩` bits of each term's pattern inside `mask`, with its coefficient.
    #[serde(skip)]
    pub patterns: Vec<(u64, Scalar)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkeinInstances {
    pub ell: u32,
    pub strands: usize,
    /// Number of node layers per window.
    pub depth: usize,
    pub windows: Vec<SkeinWindow>,
    /// Windows whose row sets coincide with an earlier one (up to sign) are
    /// dropped; this counts them.
    pub duplicate_windows: usize,
    pub terms_per_row: usize,
    pub site_count: usize,
}

/// One TL node: the bond and whether `|+⟩` means U.
#[derive(Debug, Clone, Copy)]
struct Node {
    bond: usize,
    u_is_plus: bool,
}

struct Brickwork<'a> {
    lat: &'a SurfaceLattice,
    orientation: u8,
    slots: usize,
    layers: usize,
}

impl Brickwork<'_> {
    /// Node coupling slots (k, k+1) on layer r; k ≡ r mod 2.
    fn node(&self, r: usize, k: usize) -> Node {
        let r = r % self.layers;
        let k = k % self.slots;
        debug_assert_eq!(r % 2, k % 2);
        let (along, across) = if self.orientation == 0 { ([0, 1], [1, 0]) } else { ([1, 0], [0, 1]) };
        let at = |t: i64, s: i64| if self.orientation == 0 { (s, t) } else { (t, s) };
        if r.is_multiple_of(2) {
            let (x, y) = at((r / 2) as i64, (k / 2) as i64);
            Node { bond: self.lat.bond_at(x, y, across), u_is_plus: true }
        } else {
            let (x, y) = at(((r - 1) / 2) as i64, (k.div_ceil(2)) as i64);
            Node { bond: self.lat.bond_at(x, y, along), u_is_plus: false }
        }
    }
}

/// Layers needed so that every TL_n diagram has a loop-free realization,
/// with the chosen assignment (bit per internal node, bottom first) for each
/// diagram.
fn minimal_patterns(n: usize, first_parity: usize) -> (usize, BTreeMap<TlDiagram, Vec<bool>>) {
    let total = TlDiagram::enumerate(n, n).len();
    for depth in 1..=2 * n + 2 {
        // Generator index (1-based) of each internal node, bottom first.
        let gens: Vec<usize> = (0..depth)
            .flat_map(|l| (0..n.saturating_sub(1)).filter(move |k| k % 2 == (first_parity + l) % 2).map(|k| k + 1))
            .collect();
        let mut best: BTreeMap<TlDiagram, Vec<bool>> = BTreeMap::new();
        for bits in 0..1u64 << gens.len() {
            let mut acc = TlDiagram::identity(n);
            let mut loops = 0;
            for (i, &g) in gens.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    let (c, l) = acc.compose(&TlDiagram::u(n, g)).expect("same size");
                    acc = c;
                    loops += l;
                }
            }
            if loops > 0 {
                continue;
            }
            let assign: Vec<bool> = (0..gens.len()).map(|i| bits >> i & 1 == 1).collect();
            let ucount = assign.iter().filter(|&&b| b).count();
            match best.get(&acc) {
                Some(prev) if (prev.iter().filter(|&&b| b).count(), prev) <= (ucount, &assign) => {}
                _ => {
                    best.insert(acc, assign);
                }
            }
        }
        if best.len() == total {
            return (depth, best);
        }
    }
    unreachable!("brickwork of depth 2n+2 realizes every diagram")
}

/// Every placement (anchor layer, anchor slot, orientation) of an (ℓ+1)-strand
/// window on a square torus.
pub fn compile_skein_instances(lat: &SurfaceLattice, ell: u32, backend: Backend) -> Result<SkeinInstances> {
    let spec = lat.spec();
    let label = spec.to_string();
    if spec.kind != LatticeKind::SquareTorus {
        return Err(Error::ConfigInvalid(format!("skein windows are defined on square tori, not {label}")));
    }
    if lat.site_count() > 64 {
        return Err(Error::StateSpaceTooLarge { states: lat.site_count(), cap: 64 });
    }
    let n = ell as usize + 1;
    let p = jones_wenzl(n, backend)?;
    let mut windows = Vec::new();
    let mut seen: HashSet<(u64, Vec<(u64, String)>)> = HashSet::new();
    let mut duplicates = 0;
    let mut depth_out = 0;
    for orientation in 0..2u8 {
        let (slots, layers) = if orientation == 0 { (2 * spec.w, 2 * spec.h) } else { (2 * spec.h, 2 * spec.w) };
        let bw = Brickwork { lat, orientation, slots, layers };
        // Window-relative node parity is the layer offset, whatever the anchor.
        let (depth, patterns) = minimal_patterns(n, 0);
        depth_out = depth;
        for r0 in 0..layers {
            // One strand-slot and one pinned slot on each side must stay
            // distinct around the torus, and the window may not meet itself
            // in time.
            if n + 3 > slots || depth + 1 > layers {
                return Err(Error::WindowDoesNotFit { ell, lattice: label });
            }
            for s0 in (0..slots).filter(|s| s % 2 == r0 % 2) {
                let mut internal = Vec::new();
                let mut nodes = Vec::new();
                let mut pinned = Vec::new();
                for l in 0..depth {
                    let r = r0 + l;
                    for k in s0 + slots - 1..s0 + slots + n {
                        if k % 2 != r % 2 {
                            continue;
                        }
                        let node = bw.node(r, k);
                        if k == s0 + slots - 1 || k == s0 + slots + n - 1 {
                            pinned.push((node.bond, !node.u_is_plus));
                        } else {
                            internal.push(node.bond);
                            nodes.push(node);
                        }
                    }
                }
                let mut all: Vec<usize> = internal.iter().copied().chain(pinned.iter().map(|x| x.0)).collect();
                all.sort_unstable();
                let before = all.len();
                all.dedup();
                if all.len() != before {
                    return Err(Error::WindowDoesNotFit { ell, lattice: label });
                }
                let mask = all.iter().fold(0u64, |m, &b| m | 1 << b);
                let pin_bits = pinned.iter().filter(|x| x.1).fold(0u64, |m, x| m | 1 << x.0);
                let mut pats = Vec::new();
                for (diagram, coeff) in p.terms() {
                    let assign = &patterns[diagram];
                    let bits = nodes
                        .iter()
                        .zip(assign)
                        .filter(|(node, &u)| u == node.u_is_plus)
                        .fold(pin_bits, |m, (node, _)| m | 1 << node.bond);
                    pats.push((bits, coeff.clone()));
                }
                pats.sort_by_key(|x| x.0);
                let key: Vec<(u64, String)> = pats.iter().map(|(b, c)| (*b, c.to_text())).collect();
                let neg: Vec<(u64, String)> = pats.iter().map(|(b, c)| (*b, c.neg().to_text())).collect();
                if seen.contains(&(mask, key.clone())) || seen.contains(&(mask, neg)) {
                    duplicates += 1;
                    continue;
                }
                seen.insert((mask, key));
                windows.push(SkeinWindow { orientation, layer: r0, slot: s0, internal, pinned, mask, patterns: pats });
            }
        }
    }
    Ok(SkeinInstances {
        ell,
        strands: n,
        depth: depth_out,
        terms_per_row: p.len(),
        windows,
        duplicate_windows: duplicates,
        site_count: lat.site_count(),
    })
}

impl SkeinInstances {
    /// Rows of one window: one per assignment of the bonds outside it.
    pub fn window_rows(&self, w: usize) -> impl Iterator<Item = Vec<(u64, &Scalar)>> + '_ {
        let win = &self.windows[w];
        let full = if self.site_count == 64 { u64::MAX } else { (1u64 << self.site_count) - 1 };
        let comp = full & !win.mask;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let o = next?;
            next = if o == comp { None } else { Some(o.wrapping_sub(comp) & comp) };
            Some(win.patterns.iter().map(|(b, c)| (o | b, c)).collect())
        })
    }

    pub fn rows_per_window(&self, w: usize) -> usize {
        1usize << (self.site_count - self.windows[w].mask.count_ones() as usize)
    }

    pub fn row_count(&self) -> usize {
        (0..self.windows.len()).map(|w| self.rows_per_window(w)).sum()
    }

    /// Materializes the rows of the first `limit` windows.
    pub fn to_system(&self, backend: Backend, limit: Option<usize>) -> Result<ConstraintSystem> {
        let mut cs = ConstraintSystem::full(self.site_count, backend)?;
        for w in 0..self.windows.len().min(limit.unwrap_or(usize::MAX)) {
            for row in self.window_rows(w) {
                let terms: Vec<(u64, Scalar)> = row.into_iter().map(|(s, c)| (s, c.clone())).collect();
                cs.push_row(RowTag::Skein, &terms)?;
            }
        }
        Ok(cs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trichotomy {
    /// The skein rows kill the whole ground space.
    Trivial,
    /// The skein rows impose nothing on the ground space.
    Full,
    /// A proper nonzero subspace survives.
    Partial,
}

#[derive(Debug, Clone, Serialize)]
pub struct JointKernelReport {
    pub ell: u32,
    pub lattice: String,
    pub strands: usize,
    pub depth: usize,
    pub windows: usize,
    pub duplicate_windows: usize,
    pub rows: usize,
    pub terms_per_row: usize,
    /// Ground-space dimension before skein rows, from each solver.
    pub base_dim_exact: Option<usize>,
    pub base_dim_float: usize,
    pub exact_dim: Option<usize>,
    pub float_dim: usize,
    pub oracles_agree: bool,
    pub verdict: Trichotomy,
    /// Torus dimension of the doubled even theory at this level.
    pub target: usize,
    pub target_match: bool,
    /// Singular values of the skein rows restricted to the ground space
    /// (float route), descending.
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct JointKernel {
    pub report: JointKernelReport,
    /// Orthonormal float basis of the joint kernel, dense over states.
    pub basis: Vec<Vec<f64>>,
}

/// Joint kernel of the box/dual-box rows and the skein rows of up to
/// `window_limit` windows, by an exact and a float route.
pub fn joint_kernel(lat: &SurfaceLattice, ell: u32, window_limit: Option<usize>) -> Result<JointKernel> {
    let exact_backend = Backend::Special(ell);
    let exact_ok = ell <= 3;
    let backend = if exact_ok { exact_backend } else { Backend::Float(exact_backend.d_f64().unwrap_or(0.0)) };
    let inst = compile_skein_instances(lat, ell, backend)?;
    let used = inst.windows.len().min(window_limit.unwrap_or(usize::MAX));
    let cs = build_hprime(lat, backend)?;
    let n_states = cs.state_count();

    let (base_dim_exact, exact_dim) = if exact_ok {
        let ek = kernel_propagate(&cs)?;
        let k = ek.dim();
        let mut col = vec![u32::MAX; n_states];
        let mut val: Vec<Option<SpecialElem>> = vec![None; n_states];
        for (c, v) in ek.vectors.iter().enumerate() {
            for (i, x) in v.idx.iter().zip(&v.val) {
                col[*i as usize] = c as u32;
                val[*i as usize] = x.as_special().cloned();
            }
        }
        let zero = SpecialElem::zero(ell);
        let mut span = EchelonSpan::<SpecialElem>::new(k);
        let mut seen: HashSet<Vec<(u32, SpecialElem)>> = HashSet::new();
        for w in 0..used {
            if span.dim() == k {
                break;
            }
            let rows: Vec<Vec<(u64, &Scalar)>> = inst.window_rows(w).collect();
            let projected: Vec<Vec<(u32, SpecialElem)>> = rows
                .par_iter()
                .map(|row| {
                    let mut acc: Vec<(u32, SpecialElem)> = Vec::new();
                    for (s, c) in row {
                        let i = cs.index_of(*s).expect("full index") as usize;
                        if col[i] == u32::MAX {
                            continue;
                        }
                        let term = c.as_special().expect("special backend").mul(val[i].as_ref().unwrap());
                        match acc.iter_mut().find(|e| e.0 == col[i]) {
                            Some(e) => e.1 = e.1.add(&term),
                            None => acc.push((col[i], term)),
                        }
                    }
                    acc.retain(|e| !e.1.is_zero());
                    acc.sort_by_key(|e| e.0);
                    acc
                })
                .collect();
            for row in projected {
                if row.is_empty() || !seen.insert(row.clone()) {
                    continue;
                }
                let mut dense = vec![zero.clone(); k];
                for (c, x) in row {
                    dense[c as usize] = x;
                }
                span.insert(&dense);
                if span.dim() == k {
                    break;
                }
            }
        }
        (Some(k), Some(k - span.dim()))
    } else {
        (None, None)
    };

    // Float route: kernel_dense basis, streaming QR of the projected rows.
    let fk = kernel_dense(&cs)?;
    let k = fk.dim();
    let mut membership: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_states];
    for (c, v) in fk.vectors.iter().enumerate() {
        for (i, x) in v.idx.iter().zip(&v.val) {
            membership[*i as usize].push((c as u32, *x));
        }
    }
    let coeff_f64 = |c: &Scalar| c.to_f64();
    let mut r_mat = DMatrix::<f64>::zeros(k, k);
    for w in 0..used {
        let rows: Vec<Vec<(u64, &Scalar)>> = inst.window_rows(w).collect();
        let projected: Vec<Vec<f64>> = rows
            .par_iter()
            .map(|row| {
                let mut m = vec![0.0f64; k];
                let mut norm = 0.0f64;
                for (s, c) in row {
                    let i = cs.index_of(*s).expect("full index") as usize;
                    let cf = coeff_f64(c);
                    norm += cf * cf;
                    for &(col, x) in &membership[i] {
                        m[col as usize] += cf * x;
                    }
                }
                let norm = norm.sqrt();
                m.iter_mut().for_each(|x| *x /= norm);
                m
            })
            .filter(|m| m.iter().any(|x| x.abs() > 1e-14))
            .collect();
        for m in projected {
            givens_insert(&mut r_mat, m);
        }
    }
    let sv = r_mat.clone().singular_values();
    let mut singular_values: Vec<f64> = sv.iter().copied().collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let null = linalg::svd_null_space(&r_mat, 1e-8);
    let float_dim = null.len();
    let mut basis = Vec::with_capacity(float_dim);
    for x in &null {
        let mut v = vec![0.0f64; n_states];
        for (c, g) in fk.vectors.iter().enumerate() {
            if x[c] == 0.0 {
                continue;
            }
            for (i, y) in g.idx.iter().zip(&g.val) {
                v[*i as usize] += x[c] * y;
            }
        }
        basis.push(v);
    }

    let base = base_dim_exact.unwrap_or(fk.dim());
    let dim = exact_dim.unwrap_or(float_dim);
    let verdict = if dim == 0 {
        Trichotomy::Trivial
    } else if dim == base {
        Trichotomy::Full
    } else {
        Trichotomy::Partial
    };
    let target = modular::level_data(ell).label_count;
    let spec = lat.spec();
    let report = JointKernelReport {
        ell,
        lattice: format!("{}x{} torus", spec.w, spec.h),
        strands: inst.strands,
        depth: inst.depth,
        windows: used,
        duplicate_windows: inst.duplicate_windows,
        rows: (0..used).map(|w| inst.rows_per_window(w)).sum(),
        terms_per_row: inst.terms_per_row,
        base_dim_exact,
        base_dim_float: fk.dim(),
        exact_dim,
        float_dim,
        oracles_agree: exact_dim.is_none_or(|e| e == float_dim) && base_dim_exact.is_none_or(|b| b == fk.dim()),
        verdict,
        target,
        target_match: dim == target,
        singular_values,
    };
    Ok(JointKernel { report, basis })
}

/// Rotates a new row into the upper-triangular factor.
fn givens_insert(r: &mut DMatrix<f64>, mut row: Vec<f64>) {
    let k = r.nrows();
    for i in 0..k {
        if row[i] == 0.0 {
            continue;
        }
        let a = r[(i, i)];
        let b = row[i];
        let h = a.hypot(b);
        let (c, s) = (a / h, b / h);
        for j in i..k {
            let (x, y) = (r[(i, j)], row[j]);
            r[(i, j)] = c * x + s * y;
            row[j] = -s * x + c * y;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeSpaceProbe {
    pub dim: usize,
    pub operators: usize,
    /// Largest deviation of a compressed single-bond operator from c·I.
    pub max_deviation: f64,
    pub passes: bool,
}

/// Compresses σ_z and σ_x on every bond to the span of an orthonormal basis
/// and measures the distance from a multiple of the identity.
pub fn code_space_probe(site_count: usize, basis: &[Vec<f64>], tol: f64) -> CodeSpaceProbe {
    let k = basis.len();
    let worst: f64 = (0..site_count)
        .into_par_iter()
        .map(|b| {
            let mut z = DMatrix::<f64>::zeros(k, k);
            let mut x = DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    let (mut zs, mut xs) = (0.0, 0.0);
                    for (s, &u) in basis[i].iter().enumerate() {
                        if u == 0.0 {
                            continue;
                        }
                        let sign = if s >> b & 1 == 1 { 1.0 } else { -1.0 };
                        zs += u * sign * basis[j][s];
                        xs += u * basis[j][s ^ (1 << b)];
                    }
                    z[(i, j)] = zs;
                    x[(i, j)] = xs;
                }
            }
            let dev = |m: &DMatrix<f64>| {
                let c = if k > 0 { m.trace() / k as f64 } else { 0.0 };
                (m - DMatrix::<f64>::identity(k, k) * c).abs().max()
            };
            dev(&z).max(dev(&x))
        })
        .reduce(|| 0.0, f64::max);
    CodeSpaceProbe { dim: k, operators: 2 * site_count, max_deviation: worst, passes: worst <= tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    fn torus(w: usize, h: usize) -> SurfaceLattice {
        SurfaceLattice::new(LatticeSpec::square_torus(w, h)).unwrap()
    }

    #[test]
    fn test_minimal_depths() {
        assert_eq!(minimal_patterns(2, 0).0, 1);
        assert_eq!(minimal_patterns(3, 0).0, 3);
        let (_, pats) = minimal_patterns(3, 0);
        assert_eq!(pats.len(), 5);
        assert!(pats[&TlDiagram::identity(3)].iter().all(|&b| !b));
    }

    #[test]
    fn test_instance_shapes() {
        let lat = torus(3, 3);
        let one = compile_skein_instances(&lat, 1, Backend::Special(1)).unwrap();
        assert_eq!(one.terms_per_row, 2);
        assert!(one.windows.iter().all(|w| w.patterns.len() == 2 && w.mask.count_ones() == 1));
        // Each bond is one window; the transverse reading gives the same rows.
        assert_eq!(one.windows.len(), 18);
        let two = compile_skein_instances(&lat, 2, Backend::Special(2)).unwrap();
        assert_eq!(two.terms_per_row, 5);
        assert!(two.windows.iter().all(|w| w.patterns.len() == 5));
        assert!(matches!(
            compile_skein_instances(&lat, 3, Backend::Special(3)),
            Err(Error::WindowDoesNotFit { ell: 3, .. })
        ));
        assert!(compile_skein_instances(&torus(4, 4), 3, Backend::Special(3)).is_ok());
    }

    #[test]
    fn test_inner_loop_adds_to_total() {
        // U1 realized on the top layer versus U1·U1 on the bottom and top
        // layers: same diagram, one extra closed loop inside the window.
        let lat = torus(3, 3);
        let b = Backend::Special(2);
        let inst = compile_skein_instances(&lat, 2, b).unwrap();
        let (wi, w) = inst.windows.iter().enumerate().find(|(_, w)| w.orientation == 0 && w.layer % 2 == 0).unwrap();
        // Layers 0 and 2 are transverse bonds (U iff +), layer 1 runs along
        // the strands (U iff −).
        let id_bits = w.patterns.iter().map(|p| p.0).find(|&bits| bits & (1 << w.internal[0] | 1 << w.internal[2]) == 0 && bits >> w.internal[1] & 1 == 1).unwrap();
        let top = id_bits | 1 << w.internal[2];
        assert!(w.patterns.iter().any(|(bits, _)| *bits == top));
        let both = top | 1 << w.internal[0];
        let outside = ((1u64 << 18) - 1) & !w.mask;
        for o in [0u64, outside, 0x2a5a5 & outside, 0x1234 & outside] {
            let l1 = lat.extract_walls(&(o | top)).loops();
            let l2 = lat.extract_walls(&(o | both)).loops();
            assert_eq!(l2, l1 + 1, "window {wi}, outside {o:x}");
        }
    }

    #[test]
    fn test_rows_vanish_on_planar_closures() {
        // p₃ is negligible at ℓ = 2, so whenever the outside closes every
        // strand into a contractible loop the row evaluates to zero on
        // d^{#loops}.
        let lat = torus(3, 3);
        let b = Backend::Special(2);
        let d = b.d_f64().unwrap();
        let inst = compile_skein_instances(&lat, 2, b).unwrap();
        let mut checked = 0;
        for w in 0..inst.windows.len() {
            for row in inst.window_rows(w).step_by(7) {
                let census: Vec<_> = row.iter().map(|(s, _)| lat.extract_walls(s)).collect();
                if census.iter().any(|c| !c.essential_loops.is_empty()) {
                    continue;
                }
                let v: f64 = row.iter().zip(&census).map(|((_, c), k)| c.to_f64() * d.powi(k.loops() as i32)).sum();
                assert!(v.abs() < 1e-9, "window {w}: {v}");
                checked += 1;
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn test_joint_kernel_single_window_partial_or_full() {
        let lat = torus(2, 2);
        let e = compile_skein_instances(&lat, 1, Backend::Special(1));
        // A 2×2 torus has only four strand slots per direction.
        assert!(matches!(e, Err(Error::WindowDoesNotFit { .. })));
        let lat = torus(3, 3);
        let jk = joint_kernel(&lat, 1, Some(1)).unwrap();
        assert!(jk.report.oracles_agree);
        assert!(jk.report.exact_dim.unwrap() >= 1);
        assert!(jk.report.exact_dim.unwrap() < jk.report.base_dim_exact.unwrap());
        assert_eq!(jk.report.verdict, Trichotomy::Partial);
    }

    #[test]
    fn test_probe_on_coordinate_basis() {
        // A single basis state is a code for every diagonal operator but not
        // for σ_x; two orthogonal basis states fail σ_z.
        let mut v = vec![0.0; 4];
        v[1] = 1.0;
        let p = code_space_probe(2, &[v.clone()], 1e-9);
        assert!(p.passes);
        let mut w = vec![0.0; 4];
        w[2] = 1.0;
        let p = code_space_probe(2, &[v, w], 1e-9);
        assert!(!p.passes);
    }
}
