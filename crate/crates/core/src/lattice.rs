//! Cellulated tori and disks, spin configurations, domain-wall census and the
//! local move sets of the loop Hamiltonians.
//!
//! Every lattice is stored as a rotation system: a vertex graph with darts in
//! counterclockwise order around each vertex. Bond models put one spin on each
//! edge; the plaque model (triangulated torus) puts one spin on each vertex,
//! whose dual cell is a hexagon.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    SquareTorus,
    TriangulatedTorus,
    SquareDisk,
}

/// JSON lattice config. Disks are `w × h` cells whose outside is a single
/// fixed dual cell (equivalently, a surrounding ring of `|−⟩` bonds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub w: usize,
    pub h: usize,
}

impl LatticeSpec {
    pub fn square_torus(w: usize, h: usize) -> Self {
        LatticeSpec { kind: LatticeKind::SquareTorus, w, h }
    }

    pub fn triangulated_torus(w: usize, h: usize) -> Self {
        LatticeSpec { kind: LatticeKind::TriangulatedTorus, w, h }
    }

    pub fn square_disk(w: usize, h: usize) -> Self {
        LatticeSpec { kind: LatticeKind::SquareDisk, w, h }
    }

    /// Parses `"3x3"`.
    pub fn parse_dims(text: &str) -> Result<(usize, usize)> {
        let bad = || Error::ConfigInvalid(format!("expected WxH, got {text:?}"));
        let (a, b) = text.split_once(['x', 'X']).ok_or_else(bad)?;
        Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
    }
}

impl std::fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            LatticeKind::SquareTorus => "square torus",
            LatticeKind::TriangulatedTorus => "triangulated torus",
            LatticeKind::SquareDisk => "square disk",
        };
        write!(f, "{}x{} {kind}", self.w, self.h)
    }
}

/// Which Hamiltonian's local moves to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Plaque spins, isotopy and loop-birth moves.
    H0,
    /// Bond spins, box and dual-box moves.
    HPrime,
    /// Bond spins, ring exchange around cells and vertices.
    HDoublePrime,
}

pub trait SpinAccess {
    fn spin(&self, i: usize) -> bool;
}

impl SpinAccess for u64 {
    fn spin(&self, i: usize) -> bool {
        (self >> i) & 1 == 1
    }
}

/// One bit per site, `true` = `|+⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    n: usize,
    words: Vec<u64>,
}

impl SpinAccess for SpinConfig {
    fn spin(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }
}

impl SpinConfig {
    pub fn all(n: usize, plus: bool) -> Self {
        let mut s = SpinConfig { n, words: vec![0; n.div_ceil(64).max(1)] };
        if plus {
            for i in 0..n {
                s.set(i, true);
            }
        }
        s
    }

    pub fn from_u64(n: usize, bits: u64) -> Self {
        assert!(n <= 64);
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        SpinConfig { n, words: vec![bits & mask] }
    }

    pub fn to_u64(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words[0])
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn set(&mut self, i: usize, plus: bool) {
        assert!(i < self.n, "site {i} out of range");
        if plus {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.spin(i);
        self.set(i, !v);
    }

    pub fn count_plus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Hex string of the bit vector, most significant nibble first.
    pub fn to_hex(&self) -> String {
        let nibbles = self.n.div_ceil(4).max(1);
        (0..nibbles)
            .rev()
            .map(|k| {
                let v = (0..4).filter(|b| 4 * k + b < self.n && self.spin(4 * k + b)).fold(0u32, |acc, b| acc | (1 << b));
                std::char::from_digit(v, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(n: usize, text: &str) -> Result<Self> {
        let t = text.trim().trim_start_matches("0x");
        let mut s = SpinConfig::all(n, false);
        for (k, ch) in t.chars().rev().enumerate() {
            let v = ch.to_digit(16).ok_or_else(|| Error::ConfigInvalid(format!("bad hex digit {ch:?}")))?;
            for b in 0..4 {
                if v >> b & 1 == 1 {
                    let i = 4 * k + b;
                    if i >= n {
                        return Err(Error::ConfigInvalid(format!("hex config has bits beyond {n} sites")));
                    }
                    s.set(i, true);
                }
            }
        }
        Ok(s)
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Census of one configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WallCensus {
    pub trivial_loops: usize,
    /// Winding pair of each essential loop.
    pub essential_loops: Vec<(i32, i32)>,
    pub clusters: usize,
    pub dual_clusters: usize,
    /// Number of `|+⟩` bonds (bond models) or `++` edges (plaque model).
    pub edges: usize,
    /// Number of `|−⟩` bonds (bond models) or `−−` edges (plaque model).
    pub dual_edges: usize,
    /// Homology rank (0, 1 or 2) of each cluster.
    pub cluster_ranks: Vec<u8>,
    pub dual_cluster_ranks: Vec<u8>,
}

impl WallCensus {
    pub fn loops(&self) -> usize {
        self.trivial_loops + self.essential_loops.len()
    }

    /// Clusters plus dual clusters whose homology has rank 2.
    pub fn rank_two_count(&self) -> usize {
        self.cluster_ranks.iter().chain(&self.dual_cluster_ranks).filter(|&&r| r == 2).count()
    }

    pub fn wrapping_clusters(&self) -> usize {
        self.cluster_ranks.iter().filter(|&&r| r > 0).count()
    }

    pub fn wrapping_dual_clusters(&self) -> usize {
        self.dual_cluster_ranks.iter().filter(|&&r| r > 0).count()
    }
}

/// A cell of the cellulation hosting a Hamiltonian term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Cell {
    Face(usize),
    Vertex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MoveKind {
    /// Ratio 1, no change in loop topology.
    Isotopy,
    /// Target has one more trivial loop; amplitude ratio d.
    LoopBirth,
    /// Target has one fewer trivial loop; amplitude ratio 1/d.
    LoopDeath,
    /// Ratio 1 cyclic shift.
    RingExchange,
}

impl MoveKind {
    /// Exponent k with a(target) = d^k a(source).
    pub fn d_exponent(&self) -> i32 {
        match self {
            MoveKind::LoopBirth => 1,
            MoveKind::LoopDeath => -1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Move {
    pub cell: Cell,
    pub kind: MoveKind,
    pub target: u64,
}

#[derive(Debug, Clone)]
pub struct SurfaceLattice {
    spec: LatticeSpec,
    pos: Vec<[i64; 2]>,
    edges: Vec<[usize; 2]>,
    /// Displacement of each dart in lattice coordinates (dart 2e runs along
    /// edge e, dart 2e+1 against it).
    dvec: Vec<[i64; 2]>,
    rot: Vec<Vec<usize>>,
    rot_pos: Vec<usize>,
    faces: Vec<Vec<usize>>,
    face_left: Vec<usize>,
    exterior: Option<usize>,
    corner_base: Vec<usize>,
    /// Centroid of the face left of each dart, relative to the dart's tail.
    face_center: Vec<[f64; 2]>,
    boundary_vertex: Vec<bool>,
}

fn rev(x: usize) -> usize {
    x ^ 1
}

impl SurfaceLattice {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        let (w, h) = (spec.w, spec.h);
        let min = match spec.kind {
            LatticeKind::SquareTorus => 2,
            LatticeKind::TriangulatedTorus => 3,
            LatticeKind::SquareDisk => 1,
        };
        if w < min || h < min {
            return Err(Error::ConfigInvalid(format!("{:?} needs both dimensions ≥ {min}, got {w}x{h}", spec.kind)));
        }
        let mut pos = Vec::new();
        let mut edges = Vec::new();
        let mut dirs: Vec<[i64; 2]> = Vec::new();
        match spec.kind {
            LatticeKind::SquareTorus => {
                for j in 0..h {
                    for i in 0..w {
                        pos.push([i as i64, j as i64]);
                    }
                }
                let id = |i: usize, j: usize| (j % h) * w + (i % w);
                for j in 0..h {
                    for i in 0..w {
                        edges.push([id(i, j), id(i + 1, j)]);
                        dirs.push([1, 0]);
                    }
                }
                for j in 0..h {
                    for i in 0..w {
                        edges.push([id(i, j), id(i, j + 1)]);
                        dirs.push([0, 1]);
                    }
                }
            }
            LatticeKind::SquareDisk => {
                for j in 0..=h {
                    for i in 0..=w {
                        pos.push([i as i64, j as i64]);
                    }
                }
                let id = |i: usize, j: usize| j * (w + 1) + i;
                for j in 0..=h {
                    for i in 0..w {
                        edges.push([id(i, j), id(i + 1, j)]);
                        dirs.push([1, 0]);
                    }
                }
                for j in 0..h {
                    for i in 0..=w {
                        edges.push([id(i, j), id(i, j + 1)]);
                        dirs.push([0, 1]);
                    }
                }
            }
            LatticeKind::TriangulatedTorus => {
                for j in 0..h {
                    for i in 0..w {
                        pos.push([i as i64, j as i64]);
                    }
                }
                let id = |i: usize, j: usize| (j % h) * w + (i % w);
                for j in 0..h {
                    for i in 0..w {
                        edges.push([id(i, j), id(i + 1, j)]);
                        dirs.push([1, 0]);
                        edges.push([id(i, j), id(i, j + 1)]);
                        dirs.push([0, 1]);
                        edges.push([id(i, j), id(i + w - 1, j + 1)]);
                        dirs.push([-1, 1]);
                    }
                }
            }
        }
        let nv = pos.len();
        let mut dvec = Vec::with_capacity(2 * edges.len());
        for d in &dirs {
            dvec.push(*d);
            dvec.push([-d[0], -d[1]]);
        }
        // Counterclockwise order by angle; the triangulated torus uses the
        // affine embedding (1,0) → 0°, (0,1) → 60°.
        let angle = |v: [i64; 2]| -> f64 {
            let (x, y) = match spec.kind {
                LatticeKind::TriangulatedTorus => (v[0] as f64 + 0.5 * v[1] as f64, v[1] as f64 * 3f64.sqrt() / 2.0),
                _ => (v[0] as f64, v[1] as f64),
            };
            let a = y.atan2(x);
            if a < 0.0 {
                a + std::f64::consts::TAU
            } else {
                a
            }
        };
        let mut rot: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (e, &[a, b]) in edges.iter().enumerate() {
            rot[a].push(2 * e);
            rot[b].push(2 * e + 1);
        }
        for r in rot.iter_mut() {
            r.sort_by(|&x, &y| angle(dvec[x]).partial_cmp(&angle(dvec[y])).unwrap());
        }
        let mut rot_pos = vec![0; dvec.len()];
        for r in &rot {
            for (k, &x) in r.iter().enumerate() {
                rot_pos[x] = k;
            }
        }
        let tail = |x: usize| edges[x / 2][x % 2];
        let mut face_left = vec![usize::MAX; dvec.len()];
        let mut faces = Vec::new();
        for x0 in 0..dvec.len() {
            if face_left[x0] != usize::MAX {
                continue;
            }
            let f = faces.len();
            let mut cyc = Vec::new();
            let mut x = x0;
            loop {
                face_left[x] = f;
                cyc.push(x);
                let r = rev(x);
                let v = tail(r);
                let deg = rot[v].len();
                x = rot[v][(rot_pos[r] + deg - 1) % deg];
                if x == x0 {
                    break;
                }
            }
            faces.push(cyc);
        }
        let mut face_center = vec![[0.0; 2]; dvec.len()];
        let mut exterior = None;
        for (f, cyc) in faces.iter().enumerate() {
            let m = cyc.len();
            let mut p = [0i64; 2];
            let mut pts = Vec::with_capacity(m);
            for &x in cyc {
                pts.push(p);
                p = [p[0] + dvec[x][0], p[1] + dvec[x][1]];
            }
            let cx = pts.iter().map(|q| q[0] as f64).sum::<f64>() / m as f64;
            let cy = pts.iter().map(|q| q[1] as f64).sum::<f64>() / m as f64;
            for (k, &x) in cyc.iter().enumerate() {
                face_center[x] = [cx - pts[k][0] as f64, cy - pts[k][1] as f64];
            }
            let area: i64 = (0..m).map(|k| pts[k][0] * pts[(k + 1) % m][1] - pts[(k + 1) % m][0] * pts[k][1]).sum();
            if spec.kind == LatticeKind::SquareDisk && area < 0 {
                exterior = Some(f);
            }
        }
        let mut corner_base = Vec::with_capacity(nv + 1);
        let mut acc = 0;
        for r in &rot {
            corner_base.push(acc);
            acc += r.len();
        }
        corner_base.push(acc);
        let mut boundary_vertex = vec![false; nv];
        if let Some(ext) = exterior {
            for &x in &faces[ext] {
                boundary_vertex[tail(x)] = true;
            }
        }
        Ok(SurfaceLattice { spec, pos, edges, dvec, rot, rot_pos, faces, face_left, exterior, corner_base, face_center, boundary_vertex })
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn is_torus(&self) -> bool {
        self.spec.kind != LatticeKind::SquareDisk
    }

    /// Spins live on vertices (hexagonal plaques) rather than bonds.
    pub fn is_plaque_model(&self) -> bool {
        self.spec.kind == LatticeKind::TriangulatedTorus
    }

    pub fn site_count(&self) -> usize {
        if self.is_plaque_model() {
            self.pos.len()
        } else {
            self.edges.len()
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.pos.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn vertex_pos(&self, v: usize) -> [i64; 2] {
        self.pos[v]
    }

    /// Displacement of edge `e` from its first to its second endpoint.
    pub fn edge_vec(&self, e: usize) -> [i64; 2] {
        self.dvec[2 * e]
    }

    /// Cells hosting box terms: all faces except the disk exterior.
    pub fn interior_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| Some(f) != self.exterior).collect()
    }

    /// Vertices hosting dual-box terms: all, except disk boundary vertices.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.pos.len()).filter(|&v| !self.boundary_vertex[v]).collect()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn exterior_face(&self) -> Option<usize> {
        self.exterior
    }

    /// Edges around a face, counterclockwise.
    pub fn face_edges(&self, f: usize) -> Vec<usize> {
        self.faces[f].iter().map(|&x| x / 2).collect()
    }

    /// Edges around a vertex, counterclockwise.
    pub fn vertex_edges(&self, v: usize) -> Vec<usize> {
        self.rot[v].iter().map(|&x| x / 2).collect()
    }

    /// Neighbouring vertices around `v`, counterclockwise.
    pub fn vertex_neighbors(&self, v: usize) -> Vec<usize> {
        self.rot[v].iter().map(|&x| self.head(x)).collect()
    }

    /// Edge index of the bond from vertex (i, j) in direction `dir` on a
    /// square lattice, where `dir` is (1,0) or (0,1).
    pub fn bond_at(&self, i: i64, j: i64, dir: [i64; 2]) -> usize {
        let (w, h) = (self.spec.w as i64, self.spec.h as i64);
        match self.spec.kind {
            LatticeKind::SquareTorus => {
                let v = (j.rem_euclid(h) * w + i.rem_euclid(w)) as usize;
                if dir == [1, 0] {
                    v
                } else {
                    (w * h) as usize + v
                }
            }
            LatticeKind::SquareDisk => {
                if dir == [1, 0] {
                    (j * w + i) as usize
                } else {
                    ((h + 1) * w + j * (w + 1) + i) as usize
                }
            }
            LatticeKind::TriangulatedTorus => {
                let v = (j.rem_euclid(h) * w + i.rem_euclid(w)) as usize;
                let k = match dir {
                    [1, 0] => 0,
                    [0, 1] => 1,
                    _ => 2,
                };
                3 * v + k
            }
        }
    }

    fn tail(&self, x: usize) -> usize {
        self.edges[x / 2][x % 2]
    }

    fn head(&self, x: usize) -> usize {
        self.edges[x / 2][1 - x % 2]
    }

    /// Euler characteristic V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.pos.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    fn winding(&self, disp: [f64; 2]) -> (i32, i32) {
        if !self.is_torus() {
            return (0, 0);
        }
        ((disp[0] / self.spec.w as f64).round() as i32, (disp[1] / self.spec.h as f64).round() as i32)
    }

    /// Mid-lattice loops of a bond configuration. Nodes are vertex corners;
    /// each bond pairs the four corner ends that meet at its midpoint, along
    /// the bond when it is `|+⟩` and across it when it is `|−⟩`.
    fn bond_loops<S: SpinAccess>(&self, s: &S) -> (usize, Vec<(i32, i32)>) {
        let nc = *self.corner_base.last().unwrap();
        let mut visited = vec![false; nc];
        let mut trivial = 0;
        let mut essential = Vec::new();
        // An end is (dart, left side?). Left end of x belongs to corner
        // (tail, pos(x)); right end to corner (tail, pos(x) − 1).
        let corner_of = |x: usize, left: bool| -> usize {
            let v = self.tail(x);
            let deg = self.rot[v].len();
            let k = if left { self.rot_pos[x] } else { (self.rot_pos[x] + deg - 1) % deg };
            self.corner_base[v] + k
        };
        let other_end = |c: usize, x: usize, left: bool| -> (usize, bool) {
            let v = self.tail(x);
            let deg = self.rot[v].len();
            let k = c - self.corner_base[v];
            if left {
                (self.rot[v][(k + 1) % deg], false)
            } else {
                (self.rot[v][k], true)
            }
        };
        for c0 in 0..nc {
            if visited[c0] {
                continue;
            }
            let v0 = self.corner_base.partition_point(|&b| b <= c0) - 1;
            let start = (self.rot[v0][c0 - self.corner_base[v0]], true);
            let mut disp = [0.0f64; 2];
            let mut c = c0;
            let mut entry = start;
            loop {
                visited[c] = true;
                let (x, left) = other_end(c, entry.0, entry.1);
                let plus = s.spin(x / 2);
                let partner = if plus {
                    disp[0] += self.dvec[x][0] as f64;
                    disp[1] += self.dvec[x][1] as f64;
                    (rev(x), !left)
                } else {
                    (x, !left)
                };
                c = corner_of(partner.0, partner.1);
                entry = partner;
                if c == c0 && entry == start {
                    break;
                }
            }
            match self.winding(disp) {
                (0, 0) => trivial += 1,
                wd => essential.push(wd),
            }
        }
        (trivial, essential)
    }

    /// Domain walls of a plaque configuration, traced through the triangles.
    fn plaque_loops<S: SpinAccess>(&self, s: &S) -> (usize, Vec<(i32, i32)>) {
        let wall = |x: usize| s.spin(self.tail(x)) != s.spin(self.head(x));
        let mut visited = vec![false; self.faces.len()];
        let mut trivial = 0;
        let mut essential = Vec::new();
        for f0 in 0..self.faces.len() {
            if visited[f0] {
                continue;
            }
            let Some(&x0) = self.faces[f0].iter().find(|&&x| wall(x)) else {
                visited[f0] = true;
                continue;
            };
            let mut disp = [0.0f64; 2];
            let mut x = x0;
            loop {
                let f = self.face_left[x];
                visited[f] = true;
                let y = rev(x);
                disp[0] += self.dvec[x][0] as f64 + self.face_center[y][0] - self.face_center[x][0];
                disp[1] += self.dvec[x][1] as f64 + self.face_center[y][1] - self.face_center[x][1];
                let g = self.face_left[y];
                x = *self.faces[g].iter().find(|&&z| z != y && wall(z)).expect("two wall edges per triangle");
                if x == x0 {
                    break;
                }
            }
            match self.winding(disp) {
                (0, 0) => trivial += 1,
                wd => essential.push(wd),
            }
        }
        (trivial, essential)
    }

    fn ranked_components(&self, n: usize, adj: &[Vec<(usize, [f64; 2])>], skip: Option<usize>) -> Vec<u8> {
        let mut seen = vec![false; n];
        let mut at = vec![[0.0f64; 2]; n];
        let mut ranks = Vec::new();
        for r in 0..n {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            let mut contains_skip = Some(r) == skip;
            let mut cycles: Vec<(i32, i32)> = Vec::new();
            let mut queue = VecDeque::from([r]);
            while let Some(u) = queue.pop_front() {
                for &(v, dv) in &adj[u] {
                    let p = [at[u][0] + dv[0], at[u][1] + dv[1]];
                    if !seen[v] {
                        seen[v] = true;
                        contains_skip |= Some(v) == skip;
                        at[v] = p;
                        queue.push_back(v);
                    } else {
                        let wd = self.winding([p[0] - at[v][0], p[1] - at[v][1]]);
                        if wd != (0, 0) {
                            cycles.push(wd);
                        }
                    }
                }
            }
            if contains_skip {
                continue;
            }
            let rank = if cycles.is_empty() {
                0
            } else {
                let (a, b) = cycles[0];
                if cycles.iter().all(|&(c, d)| a as i64 * d as i64 == b as i64 * c as i64) {
                    1
                } else {
                    2
                }
            };
            ranks.push(rank);
        }
        ranks
    }

    pub fn extract_walls<S: SpinAccess>(&self, s: &S) -> WallCensus {
        if self.is_plaque_model() {
            let (trivial, essential) = self.plaque_loops(s);
            let nv = self.pos.len();
            let mut plus_adj = vec![Vec::new(); nv];
            let mut minus_adj = vec![Vec::new(); nv];
            let (mut ep, mut em) = (0, 0);
            for (e, &[a, b]) in self.edges.iter().enumerate() {
                let d = self.dvec[2 * e];
                let fwd = [d[0] as f64, d[1] as f64];
                let back = [-fwd[0], -fwd[1]];
                match (s.spin(a), s.spin(b)) {
                    (true, true) => {
                        ep += 1;
                        plus_adj[a].push((b, fwd));
                        plus_adj[b].push((a, back));
                    }
                    (false, false) => {
                        em += 1;
                        minus_adj[a].push((b, fwd));
                        minus_adj[b].push((a, back));
                    }
                    _ => {}
                }
            }
            // Components restricted to one spin value; the other value's
            // vertices become singleton components and are filtered out.
            let keep = |adj: &[Vec<(usize, [f64; 2])>], val: bool| -> Vec<u8> {
                let mut ranks = Vec::new();
                let all = self.ranked_components(nv, adj, None);
                let mut seen = vec![false; nv];
                let mut idx = 0;
                for r in 0..nv {
                    if seen[r] {
                        continue;
                    }
                    let mut q = VecDeque::from([r]);
                    seen[r] = true;
                    while let Some(u) = q.pop_front() {
                        for &(v, _) in &adj[u] {
                            if !seen[v] {
                                seen[v] = true;
                                q.push_back(v);
                            }
                        }
                    }
                    if s.spin(r) == val {
                        ranks.push(all[idx]);
                    }
                    idx += 1;
                }
                ranks
            };
            let cluster_ranks = keep(&plus_adj, true);
            let dual_cluster_ranks = keep(&minus_adj, false);
            return WallCensus {
                trivial_loops: trivial,
                essential_loops: essential,
                clusters: cluster_ranks.len(),
                dual_clusters: dual_cluster_ranks.len(),
                edges: ep,
                dual_edges: em,
                cluster_ranks,
                dual_cluster_ranks,
            };
        }
        let (trivial, essential) = self.bond_loops(s);
        let nv = self.pos.len();
        let nf = self.faces.len();
        let mut vadj = vec![Vec::new(); nv];
        let mut fadj = vec![Vec::new(); nf];
        let mut ep = 0;
        for e in 0..self.edges.len() {
            let x = 2 * e;
            if s.spin(e) {
                ep += 1;
                let d = [self.dvec[x][0] as f64, self.dvec[x][1] as f64];
                let [a, b] = self.edges[e];
                vadj[a].push((b, d));
                vadj[b].push((a, [-d[0], -d[1]]));
            } else {
                let y = rev(x);
                let d = [
                    self.dvec[x][0] as f64 + self.face_center[y][0] - self.face_center[x][0],
                    self.dvec[x][1] as f64 + self.face_center[y][1] - self.face_center[x][1],
                ];
                let (f, g) = (self.face_left[x], self.face_left[y]);
                fadj[f].push((g, d));
                fadj[g].push((f, [-d[0], -d[1]]));
            }
        }
        let cluster_ranks = self.ranked_components(nv, &vadj, None);
        let dual_cluster_ranks = self.ranked_components(nf, &fadj, self.exterior);
        WallCensus {
            trivial_loops: trivial,
            essential_loops: essential,
            clusters: cluster_ranks.len(),
            dual_clusters: dual_cluster_ranks.len(),
            edges: ep,
            dual_edges: self.edges.len() - ep,
            cluster_ranks,
            dual_cluster_ranks,
        }
    }

    /// Cluster count of a bond configuration (union-find only).
    pub fn cluster_count(&self, s: u64) -> usize {
        let mut uf = UnionFind::new(self.pos.len());
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if s.spin(e) {
                uf.union(a, b);
            }
        }
        uf.count()
    }

    /// Dual cluster count of a bond configuration, exterior included.
    pub fn dual_cluster_count_all(&self, s: u64) -> usize {
        let mut uf = UnionFind::new(self.faces.len());
        for e in 0..self.edges.len() {
            if !s.spin(e) {
                uf.union(self.face_left[2 * e], self.face_left[2 * e + 1]);
            }
        }
        uf.count()
    }

    pub fn trivial_loop_count(&self, s: u64) -> usize {
        if self.is_plaque_model() {
            self.plaque_loops(&s).0
        } else {
            self.bond_loops(&s).0
        }
    }

    fn check_model(&self, model: Model) -> Result<()> {
        match (model, self.is_plaque_model()) {
            (Model::H0, true) | (Model::HPrime, false) | (Model::HDoublePrime, false) => Ok(()),
            _ => Err(Error::ConfigInvalid(format!("model {model:?} does not run on a {:?} lattice", self.spec.kind))),
        }
    }

    /// Every admissible single-term move out of `s`.
    pub fn local_moves(&self, model: Model, s: u64) -> Result<Vec<Move>> {
        self.check_model(model)?;
        if self.site_count() > 64 {
            return Err(Error::StateSpaceTooLarge { states: self.site_count(), cap: 64 });
        }
        let mut out = Vec::new();
        match model {
            Model::H0 => {
                for c in 0..self.pos.len() {
                    let nb = self.vertex_neighbors(c);
                    let walls: Vec<bool> = nb.iter().map(|&n| s.spin(n) != s.spin(c)).collect();
                    let k = walls.len();
                    let count = walls.iter().filter(|&&b| b).count();
                    let runs = (0..k).filter(|&i| walls[i] && !walls[(i + k - 1) % k]).count();
                    let kind = if count == 0 {
                        MoveKind::LoopBirth
                    } else if count == k {
                        MoveKind::LoopDeath
                    } else if runs == 1 {
                        MoveKind::Isotopy
                    } else {
                        continue;
                    };
                    out.push(Move { cell: Cell::Vertex(c), kind, target: s ^ (1 << c) });
                }
            }
            Model::HPrime | Model::HDoublePrime => {
                let ring = model == Model::HDoublePrime;
                let mut visit = |cell: Cell, bonds: &[usize], majority: bool| {
                    let odd: Vec<usize> = (0..bonds.len()).filter(|&i| s.spin(bonds[i]) != majority).collect();
                    if ring {
                        if odd.len() == 1 {
                            let i = odd[0];
                            let k = bonds.len();
                            for j in [(i + 1) % k, (i + k - 1) % k] {
                                if j != i {
                                    let t = s ^ (1 << bonds[i]) ^ (1 << bonds[j]);
                                    out.push(Move { cell, kind: MoveKind::RingExchange, target: t });
                                }
                            }
                        }
                    } else if odd.len() == 1 {
                        out.push(Move { cell, kind: MoveKind::LoopBirth, target: s ^ (1 << bonds[odd[0]]) });
                    } else if odd.is_empty() {
                        for &b in bonds {
                            out.push(Move { cell, kind: MoveKind::LoopDeath, target: s ^ (1 << b) });
                        }
                    }
                };
                for f in self.interior_faces() {
                    visit(Cell::Face(f), &self.face_edges(f), true);
                }
                for v in self.interior_vertices() {
                    visit(Cell::Vertex(v), &self.vertex_edges(v), false);
                }
            }
        }
        out.sort_by_key(|m| (m.cell, m.target));
        out.dedup();
        Ok(out)
    }

    /// Slope-1 staircase cluster through vertex (a, b) on a square w×w torus:
    /// alternating east and north bonds, all other bonds `|−⟩`.
    pub fn staircase(&self, a: i64, b: i64) -> Result<u64> {
        if self.spec.kind != LatticeKind::SquareTorus || self.spec.w != self.spec.h {
            return Err(Error::ConfigInvalid("staircases need a square w×w torus".into()));
        }
        let mut s = 0u64;
        for k in 0..self.spec.w as i64 {
            s |= 1 << self.bond_at(a + k, b + k, [1, 0]);
            s |= 1 << self.bond_at(a + k + 1, b + k, [0, 1]);
        }
        Ok(s)
    }

    /// The distinct slope-1 staircases.
    pub fn staircases(&self) -> Result<Vec<u64>> {
        let mut v: Vec<u64> = (0..self.spec.w as i64).map(|a| self.staircase(a, 0)).collect::<Result<_>>()?;
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    /// The global `|+⟩ ↔ |−⟩` swap as a symmetry of the model. On the square
    /// torus with w = h it is composed with a lattice duality (a diagonal
    /// reflection that sends vertices to faces), which exchanges box and
    /// dual-box terms and is an involution.
    pub fn swap_symmetry(&self, s: u64) -> u64 {
        let n = self.site_count();
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        match self.spec.kind {
            LatticeKind::TriangulatedTorus | LatticeKind::SquareDisk => !s & mask,
            LatticeKind::SquareTorus if self.spec.w == self.spec.h => {
                // Reflection in the diagonal composed with the shift taking
                // faces to vertices. East bond (i,j) is crossed by a dual
                // bond landing on east bond (j,i); north bond (i,j) lands on
                // north bond (j+1, i−1). Both maps are involutions.
                let w = self.spec.w as i64;
                let mut t = 0u64;
                for j in 0..w {
                    for i in 0..w {
                        if !s.spin(self.bond_at(i, j, [1, 0])) {
                            t |= 1 << self.bond_at(j, i, [1, 0]);
                        }
                        if !s.spin(self.bond_at(i, j, [0, 1])) {
                            t |= 1 << self.bond_at(j + 1, i - 1, [0, 1]);
                        }
                    }
                }
                t
            }
            // Without the diagonal reflection the duality map squares to a
            // translation, so only the spin flip is offered.
            LatticeKind::SquareTorus => !s & mask,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    comps: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), comps: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        self.comps -= 1;
        true
    }

    pub fn count(&self) -> usize {
        self.comps
    }
}

/// An ergodic component under one model's moves.
#[derive(Debug, Clone, Serialize)]
pub struct Component {
    /// Sorted states.
    pub states: Vec<u64>,
    /// (source index, target index, d-exponent of a(target)/a(source)).
    pub edges: Vec<(u32, u32, i32)>,
    /// d-exponent of each state's amplitude relative to the first state,
    /// from a spanning tree.
    pub potential: Vec<i32>,
    /// Every non-tree edge agrees with the potential.
    pub consistent: bool,
}

impl Component {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, s: u64) -> bool {
        self.states.binary_search(&s).is_ok()
    }
}

pub const DEFAULT_COMPONENT_CAP: usize = 5_000_000;

/// BFS closure of `seed` under the model's moves.
pub fn explore_component(lat: &SurfaceLattice, model: Model, seed: u64, cap: usize) -> Result<Component> {
    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut order = vec![seed];
    let mut raw_edges = Vec::new();
    index.insert(seed, 0);
    let mut head = 0;
    while head < order.len() {
        let s = order[head];
        for m in lat.local_moves(model, s)? {
            let j = match index.get(&m.target) {
                Some(&j) => j,
                None => {
                    if order.len() >= cap {
                        return Err(Error::ComponentCapExceeded { cap });
                    }
                    let j = order.len() as u32;
                    index.insert(m.target, j);
                    order.push(m.target);
                    j
                }
            };
            raw_edges.push((head as u32, j, m.kind.d_exponent()));
        }
        head += 1;
    }
    let mut potential = vec![i32::MIN; order.len()];
    potential[0] = 0;
    let mut adj: Vec<Vec<(u32, i32)>> = vec![Vec::new(); order.len()];
    for &(a, b, k) in &raw_edges {
        adj[a as usize].push((b, k));
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(v, k) in &adj[u] {
            if potential[v as usize] == i32::MIN {
                potential[v as usize] = potential[u] + k;
                queue.push_back(v as usize);
            }
        }
    }
    let consistent = raw_edges.iter().all(|&(a, b, k)| potential[b as usize] - potential[a as usize] == k);
    // Canonical order: sort states, remap.
    let mut perm: Vec<usize> = (0..order.len()).collect();
    perm.sort_by_key(|&i| order[i]);
    let mut newpos = vec![0u32; order.len()];
    for (new, &old) in perm.iter().enumerate() {
        newpos[old] = new as u32;
    }
    let states: Vec<u64> = perm.iter().map(|&i| order[i]).collect();
    let base = potential[perm[0]];
    let potential: Vec<i32> = perm.iter().map(|&i| potential[i] - base).collect();
    let mut edges: Vec<(u32, u32, i32)> = raw_edges.iter().map(|&(a, b, k)| (newpos[a as usize], newpos[b as usize], k)).collect();
    edges.sort_unstable();
    Ok(Component { states, edges, potential, consistent })
}

/// All components of the full state space (site count ≤ `max_sites`).
pub fn all_components(lat: &SurfaceLattice, model: Model, max_sites: usize) -> Result<Vec<Component>> {
    let n = lat.site_count();
    if n > max_sites {
        return Err(Error::StateSpaceTooLarge { states: 1usize << n.min(63), cap: 1usize << max_sites });
    }
    let total = 1u64 << n;
    let mut seen = vec![false; total as usize];
    let mut comps = Vec::new();
    for s in 0..total {
        if seen[s as usize] {
            continue;
        }
        let c = explore_component(lat, model, s, DEFAULT_COMPONENT_CAP)?;
        for &t in &c.states {
            seen[t as usize] = true;
        }
        comps.push(c);
    }
    Ok(comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(w: usize, h: usize) -> SurfaceLattice {
        SurfaceLattice::new(LatticeSpec::square_torus(w, h)).unwrap()
    }

    #[test]
    fn test_cellulation_invariants() {
        for spec in [
            LatticeSpec::square_torus(3, 3),
            LatticeSpec::square_torus(2, 2),
            LatticeSpec::square_torus(4, 3),
            LatticeSpec::triangulated_torus(3, 3),
            LatticeSpec::triangulated_torus(4, 3),
        ] {
            let lat = SurfaceLattice::new(spec).unwrap();
            assert_eq!(lat.euler_characteristic(), 0, "{spec:?}");
            for f in 0..lat.face_count() {
                let k = lat.face_edges(f).len();
                assert_eq!(k, if spec.kind == LatticeKind::TriangulatedTorus { 3 } else { 4 });
            }
        }
        let disk = SurfaceLattice::new(LatticeSpec::square_disk(2, 3)).unwrap();
        assert_eq!(disk.euler_characteristic(), 2);
        assert_eq!(disk.interior_faces().len(), 6);
        assert_eq!(disk.interior_vertices().len(), 2);
    }

    #[test]
    fn test_census_examples() {
        let lat = torus(3, 3);
        let all_plus = (1u64 << 18) - 1;
        let c = lat.extract_walls(&all_plus);
        assert_eq!((c.clusters, c.dual_clusters, c.trivial_loops), (1, 9, 9));
        assert_eq!(c.cluster_ranks, vec![2]);
        assert!(c.essential_loops.is_empty());

        let st = lat.staircase(0, 0).unwrap();
        let c = lat.extract_walls(&st);
        assert_eq!(c.essential_loops.len(), 2);
        for &(a, b) in &c.essential_loops {
            assert_eq!((a.abs(), b.abs()), (1, 1));
            assert_eq!(a, b);
        }

        let single = 1u64 << 4;
        let c = lat.extract_walls(&single);
        assert_eq!(c.clusters, 8);
        assert_eq!(c.trivial_loops, 8);
        assert_eq!(c.dual_cluster_ranks, vec![2]);
    }

    #[test]
    fn test_torus_loop_rule() {
        // L = C + C* − (number of rank-2 clusters and dual clusters).
        for (w, h) in [(2, 2), (3, 2)] {
            let lat = torus(w, h);
            for s in 0..1u64 << lat.site_count() {
                let c = lat.extract_walls(&s);
                assert_eq!(c.loops() + c.rank_two_count(), c.clusters + c.dual_clusters, "{w}x{h} state {s:x}");
                assert!(c.rank_two_count() <= 1);
                for &(a, b) in &c.essential_loops {
                    assert_eq!(num_integer::gcd(a, b), 1);
                }
            }
        }
    }

    #[test]
    fn test_planar_patch_euler() {
        let lat = SurfaceLattice::new(LatticeSpec::square_disk(2, 2)).unwrap();
        for s in 0..1u64 << lat.site_count() {
            let c = lat.extract_walls(&s);
            assert!(c.essential_loops.is_empty());
            assert_eq!(c.loops(), c.clusters + c.dual_clusters);
            assert_eq!(lat.cluster_count(s), c.clusters);
        }
    }

    #[test]
    fn test_plaque_walls() {
        let lat = SurfaceLattice::new(LatticeSpec::triangulated_torus(3, 3)).unwrap();
        let c = lat.extract_walls(&0u64);
        assert_eq!(c.loops(), 0);
        assert_eq!(c.dual_clusters, 1);
        let c = lat.extract_walls(&1u64);
        assert_eq!((c.trivial_loops, c.clusters, c.dual_clusters), (1, 1, 1));
        // A full row of + plaques wraps horizontally: two parallel walls.
        let row = 0b111u64;
        let c = lat.extract_walls(&row);
        assert_eq!(c.essential_loops.len(), 2);
        assert_eq!(c.cluster_ranks, vec![1]);
    }

    #[test]
    fn test_plaque_moves() {
        let lat = SurfaceLattice::new(LatticeSpec::triangulated_torus(4, 4)).unwrap();
        let moves = lat.local_moves(Model::H0, 0).unwrap();
        assert_eq!(moves.len(), 16);
        assert!(moves.iter().all(|m| m.kind == MoveKind::LoopBirth));
        // Two + plaques separated by one − plaque in a row: the middle cell
        // sees two wall arcs and admits no move.
        let s = (1u64 << 0) | (1 << 2);
        let moves = lat.local_moves(Model::H0, s).unwrap();
        assert!(!moves.iter().any(|m| m.cell == Cell::Vertex(1)));
        for s in [0u64, 1, 3, 0b10110, 0xf0f] {
            for m in lat.local_moves(Model::H0, s).unwrap() {
                let d = lat.trivial_loop_count(m.target) as i32 - lat.trivial_loop_count(s) as i32;
                assert_eq!(d, m.kind.d_exponent());
                let back = lat.local_moves(Model::H0, m.target).unwrap();
                assert!(back.iter().any(|b| b.target == s && b.kind.d_exponent() == -m.kind.d_exponent()));
            }
        }
    }

    #[test]
    fn test_bond_moves_symmetric_and_loop_counting() {
        let lat = torus(2, 2);
        for model in [Model::HPrime, Model::HDoublePrime] {
            for s in 0..256u64 {
                for m in lat.local_moves(model, s).unwrap() {
                    let back = lat.local_moves(model, m.target).unwrap();
                    assert!(back.iter().any(|b| b.target == s && b.cell == m.cell));
                    if model == Model::HPrime {
                        let d = lat.trivial_loop_count(m.target) as i32 - lat.trivial_loop_count(s) as i32;
                        assert_eq!(d, m.kind.d_exponent(), "state {s:x} → {:x}", m.target);
                    }
                }
            }
        }
        let all_plus = (1u64 << 18) - 1;
        let moves = torus(3, 3).local_moves(Model::HPrime, all_plus).unwrap();
        assert_eq!(moves.len(), 36);
        assert!(moves.iter().all(|m| m.kind == MoveKind::LoopDeath));
    }

    #[test]
    fn test_staircases() {
        let lat = torus(2, 2);
        for st in lat.staircases().unwrap() {
            assert!(lat.local_moves(Model::HPrime, st).unwrap().is_empty());
            let c = explore_component(&lat, Model::HPrime, st, 10).unwrap();
            assert_eq!(c.len(), 1);
        }
        let lat = torus(3, 3);
        let sts = lat.staircases().unwrap();
        assert_eq!(sts.len(), 3);
        let c = explore_component(&lat, Model::HPrime, sts[0], DEFAULT_COMPONENT_CAP).unwrap();
        assert!(sts.iter().all(|&s| c.contains(s)));
        assert!(c.consistent);
    }

    #[test]
    fn test_component_cap() {
        let lat = torus(3, 3);
        assert!(matches!(explore_component(&lat, Model::HPrime, 0, 10), Err(Error::ComponentCapExceeded { cap: 10 })));
    }

    #[test]
    fn test_swap_symmetry_maps_moves() {
        let lat = torus(3, 3);
        for s in [0u64, 1, 0x3ffff, 0x1234, 0x2a5a5] {
            let a = lat.local_moves(Model::HPrime, s).unwrap().len();
            let b = lat.local_moves(Model::HPrime, lat.swap_symmetry(s)).unwrap().len();
            assert_eq!(a, b);
            let c1 = lat.extract_walls(&s);
            let c2 = lat.extract_walls(&lat.swap_symmetry(s));
            assert_eq!((c1.clusters, c1.edges), (c2.dual_clusters, c2.dual_edges));
            assert_eq!(c1.loops(), c2.loops());
            assert_eq!(lat.swap_symmetry(lat.swap_symmetry(s)), s);
        }
    }

    #[test]
    fn test_hex_roundtrip() {
        let mut s = SpinConfig::all(18, false);
        s.set(0, true);
        s.set(17, true);
        let t = SpinConfig::from_hex(18, &s.to_hex()).unwrap();
        assert_eq!(s, t);
        assert_eq!(s.to_hex(), "20001");
        assert_eq!(SpinConfig::from_u64(18, 0x20001), s);
    }
}
