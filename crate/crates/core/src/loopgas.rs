//! Statistical layer: measurement distributions of ground vectors, the loop
//! Gibbs law, the FK-Potts cluster weights and a Metropolis sampler with an
//! exact-enumeration oracle.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{ConstraintSystem, ExactKernel};
use crate::lattice::{SpinAccess, SurfaceLattice, WallCensus};
use crate::scalar::{Backend, Field, Ring, Scalar};

/// Largest site count for which per-configuration tallies and the exact
/// distribution are kept.
pub const TALLY_SITE_LIMIT: usize = 24;

/// Accepted moves between full cluster recounts in the sampler.
pub const RECOUNT_INTERVAL: u64 = 1000;

/// Loop fugacity n = d², Potts q = d⁴ and the self-dual bond probability
/// p = √q/(1+√q), exact and as floats.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsModel {
    pub ell: u32,
    #[serde(skip)]
    pub d: Scalar,
    #[serde(skip)]
    pub n: Scalar,
    #[serde(skip)]
    pub q: Scalar,
    #[serde(skip)]
    pub p: Scalar,
    pub d_f64: f64,
    pub n_f64: f64,
    pub q_f64: f64,
    pub p_f64: f64,
}

impl GibbsModel {
    pub fn backend(&self) -> Backend {
        Backend::Special(self.ell)
    }

    /// Checks q = n² and p/(1−p) = √q = n exactly.
    pub fn check_invariants(&self) -> bool {
        let one = self.backend().one();
        let odds = self.p.div(&one.sub(&self.p));
        self.q == self.n.mul(&self.n) && odds.as_ref() == Some(&self.n)
    }
}

pub fn potts_params(ell: u32) -> Result<GibbsModel> {
    if ell == 0 {
        return Err(Error::ConfigInvalid("level must be at least 1".into()));
    }
    let b = Backend::Special(ell);
    let d = b.d();
    let n = d.mul(&d);
    let q = n.mul(&n);
    // √q = n since d > 0.
    let p = n.div(&b.one().add(&n)).expect("1 + n > 0");
    Ok(GibbsModel {
        ell,
        d_f64: d.to_f64(),
        n_f64: n.to_f64(),
        q_f64: q.to_f64(),
        p_f64: p.to_f64(),
        d,
        n,
        q,
        p,
    })
}

/// Probability of each basis state when measuring a kernel vector, exactly
/// normalized. Returned as (state, probability) sorted by state.
pub fn measurement_distribution(cs: &ConstraintSystem, idx: &[u32], val: &[Scalar]) -> Vec<(u64, Scalar)> {
    let b = cs.backend();
    let sq: Vec<Scalar> = val.iter().map(|a| a.mul(a)).collect();
    let total = sq.iter().fold(b.zero(), |acc, x| acc.add(x));
    let inv = total.inv().expect("nonzero vector");
    let mut out: Vec<(u64, Scalar)> = idx.iter().zip(sq).map(|(&i, x)| (cs.state(i as usize), x.mul(&inv))).collect();
    out.sort_unstable_by_key(|(s, _)| *s);
    out
}

/// Both sides of the loop/cluster correspondence for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct FkWeight {
    pub loops: usize,
    pub clusters: usize,
    pub dual_clusters: usize,
    pub edges: usize,
    pub dual_edges: usize,
    /// n^L
    #[serde(skip)]
    pub loop_form: Scalar,
    /// q^C p^E (1−p)^{E*}
    #[serde(skip)]
    pub cluster_form: Scalar,
    pub loop_form_f64: f64,
    pub cluster_form_f64: f64,
    /// k in loop_form / cluster_form = d^k (1+d²)^{E+E*}; exact.
    pub ratio_d_exponent: i64,
}

pub fn fk_weight<S: SpinAccess>(lat: &SurfaceLattice, s: &S, g: &GibbsModel) -> FkWeight {
    let c = lat.extract_walls(s);
    fk_weight_from_census(&c, g)
}

pub fn fk_weight_from_census(c: &WallCensus, g: &GibbsModel) -> FkWeight {
    let one = g.backend().one();
    let loop_form = g.n.pow(c.loops() as u32);
    let cluster_form =
        g.q.pow(c.clusters as u32).mul(&g.p.pow(c.edges as u32)).mul(&one.sub(&g.p).pow(c.dual_edges as u32));
    FkWeight {
        loops: c.loops(),
        clusters: c.clusters,
        dual_clusters: c.dual_clusters,
        edges: c.edges,
        dual_edges: c.dual_edges,
        loop_form_f64: loop_form.to_f64(),
        cluster_form_f64: cluster_form.to_f64(),
        loop_form,
        cluster_form,
        ratio_d_exponent: 2 * c.loops() as i64 - 4 * c.clusters as i64 - 2 * c.edges as i64,
    }
}

/// Homology-corrected class of a configuration on a torus: the pattern of
/// wrapping clusters on each side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TorusClass {
    /// Ranks of the wrapping clusters, sorted.
    pub cluster_ranks: Vec<u8>,
    pub dual_cluster_ranks: Vec<u8>,
}

impl TorusClass {
    pub fn of(c: &WallCensus) -> Self {
        let pick = |r: &[u8]| {
            let mut v: Vec<u8> = r.iter().copied().filter(|&x| x > 0).collect();
            v.sort_unstable();
            v
        };
        TorusClass { cluster_ranks: pick(&c.cluster_ranks), dual_cluster_ranks: pick(&c.dual_cluster_ranks) }
    }

    pub fn label(&self) -> String {
        let f = |v: &[u8]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
        format!("C[{}] C*[{}]", f(&self.cluster_ranks), f(&self.dual_cluster_ranks))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassConstant {
    pub class: String,
    pub configurations: usize,
    /// k with loop form / cluster form = d^k (1+d²)^B, if single-valued.
    pub d_exponent: Option<i64>,
    pub ratio_f64: Option<f64>,
    /// 2(C − C*) + (E − E*), if single-valued. The swap multiplies the
    /// cluster form by √q to this power at the self-dual point.
    pub swap_exponent: Option<i64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopClusterReport {
    pub lattice: String,
    pub ell: u32,
    pub configurations: usize,
    /// L = C + C* on every configuration (planar) or L + r₂ = C + C* with
    /// r₂ the rank-two cluster count (torus).
    pub loop_rule_holds: bool,
    pub classes: Vec<ClassConstant>,
    pub constant_per_class: bool,
    /// −2V, the exponent the planar rule L = C + C* predicts via Euler's
    /// formula; on a torus it should reappear on the class with no wrapping
    /// cluster.
    pub planar_exponent: i64,
    pub planar_exponent_matches: bool,
    /// p/(1−p) = √q exactly.
    pub self_dual_point: bool,
    /// On a torus: the swap sends (C, E, C*, E*) to (C*, E*, C, E) for every
    /// configuration. Vacuous on a disk, where the swap is not a lattice map.
    pub swap_exchanges_counts: bool,
    /// The swap rescales the cluster form by one constant per class.
    pub self_dual: bool,
    /// E − E* varies inside some class, so no other p is self-dual.
    pub self_dual_point_unique: bool,
}

#[derive(Clone)]
struct ClassAcc {
    count: usize,
    k: Option<i64>,
    swap: Option<i64>,
    bond_diff: Option<i64>,
    k_ok: bool,
    swap_ok: bool,
    bond_diff_varies: bool,
}

impl ClassAcc {
    fn new() -> Self {
        ClassAcc { count: 0, k: None, swap: None, bond_diff: None, k_ok: true, swap_ok: true, bond_diff_varies: false }
    }

    fn absorb(&mut self, o: &ClassAcc) {
        fn join(a: &mut Option<i64>, b: Option<i64>) -> bool {
            match (*a, b) {
                (Some(x), Some(y)) => x == y,
                (None, y) => {
                    *a = y;
                    true
                }
                (_, None) => true,
            }
        }
        self.count += o.count;
        self.k_ok &= o.k_ok && join(&mut self.k, o.k);
        self.swap_ok &= o.swap_ok && join(&mut self.swap, o.swap);
        self.bond_diff_varies |= o.bond_diff_varies || !join(&mut self.bond_diff, o.bond_diff);
    }
}

/// Exhaustive check of the loop/cluster correspondence on a bond lattice.
pub fn loop_cluster_check(lat: &SurfaceLattice, g: &GibbsModel) -> Result<LoopClusterReport> {
    let n = lat.site_count();
    if lat.is_plaque_model() || n > TALLY_SITE_LIMIT {
        return Err(Error::ConfigInvalid(format!("exhaustive check needs a bond lattice with at most {TALLY_SITE_LIMIT} bonds")));
    }
    let torus = lat.is_torus();
    type Acc = (bool, bool, BTreeMap<TorusClass, ClassAcc>);
    let fresh = || -> Acc { (true, true, BTreeMap::new()) };
    let (rule, swap_counts, classes) = (0..1u64 << n)
        .into_par_iter()
        .fold(fresh, |(mut rule, mut swap_counts, mut map), s| {
            let c = lat.extract_walls(&s);
            let r2 = if torus { c.rank_two_count() } else { 0 };
            rule &= c.loops() + r2 == c.clusters + c.dual_clusters;
            if torus {
                let t = lat.extract_walls(&lat.swap_symmetry(s));
                swap_counts &= (c.clusters, c.edges, c.dual_clusters, c.dual_edges)
                    == (t.dual_clusters, t.dual_edges, t.clusters, t.edges);
            }
            let class = if torus { TorusClass::of(&c) } else { TorusClass { cluster_ranks: vec![], dual_cluster_ranks: vec![] } };
            let (cc, cd, e, ed) = (c.clusters as i64, c.dual_clusters as i64, c.edges as i64, c.dual_edges as i64);
            let one = ClassAcc {
                count: 1,
                k: Some(2 * c.loops() as i64 - 4 * cc - 2 * e),
                swap: Some(2 * (cc - cd) + (e - ed)),
                bond_diff: Some(e - ed),
                ..ClassAcc::new()
            };
            map.entry(class).or_insert_with(ClassAcc::new).absorb(&one);
            (rule, swap_counts, map)
        })
        .reduce(fresh, |(r1, s1, mut m1), (r2, s2, m2)| {
            for (k, v) in m2 {
                m1.entry(k).or_insert_with(ClassAcc::new).absorb(&v);
            }
            (r1 && r2, s1 && s2, m1)
        });

    let (d, b) = (g.d_f64, n as i32);
    let report: Vec<ClassConstant> = classes
        .iter()
        .map(|(k, a)| {
            let exp = a.k.filter(|_| a.k_ok);
            ClassConstant {
                class: if torus { k.label() } else { "planar".into() },
                configurations: a.count,
                d_exponent: exp,
                ratio_f64: exp.map(|e| d.powi(e as i32) * (1.0 + d * d).powi(b)),
                swap_exponent: a.swap.filter(|_| a.swap_ok),
            }
        })
        .collect();
    let self_dual_point = g.check_invariants();
    let planar_exponent = -2 * lat.vertex_count() as i64;
    let unwrapped = if torus { "C[] C*[2]" } else { "planar" };
    let planar_exponent_matches = report.iter().any(|c| c.class == unwrapped && c.d_exponent == Some(planar_exponent));
    Ok(LoopClusterReport {
        planar_exponent,
        planar_exponent_matches,
        lattice: lat.spec().to_string(),
        ell: g.ell,
        configurations: 1 << n,
        loop_rule_holds: rule,
        constant_per_class: report.iter().all(|c| c.d_exponent.is_some()),
        self_dual: self_dual_point && swap_counts && report.iter().all(|c| c.swap_exponent.is_some()),
        classes: report,
        self_dual_point,
        swap_exchanges_counts: swap_counts,
        self_dual_point_unique: classes.values().any(|a| a.bond_diff_varies),
    })
}

/// Checks the Gibbs law on every kernel vector: the amplitude ratio between
/// any two configurations of a component is d^{Δ#loops}, exactly.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsLawReport {
    pub lattice: String,
    pub ell: u32,
    pub components: usize,
    pub states_checked: usize,
    pub violations: usize,
}

pub fn gibbs_law_check(lat: &SurfaceLattice, cs: &ConstraintSystem, kernel: &ExactKernel) -> Result<GibbsLawReport> {
    let b = cs.backend();
    let Backend::Special(ell) = b else {
        return Err(Error::ConfigInvalid("Gibbs law check needs a special-value backend".into()));
    };
    let d = b.d();
    let violations: usize = kernel
        .vectors
        .par_iter()
        .map(|v| {
            let loops: Vec<i64> = v.idx.iter().map(|&i| lat.extract_walls(&cs.state(i as usize)).loops() as i64).collect();
            let base = loops.iter().copied().min().unwrap_or(0);
            // a_i / d^{L_i − base} must be a single scalar.
            let mut reference: Option<Scalar> = None;
            let mut bad = 0;
            for (a, &l) in v.val.iter().zip(&loops) {
                let r = a.div(&d.pow((l - base) as u32)).expect("d ≠ 0");
                match &reference {
                    None => reference = Some(r),
                    Some(x) if *x != r => bad += 1,
                    Some(_) => {}
                }
            }
            bad
        })
        .sum();
    Ok(GibbsLawReport {
        lattice: lat.spec().to_string(),
        ell,
        components: kernel.vectors.len(),
        states_checked: kernel.vectors.iter().map(|v| v.idx.len()).sum(),
        violations,
    })
}

/// Compares the measurement distribution of one kernel vector with the FK
/// cluster-form weights restricted to its support.
#[derive(Debug, Clone, Serialize)]
pub struct PottsMatch {
    pub lattice: String,
    pub ell: u32,
    pub states: usize,
    /// Measurement probability / cluster weight is a single exact constant.
    pub exact_match: bool,
    pub max_float_deviation: f64,
}

pub fn potts_match(lat: &SurfaceLattice, cs: &ConstraintSystem, idx: &[u32], val: &[Scalar], g: &GibbsModel) -> PottsMatch {
    let dist = measurement_distribution(cs, idx, val);
    let weights: Vec<Scalar> = dist.par_iter().map(|(s, _)| fk_weight(lat, s, g).cluster_form).collect();
    let total = weights.iter().fold(g.backend().zero(), |acc, w| acc.add(w));
    let inv = total.inv().expect("positive weights");
    let mut exact = true;
    let mut dev: f64 = 0.0;
    for ((_, p), w) in dist.iter().zip(&weights) {
        let fk = w.mul(&inv);
        exact &= *p == fk;
        dev = dev.max((p.to_f64() - fk.to_f64()).abs());
    }
    PottsMatch { lattice: lat.spec().to_string(), ell: g.ell, states: dist.len(), exact_match: exact, max_float_deviation: dev }
}

/// Metropolis detailed balance for single-bond flips, verified in exact
/// arithmetic: w(s)·min(1, w(t)/w(s)) = w(t)·min(1, w(s)/w(t)).
#[derive(Debug, Clone, Serialize)]
pub struct DetailedBalanceReport {
    pub lattice: String,
    pub ell: u32,
    pub pairs: usize,
    pub violations: usize,
}

pub fn detailed_balance_check(lat: &SurfaceLattice, g: &GibbsModel) -> Result<DetailedBalanceReport> {
    let n = lat.site_count();
    if lat.is_plaque_model() || n > 16 {
        return Err(Error::ConfigInvalid("detailed balance check needs a bond lattice with at most 16 bonds".into()));
    }
    let weights: Vec<Scalar> = (0..1u64 << n).map(|s| fk_weight(lat, &s, g).cluster_form).collect();
    let one = g.backend().one();
    let accept = |from: &Scalar, to: &Scalar| -> Scalar {
        let r = to.div(from).expect("positive weight");
        match r.as_special() {
            Some(x) if x.signum() >= 0 && r.sub(&one).as_special().is_some_and(|y| y.signum() >= 0) => one.clone(),
            _ => r,
        }
    };
    let (mut pairs, mut violations) = (0, 0);
    for s in 0..1u64 << n {
        for e in 0..n {
            let t = s ^ (1 << e);
            if t < s {
                continue;
            }
            pairs += 1;
            let (ws, wt) = (&weights[s as usize], &weights[t as usize]);
            if ws.mul(&accept(ws, wt)) != wt.mul(&accept(wt, ws)) {
                violations += 1;
            }
        }
    }
    Ok(DetailedBalanceReport { lattice: lat.spec().to_string(), ell: g.ell, pairs, violations })
}

/// Normalized cluster-form distribution over all bond configurations.
pub fn exact_distribution(lat: &SurfaceLattice, g: &GibbsModel) -> Result<Vec<f64>> {
    let n = lat.site_count();
    if lat.is_plaque_model() || n > TALLY_SITE_LIMIT {
        return Err(Error::StateSpaceTooLarge { states: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX), cap: 1 << TALLY_SITE_LIMIT });
    }
    let (q, p) = (g.q_f64, g.p_f64);
    let mut w: Vec<f64> = (0..1u64 << n)
        .into_par_iter()
        .map(|s| {
            let e = s.count_ones() as i32;
            q.powi(lat.cluster_count(s) as i32) * p.powi(e) * (1.0 - p).powi(n as i32 - e)
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

/// Exact expectation of the loop count under the cluster-form distribution.
pub fn exact_mean_loops(lat: &SurfaceLattice, dist: &[f64]) -> f64 {
    dist.par_iter().enumerate().map(|(s, p)| p * lat.extract_walls(&(s as u64)).loops() as f64).sum()
}

/// Expected total-variation distance between `dist` and the empirical
/// distribution of `samples` independent draws (normal approximation to each
/// binomial count). A correlated chain cannot beat it.
pub fn iid_tv_floor(dist: &[f64], samples: f64) -> f64 {
    0.5 * dist.iter().map(|p| (2.0 * p * (1.0 - p) / (std::f64::consts::PI * samples)).sqrt()).sum::<f64>()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub sweep: u64,
    pub loops: usize,
    pub clusters: usize,
    pub dual_clusters: usize,
    pub acceptance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub lattice: String,
    pub ell: u32,
    pub generator: &'static str,
    pub seed: u64,
    pub sweeps: u64,
    /// Single-bond proposals; one sweep is one proposal per bond.
    pub steps: u64,
    pub acceptance_rate: f64,
    pub mean_loops: f64,
    /// Batch-means standard error of the per-sweep loop count.
    pub loops_std_error: f64,
    pub mean_clusters: f64,
    pub mean_dual_clusters: f64,
    pub recounts: u64,
    /// Visits per configuration, recorded after every proposal.
    #[serde(skip)]
    pub tallies: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

impl SampleRecord {
    pub fn empirical(&self) -> Option<Vec<f64>> {
        let t = self.tallies.as_ref()?;
        let total: u64 = t.iter().sum();
        Some(t.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("sweep,loops,clusters,dual_clusters,acceptance\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{},{},{:.6}\n", r.sweep, r.loops, r.clusters, r.dual_clusters, r.acceptance));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SamplerOptions {
    pub sweeps: u64,
    pub seed: u64,
    /// Keep per-configuration tallies (needs at most `TALLY_SITE_LIMIT` bonds).
    pub tallies: bool,
    /// Emit a trace row every this many sweeps.
    pub trace_every: Option<u64>,
    pub batches: usize,
}

impl SamplerOptions {
    pub fn new(sweeps: u64, seed: u64) -> Self {
        SamplerOptions { sweeps, seed, tallies: true, trace_every: None, batches: 50 }
    }
}

/// Weight ratio q^{ΔC} p^{ΔE} (1−p)^{ΔE*} for a single flip, where a bond
/// flip has ΔE* = −ΔE.
pub fn acceptance_ratio(q: f64, p: f64, dc: i64, de: i64) -> f64 {
    q.powi(dc as i32) * p.powi(de as i32) * (1.0 - p).powi(-de as i32)
}

pub fn metropolis_sample(lat: &SurfaceLattice, g: &GibbsModel, sweeps: u64, seed: u64) -> Result<SampleRecord> {
    metropolis_sample_with(lat, g, &SamplerOptions::new(sweeps, seed))
}

/// Single-bond-flip Metropolis chain targeting q^C p^E (1−p)^{E*}, started
/// from the all-`|−⟩` configuration.
pub fn metropolis_sample_with(lat: &SurfaceLattice, g: &GibbsModel, opts: &SamplerOptions) -> Result<SampleRecord> {
    let n = lat.site_count();
    if lat.is_plaque_model() || n > 64 {
        return Err(Error::ConfigInvalid("sampler needs a bond lattice with at most 64 bonds".into()));
    }
    if opts.tallies && n > TALLY_SITE_LIMIT {
        return Err(Error::StateSpaceTooLarge { states: 1 << n.min(63), cap: 1 << TALLY_SITE_LIMIT });
    }
    let nv = lat.vertex_count();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for e in 0..n {
        let [a, b] = lat.edge(e);
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let (q, p) = (g.q_f64, g.p_f64);
    // Whether a and b are joined by occupied bonds, ignoring bond `skip`.
    let mut seen = vec![0u32; nv];
    let mut epoch = 0u32;
    let mut stack = Vec::with_capacity(nv);
    let mut connected = |s: u64, a: usize, b: usize, skip: usize| -> bool {
        epoch += 1;
        stack.clear();
        stack.push(a);
        seen[a] = epoch;
        while let Some(v) = stack.pop() {
            if v == b {
                return true;
            }
            for &(w, e) in &adj[v] {
                if e != skip && s >> e & 1 == 1 && seen[w] != epoch {
                    seen[w] = epoch;
                    stack.push(w);
                }
            }
        }
        false
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut s = 0u64;
    let mut clusters = lat.cluster_count(s) as i64;
    let mut tallies = opts.tallies.then(|| vec![0u64; 1 << n]);
    let (mut accepted, mut since_recount, mut recounts) = (0u64, 0u64, 0u64);
    let batches = opts.batches.max(2) as u64;
    let batch_len = (opts.sweeps / batches).max(1);
    let mut batch_means = Vec::new();
    let (mut batch_sum, mut batch_count) = (0.0, 0u64);
    let (mut sum_l, mut sum_c, mut sum_cd) = (0.0, 0.0, 0.0);
    let mut trace = Vec::new();

    for sweep in 1..=opts.sweeps {
        for _ in 0..n {
            let e = rng.gen_range(0..n);
            let [a, b] = lat.edge(e);
            let occupied = s >> e & 1 == 1;
            // Clusters change only if the flipped bond is a bridge.
            let bridge = a != b && !connected(s, a, b, e);
            let dc: i64 = match (occupied, bridge) {
                (false, true) => -1,
                (true, true) => 1,
                _ => 0,
            };
            let ratio = acceptance_ratio(q, p, dc, if occupied { -1 } else { 1 });
            if ratio >= 1.0 || rng.gen::<f64>() < ratio {
                s ^= 1 << e;
                clusters += dc;
                accepted += 1;
                since_recount += 1;
                if since_recount == RECOUNT_INTERVAL {
                    since_recount = 0;
                    recounts += 1;
                    let full = lat.cluster_count(s) as i64;
                    if full != clusters {
                        return Err(Error::InvariantViolation(format!(
                            "incremental cluster count {clusters} drifted from {full}"
                        )));
                    }
                }
            }
            if let Some(t) = tallies.as_mut() {
                t[s as usize] += 1;
            }
        }
        let c = lat.extract_walls(&s);
        let l = c.loops() as f64;
        sum_l += l;
        sum_c += c.clusters as f64;
        sum_cd += c.dual_clusters as f64;
        batch_sum += l;
        batch_count += 1;
        if batch_count == batch_len {
            batch_means.push(batch_sum / batch_count as f64);
            batch_sum = 0.0;
            batch_count = 0;
        }
        if opts.trace_every.is_some_and(|k| k > 0 && sweep % k == 0) {
            trace.push(TraceRow {
                sweep,
                loops: c.loops(),
                clusters: c.clusters,
                dual_clusters: c.dual_clusters,
                acceptance: accepted as f64 / (sweep * n as u64) as f64,
            });
        }
    }
    let sweeps = opts.sweeps.max(1) as f64;
    let k = batch_means.len() as f64;
    let se = if batch_means.len() > 1 {
        let m = batch_means.iter().sum::<f64>() / k;
        (batch_means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        f64::NAN
    };
    Ok(SampleRecord {
        lattice: lat.spec().to_string(),
        ell: g.ell,
        generator: "ChaCha8",
        seed: opts.seed,
        sweeps: opts.sweeps,
        steps: opts.sweeps * n as u64,
        acceptance_rate: accepted as f64 / (opts.sweeps * n as u64).max(1) as f64,
        mean_loops: sum_l / sweeps,
        loops_std_error: se,
        mean_clusters: sum_c / sweeps,
        mean_dual_clusters: sum_cd / sweeps,
        recounts,
        tallies,
        trace,
    })
}

/// Independent chains in parallel, one per seed, returned in seed order.
pub fn run_chains(lat: &SurfaceLattice, g: &GibbsModel, opts: &SamplerOptions, seeds: &[u64]) -> Result<Vec<SampleRecord>> {
    seeds
        .par_iter()
        .map(|&seed| metropolis_sample_with(lat, g, &SamplerOptions { seed, ..opts.clone() }))
        .collect()
}

/// Sums the tallies of several chains.
pub fn merge_tallies(records: &[SampleRecord]) -> Option<Vec<u64>> {
    let mut it = records.iter();
    let mut out = it.next()?.tallies.clone()?;
    for r in it {
        for (a, b) in out.iter_mut().zip(r.tallies.as_ref()?) {
            *a += b;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_h0, build_hprime, kernel_propagate};
    use crate::lattice::LatticeSpec;
    use proptest::prelude::*;

    fn lat(spec: LatticeSpec) -> SurfaceLattice {
        SurfaceLattice::new(spec).unwrap()
    }

    #[test]
    fn test_potts_params_examples() {
        let g = potts_params(2).unwrap();
        assert!((g.d_f64 - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.q, g.backend().from_int(4));
        assert_eq!(g.p, g.backend().from_int(2).div(&g.backend().from_int(3)).unwrap());
        let g = potts_params(1).unwrap();
        assert_eq!((g.q_f64, g.p_f64), (1.0, 0.5));
        // ((1+√5)/2)⁴ = (7+3√5)/2
        let g = potts_params(3).unwrap();
        assert!((g.q_f64 - (7.0 + 3.0 * 5f64.sqrt()) / 2.0).abs() < 1e-12);
        for ell in 1..=6 {
            assert!(potts_params(ell).unwrap().check_invariants());
        }
        assert!(potts_params(0).is_err());
    }

    #[test]
    fn test_measurement_ratio_is_d_squared_per_loop() {
        let l = lat(LatticeSpec::square_torus(2, 2));
        let cs = build_hprime(&l, Backend::Special(3)).unwrap();
        let k = kernel_propagate(&cs).unwrap();
        let v = k.vector_through(cs.index_of(0).unwrap()).unwrap();
        let dist = measurement_distribution(&cs, &v.idx, &v.val);
        let total = dist.iter().fold(cs.backend().zero(), |a, (_, p)| a.add(p));
        assert!(total.is_one());
        let d2 = cs.backend().d().pow(2);
        let loops = |s: u64| l.extract_walls(&s).loops() as i64;
        let mut pairs = 0;
        for (s, p) in &dist {
            for (t, r) in &dist {
                if loops(*s) == loops(*t) + 1 {
                    assert_eq!(p.div(r).unwrap(), d2);
                    pairs += 1;
                }
            }
        }
        assert!(pairs > 0);
        // −log p(s) + const = −2 log d · #loops(s)
        let beta = 2.0 * cs.backend().d_f64().unwrap().ln();
        let c0 = dist[0].1.to_f64().ln() - beta * loops(dist[0].0) as f64;
        for (s, p) in &dist {
            assert!((p.to_f64().ln() - beta * loops(*s) as f64 - c0).abs() < 1e-9);
        }
    }

    #[test]
    fn test_measurement_uniform_at_level_one() {
        let l = lat(LatticeSpec::square_torus(2, 2));
        let cs = build_hprime(&l, Backend::Special(1)).unwrap();
        let k = kernel_propagate(&cs).unwrap();
        for v in &k.vectors {
            let dist = measurement_distribution(&cs, &v.idx, &v.val);
            assert!(dist.iter().all(|(_, p)| *p == dist[0].1));
        }
    }

    #[test]
    fn test_planar_patch_constant_ratio() {
        let g = potts_params(2).unwrap();
        let r = loop_cluster_check(&lat(LatticeSpec::square_disk(2, 3)), &g).unwrap();
        assert!(r.loop_rule_holds && r.constant_per_class && r.planar_exponent_matches);
        assert_eq!(r.classes.len(), 1);
        assert!(r.self_dual_point && r.self_dual_point_unique);
    }

    #[test]
    fn test_torus_classes_2x2() {
        let g = potts_params(3).unwrap();
        let r = loop_cluster_check(&lat(LatticeSpec::square_torus(2, 2)), &g).unwrap();
        assert!(r.loop_rule_holds && r.constant_per_class && r.planar_exponent_matches);
        assert!(r.swap_exchanges_counts && r.self_dual);
        // Wrapping pattern without rank-two clusters shares the planar constant.
        let planar = r.classes.iter().find(|c| c.class == "C[1] C*[1]").unwrap();
        assert_eq!(planar.d_exponent, Some(r.planar_exponent));
    }

    #[test]
    fn test_gibbs_law_exact() {
        for ell in [2, 3] {
            let l = lat(LatticeSpec::square_torus(2, 2));
            let cs = build_hprime(&l, Backend::Special(ell)).unwrap();
            let k = kernel_propagate(&cs).unwrap();
            let r = gibbs_law_check(&l, &cs, &k).unwrap();
            assert_eq!(r.violations, 0);
            assert_eq!(r.states_checked, 256);
            let l = lat(LatticeSpec::triangulated_torus(3, 3));
            let cs = build_h0(&l, Backend::Special(ell)).unwrap();
            let k = kernel_propagate(&cs).unwrap();
            assert_eq!(gibbs_law_check(&l, &cs, &k).unwrap().violations, 0);
        }
    }

    #[test]
    fn test_foam_component_matches_potts() {
        let g = potts_params(2).unwrap();
        let l = lat(LatticeSpec::square_torus(2, 2));
        let cs = build_hprime(&l, g.backend()).unwrap();
        let k = kernel_propagate(&cs).unwrap();
        let v = k.vector_through(cs.index_of(0).unwrap()).unwrap();
        let m = potts_match(&l, &cs, &v.idx, &v.val, &g);
        assert!(m.exact_match, "{m:?}");
        assert!(m.max_float_deviation < 1e-12);
    }

    #[test]
    fn test_detailed_balance_2x2_patch() {
        for ell in [2, 3] {
            let g = potts_params(ell).unwrap();
            let r = detailed_balance_check(&lat(LatticeSpec::square_disk(2, 2)), &g).unwrap();
            assert_eq!(r.pairs, 4096 * 12 / 2);
            assert_eq!(r.violations, 0);
        }
    }

    #[test]
    fn test_acceptance_ratio() {
        let (q, p) = (4.0, 2.0 / 3.0);
        // Adding a bond that merges two clusters: q⁻¹ · p/(1−p).
        assert!((acceptance_ratio(q, p, -1, 1) - 0.5).abs() < 1e-15);
        assert!((acceptance_ratio(q, p, 0, -1) - 0.5).abs() < 1e-15);
        assert_eq!(acceptance_ratio(1.0, 0.5, 1, -1), 1.0);
    }

    #[test]
    fn test_sampler_deterministic() {
        let l = lat(LatticeSpec::square_torus(2, 2));
        let g = potts_params(2).unwrap();
        let a = metropolis_sample(&l, &g, 2000, 11).unwrap();
        let b = metropolis_sample(&l, &g, 2000, 11).unwrap();
        assert_eq!(a.tallies, b.tallies);
        let t = a.tallies.as_ref().unwrap();
        assert_eq!(t.iter().sum::<u64>(), a.steps);
    }

    #[test]
    fn test_sampler_uniform_at_percolation_point() {
        let l = lat(LatticeSpec::square_torus(2, 2));
        let g = potts_params(1).unwrap();
        let exact = exact_distribution(&l, &g).unwrap();
        assert!(exact.iter().all(|p| (p - 1.0 / 256.0).abs() < 1e-15));
        let r = metropolis_sample(&l, &g, 20_000, 3).unwrap();
        assert_eq!(r.acceptance_rate, 1.0);
        assert!(total_variation(&r.empirical().unwrap(), &exact) < 0.05);
    }

    #[test]
    fn test_sampler_matches_exact_small_torus() {
        let l = lat(LatticeSpec::square_torus(2, 2));
        let g = potts_params(2).unwrap();
        let exact = exact_distribution(&l, &g).unwrap();
        let chains = run_chains(&l, &g, &SamplerOptions::new(20_000, 0), &[1, 2, 3, 4]).unwrap();
        let merged = merge_tallies(&chains).unwrap();
        let total: u64 = merged.iter().sum();
        let emp: Vec<f64> = merged.iter().map(|&c| c as f64 / total as f64).collect();
        assert!(total_variation(&emp, &exact) < 0.02);
        let m = exact_mean_loops(&l, &exact);
        for c in &chains {
            assert!((c.mean_loops - m).abs() < 4.0 * c.loops_std_error + 1e-9, "{} vs {m}", c.mean_loops);
            assert!(c.recounts > 0);
        }
    }

    #[test]
    fn test_trace_csv() {
        let l = lat(LatticeSpec::square_torus(2, 2));
        let g = potts_params(2).unwrap();
        let opts = SamplerOptions { trace_every: Some(10), ..SamplerOptions::new(100, 5) };
        let r = metropolis_sample_with(&l, &g, &opts).unwrap();
        assert_eq!(r.trace.len(), 10);
        assert_eq!(r.trace_csv().lines().count(), 11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_cluster_form_swap_ratio_is_class_constant(s in 0u64..(1 << 18)) {
            let l = lat(LatticeSpec::square_torus(3, 3));
            let g = potts_params(2).unwrap();
            let a = fk_weight(&l, &s, &g);
            let t = l.swap_symmetry(s);
            let b = fk_weight(&l, &t, &g);
            let c = l.extract_walls(&s);
            let class = TorusClass::of(&c);
            // w(s)/w(swap s) = n^{2(C−C*)+(E−E*)} with the exponent fixed by the class.
            let expected = match (class.cluster_ranks.contains(&2), class.dual_cluster_ranks.contains(&2)) {
                (true, _) => 2,
                (_, true) => -2,
                _ => 0,
            };
            let e = 2 * (a.clusters as i64 - a.dual_clusters as i64) + (a.edges as i64 - a.dual_edges as i64);
            prop_assert_eq!(e, expected);
            let ratio = a.cluster_form.div(&b.cluster_form).unwrap();
            let n = g.n.clone();
            let want = if e >= 0 { n.pow(e as u32) } else { n.inv().unwrap().pow((-e) as u32) };
            prop_assert_eq!(ratio, want);
        }

        #[test]
        fn prop_incremental_clusters_match_recount(seed in 0u64..1000) {
            let l = lat(LatticeSpec::square_torus(3, 2));
            let g = potts_params(3).unwrap();
            let opts = SamplerOptions { tallies: false, ..SamplerOptions::new(400, seed) };
            prop_assert!(metropolis_sample_with(&l, &g, &opts).is_ok());
        }
    }
}
