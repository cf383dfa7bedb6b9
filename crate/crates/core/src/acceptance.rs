//! The fourteen acceptance criteria as library calls, shared by the
//! `acceptance` test binary and `tlgas verify`.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::annular::{annular_closure, annular_report};
use crate::error::Result;
use crate::hamiltonian::{
    build_hprime, build_h0, build_ring_exchange, code_space_probe, containment_check, joint_kernel, kernel_dense,
    kernel_propagate, pauli_expand_check,
};
use crate::lattice::{explore_component, LatticeSpec, Model, SurfaceLattice, DEFAULT_COMPONENT_CAP};
use crate::loopgas::{
    exact_distribution, exact_mean_loops, gibbs_law_check, iid_tv_floor, loop_cluster_check, metropolis_sample,
    potts_match, potts_params, total_variation,
};
use crate::modular::{level_table, FIG02_ROWS};
use crate::scalar::{quantum_integer_poly, Backend, Ring};
use crate::structure::{expectation_suite, verify_ideal_theorem};
use crate::tl::{catalan, jones_wenzl, jones_wenzl_exact, signature_scan, special_signature, TlDiagram};

/// Criteria whose failure is explained in the decisions ledger: the printed
/// Pauli displays, the sampler's statistical floor at 10⁶ sweeps, the literal
/// β family, and the ℓ = 4 even-S rank.
pub const KNOWN_FAILURES: [u8; 4] = [6, 11, 13, 14];

pub const SAMPLER_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub data: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("{tag} [{:>2}] {}: {} ({:.1}s)", self.id, self.name, self.detail, self.seconds)
    }
}

pub const NAMES: [&str; 14] = [
    "Catalan dimensions",
    "Jones-Wenzl suite",
    "Gram signature scan",
    "ideal generated by p_{l+1} equals the radical",
    "conditional expectation formula",
    "Pauli expansion of box projectors",
    "kernel oracle equivalence",
    "staircase ergodicity",
    "Gibbs law on kernel vectors",
    "loop/cluster correspondence",
    "Metropolis sampler vs exact distribution",
    "joint-kernel trichotomy",
    "annular suite",
    "level table",
];

type Outcome = (bool, String, Value);

pub fn run(id: u8) -> CriterionResult {
    let t = Instant::now();
    let out: Result<Outcome> = match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(),
        6 => c6(),
        7 => c7(),
        8 => c8(),
        9 => c9(),
        10 => c10(),
        11 => c11(),
        12 => c12(),
        13 => c13(),
        14 => c14(),
        _ => Err(crate::Error::ConfigInvalid(format!("no criterion {id}"))),
    };
    let (pass, detail, data) = out.unwrap_or_else(|e| (false, format!("error: {e}"), json!({"error": e.to_string()})));
    CriterionResult {
        id,
        name: NAMES.get(id as usize - 1).copied().unwrap_or("unknown"),
        pass,
        detail,
        seconds: t.elapsed().as_secs_f64(),
        data,
    }
}

fn torus(w: usize) -> Result<SurfaceLattice> {
    SurfaceLattice::new(LatticeSpec::square_torus(w, w))
}

fn c1() -> Result<Outcome> {
    let mut checked = 0;
    let mut bad = Vec::new();
    for total in (0..=20).step_by(2) {
        for m in 0..=total {
            let got = TlDiagram::enumerate(m, total - m).len() as u128;
            checked += 1;
            if got != catalan(total / 2) {
                bad.push((m, total - m));
            }
        }
    }
    Ok((bad.is_empty(), format!("{checked} Hom-spaces, {} mismatches", bad.len()), json!({"checked": checked, "mismatches": bad})))
}

fn c2() -> Result<Outcome> {
    let mut failures = Vec::new();
    for k in 1..=8 {
        if let Err(e) = jones_wenzl_exact(k).verify() {
            failures.push(e.to_string());
        }
    }
    let mut vanish = Vec::new();
    for ell in 1..=3u32 {
        let b = Backend::Special(ell);
        let p = jones_wenzl(ell as usize + 1, b)?;
        let tr = p.trace(&b.d())?;
        // Also from the generic trace polynomial [ℓ+2] evaluated in the field.
        let q = b.eval_poly(&quantum_integer_poly(ell as i64 + 2));
        vanish.push(tr.is_zero() && q.is_zero());
    }
    let pass = failures.is_empty() && vanish.iter().all(|&v| v);
    Ok((
        pass,
        format!("k<=8 idempotent/annihilated/trace ok: {}; Tr(p_(l+1))=0 at l=1,2,3: {vanish:?}", failures.is_empty()),
        json!({"failures": failures, "trace_vanishes": vanish}),
    ))
}

fn c3() -> Result<Outcome> {
    let positive: Vec<_> = [2.0, 2.5, 3.0].iter().map(|&d| signature_scan(d, 5)).collect();
    let mixed: Vec<_> = [0.5, 1.3].iter().map(|&d| signature_scan(d, 5)).collect();
    let special: Vec<_> = (1..=3).map(|ell| special_signature(ell, 5)).collect::<Result<_>>()?;
    let pos_ok = positive.iter().all(|s| s.nonnegative && s.grades.iter().all(|g| g.zero == 0));
    let mix_ok = mixed.iter().all(|s| s.mixed);
    let spec_ok = special.iter().all(|s| s.scan.nonnegative && s.float_agrees && s.corank_pattern && s.kernel_is_jw);
    Ok((
        pos_ok && mix_ok && spec_ok,
        format!("positive at d=2,2.5,3: {pos_ok}; special values (corank pattern, kernel = p_(l+1), float=exact): {spec_ok}; mixed at d=0.5,1.3: {mix_ok}"),
        json!({"positive": positive, "mixed": mixed, "special": special}),
    ))
}

fn c4() -> Result<Outcome> {
    let reports: Vec<_> = (1..=3).map(|ell| verify_ideal_theorem(ell, 6)).collect::<Result<_>>()?;
    let pass = reports.iter().all(|r| r.grades.iter().all(|g| g.equal));
    let dims: Vec<Vec<usize>> = reports.iter().map(|r| r.grades.iter().map(|g| g.radical_dim).collect()).collect();
    Ok((pass, format!("equal at every grade <= 6 for l=1,2,3; radical dims {dims:?}"), json!(reports)))
}

fn c5() -> Result<Outcome> {
    let r = expectation_suite(200, 5)?;
    let pass = r.trace_failures == 0 && r.formula_failures == 0;
    Ok((
        pass,
        format!("{} samples, {} trace failures, {} formula failures", r.samples, r.trace_failures, r.formula_failures),
        json!(r),
    ))
}

fn c6() -> Result<Outcome> {
    let checks: Vec<_> = [2, 3].iter().map(|&ell| pauli_expand_check(ell)).collect::<Result<_>>()?;
    let pass = checks.iter().all(|c| c.all_equal());
    let c = &checks[0];
    let equal: Vec<&str> = c.displays.iter().filter(|d| d.equal).map(|d| d.name).collect();
    let corrected = checks.iter().all(|c| c.displays.iter().all(|d| d.corrected_equal));
    Ok((
        pass,
        format!("printed forms equal to the projector: {equal:?} of 4; all equal after corrections: {corrected}"),
        json!(checks),
    ))
}

fn c7() -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut pass = true;
    for w in [2, 3] {
        let lat = torus(w)?;
        for ell in 1..=3u32 {
            let b = Backend::Special(ell);
            let hp = build_hprime(&lat, b)?;
            let (e1, f1) = (kernel_propagate(&hp)?, kernel_dense(&hp)?);
            let hr = build_ring_exchange(&lat, b)?;
            let (e2, f2) = (kernel_propagate(&hr)?, kernel_dense(&hr)?);
            let contained = containment_check(&e1, &hr);
            pass &= e1.dim() == f1.dim() && e2.dim() == f2.dim() && contained;
            rows.push(json!({
                "torus": w, "ell": ell,
                "hprime": [e1.dim(), f1.dim()], "ring_exchange": [e2.dim(), f2.dim()],
                "residual": f1.max_residual.max(f2.max_residual), "contained": contained,
            }));
        }
    }
    let dims: Vec<String> =
        rows.iter().map(|r| format!("{}x{} l={}: H' {} H'' {}", r["torus"], r["torus"], r["ell"], r["hprime"][0], r["ring_exchange"][0])).collect();
    Ok((pass, format!("{}; containment holds: {pass}", dims.join(", ")), json!(rows)))
}

fn c8() -> Result<Outcome> {
    let small = torus(2)?;
    let mut frozen = Vec::new();
    for s in small.staircases()? {
        frozen.push(explore_component(&small, Model::HPrime, s, 16)?.len());
    }
    let big = torus(3)?;
    let sts = big.staircases()?;
    let comp = explore_component(&big, Model::HPrime, sts[0], DEFAULT_COMPONENT_CAP)?;
    let shared = sts.iter().all(|&s| comp.contains(s));
    let pass = frozen.iter().all(|&n| n == 1) && shared;
    Ok((
        pass,
        format!("2x2 staircase component sizes {frozen:?}; 3x3: {} staircases in one component of {} states: {shared}", sts.len(), comp.len()),
        json!({"frozen_sizes": frozen, "staircases_3x3": sts.len(), "component_size": comp.len(), "shared": shared}),
    ))
}

fn c9() -> Result<Outcome> {
    let mut reports = Vec::new();
    for ell in [2u32, 3] {
        let b = Backend::Special(ell);
        for lat in [torus(2)?, torus(3)?] {
            let cs = build_hprime(&lat, b)?;
            reports.push(gibbs_law_check(&lat, &cs, &kernel_propagate(&cs)?)?);
        }
        let tri = SurfaceLattice::new(LatticeSpec::triangulated_torus(4, 4))?;
        let cs = build_h0(&tri, b)?;
        reports.push(gibbs_law_check(&tri, &cs, &kernel_propagate(&cs)?)?);
    }
    let pass = reports.iter().all(|r| r.violations == 0);
    let states: usize = reports.iter().map(|r| r.states_checked).sum();
    let comps: usize = reports.iter().map(|r| r.components).sum();
    Ok((pass, format!("{comps} components, {states} amplitudes, violations {}", reports.iter().map(|r| r.violations).sum::<usize>()), json!(reports)))
}

fn c10() -> Result<Outcome> {
    let mut out = Vec::new();
    let mut pass = true;
    let mut potts = Vec::new();
    for ell in [2u32, 3] {
        let g = potts_params(ell)?;
        let patch = loop_cluster_check(&SurfaceLattice::new(LatticeSpec::square_disk(2, 3))?, &g)?;
        let lat = torus(3)?;
        let tor = loop_cluster_check(&lat, &g)?;
        pass &= patch.loop_rule_holds && patch.constant_per_class;
        pass &= tor.loop_rule_holds && tor.constant_per_class && tor.planar_exponent_matches;
        pass &= tor.self_dual_point && tor.self_dual && tor.self_dual_point_unique;
        let cs = build_hprime(&lat, g.backend())?;
        let k = kernel_propagate(&cs)?;
        let v = k.vector_through(cs.index_of(0).expect("all-minus state")).expect("foam vector");
        let m = potts_match(&lat, &cs, &v.idx, &v.val, &g);
        pass &= m.exact_match && m.max_float_deviation < 1e-12;
        potts.push(m);
        out.push(json!({"ell": ell, "patch": patch, "torus": tor}));
    }
    let classes = out[0]["torus"]["classes"].as_array().map(|a| a.len()).unwrap_or(0);
    Ok((
        pass,
        format!(
            "2x3 patch L=C+C*; 3x3 torus L+r2=C+C*, {classes} homology classes each with one constant; p/(1-p)=sqrt(q) exact and unique; foam component equals Potts (exact, {} states)",
            potts[0].states
        ),
        json!({"checks": out, "foam_potts": potts}),
    ))
}

fn c11() -> Result<Outcome> {
    let lat = torus(3)?;
    let g = potts_params(2)?;
    let exact = exact_distribution(&lat, &g)?;
    let rec = metropolis_sample(&lat, &g, 1_000_000, SAMPLER_SEED)?;
    let emp = rec.empirical().expect("tallies kept");
    let tv = total_variation(&emp, &exact);
    let floor = iid_tv_floor(&exact, rec.steps as f64);
    let mean = exact_mean_loops(&lat, &exact);
    let z = (rec.mean_loops - mean) / rec.loops_std_error;
    Ok((
        tv < 0.05,
        format!(
            "TV {tv:.4} (threshold 0.05; iid floor at {} samples {floor:.4}); mean loops {:.4} vs exact {mean:.4} ({z:+.2} SE)",
            rec.steps, rec.mean_loops
        ),
        json!({"tv": tv, "iid_floor": floor, "exact_mean_loops": mean, "z": z, "record": rec}),
    ))
}

fn c12() -> Result<Outcome> {
    let lat = torus(3)?;
    let one = joint_kernel(&lat, 1, None)?;
    let two = joint_kernel(&lat, 2, None)?;
    let probe1 = code_space_probe(lat.site_count(), &one.basis, 1e-9);
    let probe2 = code_space_probe(lat.site_count(), &two.basis, 1e-9);
    let r1 = &one.report;
    let r2 = &two.report;
    let agree = r1.oracles_agree && r2.oracles_agree;
    let strict = r1.exact_dim.is_some_and(|d| d > 0 && d < r1.base_dim_exact.unwrap_or(usize::MAX));
    let pass = agree && strict && probe1.passes;
    Ok((
        pass,
        format!(
            "l=1: dim {:?}/{:?} (base {:?}) {:?}, target {} matched {}, probe {}; l=2: dim {:?}/{:?} {:?}, target {} matched {}, probe {} (dev {:.2})",
            r1.exact_dim, r1.float_dim, r1.base_dim_exact, r1.verdict, r1.target, r1.target_match, probe1.passes,
            r2.exact_dim, r2.float_dim, r2.verdict, r2.target, r2.target_match, probe2.passes, probe2.max_deviation
        ),
        json!({"ell1": r1, "ell2": r2, "probe1": probe1, "probe2": probe2}),
    ))
}

fn c13() -> Result<Outcome> {
    let b = Backend::Generic;
    let closure = annular_closure(&jones_wenzl(2, b)?, &b.d())?;
    let closure_ok = closure.coeffs().iter().map(|c| c.to_text()).collect::<Vec<_>>() == ["-1", "0", "1"];
    let reports: Vec<_> = [2u32, 3].iter().map(|&ell| annular_report(ell, ell as usize + 2)).collect::<Result<_>>()?;
    let conv: Vec<Option<String>> = reports.iter().map(|r| r.selected_convention.clone()).collect();
    let literal: Vec<bool> = reports.iter().map(|r| r.roots_match_family).collect();
    let real_a: Vec<bool> = reports.iter().map(|r| r.roots_match_family_real_a).collect();
    let pass = closure_ok && conv.iter().all(Option::is_some) && literal.iter().all(|&x| x);
    Ok((
        pass,
        format!(
            "closure(p2) = R^2 - 1: {closure_ok}; beta convention selected for l=2,3: {conv:?}; roots match literal family: {literal:?} (real-A family: {real_a:?})"
        ),
        json!({"closure_p2": closure.coeffs().iter().map(|c| c.to_text()).collect::<Vec<_>>(), "reports": reports}),
    ))
}

fn c14() -> Result<Outcome> {
    let t = level_table(6);
    let mut counts_ok = true;
    let mut literal = Vec::new();
    let mut analysis = Vec::new();
    for (r, &(dim, labels, rev, heat, nonsingular)) in t.iter().zip(FIG02_ROWS.iter()) {
        counts_ok &= (r.label_count, r.label_count, r.color_reversing_count, r.specific_heat) == (dim, labels, rev, heat);
        literal.push(!r.even_singular == nonsingular);
        analysis.push(r.transparent_all_bosons == nonsingular);
    }
    let de3 = (t[2].label_count, t[2].color_reversing_count, t[2].specific_heat) == (4, 4, 8);
    let pass = counts_ok && de3 && literal.iter().all(|&x| x);
    let wrong: Vec<u32> = t.iter().zip(&literal).filter(|(_, &ok)| !ok).map(|(r, _)| r.ell).collect();
    Ok((
        pass,
        format!(
            "counts and specific heats match for l<=6: {counts_ok}; DE3 -> (4,4,8): {de3}; even-S rank flags disagree at l={wrong:?}; transparent-boson rule matches all rows: {}",
            analysis.iter().all(|&x| x)
        ),
        json!({"table": t, "literal_flag_matches": literal, "boson_rule_matches": analysis}),
    ))
}
