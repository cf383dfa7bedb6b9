//! `tlgas`: batch front-end. Each subcommand prints a JSON report bundle
//! and, with `--out`, also writes it and any CSV tables to a directory.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use tlgas::annular::{annular_closure, annular_ideal, annular_report};
use tlgas::hamiltonian::{
    build_model, code_space_probe, joint_kernel, kernel_dense, kernel_propagate, pauli_expand_check, swap_split,
    term_counts, uniform_state_energy,
};
use tlgas::lattice::{all_components, LatticeKind, LatticeSpec, Model, SurfaceLattice, DEFAULT_COMPONENT_CAP};
use tlgas::loopgas::{
    exact_distribution, exact_mean_loops, loop_cluster_check, merge_tallies, potts_params, run_chains, total_variation,
    SamplerOptions, TALLY_SITE_LIMIT,
};
use tlgas::modular::{fig02_csv, level_table, s_matrix, SConvention, FIG02_ROWS};
use tlgas::report::{level_flags, report_bundle, Flag, ReportBundle, RunMeta};
use tlgas::scalar::Backend;
use tlgas::structure::verify_ideal_theorem;
use tlgas::tl::{enumerate_diagrams, gram_corank, gram_matrix, jones_wenzl, radical_basis, signature_scan, special_signature};
use tlgas::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "tlgas", version, about = "Temperley-Lieb calculus, loop-gas ground spaces and FK-Potts statistics")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by all subcommands. Each may also come from `--config`;
/// flags win.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Level ℓ ≥ 1.
    #[arg(long, global = true)]
    ell: Option<u32>,
    /// Lattice kind.
    #[arg(long, global = true, value_enum)]
    lattice: Option<KindArg>,
    /// Lattice size WxH.
    #[arg(long, global = true)]
    size: Option<String>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Largest component explored before giving up.
    #[arg(long, global = true)]
    component_cap: Option<usize>,
    /// Largest enumerated state space.
    #[arg(long, global = true)]
    state_cap: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.json and CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TLGAS_THREADS")]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    Torus,
    Triangulated,
    Disk,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum BackendArg {
    Exact,
    Float,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModelArg {
    H0,
    Hprime,
    RingExchange,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::H0 => Model::H0,
            ModelArg::Hprime => Model::HPrime,
            ModelArg::RingExchange => Model::HDoublePrime,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ConventionArg {
    Shifted,
    Unshifted,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diagrams, Jones-Wenzl projectors, Gram matrices, radicals and ideals.
    #[command(subcommand)]
    Tl(TlCmd),
    /// Annular closures, the annular ideal and the β projectors.
    #[command(subcommand)]
    Annulus(AnnulusCmd),
    /// Level table and S-matrices.
    #[command(subcommand)]
    Table(TableCmd),
    /// Lattices, components, kernels, joint kernels and energies.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Loop/cluster enumeration and the Metropolis sampler.
    #[command(subcommand)]
    Gas(GasCmd),
    /// Runs the acceptance criteria (all, or the listed ones).
    Verify { criteria: Vec<u8> },
}

#[derive(Subcommand, Debug)]
enum TlCmd {
    Diagrams {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    Jw {
        #[arg(long)]
        k: usize,
    },
    Gram {
        #[arg(long)]
        n: usize,
        /// Float d for a signature scan instead of a special value.
        #[arg(long)]
        d: Option<f64>,
    },
    Radical {
        #[arg(long)]
        n: usize,
    },
    Ideal {
        #[arg(long, default_value_t = 5)]
        n_max: usize,
    },
}

#[derive(Subcommand, Debug)]
enum AnnulusCmd {
    /// Annular closure of p_k.
    Closure {
        #[arg(long)]
        k: usize,
    },
    Ideal {
        #[arg(long)]
        grade_cap: Option<usize>,
    },
    Beta {
        #[arg(long)]
        grade_cap: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum TableCmd {
    Fig02 {
        #[arg(long, default_value_t = 6)]
        ellmax: u32,
    },
    Smatrix {
        #[arg(long, value_enum, default_value = "shifted")]
        convention: ConventionArg,
    },
}

#[derive(Subcommand, Debug)]
enum LatticeCmd {
    Build,
    Components {
        #[arg(long, value_enum, default_value = "hprime")]
        model: ModelArg,
    },
    Kernel {
        #[arg(long, value_enum, default_value = "hprime")]
        model: ModelArg,
    },
    JointKernel {
        /// Torus size WxH (overrides --size).
        #[arg(long)]
        torus: Option<String>,
        /// Use only the first N windows.
        #[arg(long)]
        windows: Option<usize>,
    },
    Energy {
        #[arg(long, value_enum, default_value = "hprime")]
        model: ModelArg,
    },
    Pauli,
}

#[derive(Subcommand, Debug)]
enum GasCmd {
    /// Exhaustive loop/cluster correspondence and the exact distribution.
    Exact,
    Sample {
        #[arg(long, default_value_t = 10_000)]
        sweeps: u64,
        #[arg(long, default_value_t = 1)]
        chains: u64,
        /// Trace row every N sweeps in trace.csv.
        #[arg(long)]
        trace_every: Option<u64>,
    },
}

/// Experiment config file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    ell: Option<u32>,
    lattice: Option<KindArg>,
    size: Option<String>,
    backend: Option<BackendArg>,
    component_cap: Option<usize>,
    state_cap: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

/// Resolved settings.
#[derive(Debug)]
struct Settings {
    ell: u32,
    kind: KindArg,
    size: (usize, usize),
    backend: BackendArg,
    component_cap: usize,
    state_cap: usize,
    seed: u64,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

impl Settings {
    fn resolve(c: &CommonArgs) -> Result<Settings> {
        let file: ExperimentConfig = match &c.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", p.display())))?
            }
            None => ExperimentConfig::default(),
        };
        let size = c.size.clone().or(file.size).unwrap_or_else(|| "3x3".into());
        let s = Settings {
            ell: c.ell.or(file.ell).unwrap_or(2),
            kind: c.lattice.or(file.lattice).unwrap_or(KindArg::Torus),
            size: LatticeSpec::parse_dims(&size)?,
            backend: c.backend.or(file.backend).unwrap_or(BackendArg::Exact),
            component_cap: c.component_cap.or(file.component_cap).unwrap_or(DEFAULT_COMPONENT_CAP),
            state_cap: c.state_cap.or(file.state_cap).unwrap_or(1 << 20),
            seed: c.seed.or(file.seed).unwrap_or(1),
            out: c.out.clone().or(file.out),
            threads: c.threads.or(file.threads),
        };
        if s.ell == 0 {
            return Err(Error::ConfigInvalid("ell must be at least 1".into()));
        }
        if s.component_cap == 0 || s.state_cap == 0 || s.threads == Some(0) {
            return Err(Error::ConfigInvalid("caps and thread count must be positive".into()));
        }
        if s.backend == BackendArg::Exact && s.ell > 3 {
            return Err(Error::ConfigInvalid(format!("the exact backend is limited to ell <= 3 (got {})", s.ell)));
        }
        Ok(s)
    }

    fn backend(&self) -> Backend {
        match self.backend {
            BackendArg::Exact => Backend::Special(self.ell),
            BackendArg::Float => Backend::Float(Backend::Special(self.ell).d_f64().expect("special value")),
        }
    }

    fn spec(&self) -> LatticeSpec {
        let (w, h) = self.size;
        match self.kind {
            KindArg::Torus => LatticeSpec::square_torus(w, h),
            KindArg::Triangulated => LatticeSpec::triangulated_torus(w, h),
            KindArg::Disk => LatticeSpec::square_disk(w, h),
        }
    }

    fn lattice(&self) -> Result<SurfaceLattice> {
        SurfaceLattice::new(self.spec())
    }

    /// Refuses enumerations beyond the configured state cap.
    fn check_states(&self, lat: &SurfaceLattice) -> Result<()> {
        let n = lat.site_count();
        let states = 1usize.checked_shl(n as u32).filter(|_| n < 63).unwrap_or(usize::MAX);
        if states > self.state_cap {
            return Err(Error::StateSpaceTooLarge { states, cap: self.state_cap });
        }
        Ok(())
    }

    fn meta(&self, tolerance: Option<f64>, seeded: bool) -> RunMeta {
        RunMeta {
            backend: Some(self.backend().label()),
            seed: seeded.then_some(self.seed),
            tolerance,
            threads: Some(rayon::current_num_threads()),
        }
    }
}

/// A finished command: report sections, CSV artifacts and flags.
struct Output {
    sections: Vec<(String, Value)>,
    csv: Vec<(String, String)>,
    flags: Vec<Flag>,
    tolerance: Option<f64>,
    seeded: bool,
    /// Nonzero exit without a module error (e.g. failed acceptance criteria).
    status: Option<Error>,
}

impl Output {
    fn new(name: &str, v: Value) -> Self {
        Output { sections: vec![(name.into(), v)], csv: Vec::new(), flags: Vec::new(), tolerance: None, seeded: false, status: None }
    }

    fn csv(mut self, name: &str, body: String) -> Self {
        self.csv.push((name.into(), body));
        self
    }

    fn tol(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn matrix_csv(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| r.join(",")).collect::<Vec<_>>().join("\n") + "\n"
}

fn run_tl(cmd: &TlCmd, s: &Settings) -> Result<Output> {
    let ell = s.ell;
    Ok(match cmd {
        TlCmd::Diagrams { m, n } => {
            if (m + n) % 2 == 1 {
                return Err(Error::SignatureMismatch(format!("m + n must be even (got {m} + {n})")));
            }
            let ds = enumerate_diagrams(*m, *n);
            let list: Vec<Value> = ds.iter().map(|d| json!(d.pairing())).collect();
            Output::new("diagrams", json!({"m": m, "n": n, "count": ds.len(), "pairings": list}))
        }
        TlCmd::Jw { k } => {
            let b = s.backend();
            let p = jones_wenzl(*k, b)?;
            Output::new("jones_wenzl", json!({"k": k, "backend": b.label(), "terms": p.len(), "morphism": p.to_json()}))
        }
        TlCmd::Gram { n, d } => match d {
            Some(d) => {
                let scan = signature_scan(*d, *n);
                Output::new("signature", to_value(&scan)).tol(tlgas::tl::gram::SIGNATURE_TOL)
            }
            None => {
                let b = s.backend();
                let g = gram_matrix(*n, *n, b);
                let rows: Vec<Vec<String>> = g.iter().map(|r| r.iter().map(|x| x.to_text()).collect()).collect();
                let sig = special_signature(ell, *n)?;
                let corank = gram_corank(*n, ell);
                Output::new("gram", json!({"n": n, "ell": ell, "dim": g.len(), "corank": corank, "signature": sig}))
                    .csv("gram.csv", matrix_csv(&rows))
                    .tol(tlgas::tl::gram::SIGNATURE_TOL)
            }
        },
        TlCmd::Radical { n } => {
            let r = radical_basis(*n, ell);
            Output::new("radical", json!({"n": n, "ell": ell, "dim": r.len(), "basis": r.iter().map(|m| m.to_json()).collect::<Vec<_>>()}))
        }
        TlCmd::Ideal { n_max } => Output::new("ideal", to_value(&verify_ideal_theorem(ell, *n_max)?)),
    })
}

fn run_annulus(cmd: &AnnulusCmd, s: &Settings) -> Result<Output> {
    let ell = s.ell;
    let cap = |c: &Option<usize>| c.unwrap_or(ell as usize + 2);
    Ok(match cmd {
        AnnulusCmd::Closure { k } => {
            let b = Backend::Generic;
            let c = annular_closure(&jones_wenzl(*k, b)?, &b.d())?;
            let coeffs: Vec<String> = c.coeffs().iter().map(|x| x.to_text()).collect();
            Output::new("closure", json!({"k": k, "coefficients_low_to_high": coeffs}))
        }
        AnnulusCmd::Ideal { grade_cap } => {
            let i = annular_ideal(ell, cap(grade_cap))?;
            let coeffs: Vec<String> = i.generator.coeffs().iter().map(|x| x.to_text()).collect();
            let (roots, _) = i.generator.float_roots();
            Output::new("annular_ideal", json!({"ell": ell, "grade_cap": i.grade_cap, "closures_used": i.closures_used, "generator": coeffs, "roots": roots}))
        }
        AnnulusCmd::Beta { grade_cap } => {
            let r = annular_report(ell, cap(grade_cap))?;
            let mut o = Output::new("annular", to_value(&r)).tol(1e-9);
            if r.selected_convention.is_none() {
                o.flags.push(Flag::new("beta-no-convention", format!("no S-convention makes the β family pass at ell = {ell}")));
            }
            if !r.roots_match_family {
                o.flags.push(Flag::new("ring-eigenvalue-family", format!("generator roots differ from the quoted eigenvalue family at ell = {ell}")));
            }
            o
        }
    })
}

fn run_table(cmd: &TableCmd, s: &Settings) -> Result<Output> {
    Ok(match cmd {
        TableCmd::Fig02 { ellmax } => {
            let t = level_table(*ellmax);
            let mut o = Output::new("level_table", to_value(&t)).csv("fig02.csv", fig02_csv(&t));
            let disagree: Vec<u32> = t
                .iter()
                .zip(FIG02_ROWS.iter())
                .filter(|(r, row)| r.even_singular == row.4)
                .map(|(r, _)| r.ell)
                .collect();
            if !disagree.is_empty() {
                o.flags.push(Flag::new(
                    "even-s-rank",
                    format!("computed even-S singularity differs from the published nonsingular column at ell = {disagree:?}"),
                ));
            }
            o
        }
        TableCmd::Smatrix { convention } => {
            let conv = match convention {
                ConventionArg::Shifted => SConvention::Shifted,
                ConventionArg::Unshifted => SConvention::Unshifted,
            };
            let m = s_matrix(s.ell, conv);
            let rows: Vec<Vec<String>> = (0..m.nrows()).map(|i| m.row(i).iter().map(|x| format!("{x:.15}")).collect()).collect();
            let data: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
            Output::new("s_matrix", json!({"ell": s.ell, "convention": conv.name(), "matrix": data})).csv("smatrix.csv", matrix_csv(&rows)).tol(1e-12)
        }
    })
}

fn run_lattice(cmd: &LatticeCmd, s: &Settings) -> Result<Output> {
    Ok(match cmd {
        LatticeCmd::Build => {
            let lat = s.lattice()?;
            let model = if lat.is_plaque_model() { Model::H0 } else { Model::HPrime };
            let counts: Vec<(String, usize)> = term_counts(&lat, model).into_iter().map(|(k, v)| (format!("{k:?}"), v)).collect();
            Output::new(
                "lattice",
                json!({
                    "spec": lat.spec(), "sites": lat.site_count(), "vertices": lat.vertex_count(),
                    "edges": lat.edge_count(), "faces": lat.face_count(), "euler_characteristic": lat.euler_characteristic(),
                    "model": model, "term_counts": counts,
                }),
            )
        }
        LatticeCmd::Components { model } => {
            let lat = s.lattice()?;
            s.check_states(&lat)?;
            let comps = all_components(&lat, (*model).into(), TALLY_SITE_LIMIT)?;
            if comps.iter().any(|c| c.len() > s.component_cap) {
                return Err(Error::ComponentCapExceeded { cap: s.component_cap });
            }
            let mut sizes: Vec<usize> = comps.iter().map(|c| c.len()).collect();
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            let inconsistent = comps.iter().filter(|c| !c.consistent).count();
            let csv = "component,size,consistent\n".to_string()
                + &comps.iter().enumerate().map(|(i, c)| format!("{i},{},{}\n", c.len(), c.consistent)).collect::<String>();
            Output::new("components", json!({"spec": lat.spec(), "count": comps.len(), "inconsistent": inconsistent, "sizes_desc": sizes}))
                .csv("components.csv", csv)
        }
        LatticeCmd::Kernel { model } => {
            let lat = s.lattice()?;
            s.check_states(&lat)?;
            let backend = s.backend();
            let cs = build_model(&lat, (*model).into(), backend)?;
            let mut v = json!({"spec": lat.spec(), "model": Model::from(*model), "rows": cs.row_count(), "states": cs.state_count()});
            if backend.is_exact() {
                let ek = kernel_propagate(&cs)?;
                v["exact_dim"] = json!(ek.dim());
                v["components"] = json!(ek.components.len());
                v["zero_components"] = json!(ek.zero_components);
                if lat.spec().kind == LatticeKind::SquareTorus && lat.spec().w == lat.spec().h {
                    v["swap_split"] = to_value(&swap_split(&lat, &cs, &ek)?);
                }
            }
            let fk = kernel_dense(&cs)?;
            v["float_dim"] = json!(fk.dim());
            v["max_residual"] = json!(fk.max_residual);
            if let (Some(e), Some(f)) = (v["exact_dim"].as_u64(), v["float_dim"].as_u64()) {
                if e != f {
                    return Err(Error::OracleMismatch(format!("exact kernel dimension {e} vs float {f}")));
                }
            }
            Output::new("kernel", v).tol(1e-8)
        }
        LatticeCmd::JointKernel { torus, windows } => {
            let (w, h) = match torus {
                Some(t) => LatticeSpec::parse_dims(t)?,
                None => s.size,
            };
            let lat = SurfaceLattice::new(LatticeSpec::square_torus(w, h))?;
            s.check_states(&lat)?;
            let jk = joint_kernel(&lat, s.ell, *windows)?;
            let probe = code_space_probe(lat.site_count(), &jk.basis, 1e-9);
            let mut o = Output::new("joint_kernel", to_value(&jk.report)).tol(1e-8);
            o.sections.push(("code_space_probe".into(), to_value(&probe)));
            if !jk.report.oracles_agree {
                o.status = Some(Error::OracleMismatch("joint kernel solvers disagree".into()));
            }
            o
        }
        LatticeCmd::Energy { model } => {
            let lat = s.lattice()?;
            s.check_states(&lat)?;
            let cs = build_model(&lat, (*model).into(), s.backend())?;
            Output::new("energy", to_value(&uniform_state_energy(&cs)?))
        }
        LatticeCmd::Pauli => {
            let c = pauli_expand_check(s.ell)?;
            let mut o = Output::new("pauli", to_value(&c));
            if !c.all_equal() {
                o.flags.push(Flag::new("pauli-displays", "some printed Pauli polynomials differ from the projectors; see corrections"));
            }
            o
        }
    })
}

fn run_gas(cmd: &GasCmd, s: &Settings) -> Result<Output> {
    let g = potts_params(s.ell)?;
    let lat = s.lattice()?;
    Ok(match cmd {
        GasCmd::Exact => {
            s.check_states(&lat)?;
            let check = loop_cluster_check(&lat, &g)?;
            let dist = exact_distribution(&lat, &g)?;
            let mean = exact_mean_loops(&lat, &dist);
            let mut o = Output::new("gibbs_model", to_value(&g));
            o.sections.push(("loop_cluster".into(), to_value(&check)));
            o.sections.push(("exact_mean_loops".into(), json!(mean)));
            o.tol(1e-12)
        }
        GasCmd::Sample { sweeps, chains, trace_every } => {
            let tallies = lat.site_count() <= TALLY_SITE_LIMIT && (1usize << lat.site_count()) <= s.state_cap;
            let opts = SamplerOptions { tallies, trace_every: *trace_every, ..SamplerOptions::new(*sweeps, s.seed) };
            let seeds: Vec<u64> = (0..*chains).map(|i| s.seed.wrapping_add(i)).collect();
            let records = run_chains(&lat, &g, &opts, &seeds)?;
            let mut summary = json!({"gibbs_model": g, "chains": records});
            if tallies {
                let exact = exact_distribution(&lat, &g)?;
                let merged = merge_tallies(&records).expect("tallies kept");
                let total: u64 = merged.iter().sum();
                let emp: Vec<f64> = merged.iter().map(|&c| c as f64 / total as f64).collect();
                summary["tv_distance"] = json!(total_variation(&emp, &exact));
                summary["exact_mean_loops"] = json!(exact_mean_loops(&lat, &exact));
            }
            let mut o = Output::new("sample", summary);
            o.seeded = true;
            if trace_every.is_some() {
                let mut csv = String::from("seed,sweep,loops,clusters,dual_clusters,acceptance\n");
                for r in &records {
                    for t in &r.trace {
                        csv.push_str(&format!("{},{},{},{},{},{:.6}\n", r.seed, t.sweep, t.loops, t.clusters, t.dual_clusters, t.acceptance));
                    }
                }
                o = o.csv("trace.csv", csv);
            }
            o
        }
    })
}

fn run_verify(criteria: &[u8]) -> Output {
    let ids: Vec<u8> = if criteria.is_empty() { (1..=14).collect() } else { criteria.to_vec() };
    let results: Vec<_> = ids.iter().map(|&i| tlgas::acceptance::run(i)).collect();
    for r in &results {
        eprintln!("{}", r.line());
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    let mut o = Output::new("acceptance", to_value(&results));
    o.seeded = true;
    if !failed.is_empty() {
        o.status = Some(Error::InvariantViolation(format!("criteria {failed:?} failed")));
    }
    o
}

fn command_name(c: &Command) -> String {
    // Debug of a unit-or-struct variant starts with its name.
    fn leaf<T: std::fmt::Debug>(x: &T) -> String {
        let d = format!("{x:?}");
        let name = d.split([' ', '{', '(']).next().unwrap_or_default();
        let mut out = String::new();
        for (i, ch) in name.chars().enumerate() {
            if ch.is_uppercase() && i > 0 {
                out.push('-');
            }
            out.push(ch.to_ascii_lowercase());
        }
        out
    }
    match c {
        Command::Tl(t) => format!("tl {}", leaf(t)),
        Command::Annulus(a) => format!("annulus {}", leaf(a)),
        Command::Table(t) => format!("table {}", leaf(t)),
        Command::Lattice(l) => format!("lattice {}", leaf(l)),
        Command::Gas(g) => format!("gas {}", leaf(g)),
        Command::Verify { .. } => "verify".into(),
    }
}

fn write_artifacts(dir: &PathBuf, bundle: &ReportBundle, csv: &[(String, String)]) -> Result<()> {
    let io = |e: std::io::Error| Error::ConfigInvalid(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("report.json"), bundle.to_json()).map_err(io)?;
    for (name, body) in csv {
        std::fs::write(dir.join(name), body).map_err(io)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Option<Error>> {
    let started = SystemTime::now();
    let s = Settings::resolve(&cli.common)?;
    if let Some(n) = s.threads {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = match &cli.command {
        Command::Tl(c) => run_tl(c, &s)?,
        Command::Annulus(c) => run_annulus(c, &s)?,
        Command::Table(c) => run_table(c, &s)?,
        Command::Lattice(c) => run_lattice(c, &s)?,
        Command::Gas(c) => run_gas(c, &s)?,
        Command::Verify { criteria } => run_verify(criteria),
    };
    let mut flags = level_flags(s.ell);
    flags.extend(out.flags);
    let mut bundle = report_bundle(&command_name(&cli.command), out.sections, s.meta(out.tolerance, out.seeded), flags)?;
    bundle.stamp(started);
    if let Some(dir) = &s.out {
        write_artifacts(dir, &bundle, &out.csv)?;
    }
    // A closed pipe (e.g. `| head`) is not an error of the run.
    let _ = writeln!(std::io::stdout().lock(), "{}", bundle.to_json());
    Ok(out.status)
}

fn fail(e: &Error) -> ExitCode {
    let report = json!({"error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code()});
    eprintln!("{report}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => fail(&e),
    }
}
