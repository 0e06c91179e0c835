//! Command-line front end: lattice generation, potential construction and
//! validation, energy evaluation, classification, reference growth, path
//! machinery, the energy ledger, relaxation experiments, and the full
//! verification suite.
//!
//! Structured results go to stdout as JSON; CSV is reserved for
//! plot-feeding tables and XYZ for geometry. Exit codes: 0 success,
//! 2 validation failure, 1 error, 64 usage.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde_json::json;

use closepack::energy::{self, Configuration};
use closepack::io::{self, fmt17, RunManifest};
use closepack::lattice::{self, LatticeKind, LatticeSite};
use closepack::paths;
use closepack::potential::{
    build_canonical_pair, build_canonical_triple, efcc_argmin, renormalized_pair_derivative,
    tune_equilibrium, validate, CanonicalOptions, PotentialPair, PotentialTriple,
};
use closepack::relax::{self, RelaxMethod, RelaxOptions};
use closepack::topology::{bond_graph, classify, SiteClass};
use closepack::{decomp, embed, verify, Result};

#[derive(Parser)]
#[command(name = "closepack", version, about = "Close-packed crystal analysis toolkit")]
struct Cli {
    /// Worker thread budget. Accepted for interface stability; all
    /// reductions run sequentially so results are identical at any value.
    #[arg(long, global = true, default_value_t = default_threads())]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Fcc,
    Hcp,
}

impl From<KindArg> for LatticeKind {
    fn from(k: KindArg) -> LatticeKind {
        match k {
            KindArg::Fcc => LatticeKind::Fcc,
            KindArg::Hcp => LatticeKind::Hcp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fire,
    GradientBacktrack,
}

#[derive(Args)]
struct PotentialSource {
    /// Localization parameter for the canonical family.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// JSON file with an explicit pair potential (overrides --alpha).
    #[arg(long)]
    potential: Option<PathBuf>,
}

impl PotentialSource {
    /// Tuned pair potential plus the matching triple potential.
    fn load(&self) -> Result<(PotentialPair, PotentialTriple)> {
        let v = match &self.potential {
            Some(path) => PotentialPair::from_json(&std::fs::read_to_string(path)?)?,
            None => tune_equilibrium(&build_canonical_pair(
                self.alpha,
                &CanonicalOptions::default(),
            )?)?,
        };
        let psi = build_canonical_triple(v.alpha)?;
        Ok((v, psi))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Lattice site generation and shell tables.
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// Build, validate, and tune the potential family.
    Potential {
        #[command(subcommand)]
        cmd: PotentialCmd,
    },
    /// Energy evaluation.
    Energy {
        #[command(subcommand)]
        cmd: EnergyCmd,
    },
    /// Site classification against the kissing polyhedra.
    Classify {
        #[command(subcommand)]
        cmd: ClassifyCmd,
    },
    /// Discrete reference-configuration growth.
    Embed {
        #[command(subcommand)]
        cmd: EmbedCmd,
    },
    /// Lattice path enumeration and identities.
    Paths {
        #[command(subcommand)]
        cmd: PathsCmd,
    },
    /// Structural / elastic / defect energy ledger.
    Decompose {
        #[command(subcommand)]
        cmd: DecomposeCmd,
    },
    /// Relaxation and the headline experiments.
    Relax {
        #[command(subcommand)]
        cmd: RelaxCmd,
    },
    /// Acceptance suite.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Generate the sites of a lattice ball as extended XYZ.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        radius: f64,
        /// Write here instead of stdout (a manifest sidecar is added).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shell distances and counts up to a radius.
    Shells {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        rmax: f64,
        /// Emit a {distance: count} JSON object (default is a CSV table).
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum PotentialCmd {
    /// Construct the canonical pair/triple potentials.
    Build {
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Also tune the tail amplitude for unit equilibrium.
        #[arg(long)]
        tune: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every admissibility condition and report margins.
    Validate {
        #[command(flatten)]
        source: PotentialSource,
    },
    /// Tune the tail amplitude so the renormalized slope vanishes at 1.
    Tune {
        #[command(flatten)]
        source: PotentialSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EnergyCmd {
    /// Total energy of an XYZ configuration (periodic when the comment
    /// line carries a Lattice= cell).
    Eval {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        source: PotentialSource,
    },
}

#[derive(Subcommand)]
enum ClassifyCmd {
    /// Classify every site of an XYZ configuration.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Per-site CSV (id, class, degree, half_edges, rmsd).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Extended XYZ with the class as the species column.
        #[arg(long)]
        colored_xyz: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EmbedCmd {
    /// Grow a reference configuration from a seed particle.
    Grow {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Seed particle id.
        #[arg(long)]
        seed: usize,
        /// Domain radius r.
        #[arg(long)]
        radius: f64,
    },
}

#[derive(Subcommand)]
enum PathsCmd {
    /// All admissible paths to an endpoint (fcc doubled coordinates).
    Enumerate {
        /// Endpoint as "d1,d2,d3" in doubled fcc coordinates.
        #[arg(long)]
        endpoint: String,
    },
    /// Shell identity residuals over random bases.
    CheckLemmaLambda {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 20)]
        bases: usize,
        #[arg(long, default_value_t = 6)]
        seed: u64,
    },
    /// Weight normalization at an endpoint.
    CheckNormalization {
        #[arg(long)]
        endpoint: String,
    },
}

#[derive(Subcommand)]
enum DecomposeCmd {
    /// Full structural / elastic / defect ledger of a configuration.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        source: PotentialSource,
    },
    /// Excess-energy fine bound report.
    Finebound {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        source: PotentialSource,
    },
}

#[derive(Subcommand)]
enum RelaxCmd {
    /// Minimize the energy of an XYZ configuration.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        source: PotentialSource,
        #[arg(long, value_enum, default_value = "fire")]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-8)]
        force_tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 1e-2)]
        step_init: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the relaxed configuration here (with a manifest sidecar).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-particle energy of exact balls against the bulk value (CSV).
    UpperBound {
        /// Comma-separated radii.
        #[arg(long, default_value = "3,4,5,6,8")]
        radii: String,
        #[command(flatten)]
        source: PotentialSource,
    },
    /// Interior per-particle comparison of the two stackings.
    FccVsHcp {
        #[arg(long, default_value_t = 6.0)]
        radius: f64,
        #[command(flatten)]
        source: PotentialSource,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Run the full acceptance suite.
    All,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

fn read_config(path: &PathBuf) -> Result<Configuration> {
    io::read_xyz(&std::fs::read_to_string(path)?)
}

fn parse_endpoint(text: &str) -> Result<LatticeSite> {
    let parts: Vec<i64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| closepack::Error::Parse(format!("bad coordinate {t}")))
        })
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        return Err(closepack::Error::Parse(
            "endpoint needs three comma-separated integers".into(),
        ));
    }
    LatticeSite::from_fcc_d([parts[0], parts[1], parts[2]]).ok_or_else(|| {
        closepack::Error::Domain(format!("{parts:?} is not an fcc site (odd coordinate sum)"))
    })
}

/// Write an output file together with its manifest sidecar.
fn write_with_manifest(path: &PathBuf, content: &str, manifest: &RunManifest) -> Result<()> {
    std::fs::write(path, content)?;
    let mut side = path.clone();
    side.set_file_name(format!(
        "{}.manifest.json",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(side, io::to_json(manifest)?)?;
    Ok(())
}

fn site_d(site: &LatticeSite) -> [i64; 3] {
    site.fcc_d()
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Lattice { cmd } => lattice_cmd(cmd),
        Command::Potential { cmd } => potential_cmd(cmd),
        Command::Energy { cmd } => energy_cmd(cmd),
        Command::Classify { cmd } => classify_cmd(cmd),
        Command::Embed { cmd } => embed_cmd(cmd),
        Command::Paths { cmd } => paths_cmd(cmd),
        Command::Decompose { cmd } => decompose_cmd(cmd),
        Command::Relax { cmd } => relax_cmd(cmd),
        Command::Verify { cmd: VerifyCmd::All } => {
            let summary = verify::run_all();
            eprint!("{}", summary.render());
            print!("{}", io::to_json(&summary)?);
            Ok(if summary.all_passed { 0 } else { 2 })
        }
    }
}

fn lattice_cmd(cmd: LatticeCmd) -> Result<i32> {
    match cmd {
        LatticeCmd::Gen { kind, radius, out } => {
            let kind: LatticeKind = kind.into();
            let sites = lattice::generate(kind, radius, Vector3::zeros())?;
            let config = Configuration::from_sites(kind, &sites);
            let xyz = io::write_xyz(&config, &format!("{kind:?} ball radius {}", fmt17(radius)));
            match out {
                Some(path) => {
                    let manifest = RunManifest::new(
                        "lattice gen",
                        vec![
                            ("kind".into(), format!("{kind:?}")),
                            ("radius".into(), fmt17(radius)),
                        ],
                        0,
                    );
                    write_with_manifest(&path, &xyz, &manifest)?;
                    print!(
                        "{}",
                        io::to_json(&json!({ "count": config.len(), "out": path }))?
                    );
                }
                None => print!("{xyz}"),
            }
            Ok(0)
        }
        LatticeCmd::Shells { kind, rmax, json } => {
            let table = lattice::shells(kind.into(), rmax)?;
            if json {
                let map: std::collections::BTreeMap<String, usize> = table
                    .entries
                    .iter()
                    .map(|(_, lambda, count)| (fmt17(*lambda), *count))
                    .collect();
                print!("{}", io::to_json(&map)?);
            } else {
                let rows: Vec<Vec<String>> = table
                    .entries
                    .iter()
                    .map(|(key, lambda, count)| {
                        vec![key.to_string(), fmt17(*lambda), count.to_string()]
                    })
                    .collect();
                print!("{}", io::csv_table(&["key", "distance", "count"], &rows));
            }
            Ok(0)
        }
    }
}

fn potential_cmd(cmd: PotentialCmd) -> Result<i32> {
    match cmd {
        PotentialCmd::Build { alpha, tune, out } => {
            let mut v = build_canonical_pair(alpha, &CanonicalOptions::default())?;
            if tune {
                v = tune_equilibrium(&v)?;
            }
            let text = v.to_json()?;
            match out {
                Some(path) => {
                    let manifest = RunManifest::new(
                        "potential build",
                        vec![
                            ("alpha".into(), fmt17(alpha)),
                            ("tune".into(), tune.to_string()),
                        ],
                        0,
                    )
                    .with_potential_json(&text);
                    write_with_manifest(&path, &text, &manifest)?;
                }
                None => println!("{text}"),
            }
            Ok(0)
        }
        PotentialCmd::Validate { source } => {
            let (v, psi) = source.load()?;
            let report = validate(&v, &psi, v.alpha / 10.0)?;
            print!("{}", io::to_json(&report)?);
            Ok(if report.acceptable() { 0 } else { 2 })
        }
        PotentialCmd::Tune { source, out } => {
            let (v, psi) = source.load()?;
            let tuned = tune_equilibrium(&v)?;
            let slope = renormalized_pair_derivative(&tuned, 1.0)?;
            let argmin = efcc_argmin(&tuned, &psi, 0.95, 1.05, 1e-8)?;
            let text = tuned.to_json()?;
            if let Some(path) = out {
                let manifest = RunManifest::new(
                    "potential tune",
                    vec![("alpha".into(), fmt17(tuned.alpha))],
                    0,
                )
                .with_potential_json(&text);
                write_with_manifest(&path, &text, &manifest)?;
            }
            print!(
                "{}",
                io::to_json(&json!({
                    "slope_at_1": fmt17(slope),
                    "efcc_argmin": fmt17(argmin),
                }))?
            );
            Ok(0)
        }
    }
}

fn energy_cmd(cmd: EnergyCmd) -> Result<i32> {
    let EnergyCmd::Eval { input, source } = cmd;
    let config = read_config(&input)?;
    let (v, psi) = source.load()?;
    if config.periodicity.is_some() {
        let per = energy::periodic_energy(&config, &v, &psi)?;
        print!(
            "{}",
            io::to_json(&json!({
                "per_particle": fmt17(per),
                "motif": config.len(),
            }))?
        );
    } else {
        let b = energy::energy(&config, &v, &psi)?;
        print!(
            "{}",
            io::to_json(&json!({
                "total": fmt17(b.total),
                "pair_sum": fmt17(b.pair_sum),
                "triple_sum": fmt17(b.triple_sum),
                "tail_bound": fmt17(b.tail_bound),
                "n": config.len(),
            }))?
        );
    }
    Ok(0)
}

fn classify_cmd(cmd: ClassifyCmd) -> Result<i32> {
    let ClassifyCmd::Run {
        input,
        alpha,
        csv,
        colored_xyz,
    } = cmd;
    let config = read_config(&input)?;
    let graph = bond_graph(&config, alpha);
    let cls = classify(&config, &graph)?;
    let count = |c: SiteClass| cls.class.iter().filter(|&&x| x == c).count();
    let manifest = RunManifest::new(
        "classify run",
        vec![
            ("input".into(), input.display().to_string()),
            ("alpha".into(), fmt17(alpha)),
        ],
        0,
    );
    if let Some(path) = &csv {
        write_with_manifest(path, &io::classification_csv(&config, &graph, &cls), &manifest)?;
    }
    if let Some(path) = &colored_xyz {
        write_with_manifest(path, &io::classified_xyz(&config, &cls), &manifest)?;
    }
    print!(
        "{}",
        io::to_json(&json!({
            "n": config.len(),
            "co": count(SiteClass::Co),
            "tco": count(SiteClass::Tco),
            "defect": count(SiteClass::Defect),
            "xreg": cls.in_xreg.len(),
            "xreg2": cls.in_xreg2.len(),
        }))?
    );
    Ok(0)
}

fn embed_cmd(cmd: EmbedCmd) -> Result<i32> {
    let EmbedCmd::Grow {
        input,
        alpha,
        seed,
        radius,
    } = cmd;
    let config = read_config(&input)?;
    let graph = bond_graph(&config, alpha);
    let cls = classify(&config, &graph)?;
    let refcfg = embed::grow_reference(&config, &graph, &cls, seed, radius)?;
    let report = embed::rigidity_report(&refcfg, &config)?;
    let mapping: Vec<serde_json::Value> = refcfg
        .phi
        .iter()
        .map(|(site, id)| json!({ "site": site_d(site), "particle": id }))
        .collect();
    print!(
        "{}",
        io::to_json(&json!({
            "kind": format!("{:?}", refcfg.kind),
            "scale": refcfg.scale,
            "seed_site": site_d(&refcfg.seed_site),
            "complete": refcfg.complete,
            "mapped": refcfg.phi.len(),
            "boundary": refcfg.boundary.iter().map(site_d).collect::<Vec<_>>(),
            "l2_deviation_sq": fmt17(report.l2_deviation_sq),
            "bond_distortion_sq": fmt17(report.bond_distortion_sq),
            "sup_distortion": fmt17(report.sup_distortion),
            "mapping": mapping,
        }))?
    );
    Ok(0)
}

fn paths_cmd(cmd: PathsCmd) -> Result<i32> {
    match cmd {
        PathsCmd::Enumerate { endpoint } => {
            let k = parse_endpoint(&endpoint)?;
            let list = paths::enumerate_paths(&k)?;
            let rows: Vec<serde_json::Value> = list
                .iter()
                .map(|p| {
                    json!({
                        "sites": p.sites.iter().map(site_d).collect::<Vec<_>>(),
                        "k": p.k,
                        "weight": fmt17(p.weight),
                        "center": [fmt17(p.center.x), fmt17(p.center.y), fmt17(p.center.z)],
                        "radius": fmt17(p.radius),
                    })
                })
                .collect();
            print!("{}", io::to_json(&rows)?);
            Ok(0)
        }
        PathsCmd::CheckLemmaLambda {
            lambda,
            bases,
            seed,
        } => {
            use rand::{Rng, SeedableRng};
            let all = lattice::enumerate_bases();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..bases {
                let b = &all[rng.gen_range(0..all.len())];
                for col in 0..3 {
                    let v = b.column_cart(col);
                    let (lhs, rhs) = paths::lemma_lambda_check(lambda, b, &v)?;
                    worst = worst.max((lhs - rhs).abs());
                }
            }
            print!(
                "{}",
                io::to_json(&json!({
                    "lambda": fmt17(lambda),
                    "bases": bases,
                    "worst_residual": fmt17(worst),
                }))?
            );
            Ok(if worst <= 1e-9 { 0 } else { 2 })
        }
        PathsCmd::CheckNormalization { endpoint } => {
            let k = parse_endpoint(&endpoint)?;
            let check = paths::normalization_check(&k)?;
            print!(
                "{}",
                io::to_json(&json!({
                    "endpoint": site_d(&k),
                    "raw_sum": fmt17(check.raw),
                    "degenerate": check.degenerate,
                }))?
            );
            Ok(if check.degenerate || (check.raw - 1.0).abs() <= 1e-12 {
                0
            } else {
                2
            })
        }
    }
}

fn decompose_cmd(cmd: DecomposeCmd) -> Result<i32> {
    match cmd {
        DecomposeCmd::Run { input, source } => {
            let config = read_config(&input)?;
            let (v, psi) = source.load()?;
            let graph = bond_graph(&config, v.alpha);
            let cls = classify(&config, &graph)?;
            let sets = paths::pair_sets(&config, &graph, &cls, &[])?;
            let report = decomp::decompose(&config, &v, &psi, &cls, &sets)?;
            let per_class: std::collections::BTreeMap<String, usize> = report
                .counts
                .per_class
                .iter()
                .map(|(k, c)| (k.to_string(), *c))
                .collect();
            print!(
                "{}",
                io::to_json(&json!({
                    "e_struct": fmt17(report.e_struct),
                    "e_elast": fmt17(report.e_elast),
                    "e_defect": fmt17(report.e_defect),
                    "e_short": fmt17(report.e_short),
                    "e_med": fmt17(report.e_med),
                    "e_long": fmt17(report.e_long),
                    "total": fmt17(report.total),
                    "tail_bound": fmt17(report.tail_bound),
                    "counts": {
                        "n": report.counts.n,
                        "x12": report.counts.x12,
                        "xreg": report.counts.xreg,
                        "co": report.counts.co,
                        "tco": report.counts.tco,
                        "boundary": report.counts.boundary,
                        "bonds": report.counts.bonds,
                        "defect_pairs": report.counts.defect_pairs,
                        "per_class": per_class,
                    },
                }))?
            );
            Ok(0)
        }
        DecomposeCmd::Finebound { input, source } => {
            let config = read_config(&input)?;
            let (v, psi) = source.load()?;
            let graph = bond_graph(&config, v.alpha);
            let cls = classify(&config, &graph)?;
            let report = decomp::fine_bound_report(&config, &v, &psi, &graph, &cls)?;
            print!(
                "{}",
                io::to_json(&json!({
                    "excess": fmt17(report.excess),
                    "distortion_sq": fmt17(report.distortion_sq),
                    "boundary_term": fmt17(report.boundary_term),
                    "c_hat": report.c_hat.map(fmt17),
                }))?
            );
            Ok(0)
        }
    }
}

fn relax_cmd(cmd: RelaxCmd) -> Result<i32> {
    match cmd {
        RelaxCmd::Run {
            input,
            source,
            method,
            force_tol,
            max_steps,
            step_init,
            seed,
            out,
        } => {
            let config = read_config(&input)?;
            let (v, psi) = source.load()?;
            let opts = RelaxOptions {
                method: match method {
                    MethodArg::Fire => RelaxMethod::Fire,
                    MethodArg::GradientBacktrack => RelaxMethod::GradientBacktrack,
                },
                force_tol,
                max_steps,
                step_init,
                seed,
                frozen: Vec::new(),
            };
            let result = relax::relax(&config, &v, &psi, &opts)?;
            if let Some(path) = &out {
                let manifest = RunManifest::new(
                    "relax run",
                    vec![
                        ("input".into(), input.display().to_string()),
                        ("force_tol".into(), fmt17(force_tol)),
                        ("max_steps".into(), max_steps.to_string()),
                        ("step_init".into(), fmt17(step_init)),
                    ],
                    seed,
                );
                write_with_manifest(path, &io::write_xyz(&result.config, "relaxed"), &manifest)?;
            }
            print!(
                "{}",
                io::to_json(&json!({
                    "converged": result.converged,
                    "steps": result.steps,
                    "energy_initial": fmt17(result.energy_trace[0]),
                    "energy_final": fmt17(*result.energy_trace.last().unwrap()),
                }))?
            );
            Ok(0)
        }
        RelaxCmd::UpperBound { radii, source } => {
            let radii: Vec<f64> = radii
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| closepack::Error::Parse(format!("bad radius {t}")))
                })
                .collect::<Result<_>>()?;
            let (v, psi) = source.load()?;
            let rows = relax::experiment_upper_bound(&v, &psi, &radii)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt17(r.radius),
                        r.count.to_string(),
                        fmt17(r.per_particle),
                        fmt17(r.gap),
                    ]
                })
                .collect();
            print!(
                "{}",
                io::csv_table(&["radius", "count", "per_particle", "gap"], &table)
            );
            Ok(0)
        }
        RelaxCmd::FccVsHcp { radius, source } => {
            let (v, psi) = source.load()?;
            let cmp = relax::experiment_fcc_vs_hcp(&v, &psi, radius)?;
            print!(
                "{}",
                io::to_json(&json!({
                    "radius": fmt17(cmp.radius),
                    "fcc_interior": fmt17(cmp.fcc_interior),
                    "hcp_interior": fmt17(cmp.hcp_interior),
                    "difference": fmt17(cmp.difference),
                    "shell_prediction": fmt17(cmp.shell_prediction),
                }))?
            );
            Ok(if cmp.fcc_interior < cmp.hcp_interior { 0 } else { 2 })
        }
    }
}
