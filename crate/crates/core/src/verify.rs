//! The acceptance suite: eighteen self-contained checks covering shell
//! combinatorics, path weights, potential admissibility, forces and stress,
//! classification, the energy experiments, and output determinism.
//!
//! Each criterion runs independently, never panics, and reports one
//! pass/fail line. A failed expectation and an internal error both count as
//! failures, with the reason in the detail string. All randomness is seeded,
//! so the JSON rendering of a run is byte-stable.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Rotation3, Unit as NaUnit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::embed::{constrained_rotation, dist_so3, w_tau_hessian_spectrum, MatrixNorm};
use crate::energy::{self, Configuration};
use crate::io::fmt17;
use crate::lattice::{self, LatticeKind, PolyhedronName, UnitKind};
use crate::paths;
use crate::potential::{
    build_canonical_pair, build_canonical_triple, efcc_argmin,
    renormalized_pair_derivative, tune_equilibrium, validate, CanonicalOptions, PotentialPair,
    PotentialTriple, Status,
};
use crate::relax::{self, RelaxOptions};
use crate::topology::{self, bond_graph, classify, SiteClass};
use crate::Result;

const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub index: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall-clock time; excluded from serialization so outputs stay
    /// byte-identical across runs.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationSummary {
    pub results: Vec<CriterionResult>,
    pub all_passed: bool,
}

impl VerificationSummary {
    /// One line per criterion plus a trailing summary line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "{tag} {:02} {:<22} {}\n",
                r.index, r.name, r.detail
            ));
        }
        let n_pass = self.results.iter().filter(|r| r.passed).count();
        out.push_str(&format!(
            "{} / {} criteria passed\n",
            n_pass,
            self.results.len()
        ));
        out
    }
}

fn canonical() -> &'static (PotentialPair, PotentialTriple) {
    static P: std::sync::OnceLock<(PotentialPair, PotentialTriple)> = std::sync::OnceLock::new();
    P.get_or_init(|| {
        let v = build_canonical_pair(ALPHA, &CanonicalOptions::default()).unwrap();
        let v = tune_equilibrium(&v).unwrap();
        let psi = build_canonical_triple(ALPHA).unwrap();
        (v, psi)
    })
}

/// Run the whole suite in order.
pub fn run_all() -> VerificationSummary {
    let checks: [(&str, fn() -> Result<(bool, String)>); 17] = [
        ("shell-counts", c01_shell_counts),
        ("triangle-identity", c02_triangle_identity),
        ("ordered-basis-count", c03_basis_count),
        ("contact-graphs", c04_contact_graphs),
        ("w-tau-spectra", c05_spectra),
        ("shell-identity", c06_shell_identity),
        ("path-normalization", c07_normalization),
        ("reflection-suite", c08_reflection_suite),
        ("path-radius-bound", c09_radius_bound),
        ("potential-validation", c10_potential),
        ("force-check", c11_forces),
        ("piola-diagnostics", c12_piola),
        ("classification", c13_classification),
        ("upper-bound", c14_upper_bound),
        ("fcc-vs-hcp", c15_fcc_vs_hcp),
        ("recovery", c16_recovery),
        ("rotation-bound", c17_rotation_bound),
    ];
    let mut results = Vec::new();
    for (i, (name, f)) in checks.iter().enumerate() {
        results.push(run_one(i + 1, name, f));
    }
    results.push(run_one(18, "determinism", &c18_determinism));
    let all_passed = results.iter().all(|r| r.passed);
    VerificationSummary {
        results,
        all_passed,
    }
}

fn run_one(
    index: usize,
    name: &str,
    f: &dyn Fn() -> Result<(bool, String)>,
) -> CriterionResult {
    let start = std::time::Instant::now();
    let (passed, detail) = match f() {
        Ok((p, d)) => (p, d),
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult {
        index,
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn c01_shell_counts() -> Result<(bool, String)> {
    let fcc = lattice::shells(LatticeKind::Fcc, 1.8)?;
    let hcp = lattice::shells(LatticeKind::Hcp, 1.8)?;
    let got = [
        fcc.count_at(1.0),
        fcc.count_at(2f64.sqrt()),
        fcc.count_at(3f64.sqrt()),
        hcp.count_at((8f64 / 3.0).sqrt()),
        hcp.count_at(3f64.sqrt()),
    ];
    let want = [12, 6, 24, 2, 18];
    Ok((
        got == want,
        format!(
            "fcc m(1)={} m(sqrt2)={} m(sqrt3)={}; hcp {} at sqrt(8/3), {} at sqrt3",
            got[0], got[1], got[2], got[3], got[4]
        ),
    ))
}

fn c02_triangle_identity() -> Result<(bool, String)> {
    let shell: Vec<Vector3<f64>> = lattice::generate(LatticeKind::Fcc, 1.2, Vector3::zeros())?
        .iter()
        .filter(|s| s.shell_key(LatticeKind::Fcc) == 2)
        .map(|s| s.cartesian(LatticeKind::Fcc))
        .collect();
    let mut count = 0;
    for a in &shell {
        for b in &shell {
            if a != b && ((a - b).norm() - 1.0).abs() <= 1e-12 {
                count += 1;
            }
        }
    }
    Ok((count == 48, format!("{count} ordered unit triangles at a site")))
}

fn c03_basis_count() -> Result<(bool, String)> {
    let bases = lattice::enumerate_bases();
    let n = bases.len();
    let all_nonsingular = bases.iter().all(|b| b.d_det != 0);
    Ok((
        n == 960 && all_nonsingular,
        format!(
            "{n} ordered bases, all nonsingular: {all_nonsingular}; expected 960 \
             (the 2^3*6!/3! = 960 ordered triples include 192 coplanar ones, \
             which a nonsingular enumeration cannot contain)"
        ),
    ))
}

fn c04_contact_graphs() -> Result<(bool, String)> {
    let (co, tco, _) = lattice::kissing_polyhedra();
    let mut ok = true;
    let mut counts = Vec::new();
    for poly in [&co, &tco] {
        let g = lattice::contact_graph(&poly.vertices);
        let (e, t, s) = (g.edges.len(), g.triangles().len(), g.squares().len());
        ok &= e == 24 && t == 8 && s == 6;
        counts.push(format!("{:?}: {e} edges {t} triangles {s} squares", poly.name));
    }
    // Cross-registration: the best rotation carrying one vertex set to the
    // other must deviate substantially.
    let dev = topology::registration_deviation(&tco.vertices, PolyhedronName::QCo)
        .min(topology::registration_deviation(&co.vertices, PolyhedronName::QTco));
    ok &= dev > 0.1;
    counts.push(format!("cross-registration deviation {}", fmt17(dev)));
    Ok((ok, counts.join("; ")))
}

fn c05_spectra() -> Result<(bool, String)> {
    let want_tet: &[(f64, usize)] = &[(0.0, 6), (2.0, 2), (4.0, 3), (8.0, 1)];
    let want_oct: &[(f64, usize)] = &[(0.0, 6), (2.0, 5), (4.0, 3), (6.0, 3), (8.0, 1)];
    let mut ok = true;
    for (kind, want) in [
        (UnitKind::Tetrahedron, want_tet),
        (UnitKind::Octahedron, want_oct),
    ] {
        let got = w_tau_hessian_spectrum(kind);
        ok &= got.len() == want.len()
            && got
                .iter()
                .zip(want)
                .all(|((ev, m), (wev, wm))| (ev - wev).abs() <= 1e-8 && m == wm);
    }
    Ok((
        ok,
        "tetrahedron {0:6,2:2,4:3,8:1}, octahedron {0:6,2:5,4:3,6:3,8:1}".to_string(),
    ))
}

fn c06_shell_identity() -> Result<(bool, String)> {
    let bases = lattice::enumerate_bases();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let lambdas: Vec<f64> = (1..=18)
        .filter_map(|key| {
            let l = (key as f64 / 2.0).sqrt();
            lattice::shells(LatticeKind::Fcc, 3.2)
                .ok()
                .filter(|t| t.count_at(l) > 0)
                .map(|_| l)
        })
        .collect();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..20 {
        let b = &bases[rng.gen_range(0..bases.len())];
        for col in 0..3 {
            let v = b.column_cart(col);
            for &l in &lambdas {
                let (lhs, rhs) = paths::lemma_lambda_check(l, b, &v)?;
                worst = worst.max((lhs - rhs).abs());
                checked += 1;
            }
        }
    }
    Ok((
        worst <= 1e-9,
        format!("{checked} identities, worst residual {}", fmt17(worst)),
    ))
}

fn c07_normalization() -> Result<(bool, String)> {
    let mut sites = lattice::generate(LatticeKind::Fcc, 4.0, Vector3::zeros())?;
    sites.sort_by_key(|s| (s.shell_key(LatticeKind::Fcc), s.fcc_d()));
    let mut generic = 0;
    let mut worst = 0.0f64;
    let mut degenerate_examples = Vec::new();
    for s in &sites {
        let key = s.shell_key(LatticeKind::Fcc);
        // sqrt(3) < |k| <= 4 means 6 < key <= 32.
        if key <= 6 || key > 32 {
            continue;
        }
        let check = paths::normalization_check(s)?;
        if check.degenerate {
            if degenerate_examples.len() < 2 {
                degenerate_examples.push(format!("{:?}->{}", s.fcc_d(), fmt17(check.raw)));
            }
            continue;
        }
        worst = worst.max((check.raw - 1.0).abs());
        generic += 1;
        if generic == 10 {
            break;
        }
    }
    Ok((
        generic == 10 && worst <= 1e-12,
        format!(
            "{generic} generic endpoints, worst |sum-1| {}; degenerate raw sums: {}",
            fmt17(worst),
            degenerate_examples.join(", ")
        ),
    ))
}

fn unit_directions() -> Vec<Vector3<f64>> {
    lattice::generate(LatticeKind::Fcc, 1.2, Vector3::zeros())
        .unwrap()
        .iter()
        .filter(|s| s.shell_key(LatticeKind::Fcc) == 2)
        .map(|s| s.cartesian(LatticeKind::Fcc))
        .collect()
}

fn c08_reflection_suite() -> Result<(bool, String)> {
    let dirs = unit_directions();
    let mut ok = true;
    let mut checked = 0;
    for key in [2i64, 4, 6, 8] {
        let lambda = (key as f64 / 2.0).sqrt();
        for p in paths::enumerate_shell_paths(lambda)? {
            let step_dirs = p.step_dirs();
            for v in &dirs {
                let d = [
                    (v.x * 2f64.sqrt()).round() as i64,
                    (v.y * 2f64.sqrt()).round() as i64,
                    (v.z * 2f64.sqrt()).round() as i64,
                ];
                let q = paths::reflect(&p, v)?;
                if !step_dirs.contains(&d) {
                    ok &= q.sites == p.sites;
                    checked += 1;
                    continue;
                }
                // Involution, weight, center, and parallel endpoint sum.
                ok &= paths::reflect(&q, v)?.sites == p.sites;
                ok &= (q.weight - p.weight).abs() <= 1e-15;
                ok &= (q.center - p.center).norm() <= 1e-9;
                let sum = Vector3::new(
                    (p.k[0] + q.k[0]) as f64,
                    (p.k[1] + q.k[1]) as f64,
                    (p.k[2] + q.k[2]) as f64,
                ) / 2f64.sqrt();
                ok &= sum.cross(v).norm() <= 1e-9;
                checked += 4;
            }
        }
    }
    Ok((ok, format!("{checked} reflection properties verified")))
}

fn c09_radius_bound() -> Result<(bool, String)> {
    let mut sites = lattice::generate(LatticeKind::Fcc, 3.0, Vector3::zeros())?;
    sites.sort_by_key(|s| (s.shell_key(LatticeKind::Fcc), s.fcc_d()));
    let mut ok = true;
    let mut count = 0;
    let mut max_ratio = 0.0f64;
    for s in &sites {
        if s.shell_key(LatticeKind::Fcc) == 0 {
            continue;
        }
        let norm = s.cartesian(LatticeKind::Fcc).norm();
        for p in paths::enumerate_paths(s)? {
            ok &= p.radius < 2.0 * norm;
            max_ratio = max_ratio.max(p.radius / norm);
            count += 1;
        }
    }
    Ok((
        ok,
        format!("{count} paths, max radius/|k| = {}", fmt17(max_ratio)),
    ))
}

fn c10_potential() -> Result<(bool, String)> {
    let raw = build_canonical_pair(ALPHA, &CanonicalOptions::default())?;
    let psi = build_canonical_triple(ALPHA)?;
    // The untuned build leaves a residual slope at 1; the canonical family
    // member is the tuned potential, which every condition must accept.
    let tuned = tune_equilibrium(&raw)?;
    let report = validate(&tuned, &psi, ALPHA / 10.0)?;
    let mut ok = true;
    for e in &report.entries {
        if e.id == "intermediate-flatness" {
            ok &= e.status == Status::Repaired;
        } else {
            ok &= e.status == Status::Pass;
        }
    }
    let slope = renormalized_pair_derivative(&tuned, 1.0)?;
    let arg = efcc_argmin(&tuned, &psi, 0.95, 1.05, 1e-8)?;
    ok &= slope.abs() <= 1e-8 && (arg - 1.0).abs() <= 1e-6;
    Ok((
        ok,
        format!(
            "validation acceptable: {}; tuned slope {}; argmin {}",
            report.acceptable(),
            fmt17(slope),
            fmt17(arg)
        ),
    ))
}

fn c11_forces() -> Result<(bool, String)> {
    let (v, psi) = canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let mut pts: Vec<Vector3<f64>> = Vec::new();
        while pts.len() < 20 {
            let p = Vector3::new(
                rng.gen_range(-2.5..2.5),
                rng.gen_range(-2.5..2.5),
                rng.gen_range(-2.5..2.5),
            );
            if pts.iter().all(|q| (q - p).norm() > 1.0 - ALPHA / 2.0) {
                pts.push(p);
            }
        }
        let err = relax::fd_gradient_check(&Configuration::finite(pts), v, psi)?;
        worst = worst.max(err);
    }
    Ok((
        worst <= 1e-6,
        format!("worst relative FD error {}", fmt17(worst)),
    ))
}

fn c12_piola() -> Result<(bool, String)> {
    let (v, psi) = canonical();
    let mut ok = true;
    // Radial load: diagonal, isotropic.
    let s = energy::piola(LatticeKind::Fcc, &(Matrix3::identity() * 1.02), v, psi)?;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                ok &= s[(i, j)].abs() <= 1e-6;
            }
        }
    }
    ok &= (s[(0, 0)] - s[(1, 1)]).abs() <= 1e-6 && (s[(1, 1)] - s[(2, 2)]).abs() <= 1e-6;
    // Trace-free at the radial minimizer.
    let rstar = energy::stored_energy_radial_argmin(LatticeKind::Fcc, v, psi, 0.97, 1.03)?;
    let s0 = energy::piola(LatticeKind::Fcc, &(Matrix3::identity() * rstar), v, psi)?;
    ok &= s0.trace().abs() <= 1e-6 && s0.norm() <= 1e-5;
    // Point-group equivariance on both lattices.
    let mut worst_eq = 0.0f64;
    for kind in [LatticeKind::Fcc, LatticeKind::Hcp] {
        let s = energy::piola(kind, &(Matrix3::identity() * 1.01), v, psi)?;
        let group = lattice::point_group(kind, 2.0);
        let step = group.len() / 5;
        for g in group.iter().step_by(step.max(1)).take(5) {
            worst_eq = worst_eq.max((g.transpose() * s * g - s).norm());
        }
    }
    ok &= worst_eq <= 1e-6;
    Ok((
        ok,
        format!(
            "radial minimizer {}, |trace S| {}, equivariance residual {}",
            fmt17(rstar),
            fmt17(s0.trace().abs()),
            fmt17(worst_eq)
        ),
    ))
}

fn c13_classification() -> Result<(bool, String)> {
    let mut ok = true;
    // fcc ball of radius 6: everything at depth >= 2 is CO; no TCO anywhere.
    let sites = lattice::generate(LatticeKind::Fcc, 6.0, Vector3::zeros())?;
    let config = Configuration::from_sites(LatticeKind::Fcc, &sites);
    let graph = bond_graph(&config, ALPHA);
    let cls = classify(&config, &graph)?;
    let mut interior = 0;
    for (i, p) in config.positions.iter().enumerate() {
        ok &= cls.class[i] != SiteClass::Tco;
        if p.norm() <= 4.0 {
            interior += 1;
            ok &= cls.class[i] == SiteClass::Co;
        }
    }
    // hcp ball: interior is TCO, no CO anywhere.
    let sites = lattice::generate(LatticeKind::Hcp, 6.0, Vector3::zeros())?;
    let config_h = Configuration::from_sites(LatticeKind::Hcp, &sites);
    let graph_h = bond_graph(&config_h, ALPHA);
    let cls_h = classify(&config_h, &graph_h)?;
    let mut interior_h = 0;
    for (i, p) in config_h.positions.iter().enumerate() {
        ok &= cls_h.class[i] != SiteClass::Co;
        if p.norm() <= 4.0 {
            interior_h += 1;
            ok &= cls_h.class[i] == SiteClass::Tco;
        }
    }
    // Vacancy: removing the center flips exactly its 12 neighbors to DEFECT.
    let sites = lattice::generate(LatticeKind::Fcc, 4.0, Vector3::zeros())?;
    let full = Configuration::from_sites(LatticeKind::Fcc, &sites);
    let g_full = bond_graph(&full, ALPHA);
    let cls_full = classify(&full, &g_full)?;
    let center = full
        .positions
        .iter()
        .position(|p| p.norm() <= 1e-9)
        .expect("origin site present");
    let neighbors: Vec<usize> = g_full.neighbors(center).to_vec();
    let holed = Configuration::finite(
        full.positions
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != center)
            .map(|(_, p)| *p)
            .collect(),
    );
    let g_holed = bond_graph(&holed, ALPHA);
    let cls_holed = classify(&holed, &g_holed)?;
    let mut flipped = Vec::new();
    for i in 0..full.len() {
        if i == center {
            continue;
        }
        let new_i = if i < center { i } else { i - 1 };
        if cls_full.class[i] != cls_holed.class[new_i] {
            ok &= cls_holed.class[new_i] == SiteClass::Defect;
            flipped.push(i);
        }
    }
    ok &= flipped.len() == 12 && flipped.iter().all(|i| neighbors.contains(i));
    Ok((
        ok,
        format!(
            "fcc interior CO x{interior}, hcp interior TCO x{interior_h}, \
             vacancy flipped {} neighbors",
            flipped.len()
        ),
    ))
}

fn c14_upper_bound() -> Result<(bool, String)> {
    let (v, psi) = canonical();
    let rows = relax::experiment_upper_bound(v, psi, &[3.0, 4.0, 5.0, 6.0, 8.0])?;
    let mut ok = true;
    for w in rows.windows(2) {
        ok &= w[0].gap > 0.0 && w[1].gap < w[0].gap;
    }
    ok &= rows.last().map(|r| r.gap > 0.0).unwrap_or(false);
    let products: Vec<f64> = rows
        .iter()
        .filter(|r| r.radius >= 4.0)
        .map(|r| r.gap * r.radius)
        .collect();
    let max = products.iter().cloned().fold(f64::MIN, f64::max);
    let min = products.iter().cloned().fold(f64::MAX, f64::min);
    ok &= max / min <= 2.0;
    let gaps: Vec<String> = rows
        .iter()
        .map(|r| format!("R={} gap={}", r.radius, fmt17(r.gap)))
        .collect();
    Ok((ok, format!("{}; gap*R spread {}", gaps.join(", "), fmt17(max / min))))
}

fn c15_fcc_vs_hcp() -> Result<(bool, String)> {
    let (v, psi) = canonical();
    let cmp = relax::experiment_fcc_vs_hcp(v, psi, 6.0)?;
    Ok((
        cmp.fcc_interior < cmp.hcp_interior,
        format!(
            "fcc {} vs hcp {} (difference {})",
            fmt17(cmp.fcc_interior),
            fmt17(cmp.hcp_interior),
            fmt17(cmp.difference)
        ),
    ))
}

fn c16_recovery() -> Result<(bool, String)> {
    let (v, psi) = canonical();
    let r = 4.0;
    let sites = lattice::generate(LatticeKind::Fcc, r, Vector3::zeros())?;
    let clean = Configuration::from_sites(LatticeKind::Fcc, &sites);
    let opts = RelaxOptions {
        force_tol: 1e-7,
        max_steps: 50_000,
        ..RelaxOptions::default()
    };
    let relaxed_clean = relax::relax(&clean, v, psi, &opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let noisy = Configuration::finite(
        clean
            .positions
            .iter()
            .map(|p| {
                p + Vector3::new(
                    0.03 * rng.gen_range(-1.0..1.0),
                    0.03 * rng.gen_range(-1.0..1.0),
                    0.03 * rng.gen_range(-1.0..1.0),
                )
            })
            .collect(),
    );
    let relaxed = relax::relax(&noisy, v, psi, &opts)?;
    let mut ok = relaxed.converged && relaxed_clean.converged;
    let graph = bond_graph(&relaxed.config, ALPHA);
    let cls = classify(&relaxed.config, &graph)?;
    for (i, p) in relaxed.config.positions.iter().enumerate() {
        if p.norm() <= r - 2.0 {
            ok &= cls.class[i] == SiteClass::Co;
        }
    }
    let n = clean.len() as f64;
    let e_noisy = relaxed.energy_trace.last().unwrap() / n;
    let e_clean = relaxed_clean.energy_trace.last().unwrap() / n;
    ok &= (e_noisy - e_clean).abs() <= 1e-6;
    let min_d = relaxed
        .config
        .positions
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            relaxed.config.positions[i + 1..]
                .iter()
                .map(move |b| (a - b).norm())
        })
        .fold(f64::INFINITY, f64::min);
    ok &= min_d > 1.0 - ALPHA;
    Ok((
        ok,
        format!(
            "per-particle {} vs clean {}, min distance {}",
            fmt17(e_noisy),
            fmt17(e_clean),
            fmt17(min_d)
        ),
    ))
}

fn c17_rotation_bound() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut ok = true;
    let mut max_ratio = 0.0f64;
    let mut tried = 0;
    while tried < 10_000 {
        let mut m = Matrix3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] = rng.gen_range(-1.0..1.0);
            }
        }
        let base = Rotation3::from_axis_angle(
            &NaUnit::new_normalize(Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )),
            rng.gen_range(0.0..3.0),
        )
        .into_inner();
        let f = base + 0.2 * m;
        let dist = dist_so3(&f, MatrixNorm::Frobenius);
        if dist > 0.2 || dist < 1e-6 {
            continue;
        }
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if v.norm() < 0.1 {
            continue;
        }
        tried += 1;
        let (g, bound_ok) = constrained_rotation(&f, &v)?;
        ok &= bound_ok;
        // Exact ray constraint: Gv is a positive multiple of Fv.
        let cos = (g * v).normalize().dot(&(f * v).normalize());
        ok &= cos >= 1.0 - 1e-10;
        max_ratio = max_ratio.max((f - g).norm_squared() / (dist * dist));
    }
    ok &= max_ratio <= 66.0;
    Ok((
        ok,
        format!("10000 samples, empirical max |F-G|^2/dist^2 = {}", fmt17(max_ratio)),
    ))
}

/// JSON rendering of the fast, pure criteria; used twice by the
/// determinism check.
fn fast_pass_json() -> Result<String> {
    let checks: [(&str, fn() -> Result<(bool, String)>); 10] = [
        ("shell-counts", c01_shell_counts),
        ("triangle-identity", c02_triangle_identity),
        ("ordered-basis-count", c03_basis_count),
        ("contact-graphs", c04_contact_graphs),
        ("w-tau-spectra", c05_spectra),
        ("shell-identity", c06_shell_identity),
        ("path-normalization", c07_normalization),
        ("reflection-suite", c08_reflection_suite),
        ("path-radius-bound", c09_radius_bound),
        ("rotation-bound", c17_rotation_bound),
    ];
    let mut rows: BTreeMap<String, (bool, String)> = BTreeMap::new();
    for (name, f) in checks {
        let (p, d) = f()?;
        rows.insert(name.to_string(), (p, d));
    }
    crate::io::to_json(&rows)
}

fn c18_determinism() -> Result<(bool, String)> {
    let a = fast_pass_json()?;
    let b = fast_pass_json()?;
    Ok((
        a == b,
        format!(
            "two passes over 10 seeded criteria rendered {} identical JSON bytes",
            a.len()
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass() {
        for (f, name) in [
            (c01_shell_counts as fn() -> Result<(bool, String)>, "c01"),
            (c02_triangle_identity, "c02"),
            (c04_contact_graphs, "c04"),
            (c05_spectra, "c05"),
            (c07_normalization, "c07"),
            (c09_radius_bound, "c09"),
        ] {
            let (ok, detail) = f().unwrap();
            assert!(ok, "{name}: {detail}");
        }
    }

    #[test]
    fn basis_count_criterion_is_currently_red() {
        // The nonsingular enumeration yields 768 ordered bases; the stated
        // target of 960 counts all ordered sign/permutation triples,
        // including 192 coplanar ones that cannot be bases. Reported as a
        // failure rather than silently redefined.
        let (ok, detail) = c03_basis_count().unwrap();
        assert!(!ok, "unexpectedly green: {detail}");
        assert!(detail.contains("768"));
    }

    #[test]
    fn determinism_criterion_passes() {
        let (ok, detail) = c18_determinism().unwrap();
        assert!(ok, "{detail}");
    }

    #[test]
    fn render_has_one_line_per_criterion() {
        // Smoke-render a synthetic summary; running the full suite here
        // would duplicate the acceptance target.
        let summary = VerificationSummary {
            results: vec![CriterionResult {
                index: 1,
                name: "shell-counts".into(),
                passed: true,
                detail: "ok".into(),
                seconds: 0.01,
            }],
            all_passed: true,
        };
        let text = summary.render();
        assert!(text.starts_with("PASS 01 shell-counts"));
        assert!(text.trim_end().ends_with("1 / 1 criteria passed"));
    }
}
