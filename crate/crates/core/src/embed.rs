//! Discrete reference configurations grown by lattice flood-fill, per-simplex
//! deformation gradients, and rigidity diagnostics.
//!
//! A reference configuration is a bijection Φ from the sites of a unit
//! decomposition (a scaled octahedron for fcc, the local star for hcp) onto
//! particles of a configuration, grown breadth-first from a classified seed.
//! The induced map u, affine on each simplex with octahedron centers valued
//! as vertex means, carries the rigidity diagnostics: distances to SO(3),
//! the per-unit distortion functional and its Hessian spectrum, constrained
//! rotations, and the global deviation/distortion ledger.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, Matrix3, Rotation3, Unit as NaUnit, Vector3};

use crate::energy::{Configuration, ParticleId};
use crate::lattice::{
    self, decompose_units, kissing_polyhedra, LatticeKind, LatticeSite, Unit, UnitDecomposition,
    UnitDomain, UnitKind,
};
use crate::topology::{kabsch, BondGraph, SiteClass, SiteClassification};
use crate::{Error, Result};

/// Acceptance radius for flood-fill nominations, in units of alpha.
const ACCEPT_FACTOR: f64 = 3.0;

/// A grown reference configuration (domain, site-to-particle map, scale).
#[derive(Debug, Clone)]
pub struct ReferenceConfiguration {
    pub kind: LatticeKind,
    pub domain: UnitDecomposition,
    /// All domain sites in canonical order.
    pub sites: Vec<LatticeSite>,
    pub phi: BTreeMap<LatticeSite, ParticleId>,
    pub seed_site: LatticeSite,
    /// Octahedron scale for fcc domains; 0 for hcp local stars.
    pub scale: i64,
    /// True when every domain site was mapped.
    pub complete: bool,
    /// Unmapped domain sites (nonempty only under partial growth).
    pub boundary: Vec<LatticeSite>,
}

impl ReferenceConfiguration {
    /// Image u(η) of a domain site, when mapped.
    pub fn image(&self, config: &Configuration, site: &LatticeSite) -> Option<Vector3<f64>> {
        self.phi.get(site).map(|&p| config.positions[p])
    }
}

/// Global rigidity diagnostics of a reference configuration.
#[derive(Debug, Clone)]
pub struct RigidityReport {
    pub best_rotation: Matrix3<f64>,
    /// min over rotations of the volume-weighted sum of |F_sigma - R|^2.
    pub l2_deviation_sq: f64,
    /// Sum over domain bonds of (|u(η)-u(η')| - 1)^2, one term per bond.
    pub bond_distortion_sq: f64,
    pub ratio: f64,
    /// max over domain site pairs of | |u(η)-u(η')| / |η-η'| - 1 |.
    pub sup_distortion: f64,
}

fn unit_key(kind: LatticeKind) -> i64 {
    match kind {
        LatticeKind::Fcc => 2,
        LatticeKind::Hcp => 6,
    }
}

/// The 12 unit steps of the fcc lattice in doubled coordinates.
fn fcc_steps() -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for &(a, b) in &[(0usize, 1usize), (0, 2), (1, 2)] {
        for sa in [-1i64, 1] {
            for sb in [-1i64, 1] {
                let mut d = [0i64; 3];
                d[a] = sa;
                d[b] = sb;
                out.push(d);
            }
        }
    }
    out
}

/// Grow a reference configuration around a classified seed particle.
///
/// A CO seed grows an fcc domain s·Q_o with s the least integer ≥ 5r/2 + 3;
/// a TCO seed grows the local hcp star only. The precondition that the seed
/// lie at distance ≥ 2r + 3 from every non-regular particle is checked; when
/// it fails, growth proceeds as far as possible and the unreachable sites
/// are reported as boundary instead of erroring.
pub fn grow_reference(
    config: &Configuration,
    graph: &BondGraph,
    classification: &SiteClassification,
    seed: ParticleId,
    r: f64,
) -> Result<ReferenceConfiguration> {
    if config.periodicity.is_some() {
        return Err(Error::UnsupportedDomain(
            "reference growth needs a finite configuration".into(),
        ));
    }
    if seed >= config.len() {
        return Err(Error::UnknownId(seed));
    }
    let kind = match classification.class.get(seed) {
        Some(SiteClass::Co) => LatticeKind::Fcc,
        Some(SiteClass::Tco) => LatticeKind::Hcp,
        _ => {
            return Err(Error::Domain(format!(
                "seed {seed} is not a registered CO or TCO site"
            )))
        }
    };
    let registration = classification
        .registration
        .get(&seed)
        .ok_or_else(|| Error::Domain(format!("seed {seed} has no registration")))?;

    // Defect-distance precondition: failure switches to partial growth.
    let y_seed = config.positions[seed];
    let precondition_ok = config
        .ids()
        .filter(|p| !classification.in_xreg.contains(p))
        .map(|p| (config.positions[p] - y_seed).norm())
        .fold(f64::INFINITY, f64::min)
        >= 2.0 * r + 3.0;

    let (scale, seed_site, sites, domain) = match kind {
        LatticeKind::Fcc => {
            let s = (2.5 * r + 3.0).ceil() as i64;
            let seed_site = LatticeSite::from_fcc_d([s, s % 2, 0])
                .expect("parity-corrected center is a lattice site");
            let sites = lattice::scaled_octahedron_sites(s);
            let domain = decompose_units(kind, &UnitDomain::ScaledOctahedron { s })?;
            (s, seed_site, sites, domain)
        }
        LatticeKind::Hcp => {
            let (_, tco, _) = kissing_polyhedra();
            let seed_site = LatticeSite::new_hcp(0, 0, 0, 0);
            let mut sites = tco.sites.clone();
            sites.push(seed_site);
            sites.sort_unstable();
            let domain = decompose_units(kind, &UnitDomain::Sites(sites.clone()))?;
            (0, seed_site, sites, domain)
        }
    };

    let site_set: BTreeSet<LatticeSite> = sites.iter().copied().collect();
    let key1 = unit_key(kind);
    let lattice_neighbors = |site: &LatticeSite| -> Vec<LatticeSite> {
        match kind {
            LatticeKind::Fcc => {
                let d = site.fcc_d();
                fcc_steps()
                    .iter()
                    .filter_map(|s| {
                        LatticeSite::from_fcc_d([d[0] + s[0], d[1] + s[1], d[2] + s[2]])
                    })
                    .filter(|n| site_set.contains(n))
                    .collect()
            }
            LatticeKind::Hcp => site_set
                .iter()
                .filter(|n| n.pair_key(site, kind) == key1)
                .copied()
                .collect(),
        }
    };

    let accept = ACCEPT_FACTOR * graph.alpha;
    let mut phi: BTreeMap<LatticeSite, ParticleId> = BTreeMap::new();
    let mut rot: BTreeMap<LatticeSite, Matrix3<f64>> = BTreeMap::new();
    let mut used = vec![false; config.len()];
    phi.insert(seed_site, seed);
    rot.insert(seed_site, registration.rotation);
    used[seed] = true;
    let mut queue: VecDeque<LatticeSite> = VecDeque::from([seed_site]);

    let nearest = |target: Vector3<f64>| -> (ParticleId, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (p, y) in config.positions.iter().enumerate() {
            let d = (y - target).norm();
            if d < best.1 {
                best = (p, d);
            }
        }
        best
    };
    let obstruction = |site: &LatticeSite, reason: String| Error::EmbeddingObstruction {
        site: site.fcc_d(),
        reason,
    };

    while let Some(eta) = queue.pop_front() {
        let mut cands = lattice_neighbors(&eta);
        cands.sort_unstable();
        for new in cands {
            if phi.contains_key(&new) {
                continue;
            }
            // Mapped neighbor star of the new site.
            let star: Vec<LatticeSite> = lattice_neighbors(&new)
                .into_iter()
                .filter(|n| phi.contains_key(n))
                .collect();
            debug_assert!(!star.is_empty());
            let (r_loc, pred) = if star.len() >= 3 {
                let refs: Vec<Vector3<f64>> = star.iter().map(|n| n.cartesian(kind)).collect();
                let imgs: Vec<Vector3<f64>> =
                    star.iter().map(|n| config.positions[phi[n]]).collect();
                let rc = refs.iter().sum::<Vector3<f64>>() / refs.len() as f64;
                let ic = imgs.iter().sum::<Vector3<f64>>() / imgs.len() as f64;
                let a: Vec<Vector3<f64>> = refs.iter().map(|x| x - rc).collect();
                let b: Vec<Vector3<f64>> = imgs.iter().map(|x| x - ic).collect();
                let rloc = kabsch(&a, &b);
                (rloc, ic + rloc * (new.cartesian(kind) - rc))
            } else {
                let anchor = star[0];
                let rloc = rot[&anchor];
                (
                    rloc,
                    config.positions[phi[&anchor]]
                        + rloc * (new.cartesian(kind) - anchor.cartesian(kind)),
                )
            };
            let (p, dist) = nearest(pred);
            if dist > accept {
                if precondition_ok {
                    return Err(obstruction(
                        &new,
                        format!("no particle within {accept:.3e} of the predicted position"),
                    ));
                }
                continue; // stays boundary
            }
            // Every mapped predecessor must nominate the same particle.
            for anchor in &star {
                let ap = config.positions[phi[anchor]]
                    + rot[anchor] * (new.cartesian(kind) - anchor.cartesian(kind));
                let (q, qd) = nearest(ap);
                if q != p || qd > accept {
                    let err = obstruction(
                        &new,
                        format!("predecessors nominate different particles ({p} vs {q})"),
                    );
                    if precondition_ok {
                        return Err(err);
                    } else {
                        return Err(err); // conflicts are never silent
                    }
                }
            }
            if used[p] {
                return Err(obstruction(
                    &new,
                    format!("particle {p} already carries another site"),
                ));
            }
            phi.insert(new, p);
            rot.insert(new, r_loc);
            used[p] = true;
            queue.push_back(new);
        }
    }

    let boundary: Vec<LatticeSite> = sites
        .iter()
        .filter(|s| !phi.contains_key(s))
        .copied()
        .collect();
    if precondition_ok && !boundary.is_empty() {
        return Err(obstruction(
            &boundary[0],
            "unreachable domain site despite defect-distance precondition".into(),
        ));
    }

    let out = ReferenceConfiguration {
        kind,
        domain,
        sites,
        phi,
        seed_site,
        scale,
        complete: boundary.is_empty(),
        boundary,
    };
    check_bond_biconditional(&out, graph)?;
    Ok(out)
}

/// Bonds must match lattice adjacency in both directions on mapped sites.
fn check_bond_biconditional(refcfg: &ReferenceConfiguration, graph: &BondGraph) -> Result<()> {
    let key1 = unit_key(refcfg.kind);
    let mapped: Vec<(&LatticeSite, &ParticleId)> = refcfg.phi.iter().collect();
    for (a, &(sa, &pa)) in mapped.iter().enumerate() {
        for &(sb, &pb) in mapped.iter().skip(a + 1) {
            let lattice_bond = sa.pair_key(sb, refcfg.kind) == key1;
            if lattice_bond != graph.has_edge(pa, pb) {
                return Err(Error::Invariant(format!(
                    "bond mismatch between sites {:?} and {:?}",
                    sa.fcc_d(),
                    sb.fcc_d()
                )));
            }
        }
    }
    Ok(())
}

/// Per-simplex deformation gradients of the interpolated map u; None for
/// simplices with unmapped corners (partial growth).
pub fn deformation_gradients(
    refcfg: &ReferenceConfiguration,
    config: &Configuration,
) -> Result<Vec<Option<Matrix3<f64>>>> {
    let mut center_values: Vec<Option<Vector3<f64>>> = vec![None; refcfg.domain.units.len()];
    for (i, unit) in refcfg.domain.units.iter().enumerate() {
        if unit.kind_of == UnitKind::Octahedron {
            let imgs: Option<Vec<Vector3<f64>>> = unit
                .sites
                .iter()
                .map(|s| refcfg.image(config, s))
                .collect();
            center_values[i] =
                imgs.map(|v| v.iter().sum::<Vector3<f64>>() / v.len() as f64);
        }
    }
    let mut out = Vec::with_capacity(refcfg.domain.simplices.len());
    for simplex in &refcfg.domain.simplices {
        let mut refs: Vec<Vector3<f64>> = Vec::with_capacity(4);
        let mut imgs: Vec<Vector3<f64>> = Vec::with_capacity(4);
        let mut ok = true;
        for s in &simplex.sites {
            match refcfg.image(config, s) {
                Some(v) => {
                    refs.push(s.cartesian(refcfg.kind));
                    imgs.push(v);
                }
                None => ok = false,
            }
        }
        if simplex.has_center {
            match (
                refcfg.domain.octa_centers[simplex.unit_index],
                center_values[simplex.unit_index],
            ) {
                (Some(c), Some(v)) => {
                    refs.push(c);
                    imgs.push(v);
                }
                _ => ok = false,
            }
        }
        if !ok {
            out.push(None);
            continue;
        }
        let dx = Matrix3::from_columns(&[refs[1] - refs[0], refs[2] - refs[0], refs[3] - refs[0]]);
        let du = Matrix3::from_columns(&[imgs[1] - imgs[0], imgs[2] - imgs[0], imgs[3] - imgs[0]]);
        let inv = dx
            .try_inverse()
            .ok_or_else(|| Error::Invariant("degenerate simplex".into()))?;
        out.push(Some(du * inv));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixNorm {
    Frobenius,
    Operator,
}

/// Distance from F to SO(3) via singular values; when det F < 0 the smallest
/// singular value enters with a flipped sign.
pub fn dist_so3(f: &Matrix3<f64>, norm: MatrixNorm) -> f64 {
    let mut sv: Vec<f64> = f.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if f.determinant() < 0.0 {
        sv[2] = -sv[2];
    }
    match norm {
        MatrixNorm::Frobenius => sv.iter().map(|s| (s - 1.0) * (s - 1.0)).sum::<f64>().sqrt(),
        MatrixNorm::Operator => sv.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max),
    }
}

/// Distortion functional of a single unit: the sum over vertex pairs at
/// lattice distance 1 of (|u(η) - u(η')| - 1)^2.
pub fn w_tau(
    unit: &Unit,
    kind: LatticeKind,
    u_values: &BTreeMap<LatticeSite, Vector3<f64>>,
) -> Result<f64> {
    let key1 = unit_key(kind);
    let mut total = 0.0;
    for (a, sa) in unit.sites.iter().enumerate() {
        for sb in unit.sites.iter().skip(a + 1) {
            if sa.pair_key(sb, kind) != key1 {
                continue;
            }
            let ua = u_values
                .get(sa)
                .ok_or_else(|| Error::Domain(format!("missing vertex {:?}", sa.fcc_d())))?;
            let ub = u_values
                .get(sb)
                .ok_or_else(|| Error::Domain(format!("missing vertex {:?}", sb.fcc_d())))?;
            let d = (ua - ub).norm() - 1.0;
            total += d * d;
        }
    }
    Ok(total)
}

/// Reference vertex sets of the two unit kinds, centered at a lattice cell.
fn unit_vertices(kind_of: UnitKind) -> Vec<Vector3<f64>> {
    let (_, _, q_o) = kissing_polyhedra();
    match kind_of {
        UnitKind::Tetrahedron => [[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]]
            .iter()
            .map(|d| Vector3::new(d[0] as f64, d[1] as f64, d[2] as f64) / 2f64.sqrt())
            .collect(),
        UnitKind::Octahedron => q_o.vertices,
    }
}

/// Eigenvalue multiset (rounded to 1e-8) of the Hessian of W_tau at the
/// identity embedding of a single unit.
pub fn w_tau_hessian_spectrum(kind_of: UnitKind) -> Vec<(f64, usize)> {
    let verts = unit_vertices(kind_of);
    let n = verts.len();
    let mut h = DMatrix::<f64>::zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = verts[i] - verts[j];
            if (d.norm() - 1.0).abs() > 1e-9 {
                continue;
            }
            let block = 2.0 * d * d.transpose();
            for r in 0..3 {
                for c in 0..3 {
                    h[(3 * i + r, 3 * i + c)] += block[(r, c)];
                    h[(3 * j + r, 3 * j + c)] += block[(r, c)];
                    h[(3 * i + r, 3 * j + c)] -= block[(r, c)];
                    h[(3 * j + r, 3 * i + c)] -= block[(r, c)];
                }
            }
        }
    }
    let mut eigs: Vec<f64> = h
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|e| (e / 1e-8).round() * 1e-8)
        .collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, usize)> = Vec::new();
    for e in eigs {
        match out.last_mut() {
            Some((v, m)) if (*v - e).abs() <= 1e-8 => *m += 1,
            _ => out.push((e, 1)),
        }
    }
    out
}

/// Nearest rotation to F (polar factor restricted to SO(3)).
pub fn polar_rotation(f: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = f.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let d = (u * vt).determinant().signum();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * vt
}

/// Rotation G with Gv parallel to Fv, built from the polar factor and an
/// in-plane aligning rotation; the boolean reports whether
/// |F - G|^2 <= 66 * dist(F, SO(3))^2 held.
pub fn constrained_rotation(
    f: &Matrix3<f64>,
    v: &Vector3<f64>,
) -> Result<(Matrix3<f64>, bool)> {
    let fv = f * v;
    if v.norm() < 1e-14 || fv.norm() < 1e-14 {
        return Err(Error::Domain("constrained rotation needs Fv != 0".into()));
    }
    let s = polar_rotation(f);
    let a = (s * v).normalize();
    let b = fv.normalize();
    let t = match Rotation3::rotation_between(&a, &b) {
        Some(rot) => rot.into_inner(),
        None => {
            // Antiparallel: rotate by pi about any axis orthogonal to a.
            let helper = if a.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            let axis = NaUnit::new_normalize(a.cross(&helper));
            Rotation3::from_axis_angle(&axis, std::f64::consts::PI).into_inner()
        }
    };
    let g = t * s;
    let dist = dist_so3(f, MatrixNorm::Frobenius);
    let diff = (f - g).norm();
    Ok((g, diff * diff <= 66.0 * dist * dist + 1e-12))
}

fn simplex_volume(refs: &[Vector3<f64>]) -> f64 {
    let m = Matrix3::from_columns(&[refs[1] - refs[0], refs[2] - refs[0], refs[3] - refs[0]]);
    m.determinant().abs() / 6.0
}

/// Global rigidity diagnostics: weighted-Procrustes best rotation, the L2
/// deviation of the gradients from it, total bond distortion, their ratio,
/// and the supremal relative distortion over site pairs.
pub fn rigidity_report(
    refcfg: &ReferenceConfiguration,
    config: &Configuration,
) -> Result<RigidityReport> {
    if refcfg.phi.is_empty() {
        return Err(Error::Domain("empty reference domain".into()));
    }
    let grads = deformation_gradients(refcfg, config)?;
    // Volume weights from the reference geometry.
    let mut weighted = Matrix3::zeros();
    let mut entries: Vec<(f64, Matrix3<f64>)> = Vec::new();
    for (simplex, grad) in refcfg.domain.simplices.iter().zip(&grads) {
        let Some(f) = grad else { continue };
        let mut refs: Vec<Vector3<f64>> =
            simplex.sites.iter().map(|s| s.cartesian(refcfg.kind)).collect();
        if simplex.has_center {
            refs.push(refcfg.domain.octa_centers[simplex.unit_index].unwrap());
        }
        let w = simplex_volume(&refs);
        weighted += w * f;
        entries.push((w, *f));
    }
    let best_rotation = polar_rotation(&weighted);
    let l2_deviation_sq = entries
        .iter()
        .map(|(w, f)| w * (f - best_rotation).norm_squared())
        .sum::<f64>();

    let key1 = unit_key(refcfg.kind);
    let mapped: Vec<(&LatticeSite, Vector3<f64>)> = refcfg
        .phi
        .iter()
        .map(|(s, &p)| (s, config.positions[p]))
        .collect();
    let mut bond_distortion_sq = 0.0;
    let mut sup_distortion = 0.0f64;
    let m = mapped.len();
    let total_pairs = m * (m - 1) / 2;
    if total_pairs <= 100_000 {
        for a in 0..m {
            for b in (a + 1)..m {
                let (sa, ya) = mapped[a];
                let (sb, yb) = mapped[b];
                let image_dist = (ya - yb).norm();
                let ref_dist = (sa.cartesian(refcfg.kind) - sb.cartesian(refcfg.kind)).norm();
                sup_distortion = sup_distortion.max((image_dist / ref_dist - 1.0).abs());
                if sa.pair_key(sb, refcfg.kind) == key1 {
                    let d = image_dist - 1.0;
                    bond_distortion_sq += d * d;
                }
            }
        }
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let a = rng.gen_range(0..m);
            let b = rng.gen_range(0..m);
            if a == b {
                continue;
            }
            let (sa, ya) = mapped[a];
            let (sb, yb) = mapped[b];
            let ref_dist = (sa.cartesian(refcfg.kind) - sb.cartesian(refcfg.kind)).norm();
            sup_distortion = sup_distortion.max(((ya - yb).norm() / ref_dist - 1.0).abs());
        }
        for a in 0..m {
            for b in (a + 1)..m {
                let (sa, ya) = mapped[a];
                let (sb, yb) = mapped[b];
                if sa.pair_key(sb, refcfg.kind) == key1 {
                    let d = (ya - yb).norm() - 1.0;
                    bond_distortion_sq += d * d;
                }
            }
        }
    }
    Ok(RigidityReport {
        best_rotation,
        l2_deviation_sq,
        bond_distortion_sq,
        ratio: l2_deviation_sq / bond_distortion_sq.max(1e-300),
        sup_distortion,
    })
}
