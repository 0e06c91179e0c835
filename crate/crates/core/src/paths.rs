//! Admissible reference paths on the fcc lattice, their weights, centers and
//! reflections, and the pair-set partition used by the energy ledger.
//!
//! A path runs from 0 to an endpoint k in at most three straight segments
//! whose directions are the ordered columns of a lattice basis. Its weight
//! is the number of bases containing it, divided by one octant's worth of
//! bases, so that for generic endpoints the weights of all paths to k sum
//! to one. Medium endpoints (|k| in {sqrt 2, sqrt 3}) are reached by
//! two-step paths; their raw weight sums differ from one and are exposed
//! both raw and renormalized.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::energy::{neighbors_within, Configuration};
use crate::lattice::{
    self, enumerate_bases, LatticeKind, LatticeSite, OrderedBasis,
};
use crate::embed::ReferenceConfiguration;
use crate::potential::R_CUT;
use crate::topology::{BondGraph, SiteClassification};
use crate::{Error, Result};

/// Enumeration cap: endpoints with |k| beyond this are not path-expanded.
pub const K_CAP: f64 = 4.0;

/// An admissible reference path from sites[0] to sites[last].
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Consecutive sites, each step a unit fcc vector.
    pub sites: Vec<LatticeSite>,
    /// Endpoint difference in doubled coordinates.
    pub k: [i64; 3],
    /// M(mu): the fraction of bases containing the path.
    pub weight: f64,
    /// Circumcenter of the segment breakpoints (cartesian).
    pub center: Vector3<f64>,
    /// Max distance from the center to any path site.
    pub radius: f64,
}

impl Path {
    pub fn step_dirs(&self) -> Vec<[i64; 3]> {
        let mut dirs: Vec<[i64; 3]> = Vec::new();
        for w in self.sites.windows(2) {
            let a = w[0].fcc_d();
            let b = w[1].fcc_d();
            let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            if dirs.last() != Some(&d) {
                dirs.push(d);
            }
        }
        dirs
    }

    pub fn endpoint_norm(&self) -> f64 {
        let k = self.k;
        ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64 / 2.0).sqrt()
    }
}

fn bases() -> &'static Vec<OrderedBasis> {
    static B: OnceLock<Vec<OrderedBasis>> = OnceLock::new();
    B.get_or_init(enumerate_bases)
}

/// Weight denominator: one sign-octant's worth of bases.
pub fn basis_normalizer() -> f64 {
    bases().len() as f64 / 8.0
}

fn site_from_d(d: [i64; 3]) -> Result<LatticeSite> {
    LatticeSite::from_fcc_d(d)
        .ok_or_else(|| Error::Domain(format!("{d:?} is not an fcc site")))
}

/// Canonical monotone path of a basis and nonnegative coefficient vector.
fn basis_path_sites(basis: &OrderedBasis, a: [i64; 3]) -> Vec<[i64; 3]> {
    let mut sites = vec![[0i64; 3]];
    let mut cur = [0i64; 3];
    for (col, &mult) in a.iter().enumerate() {
        let d = basis.d_columns[col];
        for _ in 0..mult {
            cur = [cur[0] + d[0], cur[1] + d[1], cur[2] + d[2]];
            sites.push(cur);
        }
    }
    sites
}

/// Number of bases containing the given path (its distinct segment
/// directions as an ordered column subsequence).
pub fn basis_membership_count(sites: &[LatticeSite]) -> usize {
    let mut dirs: Vec<[i64; 3]> = Vec::new();
    for w in sites.windows(2) {
        let a = w[0].fcc_d();
        let b = w[1].fcc_d();
        let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        if dirs.last() != Some(&d) {
            dirs.push(d);
        }
    }
    if dirs.is_empty() || dirs.len() > 3 {
        return 0;
    }
    bases()
        .iter()
        .filter(|b| {
            let mut pos = 0;
            for col in &b.d_columns {
                if pos < dirs.len() && *col == dirs[pos] {
                    pos += 1;
                }
            }
            pos == dirs.len()
        })
        .count()
}

/// Circumcenter of the segment breakpoints within their affine span, and
/// the maximal distance from it to any path site.
pub fn path_center(sites: &[LatticeSite]) -> Result<(Vector3<f64>, f64)> {
    if sites.len() < 2 {
        return Err(Error::Domain("degenerate path".into()));
    }
    // Breakpoints: start, direction changes, end.
    let cart: Vec<Vector3<f64>> = sites.iter().map(|s| s.cartesian(LatticeKind::Fcc)).collect();
    let mut breaks = vec![cart[0]];
    for i in 1..sites.len() - 1 {
        let before = cart[i] - cart[i - 1];
        let after = cart[i + 1] - cart[i];
        if (before - after).norm() > 1e-12 {
            breaks.push(cart[i]);
        }
    }
    breaks.push(*cart.last().unwrap());
    let m = breaks.len() - 1;
    let mut g = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for i in 0..m {
        let di = breaks[i + 1] - breaks[0];
        for j in 0..m {
            g[(i, j)] = 2.0 * di.dot(&(breaks[j + 1] - breaks[0]));
        }
        rhs[i] = di.norm_squared();
    }
    let c = g
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Invariant("affinely dependent breakpoints".into()))?;
    let mut zeta = breaks[0];
    for j in 0..m {
        zeta += c[j] * (breaks[j + 1] - breaks[0]);
    }
    let radius = cart.iter().map(|p| (p - zeta).norm()).fold(0.0, f64::max);
    Ok((zeta, radius))
}

fn finish_path(sites_d: Vec<[i64; 3]>, count: usize) -> Result<Path> {
    let sites: Result<Vec<LatticeSite>> = sites_d.iter().map(|&d| site_from_d(d)).collect();
    let sites = sites?;
    let first = sites_d[0];
    let last = sites_d[sites_d.len() - 1];
    let (center, radius) = path_center(&sites)?;
    Ok(Path {
        k: [last[0] - first[0], last[1] - first[1], last[2] - first[2]],
        weight: count as f64 / basis_normalizer(),
        sites,
        center,
        radius,
    })
}

/// All admissible paths from the origin to k, deduplicated as site
/// sequences, each carrying its aggregated weight.
pub fn enumerate_paths(k: &LatticeSite) -> Result<Vec<Path>> {
    let kd = k.fcc_d();
    let norm2 = (kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2]) as f64 / 2.0;
    if kd == [0, 0, 0] {
        return Err(Error::Domain("zero endpoint".into()));
    }
    if norm2 > K_CAP * K_CAP + 1e-9 {
        return Err(Error::Domain(format!(
            "endpoint norm {} beyond the enumeration cap {K_CAP}",
            norm2.sqrt()
        )));
    }
    let mut seen: HashMap<Vec<[i64; 3]>, usize> = HashMap::new();
    for basis in bases() {
        let Some(a) = basis.solve_integer(kd) else { continue };
        if a.iter().any(|&c| c < 0) {
            continue;
        }
        *seen.entry(basis_path_sites(basis, a)).or_insert(0) += 1;
    }
    if seen.is_empty() {
        return Err(Error::Domain(format!("no admissible paths to {kd:?}")));
    }
    // Medium endpoints (|k| in {sqrt 2, sqrt 3}) only admit the two-step
    // paths; drop the longer monotone detours the bases also produce.
    let key = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
    let medium = key == 4 || key == 6;
    let mut keys: Vec<Vec<[i64; 3]>> = seen
        .keys()
        .filter(|s| !medium || s.len() == 3)
        .cloned()
        .collect();
    keys.sort_unstable();
    keys.into_iter().map(|s| {
        let count = seen[&s];
        finish_path(s, count)
    }).collect()
}

/// All paths to every endpoint of the shell at distance lambda.
pub fn enumerate_shell_paths(lambda: f64) -> Result<Vec<Path>> {
    let key = (2.0 * lambda * lambda).round() as i64;
    if ((key as f64 / 2.0).sqrt() - lambda).abs() > 1e-9 {
        return Err(Error::Domain(format!("{lambda} is not a lattice distance")));
    }
    let endpoints: Vec<LatticeSite> = lattice::generate(
        LatticeKind::Fcc,
        lambda + 0.5,
        Vector3::zeros(),
    )?
    .into_iter()
    .filter(|s| s.shell_key(LatticeKind::Fcc) == key)
    .collect();
    if endpoints.is_empty() {
        return Err(Error::Domain(format!("empty shell at {lambda}")));
    }
    let mut out = Vec::new();
    for e in endpoints {
        out.extend(enumerate_paths(&e)?);
    }
    Ok(out)
}

/// Weight-sum diagnostic for an endpoint.
#[derive(Debug, Clone, Copy)]
pub struct NormalizationCheck {
    pub raw: f64,
    /// True when some representing basis uses a zero coefficient, i.e. the
    /// endpoint does not have three nonzero coefficients in every
    /// decomposition.
    pub degenerate: bool,
}

/// Sum of M over all paths to k; 1 for generic endpoints, raw-and-flagged
/// for degenerate ones.
pub fn normalization_check(k: &LatticeSite) -> Result<NormalizationCheck> {
    let kd = k.fcc_d();
    let mut count = 0usize;
    let mut degenerate = false;
    for basis in bases() {
        let Some(a) = basis.solve_integer(kd) else { continue };
        if a.iter().any(|&c| c < 0) {
            continue;
        }
        if a.iter().any(|&c| c == 0) {
            degenerate = true;
        }
        count += 1;
    }
    Ok(NormalizationCheck {
        raw: count as f64 / basis_normalizer(),
        degenerate,
    })
}

fn is_unit_fcc(v: &Vector3<f64>) -> Option<[i64; 3]> {
    let d = [
        (v.x * 2f64.sqrt()).round() as i64,
        (v.y * 2f64.sqrt()).round() as i64,
        (v.z * 2f64.sqrt()).round() as i64,
    ];
    let back = Vector3::new(d[0] as f64, d[1] as f64, d[2] as f64) / 2f64.sqrt();
    if (back - v).norm() < 1e-9 && d[0] * d[0] + d[1] * d[1] + d[2] * d[2] == 2 {
        Some(d)
    } else {
        None
    }
}

/// Reflection of a path in the mirror plane through its center normal to
/// one of its step directions v, composed with reversal. Identity when v is
/// not a step direction of the path.
pub fn reflect(path: &Path, v: &Vector3<f64>) -> Result<Path> {
    let vd = is_unit_fcc(v)
        .ok_or_else(|| Error::Domain("reflection direction must be a unit fcc vector".into()))?;
    if !path.step_dirs().contains(&vd) {
        return Ok(path.clone());
    }
    let r = lattice::reflection(*v)?;
    let zeta = path.center;
    let mut new_d: Vec<[i64; 3]> = Vec::with_capacity(path.sites.len());
    for site in path.sites.iter().rev() {
        let x = site.cartesian(LatticeKind::Fcc);
        let image = r * (x - zeta) + zeta;
        let d = [
            (image.x * 2f64.sqrt()).round() as i64,
            (image.y * 2f64.sqrt()).round() as i64,
            (image.z * 2f64.sqrt()).round() as i64,
        ];
        let back = Vector3::new(d[0] as f64, d[1] as f64, d[2] as f64) / 2f64.sqrt();
        if (back - image).norm() > 1e-9 {
            return Err(Error::Invariant(format!(
                "reflected site {:?} left the lattice",
                site.fcc_d()
            )));
        }
        new_d.push(d);
    }
    let count = {
        let sites: Result<Vec<LatticeSite>> = new_d.iter().map(|&d| site_from_d(d)).collect();
        basis_membership_count(&sites?)
    };
    finish_path(new_d, count)
}

/// Closure of a path under all reflections in its own step directions.
pub fn orbit(path: &Path) -> Result<Vec<Path>> {
    let mut members: BTreeMap<Vec<[i64; 3]>, Path> = BTreeMap::new();
    let key = |p: &Path| -> Vec<[i64; 3]> { p.sites.iter().map(|s| s.fcc_d()).collect() };
    members.insert(key(path), path.clone());
    loop {
        let mut added = Vec::new();
        for p in members.values() {
            for d in p.step_dirs() {
                let v = Vector3::new(d[0] as f64, d[1] as f64, d[2] as f64) / 2f64.sqrt();
                let q = reflect(p, &v)?;
                if !members.contains_key(&key(&q)) {
                    added.push(q);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        for q in added {
            members.insert(key(&q), q);
        }
    }
    Ok(members.into_values().collect())
}

/// a_k(v, B) = k^T B^{-T} B^{-1} v when v is a column of B, else 0.
pub fn a_coefficient(k: &LatticeSite, v: &Vector3<f64>, basis: &OrderedBasis) -> f64 {
    let is_column = (0..3).any(|i| (basis.column_cart(i) - v).norm() < 1e-12);
    if !is_column {
        return 0.0;
    }
    let b = basis.matrix();
    let binv = b.try_inverse().expect("basis is invertible");
    (binv * k.cartesian(LatticeKind::Fcc)).dot(&(binv * v))
}

/// Shell identity: sum over |k| = lambda of a_k(v,B) (k.v) against
/// m(lambda) lambda^2 / 3.
pub fn lemma_lambda_check(
    lambda: f64,
    basis: &OrderedBasis,
    v: &Vector3<f64>,
) -> Result<(f64, f64)> {
    let key = (2.0 * lambda * lambda).round() as i64;
    if ((key as f64 / 2.0).sqrt() - lambda).abs() > 1e-9 {
        return Err(Error::Domain(format!("{lambda} is not a lattice distance")));
    }
    let shell: Vec<LatticeSite> = lattice::generate(
        LatticeKind::Fcc,
        lambda + 0.5,
        Vector3::zeros(),
    )?
    .into_iter()
    .filter(|s| s.shell_key(LatticeKind::Fcc) == key)
    .collect();
    let m = shell.len() as f64;
    let lhs: f64 = shell
        .iter()
        .map(|k| a_coefficient(k, v, basis) * k.cartesian(LatticeKind::Fcc).dot(v))
        .sum();
    Ok((lhs, m * lambda * lambda / 3.0))
}

/// Integer class key for a pair distance: round(3 lambda^2). Covers both
/// fcc distances (3, 6, 9, 12, ...) and the hcp axial 8/3 (key 8).
pub fn lambda_key(lambda: f64) -> i64 {
    (3.0 * lambda * lambda).round() as i64
}

pub fn key_lambda(key: i64) -> f64 {
    (key as f64 / 3.0).sqrt()
}

/// Ordered-pair partition of the interacting pairs of a configuration.
#[derive(Debug, Clone)]
pub struct PairSets {
    /// P(lambda), keyed by round(3 lambda^2); includes the bonds at key 3.
    pub classes: BTreeMap<i64, Vec<(usize, usize)>>,
    /// Starred subsets: key 3 is the full bond set; larger keys keep only
    /// pairs with both endpoints at distance >= 10 lambda from the defects.
    pub starred: BTreeMap<i64, Vec<(usize, usize)>>,
    /// Unclassified pairs within the interaction range.
    pub defect: Vec<(usize, usize)>,
}

/// Medium-shell signature from the bonded common neighbors of a
/// non-bonded pair: the pair (count, internal edges) determines the
/// lattice distance on embeddable neighborhoods.
fn medium_signature(graph: &BondGraph, p: usize, q: usize) -> Option<i64> {
    let commons: Vec<usize> = graph
        .neighbors(p)
        .iter()
        .copied()
        .filter(|&m| graph.has_edge(m, q))
        .collect();
    let edges = {
        let mut e = 0;
        for (i, &a) in commons.iter().enumerate() {
            for &b in commons.iter().skip(i + 1) {
                if graph.has_edge(a, b) {
                    e += 1;
                }
            }
        }
        e
    };
    match (commons.len(), edges) {
        (4, 4) => Some(6), // sqrt 2: equatorial square
        (3, 3) => Some(8), // sqrt(8/3): face-sharing tetrahedra
        (2, 1) => Some(9), // sqrt 3: bonded rhombus diagonal
        _ => None,
    }
}

/// Partition all ordered pairs within the interaction range into distance
/// classes, using reference-configuration distances where a grown domain
/// covers both endpoints, medium signatures between fully regular sites
/// otherwise, and the defect remainder.
pub fn pair_sets(
    config: &Configuration,
    graph: &BondGraph,
    classification: &SiteClassification,
    refs: &[ReferenceConfiguration],
) -> Result<PairSets> {
    let n = config.len();
    // Particle -> (ref index, site) for the first covering reference.
    let mut covered: HashMap<usize, (usize, LatticeSite)> = HashMap::new();
    for (ri, r) in refs.iter().enumerate() {
        for (site, &p) in &r.phi {
            covered.entry(p).or_insert((ri, *site));
        }
    }
    let boundary: Vec<Vector3<f64>> = (0..n)
        .filter(|p| !classification.in_xreg.contains(p))
        .map(|p| config.positions[p])
        .collect();

    let adjacency = neighbors_within(&config.positions, R_CUT);
    let mut classes: BTreeMap<i64, Vec<(usize, usize)>> = BTreeMap::new();
    let mut defect = Vec::new();
    for p in 0..n {
        for &q in &adjacency[p] {
            let key = if graph.has_edge(p, q) {
                Some(3)
            } else if let (Some((ra, sa)), Some((rb, sb))) = (covered.get(&p), covered.get(&q)) {
                if ra == rb {
                    let kind = refs[*ra].kind;
                    let pk = sa.pair_key(sb, kind);
                    let scale = match kind {
                        LatticeKind::Fcc => 2,   // pair key = 2 lambda^2
                        LatticeKind::Hcp => 6,   // pair key = 18 lambda^2 / 3
                    };
                    Some(3 * pk / scale)
                } else {
                    None
                }
            } else {
                None
            };
            let key = key.or_else(|| {
                if classification.in_xreg2.contains(&p) && classification.in_xreg2.contains(&q) {
                    medium_signature(graph, p, q)
                } else {
                    None
                }
            });
            match key {
                Some(k) => classes.entry(k).or_default().push((p, q)),
                None => defect.push((p, q)),
            }
        }
    }
    let mut starred: BTreeMap<i64, Vec<(usize, usize)>> = BTreeMap::new();
    let mut seen_starred: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (&key, pairs) in &classes {
        let lambda = key_lambda(key);
        let members: Vec<(usize, usize)> = if key == 3 {
            pairs.clone()
        } else {
            pairs
                .iter()
                .copied()
                .filter(|&(p, q)| {
                    [p, q].iter().all(|&x| {
                        boundary
                            .iter()
                            .all(|b| (config.positions[x] - b).norm() >= 10.0 * lambda)
                    })
                })
                .collect()
        };
        for &pair in &members {
            if !seen_starred.insert(pair) {
                return Err(Error::Invariant(
                    "starred pair sets are not disjoint".into(),
                ));
            }
        }
        starred.insert(key, members);
    }
    Ok(PairSets {
        classes,
        starred,
        defect,
    })
}

/// Reflection across the plane orthogonal to v (used by path reflections).
pub fn householder(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - 2.0 * v * v.transpose() / v.norm_squared()
}
