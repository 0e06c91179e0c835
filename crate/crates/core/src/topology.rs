//! Bond graph, nearest-neighborhood combinatorics, and the site partition
//! into cuboctahedral, twisted-cuboctahedral, and defect points.
//!
//! A bond joins two particles whose distance lies within α of 1. A site is
//! regular when it has exactly 12 bonded neighbors spanning 24 neighborhood
//! edges; its centered neighbor cloud is then registered against the two
//! 12-point kissing templates by contact-graph matching plus an optimal
//! rotation, and labeled by the smaller maximal deviation. Second
//! neighborhoods are recovered from the six squares of the neighborhood
//! contact graph.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::energy::Configuration;
use crate::lattice::{kissing_polyhedra, PolyhedronName};
use crate::{Error, Result};

/// Closed-interval slack so a pair at exactly 1 + α still bonds after
/// rounding in the norm computation.
const BOND_EPS: f64 = 1e-12;

/// Nearest-neighbor bond structure of a configuration.
#[derive(Debug, Clone, Serialize)]
pub struct BondGraph {
    pub alpha: f64,
    /// Sorted neighbor list per particle.
    pub adjacency: Vec<Vec<usize>>,
}

impl BondGraph {
    /// Ordered edge set (both orientations).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, nb) in self.adjacency.iter().enumerate() {
            for &j in nb {
                out.push((i, j));
            }
        }
        out
    }

    /// Number of ordered edges, #𝒮.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }
}

/// Minimum-image displacement from i to j (plain difference when finite).
pub fn displacement(config: &Configuration, i: usize, j: usize) -> Vector3<f64> {
    let d = config.positions[j] - config.positions[i];
    match &config.periodicity {
        None => d,
        Some(p) => {
            let a = Matrix3::from_columns(&p.cell);
            let frac = a.try_inverse().expect("independent cell") * d;
            let wrapped = Vector3::new(
                frac[0] - frac[0].round(),
                frac[1] - frac[1].round(),
                frac[2] - frac[2].round(),
            );
            a * wrapped
        }
    }
}

/// Build the bond graph: (x, x') bonded iff ||y(x') - y(x)| - 1| ≤ α,
/// with minimum-image distances for periodic configurations.
pub fn bond_graph(config: &Configuration, alpha: f64) -> BondGraph {
    let n = config.len();
    let mut adjacency = vec![Vec::new(); n];
    if config.periodicity.is_none() {
        // Cell-list pass; bonds only live in [1-α, 1+α].
        let adj = crate::energy::neighbors_within(&config.positions, 1.0 + alpha + BOND_EPS);
        for (i, cand) in adj.into_iter().enumerate() {
            for j in cand {
                let d = (config.positions[j] - config.positions[i]).norm();
                if (d - 1.0).abs() <= alpha + BOND_EPS {
                    adjacency[i].push(j);
                }
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = displacement(config, i, j).norm();
                if (d - 1.0).abs() <= alpha + BOND_EPS {
                    adjacency[i].push(j);
                }
            }
        }
    }
    for a in &mut adjacency {
        a.sort_unstable();
    }
    BondGraph { alpha, adjacency }
}

/// Neighborhood edge set A(x): bonds with both endpoints in N(x), as
/// ordered pairs.
pub fn neighborhood_edges(graph: &BondGraph, x: usize) -> Result<Vec<(usize, usize)>> {
    if x >= graph.adjacency.len() {
        return Err(Error::UnknownId(x));
    }
    let nb = graph.neighbors(x);
    let mut out = Vec::new();
    for &i in nb {
        for &j in nb {
            if i != j && graph.has_edge(i, j) {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Neighboring triples: bonded triangles of the graph, each listed once
/// with ascending members.
pub fn triples(graph: &BondGraph) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for (i, nb) in graph.adjacency.iter().enumerate() {
        for (a, &j) in nb.iter().enumerate() {
            if j < i {
                continue;
            }
            for &k in nb.iter().skip(a + 1) {
                if k > j && graph.has_edge(j, k) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SiteClass {
    Defect,
    Co,
    Tco,
}

/// Best registration of a regular site's neighbor cloud against a template.
#[derive(Debug, Clone, Serialize)]
pub struct Registration {
    pub rotation: Matrix3<f64>,
    /// Maximal vertex deviation of the best assignment (the registration
    /// residual reported by the classification).
    pub rmsd: f64,
    pub template: PolyhedronName,
}

#[derive(Debug, Clone, Serialize)]
pub struct SiteClassification {
    pub class: Vec<SiteClass>,
    pub in_x12: BTreeSet<usize>,
    pub in_xreg: BTreeSet<usize>,
    pub in_xreg2: BTreeSet<usize>,
    pub registration: BTreeMap<usize, Registration>,
    pub second_neighbors: BTreeMap<usize, BTreeSet<usize>>,
    pub eps_max: f64,
}

/// 12-vertex contact-graph template with its geometry.
struct Template {
    name: PolyhedronName,
    verts: Vec<Vector3<f64>>,
    adj: [[bool; 12]; 12],
    /// Vertex visit order chosen so each new vertex touches assigned ones.
    order: Vec<usize>,
}

fn template(name: PolyhedronName, verts: Vec<Vector3<f64>>) -> Template {
    let mut adj = [[false; 12]; 12];
    for i in 0..12 {
        for j in 0..12 {
            if i != j && ((verts[i] - verts[j]).norm() - 1.0).abs() < 1e-9 {
                adj[i][j] = true;
            }
        }
    }
    // Connected order: start anywhere, append the unvisited vertex with the
    // most assigned neighbors (maximizes pruning).
    let mut order = vec![0usize];
    while order.len() < 12 {
        let next = (0..12)
            .filter(|v| !order.contains(v))
            .max_by_key(|&v| order.iter().filter(|&&u| adj[u][v]).count())
            .unwrap();
        order.push(next);
    }
    Template {
        name,
        verts,
        adj,
        order,
    }
}

fn templates() -> &'static [Template; 2] {
    static T: std::sync::OnceLock<[Template; 2]> = std::sync::OnceLock::new();
    T.get_or_init(|| {
        let (co, tco, _) = kissing_polyhedra();
        [
            template(PolyhedronName::QCo, co.vertices),
            template(PolyhedronName::QTco, tco.vertices),
        ]
    })
}

/// Enumerate all adjacency-preserving bijections template → cloud.
fn isomorphisms(t: &Template, cloud_adj: &[[bool; 12]; 12]) -> Vec<[usize; 12]> {
    let mut out = Vec::new();
    let mut assign = [usize::MAX; 12];
    let mut used = [false; 12];
    fn rec(
        t: &Template,
        cloud: &[[bool; 12]; 12],
        depth: usize,
        assign: &mut [usize; 12],
        used: &mut [bool; 12],
        out: &mut Vec<[usize; 12]>,
    ) {
        if depth == 12 {
            out.push(*assign);
            return;
        }
        let v = t.order[depth];
        'cand: for c in 0..12 {
            if used[c] {
                continue;
            }
            for &u in &t.order[..depth] {
                if t.adj[v][u] != cloud[c][assign[u]] {
                    continue 'cand;
                }
            }
            assign[v] = c;
            used[c] = true;
            rec(t, cloud, depth + 1, assign, used, out);
            used[c] = false;
            assign[v] = usize::MAX;
        }
    }
    rec(t, cloud_adj, 0, &mut assign, &mut used, &mut out);
    out
}

/// Orthogonal Procrustes restricted to SO(3): rotation minimizing
/// Σ |R a_i - b_i|².
pub fn kabsch(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Matrix3<f64> {
    let mut h = Matrix3::zeros();
    for (p, q) in a.iter().zip(b) {
        h += q * p.transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let d = (u * vt).determinant().signum();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * vt
}

/// Classify every site of a configuration. Regular sites (12 neighbors, 24
/// neighborhood edges) are registered against both kissing templates; the
/// smaller maximal deviation decides CO vs TCO, ties and irregular sites are
/// DEFECT. Fails if a regular site fits neither template within eps_max.
pub fn classify(config: &Configuration, graph: &BondGraph) -> Result<SiteClassification> {
    classify_with_eps(config, graph, 10.0 * graph.alpha)
}

pub fn classify_with_eps(
    config: &Configuration,
    graph: &BondGraph,
    eps_max: f64,
) -> Result<SiteClassification> {
    let n = config.len();
    let mut class = vec![SiteClass::Defect; n];
    let mut in_x12 = BTreeSet::new();
    let mut in_xreg = BTreeSet::new();
    let mut registration = BTreeMap::new();
    for x in 0..n {
        if graph.degree(x) == 12 {
            in_x12.insert(x);
        } else {
            continue;
        }
        let half_edges = neighborhood_edges(graph, x)?.len() / 2;
        if half_edges != 24 {
            continue;
        }
        // Centered neighbor cloud and its bond adjacency.
        let nb = graph.neighbors(x).to_vec();
        let cloud: Vec<Vector3<f64>> = nb.iter().map(|&j| displacement(config, x, j)).collect();
        let mut cloud_adj = [[false; 12]; 12];
        for (a, &i) in nb.iter().enumerate() {
            for (b, &j) in nb.iter().enumerate() {
                if a != b && graph.has_edge(i, j) {
                    cloud_adj[a][b] = true;
                }
            }
        }
        let mut best: Option<(PolyhedronName, Matrix3<f64>, f64)> = None;
        let mut tie = false;
        for t in templates() {
            for iso in isomorphisms(t, &cloud_adj) {
                // iso maps template vertex v -> cloud slot iso[v].
                let src: Vec<Vector3<f64>> = (0..12).map(|v| t.verts[v]).collect();
                let dst: Vec<Vector3<f64>> = (0..12).map(|v| cloud[iso[v]]).collect();
                let r = kabsch(&src, &dst);
                let dev = src
                    .iter()
                    .zip(&dst)
                    .map(|(s, d)| (r * s - d).norm())
                    .fold(0.0f64, f64::max);
                match &best {
                    Some((name, _, d)) => {
                        if dev < *d - 1e-12 {
                            tie = false;
                            best = Some((t.name, r, dev));
                        } else if (dev - *d).abs() <= 1e-12 && *name != t.name {
                            tie = true;
                        }
                    }
                    None => best = Some((t.name, r, dev)),
                }
            }
        }
        let Some((name, rot, dev)) = best else {
            return Err(Error::ClassificationInconsistency {
                id: x,
                deviation: f64::INFINITY,
                eps_max,
            });
        };
        if dev > eps_max {
            return Err(Error::ClassificationInconsistency {
                id: x,
                deviation: dev,
                eps_max,
            });
        }
        in_xreg.insert(x);
        if tie {
            // Ambiguous registration: leave the site as DEFECT.
            in_xreg.remove(&x);
            continue;
        }
        class[x] = match name {
            PolyhedronName::QCo => SiteClass::Co,
            PolyhedronName::QTco => SiteClass::Tco,
            PolyhedronName::QO => unreachable!("octahedron is not a kissing template"),
        };
        registration.insert(
            x,
            Registration {
                rotation: rot,
                rmsd: dev,
                template: name,
            },
        );
    }
    // Complete second neighborhoods.
    let mut in_xreg2 = BTreeSet::new();
    let mut second = BTreeMap::new();
    for &x in &in_xreg {
        if !graph.neighbors(x).iter().all(|j| in_xreg.contains(j)) {
            continue;
        }
        in_xreg2.insert(x);
        second.insert(x, second_neighbors_raw(graph, x));
    }
    Ok(SiteClassification {
        class,
        in_x12,
        in_xreg,
        in_xreg2,
        registration,
        second_neighbors: second,
        eps_max,
    })
}

/// Best rigid registration of a 12-point cloud against one named kissing
/// template: minimum over contact-graph isomorphisms of the maximal vertex
/// deviation after Kabsch alignment. Infinite when the contact graphs are
/// not isomorphic.
pub fn registration_deviation(cloud: &[Vector3<f64>], name: PolyhedronName) -> f64 {
    if cloud.len() != 12 {
        return f64::INFINITY;
    }
    let mut cloud_adj = [[false; 12]; 12];
    for a in 0..12 {
        for b in 0..12 {
            if a != b && ((cloud[a] - cloud[b]).norm() - 1.0).abs() <= 1e-6 {
                cloud_adj[a][b] = true;
            }
        }
    }
    let Some(t) = templates().iter().find(|t| t.name == name) else {
        return f64::INFINITY;
    };
    let mut best = f64::INFINITY;
    for iso in isomorphisms(t, &cloud_adj) {
        let src: Vec<Vector3<f64>> = (0..12).map(|v| t.verts[v]).collect();
        let dst: Vec<Vector3<f64>> = (0..12).map(|v| cloud[iso[v]]).collect();
        let r = kabsch(&src, &dst);
        let dev = src
            .iter()
            .zip(&dst)
            .map(|(s, d)| (r * s - d).norm())
            .fold(0.0f64, f64::max);
        best = best.min(dev);
    }
    best
}

/// N²(x): union over the squares (chordless 4-cycles) of the neighborhood
/// contact graph of the common bonded neighbors of the square, minus x.
fn second_neighbors_raw(graph: &BondGraph, x: usize) -> BTreeSet<usize> {
    let nb = graph.neighbors(x);
    let mut out = BTreeSet::new();
    let k = nb.len();
    for a in 0..k {
        for b in (a + 1)..k {
            if !graph.has_edge(nb[a], nb[b]) {
                continue;
            }
            for c in (a + 1)..k {
                if c == b || !graph.has_edge(nb[b], nb[c]) || graph.has_edge(nb[a], nb[c]) {
                    continue;
                }
                for d in (a + 1)..k {
                    if d == b
                        || d == c
                        || !graph.has_edge(nb[c], nb[d])
                        || !graph.has_edge(nb[d], nb[a])
                        || graph.has_edge(nb[b], nb[d])
                    {
                        continue;
                    }
                    // Square nb[a]-nb[b]-nb[c]-nb[d]; intersect neighborhoods.
                    let mut common: BTreeSet<usize> =
                        graph.neighbors(nb[a]).iter().copied().collect();
                    for &m in &[nb[b], nb[c], nb[d]] {
                        let s: BTreeSet<usize> = graph.neighbors(m).iter().copied().collect();
                        common = common.intersection(&s).copied().collect();
                    }
                    common.remove(&x);
                    out.extend(common);
                }
            }
        }
    }
    out
}

/// Second neighborhood of a site with completely regular neighbors.
pub fn second_neighbors(
    classification: &SiteClassification,
    x: usize,
) -> Result<BTreeSet<usize>> {
    classification
        .second_neighbors
        .get(&x)
        .cloned()
        .ok_or_else(|| {
            Error::Domain(format!(
                "site {x} has no complete second neighborhood (not in Xreg2)"
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{self, LatticeKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ALPHA: f64 = 0.05;

    fn ball(kind: LatticeKind, r: f64) -> Configuration {
        let sites = lattice::generate(kind, r, Vector3::zeros()).unwrap();
        Configuration::from_sites(kind, &sites)
    }

    #[test]
    fn bond_threshold_semantics() {
        let mk = |d: f64| {
            Configuration::finite(vec![Vector3::zeros(), Vector3::new(d, 0.0, 0.0)])
        };
        let g = bond_graph(&mk(1.0 + ALPHA), ALPHA);
        assert!(g.has_edge(0, 1), "closed-interval boundary");
        let g = bond_graph(&mk(1.0 + 2.0 * ALPHA), ALPHA);
        assert!(!g.has_edge(0, 1));
        let g = bond_graph(&mk(1.0), ALPHA);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn fcc_degrees_and_neighborhood_edges() {
        let config = ball(LatticeKind::Fcc, 2.5);
        let g = bond_graph(&config, ALPHA);
        // Site 0 is the center (generation sorts by distance).
        assert_eq!(g.degree(0), 12);
        assert_eq!(neighborhood_edges(&g, 0).unwrap().len() / 2, 24);
        let lonely = Configuration::finite(vec![Vector3::zeros()]);
        let g1 = bond_graph(&lonely, ALPHA);
        assert!(neighborhood_edges(&g1, 0).unwrap().is_empty());
        assert!(matches!(neighborhood_edges(&g1, 5), Err(Error::UnknownId(5))));
    }

    #[test]
    fn kissing_and_edge_bounds() {
        for kind in [LatticeKind::Fcc, LatticeKind::Hcp] {
            let config = ball(kind, 3.0);
            let g = bond_graph(&config, ALPHA);
            for x in config.ids() {
                assert!(g.degree(x) <= 12);
                assert!(neighborhood_edges(&g, x).unwrap().len() / 2 <= 24);
            }
        }
    }

    #[test]
    fn classify_fcc_and_hcp_balls() {
        for (kind, want) in [
            (LatticeKind::Fcc, SiteClass::Co),
            (LatticeKind::Hcp, SiteClass::Tco),
        ] {
            let r = 4.0;
            let config = ball(kind, r);
            let g = bond_graph(&config, ALPHA);
            let cls = classify(&config, &g).unwrap();
            // Partition identities.
            assert!(cls.in_xreg.is_subset(&cls.in_x12));
            for x in config.ids() {
                let regular = cls.in_xreg.contains(&x);
                assert_eq!(
                    regular,
                    cls.class[x] != SiteClass::Defect,
                    "site {x} of {kind:?}"
                );
            }
            let mut interior = 0;
            for (x, p) in config.positions.iter().enumerate() {
                if p.norm() <= r - 2.0 {
                    interior += 1;
                    assert_eq!(cls.class[x], want, "interior site {x} of {kind:?}");
                    assert!(cls.registration[&x].rmsd <= 1e-9);
                }
            }
            assert!(interior > 10);
        }
    }

    #[test]
    fn vacancy_demotes_former_neighbors() {
        let r = 4.0;
        let sites = lattice::generate(LatticeKind::Fcc, r, Vector3::zeros()).unwrap();
        let full = Configuration::from_sites(LatticeKind::Fcc, &sites);
        let g_full = bond_graph(&full, ALPHA);
        let former: Vec<Vector3<f64>> = g_full
            .neighbors(0)
            .iter()
            .map(|&j| full.positions[j])
            .collect();
        // Remove the center.
        let punctured = Configuration::finite(full.positions[1..].to_vec());
        let g = bond_graph(&punctured, ALPHA);
        let cls = classify(&punctured, &g).unwrap();
        for p in &former {
            let x = punctured
                .positions
                .iter()
                .position(|q| (q - p).norm() < 1e-9)
                .unwrap();
            assert_eq!(g.degree(x), 11);
            assert_eq!(cls.class[x], SiteClass::Defect);
        }
    }

    #[test]
    fn classification_is_motion_equivariant() {
        let config = ball(LatticeKind::Fcc, 3.0);
        let g = bond_graph(&config, ALPHA);
        let base = classify(&config, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let axis = nalgebra::Unit::new_normalize(Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ));
        let rot = nalgebra::Rotation3::from_axis_angle(&axis, 0.777).into_inner();
        let t = Vector3::new(2.0, -1.0, 0.5);
        let moved = Configuration::finite(
            config.positions.iter().map(|p| rot * p + t).collect(),
        );
        let g2 = bond_graph(&moved, ALPHA);
        let cls2 = classify(&moved, &g2).unwrap();
        assert_eq!(base.class, cls2.class);
    }

    #[test]
    fn second_neighbors_counts() {
        let config = ball(LatticeKind::Fcc, 4.0);
        let g = bond_graph(&config, ALPHA);
        let cls = classify(&config, &g).unwrap();
        assert!(cls.in_xreg2.contains(&0));
        let n2 = second_neighbors(&cls, 0).unwrap();
        assert_eq!(n2.len(), 6);
        for &j in &n2 {
            let d = (config.positions[j] - config.positions[0]).norm();
            assert!((d - 2f64.sqrt()).abs() <= 1e-9);
        }

        let hcp = ball(LatticeKind::Hcp, 4.0);
        let gh = bond_graph(&hcp, ALPHA);
        let ch = classify(&hcp, &gh).unwrap();
        let n2h = second_neighbors(&ch, 0).unwrap();
        assert_eq!(n2h.len(), 6);
        // Each second neighbor is the far vertex of a unit octahedron
        // through x, so the distance is sqrt(2) in both lattices.
        for &j in &n2h {
            let d = (hcp.positions[j] - hcp.positions[0]).norm();
            assert!((d - 2f64.sqrt()).abs() <= 1e-9);
        }

        // Boundary site: far from center, neighbors incomplete.
        let far = config
            .positions
            .iter()
            .position(|p| p.norm() > 3.5)
            .unwrap();
        assert!(second_neighbors(&cls, far).is_err());
    }

    #[test]
    fn edge_count_relation_on_fcc_balls() {
        for r in [3.0, 4.0] {
            let config = ball(LatticeKind::Fcc, r);
            let g = bond_graph(&config, ALPHA);
            let n = config.len();
            let x12 = config.ids().filter(|&x| g.degree(x) == 12).count();
            let slack = 12 * n - g.edge_count();
            assert!(n - x12 <= slack, "lower bound at r={r}");
            assert!(slack <= 12 * (n - x12), "upper bound at r={r}");
        }
    }

    #[test]
    fn triples_are_triangles() {
        let config = ball(LatticeKind::Fcc, 2.0);
        let g = bond_graph(&config, ALPHA);
        let t = triples(&g);
        for [i, j, k] in &t {
            assert!(g.has_edge(*i, *j) && g.has_edge(*j, *k) && g.has_edge(*i, *k));
        }
        assert!(!t.is_empty());
    }
}
