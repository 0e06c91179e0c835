//! The energy ledger: structural, elastic and defect contributions, the
//! short/medium/long elastic split, per-site three-body energies, and the
//! fine-bound report.
//!
//! Every ordered pair within the interaction range belongs to exactly one
//! distance class P(λ) or to the defect remainder. The structural part
//! charges each class its ideal pair energy V(λ) plus the three-body site
//! energies; the elastic part carries the deviations V(|Δ|) − V(λ); the
//! defect part is the raw energy of the remainder. The three parts close
//! exactly against the energy module's total.

use std::collections::BTreeMap;

use crate::energy::{self, neighbors_within, Configuration, ParticleId};
use crate::paths::{key_lambda, PairSets};
use crate::potential::{efcc, PotentialPair, PotentialTriple};
use crate::topology::{BondGraph, SiteClass, SiteClassification};
use crate::{Error, Result};

/// Class cardinalities of a decomposed configuration.
#[derive(Debug, Clone)]
pub struct ClassCounts {
    pub n: usize,
    pub x12: usize,
    pub xreg: usize,
    pub co: usize,
    pub tco: usize,
    /// Non-regular particles (the boundary/defect set).
    pub boundary: usize,
    /// Ordered bond count #S.
    pub bonds: usize,
    /// Ordered pair count per distance-class key (round(3 λ²)).
    pub per_class: BTreeMap<i64, usize>,
    pub defect_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub e_struct: f64,
    pub e_elast: f64,
    pub e_defect: f64,
    /// Elastic split: bonds / medium classes / everything longer.
    pub e_short: f64,
    pub e_med: f64,
    pub e_long: f64,
    pub e3: Vec<f64>,
    pub counts: ClassCounts,
    /// The energy module's total for the same configuration.
    pub total: f64,
    /// Bound on the pair energy neglected beyond the truncation radius.
    pub tail_bound: f64,
}

/// Three-body energy attached to one site: twice the sum of the triple
/// potential over all triangles anchored at it.
pub fn site_three_body(
    config: &Configuration,
    psi: &PotentialTriple,
    x: ParticleId,
) -> Result<f64> {
    if x >= config.len() {
        return Err(Error::UnknownId(x));
    }
    Ok(all_three_body(config, psi)[x])
}

/// e3 for every particle in one pass over the triangles.
pub fn all_three_body(config: &Configuration, psi: &PotentialTriple) -> Vec<f64> {
    let pts = &config.positions;
    let n = pts.len();
    let adj = neighbors_within(pts, energy::TRIPLE_REACH);
    let mut e3 = vec![0.0; n];
    for i in 0..n {
        for (a, &j) in adj[i].iter().enumerate() {
            if j < i {
                continue;
            }
            for &k in adj[i].iter().skip(a + 1) {
                if k < i || !adj[j].contains(&k) {
                    continue;
                }
                let r1 = (pts[i] - pts[j]).norm();
                let r2 = (pts[i] - pts[k]).norm();
                let r3 = (pts[j] - pts[k]).norm();
                let val = 2.0 * psi.value(r1, r2, r3);
                e3[i] += val;
                e3[j] += val;
                e3[k] += val;
            }
        }
    }
    e3
}

/// Split the configuration's energy into structural, elastic and defect
/// parts over the given pair classes; closes against the energy total.
pub fn decompose(
    config: &Configuration,
    v: &PotentialPair,
    psi: &PotentialTriple,
    classification: &SiteClassification,
    pairsets: &PairSets,
) -> Result<DecompositionReport> {
    let n = config.len();
    if classification.class.len() != n {
        return Err(Error::Domain(
            "classification does not match the configuration".into(),
        ));
    }
    let e3 = all_three_body(config, psi);
    let e3_total: f64 = e3.iter().sum();

    let mut e_struct = e3_total;
    let mut e_elast = 0.0;
    let mut e_short = 0.0;
    let mut e_med = 0.0;
    let mut e_long = 0.0;
    let mut per_class = BTreeMap::new();
    for (&key, pairs) in &pairsets.classes {
        let lambda = key_lambda(key);
        let v_ideal = v.value(lambda);
        e_struct += pairs.len() as f64 * v_ideal;
        let mut class_elast = 0.0;
        for &(p, q) in pairs {
            let d = (config.positions[p] - config.positions[q]).norm();
            class_elast += v.value(d) - v_ideal;
        }
        e_elast += class_elast;
        match key {
            3 => e_short += class_elast,
            6 | 8 | 9 => e_med += class_elast,
            _ => e_long += class_elast,
        }
        per_class.insert(key, pairs.len());
    }
    let mut e_defect = 0.0;
    for &(p, q) in &pairsets.defect {
        let d = (config.positions[p] - config.positions[q]).norm();
        e_defect += v.value(d);
    }

    let breakdown = energy::energy(config, v, psi)?;
    let ledger = e_struct + e_elast + e_defect;
    let scale = breakdown.total.abs().max(1.0);
    if (ledger - breakdown.total).abs() > 1e-8 * scale {
        return Err(Error::Invariant(format!(
            "ledger {ledger} does not close against total {}",
            breakdown.total
        )));
    }

    let xreg = classification.in_xreg.len();
    let counts = ClassCounts {
        n,
        x12: classification.in_x12.len(),
        xreg,
        co: classification
            .class
            .iter()
            .filter(|c| **c == SiteClass::Co)
            .count(),
        tco: classification
            .class
            .iter()
            .filter(|c| **c == SiteClass::Tco)
            .count(),
        boundary: n - xreg,
        bonds: per_class.get(&3).copied().unwrap_or(0),
        per_class,
        defect_pairs: pairsets.defect.len(),
    };
    Ok(DecompositionReport {
        e_struct,
        e_elast,
        e_defect,
        e_short,
        e_med,
        e_long,
        e3,
        counts,
        total: breakdown.total,
        tail_bound: breakdown.tail_bound,
    })
}

/// The fine-bound ledger: energy excess over the bulk value against bond
/// distortion plus a surface term.
#[derive(Debug, Clone)]
pub struct FineBoundReport {
    /// E(y) - e* n.
    pub excess: f64,
    /// Sum over ordered bonds of (|Δ| - 1)².
    pub distortion_sq: f64,
    /// alpha^{1/2} times the boundary count.
    pub boundary_term: f64,
    /// excess / (distortion + boundary term), when the denominator is
    /// positive; None flags the exact-crystal case.
    pub c_hat: Option<f64>,
}

pub fn fine_bound_report(
    config: &Configuration,
    v: &PotentialPair,
    psi: &PotentialTriple,
    graph: &BondGraph,
    classification: &SiteClassification,
) -> Result<FineBoundReport> {
    let n = config.len();
    let e_star = efcc(v, psi, 1.0)?;
    let total = match &config.periodicity {
        None => energy::energy(config, v, psi)?.total,
        Some(_) => energy::periodic_energy(config, v, psi)? * n as f64,
    };
    let excess = total - e_star * n as f64;
    let mut distortion_sq = 0.0;
    for (p, q) in graph.edges() {
        let d = crate::topology::displacement(config, p, q).norm() - 1.0;
        distortion_sq += d * d;
    }
    let boundary_term =
        graph.alpha.sqrt() * (n - classification.in_xreg.len()) as f64;
    let denom = distortion_sq + boundary_term;
    Ok(FineBoundReport {
        excess,
        distortion_sq,
        boundary_term,
        c_hat: if denom > 1e-12 { Some(excess / denom) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::grow_reference;
    use crate::lattice::{self, LatticeKind};
    use crate::paths::pair_sets;
    use crate::potential::{
        build_canonical_pair, build_canonical_triple, tune_equilibrium, CanonicalOptions,
    };
    use crate::topology::{bond_graph, classify};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    const ALPHA: f64 = 0.05;

    fn potentials() -> &'static (PotentialPair, PotentialTriple) {
        static P: OnceLock<(PotentialPair, PotentialTriple)> = OnceLock::new();
        P.get_or_init(|| {
            let v = build_canonical_pair(ALPHA, &CanonicalOptions::default()).unwrap();
            let v = tune_equilibrium(&v).unwrap();
            let psi = build_canonical_triple(ALPHA).unwrap();
            (v, psi)
        })
    }

    fn ball(kind: LatticeKind, r: f64) -> Configuration {
        let sites = lattice::generate(kind, r, Vector3::zeros()).unwrap();
        Configuration::from_sites(kind, &sites)
    }

    #[test]
    fn three_body_site_oracles() {
        let (_, psi) = potentials();
        for kind in [LatticeKind::Fcc, LatticeKind::Hcp] {
            let config = ball(kind, 3.0);
            // Site 0 is the center: 24 unit triangles, each worth -1.
            let e = site_three_body(&config, psi, 0).unwrap();
            assert!((e - (-48.0)).abs() <= 1e-9, "{kind:?}: {e}");
        }
        let lonely = Configuration::finite(vec![Vector3::zeros()]);
        assert_eq!(site_three_body(&lonely, psi, 0).unwrap(), 0.0);
        assert!(site_three_body(&lonely, psi, 3).is_err());

        // Sum identity against the energy module's triple part.
        let (v, psi) = potentials();
        let config = ball(LatticeKind::Fcc, 3.5);
        let e3: f64 = all_three_body(&config, psi).iter().sum();
        let breakdown = energy::energy(&config, v, psi).unwrap();
        assert!((e3 - breakdown.triple_sum).abs() <= 1e-9 * breakdown.triple_sum.abs());
    }

    fn full_pipeline(
        config: &Configuration,
        seed_growth: bool,
    ) -> (SiteClassification, PairSets, BondGraph) {
        let graph = bond_graph(config, ALPHA);
        let cls = classify(config, &graph).unwrap();
        let refs = if seed_growth {
            vec![grow_reference(config, &graph, &cls, 0, 2.0).unwrap()]
        } else {
            Vec::new()
        };
        let ps = pair_sets(config, &graph, &cls, &refs).unwrap();
        (cls, ps, graph)
    }

    #[test]
    fn exact_ball_ledger_closes_with_zero_elastic() {
        let (v, psi) = potentials();
        let config = ball(LatticeKind::Fcc, 8.0);
        let (cls, ps, _) = full_pipeline(&config, true);
        let report = decompose(&config, v, psi, &cls, &ps).unwrap();
        assert!(report.e_elast.abs() <= 1e-10 * report.total.abs());
        let ledger = report.e_struct + report.e_elast + report.e_defect;
        assert!((ledger - report.total).abs() <= 1e-8 * report.total.abs());
        assert!((report.e_elast - (report.e_short + report.e_med + report.e_long)).abs() <= 1e-10);
        assert!(report.counts.boundary > 0);
        assert_eq!(report.counts.n, config.len());
    }

    #[test]
    fn dilation_moves_elastic_not_structural() {
        let (v, psi) = potentials();
        let base = ball(LatticeKind::Fcc, 8.0);
        let delta = 0.01;
        let dilated = Configuration::finite(
            base.positions.iter().map(|p| (1.0 + delta) * p).collect(),
        );
        let (cls_a, ps_a, _) = full_pipeline(&base, true);
        let (cls_b, ps_b, _) = full_pipeline(&dilated, true);
        let a = decompose(&base, v, psi, &cls_a, &ps_a).unwrap();
        let b = decompose(&dilated, v, psi, &cls_b, &ps_b).unwrap();
        // Same combinatorics strictly inside the interaction cutoff (the
        // lattice shell exactly at the cutoff leaves range under dilation):
        // identical class counts and identical pair part of the structural
        // energy over those classes.
        let cut_key = crate::paths::lambda_key(6.0);
        let inner = |r: &DecompositionReport| -> (BTreeMap<i64, usize>, f64) {
            let counts: BTreeMap<i64, usize> = r
                .counts
                .per_class
                .iter()
                .filter(|(k, _)| **k < cut_key)
                .map(|(k, c)| (*k, *c))
                .collect();
            let pair_struct: f64 = counts
                .iter()
                .map(|(&k, &c)| c as f64 * v.value(key_lambda(k)))
                .sum();
            (counts, pair_struct)
        };
        let (counts_a, pair_struct_a) = inner(&a);
        let (counts_b, pair_struct_b) = inner(&b);
        assert_eq!(counts_a, counts_b);
        assert!((pair_struct_a - pair_struct_b).abs() <= 1e-9 * pair_struct_a.abs());
        assert!(b.e_elast > 1e-4);
        assert!(a.e_elast.abs() <= 1e-10 * a.total.abs());
    }

    #[test]
    fn fcc_structural_energy_beats_hcp_per_particle() {
        let (v, psi) = potentials();
        let fcc = ball(LatticeKind::Fcc, 6.0);
        let hcp = ball(LatticeKind::Hcp, 6.0);
        let (cls_f, ps_f, _) = full_pipeline(&fcc, true);
        let (cls_h, ps_h, _) = full_pipeline(&hcp, false);
        let rf = decompose(&fcc, v, psi, &cls_f, &ps_f).unwrap();
        let rh = decompose(&hcp, v, psi, &cls_h, &ps_h).unwrap();
        let per_f = rf.e_struct / rf.counts.n as f64;
        let per_h = rh.e_struct / rh.counts.n as f64;
        assert!(per_f < per_h, "fcc {per_f} vs hcp {per_h}");
    }

    #[test]
    fn fine_bound_on_periodic_crystal_and_balls() {
        let (v, psi) = potentials();
        // Periodic fcc: excess ~ 0, denominator 0, C undefined. A 3x3x3
        // supercell keeps minimum-image bonds faithful (edge > 2(1+alpha)).
        let a = 2f64.sqrt();
        let reps = 3;
        let edge = reps as f64 * a;
        let cell = [
            Vector3::new(edge, 0.0, 0.0),
            Vector3::new(0.0, edge, 0.0),
            Vector3::new(0.0, 0.0, edge),
        ];
        let base = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.0, a / 2.0, a / 2.0),
            Vector3::new(a / 2.0, 0.0, a / 2.0),
            Vector3::new(a / 2.0, a / 2.0, 0.0),
        ];
        let mut motif = Vec::new();
        for i in 0..reps {
            for j in 0..reps {
                for k in 0..reps {
                    let shift = Vector3::new(i as f64, j as f64, k as f64) * a;
                    motif.extend(base.iter().map(|p| p + shift));
                }
            }
        }
        let config = Configuration {
            positions: motif,
            periodicity: Some(crate::energy::Periodicity { cell }),
        };
        let graph = bond_graph(&config, ALPHA);
        let cls = classify(&config, &graph).unwrap();
        let report = fine_bound_report(&config, v, psi, &graph, &cls).unwrap();
        // The truncated pair tail leaves ~1e-7 per particle.
        assert!(report.excess.abs() <= 1e-6 * config.len() as f64);
        assert!(report.c_hat.is_none());

        // Finite ball: positive excess, hull boundary, C defined.
        let ballcfg = ball(LatticeKind::Fcc, 5.0);
        let graph = bond_graph(&ballcfg, ALPHA);
        let cls = classify(&ballcfg, &graph).unwrap();
        let report = fine_bound_report(&ballcfg, v, psi, &graph, &cls).unwrap();
        assert!(report.excess > 0.0);
        assert!(report.boundary_term > 0.0);
        assert!(report.c_hat.unwrap() > 0.0);
    }

    #[test]
    fn fine_bound_constant_is_stable_under_noise() {
        let (v, psi) = potentials();
        let base = ball(LatticeKind::Fcc, 5.0);
        let mut cs = Vec::new();
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = 0.02;
            let positions: Vec<Vector3<f64>> = base
                .positions
                .iter()
                .map(|p| {
                    p + Vector3::new(
                        sigma * rng.gen_range(-1.0..1.0),
                        sigma * rng.gen_range(-1.0..1.0),
                        sigma * rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let config = Configuration::finite(positions);
            let graph = bond_graph(&config, ALPHA);
            let Ok(cls) = classify(&config, &graph) else { continue };
            let report = fine_bound_report(&config, v, psi, &graph, &cls).unwrap();
            cs.push(report.c_hat.unwrap());
        }
        assert!(cs.len() >= 8);
        let max = cs.iter().cloned().fold(f64::MIN, f64::max);
        let min = cs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min <= 2.0, "C-hat range [{min}, {max}]");
    }

    #[test]
    fn per_particle_energy_decreases_with_radius() {
        let (v, psi) = potentials();
        let e_star = efcc(v, psi, 1.0).unwrap();
        let mut per: Vec<f64> = Vec::new();
        for r in [3.0, 4.0, 5.0, 6.0, 8.0] {
            let config = ball(LatticeKind::Fcc, r);
            let breakdown = energy::energy(&config, v, psi).unwrap();
            per.push(breakdown.total / config.len() as f64);
        }
        for w in per.windows(2) {
            assert!(w[1] < w[0], "per-particle energy not decreasing: {per:?}");
        }
        let gap_first = per[0] - e_star;
        let gap_last = per[per.len() - 1] - e_star;
        assert!(gap_first > 0.0 && gap_last > 0.0);
        assert!(gap_last <= 0.7 * gap_first, "gap shrank only {gap_last}/{gap_first}");
    }
}
