//! File formats: extended XYZ for geometry, JSON for structured results,
//! CSV for plot-feeding tables, and the run manifest that makes every
//! artifact reproducible byte-for-byte.
//!
//! All floating-point output goes through [`fmt17`] (17 significant digits,
//! enough to round-trip an f64 exactly), so identical runs produce identical
//! bytes regardless of the platform's default formatting.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::energy::{Configuration, Periodicity};
use crate::topology::{BondGraph, SiteClassification};
use crate::{Error, Result};

/// Artifact schema version embedded in every manifest.
pub const ARTIFACT_VERSION: &str = "1";

/// Format a float with 17 significant digits (exact f64 round-trip).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize any value to pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Flattened parameter list, sorted by key.
    pub parameters: Vec<(String, String)>,
    /// Hash of the potential JSON the run used, if any.
    pub potential_hash: Option<String>,
    pub artifact_version: String,
    pub rng_seed: u64,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, mut parameters: Vec<(String, String)>, seed: u64) -> RunManifest {
        parameters.sort();
        RunManifest {
            command: command.to_string(),
            parameters,
            potential_hash: None,
            artifact_version: ARTIFACT_VERSION.to_string(),
            rng_seed: seed,
            timestamp: timestamp_utc(),
        }
    }

    pub fn with_potential_json(mut self, json: &str) -> RunManifest {
        let mut h = DefaultHasher::new();
        json.hash(&mut h);
        self.potential_hash = Some(format!("{:016x}", h.finish()));
        self
    }
}

/// Seconds since the Unix epoch, formatted as a fixed-width decimal. Kept
/// out of numeric outputs so it never breaks byte-level determinism there.
fn timestamp_utc() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("{secs}")
}

/// Write a configuration as extended XYZ. The comment line carries the
/// optional `Lattice="..."` cell (column-major, nine numbers) and an
/// optional per-frame comment.
pub fn write_xyz(config: &Configuration, comment: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", config.len());
    let mut line = String::new();
    if let Some(p) = &config.periodicity {
        let nums: Vec<String> = p
            .cell
            .iter()
            .flat_map(|v| (0..3).map(move |row| fmt17(v[row])))
            .collect();
        let _ = write!(line, "Lattice=\"{}\" ", nums.join(" "));
    }
    line.push_str(comment);
    let _ = writeln!(out, "{}", line.trim_end());
    for p in &config.positions {
        let _ = writeln!(out, "X {} {} {}", fmt17(p.x), fmt17(p.y), fmt17(p.z));
    }
    out
}

/// Parse extended XYZ produced by [`write_xyz`] or by common external tools.
pub fn read_xyz(text: &str) -> Result<Configuration> {
    let mut lines = text.lines();
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty XYZ".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse("XYZ count line is not an integer".into()))?;
    let comment = lines
        .next()
        .ok_or_else(|| Error::Parse("missing XYZ comment line".into()))?;
    let periodicity = parse_lattice(comment)?;
    let mut positions = Vec::with_capacity(n);
    for (row, line) in lines.enumerate() {
        if positions.len() == n {
            if !line.trim().is_empty() {
                return Err(Error::Parse(format!("trailing XYZ content at line {row}")));
            }
            continue;
        }
        let mut fields = line.split_whitespace();
        let _species = fields
            .next()
            .ok_or_else(|| Error::Parse(format!("short XYZ row {row}")))?;
        let mut coord = [0.0f64; 3];
        for c in &mut coord {
            *c = fields
                .next()
                .ok_or_else(|| Error::Parse(format!("short XYZ row {row}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate in XYZ row {row}")))?;
        }
        positions.push(Vector3::new(coord[0], coord[1], coord[2]));
    }
    if positions.len() != n {
        return Err(Error::Parse(format!(
            "XYZ declared {n} particles, found {}",
            positions.len()
        )));
    }
    Ok(Configuration {
        positions,
        periodicity,
    })
}

fn parse_lattice(comment: &str) -> Result<Option<Periodicity>> {
    let Some(start) = comment.find("Lattice=\"") else {
        return Ok(None);
    };
    let rest = &comment[start + "Lattice=\"".len()..];
    let end = rest
        .find('"')
        .ok_or_else(|| Error::Parse("unterminated Lattice attribute".into()))?;
    let nums: Vec<f64> = rest[..end]
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Parse(format!("bad Lattice entry {t}")))
        })
        .collect::<Result<_>>()?;
    if nums.len() != 9 {
        return Err(Error::Parse(format!(
            "Lattice needs 9 numbers, got {}",
            nums.len()
        )));
    }
    let mut cell = [Vector3::zeros(); 3];
    for (col, v) in cell.iter_mut().enumerate() {
        *v = Vector3::new(nums[3 * col], nums[3 * col + 1], nums[3 * col + 2]);
    }
    Ok(Some(Periodicity { cell }))
}

/// Classification table: one row per particle with its class, bond degree,
/// half-edge count (edges inside its neighborhood), and registration
/// deviation.
pub fn classification_csv(
    config: &Configuration,
    graph: &BondGraph,
    cls: &SiteClassification,
) -> String {
    let mut out = String::from("id,class,degree,half_edges,rmsd\n");
    for i in 0..config.len() {
        let degree = graph.degree(i);
        // neighborhood_edges reports ordered pairs; the half-edge count of
        // a regular site is 24 unordered neighborhood bonds.
        let half_edges = crate::topology::neighborhood_edges(graph, i)
            .map(|e| e.len() / 2)
            .unwrap_or(0);
        let rmsd = cls
            .registration
            .get(&i)
            .map(|r| fmt17(r.rmsd))
            .unwrap_or_default();
        let class = format!("{:?}", cls.class[i]).to_uppercase();
        let _ = writeln!(out, "{i},{class},{degree},{half_edges},{rmsd}");
    }
    out
}

/// Extended XYZ with the site class as the species column, so external
/// viewers color by classification.
pub fn classified_xyz(config: &Configuration, cls: &SiteClassification) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", config.len());
    let _ = writeln!(out, "Properties=species:S:1:pos:R:3 classes=CO,TCO,DEFECT");
    for (i, p) in config.positions.iter().enumerate() {
        let species = format!("{:?}", cls.class[i]).to_uppercase();
        let _ = writeln!(
            out,
            "{species} {} {} {}",
            fmt17(p.x),
            fmt17(p.y),
            fmt17(p.z)
        );
    }
    out
}

/// CSV from a header plus rows of already-formatted cells.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{self, LatticeKind};
    use crate::topology::{bond_graph, classify};

    #[test]
    fn fmt17_round_trips_exactly() {
        for &x in &[
            0.1,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            -6.625_418_2e22,
            2.0f64.sqrt(),
        ] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn xyz_round_trips_finite_and_periodic() {
        let sites = lattice::generate(LatticeKind::Fcc, 2.0, Vector3::zeros()).unwrap();
        let finite = Configuration::from_sites(LatticeKind::Fcc, &sites);
        let back = read_xyz(&write_xyz(&finite, "fcc ball")).unwrap();
        assert_eq!(back.len(), finite.len());
        assert!(back.periodicity.is_none());
        for (a, b) in finite.positions.iter().zip(&back.positions) {
            assert_eq!(a, b);
        }

        let cell = [
            Vector3::new(3.0, 0.0, 0.0),
            Vector3::new(0.0, 4.0, 0.0),
            Vector3::new(0.0, 0.0, 5.0),
        ];
        let periodic = Configuration {
            positions: finite.positions.clone(),
            periodicity: Some(Periodicity { cell }),
        };
        let back = read_xyz(&write_xyz(&periodic, "")).unwrap();
        assert_eq!(back.periodicity.unwrap().cell, cell);
    }

    #[test]
    fn xyz_parse_errors_are_reported() {
        assert!(matches!(read_xyz(""), Err(Error::Parse(_))));
        assert!(matches!(read_xyz("two\n\nX 0 0 0\n"), Err(Error::Parse(_))));
        assert!(matches!(
            read_xyz("2\n\nX 0 0 0\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_xyz("1\nLattice=\"1 0 0\"\nX 0 0 0\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn classification_exports_cover_every_particle() {
        let sites = lattice::generate(LatticeKind::Fcc, 3.0, Vector3::zeros()).unwrap();
        let config = Configuration::from_sites(LatticeKind::Fcc, &sites);
        let graph = bond_graph(&config, 0.05);
        let cls = classify(&config, &graph).unwrap();
        let csv = classification_csv(&config, &graph, &cls);
        assert_eq!(csv.lines().count(), config.len() + 1);
        assert!(csv.lines().nth(1).unwrap().contains("CO"));
        let xyz = classified_xyz(&config, &cls);
        assert_eq!(xyz.lines().count(), config.len() + 2);
    }

    #[test]
    fn manifest_is_deterministic_up_to_timestamp() {
        let params = vec![
            ("rmax".to_string(), fmt17(1.8)),
            ("kind".to_string(), "fcc".to_string()),
        ];
        let a = RunManifest::new("lattice shells", params.clone(), 7)
            .with_potential_json("{\"alpha\":0.05}");
        let b = RunManifest::new("lattice shells", params, 7)
            .with_potential_json("{\"alpha\":0.05}");
        assert_eq!(a.parameters, b.parameters);
        assert_eq!(a.potential_hash, b.potential_hash);
        assert_eq!(a.parameters[0].0, "kind");
        let json = to_json(&a).unwrap();
        assert!(json.contains("artifact_version"));
    }
}
