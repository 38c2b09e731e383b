//! GAL and GWT adjacency files.
//!
//! GAL (binary adjacency): a header line `0 <n> <name> <name>`, then
//! per site a line `<id> <degree>` followed by one line of
//! space-separated neighbour ids (empty for islands).
//!
//! GWT-style triples (general weights): one `<id_i> <id_j> <w>` line
//! per stored entry.

use std::path::Path;

use spassoc_core::lattice::{Lattice, SiteId};
use spassoc_core::weights::{Standardization, WeightMatrix};

use crate::error::{CliError, Result};

pub fn write_gal(path: &Path, lattice: &Lattice, w: &WeightMatrix, name: &str) -> Result<()> {
    if w.standardization() != Standardization::Binary {
        return Err(CliError::UnsupportedFormat {
            path: path.to_path_buf(),
            message: "GAL stores binary adjacency; write weighted matrices as .gwt".into(),
        });
    }
    let ids = lattice.ids();
    let mut out = format!("0 {} {name} {name}\n", w.n());
    for i in 0..w.n() {
        let (cols, _) = w.row(i);
        out.push_str(&format!("{} {}\n", ids[i].as_str(), cols.len()));
        let neighbours: Vec<&str> = cols.iter().map(|&j| ids[j].as_str()).collect();
        out.push_str(&neighbours.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn read_gal(path: &Path) -> Result<(Lattice, WeightMatrix)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_gal(&text).map_err(|e| relocate(e, path))
}

pub fn parse_gal(text: &str) -> Result<(Lattice, WeightMatrix)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err("empty file"))?;
    let mut tokens = header.split_whitespace();
    let _zero = tokens.next().ok_or_else(|| parse_err("malformed header"))?;
    let n: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err("header is missing the site count"))?;
    let mut ids: Vec<String> = Vec::with_capacity(n);
    let mut neighbour_ids: Vec<Vec<String>> = Vec::with_capacity(n);
    for _ in 0..n {
        let head = lines.next().ok_or_else(|| parse_err("truncated site header"))?;
        let mut parts = head.split_whitespace();
        let id = parts.next().ok_or_else(|| parse_err("site header without an id"))?;
        let degree: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(format!("site '{id}' header without a degree")))?;
        let neighbour_line = lines.next().ok_or_else(|| parse_err("truncated neighbour line"))?;
        let neighbours: Vec<String> =
            neighbour_line.split_whitespace().map(|s| s.to_string()).collect();
        if neighbours.len() != degree {
            return Err(parse_err(format!(
                "site '{id}' lists {} neighbours, header says {degree}",
                neighbours.len()
            )));
        }
        ids.push(id.to_string());
        neighbour_ids.push(neighbours);
    }
    let lattice = Lattice::from_ids(
        ids.iter().map(|s| SiteId::new(s.clone()).map_err(CliError::Core)).collect::<Result<_>>()?,
    )?;
    let mut triplets = Vec::new();
    for (i, neighbours) in neighbour_ids.iter().enumerate() {
        for nb in neighbours {
            let j = lattice
                .index_of(nb)
                .ok_or_else(|| parse_err(format!("neighbour id '{nb}' is not a site")))?;
            triplets.push((i, j, 1.0));
        }
    }
    let w = WeightMatrix::from_triplets(lattice.len(), triplets, Standardization::Binary)?;
    Ok((lattice, w))
}

pub fn write_gwt(path: &Path, lattice: &Lattice, w: &WeightMatrix) -> Result<()> {
    let ids = lattice.ids();
    let mut out = String::new();
    for (i, j, wij) in w.entries() {
        out.push_str(&format!("{} {} {}\n", ids[i].as_str(), ids[j].as_str(), wij));
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Reads a triple file. Site order is the order of first appearance;
/// the standardization mode is classified from the weights (all ones =
/// binary, unit row sums = row-standardized, anything else rejected).
pub fn read_gwt(path: &Path) -> Result<(Lattice, WeightMatrix)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_gwt(&text).map_err(|e| relocate(e, path))
}

pub fn parse_gwt(text: &str) -> Result<(Lattice, WeightMatrix)> {
    let mut ids: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (a, b, wtxt) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(w)) => (a, b, w),
            _ => return Err(parse_err(format!("line {}: expected 'id id weight'", lineno + 1))),
        };
        let wij: f64 = wtxt
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(format!("line {}: weight '{wtxt}'", lineno + 1)))?;
        for id in [a, b] {
            if !ids.iter().any(|e| e == id) {
                ids.push(id.to_string());
            }
        }
        edges.push((a.to_string(), b.to_string(), wij));
    }
    let lattice = Lattice::from_ids(
        ids.iter().map(|s| SiteId::new(s.clone()).map_err(CliError::Core)).collect::<Result<_>>()?,
    )?;
    let triplets: Vec<(usize, usize, f64)> = edges
        .iter()
        .map(|(a, b, wij)| {
            (lattice.index_of(a).unwrap(), lattice.index_of(b).unwrap(), *wij)
        })
        .collect();
    let binary = triplets.iter().all(|&(_, _, w)| w == 1.0);
    if binary {
        let w = WeightMatrix::from_triplets(lattice.len(), triplets, Standardization::Binary)?;
        return Ok((lattice, w));
    }
    let w = WeightMatrix::from_triplets(lattice.len(), triplets, Standardization::RowStandardized)
        .map_err(|_| {
            parse_err("weights are neither binary nor row-standardized".to_string())
        })?;
    Ok((lattice, w))
}

fn relocate(e: CliError, path: &Path) -> CliError {
    match e {
        CliError::Parse { message, .. } => {
            CliError::Parse { path: path.to_path_buf(), message }
        }
        other => other,
    }
}

fn parse_err(message: impl Into<String>) -> CliError {
    CliError::Parse { path: std::path::PathBuf::from("<input>"), message: message.into() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spassoc_core::weights::row_standardize;

    fn lattice(ids: &[&str]) -> Lattice {
        Lattice::from_ids(ids.iter().map(|s| SiteId::new(*s).unwrap()).collect()).unwrap()
    }

    #[test]
    fn gal_round_trip_preserves_adjacency() {
        let lat = lattice(&["a", "b", "c", "lonely"]);
        let w = WeightMatrix::from_triplets(
            4,
            vec![(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)],
            Standardization::Binary,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.gal");
        write_gal(&path, &lat, &w, "test").unwrap();
        let (lat2, w2) = read_gal(&path).unwrap();
        assert_eq!(lat2.ids()[3].as_str(), "lonely");
        assert_eq!(w2.entries().collect::<Vec<_>>(), w.entries().collect::<Vec<_>>());
        assert!(w2.is_island(3));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("0 4 test test\n"));
    }

    #[test]
    fn gwt_round_trip_preserves_weights() {
        let lat = lattice(&["a", "b", "c"]);
        let w = row_standardize(
            &WeightMatrix::from_triplets(
                3,
                vec![(0, 1, 1.0), (0, 2, 1.0), (1, 0, 1.0), (2, 0, 1.0)],
                Standardization::Binary,
            )
            .unwrap(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.gwt");
        write_gwt(&path, &lat, &w).unwrap();
        let (lat2, w2) = read_gwt(&path).unwrap();
        assert_eq!(lat2.len(), 3);
        assert_eq!(w2.standardization(), Standardization::RowStandardized);
        for (e1, e2) in w.entries().zip(w2.entries()) {
            assert_eq!(e1.2, e2.2);
        }
    }

    #[test]
    fn gal_rejects_weighted_matrices() {
        let lat = lattice(&["a", "b"]);
        let w = row_standardize(
            &WeightMatrix::from_triplets(
                2,
                vec![(0, 1, 1.0), (1, 0, 1.0)],
                Standardization::Binary,
            )
            .unwrap(),
        );
        let dir = tempfile::tempdir().unwrap();
        let err = write_gal(&dir.path().join("w.gal"), &lat, &w, "x").unwrap_err();
        assert_eq!(err.code(), "UNSUPPORTED_FORMAT");
    }

    #[test]
    fn degree_mismatch_is_a_parse_error() {
        let text = "0 2 t t\na 2\nb\nb 1\na\n";
        assert_eq!(parse_gal(text).unwrap_err().code(), "PARSE_ERROR");
    }

    #[test]
    fn arbitrary_gwt_weights_are_rejected() {
        let text = "a b 0.7\nb a 0.9\nc a 1.0\na c 2.0\n";
        assert_eq!(parse_gwt(text).unwrap_err().code(), "PARSE_ERROR");
    }
}
