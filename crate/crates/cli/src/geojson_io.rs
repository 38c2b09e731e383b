//! GeoJSON ingestion and enrichment.
//!
//! The reader accepts a FeatureCollection of Polygon/MultiPolygon
//! features (Point features are accepted as explicit centroids) each
//! carrying a string-convertible `id` property. The enricher merges
//! significance-map columns back into the original document as
//! `lisa_value`, `lisa_p` and `lisa_class` feature properties without
//! touching any existing member, so pre-existing properties and
//! geometries round-trip unchanged.

use std::path::Path;

use serde_json::Value;

use spassoc_core::inference::{QuadrantClass, SignificanceMap};
use spassoc_core::lattice::{Lattice, Point, Ring, SiteId};

use crate::error::{CliError, Result};

/// Parsed lattice plus the original document (kept for enrichment).
pub struct GeoLattice {
    pub lattice: Lattice,
    pub document: Value,
}

pub fn read_geojson(path: &Path) -> Result<GeoLattice> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_geojson(&text).map_err(|e| match e {
        CliError::Parse { message, .. } => CliError::Parse { path: path.to_path_buf(), message },
        other => other,
    })
}

pub fn parse_geojson(text: &str) -> Result<GeoLattice> {
    let document: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let features = document
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("not a FeatureCollection with a 'features' array"))?;
    let mut ids = Vec::with_capacity(features.len());
    let mut geometry = Vec::with_capacity(features.len());
    let mut centroids = Vec::with_capacity(features.len());
    for (index, feature) in features.iter().enumerate() {
        let id_value = feature.get("properties").and_then(|p| p.get("id"));
        let id = match id_value {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(CliError::MissingId { index }),
        };
        if ids.iter().any(|existing: &SiteId| existing.as_str() == id) {
            return Err(CliError::DuplicateId { id });
        }
        ids.push(SiteId::new(id).map_err(CliError::Core)?);
        let (rings, centroid) = match feature.get("geometry") {
            Some(geom) if !geom.is_null() => read_geometry(geom, index)?,
            _ => (None, None),
        };
        geometry.push(rings);
        centroids.push(centroid);
    }
    let lattice = Lattice::from_parts(ids, geometry, centroids)?;
    Ok(GeoLattice { lattice, document })
}

fn parse_err(message: impl Into<String>) -> CliError {
    CliError::Parse { path: std::path::PathBuf::from("<input>"), message: message.into() }
}

type GeomParts = (Option<Vec<Ring>>, Option<Point>);

fn read_geometry(geom: &Value, index: usize) -> Result<GeomParts> {
    let kind = geom
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| parse_err(format!("feature {index}: geometry without a type")))?;
    let coords = geom
        .get("coordinates")
        .ok_or_else(|| parse_err(format!("feature {index}: geometry without coordinates")))?;
    match kind {
        "Polygon" => Ok((Some(read_polygon(coords, index)?), None)),
        "MultiPolygon" => {
            let polys = coords
                .as_array()
                .ok_or_else(|| parse_err(format!("feature {index}: MultiPolygon coordinates")))?;
            let mut rings = Vec::new();
            for poly in polys {
                rings.extend(read_polygon(poly, index)?);
            }
            Ok((Some(rings), None))
        }
        "Point" => {
            let p = read_position(coords, index)?;
            Ok((None, Some(p)))
        }
        other => Err(parse_err(format!("feature {index}: unsupported geometry type '{other}'"))),
    }
}

fn read_polygon(coords: &Value, index: usize) -> Result<Vec<Ring>> {
    let rings = coords
        .as_array()
        .ok_or_else(|| parse_err(format!("feature {index}: Polygon coordinates")))?;
    let mut out = Vec::with_capacity(rings.len());
    for ring in rings {
        let positions = ring
            .as_array()
            .ok_or_else(|| parse_err(format!("feature {index}: ring is not an array")))?;
        let mut r = Vec::with_capacity(positions.len());
        for pos in positions {
            r.push(read_position(pos, index)?);
        }
        out.push(r);
    }
    Ok(out)
}

fn read_position(pos: &Value, index: usize) -> Result<Point> {
    let pair = pos
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| parse_err(format!("feature {index}: position is not [x, y]")))?;
    let x = pair[0]
        .as_f64()
        .ok_or_else(|| parse_err(format!("feature {index}: non-numeric coordinate")))?;
    let y = pair[1]
        .as_f64()
        .ok_or_else(|| parse_err(format!("feature {index}: non-numeric coordinate")))?;
    Ok(Point::new(x, y))
}

/// Merges a significance map into the original document as `lisa_*`
/// feature properties, in feature order. Island sites get a null
/// `lisa_value`/`lisa_p` and the class string "island".
pub fn enrich_geojson(document: &Value, map: &SignificanceMap) -> Result<Value> {
    let mut out = document.clone();
    let features = out
        .get_mut("features")
        .and_then(Value::as_array_mut)
        .ok_or_else(|| parse_err("not a FeatureCollection with a 'features' array"))?;
    if features.len() != map.len() {
        return Err(CliError::Config(format!(
            "significance map covers {} sites but the document has {} features",
            map.len(),
            features.len()
        )));
    }
    for (feature, site) in features.iter_mut().zip(&map.sites) {
        let props = feature
            .get_mut("properties")
            .and_then(Value::as_object_mut)
            .ok_or_else(|| parse_err("feature without a properties object"))?;
        let is_island = site.class == QuadrantClass::Island;
        props.insert(
            "lisa_value".to_string(),
            if is_island { Value::Null } else { json_number(site.value) },
        );
        props.insert(
            "lisa_p".to_string(),
            match site.pseudo_p {
                Some(p) => json_number(p),
                None => Value::Null,
            },
        );
        props.insert(
            "lisa_class".to_string(),
            Value::String(site.class.as_str().to_string()),
        );
    }
    Ok(out)
}

fn json_number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// A unit-square grid lattice document (row-major ids `r{row}c{col}`),
/// used by the simulate command.
pub fn grid_geojson(rows: usize, cols: usize) -> Value {
    let mut features = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (c as f64, r as f64);
            features.push(serde_json::json!({
                "type": "Feature",
                "properties": { "id": format!("r{r}c{c}") },
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[
                        [x, y], [x + 1.0, y], [x + 1.0, y + 1.0], [x, y + 1.0], [x, y]
                    ]],
                },
            }));
        }
    }
    serde_json::json!({ "type": "FeatureCollection", "features": features })
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
