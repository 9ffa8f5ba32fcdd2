//! JSON mesh documents and target files.

use std::collections::BTreeMap;
use std::path::Path;

use rigidity_core::mesh::{CirclePackingMetric, Edge, PolyhedralMetric, Surface};
use rigidity_core::Geometry;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDocument {
    pub geometry: Geometry,
    pub vertices: usize,
    pub triangles: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<BTreeMap<Edge, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<BTreeMap<usize, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

impl MeshDocument {
    pub fn new(geometry: Geometry, surface: &Surface) -> Self {
        MeshDocument {
            geometry,
            vertices: surface.vertex_count(),
            triangles: surface.triangles().to_vec(),
            metric: None,
            radii: None,
            h: None,
        }
    }

    pub fn with_metric(mut self, surface: &Surface, metric: &PolyhedralMetric) -> Self {
        self.metric = Some(surface.edges().iter().copied().zip(metric.lengths.iter().copied()).collect());
        self
    }

    pub fn with_radii(mut self, radii: &[f64]) -> Self {
        self.radii = Some(radii.iter().copied().enumerate().collect());
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| WorkbenchError::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialise")
    }

    pub fn surface(&self) -> Result<Surface> {
        Ok(Surface::new(self.vertices, self.triangles.clone())?)
    }

    /// All edge lengths, strictly admissible on every triangle.
    pub fn metric(&self, surface: &Surface) -> Result<PolyhedralMetric> {
        let map = self
            .metric
            .as_ref()
            .ok_or_else(|| WorkbenchError::InvalidMesh("document has no metric".into()))?;
        self.check_edges(surface, map)?;
        let metric = PolyhedralMetric::from_map(surface, self.geometry, map)?;
        let bad = rigidity_core::mesh::validate_metric(surface, &metric);
        if !bad.is_empty() {
            return Err(WorkbenchError::InvalidMetric(format!("triangles {bad:?} violate the triangle inequality")));
        }
        Ok(metric)
    }

    /// Lengths on the given edges only (others may be absent).
    pub fn partial_metric(&self, surface: &Surface) -> Result<BTreeMap<Edge, f64>> {
        let map = self.metric.clone().unwrap_or_default();
        self.check_edges(surface, &map)?;
        Ok(map)
    }

    fn check_edges(&self, surface: &Surface, map: &BTreeMap<Edge, f64>) -> Result<()> {
        if let Some(e) = map.keys().find(|e| surface.edge_index(**e).is_none()) {
            return Err(WorkbenchError::InvalidMesh(format!("edge {e} is not an edge of the mesh")));
        }
        if let Some((e, l)) = map.iter().find(|(_, l)| !self.geometry.admits_length(**l)) {
            return Err(WorkbenchError::InvalidMetric(format!("edge {e} has inadmissible length {l}")));
        }
        Ok(())
    }

    pub fn radius_map(&self, surface: &Surface) -> Result<BTreeMap<usize, f64>> {
        let map = self.radii.clone().unwrap_or_default();
        if let Some(v) = map.keys().find(|&&v| v >= surface.vertex_count()) {
            return Err(WorkbenchError::InvalidMesh(format!("vertex {v} does not exist")));
        }
        if let Some((v, r)) = map.iter().find(|(_, r)| !(r.is_finite() && **r > 0.0)) {
            return Err(WorkbenchError::InvalidMetric(format!("vertex {v} has non-positive radius {r}")));
        }
        Ok(map)
    }

    pub fn packing(&self, surface: &Surface) -> Result<CirclePackingMetric> {
        let map = self.radius_map(surface)?;
        let radii = (0..surface.vertex_count())
            .map(|v| {
                map.get(&v)
                    .copied()
                    .ok_or_else(|| WorkbenchError::InvalidMesh(format!("no radius for vertex {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CirclePackingMetric::new(surface, self.geometry, radii)?)
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| WorkbenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Target curvatures keyed by `"i-j"` (edges) or `"v"` (vertices).
pub type Targets = BTreeMap<String, f64>;

pub fn read_targets(path: &Path) -> Result<Targets> {
    serde_json::from_str(&read_text(path)?).map_err(|e| WorkbenchError::Parse(e.to_string()))
}

/// Values for `keys` in order; every key must be present and no other.
pub fn align_targets(targets: &Targets, keys: &[String]) -> Result<Vec<f64>> {
    if let Some(extra) = targets.keys().find(|k| !keys.contains(k)) {
        return Err(WorkbenchError::InvalidMesh(format!("target key '{extra}' is not an interior element")));
    }
    keys.iter()
        .map(|k| {
            targets
                .get(k)
                .copied()
                .ok_or_else(|| WorkbenchError::InvalidMesh(format!("missing target for '{k}'")))
        })
        .collect()
}

pub fn edge_keys(surface: &Surface, edges: &[usize]) -> Vec<String> {
    edges.iter().map(|&e| surface.edges()[e].to_string()).collect()
}

pub fn vertex_keys(vertices: &[usize]) -> Vec<String> {
    vertices.iter().map(|v| v.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAN: &str = r#"{
        "geometry": "euclidean",
        "vertices": 4,
        "triangles": [[0, 1, 2], [1, 3, 2]],
        "metric": {"0-1": 2, "0-2": 2, "1-2": 3.5, "1-3": 2, "2-3": 2}
    }"#;

    #[test]
    fn round_trip() {
        let doc = MeshDocument::from_json(FAN).unwrap();
        let s = doc.surface().unwrap();
        let m = doc.metric(&s).unwrap();
        assert_eq!(m.lengths, vec![2.0, 2.0, 3.5, 2.0, 2.0]);
        let again = MeshDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(MeshDocument::from_json("{"), Err(WorkbenchError::Parse(_))));
        let bad_key = FAN.replace("\"1-3\"", "\"3-1\"");
        assert!(matches!(MeshDocument::from_json(&bad_key), Err(WorkbenchError::Parse(_))));
        let flat = FAN.replace("3.5", "4.5");
        let doc = MeshDocument::from_json(&flat).unwrap();
        let s = doc.surface().unwrap();
        assert!(matches!(doc.metric(&s), Err(WorkbenchError::InvalidMetric(_))));
        let missing = FAN.replace(", \"2-3\": 2", "");
        let doc = MeshDocument::from_json(&missing).unwrap();
        assert!(matches!(doc.metric(&doc.surface().unwrap()), Err(WorkbenchError::InvalidMesh(_))));
    }

    #[test]
    fn targets_alignment() {
        let t: Targets = [("0-3".to_string(), 1.0), ("0-1".to_string(), 2.0)].into_iter().collect();
        let keys = vec!["0-1".to_string(), "0-3".to_string()];
        assert_eq!(align_targets(&t, &keys).unwrap(), vec![2.0, 1.0]);
        assert!(align_targets(&t, &keys[..1]).is_err());
    }
}
