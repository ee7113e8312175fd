//! Instance files, reports and SVG rendering.

mod svg;

pub use svg::{render_svg, write_svg};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Polygon};
use crate::pipeline::SolveReport;

#[derive(Debug, Error)]
pub enum InterfaceError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl InterfaceError {
    pub fn category(&self) -> &'static str {
        match self {
            InterfaceError::Parse { .. } | InterfaceError::Invalid { .. } => "instance",
            InterfaceError::Io(_) => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

/// On-disk instance: `{"name", "height", "rotation_step_deg", "pieces": [{"vertices", "count"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_step_deg: Option<f64>,
    pub pieces: Vec<PieceSpec>,
}

/// A validated instance with multiplicities expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub height: f64,
    pub rotation_step_deg: Option<f64>,
    pub pieces: Vec<Polygon>,
    /// Index of the file entry each piece came from.
    pub source: Vec<usize>,
}

impl InstanceFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// Checks the schema invariants and expands multiplicities in file order.
    pub fn validate(&self) -> Result<Instance, InterfaceError> {
        let invalid = |path: String, message: String| InterfaceError::Invalid { path, message };
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(invalid("height".into(), format!("must be positive, got {}", self.height)));
        }
        if let Some(step) = self.rotation_step_deg {
            if !(step > 0.0 && step <= 360.0) {
                return Err(invalid("rotation_step_deg".into(), format!("must lie in (0, 360], got {step}")));
            }
        }
        if self.pieces.is_empty() {
            return Err(invalid("pieces".into(), "at least one piece is required".into()));
        }
        let mut pieces = Vec::new();
        let mut source = Vec::new();
        for (i, spec) in self.pieces.iter().enumerate() {
            if spec.count == 0 {
                return Err(invalid(format!("pieces[{i}].count"), "must be at least 1".into()));
            }
            let vertices: Vec<Point> = spec.vertices.iter().map(|&[x, y]| Point::new(x, y)).collect();
            let poly = Polygon::new(vertices).map_err(|e| invalid(format!("pieces[{i}].vertices"), e.to_string()))?;
            for _ in 0..spec.count {
                pieces.push(poly.clone());
                source.push(i);
            }
        }
        Ok(Instance {
            name: self.name.clone(),
            height: self.height,
            rotation_step_deg: self.rotation_step_deg,
            pieces,
            source,
        })
    }
}

/// Parses the JSON schema, reporting the JSON path of the first problem.
pub fn parse_instance_file(bytes: &[u8]) -> Result<InstanceFile, InterfaceError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| InterfaceError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn parse_instance(bytes: &[u8]) -> Result<Instance, InterfaceError> {
    parse_instance_file(bytes)?.validate()
}

pub fn load_instance(path: &Path) -> Result<Instance, InterfaceError> {
    parse_instance(&fs::read(path)?)
}

/// The instances shipped with the crate, by name.
pub fn bundled_instance(name: &str) -> Option<&'static str> {
    match name {
        "puzzle1" => Some(include_str!("../../../../instances/puzzle1.json")),
        "puzzle2" => Some(include_str!("../../../../instances/puzzle2.json")),
        "puzzle3" => Some(include_str!("../../../../instances/puzzle3.json")),
        _ => None,
    }
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ReportFile {
    schema_version: u32,
    waste_percent: f64,
    #[serde(flatten)]
    report: SolveReport,
}

pub fn report_json(report: &SolveReport) -> String {
    let file = ReportFile {
        schema_version: REPORT_SCHEMA_VERSION,
        waste_percent: 100.0 * report.waste_ratio,
        report: report.clone(),
    };
    serde_json::to_string_pretty(&file).expect("report serializes")
}

pub fn write_report(report: &SolveReport, path: &Path) -> Result<(), InterfaceError> {
    fs::write(path, report_json(report) + "\n")?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<SolveReport, InterfaceError> {
    let bytes = fs::read(path)?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    let file: ReportFile = serde_path_to_error::deserialize(de).map_err(|e| InterfaceError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if file.schema_version != REPORT_SCHEMA_VERSION {
        return Err(InterfaceError::Invalid {
            path: "schema_version".into(),
            message: format!("unsupported version {}", file.schema_version),
        });
    }
    Ok(file.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::shape_classes;

    #[test]
    fn bundled_puzzles() {
        let p1 = parse_instance(bundled_instance("puzzle1").unwrap().as_bytes()).unwrap();
        assert_eq!(p1.pieces.len(), 6);
        assert_eq!(p1.height, 750.0);
        let p2 = parse_instance(bundled_instance("puzzle2").unwrap().as_bytes()).unwrap();
        assert_eq!((p2.pieces.len(), p2.height), (7, 420.0));
        let p3 = parse_instance(bundled_instance("puzzle3").unwrap().as_bytes()).unwrap();
        assert_eq!((p3.pieces.len(), p3.height), (12, 1200.0));
        assert!(bundled_instance("shapes1").is_none());
    }

    #[test]
    fn two_vertex_piece_names_its_index() {
        let doc = br#"{"name":"x","height":10,"pieces":[
            {"vertices":[[0,0],[1,0],[0,1]]},
            {"vertices":[[0,0],[1,0]]}]}"#;
        let err = parse_instance(doc).unwrap_err();
        assert!(err.to_string().starts_with("pieces[1].vertices"), "{err}");
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let doc = br#"{"name":"x","height":10,"pieces":[{"vertices":[[0,0],[1,"a"],[0,1]]}]}"#;
        let err = parse_instance(doc).unwrap_err();
        assert!(err.to_string().starts_with("pieces[0].vertices[1]"), "{err}");
        let err = parse_instance(br#"{"name":"x","height":-1,"pieces":[]}"#).unwrap_err();
        assert!(err.to_string().starts_with("height"), "{err}");
    }

    #[test]
    fn multiplicity_expands_into_one_class() {
        let doc = br#"{"name":"x","height":10,"rotation_step_deg":90,"pieces":[
            {"vertices":[[0,0],[2,0],[0,1]],"count":3},
            {"vertices":[[0,0],[1,0],[1,1],[0,1]]}]}"#;
        let inst = parse_instance(doc).unwrap();
        assert_eq!(inst.pieces.len(), 4);
        assert_eq!(inst.source, vec![0, 0, 0, 1]);
        let (classes, _) = shape_classes(&inst.pieces);
        assert_eq!(classes[0], classes[1]);
        assert_eq!(classes[1], classes[2]);
        assert_ne!(classes[2], classes[3]);
    }

    #[test]
    fn instance_round_trip() {
        let f = parse_instance_file(bundled_instance("puzzle2").unwrap().as_bytes()).unwrap();
        assert_eq!(parse_instance_file(f.to_json().as_bytes()).unwrap(), f);
    }
}
