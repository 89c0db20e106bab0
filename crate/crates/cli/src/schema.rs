//! Zipper JSON files.
//!
//! ```json
//! {"dimension": 2,
//!  "maps": [{"matrix": [a, b, c, d], "translation": [x, y]}, ...],
//!  "vertices": [[x, y], ...],
//!  "signature": [0, 1, ...],
//!  "weights": [...]}
//! ```
//!
//! A preset can be given instead: `{"preset": "derham", "omega": 0.1}`.

use serde::{Deserialize, Serialize};
use zipper_core::{derham, AffineMap, Matrix, Zipper};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub matrix: Vec<f64>,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZipperFile {
    pub dimension: usize,
    pub maps: Vec<MapFile>,
    pub vertices: Vec<Vec<f64>>,
    pub signature: Vec<u8>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetFile {
    pub preset: String,
    #[serde(default)]
    pub omega: Option<f64>,
}

fn shape(path: &str, msg: String) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

impl ZipperFile {
    pub fn from_zipper(z: &Zipper) -> ZipperFile {
        ZipperFile {
            dimension: z.dim(),
            maps: z
                .maps()
                .iter()
                .map(|m| MapFile {
                    matrix: m.matrix().as_slice().to_vec(),
                    translation: m.translation().to_vec(),
                })
                .collect(),
            vertices: z.vertices().to_vec(),
            signature: z.signature().iter().map(|&b| u8::from(b)).collect(),
            weights: z.weights().to_vec(),
        }
    }

    /// Checks every length against `dimension` and builds the zipper. Errors
    /// name the offending JSON path.
    pub fn into_zipper(self) -> Result<Zipper, CliError> {
        let d = self.dimension;
        if d == 0 {
            return Err(shape("dimension", "must be at least 1".into()));
        }
        if self.maps.is_empty() {
            return Err(shape("maps", "at least one map is required".into()));
        }
        let n = self.maps.len();
        let mut maps = Vec::with_capacity(n);
        for (i, m) in self.maps.into_iter().enumerate() {
            if m.matrix.len() != d * d {
                return Err(shape(
                    &format!("maps[{i}].matrix"),
                    format!("expected {} entries (row-major {d}x{d}), got {}", d * d, m.matrix.len()),
                ));
            }
            if m.translation.len() != d {
                return Err(shape(
                    &format!("maps[{i}].translation"),
                    format!("expected {d} entries, got {}", m.translation.len()),
                ));
            }
            if let Some(k) = m.matrix.iter().chain(&m.translation).position(|x| !x.is_finite()) {
                return Err(shape(&format!("maps[{i}]"), format!("entry {k} is not finite")));
            }
            let a = Matrix::new(d, m.matrix).map_err(|e| shape(&format!("maps[{i}].matrix"), e.to_string()))?;
            maps.push(AffineMap::new(a, m.translation).map_err(|e| shape(&format!("maps[{i}]"), e.to_string()))?);
        }
        if self.vertices.len() != n + 1 {
            return Err(shape(
                "vertices",
                format!("{n} maps need {} vertices, got {}", n + 1, self.vertices.len()),
            ));
        }
        for (k, v) in self.vertices.iter().enumerate() {
            if v.len() != d {
                return Err(shape(&format!("vertices[{k}]"), format!("expected {d} entries, got {}", v.len())));
            }
        }
        if self.signature.len() != n {
            return Err(shape("signature", format!("expected {n} entries, got {}", self.signature.len())));
        }
        let mut signature = Vec::with_capacity(n);
        for (k, s) in self.signature.iter().enumerate() {
            match s {
                0 => signature.push(false),
                1 => signature.push(true),
                _ => return Err(shape(&format!("signature[{k}]"), format!("must be 0 or 1, got {s}"))),
            }
        }
        if self.weights.len() != n {
            return Err(shape("weights", format!("expected {n} entries, got {}", self.weights.len())));
        }
        Zipper::new(maps, self.vertices, signature, self.weights).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// A preset resolved to its zipper.
pub fn preset(name: &str, omega: Option<f64>) -> Result<Zipper, CliError> {
    match name {
        "derham" => {
            let w = omega.ok_or_else(|| CliError::Config("preset derham needs --omega".into()))?;
            derham::build(w).map_err(|e| CliError::Config(format!("omega: {e}")))
        }
        other => Err(CliError::Config(format!("unknown preset {other:?}; available: derham"))),
    }
}

/// What a zipper file resolved to.
#[derive(Debug, Clone)]
pub enum Source {
    File(ZipperFile),
    Preset(PresetFile),
}

/// Parses a zipper or preset document.
pub fn parse(text: &str) -> Result<Source, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    if value.get("preset").is_some() {
        let p: PresetFile = serde_path_to_error::deserialize(value)
            .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
        return Ok(Source::Preset(p));
    }
    let z: ZipperFile = serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
    Ok(Source::File(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"dimension":2,"maps":[{"matrix":[0.5,0,0,0.5],"translation":[0,0]},
        {"matrix":[0.5,0,0,0.5],"translation":[0.5,0]}],"vertices":[[0,0],[0.5,0],[1,0]],
        "signature":[0,0],"weights":[0.5,0.5]}"#;

    fn err(text: &str) -> String {
        match parse(text).and_then(|s| match s {
            Source::File(f) => f.into_zipper(),
            Source::Preset(p) => preset(&p.preset, p.omega),
        }) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let Source::File(f) = parse(LINE).unwrap() else { panic!() };
        let z = f.clone().into_zipper().unwrap();
        assert_eq!(ZipperFile::from_zipper(&z), f);
    }

    #[test]
    fn errors_cite_the_path() {
        assert!(err(&LINE.replace("[0.5,0,0,0.5],\"translation\":[0.5,0]", "[0.5,0,0],\"translation\":[0.5,0]"))
            .starts_with("maps[1].matrix"));
        assert!(err(&LINE.replace("\"translation\":[0,0]", "\"translation\":[0,\"x\"]")).starts_with("maps[0].translation[1]"));
        assert!(err(&LINE.replace("[1,0]]", "[1,0,3]]")).starts_with("vertices[2]"));
        assert!(err(&LINE.replace("\"signature\":[0,0]", "\"signature\":[0,2]")).starts_with("signature[1]"));
        assert!(err(&LINE.replace("\"weights\"", "\"weight\"")).contains("weight"));
        assert!(err(r#"{"preset":"derham"}"#).contains("omega"));
        assert!(err(r#"{"preset":"koch","omega":0.1}"#).contains("unknown preset"));
    }
}
