//! Conversion between on-disk input formats and [`Graph`].

mod obj;
mod pgm;
mod text;
mod xyz;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Family, Graph, GraphError};

pub use obj::{graph_to_mesh, mesh_to_graph, parse_obj, ObjImport};
pub use pgm::{graph_to_image, graph_to_image_unclamped, image_to_graph};
pub use text::{graph_to_text, text_to_graph, token_code};
pub use xyz::{graph_to_pointcloud, pointcloud_to_graph, DEFAULT_KNN_K};

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported feature: {message}")]
    Unsupported { line: usize, message: String },
    #[error("input is not valid UTF-8")]
    Utf8,
    #[error("value {value} at vertex {vertex} is outside [0, 255]")]
    OutOfRange { vertex: usize, value: f64 },
    #[error("graph is inconsistent: {0}")]
    Internal(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T, E = ConvertError> = std::result::Result<T, E>;

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> ConvertError {
    ConvertError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatKind {
    #[serde(rename = "obj")]
    ObjMesh,
    #[serde(rename = "pgm")]
    PgmImage,
    #[serde(rename = "xyz")]
    XyzPointCloud,
    #[serde(rename = "txt")]
    PlainText,
}

impl FormatKind {
    pub fn family(self) -> Family {
        match self {
            FormatKind::ObjMesh => Family::TriangleMesh,
            FormatKind::PgmImage => Family::Grid,
            FormatKind::XyzPointCloud => Family::Relational,
            FormatKind::PlainText => Family::Sequence,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            FormatKind::ObjMesh => "obj",
            FormatKind::PgmImage => "pgm",
            FormatKind::XyzPointCloud => "xyz",
            FormatKind::PlainText => "txt",
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for FormatKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(FormatKind::ObjMesh),
            "pgm" => Ok(FormatKind::PgmImage),
            "xyz" => Ok(FormatKind::XyzPointCloud),
            "txt" | "text" => Ok(FormatKind::PlainText),
            other => Err(format!("unknown format `{other}` (expected obj, pgm, xyz or txt)")),
        }
    }
}

/// A format plus its string options (`knn_k` for point clouds).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatDescriptor {
    pub kind: FormatKind,
    #[serde(default)]
    pub options: BTreeMap<String, String>,
}

impl FormatDescriptor {
    pub fn new(kind: FormatKind) -> Self {
        FormatDescriptor { kind, options: BTreeMap::new() }
    }

    pub fn with_option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn family(&self) -> Family {
        self.kind.family()
    }

    fn knn_k(&self) -> Result<usize> {
        match self.options.get("knn_k") {
            None => Ok(DEFAULT_KNN_K),
            Some(raw) => raw
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| parse_err(0, format!("knn_k must be a positive integer, got `{raw}`"))),
        }
    }

    pub fn read(&self, bytes: &[u8]) -> Result<Graph> {
        match self.kind {
            FormatKind::ObjMesh => mesh_to_graph(bytes),
            FormatKind::PgmImage => image_to_graph(bytes),
            FormatKind::XyzPointCloud => pointcloud_to_graph(bytes, self.knn_k()?),
            FormatKind::PlainText => text_to_graph(bytes),
        }
    }

    pub fn write(&self, g: &Graph) -> Result<Vec<u8>> {
        match self.kind {
            FormatKind::ObjMesh => graph_to_mesh(g),
            FormatKind::PgmImage => graph_to_image(g),
            FormatKind::XyzPointCloud => graph_to_pointcloud(g),
            FormatKind::PlainText => graph_to_text(g),
        }
    }
}

pub(crate) fn utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|_| ConvertError::Utf8)
}

pub(crate) fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("malformed number `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}
