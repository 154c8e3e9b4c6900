//! On-disk grid format: a JSON header carrying the box, resolution and fill
//! mode, with values either inline or in a sidecar file (CSV text or raw
//! little-endian `f64`), `x` fastest.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hconvex_core::fields::{FillMode, GridBox, GridField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Csv,
    F64le,
}

impl Encoding {
    pub fn extension(self) -> &'static str {
        match self {
            Encoding::Csv => "csv",
            Encoding::F64le => "f64",
        }
    }
}

impl FromStr for Encoding {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Encoding::Csv),
            "f64le" | "bin" => Ok(Encoding::F64le),
            _ => Err(format!("unknown encoding `{s}` (expected csv or f64le)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    External { encoding: Encoding, file: String },
    Inline { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    #[serde(rename = "box")]
    pub bbox: GridBox,
    pub resolution: [usize; 3],
    pub fill_mode: FillMode,
    pub payload: Payload,
}

impl GridHeader {
    pub fn inline(g: &GridField) -> Self {
        GridHeader { bbox: g.bbox, resolution: g.resolution, fill_mode: g.fill_mode, payload: Payload::Inline { values: g.values.clone() } }
    }

    /// Resolves the payload; sidecar names are relative to `base`.
    pub fn into_grid(self, base: &Path) -> Result<GridField> {
        let n: usize = self.resolution.iter().product();
        let values = match self.payload {
            Payload::Inline { values } => values,
            Payload::External { encoding, file } => {
                let path = base.join(&file);
                match encoding {
                    Encoding::Csv => decode_csv(&fs::read_to_string(&path).map_err(CliError::io(&path))?)?,
                    Encoding::F64le => decode_f64le(&fs::read(&path).map_err(CliError::io(&path))?)?,
                }
            }
        };
        if values.len() != n {
            return Err(CliError::Format(format!("grid payload holds {} values, resolution needs {n}", values.len())));
        }
        Ok(GridField::new(self.bbox, self.resolution, values, self.fill_mode)?)
    }
}

/// One line per `x` row.
pub fn encode_csv(g: &GridField) -> String {
    let mut s = String::with_capacity(g.len() * 12);
    for row in g.values.chunks(g.resolution[0]) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn decode_csv(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| CliError::Format(format!("bad grid value `{t}`: {e}"))))
        .collect()
}

pub fn encode_f64le(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f64le(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(CliError::Format(format!("binary payload length {} is not a multiple of 8", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// `out.json` → `out.csv` / `out.f64`.
pub fn sidecar_path(header: &Path, enc: Encoding) -> PathBuf {
    header.with_extension(enc.extension())
}

/// Writes the sidecar for `header_path` and returns the header that refers to it.
pub fn write_sidecar(header_path: &Path, g: &GridField, enc: Encoding) -> Result<GridHeader> {
    let side = sidecar_path(header_path, enc);
    match enc {
        Encoding::Csv => fs::write(&side, encode_csv(g)),
        Encoding::F64le => fs::write(&side, encode_f64le(&g.values)),
    }
    .map_err(CliError::io(&side))?;
    let file = side.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(GridHeader { bbox: g.bbox, resolution: g.resolution, fill_mode: g.fill_mode, payload: Payload::External { encoding: enc, file } })
}

pub fn write_grid(path: &Path, g: &GridField, enc: Encoding) -> Result<()> {
    let header = write_sidecar(path, g, enc)?;
    let text = serde_json::to_string_pretty(&header).map_err(CliError::json("grid header"))?;
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_grid(path: &Path) -> Result<GridField> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let header: GridHeader = serde_json::from_str(&text).map_err(CliError::json(path.display().to_string()))?;
    header.into_grid(path.parent().unwrap_or(Path::new(".")))
}
