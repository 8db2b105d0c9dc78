//! DNN workload descriptions.
//!
//! Every layer is normalized to the six-dimensional convolution form
//! `O[k][y][x] += W[k][c][r][s] * I[c][y*stride + r][x*stride + s]`, where
//! `Y`/`X` are output sizes and input sizes are derived (no padding).
//! GEMMs lower to `K = m, C = k, Y = n` with the remaining dims at 1.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Dim;

/// One layer in convolution form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerShape {
    pub name: String,
    pub k: u64,
    pub c: u64,
    pub y: u64,
    pub x: u64,
    pub r: u64,
    pub s: u64,
    pub stride: u64,
}

impl LayerShape {
    pub fn conv(name: impl Into<String>, dims: [u64; 6], stride: u64) -> Self {
        let [k, c, y, x, r, s] = dims;
        Self {
            name: name.into(),
            k,
            c,
            y,
            x,
            r,
            s,
            stride,
        }
    }

    /// Size of the loop dimension `dim`.
    pub fn dim(&self, dim: Dim) -> u64 {
        match dim {
            Dim::K => self.k,
            Dim::C => self.c,
            Dim::Y => self.y,
            Dim::X => self.x,
            Dim::R => self.r,
            Dim::S => self.s,
        }
    }

    /// All six sizes in canonical `K, C, Y, X, R, S` order.
    pub fn dims(&self) -> [u64; 6] {
        [self.k, self.c, self.y, self.x, self.r, self.s]
    }

    pub fn input_rows(&self) -> u64 {
        (self.y - 1) * self.stride + self.r
    }

    pub fn input_cols(&self) -> u64 {
        (self.x - 1) * self.stride + self.s
    }

    pub fn weight_words(&self) -> u64 {
        self.k * self.c * self.r * self.s
    }

    pub fn input_words(&self) -> u64 {
        self.c * self.input_rows() * self.input_cols()
    }

    pub fn output_words(&self) -> u64 {
        self.k * self.y * self.x
    }
}

/// A layer field that failed validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub value: u64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} must be >= 1 (got {})", self.field, self.value)
    }
}

/// Checks every field of `layer`; an empty list means the layer is legal.
pub fn validate_layer(layer: &LayerShape) -> Vec<Violation> {
    [
        ("K", layer.k),
        ("C", layer.c),
        ("Y", layer.y),
        ("X", layer.x),
        ("R", layer.r),
        ("S", layer.s),
        ("stride", layer.stride),
    ]
    .into_iter()
    .filter(|&(_, v)| v == 0)
    .map(|(field, value)| Violation { field, value })
    .collect()
}

/// Lowers an `m x k` by `k x n` matrix product to convolution form.
pub fn gemm_to_conv(name: impl Into<String>, m: u64, n: u64, k: u64) -> LayerShape {
    LayerShape::conv(name, [m, k, n, 1, 1, 1], 1)
}

pub fn total_macs(layer: &LayerShape) -> u64 {
    layer.dims().iter().product()
}

/// A named, ordered set of layers sharing one accelerator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Model {
    pub name: String,
    pub layers: Vec<LayerShape>,
}

impl Model {
    pub fn new(name: impl Into<String>, layers: Vec<LayerShape>) -> Result<Self> {
        let model = Self {
            name: name.into(),
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Validation(format!(
                "model '{}' has no layers",
                self.name
            )));
        }
        let mut seen = HashSet::new();
        for layer in &self.layers {
            if !seen.insert(layer.name.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate layer name '{}'",
                    layer.name
                )));
            }
            if let Some(v) = validate_layer(layer).first() {
                return Err(Error::Validation(format!("layer '{}': {}", layer.name, v)));
            }
        }
        Ok(())
    }

    pub fn total_macs(&self) -> u64 {
        self.layers.iter().map(total_macs).sum()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    layers: Vec<LayerEntry>,
}

// Flat on purpose: serde cannot combine an internal tag with
// `deny_unknown_fields`, so the per-type field sets are checked by hand.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerEntry {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(rename = "K")]
    k: Option<u64>,
    #[serde(rename = "C")]
    c: Option<u64>,
    #[serde(rename = "Y")]
    y: Option<u64>,
    #[serde(rename = "X")]
    x: Option<u64>,
    #[serde(rename = "R")]
    r: Option<u64>,
    #[serde(rename = "S")]
    s: Option<u64>,
    stride: Option<u64>,
    #[serde(rename = "M")]
    m: Option<u64>,
    #[serde(rename = "N")]
    n: Option<u64>,
}

impl LayerEntry {
    fn into_layer(self) -> Result<LayerShape> {
        let name = self.name;
        let need = |field: &str, v: Option<u64>| {
            v.ok_or_else(|| Error::Parse(format!("layer '{name}': missing field '{field}'")))
        };
        let forbid = |field: &str, v: Option<u64>| match v {
            Some(_) => Err(Error::Parse(format!(
                "layer '{name}': field '{field}' is not allowed for type '{}'",
                self.kind
            ))),
            None => Ok(()),
        };
        match self.kind.as_str() {
            "conv" => {
                forbid("M", self.m)?;
                forbid("N", self.n)?;
                let dims = [
                    need("K", self.k)?,
                    need("C", self.c)?,
                    need("Y", self.y)?,
                    need("X", self.x)?,
                    need("R", self.r)?,
                    need("S", self.s)?,
                ];
                let stride = need("stride", self.stride)?;
                Ok(LayerShape::conv(name.clone(), dims, stride))
            }
            "gemm" => {
                for (field, v) in [
                    ("C", self.c),
                    ("Y", self.y),
                    ("X", self.x),
                    ("R", self.r),
                    ("S", self.s),
                    ("stride", self.stride),
                ] {
                    forbid(field, v)?;
                }
                let (m, n, k) = (need("M", self.m)?, need("N", self.n)?, need("K", self.k)?);
                Ok(gemm_to_conv(name.clone(), m, n, k))
            }
            other => Err(Error::Parse(format!(
                "layer '{name}': unknown type '{other}' (expected conv or gemm)"
            ))),
        }
    }
}

/// Parses a model description from JSON text.
pub fn parse_model(text: &str) -> Result<Model> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))?;
    let layers = file
        .layers
        .into_iter()
        .map(LayerEntry::into_layer)
        .collect::<Result<Vec<_>>>()?;
    Model::new(file.name, layers)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| e.context(&path.display().to_string()))
}

const BUNDLED: &[(&str, &str)] = &[
    ("w1", include_str!("../data/models/w1_conv.json")),
    ("w2", include_str!("../data/models/w2_gemm.json")),
    ("w3", include_str!("../data/models/w3_mixed.json")),
];

/// Names of the bundled desk-scale workloads.
pub fn bundled_model_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(name, _)| *name)
}

pub fn bundled_model(name: &str) -> Option<Model> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_model(text).expect("bundled model files are valid"))
}

/// Resolves a bundled workload name first, then a file path.
pub fn resolve_model(spec: &str) -> Result<Model> {
    match bundled_model(spec) {
        Some(model) => Ok(model),
        None if !Path::new(spec).exists() => Err(Error::Io(format!(
            "model '{spec}' is neither a bundled workload ({}) nor an existing file",
            bundled_model_names().collect::<Vec<_>>().join(", ")
        ))),
        None => load_model(spec),
    }
}
