use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ActionGrid, ConeParams, DiscountSpec, GridKind, Kernel, ModelSpec, RewardSpec};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// On-disk model layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: usize,
    pub action: ActionFile,
    pub discount: DiscountSpec,
    pub reward: RewardSpec,
    pub kernel: KernelFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionFile {
    pub bounds: Vec<(f64, f64)>,
    pub per_dim: usize,
    #[serde(default)]
    pub include_vertices: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    #[serde(rename = "type")]
    pub kind: KernelKind,
    pub data: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Transition,
    Generator,
}

impl ModelFile {
    pub fn from_model(m: &ModelSpec) -> Self {
        let (kind, mats) = match &m.kernel {
            Kernel::Transition(x) => (KernelKind::Transition, x),
            Kernel::Generator(x) => (KernelKind::Generator, x),
        };
        ModelFile {
            states: m.states,
            action: ActionFile {
                bounds: m.grid.bounds().to_vec(),
                per_dim: m.grid.per_dim(),
                include_vertices: m.grid.kind() == GridKind::Vertices,
            },
            discount: m.discount.clone(),
            reward: m.reward.clone(),
            kernel: KernelFile {
                kind,
                data: mats.iter().map(Matrix::to_rows).collect(),
            },
            cone: m.cone,
            lipschitz: m.lipschitz,
        }
    }

    pub fn into_model(self) -> Result<ModelSpec> {
        let kind = if self.action.include_vertices {
            GridKind::Vertices
        } else {
            GridKind::Midpoint
        };
        let grid = ActionGrid::new(&self.action.bounds, self.action.per_dim, kind)
            .map_err(|e| Error::InvalidModel(format!("/action: {e}")))?;
        let mut mats = Vec::with_capacity(self.kernel.data.len());
        for (k, rows) in self.kernel.data.into_iter().enumerate() {
            if rows.len() != self.states || rows.iter().any(|r| r.len() != self.states) {
                return Err(Error::InvalidModel(format!(
                    "/kernel/data/{k}: expected a {0}x{0} matrix",
                    self.states
                )));
            }
            mats.push(Matrix::from_rows(&rows));
        }
        if mats.len() != grid.len() {
            return Err(Error::InvalidModel(format!(
                "/kernel/data: {} matrices for {} grid nodes",
                mats.len(),
                grid.len()
            )));
        }
        let kernel = match self.kernel.kind {
            KernelKind::Transition => Kernel::Transition(mats),
            KernelKind::Generator => Kernel::Generator(mats),
        };
        Ok(ModelSpec {
            states: self.states,
            grid,
            discount: self.discount,
            reward: self.reward,
            kernel,
            cone: self.cone,
            lipschitz: self.lipschitz,
        })
    }
}

/// Parses a model; errors name the offending location as a JSON pointer.
pub fn model_from_json(value: &Value) -> Result<ModelSpec> {
    let value = normalize_discount(value.clone());
    let file: ModelFile = serde_path_to_error::deserialize(&value).map_err(|e| {
        let pointer = json_pointer(e.path(), &e.inner().to_string());
        Error::InvalidModel(format!("{pointer}: {}", e.inner()))
    })?;
    file.into_model()
}

pub fn model_to_json(model: &ModelSpec) -> Value {
    serde_json::to_value(ModelFile::from_model(model)).expect("model serializes")
}

pub fn load_model(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidModel(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
    model_from_json(&value)
}

pub fn save_model(model: &ModelSpec, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&model_to_json(model)).expect("model serializes");
    std::fs::write(path, text + "\n")
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

/// Accepts `{"family": "exponential", "factor": β}` as shorthand for the rate `−ln β`.
fn normalize_discount(mut value: Value) -> Value {
    if let Some(d) = value.get_mut("discount").and_then(Value::as_object_mut) {
        let exponential = d.get("family").and_then(Value::as_str) == Some("exponential");
        if exponential && !d.contains_key("rate") {
            if let Some(beta) = d.get("factor").and_then(Value::as_f64) {
                d.remove("factor");
                d.insert("rate".into(), Value::from(-beta.ln()));
            }
        }
    }
    value
}

/// Converts a serde path into a JSON pointer, descending into a missing field.
pub fn json_pointer(path: &serde_path_to_error::Path, message: &str) -> String {
    use serde_path_to_error::Segment;
    let mut p = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => p.push_str(&format!("/{index}")),
            Segment::Map { key } => p.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => p.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => {}
        }
    }
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            p.push('/');
            p.push_str(&escape(field));
        }
    }
    if p.is_empty() {
        p.push('/');
    }
    p
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}
