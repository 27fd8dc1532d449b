//! Model persistence.
//!
//! A bundle is a JSON document:
//!
//! ```text
//! { "format": "dfs-model", "version": 1,
//!   "metadata": { feature/group/class names, group assignment, task,
//!                 standardization, shared_backbone, training config },
//!   "networks": [ { "role", "widths", "dropout", "params" } ],
//!   "checksum": "sha256:<hex>" }
//! ```
//!
//! `params` is base-64 of little-endian `f32` values, layer by layer, each layer
//! as its `[out, in]` weight matrix in row-major order followed by its bias.
//! The checksum is SHA-256 over the compact JSON of the document without the
//! `checksum` field. Weights are rounded to `f32` when a bundle is built, so a
//! loaded bundle predicts exactly like the one that was saved.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use dfs_core::amortized::{DfsModel, GroupMatrix, Task, TrainConfig};
use dfs_core::datasets::Standardization;
use dfs_core::numerics::{Activation, Dense, NetworkParams};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT: &str = "dfs-model";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported bundle format '{format}' version {version}")]
    Version { format: String, version: u32 },
    #[error("checksum mismatch: file says {stored}, contents hash to {computed}")]
    Checksum { stored: String, computed: String },
    #[error("inconsistent bundle: {0}")]
    Invalid(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] dfs_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub feature_count: usize,
    pub group_count: usize,
    pub group_assignment: Vec<usize>,
    pub feature_names: Vec<String>,
    pub group_names: Vec<String>,
    pub task: Task,
    /// Empty for regression.
    pub class_names: Vec<String>,
    pub standardization: Option<Standardization>,
    pub shared_backbone: bool,
    pub config: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkRecord {
    role: String,
    widths: Vec<usize>,
    dropout: f64,
    params: String,
}

#[derive(Serialize, Deserialize)]
struct Body {
    format: String,
    version: u32,
    metadata: Metadata,
    networks: Vec<NetworkRecord>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    #[serde(flatten)]
    body: Body,
    checksum: String,
}

/// A model with everything needed to serve it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    model: DfsModel<f64>,
    metadata: Metadata,
}

fn round_to_f32(model: &DfsModel<f64>) -> DfsModel<f64> {
    model.cast::<f32>().cast::<f64>()
}

impl ModelBundle {
    pub fn new(
        model: &DfsModel<f64>,
        feature_names: Vec<String>,
        group_names: Vec<String>,
        class_names: Vec<String>,
        config: Option<TrainConfig>,
    ) -> Result<Self, BundleError> {
        let groups = model.groups();
        let metadata = Metadata {
            feature_count: groups.feature_count(),
            group_count: groups.group_count(),
            group_assignment: groups.assignment().to_vec(),
            feature_names,
            group_names,
            task: model.task(),
            class_names,
            standardization: model.standardization().cloned(),
            shared_backbone: model.is_shared(),
            config,
        };
        check_metadata(&metadata)?;
        Ok(ModelBundle { model: round_to_f32(model), metadata })
    }

    pub fn model(&self) -> &DfsModel<f64> {
        &self.model
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    /// Budget recorded in the training config, if any.
    pub fn default_budget(&self) -> Option<usize> {
        self.metadata.config.as_ref().map(|c| c.budget)
    }

    fn body(&self) -> Body {
        let roles: &[&str] = if self.model.is_shared() { &["shared"] } else { &["policy", "predictor"] };
        let networks = self
            .model
            .networks()
            .iter()
            .zip(roles)
            .map(|(net, role)| NetworkRecord {
                role: role.to_string(),
                widths: net.widths(),
                dropout: net.dropout_rate(),
                params: STANDARD.encode(encode_params(net)),
            })
            .collect();
        Body { format: FORMAT.into(), version: VERSION, metadata: self.metadata.clone(), networks }
    }

    /// `sha256:<hex>` of the document contents.
    pub fn checksum(&self) -> String {
        digest(&self.body())
    }

    pub fn to_json(&self) -> String {
        let body = self.body();
        let checksum = digest(&body);
        serde_json::to_string_pretty(&Document { body, checksum }).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        let doc: Document = serde_json::from_str(text)?;
        let Document { body, checksum } = doc;
        if body.format != FORMAT || body.version != VERSION {
            return Err(BundleError::Version { format: body.format, version: body.version });
        }
        let computed = digest(&body);
        if computed != checksum {
            return Err(BundleError::Checksum { stored: checksum, computed });
        }
        let meta = body.metadata;
        check_metadata(&meta)?;
        let expected_roles: &[&str] = if meta.shared_backbone { &["shared"] } else { &["policy", "predictor"] };
        let roles: Vec<&str> = body.networks.iter().map(|n| n.role.as_str()).collect();
        if roles != expected_roles {
            return Err(BundleError::Invalid(format!("network roles {roles:?}, expected {expected_roles:?}")));
        }
        let nets = body.networks.iter().map(decode_network).collect::<Result<Vec<_>, _>>()?;
        let groups = GroupMatrix::from_assignment(meta.group_assignment.clone())?;
        let model = DfsModel::from_networks(nets, groups, meta.task, meta.standardization.clone())?;
        Ok(ModelBundle { model, metadata: meta })
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        fs::write(path, self.to_json()).map_err(|source| BundleError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        let text =
            fs::read_to_string(path).map_err(|source| BundleError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}

fn digest(body: &Body) -> String {
    let bytes = serde_json::to_vec(body).expect("bundle serializes");
    let hash = Sha256::digest(&bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn check_metadata(m: &Metadata) -> Result<(), BundleError> {
    let bad = |msg: String| Err(BundleError::Invalid(msg));
    if m.group_assignment.len() != m.feature_count {
        return bad(format!("{} group assignments for {} features", m.group_assignment.len(), m.feature_count));
    }
    if m.feature_names.len() != m.feature_count {
        return bad(format!("{} feature names for {} features", m.feature_names.len(), m.feature_count));
    }
    if m.group_names.len() != m.group_count {
        return bad(format!("{} group names for {} groups", m.group_names.len(), m.group_count));
    }
    let classes = match m.task {
        Task::Classification { classes } => classes,
        Task::Regression => 0,
    };
    if m.class_names.len() != classes {
        return bad(format!("{} class names for {classes} classes", m.class_names.len()));
    }
    if let Some(s) = &m.standardization {
        if s.mean.len() != m.feature_count || s.scale.len() != m.feature_count {
            return bad("standardization record does not match the feature count".into());
        }
    }
    Ok(())
}

fn encode_params(net: &NetworkParams<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(net.parameter_count() * 4);
    for layer in net.layers() {
        for &w in layer.weight.iter().chain(layer.bias.iter()) {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
    }
    out
}

fn decode_network(rec: &NetworkRecord) -> Result<NetworkParams<f64>, BundleError> {
    let bytes = STANDARD.decode(&rec.params).map_err(|e| BundleError::Invalid(format!("{} params: {e}", rec.role)))?;
    if rec.widths.len() < 2 {
        return Err(BundleError::Invalid(format!("{} network has widths {:?}", rec.role, rec.widths)));
    }
    let expected: usize = rec.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    if bytes.len() != expected * 4 {
        return Err(BundleError::Invalid(format!(
            "{} network needs {expected} parameters, blob holds {} bytes",
            rec.role,
            bytes.len()
        )));
    }
    let mut values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
    let mut layers = Vec::with_capacity(rec.widths.len() - 1);
    for w in rec.widths.windows(2) {
        let (inp, out) = (w[0], w[1]);
        let weight = Array2::from_shape_vec((out, inp), values.by_ref().take(out * inp).collect())
            .map_err(|e| BundleError::Invalid(e.to_string()))?;
        let bias = Array1::from_iter(values.by_ref().take(out));
        layers.push(Dense { weight, bias });
    }
    Ok(NetworkParams::new(layers, Activation::Relu, rec.dropout)?)
}
