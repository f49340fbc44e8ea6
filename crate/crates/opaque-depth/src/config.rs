//! Architecture config files.
//!
//! Human-editable JSON describing one architecture per file:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "kind": "dense-transformer",
//!   "folding": true,
//!   "parameters": { "vocab": 262144, "embed_dim": 1152, ... }
//! }
//! ```
//!
//! `kind` selects the parameter schema; unknown keys are rejected at both
//! levels. `interpretable_overrides` holds glob patterns matched against
//! gate labels; matching gates become interpretable cuts after the build.
//! `inferred_parameters` names fields whose values were not published and
//! had to be reconstructed — reports footnote them.

use serde::{Deserialize, Serialize};

use crate::builders::{MlpSpec, MoeSpec, UnrollMode, UnrollSpec};
use crate::formulas::{AttentionKind, DenseTransformerSpec};
use crate::graph::CircuitGraph;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("config error: {0}")]
    Invalid(String),
}

/// Raw file shape; `parameters` is dispatched on `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfigFile {
    pub schema_version: u32,
    pub kind: ConfigKind,
    pub parameters: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpretable_overrides: Option<Vec<String>>,
    #[serde(default = "default_folding")]
    pub folding: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inferred_parameters: Vec<String>,
}

fn default_folding() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigKind {
    Mlp,
    DenseTransformer,
    MoeTransformer,
    Rnn,
    Unroll,
}

impl ConfigKind {
    pub fn name(self) -> &'static str {
        match self {
            ConfigKind::Mlp => "mlp",
            ConfigKind::DenseTransformer => "dense-transformer",
            ConfigKind::MoeTransformer => "moe-transformer",
            ConfigKind::Rnn => "rnn",
            ConfigKind::Unroll => "unroll",
        }
    }
}

/// Typed view of a parsed config.
#[derive(Debug, Clone)]
pub struct ArchConfig {
    pub kind: ConfigKind,
    pub arch: ArchParams,
    pub interpretable_overrides: Vec<String>,
    pub folding: bool,
    pub inferred_parameters: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum ArchParams {
    Mlp(MlpSpec),
    Dense(DenseTransformerSpec),
    Moe(MoeSpec),
    Rnn(RnnParams),
    Unroll(UnrollSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnParams {
    pub layers: u64,
    pub dim: u64,
    pub seq_len: u64,
}

/// Dense-transformer parameters as written in config files. The attention
/// pattern is the repeating per-layer cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseParams {
    vocab: u64,
    embed_dim: u64,
    hidden_dim: u64,
    head_dim: u64,
    num_heads: u64,
    num_layers: u64,
    sliding_window: u64,
    attention_pattern: Vec<AttentionKind>,
    max_seq_len: u64,
    #[serde(default = "default_true")]
    use_post_attn_norm: bool,
    #[serde(default = "default_true")]
    use_post_ffw_norm: bool,
    #[serde(default = "default_true")]
    use_qk_norm: bool,
}

fn default_true() -> bool {
    true
}

impl From<DenseParams> for DenseTransformerSpec {
    fn from(p: DenseParams) -> Self {
        DenseTransformerSpec {
            vocab: p.vocab,
            embed_dim: p.embed_dim,
            hidden_dim: p.hidden_dim,
            head_dim: p.head_dim,
            num_heads: p.num_heads,
            num_layers: p.num_layers,
            sliding_window: p.sliding_window,
            attention_pattern: p.attention_pattern,
            max_seq_len: p.max_seq_len,
            use_post_attn_norm: p.use_post_attn_norm,
            use_post_ffw_norm: p.use_post_ffw_norm,
            use_qk_norm: p.use_qk_norm,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnrollParams {
    base: DenseParams,
    mode: UnrollMode,
    /// Defaults per mode: token-producing compositions (autoregressive,
    /// diffusion) are interpretable; continuous feedback is not.
    #[serde(default)]
    intermediate_interpretable: Option<bool>,
}

/// Parse a config from JSON text.
pub fn parse_config(text: &str) -> Result<ArchConfig, ConfigError> {
    let file: ArchConfigFile = serde_json::from_str(text)?;
    typed_config(&file)
}

/// Load a config file from disk.
pub fn load_config(path: &std::path::Path) -> Result<ArchConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Resolve the raw file into typed parameters.
pub fn typed_config(file: &ArchConfigFile) -> Result<ArchConfig, ConfigError> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::SchemaVersion(file.schema_version));
    }
    let params = file.parameters.clone();
    let arch = match file.kind {
        ConfigKind::Mlp => ArchParams::Mlp(from_value::<MlpSpec>(params)?),
        ConfigKind::DenseTransformer => {
            ArchParams::Dense(from_value::<DenseParams>(params)?.into())
        }
        ConfigKind::MoeTransformer => ArchParams::Moe(from_value::<MoeSpec>(params)?),
        ConfigKind::Rnn => ArchParams::Rnn(from_value::<RnnParams>(params)?),
        ConfigKind::Unroll => {
            let p = from_value::<UnrollParams>(params)?;
            let default_interpretable = match p.mode {
                UnrollMode::Autoregressive { .. } | UnrollMode::Diffusion { .. } => true,
                UnrollMode::ContinuousCot { .. } | UnrollMode::BlackboxMemory { .. } => false,
            };
            ArchParams::Unroll(UnrollSpec {
                base: p.base.into(),
                mode: p.mode,
                intermediate_interpretable: p
                    .intermediate_interpretable
                    .unwrap_or(default_interpretable),
            })
        }
    };
    Ok(ArchConfig {
        kind: file.kind,
        arch,
        interpretable_overrides: file.interpretable_overrides.clone().unwrap_or_default(),
        folding: file.folding,
        inferred_parameters: file.inferred_parameters.clone(),
    })
}

fn from_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, ConfigError> {
    serde_json::from_value(value).map_err(|e| ConfigError::Invalid(format!("in `parameters`: {e}")))
}

/// Simple glob match: `*` matches any (possibly empty) substring; all other
/// characters match literally.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    fn inner(p: &[u8], t: &[u8]) -> bool {
        match p.first() {
            None => t.is_empty(),
            Some(b'*') => (0..=t.len()).any(|skip| inner(&p[1..], &t[skip..])),
            Some(&c) => t.first() == Some(&c) && inner(&p[1..], &t[1..]),
        }
    }
    inner(pattern.as_bytes(), text.as_bytes())
}

/// Mark every gate whose label matches any of the patterns as
/// interpretable.
pub fn apply_interpretable_overrides(graph: &mut CircuitGraph, patterns: &[String]) {
    if patterns.is_empty() {
        return;
    }
    let matching: Vec<crate::graph::GateId> = graph
        .gates()
        .filter(|g| {
            g.label
                .as_deref()
                .is_some_and(|label| patterns.iter().any(|p| glob_match(p, label)))
        })
        .map(|g| g.id)
        .collect();
    for id in matching {
        let _ = graph.mark_interpretable(id);
    }
}
