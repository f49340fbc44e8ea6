//! Parameter counting from architecture specs.
//!
//! Counts the scalars the builders' constant gates stand for. Depth never
//! depends on these numbers; they exist so mixture-of-experts comparisons
//! can be anchored to a parameter budget (total vs active).

use crate::formulas::DenseTransformerSpec;

use super::{BuildError, MoeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub total: u64,
    /// Parameters touched by one token: total minus the unselected experts.
    pub active: u64,
}

/// Dense transformer: every parameter is active. Embedding and decode
/// matrices are tied (counted once), matching the Gemma family.
pub fn parameter_count_dense(spec: &DenseTransformerSpec) -> Result<ParamCount, BuildError> {
    spec.validate()?;
    let d = spec.embed_dim;
    let attn_width = spec.num_heads * spec.head_dim;
    let mut per_layer = 0u64;
    per_layer += 4 * d * attn_width; // q, k, v, o projections
    per_layer += 3 * d * spec.hidden_dim; // gate, up, down
    per_layer += 2 * d; // pre-attention and pre-ffw norms
    if spec.use_post_attn_norm {
        per_layer += d;
    }
    if spec.use_post_ffw_norm {
        per_layer += d;
    }
    if spec.use_qk_norm {
        per_layer += 2 * spec.head_dim;
    }
    let total = spec.vocab * d + spec.num_layers * per_layer + d;
    Ok(ParamCount {
        total,
        active: total,
    })
}

/// MoE transformer: untied embedding and unembedding, four full-width
/// attention projections, a router scoring every expert, and gated
/// three-matrix experts. Active drops the `E - k` unselected experts per
/// layer; the router itself always runs.
pub fn parameter_count_moe(spec: &MoeSpec) -> Result<ParamCount, BuildError> {
    spec.validate()?;
    let d = spec.hidden_dim;
    let expert = 3 * d * spec.expert_hidden_dim;
    let shared_per_layer = 4 * d * d       // attention projections
        + spec.experts_per_layer * d       // router
        + 2 * d; // norms
    let embeddings = 2 * spec.vocab * d;
    let total =
        embeddings + spec.num_layers * (shared_per_layer + spec.experts_per_layer * expert) + d;
    let active =
        embeddings + spec.num_layers * (shared_per_layer + spec.experts_per_token * expert) + d;
    Ok(ParamCount { total, active })
}
