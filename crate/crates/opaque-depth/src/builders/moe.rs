//! Mixture-of-experts transformer builder (analysis form).
//!
//! Vanilla pre-norm blocks with full attention, where the feed-forward is
//! replaced by routed experts. Top-k routing has no published circuit, so it
//! is modeled conservatively as k chained max-reductions over the expert
//! scores; the router path and the expert path meet at the weighted mix and
//! only the deeper one counts.

use crate::graph::{CircuitGraph, GateId, GateKind, ReduceOp};

use super::dense::{emit_attention, emit_embedding, emit_ffw};
use super::{tensor_linear, tensor_rmsnorm, BuildError, MoeSpec};

/// Build the next-token forward pass of an MoE transformer at the spec's
/// sequence length.
pub fn build_moe_transformer(spec: &MoeSpec) -> Result<CircuitGraph, BuildError> {
    spec.validate()?;
    let d = spec.hidden_dim;
    let mut graph = CircuitGraph::new();
    let token = graph.add_input("input.token");
    let mut x = emit_embedding(&mut graph, spec.vocab, token, "embed");

    for layer in 0..spec.num_layers {
        let label = format!("blocks.layer{layer}");
        let attn_in = tensor_rmsnorm(&mut graph, x, d, &format!("{label}.pre_attn_norm"));
        let attn_out = emit_attention(
            &mut graph,
            d,
            spec.head_dim(),
            attn_in,
            spec.seq_len,
            false,
            true,
            &format!("{label}.attn"),
        );
        x = graph
            .add_gate(
                GateKind::analytic2("add"),
                vec![x, attn_out],
                false,
                Some(format!("{label}.attn_residual")),
            )
            .unwrap();

        let ffw_in = tensor_rmsnorm(&mut graph, x, d, &format!("{label}.pre_ffw_norm"));
        let moe_out = emit_moe_ffw(&mut graph, spec, ffw_in, &format!("{label}.moe"));
        x = graph
            .add_gate(
                GateKind::analytic2("add"),
                vec![x, moe_out],
                false,
                Some(format!("{label}.ffw_residual")),
            )
            .unwrap();
    }

    let normed = tensor_rmsnorm(&mut graph, x, d, "final_norm");
    let logits = tensor_linear(&mut graph, normed, d, "decode");
    graph.mark_output(logits)?;
    Ok(graph)
}

/// Routed expert block: router scores over the experts, k chained
/// max-reductions selecting them, k expert feed-forwards in parallel, and a
/// weighted mix of the k outputs.
///
/// With a single expert and k = 1 routing is vacuous and the block
/// degenerates to the plain feed-forward.
fn emit_moe_ffw(graph: &mut CircuitGraph, spec: &MoeSpec, normed: GateId, label: &str) -> GateId {
    let d = spec.hidden_dim;
    let e = spec.experts_per_layer;
    let k = spec.experts_per_token;

    if e == 1 && k == 1 {
        return emit_ffw(
            graph,
            d,
            spec.expert_hidden_dim,
            normed,
            &format!("{label}.expert0"),
        );
    }

    // Router path: score every expert, then peel off the top k.
    let mut selection = tensor_linear(graph, normed, d, &format!("{label}.router"));
    for step in 0..k {
        selection = super::tensor_reduce(
            graph,
            ReduceOp::Max,
            e,
            selection,
            format!("{label}.router.top{step}"),
        );
    }

    // Expert path: k experts in parallel off the same normed wire.
    let expert_outs: Vec<GateId> = (0..k)
        .map(|i| {
            emit_ffw(
                graph,
                d,
                spec.expert_hidden_dim,
                normed,
                &format!("{label}.expert{i}"),
            )
        })
        .collect();

    // Weighted mix: per-expert product with the routing weights, then a
    // balanced sum over the k contributions.
    let weighted: Vec<GateId> = expert_outs
        .iter()
        .enumerate()
        .map(|(i, &out)| {
            graph
                .add_gate(
                    GateKind::analytic2("mul"),
                    vec![out, selection],
                    false,
                    Some(format!("{label}.mix.mul{i}")),
                )
                .unwrap()
        })
        .collect();
    if k >= 2 {
        graph
            .add_gate(
                GateKind::reduce(ReduceOp::Add, k),
                weighted,
                false,
                Some(format!("{label}.mix.sum")),
            )
            .unwrap()
    } else {
        graph
            .add_gate(
                GateKind::Wiring,
                weighted,
                false,
                Some(format!("{label}.mix.sum")),
            )
            .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::opaque_serial_depth;
    use crate::formulas::AttentionKind;
    use crate::math::ceil_log2;

    fn tiny_moe() -> MoeSpec {
        MoeSpec {
            vocab: 64,
            hidden_dim: 16,
            num_heads: 2,
            num_layers: 2,
            experts_per_layer: 4,
            experts_per_token: 2,
            expert_hidden_dim: 32,
            seq_len: 8,
        }
    }

    #[test]
    fn moe_graph_validates_and_measures() {
        let graph = build_moe_transformer(&tiny_moe()).unwrap();
        assert!(graph.validate().is_empty());
        let depth = opaque_serial_depth(&graph).unwrap().opaque_serial_depth;
        assert!(depth > 0);
    }

    #[test]
    fn degenerate_single_expert_equals_dense() {
        let mut spec = tiny_moe();
        spec.experts_per_layer = 1;
        spec.experts_per_token = 1;
        let moe = build_moe_transformer(&spec).unwrap();

        let dense = crate::formulas::DenseTransformerSpec {
            vocab: spec.vocab,
            embed_dim: spec.hidden_dim,
            hidden_dim: spec.expert_hidden_dim,
            head_dim: spec.head_dim(),
            num_heads: spec.num_heads,
            num_layers: spec.num_layers,
            sliding_window: spec.seq_len,
            attention_pattern: vec![AttentionKind::Global],
            max_seq_len: spec.seq_len,
            use_post_attn_norm: false,
            use_post_ffw_norm: false,
            use_qk_norm: false,
        };
        let dense_graph =
            crate::builders::build_dense_transformer(&dense, spec.seq_len, true).unwrap();
        assert_eq!(
            opaque_serial_depth(&moe).unwrap().opaque_serial_depth,
            opaque_serial_depth(&dense_graph)
                .unwrap()
                .opaque_serial_depth
        );
    }

    #[test]
    fn weighted_mix_contributes_one_plus_log_k() {
        // Depth difference between k experts and the k = 1 wiring mix is
        // exactly the balanced sum over k, provided the expert path
        // dominates the router path in both.
        let mut spec = tiny_moe();
        spec.experts_per_layer = 8;
        spec.experts_per_token = 8;
        spec.expert_hidden_dim = 1 << 21; // make the expert path dominate
        let deep = build_moe_transformer(&spec).unwrap();
        spec.experts_per_token = 1;
        let shallow = build_moe_transformer(&spec).unwrap();
        let d_deep = opaque_serial_depth(&deep).unwrap().opaque_serial_depth;
        let d_shallow = opaque_serial_depth(&shallow).unwrap().opaque_serial_depth;
        assert_eq!(d_deep - d_shallow, spec.num_layers * ceil_log2(8));
    }

    #[test]
    fn weighted_mix_subgraph_costs_four_for_eight_experts() {
        let mut spec = tiny_moe();
        spec.experts_per_token = 8;
        spec.experts_per_layer = 8;
        let graph = build_moe_transformer(&spec).unwrap();
        let mix_sum = graph
            .gates()
            .find(|g| g.label.as_deref() == Some("blocks.layer0.moe.mix.sum"))
            .unwrap();
        let product = graph.gate(mix_sum.inputs[0]).unwrap();
        assert_eq!(
            mix_sum.kind.immediate_depth() + product.kind.immediate_depth(),
            1 + ceil_log2(8)
        );
    }

    #[test]
    fn invalid_routing_is_rejected() {
        let mut spec = tiny_moe();
        spec.experts_per_token = 9;
        spec.experts_per_layer = 4;
        assert!(build_moe_transformer(&spec).is_err());
    }
}
