//! Analysis-form dense transformer builder.
//!
//! Emits the forward pass that produces the next token at the final
//! position — the longest opaque path in an autoregressive model — with one
//! gate per tensor operation. Key and value projections branch off the same
//! residual wire; their paths are strictly shorter than the query path, so
//! the critical path matches the layer calculus stage by stage.

use crate::formulas::DenseTransformerSpec;
use crate::graph::{CircuitGraph, GateId, GateKind, ReduceOp};

use super::{tensor_linear, tensor_reduce, tensor_rmsnorm, BuildError};

/// Build the single-next-token forward pass at sequence length `t`.
///
/// With `folded` set (the default everywhere), the circuit is the
/// depth-minimal one the by-hand calculus describes. Without it, the
/// emission keeps the redundant numerically-stable softmax (max-subtraction
/// before exponentiation), the kind of pattern a framework trace contains
/// and an optimizing rewrite removes; the resulting bound is strictly
/// larger at every sequence length.
pub fn build_dense_transformer(
    spec: &DenseTransformerSpec,
    t: u64,
    folded: bool,
) -> Result<CircuitGraph, BuildError> {
    spec.validate()?;
    if t < 1 {
        return Err(BuildError::InvalidSpec(
            "sequence length must be >= 1".into(),
        ));
    }
    if t > spec.max_seq_len {
        return Err(BuildError::SeqLenExceedsMax {
            t,
            t_max: spec.max_seq_len,
        });
    }

    let mut graph = CircuitGraph::new();
    let token = graph.add_input("input.token");
    let x = emit_embedding(&mut graph, spec.vocab, token, "embed");
    let normed = emit_body(&mut graph, spec, t, folded, "", x);
    let logits = tensor_linear(&mut graph, normed, spec.embed_dim, "decode");
    graph.mark_output(logits)?;
    Ok(graph)
}

/// Blocks plus the final norm, from an already-embedded residual wire to
/// the pre-decode hidden state. `prefix` namespaces the stage labels (used
/// by the unroll builder to separate copies).
pub(crate) fn emit_body(
    graph: &mut CircuitGraph,
    spec: &DenseTransformerSpec,
    t: u64,
    folded: bool,
    prefix: &str,
    mut x: GateId,
) -> GateId {
    for layer in 0..spec.num_layers {
        let span = spec.effective_span(layer, t);
        x = emit_block(
            graph,
            spec,
            x,
            span,
            folded,
            &format!("{prefix}blocks.layer{layer}"),
        );
    }
    tensor_rmsnorm(graph, x, spec.embed_dim, &format!("{prefix}final_norm"))
}

/// Token embedding: table lookup plus the `sqrt(D)` scaling multiply.
pub(crate) fn emit_embedding(
    graph: &mut CircuitGraph,
    vocab: u64,
    token: GateId,
    label: &str,
) -> GateId {
    let looked_up = graph
        .add_gate(
            GateKind::Lookup { table_size: vocab },
            vec![token],
            false,
            Some(format!("{label}.lookup")),
        )
        .expect("lookup over an existing selector is valid");
    let scale = graph.add_constant(format!("{label}.scale"));
    graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![looked_up, scale],
            false,
            Some(format!("{label}.rescale")),
        )
        .unwrap()
}

/// One pre-norm transformer block; returns the new residual wire.
pub(crate) fn emit_block(
    graph: &mut CircuitGraph,
    spec: &DenseTransformerSpec,
    x: GateId,
    span: u64,
    folded: bool,
    label: &str,
) -> GateId {
    let d = spec.embed_dim;

    let attn_in = tensor_rmsnorm(graph, x, d, &format!("{label}.pre_attn_norm"));
    let attn_out = emit_attention(
        graph,
        d,
        spec.head_dim,
        attn_in,
        span,
        spec.use_qk_norm,
        folded,
        &format!("{label}.attn"),
    );
    let attn_out = if spec.use_post_attn_norm {
        tensor_rmsnorm(graph, attn_out, d, &format!("{label}.post_attn_norm"))
    } else {
        attn_out
    };
    let x = graph
        .add_gate(
            GateKind::analytic2("add"),
            vec![x, attn_out],
            false,
            Some(format!("{label}.attn_residual")),
        )
        .unwrap();

    let ffw_in = tensor_rmsnorm(graph, x, d, &format!("{label}.pre_ffw_norm"));
    let ffw_out = emit_ffw(graph, d, spec.hidden_dim, ffw_in, &format!("{label}.ffw"));
    let ffw_out = if spec.use_post_ffw_norm {
        tensor_rmsnorm(graph, ffw_out, d, &format!("{label}.post_ffw_norm"))
    } else {
        ffw_out
    };
    graph
        .add_gate(
            GateKind::analytic2("add"),
            vec![x, ffw_out],
            false,
            Some(format!("{label}.ffw_residual")),
        )
        .unwrap()
}

/// Attention over an effective span. The query path carries the critical
/// depth; keys and values branch off the same normed wire in parallel.
#[allow(clippy::too_many_arguments)]
pub(crate) fn emit_attention(
    graph: &mut CircuitGraph,
    d: u64,
    h: u64,
    normed: GateId,
    span: u64,
    use_qk_norm: bool,
    folded: bool,
    label: &str,
) -> GateId {
    let mut q = tensor_linear(graph, normed, d, &format!("{label}.q_proj"));
    let mut k = tensor_linear(graph, normed, d, &format!("{label}.k_proj"));
    let v = tensor_linear(graph, normed, d, &format!("{label}.v_proj"));

    if use_qk_norm {
        q = tensor_rmsnorm(graph, q, h, &format!("{label}.q_norm"));
        k = tensor_rmsnorm(graph, k, h, &format!("{label}.k_norm"));
    }
    q = emit_rope(graph, q, &format!("{label}.q_rope"));
    k = emit_rope(graph, k, &format!("{label}.k_rope"));

    let q_scale = graph.add_constant(format!("{label}.q_scale.value"));
    let q = graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![q, q_scale],
            false,
            Some(format!("{label}.q_scale")),
        )
        .unwrap();

    // Scores: q·k reduced over the head dimension.
    let qk = graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![q, k],
            false,
            Some(format!("{label}.scores.mul")),
        )
        .unwrap();
    let scores = tensor_reduce(graph, ReduceOp::Add, h, qk, format!("{label}.scores.sum"));

    // Softmax over the span. The unfolded emission keeps the redundant
    // stable-max subtraction on the path.
    let softmax_in = if folded {
        scores
    } else {
        let m = tensor_reduce(
            graph,
            ReduceOp::Max,
            span,
            scores,
            format!("{label}.softmax.max"),
        );
        graph
            .add_gate(
                GateKind::analytic2("sub"),
                vec![scores, m],
                false,
                Some(format!("{label}.softmax.shift")),
            )
            .unwrap()
    };
    let exp = graph
        .add_gate(
            GateKind::analytic1("exp"),
            vec![softmax_in],
            false,
            Some(format!("{label}.softmax.exp")),
        )
        .unwrap();
    let denom = tensor_reduce(
        graph,
        ReduceOp::Add,
        span,
        exp,
        format!("{label}.softmax.sum"),
    );
    let probs = graph
        .add_gate(
            GateKind::analytic2("div"),
            vec![exp, denom],
            false,
            Some(format!("{label}.softmax.div")),
        )
        .unwrap();

    // Context: probs · v reduced over the span.
    let weighted = graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![probs, v],
            false,
            Some(format!("{label}.context.mul")),
        )
        .unwrap();
    let context = tensor_reduce(
        graph,
        ReduceOp::Add,
        span,
        weighted,
        format!("{label}.context.sum"),
    );

    tensor_linear(graph, context, d, &format!("{label}.out_proj"))
}

/// Rotary positional encoding: rotate-half is wiring; the cos/sin products
/// run in parallel and one addition combines them. Depth 2.
fn emit_rope(graph: &mut CircuitGraph, x: GateId, label: &str) -> GateId {
    let rotated = graph
        .add_gate(
            GateKind::Wiring,
            vec![x],
            false,
            Some(format!("{label}.rotate_half")),
        )
        .unwrap();
    let cos = graph.add_constant(format!("{label}.cos"));
    let sin = graph.add_constant(format!("{label}.sin"));
    let xc = graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![x, cos],
            false,
            Some(format!("{label}.mul_cos")),
        )
        .unwrap();
    let xs = graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![rotated, sin],
            false,
            Some(format!("{label}.mul_sin")),
        )
        .unwrap();
    graph
        .add_gate(
            GateKind::analytic2("add"),
            vec![xc, xs],
            false,
            Some(format!("{label}.combine")),
        )
        .unwrap()
}

/// Gated feed-forward: gate and up projections in parallel, gelu on the
/// gate, elementwise product, down projection.
pub(crate) fn emit_ffw(
    graph: &mut CircuitGraph,
    d: u64,
    hidden: u64,
    normed: GateId,
    label: &str,
) -> GateId {
    let gate = tensor_linear(graph, normed, d, &format!("{label}.gate_proj"));
    let up = tensor_linear(graph, normed, d, &format!("{label}.up_proj"));
    let act = graph
        .add_gate(
            GateKind::analytic1("gelu"),
            vec![gate],
            false,
            Some(format!("{label}.gelu")),
        )
        .unwrap();
    let gated = graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![act, up],
            false,
            Some(format!("{label}.gate_mul")),
        )
        .unwrap();
    tensor_linear(graph, gated, hidden, &format!("{label}.down_proj"))
}
