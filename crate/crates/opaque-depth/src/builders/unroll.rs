//! Multi-invocation unrolling.
//!
//! Feeding a network's outputs back into (possibly the same) network is one
//! large circuit: the copies are wired output-to-input. Whether the values
//! crossing a copy boundary are interpretable decides everything — tokens
//! that an observer can read cut the opaque paths, while continuous hidden
//! states let depth accumulate across copies.

use crate::formulas::embed_depth;
use crate::graph::{CircuitGraph, GateId, GateKind};

use super::dense::{emit_body, emit_embedding};
use super::{tensor_linear, BuildError, UnrollMode, UnrollSpec};

/// A finite unrolled circuit plus boundary bookkeeping.
#[derive(Debug, Clone)]
pub struct UnrollOutcome {
    pub graph: CircuitGraph,
    /// Number of copies of the backing network in the circuit.
    pub copies: u64,
    /// Depth of the embedding stage that copies after the first skip when
    /// a continuous vector is fed back directly (continuous chain of
    /// thought). `None` when every copy embeds tokens.
    pub embed_skip_delta: Option<u64>,
}

/// Result of [`unroll`]: either a finite circuit or the signal that no
/// finite circuit exists (persistent memory with no invocation bound).
#[derive(Debug, Clone)]
pub enum Unrolled {
    Graph(UnrollOutcome),
    /// Opaque serial depth cannot be bounded by the architecture's
    /// dimensions; there is nothing finite to emit.
    Unbounded,
}

impl Unrolled {
    pub fn expect_graph(self) -> UnrollOutcome {
        match self {
            Unrolled::Graph(outcome) => outcome,
            Unrolled::Unbounded => panic!("expected a finite unrolled circuit"),
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Unrolled::Unbounded)
    }
}

/// Compose copies of the backing transformer according to the mode.
pub fn unroll(spec: &UnrollSpec) -> Result<Unrolled, BuildError> {
    spec.validate()?;
    match &spec.mode {
        UnrollMode::Autoregressive {
            prompt_len,
            gen_len,
        } => autoregressive(spec, *prompt_len, *gen_len).map(Unrolled::Graph),
        UnrollMode::Diffusion { steps, seq_len } => {
            diffusion(spec, *steps, *seq_len).map(Unrolled::Graph)
        }
        UnrollMode::ContinuousCot {
            latent_steps,
            seq_len,
        } => continuous_cot(spec, *latent_steps, *seq_len).map(Unrolled::Graph),
        UnrollMode::BlackboxMemory {
            invocations: None, ..
        } => Ok(Unrolled::Unbounded),
        UnrollMode::BlackboxMemory {
            invocations: Some(k),
            seq_len,
        } => blackbox_memory(spec, *k, *seq_len).map(Unrolled::Graph),
    }
}

/// One copy per generated token. Copy `i` runs at sequence length
/// `prompt_len + i - 1`; its sampled token (a readout of the logits) feeds
/// the next copy's embedding.
fn autoregressive(
    spec: &UnrollSpec,
    prompt_len: u64,
    gen_len: u64,
) -> Result<UnrollOutcome, BuildError> {
    let base = &spec.base;
    let final_len = prompt_len + gen_len - 1;
    if final_len > base.max_seq_len {
        return Err(BuildError::SeqLenExceedsMax {
            t: final_len,
            t_max: base.max_seq_len,
        });
    }

    let mut graph = CircuitGraph::new();
    let mut token = graph.add_input("input.token");
    let mut logits = None;
    for i in 1..=gen_len {
        let t = prompt_len + i - 1;
        let prefix = format!("copy{i}.");
        let x = emit_embedding(&mut graph, base.vocab, token, &format!("{prefix}embed"));
        let normed = emit_body(&mut graph, base, t, true, &prefix, x);
        let out = tensor_linear(
            &mut graph,
            normed,
            base.embed_dim,
            &format!("{prefix}decode"),
        );
        logits = Some(out);
        if i < gen_len {
            token = graph
                .add_gate(
                    GateKind::Wiring,
                    vec![out],
                    spec.intermediate_interpretable,
                    Some(format!("{prefix}token")),
                )
                .unwrap();
        }
    }
    graph.mark_output(logits.expect("gen_len >= 1"))?;
    Ok(UnrollOutcome {
        graph,
        copies: gen_len,
        embed_skip_delta: None,
    })
}

/// Each diffusion step produces a full token sequence in parallel and the
/// next step re-embeds it. Interpretable intermediate sequences make every
/// step a cut, so depth stays at one forward pass regardless of step count.
fn diffusion(spec: &UnrollSpec, steps: u64, seq_len: u64) -> Result<UnrollOutcome, BuildError> {
    let base = &spec.base;
    if seq_len > base.max_seq_len {
        return Err(BuildError::SeqLenExceedsMax {
            t: seq_len,
            t_max: base.max_seq_len,
        });
    }

    let mut graph = CircuitGraph::new();
    let mut tokens = graph.add_input("input.noised_tokens");
    let mut logits = None;
    for i in 1..=steps {
        let prefix = format!("copy{i}.");
        let x = emit_embedding(&mut graph, base.vocab, tokens, &format!("{prefix}embed"));
        let normed = emit_body(&mut graph, base, seq_len, true, &prefix, x);
        let out = tensor_linear(
            &mut graph,
            normed,
            base.embed_dim,
            &format!("{prefix}decode"),
        );
        logits = Some(out);
        if i < steps {
            tokens = graph
                .add_gate(
                    GateKind::Wiring,
                    vec![out],
                    spec.intermediate_interpretable,
                    Some(format!("{prefix}tokens")),
                )
                .unwrap();
        }
    }
    graph.mark_output(logits.expect("steps >= 1"))?;
    Ok(UnrollOutcome {
        graph,
        copies: steps,
        embed_skip_delta: None,
    })
}

/// The final hidden state is fed straight back as the next input embedding,
/// bypassing tokens (and the embedding lookup) entirely.
fn continuous_cot(
    spec: &UnrollSpec,
    latent_steps: u64,
    seq_len: u64,
) -> Result<UnrollOutcome, BuildError> {
    let base = &spec.base;
    if seq_len > base.max_seq_len {
        return Err(BuildError::SeqLenExceedsMax {
            t: seq_len,
            t_max: base.max_seq_len,
        });
    }

    let mut graph = CircuitGraph::new();
    let token = graph.add_input("input.token");
    let mut state = emit_embedding(&mut graph, base.vocab, token, "copy1.embed");
    for i in 1..=latent_steps {
        let prefix = format!("copy{i}.");
        state = emit_body(&mut graph, base, seq_len, true, &prefix, state);
        if i < latent_steps {
            // The thought vector re-enters directly; optionally a cut.
            state = graph
                .add_gate(
                    GateKind::Wiring,
                    vec![state],
                    spec.intermediate_interpretable,
                    Some(format!("{prefix}thought")),
                )
                .unwrap();
        }
    }
    let logits = tensor_linear(&mut graph, state, base.embed_dim, "decode");
    graph.mark_output(logits)?;
    Ok(UnrollOutcome {
        graph,
        copies: latent_steps,
        embed_skip_delta: Some(embed_depth(base.vocab)),
    })
}

/// Read memory, process, write memory, `k` times. Each copy answers its own
/// prompt (an interpretable input and an output); the memory vector chains
/// through every copy and is interpretable only if the spec says so.
fn blackbox_memory(
    spec: &UnrollSpec,
    invocations: u64,
    seq_len: u64,
) -> Result<UnrollOutcome, BuildError> {
    let base = &spec.base;
    if seq_len > base.max_seq_len {
        return Err(BuildError::SeqLenExceedsMax {
            t: seq_len,
            t_max: base.max_seq_len,
        });
    }

    let mut graph = CircuitGraph::new();
    let mut memory: Option<GateId> = None;
    for i in 1..=invocations {
        let prefix = format!("copy{i}.");
        let token = graph.add_input(format!("{prefix}input.token"));
        let emb = emit_embedding(&mut graph, base.vocab, token, &format!("{prefix}embed"));
        let x = match memory {
            None => emb,
            Some(mem) => graph
                .add_gate(
                    GateKind::analytic2("add"),
                    vec![emb, mem],
                    false,
                    Some(format!("{prefix}memory_read")),
                )
                .unwrap(),
        };
        let normed = emit_body(&mut graph, base, seq_len, true, &prefix, x);
        let logits = tensor_linear(
            &mut graph,
            normed,
            base.embed_dim,
            &format!("{prefix}decode"),
        );
        graph.mark_output(logits)?;
        let written = graph
            .add_gate(
                GateKind::Wiring,
                vec![normed],
                spec.intermediate_interpretable,
                Some(format!("{prefix}memory_write")),
            )
            .unwrap();
        memory = Some(written);
    }
    Ok(UnrollOutcome {
        graph,
        copies: invocations,
        embed_skip_delta: None,
    })
}
