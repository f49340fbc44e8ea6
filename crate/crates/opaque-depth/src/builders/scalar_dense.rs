//! Scalar-form dense transformer, for numeric cross-checks at tiny
//! dimensions.
//!
//! Emits the full causal forward pass — every position, every head, one gate
//! per scalar — so the oracle can execute the circuit and compare it against
//! direct matrix math. Structural constants (norm dimensions, epsilons,
//! rotary angles, scaling factors) come back pre-assigned in
//! [`ScalarBindings::fixed`]; weight constants are listed with their labels
//! for the caller to assign.
//!
//! Conventions mirrored by any reference implementation:
//!
//! - embedding scale `sqrt(D)`, query scale `1/sqrt(head_dim)`;
//! - rmsnorm `x * rsqrt(mean(x^2) + 1e-6) * scale` (scale unshifted);
//! - rotary angle for position `t`, pair `j`: `t / 10000^(2j / head_dim)`;
//! - gelu in tanh form (the oracle's `gelu`);
//! - projections are head-major: output row `head * head_dim + j`.

// Positions co-index several parallel per-position tables; plain index
// loops read better than zipped iterators here.
#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;

use crate::formulas::DenseTransformerSpec;
use crate::graph::{CircuitGraph, GateId, GateKind, ReduceOp};

use super::BuildError;

/// Constant assignments produced alongside the scalar graph.
#[derive(Debug, Clone, Default)]
pub struct ScalarBindings {
    /// Structural constants with definite values.
    pub fixed: BTreeMap<GateId, f64>,
    /// Weight constants, with labels, for the caller to assign.
    pub weights: Vec<(GateId, String)>,
}

impl ScalarBindings {
    /// Merge the fixed values with caller-chosen weights into a full
    /// assignment for the oracle.
    pub fn assign(&self, mut weight_value: impl FnMut(&str) -> f64) -> BTreeMap<GateId, f64> {
        let mut out = self.fixed.clone();
        for (id, label) in &self.weights {
            out.insert(*id, weight_value(label));
        }
        out
    }
}

struct Emitter<'a> {
    graph: &'a mut CircuitGraph,
    fixed: BTreeMap<GateId, f64>,
}

impl Emitter<'_> {
    fn fixed_const(&mut self, label: String, value: f64) -> GateId {
        let id = self.graph.add_constant(label);
        self.fixed.insert(id, value);
        id
    }

    fn weight(&mut self, label: String) -> GateId {
        self.graph.add_constant(label)
    }

    fn gate(&mut self, kind: GateKind, inputs: Vec<GateId>, label: String) -> GateId {
        self.graph
            .add_gate(kind, inputs, false, Some(label))
            .expect("scalar emission wires existing gates")
    }

    fn sum(&mut self, operands: Vec<GateId>, label: String) -> GateId {
        if operands.len() >= 2 {
            let arity = operands.len() as u64;
            self.gate(GateKind::reduce(ReduceOp::Add, arity), operands, label)
        } else {
            self.gate(GateKind::Wiring, operands, label)
        }
    }

    /// Linear map `xs -> n_out` with one product gate per weight.
    fn linear(&mut self, xs: &[GateId], n_out: u64, label: &str) -> Vec<GateId> {
        (0..n_out)
            .map(|o| {
                let products: Vec<GateId> = xs
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let w = self.weight(format!("{label}.w.o{o}.i{i}"));
                        self.gate(
                            GateKind::analytic2("mul"),
                            vec![x, w],
                            format!("{label}.mul.o{o}.i{i}"),
                        )
                    })
                    .collect();
                self.sum(products, format!("{label}.sum.o{o}"))
            })
            .collect()
    }

    /// RMSNorm over the elements of `xs`.
    fn rmsnorm(&mut self, xs: &[GateId], label: &str) -> Vec<GateId> {
        let squares: Vec<GateId> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                self.gate(
                    GateKind::analytic1("square"),
                    vec![x],
                    format!("{label}.square{i}"),
                )
            })
            .collect();
        let total = self.sum(squares, format!("{label}.sum"));
        let dim = self.fixed_const(format!("{label}.dim"), xs.len() as f64);
        let mean = self.gate(
            GateKind::analytic2("div"),
            vec![total, dim],
            format!("{label}.mean"),
        );
        let eps = self.fixed_const(format!("{label}.eps"), 1e-6);
        let stable = self.gate(
            GateKind::analytic2("add"),
            vec![mean, eps],
            format!("{label}.add_eps"),
        );
        let rs = self.gate(
            GateKind::analytic1("rsqrt"),
            vec![stable],
            format!("{label}.rsqrt"),
        );
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let normed = self.gate(
                    GateKind::analytic2("mul"),
                    vec![x, rs],
                    format!("{label}.normalize{i}"),
                );
                let scale = self.weight(format!("{label}.scale.d{i}"));
                self.gate(
                    GateKind::analytic2("mul"),
                    vec![normed, scale],
                    format!("{label}.rescale{i}"),
                )
            })
            .collect()
    }

    /// Rotary encoding over one head's vector at position `pos`. Angle
    /// constants are cached per (position, pair) and shared across heads
    /// and layers.
    fn rope(
        &mut self,
        xs: &[GateId],
        pos: u64,
        head_dim: u64,
        angle_cache: &mut BTreeMap<(u64, u64), (GateId, GateId)>,
        label: &str,
    ) -> Vec<GateId> {
        let mut out = Vec::with_capacity(xs.len());
        for j in 0..head_dim / 2 {
            let (cos, sin) = *angle_cache.entry((pos, j)).or_insert_with(|| {
                let theta = pos as f64 / 10_000f64.powf(2.0 * j as f64 / head_dim as f64);
                // Both constants belong to the shared "rope" namespace.
                let c = self.graph.add_constant(format!("rope.cos.t{pos}.p{j}"));
                let s = self.graph.add_constant(format!("rope.sin.t{pos}.p{j}"));
                self.fixed.insert(c, theta.cos());
                self.fixed.insert(s, theta.sin());
                (c, s)
            });
            let (a, b) = (xs[(2 * j) as usize], xs[(2 * j + 1) as usize]);
            let ac = self.gate(
                GateKind::analytic2("mul"),
                vec![a, cos],
                format!("{label}.mul_cos.e{}", 2 * j),
            );
            let bs = self.gate(
                GateKind::analytic2("mul"),
                vec![b, sin],
                format!("{label}.mul_sin.e{}", 2 * j),
            );
            let bc = self.gate(
                GateKind::analytic2("mul"),
                vec![b, cos],
                format!("{label}.mul_cos.e{}", 2 * j + 1),
            );
            let as_ = self.gate(
                GateKind::analytic2("mul"),
                vec![a, sin],
                format!("{label}.mul_sin.e{}", 2 * j + 1),
            );
            out.push(self.gate(
                GateKind::analytic2("sub"),
                vec![ac, bs],
                format!("{label}.combine.e{}", 2 * j),
            ));
            out.push(self.gate(
                GateKind::analytic2("add"),
                vec![bc, as_],
                format!("{label}.combine.e{}", 2 * j + 1),
            ));
        }
        out
    }
}

/// Build the full causal forward pass as a scalar circuit. Outputs are the
/// final position's logits. Requires an even head dimension (rotary pairs).
pub fn build_dense_transformer_scalar(
    spec: &DenseTransformerSpec,
    t: u64,
) -> Result<(CircuitGraph, ScalarBindings), BuildError> {
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
    if !spec.head_dim.is_multiple_of(2) {
        return Err(BuildError::InvalidSpec(
            "scalar emission needs an even head_dim for rotary pairs".into(),
        ));
    }

    let mut graph = CircuitGraph::new();
    let mut emitter = Emitter {
        graph: &mut graph,
        fixed: BTreeMap::new(),
    };
    let d = spec.embed_dim;
    let h = spec.head_dim;
    let heads = spec.num_heads;
    let attn_width = heads * h;

    let tokens: Vec<GateId> = (0..t)
        .map(|pos| emitter.graph.add_input(format!("input.token{pos}")))
        .collect();

    // Shared embedding table, one constant per (vocab, dim) entry.
    let table: Vec<Vec<GateId>> = (0..spec.vocab)
        .map(|v| {
            (0..d)
                .map(|dd| emitter.weight(format!("embed.table.v{v}.d{dd}")))
                .collect()
        })
        .collect();
    let embed_scale = emitter.fixed_const("embed.scale".to_string(), (d as f64).sqrt());

    // x[pos][dim]: the residual stream.
    let mut x: Vec<Vec<GateId>> = tokens
        .iter()
        .enumerate()
        .map(|(pos, &tok)| {
            (0..d)
                .map(|dd| {
                    let mut inputs = vec![tok];
                    inputs.extend((0..spec.vocab).map(|v| table[v as usize][dd as usize]));
                    let looked_up = emitter.gate(
                        GateKind::Lookup {
                            table_size: spec.vocab,
                        },
                        inputs,
                        format!("embed.lookup.t{pos}.d{dd}"),
                    );
                    emitter.gate(
                        GateKind::analytic2("mul"),
                        vec![looked_up, embed_scale],
                        format!("embed.rescale.t{pos}.d{dd}"),
                    )
                })
                .collect()
        })
        .collect();

    let mut angle_cache = BTreeMap::new();

    for layer in 0..spec.num_layers {
        let base = format!("blocks.layer{layer}");
        let window = spec.effective_span(layer, t);

        // Attention sublayer.
        let normed: Vec<Vec<GateId>> = (0..t as usize)
            .map(|pos| emitter.rmsnorm(&x[pos], &format!("{base}.pre_attn_norm.t{pos}")))
            .collect();
        let q_scale = emitter.fixed_const(format!("{base}.attn.q_scale"), 1.0 / (h as f64).sqrt());

        // Per position, per head: projected, normed, rotated q/k/v.
        let mut q: Vec<Vec<Vec<GateId>>> = Vec::new(); // [pos][head][j]
        let mut k: Vec<Vec<Vec<GateId>>> = Vec::new();
        let mut v: Vec<Vec<Vec<GateId>>> = Vec::new();
        for pos in 0..t as usize {
            let qp = emitter.linear(
                &normed[pos],
                attn_width,
                &format!("{base}.attn.q_proj.t{pos}"),
            );
            let kp = emitter.linear(
                &normed[pos],
                attn_width,
                &format!("{base}.attn.k_proj.t{pos}"),
            );
            let vp = emitter.linear(
                &normed[pos],
                attn_width,
                &format!("{base}.attn.v_proj.t{pos}"),
            );
            let mut qh = Vec::new();
            let mut kh = Vec::new();
            let mut vh = Vec::new();
            for head in 0..heads as usize {
                let lo = head * h as usize;
                let hi = lo + h as usize;
                let mut q_head = qp[lo..hi].to_vec();
                let mut k_head = kp[lo..hi].to_vec();
                if spec.use_qk_norm {
                    q_head =
                        emitter.rmsnorm(&q_head, &format!("{base}.attn.q_norm.t{pos}.h{head}"));
                    k_head =
                        emitter.rmsnorm(&k_head, &format!("{base}.attn.k_norm.t{pos}.h{head}"));
                }
                q_head = emitter.rope(
                    &q_head,
                    pos as u64,
                    h,
                    &mut angle_cache,
                    &format!("{base}.attn.q_rope.t{pos}.h{head}"),
                );
                k_head = emitter.rope(
                    &k_head,
                    pos as u64,
                    h,
                    &mut angle_cache,
                    &format!("{base}.attn.k_rope.t{pos}.h{head}"),
                );
                let q_scaled = q_head
                    .iter()
                    .enumerate()
                    .map(|(j, &qe)| {
                        emitter.gate(
                            GateKind::analytic2("mul"),
                            vec![qe, q_scale],
                            format!("{base}.attn.q_scaled.t{pos}.h{head}.e{j}"),
                        )
                    })
                    .collect();
                qh.push(q_scaled);
                kh.push(k_head);
                vh.push(vp[lo..hi].to_vec());
            }
            q.push(qh);
            k.push(kh);
            v.push(vh);
        }

        // Scores, softmax, context per (query position, head), causally
        // limited to the layer's window.
        let mut attended: Vec<Vec<GateId>> = Vec::new(); // [pos][attn_width]
        for pos in 0..t as usize {
            let start = (pos + 1).saturating_sub(window as usize);
            let span: Vec<usize> = (start..=pos).collect();
            let mut head_outputs: Vec<GateId> = Vec::with_capacity(attn_width as usize);
            for head in 0..heads as usize {
                let tag = format!("{base}.attn.t{pos}.h{head}");
                let scores: Vec<GateId> = span
                    .iter()
                    .map(|&key_pos| {
                        let products: Vec<GateId> = (0..h as usize)
                            .map(|j| {
                                emitter.gate(
                                    GateKind::analytic2("mul"),
                                    vec![q[pos][head][j], k[key_pos][head][j]],
                                    format!("{tag}.scores.mul.k{key_pos}.e{j}"),
                                )
                            })
                            .collect();
                        emitter.sum(products, format!("{tag}.scores.sum.k{key_pos}"))
                    })
                    .collect();
                let exps: Vec<GateId> = scores
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        emitter.gate(
                            GateKind::analytic1("exp"),
                            vec![s],
                            format!("{tag}.softmax.exp{i}"),
                        )
                    })
                    .collect();
                let denom = emitter.sum(exps.clone(), format!("{tag}.softmax.sum"));
                let probs: Vec<GateId> = exps
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| {
                        emitter.gate(
                            GateKind::analytic2("div"),
                            vec![e, denom],
                            format!("{tag}.softmax.div{i}"),
                        )
                    })
                    .collect();
                for j in 0..h as usize {
                    let weighted: Vec<GateId> = span
                        .iter()
                        .zip(&probs)
                        .map(|(&key_pos, &p)| {
                            emitter.gate(
                                GateKind::analytic2("mul"),
                                vec![p, v[key_pos][head][j]],
                                format!("{tag}.context.mul.k{key_pos}.e{j}"),
                            )
                        })
                        .collect();
                    head_outputs.push(emitter.sum(weighted, format!("{tag}.context.sum.e{j}")));
                }
            }
            attended.push(head_outputs);
        }

        // Output projection, optional post norm, residual.
        for pos in 0..t as usize {
            let projected =
                emitter.linear(&attended[pos], d, &format!("{base}.attn.out_proj.t{pos}"));
            let projected = if spec.use_post_attn_norm {
                emitter.rmsnorm(&projected, &format!("{base}.post_attn_norm.t{pos}"))
            } else {
                projected
            };
            x[pos] = x[pos]
                .iter()
                .zip(&projected)
                .enumerate()
                .map(|(i, (&res, &attn_out))| {
                    emitter.gate(
                        GateKind::analytic2("add"),
                        vec![res, attn_out],
                        format!("{base}.attn_residual.t{pos}.d{i}"),
                    )
                })
                .collect();
        }

        // Feed-forward sublayer.
        for pos in 0..t as usize {
            let normed = emitter.rmsnorm(&x[pos], &format!("{base}.pre_ffw_norm.t{pos}"));
            let gate_pre = emitter.linear(
                &normed,
                spec.hidden_dim,
                &format!("{base}.ffw.gate_proj.t{pos}"),
            );
            let up = emitter.linear(
                &normed,
                spec.hidden_dim,
                &format!("{base}.ffw.up_proj.t{pos}"),
            );
            let gated: Vec<GateId> = gate_pre
                .iter()
                .zip(&up)
                .enumerate()
                .map(|(i, (&gp, &u))| {
                    let act = emitter.gate(
                        GateKind::analytic1("gelu"),
                        vec![gp],
                        format!("{base}.ffw.gelu.t{pos}.e{i}"),
                    );
                    emitter.gate(
                        GateKind::analytic2("mul"),
                        vec![act, u],
                        format!("{base}.ffw.gate_mul.t{pos}.e{i}"),
                    )
                })
                .collect();
            let down = emitter.linear(&gated, d, &format!("{base}.ffw.down_proj.t{pos}"));
            let down = if spec.use_post_ffw_norm {
                emitter.rmsnorm(&down, &format!("{base}.post_ffw_norm.t{pos}"))
            } else {
                down
            };
            x[pos] = x[pos]
                .iter()
                .zip(&down)
                .enumerate()
                .map(|(i, (&res, &f))| {
                    emitter.gate(
                        GateKind::analytic2("add"),
                        vec![res, f],
                        format!("{base}.ffw_residual.t{pos}.d{i}"),
                    )
                })
                .collect();
        }
    }

    // Final norm and decode for the last position only.
    let last = t as usize - 1;
    let final_normed = emitter.rmsnorm(&x[last], &format!("final_norm.t{last}"));
    let logits = emitter.linear(&final_normed, spec.vocab, "decode");

    let fixed = emitter.fixed;
    let weights: Vec<(GateId, String)> = graph
        .gates()
        .filter(|g| matches!(g.kind, GateKind::Constant) && !fixed.contains_key(&g.id))
        .map(|g| (g.id, g.label.clone().unwrap_or_default()))
        .collect();
    for id in logits {
        graph.mark_output(id)?;
    }

    Ok((graph, ScalarBindings { fixed, weights }))
}
