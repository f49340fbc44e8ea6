//! Direct matrix-math forward pass for tiny dense transformers.
//!
//! Mirrors the scalar emission's conventions (embedding scale, rmsnorm,
//! rotary angles, tanh-form gelu, head-major projections) using plain
//! vectors, so the circuit oracle can be compared against it. Weights are
//! fetched through the same label scheme the scalar builder attaches to its
//! constant gates.

#![allow(clippy::needless_range_loop)]

use opaque_depth::formulas::{AttentionKind, DenseTransformerSpec};

pub fn gelu(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + 0.044715 * x * x * x)).tanh())
}

fn rmsnorm(x: &[f64], label: &str, w: &mut impl FnMut(&str) -> f64) -> Vec<f64> {
    let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let r = 1.0 / (mean_sq + 1e-6).sqrt();
    x.iter()
        .enumerate()
        .map(|(i, v)| v * r * w(&format!("{label}.scale.d{i}")))
        .collect()
}

fn linear(x: &[f64], n_out: usize, label: &str, w: &mut impl FnMut(&str) -> f64) -> Vec<f64> {
    (0..n_out)
        .map(|o| {
            x.iter()
                .enumerate()
                .map(|(i, v)| v * w(&format!("{label}.w.o{o}.i{i}")))
                .sum()
        })
        .collect()
}

fn rope(x: &[f64], pos: usize, head_dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for j in 0..head_dim / 2 {
        let theta = pos as f64 / 10_000f64.powf(2.0 * j as f64 / head_dim as f64);
        let (sin, cos) = theta.sin_cos();
        let (a, b) = (x[2 * j], x[2 * j + 1]);
        out.push(a * cos - b * sin);
        out.push(b * cos + a * sin);
    }
    out
}

/// Full causal forward pass; returns the final position's logits.
pub fn forward(
    spec: &DenseTransformerSpec,
    tokens: &[usize],
    mut w: impl FnMut(&str) -> f64,
) -> Vec<f64> {
    let d = spec.embed_dim as usize;
    let h = spec.head_dim as usize;
    let heads = spec.num_heads as usize;
    let hidden = spec.hidden_dim as usize;
    let vocab = spec.vocab as usize;
    let t = tokens.len();

    let mut x: Vec<Vec<f64>> = tokens
        .iter()
        .map(|&tok| {
            (0..d)
                .map(|dd| w(&format!("embed.table.v{tok}.d{dd}")) * (d as f64).sqrt())
                .collect()
        })
        .collect();

    for layer in 0..spec.num_layers {
        let base = format!("blocks.layer{layer}");
        let window = match spec.layer_kind(layer) {
            AttentionKind::Local => spec.sliding_window.min(t as u64) as usize,
            AttentionKind::Global => t,
        };

        let normed: Vec<Vec<f64>> = (0..t)
            .map(|pos| rmsnorm(&x[pos], &format!("{base}.pre_attn_norm.t{pos}"), &mut w))
            .collect();

        // Per position, per head: q (normed, rotated, scaled), k, v.
        let mut q = vec![vec![Vec::new(); heads]; t];
        let mut k = vec![vec![Vec::new(); heads]; t];
        let mut v = vec![vec![Vec::new(); heads]; t];
        for pos in 0..t {
            let qp = linear(
                &normed[pos],
                heads * h,
                &format!("{base}.attn.q_proj.t{pos}"),
                &mut w,
            );
            let kp = linear(
                &normed[pos],
                heads * h,
                &format!("{base}.attn.k_proj.t{pos}"),
                &mut w,
            );
            let vp = linear(
                &normed[pos],
                heads * h,
                &format!("{base}.attn.v_proj.t{pos}"),
                &mut w,
            );
            for head in 0..heads {
                let (lo, hi) = (head * h, (head + 1) * h);
                let mut q_head = qp[lo..hi].to_vec();
                let mut k_head = kp[lo..hi].to_vec();
                if spec.use_qk_norm {
                    q_head = rmsnorm(
                        &q_head,
                        &format!("{base}.attn.q_norm.t{pos}.h{head}"),
                        &mut w,
                    );
                    k_head = rmsnorm(
                        &k_head,
                        &format!("{base}.attn.k_norm.t{pos}.h{head}"),
                        &mut w,
                    );
                }
                q_head = rope(&q_head, pos, h);
                k_head = rope(&k_head, pos, h);
                for e in &mut q_head {
                    *e /= (h as f64).sqrt();
                }
                q[pos][head] = q_head;
                k[pos][head] = k_head;
                v[pos][head] = vp[lo..hi].to_vec();
            }
        }

        for pos in 0..t {
            let start = (pos + 1).saturating_sub(window);
            let mut attended = Vec::with_capacity(heads * h);
            for head in 0..heads {
                let scores: Vec<f64> = (start..=pos)
                    .map(|key| (0..h).map(|j| q[pos][head][j] * k[key][head][j]).sum())
                    .collect();
                let exps: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
                let denom: f64 = exps.iter().sum();
                let probs: Vec<f64> = exps.iter().map(|e| e / denom).collect();
                for j in 0..h {
                    attended.push(
                        (start..=pos)
                            .zip(&probs)
                            .map(|(key, p)| p * v[key][head][j])
                            .sum(),
                    );
                }
            }
            let mut projected = linear(
                &attended,
                d,
                &format!("{base}.attn.out_proj.t{pos}"),
                &mut w,
            );
            if spec.use_post_attn_norm {
                projected = rmsnorm(&projected, &format!("{base}.post_attn_norm.t{pos}"), &mut w);
            }
            for (xd, p) in x[pos].iter_mut().zip(&projected) {
                *xd += p;
            }
        }

        for pos in 0..t {
            let normed = rmsnorm(&x[pos], &format!("{base}.pre_ffw_norm.t{pos}"), &mut w);
            let gate = linear(
                &normed,
                hidden,
                &format!("{base}.ffw.gate_proj.t{pos}"),
                &mut w,
            );
            let up = linear(
                &normed,
                hidden,
                &format!("{base}.ffw.up_proj.t{pos}"),
                &mut w,
            );
            let gated: Vec<f64> = gate.iter().zip(&up).map(|(g, u)| gelu(*g) * u).collect();
            let mut down = linear(&gated, d, &format!("{base}.ffw.down_proj.t{pos}"), &mut w);
            if spec.use_post_ffw_norm {
                down = rmsnorm(&down, &format!("{base}.post_ffw_norm.t{pos}"), &mut w);
            }
            for (xd, f) in x[pos].iter_mut().zip(&down) {
                *xd += f;
            }
        }
    }

    let last = t - 1;
    let final_normed = rmsnorm(&x[last], &format!("final_norm.t{last}"), &mut w);
    linear(&final_normed, vocab, "decode", &mut w)
}
