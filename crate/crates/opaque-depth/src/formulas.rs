//! Closed-form depth calculus for standard layers and full models.
//!
//! Component depths (all logs are `ceil(log2 ·)`):
//!
//! | component          | depth                                         |
//! |--------------------|-----------------------------------------------|
//! | embedding lookup   | `log V + 1` (multiplexer + scaling)           |
//! | linear, d_in       | `1 + log d_in` (folded bias: `1 + log(d+1)`)  |
//! | rmsnorm, dim d     | `6 + log d`                                   |
//! | attention          | `15 + 2 log D + 2 log H + 2 log T` (qk-norm)  |
//! | gated feed-forward | `4 + log D + log Hidden`                      |
//! | transformer block  | `45 + 7 log D + 2 log H + log Hidden + 2 log T` |
//!
//! Sliding-window attention uses `min(W, T)` in place of `T`; global
//! attention uses the full `T`, so every global block contributes the
//! `2·log T` term that makes whole-model depth logarithmic in sequence
//! length. The full-model result is an affine form in `ceil(log2 T)`
//! ([`SymbolicDepth`]) valid for `T >= W`, plus an exact pointwise
//! evaluation ([`model_depth_at`]) that handles `T < W` too.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::math::ceil_log2;

/// Depth as an affine form `constant + coeff * ceil(log2 T)`, or the
/// distinguished unbounded value for architectures whose hidden serial
/// computation cannot be bounded by the model dimensions at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolicDepth {
    Finite {
        constant: u64,
        log_t_coefficient: u64,
    },
    Unbounded,
}

impl SymbolicDepth {
    pub fn constant(c: u64) -> Self {
        SymbolicDepth::Finite {
            constant: c,
            log_t_coefficient: 0,
        }
    }

    /// Evaluate at sequence length `T >= 1`. `None` for `Unbounded`.
    pub fn evaluate(&self, t: u64) -> Option<u64> {
        match self {
            SymbolicDepth::Finite {
                constant,
                log_t_coefficient,
            } => Some(constant + log_t_coefficient * ceil_log2(t.max(1))),
            SymbolicDepth::Unbounded => None,
        }
    }

    pub fn scale(self, factor: u64) -> SymbolicDepth {
        match self {
            SymbolicDepth::Finite {
                constant,
                log_t_coefficient,
            } => SymbolicDepth::Finite {
                constant: constant * factor,
                log_t_coefficient: log_t_coefficient * factor,
            },
            SymbolicDepth::Unbounded => SymbolicDepth::Unbounded,
        }
    }
}

impl std::ops::Add for SymbolicDepth {
    type Output = SymbolicDepth;

    /// Componentwise; anything plus `Unbounded` is `Unbounded`.
    fn add(self, other: SymbolicDepth) -> SymbolicDepth {
        match (self, other) {
            (
                SymbolicDepth::Finite {
                    constant: a,
                    log_t_coefficient: b,
                },
                SymbolicDepth::Finite {
                    constant: c,
                    log_t_coefficient: d,
                },
            ) => SymbolicDepth::Finite {
                constant: a + c,
                log_t_coefficient: b + d,
            },
            _ => SymbolicDepth::Unbounded,
        }
    }
}

impl fmt::Display for SymbolicDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolicDepth::Finite {
                constant,
                log_t_coefficient: 0,
            } => write!(f, "{constant}"),
            SymbolicDepth::Finite {
                constant,
                log_t_coefficient,
            } => {
                write!(f, "{constant} + {log_t_coefficient}·log2(T)")
            }
            SymbolicDepth::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// Kind of attention a layer uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionKind {
    /// Sliding-window attention over the last `min(W, T)` positions.
    Local,
    /// Full attention over all `T` positions.
    Global,
}

/// How a linear layer treats its bias term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bias {
    None,
    /// Bias folded into the dot-product sum as an extra operand.
    Folded,
    /// Bias added in a separate step after the sum.
    Unfolded,
}

/// Parametric description of a dense (Gemma-3-style) transformer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseTransformerSpec {
    pub vocab: u64,
    pub embed_dim: u64,
    pub hidden_dim: u64,
    pub head_dim: u64,
    pub num_heads: u64,
    pub num_layers: u64,
    pub sliding_window: u64,
    /// Repeating cycle of attention kinds, applied layer by layer.
    pub attention_pattern: Vec<AttentionKind>,
    pub max_seq_len: u64,
    pub use_post_attn_norm: bool,
    pub use_post_ffw_norm: bool,
    pub use_qk_norm: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SpecError {
    #[error("invalid architecture spec: {0}")]
    Invalid(String),
    #[error("{family} analysis requires parameter `{param}`")]
    MissingParam {
        family: &'static str,
        param: &'static str,
    },
}

impl DenseTransformerSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let dims = [
            ("vocab", self.vocab),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("head_dim", self.head_dim),
            ("num_heads", self.num_heads),
            ("num_layers", self.num_layers),
            ("sliding_window", self.sliding_window),
            ("max_seq_len", self.max_seq_len),
        ];
        for (name, v) in dims {
            if v < 1 {
                return Err(SpecError::Invalid(format!("{name} must be >= 1")));
            }
        }
        if self.attention_pattern.is_empty() {
            return Err(SpecError::Invalid(
                "attention pattern must be non-empty".into(),
            ));
        }
        if self.sliding_window > self.max_seq_len {
            return Err(SpecError::Invalid(format!(
                "sliding window {} exceeds max sequence length {}",
                self.sliding_window, self.max_seq_len
            )));
        }
        Ok(())
    }

    /// Attention kind of layer `layer` (0-based), cycling the pattern.
    pub fn layer_kind(&self, layer: u64) -> AttentionKind {
        self.attention_pattern[(layer % self.attention_pattern.len() as u64) as usize]
    }

    /// Effective attention span of a layer at sequence length `t`.
    pub fn effective_span(&self, layer: u64, t: u64) -> u64 {
        match self.layer_kind(layer) {
            AttentionKind::Local => self.sliding_window.min(t),
            AttentionKind::Global => t,
        }
    }

    pub fn local_layer_count(&self) -> u64 {
        (0..self.num_layers)
            .filter(|&l| self.layer_kind(l) == AttentionKind::Local)
            .count() as u64
    }

    pub fn global_layer_count(&self) -> u64 {
        self.num_layers - self.local_layer_count()
    }
}

/// Depth of a linear map on a `d_in`-dimensional input: one rank of parallel
/// products plus a balanced sum. A folded bias joins the sum as an extra
/// operand; an unfolded bias is a separate addition after it.
pub fn linear_depth(d_in: u64, bias: Bias) -> u64 {
    assert!(d_in >= 1);
    match bias {
        Bias::None => 1 + ceil_log2(d_in),
        Bias::Folded => 1 + ceil_log2(d_in + 1),
        Bias::Unfolded => 1 + ceil_log2(d_in) + 1,
    }
}

/// RMSNorm over a `d`-dimensional vector: square, sum, divide, add-eps,
/// rsqrt, multiply, scale — six unit steps around one balanced sum.
pub fn rmsnorm_depth(d: u64) -> u64 {
    assert!(d >= 1);
    6 + ceil_log2(d)
}

/// Softmax over `t` values: exponentiation, balanced sum, divide.
pub fn softmax_depth(t: u64) -> u64 {
    assert!(t >= 1);
    2 + ceil_log2(t)
}

/// Critical path through an attention module at effective span `t`:
/// projection, optional qk-norm, rotary encoding, query scaling, score
/// reduction over the head dimension, softmax over `t`, value mixing over
/// `t`, output projection.
pub fn attention_depth(embed_dim: u64, head_dim: u64, t: u64, use_qk_norm: bool) -> u64 {
    assert!(embed_dim >= 1 && head_dim >= 1 && t >= 1);
    let (d, h) = (ceil_log2(embed_dim), ceil_log2(head_dim));
    let qk_norm = if use_qk_norm {
        rmsnorm_depth(head_dim)
    } else {
        0
    };
    (1 + d)                  // q projection
        + qk_norm            // qk rmsnorm on the head dimension
        + 2                  // rotary positional encoding
        + 1                  // query scaling
        + (1 + h)            // scores: q·k over the head dimension
        + softmax_depth(t)   // softmax over the attended span
        + (1 + ceil_log2(t)) // probs · v over the attended span
        + (1 + d) // output projection
}

/// Gated feed-forward block: gating projection, gelu + gate multiply, down
/// projection.
pub fn ffw_depth(embed_dim: u64, hidden_dim: u64) -> u64 {
    assert!(embed_dim >= 1 && hidden_dim >= 1);
    4 + ceil_log2(embed_dim) + ceil_log2(hidden_dim)
}

/// Depth of one transformer block at effective attention span `t_effective`:
/// pre-attention norm, attention, optional post-attention norm, residual
/// add, pre-ffw norm, feed-forward, optional post-ffw norm, residual add.
pub fn block_depth(spec: &DenseTransformerSpec, t_effective: u64) -> u64 {
    assert!(t_effective >= 1);
    let norm = rmsnorm_depth(spec.embed_dim);
    let mut depth = norm; // pre-attention norm
    depth += attention_depth(spec.embed_dim, spec.head_dim, t_effective, spec.use_qk_norm);
    if spec.use_post_attn_norm {
        depth += norm;
    }
    depth += 1; // residual add
    depth += norm; // pre-ffw norm
    depth += ffw_depth(spec.embed_dim, spec.hidden_dim);
    if spec.use_post_ffw_norm {
        depth += norm;
    }
    depth + 1 // residual add
}

/// Depth of the embedding stage: table lookup plus scaling multiply.
pub fn embed_depth(vocab: u64) -> u64 {
    ceil_log2(vocab) + 1
}

/// Depth of the decode stage: one linear over the embedding dimension (the
/// per-vocabulary dot products run in parallel).
pub fn decode_depth(embed_dim: u64) -> u64 {
    linear_depth(embed_dim, Bias::None)
}

/// Whole-model depth as an affine form in `ceil(log2 T)`.
///
/// Local blocks are pinned at their window size, so the form is exact for
/// `T >= sliding_window`; for shorter sequences use [`model_depth_at`],
/// which shrinks local spans to `min(W, T)`.
pub fn model_depth_formula(spec: &DenseTransformerSpec) -> SymbolicDepth {
    let locals = spec.local_layer_count();
    let globals = spec.global_layer_count();
    let local_block = block_depth(spec, spec.sliding_window);
    // Global block with the 2·log T term split out.
    let global_constant = block_depth(spec, 1);
    let constant = embed_depth(spec.vocab)
        + locals * local_block
        + globals * global_constant
        + rmsnorm_depth(spec.embed_dim)
        + decode_depth(spec.embed_dim);
    SymbolicDepth::Finite {
        constant,
        log_t_coefficient: 2 * globals,
    }
}

/// Exact whole-model depth at sequence length `t`, valid for any `t >= 1`.
pub fn model_depth_at(spec: &DenseTransformerSpec, t: u64) -> u64 {
    assert!(t >= 1);
    let blocks: u64 = (0..spec.num_layers)
        .map(|l| block_depth(spec, spec.effective_span(l, t)))
        .sum();
    embed_depth(spec.vocab) + blocks + rmsnorm_depth(spec.embed_dim) + decode_depth(spec.embed_dim)
}

/// Per-stage itemization of [`model_depth_at`], for reports.
pub fn model_depth_stages(spec: &DenseTransformerSpec, t: u64) -> Vec<(String, u64)> {
    let blocks: u64 = (0..spec.num_layers)
        .map(|l| block_depth(spec, spec.effective_span(l, t)))
        .sum();
    vec![
        ("embed".to_string(), embed_depth(spec.vocab)),
        ("blocks".to_string(), blocks),
        ("final_norm".to_string(), rmsnorm_depth(spec.embed_dim)),
        ("decode".to_string(), decode_depth(spec.embed_dim)),
    ]
}

/// Architecture families with known asymptotic depth behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchitectureFamily {
    AutoregressiveTransformer,
    RnnStack,
    ContinuousCot,
    TextDiffusion,
    BlackboxMemory,
}

/// Parameters for [`asymptotic_depth`]. Families ignore fields they do not
/// need; missing required fields are reported as errors.
#[derive(Debug, Clone, Default)]
pub struct AsymptoticParams {
    /// Backing transformer, for families built on a forward pass.
    pub base: Option<DenseTransformerSpec>,
    pub seq_len: Option<u64>,
    pub layers: Option<u64>,
    pub dim: Option<u64>,
    pub cot_steps: Option<u64>,
    pub invocation_bound: Option<u64>,
}

/// Asymptotic class plus, where finite, a concrete bound assembled from the
/// layer calculus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsymptoticDepth {
    pub family: ArchitectureFamily,
    /// Big-O descriptor in the model dimensions.
    pub class: &'static str,
    pub bound: SymbolicDepth,
}

/// Depth of one RNN cell: the two-input combining activation followed by
/// two stacked linear maps over `dim`. Both cell inputs traverse the whole
/// pipeline, so moving one step through the grid — up a layer or right a
/// token — costs exactly one cell. See the RNN builder for the layout.
pub fn rnn_cell_depth(dim: u64) -> u64 {
    2 * (1 + ceil_log2(dim)) + 1
}

/// Exact depth of a `layers x seq_len` RNN grid built by the RNN builder:
/// the longest staircase visits `layers + seq_len - 1` cells.
pub fn rnn_grid_depth(layers: u64, dim: u64, seq_len: u64) -> u64 {
    assert!(layers >= 1 && dim >= 1 && seq_len >= 1);
    (layers + seq_len - 1) * rnn_cell_depth(dim)
}

/// Asymptotic depth class for an architecture family, with a concrete bound
/// where the inputs pin one down.
pub fn asymptotic_depth(
    family: ArchitectureFamily,
    params: &AsymptoticParams,
) -> Result<AsymptoticDepth, SpecError> {
    let need_base = |family: &'static str| {
        params.base.clone().ok_or(SpecError::MissingParam {
            family,
            param: "base",
        })
    };
    match family {
        ArchitectureFamily::AutoregressiveTransformer => {
            let base = need_base("autoregressive-transformer")?;
            base.validate()?;
            Ok(AsymptoticDepth {
                family,
                class: "O(L·(log T + log D))",
                bound: model_depth_formula(&base),
            })
        }
        ArchitectureFamily::RnnStack => {
            let layers = params.layers.ok_or(SpecError::MissingParam {
                family: "rnn-stack",
                param: "layers",
            })?;
            let dim = params.dim.ok_or(SpecError::MissingParam {
                family: "rnn-stack",
                param: "dim",
            })?;
            let seq_len = params.seq_len.ok_or(SpecError::MissingParam {
                family: "rnn-stack",
                param: "seq_len",
            })?;
            Ok(AsymptoticDepth {
                family,
                class: "O((L + T)·log D)",
                bound: SymbolicDepth::constant(rnn_grid_depth(layers, dim, seq_len)),
            })
        }
        ArchitectureFamily::ContinuousCot => {
            let base = need_base("continuous-cot")?;
            base.validate()?;
            let steps = params.cot_steps.ok_or(SpecError::MissingParam {
                family: "continuous-cot",
                param: "cot_steps",
            })?;
            Ok(AsymptoticDepth {
                family,
                class: "O(L·T_cot·(log T + log D))",
                bound: model_depth_formula(&base).scale(steps.max(1)),
            })
        }
        ArchitectureFamily::TextDiffusion => {
            let base = need_base("text-diffusion")?;
            base.validate()?;
            // Interpretable intermediate token sequences make every
            // diffusion step a cut: a k-step process is one forward pass
            // deep regardless of k.
            Ok(AsymptoticDepth {
                family,
                class: "O(L·(log T + log D)) — independent of step count",
                bound: model_depth_formula(&base),
            })
        }
        ArchitectureFamily::BlackboxMemory => match params.invocation_bound {
            None => Ok(AsymptoticDepth {
                family,
                class: "unbounded in L, T and D",
                bound: SymbolicDepth::Unbounded,
            }),
            Some(k) => {
                let base = need_base("blackbox-memory")?;
                base.validate()?;
                Ok(AsymptoticDepth {
                    family,
                    class: "O(invocations·L·(log T + log D))",
                    bound: model_depth_formula(&base).scale(k.max(1)),
                })
            }
        },
    }
}
