//! Parametric circuit builders.
//!
//! Each builder turns an architecture description into a [`CircuitGraph`]
//! whose opaque serial depth the engine can measure. Two emission styles:
//!
//! - *analysis form* (the default for transformers and RNN grids): one gate
//!   per tensor operation, with reduction gates declaring their semantic
//!   arity while consuming a single tensor wire. Graph size stays small and
//!   independent of the model dimensions; depth is identical to the scalar
//!   circuit.
//! - *scalar form* (MLPs and the tiny-transformer cross-check): one gate per
//!   scalar value, so the numeric oracle can execute the circuit.
//!
//! Weights appear as `Constant` gates. No trained values are ever loaded —
//! depth does not depend on them — but scalar-form constants carry indexed
//! labels so tests can assign values and compare against reference math.
//!
//! Degenerate dimensions are legal everywhere: a reduction over one element
//! is emitted as zero-depth wiring.

mod dense;
mod fold;
mod mlp;
mod moe;
mod params;
mod rnn;
mod scalar_dense;
mod unroll;

pub use dense::build_dense_transformer;
pub use fold::fold_biases;
pub use mlp::build_mlp;
pub use moe::build_moe_transformer;
pub use params::{parameter_count_dense, parameter_count_moe, ParamCount};
pub use rnn::build_rnn_stack;
pub use scalar_dense::{build_dense_transformer_scalar, ScalarBindings};
pub use unroll::{unroll, UnrollOutcome, Unrolled};

use serde::{Deserialize, Serialize};

use crate::formulas::DenseTransformerSpec;
use crate::graph::{CircuitGraph, GateId, GateKind, GraphError, ReduceOp};

#[derive(Debug, Clone, thiserror::Error)]
pub enum BuildError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("sequence length {t} exceeds the spec's maximum {t_max}")]
    SeqLenExceedsMax { t: u64, t_max: u64 },
    #[error(transparent)]
    Spec(#[from] crate::formulas::SpecError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Multilayer perceptron description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub input_dim: u64,
    pub output_dim: u64,
    /// May be empty: a pure linear map.
    pub hidden_dims: Vec<u64>,
    /// Piecewise-analytic activation for the hidden layers; `"linear"`
    /// means none.
    pub activation: String,
    pub bias: bool,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<(), BuildError> {
        if self.input_dim < 1 || self.output_dim < 1 {
            return Err(BuildError::InvalidSpec(
                "mlp dimensions must be >= 1".into(),
            ));
        }
        if self.hidden_dims.iter().any(|&d| d < 1) {
            return Err(BuildError::InvalidSpec(
                "mlp hidden dimensions must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Mixture-of-experts transformer description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoeSpec {
    pub vocab: u64,
    pub hidden_dim: u64,
    pub num_heads: u64,
    pub num_layers: u64,
    pub experts_per_layer: u64,
    pub experts_per_token: u64,
    /// Per-expert feed-forward width. Not always published; callers may
    /// infer it from a parameter budget (see the bundled configs).
    pub expert_hidden_dim: u64,
    pub seq_len: u64,
}

impl MoeSpec {
    pub fn validate(&self) -> Result<(), BuildError> {
        let dims = [
            ("vocab", self.vocab),
            ("hidden_dim", self.hidden_dim),
            ("num_heads", self.num_heads),
            ("num_layers", self.num_layers),
            ("experts_per_layer", self.experts_per_layer),
            ("experts_per_token", self.experts_per_token),
            ("expert_hidden_dim", self.expert_hidden_dim),
            ("seq_len", self.seq_len),
        ];
        for (name, v) in dims {
            if v < 1 {
                return Err(BuildError::InvalidSpec(format!("{name} must be >= 1")));
            }
        }
        if self.experts_per_token > self.experts_per_layer {
            return Err(BuildError::InvalidSpec(format!(
                "experts_per_token {} exceeds experts_per_layer {}",
                self.experts_per_token, self.experts_per_layer
            )));
        }
        if !self.hidden_dim.is_multiple_of(self.num_heads) {
            return Err(BuildError::InvalidSpec(
                "hidden_dim must be divisible by num_heads".into(),
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> u64 {
        self.hidden_dim / self.num_heads
    }
}

/// Multi-invocation composition modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnrollMode {
    /// One copy per generated token; copy `i` runs at sequence length
    /// `prompt_len + i - 1`.
    Autoregressive { prompt_len: u64, gen_len: u64 },
    /// Iterative denoising: each step re-reads the previous step's tokens.
    Diffusion { steps: u64, seq_len: u64 },
    /// The final hidden state is fed back as the next input embedding,
    /// bypassing tokens entirely.
    ContinuousCot { latent_steps: u64, seq_len: u64 },
    /// Read-process-write against persistent storage. Without an invocation
    /// bound the composition has no finite circuit.
    BlackboxMemory {
        invocations: Option<u64>,
        seq_len: u64,
    },
}

/// Composition of copies of a backing transformer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnrollSpec {
    pub base: DenseTransformerSpec,
    pub mode: UnrollMode,
    /// Whether the values passed between copies are interpretable cuts.
    pub intermediate_interpretable: bool,
}

impl UnrollSpec {
    pub fn validate(&self) -> Result<(), BuildError> {
        self.base.validate()?;
        match &self.mode {
            UnrollMode::Autoregressive {
                prompt_len,
                gen_len,
            } => {
                if *prompt_len < 1 {
                    return Err(BuildError::InvalidSpec("prompt_len must be >= 1".into()));
                }
                if *gen_len < 1 {
                    return Err(BuildError::InvalidSpec("gen_len must be >= 1".into()));
                }
            }
            UnrollMode::Diffusion { steps, seq_len } => {
                if *steps < 1 || *seq_len < 1 {
                    return Err(BuildError::InvalidSpec(
                        "diffusion needs steps >= 1 and seq_len >= 1".into(),
                    ));
                }
            }
            UnrollMode::ContinuousCot {
                latent_steps,
                seq_len,
            } => {
                if *latent_steps < 1 || *seq_len < 1 {
                    return Err(BuildError::InvalidSpec(
                        "continuous cot needs latent_steps >= 1 and seq_len >= 1".into(),
                    ));
                }
            }
            UnrollMode::BlackboxMemory {
                invocations,
                seq_len,
            } => {
                if *seq_len < 1 {
                    return Err(BuildError::InvalidSpec("seq_len must be >= 1".into()));
                }
                if let Some(k) = invocations {
                    if *k < 1 {
                        return Err(BuildError::InvalidSpec("invocations must be >= 1".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Emit a balanced reduction over a single tensor wire (analysis form).
/// Arity below two degenerates to wiring.
pub(crate) fn tensor_reduce(
    graph: &mut CircuitGraph,
    op: ReduceOp,
    arity: u64,
    wire: GateId,
    label: String,
) -> GateId {
    if arity < 2 {
        graph
            .add_gate(GateKind::Wiring, vec![wire], false, Some(label))
            .expect("wiring over an existing wire is valid")
    } else {
        graph
            .add_gate(GateKind::reduce(op, arity), vec![wire], false, Some(label))
            .expect("tensor reduce over an existing wire is valid")
    }
}

/// Emit an analysis-form linear map: one rank of parallel products against a
/// weight constant, then a balanced sum over `d_in`.
pub(crate) fn tensor_linear(
    graph: &mut CircuitGraph,
    input: GateId,
    d_in: u64,
    label: &str,
) -> GateId {
    let w = graph.add_constant(format!("{label}.w"));
    let prod = graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![input, w],
            false,
            Some(format!("{label}.mul")),
        )
        .expect("product gate is valid");
    tensor_reduce(graph, ReduceOp::Add, d_in, prod, format!("{label}.sum"))
}

/// Emit an analysis-form RMSNorm over dimension `d`.
pub(crate) fn tensor_rmsnorm(
    graph: &mut CircuitGraph,
    input: GateId,
    d: u64,
    label: &str,
) -> GateId {
    let sq = graph
        .add_gate(
            GateKind::analytic1("square"),
            vec![input],
            false,
            Some(format!("{label}.square")),
        )
        .unwrap();
    let sum = tensor_reduce(graph, ReduceOp::Add, d, sq, format!("{label}.sum"));
    let dim_const = graph.add_constant(format!("{label}.dim"));
    let mean = graph
        .add_gate(
            GateKind::analytic2("div"),
            vec![sum, dim_const],
            false,
            Some(format!("{label}.mean")),
        )
        .unwrap();
    let eps = graph.add_constant(format!("{label}.eps"));
    let stable = graph
        .add_gate(
            GateKind::analytic2("add"),
            vec![mean, eps],
            false,
            Some(format!("{label}.add_eps")),
        )
        .unwrap();
    let rs = graph
        .add_gate(
            GateKind::analytic1("rsqrt"),
            vec![stable],
            false,
            Some(format!("{label}.rsqrt")),
        )
        .unwrap();
    let normed = graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![input, rs],
            false,
            Some(format!("{label}.normalize")),
        )
        .unwrap();
    let scale = graph.add_constant(format!("{label}.scale"));
    graph
        .add_gate(
            GateKind::analytic2("mul"),
            vec![normed, scale],
            false,
            Some(format!("{label}.rescale")),
        )
        .unwrap()
}
