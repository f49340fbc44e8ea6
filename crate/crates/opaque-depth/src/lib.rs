//! Static analysis of opaque serial depth for neural-network architectures.
//!
//! A neural network's forward pass is already a real-valued circuit; its
//! depth — the longest input-to-output path, with n-ary reductions costing a
//! balanced `ceil(log2 n)` tree — upper-bounds the serial computation the
//! architecture can perform. Marking nodes whose values are externally
//! interpretable (emitted tokens, diffusion steps) as depth-0 cuts turns
//! this into *opaque* serial depth: the longest stretch of hidden serial
//! computation between places an observer can read.
//!
//! The crate provides:
//!
//! - [`graph`]: the circuit IR (gates, wires, interpretable flags);
//! - [`depth`]: the depth engine (per-node depths, critical paths);
//! - [`formulas`]: a closed-form layer calculus with exact results for the
//!   Gemma 3 family and asymptotic classes for transformer, RNN, continuous
//!   latent chain-of-thought, text-diffusion, and persistent-memory designs;
//! - [`builders`]: parametric circuit builders (MLPs, dense and MoE
//!   transformers, RNN grids, multi-invocation unrollings) plus the
//!   bias-folding rewrite;
//! - [`oracle`]: desk-scale numeric evaluation, equivalence checking, and an
//!   independent longest-path computation;
//! - [`config`] / [`commands`]: the JSON architecture-config schema and the
//!   analyze/sweep/report/path entry points behind the `opaque-depth` binary.
//!
//! Each major capability has a runnable walkthrough:
//!
//! ```bash
//! cargo run -p opaque-depth --example custom_circuit   # build/measure/execute by hand
//! cargo run -p opaque-depth --example mlp_depth        # the worked warm-up network
//! cargo run -p opaque-depth --example gemma_report     # family formulas vs built graphs
//! cargo run -p opaque-depth --example sequence_sweep   # log scaling in sequence length
//! cargo run -p opaque-depth --example bias_folding     # the depth-shrinking rewrite
//! cargo run -p opaque-depth --example moe_vs_dense     # routed vs dense depth budgets
//! cargo run -p opaque-depth --example rnn_scaling      # linear-in-T recurrence
//! cargo run -p opaque-depth --example unrolling        # multi-invocation compositions
//! ```

pub mod builders;
pub mod commands;
pub mod config;
pub mod depth;
pub mod formulas;
pub mod graph;
pub mod math;
pub mod oracle;
pub mod rng;

pub use depth::{depth_between, immediate_depth, node_depth, opaque_serial_depth, DepthReport};
pub use formulas::{DenseTransformerSpec, SymbolicDepth};
pub use graph::{CircuitGraph, Gate, GateId, GateKind, ReduceOp};
