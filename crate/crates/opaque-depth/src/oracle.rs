//! Desk-scale verification oracle.
//!
//! Three independent checks back the main analysis path:
//!
//! - [`evaluate`] runs a scalar-form circuit numerically, so builder outputs
//!   and rewrite passes can be compared against direct reference math;
//! - [`longest_path_oracle`] recomputes the opaque serial depth as a plain
//!   forward longest-weighted-path DP, sharing no traversal code with the
//!   depth engine;
//! - [`equivalence_check`] drives two circuits with the same seeded random
//!   inputs and compares outputs within a tolerance.
//!
//! Random inputs are standard normal from a fixed-seed SplitMix64 stream
//! (see [`crate::rng`]), so trials reproduce exactly.

use std::collections::BTreeMap;

use crate::graph::{CircuitGraph, GateId, GateKind};
use crate::rng::SplitMix64;

/// Gate count above which the oracle refuses to run.
pub const MAX_ORACLE_GATES: usize = 1_000_000;

#[derive(Debug, Clone, thiserror::Error)]
pub enum OracleError {
    #[error("expected {expected} input values, got {got}")]
    InputArityMismatch { expected: usize, got: usize },
    #[error("graphs disagree on interface arity: {0}")]
    InterfaceMismatch(String),
    #[error("constant gate {0} has no assigned value")]
    MissingConstant(GateId),
    #[error("gate {gate}: unsupported analytic function `{name}`")]
    UnsupportedFunction { gate: GateId, name: String },
    #[error("gate {gate} is not evaluable: {reason}")]
    NotEvaluable { gate: GateId, reason: String },
    #[error("lookup selector {value} out of range for table of {table_size}")]
    SelectorOutOfRange { value: f64, table_size: u64 },
    #[error("graph has {0} gates, oracle limit is {MAX_ORACLE_GATES}")]
    TooLarge(usize),
    #[error("graph error: {0}")]
    Graph(#[from] crate::graph::GraphError),
}

fn apply_analytic1(name: &str, x: f64) -> Option<f64> {
    Some(match name {
        "relu" => x.max(0.0),
        // tanh-form gelu; the reference forward pass uses the same form.
        "gelu" => {
            let c = (2.0 / std::f64::consts::PI).sqrt();
            0.5 * x * (1.0 + (c * (x + 0.044715 * x * x * x)).tanh())
        }
        "exp" => x.exp(),
        "rsqrt" => 1.0 / x.sqrt(),
        "sqrt" => x.sqrt(),
        "square" => x * x,
        "tanh" => x.tanh(),
        "sigmoid" => 1.0 / (1.0 + (-x).exp()),
        "neg" => -x,
        "abs" => x.abs(),
        "identity" => x,
        _ => return None,
    })
}

fn apply_analytic2(name: &str, a: f64, b: f64) -> Option<f64> {
    Some(match name {
        "add" => a + b,
        "sub" => a - b,
        "mul" => a * b,
        "div" => a / b,
        // RNN cell combiner: activation of the sum of its two operands.
        "tanh_sum" => (a + b).tanh(),
        _ => return None,
    })
}

/// Evaluate a scalar-form circuit on `inputs`, with every constant gate
/// assigned through `constants`. Returns the output gates' values in
/// designated order.
pub fn evaluate(
    graph: &CircuitGraph,
    inputs: &[f64],
    constants: &BTreeMap<GateId, f64>,
) -> Result<Vec<f64>, OracleError> {
    if graph.gate_count() > MAX_ORACLE_GATES {
        return Err(OracleError::TooLarge(graph.gate_count()));
    }
    if inputs.len() != graph.input_ids().len() {
        return Err(OracleError::InputArityMismatch {
            expected: graph.input_ids().len(),
            got: inputs.len(),
        });
    }

    let input_position: BTreeMap<GateId, usize> = graph
        .input_ids()
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();

    let order = graph.topological_order()?;
    let mut values: Vec<f64> = vec![f64::NAN; graph.gate_count()];

    for id in order {
        let gate = graph.gate(id)?;
        let value = match &gate.kind {
            GateKind::Input => inputs[input_position[&id]],
            GateKind::Constant => *constants.get(&id).ok_or(OracleError::MissingConstant(id))?,
            // Scalar wiring passes its single operand through; multi-input
            // wiring (tensor concat and friends) has no scalar meaning.
            GateKind::Wiring => {
                if gate.inputs.len() == 1 {
                    values[gate.inputs[0].index()]
                } else {
                    return Err(OracleError::NotEvaluable {
                        gate: id,
                        reason: "multi-input wiring has no scalar value".to_string(),
                    });
                }
            }
            GateKind::AssociativeReduce { op, arity } => {
                if gate.inputs.len() as u64 != *arity {
                    return Err(OracleError::NotEvaluable {
                        gate: id,
                        reason: format!(
                            "tensor-form reduce (arity {arity}, {} wires) is analysis-only",
                            gate.inputs.len()
                        ),
                    });
                }
                let mut acc = values[gate.inputs[0].index()];
                for c in &gate.inputs[1..] {
                    acc = op.apply(acc, values[c.index()]);
                }
                acc
            }
            GateKind::PiecewiseAnalytic { name, arity } => {
                let result = if *arity == 1 {
                    apply_analytic1(name, values[gate.inputs[0].index()])
                } else {
                    apply_analytic2(
                        name,
                        values[gate.inputs[0].index()],
                        values[gate.inputs[1].index()],
                    )
                };
                result.ok_or_else(|| OracleError::UnsupportedFunction {
                    gate: id,
                    name: name.clone(),
                })?
            }
            GateKind::Lookup { table_size } => {
                if gate.inputs.len() as u64 != 1 + *table_size {
                    return Err(OracleError::NotEvaluable {
                        gate: id,
                        reason: "lookup without explicit entries is analysis-only".to_string(),
                    });
                }
                let sel = values[gate.inputs[0].index()];
                let idx = sel.round();
                if !(0.0..(*table_size as f64)).contains(&idx) || !idx.is_finite() {
                    return Err(OracleError::SelectorOutOfRange {
                        value: sel,
                        table_size: *table_size,
                    });
                }
                values[gate.inputs[1 + idx as usize].index()]
            }
        };
        values[id.index()] = value;
    }

    Ok(graph
        .output_ids()
        .iter()
        .map(|id| values[id.index()])
        .collect())
}

/// Exact longest weighted path between interpretable cuts, computed as a
/// forward DP over an independently derived topological order. Second
/// opinion on the depth engine; shares no traversal code with it.
pub fn longest_path_oracle(graph: &CircuitGraph) -> Result<u64, OracleError> {
    let n = graph.gate_count();
    if n > MAX_ORACLE_GATES {
        return Err(OracleError::TooLarge(n));
    }
    if n == 0 {
        return Ok(0);
    }

    // Local Kahn queue (plain FIFO; order does not matter for the DP).
    let mut remaining: Vec<usize> = vec![0; n];
    let mut successors: Vec<Vec<u32>> = vec![Vec::new(); n];
    for gate in graph.gates() {
        remaining[gate.id.index()] = gate.inputs.len();
        for &input in &gate.inputs {
            if !graph.contains(input) {
                return Err(OracleError::Graph(crate::graph::GraphError::UnknownInput(
                    input,
                )));
            }
            successors[input.index()].push(gate.id.0);
        }
    }
    let mut queue: std::collections::VecDeque<usize> =
        (0..n).filter(|&i| remaining[i] == 0).collect();

    let interpretable: Vec<bool> = graph.gates().map(|g| g.interpretable).collect();
    // longest[v]: longest path ending at v, counting v's own weight, with
    // interpretable predecessors contributing 0.
    let mut longest = vec![0u64; n];
    let mut processed = 0usize;
    while let Some(i) = queue.pop_front() {
        processed += 1;
        let gate = graph.gate(GateId(i as u32))?;
        let mut from_inputs = 0u64;
        for &c in &gate.inputs {
            if !interpretable[c.index()] {
                from_inputs = from_inputs.max(longest[c.index()]);
            }
        }
        longest[i] = from_inputs + gate.kind.immediate_depth();
        for &s in &successors[i] {
            remaining[s as usize] -= 1;
            if remaining[s as usize] == 0 {
                queue.push_back(s as usize);
            }
        }
    }
    if processed != n {
        return Err(OracleError::Graph(crate::graph::GraphError::Cycle));
    }

    let mut best = 0u64;
    for gate in graph.gates() {
        if gate.interpretable || graph.output_ids().contains(&gate.id) {
            best = best.max(longest[gate.id.index()]);
        }
    }
    Ok(best)
}

/// Outcome of an [`equivalence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub pass: bool,
    pub max_deviation: f64,
    pub trials: u32,
}

/// Drive both graphs with the same seeded standard-normal inputs and compare
/// outputs. The two graphs must agree on input/output arity, and `constants`
/// is a shared id-keyed assignment (rewrite passes keep gate ids stable, so
/// one map serves both sides).
pub fn equivalence_check(
    graph_a: &CircuitGraph,
    graph_b: &CircuitGraph,
    constants_a: &BTreeMap<GateId, f64>,
    constants_b: &BTreeMap<GateId, f64>,
    trials: u32,
    tolerance: f64,
    seed: u64,
) -> Result<EquivalenceReport, OracleError> {
    if graph_a.input_ids().len() != graph_b.input_ids().len() {
        return Err(OracleError::InterfaceMismatch(format!(
            "{} vs {} inputs",
            graph_a.input_ids().len(),
            graph_b.input_ids().len()
        )));
    }
    if graph_a.output_ids().len() != graph_b.output_ids().len() {
        return Err(OracleError::InterfaceMismatch(format!(
            "{} vs {} outputs",
            graph_a.output_ids().len(),
            graph_b.output_ids().len()
        )));
    }

    let mut rng = SplitMix64::new(seed);
    let mut max_deviation = 0.0f64;
    for _ in 0..trials {
        let inputs: Vec<f64> = (0..graph_a.input_ids().len())
            .map(|_| rng.next_normal())
            .collect();
        let out_a = evaluate(graph_a, &inputs, constants_a)?;
        let out_b = evaluate(graph_b, &inputs, constants_b)?;
        for (a, b) in out_a.iter().zip(&out_b) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    Ok(EquivalenceReport {
        pass: max_deviation <= tolerance,
        max_deviation,
        trials,
    })
}

/// Seeded constant assignment: every constant gate, in id order, receives an
/// independent standard-normal draw.
pub fn seeded_constants(graph: &CircuitGraph, seed: u64) -> BTreeMap<GateId, f64> {
    let mut rng = SplitMix64::new(seed);
    graph
        .gates()
        .filter(|g| matches!(g.kind, GateKind::Constant))
        .map(|g| (g.id, rng.next_normal()))
        .collect()
}
