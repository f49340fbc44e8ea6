//! Seeded random-graph generation for the acceptance suite.
//!
//! Graphs are built through the ordinary `add_gate` API: inputs and
//! constants first, then a mix of gate kinds over randomly chosen earlier
//! wires. Every gate nothing consumes is designated an output, so all
//! hidden computation flows somewhere observable (as in any real forward
//! pass).

use std::collections::BTreeSet;

use opaque_depth::graph::{CircuitGraph, GateId, GateKind, ReduceOp};
use opaque_depth::rng::SplitMix64;

const OPS: [ReduceOp; 4] = [ReduceOp::Add, ReduceOp::Mul, ReduceOp::Max, ReduceOp::Min];
const UNARY: [&str; 5] = ["relu", "exp", "tanh", "square", "sigmoid"];
const BINARY: [&str; 3] = ["add", "sub", "mul"];

/// Random well-formed circuit with up to `max_gates` gates.
///
/// `evaluable` restricts the emission to scalar-form gates the numeric
/// oracle can execute; otherwise analysis-form reduces and symbolic lookups
/// may appear too.
pub fn random_graph(rng: &mut SplitMix64, max_gates: u64, evaluable: bool) -> CircuitGraph {
    let mut graph = CircuitGraph::new();
    let n_inputs = 1 + rng.next_below(3);
    for i in 0..n_inputs {
        graph.add_input(format!("input.x{i}"));
    }
    for i in 0..rng.next_below(3) {
        graph.add_constant(format!("weights.c{i}"));
    }

    fn pick(rng: &mut SplitMix64, existing: u64) -> GateId {
        GateId(rng.next_below(existing) as u32)
    }

    let body = rng.next_below(max_gates.saturating_sub(graph.gate_count() as u64).max(1)) + 1;
    for i in 0..body {
        let existing = graph.gate_count() as u64;
        let interpretable = rng.next_below(10) == 0;
        let label = Some(format!("body.g{i}"));
        match rng.next_below(if evaluable { 4 } else { 6 }) {
            0 => {
                let name = UNARY[rng.next_below(UNARY.len() as u64) as usize];
                let operand = pick(rng, existing);
                graph
                    .add_gate(
                        GateKind::analytic1(name),
                        vec![operand],
                        interpretable,
                        label,
                    )
                    .unwrap();
            }
            1 => {
                let name = BINARY[rng.next_below(BINARY.len() as u64) as usize];
                let operands = vec![pick(rng, existing), pick(rng, existing)];
                graph
                    .add_gate(GateKind::analytic2(name), operands, interpretable, label)
                    .unwrap();
            }
            2 => {
                let op = OPS[rng.next_below(OPS.len() as u64) as usize];
                let arity = 2 + rng.next_below(4);
                let operands: Vec<GateId> = (0..arity).map(|_| pick(rng, existing)).collect();
                graph
                    .add_gate(GateKind::reduce(op, arity), operands, interpretable, label)
                    .unwrap();
            }
            3 => {
                let operand = pick(rng, existing);
                graph
                    .add_gate(GateKind::Wiring, vec![operand], interpretable, label)
                    .unwrap();
            }
            4 => {
                // Analysis-form reduce: declared arity larger than the wire
                // count.
                let op = OPS[rng.next_below(OPS.len() as u64) as usize];
                let arity = 2 + rng.next_below(1000);
                let operand = pick(rng, existing);
                graph
                    .add_gate(
                        GateKind::reduce(op, arity),
                        vec![operand],
                        interpretable,
                        label,
                    )
                    .unwrap();
            }
            _ => {
                let table_size = 1 + rng.next_below(500);
                let selector = pick(rng, existing);
                graph
                    .add_gate(
                        GateKind::Lookup { table_size },
                        vec![selector],
                        interpretable,
                        label,
                    )
                    .unwrap();
            }
        }
    }

    // Everything unconsumed becomes an output.
    let mut consumed = vec![false; graph.gate_count()];
    for gate in graph.gates() {
        for input in &gate.inputs {
            consumed[input.index()] = true;
        }
    }
    let dangling: Vec<GateId> = graph
        .gates()
        .filter(|g| !consumed[g.id.index()])
        .map(|g| g.id)
        .collect();
    for id in dangling {
        graph.mark_output(id).unwrap();
    }
    graph
}

/// The graph's own interpretable set, as an explicit id set.
pub fn interpretable_set(graph: &CircuitGraph) -> BTreeSet<GateId> {
    graph
        .gates()
        .filter(|g| g.interpretable)
        .map(|g| g.id)
        .collect()
}
