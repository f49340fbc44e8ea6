//! Bias-folding rewrite.
//!
//! The pattern `sum(products...) + bias` costs `ceil(log2 n) + 1`; widening
//! the sum to take the bias as an extra operand costs `ceil(log2 (n+1))`,
//! which is never more and usually one less. The rewrite mirrors the trick
//! of appending an always-one feature so its weight acts as the bias.

use crate::graph::{CircuitGraph, Gate, GateKind, ReduceOp};

/// Rewrite every `add`-reduce followed by a single constant addition into a
/// widened reduce with the constant as an extra operand. Gate ids are
/// preserved; the superseded reduce stays in place for its other consumers
/// (or as dead wiring), so a constant assignment for the input graph also
/// drives the output graph. Runs to a fixpoint; the computed function is
/// unchanged and depth never increases.
pub fn fold_biases(graph: &CircuitGraph) -> CircuitGraph {
    let mut gates: Vec<Gate> = graph.gates().cloned().collect();

    loop {
        let mut changed = false;
        for i in 0..gates.len() {
            let (kind_ok, a, b) = match &gates[i].kind {
                GateKind::PiecewiseAnalytic { name, arity: 2 } if name == "add" => {
                    (true, gates[i].inputs[0], gates[i].inputs[1])
                }
                _ => (false, crate::graph::GateId(0), crate::graph::GateId(0)),
            };
            if !kind_ok {
                continue;
            }
            // One operand must be a constant, the other an add-reduce.
            let (reduce_id, bias_id) = if matches!(gates[b.index()].kind, GateKind::Constant) {
                (a, b)
            } else if matches!(gates[a.index()].kind, GateKind::Constant) {
                (b, a)
            } else {
                continue;
            };
            let (arity, scalar_form) = match &gates[reduce_id.index()].kind {
                GateKind::AssociativeReduce {
                    op: ReduceOp::Add,
                    arity,
                } => (
                    *arity,
                    gates[reduce_id.index()].inputs.len() as u64 == *arity,
                ),
                _ => continue,
            };

            let mut inputs = gates[reduce_id.index()].inputs.clone();
            inputs.push(bias_id);
            // In scalar form the widened input list matches the widened
            // arity; in analysis form it stays a short wire list.
            debug_assert!(scalar_form || (inputs.len() as u64) < arity + 1);
            gates[i].kind = GateKind::reduce(ReduceOp::Add, arity + 1);
            gates[i].inputs = inputs;
            changed = true;
        }
        if !changed {
            break;
        }
    }

    CircuitGraph::from_parts(
        gates,
        graph.input_ids().to_vec(),
        graph.output_ids().to_vec(),
    )
}
