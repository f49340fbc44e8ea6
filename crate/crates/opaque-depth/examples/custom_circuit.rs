//! Build a circuit by hand, measure its opaque serial depth, and execute it.
//!
//! ```bash
//! cargo run -p opaque-depth --example custom_circuit
//! ```

use std::collections::BTreeMap;

use opaque_depth::depth::{node_depth, opaque_serial_depth};
use opaque_depth::graph::{CircuitGraph, GateKind, ReduceOp};
use opaque_depth::oracle::{evaluate, longest_path_oracle};

fn main() {
    // y = relu(x0·w + x1·w + x2·w + x3·w), with the intermediate sum marked
    // interpretable (imagine it being logged somewhere a person can read).
    let mut graph = CircuitGraph::new();
    let xs: Vec<_> = (0..4)
        .map(|i| graph.add_input(format!("input.x{i}")))
        .collect();
    let w = graph.add_constant("weights.w");

    let products: Vec<_> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            graph
                .add_gate(
                    GateKind::analytic2("mul"),
                    vec![x, w],
                    false,
                    Some(format!("scale.mul{i}")),
                )
                .unwrap()
        })
        .collect();
    let sum = graph
        .add_gate(
            GateKind::reduce(ReduceOp::Add, 4),
            products,
            true, // interpretable: a visible bottleneck
            Some("reduce.sum".to_string()),
        )
        .unwrap();
    let out = graph
        .add_gate(
            GateKind::analytic1("relu"),
            vec![sum],
            false,
            Some("activate.relu".to_string()),
        )
        .unwrap();
    graph.mark_output(out).unwrap();

    assert!(graph.validate().is_empty());

    let report = opaque_serial_depth(&graph).unwrap();
    println!("gates: {}", graph.gate_count());
    println!("opaque serial depth: {}", report.opaque_serial_depth);
    println!(
        "  producing the visible sum costs {} (products 1 + balanced 4-way sum 2)",
        node_depth(&graph, sum, None).unwrap()
    );
    println!(
        "  the relu after the cut costs {}",
        report.per_node_depth[&out]
    );
    println!(
        "independent longest-path oracle agrees: {}",
        longest_path_oracle(&graph).unwrap()
    );

    let constants: BTreeMap<_, _> = [(w, 0.5)].into_iter().collect();
    let outputs = evaluate(&graph, &[1.0, 2.0, 3.0, -10.0], &constants).unwrap();
    println!("evaluate([1, 2, 3, -10]) with w = 0.5 -> {outputs:?}");
}
