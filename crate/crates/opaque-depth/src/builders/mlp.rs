//! Scalar-form MLP builder.

use crate::graph::{CircuitGraph, GateId, GateKind, ReduceOp};

use super::{BuildError, MlpSpec};

/// Build an MLP as a scalar circuit: per neuron, one product gate per fan-in
/// wire, a balanced sum over the fan-in, and the hidden-layer activation.
/// Only the inputs and outputs are interpretable.
///
/// With `folded` set, biases join the dot-product sum as an extra operand;
/// otherwise they cost a separate addition after it (the pattern
/// [`fold_biases`](super::fold_biases) rewrites away).
pub fn build_mlp(spec: &MlpSpec, folded: bool) -> Result<CircuitGraph, BuildError> {
    spec.validate()?;
    let mut graph = CircuitGraph::new();

    let mut current: Vec<GateId> = (0..spec.input_dim)
        .map(|i| graph.add_input(format!("input.x{i}")))
        .collect();

    let activation = match spec.activation.as_str() {
        "linear" | "identity" | "" => None,
        name => Some(name.to_string()),
    };

    for (layer, &width) in spec.hidden_dims.iter().enumerate() {
        let stage = format!("hidden{}", layer + 1);
        current = emit_layer(&mut graph, &current, width, spec.bias, folded, &stage)?;
        if let Some(name) = &activation {
            current = current
                .iter()
                .enumerate()
                .map(|(j, &pre)| {
                    graph
                        .add_gate(
                            GateKind::analytic1(name),
                            vec![pre],
                            false,
                            Some(format!("{stage}.n{j}.act")),
                        )
                        .map_err(BuildError::from)
                })
                .collect::<Result<_, _>>()?;
        }
    }

    let outputs = emit_layer(
        &mut graph,
        &current,
        spec.output_dim,
        spec.bias,
        folded,
        "output",
    )?;
    for id in outputs {
        graph.mark_output(id)?;
    }
    Ok(graph)
}

/// One linear layer: `width` neurons over the `prev` wires.
fn emit_layer(
    graph: &mut CircuitGraph,
    prev: &[GateId],
    width: u64,
    bias: bool,
    folded: bool,
    stage: &str,
) -> Result<Vec<GateId>, BuildError> {
    let fan_in = prev.len() as u64;
    let mut out = Vec::with_capacity(width as usize);
    for j in 0..width {
        let mut products = Vec::with_capacity(prev.len());
        for (k, &src) in prev.iter().enumerate() {
            let w = graph.add_constant(format!("{stage}.n{j}.w{k}"));
            let p = graph.add_gate(
                GateKind::analytic2("mul"),
                vec![src, w],
                false,
                Some(format!("{stage}.n{j}.mul{k}")),
            )?;
            products.push(p);
        }
        let pre = if bias && folded {
            let b = graph.add_constant(format!("{stage}.n{j}.b"));
            products.push(b);
            // fan_in + 1 operands; always at least two.
            graph.add_gate(
                GateKind::reduce(ReduceOp::Add, fan_in + 1),
                products,
                false,
                Some(format!("{stage}.n{j}.sum")),
            )?
        } else {
            let summed = if fan_in >= 2 {
                graph.add_gate(
                    GateKind::reduce(ReduceOp::Add, fan_in),
                    products,
                    false,
                    Some(format!("{stage}.n{j}.sum")),
                )?
            } else {
                graph.add_gate(
                    GateKind::Wiring,
                    products,
                    false,
                    Some(format!("{stage}.n{j}.sum")),
                )?
            };
            if bias {
                let b = graph.add_constant(format!("{stage}.n{j}.b"));
                graph.add_gate(
                    GateKind::analytic2("add"),
                    vec![summed, b],
                    false,
                    Some(format!("{stage}.n{j}.bias_add")),
                )?
            } else {
                summed
            }
        };
        out.push(pre);
    }
    Ok(out)
}
