//! Recurrent-stack builder (analysis form).
//!
//! An `L x T` grid of cells. Cell `(l, t)` consumes the cell below it
//! (layer `l-1`, same step) and the cell to its left (same layer, previous
//! step). Hidden states are not interpretable, so opaque paths run both up
//! and right and depth grows linearly with sequence length — the contrast
//! with attention's logarithmic `T` dependence.
//!
//! Cell layout: a two-operand activation combines the below- and
//! left-inputs, then two stacked linear maps over `dim` produce the new
//! state:
//!
//! ```text
//! h[l][t] = W_out · ( W_in · act2( h[l-1][t], h[l][t-1] ) )
//! ```
//!
//! Both inputs traverse the full pipeline, so every grid step — up or
//! right — costs one whole cell: `1 + 2·(1 + log D)`. The longest
//! staircase through the grid visits `L + T - 1` cells, giving depth
//! exactly `(L + T - 1) · cell` — linear in the sequence length.

use crate::graph::{CircuitGraph, GateId, GateKind};

use super::{tensor_linear, BuildError};

/// Build the grid. Sequence inputs are interpretable; the initial hidden
/// states are constants; hidden cells are opaque; the top-right cell is the
/// designated output.
pub fn build_rnn_stack(layers: u64, dim: u64, seq_len: u64) -> Result<CircuitGraph, BuildError> {
    if layers < 1 || dim < 1 || seq_len < 1 {
        return Err(BuildError::InvalidSpec(
            "rnn needs layers, dim, seq_len >= 1".into(),
        ));
    }
    let mut graph = CircuitGraph::new();

    let inputs: Vec<GateId> = (0..seq_len)
        .map(|t| graph.add_input(format!("input.x{t}")))
        .collect();

    // left[l] holds cell (l, t-1) while sweeping t.
    let mut left: Vec<GateId> = (0..layers)
        .map(|l| graph.add_constant(format!("cells.init.l{l}")))
        .collect();

    let mut top = None;
    for t in 0..seq_len {
        let mut below = inputs[t as usize];
        for l in 0..layers {
            let label = format!("cells.l{l}.t{t}");
            let combined = graph
                .add_gate(
                    GateKind::analytic2("tanh_sum"),
                    vec![below, left[l as usize]],
                    false,
                    Some(format!("{label}.combine")),
                )
                .unwrap();
            let projected = tensor_linear(&mut graph, combined, dim, &format!("{label}.in_proj"));
            let state = tensor_linear(&mut graph, projected, dim, &format!("{label}.out_proj"));
            left[l as usize] = state;
            below = state;
        }
        top = Some(below);
    }

    graph.mark_output(top.expect("seq_len >= 1"))?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::opaque_serial_depth;
    use crate::formulas::{rnn_cell_depth, rnn_grid_depth};

    #[test]
    fn single_cell_depth_puts_both_linears_on_the_path() {
        for dim in [1u64, 3, 64, 100] {
            let graph = build_rnn_stack(1, dim, 1).unwrap();
            assert!(graph.validate().is_empty());
            let depth = opaque_serial_depth(&graph).unwrap().opaque_serial_depth;
            assert_eq!(depth, rnn_cell_depth(dim), "dim = {dim}");
        }
    }

    /// Extending the sequence by one token adds exactly one cell's depth.
    #[test]
    fn depth_is_affine_in_sequence_length() {
        let (layers, dim) = (4u64, 64u64);
        let mut prev = None;
        for t in 1..=12u64 {
            let graph = build_rnn_stack(layers, dim, t).unwrap();
            let depth = opaque_serial_depth(&graph).unwrap().opaque_serial_depth;
            assert_eq!(depth, rnn_grid_depth(layers, dim, t));
            if let Some(p) = prev {
                assert_eq!(depth - p, rnn_cell_depth(dim));
            }
            prev = Some(depth);
        }
    }

    #[test]
    fn marking_a_chain_cell_interpretable_strictly_decreases_depth() {
        // A single-layer grid is one chain: every cell sits on the unique
        // critical path, so any extra cut shortens it.
        let mut graph = build_rnn_stack(1, 8, 6).unwrap();
        let baseline = opaque_serial_depth(&graph).unwrap().opaque_serial_depth;
        let mid_cell = graph
            .gates()
            .find(|g| g.label.as_deref() == Some("cells.l0.t3.out_proj.sum"))
            .unwrap()
            .id;
        graph.mark_interpretable(mid_cell).unwrap();
        let cut = opaque_serial_depth(&graph).unwrap().opaque_serial_depth;
        assert!(cut < baseline, "cut {cut} vs baseline {baseline}");
    }
}
