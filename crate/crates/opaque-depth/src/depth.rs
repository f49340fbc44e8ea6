//! Opaque-serial-depth engine.
//!
//! Measures the longest weighted path of hidden computation between
//! interpretable bottlenecks in a [`CircuitGraph`]. Each gate contributes its
//! immediate depth (see [`immediate_depth`]); interpretable nodes act as
//! depth-0 cuts for everything downstream of them.
//!
//! Two per-node quantities matter:
//!
//! - the *cut depth* of a node is zero when the node is interpretable and
//!   otherwise its immediate depth plus the maximum cut depth of its inputs —
//!   the termination rule of the recursive depth search;
//! - the *node depth* (what [`node_depth`] and the [`DepthReport`] expose)
//!   measures the node as a sink: its own immediate depth plus the maximum
//!   cut depth over its inputs, regardless of the node's own flag. For an
//!   interpretable node this is the depth of the hidden function that
//!   produces its value from the nearest interpretable ancestors.
//!
//! The overall opaque serial depth is the maximum node depth over all output
//! gates and all interpretable nodes. Treating the queried node as a sink
//! (rather than applying the cut rule to it) is what makes the measurement
//! non-trivial: outputs are themselves interpretable, and cutting at the
//! query root would make every answer zero.
//!
//! Everything here runs over the DAG in topological order with explicit
//! tables — no call-stack recursion — so graphs with tens of thousands of
//! gates are fine.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{CircuitGraph, GateId, GateKind, GraphError};

/// Depth contributed by a single gate. See [`GateKind::immediate_depth`].
pub fn immediate_depth(kind: &GateKind) -> u64 {
    kind.immediate_depth()
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum DepthError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph fails validation: {0}")]
    InvalidGraph(String),
}

/// Result of an opaque-serial-depth computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthReport {
    /// Maximum node depth over output gates and interpretable nodes.
    pub opaque_serial_depth: u64,
    /// Sink-style depth of every gate in the graph.
    pub per_node_depth: BTreeMap<GateId, u64>,
    /// A maximal path, listed from its terminating leaf (an interpretable
    /// node, input, or constant) to the maximizing node.
    pub critical_path: Vec<GateId>,
    /// Gate at which the maximum is attained (smallest id on ties).
    pub source_node: GateId,
}

/// Internal solver state shared by the public entry points.
struct DepthTables {
    /// Cut depth per gate (0 at interpretable nodes).
    cut: Vec<u64>,
    /// Sink depth per gate (own immediate depth always counted).
    sink: Vec<u64>,
}

fn effective_interpretable(graph: &CircuitGraph, over: Option<&BTreeSet<GateId>>) -> Vec<bool> {
    match over {
        Some(set) => (0..graph.gate_count())
            .map(|i| set.contains(&GateId(i as u32)))
            .collect(),
        None => graph.gates().map(|g| g.interpretable).collect(),
    }
}

fn solve(graph: &CircuitGraph, interpretable: &[bool]) -> Result<DepthTables, DepthError> {
    let order = graph.topological_order()?;
    let n = graph.gate_count();
    let mut cut = vec![0u64; n];
    let mut sink = vec![0u64; n];
    for id in order {
        let gate = graph.gate(id)?;
        let own = gate.kind.immediate_depth();
        let deepest_input = gate
            .inputs
            .iter()
            .map(|c| cut[c.index()])
            .max()
            .unwrap_or(0);
        sink[id.index()] = own + deepest_input;
        cut[id.index()] = if interpretable[id.index()] {
            0
        } else {
            sink[id.index()]
        };
    }
    Ok(DepthTables { cut, sink })
}

/// Depth of the hidden computation producing `node`, measured from the
/// nearest interpretable cuts (or circuit sources) feeding it.
///
/// `interpretable_override`, when given, replaces the graph's own
/// interpretable flags for this query. Interpretable leaves (inputs,
/// constants) report 0; an interpretable node with inputs reports the depth
/// of the function that computes it.
pub fn node_depth(
    graph: &CircuitGraph,
    node: GateId,
    interpretable_override: Option<&BTreeSet<GateId>>,
) -> Result<u64, DepthError> {
    graph.gate(node)?;
    let flags = effective_interpretable(graph, interpretable_override);
    let tables = solve(graph, &flags)?;
    Ok(tables.sink[node.index()])
}

/// Full analysis with the graph's own interpretable flags.
///
/// The graph must validate cleanly; structural violations are reported as
/// [`DepthError::InvalidGraph`].
pub fn opaque_serial_depth(graph: &CircuitGraph) -> Result<DepthReport, DepthError> {
    let violations = graph.validate();
    if !violations.is_empty() {
        let summary = violations
            .iter()
            .take(3)
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(DepthError::InvalidGraph(format!(
            "{} violation(s): {summary}",
            violations.len()
        )));
    }
    opaque_serial_depth_with(graph, None)
}

/// Full analysis with an explicit interpretable set (replacing the per-gate
/// flags). Skips validation; intended for experiments on already-validated
/// graphs.
pub fn opaque_serial_depth_with(
    graph: &CircuitGraph,
    interpretable_override: Option<&BTreeSet<GateId>>,
) -> Result<DepthReport, DepthError> {
    let flags = effective_interpretable(graph, interpretable_override);
    let tables = solve(graph, &flags)?;

    // Candidates: every output gate and every interpretable node.
    let mut candidates: BTreeSet<GateId> = graph.output_ids().iter().copied().collect();
    for (i, &f) in flags.iter().enumerate() {
        if f {
            candidates.insert(GateId(i as u32));
        }
    }

    let mut best: Option<(u64, GateId)> = None;
    for &id in &candidates {
        let d = tables.sink[id.index()];
        match best {
            Some((bd, _)) if bd >= d => {}
            _ => best = Some((d, id)),
        }
    }
    let (depth, source) = best.unwrap_or((0, GateId(0)));

    let critical_path = if graph.is_empty() {
        Vec::new()
    } else {
        reconstruct_path(graph, &tables, &flags, source)
    };

    let per_node_depth = graph
        .gates()
        .map(|g| (g.id, tables.sink[g.id.index()]))
        .collect();

    Ok(DepthReport {
        opaque_serial_depth: depth,
        per_node_depth,
        critical_path,
        source_node: source,
    })
}

/// Walk from the maximizing node toward its terminating leaf, always taking
/// the input with the largest cut depth (ties: smallest gate id). The path
/// is returned leaf-first.
fn reconstruct_path(
    graph: &CircuitGraph,
    tables: &DepthTables,
    flags: &[bool],
    start: GateId,
) -> Vec<GateId> {
    let mut path = vec![start];
    let mut current = start;
    while let Ok(gate) = graph.gate(current) {
        if gate.inputs.is_empty() {
            break;
        }
        if current != start && flags[current.index()] {
            break;
        }
        let mut best = gate.inputs[0];
        for &c in &gate.inputs[1..] {
            let (bc, cc) = (tables.cut[best.index()], tables.cut[c.index()]);
            if cc > bc || (cc == bc && c < best) {
                best = c;
            }
        }
        path.push(best);
        current = best;
    }
    path.reverse();
    path
}

/// Longest weighted path from any gate in `sources` to `sink`, treating the
/// source gates as depth-0 leaves and counting the sink's own immediate
/// depth. Returns 0 when the sink is unreachable from every source.
///
/// Interpretable flags play no role here; this is the raw per-bottleneck
/// measurement between explicit endpoints.
pub fn depth_between(
    graph: &CircuitGraph,
    sources: &BTreeSet<GateId>,
    sink: GateId,
) -> Result<u64, DepthError> {
    graph.gate(sink)?;
    for &s in sources {
        graph.gate(s)?;
    }
    if sources.contains(&sink) {
        return Ok(0);
    }
    let order = graph.topological_order()?;
    let n = graph.gate_count();
    let mut reach = vec![false; n];
    let mut dist = vec![0u64; n];
    for &s in sources {
        reach[s.index()] = true;
    }
    for id in order {
        if sources.contains(&id) {
            continue;
        }
        let gate = graph.gate(id)?;
        let mut best: Option<u64> = None;
        for &c in &gate.inputs {
            if reach[c.index()] {
                let via = dist[c.index()];
                best = Some(best.map_or(via, |b: u64| b.max(via)));
            }
        }
        if let Some(b) = best {
            reach[id.index()] = true;
            dist[id.index()] = b + gate.kind.immediate_depth();
        }
    }
    Ok(if reach[sink.index()] {
        dist[sink.index()]
    } else {
        0
    })
}
