//! Real-valued circuit intermediate representation.
//!
//! A [`CircuitGraph`] is a DAG of [`Gate`]s. Each wire carries a single real
//! number (scalar form) or stands in for a whole tensor (analysis form; see
//! the builders). Gates are drawn from a small permissible set:
//!
//! - n-ary reductions by an associative binary operation (add/mul/max/min),
//!   computable as a balanced tree of depth `ceil(log2 n)`;
//! - piecewise-analytic functions of at most two inputs, depth 1;
//! - table lookups (multiplexers) over `V` stored values, depth `ceil(log2 V)`;
//! - wiring (reshape/transpose/slice/concat/broadcast), inputs, and trained
//!   constants, all depth 0.
//!
//! Gates carry an `interpretable` flag: the depth engine treats interpretable
//! nodes as cuts, measuring only the serial computation hidden between them.
//! Overall circuit inputs and outputs are always interpretable.
//!
//! Construction through [`CircuitGraph::add_gate`] is acyclic by definition
//! (a gate may only reference gates that already exist). Graphs assembled
//! from raw parts can be malformed; [`CircuitGraph::validate`] reports every
//! violation instead of panicking.

use std::collections::VecDeque;
use std::fmt;

use crate::math::ceil_log2;

/// Identifier of a gate inside one [`CircuitGraph`].
///
/// Ids are dense indices assigned in insertion order, so insertion order is
/// a topological order for graphs built through `add_gate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GateId(pub u32);

impl GateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// Associative binary operations allowed in reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReduceOp {
    Add,
    Mul,
    Max,
    Min,
}

impl ReduceOp {
    pub fn name(self) -> &'static str {
        match self {
            ReduceOp::Add => "add",
            ReduceOp::Mul => "mul",
            ReduceOp::Max => "max",
            ReduceOp::Min => "min",
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            ReduceOp::Add => a + b,
            ReduceOp::Mul => a * b,
            ReduceOp::Max => a.max(b),
            ReduceOp::Min => a.min(b),
        }
    }
}

/// The operation computed by a gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateKind {
    /// Reduction of `arity` values by an associative binary operation.
    ///
    /// In scalar form the gate lists all `arity` operand wires. In analysis
    /// form a single tensor wire stands for the reduced axis and the input
    /// list is shorter than `arity`; the declared arity alone determines
    /// depth.
    AssociativeReduce { op: ReduceOp, arity: u64 },
    /// Piecewise-analytic function of one or two real inputs (relu, gelu,
    /// exp, rsqrt, elementwise add/sub/mul/div, ...). Depth 1: the cost of
    /// a fixed-precision Taylor evaluation is absorbed into the gate.
    PiecewiseAnalytic { name: String, arity: u8 },
    /// Multiplexer selecting one of `table_size` stored values. The first
    /// input is the selector; the stored table may be left symbolic, carried
    /// as one tensor wire, or listed entry by entry (scalar form).
    Lookup { table_size: u64 },
    /// Reshape/transpose/slice/concat/broadcast. Depth 0.
    Wiring,
    /// Designated circuit input wire.
    Input,
    /// Trained weight or fixed scalar. Depth 0.
    Constant,
}

impl GateKind {
    pub fn analytic1(name: &str) -> Self {
        GateKind::PiecewiseAnalytic {
            name: name.to_string(),
            arity: 1,
        }
    }

    pub fn analytic2(name: &str) -> Self {
        GateKind::PiecewiseAnalytic {
            name: name.to_string(),
            arity: 2,
        }
    }

    pub fn reduce(op: ReduceOp, arity: u64) -> Self {
        GateKind::AssociativeReduce { op, arity }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::AssociativeReduce { .. } => "associative-reduce",
            GateKind::PiecewiseAnalytic { .. } => "piecewise-analytic",
            GateKind::Lookup { .. } => "lookup",
            GateKind::Wiring => "wiring",
            GateKind::Input => "input",
            GateKind::Constant => "constant",
        }
    }

    /// Depth contributed by a single gate of this kind.
    ///
    /// Reductions cost a balanced binary tree, lookups cost a multiplexer
    /// tree over the table, analytic gates cost 1, and wiring, inputs and
    /// constants are free.
    pub fn immediate_depth(&self) -> u64 {
        match self {
            GateKind::AssociativeReduce { arity, .. } => ceil_log2((*arity).max(1)),
            GateKind::PiecewiseAnalytic { .. } => 1,
            GateKind::Lookup { table_size } => ceil_log2((*table_size).max(1)),
            GateKind::Wiring | GateKind::Input | GateKind::Constant => 0,
        }
    }

    /// Check the kind's own invariants and whether `n_inputs` wires are an
    /// acceptable input list for it.
    fn check_arity(&self, n_inputs: usize) -> Result<(), String> {
        match self {
            GateKind::AssociativeReduce { arity, .. } => {
                if *arity < 2 {
                    return Err(format!(
                        "associative reduce arity must be >= 2, got {arity}"
                    ));
                }
                if n_inputs == 0 || n_inputs as u64 > *arity {
                    return Err(format!(
                        "associative reduce of arity {arity} takes between 1 (tensor form) and \
                         {arity} (scalar form) inputs, got {n_inputs}"
                    ));
                }
                Ok(())
            }
            GateKind::PiecewiseAnalytic { name, arity } => {
                if !(1..=2).contains(arity) {
                    return Err(format!("piecewise-analytic `{name}` arity must be 1 or 2"));
                }
                if n_inputs != *arity as usize {
                    return Err(format!(
                        "piecewise-analytic `{name}` takes {arity} inputs, got {n_inputs}"
                    ));
                }
                Ok(())
            }
            GateKind::Lookup { table_size } => {
                if *table_size < 1 {
                    return Err("lookup table size must be >= 1".to_string());
                }
                // Selector only, selector + one table wire, or selector +
                // every entry (scalar form).
                if n_inputs == 1 || n_inputs == 2 || n_inputs as u64 == 1 + *table_size {
                    Ok(())
                } else {
                    Err(format!(
                        "lookup over {table_size} entries takes 1 input (symbolic table), \
                         2 (selector + table wire), or {} (selector + entries), got {n_inputs}",
                        1 + table_size
                    ))
                }
            }
            GateKind::Wiring => {
                if n_inputs == 0 {
                    Err("wiring gate needs at least one input".to_string())
                } else {
                    Ok(())
                }
            }
            GateKind::Input | GateKind::Constant => {
                if n_inputs != 0 {
                    Err(format!(
                        "{} gates take no inputs, got {n_inputs}",
                        self.name()
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// One node of the circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    pub inputs: Vec<GateId>,
    pub interpretable: bool,
    pub label: Option<String>,
}

/// Errors raised while constructing a graph through `add_gate`.
#[derive(Debug, Clone, thiserror::Error)]
pub enum GraphError {
    #[error("gate references unknown input {0}")]
    UnknownInput(GateId),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("graph contains a cycle")]
    Cycle,
    #[error("unknown gate {0}")]
    UnknownGate(GateId),
}

/// A single invariant violation found by [`CircuitGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Gate the violation is attached to, when it concerns one gate.
    pub gate: Option<GateId>,
    /// Stable rule name, e.g. `dangling-input`.
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gate {
            Some(g) => write!(f, "[{}] {}: {}", self.rule, g, self.detail),
            None => write!(f, "[{}] {}", self.rule, self.detail),
        }
    }
}

/// A DAG of gates with designated input wires, output gates, and an
/// interpretable-node set (the per-gate flags).
///
/// Immutable once built; sharing a finished graph across threads is safe.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CircuitGraph {
    gates: Vec<Gate>,
    input_ids: Vec<GateId>,
    output_ids: Vec<GateId>,
}

impl CircuitGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assemble a graph from raw parts without checking invariants.
    ///
    /// Used by optimization passes and by tests that need malformed graphs;
    /// run [`validate`](Self::validate) before analyzing the result.
    pub fn from_parts(gates: Vec<Gate>, input_ids: Vec<GateId>, output_ids: Vec<GateId>) -> Self {
        Self {
            gates,
            input_ids,
            output_ids,
        }
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter()
    }

    pub fn gate(&self, id: GateId) -> Result<&Gate, GraphError> {
        self.gates
            .get(id.index())
            .ok_or(GraphError::UnknownGate(id))
    }

    pub fn contains(&self, id: GateId) -> bool {
        id.index() < self.gates.len()
    }

    pub fn input_ids(&self) -> &[GateId] {
        &self.input_ids
    }

    pub fn output_ids(&self) -> &[GateId] {
        &self.output_ids
    }

    /// Ids of all gates currently flagged interpretable, in id order.
    pub fn interpretable_ids(&self) -> Vec<GateId> {
        self.gates
            .iter()
            .filter(|g| g.interpretable)
            .map(|g| g.id)
            .collect()
    }

    /// Append a gate. Inputs must already exist, which keeps the graph
    /// acyclic by construction. Returns the fresh id.
    pub fn add_gate(
        &mut self,
        kind: GateKind,
        inputs: Vec<GateId>,
        interpretable: bool,
        label: Option<String>,
    ) -> Result<GateId, GraphError> {
        kind.check_arity(inputs.len())
            .map_err(GraphError::InvalidGate)?;
        for &input in &inputs {
            if !self.contains(input) {
                return Err(GraphError::UnknownInput(input));
            }
        }
        let id = GateId(self.gates.len() as u32);
        // Overall inputs are interpretable by definition.
        let interpretable = interpretable || matches!(kind, GateKind::Input);
        if matches!(kind, GateKind::Input) {
            self.input_ids.push(id);
        }
        self.gates.push(Gate {
            id,
            kind,
            inputs,
            interpretable,
            label,
        });
        Ok(id)
    }

    /// Shorthand for adding an input wire.
    pub fn add_input(&mut self, label: impl Into<String>) -> GateId {
        self.add_gate(GateKind::Input, vec![], true, Some(label.into()))
            .expect("input gates are always valid")
    }

    /// Shorthand for adding a constant (trained weight / fixed scalar).
    pub fn add_constant(&mut self, label: impl Into<String>) -> GateId {
        self.add_gate(GateKind::Constant, vec![], false, Some(label.into()))
            .expect("constant gates are always valid")
    }

    /// Designate `id` as a circuit output. Output gates are interpretable
    /// by definition.
    pub fn mark_output(&mut self, id: GateId) -> Result<(), GraphError> {
        if !self.contains(id) {
            return Err(GraphError::UnknownGate(id));
        }
        self.gates[id.index()].interpretable = true;
        self.output_ids.push(id);
        Ok(())
    }

    /// Flag an existing gate as interpretable.
    pub fn mark_interpretable(&mut self, id: GateId) -> Result<(), GraphError> {
        if !self.contains(id) {
            return Err(GraphError::UnknownGate(id));
        }
        self.gates[id.index()].interpretable = true;
        Ok(())
    }

    /// Kahn's algorithm with ties broken by insertion order.
    ///
    /// For graphs built through `add_gate` this returns the ids in order;
    /// graphs assembled from raw parts may be rotated arbitrarily, and a
    /// cycle is reported as an error.
    pub fn topological_order(&self) -> Result<Vec<GateId>, GraphError> {
        let n = self.gates.len();
        let mut in_degree = vec![0usize; n];
        let mut successors: Vec<Vec<u32>> = vec![Vec::new(); n];
        for gate in &self.gates {
            for &input in &gate.inputs {
                if !self.contains(input) {
                    return Err(GraphError::UnknownInput(input));
                }
                in_degree[gate.id.index()] += 1;
                successors[input.index()].push(gate.id.0);
            }
        }

        // Min-heap on gate id keeps the order deterministic.
        let mut ready = std::collections::BinaryHeap::new();
        for (i, &deg) in in_degree.iter().enumerate() {
            if deg == 0 {
                ready.push(std::cmp::Reverse(i as u32));
            }
        }

        let mut order = Vec::with_capacity(n);
        while let Some(std::cmp::Reverse(i)) = ready.pop() {
            order.push(GateId(i));
            for &succ in &successors[i as usize] {
                in_degree[succ as usize] -= 1;
                if in_degree[succ as usize] == 0 {
                    ready.push(std::cmp::Reverse(succ));
                }
            }
        }

        if order.len() != n {
            return Err(GraphError::Cycle);
        }
        Ok(order)
    }

    /// Check every structural invariant and return one entry per violation.
    /// An empty list means the graph is well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let n = self.gates.len();

        for gate in &self.gates {
            if let Err(detail) = gate.kind.check_arity(gate.inputs.len()) {
                violations.push(Violation {
                    gate: Some(gate.id),
                    rule: "arity-mismatch",
                    detail,
                });
            }
            for &input in &gate.inputs {
                if !self.contains(input) {
                    violations.push(Violation {
                        gate: Some(gate.id),
                        rule: "dangling-input",
                        detail: format!("references missing gate {input}"),
                    });
                }
            }
            if matches!(gate.kind, GateKind::Input) {
                if !self.input_ids.contains(&gate.id) {
                    violations.push(Violation {
                        gate: Some(gate.id),
                        rule: "input-not-registered",
                        detail: "input gate missing from the designated input list".to_string(),
                    });
                }
                if !gate.interpretable {
                    violations.push(Violation {
                        gate: Some(gate.id),
                        rule: "inputs-must-be-interpretable",
                        detail: "overall inputs are interpretable by definition".to_string(),
                    });
                }
            }
        }

        for &id in &self.input_ids {
            match self.gates.get(id.index()) {
                Some(g) if matches!(g.kind, GateKind::Input) => {}
                Some(_) => violations.push(Violation {
                    gate: Some(id),
                    rule: "input-list-kind",
                    detail: "designated input is not an input gate".to_string(),
                }),
                None => violations.push(Violation {
                    gate: Some(id),
                    rule: "dangling-input",
                    detail: "designated input id does not exist".to_string(),
                }),
            }
        }

        for &id in &self.output_ids {
            match self.gates.get(id.index()) {
                Some(g) if !g.interpretable => violations.push(Violation {
                    gate: Some(id),
                    rule: "outputs-must-be-interpretable",
                    detail: "overall outputs are interpretable by definition".to_string(),
                }),
                Some(_) => {}
                None => violations.push(Violation {
                    gate: Some(id),
                    rule: "dangling-output",
                    detail: "designated output id does not exist".to_string(),
                }),
            }
        }

        if self.topological_order().is_err() {
            // Either a cycle or a dangling reference; the latter is already
            // reported per gate.
            let has_dangling = violations.iter().any(|v| v.rule == "dangling-input");
            if !has_dangling {
                violations.push(Violation {
                    gate: None,
                    rule: "cycle",
                    detail: "no topological order exists".to_string(),
                });
            }
            return violations;
        }

        // Every gate must ground out at inputs or constants: walk forward
        // from the sources and flag anything unreached.
        let mut reachable = vec![false; n];
        let mut queue = VecDeque::new();
        for gate in &self.gates {
            if matches!(gate.kind, GateKind::Input | GateKind::Constant) {
                reachable[gate.id.index()] = true;
                queue.push_back(gate.id);
            }
        }
        let mut successors: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut pending: Vec<usize> = self.gates.iter().map(|g| g.inputs.len()).collect();
        for gate in &self.gates {
            for &input in &gate.inputs {
                successors[input.index()].push(gate.id.0);
            }
        }
        while let Some(id) = queue.pop_front() {
            for &succ in &successors[id.index()] {
                let s = succ as usize;
                pending[s] -= 1;
                if pending[s] == 0 && !reachable[s] {
                    reachable[s] = true;
                    queue.push_back(GateId(succ));
                }
            }
        }
        for gate in &self.gates {
            if !reachable[gate.id.index()] {
                violations.push(Violation {
                    gate: Some(gate.id),
                    rule: "unreachable-from-sources",
                    detail: "gate does not ground out at inputs or constants".to_string(),
                });
            }
        }

        violations
    }
}
