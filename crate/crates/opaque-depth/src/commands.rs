//! Analysis entry points behind the `opaque-depth` binary.
//!
//! Each command is an ordinary function returning rendered text, so the
//! binary stays a thin argument parser and everything here is testable
//! in-process.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::builders::{
    build_dense_transformer, build_mlp, build_moe_transformer, build_rnn_stack,
    parameter_count_moe, unroll, BuildError, MoeSpec, ParamCount, Unrolled,
};
use crate::config::{load_config, ArchConfig, ArchParams, ConfigError, ConfigKind};
use crate::depth::{opaque_serial_depth, DepthReport};
use crate::formulas::{
    attention_depth, embed_depth, model_depth_at, model_depth_formula, rmsnorm_depth,
    rnn_grid_depth, SymbolicDepth,
};
use crate::graph::CircuitGraph;
use crate::math::ceil_log2;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    /// Unreadable, unparsable, or semantically invalid configuration.
    #[error("{0}")]
    Config(String),
    /// Valid configuration asked to operate outside its domain.
    #[error("{0}")]
    Domain(String),
    /// An internal cross-check failed; the build is inconsistent.
    #[error("internal invariant failure: {0}")]
    Internal(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Domain(_) => 3,
            CommandError::Internal(_) => 4,
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e.to_string())
    }
}

impl From<BuildError> for CommandError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::SeqLenExceedsMax { .. } => CommandError::Domain(e.to_string()),
            other => CommandError::Config(other.to_string()),
        }
    }
}

/// One measured architecture: graph, report, and derived presentation data.
pub struct Analysis {
    pub kind: ConfigKind,
    /// `None` when the composition has no finite circuit.
    pub depth: Option<u64>,
    /// Closed-form depth, where the architecture has one.
    pub formula: Option<SymbolicDepth>,
    /// Consecutive critical-path stages (top-level label segment, weight).
    pub stages: Vec<(String, u64)>,
    pub seq_len: Option<u64>,
    pub graph: Option<CircuitGraph>,
    pub report: Option<DepthReport>,
    pub params: Option<ParamCount>,
    pub notes: Vec<String>,
}

/// Build and measure the architecture described by a parsed config.
pub fn analyze(
    config: &ArchConfig,
    seq_len: Option<u64>,
    folding_override: Option<bool>,
) -> Result<Analysis, CommandError> {
    let folded = folding_override.unwrap_or(config.folding);
    let mut notes: Vec<String> = Vec::new();
    for name in &config.inferred_parameters {
        notes.push(format!("parameter `{name}` is inferred, not published"));
    }
    if !folded {
        notes.push("folding disabled: emission keeps rewritable patterns".to_string());
    }

    // `expected` carries the closed-form depth the built graph must match
    // exactly (the dual-route check). It only applies to the canonical
    // folded emission without extra interpretable cuts.
    let (mut graph, formula, seq, params, expected) = match &config.arch {
        ArchParams::Mlp(spec) => {
            let graph = build_mlp(spec, folded)?;
            (graph, None, None, None, None)
        }
        ArchParams::Dense(spec) => {
            let t = seq_len.unwrap_or(spec.max_seq_len);
            let graph = build_dense_transformer(spec, t, folded)?;
            let formula = if folded {
                // The affine form is exact only once every local layer is
                // window-limited; the cross-check value handles short T.
                Some(model_depth_formula(spec))
            } else {
                None
            };
            let expected = folded.then(|| model_depth_at(spec, t));
            (graph, formula, Some(t), None, expected)
        }
        ArchParams::Moe(spec) => {
            let mut spec = spec.clone();
            if let Some(t) = seq_len {
                spec.seq_len = t;
            }
            let graph = build_moe_transformer(&spec)?;
            let params = parameter_count_moe(&spec)?;
            let expected = Some(moe_depth_closed_form(&spec));
            (graph, None, Some(spec.seq_len), Some(params), expected)
        }
        ArchParams::Rnn(p) => {
            let t = seq_len.unwrap_or(p.seq_len);
            let graph = build_rnn_stack(p.layers, p.dim, t)?;
            let grid = rnn_grid_depth(p.layers, p.dim, t);
            (
                graph,
                Some(SymbolicDepth::constant(grid)),
                Some(t),
                None,
                Some(grid),
            )
        }
        ArchParams::Unroll(spec) => match unroll(spec)? {
            Unrolled::Unbounded => {
                return Ok(Analysis {
                    kind: config.kind,
                    depth: None,
                    formula: Some(SymbolicDepth::Unbounded),
                    stages: Vec::new(),
                    seq_len: None,
                    graph: None,
                    report: None,
                    params: None,
                    notes: vec![
                        "persistent opaque memory with no invocation bound: depth cannot be \
                         bounded by the model dimensions"
                            .to_string(),
                    ],
                });
            }
            Unrolled::Graph(outcome) => {
                if let Some(delta) = outcome.embed_skip_delta {
                    notes.push(format!(
                        "continuous feedback replaces the token embedding after the first copy \
                         (-{delta} depth per subsequent copy)"
                    ));
                }
                notes.push(format!("{} copies of the backing network", outcome.copies));
                (outcome.graph, None, None, None, None)
            }
        },
    };

    crate::config::apply_interpretable_overrides(&mut graph, &config.interpretable_overrides);

    let report = opaque_serial_depth(&graph)
        .map_err(|e| CommandError::Internal(format!("built graph failed analysis: {e}")))?;
    let depth = report.opaque_serial_depth;

    if config.interpretable_overrides.is_empty() {
        if let Some(expected) = expected {
            if depth != expected {
                return Err(CommandError::Internal(format!(
                    "graph depth {depth} != closed-form depth {expected}"
                )));
            }
        }
    }

    let stages = stage_breakdown(&graph, &report);
    Ok(Analysis {
        kind: config.kind,
        depth: Some(depth),
        formula,
        stages,
        seq_len: seq,
        graph: Some(graph),
        report: Some(report),
        params,
        notes,
    })
}

/// Closed-form depth of the MoE builder's circuit: the second route of the
/// builder/arithmetic agreement check.
pub fn moe_depth_closed_form(spec: &MoeSpec) -> u64 {
    let d = spec.hidden_dim;
    let norm = rmsnorm_depth(d);
    let attn = attention_depth(d, spec.head_dim(), spec.seq_len, false);
    let expert_path = crate::formulas::ffw_depth(d, spec.expert_hidden_dim);
    let (e, k) = (spec.experts_per_layer, spec.experts_per_token);
    let moe_ffw = if e == 1 && k == 1 {
        expert_path
    } else {
        let router_path = (1 + ceil_log2(d)) + k * ceil_log2(e);
        expert_path.max(router_path) + 1 + if k >= 2 { ceil_log2(k) } else { 0 }
    };
    let block = norm + attn + 1 + norm + moe_ffw + 1;
    embed_depth(spec.vocab) + spec.num_layers * block + norm + (1 + ceil_log2(d))
}

/// Group the critical path into consecutive stages by the first label
/// segment, summing immediate depths.
pub fn stage_breakdown(graph: &CircuitGraph, report: &DepthReport) -> Vec<(String, u64)> {
    let mut stages: Vec<(String, u64)> = Vec::new();
    for &id in &report.critical_path {
        let gate = match graph.gate(id) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let stage = gate
            .label
            .as_deref()
            .map(|l| l.split('.').next().unwrap_or(l).to_string())
            .unwrap_or_else(|| "(unlabeled)".to_string());
        let weight = gate.kind.immediate_depth();
        match stages.last_mut() {
            Some((name, sum)) if *name == stage => *sum += weight,
            _ => stages.push((stage, weight)),
        }
    }
    stages
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct JsonFormula {
    constant: u64,
    #[serde(rename = "logT_coefficient")]
    log_t_coefficient: u64,
}

#[derive(Debug, Serialize)]
struct JsonStage {
    name: String,
    depth: u64,
}

#[derive(Debug, Serialize)]
struct JsonReport {
    depth: Option<u64>,
    formula: Option<JsonFormula>,
    stages: Vec<JsonStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seq_len: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

/// `analyze <config>`: measure one architecture and render a report.
pub fn cmd_analyze(
    config_path: &Path,
    seq_len: Option<u64>,
    no_folding: bool,
    json: bool,
) -> Result<String, CommandError> {
    let config = load_config(config_path)?;
    let analysis = analyze(
        &config,
        seq_len,
        if no_folding { Some(false) } else { None },
    )?;
    if json {
        render_analysis_json(&analysis)
    } else {
        Ok(render_analysis_text(&analysis))
    }
}

fn render_analysis_json(analysis: &Analysis) -> Result<String, CommandError> {
    let formula = match analysis.formula {
        Some(SymbolicDepth::Finite {
            constant,
            log_t_coefficient,
        }) => Some(JsonFormula {
            constant,
            log_t_coefficient,
        }),
        _ => None,
    };
    let report = JsonReport {
        depth: analysis.depth,
        formula,
        stages: analysis
            .stages
            .iter()
            .map(|(name, depth)| JsonStage {
                name: name.clone(),
                depth: *depth,
            })
            .collect(),
        seq_len: analysis.seq_len,
        notes: analysis.notes.clone(),
    };
    serde_json::to_string_pretty(&report)
        .map_err(|e| CommandError::Internal(format!("json rendering: {e}")))
}

fn render_analysis_text(analysis: &Analysis) -> String {
    let mut out = String::new();
    match analysis.depth {
        Some(depth) => {
            let formula_note = match (&analysis.formula, analysis.seq_len) {
                (
                    Some(
                        f @ SymbolicDepth::Finite {
                            log_t_coefficient, ..
                        },
                    ),
                    Some(t),
                ) if *log_t_coefficient > 0 => {
                    format!(" (= {f} at T = {t})")
                }
                _ => String::new(),
            };
            let _ = writeln!(out, "opaque serial depth: {depth}{formula_note}");
            if let Some(t) = analysis.seq_len {
                let _ = writeln!(out, "sequence length: {t}");
            }
            if let Some(p) = analysis.params {
                let _ = writeln!(
                    out,
                    "parameters: total {} ({:.2}B), active {} ({:.2}B)",
                    p.total,
                    p.total as f64 / 1e9,
                    p.active,
                    p.active as f64 / 1e9
                );
            }
            if !analysis.stages.is_empty() {
                let _ = writeln!(out, "critical-path stages:");
                for (name, weight) in &analysis.stages {
                    let _ = writeln!(out, "  {name:<24} +{weight}");
                }
            }
        }
        None => {
            let _ = writeln!(out, "opaque serial depth: unbounded");
        }
    }
    for note in &analysis.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSteps {
    PowersOfTwo,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub t: u64,
    pub depth: u64,
    pub formula_depth: u64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Deterministic CSV: fixed header, LF line endings, no locale
    /// formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,depth,formula_depth,match\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                row.t, row.depth, row.formula_depth, row.matches
            );
        }
        out
    }

    /// Depth deltas between consecutive rows where T exactly doubles.
    pub fn doubling_deltas(&self) -> Vec<u64> {
        self.rows
            .windows(2)
            .filter(|w| w[1].t == 2 * w[0].t)
            .map(|w| w[1].depth - w[0].depth)
            .collect()
    }
}

/// `sweep <config>`: depth across a sequence-length range, with the closed
/// form as a second column.
pub fn cmd_sweep(
    config_path: &Path,
    t_min: u64,
    t_max: u64,
    steps: SweepSteps,
    csv_out: Option<&Path>,
) -> Result<(SweepResult, String), CommandError> {
    if t_min < 1 || t_min > t_max {
        return Err(CommandError::Config(format!(
            "invalid sweep range: t_min {t_min}, t_max {t_max}"
        )));
    }
    let config = load_config(config_path)?;

    let grid: Vec<u64> = match steps {
        SweepSteps::PowersOfTwo => {
            let mut t = t_min;
            let mut grid = Vec::new();
            while t <= t_max {
                grid.push(t);
                match t.checked_mul(2) {
                    Some(next) => t = next,
                    None => break,
                }
            }
            grid
        }
        SweepSteps::Linear => {
            let points = 16u64.min(t_max - t_min + 1);
            let mut grid: Vec<u64> = (0..points)
                .map(|i| t_min + (t_max - t_min) * i / points.saturating_sub(1).max(1))
                .collect();
            grid.dedup();
            grid
        }
    };

    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let analysis = analyze(&config, Some(t), None)?;
        let depth = analysis
            .depth
            .ok_or_else(|| CommandError::Domain("architecture has unbounded depth".to_string()))?;
        let formula_depth = match &config.arch {
            ArchParams::Dense(spec) => model_depth_at(spec, t),
            ArchParams::Rnn(p) => rnn_grid_depth(p.layers, p.dim, t),
            ArchParams::Moe(spec) => {
                let mut s = spec.clone();
                s.seq_len = t;
                moe_depth_closed_form(&s)
            }
            _ => {
                return Err(CommandError::Config(format!(
                    "sweep requires a sequence-length-parameterized architecture, got `{}`",
                    config.kind.name()
                )))
            }
        };
        rows.push(SweepRow {
            t,
            depth,
            formula_depth,
            matches: depth == formula_depth,
        });
    }
    let result = SweepResult { rows };

    if let Some(path) = csv_out {
        std::fs::write(path, result.to_csv())
            .map_err(|e| CommandError::Config(format!("cannot write {}: {e}", path.display())))?;
    }

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{} rows, T in [{t_min}, {t_max}]",
        result.rows.len()
    );
    let deltas = result.doubling_deltas();
    if !deltas.is_empty() {
        if deltas.iter().all(|&d| d == deltas[0]) {
            let _ = writeln!(
                summary,
                "per-doubling depth delta: {} (constant)",
                deltas[0]
            );
            if let ArchParams::Dense(spec) = &config.arch {
                let globals = spec.global_layer_count();
                if deltas[0] == 2 * globals {
                    let _ = writeln!(
                        summary,
                        "log-scaling check: delta equals 2 x {globals} global blocks"
                    );
                }
            }
        } else {
            let _ = writeln!(summary, "per-doubling depth deltas: {deltas:?}");
        }
    }
    let all_match = result.rows.iter().all(|r| r.matches);
    let _ = writeln!(summary, "graph/formula match: {all_match}");
    Ok((result, summary))
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Bundled architecture configs, compiled into the binary.
pub fn bundled_config(name: &str) -> Option<&'static str> {
    Some(match name {
        "gemma3-1b" => include_str!("../configs/gemma3-1b.json"),
        "gemma3-4b" => include_str!("../configs/gemma3-4b.json"),
        "gemma3-12b" => include_str!("../configs/gemma3-12b.json"),
        "gemma3-27b" => include_str!("../configs/gemma3-27b.json"),
        "moe-table5" => include_str!("../configs/moe-table5.json"),
        "mlp-example" => include_str!("../configs/mlp-example.json"),
        "rnn-demo" => include_str!("../configs/rnn-demo.json"),
        "continuous-cot-demo" => include_str!("../configs/continuous-cot-demo.json"),
        "diffusion-demo" => include_str!("../configs/diffusion-demo.json"),
        _ => return None,
    })
}

pub const GEMMA3_MODELS: [&str; 4] = ["gemma3-1b", "gemma3-4b", "gemma3-12b", "gemma3-27b"];

/// `report --family gemma3`: the family table — parameters, intermediate
/// block depths, depth formulas, totals at maximum length, and the
/// unoptimized-emission comparison.
pub fn cmd_report(family: &str) -> Result<String, CommandError> {
    if family != "gemma3" {
        return Err(CommandError::Config(format!(
            "unknown family `{family}` (available: gemma3)"
        )));
    }

    struct ModelRow {
        name: &'static str,
        spec: crate::formulas::DenseTransformerSpec,
        inferred: Vec<String>,
    }

    let mut models = Vec::new();
    for name in GEMMA3_MODELS {
        let text = bundled_config(name)
            .ok_or_else(|| CommandError::Config(format!("missing bundled config {name}")))?;
        let config = crate::config::parse_config(text)?;
        let spec = match config.arch {
            ArchParams::Dense(spec) => spec,
            _ => {
                return Err(CommandError::Config(format!(
                    "{name} is not a dense transformer"
                )))
            }
        };
        models.push(ModelRow {
            name,
            spec,
            inferred: config.inferred_parameters,
        });
    }

    let mut out = String::new();
    let _ = writeln!(out, "Gemma 3 family opaque-serial-depth report");
    let _ = writeln!(out, "=========================================");
    let _ = writeln!(out);

    let col = 20usize;
    let label = 26usize;
    let header: Vec<String> = models.iter().map(|m| m.name.to_string()).collect();
    let mut row = |name: &str, values: Vec<String>| {
        let mut line = format!("{name:<label$}");
        for v in values {
            let _ = write!(line, "{v:<col$}");
        }
        let _ = writeln!(out, "{}", line.trim_end());
    };

    row("model", header);
    row(
        "num layers",
        models
            .iter()
            .map(|m| m.spec.num_layers.to_string())
            .collect(),
    );
    row(
        "embed dim (D)",
        models
            .iter()
            .map(|m| m.spec.embed_dim.to_string())
            .collect(),
    );
    row(
        "hidden dim",
        models
            .iter()
            .map(|m| m.spec.hidden_dim.to_string())
            .collect(),
    );
    row(
        "head dim (H)",
        models.iter().map(|m| m.spec.head_dim.to_string()).collect(),
    );
    row(
        "log2(D)",
        models
            .iter()
            .map(|m| ceil_log2(m.spec.embed_dim).to_string())
            .collect(),
    );
    row(
        "log2(Hidden)",
        models
            .iter()
            .map(|m| ceil_log2(m.spec.hidden_dim).to_string())
            .collect(),
    );
    row(
        "log2(H)",
        models
            .iter()
            .map(|m| ceil_log2(m.spec.head_dim).to_string())
            .collect(),
    );
    row(
        "sliding window (W)",
        models
            .iter()
            .map(|m| {
                let star = if m.inferred.iter().any(|p| p == "sliding_window") {
                    "*"
                } else {
                    ""
                };
                format!("{}{star}", m.spec.sliding_window)
            })
            .collect(),
    );
    row(
        "sliding blocks",
        models
            .iter()
            .map(|m| m.spec.local_layer_count().to_string())
            .collect(),
    );
    row(
        "global blocks",
        models
            .iter()
            .map(|m| m.spec.global_layer_count().to_string())
            .collect(),
    );
    row(
        "sliding block depth",
        models
            .iter()
            .map(|m| crate::formulas::block_depth(&m.spec, m.spec.sliding_window).to_string())
            .collect(),
    );
    row(
        "global block depth",
        models
            .iter()
            .map(|m| {
                let constant = crate::formulas::block_depth(&m.spec, 1);
                format!("{constant} + 2·log2(T)")
            })
            .collect(),
    );
    row(
        "depth formula",
        models
            .iter()
            .map(|m| model_depth_formula(&m.spec).to_string())
            .collect(),
    );
    row(
        "T_max",
        models
            .iter()
            .map(|m| m.spec.max_seq_len.to_string())
            .collect(),
    );
    row(
        "log2(T_max)",
        models
            .iter()
            .map(|m| ceil_log2(m.spec.max_seq_len).to_string())
            .collect(),
    );

    // Totals at maximum sequence length, cross-checked against the graphs,
    // plus the unoptimized emission for the folding comparison.
    let mut totals = Vec::new();
    let mut unfolded_totals = Vec::new();
    let mut ratios = Vec::new();
    for m in &models {
        let t = m.spec.max_seq_len;
        let formula_total = model_depth_formula(&m.spec)
            .evaluate(t)
            .expect("dense formulas are finite");
        let graph = build_dense_transformer(&m.spec, t, true)?;
        let measured = opaque_serial_depth(&graph)
            .map_err(|e| CommandError::Internal(e.to_string()))?
            .opaque_serial_depth;
        if measured != formula_total {
            return Err(CommandError::Internal(format!(
                "{}: graph depth {measured} != formula total {formula_total}",
                m.name
            )));
        }
        let unfolded_graph = build_dense_transformer(&m.spec, t, false)?;
        let unfolded = opaque_serial_depth(&unfolded_graph)
            .map_err(|e| CommandError::Internal(e.to_string()))?
            .opaque_serial_depth;
        totals.push(formula_total);
        unfolded_totals.push(unfolded);
        ratios.push(unfolded as f64 / formula_total as f64);
    }
    row(
        "total depth at T_max",
        totals.iter().map(|t| t.to_string()).collect(),
    );
    row(
        "unfolded depth at T_max",
        unfolded_totals.iter().map(|t| t.to_string()).collect(),
    );
    row(
        "unfolded / folded ratio",
        ratios.iter().map(|r| format!("{r:.3}x")).collect(),
    );

    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "*  inferred: not published; chosen so the sliding block depth matches the reported value."
    );
    let _ = writeln!(
        out,
        "   unfolded = emission keeping the redundant stable-softmax max-subtraction on the path."
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// path
// ---------------------------------------------------------------------------

/// `path <config>`: the critical path as labeled stages, with optional
/// runner-up sinks.
pub fn cmd_path(
    config_path: &Path,
    seq_len: Option<u64>,
    top: usize,
) -> Result<String, CommandError> {
    let config = load_config(config_path)?;
    let analysis = analyze(&config, seq_len, None)?;
    let (Some(depth), Some(graph), Some(report)) =
        (analysis.depth, &analysis.graph, &analysis.report)
    else {
        return Ok("opaque serial depth: unbounded (no finite critical path)\n".to_string());
    };

    let mut out = String::new();
    let _ = writeln!(out, "opaque serial depth: {depth}");
    if depth == 0 {
        let _ = writeln!(out, "critical path: empty (every sink is immediately cut)");
        return Ok(out);
    }
    let _ = writeln!(out, "critical path ({} gates):", report.critical_path.len());
    for (name, weight) in &analysis.stages {
        let _ = writeln!(out, "  {name:<24} +{weight}");
    }
    let total: u64 = analysis.stages.iter().map(|(_, w)| w).sum();
    let _ = writeln!(out, "  {:<24} ={total}", "total");

    if top > 1 {
        // Runner-up sinks: next-deepest interpretable nodes or outputs.
        let mut sinks: Vec<(u64, crate::graph::GateId)> = graph
            .gates()
            .filter(|g| g.interpretable || graph.output_ids().contains(&g.id))
            .map(|g| (report.per_node_depth[&g.id], g.id))
            .filter(|&(_, id)| id != report.source_node)
            .collect();
        sinks.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        sinks.truncate(top - 1);
        if !sinks.is_empty() {
            let _ = writeln!(out, "runner-up sinks:");
            for (d, id) in sinks {
                let label = graph
                    .gate(id)
                    .ok()
                    .and_then(|g| g.label.clone())
                    .unwrap_or_else(|| id.to_string());
                let _ = writeln!(out, "  {label:<40} depth {d}");
            }
        }
    }
    Ok(out)
}
