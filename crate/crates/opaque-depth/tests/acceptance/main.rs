//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (visible with `cargo test --test acceptance --
//! --nocapture`).

mod reference;
mod support;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use opaque_depth::builders::{
    build_dense_transformer, build_dense_transformer_scalar, build_mlp, build_moe_transformer,
    build_rnn_stack, fold_biases, parameter_count_moe, unroll, MlpSpec, MoeSpec, UnrollMode,
    UnrollSpec,
};
use opaque_depth::commands::{bundled_config, cmd_path, cmd_sweep, SweepSteps};
use opaque_depth::config::{parse_config, ArchParams};
use opaque_depth::depth::{opaque_serial_depth, opaque_serial_depth_with};
use opaque_depth::formulas::{
    block_depth, decode_depth, embed_depth, model_depth_at, model_depth_formula, rmsnorm_depth,
    rnn_cell_depth, rnn_grid_depth, AttentionKind, DenseTransformerSpec, SymbolicDepth,
};
use opaque_depth::graph::{CircuitGraph, Gate, GateId, GateKind};
use opaque_depth::oracle::{equivalence_check, evaluate, longest_path_oracle, seeded_constants};
use opaque_depth::rng::SplitMix64;

fn pass(criterion: u32, detail: &str) {
    println!("criterion {criterion}: PASS - {detail}");
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.json"))
}

fn gemma_spec(name: &str) -> DenseTransformerSpec {
    let text = bundled_config(name).expect("bundled config");
    match parse_config(text).expect("bundled configs parse").arch {
        ArchParams::Dense(spec) => spec,
        _ => panic!("{name} is not dense"),
    }
}

fn measured_depth(graph: &CircuitGraph) -> u64 {
    opaque_serial_depth(graph)
        .expect("valid graph")
        .opaque_serial_depth
}

fn paper_mlp() -> MlpSpec {
    MlpSpec {
        input_dim: 1,
        output_dim: 1,
        hidden_dims: vec![4, 4],
        activation: "relu".to_string(),
        bias: false,
    }
}

fn table5_moe() -> MoeSpec {
    let text = bundled_config("moe-table5").expect("bundled config");
    match parse_config(text).expect("parses").arch {
        ArchParams::Moe(spec) => spec,
        _ => panic!("moe-table5 is not moe"),
    }
}

fn tiny_base() -> DenseTransformerSpec {
    DenseTransformerSpec {
        vocab: 32,
        embed_dim: 8,
        hidden_dim: 16,
        head_dim: 4,
        num_heads: 2,
        num_layers: 2,
        sliding_window: 64,
        attention_pattern: vec![AttentionKind::Global],
        max_seq_len: 64,
        use_post_attn_norm: true,
        use_post_ffw_norm: true,
        use_qk_norm: true,
    }
}

#[test]
fn criterion_01_mlp_golden() {
    let start = Instant::now();
    let graph = build_mlp(&paper_mlp(), true).expect("builds");
    assert_eq!(measured_depth(&graph), 9, "two-hidden-layer MLP depth");

    let listing = cmd_path(&config_path("mlp-example"), None, 1).expect("path command");
    assert!(listing.contains("opaque serial depth: 9"), "{listing}");
    assert!(listing.contains("hidden1                  +2"), "{listing}");
    assert!(listing.contains("hidden2                  +4"), "{listing}");
    assert!(listing.contains("output                   +3"), "{listing}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(
        1,
        &format!("mlp depth 9 with 2+4+3 stage breakdown in {elapsed:?}"),
    );
}

#[test]
fn criterion_02_gemma_formulas_exact() {
    let start = Instant::now();
    let expected = [
        ("gemma3-1b", 4_370u64, 8u64, 4_490u64),
        ("gemma3-4b", 6_036, 10, 6_206),
        ("gemma3-12b", 8_482, 16, 8_754),
        ("gemma3-27b", 11_322, 20, 11_662),
    ];
    for (name, constant, coeff, total) in expected {
        let spec = gemma_spec(name);
        let formula = model_depth_formula(&spec);
        assert_eq!(
            formula,
            SymbolicDepth::Finite {
                constant,
                log_t_coefficient: coeff
            },
            "{name} formula"
        );
        assert_eq!(
            formula.evaluate(spec.max_seq_len),
            Some(total),
            "{name} total at T_max"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(2, &format!("family formulas (4370,8) (6036,10) (8482,16) (11322,20), totals 4490/6206/8754/11662 in {elapsed:?}"));
}

#[test]
fn criterion_03_gemma_intermediates_exact() {
    let cases = [
        ("gemma3-1b", 169u64, 151u64),
        ("gemma3-4b", 179, 159),
        ("gemma3-12b", 179, 159),
        ("gemma3-27b", 185, 165),
    ];
    for (name, sliding, global_constant) in cases {
        let spec = gemma_spec(name);
        assert_eq!(
            block_depth(&spec, spec.sliding_window),
            sliding,
            "{name} sliding block"
        );
        assert_eq!(
            block_depth(&spec, 1),
            global_constant,
            "{name} global constant"
        );
        for t in [2u64, 64, 4_096] {
            assert_eq!(
                block_depth(&spec, t),
                global_constant + 2 * opaque_depth::math::ceil_log2(t),
                "{name} global block at T = {t}"
            );
        }
    }
    let gemma_1b = gemma_spec("gemma3-1b");
    assert_eq!(embed_depth(gemma_1b.vocab), 19);
    assert_eq!(rmsnorm_depth(gemma_1b.embed_dim), 17);
    assert_eq!(decode_depth(gemma_1b.embed_dim), 12);
    pass(
        3,
        "block depths 169/179/179/185, global 151/159/159/165 + 2logT, 1B stages 19/17/12",
    );
}

#[test]
fn criterion_04_graph_formula_agreement() {
    let start = Instant::now();
    let mut checked = 0;
    for name in ["gemma3-1b", "gemma3-4b", "gemma3-12b", "gemma3-27b"] {
        let spec = gemma_spec(name);
        let t_top = spec.max_seq_len.min(131_072);
        for t in [512u64, 2_048, t_top] {
            let graph = build_dense_transformer(&spec, t, true).expect("builds");
            let folded = fold_biases(&graph);
            assert_eq!(
                measured_depth(&folded),
                model_depth_at(&spec, t),
                "{name} at T = {t}"
            );
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(
        4,
        &format!("{checked} (model, T) pairs agree graph-vs-formula exactly in {elapsed:?}"),
    );
}

#[test]
fn criterion_05_bias_folding() {
    let spec = MlpSpec {
        input_dim: 6,
        output_dim: 1,
        hidden_dims: vec![],
        activation: "linear".to_string(),
        bias: true,
    };
    let unfolded = build_mlp(&spec, false).expect("builds");
    let folded = fold_biases(&unfolded);
    assert_eq!(
        measured_depth(&unfolded),
        5,
        "unfolded dot-product-plus-bias"
    );
    assert_eq!(measured_depth(&folded), 4, "folded dot-product-plus-bias");

    let constants = seeded_constants(&unfolded, 0x5eed);
    let report = equivalence_check(
        &unfolded, &folded, &constants, &constants, 100, 1e-9, 0xabcd,
    )
    .expect("comparable graphs");
    assert!(report.pass, "max deviation {}", report.max_deviation);
    pass(
        5,
        &format!(
            "depth 5 -> 4 under folding; 100-trial equivalence max deviation {:.3e}",
            report.max_deviation
        ),
    );
}

#[test]
fn criterion_06_logarithmic_scaling() {
    let (result_1b, _) = cmd_sweep(
        &config_path("gemma3-1b"),
        1_024,
        32_768,
        SweepSteps::PowersOfTwo,
        None,
    )
    .expect("sweep");
    let deltas = result_1b.doubling_deltas();
    assert_eq!(deltas.len(), 5);
    assert!(deltas.iter().all(|&d| d == 8), "1B deltas {deltas:?}");

    let (result_27b, _) = cmd_sweep(
        &config_path("gemma3-27b"),
        1_024,
        65_536,
        SweepSteps::PowersOfTwo,
        None,
    )
    .expect("sweep");
    let deltas = result_27b.doubling_deltas();
    assert_eq!(deltas.len(), 6);
    assert!(deltas.iter().all(|&d| d == 20), "27B deltas {deltas:?}");
    pass(6, "per-doubling depth delta exactly 8 (1B) and 20 (27B)");
}

#[test]
fn criterion_07_asymptotics() {
    // RNN: exactly affine in T with a constant per-step increment.
    let (layers, dim) = (4u64, 64u64);
    let mut prev = None;
    for t in layers..layers + 10 {
        let graph = build_rnn_stack(layers, dim, t).expect("builds");
        let depth = measured_depth(&graph);
        assert_eq!(depth, rnn_grid_depth(layers, dim, t));
        if let Some(p) = prev {
            assert_eq!(depth - p, rnn_cell_depth(dim), "increment at T = {t}");
        }
        prev = Some(depth);
    }

    // Continuous chain of thought: exactly affine in the latent step count.
    let base = tiny_base();
    let cot_depth = |steps: u64| {
        let spec = UnrollSpec {
            base: base.clone(),
            mode: UnrollMode::ContinuousCot {
                latent_steps: steps,
                seq_len: 8,
            },
            intermediate_interpretable: false,
        };
        measured_depth(&unroll(&spec).expect("builds").expect_graph().graph)
    };
    let increment = cot_depth(2) - cot_depth(1);
    assert!(increment > 0);
    for steps in 2..=5u64 {
        assert_eq!(
            cot_depth(steps) - cot_depth(steps - 1),
            increment,
            "steps = {steps}"
        );
    }

    // Diffusion with interpretable intermediates: single-pass depth for any
    // step count.
    let single_pass = measured_depth(&build_dense_transformer(&base, 8, true).expect("builds"));
    for steps in [1u64, 3, 6] {
        let spec = UnrollSpec {
            base: base.clone(),
            mode: UnrollMode::Diffusion { steps, seq_len: 8 },
            intermediate_interpretable: true,
        };
        let depth = measured_depth(&unroll(&spec).expect("builds").expect_graph().graph);
        assert_eq!(depth, single_pass, "diffusion with {steps} steps");
    }

    // Persistent opaque memory without an invocation bound: unbounded.
    let memory = UnrollSpec {
        base,
        mode: UnrollMode::BlackboxMemory {
            invocations: None,
            seq_len: 8,
        },
        intermediate_interpretable: false,
    };
    assert!(unroll(&memory).expect("valid spec").is_unbounded());

    pass(7, &format!(
        "rnn affine (step {}), cot affine (step {increment}), diffusion = single pass, memory unbounded",
        rnn_cell_depth(dim)
    ));
}

#[test]
fn criterion_08_moe_qualitative() {
    let moe = table5_moe();
    assert_eq!(moe.seq_len, 512);
    let moe_depth = measured_depth(&build_moe_transformer(&moe).expect("builds"));

    let dense_12b = gemma_spec("gemma3-12b");
    let dense_depth =
        measured_depth(&build_dense_transformer(&dense_12b, 512, true).expect("builds"));
    assert!(
        moe_depth < dense_depth,
        "moe {moe_depth} must be strictly below dense 12B {dense_depth}"
    );

    let params = parameter_count_moe(&moe).expect("counts");
    let total_err = (params.total as f64 - 91.32e9).abs() / 91.32e9;
    assert!(
        total_err < 0.02,
        "total {} vs 91.32B ({:.3}%)",
        params.total,
        total_err * 100.0
    );
    let active_err = (params.active as f64 - 11.42e9).abs() / 11.42e9;
    assert!(
        active_err < 0.10,
        "active {} vs 11.42B ({:.3}%)",
        params.active,
        active_err * 100.0
    );

    pass(8, &format!(
        "moe depth {moe_depth} < dense-12B {dense_depth} at T=512; params total {:.2}B ({:.2}% off), active {:.2}B ({:.2}% off)",
        params.total as f64 / 1e9,
        total_err * 100.0,
        params.active as f64 / 1e9,
        active_err * 100.0
    ));
}

#[test]
fn criterion_09_oracle_suite() {
    let start = Instant::now();

    // Engine vs independent longest-path DP on 500 seeded random DAGs.
    let mut rng = SplitMix64::new(0x0c1a_11e5);
    for case in 0..500 {
        let graph = support::random_graph(&mut rng, 50, false);
        assert!(
            graph.validate().is_empty(),
            "case {case} generates valid graphs"
        );
        let engine = measured_depth(&graph);
        let oracle = longest_path_oracle(&graph).expect("within limits");
        assert_eq!(engine, oracle, "case {case}");
    }

    // Engine vs oracle on every builder output kind (all well under 10^4
    // gates).
    let base = tiny_base();
    let mut builder_graphs: Vec<(String, CircuitGraph)> = vec![
        ("mlp".into(), build_mlp(&paper_mlp(), true).unwrap()),
        (
            "mlp-bias-unfolded".into(),
            build_mlp(
                &MlpSpec {
                    input_dim: 6,
                    output_dim: 2,
                    hidden_dims: vec![5],
                    activation: "relu".into(),
                    bias: true,
                },
                false,
            )
            .unwrap(),
        ),
        ("rnn".into(), build_rnn_stack(3, 16, 12).unwrap()),
        (
            "moe".into(),
            build_moe_transformer(&MoeSpec {
                vocab: 64,
                hidden_dim: 16,
                num_heads: 2,
                num_layers: 2,
                experts_per_layer: 4,
                experts_per_token: 2,
                expert_hidden_dim: 32,
                seq_len: 8,
            })
            .unwrap(),
        ),
        (
            "scalar-transformer".into(),
            build_dense_transformer_scalar(
                &DenseTransformerSpec {
                    vocab: 8,
                    embed_dim: 4,
                    hidden_dim: 8,
                    head_dim: 2,
                    num_heads: 2,
                    num_layers: 1,
                    sliding_window: 8,
                    attention_pattern: vec![AttentionKind::Global],
                    max_seq_len: 8,
                    use_post_attn_norm: true,
                    use_post_ffw_norm: true,
                    use_qk_norm: true,
                },
                3,
            )
            .unwrap()
            .0,
        ),
    ];
    for t in [1u64, 7, 64] {
        builder_graphs.push((
            format!("dense-t{t}"),
            build_dense_transformer(&base, t, true).unwrap(),
        ));
    }
    builder_graphs.push((
        "dense-unfolded".into(),
        build_dense_transformer(&base, 16, false).unwrap(),
    ));
    for (name, mode, interp) in [
        (
            "unroll-ar",
            UnrollMode::Autoregressive {
                prompt_len: 3,
                gen_len: 3,
            },
            true,
        ),
        (
            "unroll-diffusion",
            UnrollMode::Diffusion {
                steps: 3,
                seq_len: 6,
            },
            true,
        ),
        (
            "unroll-cot",
            UnrollMode::ContinuousCot {
                latent_steps: 3,
                seq_len: 6,
            },
            false,
        ),
        (
            "unroll-memory",
            UnrollMode::BlackboxMemory {
                invocations: Some(3),
                seq_len: 6,
            },
            false,
        ),
    ] {
        let spec = UnrollSpec {
            base: base.clone(),
            mode,
            intermediate_interpretable: interp,
        };
        builder_graphs.push((name.into(), unroll(&spec).unwrap().expect_graph().graph));
    }
    for (name, graph) in &builder_graphs {
        assert!(
            graph.gate_count() <= 10_000,
            "{name}: {} gates",
            graph.gate_count()
        );
        assert_eq!(
            measured_depth(graph),
            longest_path_oracle(graph).unwrap(),
            "engine vs oracle on {name}"
        );
    }

    // Tiny-transformer execution against direct matrix math.
    let tiny = DenseTransformerSpec {
        vocab: 8,
        embed_dim: 4,
        hidden_dim: 8,
        head_dim: 2,
        num_heads: 2,
        num_layers: 1,
        sliding_window: 8,
        attention_pattern: vec![AttentionKind::Global],
        max_seq_len: 8,
        use_post_attn_norm: true,
        use_post_ffw_norm: true,
        use_qk_norm: true,
    };
    let (graph, bindings) = build_dense_transformer_scalar(&tiny, 3).expect("builds");
    let weight_for = |label: &str| {
        // Deterministic per-label draw shared with the reference pass.
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        SplitMix64::new(h).next_normal() * 0.3
    };
    let constants = bindings.assign(weight_for);
    let mut worst: f64 = 0.0;
    for tokens in [[0usize, 3, 7], [5, 5, 1], [2, 6, 4]] {
        let inputs: Vec<f64> = tokens.iter().map(|&t| t as f64).collect();
        let circuit_out = evaluate(&graph, &inputs, &constants).expect("evaluates");
        let reference_out = reference::forward(&tiny, &tokens, weight_for);
        assert_eq!(circuit_out.len(), reference_out.len());
        for (c, r) in circuit_out.iter().zip(&reference_out) {
            worst = worst.max((c - r).abs());
        }
    }
    assert!(worst <= 1e-6, "max circuit-vs-reference deviation {worst}");

    // And the worked single-input example: all weights 1, input 1 -> 16.
    let mlp = build_mlp(&paper_mlp(), true).unwrap();
    let ones: std::collections::BTreeMap<GateId, f64> = mlp
        .gates()
        .filter(|g| matches!(g.kind, GateKind::Constant))
        .map(|g| (g.id, 1.0))
        .collect();
    assert_eq!(evaluate(&mlp, &[1.0], &ones).unwrap(), vec![16.0]);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    pass(9, &format!(
        "500 random DAGs + {} builder graphs agree engine-vs-oracle; tiny transformer matches reference within {worst:.2e}; {elapsed:?}",
        builder_graphs.len()
    ));
}

#[test]
fn criterion_10_property_suite() {
    let mut rng = SplitMix64::new(0xf00d);
    let mut cases = 0u32;

    // Interpretable-set monotonicity: enlarging the cut set never deepens.
    for case in 0..400 {
        let graph = support::random_graph(&mut rng, 40, false);
        let base_set = support::interpretable_set(&graph);
        let baseline = opaque_serial_depth_with(&graph, Some(&base_set))
            .unwrap()
            .opaque_serial_depth;
        let mut enlarged: BTreeSet<GateId> = base_set.clone();
        for gate in graph.gates() {
            if rng.next_below(4) == 0 {
                enlarged.insert(gate.id);
            }
        }
        let enlarged_depth = opaque_serial_depth_with(&graph, Some(&enlarged))
            .unwrap()
            .opaque_serial_depth;
        assert!(
            enlarged_depth <= baseline,
            "case {case}: {enlarged_depth} > {baseline} after adding cuts"
        );
        cases += 1;
    }

    // Wiring invariance: a pass-through gate on any edge changes nothing.
    for case in 0..400 {
        let graph = support::random_graph(&mut rng, 40, false);
        let baseline = measured_depth(&graph);
        let with_inputs: Vec<GateId> = graph
            .gates()
            .filter(|g| !g.inputs.is_empty())
            .map(|g| g.id)
            .collect();
        if with_inputs.is_empty() {
            continue;
        }
        let target = with_inputs[rng.next_below(with_inputs.len() as u64) as usize];
        let slot = rng.next_below(graph.gate(target).unwrap().inputs.len() as u64) as usize;
        let mut gates: Vec<Gate> = graph.gates().cloned().collect();
        let src = gates[target.index()].inputs[slot];
        let wiring_id = GateId(gates.len() as u32);
        gates.push(Gate {
            id: wiring_id,
            kind: GateKind::Wiring,
            inputs: vec![src],
            interpretable: false,
            label: Some("inserted.passthrough".into()),
        });
        gates[target.index()].inputs[slot] = wiring_id;
        let rewired = CircuitGraph::from_parts(
            gates,
            graph.input_ids().to_vec(),
            graph.output_ids().to_vec(),
        );
        assert!(rewired.validate().is_empty(), "case {case}");
        assert_eq!(measured_depth(&rewired), baseline, "case {case}");
        cases += 1;
    }

    // Validate-cleanliness across randomized builder specs.
    for case in 0..300 {
        let graph = match case % 5 {
            0 => build_mlp(
                &MlpSpec {
                    input_dim: 1 + rng.next_below(6),
                    output_dim: 1 + rng.next_below(4),
                    hidden_dims: (0..rng.next_below(3))
                        .map(|_| 1 + rng.next_below(6))
                        .collect(),
                    activation: "relu".into(),
                    bias: rng.next_below(2) == 0,
                },
                rng.next_below(2) == 0,
            )
            .unwrap(),
            1 => {
                let window = 1 + rng.next_below(16);
                let spec = DenseTransformerSpec {
                    vocab: 2 + rng.next_below(100),
                    embed_dim: 1 + rng.next_below(32),
                    hidden_dim: 1 + rng.next_below(64),
                    head_dim: 1 + rng.next_below(16),
                    num_heads: 1 + rng.next_below(4),
                    num_layers: 1 + rng.next_below(4),
                    sliding_window: window,
                    attention_pattern: vec![AttentionKind::Local, AttentionKind::Global],
                    max_seq_len: window + rng.next_below(64),
                    use_post_attn_norm: rng.next_below(2) == 0,
                    use_post_ffw_norm: rng.next_below(2) == 0,
                    use_qk_norm: rng.next_below(2) == 0,
                };
                let t = 1 + rng.next_below(spec.max_seq_len);
                build_dense_transformer(&spec, t, rng.next_below(2) == 0).unwrap()
            }
            2 => {
                let e = 1 + rng.next_below(8);
                let heads = 1 + rng.next_below(4);
                build_moe_transformer(&MoeSpec {
                    vocab: 2 + rng.next_below(100),
                    hidden_dim: heads * (1 + rng.next_below(8)),
                    num_heads: heads,
                    num_layers: 1 + rng.next_below(3),
                    experts_per_layer: e,
                    experts_per_token: 1 + rng.next_below(e),
                    expert_hidden_dim: 1 + rng.next_below(64),
                    seq_len: 1 + rng.next_below(32),
                })
                .unwrap()
            }
            3 => build_rnn_stack(
                1 + rng.next_below(4),
                1 + rng.next_below(32),
                1 + rng.next_below(10),
            )
            .unwrap(),
            _ => {
                let base = tiny_base();
                let mode = match rng.next_below(4) {
                    0 => UnrollMode::Autoregressive {
                        prompt_len: 1 + rng.next_below(4),
                        gen_len: 1 + rng.next_below(4),
                    },
                    1 => UnrollMode::Diffusion {
                        steps: 1 + rng.next_below(4),
                        seq_len: 1 + rng.next_below(16),
                    },
                    2 => UnrollMode::ContinuousCot {
                        latent_steps: 1 + rng.next_below(4),
                        seq_len: 1 + rng.next_below(16),
                    },
                    _ => UnrollMode::BlackboxMemory {
                        invocations: Some(1 + rng.next_below(4)),
                        seq_len: 1 + rng.next_below(16),
                    },
                };
                let spec = UnrollSpec {
                    base,
                    mode,
                    intermediate_interpretable: rng.next_below(2) == 0,
                };
                unroll(&spec).unwrap().expect_graph().graph
            }
        };
        let violations = graph.validate();
        assert!(violations.is_empty(), "case {case}: {violations:?}");
        cases += 1;
    }

    assert!(cases >= 1_000, "only {cases} randomized cases");

    // Documented stand-in for the framework-trace comparison, which is not
    // reproducible at desk scale: the unoptimized emission's overhead on
    // the bundled family.
    let spec = gemma_spec("gemma3-1b");
    let folded = measured_depth(&build_dense_transformer(&spec, spec.max_seq_len, true).unwrap());
    let unfolded =
        measured_depth(&build_dense_transformer(&spec, spec.max_seq_len, false).unwrap());
    assert!(unfolded > folded);
    let ratio = unfolded as f64 / folded as f64;

    pass(10, &format!(
        "{cases} randomized cases: monotonicity, wiring-invariance, validate-cleanliness; unfolded/folded ratio {ratio:.3}x ({unfolded}/{folded})"
    ));
}
