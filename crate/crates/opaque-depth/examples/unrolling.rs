//! Multi-invocation compositions: where the interpretable cuts sit decides
//! how depth accumulates across copies of the same network.
//!
//! ```bash
//! cargo run -p opaque-depth --example unrolling
//! ```

use opaque_depth::builders::{build_dense_transformer, unroll, UnrollMode, UnrollSpec, Unrolled};
use opaque_depth::depth::opaque_serial_depth;
use opaque_depth::formulas::{AttentionKind, DenseTransformerSpec};

fn main() {
    let base = DenseTransformerSpec {
        vocab: 256,
        embed_dim: 64,
        hidden_dim: 256,
        head_dim: 16,
        num_heads: 4,
        num_layers: 4,
        sliding_window: 64,
        attention_pattern: vec![AttentionKind::Global],
        max_seq_len: 64,
        use_post_attn_norm: true,
        use_post_ffw_norm: true,
        use_qk_norm: true,
    };
    let single_pass = opaque_serial_depth(&build_dense_transformer(&base, 16, true).unwrap())
        .unwrap()
        .opaque_serial_depth;
    println!("backing network: single forward pass at T = 16 has depth {single_pass}");
    println!();

    let measure = |mode: UnrollMode, interpretable: bool| -> String {
        let spec = UnrollSpec {
            base: base.clone(),
            mode,
            intermediate_interpretable: interpretable,
        };
        match unroll(&spec).unwrap() {
            Unrolled::Unbounded => "unbounded".to_string(),
            Unrolled::Graph(outcome) => opaque_serial_depth(&outcome.graph)
                .unwrap()
                .opaque_serial_depth
                .to_string(),
        }
    };

    println!(
        "autoregressive, 8 generated tokens (every token readable):   depth {}",
        measure(
            UnrollMode::Autoregressive {
                prompt_len: 9,
                gen_len: 8
            },
            true
        )
    );
    println!(
        "text diffusion, 8 denoising steps (every step readable):     depth {}",
        measure(
            UnrollMode::Diffusion {
                steps: 8,
                seq_len: 16
            },
            true
        )
    );
    println!(
        "continuous latent thought, 8 steps (hidden vectors fed back): depth {}",
        measure(
            UnrollMode::ContinuousCot {
                latent_steps: 8,
                seq_len: 16
            },
            false
        )
    );
    println!(
        "opaque persistent memory, 8 bounded invocations:             depth {}",
        measure(
            UnrollMode::BlackboxMemory {
                invocations: Some(8),
                seq_len: 16
            },
            false
        )
    );
    println!(
        "opaque persistent memory, no invocation bound:               depth {}",
        measure(
            UnrollMode::BlackboxMemory {
                invocations: None,
                seq_len: 16
            },
            false
        )
    );
    println!();
    println!(
        "readable intermediates keep depth at one forward pass no matter how many \
         copies run; opaque feedback multiplies it by the copy count."
    );
}
