//! The dot-product-plus-bias rewrite: a shallower circuit for the same
//! function, verified numerically.
//!
//! ```bash
//! cargo run -p opaque-depth --example bias_folding
//! ```

use opaque_depth::builders::{build_mlp, fold_biases, MlpSpec};
use opaque_depth::depth::opaque_serial_depth;
use opaque_depth::oracle::{equivalence_check, seeded_constants};

fn main() {
    // w·x + b over a 6-dimensional input.
    let spec = MlpSpec {
        input_dim: 6,
        output_dim: 1,
        hidden_dims: vec![],
        activation: "linear".to_string(),
        bias: true,
    };

    let unfolded = build_mlp(&spec, false).unwrap();
    let folded = fold_biases(&unfolded);

    let d_unfolded = opaque_serial_depth(&unfolded).unwrap().opaque_serial_depth;
    let d_folded = opaque_serial_depth(&folded).unwrap().opaque_serial_depth;

    println!("w·x + b, dimension 6");
    println!(
        "  separate bias addition: products 1 + ceil(log2 6) = 3 + bias 1 -> depth {d_unfolded}"
    );
    println!("  bias folded into the sum: products 1 + ceil(log2 7) = 3       -> depth {d_folded}");

    // Same function? Drive both circuits with the same weights and 100
    // seeded random inputs.
    let constants = seeded_constants(&unfolded, 42);
    let report =
        equivalence_check(&unfolded, &folded, &constants, &constants, 100, 1e-9, 7).unwrap();
    println!(
        "  equivalence over {} random trials: {} (max deviation {:.1e})",
        report.trials,
        if report.pass { "pass" } else { "FAIL" },
        report.max_deviation
    );
}
