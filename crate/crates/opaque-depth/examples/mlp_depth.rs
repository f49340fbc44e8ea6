//! The worked warm-up: a two-hidden-layer MLP and its critical path.
//!
//! ```bash
//! cargo run -p opaque-depth --example mlp_depth
//! ```

use opaque_depth::builders::{build_mlp, MlpSpec};
use opaque_depth::depth::opaque_serial_depth;

fn main() {
    let spec = MlpSpec {
        input_dim: 1,
        output_dim: 1,
        hidden_dims: vec![4, 4],
        activation: "relu".to_string(),
        bias: false,
    };
    let graph = build_mlp(&spec, true).unwrap();
    let report = opaque_serial_depth(&graph).unwrap();

    println!("1 -> 4 -> 4 -> 1 relu MLP, {} gates", graph.gate_count());
    println!("opaque serial depth: {}", report.opaque_serial_depth);
    println!();
    println!("layer-by-layer accounting:");
    println!("  hidden layer 1: products (1) + relu (1)                 = 2");
    println!("  hidden layer 2: products (1) + 4-way sum (2) + relu (1) = 4");
    println!("  output layer:   products (1) + 4-way sum (2)            = 3");
    println!("  total                                                   = 9");
    println!();
    println!("critical path:");
    for &id in &report.critical_path {
        let gate = graph.gate(id).unwrap();
        println!(
            "  {:<20} +{}",
            gate.label.as_deref().unwrap_or("?"),
            gate.kind.immediate_depth()
        );
    }
}
