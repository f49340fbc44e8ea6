//! Closed-form depth results for the bundled Gemma 3 configs, cross-checked
//! against measured circuit graphs.
//!
//! ```bash
//! cargo run -p opaque-depth --example gemma_report
//! ```

use opaque_depth::builders::build_dense_transformer;
use opaque_depth::commands::{bundled_config, GEMMA3_MODELS};
use opaque_depth::config::{parse_config, ArchParams};
use opaque_depth::depth::opaque_serial_depth;
use opaque_depth::formulas::model_depth_formula;

fn main() {
    println!(
        "{:<12} {:<22} {:>10} {:>12}",
        "model", "depth formula", "T_max", "total"
    );
    for name in GEMMA3_MODELS {
        let config = parse_config(bundled_config(name).unwrap()).unwrap();
        let ArchParams::Dense(spec) = config.arch else {
            unreachable!()
        };
        let formula = model_depth_formula(&spec);
        let total = formula.evaluate(spec.max_seq_len).unwrap();

        // Second route: build the circuit and measure it.
        let graph = build_dense_transformer(&spec, spec.max_seq_len, true).unwrap();
        let measured = opaque_serial_depth(&graph).unwrap().opaque_serial_depth;
        assert_eq!(measured, total, "{name}: formula and graph must agree");

        println!(
            "{name:<12} {:<22} {:>10} {:>12}",
            formula.to_string(),
            spec.max_seq_len,
            total
        );
    }
    println!();
    println!("(each total verified against the measured depth of the built circuit)");
    println!("full intermediate table: `opaque-depth report --family gemma3`");
}
