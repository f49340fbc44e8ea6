//! Depth as a function of sequence length: logarithmic scaling, CSV-ready.
//!
//! ```bash
//! cargo run -p opaque-depth --example sequence_sweep > sweep.csv
//! ```

use opaque_depth::builders::build_dense_transformer;
use opaque_depth::commands::bundled_config;
use opaque_depth::config::{parse_config, ArchParams};
use opaque_depth::depth::opaque_serial_depth;
use opaque_depth::formulas::model_depth_at;

fn main() {
    let config = parse_config(bundled_config("gemma3-1b").unwrap()).unwrap();
    let ArchParams::Dense(spec) = config.arch else {
        unreachable!()
    };

    println!("T,depth,formula_depth,match");
    let mut t = 1_024u64;
    let mut previous = None;
    let mut deltas = Vec::new();
    while t <= 32_768 {
        let graph = build_dense_transformer(&spec, t, true).unwrap();
        let depth = opaque_serial_depth(&graph).unwrap().opaque_serial_depth;
        let formula = model_depth_at(&spec, t);
        println!("{t},{depth},{formula},{}", depth == formula);
        if let Some(p) = previous {
            deltas.push(depth - p);
        }
        previous = Some(depth);
        t *= 2;
    }
    eprintln!("per-doubling deltas: {deltas:?} (2 x the global-attention block count)");
}
