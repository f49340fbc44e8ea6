//! Mixture-of-experts vs a dense model of similar scale: depth and
//! parameter budget side by side.
//!
//! ```bash
//! cargo run -p opaque-depth --example moe_vs_dense
//! ```

use opaque_depth::builders::{build_dense_transformer, build_moe_transformer, parameter_count_moe};
use opaque_depth::commands::bundled_config;
use opaque_depth::config::{parse_config, ArchParams};
use opaque_depth::depth::opaque_serial_depth;

fn main() {
    let moe_config = parse_config(bundled_config("moe-table5").unwrap()).unwrap();
    let ArchParams::Moe(moe) = moe_config.arch else {
        unreachable!()
    };
    let dense_config = parse_config(bundled_config("gemma3-12b").unwrap()).unwrap();
    let ArchParams::Dense(dense) = dense_config.arch else {
        unreachable!()
    };

    let t = moe.seq_len;
    let moe_depth = opaque_serial_depth(&build_moe_transformer(&moe).unwrap())
        .unwrap()
        .opaque_serial_depth;
    let dense_depth = opaque_serial_depth(&build_dense_transformer(&dense, t, true).unwrap())
        .unwrap()
        .opaque_serial_depth;
    let params = parameter_count_moe(&moe).unwrap();

    println!("sequence length: {t}");
    println!();
    println!("moe (64 experts, 8 per token, 28 layers):");
    println!("  opaque serial depth: {moe_depth}");
    println!(
        "  parameters: {:.2}B total, {:.2}B active per token",
        params.total as f64 / 1e9,
        params.active as f64 / 1e9
    );
    println!();
    println!("dense 12B (48 layers):");
    println!("  opaque serial depth: {dense_depth}");
    println!();
    println!(
        "routing spends parameters in parallel experts instead of serial layers: \
         {:.1}x as many total as active parameters, at {:.2}x the dense model's depth",
        params.total as f64 / params.active as f64,
        moe_depth as f64 / dense_depth as f64
    );
}
