//! Why recurrence matters: RNN depth grows linearly with sequence length,
//! attention only logarithmically.
//!
//! ```bash
//! cargo run -p opaque-depth --example rnn_scaling
//! ```

use opaque_depth::builders::build_rnn_stack;
use opaque_depth::depth::opaque_serial_depth;
use opaque_depth::formulas::{rnn_cell_depth, rnn_grid_depth};

fn main() {
    let (layers, dim) = (4u64, 64u64);
    println!("{layers}-layer RNN stack, state dimension {dim}");
    println!("{:>6} {:>8} {:>10}", "T", "depth", "formula");
    for t in [1u64, 2, 4, 8, 16, 32, 64] {
        let graph = build_rnn_stack(layers, dim, t).unwrap();
        let depth = opaque_serial_depth(&graph).unwrap().opaque_serial_depth;
        let formula = rnn_grid_depth(layers, dim, t);
        assert_eq!(depth, formula);
        println!("{t:>6} {depth:>8} {formula:>10}");
    }
    println!();
    println!(
        "every extra token adds exactly {} to the depth (one full cell), \
         while a global-attention transformer adds 2 per *doubling* of T",
        rnn_cell_depth(dim)
    );
}
