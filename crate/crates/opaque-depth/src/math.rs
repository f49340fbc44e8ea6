//! Small integer helpers shared by the depth engine and the layer calculus.

/// Ceiling of log2 for positive integers: the depth of a balanced binary
/// reduction tree over `n` leaves.
///
/// `ceil_log2(1) == 0`: a reduction over one element is free.
pub fn ceil_log2(n: u64) -> u64 {
    assert!(n >= 1, "ceil_log2 is defined for n >= 1");
    if n == 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}
