//! Parasite detection from per-organism execution counters.

use crate::soup::SoupWorld;

/// Strictly more than `fraction` of the window's instructions were fetched
/// from cells outside the organism's own body.
pub fn is_parasite(own: u64, foreign: u64, fraction: f64) -> bool {
    let total = own + foreign;
    total > 0 && foreign as f64 > fraction * total as f64
}

/// Ids of flagged organisms, in slot order.
pub fn detect_parasites(world: &SoupWorld, fraction: f64) -> Vec<u64> {
    world
        .organisms()
        .filter(|o| is_parasite(o.executed_own, o.executed_foreign, fraction))
        .map(|o| o.id)
        .collect()
}
