//! Tie-aware comparison of cost-sorted streams.

use std::collections::BTreeSet;
use std::fmt::Debug;

/// Compares two cost-sorted streams of `(cost, key)`: equal length, costs
/// pairwise within `tol`, and equal key sets on every level of costs that
/// lie within `tol` of their neighbours.
pub fn same_up_to_ties<K: Ord + Clone + Debug>(
    got: &[(f64, K)],
    want: &[(f64, K)],
    tol: f64,
) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!(
            "{} solutions, oracle has {}",
            got.len(),
            want.len()
        ));
    }
    for (i, ((a, _), (b, _))) in got.iter().zip(want).enumerate() {
        if (a - b).abs() > tol {
            return Err(format!("rank {}: cost {a}, oracle {b}", i + 1));
        }
    }
    let mut start = 0;
    for end in 1..=want.len() {
        if end == want.len() || want[end].0 - want[end - 1].0 > tol {
            let g: BTreeSet<K> = got[start..end].iter().map(|(_, k)| k.clone()).collect();
            let w: BTreeSet<K> = want[start..end].iter().map(|(_, k)| k.clone()).collect();
            if g != w {
                return Err(format!("level at cost {}: {g:?} vs {w:?}", want[start].0));
            }
            start = end;
        }
    }
    Ok(())
}
