/// Pairwise (cascade) summation.
///
/// The reduction tree depends only on the slice length, so the result is
/// bit-stable for a fixed input order regardless of how the values were
/// produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
