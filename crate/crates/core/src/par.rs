//! Data-parallel helpers. With the `parallel` feature the closures run on the
//! rayon pool when the caller asks for it; without the feature, or with
//! `parallel = false`, everything runs sequentially in index order. Results are
//! always returned in index order, so output never depends on scheduling.

/// Evaluate `f(0..n)` and collect the results in order.
pub fn map_range<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel && n > 1 {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Whether parallel execution is compiled in.
pub const fn available() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_either_way() {
        let seq = map_range(100, false, |i| i * i);
        let par = map_range(100, true, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
