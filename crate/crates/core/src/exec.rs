//! Execution strategy for batch work.
//!
//! Every reduction here splits its index range at fixed absolute chunk
//! boundaries and combines chunk results in index order, so sequential and
//! parallel execution produce bitwise-identical output. Without the
//! `parallel` feature, `Execution::Parallel` silently runs sequentially.

use num_complex::Complex64;

use crate::numeric::{ComplexSum, DdComplex};

/// Terms per chunk in chunked reductions.
pub const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `items`, keeping input order in the output.
pub fn map_ordered<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Chunk boundaries `[start, end]` (inclusive) covering `first..=last`.
pub fn chunks(first: u64, last: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    if last < first {
        return out;
    }
    let mut start = first;
    while start <= last {
        let boundary = (start / CHUNK + 1) * CHUNK - 1;
        let end = boundary.min(last);
        out.push((start, end));
        start = end + 1;
    }
    out
}

/// Sums complex terms over `first..=last`. `chunk_sum(start, end)` must
/// return the compensated sum of its slice; slices are combined exactly.
pub fn chunked_complex_sum<E, F>(
    exec: Execution,
    first: u64,
    last: u64,
    chunk_sum: F,
) -> Result<Complex64, E>
where
    E: Send,
    F: Fn(u64, u64) -> Result<ComplexSum, E> + Sync + Send,
{
    let parts = map_ordered(exec, &chunks(first, last), |&(a, b)| chunk_sum(a, b));
    let mut total = DdComplex::default();
    for part in parts {
        total.add_parts(part?.parts());
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_are_aligned_and_cover() {
        let c = chunks(10, 3 * CHUNK + 5);
        assert_eq!(c[0], (10, CHUNK - 1));
        assert_eq!(c[1], (CHUNK, 2 * CHUNK - 1));
        assert_eq!(c.last().unwrap().1, 3 * CHUNK + 5);
        assert!(chunks(5, 4).is_empty());
    }

    #[test]
    fn modes_agree_bitwise() {
        let f = |a: u64, b: u64| -> Result<ComplexSum, ()> {
            let mut s = ComplexSum::new();
            for k in a..=b {
                s.add(Complex64::new(1.0 / k as f64, (k as f64).sin()));
            }
            Ok(s)
        };
        let seq = chunked_complex_sum(Execution::Sequential, 1, 300_000, f).unwrap();
        let par = chunked_complex_sum(Execution::Parallel, 1, 300_000, f).unwrap();
        assert_eq!(seq.re.to_bits(), par.re.to_bits());
        assert_eq!(seq.im.to_bits(), par.im.to_bits());
    }
}
