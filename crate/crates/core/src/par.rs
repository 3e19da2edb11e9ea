//! Fixed-order parallel reductions.
//!
//! Work is split into blocks of constant size independent of the thread
//! count; block partials are combined left to right, so results are
//! bitwise reproducible on any machine.

use rayon::prelude::*;

pub const BLOCK: usize = 512;

/// Sums `f(i)` for `i in 0..len` with a deterministic block reduction.
pub fn sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = len.div_ceil(BLOCK);
    let partials: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

/// Fills `out[i * stride .. (i+1) * stride]` with `f(i, chunk)` in parallel.
pub fn fill_chunks<F>(out: &mut [f64], stride: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    if stride == 0 {
        return;
    }
    out.par_chunks_mut(stride * BLOCK).enumerate().for_each(|(b, block)| {
        for (k, chunk) in block.chunks_mut(stride).enumerate() {
            f(b * BLOCK + k, chunk);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sum_matches_sequential_order() {
        let vals: Vec<f64> = (0..5000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = sum_by(vals.len(), |i| vals[i]);
        let b = sum_by(vals.len(), |i| vals[i]);
        assert_eq!(a.to_bits(), b.to_bits());
        let seq: f64 = vals.iter().sum();
        assert!((a - seq).abs() < 1e-12);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(sum_by(0, |_| 1.0), 0.0);
    }

    #[test]
    fn result_independent_of_pool_size() {
        let vals: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 1000) as f64 * 1e-3).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| sum_by(vals.len(), |i| vals[i]));
        let b = four.install(|| sum_by(vals.len(), |i| vals[i]));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
