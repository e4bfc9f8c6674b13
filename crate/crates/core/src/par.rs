//! Data-parallel helpers with a sequential fallback.
//!
//! Without the `parallel` feature every mode runs on the calling thread.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Parallelism {
    /// Rayon's global pool.
    #[default]
    Auto,
    Sequential,
    /// A dedicated pool with this many workers.
    Threads(usize),
}

impl Parallelism {
    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Self::Sequential | Self::Threads(0 | 1))
    }
}

/// Folds `f` over `0..n` and merges partial accumulators with `merge`.
///
/// `merge` must be associative and commutative for the result to be
/// independent of scheduling.
pub fn fold_range<T, I, F, M>(par: Parallelism, n: u64, init: I, f: F, merge: M) -> T
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(T, u64) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..n).into_par_iter().fold(&init, &f).reduce(&init, &merge);
        match par {
            Parallelism::Auto => return run(),
            Parallelism::Threads(k) if k > 1 => {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                    return pool.install(run);
                }
            }
            _ => {}
        }
    }
    let _ = (par, &merge);
    (0..n).fold(init(), f)
}

/// `items.map(f)` with the output in input order.
pub fn map_ordered<X, Y, F>(par: Parallelism, items: &[X], f: F) -> Vec<Y>
where
    X: Sync,
    Y: Send,
    F: Fn(&X) -> Y + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match par {
            Parallelism::Auto => return items.par_iter().map(&f).collect(),
            Parallelism::Threads(k) if k > 1 => {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                    return pool.install(|| items.par_iter().map(&f).collect());
                }
            }
            _ => {}
        }
    }
    let _ = par;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_matches_across_modes() {
        let modes = [Parallelism::Sequential, Parallelism::Auto, Parallelism::Threads(3)];
        let sums: Vec<u64> = modes
            .iter()
            .map(|&p| fold_range(p, 10_000, || 0u64, |acc, i| acc + i * i, |a, b| a + b))
            .collect();
        assert!(sums.iter().all(|&s| s == sums[0]));
    }

    #[test]
    fn map_keeps_order() {
        let xs: Vec<u32> = (0..500).collect();
        for p in [Parallelism::Sequential, Parallelism::Threads(4)] {
            assert_eq!(
                map_ordered(p, &xs, |x| x * 2),
                xs.iter().map(|x| x * 2).collect::<Vec<_>>()
            );
        }
    }
}
