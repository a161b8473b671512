//! Trial-level data parallelism.
//!
//! With the `parallel` feature (default) trials run on a rayon pool; without
//! it, or with `jobs == Some(1)`, they run in order on the calling thread.
//! Output is always indexed by trial, so results do not depend on scheduling.

/// Worker count for trial pools. `None` uses every available core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Jobs(pub Option<usize>);

impl Jobs {
    pub const SEQUENTIAL: Jobs = Jobs(Some(1));
}

pub fn map_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, F>(n: usize, jobs: Jobs, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    let run = || (0..n).into_par_iter().map(&f).collect();
    match jobs.0 {
        None => run(),
        Some(width) => match rayon::ThreadPoolBuilder::new().num_threads(width).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
    }
}

/// Maps `f` over `0..n`, in parallel when available and requested.
pub fn map_trials<T, F>(n: usize, jobs: Jobs, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if jobs == Jobs::SEQUENTIAL {
        return map_sequential(n, f);
    }
    #[cfg(feature = "parallel")]
    {
        map_parallel(n, jobs, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(n, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_by_index() {
        let seq = map_trials(100, Jobs::SEQUENTIAL, |i| i * i);
        let par = map_trials(100, Jobs(Some(4)), |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
