//! Ordered task execution: a rayon pool when the `parallel` feature is on,
//! a plain loop otherwise. Results always come back in task order.

use crate::error::{Error, Result};

/// Maps `f` over `tasks` using up to `parallelism` worker threads.
pub fn run_ordered<T, R, F>(tasks: &[T], parallelism: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if parallelism < 1 {
        return Err(Error::Config("parallelism must be >= 1".into()));
    }
    if parallelism == 1 || tasks.len() < 2 {
        return Ok(run_sequential(tasks, f));
    }
    run_parallel(tasks, parallelism, f)
}

pub fn run_sequential<T, R, F>(tasks: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    tasks.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
fn run_parallel<T, R, F>(tasks: &[T], parallelism: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| tasks.par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<T, R, F>(tasks: &[T], _parallelism: usize, f: F) -> Result<Vec<R>>
where
    F: Fn(&T) -> R,
{
    Ok(run_sequential(tasks, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let tasks: Vec<u64> = (0..100).collect();
        let seq = run_ordered(&tasks, 1, |t| t * t).unwrap();
        let par = run_ordered(&tasks, 8, |t| t * t).unwrap();
        assert_eq!(seq, par);
        assert_eq!(par[9], 81);
    }

    #[test]
    fn zero_parallelism_rejected() {
        assert!(run_ordered(&[1], 0, |t| *t).is_err());
    }
}
