//! Bounded worker pool for the per-phase tasks.
//!
//! Each task is a pure function of its input; results come back in input
//! order regardless of the worker count, so a single writer can merge them
//! deterministically. One worker means a plain sequential loop.

use rayon::prelude::*;

use crate::error::CliError;

/// Map `f` over `inputs`, preserving order, on `workers` threads.
pub fn map_ordered<I, T, F>(workers: usize, inputs: &[I], f: F) -> Result<Vec<T>, CliError>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    if workers <= 1 {
        return Ok(inputs.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| inputs.par_iter().map(f).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_preserves_input_order() {
        let inputs: Vec<f64> = (0..100).map(f64::from).collect();
        let serial = map_ordered(1, &inputs, |x| x * x).unwrap();
        let parallel = map_ordered(4, &inputs, |x| x * x).unwrap();
        assert_eq!(serial, parallel);
    }
}
