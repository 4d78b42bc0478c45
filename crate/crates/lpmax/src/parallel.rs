//! Multi-threaded replicate drivers. Replicate `k` always uses stream
//! `(seed, k)`, so output does not depend on the thread count.

use lpmax_core::field::FieldSimulator;
use lpmax_core::{RngStream, SampleMatrix};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Environment variable with the default worker count.
pub const THREADS_ENV: &str = "LPMAX_THREADS";

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = match threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v.parse().map_err(|_| CliError::Config(format!("{THREADS_ENV}={v:?} is not a count")))?,
            Err(_) => 0,
        },
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| CliError::Config(e.to_string()))
}

const CHUNK: usize = 256;

/// Parallel equivalent of `lpmax_core::field::simulate_matrix`.
pub fn simulate_matrix<F: FieldSimulator + Sync>(sim: &F, seed: u64, m: usize) -> SampleMatrix {
    let n = sim.sites().len();
    let mut values = vec![0.0; m * n];
    values.par_chunks_mut(n * CHUNK).enumerate().for_each_init(Vec::new, |scratch, (c, block)| {
        for (j, row) in block.chunks_exact_mut(n).enumerate() {
            let k = (c * CHUNK + j) as u64;
            sim.simulate_into(&mut RngStream::new(seed, k).rng(), row, scratch);
        }
    });
    SampleMatrix::from_values(sim.sites().clone(), values).expect("rows fill the matrix")
}
