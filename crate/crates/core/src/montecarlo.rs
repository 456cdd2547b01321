//! Reproducible parallel trial execution.
//!
//! Every trial gets its own ChaCha8 stream seeded from
//! `(master_seed, row, trial)`, so results do not depend on how trials are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of table row `row`.
pub fn trial_seed(master_seed: u64, row: u64, trial: u64) -> u64 {
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ row.wrapping_mul(GOLDEN));
    splitmix64(b ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn trial_rng(master_seed: u64, row: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master_seed, row, trial))
}

/// How many trials to run and how.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trials {
    pub reps: usize,
    pub master_seed: u64,
    pub row: u64,
    /// `None` uses the global rayon pool; `Some(1)` runs on the calling thread.
    pub threads: Option<usize>,
}

impl Trials {
    pub fn new(reps: usize, master_seed: u64) -> Self {
        Self { reps, master_seed, row: 0, threads: None }
    }

    pub fn row(mut self, row: u64) -> Self {
        self.row = row;
        self
    }

    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    /// Runs `f(trial_index, rng)` for every trial and returns results in trial order.
    pub fn run<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync + Send,
    {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        let (seed, row) = (self.master_seed, self.row);
        let one = |i: usize| f(i, &mut trial_rng(seed, row, i as u64));
        match self.threads {
            Some(0) => Err(Error::invalid("threads must be at least 1")),
            Some(1) => (0..self.reps).map(one).collect(),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
                pool.install(|| (0..self.reps).into_par_iter().map(one).collect())
            }
            None => (0..self.reps).into_par_iter().map(one).collect(),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sample mean and its standard error `sd / √n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Summarises samples in the given order. A single sample has zero standard error.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN };
        }
        let mut s = CompensatedSum::default();
        xs.iter().for_each(|&x| s.add(x));
        let mean = s.value() / n as f64;
        if n == 1 {
            return Self { mean, std_error: 0.0 };
        }
        let mut ss = CompensatedSum::default();
        xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
        let var = ss.value() / (n - 1) as f64;
        Self { mean, std_error: (var / n as f64).sqrt() }
    }
}

/// Column-wise estimates of `k` metrics from per-trial rows.
pub fn summarize<const K: usize>(rows: &[[f64; K]]) -> [Estimate; K] {
    std::array::from_fn(|k| {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        Estimate::from_samples(&col)
    })
}
