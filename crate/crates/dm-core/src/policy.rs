//! Numerical truncation policy shared by the Euler-product, divisor-sum and
//! moment evaluators. Every cutoff lives here so that results can carry an
//! auditable record of how they were truncated.

use crate::arith::SIEVE_BUDGET_DEFAULT;

#[derive(Clone, Copy, Debug)]
pub struct TruncationPolicy {
    /// Euler products run over primes up to this bound.
    pub prime_cutoff: u64,
    /// Hard cap on local power-series length at each prime.
    pub series_len: usize,
    /// Half-height of truncated vertical contours.
    pub contour_height: f64,
    /// Tolerance handed to quadrature routines.
    pub quad_tol: f64,
    /// Target relative tolerance for adaptive series/local truncations.
    pub target_tol: f64,
    /// Cap on sieved table sizes (entries).
    pub sieve_budget: u64,
    /// q-series truncation for the Ramanujan-sum series.
    pub q_cutoff: u64,
    /// Worker cap for the parallelizable bulk steps.
    pub jobs: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            prime_cutoff: 10_000,
            series_len: 40,
            contour_height: 100.0,
            quad_tol: 1e-10,
            target_tol: 1e-9,
            sieve_budget: SIEVE_BUDGET_DEFAULT,
            q_cutoff: 10_000,
            jobs: 1,
        }
    }
}

impl TruncationPolicy {
    /// Wider prime cutoff for one-shot high-accuracy product evaluations.
    pub fn wide() -> Self {
        TruncationPolicy { prime_cutoff: 2_000_000, ..Default::default() }
    }

    pub fn with_prime_cutoff(mut self, cutoff: u64) -> Self {
        self.prime_cutoff = cutoff;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }
}
