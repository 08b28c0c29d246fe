//! Simple random sampling without replacement.

use rand::Rng;

use crate::error::{Error, Result};
use crate::population::PopulationFrame;
use crate::ustat::SampleDraw;

/// Partial Fisher–Yates shuffle over `0..N` that undoes its swaps after
/// each draw, so a draw costs O(n) and the sampler never drifts from the
/// identity permutation.
#[derive(Debug, Clone)]
pub struct IndexSampler {
    perm: Vec<usize>,
    swaps: Vec<usize>,
    out: Vec<usize>,
}

impl IndexSampler {
    pub fn new(pop_size: usize) -> Self {
        Self {
            perm: (0..pop_size).collect(),
            swaps: Vec::new(),
            out: Vec::new(),
        }
    }

    pub fn pop_size(&self) -> usize {
        self.perm.len()
    }

    /// `n` distinct indices, uniform over all subsets, in draw order.
    pub fn draw<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> &[usize] {
        let len = self.perm.len();
        assert!(n <= len, "cannot draw {n} of {len}");
        self.swaps.clear();
        self.out.clear();
        for i in 0..n {
            let j = rng.random_range(i..len);
            self.perm.swap(i, j);
            self.swaps.push(j);
            self.out.push(self.perm[i]);
        }
        for (i, &j) in self.swaps.iter().enumerate().rev() {
            self.perm.swap(i, j);
        }
        &self.out
    }
}

/// One sample of size `n` from the population, in draw order.
pub fn srswor<R: Rng + ?Sized>(pop: &PopulationFrame, n: usize, rng: &mut R) -> Result<SampleDraw> {
    let mut sampler = IndexSampler::new(pop.len());
    srswor_with(pop, n, rng, &mut sampler)
}

/// [`srswor`] reusing a sampler built for this population.
pub fn srswor_with<R: Rng + ?Sized>(
    pop: &PopulationFrame,
    n: usize,
    rng: &mut R,
    sampler: &mut IndexSampler,
) -> Result<SampleDraw> {
    let big_n = pop.len();
    if n < 2 || n >= big_n {
        return Err(Error::Size(format!(
            "sample size must satisfy 2 <= n < N, got n={n}, N={big_n}"
        )));
    }
    let values = pop.values();
    let picked = sampler.draw(n, rng).iter().map(|&i| values[i]).collect();
    SampleDraw::new(picked, big_n)
}
