//! Resampling plans: bootstrap, subsample, BLB weights, identity.

use crate::error::{Error, Result};
use crate::rng::{rng_from, tags, Rng};
use rand::Rng as _;

/// How a resample is drawn from `n` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleKind {
    /// `n` i.i.d. uniform draws with replacement.
    Bootstrap,
    /// `k < n` distinct rows, each with multiplicity 1.
    Subsample { k: usize },
    /// `m <= n` distinct rows carrying total weight `n`, distributed by a
    /// uniform multinomial with `n` trials over the `m` chosen rows.
    Blb { m: usize },
    /// Every row once; no randomness consumed.
    Identity,
}

/// Per-row integer multiplicities of one resample. Rows with multiplicity 0
/// are out-of-bag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResamplePlan {
    pub kind: ResampleKind,
    pub multiplicities: Vec<u32>,
}

impl ResamplePlan {
    /// Declared total sample size (sum of multiplicities).
    pub fn sample_size(&self) -> u64 {
        self.multiplicities.iter().map(|&w| w as u64).sum()
    }

    /// Rows with multiplicity 0.
    pub fn oob_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.multiplicities
            .iter()
            .enumerate()
            .filter(|(_, &w)| w == 0)
            .map(|(i, _)| i)
    }

    #[inline]
    pub fn is_in_bag(&self, row: usize) -> bool {
        self.multiplicities[row] > 0
    }

    pub fn n_rows(&self) -> usize {
        self.multiplicities.len()
    }
}

/// Draws a resample plan for `n` rows. Pure function of `(n, kind, seed)`.
pub fn draw_resample(n: usize, kind: ResampleKind, seed: u64) -> Result<ResamplePlan> {
    let mut rng = rng_from(seed, &[tags::RESAMPLE]);
    draw_resample_with(n, kind, &mut rng)
}

/// Same as [`draw_resample`] but consuming an existing stream.
pub fn draw_resample_with(n: usize, kind: ResampleKind, rng: &mut Rng) -> Result<ResamplePlan> {
    if n == 0 {
        return Err(Error::Argument("cannot resample 0 rows".into()));
    }
    let multiplicities = match kind {
        ResampleKind::Identity => vec![1u32; n],
        ResampleKind::Bootstrap => {
            let mut m = vec![0u32; n];
            for _ in 0..n {
                m[rng.random_range(0..n)] += 1;
            }
            m
        }
        ResampleKind::Subsample { k } => {
            if k == 0 || k >= n {
                return Err(Error::Argument(format!(
                    "subsample size must be in 1..{n}, got {k}"
                )));
            }
            let mut m = vec![0u32; n];
            for i in rand::seq::index::sample(rng, n, k) {
                m[i] = 1;
            }
            m
        }
        ResampleKind::Blb { m: distinct } => {
            if distinct == 0 || distinct > n {
                return Err(Error::Argument(format!(
                    "blb distinct count must be in 1..={n}, got {distinct}"
                )));
            }
            let chosen = rand::seq::index::sample(rng, n, distinct).into_vec();
            let mut m = vec![0u32; n];
            // multinomial(n; 1/m, ..., 1/m) as n uniform cell draws; in the
            // m << n regime every chosen cell is hit with overwhelming
            // probability, and at m = n this coincides with a plain bootstrap
            for _ in 0..n {
                m[chosen[rng.random_range(0..distinct)]] += 1;
            }
            m
        }
    };
    Ok(ResamplePlan {
        kind,
        multiplicities,
    })
}
