//! Partitioned (map/reduce-style) forest training and BLB-weighted training.
//!
//! Blocks are trained independently (map) and the sub-forests are merged by
//! tree concatenation (reduce). Workers are an in-process thread pool; the
//! contract — block-local training, key-less merge, per-block OOB errors —
//! matches the distributed formulation. Block `b` trains with seed
//! `seed + b` (wrapping), so a single-block run reproduces plain training
//! bit for bit.

use crate::data::{Dataset, ResampleKind, Target};
use crate::ensemble::{
    merge_forests, oob_error, tree_seed, Forest, ForestParams, SchemaInfo, TrainedTree,
};
use crate::cart::grow_weighted;
use crate::error::{Error, Result};
use crate::rng::{rng_from, seed_chain, tags};
use rand::seq::SliceRandom;
use rayon::prelude::*;

/// How rows are assigned to blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionStrategy {
    /// Order-preserving equal-size blocks.
    Contiguous,
    /// Uniform shuffle, then equal-size blocks.
    Random,
    /// Per-class proportional allocation (classification) or
    /// quantile-balanced allocation on Y (regression).
    StratifiedY,
}

/// Disjoint row blocks covering the whole dataset; sizes differ by at most 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    pub blocks: Vec<Vec<usize>>,
    pub strategy: PartitionStrategy,
}

impl PartitionPlan {
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }
}

/// Map-phase output for one block.
#[derive(Debug, Clone)]
pub struct MapOutput {
    /// Constant key: every map task emits under the same key.
    pub key: u32,
    pub block_id: usize,
    pub forest: Forest,
    /// OOB error of the sub-forest, computed within its own block.
    pub oob_error: f64,
}

/// Result of partitioned training.
#[derive(Debug, Clone)]
pub struct PartitionedForest {
    /// The merged forest.
    pub forest: Forest,
    pub map_outputs: Vec<MapOutput>,
    /// Mean of the per-block OOB errors (the global OOB error of the merged
    /// forest is not available: no row is ever out-of-bag for another
    /// block's trees).
    pub mean_block_oob: f64,
    /// One message per block whose target distribution diverges from the
    /// global one.
    pub heterogeneity_warnings: Vec<String>,
}

/// Builds a partition of the rows into `q` blocks.
pub fn make_partition(
    ds: &Dataset,
    q: usize,
    strategy: PartitionStrategy,
    seed: u64,
) -> Result<PartitionPlan> {
    let n = ds.n_rows();
    if q == 0 || q > n {
        return Err(Error::Argument(format!(
            "block count must be in 1..={n}, got {q}"
        )));
    }
    let sequence: Vec<usize> = match strategy {
        PartitionStrategy::Contiguous => (0..n).collect(),
        PartitionStrategy::Random => {
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut rng_from(seed, &[tags::PARTITION]));
            rows
        }
        PartitionStrategy::StratifiedY => match ds.target() {
            Target::Classification { codes, classes, .. } => {
                // concatenate per-class row lists, then deal round-robin
                let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
                for (i, &c) in codes.iter().enumerate() {
                    per_class[c as usize].push(i);
                }
                per_class.into_iter().flatten().collect()
            }
            Target::Regression { values, .. } => {
                let mut rows: Vec<usize> = (0..n).collect();
                rows.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
                rows
            }
        },
    };
    let mut blocks: Vec<Vec<usize>> = vec![Vec::with_capacity(n / q + 1); q];
    match strategy {
        PartitionStrategy::Contiguous | PartitionStrategy::Random => {
            // equal-size chunks; the first n % q blocks take one extra row
            let base = n / q;
            let extra = n % q;
            let mut start = 0;
            for (b, block) in blocks.iter_mut().enumerate() {
                let size = base + usize::from(b < extra);
                block.extend_from_slice(&sequence[start..start + size]);
                start += size;
            }
        }
        PartitionStrategy::StratifiedY => {
            for (pos, &row) in sequence.iter().enumerate() {
                blocks[pos % q].push(row);
            }
        }
    }
    for block in &mut blocks {
        block.sort_unstable();
    }
    Ok(PartitionPlan { blocks, strategy })
}

/// Seed used for block (or BLB subsample) `index`; offset by index so a
/// single-block partition reproduces plain training with the same seed.
pub fn block_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Trains one forest per block (map) and merges them (reduce). Blocks train
/// concurrently; the merge is a deterministic concatenation in block order.
pub fn train_partitioned(
    ds: &Dataset,
    plan: &PartitionPlan,
    params: &ForestParams,
) -> Result<PartitionedForest> {
    if plan.blocks.iter().any(|b| b.is_empty()) {
        return Err(Error::Argument("every block must be non-empty".into()));
    }
    let outputs: Result<Vec<MapOutput>> = plan
        .blocks
        .par_iter()
        .enumerate()
        .map(|(b, rows)| {
            let block_ds = ds.subset(rows);
            let mut block_params = params.clone();
            block_params.seed = block_seed(params.seed, b);
            let forest = crate::ensemble::train_forest(&block_ds, &block_params)?;
            let oob = oob_error(&forest, &block_ds)?.error;
            Ok(MapOutput {
                key: 1,
                block_id: b,
                forest,
                oob_error: oob,
            })
        })
        .collect();
    let outputs = outputs?;
    let forests: Vec<Forest> = outputs.iter().map(|o| o.forest.clone()).collect();
    let merged = merge_forests(&forests)?;
    let mean_block_oob =
        outputs.iter().map(|o| o.oob_error).sum::<f64>() / outputs.len() as f64;
    let heterogeneity_warnings = heterogeneity_check(ds, plan);
    Ok(PartitionedForest {
        forest: merged,
        map_outputs: outputs,
        mean_block_oob,
        heterogeneity_warnings,
    })
}

/// Flags blocks whose target distribution diverges from the global one:
/// total-variation distance of class frequencies above 0.1, or a block mean
/// further than half a global standard deviation from the global mean.
fn heterogeneity_check(ds: &Dataset, plan: &PartitionPlan) -> Vec<String> {
    let mut warnings = Vec::new();
    match ds.target() {
        Target::Classification { codes, classes, .. } => {
            let n = codes.len() as f64;
            let mut global = vec![0.0; classes.len()];
            for &c in codes {
                global[c as usize] += 1.0 / n;
            }
            for (b, rows) in plan.blocks.iter().enumerate() {
                let nb = rows.len() as f64;
                let mut freq = vec![0.0; classes.len()];
                for &i in rows {
                    freq[codes[i] as usize] += 1.0 / nb;
                }
                let tv = 0.5
                    * freq
                        .iter()
                        .zip(&global)
                        .map(|(f, g)| (f - g).abs())
                        .sum::<f64>();
                if tv > 0.1 {
                    warnings.push(format!(
                        "block {b}: class frequencies diverge from the global distribution (total variation {tv:.3})"
                    ));
                }
            }
        }
        Target::Regression { values, .. } => {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let sd = (values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            if sd == 0.0 {
                return warnings;
            }
            for (b, rows) in plan.blocks.iter().enumerate() {
                let bm = rows.iter().map(|&i| values[i]).sum::<f64>() / rows.len() as f64;
                let gap = (bm - mean).abs() / sd;
                if gap > 0.5 {
                    warnings.push(format!(
                        "block {b}: mean response is {gap:.2} global standard deviations away from the global mean"
                    ));
                }
            }
        }
    }
    warnings
}

/// BLB training: per subsample, draw a size-n bootstrap supported on `m`
/// distinct rows and train a sub-forest with those multiplicities as
/// weights; all sub-forests are merged. Tree `l` of subsample `s` uses the
/// seed of tree `l` in a forest seeded with `block_seed(seed, s)`.
pub fn train_blb(
    ds: &Dataset,
    m: usize,
    n_subsamples: usize,
    params: &ForestParams,
) -> Result<Forest> {
    let n = ds.n_rows();
    if ds.is_degenerate() {
        return Err(Error::Argument("cannot train on an empty dataset".into()));
    }
    if m == 0 || m > n {
        return Err(Error::Argument(format!(
            "blb distinct count must be in 1..={n}, got {m}"
        )));
    }
    if n_subsamples == 0 {
        return Err(Error::Argument("need at least one subsample".into()));
    }
    if params.ntree == 0 {
        return Err(Error::Argument("ntree must be at least 1".into()));
    }
    let task = ds.task();
    let p = ds.n_columns();
    let settings = crate::ensemble::grow_settings_for(params, task, p);
    let schema = SchemaInfo::of(ds);
    let fingerprint = ds.fingerprint();
    let sub_forests: Result<Vec<Forest>> = (0..n_subsamples)
        .into_par_iter()
        .map(|s| {
            let plan = crate::data::draw_resample(
                n,
                ResampleKind::Blb { m },
                seed_chain(params.seed, &[tags::BLB_PLAN, s as u64]),
            )?;
            let sub_seed = block_seed(params.seed, s);
            let trees: Result<Vec<TrainedTree>> = (0..params.ntree)
                .into_par_iter()
                .map(|l| {
                    let seed = tree_seed(sub_seed, l);
                    let tree = grow_weighted(ds, &plan.multiplicities, &settings, seed)?;
                    Ok(TrainedTree {
                        tree,
                        plan: plan.clone(),
                        seed,
                    })
                })
                .collect();
            let mut sub_params = params.clone();
            sub_params.seed = sub_seed;
            sub_params.resample = Some(ResampleKind::Blb { m });
            Ok(Forest {
                trees: trees?,
                params: sub_params,
                task,
                schema: schema.clone(),
                n_rows: n,
                data_fingerprint: fingerprint,
                oob_available: true,
            })
        })
        .collect();
    merge_forests(&sub_forests?)
}
