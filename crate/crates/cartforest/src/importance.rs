//! Permutation variable importance.
//!
//! VI(X^j) is the mean over trees of the tree's out-of-bag error increase
//! after permuting the j-th variable's values within that tree's OOB sample
//! (the per-tree-error version: no aggregation step is involved, so the
//! permutation effect is not washed out). Values are raw, not normalized.
//! Grouped importance permutes all columns of a group with one shared
//! permutation of the OOB row order.

use crate::cart::{FeatureRow, Tree};
use crate::data::{Dataset, Task};
use crate::ensemble::{train_forest, Forest, ForestParams};
use crate::error::{Error, Result};
use crate::rng::{rng_from, seed_chain, tags};
use rand::seq::SliceRandom;
use rayon::prelude::*;

/// Per-variable (or per-group) importance from one forest.
#[derive(Debug, Clone)]
pub struct VariableImportance {
    pub values: Vec<f64>,
    /// Trees with an empty OOB sample, skipped for every variable.
    pub skipped_trees: usize,
}

/// Importance replicated over independently trained forests.
#[derive(Debug, Clone)]
pub struct ImportanceReport {
    pub names: Vec<String>,
    /// Mean VI per variable across replications.
    pub mean: Vec<f64>,
    /// Sample standard deviation per variable across replications (0 when
    /// `nrep == 1`; see `sd_degenerate`).
    pub sd: Vec<f64>,
    /// Raw per-replication values, `per_rep[r][j]`.
    pub per_rep: Vec<Vec<f64>>,
    /// Variable indices sorted by decreasing mean VI.
    pub ranking: Vec<usize>,
    pub nrep: usize,
    /// True when the standard deviation is undefined (single replication).
    pub sd_degenerate: bool,
}

impl ImportanceReport {
    /// CSV rendering: `variable,mean_vi,sd_vi,rank` in rank order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variable,mean_vi,sd_vi,rank\n");
        for (rank, &j) in self.ranking.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.names[j],
                self.mean[j],
                self.sd[j],
                rank + 1
            ));
        }
        out
    }
}

/// A dataset row with some columns replaced by permuted OOB values.
struct PermutedRow<'a> {
    ds: &'a Dataset,
    row: usize,
    vars: &'a [usize],
    /// `replacement[v][k]`: value of group column `v` for OOB position `k`.
    replacement: &'a [Vec<Option<f64>>],
    pos: usize,
}

impl FeatureRow for PermutedRow<'_> {
    #[inline]
    fn value(&self, var: usize) -> Option<f64> {
        match self.vars.iter().position(|&v| v == var) {
            Some(slot) => self.replacement[slot][self.pos],
            None => self.ds.feature(self.row, var),
        }
    }
}

fn tree_loss(tree: &Tree, ds: &Dataset, row: &impl FeatureRow, target_row: usize) -> f64 {
    match ds.task() {
        Task::Regression => {
            let d = tree.predict(row).as_value() - ds.y_num(target_row);
            d * d
        }
        Task::Classification { .. } => {
            f64::from(tree.predict(row).class() != ds.y_class(target_row))
        }
    }
}

/// Core permutation-importance loop over an explicit variable grouping.
/// Permutation streams derive from `(seed, tree index, group index)`, so a
/// singleton grouping reproduces single-variable importance bit-exactly.
fn importance_core(
    forest: &Forest,
    ds: &Dataset,
    groups: &[Vec<usize>],
    seed: u64,
) -> Result<VariableImportance> {
    if !forest.oob_available {
        return Err(Error::Degenerate(
            "importance unavailable: forest has no usable OOB samples".into(),
        ));
    }
    if forest.data_fingerprint != ds.fingerprint() {
        return Err(Error::Argument(
            "importance requires the exact training dataset".into(),
        ));
    }
    let mut seen = vec![false; ds.n_columns()];
    for group in groups {
        if group.is_empty() {
            return Err(Error::Argument("empty variable group".into()));
        }
        for &v in group {
            if v >= ds.n_columns() {
                return Err(Error::Argument(format!("variable {v} out of range")));
            }
            if seen[v] {
                return Err(Error::Argument(format!(
                    "variable {v} appears in more than one group"
                )));
            }
            seen[v] = true;
        }
    }

    // per tree: Some(per-group error difference), or None when the tree has
    // no OOB rows
    let per_tree: Vec<Option<Vec<f64>>> = forest
        .trees
        .par_iter()
        .enumerate()
        .map(|(l, member)| {
            let oob: Vec<usize> = member.plan.oob_rows().collect();
            if oob.is_empty() {
                return None;
            }
            let n_oob = oob.len() as f64;
            let base_err: f64 = oob
                .iter()
                .map(|&row| {
                    tree_loss(&member.tree, ds, &crate::cart::DatasetRow { ds, row }, row)
                })
                .sum::<f64>()
                / n_oob;
            let mut diffs = Vec::with_capacity(groups.len());
            for (gi, group) in groups.iter().enumerate() {
                let mut perm: Vec<usize> = (0..oob.len()).collect();
                perm.shuffle(&mut rng_from(seed, &[tags::PERMUTE, l as u64, gi as u64]));
                let replacement: Vec<Vec<Option<f64>>> = group
                    .iter()
                    .map(|&v| perm.iter().map(|&k| ds.feature(oob[k], v)).collect())
                    .collect();
                let perm_err: f64 = oob
                    .iter()
                    .enumerate()
                    .map(|(pos, &row)| {
                        let view = PermutedRow {
                            ds,
                            row,
                            vars: group,
                            replacement: &replacement,
                            pos,
                        };
                        tree_loss(&member.tree, ds, &view, row)
                    })
                    .sum::<f64>()
                    / n_oob;
                diffs.push(perm_err - base_err);
            }
            Some(diffs)
        })
        .collect();

    let contributing = per_tree.iter().flatten().count();
    if contributing == 0 {
        return Err(Error::Degenerate(
            "every tree has an empty OOB sample".into(),
        ));
    }
    // accumulate in tree order so the result is independent of scheduling
    let mut values = vec![0.0; groups.len()];
    for diffs in per_tree.iter().flatten() {
        for (v, d) in values.iter_mut().zip(diffs) {
            *v += d;
        }
    }
    for v in &mut values {
        *v /= contributing as f64;
    }
    Ok(VariableImportance {
        values,
        skipped_trees: forest.trees.len() - contributing,
    })
}

/// Permutation importance of every variable.
pub fn variable_importance(forest: &Forest, ds: &Dataset, seed: u64) -> Result<VariableImportance> {
    let groups: Vec<Vec<usize>> = (0..ds.n_columns()).map(|j| vec![j]).collect();
    importance_core(forest, ds, &groups, seed)
}

/// Permutation importance of variable groups: one shared permutation of the
/// OOB row order is applied jointly to all columns of a group.
pub fn grouped_importance(
    forest: &Forest,
    ds: &Dataset,
    groups: &[Vec<usize>],
    seed: u64,
) -> Result<VariableImportance> {
    importance_core(forest, ds, groups, seed)
}

/// Trains `nrep` independent forests and reports mean, spread, and ranking
/// of the per-forest variable importances.
pub fn replicated_importance(
    ds: &Dataset,
    params: &ForestParams,
    nrep: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    let groups: Vec<Vec<usize>> = (0..ds.n_columns()).map(|j| vec![j]).collect();
    let names = ds.columns().iter().map(|c| c.name.clone()).collect();
    replicated_grouped_importance(ds, params, &groups, names, nrep, seed)
}

/// Replicated importance over an explicit grouping (one entry per group).
pub fn replicated_grouped_importance(
    ds: &Dataset,
    params: &ForestParams,
    groups: &[Vec<usize>],
    names: Vec<String>,
    nrep: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if nrep == 0 {
        return Err(Error::Argument("nrep must be at least 1".into()));
    }
    if names.len() != groups.len() {
        return Err(Error::Argument(format!(
            "{} names for {} groups",
            names.len(),
            groups.len()
        )));
    }
    let per_rep: Result<Vec<Vec<f64>>> = (0..nrep)
        .map(|r| {
            let mut rep_params = params.clone();
            rep_params.seed = seed_chain(seed, &[tags::REPLICATE, r as u64]);
            let forest = train_forest(ds, &rep_params)?;
            let vi = importance_core(
                &forest,
                ds,
                groups,
                seed_chain(seed, &[tags::PERMUTE, r as u64]),
            )?;
            Ok(vi.values)
        })
        .collect();
    let per_rep = per_rep?;
    let p = groups.len();
    let mut mean = vec![0.0; p];
    for rep in &per_rep {
        for (m, v) in mean.iter_mut().zip(rep) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nrep as f64;
    }
    let sd_degenerate = nrep == 1;
    let sd: Vec<f64> = (0..p)
        .map(|j| {
            if sd_degenerate {
                0.0
            } else {
                let var = per_rep
                    .iter()
                    .map(|rep| (rep[j] - mean[j]) * (rep[j] - mean[j]))
                    .sum::<f64>()
                    / (nrep - 1) as f64;
                var.sqrt()
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..p).collect();
    ranking.sort_by(|&a, &b| mean[b].partial_cmp(&mean[a]).unwrap().then(a.cmp(&b)));
    Ok(ImportanceReport {
        names,
        mean,
        sd,
        per_rep,
        ranking,
        nrep,
        sd_degenerate,
    })
}
