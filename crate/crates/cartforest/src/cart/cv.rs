//! Cross-validated choice of a pruned subtree.

use super::{prune_sequence, DatasetRow, GrowSettings, PruningSequence, Tree};
use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::rng::{rng_from, tags};
use rand::seq::SliceRandom;

/// Which point of the validation curve to select.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    /// The subtree with the smallest validation error.
    Min,
    /// The smallest subtree whose validation error is within one standard
    /// error of the minimum.
    OneSe,
}

/// Validation curve over the pruning sequence of the full training data.
#[derive(Debug, Clone)]
pub struct CvCurve {
    pub alphas: Vec<f64>,
    /// Geometric-mean evaluation penalties β_k = √(α_k α_{k+1}).
    pub betas: Vec<f64>,
    pub leaf_counts: Vec<usize>,
    pub errors: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Index of the error minimizer (ties resolved towards fewer leaves).
    pub chosen_min: usize,
    /// Index chosen by the 1-SE rule.
    pub chosen_one_se: usize,
}

/// Grows on the full data, prunes, and evaluates every subtree by k-fold
/// cross-validation: per fold, a tree grown on the fold complement is pruned
/// and, for each β_k, the subtree optimal at penalty β_k predicts the held
/// out fold. Returns the selected subtree, the full-data pruning sequence,
/// and the validation curve.
pub fn select_subtree_cv(
    ds: &Dataset,
    settings: &GrowSettings,
    folds: usize,
    rule: SelectionRule,
    seed: u64,
) -> Result<(Tree, PruningSequence, CvCurve)> {
    let n = ds.n_rows();
    if folds < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::Argument(format!("{folds} folds for {n} rows")));
    }
    let full_tree = super::grow_maximal(ds, settings, seed)?;
    let sequence = prune_sequence(&full_tree);
    let k_count = sequence.len();

    // evaluation penalties: geometric means of consecutive alphas; the last
    // subtree (the root) is evaluated at a penalty beyond every critical one
    let betas: Vec<f64> = (0..k_count)
        .map(|k| {
            if k + 1 < k_count {
                (sequence.alphas[k] * sequence.alphas[k + 1]).sqrt()
            } else {
                sequence.alphas[k] * 1e6
            }
        })
        .collect();

    // deterministic fold assignment
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(seed, &[tags::FOLDS]));
    let mut fold_of = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        fold_of[row] = pos % folds;
    }

    // per-observation loss per curve point
    let mut losses: Vec<Vec<f64>> = vec![vec![0.0; n]; k_count];
    for fold in 0..folds {
        let weights: Vec<u32> = (0..n).map(|i| u32::from(fold_of[i] != fold)).collect();
        let fold_tree = super::grow_weighted(ds, &weights, settings, seed)?;
        let fold_seq = prune_sequence(&fold_tree);
        for (k, &beta) in betas.iter().enumerate() {
            let subtree = &fold_seq.trees[fold_seq.index_for_penalty(beta)];
            for i in (0..n).filter(|&i| fold_of[i] == fold) {
                losses[k][i] = row_loss(subtree, ds, i);
            }
        }
    }

    let nf = n as f64;
    let mut errors = Vec::with_capacity(k_count);
    let mut std_errors = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let mean = losses[k].iter().sum::<f64>() / nf;
        let se = match ds.task() {
            // binomial standard error of a misclassification proportion
            Task::Classification { .. } => (mean * (1.0 - mean) / nf).sqrt(),
            Task::Regression => {
                let var = losses[k]
                    .iter()
                    .map(|&l| (l - mean) * (l - mean))
                    .sum::<f64>()
                    / nf;
                (var / nf).sqrt()
            }
        };
        errors.push(mean);
        std_errors.push(se);
    }

    // minimizer; on ties prefer the smaller tree (larger k)
    let mut chosen_min = 0;
    for k in 1..k_count {
        if errors[k] <= errors[chosen_min] {
            chosen_min = k;
        }
    }
    // 1-SE rule: smallest tree within one standard error of the minimum
    let limit = errors[chosen_min] + std_errors[chosen_min];
    let mut chosen_one_se = chosen_min;
    for k in (chosen_min..k_count).rev() {
        if errors[k] <= limit {
            chosen_one_se = k;
            break;
        }
    }

    let chosen = match rule {
        SelectionRule::Min => chosen_min,
        SelectionRule::OneSe => chosen_one_se,
    };
    let curve = CvCurve {
        alphas: sequence.alphas.clone(),
        betas,
        leaf_counts: sequence.leaf_counts.clone(),
        errors,
        std_errors,
        chosen_min,
        chosen_one_se,
    };
    Ok((sequence.trees[chosen].clone(), sequence, curve))
}

fn row_loss(tree: &Tree, ds: &Dataset, row: usize) -> f64 {
    let pred = tree.predict(&DatasetRow { ds, row });
    match ds.task() {
        Task::Regression => {
            let d = pred.as_value() - ds.y_num(row);
            d * d
        }
        Task::Classification { .. } => f64::from(pred.class() != ds.y_class(row)),
    }
}
