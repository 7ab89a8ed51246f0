//! Two-step variable selection on top of replicated permutation importance.
//!
//! Step 1 ranks variables by mean VI and discards those below a data-driven
//! threshold (the minimum leaf prediction of a pruned CART tree fitted to
//! the rank → VI-standard-deviation profile). Step 2a (interpretation) grows
//! nested top-k models and keeps the smallest one whose mean OOB error is
//! within one standard deviation of the best. Step 2b (prediction)
//! re-introduces the interpretation variables one by one, keeping a variable
//! only when it lowers the OOB error by more than the mean jump between
//! consecutive nested models.

use crate::cart::{select_subtree_cv, GrowSettings, SelectionRule};
use crate::data::{Column, ColumnKind, Dataset, Target};
use crate::ensemble::{oob_error, train_forest, ForestParams};
use crate::error::{Error, Result};
use crate::importance::{replicated_importance, ImportanceReport};
use crate::rng::{seed_chain, tags};
use rayon::prelude::*;

/// One candidate evaluation in the prediction step.
#[derive(Debug, Clone)]
pub struct PredictionStep {
    /// Variable considered (original column index).
    pub var: usize,
    /// Mean OOB error of the model including this variable.
    pub error: f64,
    pub added: bool,
}

/// Outcome of the full selection pipeline.
#[derive(Debug, Clone)]
pub struct SelectionReport {
    pub importance: ImportanceReport,
    /// VI threshold (minimum leaf prediction of the sd-profile CART tree).
    pub threshold: f64,
    /// True when thresholding eliminated everything and the top variable was
    /// kept as a fallback.
    pub threshold_fallback: bool,
    /// Variables kept after thresholding, in decreasing-VI order.
    pub kept: Vec<usize>,
    /// Interpretation set (prefix of `kept`).
    pub interpretation: Vec<usize>,
    /// Prediction set (subsequence of `interpretation`).
    pub prediction: Vec<usize>,
    /// Per-k (mean OOB error, sd over replications) of the nested top-k
    /// models, k = 1..=kept.len().
    pub interpretation_curve: Vec<(f64, f64)>,
    /// Mean-jump threshold used by the prediction step.
    pub mean_jump: f64,
    /// True when the jump threshold was undefined (m' = m) and 0 was used.
    pub mean_jump_fallback: bool,
    pub prediction_path: Vec<PredictionStep>,
    pub nrep_ranking: usize,
    pub nrep_models: usize,
}

/// Step 1: VI thresholding. Fits a CV-pruned CART regression tree to
/// (rank, sd of VI), takes the minimum leaf prediction as the threshold, and
/// keeps the variables whose mean VI strictly exceeds it (rank order
/// preserved). If everything is eliminated the top-ranked variable is kept
/// and the outcome flagged.
pub fn threshold_step(report: &ImportanceReport) -> Result<(Vec<usize>, f64, bool)> {
    let p = report.ranking.len();
    if p == 0 {
        return Err(Error::Argument("no variables to threshold".into()));
    }
    let sds: Vec<f64> = report.ranking.iter().map(|&j| report.sd[j]).collect();
    let threshold = if p == 1 {
        sds[0]
    } else {
        let ds = Dataset::new(
            vec![Column {
                name: "rank".into(),
                kind: ColumnKind::Numeric,
                values: (1..=p).map(|r| r as f64).collect(),
                missing: vec![false; p],
            }],
            Target::Regression {
                name: "sd".into(),
                values: sds.clone(),
            },
        )?;
        let folds = 10.min(p);
        let (tree, _, _) =
            select_subtree_cv(&ds, &GrowSettings::cart(), folds, SelectionRule::OneSe, 0)?;
        tree.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.prediction.as_value())
            .fold(f64::INFINITY, f64::min)
    };
    let kept: Vec<usize> = report
        .ranking
        .iter()
        .copied()
        .filter(|&j| report.mean[j] > threshold)
        .collect();
    if kept.is_empty() {
        Ok((vec![report.ranking[0]], threshold, true))
    } else {
        Ok((kept, threshold, false))
    }
}

/// Mean OOB error and its spread over `nrep` forests trained on the given
/// feature columns with seeds derived from `(seed, tag)`.
fn model_error(
    ds: &Dataset,
    vars: &[usize],
    params: &ForestParams,
    nrep: usize,
    seed: u64,
    tag: &[u64],
) -> Result<(f64, f64)> {
    let restricted = ds.select_columns(vars);
    let errors: Result<Vec<f64>> = (0..nrep)
        .into_par_iter()
        .map(|r| {
            let mut rep_params = params.clone();
            rep_params.mtry = params.mtry.map(|m| m.min(vars.len()));
            rep_params.seed = seed_chain(seed, &[tag, &[r as u64]].concat());
            let forest = train_forest(&restricted, &rep_params)?;
            Ok(oob_error(&forest, &restricted)?.error)
        })
        .collect();
    let errors = errors?;
    let mean = errors.iter().sum::<f64>() / nrep as f64;
    let sd = if nrep > 1 {
        (errors.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>() / (nrep - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, sd))
}

/// Step 2a: nested-model interpretation set. Returns the selected prefix of
/// `kept` and the full error curve over k = 1..=m.
pub fn interpretation_step(
    ds: &Dataset,
    kept: &[usize],
    params: &ForestParams,
    nrep: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<(f64, f64)>)> {
    if kept.is_empty() {
        return Err(Error::Argument("interpretation step needs at least one variable".into()));
    }
    let m = kept.len();
    let curve: Result<Vec<(f64, f64)>> = (1..=m)
        .map(|k| {
            model_error(
                ds,
                &kept[..k],
                params,
                nrep,
                seed,
                &[tags::INTERP, k as u64],
            )
        })
        .collect();
    let curve = curve?;
    let chosen = interpretation_choice(&curve);
    Ok((kept[..=chosen].to_vec(), curve))
}

/// Index of the smallest nested model whose mean error is within one
/// standard deviation (at the minimizer) of the smallest mean error.
pub fn interpretation_choice(curve: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for k in 1..curve.len() {
        if curve[k].0 < curve[best].0 {
            best = k;
        }
    }
    let limit = curve[best].0 + curve[best].1;
    (0..curve.len())
        .find(|&k| curve[k].0 <= limit)
        .expect("the minimizer satisfies its own limit")
}

/// Eq.-style mean jump: mean absolute first difference of the nested-model
/// OOB errors between the m'-variable and m-variable models. `curve[k-1]`
/// holds errOOB(k).
pub fn mean_jump_threshold(curve: &[(f64, f64)], m_prime: usize, m: usize) -> Option<f64> {
    if m_prime >= m {
        return None;
    }
    let sum: f64 = (m_prime..m)
        .map(|j| (curve[j].0 - curve[j - 1].0).abs())
        .sum();
    Some(sum / (m - m_prime) as f64)
}

/// Step 2b: sequential introduction. Starting from the top-ranked variable,
/// each next interpretation variable is kept only when it lowers the model's
/// OOB error by more than the jump threshold.
pub fn prediction_step(
    ds: &Dataset,
    interpretation: &[usize],
    curve: &[(f64, f64)],
    m: usize,
    params: &ForestParams,
    nrep: usize,
    seed: u64,
) -> Result<(Vec<usize>, f64, bool, Vec<PredictionStep>)> {
    if interpretation.is_empty() {
        return Err(Error::Argument("prediction step needs at least one variable".into()));
    }
    let m_prime = interpretation.len();
    let (threshold, fallback) = match mean_jump_threshold(curve, m_prime, m) {
        Some(t) => (t, false),
        None => (0.0, true),
    };
    let mut selected = vec![interpretation[0]];
    let (mut current_error, _) = model_error(
        ds,
        &selected,
        params,
        nrep,
        seed,
        &[tags::PREDICT_STEP, 0],
    )?;
    let mut path = vec![PredictionStep {
        var: interpretation[0],
        error: current_error,
        added: true,
    }];
    for (step, &var) in interpretation.iter().enumerate().skip(1) {
        let mut candidate = selected.clone();
        candidate.push(var);
        let (err, _) = model_error(
            ds,
            &candidate,
            params,
            nrep,
            seed,
            &[tags::PREDICT_STEP, step as u64],
        )?;
        let added = err < current_error - threshold;
        if added {
            selected = candidate;
            current_error = err;
        }
        path.push(PredictionStep {
            var,
            error: err,
            added,
        });
    }
    Ok((selected, threshold, fallback, path))
}

/// Replication counts for the pipeline: `ranking` forests for the VI
/// ranking, `models` forests per nested model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionReps {
    pub ranking: usize,
    pub models: usize,
}

impl Default for SelectionReps {
    fn default() -> Self {
        SelectionReps {
            ranking: 50,
            models: 25,
        }
    }
}

/// The full pipeline: replicated importance → thresholding → interpretation
/// → prediction.
pub fn vsurf(
    ds: &Dataset,
    params: &ForestParams,
    reps: SelectionReps,
    seed: u64,
) -> Result<SelectionReport> {
    let importance = replicated_importance(
        ds,
        params,
        reps.ranking,
        seed_chain(seed, &[tags::REPLICATE]),
    )?;
    let (kept, threshold, threshold_fallback) = threshold_step(&importance)?;
    let (interpretation, curve) = interpretation_step(
        ds,
        &kept,
        params,
        reps.models,
        seed_chain(seed, &[tags::INTERP]),
    )?;
    let (prediction, mean_jump, mean_jump_fallback, prediction_path) = prediction_step(
        ds,
        &interpretation,
        &curve,
        kept.len(),
        params,
        reps.models,
        seed_chain(seed, &[tags::PREDICT_STEP]),
    )?;
    Ok(SelectionReport {
        importance,
        threshold,
        threshold_fallback,
        kept,
        interpretation,
        prediction,
        interpretation_curve: curve,
        mean_jump,
        mean_jump_fallback,
        prediction_path,
        nrep_ranking: reps.ranking,
        nrep_models: reps.models,
    })
}
