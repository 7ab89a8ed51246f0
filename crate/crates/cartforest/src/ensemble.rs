//! Forests: bagging, random-input forests, extra-randomized forests,
//! out-of-bag evaluation, and forest merging.

use crate::cart::{
    grow_weighted, DatasetRow, FeatureRow, GrowSettings, SplitMode, Tree,
};
use crate::data::{draw_resample, ColumnKind, Dataset, ResampleKind, ResamplePlan, Target, Task};
use crate::error::{Error, Result};
use crate::rng::{seed_chain, tags};
use rayon::prelude::*;

/// Feature/target declaration carried by every forest so that models can be
/// checked against prediction data.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaInfo {
    pub columns: Vec<(String, ColumnKind)>,
    pub target_name: String,
    /// Class names for classification, `None` for regression.
    pub classes: Option<Vec<String>>,
}

impl SchemaInfo {
    pub fn of(ds: &Dataset) -> Self {
        SchemaInfo {
            columns: ds
                .columns()
                .iter()
                .map(|c| (c.name.clone(), c.kind.clone()))
                .collect(),
            target_name: ds.target().name().to_string(),
            classes: match ds.target() {
                Target::Regression { .. } => None,
                Target::Classification { classes, .. } => Some(classes.clone()),
            },
        }
    }

    pub fn matches(&self, ds: &Dataset) -> bool {
        *self == SchemaInfo::of(ds)
    }
}

/// Forest hyperparameters. `None` fields resolve to the task defaults at
/// training time: mtry = ⌊√p⌋ for classification and ⌊p/3⌋ for regression
/// (at least 1), nodesize = 1 for classification and 5 for regression,
/// resampling = bootstrap for exhaustive splits and identity (no resampling)
/// for extra-randomized splits.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub ntree: usize,
    pub mtry: Option<usize>,
    pub nodesize: Option<u64>,
    pub resample: Option<ResampleKind>,
    pub split_mode: SplitMode,
    pub seed: u64,
}

impl ForestParams {
    pub fn new(seed: u64) -> Self {
        ForestParams {
            ntree: 500,
            mtry: None,
            nodesize: None,
            resample: None,
            split_mode: SplitMode::Exhaustive,
            seed,
        }
    }

    /// Default candidate-variable count for `p` features.
    pub fn default_mtry(task: Task, p: usize) -> usize {
        let m = match task {
            Task::Classification { .. } => (p as f64).sqrt().floor() as usize,
            Task::Regression => p / 3,
        };
        m.clamp(1, p.max(1))
    }

    pub fn default_nodesize(task: Task) -> u64 {
        match task {
            Task::Classification { .. } => 1,
            Task::Regression => 5,
        }
    }

    pub fn resolved_mtry(&self, task: Task, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| Self::default_mtry(task, p))
    }

    pub fn resolved_nodesize(&self, task: Task) -> u64 {
        self.nodesize.unwrap_or_else(|| Self::default_nodesize(task))
    }

    pub fn resolved_resample(&self) -> ResampleKind {
        self.resample.unwrap_or(match self.split_mode {
            SplitMode::Exhaustive => ResampleKind::Bootstrap,
            SplitMode::ExtraRandomized { .. } => ResampleKind::Identity,
        })
    }

    fn grow_settings(&self, task: Task, p: usize) -> GrowSettings {
        GrowSettings {
            min_node_size: self.resolved_nodesize(task),
            min_child_size: 1,
            mtry: Some(self.resolved_mtry(task, p)),
            split_mode: self.split_mode,
            max_surrogates: 0,
            keep_competing: false,
        }
    }
}

/// One forest member with its resample plan and derived seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedTree {
    pub tree: Tree,
    pub plan: ResamplePlan,
    pub seed: u64,
}

/// A trained forest.
#[derive(Debug, Clone)]
pub struct Forest {
    pub trees: Vec<TrainedTree>,
    pub params: ForestParams,
    pub task: Task,
    pub schema: SchemaInfo,
    /// Rows of the training dataset (plan length).
    pub n_rows: usize,
    /// Fingerprint of the training dataset; OOB statistics are only
    /// meaningful against this exact data.
    pub data_fingerprint: u64,
    /// False for merged forests whose members saw different training data.
    pub oob_available: bool,
}

/// Aggregated forest prediction. Classification exposes the per-class vote
/// counts alongside the majority class.
#[derive(Debug, Clone, PartialEq)]
pub enum ForestPrediction {
    Value(f64),
    Class { class: u32, votes: Vec<u64> },
}

impl ForestPrediction {
    pub fn as_value(&self) -> f64 {
        match self {
            ForestPrediction::Value(v) => *v,
            ForestPrediction::Class { class, .. } => *class as f64,
        }
    }

    pub fn class(&self) -> u32 {
        match self {
            ForestPrediction::Class { class, .. } => *class,
            ForestPrediction::Value(_) => panic!("class() on regression prediction"),
        }
    }

    /// Vote fractions (classification only).
    pub fn fractions(&self) -> Vec<f64> {
        match self {
            ForestPrediction::Value(_) => Vec::new(),
            ForestPrediction::Class { votes, .. } => {
                let total: u64 = votes.iter().sum();
                votes.iter().map(|&v| v as f64 / total as f64).collect()
            }
        }
    }
}

/// Error report: mean squared error for regression, misclassification
/// proportion for classification. `per_row` holds the per-observation loss
/// (`None` when the row could not be evaluated, e.g. never out-of-bag).
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub error: f64,
    pub per_row: Vec<Option<f64>>,
    pub covered: usize,
    pub excluded: usize,
}

/// Derived seed of tree `index` within a forest.
pub fn tree_seed(master: u64, index: usize) -> u64 {
    seed_chain(master, &[tags::TREE, index as u64])
}

/// Tree-growth settings a forest derives from its parameters.
pub fn grow_settings_for(params: &ForestParams, task: Task, p: usize) -> GrowSettings {
    params.grow_settings(task, p)
}

fn plan_seed(master: u64, index: usize) -> u64 {
    seed_chain(master, &[tags::RESAMPLE, index as u64])
}

/// Trains a forest of `ntree` randomized trees. Trees are grown in parallel
/// and collected in index order; every tree derives its own RNG streams from
/// `(seed, tree index)`, so results do not depend on the worker count.
pub fn train_forest(ds: &Dataset, params: &ForestParams) -> Result<Forest> {
    if ds.is_degenerate() {
        return Err(Error::Argument("cannot train on an empty dataset".into()));
    }
    if params.ntree == 0 {
        return Err(Error::Argument("ntree must be at least 1".into()));
    }
    let p = ds.n_columns();
    if p == 0 {
        return Err(Error::Argument("dataset has no feature columns".into()));
    }
    if let Some(m) = params.mtry {
        if m == 0 || m > p {
            return Err(Error::Argument(format!("mtry must be in 1..={p}, got {m}")));
        }
    }
    let task = ds.task();
    let settings = params.grow_settings(task, p);
    let resample = params.resolved_resample();
    let n = ds.n_rows();
    let trees: Result<Vec<TrainedTree>> = (0..params.ntree)
        .into_par_iter()
        .map(|l| {
            let plan = draw_resample(n, resample, plan_seed(params.seed, l))?;
            let seed = tree_seed(params.seed, l);
            let tree = grow_weighted(ds, &plan.multiplicities, &settings, seed)?;
            Ok(TrainedTree { tree, plan, seed })
        })
        .collect();
    Ok(Forest {
        trees: trees?,
        params: params.clone(),
        task,
        schema: SchemaInfo::of(ds),
        n_rows: n,
        data_fingerprint: ds.fingerprint(),
        oob_available: true,
    })
}

impl Forest {
    pub fn ntree(&self) -> usize {
        self.trees.len()
    }

    /// Aggregated prediction: mean of tree predictions for regression,
    /// majority vote for classification (ties go to the smallest class
    /// code).
    pub fn predict<R: FeatureRow>(&self, row: &R) -> ForestPrediction {
        self.predict_among(row, |_| true)
            .expect("forest has at least one tree")
    }

    /// Aggregates only the trees selected by `keep`; `None` when no tree is
    /// selected.
    pub fn predict_among<R: FeatureRow>(
        &self,
        row: &R,
        keep: impl Fn(usize) -> bool,
    ) -> Option<ForestPrediction> {
        match self.task {
            Task::Regression => {
                let mut sum = 0.0;
                let mut count = 0u64;
                for (l, t) in self.trees.iter().enumerate() {
                    if keep(l) {
                        sum += t.tree.predict(row).as_value();
                        count += 1;
                    }
                }
                (count > 0).then(|| ForestPrediction::Value(sum / count as f64))
            }
            Task::Classification { n_classes } => {
                let mut votes = vec![0u64; n_classes];
                let mut any = false;
                for (l, t) in self.trees.iter().enumerate() {
                    if keep(l) {
                        votes[t.tree.predict(row).class() as usize] += 1;
                        any = true;
                    }
                }
                any.then(|| {
                    let class = majority_vote(&votes);
                    ForestPrediction::Class { class, votes }
                })
            }
        }
    }

    /// Test-set evaluation.
    pub fn evaluate(&self, ds: &Dataset) -> Result<EvalReport> {
        if !self.schema.matches(ds) {
            return Err(Error::Schema(
                "evaluation data does not match the forest schema".into(),
            ));
        }
        let losses: Vec<f64> = (0..ds.n_rows())
            .into_par_iter()
            .map(|row| {
                let pred = self.predict(&DatasetRow { ds, row });
                loss(self.task, &pred, ds, row)
            })
            .collect();
        let n = losses.len();
        if n == 0 {
            return Err(Error::Degenerate("no rows to evaluate".into()));
        }
        Ok(EvalReport {
            error: losses.iter().sum::<f64>() / n as f64,
            per_row: losses.into_iter().map(Some).collect(),
            covered: n,
            excluded: 0,
        })
    }
}

fn majority_vote(votes: &[u64]) -> u32 {
    let mut best = 0usize;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    best as u32
}

fn loss(task: Task, pred: &ForestPrediction, ds: &Dataset, row: usize) -> f64 {
    match task {
        Task::Regression => {
            let d = pred.as_value() - ds.y_num(row);
            d * d
        }
        Task::Classification { .. } => f64::from(pred.class() != ds.y_class(row)),
    }
}

/// Out-of-bag error: each training row is predicted by aggregating only the
/// trees whose resample left it out; rows that are in-bag everywhere are
/// excluded from the average (their count is reported).
pub fn oob_error(forest: &Forest, ds_train: &Dataset) -> Result<EvalReport> {
    if !forest.oob_available {
        return Err(Error::Degenerate(
            "OOB error unavailable: merged forest members saw different training data".into(),
        ));
    }
    if forest.data_fingerprint != ds_train.fingerprint() {
        return Err(Error::Argument(
            "OOB error requires the exact training dataset".into(),
        ));
    }
    let per_row: Vec<Option<f64>> = (0..ds_train.n_rows())
        .into_par_iter()
        .map(|row| {
            forest
                .predict_among(&DatasetRow { ds: ds_train, row }, |l| {
                    !forest.trees[l].plan.is_in_bag(row)
                })
                .map(|pred| loss(forest.task, &pred, ds_train, row))
        })
        .collect();
    let covered = per_row.iter().flatten().count();
    if covered == 0 {
        return Err(Error::Degenerate(
            "no row is out-of-bag for any tree".into(),
        ));
    }
    let error = per_row.iter().flatten().sum::<f64>() / covered as f64;
    Ok(EvalReport {
        error,
        excluded: per_row.len() - covered,
        per_row,
        covered,
    })
}

/// Concatenates forests into one. Members must agree on the task and schema;
/// the out-of-bag cache stays valid only when all members were trained on
/// the same dataset.
pub fn merge_forests(forests: &[Forest]) -> Result<Forest> {
    let first = forests
        .first()
        .ok_or_else(|| Error::Argument("cannot merge zero forests".into()))?;
    for f in &forests[1..] {
        if f.task != first.task || f.schema != first.schema {
            return Err(Error::Argument(
                "cannot merge forests with different tasks or schemas".into(),
            ));
        }
    }
    let same_data = forests
        .iter()
        .all(|f| f.data_fingerprint == first.data_fingerprint && f.oob_available);
    let trees: Vec<TrainedTree> = forests.iter().flat_map(|f| f.trees.iter().cloned()).collect();
    let mut params = first.params.clone();
    params.ntree = trees.len();
    Ok(Forest {
        trees,
        params,
        task: first.task,
        schema: first.schema.clone(),
        n_rows: first.n_rows,
        data_fingerprint: first.data_fingerprint,
        oob_available: same_data,
    })
}
