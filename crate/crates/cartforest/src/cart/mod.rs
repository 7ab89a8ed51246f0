//! CART trees: growing, competing/surrogate splits, cost-complexity pruning,
//! cross-validated subtree selection, and prediction with missing-value
//! routing.

mod cv;
mod grow;
mod prune;

pub use cv::{select_subtree_cv, CvCurve, SelectionRule};
pub use grow::{
    best_split_at, competing_splits_at, extra_randomized_split, grow_maximal, grow_weighted,
    surrogate_splits_at,
};
pub use prune::{prune_sequence, PruningSequence};

use crate::data::{Dataset, Task};
use std::collections::BTreeSet;

/// Split rule: numeric rows go left iff `x <= threshold`; categorical rows go
/// left iff their level code is in the (sorted) subset.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    Threshold(f64),
    Categories(Vec<u32>),
}

impl SplitRule {
    /// Routing direction for an observed value; `true` = left.
    #[inline]
    pub fn goes_left(&self, value: f64) -> bool {
        match self {
            SplitRule::Threshold(d) => value <= *d,
            SplitRule::Categories(set) => set.binary_search(&(value as u32)).is_ok(),
        }
    }
}

/// A candidate or committed split.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Column index.
    pub var: usize,
    pub rule: SplitRule,
    /// Cost reduction achieved (within-node variance decrease for
    /// regression, Gini impurity decrease for classification).
    pub decrease: f64,
}

/// Leaf/node prediction.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Value(f64),
    Class { class: u32, proportions: Vec<f64> },
}

impl Prediction {
    pub fn as_value(&self) -> f64 {
        match self {
            Prediction::Value(v) => *v,
            Prediction::Class { class, .. } => *class as f64,
        }
    }

    pub fn class(&self) -> u32 {
        match self {
            Prediction::Class { class, .. } => *class,
            Prediction::Value(_) => panic!("class() on regression prediction"),
        }
    }
}

/// Internal-node bookkeeping attached to a split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitInfo {
    pub split: Split,
    pub left: u32,
    pub right: u32,
    /// Weighted training rows routed to each child.
    pub n_left: u64,
    pub n_right: u64,
    /// Majority routing direction for rows where neither the primary nor any
    /// surrogate variable is observed (ties go left).
    pub majority_left: bool,
    /// Best split per evaluated variable, ranked by decreasing cost
    /// reduction; the primary split is rank 1. Empty unless requested.
    pub competing: Vec<Split>,
    /// Surrogate splits with their weighted routing-agreement counts, ranked
    /// by decreasing agreement. Empty unless requested.
    pub surrogates: Vec<(Split, u64)>,
}

/// One tree node. `error_sum` is the weighted node error numerator (sum of
/// squared residuals for regression, misclassified weight for
/// classification); dividing by the tree's `n_train` yields err̄(t).
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Stable id, preserved when subtrees are materialized during pruning.
    pub id: u32,
    /// Weighted training rows reaching this node.
    pub n: u64,
    pub prediction: Prediction,
    /// Node impurity: within-node variance V(t) or Gini index Φ(t).
    pub impurity: f64,
    pub error_sum: f64,
    pub split: Option<SplitInfo>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

/// Growth controls shared by standalone CART and forest trees.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowSettings {
    /// Nodes with weighted size below this are not split.
    pub min_node_size: u64,
    /// Splits leaving a child below this weighted size are inadmissible.
    pub min_child_size: u64,
    /// Number of candidate variables drawn uniformly without replacement at
    /// every node; `None` evaluates all variables and consumes no randomness.
    pub mtry: Option<usize>,
    pub split_mode: SplitMode,
    /// Surrogate splits kept per internal node (0 skips the computation).
    pub max_surrogates: usize,
    /// Whether to store the ranked competing-split list on internal nodes.
    pub keep_competing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Evaluate every admissible cut point (CART).
    Exhaustive,
    /// Draw `thresholds_per_var` uniform cut points per candidate variable
    /// and keep the best of those candidates (Extra-Trees style).
    ExtraRandomized { thresholds_per_var: u32 },
}

impl GrowSettings {
    /// Standalone CART defaults: exhaustive splits over all variables,
    /// do not split nodes with fewer than 5 rows, keep competing splits and
    /// up to 5 surrogates per node.
    pub fn cart() -> Self {
        GrowSettings {
            min_node_size: 5,
            min_child_size: 1,
            mtry: None,
            split_mode: SplitMode::Exhaustive,
            max_surrogates: 5,
            keep_competing: true,
        }
    }
}

/// Read access to one observation's features; `None` means missing.
pub trait FeatureRow {
    fn value(&self, var: usize) -> Option<f64>;
}

/// A training/test row borrowed from a dataset.
#[derive(Clone, Copy)]
pub struct DatasetRow<'a> {
    pub ds: &'a Dataset,
    pub row: usize,
}

impl FeatureRow for DatasetRow<'_> {
    #[inline]
    fn value(&self, var: usize) -> Option<f64> {
        self.ds.feature(self.row, var)
    }
}

/// An owned row (e.g. parsed from a prediction CSV).
#[derive(Debug, Clone)]
pub struct OwnedRow(pub Vec<Option<f64>>);

impl FeatureRow for OwnedRow {
    #[inline]
    fn value(&self, var: usize) -> Option<f64> {
        self.0.get(var).copied().flatten()
    }
}

/// A grown (or pruned) binary tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub task: Task,
    /// Total weighted training size; normalizer for all node errors.
    pub n_train: u64,
    /// Arena; index 0 is the root. Node ids are stable across pruning.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    /// Training error err̄(T) = sum of leaf error numerators / n_train.
    pub fn train_error(&self) -> f64 {
        let sum: f64 = self
            .nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.error_sum)
            .sum();
        sum / self.n_train as f64
    }

    /// Variables used by primary splits.
    pub fn used_variables(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| n.split.as_ref().map(|s| s.split.var))
            .collect()
    }

    /// Routes a row to its leaf: primary split when its variable is
    /// observed, else the first surrogate with an observed variable, else
    /// the majority direction.
    pub fn leaf_for<R: FeatureRow>(&self, row: &R) -> &Node {
        let mut node = self.root();
        while let Some(info) = &node.split {
            let mut dir = row.value(info.split.var).map(|v| info.split.rule.goes_left(v));
            if dir.is_none() {
                for (s, _) in &info.surrogates {
                    if let Some(v) = row.value(s.var) {
                        dir = Some(s.rule.goes_left(v));
                        break;
                    }
                }
            }
            let left = dir.unwrap_or(info.majority_left);
            node = &self.nodes[if left { info.left } else { info.right } as usize];
        }
        node
    }

    /// Prediction for a row (leaf prediction after routing).
    pub fn predict<R: FeatureRow>(&self, row: &R) -> &Prediction {
        &self.leaf_for(row).prediction
    }

    /// Leaf ids, for nesting checks between pruned subtrees.
    pub fn leaf_ids(&self) -> BTreeSet<u32> {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.id)
            .collect()
    }

    pub fn internal_ids(&self) -> BTreeSet<u32> {
        self.nodes
            .iter()
            .filter(|n| !n.is_leaf())
            .map(|n| n.id)
            .collect()
    }
}
