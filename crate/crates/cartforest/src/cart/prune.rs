//! Cost-complexity pruning.
//!
//! Produces the nested sequence T_1 ≻ ... ≻ T_K with critical penalties
//! 0 = α_1 < ... < α_K such that for every α in [α_k, α_{k+1}), T_k
//! minimizes crit_α(T) = err̄(T) + α|T| over all rooted pruned subtrees.
//!
//! T_1 is the smallest subtree attaining the maximal tree's training error
//! (error-neutral branches are collapsed). Each iteration computes, per
//! internal node t, g(t) = (err̄(t) − err̄(T_t)) / (|T_t| − 1), prunes every
//! branch achieving the minimum, and records that minimum as the next α.
//! Floating-point equality uses a relative tolerance of 1e-9 on the ratio.

use super::{Node, Tree};

const REL_TOL: f64 = 1e-9;

/// Nested pruned subtrees of a maximal tree with their critical penalties.
#[derive(Debug, Clone)]
pub struct PruningSequence {
    /// T_1 ≻ ... ≻ T_K; node ids are preserved from the input tree.
    pub trees: Vec<Tree>,
    /// 0 = α_1 < α_2 < ... < α_K, in err̄ units (error sum / n_train).
    pub alphas: Vec<f64>,
    pub leaf_counts: Vec<usize>,
    /// err̄(T_k), non-decreasing in k.
    pub train_errors: Vec<f64>,
}

impl PruningSequence {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Index k of the subtree that is optimal for penalty `alpha`, i.e. the
    /// largest k with α_k <= alpha.
    pub fn index_for_penalty(&self, alpha: f64) -> usize {
        let mut k = 0;
        while k + 1 < self.alphas.len() && self.alphas[k + 1] <= alpha {
            k += 1;
        }
        k
    }
}

/// Per-node aggregates for the current pruned state.
struct BranchInfo {
    /// Sum of leaf error numerators below (or at) the node.
    err_sum: f64,
    /// Leaf count of the branch.
    leaves: usize,
}

struct PruneState<'a> {
    tree: &'a Tree,
    /// Nodes whose subtree has been cut; they act as leaves now.
    collapsed: Vec<bool>,
}

impl<'a> PruneState<'a> {
    fn new(tree: &'a Tree) -> Self {
        PruneState {
            tree,
            collapsed: vec![false; tree.nodes.len()],
        }
    }

    fn is_leaf(&self, idx: usize) -> bool {
        self.collapsed[idx] || self.tree.nodes[idx].split.is_none()
    }

    /// Post-order branch aggregates for all nodes reachable in the current
    /// pruned tree (unreachable entries are left untouched).
    fn branch_info(&self) -> Vec<BranchInfo> {
        let mut info: Vec<BranchInfo> = self
            .tree
            .nodes
            .iter()
            .map(|n| BranchInfo {
                err_sum: n.error_sum,
                leaves: 1,
            })
            .collect();
        // children have larger arena indices than their parent, so a single
        // reverse sweep is a valid post-order accumulation
        for idx in (0..self.tree.nodes.len()).rev() {
            if self.is_leaf(idx) {
                info[idx].err_sum = self.tree.nodes[idx].error_sum;
                info[idx].leaves = 1;
            } else if let Some(split) = &self.tree.nodes[idx].split {
                info[idx].err_sum =
                    info[split.left as usize].err_sum + info[split.right as usize].err_sum;
                info[idx].leaves =
                    info[split.left as usize].leaves + info[split.right as usize].leaves;
            }
        }
        info
    }

    /// Reachable internal nodes of the current pruned tree, in pre-order.
    fn reachable_internal(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            if self.is_leaf(idx) {
                continue;
            }
            out.push(idx);
            let split = self.tree.nodes[idx].split.as_ref().expect("internal node");
            stack.push(split.right as usize);
            stack.push(split.left as usize);
        }
        out
    }

    /// Materializes the current pruned tree. Node ids are preserved;
    /// collapsed nodes become leaves (their competing/surrogate lists and
    /// children are dropped).
    fn materialize(&self) -> Tree {
        let mut nodes: Vec<Node> = Vec::new();
        // map old arena index -> new arena index
        let mut stack: Vec<(usize, Option<(usize, bool)>)> = vec![(0, None)];
        while let Some((idx, parent)) = stack.pop() {
            let mut node = self.tree.nodes[idx].clone();
            if self.collapsed[idx] {
                node.split = None;
            }
            let new_idx = nodes.len();
            if let Some((parent_idx, is_left)) = parent {
                let split = nodes[parent_idx].split.as_mut().expect("parent is internal");
                if is_left {
                    split.left = new_idx as u32;
                } else {
                    split.right = new_idx as u32;
                }
            }
            let children = node
                .split
                .as_ref()
                .map(|s| (s.left as usize, s.right as usize));
            nodes.push(node);
            if let Some((l, r)) = children {
                // push left last so it is materialized (and indexed) first
                stack.push((r, Some((new_idx, false))));
                stack.push((l, Some((new_idx, true))));
            }
        }
        Tree {
            task: self.tree.task,
            n_train: self.tree.n_train,
            nodes,
        }
    }
}

/// Equality of err̄(t) and err̄(T_t) up to the pruning tolerance.
#[inline]
fn error_neutral(node_err: f64, branch_err: f64) -> bool {
    node_err - branch_err <= REL_TOL * node_err.max(branch_err).max(f64::MIN_POSITIVE)
}

/// Runs the pruning algorithm on a maximal (or any) tree.
pub fn prune_sequence(t_max: &Tree) -> PruningSequence {
    let n_train = t_max.n_train as f64;
    let mut state = PruneState::new(t_max);

    // T_1: collapse error-neutral branches bottom-up so the smallest subtree
    // minimizing err̄ remains (splitting never increases training error)
    {
        let mut eff: Vec<BranchInfo> = t_max
            .nodes
            .iter()
            .map(|n| BranchInfo {
                err_sum: n.error_sum,
                leaves: 1,
            })
            .collect();
        for idx in (0..t_max.nodes.len()).rev() {
            if let Some(split) = &t_max.nodes[idx].split {
                let branch_err =
                    eff[split.left as usize].err_sum + eff[split.right as usize].err_sum;
                let node_err = t_max.nodes[idx].error_sum;
                if error_neutral(node_err, branch_err) {
                    state.collapsed[idx] = true;
                    eff[idx].err_sum = node_err;
                    eff[idx].leaves = 1;
                } else {
                    eff[idx].err_sum = branch_err;
                    eff[idx].leaves =
                        eff[split.left as usize].leaves + eff[split.right as usize].leaves;
                }
            }
        }
    }

    let mut trees = Vec::new();
    let mut alphas = Vec::new();
    let mut leaf_counts = Vec::new();
    let mut train_errors = Vec::new();
    let mut push_current = |state: &PruneState, alpha: f64| {
        let tree = state.materialize();
        alphas.push(alpha);
        leaf_counts.push(tree.leaf_count());
        train_errors.push(tree.train_error());
        trees.push(tree);
    };
    push_current(&state, 0.0);

    loop {
        let internal = state.reachable_internal();
        if internal.is_empty() {
            break;
        }
        let info = state.branch_info();
        // weakest links: minimize g(t) = (err̄(t) − err̄(T_t)) / (|T_t| − 1)
        let g = |idx: usize| {
            let node_err = state.tree.nodes[idx].error_sum;
            let branch = &info[idx];
            ((node_err - branch.err_sum).max(0.0) / n_train) / (branch.leaves - 1) as f64
        };
        let alpha = internal
            .iter()
            .map(|&idx| g(idx))
            .fold(f64::INFINITY, f64::min);
        let cut = alpha * (1.0 + REL_TOL) + f64::MIN_POSITIVE;
        for &idx in &internal {
            if g(idx) <= cut {
                state.collapsed[idx] = true;
            }
        }
        push_current(&state, alpha);
    }

    PruningSequence {
        trees,
        alphas,
        leaf_counts,
        train_errors,
    }
}
