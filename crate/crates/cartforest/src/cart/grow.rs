//! Tree growing: exhaustive and extra-randomized split search, competing and
//! surrogate splits, weighted recursive partitioning.
//!
//! In-bag multiplicities act as integer weights. Floating-point accumulations
//! add a weight-w observation by adding it w times, so a weighted run is
//! bit-identical to a run on the explicitly replicated dataset (the
//! replicated-row equivalence is asserted in tests). Classification
//! statistics stay in integer counts until the final division.

use super::{
    GrowSettings, Node, Prediction, Split, SplitInfo, SplitMode, SplitRule, Tree,
};
use crate::data::{ColumnKind, Dataset, Task};
use crate::error::{Error, Result};
use crate::rng::{rng_from, tags, Rng};
use rand::Rng as _;

/// Exhaustive categorical search enumerates all subsets up to this many
/// observed levels; beyond it, levels are ordered one-vs-rest and scanned.
const EXHAUSTIVE_LEVEL_LIMIT: usize = 12;

/// Weighted regression accumulator. `add` performs repeated addition so that
/// integer weights reproduce replicated rows exactly.
#[derive(Debug, Clone, Copy, Default)]
struct RegAcc {
    w: u64,
    sum: f64,
    sum_sq: f64,
}

impl RegAcc {
    #[inline]
    fn add(&mut self, y: f64, w: u32) {
        for _ in 0..w {
            self.sum += y;
            self.sum_sq += y * y;
        }
        self.w += w as u64;
    }

    #[inline]
    fn merge(&mut self, other: &RegAcc) {
        self.w += other.w;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Weighted sum of squared residuals around the mean (never negative).
    #[inline]
    fn sse(&self) -> f64 {
        if self.w == 0 {
            return 0.0;
        }
        (self.sum_sq - self.sum * self.sum / self.w as f64).max(0.0)
    }
}

/// Weighted class-count accumulator with an incrementally maintained sum of
/// squared counts (exact integer arithmetic).
#[derive(Debug, Clone, Default)]
struct ClsAcc {
    w: u64,
    counts: Vec<u64>,
    sum_sq: u64,
}

impl ClsAcc {
    fn new(n_classes: usize) -> Self {
        ClsAcc {
            w: 0,
            counts: vec![0; n_classes],
            sum_sq: 0,
        }
    }

    #[inline]
    fn add(&mut self, class: u32, w: u32) {
        let w = w as u64;
        let c = &mut self.counts[class as usize];
        self.sum_sq += w * (2 * *c) + w * w;
        *c += w;
        self.w += w;
    }

    #[inline]
    fn remove(&mut self, class: u32, w: u64) {
        let c = &mut self.counts[class as usize];
        self.sum_sq -= 2 * w * *c - w * w;
        *c -= w;
        self.w -= w;
    }

    fn merge(&mut self, other: &ClsAcc) {
        for (class, &c) in other.counts.iter().enumerate() {
            if c > 0 {
                let cur = &mut self.counts[class];
                self.sum_sq += 2 * c * *cur + c * c;
                *cur += c;
            }
        }
        self.w += other.w;
    }

    /// Gini index Φ = 1 - Σ (c/w)².
    fn gini(&self) -> f64 {
        if self.w == 0 {
            return 0.0;
        }
        let w2 = (self.w as u128 * self.w as u128) as f64;
        1.0 - self.sum_sq as f64 / w2
    }

    fn majority(&self) -> (u32, u64) {
        let mut best = 0usize;
        for (c, &cnt) in self.counts.iter().enumerate() {
            if cnt > self.counts[best] {
                best = c;
            }
        }
        (best as u32, self.counts[best])
    }

    fn n_present(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

#[derive(Debug, Clone)]
enum NodeStats {
    Reg(RegAcc, f64, f64), // acc, min_y, max_y over distinct rows
    Cls(ClsAcc),
}

impl NodeStats {
    fn weight(&self) -> u64 {
        match self {
            NodeStats::Reg(a, _, _) => a.w,
            NodeStats::Cls(a) => a.w,
        }
    }

    fn is_pure(&self) -> bool {
        match self {
            NodeStats::Reg(_, lo, hi) => lo == hi,
            NodeStats::Cls(a) => a.n_present() <= 1,
        }
    }

    fn prediction(&self) -> Prediction {
        match self {
            NodeStats::Reg(a, _, _) => Prediction::Value(a.sum / a.w as f64),
            NodeStats::Cls(a) => {
                let (class, _) = a.majority();
                let w = a.w as f64;
                Prediction::Class {
                    class,
                    proportions: a.counts.iter().map(|&c| c as f64 / w).collect(),
                }
            }
        }
    }

    fn impurity(&self) -> f64 {
        match self {
            NodeStats::Reg(a, _, _) => a.sse() / a.w as f64,
            NodeStats::Cls(a) => a.gini(),
        }
    }

    fn error_sum(&self) -> f64 {
        match self {
            NodeStats::Reg(a, _, _) => a.sse(),
            NodeStats::Cls(a) => (a.w - a.majority().1) as f64,
        }
    }
}

struct Grower<'a> {
    ds: &'a Dataset,
    weights: &'a [u32],
    task: Task,
    cfg: &'a GrowSettings,
    rng: Rng,
}

/// A per-variable split candidate, in the node-local cost scale used for
/// competing-split ranking.
#[derive(Debug, Clone)]
struct Candidate {
    rule: SplitRule,
    decrease: f64,
}

impl<'a> Grower<'a> {
    fn node_stats(&self, rows: &[usize]) -> NodeStats {
        match self.task {
            Task::Regression => {
                let mut acc = RegAcc::default();
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &i in rows {
                    let y = self.ds.y_num(i);
                    acc.add(y, self.weights[i]);
                    lo = lo.min(y);
                    hi = hi.max(y);
                }
                NodeStats::Reg(acc, lo, hi)
            }
            Task::Classification { n_classes } => {
                let mut acc = ClsAcc::new(n_classes);
                for &i in rows {
                    acc.add(self.ds.y_class(i), self.weights[i]);
                }
                NodeStats::Cls(acc)
            }
        }
    }

    /// Best exhaustive split on a numeric variable: thresholds at midpoints
    /// of consecutive distinct observed values, evaluated on the rows where
    /// the variable is observed.
    fn best_numeric(&self, var: usize, rows: &[usize]) -> Option<Candidate> {
        let col = self.ds.column(var);
        let mut pairs: Vec<(f64, usize)> = rows
            .iter()
            .filter_map(|&i| col.get(i).map(|x| (x, i)))
            .collect();
        if pairs.len() < 2 {
            return None;
        }
        pairs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN in features"));
        match self.task {
            Task::Regression => self.sweep_numeric_reg(&pairs),
            Task::Classification { n_classes } => self.sweep_numeric_cls(&pairs, n_classes),
        }
    }

    fn sweep_numeric_reg(&self, pairs: &[(f64, usize)]) -> Option<Candidate> {
        let mut total = RegAcc::default();
        for &(_, i) in pairs {
            total.add(self.ds.y_num(i), self.weights[i]);
        }
        let sse_total = total.sse();
        let min_child = self.cfg.min_child_size;
        let mut left = RegAcc::default();
        let mut best: Option<(f64, f64)> = None;
        let mut idx = 0;
        while idx < pairs.len() {
            let x = pairs[idx].0;
            while idx < pairs.len() && pairs[idx].0 == x {
                let i = pairs[idx].1;
                left.add(self.ds.y_num(i), self.weights[i]);
                idx += 1;
            }
            if idx == pairs.len() {
                break;
            }
            let w_r = total.w - left.w;
            if left.w < min_child || w_r < min_child {
                continue;
            }
            let sum_r = total.sum - left.sum;
            let sum_sq_r = total.sum_sq - left.sum_sq;
            let sse_r = (sum_sq_r - sum_r * sum_r / w_r as f64).max(0.0);
            let decrease = sse_total - left.sse() - sse_r;
            if decrease > 0.0 && best.map_or(true, |(_, d)| decrease > d) {
                best = Some((midpoint(x, pairs[idx].0), decrease));
            }
        }
        best.map(|(thr, decrease)| Candidate {
            rule: SplitRule::Threshold(thr),
            // node-local scale: divide by the weight of the node's observed
            // rows so numeric and categorical candidates are comparable
            decrease: decrease / total.w as f64,
        })
    }

    fn sweep_numeric_cls(&self, pairs: &[(f64, usize)], n_classes: usize) -> Option<Candidate> {
        let mut total = ClsAcc::new(n_classes);
        for &(_, i) in pairs {
            total.add(self.ds.y_class(i), self.weights[i]);
        }
        let min_child = self.cfg.min_child_size;
        let w_all = total.w as f64;
        let sum_sq_total = total.sum_sq as f64;
        let mut left = ClsAcc::new(n_classes);
        let mut right = total.clone();
        let mut best: Option<(f64, f64)> = None;
        let mut idx = 0;
        while idx < pairs.len() {
            let x = pairs[idx].0;
            while idx < pairs.len() && pairs[idx].0 == x {
                let i = pairs[idx].1;
                let (class, w) = (self.ds.y_class(i), self.weights[i]);
                left.add(class, w);
                right.remove(class, w as u64);
                idx += 1;
            }
            if idx == pairs.len() {
                break;
            }
            if left.w < min_child || right.w < min_child {
                continue;
            }
            // Φ(t) - (w_L/w)Φ(t_L) - (w_R/w)Φ(t_R), all from integer counts
            let decrease = left.sum_sq as f64 / (w_all * left.w as f64)
                + right.sum_sq as f64 / (w_all * right.w as f64)
                - sum_sq_total / (w_all * w_all);
            if decrease > 0.0 && best.map_or(true, |(_, d)| decrease > d) {
                best = Some((midpoint(x, pairs[idx].0), decrease));
            }
        }
        best.map(|(thr, decrease)| Candidate {
            rule: SplitRule::Threshold(thr),
            decrease,
        })
    }

    /// Best exhaustive split on a categorical variable.
    fn best_categorical(&self, var: usize, rows: &[usize]) -> Option<Candidate> {
        let col = self.ds.column(var);
        let cardinality = col.kind.cardinality();
        match self.task {
            Task::Regression => {
                let mut levels: Vec<RegAcc> = vec![RegAcc::default(); cardinality];
                for &i in rows {
                    if let Some(code) = col.get(i) {
                        levels[code as usize].add(self.ds.y_num(i), self.weights[i]);
                    }
                }
                let present: Vec<u32> = (0..cardinality as u32)
                    .filter(|&c| levels[c as usize].w > 0)
                    .collect();
                if present.len() < 2 {
                    return None;
                }
                let mut ordered = present.clone();
                ordered.sort_by(|&a, &b| {
                    let ma = levels[a as usize].sum / levels[a as usize].w as f64;
                    let mb = levels[b as usize].sum / levels[b as usize].w as f64;
                    ma.partial_cmp(&mb).unwrap().then(a.cmp(&b))
                });
                self.scan_ordered_levels_reg(&ordered, &levels)
            }
            Task::Classification { n_classes } => {
                let mut levels: Vec<ClsAcc> = vec![ClsAcc::new(n_classes); cardinality];
                for &i in rows {
                    if let Some(code) = col.get(i) {
                        levels[code as usize].add(self.ds.y_class(i), self.weights[i]);
                    }
                }
                let present: Vec<u32> = (0..cardinality as u32)
                    .filter(|&c| levels[c as usize].w > 0)
                    .collect();
                if present.len() < 2 {
                    return None;
                }
                if n_classes > 2 && present.len() <= EXHAUSTIVE_LEVEL_LIMIT {
                    return self.enumerate_level_subsets(&present, &levels, n_classes);
                }
                // order by proportion of the reference class and scan like a
                // numeric variable (exact for 2 classes, one-vs-rest
                // heuristic otherwise)
                let reference_class = if n_classes == 2 {
                    1u32
                } else {
                    let mut node = ClsAcc::new(n_classes);
                    for &c in &present {
                        node.merge(&levels[c as usize]);
                    }
                    node.majority().0
                };
                let mut ordered = present.clone();
                ordered.sort_by(|&a, &b| {
                    let la = &levels[a as usize];
                    let lb = &levels[b as usize];
                    let pa = la.counts[reference_class as usize] as f64 / la.w as f64;
                    let pb = lb.counts[reference_class as usize] as f64 / lb.w as f64;
                    pa.partial_cmp(&pb).unwrap().then(a.cmp(&b))
                });
                self.scan_ordered_levels_cls(&ordered, &levels, n_classes)
            }
        }
    }

    fn scan_ordered_levels_reg(&self, ordered: &[u32], levels: &[RegAcc]) -> Option<Candidate> {
        let mut total = RegAcc::default();
        for &c in ordered {
            total.merge(&levels[c as usize]);
        }
        let sse_total = total.sse();
        let min_child = self.cfg.min_child_size;
        let mut left = RegAcc::default();
        let mut best: Option<(Vec<u32>, f64)> = None;
        for k in 0..ordered.len() - 1 {
            left.merge(&levels[ordered[k] as usize]);
            let w_r = total.w - left.w;
            if left.w < min_child || w_r < min_child {
                continue;
            }
            let sum_r = total.sum - left.sum;
            let sum_sq_r = total.sum_sq - left.sum_sq;
            let sse_r = (sum_sq_r - sum_r * sum_r / w_r as f64).max(0.0);
            let decrease = (sse_total - left.sse() - sse_r) / total.w as f64;
            if decrease > 0.0 {
                let mut subset: Vec<u32> = ordered[..=k].to_vec();
                subset.sort_unstable();
                let better = match &best {
                    None => true,
                    Some((s, d)) => decrease > *d || (decrease == *d && subset < *s),
                };
                if better {
                    best = Some((subset, decrease));
                }
            }
        }
        best.map(|(subset, decrease)| Candidate {
            rule: SplitRule::Categories(subset),
            decrease,
        })
    }

    fn scan_ordered_levels_cls(
        &self,
        ordered: &[u32],
        levels: &[ClsAcc],
        n_classes: usize,
    ) -> Option<Candidate> {
        let mut total = ClsAcc::new(n_classes);
        for &c in ordered {
            total.merge(&levels[c as usize]);
        }
        let w_all = total.w as f64;
        let sum_sq_total = total.sum_sq as f64;
        let min_child = self.cfg.min_child_size;
        let mut left = ClsAcc::new(n_classes);
        let mut best: Option<(Vec<u32>, f64)> = None;
        for k in 0..ordered.len() - 1 {
            left.merge(&levels[ordered[k] as usize]);
            let w_r = total.w - left.w;
            if left.w < min_child || w_r < min_child {
                continue;
            }
            let mut right = total.clone();
            for (class, &c) in left.counts.iter().enumerate() {
                if c > 0 {
                    right.remove(class as u32, c);
                }
            }
            let decrease = left.sum_sq as f64 / (w_all * left.w as f64)
                + right.sum_sq as f64 / (w_all * right.w as f64)
                - sum_sq_total / (w_all * w_all);
            if decrease > 0.0 {
                let mut subset: Vec<u32> = ordered[..=k].to_vec();
                subset.sort_unstable();
                let better = match &best {
                    None => true,
                    Some((s, d)) => decrease > *d || (decrease == *d && subset < *s),
                };
                if better {
                    best = Some((subset, decrease));
                }
            }
        }
        best.map(|(subset, decrease)| Candidate {
            rule: SplitRule::Categories(subset),
            decrease,
        })
    }

    /// Exhaustive subset enumeration for multiclass categorical splits with
    /// few observed levels. The first observed level is pinned to the left
    /// side so each two-set partition is visited once.
    fn enumerate_level_subsets(
        &self,
        present: &[u32],
        levels: &[ClsAcc],
        n_classes: usize,
    ) -> Option<Candidate> {
        let v = present.len();
        let mut total = ClsAcc::new(n_classes);
        for &c in present {
            total.merge(&levels[c as usize]);
        }
        let w_all = total.w as f64;
        let sum_sq_total = total.sum_sq as f64;
        let min_child = self.cfg.min_child_size;
        let mut best: Option<(Vec<u32>, f64)> = None;
        let full: u64 = (1 << (v - 1)) - 1;
        for mask in 0..full {
            let mut left = ClsAcc::new(n_classes);
            left.merge(&levels[present[0] as usize]);
            for bit in 0..v - 1 {
                if mask >> bit & 1 == 1 {
                    left.merge(&levels[present[bit + 1] as usize]);
                }
            }
            let w_r = total.w - left.w;
            if left.w < min_child || w_r < min_child {
                continue;
            }
            let mut right = total.clone();
            for (class, &c) in left.counts.iter().enumerate() {
                if c > 0 {
                    right.remove(class as u32, c);
                }
            }
            let decrease = left.sum_sq as f64 / (w_all * left.w as f64)
                + right.sum_sq as f64 / (w_all * right.w as f64)
                - sum_sq_total / (w_all * w_all);
            if decrease > 0.0 {
                let mut subset = vec![present[0]];
                for bit in 0..v - 1 {
                    if mask >> bit & 1 == 1 {
                        subset.push(present[bit + 1]);
                    }
                }
                subset.sort_unstable();
                let better = match &best {
                    None => true,
                    Some((s, d)) => decrease > *d || (decrease == *d && subset < *s),
                };
                if better {
                    best = Some((subset, decrease));
                }
            }
        }
        best.map(|(subset, decrease)| Candidate {
            rule: SplitRule::Categories(subset),
            decrease,
        })
    }

    /// Evaluates a fixed rule on the node rows (used by the extra-randomized
    /// mode). Returns the decrease if the split is admissible and improving.
    fn evaluate_rule(&self, var: usize, rule: &SplitRule, rows: &[usize]) -> Option<f64> {
        let col = self.ds.column(var);
        let min_child = self.cfg.min_child_size;
        match self.task {
            Task::Regression => {
                let mut left = RegAcc::default();
                let mut total = RegAcc::default();
                for &i in rows {
                    if let Some(x) = col.get(i) {
                        let (y, w) = (self.ds.y_num(i), self.weights[i]);
                        total.add(y, w);
                        if rule.goes_left(x) {
                            left.add(y, w);
                        }
                    }
                }
                let w_r = total.w - left.w;
                if left.w < min_child || w_r < min_child {
                    return None;
                }
                let sum_r = total.sum - left.sum;
                let sum_sq_r = total.sum_sq - left.sum_sq;
                let sse_r = (sum_sq_r - sum_r * sum_r / w_r as f64).max(0.0);
                let decrease = (total.sse() - left.sse() - sse_r) / total.w as f64;
                (decrease > 0.0).then_some(decrease)
            }
            Task::Classification { n_classes } => {
                let mut left = ClsAcc::new(n_classes);
                let mut total = ClsAcc::new(n_classes);
                for &i in rows {
                    if let Some(x) = col.get(i) {
                        let (class, w) = (self.ds.y_class(i), self.weights[i]);
                        total.add(class, w);
                        if rule.goes_left(x) {
                            left.add(class, w);
                        }
                    }
                }
                let w_r = total.w - left.w;
                if left.w < min_child || w_r < min_child {
                    return None;
                }
                let mut right = total.clone();
                for (class, &c) in left.counts.iter().enumerate() {
                    if c > 0 {
                        right.remove(class as u32, c);
                    }
                }
                let w_all = total.w as f64;
                let decrease = left.sum_sq as f64 / (w_all * left.w as f64)
                    + right.sum_sq as f64 / (w_all * right.w as f64)
                    - total.sum_sq as f64 / (w_all * w_all);
                (decrease > 0.0).then_some(decrease)
            }
        }
    }

    /// Draws the extra-randomized rules for one variable: uniform thresholds
    /// in the observed (min, max) segment, or uniform non-empty proper
    /// subsets of the observed levels.
    fn draw_random_rules(&mut self, var: usize, rows: &[usize], count: u32) -> Vec<SplitRule> {
        let col = self.ds.column(var);
        match &col.kind {
            ColumnKind::Numeric => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &i in rows {
                    if let Some(x) = col.get(i) {
                        lo = lo.min(x);
                        hi = hi.max(x);
                    }
                }
                if !(lo < hi) {
                    return Vec::new(); // constant or unobserved: no candidate
                }
                (0..count)
                    .map(|_| SplitRule::Threshold(self.rng.random_range(lo..hi)))
                    .collect()
            }
            ColumnKind::Categorical { .. } => {
                let mut seen = vec![false; col.kind.cardinality()];
                for &i in rows {
                    if let Some(x) = col.get(i) {
                        seen[x as usize] = true;
                    }
                }
                let present: Vec<u32> = (0..seen.len() as u32)
                    .filter(|&c| seen[c as usize])
                    .collect();
                let v = present.len();
                if v < 2 {
                    return Vec::new();
                }
                (0..count)
                    .map(|_| {
                        let mask: u64 = if v < 64 {
                            self.rng.random_range(1..(1u64 << v) - 1)
                        } else {
                            // wide levels: i.i.d. bits, redrawn until proper
                            loop {
                                let bits: Vec<bool> =
                                    (0..v).map(|_| self.rng.random::<bool>()).collect();
                                let ones = bits.iter().filter(|&&b| b).count();
                                if ones > 0 && ones < v {
                                    break bits
                                        .iter()
                                        .enumerate()
                                        .filter(|(_, &b)| b)
                                        .fold(0u64, |acc, (i, _)| acc | (1 << (i % 64)));
                                }
                            }
                        };
                        let mut subset: Vec<u32> = (0..v.min(64))
                            .filter(|&b| mask >> b & 1 == 1)
                            .map(|b| present[b])
                            .collect();
                        subset.sort_unstable();
                        SplitRule::Categories(subset)
                    })
                    .collect()
            }
        }
    }

    /// Best split over the candidate variables, plus the ranked per-variable
    /// competing list when requested.
    fn search(
        &mut self,
        rows: &[usize],
        candidate_vars: &[usize],
    ) -> (Option<Split>, Vec<Split>) {
        let mut best: Option<Split> = None;
        let mut competing: Vec<Split> = Vec::new();
        match self.cfg.split_mode {
            SplitMode::Exhaustive => {
                for &var in candidate_vars {
                    let cand = if self.ds.column(var).kind.is_categorical() {
                        self.best_categorical(var, rows)
                    } else {
                        self.best_numeric(var, rows)
                    };
                    if let Some(c) = cand {
                        let split = Split {
                            var,
                            rule: c.rule,
                            decrease: c.decrease,
                        };
                        if best.as_ref().map_or(true, |b| split.decrease > b.decrease) {
                            best = Some(split.clone());
                        }
                        if self.cfg.keep_competing {
                            competing.push(split);
                        }
                    }
                }
            }
            SplitMode::ExtraRandomized { thresholds_per_var } => {
                for &var in candidate_vars {
                    let rules = self.draw_random_rules(var, rows, thresholds_per_var);
                    let mut var_best: Option<Split> = None;
                    for rule in rules {
                        if let Some(decrease) = self.evaluate_rule(var, &rule, rows) {
                            if var_best.as_ref().map_or(true, |b| decrease > b.decrease) {
                                var_best = Some(Split {
                                    var,
                                    rule,
                                    decrease,
                                });
                            }
                        }
                    }
                    if let Some(split) = var_best {
                        if best.as_ref().map_or(true, |b| split.decrease > b.decrease) {
                            best = Some(split.clone());
                        }
                        if self.cfg.keep_competing {
                            competing.push(split);
                        }
                    }
                }
            }
        }
        if self.cfg.keep_competing {
            // stable sort keeps the ascending-variable order within ties
            competing.sort_by(|a, b| b.decrease.partial_cmp(&a.decrease).unwrap());
        }
        (best, competing)
    }

    /// Surrogate splits: per other variable, the same-form split that best
    /// reproduces the primary routing on rows observed for both variables,
    /// kept only when it beats the majority-direction baseline.
    fn surrogates(
        &self,
        rows: &[usize],
        primary: &Split,
        max_surrogates: usize,
    ) -> Vec<(Split, u64)> {
        if max_surrogates == 0 {
            return Vec::new();
        }
        let primary_col = self.ds.column(primary.var);
        // primary routing per row; None = primary variable missing
        let assigned: Vec<(usize, bool)> = rows
            .iter()
            .filter_map(|&i| primary_col.get(i).map(|x| (i, primary.rule.goes_left(x))))
            .collect();
        let mut found: Vec<(Split, u64)> = Vec::new();
        for var in 0..self.ds.n_columns() {
            if var == primary.var {
                continue;
            }
            if let Some(item) = self.best_surrogate_for(var, &assigned) {
                found.push(item);
            }
        }
        found.sort_by(|a, b| {
            b.1.cmp(&a.1).then(a.0.var.cmp(&b.0.var))
        });
        found.truncate(max_surrogates);
        found
    }

    fn best_surrogate_for(
        &self,
        var: usize,
        assigned: &[(usize, bool)],
    ) -> Option<(Split, u64)> {
        let col = self.ds.column(var);
        match &col.kind {
            ColumnKind::Numeric => {
                let mut pairs: Vec<(f64, usize, bool)> = assigned
                    .iter()
                    .filter_map(|&(i, left)| col.get(i).map(|x| (x, i, left)))
                    .collect();
                if pairs.len() < 2 {
                    return None;
                }
                pairs.sort_unstable_by(|a, b| {
                    a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
                });
                let mut total_l = 0u64;
                let mut total_r = 0u64;
                for &(_, i, left) in &pairs {
                    if left {
                        total_l += self.weights[i] as u64;
                    } else {
                        total_r += self.weights[i] as u64;
                    }
                }
                let baseline = total_l.max(total_r);
                let mut left_l = 0u64;
                let mut left_r = 0u64;
                let mut best: Option<(f64, u64)> = None;
                let mut idx = 0;
                while idx < pairs.len() {
                    let x = pairs[idx].0;
                    while idx < pairs.len() && pairs[idx].0 == x {
                        let (_, i, left) = pairs[idx];
                        if left {
                            left_l += self.weights[i] as u64;
                        } else {
                            left_r += self.weights[i] as u64;
                        }
                        idx += 1;
                    }
                    if idx == pairs.len() {
                        break;
                    }
                    let agreement = left_l + (total_r - left_r);
                    if best.map_or(true, |(_, a)| agreement > a) {
                        best = Some((midpoint(x, pairs[idx].0), agreement));
                    }
                }
                let (thr, agreement) = best?;
                (agreement > baseline).then(|| {
                    (
                        Split {
                            var,
                            rule: SplitRule::Threshold(thr),
                            decrease: 0.0,
                        },
                        agreement,
                    )
                })
            }
            ColumnKind::Categorical { .. } => {
                let cardinality = col.kind.cardinality();
                let mut level_l = vec![0u64; cardinality];
                let mut level_r = vec![0u64; cardinality];
                let mut total_l = 0u64;
                let mut total_r = 0u64;
                for &(i, left) in assigned {
                    if let Some(code) = col.get(i) {
                        let w = self.weights[i] as u64;
                        if left {
                            level_l[code as usize] += w;
                            total_l += w;
                        } else {
                            level_r[code as usize] += w;
                            total_r += w;
                        }
                    }
                }
                let present: Vec<u32> = (0..cardinality as u32)
                    .filter(|&c| level_l[c as usize] + level_r[c as usize] > 0)
                    .collect();
                if present.len() < 2 {
                    return None;
                }
                let baseline = total_l.max(total_r);
                // include a level on the left iff it agrees more there
                let mut subset: Vec<u32> = present
                    .iter()
                    .copied()
                    .filter(|&c| level_l[c as usize] > level_r[c as usize])
                    .collect();
                if subset.is_empty() {
                    let &best_level = present
                        .iter()
                        .max_by_key(|&&c| {
                            (level_l[c as usize] as i64 - level_r[c as usize] as i64, std::cmp::Reverse(c))
                        })
                        .expect("present non-empty");
                    subset.push(best_level);
                } else if subset.len() == present.len() {
                    let &worst = present
                        .iter()
                        .min_by_key(|&&c| {
                            (level_l[c as usize] as i64 - level_r[c as usize] as i64, c)
                        })
                        .expect("present non-empty");
                    subset.retain(|&c| c != worst);
                }
                let agreement: u64 = present
                    .iter()
                    .map(|&c| {
                        if subset.binary_search(&c).is_ok() {
                            level_l[c as usize]
                        } else {
                            level_r[c as usize]
                        }
                    })
                    .sum();
                (agreement > baseline).then(|| {
                    (
                        Split {
                            var,
                            rule: SplitRule::Categories(subset),
                            decrease: 0.0,
                        },
                        agreement,
                    )
                })
            }
        }
    }

    fn draw_candidate_vars(&mut self, p: usize) -> Vec<usize> {
        match self.cfg.mtry {
            None => (0..p).collect(),
            Some(m) => {
                let m = m.min(p);
                let mut vars = rand::seq::index::sample(&mut self.rng, p, m).into_vec();
                vars.sort_unstable();
                vars
            }
        }
    }

    fn grow(&mut self) -> Tree {
        let n = self.ds.n_rows();
        let root_rows: Vec<usize> = (0..n).filter(|&i| self.weights[i] > 0).collect();
        let root_stats = self.node_stats(&root_rows);
        let n_train = root_stats.weight();
        let mut nodes: Vec<Node> = Vec::new();
        // stack of (node index, rows); children are allocated when their
        // parent is split, and processed left before right
        let mut stack: Vec<(usize, Vec<usize>, NodeStats)> = Vec::new();
        nodes.push(self.make_leaf(0, &root_stats));
        stack.push((0, root_rows, root_stats));
        while let Some((node_idx, rows, stats)) = stack.pop() {
            if stats.weight() < self.cfg.min_node_size.max(2) || stats.is_pure() {
                continue;
            }
            let candidate_vars = self.draw_candidate_vars(self.ds.n_columns());
            let (best, competing) = self.search(&rows, &candidate_vars);
            let Some(primary) = best else { continue };
            let surrogates = self.surrogates(&rows, &primary, self.cfg.max_surrogates);

            // route: primary where observed, else surrogates, else the
            // majority direction of the primary-routed rows
            let primary_col = self.ds.column(primary.var);
            let mut left_rows = Vec::new();
            let mut right_rows = Vec::new();
            let mut pending = Vec::new();
            let mut w_left = 0u64;
            let mut w_right = 0u64;
            for &i in &rows {
                match primary_col.get(i) {
                    Some(x) => {
                        if primary.rule.goes_left(x) {
                            w_left += self.weights[i] as u64;
                            left_rows.push(i);
                        } else {
                            w_right += self.weights[i] as u64;
                            right_rows.push(i);
                        }
                    }
                    None => pending.push(i),
                }
            }
            if left_rows.is_empty() || right_rows.is_empty() {
                continue; // all-missing oddity: refuse the split
            }
            let majority_left = w_left >= w_right;
            for i in pending {
                let mut dir = None;
                for (s, _) in &surrogates {
                    if let Some(x) = self.ds.feature(i, s.var) {
                        dir = Some(s.rule.goes_left(x));
                        break;
                    }
                }
                if dir.unwrap_or(majority_left) {
                    left_rows.push(i);
                } else {
                    right_rows.push(i);
                }
            }
            left_rows.sort_unstable();
            right_rows.sort_unstable();
            let left_stats = self.node_stats(&left_rows);
            let right_stats = self.node_stats(&right_rows);
            let left_idx = nodes.len();
            nodes.push(self.make_leaf(left_idx as u32, &left_stats));
            let right_idx = nodes.len();
            nodes.push(self.make_leaf(right_idx as u32, &right_stats));
            nodes[node_idx].split = Some(SplitInfo {
                split: primary,
                left: left_idx as u32,
                right: right_idx as u32,
                n_left: left_stats.weight(),
                n_right: right_stats.weight(),
                majority_left: left_stats.weight() >= right_stats.weight(),
                competing,
                surrogates,
            });
            // left child is processed before right: push right first
            stack.push((right_idx, right_rows, right_stats));
            stack.push((left_idx, left_rows, left_stats));
        }
        Tree {
            task: self.task,
            n_train,
            nodes,
        }
    }

    fn make_leaf(&self, id: u32, stats: &NodeStats) -> Node {
        Node {
            id,
            n: stats.weight(),
            prediction: stats.prediction(),
            impurity: stats.impurity(),
            error_sum: stats.error_sum(),
            split: None,
        }
    }
}

/// Midpoint threshold between two consecutive distinct values; collapses to
/// the lower value when rounding would spill into the upper group.
#[inline]
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Grows a maximal CART tree on the full dataset (every row with weight 1).
pub fn grow_maximal(ds: &Dataset, settings: &GrowSettings, seed: u64) -> Result<Tree> {
    let weights = vec![1u32; ds.n_rows()];
    grow_weighted(ds, &weights, settings, seed)
}

/// Grows a tree on rows with positive multiplicity, weighting node
/// statistics by the multiplicities.
pub fn grow_weighted(
    ds: &Dataset,
    weights: &[u32],
    settings: &GrowSettings,
    seed: u64,
) -> Result<Tree> {
    if ds.n_rows() == 0 {
        return Err(Error::Argument("cannot grow a tree on an empty dataset".into()));
    }
    if weights.len() != ds.n_rows() {
        return Err(Error::Argument(format!(
            "{} weights for {} rows",
            weights.len(),
            ds.n_rows()
        )));
    }
    if weights.iter().all(|&w| w == 0) {
        return Err(Error::Argument("all row weights are zero".into()));
    }
    if let SplitMode::ExtraRandomized { thresholds_per_var } = settings.split_mode {
        if thresholds_per_var == 0 {
            return Err(Error::Argument("extra-randomized mode needs at least one threshold per variable".into()));
        }
    }
    if let Some(m) = settings.mtry {
        if m == 0 || m > ds.n_columns() {
            return Err(Error::Argument(format!(
                "mtry must be in 1..={}, got {m}",
                ds.n_columns()
            )));
        }
    }
    let mut grower = Grower {
        ds,
        weights,
        task: ds.task(),
        cfg: settings,
        rng: rng_from(seed, &[tags::SPLIT]),
    };
    Ok(grower.grow())
}

/// Best split at a node given explicitly, or `None` when no admissible split
/// strictly improves the node cost. Rows are weighted 1.
pub fn best_split_at(
    ds: &Dataset,
    node_rows: &[usize],
    candidate_vars: &[usize],
    min_child_size: u64,
) -> Option<Split> {
    let settings = GrowSettings {
        min_child_size,
        keep_competing: false,
        ..GrowSettings::cart()
    };
    let weights = vec![1u32; ds.n_rows()];
    let mut grower = Grower {
        ds,
        weights: &weights,
        task: ds.task(),
        cfg: &settings,
        rng: rng_from(0, &[tags::SPLIT]),
    };
    grower.search(node_rows, candidate_vars).0
}

/// Ranked competing splits at a node: the best split of every variable,
/// ordered by decreasing cost reduction (the primary split is rank 1).
pub fn competing_splits_at(ds: &Dataset, node_rows: &[usize]) -> Vec<Split> {
    let settings = GrowSettings {
        min_child_size: 1,
        ..GrowSettings::cart()
    };
    let weights = vec![1u32; ds.n_rows()];
    let mut grower = Grower {
        ds,
        weights: &weights,
        task: ds.task(),
        cfg: &settings,
        rng: rng_from(0, &[tags::SPLIT]),
    };
    let all_vars: Vec<usize> = (0..ds.n_columns()).collect();
    grower.search(node_rows, &all_vars).1
}

/// Extra-randomized split at a node: per candidate variable, draw
/// `thresholds_per_var` uniform cut points in the observed value segment
/// (uniform non-empty proper level subsets for categorical variables) and
/// return the best of all drawn candidates.
pub fn extra_randomized_split(
    ds: &Dataset,
    node_rows: &[usize],
    candidate_vars: &[usize],
    thresholds_per_var: u32,
    seed: u64,
) -> Option<Split> {
    let settings = GrowSettings {
        min_node_size: 1,
        min_child_size: 1,
        mtry: None,
        split_mode: SplitMode::ExtraRandomized { thresholds_per_var },
        max_surrogates: 0,
        keep_competing: false,
    };
    let weights = vec![1u32; ds.n_rows()];
    let mut grower = Grower {
        ds,
        weights: &weights,
        task: ds.task(),
        cfg: &settings,
        rng: rng_from(seed, &[tags::SPLIT]),
    };
    grower.search(node_rows, candidate_vars).0
}

/// Ranked surrogate splits for a committed primary split, with their
/// weighted routing-agreement counts.
pub fn surrogate_splits_at(
    ds: &Dataset,
    node_rows: &[usize],
    primary: &Split,
    max_surrogates: usize,
) -> Vec<(Split, u64)> {
    let settings = GrowSettings::cart();
    let weights = vec![1u32; ds.n_rows()];
    let grower = Grower {
        ds,
        weights: &weights,
        task: ds.task(),
        cfg: &settings,
        rng: rng_from(0, &[tags::SPLIT]),
    };
    grower.surrogates(node_rows, primary, max_surrogates)
}
