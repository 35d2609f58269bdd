//! CART-style tree growth over mixed-type columns.
//!
//! Nominal targets split on Gini impurity, numerical targets on variance
//! reduction. Numerical splits are thresholds (missing routes left);
//! nominal splits are category subsets (membership routes left, so a
//! missing code routes left only if -1 is in the subset).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::table::ColumnData;

/// Most categories considered when searching a nominal split; beyond this
/// the most frequent ones are kept and the subset grows greedily.
const MAX_SPLIT_CATEGORIES: usize = 32;

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum SplitRule {
    /// Goes left when `value <= threshold` or the cell is missing.
    Numerical { feature: usize, threshold: f64 },
    /// Goes left when the code is in `left_categories` (sorted).
    Nominal { feature: usize, left_categories: Vec<i64> },
}

impl SplitRule {
    fn goes_left(&self, features: &[&ColumnData], row: usize) -> bool {
        match self {
            SplitRule::Numerical { feature, threshold } => {
                let v = features[*feature].as_numerical().expect("numerical feature")[row];
                v.is_nan() || v <= *threshold
            }
            SplitRule::Nominal { feature, left_categories } => {
                let c = features[*feature].as_nominal().expect("nominal feature")[row];
                left_categories.binary_search(&c).is_ok()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum LeafValue {
    /// Class histogram, sorted by code.
    Histogram(Vec<(i64, u32)>),
    Mean(f64),
}

impl LeafValue {
    /// Majority class, ties toward the lower code.
    pub fn majority(&self) -> i64 {
        match self {
            LeafValue::Histogram(counts) => {
                counts
                    .iter()
                    .fold((i64::MIN, 0u32), |best, &(code, n)| {
                        if n > best.1 {
                            (code, n)
                        } else {
                            best
                        }
                    })
                    .0
            }
            LeafValue::Mean(_) => panic!("majority on a regression leaf"),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            LeafValue::Mean(m) => *m,
            LeafValue::Histogram(_) => panic!("mean on a classification leaf"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    Split { rule: SplitRule, left: u32, right: u32 },
    Leaf(LeafValue),
}

/// One grown tree: an arena of nodes, root at index 0.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, features: &[&ColumnData], row: usize) -> &LeafValue {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf(value) => return value,
                Node::Split { rule, left, right } => {
                    at = if rule.goes_left(features, row) { *left as usize } else { *right as usize };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Target column view during growth.
#[derive(Debug, Clone, Copy)]
pub enum TargetView<'a> {
    Nominal(&'a [i64]),
    Numerical(&'a [f64]),
}

/// Sufficient statistics of one side of a candidate split.
#[derive(Debug, Clone, Default)]
struct SideStats {
    n: f64,
    /// Gini: per-class counts; regression unused.
    counts: HashMap<i64, f64>,
    sum_sq_counts: f64,
    /// Regression: target sum; classification unused.
    sum: f64,
}

impl SideStats {
    fn add_class(&mut self, code: i64, weight: f64) {
        let c = self.counts.entry(code).or_insert(0.0);
        self.sum_sq_counts += weight * (2.0 * *c + weight);
        *c += weight;
        self.n += weight;
    }

    fn remove_class(&mut self, code: i64, weight: f64) {
        let c = self.counts.get_mut(&code).expect("removing unseen class");
        self.sum_sq_counts -= weight * (2.0 * *c - weight);
        *c -= weight;
        self.n -= weight;
    }

    fn add_value(&mut self, value: f64) {
        self.sum += value;
        self.n += 1.0;
    }

    fn remove_value(&mut self, value: f64) {
        self.sum -= value;
        self.n -= 1.0;
    }

    fn merge_class(&mut self, other: &SideStats) {
        for (&code, &c) in &other.counts {
            self.add_class_weighted(code, c);
        }
    }

    fn add_class_weighted(&mut self, code: i64, weight: f64) {
        if weight > 0.0 {
            self.add_class(code, weight);
        }
    }

    /// Score to maximize: sum of per-side (purity mass). For Gini this is
    /// sum(c^2)/n, for variance reduction it is (sum)^2/n; both make the
    /// total split criterion "parent - children" a monotone gain.
    fn score(&self, classification: bool) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        if classification {
            self.sum_sq_counts / self.n
        } else {
            self.sum * self.sum / self.n
        }
    }
}

struct BestSplit {
    rule: SplitRule,
    criterion: f64,
}

pub struct TreeBuilder<'a> {
    pub features: &'a [&'a ColumnData],
    pub target: TargetView<'a>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub mtry: usize,
}

impl<'a> TreeBuilder<'a> {
    pub fn grow(&self, rows: &[usize], rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = Vec::new();
        let mut rows = rows.to_vec();
        self.build(&mut rows, 0, &mut nodes, rng);
        Tree { nodes }
    }

    fn is_classification(&self) -> bool {
        matches!(self.target, TargetView::Nominal(_))
    }

    fn leaf(&self, rows: &[usize]) -> Node {
        match self.target {
            TargetView::Nominal(codes) => {
                let mut hist: HashMap<i64, u32> = HashMap::new();
                for &r in rows {
                    *hist.entry(codes[r]).or_insert(0) += 1;
                }
                let mut sorted: Vec<(i64, u32)> = hist.into_iter().collect();
                sorted.sort_unstable();
                Node::Leaf(LeafValue::Histogram(sorted))
            }
            TargetView::Numerical(values) => {
                let sum: f64 = rows.iter().map(|&r| values[r]).sum();
                Node::Leaf(LeafValue::Mean(sum / rows.len() as f64))
            }
        }
    }

    fn pure_target(&self, rows: &[usize]) -> bool {
        match self.target {
            TargetView::Nominal(codes) => {
                let first = codes[rows[0]];
                rows.iter().all(|&r| codes[r] == first)
            }
            TargetView::Numerical(values) => {
                let first = values[rows[0]];
                rows.iter().all(|&r| values[r] == first)
            }
        }
    }

    fn build(
        &self,
        rows: &mut [usize],
        depth: usize,
        nodes: &mut Vec<Node>,
        rng: &mut ChaCha8Rng,
    ) -> u32 {
        let idx = nodes.len() as u32;
        let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
        if rows.len() < 2 * self.min_leaf || depth_capped || self.pure_target(rows) {
            nodes.push(self.leaf(rows));
            return idx;
        }

        // mtry candidate features per node; sorted so evaluation order (and
        // therefore tie-breaking) is independent of the sampling order.
        let all: Vec<usize> = (0..self.features.len()).collect();
        let mut candidates: Vec<usize> =
            all.choose_multiple(rng, self.mtry.min(all.len())).copied().collect();
        candidates.sort_unstable();

        let parent = self.side_stats(rows);
        let parent_score = parent.score(self.is_classification());
        let mut best: Option<BestSplit> = None;
        for &feature in &candidates {
            let found = match self.features[feature] {
                ColumnData::Numerical(values) => self.best_numerical(feature, values, rows),
                ColumnData::Nominal { codes, .. } => self.best_nominal(feature, codes, rows),
            };
            if let Some(split) = found {
                if split.criterion > parent_score + MIN_GAIN
                    && best.as_ref().is_none_or(|b| split.criterion > b.criterion)
                {
                    best = Some(split);
                }
            }
        }

        let Some(BestSplit { rule, .. }) = best else {
            nodes.push(self.leaf(rows));
            return idx;
        };

        let pivot = partition(rows, |r| rule.goes_left(self.features, r));
        debug_assert!(pivot >= self.min_leaf && rows.len() - pivot >= self.min_leaf);
        nodes.push(Node::Leaf(LeafValue::Mean(0.0))); // placeholder
        let (left_rows, right_rows) = rows.split_at_mut(pivot);
        let left = self.build(left_rows, depth + 1, nodes, rng);
        let right = self.build(right_rows, depth + 1, nodes, rng);
        nodes[idx as usize] = Node::Split { rule, left, right };
        idx
    }

    fn side_stats(&self, rows: &[usize]) -> SideStats {
        let mut stats = SideStats::default();
        match self.target {
            TargetView::Nominal(codes) => {
                for &r in rows {
                    stats.add_class(codes[r], 1.0);
                }
            }
            TargetView::Numerical(values) => {
                for &r in rows {
                    stats.add_value(values[r]);
                }
            }
        }
        stats
    }

    fn best_numerical(&self, feature: usize, values: &[f64], rows: &[usize]) -> Option<BestSplit> {
        let classification = self.is_classification();
        // Missing cells sort first (route left).
        let mut order: Vec<usize> = rows.to_vec();
        order.sort_by(|&a, &b| {
            let va = if values[a].is_nan() { f64::NEG_INFINITY } else { values[a] };
            let vb = if values[b].is_nan() { f64::NEG_INFINITY } else { values[b] };
            va.total_cmp(&vb)
        });
        let key = |r: usize| if values[r].is_nan() { f64::NEG_INFINITY } else { values[r] };

        let mut left = SideStats::default();
        let mut right = self.side_stats(&order);
        let mut best: Option<BestSplit> = None;
        for i in 0..order.len() - 1 {
            let r = order[i];
            match self.target {
                TargetView::Nominal(codes) => {
                    left.add_class(codes[r], 1.0);
                    right.remove_class(codes[r], 1.0);
                }
                TargetView::Numerical(t) => {
                    left.add_value(t[r]);
                    right.remove_value(t[r]);
                }
            }
            let (a, b) = (key(r), key(order[i + 1]));
            if a == b {
                continue; // not a boundary
            }
            let n_left = i + 1;
            let n_right = order.len() - n_left;
            if n_left < self.min_leaf || n_right < self.min_leaf {
                continue;
            }
            if a == f64::NEG_INFINITY {
                // Boundary between the missing block and real values: any
                // threshold below `b` works; splitting purely on
                // missingness is allowed.
                let criterion = left.score(classification) + right.score(classification);
                let threshold = b - 1.0;
                update_best(&mut best, SplitRule::Numerical { feature, threshold }, criterion);
                continue;
            }
            let mut threshold = 0.5 * (a + b);
            if threshold >= b {
                threshold = a;
            }
            let criterion = left.score(classification) + right.score(classification);
            update_best(&mut best, SplitRule::Numerical { feature, threshold }, criterion);
        }
        best
    }

    fn best_nominal(&self, feature: usize, codes: &[i64], rows: &[usize]) -> Option<BestSplit> {
        let classification = self.is_classification();
        // Per-category side stats.
        let mut per_cat: HashMap<i64, SideStats> = HashMap::new();
        for &r in rows {
            let stats = per_cat.entry(codes[r]).or_default();
            match self.target {
                TargetView::Nominal(t) => stats.add_class(t[r], 1.0),
                TargetView::Numerical(t) => stats.add_value(t[r]),
            }
        }
        if per_cat.len() < 2 {
            return None;
        }
        let mut categories: Vec<i64> = per_cat.keys().copied().collect();
        categories.sort_unstable();
        if categories.len() > MAX_SPLIT_CATEGORIES {
            // Keep the most frequent; ties toward the lower code.
            categories.sort_by(|a, b| {
                per_cat[b].n.total_cmp(&per_cat[a].n).then(a.cmp(b))
            });
            categories.truncate(MAX_SPLIT_CATEGORIES);
            categories.sort_unstable();
        }

        let total = self.side_stats(rows);
        let evaluate = |left_set: &[i64]| -> Option<f64> {
            let mut left = SideStats::default();
            for c in left_set {
                if let Some(stats) = per_cat.get(c) {
                    if classification {
                        left.merge_class(stats);
                    } else {
                        left.sum += stats.sum;
                        left.n += stats.n;
                    }
                }
            }
            let n_right = total.n - left.n;
            if (left.n as usize) < self.min_leaf || (n_right as usize) < self.min_leaf {
                return None;
            }
            let mut right = SideStats::default();
            if classification {
                for (&code, &c) in &total.counts {
                    let l = left.counts.get(&code).copied().unwrap_or(0.0);
                    right.add_class_weighted(code, c - l);
                }
            } else {
                right.sum = total.sum - left.sum;
                right.n = n_right;
            }
            Some(left.score(classification) + right.score(classification))
        };

        // One-vs-rest singletons, then greedy subset growth from the best.
        let mut best_set: Option<(Vec<i64>, f64)> = None;
        for &c in &categories {
            if let Some(score) = evaluate(&[c]) {
                if best_set.as_ref().is_none_or(|(_, s)| score > *s) {
                    best_set = Some((vec![c], score));
                }
            }
        }
        let (mut left_set, mut best_score) = best_set?;
        loop {
            let mut improved: Option<(i64, f64)> = None;
            for &c in &categories {
                if left_set.contains(&c) {
                    continue;
                }
                let mut trial = left_set.clone();
                trial.push(c);
                trial.sort_unstable();
                if let Some(score) = evaluate(&trial) {
                    if score > best_score + MIN_GAIN
                        && improved.as_ref().is_none_or(|(_, s)| score > *s)
                    {
                        improved = Some((c, score));
                    }
                }
            }
            match improved {
                Some((c, score)) => {
                    left_set.push(c);
                    left_set.sort_unstable();
                    best_score = score;
                }
                None => break,
            }
        }
        Some(BestSplit {
            rule: SplitRule::Nominal { feature, left_categories: left_set },
            criterion: best_score,
        })
    }
}

fn update_best(best: &mut Option<BestSplit>, rule: SplitRule, criterion: f64) {
    if best.as_ref().is_none_or(|b| criterion > b.criterion) {
        *best = Some(BestSplit { rule, criterion });
    }
}

/// In-place stable partition; returns the number of elements satisfying the
/// predicate (moved to the front, relative order preserved).
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut left: Vec<usize> = Vec::with_capacity(rows.len());
    let mut right: Vec<usize> = Vec::new();
    for &r in rows.iter() {
        if pred(r) {
            left.push(r);
        } else {
            right.push(r);
        }
    }
    let pivot = left.len();
    rows[..pivot].copy_from_slice(&left);
    rows[pivot..].copy_from_slice(&right);
    pivot
}

/// Draws a bootstrap sample of `n` virtual row indices.
pub fn bootstrap(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}
