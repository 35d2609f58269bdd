//! Feature-association analysis and threshold pruning.
//!
//! Metric choice follows the column kinds: Pearson for numerical pairs,
//! Cramer's V and (directional) Theil's U for nominal pairs, the correlation
//! ratio across kinds, and chi-squared / mutual information / ANOVA F for
//! importance against the severity target.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::table::{ColumnRole, DataTable, FeatureKind, TableError};

mod metrics;

pub use metrics::{
    anova_f, chi_squared, correlation_ratio, cramers_v, mutual_information, pearson, theils_u,
    AssocError,
};

/// Threshold above which a symmetric pair score marks the pair as highly
/// correlated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationConfig {
    pub high_correlation_threshold: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self { high_correlation_threshold: 0.7 }
    }
}

/// One prune decision: the pair crossed the threshold and the member with
/// lower target importance goes.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneDecision {
    pub kept: String,
    pub pruned: String,
    pub metric: String,
    pub score: f64,
    pub justification: String,
}

/// A metric that could not be computed for a pair; recorded, not fatal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairError {
    pub left: String,
    pub right: String,
    pub metric: String,
    pub message: String,
}

/// Pairwise scores, target-importance scores and prune decisions.
///
/// Symmetric metrics are stored once per unordered pair (lexicographic key
/// order); Theil's U is stored directionally: `(a, b, "theils_u")` is the
/// uncertainty of `a` explained by `b`.
#[derive(Debug, Clone, Default)]
pub struct AssociationReport {
    pub pairwise: BTreeMap<(String, String, String), f64>,
    pub target_importance: BTreeMap<(String, String), f64>,
    pub pruned: Vec<PruneDecision>,
    pub errors: Vec<PairError>,
}

impl AssociationReport {
    pub fn pruned_columns(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.pruned.iter().map(|d| d.pruned.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// `left,right,metric,score` lines; target scores use an empty `right`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("left,right,metric,score\n");
        for ((col, metric), score) in &self.target_importance {
            out.push_str(&format!("{col},,{metric},{score}\n"));
        }
        for ((a, b, metric), score) in &self.pairwise {
            out.push_str(&format!("{a},{b},{metric},{score}\n"));
        }
        out
    }

    /// Human-readable importance ranking and prune summary.
    pub fn summary(&self) -> String {
        let mut by_rank: Vec<(&str, f64)> = self
            .target_importance
            .iter()
            .filter(|((_, metric), _)| metric == "rank")
            .map(|((col, _), &s)| (col.as_str(), s))
            .collect();
        by_rank.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        let mut out = String::from("feature importance (rank score vs target)\n");
        for (col, score) in &by_rank {
            out.push_str(&format!("  {score:.4}  {col}\n"));
        }
        out.push_str("\nprune decisions\n");
        if self.pruned.is_empty() {
            out.push_str("  none\n");
        }
        for d in &self.pruned {
            out.push_str(&format!(
                "  drop `{}` (kept `{}`): {} = {:.4} >= threshold; {}\n",
                d.pruned, d.kept, d.metric, d.score, d.justification
            ));
        }
        if !self.errors.is_empty() {
            out.push_str("\nmetric errors\n");
            for e in &self.errors {
                out.push_str(&format!("  {} ~ {} [{}]: {}\n", e.left, e.right, e.metric, e.message));
            }
        }
        out
    }
}

struct PairOutcome {
    scores: Vec<(String, String, String, f64)>,
    errors: Vec<PairError>,
    /// Symmetric comparable score used for the pruning decision.
    symmetric: Option<(String, f64)>,
}

fn feature_pair_scores(
    table: &DataTable,
    ai: usize,
    bi: usize,
) -> PairOutcome {
    let a = &table.schema()[ai];
    let b = &table.schema()[bi];
    let col_a = table.column(ai);
    let col_b = table.column(bi);
    let mut scores = Vec::new();
    let mut errors = Vec::new();
    let mut symmetric = None;
    let mut record = |metric: &str,
                      left: &str,
                      right: &str,
                      result: Result<f64, AssocError>,
                      errors: &mut Vec<PairError>|
     -> Option<f64> {
        match result {
            Ok(score) => {
                scores.push((left.to_string(), right.to_string(), metric.to_string(), score));
                Some(score)
            }
            Err(e) => {
                errors.push(PairError {
                    left: left.to_string(),
                    right: right.to_string(),
                    metric: metric.to_string(),
                    message: e.to_string(),
                });
                None
            }
        }
    };
    match (a.kind, b.kind) {
        (FeatureKind::Numerical, FeatureKind::Numerical) => {
            if let Some(r) = record("pearson", &a.name, &b.name, pearson(col_a, col_b), &mut errors)
            {
                symmetric = Some(("pearson".to_string(), r.abs()));
            }
        }
        (FeatureKind::Nominal, FeatureKind::Nominal) => {
            if let Some(v) =
                record("cramers_v", &a.name, &b.name, cramers_v(col_a, col_b), &mut errors)
            {
                symmetric = Some(("cramers_v".to_string(), v));
            }
            record("theils_u", &a.name, &b.name, theils_u(col_a, col_b), &mut errors);
            record("theils_u", &b.name, &a.name, theils_u(col_b, col_a), &mut errors);
        }
        (FeatureKind::Nominal, FeatureKind::Numerical) => {
            if let Some(eta) = record(
                "correlation_ratio",
                &a.name,
                &b.name,
                correlation_ratio(col_a, col_b),
                &mut errors,
            ) {
                symmetric = Some(("correlation_ratio".to_string(), eta));
            }
        }
        (FeatureKind::Numerical, FeatureKind::Nominal) => {
            if let Some(eta) = record(
                "correlation_ratio",
                &b.name,
                &a.name,
                correlation_ratio(col_b, col_a),
                &mut errors,
            ) {
                symmetric = Some(("correlation_ratio".to_string(), eta));
            }
        }
    }
    PairOutcome { scores, errors, symmetric }
}

/// Computes every applicable metric for every feature pair and for each
/// feature against the target, then flags pairs whose symmetric score
/// reaches the threshold; the lower-target-importance member of each
/// flagged pair is marked pruned (ties drop the lexicographically later
/// name).
///
/// Per-pair metric failures (zero variance, degenerate tables) are recorded
/// in the report rather than aborting the analysis.
pub fn build_report(
    table: &DataTable,
    config: &AssociationConfig,
) -> Result<AssociationReport, TableError> {
    let target_idx = table.target_index()?;
    let target_col = table.column(target_idx);
    let features: Vec<usize> = (0..table.n_cols())
        .filter(|&i| table.schema()[i].role == ColumnRole::Feature)
        .collect();

    let mut report = AssociationReport::default();

    // Importance of each feature against the target. The "rank" entry is the
    // comparable [0,1] score (Cramer's V for nominal features, correlation
    // ratio for numerical ones) that arbitrates pruning.
    for &fi in &features {
        let cs = &table.schema()[fi];
        let col = table.column(fi);
        let mut push = |metric: &str, result: Result<f64, AssocError>| match result {
            Ok(score) => {
                report.target_importance.insert((cs.name.clone(), metric.to_string()), score);
            }
            Err(e) => report.errors.push(PairError {
                left: cs.name.clone(),
                right: "<target>".to_string(),
                metric: metric.to_string(),
                message: e.to_string(),
            }),
        };
        match cs.kind {
            FeatureKind::Nominal => {
                push("chi_squared", chi_squared(col, target_col).map(|(s, _)| s));
                push("mutual_information", mutual_information(col, target_col));
                push("rank", cramers_v(col, target_col));
            }
            FeatureKind::Numerical => {
                push("anova_f", anova_f(target_col, col));
                push("rank", correlation_ratio(target_col, col));
            }
        }
    }

    let pairs: Vec<(usize, usize)> = features
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| features[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let outcomes: Vec<((usize, usize), PairOutcome)> = pairs
        .par_iter()
        .map(|&(a, b)| ((a, b), feature_pair_scores(table, a, b)))
        .collect();

    let rank = |name: &str| -> f64 {
        report
            .target_importance
            .get(&(name.to_string(), "rank".to_string()))
            .copied()
            .unwrap_or(0.0)
    };

    for ((ai, bi), outcome) in outcomes {
        for (left, right, metric, score) in outcome.scores {
            report.pairwise.insert((left, right, metric), score);
        }
        report.errors.extend(outcome.errors);
        if let Some((metric, score)) = outcome.symmetric {
            if score >= config.high_correlation_threshold {
                let a = table.schema()[ai].name.clone();
                let b = table.schema()[bi].name.clone();
                let (rank_a, rank_b) = (rank(&a), rank(&b));
                let (kept, pruned) = if rank_a > rank_b {
                    (a, b)
                } else if rank_b > rank_a {
                    (b, a)
                } else if a < b {
                    // Equal importance: keep the lexicographically earlier name.
                    (a, b)
                } else {
                    (b, a)
                };
                let justification = format!(
                    "target rank {:.4} (kept) vs {:.4} (pruned)",
                    rank(&kept),
                    rank(&pruned)
                );
                report.pruned.push(PruneDecision { kept, pruned, metric, score, justification });
            }
        }
    }
    report.pruned.sort_by(|x, y| (&x.pruned, &x.kept).cmp(&(&y.pruned, &y.kept)));
    Ok(report)
}
