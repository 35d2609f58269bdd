//! Association and feature-importance statistics over mixed-type columns.
//!
//! Every metric uses pairwise deletion: rows where either participating
//! cell is missing are ignored, and `n` below is the retained count.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::table::{ColumnData, FeatureKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssocError {
    #[error("fewer than two complete observation pairs")]
    InsufficientData,
    #[error("column has zero variance")]
    ZeroVariance,
    #[error("contingency table is degenerate (needs at least 2x2)")]
    DegenerateTable,
    #[error("grouping is degenerate (needs >=2 groups and within-group variance)")]
    DegenerateGroups,
    #[error("total variance is zero")]
    ZeroTotalVariance,
    #[error("column has zero entropy")]
    ZeroEntropy,
    #[error("expected a {expected} column")]
    WrongKind { expected: FeatureKind },
}

fn numerical(col: &ColumnData) -> Result<&[f64], AssocError> {
    col.as_numerical().ok_or(AssocError::WrongKind { expected: FeatureKind::Numerical })
}

fn nominal(col: &ColumnData) -> Result<&[i64], AssocError> {
    col.as_nominal().ok_or(AssocError::WrongKind { expected: FeatureKind::Nominal })
}

fn paired_numeric(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().zip(y).filter(|(a, b)| !a.is_nan() && !b.is_nan()).map(|(&a, &b)| (a, b)).collect()
}

/// Sample Pearson correlation of two numerical columns, in [-1, 1].
pub fn pearson(x: &ColumnData, y: &ColumnData) -> Result<f64, AssocError> {
    let pairs = paired_numeric(numerical(x)?, numerical(y)?);
    let n = pairs.len();
    if n < 2 {
        return Err(AssocError::InsufficientData);
    }
    let mean_x = pairs.iter().map(|(a, _)| a).sum::<f64>() / n as f64;
    let mean_y = pairs.iter().map(|(_, b)| b).sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in &pairs {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(AssocError::ZeroVariance);
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// Joint counts of two nominal columns over complete pairs, with marginals.
pub(crate) struct Contingency {
    pub cells: BTreeMap<(i64, i64), u64>,
    pub row_totals: BTreeMap<i64, u64>,
    pub col_totals: BTreeMap<i64, u64>,
    pub n: u64,
}

impl Contingency {
    pub fn build(x: &[i64], y: &[i64]) -> Self {
        let mut cells = BTreeMap::new();
        let mut row_totals = BTreeMap::new();
        let mut col_totals = BTreeMap::new();
        let mut n = 0u64;
        for (&a, &b) in x.iter().zip(y) {
            if a < 0 || b < 0 {
                continue;
            }
            *cells.entry((a, b)).or_insert(0) += 1;
            *row_totals.entry(a).or_insert(0) += 1;
            *col_totals.entry(b).or_insert(0) += 1;
            n += 1;
        }
        Self { cells, row_totals, col_totals, n }
    }

    fn rows(&self) -> usize {
        self.row_totals.len()
    }

    fn cols(&self) -> usize {
        self.col_totals.len()
    }
}

/// Pearson chi-squared statistic and degrees of freedom (r-1)(c-1) of the
/// contingency table over complete pairs. Empty categories never enter the
/// table, so the dof reflects observed categories only.
pub fn chi_squared(x: &ColumnData, y: &ColumnData) -> Result<(f64, usize), AssocError> {
    let table = Contingency::build(nominal(x)?, nominal(y)?);
    chi_squared_from(&table)
}

fn chi_squared_from(table: &Contingency) -> Result<(f64, usize), AssocError> {
    if table.rows() < 2 || table.cols() < 2 {
        return Err(AssocError::DegenerateTable);
    }
    let n = table.n as f64;
    let mut statistic = 0.0;
    for (&a, &row_total) in &table.row_totals {
        for (&b, &col_total) in &table.col_totals {
            let expected = row_total as f64 * col_total as f64 / n;
            let observed = table.cells.get(&(a, b)).copied().unwrap_or(0) as f64;
            let diff = observed - expected;
            statistic += diff * diff / expected;
        }
    }
    Ok((statistic, (table.rows() - 1) * (table.cols() - 1)))
}

/// Plug-in mutual information in nats from empirical joint frequencies.
///
/// The log argument is formed as a single ratio of count products, so an
/// exactly factorizing joint yields exactly zero.
pub fn mutual_information(x: &ColumnData, y: &ColumnData) -> Result<f64, AssocError> {
    let table = Contingency::build(nominal(x)?, nominal(y)?);
    if table.rows() < 2 || table.cols() < 2 {
        return Err(AssocError::DegenerateTable);
    }
    let n = table.n as f64;
    let mut mi = 0.0;
    for (&(a, b), &count) in &table.cells {
        let joint = count as f64;
        let ratio = joint * n / (table.row_totals[&a] as f64 * table.col_totals[&b] as f64);
        mi += joint / n * ratio.ln();
    }
    Ok(mi.max(0.0))
}

/// Per-group numeric samples over complete pairs.
fn grouped(groups: &[i64], y: &[f64]) -> BTreeMap<i64, Vec<f64>> {
    let mut map: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (&g, &v) in groups.iter().zip(y) {
        if g < 0 || v.is_nan() {
            continue;
        }
        map.entry(g).or_default().push(v);
    }
    map
}

struct VarianceDecomposition {
    between: f64,
    within: f64,
    k: usize,
    n: usize,
}

fn decompose(groups: &[i64], y: &[f64]) -> Result<VarianceDecomposition, AssocError> {
    let map = grouped(groups, y);
    let k = map.len();
    let n: usize = map.values().map(Vec::len).sum();
    if k < 2 || n < 2 {
        return Err(AssocError::DegenerateGroups);
    }
    let grand = map.values().flatten().sum::<f64>() / n as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for samples in map.values() {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        between += samples.len() as f64 * (mean - grand) * (mean - grand);
        within += samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    }
    Ok(VarianceDecomposition { between, within, k, n })
}

/// One-way ANOVA F statistic: (SSB/(k-1)) / (SSW/(n-k)).
pub fn anova_f(groups: &ColumnData, y: &ColumnData) -> Result<f64, AssocError> {
    let d = decompose(nominal(groups)?, numerical(y)?)?;
    if d.n == d.k || d.within == 0.0 {
        return Err(AssocError::DegenerateGroups);
    }
    Ok((d.between / (d.k - 1) as f64) / (d.within / (d.n - d.k) as f64))
}

/// Correlation ratio eta = sqrt(SSB / SST), in [0, 1].
pub fn correlation_ratio(groups: &ColumnData, y: &ColumnData) -> Result<f64, AssocError> {
    let d = decompose(nominal(groups)?, numerical(y)?)?;
    let total = d.between + d.within;
    if total == 0.0 {
        return Err(AssocError::ZeroTotalVariance);
    }
    Ok((d.between / total).sqrt().clamp(0.0, 1.0))
}

/// Cramer's V = sqrt(chi2 / (n * min(r-1, c-1))), in [0, 1].
pub fn cramers_v(x: &ColumnData, y: &ColumnData) -> Result<f64, AssocError> {
    let table = Contingency::build(nominal(x)?, nominal(y)?);
    let (statistic, _) = chi_squared_from(&table)?;
    let denom = table.n as f64 * (table.rows().min(table.cols()) - 1) as f64;
    Ok((statistic / denom).sqrt().clamp(0.0, 1.0))
}

fn entropy_of_counts<'a>(counts: impl Iterator<Item = &'a u64>, n: f64) -> f64 {
    counts
        .map(|&c| {
            let p = c as f64 / n;
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .sum()
}

/// Theil's uncertainty coefficient U(x|y) = (H(x) - H(x|y)) / H(x): the
/// share of x's uncertainty explained by y. Directional.
pub fn theils_u(x: &ColumnData, y: &ColumnData) -> Result<f64, AssocError> {
    let table = Contingency::build(nominal(x)?, nominal(y)?);
    if table.n == 0 {
        return Err(AssocError::InsufficientData);
    }
    let n = table.n as f64;
    let h_x = entropy_of_counts(table.row_totals.values(), n);
    if h_x == 0.0 {
        return Err(AssocError::ZeroEntropy);
    }
    // H(x|y) = sum_y p(y) H(x | Y = y)
    let mut h_x_given_y = 0.0;
    for (&b, &col_total) in &table.col_totals {
        let p_y = col_total as f64 / n;
        let conditional = table
            .cells
            .iter()
            .filter(|((_, cb), _)| *cb == b)
            .map(|(_, &c)| {
                let p = c as f64 / col_total as f64;
                -p * p.ln()
            })
            .sum::<f64>();
        h_x_given_y += p_y * conditional;
    }
    Ok(((h_x - h_x_given_y) / h_x).clamp(0.0, 1.0))
}
