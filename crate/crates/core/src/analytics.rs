//! Descriptive statistics, association matrices and backward feature
//! selection over feature rows.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, StudentsT};

use crate::domain::ClassLabel;
use crate::error::{Error, Result};
use crate::features::{FeatureRow, CATEGORICAL, FEATURE_NAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub feature: String,
    pub class: ClassLabel,
    pub n: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Population standard deviation.
    pub sigma: f64,
}

/// min, mean, max and population sigma of a non-empty slice.
pub fn summarize(values: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (values.iter().sum::<f64>() / n).clamp(min, max);
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((min, mean, max, var.sqrt()))
}

/// One summary per (feature, class) with at least one row. Classes appear
/// in label order, features in file order.
pub fn class_stats(rows: &[FeatureRow]) -> Result<Vec<ClassSummary>> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let encoded: Vec<[f64; 15]> = rows.iter().map(FeatureRow::encode).collect();
    let mut out = Vec::new();
    for class in ClassLabel::ALL {
        let members: Vec<&[f64; 15]> = rows
            .iter()
            .zip(&encoded)
            .filter(|(r, _)| r.class == class)
            .map(|(_, e)| e)
            .collect();
        if members.is_empty() {
            continue;
        }
        for (j, name) in FEATURE_NAMES.iter().enumerate() {
            let col: Vec<f64> = members.iter().map(|e| e[j]).collect();
            let (min, mean, max, sigma) = summarize(&col)?;
            out.push(ClassSummary {
                feature: name.to_string(),
                class,
                n: col.len(),
                min,
                mean,
                max,
                sigma,
            });
        }
    }
    Ok(out)
}

/// Affine map onto [0, 1]; a constant column maps to zeros.
pub fn minmax_scale(column: &[f64]) -> Vec<f64> {
    let min = column.iter().copied().fold(f64::INFINITY, f64::min);
    let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    column
        .iter()
        .map(|&v| if span > 0.0 { ((v - min) / span).clamp(0.0, 1.0) } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `n_bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins over `[min, max]`; the last bin is closed on the right.
pub fn histogram(column: &[f64], n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::InvalidInput("histogram needs at least one bin".into()));
    }
    if column.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let min = column.iter().copied().fold(f64::INFINITY, f64::min);
    let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / n_bins as f64;
    let mut edges: Vec<f64> = (0..n_bins).map(|i| min + width * i as f64).collect();
    edges.push(max);
    let mut counts = vec![0; n_bins];
    for &v in column {
        let idx = if width > 0.0 {
            (((v - min) / width).floor() as usize).min(n_bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    /// Ascending.
    pub outliers: Vec<f64>,
}

/// Linear interpolation between order statistics of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn boxplot_stats(column: &[f64]) -> Result<BoxStats> {
    if column.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |v: &&f64| **v >= lo_fence && **v <= hi_fence;
    Ok(BoxStats {
        q1,
        median,
        q3,
        whisker_lo: *sorted.iter().find(inside).unwrap_or(&q1),
        whisker_hi: *sorted.iter().rev().find(inside).unwrap_or(&q3),
        outliers: sorted.iter().copied().filter(|v| !inside(&v)).collect(),
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    // snap rounding noise on perfectly monotone data
    Some(if 1.0 - r.abs() < 1e-12 { r.signum() } else { r })
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("length mismatch {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InvalidInput("spearman needs at least 3 pairs".into()));
    }
    if is_constant(x) {
        return Err(Error::DegenerateColumn("x".into()));
    }
    if is_constant(y) {
        return Err(Error::DegenerateColumn("y".into()));
    }
    pearson(&mid_ranks(x), &mid_ranks(y)).ok_or_else(|| Error::DegenerateColumn("rank".into()))
}

/// Two-sided p-value from the t approximation with `n - 2` degrees of freedom.
pub fn p_value_spearman(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    if n <= 2 {
        return 1.0;
    }
    let dof = (n - 2) as f64;
    let t = rho * (dof / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Category codes as dense indices 0..levels.
fn levels(values: &[f64]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let idx = values
        .iter()
        .map(|v| distinct.iter().position(|d| d == v).unwrap_or(0))
        .collect();
    (idx, distinct.len())
}

/// Correlation ratio of a numeric column given categories, with the one-way
/// ANOVA p-value.
pub fn correlation_ratio(categories: &[f64], values: &[f64]) -> Result<(f64, Option<f64>)> {
    let (idx, k) = levels(categories);
    if k < 2 {
        return Err(Error::DegenerateColumn("single category".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&c, &v) in idx.iter().zip(values) {
        sums[c] += v;
        counts[c] += 1;
    }
    let ss_total: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_total == 0.0 {
        return Err(Error::DegenerateColumn("constant values".into()));
    }
    let ss_between: f64 = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| c as f64 * (s / c as f64 - mean).powi(2))
        .sum();
    let eta = (ss_between / ss_total).clamp(0.0, 1.0).sqrt();
    let ss_within = (ss_total - ss_between).max(0.0);
    let p = if n > k {
        let (d1, d2) = ((k - 1) as f64, (n - k) as f64);
        if ss_within <= ss_total * 1e-15 {
            Some(0.0)
        } else {
            let f = (ss_between / d1) / (ss_within / d2);
            FisherSnedecor::new(d1, d2).ok().map(|d| d.sf(f).clamp(0.0, 1.0))
        }
    } else {
        None
    };
    Ok((eta, p))
}

/// Bias-uncorrected Cramér's V with the chi-square independence p-value.
pub fn cramers_v(a: &[f64], b: &[f64]) -> Result<(f64, Option<f64>)> {
    let (ia, ka) = levels(a);
    let (ib, kb) = levels(b);
    if ka < 2 || kb < 2 {
        return Err(Error::DegenerateColumn("single category".into()));
    }
    let n = a.len() as f64;
    let mut table = vec![vec![0.0; kb]; ka];
    for (&i, &j) in ia.iter().zip(&ib) {
        table[i][j] += 1.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi2 = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let e = rows[i] * cols[j] / n;
            chi2 += (table[i][j] - e).powi(2) / e;
        }
    }
    let v = (chi2 / n / (ka.min(kb) - 1) as f64).clamp(0.0, 1.0).sqrt();
    let dof = ((ka - 1) * (kb - 1)) as f64;
    let p = ChiSquared::new(dof).ok().map(|d| d.sf(chi2).clamp(0.0, 1.0));
    Ok((v, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SPEARMAN")]
    Spearman,
    #[serde(rename = "CORR_RATIO")]
    CorrRatio,
    #[serde(rename = "CRAMERS_V")]
    CramersV,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<f64>,
}

/// Feature columns with their kinds, optionally followed by CLASS as a
/// categorical column.
pub fn feature_columns(rows: &[FeatureRow], with_class: bool) -> Vec<Column> {
    let encoded: Vec<[f64; 15]> = rows.iter().map(FeatureRow::encode).collect();
    let mut cols: Vec<Column> = FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| Column {
            name: name.to_string(),
            kind: if CATEGORICAL.contains(name) {
                ColumnKind::Categorical
            } else {
                ColumnKind::Numeric
            },
            values: encoded.iter().map(|e| e[j]).collect(),
        })
        .collect();
    if with_class {
        cols.push(Column {
            name: "CLASS".into(),
            kind: ColumnKind::Categorical,
            values: rows.iter().map(|r| r.class.index() as f64).collect(),
        });
    }
    cols
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix {
    pub columns: Vec<String>,
    /// `None` where the coefficient is undefined (degenerate column).
    pub entries: Vec<Vec<Option<f64>>>,
    pub p_values: Vec<Vec<Option<f64>>>,
    pub methods: Vec<Vec<Method>>,
}

fn method_for(a: ColumnKind, b: ColumnKind) -> Method {
    match (a, b) {
        (ColumnKind::Numeric, ColumnKind::Numeric) => Method::Spearman,
        (ColumnKind::Categorical, ColumnKind::Categorical) => Method::CramersV,
        _ => Method::CorrRatio,
    }
}

fn cell(a: &Column, b: &Column) -> Result<(f64, Option<f64>)> {
    match method_for(a.kind, b.kind) {
        Method::Spearman => {
            let rho = spearman(&a.values, &b.values)?;
            Ok((rho, Some(p_value_spearman(rho, a.values.len()))))
        }
        Method::CramersV => cramers_v(&a.values, &b.values),
        Method::CorrRatio if a.kind == ColumnKind::Categorical => correlation_ratio(&a.values, &b.values),
        Method::CorrRatio => correlation_ratio(&b.values, &a.values),
    }
}

/// Pairwise association coefficients and p-values. The diagonal is 1.
pub fn associations(columns: &[Column]) -> Result<AssociationMatrix> {
    let k = columns.len();
    if k == 0 || columns[0].values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = columns[0].values.len();
    if let Some(c) = columns.iter().find(|c| c.values.len() != n) {
        return Err(Error::InvalidInput(format!("column {} has {} values, expected {n}", c.name, c.values.len())));
    }
    let mut entries = vec![vec![None; k]; k];
    let mut p_values = vec![vec![None; k]; k];
    let mut methods = vec![vec![Method::Spearman; k]; k];
    for i in 0..k {
        for j in i..k {
            let m = method_for(columns[i].kind, columns[j].kind);
            methods[i][j] = m;
            methods[j][i] = m;
            let (e, p) = if i == j {
                (Some(1.0), Some(0.0))
            } else {
                match cell(&columns[i], &columns[j]) {
                    Ok((e, p)) => (Some(e), p),
                    Err(Error::DegenerateColumn(_)) => (None, None),
                    Err(e) => return Err(e),
                }
            };
            entries[i][j] = e;
            entries[j][i] = e;
            p_values[i][j] = p;
            p_values[j][i] = p;
        }
    }
    Ok(AssociationMatrix {
        columns: columns.iter().map(|c| c.name.clone()).collect(),
        entries,
        p_values,
        methods,
    })
}

impl AssociationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<(Option<f64>, Option<f64>)> {
        let i = self.columns.iter().position(|c| c == a)?;
        let j = self.columns.iter().position(|c| c == b)?;
        Some((self.entries[i][j], self.p_values[i][j]))
    }

    /// Column order that chains each column to its strongest remaining
    /// partner, starting from the first column.
    pub fn similarity_order(&self) -> Vec<usize> {
        let k = self.columns.len();
        let mut order = vec![0];
        let mut used = vec![false; k];
        used[0] = true;
        while order.len() < k {
            let last = *order.last().unwrap();
            let next = (0..k)
                .filter(|&j| !used[j])
                .max_by(|&a, &b| {
                    let s = |j: usize| self.entries[last][j].map_or(0.0, f64::abs);
                    s(a).total_cmp(&s(b)).then(b.cmp(&a))
                })
                .unwrap();
            used[next] = true;
            order.push(next);
        }
        order
    }

    pub fn reordered(&self, order: &[usize]) -> Self {
        let pick = |m: &Vec<Vec<Option<f64>>>| -> Vec<Vec<Option<f64>>> {
            order.iter().map(|&i| order.iter().map(|&j| m[i][j]).collect()).collect()
        };
        Self {
            columns: order.iter().map(|&i| self.columns[i].clone()).collect(),
            entries: pick(&self.entries),
            p_values: pick(&self.p_values),
            methods: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.methods[i][j]).collect())
                .collect(),
        }
    }
}

/// Accuracy oracle for a subset of feature indices.
pub trait Evaluator {
    fn accuracy(&mut self, subset: &[usize]) -> std::result::Result<f64, String>;
}

impl<F: FnMut(&[usize]) -> std::result::Result<f64, String>> Evaluator for F {
    fn accuracy(&mut self, subset: &[usize]) -> std::result::Result<f64, String> {
        self(subset)
    }
}

/// Leave-one-out nearest-centroid classifier on min-max scaled features.
#[derive(Debug, Clone)]
pub struct NearestCentroid {
    /// Row-major, already scaled.
    x: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl NearestCentroid {
    /// `columns[j][i]` is feature j of sample i.
    pub fn new(columns: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("feature and label lengths differ".into()));
        }
        let scaled: Vec<Vec<f64>> = columns.iter().map(|c| minmax_scale(c)).collect();
        let x = (0..n).map(|i| scaled.iter().map(|c| c[i]).collect()).collect();
        Ok(Self {
            x,
            labels: labels.to_vec(),
            n_classes: labels.iter().max().map_or(0, |m| m + 1),
        })
    }

    pub fn from_rows(rows: &[FeatureRow]) -> Result<Self> {
        let cols: Vec<Vec<f64>> = feature_columns(rows, false).into_iter().map(|c| c.values).collect();
        let labels: Vec<usize> = rows.iter().map(|r| r.class.index()).collect();
        Self::new(&cols, &labels)
    }
}

impl Evaluator for NearestCentroid {
    fn accuracy(&mut self, subset: &[usize]) -> std::result::Result<f64, String> {
        let d = self.x.first().map_or(0, Vec::len);
        if let Some(bad) = subset.iter().find(|&&j| j >= d) {
            return Err(format!("feature index {bad} out of range"));
        }
        let mut sums = vec![vec![0.0; subset.len()]; self.n_classes];
        let mut counts = vec![0usize; self.n_classes];
        for (row, &c) in self.x.iter().zip(&self.labels) {
            counts[c] += 1;
            for (s, &j) in sums[c].iter_mut().zip(subset) {
                *s += row[j];
            }
        }
        let mut correct = 0;
        for (row, &truth) in self.x.iter().zip(&self.labels) {
            let mut best: Option<(f64, usize)> = None;
            for c in 0..self.n_classes {
                let own = usize::from(c == truth);
                let m = counts[c] - own;
                if m == 0 {
                    continue;
                }
                let dist: f64 = subset
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| {
                        let centroid = (sums[c][k] - own as f64 * row[j]) / m as f64;
                        (row[j] - centroid).powi(2)
                    })
                    .sum();
                if best.is_none_or(|(b, _)| dist < b) {
                    best = Some((dist, c));
                }
            }
            if best.map(|(_, c)| c) == Some(truth) {
                correct += 1;
            }
        }
        Ok(correct as f64 / self.x.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsStep {
    pub removed: String,
    /// Accuracy of the remaining subset after this removal.
    pub accuracy: f64,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsResult {
    /// Most important first.
    pub ranking: Vec<String>,
    /// Accuracy with every feature.
    pub baseline: f64,
    pub steps: Vec<SbsStep>,
    pub evaluations: usize,
}

/// Greedy backward elimination. Each round drops the feature whose removal
/// leaves the highest accuracy; ties drop the earliest listed feature.
pub fn sbs_rank(names: &[String], evaluator: &mut impl Evaluator) -> Result<SbsResult> {
    if names.len() < 2 {
        return Err(Error::InvalidInput("backward selection needs at least 2 features".into()));
    }
    let mut calls = 0;
    let mut eval = |subset: &[usize]| -> Result<f64> {
        calls += 1;
        let fail = |reason: String| Error::EvaluatorFailure {
            subset: subset.iter().map(|&j| names[j].clone()).collect(),
            reason,
        };
        let acc = evaluator.accuracy(subset).map_err(fail)?;
        if !(0.0..=1.0).contains(&acc) {
            return Err(fail(format!("accuracy {acc} outside [0, 1]")));
        }
        Ok(acc)
    };
    let mut current: Vec<usize> = (0..names.len()).collect();
    let baseline = eval(&current)?;
    let mut steps = Vec::new();
    let mut removed = Vec::new();
    while current.len() > 1 {
        let mut best: Option<(usize, f64)> = None;
        for pos in 0..current.len() {
            let mut subset = current.clone();
            subset.remove(pos);
            let acc = eval(&subset)?;
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((pos, acc));
            }
        }
        let (pos, acc) = best.expect("non-empty candidate set");
        let f = current.remove(pos);
        removed.push(f);
        steps.push(SbsStep {
            removed: names[f].clone(),
            accuracy: acc,
            remaining: current.len(),
        });
    }
    removed.push(current[0]);
    let ranking = removed.iter().rev().map(|&j| names[j].clone()).collect();
    Ok(SbsResult {
        ranking,
        baseline,
        steps,
        evaluations: calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_by_hand() {
        let (min, mean, max, sigma) = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((min, mean, max), (1.0, 2.0, 3.0));
        assert!((sigma - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(summarize(&[4.0; 5]).unwrap().3, 0.0);
        assert!(matches!(class_stats(&[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn scaling() {
        assert_eq!(minmax_scale(&[0.0, 50.0, 100.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(minmax_scale(&[7.0, 7.0, 7.0]), vec![0.0; 3]);
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(h.counts, vec![2, 2]);
        assert_eq!(h.edges, vec![1.0, 2.5, 4.0]);
        let h = histogram(&[5.0; 4], 3).unwrap();
        assert_eq!(h.counts, vec![4, 0, 0]);
        assert!(histogram(&[1.0], 0).is_err());
    }

    #[test]
    fn box_stats() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let b = boxplot_stats(&v).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (25.75, 50.5, 75.25));
        assert!(b.outliers.is_empty());
        let b = boxplot_stats(&[1.0, 1.0, 1.0, 1.0, 100.0]).unwrap();
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_hi, 1.0);
    }

    #[test]
    fn spearman_cases() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        let y: Vec<f64> = x.iter().map(|v| -v.powi(3)).collect();
        assert_eq!(spearman(&x, &y).unwrap(), -1.0);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((r - 0.6).abs() < 1e-12);
        assert!(matches!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateColumn(_))));
    }

    #[test]
    fn p_values() {
        assert_eq!(p_value_spearman(1.0, 10), 0.0);
        assert_eq!(p_value_spearman(0.0, 10), 1.0);
        assert!(p_value_spearman(0.075, 20) > 0.05);
        assert!(p_value_spearman(0.9, 20) < 1e-6);
    }

    #[test]
    fn eta_and_v() {
        let cats = [0.0, 0.0, 1.0, 1.0];
        let (eta, p) = correlation_ratio(&cats, &[1.0, 1.0, 5.0, 5.0]).unwrap();
        assert!((eta - 1.0).abs() < 1e-12);
        assert_eq!(p, Some(0.0));
        let (v, _) = cramers_v(&cats, &[3.0, 3.0, 4.0, 4.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let (v, p) = cramers_v(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(v, 0.0);
        assert!((p.unwrap() - 1.0).abs() < 1e-12);
        assert!(correlation_ratio(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn matrix_shape() {
        let cols = vec![
            Column { name: "a".into(), kind: ColumnKind::Numeric, values: vec![1.0, 2.0, 3.0, 4.0, 5.0] },
            Column { name: "b".into(), kind: ColumnKind::Numeric, values: vec![2.0, 1.0, 4.0, 3.0, 6.0] },
            Column { name: "c".into(), kind: ColumnKind::Categorical, values: vec![0.0, 0.0, 1.0, 1.0, 1.0] },
            Column { name: "k".into(), kind: ColumnKind::Categorical, values: vec![3.0; 5] },
        ];
        let m = associations(&cols).unwrap();
        for i in 0..4 {
            assert_eq!(m.entries[i][i], Some(1.0));
            for j in 0..4 {
                assert_eq!(m.entries[i][j], m.entries[j][i]);
            }
        }
        assert_eq!(m.methods[0][2], Method::CorrRatio);
        assert_eq!(m.methods[2][3], Method::CramersV);
        assert_eq!(m.get("a", "k").unwrap().0, None);
        let order = m.similarity_order();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        let r = m.reordered(&order);
        assert_eq!(r.columns[0], "a");
    }

    #[test]
    fn sbs_finds_the_label_feature() {
        // label = feature 2 > 0.5; the others are unrelated patterns
        let n = 40;
        let cols: Vec<Vec<f64>> = vec![
            (0..n).map(|i| ((i * 7) % 11) as f64).collect(),
            (0..n).map(|i| ((i * 5) % 13) as f64).collect(),
            (0..n).map(|i| i as f64 / n as f64).collect(),
            (0..n).map(|i| ((i * 3) % 7) as f64).collect(),
        ];
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i * 2 >= n)).collect();
        let mut ev = NearestCentroid::new(&cols, &labels).unwrap();
        let names: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
        let r = sbs_rank(&names, &mut ev).unwrap();
        assert_eq!(r.ranking[0], "c");
        assert_eq!(r.evaluations, 1 + 4 + 3 + 2);
        assert_eq!(r.steps.len(), 3);
    }

    #[test]
    fn sbs_reports_evaluator_failure() {
        let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let mut ev = |s: &[usize]| if s.len() < 3 { Err("boom".to_string()) } else { Ok(1.0) };
        match sbs_rank(&names, &mut ev) {
            Err(Error::EvaluatorFailure { subset, .. }) => assert_eq!(subset, vec!["b", "c"]),
            other => panic!("{other:?}"),
        }
    }
}
