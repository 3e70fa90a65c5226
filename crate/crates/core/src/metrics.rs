//! Ranking metrics for multi-label tagging and the Welch t-test.

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn class_counts(labels: &[u8]) -> Result<(usize, usize)> {
    let mut pos = 0;
    for (i, &l) in labels.iter().enumerate() {
        match l {
            0 => {}
            1 => pos += 1,
            other => {
                return Err(Error::invalid(format!(
                    "label {i} is {other}, expected 0 or 1"
                )))
            }
        }
    }
    Ok((pos, labels.len() - pos))
}

fn check_scores(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    Ok(())
}

/// ROC AUC as the Mann-Whitney statistic: the probability that a random
/// positive outscores a random negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_scores(scores, labels)?;
    let (n_pos, n_neg) = class_counts(labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC AUC needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of positive ranks, tied groups sharing their mid-rank. Ranks are
    // doubled to stay in integers.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j, mid-rank (i + 1 + j) / 2
        let twice_mid = (i + 1 + j) as u64;
        let group_pos = order[i..j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        twice_rank_sum += twice_mid * group_pos;
        i = j;
    }
    let (p, n) = (n_pos as u64, n_neg as u64);
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * n) as f64)
}

/// Average precision: mean over positives of precision at the positive's
/// rank. Items are ranked by descending score; equal scores keep their input
/// order, so among ties an earlier positive ranks ahead of a later one.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_scores(scores, labels)?;
    let (n_pos, _) = class_counts(labels)?;
    if n_pos == 0 {
        return Err(Error::UndefinedMetric(
            "PR AUC needs at least one positive".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &k) in order.iter().enumerate() {
        if labels[k] == 1 {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / n_pos as f64)
}

/// Per-item tag scores and binary labels, both `items x tags`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TagTable {
    tag_names: Vec<String>,
    n_items: usize,
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl TagTable {
    pub fn new(
        tag_names: Vec<String>,
        scores: Vec<Vec<f64>>,
        labels: Vec<Vec<u8>>,
    ) -> Result<Self> {
        let n_tags = tag_names.len();
        if scores.len() != labels.len() {
            return Err(Error::Schema(format!(
                "{} score rows but {} label rows",
                scores.len(),
                labels.len()
            )));
        }
        let n_items = scores.len();
        let mut flat_scores = Vec::with_capacity(n_items * n_tags);
        let mut flat_labels = Vec::with_capacity(n_items * n_tags);
        for (i, (s, l)) in scores.into_iter().zip(labels).enumerate() {
            if s.len() != n_tags || l.len() != n_tags {
                return Err(Error::Schema(format!(
                    "item {i} has {} scores and {} labels for {n_tags} tags",
                    s.len(),
                    l.len()
                )));
            }
            if let Some(v) = s.iter().find(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("item {i} has non-finite score {v}")));
            }
            if let Some(v) = l.iter().find(|&&v| v > 1) {
                return Err(Error::Schema(format!("item {i} has non-binary label {v}")));
            }
            flat_scores.extend(s);
            flat_labels.extend(l);
        }
        Ok(Self {
            tag_names,
            n_items,
            scores: flat_scores,
            labels: flat_labels,
        })
    }

    pub fn tag_names(&self) -> &[String] {
        &self.tag_names
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_tags(&self) -> usize {
        self.tag_names.len()
    }

    pub fn tag_scores(&self, tag: usize) -> Vec<f64> {
        let n = self.n_tags();
        (0..self.n_items)
            .map(|i| self.scores[i * n + tag])
            .collect()
    }

    pub fn tag_labels(&self, tag: usize) -> Vec<u8> {
        let n = self.n_tags();
        (0..self.n_items)
            .map(|i| self.labels[i * n + tag])
            .collect()
    }

    /// Build from two CSV files: a header row of tag names, then one row per
    /// item. Headers must match exactly and in order.
    pub fn from_csv<P: Read, L: Read>(predictions: P, labels: L) -> Result<Self> {
        let (pred_tags, pred_rows) = read_matrix_csv(predictions, "predictions")?;
        let (label_tags, label_rows) = read_matrix_csv(labels, "labels")?;
        if let Some((p, l)) = pred_tags.iter().zip(&label_tags).find(|(p, l)| p != l) {
            return Err(Error::Schema(format!(
                "tag header mismatch: predictions have {p:?} where labels have {l:?}"
            )));
        }
        if pred_tags.len() != label_tags.len() {
            let first_extra = pred_tags
                .get(label_tags.len())
                .or_else(|| label_tags.get(pred_tags.len()))
                .expect("lengths differ");
            return Err(Error::Schema(format!(
                "tag header mismatch: {first_extra:?} is present in only one file"
            )));
        }
        let labels = label_rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.into_iter()
                    .map(|v| match v {
                        0.0 => Ok(0u8),
                        1.0 => Ok(1u8),
                        x => Err(Error::Schema(format!(
                            "label row {} has non-binary value {x}",
                            i + 1
                        ))),
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pred_tags, pred_rows, labels)
    }
}

fn read_matrix_csv<R: Read>(input: R, what: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                    row: i + 1,
                    message: format!("{what}: {cell:?} is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Tags that were scored, aligned with the per-tag vectors.
    pub tags: Vec<String>,
    pub per_tag_roc: Vec<f64>,
    pub per_tag_pr: Vec<f64>,
    pub macro_roc: f64,
    pub macro_pr: f64,
    /// Tags lacking either positives or negatives.
    pub skipped_tags: Vec<String>,
}

/// Per-tag ROC/PR AUC and their unweighted means over evaluable tags.
pub fn macro_summary(table: &TagTable) -> Result<MetricSummary> {
    let per_tag: Vec<Option<(f64, f64)>> = (0..table.n_tags())
        .into_par_iter()
        .map(|t| {
            let (s, l) = (table.tag_scores(t), table.tag_labels(t));
            match (roc_auc(&s, &l), pr_auc(&s, &l)) {
                (Ok(r), Ok(p)) => Some((r, p)),
                _ => None,
            }
        })
        .collect();

    let mut summary = MetricSummary {
        tags: Vec::new(),
        per_tag_roc: Vec::new(),
        per_tag_pr: Vec::new(),
        macro_roc: 0.0,
        macro_pr: 0.0,
        skipped_tags: Vec::new(),
    };
    for (name, result) in table.tag_names().iter().zip(per_tag) {
        match result {
            Some((r, p)) => {
                summary.tags.push(name.clone());
                summary.per_tag_roc.push(r);
                summary.per_tag_pr.push(p);
            }
            None => summary.skipped_tags.push(name.clone()),
        }
    }
    if summary.tags.is_empty() {
        return Err(Error::EmptySummary);
    }
    let n = summary.tags.len() as f64;
    summary.macro_roc = summary.per_tag_roc.iter().sum::<f64>() / n;
    summary.macro_pr = summary.per_tag_pr.iter().sum::<f64>() / n;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided Welch (unequal variance) independent-samples t-test.
pub fn t_test_independent(sample_a: &[f64], sample_b: &[f64]) -> Result<TTestResult> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::invalid("each sample needs at least two values"));
    }
    if sample_a.iter().chain(sample_b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let (ma, va) = mean_var(sample_a);
    let (mb, vb) = mean_var(sample_b);
    let (sa, sb) = (va / sample_a.len() as f64, vb / sample_b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        if ma == mb {
            return Ok(TTestResult {
                t: 0.0,
                p: 1.0,
                df: (sample_a.len() + sample_b.len() - 2) as f64,
            });
        }
        return Err(Error::DegenerateVariance);
    }
    let t = (ma - mb) / se2.sqrt();
    let df =
        se2 * se2 / (sa * sa / (sample_a.len() - 1) as f64 + sb * sb / (sample_b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTestResult { t, p, df })
}
