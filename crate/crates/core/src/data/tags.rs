//! Tag normalization and TF-IDF + PCA item features.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::linalg::{pca_fit_project_sparse, SparseRows};

/// Lowercases and splits a compound tag on `_`, `-` and `'`; empty
/// fragments are dropped.
pub fn split_tags(raw: &str) -> Vec<String> {
    raw.to_lowercase()
        .split(['_', '-', '\''])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    /// Word tags seen fewer times than this across the corpus are dropped.
    pub min_tag_count: usize,
    pub pca_dim: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self { min_tag_count: 1, pca_dim: 25 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagStats {
    /// Distinct raw tags in the assignments.
    pub raw_tags: usize,
    /// Distinct word tags after splitting.
    pub split_tags: usize,
    /// Distinct word tags that survive the frequency filter.
    pub kept_tags: usize,
    /// Items left with no surviving tag (zero feature vector).
    pub zero_items: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemFeatures {
    /// One row per item, `dim` columns.
    pub rows: Vec<Vec<f64>>,
    pub dim: usize,
    pub stats: TagStats,
    /// PCA had to stop below the requested dimension.
    pub rank_reduced: bool,
}

/// TF-IDF rows with raw counts and `ln(N / df)`, scaled to unit length.
///
/// `assignments` holds `(item, raw tag)` pairs; repeats count toward the
/// term frequency. Items are `0..item_count`. Columns follow the sorted
/// vocabulary of surviving word tags.
pub fn tfidf(item_count: usize, assignments: &[(usize, &str)], min_tag_count: usize) -> Result<(SparseRows, TagStats)> {
    let mut raw: BTreeSet<&str> = BTreeSet::new();
    let mut per_item: Vec<Vec<String>> = vec![Vec::new(); item_count];
    for &(item, tag) in assignments {
        if item >= item_count {
            return Err(Error::OutOfRange { what: "items", index: item, len: item_count });
        }
        raw.insert(tag);
        per_item[item].extend(split_tags(tag));
    }
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for words in &per_item {
        for w in words {
            *totals.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    let split_count = totals.len();
    let vocab: BTreeMap<&str, usize> = totals
        .iter()
        .filter(|(_, &c)| c >= min_tag_count)
        .enumerate()
        .map(|(col, (w, _))| (*w, col))
        .collect();

    let tf: Vec<BTreeMap<usize, f64>> = per_item
        .iter()
        .map(|words| {
            let mut m = BTreeMap::new();
            for w in words {
                if let Some(&col) = vocab.get(w.as_str()) {
                    *m.entry(col).or_insert(0.0) += 1.0;
                }
            }
            m
        })
        .collect();
    let mut df = vec![0usize; vocab.len()];
    for m in &tf {
        for &col in m.keys() {
            df[col] += 1;
        }
    }
    let idf: Vec<f64> = df.iter().map(|&f| (item_count as f64 / f as f64).ln()).collect();
    let mut zero_items = 0;
    let rows: Vec<Vec<(usize, f64)>> = tf
        .into_iter()
        .map(|m| {
            let mut row: Vec<(usize, f64)> =
                m.into_iter().map(|(col, c)| (col, c * idf[col])).filter(|&(_, v)| v != 0.0).collect();
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            } else {
                zero_items += 1;
            }
            row
        })
        .collect();
    let stats = TagStats { raw_tags: raw.len(), split_tags: split_count, kept_tags: vocab.len(), zero_items };
    Ok((SparseRows { dim: vocab.len(), rows }, stats))
}

/// [`tfidf`] followed by projection on the top `pca_dim` principal components.
pub fn build_item_features(
    item_count: usize,
    assignments: &[(usize, &str)],
    params: FeatureParams,
) -> Result<ItemFeatures> {
    if item_count < 2 {
        return Err(Error::invalid(format!("feature pipeline needs at least 2 items, got {item_count}")));
    }
    let (sparse, stats) = tfidf(item_count, assignments, params.min_tag_count)?;
    let k = params.pca_dim.min(item_count).min(sparse.dim);
    if k == 0 {
        // No usable vocabulary: every item is the zero vector.
        return Ok(ItemFeatures { rows: vec![Vec::new(); item_count], dim: 0, stats, rank_reduced: params.pca_dim > 0 });
    }
    let pca = pca_fit_project_sparse(&sparse, k)?;
    let rank_reduced = pca.k() < params.pca_dim;
    let dim = pca.k();
    Ok(ItemFeatures { rows: pca.projected, dim, stats, rank_reduced })
}
