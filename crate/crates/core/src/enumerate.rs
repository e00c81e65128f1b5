//! Canonical enumeration of block structures with at most `K x H` blocks.
//!
//! Row and column memberships are restricted growth strings (RGS). The
//! structure stream is the cartesian product of row RGS (slowest) and column
//! RGS (fastest), each in lexicographic order.

use crate::block::BlockStructure;
use crate::{Error, Result};

/// Set partition of `len` items into at most `max_parts` parts, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedGrowthString {
    labels: Vec<usize>,
    prefix_max: Vec<usize>,
    max_parts: usize,
}

impl RestrictedGrowthString {
    /// The all-ones string, first in lexicographic order.
    pub fn first(len: usize, max_parts: usize) -> Self {
        assert!(len >= 1 && max_parts >= 1);
        Self { labels: vec![1; len], prefix_max: vec![1; len], max_parts }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn max_parts(&self) -> usize {
        self.max_parts
    }

    /// Number of parts actually used.
    pub fn parts(&self) -> usize {
        self.prefix_max[self.labels.len() - 1]
    }

    /// Steps to the lexicographic successor; `false` when exhausted.
    pub fn advance(&mut self) -> bool {
        let len = self.labels.len();
        for t in (1..len).rev() {
            let prev_max = self.prefix_max[t - 1];
            if self.labels[t] < self.max_parts && self.labels[t] <= prev_max {
                self.labels[t] += 1;
                self.prefix_max[t] = prev_max.max(self.labels[t]);
                let m = self.prefix_max[t];
                for u in t + 1..len {
                    self.labels[u] = 1;
                    self.prefix_max[u] = m;
                }
                return true;
            }
        }
        false
    }
}

/// Restartable stream of restricted growth strings.
#[derive(Debug, Clone)]
pub struct RgsIter {
    current: Option<RestrictedGrowthString>,
}

impl Iterator for RgsIter {
    type Item = RestrictedGrowthString;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        if !cur.advance() {
            self.current = None;
        }
        Some(out)
    }
}

/// All set partitions of `len` items into at most `max_parts` parts.
pub fn partitions(len: usize, max_parts: usize) -> RgsIter {
    RgsIter { current: Some(RestrictedGrowthString::first(len, max_parts)) }
}

pub(crate) fn check_caps(n: usize, p: usize, k: usize, h: usize) -> Result<()> {
    if n == 0 || p == 0 || k == 0 || h == 0 || k > n || h > p {
        return Err(Error::InvalidCaps { n, p, k, h });
    }
    Ok(())
}

/// Row partitions of the structure stream, the unit of sharding for
/// parallel exhaustive scans.
pub fn row_partitions(n: usize, p: usize, k: usize, h: usize) -> Result<RgsIter> {
    check_caps(n, p, k, h)?;
    Ok(partitions(n, k))
}

/// Stream over every canonical structure in `G_KH`.
#[derive(Debug, Clone)]
pub struct StructureIter {
    rows: Option<RestrictedGrowthString>,
    cols: RestrictedGrowthString,
    p: usize,
    k: usize,
    h: usize,
}

impl Iterator for StructureIter {
    type Item = BlockStructure;

    fn next(&mut self) -> Option<BlockStructure> {
        let rows = self.rows.as_mut()?;
        let g = BlockStructure::from_canonical(
            rows.labels().to_vec(),
            self.cols.labels().to_vec(),
            self.k,
            self.h,
            rows.parts(),
            self.cols.parts(),
        );
        if !self.cols.advance() {
            self.cols = RestrictedGrowthString::first(self.p, self.h);
            if !rows.advance() {
                self.rows = None;
            }
        }
        Some(g)
    }
}

pub fn iter_structures(n: usize, p: usize, k: usize, h: usize) -> Result<StructureIter> {
    check_caps(n, p, k, h)?;
    Ok(StructureIter {
        rows: Some(RestrictedGrowthString::first(n, k)),
        cols: RestrictedGrowthString::first(p, h),
        p,
        k,
        h,
    })
}

/// Stirling number of the second kind `S(n, k)`, `None` on overflow.
pub fn stirling2(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for m in 1..=n {
        for j in (1..=k.min(m)).rev() {
            row[j] = (j as u128).checked_mul(row[j])?.checked_add(row[j - 1])?;
        }
        row[0] = 0;
    }
    Some(row[k])
}

/// Partitions of `len` items into at most `max_parts` parts.
pub fn count_partitions(len: usize, max_parts: usize) -> Option<u128> {
    (1..=max_parts).try_fold(0u128, |acc, k| acc.checked_add(stirling2(len, k)?))
}

/// Size of `G_KH`, or of the structures using exactly `K` row and `H` column
/// clusters when `exact_blocks` is set.
pub fn count_structures(n: usize, p: usize, k: usize, h: usize, exact_blocks: bool) -> Result<u128> {
    check_caps(n, p, k, h)?;
    let overflow = || Error::Domain(format!("structure count for {n}x{p}, K={k}, H={h} overflows u128"));
    let (rows, cols) = if exact_blocks {
        (stirling2(n, k), stirling2(p, h))
    } else {
        (count_partitions(n, k), count_partitions(p, h))
    };
    let (rows, cols) = (rows.ok_or_else(overflow)?, cols.ok_or_else(overflow)?);
    rows.checked_mul(cols).ok_or_else(overflow)
}

/// `K^(n-K) H^(p-H)`, a lower bound on the exact-block count.
pub fn structure_count_lower_bound(n: usize, p: usize, k: usize, h: usize) -> Result<u128> {
    check_caps(n, p, k, h)?;
    let overflow = || Error::Domain("lower bound overflows u128".into());
    let a = (k as u128).checked_pow((n - k) as u32).ok_or_else(overflow)?;
    let b = (h as u128).checked_pow((p - h) as u32).ok_or_else(overflow)?;
    a.checked_mul(b).ok_or_else(overflow)
}

/// Block sums of several vectors under one structure of a scan.
pub(crate) struct ScanItem<'a> {
    pub order: u64,
    pub rows: &'a RestrictedGrowthString,
    pub cols: &'a RestrictedGrowthString,
    blocks: usize,
    sums: &'a [f64],
    pub counts: &'a [f64],
}

impl ScanItem<'_> {
    /// Block sums of vector `m`, row-major over occupied `(k, h)`.
    pub fn sums(&self, m: usize) -> &[f64] {
        &self.sums[m * self.blocks..(m + 1) * self.blocks]
    }

    #[cfg(test)]
    pub fn structure(&self, k_cap: usize, h_cap: usize) -> BlockStructure {
        BlockStructure::from_canonical(
            self.rows.labels().to_vec(),
            self.cols.labels().to_vec(),
            k_cap,
            h_cap,
            self.rows.parts(),
            self.cols.parts(),
        )
    }
}

/// Visits every column partition paired with a fixed row partition, handing
/// the visitor block sums for each of `vectors` (column-major, length `np`).
///
/// Rows are aggregated once per row partition, so each structure costs
/// `O(m K p)` rather than `O(m n p)`.
pub(crate) fn scan_with_rows<F>(
    vectors: &[&[f64]],
    n: usize,
    p: usize,
    h_cap: usize,
    rows: &RestrictedGrowthString,
    base_order: u64,
    mut visit: F,
) where
    F: FnMut(&ScanItem<'_>),
{
    let m = vectors.len();
    let nr = rows.parts();
    let mut row_sizes = vec![0usize; nr];
    for &k in rows.labels() {
        row_sizes[k - 1] += 1;
    }
    // agg[v][k][j]
    let mut agg = vec![0.0; m * nr * p];
    for (v, vec) in vectors.iter().enumerate() {
        for j in 0..p {
            let column = &vec[n * j..n * (j + 1)];
            for (&k, &value) in rows.labels().iter().zip(column) {
                agg[(v * nr + (k - 1)) * p + j] += value;
            }
        }
    }
    let max_blocks = nr * h_cap;
    let mut sums = vec![0.0; m * max_blocks];
    let mut counts = vec![0.0; max_blocks];
    let mut col_sizes = vec![0usize; h_cap];
    let mut order = base_order;
    for cols in partitions(p, h_cap) {
        let nc = cols.parts();
        let blocks = nr * nc;
        col_sizes[..nc].iter_mut().for_each(|c| *c = 0);
        for &h in cols.labels() {
            col_sizes[h - 1] += 1;
        }
        sums[..m * blocks].iter_mut().for_each(|s| *s = 0.0);
        for v in 0..m {
            for k in 0..nr {
                let src = &agg[(v * nr + k) * p..(v * nr + k + 1) * p];
                let dst = &mut sums[v * blocks + k * nc..v * blocks + (k + 1) * nc];
                for (&h, &value) in cols.labels().iter().zip(src) {
                    dst[h - 1] += value;
                }
            }
        }
        for k in 0..nr {
            for h in 0..nc {
                counts[k * nc + h] = (row_sizes[k] * col_sizes[h]) as f64;
            }
        }
        visit(&ScanItem {
            order,
            rows,
            cols: &cols,
            blocks,
            sums: &sums[..m * blocks],
            counts: &counts[..blocks],
        });
        order += 1;
    }
}

/// Sequential scan over all of `G_KH` in stream order.
pub(crate) fn scan_all<F>(vectors: &[&[f64]], n: usize, p: usize, k_cap: usize, h_cap: usize, mut visit: F)
where
    F: FnMut(&ScanItem<'_>),
{
    let per_row = count_partitions(p, h_cap).expect("column partition count fits u128") as u64;
    for (r, rows) in partitions(n, k_cap).enumerate() {
        scan_with_rows(vectors, n, p, h_cap, &rows, r as u64 * per_row, &mut visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn small_streams() {
        let all: Vec<_> = iter_structures(2, 1, 2, 1).unwrap().collect();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].row_labels(), &[1, 1]);
        assert_eq!(all[1].row_labels(), &[1, 2]);
        assert_eq!(iter_structures(3, 3, 2, 2).unwrap().count(), 16);
    }

    #[test]
    fn five_by_five_stream_is_distinct() {
        let all: Vec<_> = iter_structures(5, 5, 2, 2).unwrap().collect();
        assert_eq!(all.len(), 256);
        let unique: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(unique.len(), 256);
    }

    #[test]
    fn order_is_rows_slowest() {
        let all: Vec<_> = iter_structures(2, 2, 2, 2).unwrap().collect();
        let pairs: Vec<_> = all.iter().map(|g| (g.row_labels().to_vec(), g.col_labels().to_vec())).collect();
        assert_eq!(
            pairs,
            vec![
                (vec![1, 1], vec![1, 1]),
                (vec![1, 1], vec![1, 2]),
                (vec![1, 2], vec![1, 1]),
                (vec![1, 2], vec![1, 2]),
            ]
        );
    }

    #[test]
    fn invalid_caps() {
        assert!(iter_structures(2, 2, 3, 1).is_err());
        assert!(iter_structures(2, 2, 0, 1).is_err());
        assert!(count_structures(3, 3, 1, 4, false).is_err());
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling2(3, 2), Some(3));
        assert_eq!(stirling2(6, 2), Some(31));
        assert_eq!(stirling2(5, 2), Some(15));
        assert_eq!(stirling2(5, 3), Some(25));
        assert_eq!(stirling2(4, 0), Some(0));
        assert_eq!(stirling2(0, 0), Some(1));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_structures(3, 3, 2, 2, true).unwrap(), 9);
        assert!(9 >= structure_count_lower_bound(3, 3, 2, 2).unwrap());
        assert_eq!(count_structures(4, 3, 4, 3, true).unwrap(), 1);
        assert_eq!(count_structures(6, 5, 2, 2, true).unwrap(), 465);
        assert_eq!(structure_count_lower_bound(6, 5, 2, 2).unwrap(), 128);
        assert_eq!(count_structures(5, 5, 2, 2, false).unwrap(), 256);
    }

    #[test]
    fn exact_count_matches_enumeration() {
        let exact = iter_structures(6, 5, 2, 2)
            .unwrap()
            .filter(|g| g.row_clusters() == 2 && g.col_clusters() == 2)
            .count();
        assert_eq!(exact as u128, count_structures(6, 5, 2, 2, true).unwrap());
    }

    #[test]
    fn emitted_structures_are_canonical() {
        for g in iter_structures(4, 3, 3, 2).unwrap() {
            let (rows, kr) = crate::block::canonicalize(g.row_labels());
            let (cols, kc) = crate::block::canonicalize(g.col_labels());
            assert_eq!(rows, g.row_labels());
            assert_eq!(cols, g.col_labels());
            assert_eq!((kr, kc), (g.row_clusters(), g.col_clusters()));
            assert!(kr <= 3 && kc <= 2);
        }
    }

    #[test]
    fn scan_matches_stream_and_block_sums() {
        let n = 4;
        let p = 3;
        let x: Vec<f64> = (0..n * p).map(|v| (v as f64 * 0.37).sin()).collect();
        let dv = crate::DataVector::new(n, p, x.clone()).unwrap();
        let stream: Vec<_> = iter_structures(n, p, 2, 2).unwrap().collect();
        let mut seen = 0;
        scan_all(&[&x], n, p, 2, 2, |item| {
            let g = item.structure(2, 2);
            assert_eq!(g, stream[item.order as usize]);
            let s = crate::block::block_sums(&dv, &g).unwrap();
            for (a, b) in s.sums().iter().zip(item.sums(0)) {
                assert!((a - b).abs() < 1e-14);
            }
            for (a, b) in s.counts().iter().zip(item.counts) {
                assert_eq!(*a as f64, *b);
            }
            seen += 1;
        });
        assert_eq!(seen, stream.len());
    }
}
