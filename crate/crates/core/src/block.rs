//! Data layout, block structures and the implicit block projector.
//!
//! Matrices are vectorized column-major, `x[n * j + i] = A[i][j]`. For a block
//! structure `g`, the projector `E^(g) = I - sum_kh e^(k,h) e^(k,h)^T` removes
//! block-wise means. It is never built in production paths: every quadratic
//! form goes through block sums, which costs `O(np)` per evaluation.

use std::hash::{Hash, Hasher};
use std::io::{Read, Write};

use crate::{Error, Result};

/// Dense `n x p` matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from row-major values.
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidShape { n, p });
        }
        if values.len() != n * p {
            return Err(Error::ShapeMismatch { expected: n * p, got: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / p, col: pos % p });
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::ShapeMismatch { expected: p, got: row.len() });
            }
            values.extend_from_slice(row);
        }
        Self::new(n, p, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.p)
    }

    /// Reads a header-less CSV of numbers, one matrix row per line.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: '{}' is not a number", line + 1, field))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Empty("matrix CSV has no rows"));
        }
        Self::from_rows(&rows)
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(writer, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Column-major vectorization `x = vec(A)` with its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DataVector {
    n: usize,
    p: usize,
    x: Vec<f64>,
}

impl DataVector {
    pub fn new(n: usize, p: usize, x: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidShape { n, p });
        }
        if x.len() != n * p {
            return Err(Error::ShapeMismatch { expected: n * p, got: x.len() });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos % n, col: pos / n });
        }
        Ok(Self { n, p, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.x
    }

    /// Entry `A[i][j]` (0-based).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.x[self.n * j + i]
    }

    /// Same shape, new values.
    pub fn with_values(&self, x: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.p, x)
    }
}

pub fn vectorize(a: &DataMatrix) -> DataVector {
    let (n, p) = (a.n, a.p);
    let mut x = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..p {
            x[n * j + i] = a.values[i * p + j];
        }
    }
    DataVector { n, p, x }
}

pub fn devectorize(x: &DataVector) -> DataMatrix {
    let (n, p) = (x.n, x.p);
    let mut values = vec![0.0; n * p];
    for j in 0..p {
        for i in 0..n {
            values[i * p + j] = x.x[n * j + i];
        }
    }
    DataMatrix { n, p, values }
}

/// Relabels so that the first occurrence of label `k` precedes that of `k + 1`,
/// starting at 1. Returns the canonical labels and the number of clusters.
pub fn canonicalize(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let id = match map.iter().find(|(raw, _)| *raw == l) {
            Some(&(_, id)) => id,
            None => {
                map.push((l, map.len() + 1));
                map.len()
            }
        };
        out.push(id);
    }
    (out, map.len())
}

/// Row and column cluster memberships in restricted-growth normal form.
///
/// Equality and hashing look at the labels only, so two structures that agree
/// up to a permutation of cluster ids compare equal.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    rows: Vec<usize>,
    cols: Vec<usize>,
    k_cap: usize,
    h_cap: usize,
    row_clusters: usize,
    col_clusters: usize,
}

impl PartialEq for BlockStructure {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

impl Eq for BlockStructure {}

impl Hash for BlockStructure {
    fn hash<S: Hasher>(&self, state: &mut S) {
        self.rows.hash(state);
        self.cols.hash(state);
    }
}

impl BlockStructure {
    /// Canonicalizes arbitrary labels and checks them against the caps.
    pub fn new(rows: &[usize], cols: &[usize], k_cap: usize, h_cap: usize) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::InvalidShape { n: rows.len(), p: cols.len() });
        }
        if k_cap == 0 || h_cap == 0 {
            return Err(Error::InvalidCaps { n: rows.len(), p: cols.len(), k: k_cap, h: h_cap });
        }
        let (rows, row_clusters) = canonicalize(rows);
        let (cols, col_clusters) = canonicalize(cols);
        if row_clusters > k_cap {
            return Err(Error::TooManyClusters { used: row_clusters, cap: k_cap });
        }
        if col_clusters > h_cap {
            return Err(Error::TooManyClusters { used: col_clusters, cap: h_cap });
        }
        Ok(Self { rows, cols, k_cap, h_cap, row_clusters, col_clusters })
    }

    pub fn single_block(n: usize, p: usize, k_cap: usize, h_cap: usize) -> Result<Self> {
        Self::new(&vec![1; n], &vec![1; p], k_cap, h_cap)
    }

    /// Labels must already be canonical with the given cluster counts.
    pub(crate) fn from_canonical(
        rows: Vec<usize>,
        cols: Vec<usize>,
        k_cap: usize,
        h_cap: usize,
        row_clusters: usize,
        col_clusters: usize,
    ) -> Self {
        debug_assert_eq!(canonicalize(&rows), (rows.clone(), row_clusters));
        debug_assert_eq!(canonicalize(&cols), (cols.clone(), col_clusters));
        Self { rows, cols, k_cap, h_cap, row_clusters, col_clusters }
    }

    pub fn row_labels(&self) -> &[usize] {
        &self.rows
    }

    pub fn col_labels(&self) -> &[usize] {
        &self.cols
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.cols.len()
    }

    pub fn k_cap(&self) -> usize {
        self.k_cap
    }

    pub fn h_cap(&self) -> usize {
        self.h_cap
    }

    pub fn row_clusters(&self) -> usize {
        self.row_clusters
    }

    pub fn col_clusters(&self) -> usize {
        self.col_clusters
    }

    /// Number of nonempty blocks, `#row clusters x #col clusters`.
    pub fn occupied_blocks(&self) -> usize {
        self.row_clusters * self.col_clusters
    }

    pub fn row_sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.rows, self.row_clusters)
    }

    pub fn col_sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.cols, self.col_clusters)
    }

    /// Every block of `self` lies inside some block of `other`.
    pub fn is_refinement_of(&self, other: &BlockStructure) -> bool {
        fn refines(fine: &[usize], coarse: &[usize]) -> bool {
            let mut parent = vec![0usize; fine.len() + 1];
            fine.iter().zip(coarse).all(|(&f, &c)| {
                if parent[f] == 0 {
                    parent[f] = c;
                }
                parent[f] == c
            })
        }
        self.n() == other.n()
            && self.p() == other.p()
            && refines(&self.rows, &other.rows)
            && refines(&self.cols, &other.cols)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        let expected = self.n() * self.p();
        if len != expected {
            return Err(Error::ShapeMismatch { expected, got: len });
        }
        Ok(())
    }
}

fn cluster_sizes(labels: &[usize], clusters: usize) -> Vec<usize> {
    let mut sizes = vec![0; clusters];
    for &l in labels {
        sizes[l - 1] += 1;
    }
    sizes
}

/// Adds the entries of column-major `v` into `sums[k * col_clusters + h]`.
/// Labels here are 1-based and need not be canonical.
pub(crate) fn accumulate_block_sums(
    v: &[f64],
    rows: &[usize],
    cols: &[usize],
    col_clusters: usize,
    sums: &mut [f64],
) {
    let n = rows.len();
    for (j, &h) in cols.iter().enumerate() {
        let column = &v[n * j..n * (j + 1)];
        for (&k, &value) in rows.iter().zip(column) {
            sums[(k - 1) * col_clusters + (h - 1)] += value;
        }
    }
}

/// Per-block sums and counts for the occupied blocks of a structure.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSums {
    row_clusters: usize,
    col_clusters: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
}

impl BlockSums {
    /// Sum over block `(k, h)`, 1-based.
    pub fn sum(&self, k: usize, h: usize) -> f64 {
        self.sums[(k - 1) * self.col_clusters + (h - 1)]
    }

    pub fn count(&self, k: usize, h: usize) -> usize {
        self.counts[(k - 1) * self.col_clusters + (h - 1)]
    }

    pub fn row_clusters(&self) -> usize {
        self.row_clusters
    }

    pub fn col_clusters(&self) -> usize {
        self.col_clusters
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

fn raw_block_sums(v: &[f64], g: &BlockStructure) -> Result<BlockSums> {
    g.check_len(v.len())?;
    let mut sums = vec![0.0; g.occupied_blocks()];
    accumulate_block_sums(v, &g.rows, &g.cols, g.col_clusters, &mut sums);
    let rs = g.row_sizes();
    let cs = g.col_sizes();
    let counts = rs.iter().flat_map(|&r| cs.iter().map(move |&c| r * c)).collect();
    Ok(BlockSums { row_clusters: g.row_clusters, col_clusters: g.col_clusters, sums, counts })
}

pub fn block_sums(x: &DataVector, g: &BlockStructure) -> Result<BlockSums> {
    if x.n != g.n() || x.p != g.p() {
        return Err(Error::ShapeMismatch { expected: g.n() * g.p(), got: x.len() });
    }
    raw_block_sums(&x.x, g)
}

/// `v^T E^(g) w`, computed as `v^T w - sum_kh S_v(k,h) S_w(k,h) / |I_k||J_h|`.
pub fn projected_quadratic(v: &[f64], w: &[f64], g: &BlockStructure) -> Result<f64> {
    g.check_len(w.len())?;
    let sv = raw_block_sums(v, g)?;
    let sw = raw_block_sums(w, g)?;
    let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    let between: f64 = sv
        .sums
        .iter()
        .zip(&sw.sums)
        .zip(&sv.counts)
        .map(|((a, b), &c)| a * b / c as f64)
        .sum();
    Ok(dot - between)
}

/// `E^(g) v`: each entry minus the mean of its block.
pub fn apply_projection(v: &[f64], g: &BlockStructure) -> Result<Vec<f64>> {
    let sums = raw_block_sums(v, g)?;
    let n = g.n();
    let nc = g.col_clusters;
    let mut out = v.to_vec();
    for (j, &h) in g.cols.iter().enumerate() {
        for (i, &k) in g.rows.iter().enumerate() {
            let b = (k - 1) * nc + (h - 1);
            out[n * j + i] -= sums.sums[b] / sums.counts[b] as f64;
        }
    }
    Ok(out)
}

/// Average within-block sample variance, `x^T E^(g) x / np`.
///
/// Evaluated directly: block means first, then squared deviations summed in
/// column-major order.
pub fn squared_residue(x: &DataVector, g: &BlockStructure) -> Result<f64> {
    let centered = apply_projection(&x.x, g)?;
    let total: f64 = centered.iter().map(|d| d * d).sum();
    Ok(total / x.len() as f64)
}

/// Maximum-likelihood block means.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMeans {
    row_clusters: usize,
    col_clusters: usize,
    means: Vec<f64>,
}

impl BlockMeans {
    pub fn get(&self, k: usize, h: usize) -> f64 {
        self.means[(k - 1) * self.col_clusters + (h - 1)]
    }

    pub fn row_clusters(&self) -> usize {
        self.row_clusters
    }

    pub fn col_clusters(&self) -> usize {
        self.col_clusters
    }

    /// Row-major `row_clusters x col_clusters`.
    pub fn as_slice(&self) -> &[f64] {
        &self.means
    }
}

pub fn block_mean_mle(x: &DataVector, g: &BlockStructure) -> Result<BlockMeans> {
    let s = block_sums(x, g)?;
    let means = s.sums.iter().zip(&s.counts).map(|(&v, &c)| v / c as f64).collect();
    Ok(BlockMeans { row_clusters: s.row_clusters, col_clusters: s.col_clusters, means })
}

/// Largest `np` for which [`materialize_projection`] will build a dense matrix.
pub const MATERIALIZE_LIMIT: usize = 400;

/// Dense `E^(g)` (row-major, `np x np`). Intended for checks on small shapes.
pub fn materialize_projection(g: &BlockStructure) -> Result<Vec<f64>> {
    let (n, p) = (g.n(), g.p());
    let dim = n * p;
    if dim > MATERIALIZE_LIMIT {
        return Err(Error::TooLarge { dim, limit: MATERIALIZE_LIMIT });
    }
    let rs = g.row_sizes();
    let cs = g.col_sizes();
    let mut e = vec![0.0; dim * dim];
    for a in 0..dim {
        let (ia, ja) = (a % n, a / n);
        for b in 0..dim {
            let (ib, jb) = (b % n, b / n);
            let same = g.rows[ia] == g.rows[ib] && g.cols[ja] == g.cols[jb];
            let mut v = if a == b { 1.0 } else { 0.0 };
            if same {
                v -= 1.0 / (rs[g.rows[ia] - 1] * cs[g.cols[ja] - 1]) as f64;
            }
            e[a * dim + b] = v;
        }
    }
    Ok(e)
}

/// Block-constant matrix with value `(k - 1) H + h` on block `(k, h)`.
pub fn block_constant_witness(g: &BlockStructure) -> DataVector {
    let (n, p) = (g.n(), g.p());
    let h_count = g.col_clusters;
    let mut x = vec![0.0; n * p];
    for (j, &h) in g.cols.iter().enumerate() {
        for (i, &k) in g.rows.iter().enumerate() {
            x[n * j + i] = ((k - 1) * h_count + h) as f64;
        }
    }
    DataVector { n, p, x }
}

/// A data vector on which the quadratic forms of `g` and `other` differ,
/// whenever the two structures differ.
///
/// Uses the block-constant witness of `g`, or of `other` when `g` coarsens it.
pub fn distinguishing_witness(g: &BlockStructure, other: &BlockStructure) -> DataVector {
    if other.is_refinement_of(g) {
        block_constant_witness(other)
    } else {
        block_constant_witness(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    fn random_vector(n: usize, p: usize, seed: u64) -> DataVector {
        let mut s = seed;
        DataVector::new(n, p, (0..n * p).map(|_| lcg(&mut s)).collect()).unwrap()
    }

    #[test]
    fn vectorize_is_column_major() {
        let a = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(vectorize(&a).as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        let one = DataMatrix::new(1, 1, vec![7.0]).unwrap();
        assert_eq!(vectorize(&one).as_slice(), &[7.0]);
    }

    #[test]
    fn devectorize_round_trip() {
        let x = random_vector(3, 4, 11);
        assert_eq!(vectorize(&devectorize(&x)), x);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DataMatrix::new(0, 2, vec![]).is_err());
        assert!(DataMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            DataMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(BlockStructure::new(&[1, 2, 3], &[1], 2, 1).is_err());
        let g = BlockStructure::single_block(2, 2, 1, 1).unwrap();
        let x = random_vector(3, 2, 1);
        assert!(block_sums(&x, &g).is_err());
    }

    #[test]
    fn canonical_form() {
        let g = BlockStructure::new(&[3, 3, 1, 7], &[2, 1], 3, 2).unwrap();
        assert_eq!(g.row_labels(), &[1, 1, 2, 3]);
        assert_eq!(g.col_labels(), &[1, 2]);
        assert_eq!(g.occupied_blocks(), 6);
        let same = BlockStructure::new(&[5, 5, 9, 2], &[4, 8], 3, 2).unwrap();
        assert_eq!(g, same);
    }

    #[test]
    fn block_sums_examples() {
        let ones = DataVector::new(2, 2, vec![1.0; 4]).unwrap();
        let g = BlockStructure::single_block(2, 2, 1, 1).unwrap();
        let s = block_sums(&ones, &g).unwrap();
        assert_eq!((s.sum(1, 1), s.count(1, 1)), (4.0, 4));

        let x = DataVector::new(2, 2, vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        let g = BlockStructure::new(&[1, 2], &[1, 1], 2, 1).unwrap();
        let s = block_sums(&x, &g).unwrap();
        assert_eq!((s.sum(1, 1), s.sum(2, 1)), (3.0, 7.0));
    }

    #[test]
    fn block_sums_match_double_loop() {
        let x = random_vector(5, 5, 3);
        let g = BlockStructure::new(&[1, 2, 2, 1, 2], &[1, 1, 2, 2, 1], 2, 2).unwrap();
        let s = block_sums(&x, &g).unwrap();
        for k in 1..=2 {
            for h in 1..=2 {
                let mut total = 0.0;
                let mut count = 0;
                for i in 0..5 {
                    for j in 0..5 {
                        if g.row_labels()[i] == k && g.col_labels()[j] == h {
                            total += x.at(i, j);
                            count += 1;
                        }
                    }
                }
                assert!((s.sum(k, h) - total).abs() < 1e-12);
                assert_eq!(s.count(k, h), count);
            }
        }
        assert_eq!(s.counts().iter().sum::<usize>(), 25);
    }

    #[test]
    fn quadratic_single_block_and_constants() {
        let x = random_vector(3, 3, 5);
        let g = BlockStructure::single_block(3, 3, 1, 1).unwrap();
        let total: f64 = x.as_slice().iter().sum();
        let norm: f64 = x.as_slice().iter().map(|v| v * v).sum();
        let q = projected_quadratic(x.as_slice(), x.as_slice(), &g).unwrap();
        assert!((q - (norm - total * total / 9.0)).abs() < 1e-12);

        let c = vec![2.5; 9];
        let g = BlockStructure::new(&[1, 2, 1], &[1, 2, 2], 2, 2).unwrap();
        assert!(projected_quadratic(&c, &c, &g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn quadratic_matches_dense_projector() {
        for seed in 0..20u64 {
            let v = random_vector(4, 4, seed);
            let w = random_vector(4, 4, seed + 100);
            let mut s = seed + 7;
            let rows: Vec<usize> = (0..4).map(|_| 1 + ((lcg(&mut s) + 1.0) * 1.5) as usize).collect();
            let cols: Vec<usize> = (0..4).map(|_| 1 + ((lcg(&mut s) + 1.0) * 1.5) as usize).collect();
            let g = BlockStructure::new(&rows, &cols, 3, 3).unwrap();
            let e = materialize_projection(&g).unwrap();
            let dense: f64 = (0..16)
                .map(|a| (0..16).map(|b| v.as_slice()[a] * e[a * 16 + b] * w.as_slice()[b]).sum::<f64>())
                .sum();
            let fast = projected_quadratic(v.as_slice(), w.as_slice(), &g).unwrap();
            assert!((dense - fast).abs() < 1e-10, "seed {seed}: {dense} vs {fast}");
            let swapped = projected_quadratic(w.as_slice(), v.as_slice(), &g).unwrap();
            assert!((fast - swapped).abs() < 1e-14);
        }
    }

    #[test]
    fn residue_examples() {
        let c = DataVector::new(3, 2, vec![1.5; 6]).unwrap();
        let g = BlockStructure::new(&[1, 2, 1], &[1, 2], 2, 2).unwrap();
        assert_eq!(squared_residue(&c, &g).unwrap(), 0.0);

        let a = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let g = BlockStructure::new(&[1, 2], &[1, 1], 2, 1).unwrap();
        assert!(squared_residue(&vectorize(&a), &g).unwrap().abs() < 1e-15);
    }

    #[test]
    fn residue_matches_direct_definition() {
        let x = random_vector(5, 5, 9);
        let g = BlockStructure::new(&[1, 1, 2, 2, 1], &[1, 2, 1, 2, 2], 2, 2).unwrap();
        let mut direct = 0.0;
        for k in 1..=2 {
            for h in 1..=2 {
                let cells: Vec<f64> = (0..5)
                    .flat_map(|i| (0..5).map(move |j| (i, j)))
                    .filter(|&(i, j)| g.row_labels()[i] == k && g.col_labels()[j] == h)
                    .map(|(i, j)| x.at(i, j))
                    .collect();
                let mean = cells.iter().sum::<f64>() / cells.len() as f64;
                direct += cells.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
            }
        }
        direct /= 25.0;
        assert!((squared_residue(&x, &g).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn mle_recovers_planted_means() {
        let g = BlockStructure::new(&[1, 2, 1, 2], &[1, 1, 2], 2, 2).unwrap();
        let planted = [0.0, 1.0, 1.0, 0.0];
        let mut x = vec![0.0; 12];
        for j in 0..3 {
            for i in 0..4 {
                x[4 * j + i] = planted[(g.row_labels()[i] - 1) * 2 + g.col_labels()[j] - 1];
            }
        }
        let x = DataVector::new(4, 3, x).unwrap();
        let m = block_mean_mle(&x, &g).unwrap();
        assert_eq!(m.as_slice(), &planted);

        let y = random_vector(3, 3, 2);
        let single = BlockStructure::single_block(3, 3, 1, 1).unwrap();
        let grand = y.as_slice().iter().sum::<f64>() / 9.0;
        assert!((block_mean_mle(&y, &single).unwrap().get(1, 1) - grand).abs() < 1e-15);
    }

    #[test]
    fn mle_maximizes_likelihood() {
        let x = random_vector(4, 5, 21);
        let g = BlockStructure::new(&[1, 2, 2, 1], &[1, 2, 1, 2, 2], 2, 2).unwrap();
        let m = block_mean_mle(&x, &g).unwrap();
        // log-likelihood up to constants: -sum (x - B)^2
        let loglik = |means: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..5 {
                    let b = means[(g.row_labels()[i] - 1) * 2 + g.col_labels()[j] - 1];
                    s -= (x.at(i, j) - b).powi(2);
                }
            }
            s
        };
        let best = loglik(m.as_slice());
        let mut s = 99;
        for _ in 0..50 {
            let perturbed: Vec<f64> = m.as_slice().iter().map(|v| v + 0.1 * lcg(&mut s)).collect();
            assert!(best >= loglik(&perturbed));
        }
    }

    #[test]
    fn materialize_guard_and_trivial_case() {
        let one = BlockStructure::single_block(1, 1, 1, 1).unwrap();
        assert_eq!(materialize_projection(&one).unwrap(), vec![0.0]);
        let big = BlockStructure::single_block(21, 20, 1, 1).unwrap();
        assert!(matches!(materialize_projection(&big), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn apply_projection_matches_dense() {
        let v = random_vector(3, 3, 4);
        let g = BlockStructure::new(&[1, 2, 2], &[1, 1, 2], 2, 2).unwrap();
        let e = materialize_projection(&g).unwrap();
        let fast = apply_projection(v.as_slice(), &g).unwrap();
        for a in 0..9 {
            let dense: f64 = (0..9).map(|b| e[a * 9 + b] * v.as_slice()[b]).sum();
            assert!((dense - fast[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn refinement_relation() {
        let coarse = BlockStructure::new(&[1, 1, 2, 2], &[1, 1, 1], 2, 2).unwrap();
        let fine = BlockStructure::new(&[1, 2, 3, 3], &[1, 1, 2], 3, 2).unwrap();
        assert!(fine.is_refinement_of(&coarse));
        assert!(!coarse.is_refinement_of(&fine));
        assert!(coarse.is_refinement_of(&coarse));
    }
}
