use super::{EstimateResult, Method};
use crate::block::{accumulate_block_sums, projected_quadratic, squared_residue, BlockStructure, DataVector};
use crate::enumerate::check_caps;
use crate::specfun::SeededRng;
use crate::{Error, Result};

/// Safety cap on alternating passes.
pub const MAX_PASSES: usize = 1000;
const KMEANS_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingRun {
    pub result: EstimateResult,
    /// `x^T E^(g) x` at the start and after every row or column half-step.
    pub objective_trace: Vec<f64>,
    /// A pass left the labels unchanged before the pass cap was hit.
    pub converged: bool,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(point, center);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

fn cluster_sizes(labels: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    sizes
}

fn update_centers(points: &[Vec<f64>], labels: &[usize], centers: &mut [Vec<f64>]) {
    let sizes = cluster_sizes(labels, centers.len());
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centers.len()];
    for (pt, &l) in points.iter().zip(labels) {
        sums[l].iter_mut().zip(pt).for_each(|(s, v)| *s += v);
    }
    for (c, center) in centers.iter_mut().enumerate() {
        if sizes[c] > 0 {
            *center = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
        }
    }
}

/// Gives each empty cluster the point farthest from its own centroid.
fn fill_empty(points: &[Vec<f64>], labels: &mut [usize], centers: &mut [Vec<f64>]) {
    let mut sizes = cluster_sizes(labels, centers.len());
    for c in 0..centers.len() {
        if sizes[c] > 0 {
            continue;
        }
        let donor = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .map(|i| (squared_distance(&points[i], &centers[labels[i]]), i))
            .fold(None, |best: Option<(f64, usize)>, cand| match best {
                Some(b) if b.0 >= cand.0 => Some(b),
                _ => Some(cand),
            });
        if let Some((_, i)) = donor {
            sizes[labels[i]] -= 1;
            labels[i] = c;
            sizes[c] = 1;
            centers[c] = points[i].clone();
        }
    }
}

/// Lloyd's k-means with farthest-point seeding; returns 1-based labels.
pub(crate) fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut SeededRng) -> Vec<usize> {
    let m = points.len();
    let mut centers = vec![points[rng.below(m)].clone()];
    while centers.len() < k {
        let far = (0..m)
            .map(|i| (centers.iter().map(|c| squared_distance(&points[i], c)).fold(f64::INFINITY, f64::min), i))
            .fold((f64::NEG_INFINITY, 0), |best, cand| if cand.0 > best.0 { cand } else { best });
        centers.push(points[far.1].clone());
    }
    let mut labels: Vec<usize> = points.iter().map(|pt| nearest(pt, &centers)).collect();
    for _ in 0..KMEANS_ITERATIONS {
        update_centers(points, &labels, &mut centers);
        fill_empty(points, &mut labels, &mut centers);
        let next: Vec<usize> = points.iter().map(|pt| nearest(pt, &centers)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    update_centers(points, &labels, &mut centers);
    fill_empty(points, &mut labels, &mut centers);
    labels.into_iter().map(|l| l + 1).collect()
}

/// Block means of `a` (column-major), `None` for empty blocks.
fn block_means(a: &[f64], rows: &[usize], cols: &[usize], k: usize, h: usize) -> Vec<Option<f64>> {
    let mut sums = vec![0.0; k * h];
    accumulate_block_sums(a, rows, cols, h, &mut sums);
    let mut rs = vec![0usize; k];
    let mut cs = vec![0usize; h];
    rows.iter().for_each(|&l| rs[l - 1] += 1);
    cols.iter().for_each(|&l| cs[l - 1] += 1);
    (0..k * h)
        .map(|b| {
            let count = rs[b / h] * cs[b % h];
            (count > 0).then(|| sums[b] / count as f64)
        })
        .collect()
}

fn objective(x: &[f64], rows: &[usize], cols: &[usize], k: usize, h: usize) -> Result<f64> {
    let g = BlockStructure::new(rows, cols, k, h)?;
    projected_quadratic(x, x, &g)
}

/// Alternating block-mean / label updates from given initial labels.
///
/// Rows are reassigned with the block means fixed, then the means are
/// refreshed and columns are reassigned. Only clusters that are nonempty
/// when the means are computed are candidates; ties go to the lowest index.
pub fn tan_witten_from(
    x: &DataVector,
    k: usize,
    h: usize,
    initial_rows: &[usize],
    initial_cols: &[usize],
) -> Result<AlternatingRun> {
    let (n, p) = (x.n(), x.p());
    check_caps(n, p, k, h)?;
    if initial_rows.len() != n || initial_cols.len() != p {
        return Err(Error::ShapeMismatch { expected: n + p, got: initial_rows.len() + initial_cols.len() });
    }
    if initial_rows.iter().any(|&l| l == 0 || l > k) || initial_cols.iter().any(|&l| l == 0 || l > h) {
        return Err(Error::Domain("initial labels must lie in 1..=K and 1..=H".into()));
    }
    let xs = x.as_slice();
    let grand = xs.iter().sum::<f64>() / xs.len() as f64;
    let a: Vec<f64> = xs.iter().map(|v| v - grand).collect();
    let mut rows = initial_rows.to_vec();
    let mut cols = initial_cols.to_vec();
    let mut trace = vec![objective(xs, &rows, &cols, k, h)?];
    let mut passes = 0;
    let mut converged = false;
    while passes < MAX_PASSES {
        passes += 1;
        let (rows0, cols0) = (rows.clone(), cols.clone());

        let means = block_means(&a, &rows, &cols, k, h);
        for (i, label) in rows.iter_mut().enumerate() {
            let mut best = (f64::INFINITY, *label);
            for c in 0..k {
                if means[c * h..(c + 1) * h].iter().all(Option::is_none) {
                    continue;
                }
                let mut loss = 0.0;
                for (j, &col) in cols.iter().enumerate() {
                    let b = means[c * h + col - 1].expect("column cluster occupied");
                    loss += (a[n * j + i] - b).powi(2);
                }
                if loss < best.0 {
                    best = (loss, c + 1);
                }
            }
            *label = best.1;
        }
        trace.push(objective(xs, &rows, &cols, k, h)?);

        let means = block_means(&a, &rows, &cols, k, h);
        for (j, label) in cols.iter_mut().enumerate() {
            let mut best = (f64::INFINITY, *label);
            for c in 0..h {
                if (0..k).all(|r| means[r * h + c].is_none()) {
                    continue;
                }
                let mut loss = 0.0;
                for (i, &row) in rows.iter().enumerate() {
                    let b = means[(row - 1) * h + c].expect("row cluster occupied");
                    loss += (a[n * j + i] - b).powi(2);
                }
                if loss < best.0 {
                    best = (loss, c + 1);
                }
            }
            *label = best.1;
        }
        trace.push(objective(xs, &rows, &cols, k, h)?);

        if rows == rows0 && cols == cols0 {
            converged = true;
            break;
        }
    }
    let g_hat = BlockStructure::new(&rows, &cols, k, h)?;
    let residue = squared_residue(x, &g_hat)?;
    Ok(AlternatingRun {
        result: EstimateResult { g_hat, residue, steps: passes as u64, method: Method::TanWitten },
        objective_trace: trace,
        converged,
    })
}

/// Alternating biclustering initialized by one-way k-means on the rows and
/// on the columns of the mean-centered matrix.
pub fn tan_witten_minimizer(x: &DataVector, k: usize, h: usize, rng: &mut SeededRng) -> Result<AlternatingRun> {
    let (n, p) = (x.n(), x.p());
    check_caps(n, p, k, h)?;
    let xs = x.as_slice();
    let grand = xs.iter().sum::<f64>() / xs.len() as f64;
    let row_points: Vec<Vec<f64>> = (0..n).map(|i| (0..p).map(|j| xs[n * j + i] - grand).collect()).collect();
    let col_points: Vec<Vec<f64>> = (0..p).map(|j| xs[n * j..n * (j + 1)].iter().map(|v| v - grand).collect()).collect();
    let rows = kmeans(&row_points, k, rng);
    let cols = kmeans(&col_points, h, rng);
    tan_witten_from(x, k, h, &rows, &cols)
}
