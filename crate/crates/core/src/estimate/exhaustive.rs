use rayon::prelude::*;

use super::{EstimateResult, Method};
use crate::block::{squared_residue, BlockStructure, DataVector};
use crate::enumerate::{check_caps, count_partitions, count_structures, partitions, scan_with_rows, ScanItem};
use crate::Result;

/// Below this many structures the scan runs on the calling thread.
const PARALLEL_THRESHOLD: u128 = 4096;

#[derive(Debug, Clone)]
struct Best {
    value: f64,
    order: u64,
    rows: Vec<usize>,
    cols: Vec<usize>,
    row_clusters: usize,
    col_clusters: usize,
}

impl Best {
    fn offer(slot: &mut Option<Best>, value: f64, item: &ScanItem<'_>) {
        if slot.as_ref().is_none_or(|b| value < b.value) {
            *slot = Some(Best {
                value,
                order: item.order,
                rows: item.rows.labels().to_vec(),
                cols: item.cols.labels().to_vec(),
                row_clusters: item.rows.parts(),
                col_clusters: item.cols.parts(),
            });
        }
    }

    fn better(a: Option<Best>, b: Option<Best>) -> Option<Best> {
        match (a, b) {
            (Some(a), Some(b)) => {
                if (b.value, b.order) < (a.value, a.order) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (a, b) => a.or(b),
        }
    }
}

fn objective(sq_norm: f64, item: &ScanItem<'_>) -> f64 {
    let between: f64 = item.sums(0).iter().zip(item.counts).map(|(s, c)| s * s / c).sum();
    sq_norm - between
}

fn search(x: &DataVector, k: usize, h: usize, parallel: bool) -> Result<EstimateResult> {
    let (n, p) = (x.n(), x.p());
    check_caps(n, p, k, h)?;
    let total = count_structures(n, p, k, h, false)?;
    let per_row = count_partitions(p, h).expect("count fits") as u64;
    let xs = x.as_slice();
    let sq_norm: f64 = xs.iter().map(|v| v * v).sum();
    let vectors = [xs];
    let shard = |r: usize, rows: &crate::enumerate::RestrictedGrowthString| {
        let mut best = None;
        scan_with_rows(&vectors, n, p, h, rows, r as u64 * per_row, |item| {
            Best::offer(&mut best, objective(sq_norm, item), item)
        });
        best
    };
    let best = if parallel && total >= PARALLEL_THRESHOLD {
        partitions(n, k)
            .enumerate()
            .par_bridge()
            .map(|(r, rows)| shard(r, &rows))
            .reduce(|| None, Best::better)
    } else {
        partitions(n, k).enumerate().fold(None, |acc, (r, rows)| Best::better(acc, shard(r, &rows)))
    }
    .expect("G_KH is never empty");
    let g_hat = BlockStructure::from_canonical(best.rows, best.cols, k, h, best.row_clusters, best.col_clusters);
    let residue = squared_residue(x, &g_hat)?;
    Ok(EstimateResult { g_hat, residue, steps: total as u64, method: Method::Exact })
}

/// Global minimizer of the squared residue over every structure with at most
/// `K x H` blocks. Ties go to the structure that comes first in the
/// enumeration order. Large scans are sharded over row partitions.
pub fn exact_minimizer(x: &DataVector, k: usize, h: usize) -> Result<EstimateResult> {
    search(x, k, h, true)
}

/// [`exact_minimizer`] on the calling thread only.
pub fn exact_minimizer_sequential(x: &DataVector, k: usize, h: usize) -> Result<EstimateResult> {
    search(x, k, h, false)
}
