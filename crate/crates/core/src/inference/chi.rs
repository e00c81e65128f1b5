use rayon::prelude::*;

use crate::block::{accumulate_block_sums, apply_projection, BlockStructure, DataVector};
use crate::enumerate::{check_caps, count_partitions, count_structures, partitions, scan_with_rows, ScanItem};
use crate::estimate::anneal::{accept, other_label};
use crate::estimate::CoolingSchedule;
use crate::specfun::SeededRng;
use crate::{Error, Result};

const PARALLEL_THRESHOLD: u128 = 4096;

/// Split of `x` against a selected structure: `x = sigma0 T u + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `E^(g_hat) x`.
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub r_norm: f64,
    /// `||r|| / sigma0`.
    pub t: f64,
    /// `np` minus the number of occupied blocks of `g_hat`.
    pub dof: usize,
    pub sigma0: f64,
}

pub(crate) fn check_sigma(sigma0: f64) -> Result<()> {
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::Domain(format!("sigma0 must be positive, got {sigma0}")));
    }
    Ok(())
}

pub(crate) fn check_shape(x: &DataVector, g: &BlockStructure) -> Result<()> {
    if x.n() != g.n() || x.p() != g.p() {
        return Err(Error::ShapeMismatch { expected: g.n() * g.p(), got: x.len() });
    }
    Ok(())
}

pub fn decompose(x: &DataVector, g_hat: &BlockStructure, sigma0: f64) -> Result<Decomposition> {
    check_sigma(sigma0)?;
    check_shape(x, g_hat)?;
    let r = apply_projection(x.as_slice(), g_hat)?;
    let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r_norm == 0.0 {
        return Err(Error::DegenerateResidual);
    }
    let u = r.iter().map(|v| v / r_norm).collect();
    let z = x.as_slice().iter().zip(&r).map(|(a, b)| a - b).collect();
    let dof = x.len() - g_hat.occupied_blocks();
    Ok(Decomposition { r, u, z, r_norm, t: r_norm / sigma0, dof, sigma0 })
}

/// Coefficients of `f(t) = a t^2 + b t + c`, where `f(t) >= 0` says that
/// `t sigma0 u + z` does not prefer `g` over `g_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadCoeffs {
    /// `|a| <= 1e-12 sigma0^2` counts as `a = 0`: the constraint then holds
    /// for every `t`.
    pub fn is_constraining(&self, sigma0: f64) -> bool {
        self.a.abs() > 1e-12 * sigma0 * sigma0
    }

    /// Positive root `(-b - sqrt(b^2 - 4ac)) / 2a`, or `None` when `a = 0`.
    pub fn root(&self, sigma0: f64) -> Option<f64> {
        if !self.is_constraining(sigma0) {
            return None;
        }
        let (a, b, c) = (self.a, self.b, self.c);
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        Some(if b < 0.0 { 2.0 * c / (disc - b) } else { (b + disc) / (-2.0 * a) })
    }

    /// From `sum_b S_u^2/cnt`, `sum_b S_u S_z/cnt` and `sum_b S_z^2/cnt`.
    fn from_block_terms(suu: f64, suz: f64, szz: f64, uz: f64, zz: f64, sigma0: f64) -> Self {
        let a = (-sigma0 * sigma0 * suu).min(0.0);
        let b = 2.0 * sigma0 * (uz - suz);
        let c = (zz - szz).max(0.0);
        Self { a, b, c }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a = -sigma0^2 ||(I - E^(g)) u||^2`, `b = 2 sigma0 u^T E^(g) z`,
/// `c = ||E^(g) z||^2`.
pub fn truncation_coeffs(
    u: &[f64],
    z: &[f64],
    g: &BlockStructure,
    g_hat: &BlockStructure,
    sigma0: f64,
) -> Result<QuadCoeffs> {
    check_sigma(sigma0)?;
    let len = g.n() * g.p();
    if g.n() != g_hat.n() || g.p() != g_hat.p() || u.len() != len || z.len() != len {
        return Err(Error::ShapeMismatch { expected: len, got: u.len().min(z.len()) });
    }
    let mut su = vec![0.0; g.occupied_blocks()];
    let mut sz = vec![0.0; g.occupied_blocks()];
    accumulate_block_sums(u, g.row_labels(), g.col_labels(), g.col_clusters(), &mut su);
    accumulate_block_sums(z, g.row_labels(), g.col_labels(), g.col_clusters(), &mut sz);
    let rs = g.row_sizes();
    let cs = g.col_sizes();
    let (mut suu, mut suz, mut szz) = (0.0, 0.0, 0.0);
    for (k, &rk) in rs.iter().enumerate() {
        for (h, &ch) in cs.iter().enumerate() {
            let b = k * cs.len() + h;
            let cnt = (rk * ch) as f64;
            suu += su[b] * su[b] / cnt;
            suz += su[b] * sz[b] / cnt;
            szz += sz[b] * sz[b] / cnt;
        }
    }
    Ok(QuadCoeffs::from_block_terms(suu, suz, szz, dot(u, z), dot(z, z), sigma0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationResult {
    /// Upper end of the selection interval `[0, beta]`, possibly infinite.
    pub beta: f64,
    pub g_tilde: Option<BlockStructure>,
    pub coeffs: Option<QuadCoeffs>,
    /// Structures evaluated (exhaustive) or annealing iterations.
    pub candidates_scanned: u64,
}

#[derive(Debug, Clone)]
struct Boundary {
    beta: f64,
    order: u64,
    coeffs: QuadCoeffs,
    rows: Vec<usize>,
    cols: Vec<usize>,
    row_clusters: usize,
    col_clusters: usize,
}

fn earlier(a: Option<Boundary>, b: Option<Boundary>) -> Option<Boundary> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if (b.beta, b.order) < (a.beta, a.order) { b } else { a }),
        (a, b) => a.or(b),
    }
}

fn scan_item_coeffs(item: &ScanItem<'_>, uz: f64, zz: f64, sigma0: f64) -> QuadCoeffs {
    let (su, sz) = (item.sums(0), item.sums(1));
    let (mut suu, mut suz, mut szz) = (0.0, 0.0, 0.0);
    for ((a, b), c) in su.iter().zip(sz).zip(item.counts) {
        suu += a * a / c;
        suz += a * b / c;
        szz += b * b / c;
    }
    QuadCoeffs::from_block_terms(suu, suz, szz, uz, zz, sigma0)
}

/// `beta = min_{g: a != 0} root(g)` over every `g` in `G_KH`.
pub fn exact_truncation(decomp: &Decomposition, g_hat: &BlockStructure, k: usize, h: usize) -> Result<TruncationResult> {
    let (n, p) = (g_hat.n(), g_hat.p());
    check_caps(n, p, k, h)?;
    if decomp.u.len() != n * p {
        return Err(Error::ShapeMismatch { expected: n * p, got: decomp.u.len() });
    }
    let sigma0 = decomp.sigma0;
    let total = count_structures(n, p, k, h, false)?;
    let per_row = count_partitions(p, h).expect("count fits") as u64;
    let uz = dot(&decomp.u, &decomp.z);
    let zz = dot(&decomp.z, &decomp.z);
    let vectors = [decomp.u.as_slice(), decomp.z.as_slice()];
    let shard = |r: usize, rows: &crate::enumerate::RestrictedGrowthString| {
        let mut best: Option<Boundary> = None;
        scan_with_rows(&vectors, n, p, h, rows, r as u64 * per_row, |item| {
            let coeffs = scan_item_coeffs(item, uz, zz, sigma0);
            if let Some(beta) = coeffs.root(sigma0) {
                if best.as_ref().is_none_or(|b| beta < b.beta) {
                    best = Some(Boundary {
                        beta,
                        order: item.order,
                        coeffs,
                        rows: item.rows.labels().to_vec(),
                        cols: item.cols.labels().to_vec(),
                        row_clusters: item.rows.parts(),
                        col_clusters: item.cols.parts(),
                    });
                }
            }
        });
        best
    };
    let best = if total >= PARALLEL_THRESHOLD {
        partitions(n, k).enumerate().par_bridge().map(|(r, rows)| shard(r, &rows)).reduce(|| None, earlier)
    } else {
        partitions(n, k).enumerate().fold(None, |acc, (r, rows)| earlier(acc, shard(r, &rows)))
    };
    Ok(match best {
        Some(b) => TruncationResult {
            beta: b.beta,
            g_tilde: Some(BlockStructure::from_canonical(b.rows, b.cols, k, h, b.row_clusters, b.col_clusters)),
            coeffs: Some(b.coeffs),
            candidates_scanned: total as u64,
        },
        None => TruncationResult { beta: f64::INFINITY, g_tilde: None, coeffs: None, candidates_scanned: total as u64 },
    })
}

/// Subset size: `s` with probability `2^-s` for `2 <= s <= m`, and `1`
/// otherwise.
fn subset_size(rng: &mut SeededRng, m: usize) -> usize {
    let mut s = 1;
    while rng.next_u64() & 1 == 1 {
        s += 1;
        if s > m {
            return 1;
        }
    }
    s
}

struct RawCoeffs<'a> {
    u: &'a [f64],
    z: &'a [f64],
    uz: f64,
    zz: f64,
    sigma0: f64,
    k: usize,
    h: usize,
    su: Vec<f64>,
    sz: Vec<f64>,
}

impl RawCoeffs<'_> {
    fn eval(&mut self, rows: &[usize], cols: &[usize]) -> QuadCoeffs {
        self.su.iter_mut().for_each(|v| *v = 0.0);
        self.sz.iter_mut().for_each(|v| *v = 0.0);
        accumulate_block_sums(self.u, rows, cols, self.h, &mut self.su);
        accumulate_block_sums(self.z, rows, cols, self.h, &mut self.sz);
        let mut rs = vec![0usize; self.k];
        let mut cs = vec![0usize; self.h];
        rows.iter().for_each(|&l| rs[l - 1] += 1);
        cols.iter().for_each(|&l| cs[l - 1] += 1);
        let (mut suu, mut suz, mut szz) = (0.0, 0.0, 0.0);
        for (k, &rk) in rs.iter().enumerate() {
            for (h, &ch) in cs.iter().enumerate() {
                if rk == 0 || ch == 0 {
                    continue;
                }
                let b = k * self.h + h;
                let cnt = (rk * ch) as f64;
                suu += self.su[b] * self.su[b] / cnt;
                suz += self.su[b] * self.sz[b] / cnt;
                szz += self.sz[b] * self.sz[b] / cnt;
            }
        }
        QuadCoeffs::from_block_terms(suu, suz, szz, self.uz, self.zz, self.sigma0)
    }
}

/// Simulated annealing for `beta` over multi-coordinate relabelings.
///
/// Each step relabels a uniformly chosen set of `s` movable rows/columns,
/// with `P(s) = 2^-s` for `s >= 2` and the remaining mass on `s = 1`.
/// Structures with `a = 0` have objective `+inf`. The state held when the
/// schedule stops is returned, so `beta` never falls below the exact value.
pub fn sa_truncation(
    decomp: &Decomposition,
    g_hat: &BlockStructure,
    k: usize,
    h: usize,
    schedule: &CoolingSchedule,
    rng: &mut SeededRng,
) -> Result<TruncationResult> {
    let (n, p) = (g_hat.n(), g_hat.p());
    check_caps(n, p, k, h)?;
    schedule.validate()?;
    if decomp.u.len() != n * p {
        return Err(Error::ShapeMismatch { expected: n * p, got: decomp.u.len() });
    }
    if k == 1 && h == 1 {
        return Ok(TruncationResult { beta: f64::INFINITY, g_tilde: None, coeffs: None, candidates_scanned: 0 });
    }
    let sigma0 = decomp.sigma0;
    let mut eval = RawCoeffs {
        u: &decomp.u,
        z: &decomp.z,
        uz: dot(&decomp.u, &decomp.z),
        zz: dot(&decomp.z, &decomp.z),
        sigma0,
        k,
        h,
        su: vec![0.0; k * h],
        sz: vec![0.0; k * h],
    };
    let objective = |c: &QuadCoeffs| c.root(sigma0).unwrap_or(f64::INFINITY);

    let mut rows: Vec<usize> = (0..n).map(|_| rng.below(k) + 1).collect();
    let mut cols: Vec<usize> = (0..p).map(|_| rng.below(h) + 1).collect();
    let mut coeffs = eval.eval(&rows, &cols);
    let mut f = objective(&coeffs);

    let movable_rows = if k > 1 { n } else { 0 };
    let movable = movable_rows + if h > 1 { p } else { 0 };
    let mut pool: Vec<usize> = (0..movable).collect();
    let (mut next_rows, mut next_cols) = (rows.clone(), cols.clone());
    let mut t = 0u64;
    while schedule.running(t) {
        let temperature = schedule.temperature(t);
        let s = subset_size(rng, movable);
        next_rows.copy_from_slice(&rows);
        next_cols.copy_from_slice(&cols);
        for q in 0..s {
            let pick = q + rng.below(movable - q);
            pool.swap(q, pick);
            let m = pool[q];
            if m < movable_rows {
                next_rows[m] = other_label(rng, k, rows[m]);
            } else {
                let j = m - movable_rows;
                next_cols[j] = other_label(rng, h, cols[j]);
            }
        }
        let next = eval.eval(&next_rows, &next_cols);
        let f_next = objective(&next);
        if accept(rng, f_next - f, temperature) {
            std::mem::swap(&mut rows, &mut next_rows);
            std::mem::swap(&mut cols, &mut next_cols);
            coeffs = next;
            f = f_next;
        }
        t += 1;
    }
    if f.is_infinite() {
        return Ok(TruncationResult { beta: f64::INFINITY, g_tilde: None, coeffs: None, candidates_scanned: t });
    }
    Ok(TruncationResult {
        beta: f,
        g_tilde: Some(BlockStructure::new(&rows, &cols, k, h)?),
        coeffs: Some(coeffs),
        candidates_scanned: t,
    })
}
