use rayon::prelude::*;

use super::chi::check_shape;
use crate::block::{apply_projection, BlockStructure, DataVector};
use crate::enumerate::scan_all;
use crate::specfun::{f_cdf, f_sf, f_upper_quantile};
use crate::{Error, Result};

const GRID_POINTS: usize = 512;
const TAIL: f64 = 1e-12;
const BISECTION_TOL: f64 = 1e-9;

/// Block whose centered residual forms the denominator of the F ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceBlock {
    /// The block containing the first row and the first column.
    #[default]
    First,
    /// The block with the most cells; ties go to the first in row-major order.
    Largest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FTestPieces {
    /// Reference block `(k, h)`, 1-based.
    pub block: (usize, usize),
    pub d1: usize,
    pub d2: usize,
    /// `d1 / d2`.
    pub c_f: f64,
    /// `||r2||^2 / (c_f ||r1||^2)`.
    pub t_f: f64,
    pub u1: Vec<f64>,
    /// Zero when `r2 = 0`.
    pub u2: Vec<f64>,
    pub z: Vec<f64>,
    pub r_norm: f64,
    pub r1_norm: f64,
    pub r2_norm: f64,
}

impl FTestPieces {
    /// `s` such that `s T_F ~ F(d2, d1)` under the null.
    pub fn law_scale(&self) -> f64 {
        self.c_f * self.c_f
    }

    fn weights(&self, t: f64) -> (f64, f64) {
        if t.is_infinite() {
            return (0.0, 1.0);
        }
        let ct = self.c_f * t;
        ((ct + 1.0).recip().sqrt(), (ct / (ct + 1.0)).sqrt())
    }

    /// `||r|| (u1 / sqrt(c t + 1) + sqrt(c t / (c t + 1)) u2) + z`.
    pub fn point(&self, t: f64) -> Vec<f64> {
        let (alpha, beta) = self.weights(t);
        (0..self.z.len())
            .map(|i| self.r_norm * (alpha * self.u1[i] + beta * self.u2[i]) + self.z[i])
            .collect()
    }
}

fn reference_block(g: &BlockStructure, reference: ReferenceBlock) -> (usize, usize) {
    match reference {
        ReferenceBlock::First => (g.row_labels()[0], g.col_labels()[0]),
        ReferenceBlock::Largest => {
            let rs = g.row_sizes();
            let cs = g.col_sizes();
            let mut best = (0, (1, 1));
            for (k, &r) in rs.iter().enumerate() {
                for (h, &c) in cs.iter().enumerate() {
                    if r * c > best.0 {
                        best = (r * c, (k + 1, h + 1));
                    }
                }
            }
            best.1
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Splits `r = E^(g_hat) x` into the centered residual inside the reference
/// block (`r1`) and the rest (`r2`).
pub fn unknown_variance_statistic(
    x: &DataVector,
    g_hat: &BlockStructure,
    reference: ReferenceBlock,
) -> Result<FTestPieces> {
    check_shape(x, g_hat)?;
    let (n, p) = (x.n(), x.p());
    let block = reference_block(g_hat, reference);
    let size = g_hat.row_sizes()[block.0 - 1] * g_hat.col_sizes()[block.1 - 1];
    let d1 = size - 1;
    let rest = n * p - g_hat.occupied_blocks();
    if d1 < 1 {
        return Err(Error::Domain("reference block needs at least two cells".into()));
    }
    if rest < size {
        return Err(Error::Domain("no residual degrees of freedom outside the reference block".into()));
    }
    let d2 = rest - d1;
    let r = apply_projection(x.as_slice(), g_hat)?;
    let mut r1 = vec![0.0; n * p];
    for (j, &h) in g_hat.col_labels().iter().enumerate() {
        for (i, &k) in g_hat.row_labels().iter().enumerate() {
            if (k, h) == block {
                r1[n * j + i] = r[n * j + i];
            }
        }
    }
    let r2: Vec<f64> = r.iter().zip(&r1).map(|(a, b)| a - b).collect();
    let (r_norm, r1_norm, r2_norm) = (norm(&r), norm(&r1), norm(&r2));
    if r1_norm == 0.0 {
        return Err(Error::DegenerateResidual);
    }
    let c_f = d1 as f64 / d2 as f64;
    let t_f = r2_norm * r2_norm / (c_f * r1_norm * r1_norm);
    let u1 = r1.iter().map(|v| v / r1_norm).collect();
    let u2 = if r2_norm > 0.0 { r2.iter().map(|v| v / r2_norm).collect() } else { vec![0.0; n * p] };
    let z = x.as_slice().iter().zip(&r).map(|(a, b)| a - b).collect();
    Ok(FTestPieces { block, d1, d2, c_f, t_f, u1, u2, z, r_norm, r1_norm, r2_norm })
}

/// Closed interval `[lo, hi]`; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

/// `min_g [x(t)^T E^(g) x(t) - x(t)^T E^(g_hat) x(t)]` as a function of `t`,
/// tabulated once per competing structure.
struct Competitors {
    /// `[P11, P12, P22, C1, C2, Czz]` per structure.
    rows: Vec<[f64; 6]>,
    r_norm: f64,
    tol: f64,
}

impl Competitors {
    fn build(pieces: &FTestPieces, g_hat: &BlockStructure, k: usize, h: usize) -> Self {
        let (n, p) = (g_hat.n(), g_hat.p());
        let zz: f64 = pieces.z.iter().map(|v| v * v).sum();
        let vectors = [pieces.u1.as_slice(), pieces.u2.as_slice(), pieces.z.as_slice()];
        let mut rows = Vec::new();
        scan_all(&vectors, n, p, k, h, |item| {
            if item.rows.labels() == g_hat.row_labels() && item.cols.labels() == g_hat.col_labels() {
                return;
            }
            let (s1, s2, sz) = (item.sums(0), item.sums(1), item.sums(2));
            let mut t = [0.0; 6];
            for b in 0..item.counts.len() {
                let c = item.counts[b];
                t[0] += s1[b] * s1[b] / c;
                t[1] += s1[b] * s2[b] / c;
                t[2] += s2[b] * s2[b] / c;
                t[3] += s1[b] * sz[b] / c;
                t[4] += s2[b] * sz[b] / c;
                t[5] += sz[b] * sz[b] / c;
            }
            t[5] = zz - t[5];
            rows.push(t);
        });
        let scale = pieces.r_norm * pieces.r_norm + zz;
        Self { rows, r_norm: pieces.r_norm, tol: 1e-11 * scale }
    }

    fn member(&self, pieces: &FTestPieces, t: f64) -> bool {
        let (alpha, beta) = pieces.weights(t);
        let rr = self.r_norm * self.r_norm;
        self.rows.iter().all(|c| {
            let quad = alpha * alpha * c[0] + 2.0 * alpha * beta * c[1] + beta * beta * c[2];
            let cross = alpha * c[3] + beta * c[4];
            c[5] - 2.0 * self.r_norm * cross - rr * quad >= -self.tol
        })
    }
}

/// Scans `grid` (ascending) with `member`, bisects every change of state to
/// `1e-9` relative width and returns the member set as disjoint intervals.
/// The last interval is extended to infinity when the final grid point is a
/// member and `open_right` is set.
pub fn selection_intervals<F>(grid: &[f64], member: F, open_right: bool) -> Vec<Interval>
where
    F: Fn(f64) -> bool + Sync,
{
    let states: Vec<bool> = grid.par_iter().map(|&t| member(t)).collect();
    let mut out = Vec::new();
    let mut start = states[0].then_some(grid[0]);
    for i in 1..grid.len() {
        if states[i] == states[i - 1] {
            continue;
        }
        let (mut lo, mut hi) = (grid[i - 1], grid[i]);
        for _ in 0..200 {
            if hi - lo <= BISECTION_TOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if member(mid) == states[i - 1] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if states[i] {
            start = Some(hi);
        } else if let Some(s) = start.take() {
            out.push(Interval { lo: s, hi: lo });
        }
    }
    if let Some(s) = start {
        let last = *grid.last().expect("grid is non-empty");
        out.push(Interval { lo: s, hi: if open_right { f64::INFINITY } else { last } });
    }
    out
}

/// Probe grid in the `T_F` scale: `0`, then geometric points between
/// the `1e-12` tail quantiles of the null law, widened to reach `4 T_F`,
/// plus `T_F` itself.
fn probe_grid(pieces: &FTestPieces) -> Result<Vec<f64>> {
    let s = pieces.law_scale();
    let lo = (1.0 / f_upper_quantile(pieces.d1, pieces.d2, TAIL)?) / s;
    let hi = (f_upper_quantile(pieces.d2, pieces.d1, TAIL)? / s).max(4.0 * pieces.t_f);
    let lo = lo.min(hi / 2.0).max(f64::MIN_POSITIVE);
    let steps = GRID_POINTS - 1;
    let ratio = (hi / lo).ln() / (steps - 1) as f64;
    let mut grid = vec![0.0];
    grid.extend((0..steps).map(|i| lo * (ratio * i as f64).exp()));
    grid.push(pieces.t_f);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Set of `t >= 0` at which the path through the data keeps `g_hat` among
/// the squared-residue minimizers over `G_KH`.
pub fn unknown_variance_truncation(
    pieces: &FTestPieces,
    g_hat: &BlockStructure,
    k: usize,
    h: usize,
) -> Result<Vec<Interval>> {
    crate::enumerate::check_caps(g_hat.n(), g_hat.p(), k, h)?;
    if pieces.z.len() != g_hat.n() * g_hat.p() {
        return Err(Error::ShapeMismatch { expected: g_hat.n() * g_hat.p(), got: pieces.z.len() });
    }
    let table = Competitors::build(pieces, g_hat, k, h);
    if table.rows.is_empty() {
        return Ok(vec![Interval { lo: 0.0, hi: f64::INFINITY }]);
    }
    let grid = probe_grid(pieces)?;
    Ok(selection_intervals(&grid, |t| table.member(pieces, t), true))
}

fn mass(d1: usize, d2: usize, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let upper = f_sf(d1, d2, lo)?;
    if upper < 0.5 {
        Ok((upper - f_sf(d1, d2, hi)?).max(0.0))
    } else {
        Ok((f_cdf(d1, d2, hi)? - f_cdf(d1, d2, lo)?).max(0.0))
    }
}

/// `P(F >= stat | F in intervals)` for `F ~ F(d1, d2)`.
pub fn truncated_f_p_value(stat: f64, d1: usize, d2: usize, intervals: &[Interval]) -> Result<f64> {
    if !(stat >= 0.0) {
        return Err(Error::Domain(format!("statistic must be non-negative, got {stat}")));
    }
    let (mut above, mut total) = (0.0, 0.0);
    for iv in intervals {
        total += mass(d1, d2, iv.lo, iv.hi)?;
        above += mass(d1, d2, iv.lo.max(stat), iv.hi)?;
    }
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok((above / total).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::materialize_projection;
    use crate::estimate::exact_minimizer;
    use crate::specfun::SeededRng;

    fn gaussian(n: usize, p: usize, rng: &mut SeededRng) -> DataVector {
        DataVector::new(n, p, (0..n * p).map(|_| rng.standard_normal()).collect()).unwrap()
    }

    #[test]
    fn degrees_of_freedom_example() {
        let x = gaussian(4, 4, &mut SeededRng::new(1));
        let g = BlockStructure::new(&[1, 1, 2, 2], &[1, 2, 1, 2], 2, 2).unwrap();
        let f = unknown_variance_statistic(&x, &g, ReferenceBlock::First).unwrap();
        assert_eq!((f.d1, f.d2), (3, 9));
        assert!((f.c_f - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_split_and_reconstruction() {
        let mut rng = SeededRng::new(2);
        for _ in 0..10 {
            let x = gaussian(4, 5, &mut rng);
            let g = exact_minimizer(&x, 2, 2).unwrap().g_hat;
            let Ok(f) = unknown_variance_statistic(&x, &g, ReferenceBlock::First) else { continue };
            let split = f.r1_norm.powi(2) + f.r2_norm.powi(2);
            assert!((split - f.r_norm.powi(2)).abs() < 1e-10);
            let dot: f64 = f.u1.iter().zip(&f.u2).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-12);
            let back = f.point(f.t_f);
            for (a, b) in back.iter().zip(x.as_slice()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn split_matches_dense_projector_restriction() {
        let x = gaussian(3, 4, &mut SeededRng::new(3));
        let g = BlockStructure::new(&[1, 1, 2], &[1, 1, 2, 2], 2, 2).unwrap();
        let f = unknown_variance_statistic(&x, &g, ReferenceBlock::First).unwrap();
        let e = materialize_projection(&g).unwrap();
        let dim = 12;
        let in_block = |a: usize| g.row_labels()[a % 3] == 1 && g.col_labels()[a / 3] == 1;
        let mut r1 = vec![0.0; dim];
        for a in 0..dim {
            for b in 0..dim {
                if in_block(a) && in_block(b) {
                    r1[a] += e[a * dim + b] * x.as_slice()[b];
                }
            }
        }
        assert!((norm(&r1) - f.r1_norm).abs() < 1e-12);
    }

    #[test]
    fn constant_outside_reference_block() {
        let g = BlockStructure::new(&[1, 1, 2], &[1, 1, 2], 2, 2).unwrap();
        let mut x = crate::block::block_constant_witness(&g).into_inner();
        x[0] += 0.5;
        x[1] -= 0.2;
        let x = DataVector::new(3, 3, x).unwrap();
        let f = unknown_variance_statistic(&x, &g, ReferenceBlock::First).unwrap();
        assert_eq!(f.t_f, 0.0);
        assert_eq!(f.r2_norm, 0.0);
    }

    #[test]
    fn largest_block_rule() {
        let g = BlockStructure::new(&[1, 2, 2, 2], &[1, 2, 2], 2, 2).unwrap();
        assert_eq!(reference_block(&g, ReferenceBlock::First), (1, 1));
        assert_eq!(reference_block(&g, ReferenceBlock::Largest), (2, 2));
    }

    #[test]
    fn single_block_caps_give_half_line() {
        let x = gaussian(3, 3, &mut SeededRng::new(4));
        let g = BlockStructure::single_block(3, 3, 1, 1).unwrap();
        // One block leaves no residual degrees of freedom for the ratio.
        assert!(unknown_variance_statistic(&x, &g, ReferenceBlock::First).is_err());
        let pieces = FTestPieces {
            block: (1, 1),
            d1: 4,
            d2: 4,
            c_f: 1.0,
            t_f: 0.7,
            u1: vec![0.5; 9],
            u2: vec![0.0; 9],
            z: vec![1.0; 9],
            r_norm: 1.0,
            r1_norm: 1.0,
            r2_norm: 0.0,
        };
        let set = unknown_variance_truncation(&pieces, &g, 1, 1).unwrap();
        assert_eq!(set, vec![Interval { lo: 0.0, hi: f64::INFINITY }]);
    }

    #[test]
    fn observed_point_is_selected_and_grid_agrees() {
        let mut rng = SeededRng::new(5);
        let mut checked = 0;
        while checked < 5 {
            let x = gaussian(4, 4, &mut rng);
            let g = exact_minimizer(&x, 2, 2).unwrap().g_hat;
            let Ok(f) = unknown_variance_statistic(&x, &g, ReferenceBlock::First) else { continue };
            let set = unknown_variance_truncation(&f, &g, 2, 2).unwrap();
            assert!(set.iter().any(|iv| iv.contains(f.t_f)), "{set:?} {}", f.t_f);
            let table = Competitors::build(&f, &g, 2, 2);
            let hi = set.last().map(|iv| if iv.hi.is_finite() { iv.hi * 2.0 } else { iv.lo * 4.0 + 10.0 }).unwrap();
            for i in 0..=5000 {
                let t = hi * i as f64 / 5000.0;
                let near = set.iter().any(|iv| (t - iv.lo).abs() <= 1e-8 * t.max(1.0) || (t - iv.hi).abs() <= 1e-8 * t.max(1.0));
                if near {
                    continue;
                }
                let inside = set.iter().any(|iv| iv.contains(t));
                assert_eq!(inside, table.member(&f, t), "t={t}");
                let selected = exact_minimizer(&DataVector::new(4, 4, f.point(t)).unwrap(), 2, 2).unwrap().g_hat == g;
                if i % 100 == 0 {
                    assert_eq!(selected, inside, "t={t}");
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn interval_scanner() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 10.0).collect();
        let set = selection_intervals(&grid, |t| t <= std::f64::consts::PI || (5.0..7.0).contains(&t), false);
        assert_eq!(set.len(), 2);
        assert!((set[0].hi - std::f64::consts::PI).abs() < 1e-8);
        assert!((set[1].lo - 5.0).abs() < 1e-8 && (set[1].hi - 7.0).abs() < 1e-8);
        let open = selection_intervals(&grid, |t| t >= 2.0, true);
        assert_eq!(open.len(), 1);
        assert!(open[0].hi.is_infinite());
    }

    #[test]
    fn p_value_reductions() {
        let full = [Interval { lo: 0.0, hi: f64::INFINITY }];
        for &t in &[0.0, 0.4, 1.3, 5.0] {
            let p = truncated_f_p_value(t, 3, 9, &full).unwrap();
            assert!((p - f_sf(3, 9, t).unwrap()).abs() < 1e-14);
        }
        let set = [Interval { lo: 0.0, hi: 1.0 }, Interval { lo: 2.0, hi: 3.0 }];
        assert_eq!(truncated_f_p_value(3.0, 3, 9, &set).unwrap(), 0.0);
        assert!(matches!(truncated_f_p_value(1.0, 3, 9, &[]), Err(Error::ZeroMass)));
    }

    #[test]
    fn p_value_quadrature_oracle() {
        // F(3, 9) density, integrated by Simpson after substituting t = s^2
        // to remove the t^(1/2) singularity at 0.
        let (d1, d2) = (3.0f64, 9.0f64);
        let ln_b = crate::specfun::ln_gamma(d1 / 2.0) + crate::specfun::ln_gamma(d2 / 2.0)
            - crate::specfun::ln_gamma((d1 + d2) / 2.0);
        let density = |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            ((d1 / 2.0) * (d1 / d2).ln() + (d1 / 2.0 - 1.0) * t.ln() - ((d1 + d2) / 2.0) * (1.0 + d1 * t / d2).ln() - ln_b)
                .exp()
        };
        let integrand = |s: f64| 2.0 * s * density(s * s);
        let simpson = |a: f64, b: f64| {
            let m = 20_000;
            let hstep = (b - a) / m as f64;
            let mut acc = integrand(a) + integrand(b);
            for i in 1..m {
                acc += integrand(a + i as f64 * hstep) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * hstep / 3.0
        };
        let num = simpson(1.0, 2f64.sqrt());
        let den = simpson(0.0, 2f64.sqrt());
        let p = truncated_f_p_value(1.0, 3, 9, &[Interval { lo: 0.0, hi: 2.0 }]).unwrap();
        assert!((p - num / den).abs() < 1e-8, "{p} vs {}", num / den);
    }
}
