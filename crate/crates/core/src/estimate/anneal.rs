use super::{objective_from_sums, CoolingSchedule, EstimateResult, Method};
use crate::block::{accumulate_block_sums, squared_residue, BlockStructure, DataVector};
use crate::enumerate::check_caps;
use crate::specfun::SeededRng;
use crate::Result;

/// Uniform label from `1..=cap` other than `current`.
pub(crate) fn other_label(rng: &mut SeededRng, cap: usize, current: usize) -> usize {
    let v = rng.below(cap - 1) + 1;
    if v >= current {
        v + 1
    } else {
        v
    }
}

/// Metropolis acceptance for a move changing the objective by `delta`.
pub(crate) fn accept(rng: &mut SeededRng, delta: f64, temperature: f64) -> bool {
    if delta < 0.0 {
        return true;
    }
    if delta.is_nan() {
        return false;
    }
    rng.next_f64() < (-delta / temperature).exp()
}

/// Simulated annealing over single-label moves.
///
/// Starts from uniformly random labels and at each step relabels one row or
/// column, chosen uniformly among those that can move (rows only move when
/// `K > 1`, columns only when `H > 1`). The objective `x^T E^(g) x` is kept
/// through incremental block sums.
pub fn sa_minimizer(
    x: &DataVector,
    k: usize,
    h: usize,
    schedule: &CoolingSchedule,
    rng: &mut SeededRng,
) -> Result<EstimateResult> {
    let (n, p) = (x.n(), x.p());
    check_caps(n, p, k, h)?;
    schedule.validate()?;
    if k == 1 && h == 1 {
        let g_hat = BlockStructure::single_block(n, p, 1, 1)?;
        let residue = squared_residue(x, &g_hat)?;
        return Ok(EstimateResult { g_hat, residue, steps: 0, method: Method::Anneal });
    }
    let xs = x.as_slice();
    let sq_norm: f64 = xs.iter().map(|v| v * v).sum();

    let mut rows: Vec<usize> = (0..n).map(|_| rng.below(k) + 1).collect();
    let mut cols: Vec<usize> = (0..p).map(|_| rng.below(h) + 1).collect();
    let mut row_sizes = vec![0usize; k];
    let mut col_sizes = vec![0usize; h];
    rows.iter().for_each(|&l| row_sizes[l - 1] += 1);
    cols.iter().for_each(|&l| col_sizes[l - 1] += 1);
    let mut sums = vec![0.0; k * h];
    accumulate_block_sums(xs, &rows, &cols, h, &mut sums);
    let mut f = objective_from_sums(sq_norm, &sums, &row_sizes, &col_sizes);

    let movable_rows = if k > 1 { n } else { 0 };
    let movable = movable_rows + if h > 1 { p } else { 0 };
    let mut partial = vec![0.0; k.max(h)];
    let mut saved = vec![0.0; 2 * k.max(h)];
    let mut t = 0u64;
    while schedule.running(t) {
        let temperature = schedule.temperature(t);
        let m = rng.below(movable);
        if m < movable_rows {
            let i = m;
            let old = rows[i];
            let new = other_label(rng, k, old);
            // Row i's sums over each column cluster.
            partial[..h].iter_mut().for_each(|v| *v = 0.0);
            for (j, &c) in cols.iter().enumerate() {
                partial[c - 1] += xs[n * j + i];
            }
            saved[..h].copy_from_slice(&sums[(old - 1) * h..old * h]);
            saved[h..2 * h].copy_from_slice(&sums[(new - 1) * h..new * h]);
            for c in 0..h {
                sums[(old - 1) * h + c] -= partial[c];
                sums[(new - 1) * h + c] += partial[c];
            }
            row_sizes[old - 1] -= 1;
            row_sizes[new - 1] += 1;
            let f_new = objective_from_sums(sq_norm, &sums, &row_sizes, &col_sizes);
            if accept(rng, f_new - f, temperature) {
                rows[i] = new;
                f = f_new;
            } else {
                sums[(old - 1) * h..old * h].copy_from_slice(&saved[..h]);
                sums[(new - 1) * h..new * h].copy_from_slice(&saved[h..2 * h]);
                row_sizes[old - 1] += 1;
                row_sizes[new - 1] -= 1;
            }
        } else {
            let j = m - movable_rows;
            let old = cols[j];
            let new = other_label(rng, h, old);
            partial[..k].iter_mut().for_each(|v| *v = 0.0);
            for (i, &r) in rows.iter().enumerate() {
                partial[r - 1] += xs[n * j + i];
            }
            for r in 0..k {
                saved[r] = sums[r * h + old - 1];
                saved[k + r] = sums[r * h + new - 1];
                sums[r * h + old - 1] -= partial[r];
                sums[r * h + new - 1] += partial[r];
            }
            col_sizes[old - 1] -= 1;
            col_sizes[new - 1] += 1;
            let f_new = objective_from_sums(sq_norm, &sums, &row_sizes, &col_sizes);
            if accept(rng, f_new - f, temperature) {
                cols[j] = new;
                f = f_new;
            } else {
                for r in 0..k {
                    sums[r * h + old - 1] = saved[r];
                    sums[r * h + new - 1] = saved[k + r];
                }
                col_sizes[old - 1] += 1;
                col_sizes[new - 1] -= 1;
            }
        }
        t += 1;
    }
    let g_hat = BlockStructure::new(&rows, &cols, k, h)?;
    let residue = squared_residue(x, &g_hat)?;
    Ok(EstimateResult { g_hat, residue, steps: t, method: Method::Anneal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::exact_minimizer;

    fn gaussian(n: usize, p: usize, rng: &mut SeededRng) -> DataVector {
        DataVector::new(n, p, (0..n * p).map(|_| rng.standard_normal()).collect()).unwrap()
    }

    #[test]
    fn cold_start_returns_initial_labels() {
        let x = gaussian(4, 5, &mut SeededRng::new(1));
        let schedule = CoolingSchedule::geometric(1e-7, 0.99, 1e-6).unwrap();
        let mut rng = SeededRng::new(77);
        let res = sa_minimizer(&x, 2, 3, &schedule, &mut rng).unwrap();
        let mut replay = SeededRng::new(77);
        let rows: Vec<usize> = (0..4).map(|_| replay.below(2) + 1).collect();
        let cols: Vec<usize> = (0..5).map(|_| replay.below(3) + 1).collect();
        assert_eq!(res.g_hat, BlockStructure::new(&rows, &cols, 2, 3).unwrap());
        assert_eq!(res.steps, 0);
    }

    #[test]
    fn never_beats_exact() {
        let mut data = SeededRng::new(5);
        for seed in 0..10 {
            let x = gaussian(5, 5, &mut data);
            let exact = exact_minimizer(&x, 2, 2).unwrap();
            let res = sa_minimizer(&x, 2, 2, &CoolingSchedule::default(), &mut SeededRng::new(seed)).unwrap();
            assert!(res.residue >= exact.residue - 1e-15);
            assert!((res.residue - squared_residue(&x, &res.g_hat).unwrap()).abs() == 0.0);
            assert_eq!(res.steps, 1604);
        }
    }

    #[test]
    fn singleton_caps_return_immediately() {
        let x = gaussian(3, 3, &mut SeededRng::new(2));
        let res = sa_minimizer(&x, 1, 1, &CoolingSchedule::default(), &mut SeededRng::new(0)).unwrap();
        assert_eq!(res.steps, 0);
        assert_eq!(res.g_hat.occupied_blocks(), 1);
    }

    #[test]
    fn one_sided_caps_only_move_the_other_side() {
        let x = gaussian(4, 6, &mut SeededRng::new(3));
        let res = sa_minimizer(&x, 1, 3, &CoolingSchedule::default(), &mut SeededRng::new(4)).unwrap();
        assert_eq!(res.g_hat.row_clusters(), 1);
        let exact = exact_minimizer(&x, 1, 3).unwrap();
        assert!(res.residue >= exact.residue - 1e-15);
    }

    #[test]
    fn deterministic_given_seed() {
        let x = gaussian(6, 6, &mut SeededRng::new(9));
        let a = sa_minimizer(&x, 2, 2, &CoolingSchedule::default(), &mut SeededRng::new(1)).unwrap();
        let b = sa_minimizer(&x, 2, 2, &CoolingSchedule::default(), &mut SeededRng::new(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn other_label_excludes_current() {
        let mut rng = SeededRng::new(0);
        for _ in 0..1000 {
            let v = other_label(&mut rng, 3, 2);
            assert!(v == 1 || v == 3);
        }
    }
}
