#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod estimate and its difference from the embedded Gauss rule.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let (mut k, mut g) = (WGK[7] * fc, WG[3] * fc);
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive Gauss-Kronrod quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if depth == 0 || err <= tol.max(1e-15 * v.abs()) {
            return v;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, tol / 2.0, depth - 1) + go(f, m, b, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    const PIECES: usize = 8;
    let h = (b - a) / PIECES as f64;
    (0..PIECES)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == PIECES { b } else { lo + h };
            go(f, lo, hi, tol / PIECES as f64, 40)
        })
        .sum()
}

/// `int_0^y t^(a-1) (1-t)^(b-1) dt`, with `t = s^2` near 0 and `1 - t = s^2`
/// near 1 so that the integrands stay bounded.
pub fn beta_integral(a: f64, b: f64, y: f64, tol: f64) -> f64 {
    let lower = |s: f64| 2.0 * s.powf(2.0 * a - 1.0) * (1.0 - s * s).powf(b - 1.0);
    let upper = |s: f64| 2.0 * s.powf(2.0 * b - 1.0) * (1.0 - s * s).powf(a - 1.0);
    if y <= 0.5 {
        integrate(&lower, 0.0, y.sqrt(), tol)
    } else {
        integrate(&lower, 0.0, 0.5f64.sqrt(), tol) + integrate(&upper, (1.0 - y).sqrt(), 0.5f64.sqrt(), tol)
    }
}

/// Regularized incomplete beta by quadrature.
pub fn beta_oracle(a: f64, b: f64, y: f64) -> f64 {
    beta_integral(a, b, y, 1e-14) / beta_integral(a, b, 1.0, 1e-14)
}

/// Chi CDF by quadrature of the unnormalized density, self-normalized.
pub fn chi_oracle(dof: f64, t: f64) -> f64 {
    let dens = |s: f64| s.powf(dof - 1.0) * (-0.5 * s * s).exp();
    let scale = dof.sqrt() + 40.0;
    integrate(&dens, 0.0, t.min(scale), 1e-15) / integrate(&dens, 0.0, scale, 1e-15)
}

/// Projector `E^(g)` from its definition: identity minus block averaging.
pub fn dense_projector(rows: &[usize], cols: &[usize]) -> nalgebra::DMatrix<f64> {
    let (n, p) = (rows.len(), cols.len());
    let m = n * p;
    let block = |idx: usize| (rows[idx % n], cols[idx / n]);
    let mut e = nalgebra::DMatrix::<f64>::identity(m, m);
    for a in 0..m {
        let cnt = (0..m).filter(|&b| block(b) == block(a)).count() as f64;
        for b in 0..m {
            if block(a) == block(b) {
                e[(a, b)] -= 1.0 / cnt;
            }
        }
    }
    e
}
