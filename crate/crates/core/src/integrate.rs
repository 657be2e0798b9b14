//! One-dimensional quadrature primitives shared by every module: adaptive
//! Gauss–Kronrod, Gauss–Legendre rules, deterministic pairwise summation and
//! Richardson extrapolation.

// 15-point Kronrod abscissae and weights, 7-point Gauss weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Value of an integral together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_segments: usize,
}

impl Default for AdaptiveOpts {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_segments: 2000,
        }
    }
}

impl AdaptiveOpts {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Integral {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Integral {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// `breaks` are optional interior points where the integrand is known to be
/// non-smooth; they seed the initial partition. The segment with the largest
/// error is bisected until the global tolerance is met or `max_segments` is
/// reached. The returned error is the sum of the per-segment estimates, so a
/// caller can detect non-convergence by comparing it with its own budget.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], opts: AdaptiveOpts) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    pts.push(lo);
    pts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    pts.push(hi);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();

    let mut segs: Vec<(f64, f64, Integral)> = pts
        .windows(2)
        .map(|w| (w[0], w[1], gk15(&f, w[0], w[1])))
        .collect();

    loop {
        let total: f64 = segs.iter().map(|s| s.2.value).sum();
        let err: f64 = segs.iter().map(|s| s.2.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target || segs.len() >= opts.max_segments || !total.is_finite() {
            return Integral {
                value: sign * total,
                error: err,
            };
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, s)| if s.2.error > acc.1 { (i, s.2.error) } else { acc });
        let (l, r, _) = segs[worst];
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            // segment cannot be split further in floating point
            return Integral {
                value: sign * total,
                error: err,
            };
        }
        segs[worst] = (l, m, gk15(&f, l, m));
        segs.push((m, r, gk15(&f, m, r)));
    }
}

/// Integral of `f` over `[a, ∞)` via the map `x = a + t/(1-t)`.
pub fn adaptive_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, breaks: &[f64], opts: AdaptiveOpts) -> Integral {
    let mapped_breaks: Vec<f64> = breaks
        .iter()
        .filter(|&&x| x > a && x.is_finite())
        .map(|&x| {
            let u = x - a;
            u / (1.0 + u)
        })
        .collect();
    adaptive(
        |t| {
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            f(x) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        &mapped_breaks,
        opts,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    x.iter().zip(&w).map(|(&xi, &wi)| (c + hw * xi, hw * wi)).collect()
}

/// Pairwise (tree) summation in fixed index order.
///
/// The result depends only on the slice contents, never on how the slice
/// was produced, which keeps parallel reductions bit-reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Richardson extrapolation of `fine` (step h) and `coarse` (step `ratio`·h)
/// assuming an error term proportional to h^order.
pub fn richardson(fine: f64, coarse: f64, ratio: f64, order: f64) -> f64 {
    let factor = ratio.powf(order) - 1.0;
    fine + (fine - coarse) / factor
}

/// Extrapolates `values[k] = F(eps[k])` to `eps -> 0` assuming
/// `F(eps) = F0 + sum_j a_j eps^orders[j]`. Uses as many of `orders` as the
/// number of samples allows and solves the resulting small linear system.
pub fn extrapolate_to_zero(eps: &[f64], values: &[f64], orders: &[f64]) -> f64 {
    let n = eps.len().min(values.len()).min(orders.len() + 1);
    assert!(n >= 1);
    if n == 1 {
        return values[0];
    }
    // Use the n smallest cutoffs (the tail of the sequence).
    let eps = &eps[eps.len() - n..];
    let values = &values[values.len() - n..];
    let mut a = vec![vec![0.0; n + 1]; n];
    // scale eps to avoid badly scaled powers
    let scale = eps.iter().cloned().fold(0.0_f64, f64::max);
    for i in 0..n {
        a[i][0] = 1.0;
        for j in 1..n {
            a[i][j] = (eps[i] / scale).powf(orders[j - 1]);
        }
        a[i][n] = values[i];
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = a[row][n];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x[0]
}
