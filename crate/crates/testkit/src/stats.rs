//! Statistics references: quadrature Student t tail and brute-force ranks.

/// Two-sided Student t p-value by quadrature, without gamma functions.
///
/// With `x = sqrt(df) tan(theta)` the t density becomes proportional to
/// `cos(theta)^(df-1)` on `[0, pi/2)`, so
/// `P(|T| >= t) = int_{theta_t}^{pi/2} cos^(df-1) / int_0^{pi/2} cos^(df-1)`.
pub fn t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let theta_t = (t.abs() / df.sqrt()).atan();
    let f = |th: f64| th.cos().powf(df - 1.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let tail = integrate(&f, theta_t, half_pi);
    let whole = integrate(&f, 0.0, half_pi);
    tail / whole
}

/// Composite 20-point Gauss-Legendre over 400 panels.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre(20);
    let panels = 400;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        total += half * nodes.iter().zip(&weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>();
    }
    total
}

/// Nodes and weights by Newton iteration on the Legendre polynomial.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in 0..n {
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
        xs.push(x);
        ws.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

/// Average ranks by counting: `1 + #less + (#equal - 1) / 2`.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Sample correlation from the textbook two-pass formula.
pub fn correlation(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let cov: f64 = u.iter().zip(v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let su: f64 = u.iter().map(|a| (a - mu).powi(2)).sum::<f64>().sqrt();
    let sv: f64 = v.iter().map(|b| (b - mv).powi(2)).sum::<f64>().sqrt();
    cov / (su * sv)
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}
