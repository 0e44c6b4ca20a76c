//! Time quadrature shared by the averaged map and the Landesman–Lazer functional.

/// Composite Simpson rule on `[a, b]` with `n` subintervals (rounded up to even).
pub fn simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let n = simpson_intervals(n);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson nodes and weights on `[a, b]`, for integrands that are vector valued.
pub fn simpson_rule(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let n = simpson_intervals(n);
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (a + i as f64 * h, w * h / 3.0)
        })
        .collect()
}

fn simpson_intervals(n: usize) -> usize {
    let n = n.max(2);
    n + n % 2
}

/// Neumaier-compensated sum; the order of terms is fixed by the caller.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}
