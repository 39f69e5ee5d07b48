//! Test-only oracles, independent of the library's closed forms.

#![allow(dead_code)]

/// Erlang(m, 1) CDF by composite Simpson integration of the density
/// `t^(m-1) e^-t / (m-1)!` over `[0, x]`.
pub fn erlang_cdf_quadrature(m: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let fact: f64 = (1..m).map(|i| i as f64).product();
    let pdf = |t: f64| t.powi(m as i32 - 1) * (-t).exp() / fact;
    let n = 20_000;
    let h = x / n as f64;
    let mut sum = pdf(0.0) + pdf(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * pdf(i as f64 * h);
    }
    sum * h / 3.0
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}
