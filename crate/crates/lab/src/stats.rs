//! Sample statistics used to aggregate repetitions.

/// Arithmetic mean; NaN for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the mean.
pub fn standard_error(values: &[f64]) -> f64 {
    (sample_variance(values) / values.len() as f64).sqrt()
}

/// Standard error of [`sample_variance`], from the fourth central moment:
/// `Var(s²) ≈ (m₄ - s⁴ (n-3)/(n-1)) / n`.
pub fn variance_standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 4 {
        return f64::INFINITY;
    }
    let m = mean(values);
    let m4 = values.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n as f64;
    let s2 = sample_variance(values);
    let nf = n as f64;
    ((m4 - s2 * s2 * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0).sqrt()
}

/// Jackknife estimate and standard error of a statistic of `n` paired samples.
/// `statistic` receives the index left out, or `None` for the full sample.
pub fn jackknife(n: usize, statistic: impl Fn(Option<usize>) -> f64) -> (f64, f64) {
    let full = statistic(None);
    if n < 2 {
        return (full, f64::INFINITY);
    }
    let leave_one_out: Vec<f64> = (0..n).map(|i| statistic(Some(i))).collect();
    let m = mean(&leave_one_out);
    let nf = n as f64;
    let var = (nf - 1.0) / nf * leave_one_out.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

/// `sample_variance(a) - sample_variance(b)` for paired samples, with its
/// jackknife standard error.
pub fn variance_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let without = |v: &[f64], skip: Option<usize>| -> f64 {
        match skip {
            None => sample_variance(v),
            Some(i) => {
                let rest: Vec<f64> = v.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
                sample_variance(&rest)
            }
        }
    };
    jackknife(a.len(), |skip| without(a, skip) - without(b, skip))
}

/// Least-squares slope of `ln y` against `ln x`, or `None` unless there are at
/// least two points and every coordinate is positive and finite.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if !xs.iter().chain(ys).all(|&v| v > 0.0 && v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}
