//! Summary statistics shared by the experiment families.

/// Mean and sample standard deviation; the deviation is 0 for fewer than
/// two values and both are NaN for none.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Population standard deviation, used for spread across nodes.
pub fn population_sd(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Coefficient of determination of `y` against the fixed line `y = x`.
///
/// With no spread in `y` the result is 1 for a perfect fit and negative
/// infinity otherwise.
pub fn r_squared_identity(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "paired samples differ in length");
    if y.is_empty() {
        return f64::NAN;
    }
    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean_y).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        };
    }
    1.0 - ss_res / ss_tot
}

/// `(after - before) / before * 100`; 0 when both are 0.
pub fn percent_change(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        return if after == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(after)
        };
    }
    (after - before) / before * 100.0
}
