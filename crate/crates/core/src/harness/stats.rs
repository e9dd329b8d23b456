use crate::error::{Error, Result};

/// Sorted `(value, P(X ≤ value))` pairs of the right-continuous empirical
/// CDF. Ties collapse to one step at the tied value.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    let sorted = sorted_finite(values)?;
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (idx, &v) in sorted.iter().enumerate() {
        let p = (idx + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => out.push((v, p)),
        }
    }
    Ok(out)
}

/// Order statistic `x_(⌈q n⌉)` (1-based), with `q ∈ (0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Domain(format!("quantile level {q} outside (0, 1]")));
    }
    let sorted = sorted_finite(values)?;
    let n = sorted.len();
    // q·n can land a hair above an integer, e.g. 0.1 * 30
    let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}

fn sorted_finite(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}
