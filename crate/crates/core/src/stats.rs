//! Small summary-statistics helpers used by experiments and reports.

/// Sample mean. Returns NaN for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample standard deviation (n - 1 denominator). Zero for n < 2.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    std_dev(xs) / (xs.len() as f64).sqrt()
}

/// Root mean squared deviation from a reference value.
pub fn rmse(xs: &[f64], truth: f64) -> f64 {
    (xs.iter().map(|x| (x - truth) * (x - truth)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Shannon entropy (nats) of a weight vector; zero weights contribute nothing.
pub fn entropy(weights: impl IntoIterator<Item = f64>) -> f64 {
    weights
        .into_iter()
        .filter(|w| *w > 0.0)
        .map(|w| -w * w.ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((std_dev(&xs) - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(std_dev(&[3.0]), 0.0);
        assert_eq!(rmse(&[1.0, -1.0], 0.0), 1.0);
    }

    #[test]
    fn entropy_of_uniform() {
        assert!((entropy([0.5, 0.5]) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(entropy([1.0, 0.0]), 0.0);
    }
}
