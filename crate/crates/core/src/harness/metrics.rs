// SPDX-License-Identifier: Apache-2.0

/// `(1/t) sum |J - J^|`.
pub fn absolute_error(truth: f64, estimates: &[f64]) -> f64 {
    estimates.iter().map(|e| (truth - e).abs()).sum::<f64>() / estimates.len() as f64
}

/// `(1/t) sum |J - J^| / J`.
pub fn relative_error(truth: f64, estimates: &[f64]) -> f64 {
    absolute_error(truth, estimates) / truth
}

/// `(1/n) sum (f - f~)^2` over aligned frequency vectors.
pub fn mean_squared_error(truth: &[f64], estimates: &[f64]) -> f64 {
    assert_eq!(truth.len(), estimates.len());
    truth.iter().zip(estimates).map(|(f, e)| (f - e).powi(2)).sum::<f64>() / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed() {
        let est = [90.0, 110.0, 130.0];
        assert_eq!(absolute_error(100.0, &est), (10.0 + 10.0 + 30.0) / 3.0);
        assert_eq!(relative_error(100.0, &est), 50.0 / 3.0 / 100.0);
        assert_eq!(mean_squared_error(&[1.0, 2.0, 3.0], &[2.0, 2.0, 1.0]), (1.0 + 0.0 + 4.0) / 3.0);
        assert_eq!(absolute_error(5.0, &[5.0]), 0.0);
    }
}
