use crate::error::{domain, Result};

/// Product merge for independent e-values. Empty input gives 1.
pub fn merge_product(values: &[f64]) -> f64 {
    values.iter().product()
}

/// Mean merge, valid under arbitrary dependence.
pub fn merge_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return domain("merge_mean of an empty list");
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
