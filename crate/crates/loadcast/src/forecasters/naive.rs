//! Seasonal-naive baseline: tomorrow's 24 hours are yesterday's 24 hours.

/// Stateless persistence forecaster over the target-history window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveModel {
    pub in_len: usize,
    pub out_len: usize,
}

impl NaiveModel {
    /// Copy the last `out_len` values of the input-window target history.
    pub fn predict(&self, history: &[f64]) -> Vec<f64> {
        history[history.len() - self.out_len..].to_vec()
    }
}
