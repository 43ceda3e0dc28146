//! Forecast accuracy metrics, pooled over every (window, hour) pair of a
//! test partition: RMSE, range-normalized RMSE, MAE, the share of hours
//! within 5% relative deviation (acc95), and MASE against the seasonal
//! naive forecast (the value 24 hours earlier).

use crate::error::{Error, Result};
use crate::forecasters::ForecastModel;
use crate::windowing::WindowedDataset;

fn check_lengths(y: &[f64], p: &[f64]) -> Result<()> {
    if y.len() != p.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: p.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::MetricUndefined("no evaluation points".into()));
    }
    Ok(())
}

pub fn rmse(y: &[f64], p: &[f64]) -> Result<f64> {
    check_lengths(y, p)?;
    let mse: f64 = y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    Ok(mse.sqrt())
}

pub fn mae(y: &[f64], p: &[f64]) -> Result<f64> {
    check_lengths(y, p)?;
    Ok(y.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

fn observed_range(y: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in y {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    hi - lo
}

/// RMSE divided by the observed target range; `None` (with a caller-side
/// warning) when the range is zero.
pub fn nrmse(y: &[f64], p: &[f64]) -> Result<Option<f64>> {
    let r = rmse(y, p)?;
    let range = observed_range(y);
    if range == 0.0 {
        return Ok(None);
    }
    Ok(Some(r / range))
}

/// Fraction of points whose absolute relative deviation is at most 5%.
/// Zero observations cannot divide, so they count as accurate iff the
/// prediction is within `zero_tolerance` of zero.
pub fn acc95(y: &[f64], p: &[f64], zero_tolerance: f64) -> Result<f64> {
    check_lengths(y, p)?;
    let hits = y
        .iter()
        .zip(p)
        .filter(|(a, b)| {
            if **a == 0.0 {
                b.abs() <= zero_tolerance
            } else {
                ((**a - **b) / **a).abs() <= 0.05
            }
        })
        .count();
    Ok(hits as f64 / y.len() as f64)
}

/// MAE relative to the seasonal naive forecast; `None` when the naive
/// forecast is already exact.
pub fn mase(y: &[f64], p: &[f64], naive: &[f64]) -> Result<Option<f64>> {
    check_lengths(y, p)?;
    check_lengths(y, naive)?;
    let mae_model = mae(y, p)?;
    let mae_naive = mae(y, naive)?;
    if mae_naive == 0.0 {
        return Ok(None);
    }
    Ok(Some(mae_model / mae_naive))
}

/// One grid cell's evaluation: identity columns plus the pooled metrics.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub feature_group: String,
    pub rmse: f64,
    pub nrmse: Option<f64>,
    pub mae: f64,
    pub acc95: f64,
    pub mase: Option<f64>,
    pub n_windows: usize,
    pub train_seconds: f64,
}

/// Pooled metrics for predictions/observations in physical units.
/// `zero_tolerance` for acc95 defaults to 1% of the observed range.
pub fn evaluate(
    y: &[f64],
    p: &[f64],
    naive: &[f64],
    zero_tolerance: Option<f64>,
) -> Result<(f64, Option<f64>, f64, f64, Option<f64>)> {
    let tol = zero_tolerance.unwrap_or(0.01 * observed_range(y));
    Ok((
        rmse(y, p)?,
        nrmse(y, p)?,
        mae(y, p)?,
        acc95(y, p, tol)?,
        mase(y, p, naive)?,
    ))
}

/// Run a fitted model over every window of a test partition and pool the
/// metrics in physical units.
pub fn evaluate_model(model: &ForecastModel, test: &WindowedDataset) -> Result<EvalRow> {
    let mut y = Vec::with_capacity(test.n * test.out_len);
    let mut p = Vec::with_capacity(test.n * test.out_len);
    let mut naive = Vec::with_capacity(test.n * test.out_len);
    for i in 0..test.n {
        y.extend(test.target(i).iter().map(|z| test.to_physical(*z)));
        p.extend(model.predict(test, i));
        let h = test.history(i);
        naive.extend(h[h.len() - test.out_len..].iter().map(|z| test.to_physical(*z)));
    }
    let (rmse, nrmse, mae, acc95, mase) = evaluate(&y, &p, &naive, None)?;
    Ok(EvalRow {
        model: model.kind().name().into(),
        feature_group: String::new(),
        rmse,
        nrmse,
        mae,
        acc95,
        mase,
        n_windows: test.n,
        train_seconds: 0.0,
    })
}
