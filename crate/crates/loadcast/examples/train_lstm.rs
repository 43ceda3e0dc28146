//! End-to-end single-cell run: synthetic fridge data, weather + date-time
//! features, an LSTM trained with early stopping, and test metrics
//! against the seasonal-naive baseline.
//!
//! Run with: cargo run --release --example train_lstm

use chrono::Duration;
use loadcast::features::{assemble, FeatureConfig, FeatureGroup};
use loadcast::forecasters::{fit, ForecasterKind, ForecasterSpec};
use loadcast::metrics::evaluate_model;
use loadcast::preprocess::{apply_scaler, fit_scaler};
use loadcast::synth::{generate, SynthSpec};
use loadcast::windowing::split_windows;

fn main() -> loadcast::Result<()> {
    let raw = generate(&SynthSpec {
        days: 60,
        ..Default::default()
    })?;
    let scaler = fit_scaler(&raw, 0.8)?;
    let scaled = apply_scaler(&raw, &scaler)?;
    let train_end = raw.timestamps()[0] + Duration::hours(48 * 24);
    let cfg = FeatureConfig {
        train_span_hours: 48 * 24,
        ..Default::default()
    };

    let matrix = assemble(&scaled, &raw, "fridge", FeatureGroup::WPlusDt, &cfg)?;
    let target_scaler = scaler.channel("fridge")?.clone();
    let (train_ds, val_ds, test_ds) =
        split_windows(&matrix, train_end, train_end, 0.2, 24, 24, Some(target_scaler))?;
    println!(
        "windows: {} train / {} val / {} test, {} features per step",
        train_ds.n, val_ds.n, test_ds.n, train_ds.n_features
    );

    let spec = ForecasterSpec {
        hidden: 32,
        max_epochs: 80,
        ..ForecasterSpec::new(ForecasterKind::Lstm)
    };
    let outcome = fit(&spec, &train_ds, &val_ds, 42)?;
    let log = outcome.log.as_ref().unwrap();
    println!(
        "trained {} epochs in {:.1}s (best epoch {}, val loss {:.5})",
        log.epochs.len(),
        outcome.train_seconds,
        log.best_epoch,
        log.epochs[log.best_epoch].val_loss
    );

    let row = evaluate_model(&outcome.model, &test_ds)?;
    println!("test rmse  = {:.3} Wh", row.rmse);
    println!("test nrmse = {:.4}", row.nrmse.unwrap());
    println!("test mae   = {:.3} Wh", row.mae);
    println!("test acc95 = {:.1}%", 100.0 * row.acc95);
    println!("test mase  = {:.4}  (< 1 beats the seasonal naive)", row.mase.unwrap());
    Ok(())
}
