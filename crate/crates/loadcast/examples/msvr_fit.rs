//! Kernel regression over full 24-hour output vectors: MSVR couples the
//! outputs through the norm of the error vector, trained by IRWLS with a
//! monotone line search. The objective trace printed here never rises.
//!
//! Run with: cargo run --release --example msvr_fit

use chrono::Duration;
use loadcast::features::{assemble, FeatureConfig, FeatureGroup};
use loadcast::forecasters::{fit, ForecasterKind, ForecasterSpec};
use loadcast::metrics::evaluate_model;
use loadcast::preprocess::{apply_scaler, fit_scaler};
use loadcast::synth::{generate, SynthSpec};
use loadcast::windowing::split_windows;

fn main() -> loadcast::Result<()> {
    let raw = generate(&SynthSpec {
        days: 45,
        ..Default::default()
    })?;
    let scaler = fit_scaler(&raw, 0.8)?;
    let scaled = apply_scaler(&raw, &scaler)?;
    let train_end = raw.timestamps()[0] + Duration::hours(38 * 24);
    let cfg = FeatureConfig {
        train_span_hours: 38 * 24,
        ..Default::default()
    };
    let matrix = assemble(&scaled, &raw, "fridge", FeatureGroup::Datetime, &cfg)?;
    let target_scaler = scaler.channel("fridge")?.clone();
    let (train_ds, val_ds, test_ds) =
        split_windows(&matrix, train_end, train_end, 0.2, 24, 24, Some(target_scaler))?;

    let spec = ForecasterSpec {
        max_samples: 400,
        ..ForecasterSpec::new(ForecasterKind::Msvr)
    };
    let outcome = fit(&spec, &train_ds, &val_ds, 0)?;
    let trace = outcome.objective_trace.as_ref().unwrap();
    println!("IRWLS objective trace ({} iterations):", trace.len() - 1);
    for (i, v) in trace.iter().enumerate() {
        println!("  iter {i:>2}: {v:.3}");
    }

    let row = evaluate_model(&outcome.model, &test_ds)?;
    println!(
        "\ntest rmse = {:.3} Wh, nrmse = {:.4}, mase = {:.4} ({:.1}s fit)",
        row.rmse,
        row.nrmse.unwrap(),
        row.mase.unwrap(),
        outcome.train_seconds
    );
    Ok(())
}
