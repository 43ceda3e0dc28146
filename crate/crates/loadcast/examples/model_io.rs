//! Persist and reload fitted models through the versioned binary format,
//! then verify the reloaded model predicts bit-identically.
//!
//! Run with: cargo run --release --example model_io

use chrono::Duration;
use loadcast::features::{assemble, FeatureConfig, FeatureGroup};
use loadcast::forecasters::{fit, load_model, save_model, ForecasterKind, ForecasterSpec};
use loadcast::preprocess::{apply_scaler, fit_scaler};
use loadcast::synth::{generate, SynthSpec};
use loadcast::windowing::split_windows;

fn main() -> loadcast::Result<()> {
    let raw = generate(&SynthSpec {
        days: 30,
        ..Default::default()
    })?;
    let scaler = fit_scaler(&raw, 0.8)?;
    let scaled = apply_scaler(&raw, &scaler)?;
    let train_end = raw.timestamps()[0] + Duration::hours(25 * 24);
    let cfg = FeatureConfig {
        train_span_hours: 25 * 24,
        ..Default::default()
    };
    let matrix = assemble(&scaled, &raw, "fridge", FeatureGroup::Datetime, &cfg)?;
    let (train_ds, val_ds, test_ds) = split_windows(
        &matrix,
        train_end,
        train_end,
        0.2,
        24,
        24,
        Some(scaler.channel("fridge")?.clone()),
    )?;

    let dir = tempfile::tempdir().expect("tempdir");
    for kind in [ForecasterKind::Naive, ForecasterKind::Ffnn, ForecasterKind::Msvr] {
        let spec = ForecasterSpec {
            hidden: 16,
            max_epochs: 10,
            max_samples: 200,
            ..ForecasterSpec::new(kind)
        };
        let fitted = fit(&spec, &train_ds, &val_ds, 1)?.model;
        let path = dir.path().join(format!("{}.bin", kind.name()));
        save_model(&fitted, &path)?;
        let reloaded = load_model(&path)?;
        let before = fitted.predict(&test_ds, 0);
        let after = reloaded.predict(&test_ds, 0);
        assert_eq!(before, after, "round trip must be exact");
        println!(
            "{:<6} -> {} ({} bytes), first-hour forecast {:.2} Wh",
            kind.name(),
            path.display(),
            std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
            after[0]
        );
    }
    Ok(())
}
