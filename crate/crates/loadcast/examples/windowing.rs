//! Turn a feature matrix into supervised 24h-in / 24h-out samples:
//! stride-1 rolling windows for training, stride-24 tiles for testing,
//! and the CSV + manifest persistence round trip.
//!
//! Run with: cargo run --example windowing

use loadcast::features::{assemble, FeatureConfig, FeatureGroup};
use loadcast::preprocess::{apply_scaler, fit_scaler};
use loadcast::synth::{generate, SynthSpec};
use loadcast::windowing::{load_dataset, make_windows, save_dataset, split_windows};

fn main() -> loadcast::Result<()> {
    let raw = generate(&SynthSpec {
        days: 30,
        ..Default::default()
    })?;
    let scaler = fit_scaler(&raw, 0.8)?;
    let scaled = apply_scaler(&raw, &scaler)?;
    let cfg = FeatureConfig {
        train_span_hours: raw.len() as i64,
        ..Default::default()
    };
    let matrix = assemble(&scaled, &raw, "fridge", FeatureGroup::WPlusDt, &cfg)?;

    let rolling = make_windows(&matrix, 24, 24, 1, None)?;
    let tiled = make_windows(&matrix, 24, 24, 24, None)?;
    println!(
        "matrix: {} rows x {} features ({:?})",
        matrix.n_rows(),
        matrix.n_features(),
        matrix.feature_names
    );
    println!("stride 1:  {} samples of shape ({}, {})", rolling.n, rolling.steps, rolling.n_features);
    println!("stride 24: {} samples (non-overlapping forecast days)", tiled.n);

    // chronological split with a 20% validation tail
    let train_end = matrix.timestamps[matrix.n_rows() - 5 * 24];
    let (train, val, test) = split_windows(&matrix, train_end, train_end, 0.2, 24, 24, None)?;
    println!("split: {} train / {} val / {} test windows", train.n, val.n, test.n);
    println!("first test day starts {}", test.sample_starts[0]);

    let dir = tempfile::tempdir().expect("tempdir");
    save_dataset(&test, dir.path())?;
    let reloaded = load_dataset(dir.path())?;
    assert_eq!(reloaded, test);
    println!("dataset round-tripped through {}", dir.path().display());
    Ok(())
}
