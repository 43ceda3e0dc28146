//! Assemble each feature group for a synthetic fridge and show what the
//! model would actually see: column names, group tags, and usable rows
//! (warm-up rows consumed by trailing statistics are trimmed).
//!
//! Run with: cargo run --example feature_groups

use loadcast::features::{assemble, FeatureConfig, FeatureGroup};
use loadcast::preprocess::{apply_scaler, fit_scaler};
use loadcast::synth::{generate, SynthSpec};

fn main() -> loadcast::Result<()> {
    let raw = generate(&SynthSpec::default())?;
    let scaler = fit_scaler(&raw, 0.8)?;
    let scaled = apply_scaler(&raw, &scaler)?;
    let cfg = FeatureConfig {
        train_span_hours: raw.len() as i64,
        ..Default::default()
    };

    for group in FeatureGroup::ALL_GROUPS {
        let m = assemble(&scaled, &raw, "fridge", group, &cfg)?;
        println!(
            "{:<14} {:>3} columns, {:>5} rows{}",
            group.name(),
            m.n_features(),
            m.n_rows(),
            if m.phase_space { "  (delay-embedded input windows)" } else { "" }
        );
        if matches!(group, FeatureGroup::Datetime | FeatureGroup::LsOnOff | FeatureGroup::Interaction) {
            for (name, tag) in m.feature_names.iter().zip(&m.feature_groups) {
                println!("    {name:<28} [{tag}]");
            }
        }
    }
    Ok(())
}
