//! Screen synthetic household channels for forecastability with weighted
//! permutation entropy. Values near 1 mean noise-like; the 0.5 threshold
//! on the normalized scale separates series worth modeling.
//!
//! Run with: cargo run --example predictability

use loadcast::predictability::{predictability_report, weighted_permutation_entropy, WpeParams};
use loadcast::synth::{generate, SynthSpec};

fn main() -> loadcast::Result<()> {
    let frame = generate(&SynthSpec::default())?;
    let params = WpeParams::default(); // order 7, delay 1
    let report = predictability_report(&frame, &params)?;

    println!("channel      wpe      normalized  windows");
    for r in &report.rows {
        let verdict = if r.wpe_normalized < 0.5 { "predictable" } else { "noisy" };
        println!(
            "{:<12} {:<8.4} {:<11.4} {:<8} {}",
            r.channel, r.wpe, r.wpe_normalized, r.n_windows, verdict
        );
    }

    // reference points: white noise ~1, a pure ramp = 0
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let noise: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
    let ramp: Vec<f64> = (0..2000).map(f64::from).collect();
    let norm = WpeParams {
        normalize: true,
        ..params
    };
    println!("\nwhite noise: {:.4}", weighted_permutation_entropy(&noise, &norm)?);
    println!("linear ramp: {:.4}", weighted_permutation_entropy(&ramp, &norm)?);
    Ok(())
}
