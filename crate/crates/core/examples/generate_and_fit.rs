//! Sample a synthetic dataset, fit the model and print the ELBO trace.
//!
//! `cargo run --release --example generate_and_fit`

use hbayes::generator::{sample_dataset, GeneratorConfig};
use hbayes::{fit, HyperParams};

fn main() -> hbayes::Result<()> {
    let hp = HyperParams::new(3, 10);
    let (data, truth) = sample_dataset(&hp, &GeneratorConfig::new(20, 15, 2000), 1)?;
    let clicks = data.events.iter().filter(|e| e.clicked).count();
    println!(
        "{} events, {} users, {} brands, {clicks} clicks",
        data.len(),
        data.num_users,
        data.num_brands
    );

    let (state, report) = fit(&data, &hp, 7)?;
    for (i, v) in report.elbo_trace.iter().enumerate() {
        println!("sweep {:>3}  ELBO {v:.4}", i + 1);
    }
    println!(
        "converged: {} after {} sweeps",
        report.converged, report.iterations_run
    );

    println!(
        "E[δ_u] = {:.3} (true {}), E[δ_b] = {:.3} (true {})",
        state.prec_u.mean(),
        truth.precisions.user,
        state.prec_b.mean(),
        truth.precisions.brand
    );
    Ok(())
}
