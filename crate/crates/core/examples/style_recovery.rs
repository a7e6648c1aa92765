//! Fit on brands drawn from well separated styles and compare the fitted
//! clusters with the true assignments.

use hbayes::generator::{sample_dataset, GeneratorConfig};
use hbayes::{fit, HyperParams};

fn main() -> hbayes::Result<()> {
    let s = 3;
    let mut generating = HyperParams::new(s, 5);
    generating.gamma0 = vec![10.0; s];
    let mut config = GeneratorConfig::new(30, 30, 6000);
    config.feature_scale = 0.5;
    config.precisions.brand = 4.0;
    config.precisions.style = 0.25;
    let (data, truth) = sample_dataset(&generating, &config, 2)?;

    for a in 0..s {
        for b in 0..a {
            println!(
                "|S{a} - S{b}| = {:.2}",
                (truth.style(a) - truth.style(b)).norm()
            );
        }
    }

    let (state, _) = fit(&data, &HyperParams::new(s, 5), 2)?;
    let fitted = state.resp.hard_assignments();

    // Rows: true style, columns: fitted style.
    let mut table = vec![vec![0usize; s]; s];
    for (t, f) in truth.style_assignments.iter().zip(&fitted) {
        table[*t][*f] += 1;
    }
    println!("true \\ fitted");
    for (j, row) in table.iter().enumerate() {
        println!("{j}: {row:?}");
    }
    Ok(())
}
