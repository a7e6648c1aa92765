//! Save a fitted model, load it back and check that rankings are unchanged.

use hbayes::generator::{sample_dataset, GeneratorConfig};
use hbayes::io::{load_checkpoint, save_checkpoint, Checkpoint};
use hbayes::predictor::{rank_top_k, Candidate};
use hbayes::{fit, HyperParams};

fn main() -> hbayes::Result<()> {
    let hp = HyperParams::new(2, 4);
    let (data, _) = sample_dataset(&hp, &GeneratorConfig::new(6, 5, 500), 11)?;
    let (state, report) = fit(&data, &hp, 11)?;
    let checkpoint = Checkpoint {
        hyperparams: hp,
        state,
        user_ids: (0..data.num_users)
            .map(|k| format!("shopper-{k}"))
            .collect(),
        brand_ids: (0..data.num_brands).map(|i| format!("label-{i}")).collect(),
        fit_report: report,
    };

    let path = std::env::temp_dir().join("hbayes_checkpoint_example.json");
    save_checkpoint(&path, &checkpoint)?;
    let loaded = load_checkpoint(&path)?;
    println!(
        "wrote {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    let candidates: Vec<Candidate> = data
        .events
        .iter()
        .enumerate()
        .map(|(t, e)| Candidate {
            item_id: t,
            x: e.x.clone(),
            brand: e.brand,
        })
        .collect();
    let before = rank_top_k(2, &candidates, &checkpoint.state, 10)?;
    let after = rank_top_k(2, &candidates, &loaded.state, 10)?;
    println!("rankings identical after reload: {}", before == after);
    std::fs::remove_file(&path)?;
    Ok(())
}
