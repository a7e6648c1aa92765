//! Five-fold cross-validation of the model against the brand popularity
//! baseline.

use hbayes::evaluation::{cross_validate_with, HBayesScorer, PopularityScorer, DEFAULT_KS};
use hbayes::generator::{sample_dataset, GeneratorConfig};
use hbayes::{FitOptions, HyperParams};

fn main() -> hbayes::Result<()> {
    let hp = HyperParams::new(3, 10);
    let (data, _) = sample_dataset(&hp, &GeneratorConfig::new(20, 15, 2000), 3)?;

    let mut model = HBayesScorer {
        hp,
        seed: 3,
        options: FitOptions::default(),
    };
    let ours = cross_validate_with(&data, 5, 3, &DEFAULT_KS, &mut model)?;
    let base = cross_validate_with(&data, 5, 3, &DEFAULT_KS, &mut PopularityScorer)?;

    println!("   K   ndcg (model)  ndcg (popularity)  recall (model)");
    for (m, p) in ours.mean.iter().zip(&base.mean) {
        println!(
            "{:>4}   {:>12.4}  {:>17.4}  {:>14.4}",
            m.k, m.ndcg, p.ndcg, m.recall
        );
    }
    for f in &ours.folds {
        let at10 = f.metrics.iter().find(|m| m.k == 10).unwrap();
        println!(
            "fold {}: NDCG@10 {:.4} over {} users",
            f.fold, at10.ndcg, at10.num_users_evaluated
        );
    }
    Ok(())
}
