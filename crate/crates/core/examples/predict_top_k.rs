//! Rank fresh candidate items for a known user and for a user the model has
//! never seen.

use hbayes::generator::{sample_dataset, sample_events, GeneratorConfig};
use hbayes::predictor::{rank_top_k, score, Candidate};
use hbayes::{fit, HyperParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hbayes::Result<()> {
    let hp = HyperParams::new(3, 6);
    let config = GeneratorConfig::new(10, 8, 1500);
    let (data, truth) = sample_dataset(&hp, &config, 4)?;
    let (state, _) = fit(&data, &hp, 4)?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let fresh = sample_events(&truth, 200, config.feature_scale, &mut rng);
    let candidates: Vec<Candidate> = fresh
        .iter()
        .enumerate()
        .map(|(t, e)| Candidate {
            item_id: t,
            x: e.x.clone(),
            brand: e.brand,
        })
        .collect();

    let user = 0;
    println!("top 5 for user {user}:");
    for (item, prob) in rank_top_k(user, &candidates, &state, 5)? {
        let c = &candidates[item];
        let s = score(&c.x, &state.brands[c.brand], &state.users[user])?;
        println!(
            "  item {item:>3}  brand {}  p = {prob:.3}  (μ = {:.2}, σ² = {:.3})",
            c.brand, s.mu, s.sigma2
        );
    }

    // Any index past the fitted users falls back to the user prior.
    println!("top 5 for a new user:");
    for (item, prob) in rank_top_k(state.num_users(), &candidates, &state, 5)? {
        println!("  item {item:>3}  p = {prob:.3}");
    }
    Ok(())
}
