//! Turn categorical item properties into a fixed-width feature vector and
//! append it to dense features.

use hbayes::io::{hash_features, token_slot, DEFAULT_HASH_WIDTH};
use hbayes::EventRecord;

fn main() {
    let tokens = [
        ("color", "navy"),
        ("fabric", "linen"),
        ("fit", "relaxed"),
        ("sleeve", "short"),
    ];
    for (name, value) in tokens {
        let (bucket, sign) = token_slot(name, value, DEFAULT_HASH_WIDTH);
        let token = format!("{name}={value}");
        println!("{token:<14} -> bucket {bucket:>2}, sign {sign:+}");
    }

    let hashed = hash_features(&tokens, DEFAULT_HASH_WIDTH);
    let price = 0.35;
    let mut x = vec![1.0, price];
    x.extend(hashed);
    let event = EventRecord::new(x, 0, 0, true);
    println!(
        "feature vector of length {} with {} nonzero entries",
        event.x.len(),
        event.x.iter().filter(|v| **v != 0.0).count()
    );
}
