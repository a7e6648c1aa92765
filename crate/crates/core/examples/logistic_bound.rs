//! The quadratic lower bound on the logistic function at a few anchor points.

use hbayes::model::{jj_lower_bound, lambda_of_xi, sigmoid};

fn main() {
    for xi in [0.0, 0.5, 2.0, 5.0] {
        println!("ξ = {xi}: λ(ξ) = {:.6}", lambda_of_xi(xi));
        for h in [-4.0, -xi, 0.0, xi, 4.0] {
            println!(
                "  h = {h:>5.2}  σ(h) = {:.5}  bound = {:.5}",
                sigmoid(h),
                jj_lower_bound(h, xi)
            );
        }
    }
}
