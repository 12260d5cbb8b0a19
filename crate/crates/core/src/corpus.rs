//! Seeded random market and payoff generators for cross-checks.
//!
//! Every generator takes an explicit RNG; [`rng_from_env`] builds one from
//! the `APP_SEED` environment variable so randomized runs are reproducible.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::market::{MarketTree, NodeSpec};
use crate::payoff::PayoffSpec;

pub const DEFAULT_SEED: u64 = 20260810;

/// RNG seeded from `APP_SEED` when set, otherwise from the built-in seed.
pub fn rng_from_env() -> ChaCha8Rng {
    let seed = std::env::var("APP_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    ChaCha8Rng::seed_from_u64(seed)
}

/// How node prices relate to their children in generated trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeShape {
    /// Every node's price is a convex combination of its child prices.
    Aip,
    /// Unconstrained child prices; profits may appear anywhere.
    Free,
    /// The root's children all sit strictly above the root price.
    RootProfit,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_horizon: usize,
    pub max_branching: usize,
    pub dim: usize,
    pub shape: TreeShape,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_horizon: 3,
            max_branching: 3,
            dim: 1,
            shape: TreeShape::Aip,
        }
    }
}

/// Random valid tree with the requested shape.
pub fn random_tree(rng: &mut ChaCha8Rng, params: TreeParams) -> MarketTree {
    let horizon = rng.gen_range(1..=params.max_horizon.max(1));
    let d = params.dim.max(1);
    let root_price: Vec<f64> = (0..d).map(|_| rng.gen_range(20.0..150.0)).collect();
    let mut specs = vec![NodeSpec {
        name: "r".into(),
        time: 0,
        price: root_price.clone(),
        parent: None,
        prob: 1.0,
    }];
    let mut level: Vec<(String, Vec<f64>)> = vec![("r".into(), root_price)];
    for t in 0..horizon {
        let mut next = Vec::new();
        for (name, price) in &level {
            let k = rng.gen_range(1..=params.max_branching.max(1));
            let force_profit = t == 0 && params.shape == TreeShape::RootProfit;
            let child_prices = random_children(rng, price, k, params.shape, force_profit);
            let probs = random_probs(rng, child_prices.len());
            for (i, (cp, p)) in child_prices.into_iter().zip(probs).enumerate() {
                let child = format!("{name}.{i}");
                specs.push(NodeSpec {
                    name: child.clone(),
                    time: t + 1,
                    price: cp.clone(),
                    parent: Some(name.clone()),
                    prob: p,
                });
                next.push((child, cp));
            }
        }
        level = next;
    }
    MarketTree::from_nodes(d, horizon, specs).expect("generated tree is valid")
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // pin the sum to one exactly
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    probs
}

fn random_children(
    rng: &mut ChaCha8Rng,
    price: &[f64],
    k: usize,
    shape: TreeShape,
    force_profit: bool,
) -> Vec<Vec<f64>> {
    let d = price.len();
    if force_profit {
        return (0..k.max(1))
            .map(|_| {
                price
                    .iter()
                    .map(|&y| y * rng.gen_range(1.05..1.6))
                    .collect()
            })
            .collect();
    }
    match shape {
        TreeShape::Free | TreeShape::RootProfit => (0..k)
            .map(|_| price.iter().map(|&y| y * rng.gen_range(0.5..1.6)).collect())
            .collect(),
        TreeShape::Aip => loop {
            // draw factor vectors, then shift them so a random convex
            // combination of the children equals the parent price
            let mut factors: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..d).map(|_| rng.gen_range(0.5..1.6)).collect())
                .collect();
            let weights = random_probs(rng, k);
            for j in 0..d {
                let mean: f64 = factors.iter().zip(&weights).map(|(f, w)| f[j] * w).sum();
                for f in &mut factors {
                    f[j] += 1.0 - mean;
                }
            }
            if factors.iter().all(|f| f.iter().all(|&x| x > 0.01)) {
                return factors
                    .iter()
                    .map(|f| price.iter().zip(f).map(|(&y, &x)| y * x).collect())
                    .collect();
            }
        },
    }
}

/// Random per-leaf payoff with values in `[lo, hi)`.
pub fn random_leaf_payoff(rng: &mut ChaCha8Rng, tree: &MarketTree, lo: f64, hi: f64) -> PayoffSpec {
    let values = tree
        .leaves()
        .into_iter()
        .map(|l| (tree.node(l).name().to_owned(), rng.gen_range(lo..hi)))
        .collect();
    PayoffSpec::Leaf { values }
}

/// Random convex piecewise-linear payoff on a price range.
pub fn random_convex_pwl(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> PayoffSpec {
    let n = rng.gen_range(2..=5);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let mut slope = rng.gen_range(-2.0..0.5);
    let mut v = rng.gen_range(0.0..20.0);
    let mut knots = vec![(xs[0], v)];
    for w in xs.windows(2) {
        slope += rng.gen_range(0.0..1.5);
        v += slope * (w[1] - w[0]);
        knots.push((w[1], v));
    }
    PayoffSpec::Pwl { knots }
}
