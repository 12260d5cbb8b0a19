//! Cross-module invariants on randomized corpora.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use superhedge::corpus::{random_leaf_payoff, random_tree, TreeParams, TreeShape};
use superhedge::diagnostics::{check_aip_global, check_aip_node, check_awip, check_na_node};
use superhedge::envelope::{concave_envelope_at, SampledFunction};
use superhedge::market::{conditional_support, essential_bounds, market_from_json, market_to_json};
use superhedge::oracle::{oracle_awip_tiny, oracle_full_horizon, oracle_na, oracle_one_step_1d};
use superhedge::payoff::PayoffSpec;
use superhedge::pricing::{price_claim, price_one_step, BinomialScheme};
use superhedge::{MarketTree, NodeId};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn save_load_roundtrip_on_random_trees() {
    let mut rng = rng(11);
    for i in 0..100 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                max_horizon: 4,
                max_branching: 4,
                dim: 1 + (i % 3),
                shape: TreeShape::Free,
            },
        );
        let text = market_to_json(&tree);
        let back = market_from_json(&text).unwrap_or_else(|e| panic!("tree {i}: {e}"));
        assert_eq!(tree, back, "tree {i} did not round-trip");
    }
}

#[test]
fn conditional_esssup_matches_bruteforce_over_children() {
    let mut rng = rng(12);
    for _ in 0..1000 {
        let tree = random_tree(&mut rng, TreeParams::default());
        let strike = rng.gen_range(40.0..160.0);
        let call = PayoffSpec::call(strike);
        for (id, node) in tree.nodes() {
            if node.is_leaf() {
                continue;
            }
            let supp = conditional_support(&tree, id).unwrap();
            let via_support = superhedge::conditional_esssup_of_function(&supp, &call).unwrap();
            // brute force over children, multiplicity and all
            let direct = node
                .children()
                .iter()
                .map(|&c| call.eval_price(tree.node(c).price()).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(via_support, direct);
        }
    }
}

#[test]
fn aip_node_check_agrees_with_zero_claim_envelope() {
    let mut rng = rng(13);
    for i in 0..500 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                shape: if i % 2 == 0 {
                    TreeShape::Aip
                } else {
                    TreeShape::Free
                },
                dim: 1 + (i % 2),
                ..TreeParams::default()
            },
        );
        for (id, node) in tree.nodes() {
            if node.is_leaf() {
                continue;
            }
            let verdict = check_aip_node(&tree, id).unwrap();
            let supp = conditional_support(&tree, id).unwrap();
            let zero = SampledFunction::from_support(&supp, |_| 0.0).unwrap();
            let env = concave_envelope_at(&zero, node.price()).unwrap();
            assert_eq!(verdict.holds, env.member_of_hull, "tree {i}");
            if verdict.holds {
                assert_eq!(env.value, 0.0, "zero claim must cost exactly zero");
            }
        }
    }
}

#[test]
fn essential_bounds_are_attained_on_finite_supports() {
    let mut rng = rng(24);
    for _ in 0..200 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                shape: TreeShape::Free,
                ..TreeParams::default()
            },
        );
        for (id, node) in tree.nodes() {
            if node.is_leaf() {
                continue;
            }
            let supp = conditional_support(&tree, id).unwrap();
            let bounds = essential_bounds(&supp).unwrap();
            assert!(supp.contains(&[bounds.essinf()]));
            assert!(supp.contains(&[bounds.esssup()]));
        }
    }
}

#[test]
fn aip_in_one_dimension_is_the_bound_interval() {
    let mut rng = rng(14);
    for i in 0..500 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                shape: if i % 2 == 0 {
                    TreeShape::Aip
                } else {
                    TreeShape::Free
                },
                ..TreeParams::default()
            },
        );
        for (id, node) in tree.nodes() {
            if node.is_leaf() {
                continue;
            }
            let bounds = essential_bounds(&conditional_support(&tree, id).unwrap()).unwrap();
            let expected = bounds.contains(node.price()[0]);
            assert_eq!(check_aip_node(&tree, id).unwrap().holds, expected);
        }
    }
}

#[test]
fn aip_holds_iff_nonnegative_claims_price_nonnegatively() {
    let mut rng = rng(15);
    for i in 0..200 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                shape: if i % 2 == 0 {
                    TreeShape::Aip
                } else {
                    TreeShape::Free
                },
                ..TreeParams::default()
            },
        );
        let aip = check_aip_global(&tree).unwrap().holds;
        let payoff = random_leaf_payoff(&mut rng, &tree, 0.0, 50.0);
        let surface = price_claim(&tree, &payoff).unwrap();
        if aip {
            for (_, r) in surface.iter() {
                assert!(
                    r.value >= -1e-9,
                    "tree {i}: non-negative claim priced below zero"
                );
            }
        } else {
            // some node sells a non-negative claim at a negative cost;
            // the zero claim already does so
            let zero = PayoffSpec::Pwl {
                knots: vec![(0.0, 0.0)],
            };
            let zs = price_claim(&tree, &zero).unwrap();
            assert!(
                zs.iter().any(|(_, r)| r.value < 0.0),
                "tree {i}: profit not visible on the zero claim"
            );
        }
    }
}

#[test]
fn na_oracle_and_check_agree() {
    let mut rng = rng(16);
    let mut nodes_checked = 0;
    for i in 0..700 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                shape: if i % 2 == 0 {
                    TreeShape::Aip
                } else {
                    TreeShape::Free
                },
                dim: 1 + (i % 2),
                ..TreeParams::default()
            },
        );
        for (id, node) in tree.nodes() {
            if node.is_leaf() {
                continue;
            }
            let by_oracle = oracle_na(&tree, id).unwrap();
            let by_check = check_na_node(&tree, id).unwrap().holds;
            assert_eq!(by_oracle, by_check, "tree {i} node {}", node.name());
            nodes_checked += 1;
        }
    }
    assert!(nodes_checked >= 2000, "only {nodes_checked} nodes checked");
}

#[test]
fn awip_check_agrees_with_vertex_enumeration_on_tiny_trees() {
    let mut rng = rng(17);
    let mut compared = 0;
    for i in 0..400 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                max_horizon: 3,
                max_branching: 2,
                dim: 1,
                shape: if i % 2 == 0 {
                    TreeShape::Aip
                } else {
                    TreeShape::Free
                },
            },
        );
        if tree.leaves().len() > 8 {
            continue;
        }
        for t in 0..tree.horizon() {
            let lp = check_awip(&tree, t).unwrap().is_some();
            let enumerated = oracle_awip_tiny(&tree, t).unwrap();
            assert_eq!(lp, enumerated, "tree {i} at t={t}");
            compared += 1;
        }
    }
    assert!(compared >= 200);
}

#[test]
fn pricing_is_monotone_in_the_payoff() {
    let mut rng = rng(18);
    for _ in 0..200 {
        let tree = random_tree(&mut rng, TreeParams::default());
        let leaves = tree.leaves();
        let base: BTreeMap<String, f64> = leaves
            .iter()
            .map(|&l| (tree.node(l).name().to_owned(), rng.gen_range(-10.0..40.0)))
            .collect();
        let bumped: BTreeMap<String, f64> = base
            .iter()
            .map(|(k, &v)| (k.clone(), v + rng.gen_range(0.0..5.0)))
            .collect();
        let s1 = price_claim(&tree, &PayoffSpec::Leaf { values: base }).unwrap();
        let s2 = price_claim(&tree, &PayoffSpec::Leaf { values: bumped }).unwrap();
        for (id, r) in s1.iter() {
            assert!(r.value <= s2.value(id) + 1e-9);
        }
    }
}

#[test]
fn pricing_is_cash_invariant() {
    let mut rng = rng(19);
    for _ in 0..200 {
        let tree = random_tree(&mut rng, TreeParams::default());
        let shift = rng.gen_range(-20.0..20.0);
        let base: BTreeMap<String, f64> = tree
            .leaves()
            .iter()
            .map(|&l| (tree.node(l).name().to_owned(), rng.gen_range(-10.0..40.0)))
            .collect();
        let shifted: BTreeMap<String, f64> =
            base.iter().map(|(k, &v)| (k.clone(), v + shift)).collect();
        let s1 = price_claim(&tree, &PayoffSpec::Leaf { values: base }).unwrap();
        let s2 = price_claim(&tree, &PayoffSpec::Leaf { values: shifted }).unwrap();
        for (id, r) in s1.iter() {
            assert!((r.value + shift - s2.value(id)).abs() <= 1e-9);
        }
    }
}

#[test]
fn affine_payoffs_are_their_own_price() {
    let mut rng = rng(20);
    for _ in 0..200 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                shape: TreeShape::Aip,
                ..TreeParams::default()
            },
        );
        let a = rng.gen_range(-1.0..1.0);
        let b = rng.gen_range(-10.0..10.0);
        let payoff = PayoffSpec::Pwl {
            knots: vec![(0.0, b), (1.0, a + b)],
        };
        let surface = price_claim(&tree, &payoff).unwrap();
        for (id, node) in tree.nodes() {
            let expected = a * node.price()[0] + b;
            assert!(
                (surface.value(id) - expected).abs() <= 1e-8,
                "affine claim should price to its own value"
            );
        }
    }
}

#[test]
fn backward_pass_is_consistent_with_stored_continuations() {
    let mut rng = rng(21);
    for _ in 0..100 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                shape: TreeShape::Aip,
                max_horizon: 4,
                ..TreeParams::default()
            },
        );
        let payoff = random_leaf_payoff(&mut rng, &tree, -10.0, 50.0);
        let surface = price_claim(&tree, &payoff).unwrap();
        for (id, node) in tree.nodes() {
            if node.is_leaf() {
                continue;
            }
            let child_values: BTreeMap<NodeId, f64> = node
                .children()
                .iter()
                .map(|&c| (c, surface.value(c)))
                .collect();
            let again = price_one_step(&tree, id, &child_values).unwrap();
            assert!((again.value - surface.value(id)).abs() <= 1e-9);
        }
    }
}

#[test]
fn super_hedge_certificate_on_random_trees() {
    let mut rng = rng(22);
    for _ in 0..200 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                shape: TreeShape::Aip,
                dim: 2,
                ..TreeParams::default()
            },
        );
        let payoff = random_leaf_payoff(&mut rng, &tree, -10.0, 50.0);
        let surface = price_claim(&tree, &payoff).unwrap();
        for (id, node) in tree.nodes() {
            if node.is_leaf() {
                continue;
            }
            let r = surface.get(id);
            let theta = r.hedge.as_ref().unwrap();
            for &c in node.children() {
                let gain: f64 = theta
                    .iter()
                    .zip(tree.node(c).price().iter().zip(node.price()))
                    .map(|(t, (zc, zy))| t * (zc - zy))
                    .sum();
                assert!(
                    r.value + gain >= surface.value(c) - 1e-9,
                    "hedge fails to super-replicate a child"
                );
            }
        }
    }
}

#[test]
fn small_tree_minimality_against_full_program() {
    let mut rng = rng(23);
    for i in 0..150 {
        let tree = random_tree(
            &mut rng,
            TreeParams {
                max_horizon: 4,
                max_branching: 4,
                dim: 1 + (i % 2),
                shape: if i % 3 == 0 {
                    TreeShape::Free
                } else {
                    TreeShape::Aip
                },
            },
        );
        let payoff = random_leaf_payoff(&mut rng, &tree, -20.0, 60.0);
        let dp = price_claim(&tree, &payoff).unwrap().value(tree.root());
        let lp = oracle_full_horizon(&tree, &payoff).unwrap().value;
        if dp.is_finite() || lp.is_finite() {
            assert!((dp - lp).abs() <= 1e-8, "tree {i}: {dp} vs {lp}");
        }
    }
}

#[test]
fn scheme_with_infinite_up_multiplier_prices_through_the_slope() {
    let scheme = BinomialScheme::new(100.0, vec![(0.9, f64::INFINITY)]).unwrap();
    assert!(scheme.aip());
    let call = PayoffSpec::call(80.0);
    let lattice = superhedge::price_binomial_scheme(&scheme, &call).unwrap();
    // down value 10 at price 90, hedge at the asymptotic slope 1
    assert_eq!(lattice.root_value(), 10.0 + 1.0 * (100.0 - 90.0));
    assert!(scheme.to_tree().is_err());
}

#[test]
fn one_step_market_with_duplicate_supports_prices_consistently() {
    // duplicated child prices must act through their best continuation
    let tree = MarketTree::one_step(
        vec![10.0],
        vec![(vec![8.0], 0.3), (vec![12.0], 0.4), (vec![8.0], 0.3)],
    )
    .unwrap();
    let leaves = tree.leaves();
    let values: BTreeMap<NodeId, f64> = leaves
        .iter()
        .zip([1.0, 5.0, 3.0])
        .map(|(&l, v)| (l, v))
        .collect();
    let r = price_one_step(&tree, tree.root(), &values).unwrap();
    let oracle = oracle_one_step_1d(&[(8.0, 3.0), (12.0, 5.0)], 10.0);
    assert!((r.value - oracle.value).abs() <= 1e-9);
}
