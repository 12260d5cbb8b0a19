//! Per-node and global verdicts for the absence of instantaneous profit
//! (AIP), no-arbitrage (NA) and absence of weak instantaneous profit (AWIP),
//! each with a machine-checkable certificate.
//!
//! AIP at a node means the current price lies in the convex hull of the
//! child prices; the certificate is either the hull weights or a separating
//! slope whose gain clears a strictly positive margin on every child. NA
//! strengthens membership to the relative interior, witnessed by strictly
//! positive hull weights. AWIP at time t is the feasibility of conditional
//! martingale weights on the leaves with the time-t masses pinned to the
//! physical probabilities.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::market::{conditional_support, MarketTree, NodeId};
use crate::simplex::{self, Bounds, LinearProgram, LpStatus, Relation};

/// Threshold on the interior-weight program: NA needs strictly positive
/// weights beyond this.
pub const NA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Hull weights over the support points: non-negative, summing to one,
    /// averaging to the current price.
    HullWeights(Vec<f64>),
    /// Strictly positive hull weights (witnesses relative-interior
    /// membership, hence NA).
    PositiveWeights(Vec<f64>),
    /// A strategy gaining at least `margin > 0` against every support point.
    SeparatingSlope {
        slope: Vec<f64>,
        margin: f64,
    },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AipVerdict {
    pub holds: bool,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaVerdict {
    pub holds: bool,
    pub witness: Option<Vec<f64>>,
}

/// Combined per-node verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVerdict {
    pub node: NodeId,
    pub aip: bool,
    pub na: bool,
    pub certificate: Certificate,
}

/// AIP at one node: is the current price a convex combination of the child
/// prices?
pub fn check_aip_node(tree: &MarketTree, node: NodeId) -> Result<AipVerdict> {
    let support = conditional_support(tree, node)?;
    let y = tree.node(node).price();
    let n = support.len();
    let d = tree.dim();

    let mut lp = LinearProgram::minimize(vec![0.0; n]);
    lp.bounds = vec![Bounds::NON_NEGATIVE; n];
    lp.constrain(vec![1.0; n], Relation::Eq, 1.0);
    for k in 0..d {
        let coeffs: Vec<f64> = support.points().iter().map(|z| z[k]).collect();
        lp.constrain(coeffs, Relation::Eq, y[k]);
    }
    let out = simplex::solve(&lp)?;
    match out.status {
        LpStatus::Optimal => Ok(AipVerdict {
            holds: true,
            certificate: Certificate::HullWeights(out.solution.expect("feasible weights")),
        }),
        LpStatus::Infeasible => {
            let (slope, margin) = separating_slope(support.points(), y)?;
            Ok(AipVerdict {
                holds: false,
                certificate: Certificate::SeparatingSlope { slope, margin },
            })
        }
        LpStatus::Unbounded => Err(Error::Internal(
            "membership program cannot be unbounded".into(),
        )),
    }
}

/// Separation certificate for a point outside the hull, from the improving
/// ray of the zero-payoff envelope program. The slope is normalized to unit
/// max-norm; the margin is its worst-case gain over the support.
fn separating_slope(points: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut objective = y.to_vec();
    objective.push(1.0);
    let mut lp = LinearProgram::minimize(objective);
    for z in points {
        let mut row = z.clone();
        row.push(1.0);
        lp.constrain(row, Relation::Ge, 0.0);
    }
    let out = simplex::solve(&lp)?;
    if out.status != LpStatus::Unbounded {
        return Err(Error::Internal(
            "expected an improving ray for a point outside the hull".into(),
        ));
    }
    let mut ray = out.ray.expect("unbounded LP carries a ray");
    ray.pop();
    let norm = ray.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if norm <= 0.0 {
        return Err(Error::Internal("degenerate separating ray".into()));
    }
    let slope: Vec<f64> = ray.iter().map(|r| r / norm).collect();
    let margin = points
        .iter()
        .map(|z| {
            slope
                .iter()
                .zip(z.iter().zip(y))
                .map(|(s, (zi, yi))| s * (zi - yi))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok((slope, margin))
}

/// NA at one node: does the current price lie in the relative interior of
/// the hull? Decided by maximizing the smallest hull weight.
pub fn check_na_node(tree: &MarketTree, node: NodeId) -> Result<NaVerdict> {
    let support = conditional_support(tree, node)?;
    let y = tree.node(node).price();
    let n = support.len();
    let d = tree.dim();

    // variables: weights lambda_1..n (free) and t; maximize t with
    // lambda_i >= t, sum lambda = 1, sum lambda (z_i - y) = 0.
    let mut objective = vec![0.0; n + 1];
    objective[n] = -1.0;
    let mut lp = LinearProgram::minimize(objective);
    for i in 0..n {
        let mut row = vec![0.0; n + 1];
        row[i] = 1.0;
        row[n] = -1.0;
        lp.constrain(row, Relation::Ge, 0.0);
    }
    let mut ones = vec![1.0; n];
    ones.push(0.0);
    lp.constrain(ones, Relation::Eq, 1.0);
    for k in 0..d {
        let mut row: Vec<f64> = support.points().iter().map(|z| z[k] - y[k]).collect();
        row.push(0.0);
        lp.constrain(row, Relation::Eq, 0.0);
    }
    let out = simplex::solve(&lp)?;
    match out.status {
        LpStatus::Optimal => {
            let mut sol = out.solution.expect("optimal LP carries a solution");
            let t = sol.pop().expect("interior margin variable");
            if t > NA_TOL {
                Ok(NaVerdict {
                    holds: true,
                    witness: Some(sol),
                })
            } else {
                Ok(NaVerdict {
                    holds: false,
                    witness: None,
                })
            }
        }
        // no affine combination reaches y at all
        LpStatus::Infeasible => Ok(NaVerdict {
            holds: false,
            witness: None,
        }),
        LpStatus::Unbounded => Err(Error::Internal(
            "interior-weight program is bounded by construction".into(),
        )),
    }
}

/// Combined verdict with the strongest certificate available.
pub fn check_node(tree: &MarketTree, node: NodeId) -> Result<NodeVerdict> {
    let aip = check_aip_node(tree, node)?;
    let na = check_na_node(tree, node)?;
    let certificate = match (&na.witness, aip.holds) {
        (Some(w), _) => Certificate::PositiveWeights(w.clone()),
        (None, _) => aip.certificate.clone(),
    };
    Ok(NodeVerdict {
        node,
        aip: aip.holds,
        na: na.holds,
        certificate,
    })
}

/// Global AIP report: which non-leaf nodes fail hull membership.
#[derive(Debug, Clone, PartialEq)]
pub struct AipReport {
    pub holds: bool,
    pub failing: Vec<NodeId>,
}

/// AIP holds globally exactly when every non-leaf node passes the local
/// check.
pub fn check_aip_global(tree: &MarketTree) -> Result<AipReport> {
    let mut failing = Vec::new();
    for (id, node) in tree.nodes() {
        if node.is_leaf() {
            continue;
        }
        if !check_aip_node(tree, id)?.holds {
            failing.push(id);
        }
    }
    Ok(AipReport {
        holds: failing.is_empty(),
        failing,
    })
}

/// Conditional martingale weights certifying AWIP at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AwipCertificate {
    pub t: usize,
    pub leaf_weights: BTreeMap<NodeId, f64>,
}

/// AWIP at time `t`: feasibility of non-negative leaf weights whose masses
/// match the physical probabilities on time-t atoms and which make every
/// later node a weighted average of its children, asset by asset. Returns
/// the weights when they exist.
pub fn check_awip(tree: &MarketTree, t: usize) -> Result<Option<AwipCertificate>> {
    if t >= tree.horizon() {
        return Err(Error::validation(
            None,
            format!("time {t} must be before the horizon {}", tree.horizon()),
        ));
    }
    let leaves = tree.leaves();
    let (rows, rhs) = crate::oracle::martingale_system(tree, t, &leaves);
    let n = leaves.len();
    let mut lp = LinearProgram::minimize(vec![0.0; n]);
    lp.bounds = vec![Bounds::NON_NEGATIVE; n];
    for (row, b) in rows.iter().zip(&rhs) {
        lp.constrain(row.clone(), Relation::Eq, *b);
    }
    let out = simplex::solve(&lp)?;
    match out.status {
        LpStatus::Optimal => {
            let w = out.solution.expect("feasible weights");
            // feasibility tolerance scales with the price magnitudes
            let scale = rows.iter().flatten().fold(1.0_f64, |a, &b| a.max(b.abs()));
            let tol = 1e-8 * scale;
            for (row, b) in rows.iter().zip(&rhs) {
                let lhs: f64 = row.iter().zip(&w).map(|(a, x)| a * x).sum();
                if (lhs - b).abs() > tol {
                    return Err(Error::Internal(format!(
                        "martingale weights violate their system by {}",
                        (lhs - b).abs()
                    )));
                }
            }
            let leaf_weights = leaves
                .iter()
                .zip(&w)
                .map(|(&l, &x)| (l, x.max(0.0)))
                .collect();
            Ok(Some(AwipCertificate { t, leaf_weights }))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Internal(
            "feasibility program cannot be unbounded".into(),
        )),
    }
}

/// AWIP globally: a certificate at every time before the horizon.
pub fn check_awip_global(tree: &MarketTree) -> Result<bool> {
    for t in 0..tree.horizon() {
        if check_awip(tree, t)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}
