//! Independent brute-force validators.
//!
//! Everything here deliberately avoids the envelope and pricing code paths:
//! the one-step check enumerates candidate slopes, the full-horizon check
//! solves one large program over all strategy variables, the no-arbitrage
//! check works by sign analysis, and the martingale-weight check enumerates
//! polytope vertices with its own elimination routine. Exponential cost is
//! acceptable; these run on small inputs only.

use std::fmt;

use crate::error::{Error, Result};
use crate::market::{conditional_support, MarketTree, NodeId};
use crate::payoff::PayoffSpec;
use crate::simplex::{self, Bounds, LinearProgram, LpStatus, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    SlopeEnum,
    FullLp,
    QEnum,
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            OracleMethod::SlopeEnum => "slope-enum",
            OracleMethod::FullLp => "full-lp",
            OracleMethod::QEnum => "q-enum",
        };
        write!(f, "{tag}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub method: OracleMethod,
}

/// One-step cost by slope enumeration.
///
/// The inner maximum is piecewise linear in the hedge ratio, so the minimum
/// over hedge ratios is attained at a pairwise difference quotient (or at
/// zero for a single point). Outside the support hull the value is minus
/// infinity.
pub fn oracle_one_step_1d(samples: &[(f64, f64)], y: f64) -> OracleResult {
    let lo = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if y < lo || y > hi {
        return OracleResult {
            value: f64::NEG_INFINITY,
            method: OracleMethod::SlopeEnum,
        };
    }
    let mut candidates = vec![0.0];
    for (i, &(zi, gi)) in samples.iter().enumerate() {
        for &(zj, gj) in &samples[i + 1..] {
            if zi != zj {
                candidates.push((gi - gj) / (zi - zj));
            }
        }
    }
    let mut best = f64::INFINITY;
    for theta in candidates {
        let worst = samples
            .iter()
            .map(|&(z, g)| g - theta * (z - y))
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.min(worst);
    }
    OracleResult {
        value: best,
        method: OracleMethod::SlopeEnum,
    }
}

/// Exact minimal super-replication cost at the root, over the full strategy
/// space: one variable per non-leaf node and asset, one constraint per
/// root-to-leaf path. Unbounded means a global instantaneous profit.
pub fn oracle_full_horizon(tree: &MarketTree, payoff: &PayoffSpec) -> Result<OracleResult> {
    let leaves = tree.leaves();
    if leaves.len() > 500 {
        return Err(Error::Size(format!(
            "full-horizon oracle limited to 500 paths, tree has {}",
            leaves.len()
        )));
    }
    let d = tree.dim();
    let non_leaves: Vec<NodeId> = tree
        .nodes()
        .filter(|(_, n)| !n.is_leaf())
        .map(|(id, _)| id)
        .collect();
    let col_of = |node: NodeId, k: usize| -> usize {
        1 + d * non_leaves
            .iter()
            .position(|&b| b == node)
            .expect("non-leaf")
            + k
    };
    let n_vars = 1 + d * non_leaves.len();

    let mut objective = vec![0.0; n_vars];
    objective[0] = 1.0;
    let mut lp = LinearProgram::minimize(objective);
    for &leaf in &leaves {
        let mut coeffs = vec![0.0; n_vars];
        coeffs[0] = 1.0;
        let mut cur = leaf;
        while let Some(parent) = tree.node(cur).parent() {
            for k in 0..d {
                coeffs[col_of(parent, k)] +=
                    tree.node(cur).price()[k] - tree.node(parent).price()[k];
            }
            cur = parent;
        }
        lp.constrain(coeffs, Relation::Ge, payoff.eval_leaf(tree, leaf)?);
    }
    let out = simplex::solve(&lp)?;
    let value = match out.status {
        LpStatus::Optimal => out.objective_value.expect("optimal LP carries a value"),
        LpStatus::Unbounded => f64::NEG_INFINITY,
        LpStatus::Infeasible => {
            return Err(Error::Internal(
                "super-replication program cannot be infeasible".into(),
            ))
        }
    };
    Ok(OracleResult {
        value,
        method: OracleMethod::FullLp,
    })
}

/// One-step no-arbitrage at a node.
///
/// For one asset this is sign analysis of the support increments: an
/// arbitrage exists exactly when all increments are on one side of zero
/// with at least one strictly off it. For more assets, a bounded program
/// searches for a strategy with non-negative gain everywhere and positive
/// total gain.
pub fn oracle_na(tree: &MarketTree, node: NodeId) -> Result<bool> {
    let support = conditional_support(tree, node)?;
    let y = tree.node(node).price();
    let diffs: Vec<Vec<f64>> = support
        .points()
        .iter()
        .map(|z| z.iter().zip(y).map(|(a, b)| a - b).collect())
        .collect();
    if tree.dim() == 1 {
        let has_pos = diffs.iter().any(|d| d[0] > 0.0);
        let has_neg = diffs.iter().any(|d| d[0] < 0.0);
        let up_only = diffs.iter().all(|d| d[0] >= 0.0) && has_pos;
        let down_only = diffs.iter().all(|d| d[0] <= 0.0) && has_neg;
        return Ok(!(up_only || down_only));
    }
    let d = tree.dim();
    // maximize total gain = minimize its negation, theta in a unit box
    let objective: Vec<f64> = (0..d)
        .map(|k| -diffs.iter().map(|v| v[k]).sum::<f64>())
        .collect();
    let mut lp = LinearProgram::minimize(objective);
    lp.bounds = vec![Bounds::range(-1.0, 1.0); d];
    for v in &diffs {
        lp.constrain(v.clone(), Relation::Ge, 0.0);
    }
    let out = simplex::solve(&lp)?;
    let best_gain = -out
        .objective_value
        .ok_or_else(|| Error::Internal("box program must be optimal".into()))?;
    Ok(best_gain <= 1e-10)
}

/// Absence of weak instantaneous profit at time `t` by vertex enumeration,
/// for trees with at most eight leaves.
pub fn oracle_awip_tiny(tree: &MarketTree, t: usize) -> Result<bool> {
    let leaves = tree.leaves();
    if leaves.len() > 8 {
        return Err(Error::Size(format!(
            "vertex enumeration limited to 8 leaves, tree has {}",
            leaves.len()
        )));
    }
    if t >= tree.horizon() {
        return Err(Error::validation(None, "time must be before the horizon"));
    }
    let (rows, rhs) = martingale_system(tree, t, &leaves);
    let n = leaves.len();
    let scale = rhs
        .iter()
        .fold(1.0_f64, |a, &b| a.max(b.abs()))
        .max(rows.iter().flatten().fold(0.0_f64, |a, &b| a.max(b.abs())));
    let tol = 1e-8 * scale;

    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if let Some(w) = solve_exact_subsystem(&rows, &rhs, &support) {
            if w.iter().all(|&x| x >= -1e-9) {
                let mut full = vec![0.0; n];
                for (&i, &v) in support.iter().zip(&w) {
                    full[i] = v;
                }
                let ok = rows.iter().zip(&rhs).all(|(row, &b)| {
                    let lhs: f64 = row.iter().zip(&full).map(|(a, x)| a * x).sum();
                    (lhs - b).abs() <= tol
                });
                if ok {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Rows of the weight system: time-t mass pinning plus per-node martingale
/// equalities, over one weight per leaf.
pub(crate) fn martingale_system(
    tree: &MarketTree,
    t: usize,
    leaves: &[NodeId],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = leaves.len();
    let leaf_pos = |l: NodeId| leaves.iter().position(|&x| x == l).expect("leaf");
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for a in tree.nodes_at(t) {
        let mut row = vec![0.0; n];
        for l in tree.leaves_under(a) {
            row[leaf_pos(l)] = 1.0;
        }
        rows.push(row);
        rhs.push(tree.reach_prob(a));
    }
    for (_, node) in tree.nodes() {
        if node.is_leaf() || node.time() < t {
            continue;
        }
        for k in 0..tree.dim() {
            let mut row = vec![0.0; n];
            for &c in node.children() {
                let coeff = tree.node(c).price()[k] - node.price()[k];
                for l in tree.leaves_under(c) {
                    row[leaf_pos(l)] += coeff;
                }
            }
            rows.push(row);
            rhs.push(0.0);
        }
    }
    (rows, rhs)
}

/// Solves `A[:, support] w = b` when the selected columns are independent;
/// Gaussian elimination on the normal equations, no shared code with the
/// simplex.
fn solve_exact_subsystem(rows: &[Vec<f64>], rhs: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    // normal equations: (A^T A) w = A^T b on the selected columns
    let mut m = vec![vec![0.0; k + 1]; k];
    for (r, row) in rows.iter().enumerate() {
        for i in 0..k {
            for j in 0..k {
                m[i][j] += row[support[i]] * row[support[j]];
            }
            m[i][k] += row[support[i]] * rhs[r];
        }
    }
    // elimination with partial pivoting
    for col in 0..k {
        let pivot =
            (col..k).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-12 {
            return None; // dependent columns
        }
        m.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                #[allow(clippy::needless_range_loop)]
                for c in col..=k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| m[i][k] / m[i][i]).collect())
}
