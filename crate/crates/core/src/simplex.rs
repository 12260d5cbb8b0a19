//! Dense two-phase simplex with Bland's rule.
//!
//! Sized for the tiny programs this library generates (at most a few hundred
//! rows), so a plain tableau is used throughout. Unbounded programs return a
//! certifying ray: a direction that preserves feasibility and strictly
//! improves the objective.

use crate::error::{Error, Result};

/// Pivot entries smaller than this are treated as zero.
pub const PIVOT_TOL: f64 = 1e-10;
/// Feasibility tolerance on (row-scaled) constraints.
pub const FEAS_TOL: f64 = 1e-9;
/// A column with no usable pivot entries certifies unboundedness only when
/// its reduced cost clears this; split free variables leave behind exact
/// negations of basic columns whose reduced costs are pure rounding
/// residue, and those must not be mistaken for rays.
const UNBOUNDED_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation,
            rhs,
        }
    }
}

/// Per-variable bounds in the extended reals.
#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const FREE: Bounds = Bounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub const NON_NEGATIVE: Bounds = Bounds {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn range(lower: f64, upper: f64) -> Self {
        Bounds { lower, upper }
    }
}

/// Minimize `objective . x` subject to the constraints and variable bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

impl LinearProgram {
    /// A program over free variables with the given objective.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            constraints: Vec::new(),
            bounds: vec![Bounds::FREE; n],
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints
            .push(Constraint::new(coeffs, relation, rhs));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub solution: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub ray: Option<Vec<f64>>,
}

impl LpOutcome {
    fn infeasible() -> Self {
        LpOutcome {
            status: LpStatus::Infeasible,
            solution: None,
            objective_value: None,
            ray: None,
        }
    }
}

// How an original variable maps onto non-negative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shift { col: usize, lower: f64 },
    Negate { col: usize, upper: f64 },
    Split { pos: usize, neg: usize },
}

/// Solves the program. Dimension mismatches are reported as
/// [`Error::Format`]; numerically degenerate but well-formed inputs always
/// produce an outcome.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.objective.len();
    if lp.bounds.len() != n {
        return Err(Error::Format(format!(
            "{} bounds for {} variables",
            lp.bounds.len(),
            n
        )));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(Error::Format(format!(
                "constraint {i} has {} coefficients for {} variables",
                c.coeffs.len(),
                n
            )));
        }
        if c.coeffs.iter().any(|x| !x.is_finite()) || !c.rhs.is_finite() {
            return Err(Error::Format(format!(
                "constraint {i} has non-finite entries"
            )));
        }
    }
    if lp.objective.iter().any(|x| !x.is_finite()) {
        return Err(Error::Format("objective has non-finite entries".into()));
    }
    for (i, b) in lp.bounds.iter().enumerate() {
        if b.lower.is_nan() || b.upper.is_nan() {
            return Err(Error::Format(format!("variable {i} has NaN bounds")));
        }
        if b.lower > b.upper {
            return Ok(LpOutcome::infeasible());
        }
    }

    // Substitute every variable onto non-negative columns.
    let mut maps = Vec::with_capacity(n);
    let mut n_cols = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // (col, upper bound on column)
    for b in &lp.bounds {
        let map = match (b.lower.is_finite(), b.upper.is_finite()) {
            (true, false) => VarMap::Shift {
                col: n_cols,
                lower: b.lower,
            },
            (true, true) => {
                extra_rows.push((n_cols, b.upper - b.lower));
                VarMap::Shift {
                    col: n_cols,
                    lower: b.lower,
                }
            }
            (false, true) => VarMap::Negate {
                col: n_cols,
                upper: b.upper,
            },
            (false, false) => {
                let m = VarMap::Split {
                    pos: n_cols,
                    neg: n_cols + 1,
                };
                n_cols += 1;
                m
            }
        };
        n_cols += 1;
        maps.push(map);
    }

    // Rows over transformed columns, as equalities with slack columns.
    struct Row {
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    }
    let mut rows = Vec::with_capacity(lp.constraints.len() + extra_rows.len());
    for c in &lp.constraints {
        let mut coeffs = vec![0.0; n_cols];
        let mut shift = 0.0;
        for (a, map) in c.coeffs.iter().zip(&maps) {
            match *map {
                VarMap::Shift { col, lower } => {
                    coeffs[col] += a;
                    shift += a * lower;
                }
                VarMap::Negate { col, upper } => {
                    coeffs[col] -= a;
                    shift += a * upper;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        rows.push(Row {
            coeffs,
            relation: c.relation,
            rhs: c.rhs - shift,
        });
    }
    for &(col, ub) in &extra_rows {
        let mut coeffs = vec![0.0; n_cols];
        coeffs[col] = 1.0;
        rows.push(Row {
            coeffs,
            relation: Relation::Le,
            rhs: ub,
        });
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let total = n_cols + n_slack + m; // structural + slack + artificial
    let rhs_col = total;

    // tableau rows 0..m are constraints, row m the phase-1 costs, row m+1 the
    // phase-2 costs; both cost rows hold reduced costs throughout.
    let mut t = vec![vec![0.0; total + 1]; m + 2];
    let mut slack_idx = 0usize;
    for (i, row) in rows.iter().enumerate() {
        // row scaling keeps the feasibility tolerance meaningful across magnitudes
        let scale = row.coeffs.iter().fold(1.0_f64, |acc, &x| acc.max(x.abs()));
        let sign = if row.rhs / scale < 0.0 { -1.0 } else { 1.0 };
        for (j, &a) in row.coeffs.iter().enumerate() {
            t[i][j] = sign * a / scale;
        }
        if row.relation != Relation::Eq {
            let s = match row.relation {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => unreachable!(),
            };
            t[i][n_cols + slack_idx] = sign * s;
            slack_idx += 1;
        }
        t[i][n_cols + n_slack + i] = 1.0;
        t[i][rhs_col] = sign * row.rhs / scale;
    }

    // phase-1 reduced costs under the artificial basis
    for j in 0..=total {
        let mut acc = 0.0;
        for row in t.iter().take(m) {
            acc += row[j];
        }
        t[m][j] = -acc;
    }
    t[m][n_cols + n_slack..total].fill(0.0);
    // phase-2 reduced costs: artificial basis has zero cost
    for (map, &c) in maps.iter().zip(&lp.objective) {
        match *map {
            VarMap::Shift { col, .. } => t[m + 1][col] += c,
            VarMap::Negate { col, .. } => t[m + 1][col] -= c,
            VarMap::Split { pos, neg } => {
                t[m + 1][pos] += c;
                t[m + 1][neg] -= c;
            }
        }
    }

    let mut basis: Vec<usize> = (n_cols + n_slack..total).collect();
    let is_artificial = |j: usize| j >= n_cols + n_slack;

    // phase 1 only needs feasibility: stop once the artificial mass is gone.
    // Its objective is bounded below by zero, so unboundedness is off.
    let outcome = run_simplex(
        &mut t,
        &mut basis,
        m,
        total,
        m,
        Some(FEAS_TOL),
        false,
        |_| true,
    );
    if !matches!(outcome, SimplexEnd::Optimal) {
        return Err(Error::Internal("phase 1 did not terminate cleanly".into()));
    }
    if -t[m][rhs_col] > FEAS_TOL {
        return Ok(LpOutcome::infeasible());
    }

    // drive basic artificials out where the row has usable entries
    for i in 0..m {
        if is_artificial(basis[i]) {
            if let Some(j) = (0..n_cols + n_slack).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut basis, i, j, total);
            }
        }
    }

    // phase 2
    let end = run_simplex(&mut t, &mut basis, m, total, m + 1, None, true, |j| {
        !is_artificial(j)
    });
    if matches!(end, SimplexEnd::Stalled) {
        return Err(Error::Internal("pivot limit exceeded".into()));
    }
    match end {
        SimplexEnd::Optimal => {
            let mut cols = vec![0.0; total];
            for (i, &b) in basis.iter().enumerate() {
                if !is_artificial(b) {
                    cols[b] = t[i][rhs_col];
                }
            }
            let solution: Vec<f64> = maps
                .iter()
                .map(|map| match *map {
                    VarMap::Shift { col, lower } => lower + cols[col],
                    VarMap::Negate { col, upper } => upper - cols[col],
                    VarMap::Split { pos, neg } => cols[pos] - cols[neg],
                })
                .collect();
            let objective_value = lp.objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
            Ok(LpOutcome {
                status: LpStatus::Optimal,
                solution: Some(solution),
                objective_value: Some(objective_value),
                ray: None,
            })
        }
        SimplexEnd::Unbounded(j) => {
            let mut d = vec![0.0; total];
            d[j] = 1.0;
            for (i, &b) in basis.iter().enumerate() {
                if !is_artificial(b) {
                    d[b] = -t[i][j];
                }
            }
            let ray: Vec<f64> = maps
                .iter()
                .map(|map| match *map {
                    VarMap::Shift { col, .. } => d[col],
                    VarMap::Negate { col, .. } => -d[col],
                    VarMap::Split { pos, neg } => d[pos] - d[neg],
                })
                .collect();
            Ok(LpOutcome {
                status: LpStatus::Unbounded,
                solution: None,
                objective_value: None,
                ray: Some(ray),
            })
        }
        SimplexEnd::Stalled => unreachable!("handled above"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SimplexEnd {
    Optimal,
    Unbounded(usize),
    Stalled,
}

// Pivots on near-zero elements blow the tableau up, so the leaving rule
// prefers the numerically largest pivot among rows tied at the minimum
// ratio. After a long run of degenerate pivots it falls back to the strict
// least-index rule, whose termination guarantee then applies; a generous
// pivot cap backstops both.
#[allow(clippy::too_many_arguments)]
fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    m: usize,
    total: usize,
    cost_row: usize,
    stop_at: Option<f64>,
    may_be_unbounded: bool,
    allowed: impl Fn(usize) -> bool,
) -> SimplexEnd {
    let rhs_col = total;
    let cap = 10_000 + 200 * (m + total);
    let mut iterations = 0usize;
    let mut degenerate_streak = 0usize;
    loop {
        if let Some(target) = stop_at {
            if -t[cost_row][rhs_col] <= target {
                return SimplexEnd::Optimal;
            }
        }
        if iterations > cap {
            return SimplexEnd::Stalled;
        }
        let strict_bland = degenerate_streak > 500;

        // Bland: smallest-index improving column that admits a pivot
        let mut entered = None;
        for j in 0..total {
            if !allowed(j) || t[cost_row][j] >= -PIVOT_TOL {
                continue;
            }
            match leaving_row(t, basis, m, rhs_col, j, strict_bland) {
                Some(i) => {
                    entered = Some((i, j));
                    break;
                }
                // an unblocked column certifies a ray only when its cost is
                // decisively negative; dead columns carry rounding residue
                None if may_be_unbounded && t[cost_row][j] < -UNBOUNDED_TOL => {
                    return SimplexEnd::Unbounded(j);
                }
                None => {}
            }
        }
        let Some((i, j)) = entered else {
            return SimplexEnd::Optimal;
        };
        let before = -t[cost_row][rhs_col];
        pivot(t, basis, i, j, total);
        let after = -t[cost_row][rhs_col];
        iterations += 1;
        if after < before - 1e-12 * (1.0 + before.abs()) {
            degenerate_streak = 0;
        } else {
            degenerate_streak += 1;
        }
    }
}

fn leaving_row(
    t: &[Vec<f64>],
    basis: &[usize],
    m: usize,
    rhs_col: usize,
    j: usize,
    strict_bland: bool,
) -> Option<usize> {
    let mut best_ratio = f64::INFINITY;
    for row in t.iter().take(m) {
        if row[j] > PIVOT_TOL {
            best_ratio = best_ratio.min(row[rhs_col] / row[j]);
        }
    }
    if best_ratio == f64::INFINITY {
        return None;
    }
    let window = 1e-9 * (1.0 + best_ratio.abs());
    let mut choice: Option<usize> = None;
    for i in 0..m {
        if t[i][j] <= PIVOT_TOL || t[i][rhs_col] / t[i][j] > best_ratio + window {
            continue;
        }
        choice = Some(match choice {
            None => i,
            Some(c) => {
                let better = if strict_bland {
                    basis[i] < basis[c]
                } else {
                    t[i][j] > t[c][j] || (t[i][j] == t[c][j] && basis[i] < basis[c])
                };
                if better {
                    i
                } else {
                    c
                }
            }
        });
    }
    choice
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize, total: usize) {
    let rhs_col = total;
    let p = t[row][col];
    for x in t[row].iter_mut().take(rhs_col + 1) {
        *x /= p;
    }
    t[row][col] = 1.0;
    for i in 0..t.len() {
        if i == row {
            continue;
        }
        let f = t[i][col];
        if f != 0.0 {
            #[allow(clippy::needless_range_loop)]
            for j in 0..=rhs_col {
                t[i][j] -= f * t[row][j];
            }
            t[i][col] = 0.0;
        }
    }
    basis[row] = col;
}
