//! Dense two-phase simplex solver for the small linear programs that arise
//! in witness tests, pruning and Bellman residual computation.
//!
//! Bland's rule is used for both the entering and leaving variable, so the
//! solver cannot cycle and runs are deterministic. Problems here have at most
//! a few hundred rows and columns; a dense tableau is the right tool.

use thiserror::Error;

/// Absolute feasibility tolerance shared by all LPs in this crate.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("simplex iteration limit reached ({0} pivots)")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    BadProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Le,
    Ge,
}

/// A linear program in maximization form. Variables are nonnegative unless
/// marked free.
#[derive(Debug, Clone)]
pub struct LpProblem {
    num_vars: usize,
    objective: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<LpRow>,
}

#[derive(Debug, Clone)]
struct LpRow {
    coeffs: Vec<f64>,
    cmp: Cmp,
    rhs: f64,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { objective: f64, values: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            free: vec![false; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn maximize(&mut self, objective: Vec<f64>) -> &mut Self {
        assert_eq!(objective.len(), self.num_vars);
        self.objective = objective;
        self
    }

    pub fn mark_free(&mut self, var: usize) -> &mut Self {
        self.free[var] = true;
        self
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(LpRow { coeffs, cmp, rhs });
        self
    }

    /// Solve with the two-phase dense simplex method.
    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        Tableau::build(self)?.run()
    }
}

/// Canonical tableau: all structural variables nonnegative (free variables
/// split into positive and negative parts), all rows equalities with
/// nonnegative right-hand sides, artificial basis for phase one.
struct Tableau {
    // column layout: [split structurals | slacks | artificials]
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    num_cols: usize,
    num_structural: usize,
    artificial_start: usize,
    // mapping from original variable to (positive column, optional negative column)
    var_cols: Vec<(usize, Option<usize>)>,
    objective: Vec<f64>, // over all columns
}

const MAX_PIVOTS: usize = 200_000;

impl Tableau {
    fn build(p: &LpProblem) -> Result<Tableau, LpError> {
        for row in &p.rows {
            if row.coeffs.iter().any(|c| !c.is_finite()) || !row.rhs.is_finite() {
                return Err(LpError::BadProblem("non-finite coefficient".into()));
            }
        }

        let mut var_cols = Vec::with_capacity(p.num_vars);
        let mut next = 0usize;
        for &f in &p.free {
            if f {
                var_cols.push((next, Some(next + 1)));
                next += 2;
            } else {
                var_cols.push((next, None));
                next += 1;
            }
        }
        let num_structural = next;
        let num_slacks = p
            .rows
            .iter()
            .filter(|r| r.cmp != Cmp::Eq)
            .count();
        let m = p.rows.len();
        let num_cols = num_structural + num_slacks + m;
        let artificial_start = num_structural + num_slacks;

        let mut rows = vec![vec![0.0; num_cols]; m];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0usize; m];
        let mut slack_idx = num_structural;
        for (i, r) in p.rows.iter().enumerate() {
            let flip = r.rhs < 0.0;
            let sign = if flip { -1.0 } else { 1.0 };
            for (v, &c) in r.coeffs.iter().enumerate() {
                let (pos, neg) = var_cols[v];
                rows[i][pos] += sign * c;
                if let Some(neg) = neg {
                    rows[i][neg] -= sign * c;
                }
            }
            rhs[i] = sign * r.rhs;
            match r.cmp {
                Cmp::Eq => {}
                Cmp::Le => {
                    rows[i][slack_idx] = sign;
                    slack_idx += 1;
                }
                Cmp::Ge => {
                    rows[i][slack_idx] = -sign;
                    slack_idx += 1;
                }
            }
            rows[i][artificial_start + i] = 1.0;
            basis[i] = artificial_start + i;
        }

        let mut objective = vec![0.0; num_cols];
        for (v, &c) in p.objective.iter().enumerate() {
            let (pos, neg) = var_cols[v];
            objective[pos] += c;
            if let Some(neg) = neg {
                objective[neg] -= c;
            }
        }

        Ok(Tableau {
            rows,
            rhs,
            basis,
            num_cols,
            num_structural,
            artificial_start,
            var_cols,
            objective,
        })
    }

    fn run(mut self) -> Result<LpOutcome, LpError> {
        // Phase one: maximize the negated sum of artificials.
        let mut phase1 = vec![0.0; self.num_cols];
        for c in self.artificial_start..self.num_cols {
            phase1[c] = -1.0;
        }
        let (opt, unbounded) = self.optimize(&phase1, None)?;
        debug_assert!(!unbounded);
        if opt < -FEASIBILITY_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        self.drive_out_artificials();

        let phase2 = self.objective.clone();
        let (objective, unbounded) = self.optimize(&phase2, Some(self.artificial_start))?;
        if unbounded {
            return Ok(LpOutcome::Unbounded);
        }

        let mut col_values = vec![0.0; self.num_cols];
        for (i, &b) in self.basis.iter().enumerate() {
            col_values[b] = self.rhs[i];
        }
        let values = self
            .var_cols
            .iter()
            .map(|&(pos, neg)| col_values[pos] - neg.map_or(0.0, |n| col_values[n]))
            .collect();
        Ok(LpOutcome::Optimal { objective, values })
    }

    /// Primal simplex over the current basis; returns (objective, unbounded).
    /// Columns at or beyond `forbidden_from` never enter the basis.
    fn optimize(
        &mut self,
        cost: &[f64],
        forbidden_from: Option<usize>,
    ) -> Result<(f64, bool), LpError> {
        let limit = forbidden_from.unwrap_or(self.num_cols);
        for _ in 0..MAX_PIVOTS {
            // Recompute reduced costs from the current tableau every
            // iteration: reduced[j] = cost[j] − cost_B · (B⁻¹A)_j. Keeping
            // them incrementally drifts over long runs and can fabricate
            // entering columns with no valid pivot.
            let mut reduced = cost[..limit].to_vec();
            let mut obj = 0.0;
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = cost[b];
                if cb != 0.0 {
                    obj += cb * self.rhs[i];
                    for (j, r) in reduced.iter_mut().enumerate() {
                        *r -= cb * self.rows[i][j];
                    }
                }
            }
            // Bland: lowest-index column with positive reduced cost that
            // admits a leaving row; only if some improving column has no
            // leaving row and none pivots is the problem unbounded.
            let mut saw_unbounded = false;
            let mut pivoted = false;
            for entering in 0..limit {
                if reduced[entering] <= FEASIBILITY_TOL {
                    continue;
                }
                // Exact ratio test; Bland breaks exact ties by the lowest
                // basis variable index (tolerance bands here break the
                // anti-cycling guarantee).
                let mut leave: Option<(usize, f64)> = None;
                for i in 0..self.rows.len() {
                    let a = self.rows[i][entering];
                    if a > FEASIBILITY_TOL {
                        let ratio = (self.rhs[i] / a).max(0.0);
                        match leave {
                            None => leave = Some((i, ratio)),
                            Some((li, lr)) => {
                                if ratio < lr
                                    || (ratio == lr && self.basis[i] < self.basis[li])
                                {
                                    leave = Some((i, ratio));
                                }
                            }
                        }
                    }
                }
                match leave {
                    Some((pivot_row, _)) => {
                        self.pivot(pivot_row, entering);
                        pivoted = true;
                        break;
                    }
                    None => saw_unbounded = true,
                }
            }
            if !pivoted {
                return Ok((obj, saw_unbounded));
            }
        }
        Err(LpError::IterationLimit(MAX_PIVOTS))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for j in 0..self.num_cols {
            self.rows[row][j] /= p;
        }
        self.rhs[row] /= p;
        self.rows[row][col] = 1.0;
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for j in 0..self.num_cols {
                    self.rows[i][j] -= f * self.rows[row][j];
                }
                self.rows[i][col] = 0.0;
                self.rhs[i] -= f * self.rhs[row];
                // Feasibility invariant: rhs stays nonnegative; wipe
                // round-off noise so degenerate rows do not flip sign.
                if self.rhs[i] < 0.0 && self.rhs[i] > -FEASIBILITY_TOL {
                    self.rhs[i] = 0.0;
                }
            }
        }
        self.basis[row] = col;
    }

    /// After phase one, pivot basic artificials out where a nonzero
    /// non-artificial column exists; rows that stay artificial are redundant
    /// and harmless because their right-hand side is (numerically) zero.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.rows.len() {
            if self.basis[i] >= self.artificial_start {
                if let Some(col) = (0..self.artificial_start)
                    .find(|&j| self.rows[i][j].abs() > FEASIBILITY_TOL)
                {
                    self.pivot(i, col);
                }
            }
        }
        // Forbid re-entry by zeroing artificial columns.
        for row in &mut self.rows {
            for c in self.artificial_start..self.num_cols {
                row[c] = 0.0;
            }
        }
        let _ = self.num_structural;
    }
}
