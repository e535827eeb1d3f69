//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min cᵀx` subject to linear rows and `x ≥ 0`. The tableau is
//! dense, so this is meant for the few-dozen-variable problems produced by
//! [`crate::coupling_opt`].

use serde::Serialize;

use crate::error::{Error, Result};

/// Entries at or below this magnitude are never pivoted on.
pub const PIVOT_TOL: f64 = 1e-9;
/// Reduced costs must be below `-COST_TOL` for a column to enter.
const COST_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    /// `m` constraint rows, each `cols + 1` wide (last entry is the rhs).
    rows: Vec<Vec<f64>>,
    /// Reduced costs; last entry is minus the current objective.
    cost: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..width {
                    row[k] -= f * pivot_row[k];
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for k in 0..width {
                self.cost[k] -= f * pivot_row[k];
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Loads `costs` (length `cols`) and prices out the current basis.
    fn set_costs(&mut self, costs: &[f64]) {
        let width = self.cols + 1;
        self.cost = costs.to_vec();
        self.cost.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for k in 0..width {
                    self.cost[k] -= cb * self.rows[i][k];
                }
            }
        }
    }

    /// Runs Bland-rule iterations over the columns allowed by `enterable`.
    fn optimize(&mut self, enterable: &[bool]) -> Result<LpStatus> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::NumericalBreakdown(format!(
                    "no convergence after {MAX_PIVOTS} pivots"
                )));
            }
            let Some(c) = (0..self.cols).find(|&j| enterable[j] && self.cost[j] < -COST_TOL) else {
                return Ok(LpStatus::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL {
                    let ratio = row[self.cols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Ok(LpStatus::Unbounded),
            }
            if !self.cost[self.cols].is_finite() {
                return Err(Error::NumericalBreakdown("non-finite objective".into()));
            }
        }
    }

    fn objective(&self) -> f64 {
        -self.cost[self.cols]
    }
}

/// Minimizes `costs · x` subject to `rows` and `x ≥ 0`.
pub fn minimize(costs: &[f64], rows: &[Row]) -> Result<SimplexResult> {
    let n = costs.len();
    for row in rows {
        if row.coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                what: "constraint row",
                expected: n,
                got: row.coeffs.len(),
            });
        }
        if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite constraint data".into()));
        }
    }

    // Normalize to nonnegative right-hand sides.
    let rows: Vec<Row> = rows
        .iter()
        .map(|r| {
            if r.rhs < 0.0 {
                Row {
                    coeffs: r.coeffs.iter().map(|c| -c).collect(),
                    relation: match r.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    },
                    rhs: -r.rhs,
                }
            } else {
                r.clone()
            }
        })
        .collect();

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let cols = n + n_slack + n_art;
    let art_start = n + n_slack;

    let mut table = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let (mut s, mut a) = (n, art_start);
    for (i, row) in rows.iter().enumerate() {
        table[i][..n].copy_from_slice(&row.coeffs);
        table[i][cols] = row.rhs;
        match row.relation {
            Relation::Le => {
                table[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                table[i][s] = -1.0;
                s += 1;
                table[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
            Relation::Eq => {
                table[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
    }

    let mut t = Tableau {
        rows: table,
        cost: Vec::new(),
        basis,
        cols,
        pivots: 0,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        phase1[art_start..].iter_mut().for_each(|c| *c = 1.0);
        t.set_costs(&phase1);
        t.optimize(&vec![true; cols])?;
        let scale = rows.iter().map(|r| r.rhs).fold(1.0, f64::max);
        if t.objective() > FEASIBILITY_TOL * scale {
            return Ok(SimplexResult {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
            });
        }

        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are redundant and get dropped.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_start {
                match (0..art_start).find(|&j| t.rows[r][j].abs() > 1e-9) {
                    Some(j) => {
                        t.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut phase2 = costs.to_vec();
    phase2.resize(cols, 0.0);
    t.set_costs(&phase2);
    let enterable: Vec<bool> = (0..cols).map(|j| j < art_start).collect();
    let status = t.optimize(&enterable)?;

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[i][cols].max(0.0);
        }
    }
    let objective = costs.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(SimplexResult {
        status,
        x,
        objective,
    })
}
