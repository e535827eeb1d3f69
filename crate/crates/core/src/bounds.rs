//! Sufficient coupling-strength conditions for frequency synchronization.
//!
//! Each condition maps a system and a set of initial phases to the smallest
//! coupling it certifies, together with a verdict on whether the initial
//! phases satisfy that condition's own requirements:
//!
//! | condition     | coupling requirement                                          |
//! |---------------|---------------------------------------------------------------|
//! | `Theorem1`    | `K ≥ n·|ω̄_i − ω̄_j| / (P_ij · sin D)` for all pairs          |
//! | `LpTheorem2`  | minimum-sum per-edge couplings, see [`crate::coupling_opt`]   |
//! | `DorflerC3`   | `K > 2n·‖B_cᵀω̄‖ / (λ₂ · π · sinc γ_max)`                      |
//! | `JadbabaieC5` | `K > √2·σ(ω̄) / (L_* · sin D)`                                 |
//! | `NumericC28`  | `K ≥ σ(ω̄)·D / (√E₀ · L · sin D)` and a phase-dependent term  |
//!
//! Strict and non-strict inequalities are both reported as the infimum.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coupling_opt::{generate_constraints, solve_lp, LpStatus};
use crate::error::Error;
use crate::graph::complete_incidence_transpose_apply;
use crate::model::{phase_spread, KuramotoSystem, PhaseState};

/// Tolerance on `Σ φ_i = 0` for conditions that require mean-zero phases.
pub const MEAN_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Theorem1,
    LpTheorem2,
    DorflerC3,
    JadbabaieC5,
    NumericC28,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Theorem1,
        Condition::LpTheorem2,
        Condition::DorflerC3,
        Condition::JadbabaieC5,
        Condition::NumericC28,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Theorem1 => "theorem1",
            Condition::LpTheorem2 => "lp_theorem2",
            Condition::DorflerC3 => "c3",
            Condition::JadbabaieC5 => "c5",
            Condition::NumericC28 => "c28",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theorem1" => Ok(Condition::Theorem1),
            "lp" | "lp_theorem2" | "theorem2" => Ok(Condition::LpTheorem2),
            "c3" => Ok(Condition::DorflerC3),
            "c5" => Ok(Condition::JadbabaieC5),
            "c28" => Ok(Condition::NumericC28),
            other => Err(Error::InvalidParameter(format!("unknown condition '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Finite(f64),
    Infeasible { reason: String },
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            Bound::Infeasible { .. } => None,
        }
    }

    fn infeasible(reason: impl Into<String>) -> Self {
        Bound::Infeasible {
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub condition: Condition,
    pub bound: Bound,
    pub phase_constraints_ok: bool,
    /// Intermediate quantities, keyed by name. Vertex indices are 1-based.
    pub details: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(condition: Condition) -> Self {
        Self {
            condition,
            bound: Bound::Finite(0.0),
            phase_constraints_ok: false,
            details: BTreeMap::new(),
        }
    }

    fn detail(&mut self, key: &str, value: f64) {
        self.details.insert(key.to_string(), value);
    }

    /// The bound if it is finite and the initial phases are admissible.
    pub fn usable(&self) -> Option<f64> {
        self.phase_constraints_ok.then(|| self.bound.value()).flatten()
    }
}

/// Unnormalized sinc, `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Spread cap used by the analytic condition: `max(π/2, D₀)`, or `π/2`
/// when no initial phases are given.
pub fn default_cap(d0: Option<f64>) -> f64 {
    d0.map_or(FRAC_PI_2, |d| d.max(FRAC_PI_2))
}

fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `L_* = 1 / (1 + diam(G)·|E^c(G)|)`, `None` for disconnected graphs.
pub fn structural_constant(sys: &KuramotoSystem) -> Option<f64> {
    let diam = sys.graph().diameter()? as f64;
    Some(1.0 / (1.0 + diam * sys.graph().missing_edge_count() as f64))
}

/// Equal-coupling bound `max n·|ω̄_i − ω̄_j| / (P_ij · sin D)` with
/// `D = max(π/2, D₀)`.
///
/// Pairs with equal deviations are skipped. Pairs farther than two hops
/// apart are admissible only when their deviations are equal.
pub fn bound_theorem1(sys: &KuramotoSystem, d0: Option<f64>) -> BoundReport {
    let mut report = BoundReport::new(Condition::Theorem1);
    report.phase_constraints_ok = d0.map_or(true, |d| d < PI);
    let d = default_cap(d0);
    report.detail("D", d);
    if let Some(d0) = d0 {
        report.detail("D0", d0);
    }
    if d >= PI {
        report.bound = Bound::infeasible(format!("D = {d} is not below pi"));
        return report;
    }

    let n = sys.n();
    let p = sys.graph().p_matrix();
    let w = sys.omega_bar();
    let sin_d = d.sin();
    let mut best = 0.0;
    let mut binding = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (w[i] - w[j]).abs();
            if diff == 0.0 {
                continue;
            }
            let pij = p.get(i, j);
            if pij == 0 {
                report.bound = Bound::infeasible(format!(
                    "vertices {} and {} are more than two hops apart with unequal frequencies",
                    i + 1,
                    j + 1
                ));
                report.detail("far_pair_k", (i + 1) as f64);
                report.detail("far_pair_l", (j + 1) as f64);
                return report;
            }
            let k = n as f64 * diff / (f64::from(pij) * sin_d);
            if k > best {
                best = k;
                binding = Some((i, j));
            }
        }
    }
    if let Some((i, j)) = binding {
        report.detail("binding_k", (i + 1) as f64);
        report.detail("binding_l", (j + 1) as f64);
        report.detail("binding_P", f64::from(p.get(i, j)));
    }
    report.bound = Bound::Finite(best);
    report
}

/// Condition from the algebraic-connectivity family:
/// `2n‖B_cᵀω̄‖ / (λ₂·π·sinc γ_max)` with `γ_max = max(π/2, ‖B_cᵀφ(0)‖)`.
pub fn bound_c3(sys: &KuramotoSystem, initial: &PhaseState) -> BoundReport {
    let mut report = BoundReport::new(Condition::DorflerC3);
    let n = sys.n() as f64;
    let phase_norm = sum_sq(&complete_incidence_transpose_apply(&initial.phases)).sqrt();
    let freq_norm = sum_sq(&complete_incidence_transpose_apply(sys.omega_bar())).sqrt();
    let gamma = phase_norm.max(FRAC_PI_2);
    let d0 = initial.spread();
    report.phase_constraints_ok = c3_phase_ok(&initial.phases);
    report.detail("D0", d0);
    report.detail("phase_incidence_norm", phase_norm);
    report.detail("freq_incidence_norm", freq_norm);
    report.detail("gamma_max", gamma);

    if !sys.graph().is_connected() {
        report.bound = Bound::infeasible("graph is disconnected (lambda_2 = 0)");
        return report;
    }
    let lambda2 = sys.graph().algebraic_connectivity();
    report.detail("lambda_2", lambda2);
    if gamma >= PI {
        report.bound = Bound::infeasible(format!("gamma_max = {gamma} is not below pi"));
        return report;
    }
    report.bound = Bound::Finite(2.0 * n * freq_norm / (lambda2 * PI * sinc(gamma)));
    report
}

/// Condition with the structural constant `L_*`:
/// `√2·σ(ω̄) / (L_*·sin D)` with `D = max(π/2, √(2E₀))`.
pub fn bound_c5(sys: &KuramotoSystem, initial: &PhaseState) -> BoundReport {
    let mut report = BoundReport::new(Condition::JadbabaieC5);
    let e0 = sum_sq(&initial.phases);
    let d = c5_cap(e0);
    let sigma = sum_sq(sys.omega_bar()).sqrt();
    report.phase_constraints_ok = c5_phase_ok(&initial.phases);
    report.detail("D0", initial.spread());
    report.detail("E0", e0);
    report.detail("D", d);
    report.detail("sigma", sigma);

    let Some(l_star) = structural_constant(sys) else {
        report.bound = Bound::infeasible("graph is disconnected");
        return report;
    };
    report.detail("L_star", l_star);
    report.detail("missing_edges", sys.graph().missing_edge_count() as f64);
    if d >= PI {
        report.bound = Bound::infeasible(format!("D = {d} is not below pi"));
        return report;
    }
    report.bound = Bound::Finite(2f64.sqrt() * sigma / (l_star * d.sin()));
    report
}

/// Numerical condition with `D = D₀` and `L = L_*`. Reports the larger of
///
/// * `σ(ω̄)·D / (√E₀ · L · sin D)`
/// * `n·|ω̄_k − ω̄_l| / (Σ_{i∈N_k} sin(φ_k − φ_i) + Σ_{j∈N_l} sin(φ_j − φ_l))`
///
/// where the second is evaluated at the initial phases over every pair with
/// `k` at the maximum phase and `l` at the minimum.
pub fn bound_c28(sys: &KuramotoSystem, initial: &PhaseState) -> BoundReport {
    let mut report = BoundReport::new(Condition::NumericC28);
    let phases = &initial.phases;
    let e0 = sum_sq(phases);
    let d = phase_spread(phases);
    let sigma = sum_sq(sys.omega_bar()).sqrt();
    report.phase_constraints_ok = c28_phase_ok(phases);
    report.detail("D0", d);
    report.detail("D", d);
    report.detail("E0", e0);
    report.detail("sigma", sigma);

    let Some(l) = structural_constant(sys) else {
        report.bound = Bound::infeasible("graph is disconnected");
        return report;
    };
    report.detail("L", l);
    if !(d > 0.0 && d < PI) {
        report.bound = Bound::infeasible(format!("D0 = {d} must lie in (0, pi)"));
        return report;
    }

    let energy_term = sigma * d / (e0.sqrt() * l * d.sin());
    report.detail("energy_term", energy_term);

    let n = sys.n();
    let w = sys.omega_bar();
    let g = sys.graph();
    let hi = phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = phases.iter().copied().fold(f64::INFINITY, f64::min);
    let maxima: Vec<usize> = (0..n).filter(|&i| phases[i] == hi).collect();
    let minima: Vec<usize> = (0..n).filter(|&i| phases[i] == lo).collect();

    let mut pair_term: f64 = 0.0;
    for &k in &maxima {
        for &l_idx in &minima {
            let num = n as f64 * (w[k] - w[l_idx]).abs();
            if num == 0.0 {
                continue;
            }
            let den: f64 = g
                .neighbors(k)
                .iter()
                .map(|&i| (phases[k] - phases[i]).sin())
                .sum::<f64>()
                + g.neighbors(l_idx)
                    .iter()
                    .map(|&j| (phases[j] - phases[l_idx]).sin())
                    .sum::<f64>();
            if den <= 0.0 {
                report.bound = Bound::infeasible(format!(
                    "non-positive denominator {den} for pair ({}, {})",
                    k + 1,
                    l_idx + 1
                ));
                return report;
            }
            pair_term = pair_term.max(num / den);
        }
    }
    report.detail("pair_term", pair_term);
    report.bound = Bound::Finite(energy_term.max(pair_term));
    report
}

/// Per-edge minimum-sum couplings; the reported bound is the mean coupling
/// per edge of the optimal solution.
pub fn bound_lp(sys: &KuramotoSystem, d0: Option<f64>) -> BoundReport {
    let mut report = BoundReport::new(Condition::LpTheorem2);
    report.phase_constraints_ok = d0.map_or(true, |d| d < PI);
    let d = default_cap(d0);
    report.detail("D", d);
    if d >= PI {
        report.bound = Bound::infeasible(format!("D = {d} is not below pi"));
        return report;
    }
    let lp = match generate_constraints(sys, d) {
        Ok(lp) => lp,
        Err(e) => {
            report.bound = Bound::infeasible(e.to_string());
            return report;
        }
    };
    report.detail("constraints", lp.constraints.len() as f64);
    report.detail("constraints_generated", lp.generated as f64);
    match solve_lp(&lp) {
        Ok(sol) if sol.status == LpStatus::Optimal => {
            let edges = sys.graph().edge_count().max(1) as f64;
            report.detail("objective", sol.objective);
            report.bound = Bound::Finite(sol.objective / edges);
        }
        Ok(_) => report.bound = Bound::infeasible("linear program is infeasible"),
        Err(e) => report.bound = Bound::infeasible(e.to_string()),
    }
    report
}

/// Evaluates one condition for `sys` started at `initial`.
pub fn evaluate(condition: Condition, sys: &KuramotoSystem, initial: &PhaseState) -> BoundReport {
    let d0 = Some(initial.spread());
    match condition {
        Condition::Theorem1 => bound_theorem1(sys, d0),
        Condition::LpTheorem2 => bound_lp(sys, d0),
        Condition::DorflerC3 => bound_c3(sys, initial),
        Condition::JadbabaieC5 => bound_c5(sys, initial),
        Condition::NumericC28 => bound_c28(sys, initial),
    }
}

fn c5_cap(e0: f64) -> f64 {
    (2.0 * e0).sqrt().max(FRAC_PI_2)
}

fn c3_phase_ok(phases: &[f64]) -> bool {
    let norm = sum_sq(&complete_incidence_transpose_apply(phases)).sqrt();
    phase_spread(phases) < PI && norm < PI
}

fn c5_phase_ok(phases: &[f64]) -> bool {
    let e0 = sum_sq(phases);
    let sum: f64 = phases.iter().sum();
    // D = max(π/2, √(2E₀)), so E₀ < D²/2 holds exactly when √(2E₀) < π/2;
    // on the other branch the two sides coincide and the strict inequality
    // fails. Deciding the branch directly avoids a rounding coin-flip.
    let energy_ok = (2.0 * e0).sqrt() < FRAC_PI_2;
    let d = c5_cap(e0);
    phase_spread(phases) < PI && sum.abs() <= MEAN_ZERO_TOL && energy_ok && d * d / 2.0 < PI * PI / 2.0
}

fn c28_phase_ok(phases: &[f64]) -> bool {
    let d = phase_spread(phases);
    sum_sq(phases) < d * d && d * d < PI * PI
}

/// The initial-phase verdict of `condition` without computing its bound.
pub fn check_phase_constraints(condition: Condition, initial: &PhaseState) -> bool {
    let phases = &initial.phases;
    match condition {
        Condition::Theorem1 | Condition::LpTheorem2 => phase_spread(phases) < PI,
        Condition::DorflerC3 => c3_phase_ok(phases),
        Condition::JadbabaieC5 => c5_phase_ok(phases),
        Condition::NumericC28 => c28_phase_ok(phases),
    }
}
