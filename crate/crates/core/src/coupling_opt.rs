//! Minimum-sum per-edge couplings.
//!
//! For a spread cap `D`, every vertex pair `(k, l)` with `ω̄_k ≠ ω̄_l` and
//! common neighbours `N_kl` contributes one linear constraint per choice
//! `δ ∈ {0,1}^{|N_kl|}`:
//!
//! ```text
//! (2 sin D / n)·K_kl + (sin D / n)·Σ_{m ∈ N_kl} (δ_m·K_km + (1 − δ_m)·K_lm) ≥ |ω̄_k − ω̄_l|
//! ```
//!
//! where `K_kl` is present only when `{k, l}` is an edge. Minimizing
//! `Σ K_ij` over those constraints gives per-edge couplings that keep the
//! phase spread below `D`.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{mean_zero_shift, CouplingSpec, KuramotoSystem, PhaseState};
use crate::simplex::{self, Relation, Row};
use crate::simulator::{simulate, SimConfig};

pub use crate::simplex::LpStatus;

/// Largest common-neighbour count for which the `2^|N_kl|` constraints are
/// enumerated.
pub const MAX_COMMON_NEIGHBORS: usize = 20;

/// Largest constraint violation accepted in a reported optimum.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Where a constraint came from: the vertex pair and, for each common
/// neighbour `m`, whether `K_km` (`true`) or `K_lm` (`false`) was chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub pair: (usize, usize),
    pub common: Vec<usize>,
    pub delta: Vec<bool>,
}

/// `coeffs · K ≥ rhs`, one coefficient per edge variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub origins: Vec<Provenance>,
}

impl CouplingConstraint {
    pub fn residual(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().zip(values).map(|(c, v)| c * v).sum::<f64>() - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingLP {
    /// Edge variables, lexicographic `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    /// Deduplicated constraints.
    pub constraints: Vec<CouplingConstraint>,
    /// Constraint count before deduplication.
    pub generated: usize,
    pub d: f64,
}

impl CouplingLP {
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search(&key).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LPSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
}

impl LPSolution {
    pub fn coupling_spec(&self, lp: &CouplingLP) -> CouplingSpec {
        CouplingSpec::PerEdge(
            lp.edges
                .iter()
                .zip(&self.values)
                .map(|(&(i, j), &k)| (i, j, k))
                .collect(),
        )
    }
}

fn check_cap(d: f64) -> Result<()> {
    if !(d > 0.0 && d < PI) {
        return Err(Error::InvalidParameter(format!("D must lie in (0, pi), got {d}")));
    }
    Ok(())
}

/// Enumerates the δ-indexed constraints for cap `d`.
///
/// Pairs more than two hops apart with unequal deviations yield a
/// constraint with no variables, which makes the program infeasible.
pub fn generate_constraints(sys: &KuramotoSystem, d: f64) -> Result<CouplingLP> {
    check_cap(d)?;
    let g = sys.graph();
    let n = sys.n();
    let w = sys.omega_bar();
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let index: HashMap<(usize, usize), usize> =
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let var = |a: usize, b: usize| index[&(a.min(b), a.max(b))];
    let unit = d.sin() / n as f64;

    let mut pairs = Vec::new();
    for k in 0..n {
        for l in (k + 1)..n {
            if w[k] == w[l] {
                continue;
            }
            let common = g.common_neighbors(k, l);
            if common.len() > MAX_COMMON_NEIGHBORS {
                return Err(Error::TooManyCommonNeighbors {
                    k: k + 1,
                    l: l + 1,
                    common: common.len(),
                });
            }
            pairs.push((k, l, common));
        }
    }

    let mut constraints: Vec<CouplingConstraint> = Vec::new();
    let mut seen: HashMap<(Vec<u64>, u64), usize> = HashMap::new();
    let mut generated = 0;
    for (k, l, common) in pairs {
        let rhs = (w[k] - w[l]).abs();
        let mut base = vec![0.0; edges.len()];
        if g.has_edge(k, l) {
            base[var(k, l)] = 2.0 * unit;
        }
        for mask in 0u64..(1u64 << common.len()) {
            let mut coeffs = base.clone();
            let mut delta = Vec::with_capacity(common.len());
            for (bit, &m) in common.iter().enumerate() {
                let pick_k = mask >> bit & 1 == 1;
                delta.push(pick_k);
                let v = if pick_k { var(k, m) } else { var(l, m) };
                coeffs[v] += unit;
            }
            generated += 1;
            let origin = Provenance {
                pair: (k, l),
                common: common.clone(),
                delta,
            };
            let key = (
                coeffs.iter().map(|c| c.to_bits()).collect::<Vec<_>>(),
                rhs.to_bits(),
            );
            match seen.get(&key) {
                Some(&idx) => constraints[idx].origins.push(origin),
                None => {
                    seen.insert(key, constraints.len());
                    constraints.push(CouplingConstraint {
                        coeffs,
                        rhs,
                        origins: vec![origin],
                    });
                }
            }
        }
    }

    Ok(CouplingLP {
        edges,
        constraints,
        generated,
        d,
    })
}

/// Minimizes the total coupling subject to the generated constraints.
pub fn solve_lp(lp: &CouplingLP) -> Result<LPSolution> {
    let costs = vec![1.0; lp.edges.len()];
    let rows: Vec<Row> = lp
        .constraints
        .iter()
        .map(|c| Row {
            coeffs: c.coeffs.clone(),
            relation: Relation::Ge,
            rhs: c.rhs,
        })
        .collect();
    let res = simplex::minimize(&costs, &rows)?;
    if res.status == LpStatus::Optimal {
        if let Some(worst) = lp
            .constraints
            .iter()
            .map(|c| c.residual(&res.x))
            .filter(|r| *r < -FEASIBILITY_TOL)
            .reduce(f64::min)
        {
            return Err(Error::NumericalBreakdown(format!(
                "reported optimum violates a constraint by {}",
                -worst
            )));
        }
    }
    Ok(LPSolution {
        values: res.x,
        objective: res.objective,
        status: res.status,
    })
}

/// Smallest common coupling satisfying every generated constraint, found by
/// substituting `K_ij = K` into each one.
pub fn solve_equal_coupling(sys: &KuramotoSystem, d: f64) -> Result<f64> {
    let lp = generate_constraints(sys, d)?;
    let mut k: f64 = 0.0;
    for c in &lp.constraints {
        let total: f64 = c.coeffs.iter().sum();
        if total <= 0.0 {
            let (a, b) = c.origins[0].pair;
            return Err(Error::FarPairUnequalFrequencies { k: a + 1, l: b + 1 });
        }
        k = k.max(c.rhs / total);
    }
    Ok(k)
}

/// Constraints whose residual at `values` is within `tol` of zero.
pub fn binding_constraints<'a>(
    lp: &'a CouplingLP,
    values: &[f64],
    tol: f64,
) -> impl Iterator<Item = &'a CouplingConstraint> + 'a {
    let values = values.to_vec();
    lp.constraints
        .iter()
        .filter(move |c| c.residual(&values).abs() <= tol)
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Random boundary configurations to test.
    pub trials: usize,
    /// Full simulations from random initial phases with `D₀ ≤ D`.
    pub simulations: usize,
    pub sim: SimConfig,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            simulations: 4,
            sim: SimConfig {
                t_max: 200.0,
                ..SimConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Counterexample {
    /// A configuration with `φ_k − φ_l = D` where the spread still grows.
    Boundary {
        /// 1-indexed `(k, l)`; `k` holds the maximum phase.
        pair: (usize, usize),
        phases: Vec<f64>,
        growth: f64,
    },
    Simulation {
        initial: Vec<f64>,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub passed: bool,
    pub boundary_trials: usize,
    pub simulations: usize,
    /// Largest value of the boundary growth rate seen; non-positive on pass.
    pub worst_growth: f64,
    pub counterexample: Option<Counterexample>,
}

/// Slack allowed on the boundary growth rate.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Randomized check that per-edge couplings keep the spread below `d`.
///
/// Each boundary trial takes an ordered pair `(k, l)` (cycling through all
/// of them), sets `φ_k − φ_l = D`, draws every common-neighbour phase
/// uniformly in `[φ_l, φ_k]`, and evaluates
///
/// ```text
/// ω̄_k − ω̄_l − (2K_kl/n) sin D − Σ_{m∈N_kl} ((K_km/n) sin(φ_k − φ_m) + (K_lm/n) sin(φ_m − φ_l))
/// ```
///
/// which must not be positive. Then `simulations` full runs from random
/// initial phases with spread at most `d` must synchronize without the
/// spread ever exceeding `d`.
pub fn verify_solution<R: Rng + ?Sized>(
    sys: &KuramotoSystem,
    values: &[f64],
    d: f64,
    opts: &VerifyOptions,
    rng: &mut R,
) -> Result<Verification> {
    check_cap(d)?;
    let n = sys.n();
    let g = sys.graph();
    let edges: Vec<(usize, usize)> = g.edges().collect();
    if values.len() != edges.len() {
        return Err(Error::DimensionMismatch {
            what: "edge couplings",
            expected: edges.len(),
            got: values.len(),
        });
    }
    let mut k_mat = vec![vec![0.0; n]; n];
    for (&(i, j), &k) in edges.iter().zip(values) {
        k_mat[i][j] = k;
        k_mat[j][i] = k;
    }
    let w = sys.omega_bar();
    let inv_n = 1.0 / n as f64;
    let sin_d = d.sin();

    let ordered: Vec<(usize, usize)> = (0..n)
        .flat_map(|k| (0..n).filter(move |&l| l != k).map(move |l| (k, l)))
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut counterexample = None;

    if !ordered.is_empty() {
        for t in 0..opts.trials {
            let (k, l) = ordered[t % ordered.len()];
            let mut phases = vec![0.0; n];
            phases[k] = d / 2.0;
            phases[l] = -d / 2.0;
            let mut growth = w[k] - w[l] - 2.0 * k_mat[k][l] * inv_n * sin_d;
            for m in g.common_neighbors(k, l) {
                let pm = rng.gen_range(-d / 2.0..=d / 2.0);
                phases[m] = pm;
                growth -= k_mat[k][m] * inv_n * (phases[k] - pm).sin()
                    + k_mat[l][m] * inv_n * (pm - phases[l]).sin();
            }
            if growth > worst {
                worst = growth;
                if growth > BOUNDARY_TOL {
                    counterexample = Some(Counterexample::Boundary {
                        pair: (k + 1, l + 1),
                        phases,
                        growth,
                    });
                }
            }
        }
    }

    let mut sims_run = 0;
    if counterexample.is_none() && opts.simulations > 0 {
        let spec = CouplingSpec::PerEdge(
            edges.iter().zip(values).map(|(&(i, j), &k)| (i, j, k)).collect(),
        );
        let coupled = sys.with_coupling(&spec)?;
        let mut cfg = opts.sim;
        cfg.pis_bound = Some(d);
        cfg.dt = cfg.dt.min(stable_step(&coupled));
        for _ in 0..opts.simulations {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=d)).collect();
            let initial: PhaseState = mean_zero_shift(&raw);
            sims_run += 1;
            let reason = match simulate(&coupled, &initial, &cfg) {
                Ok(traj) if traj.pis_violated_at.is_some() => Some(format!(
                    "spread exceeded D at t = {}",
                    traj.pis_violated_at.unwrap_or_default()
                )),
                Ok(traj) if !traj.is_synchronized() => {
                    Some("did not synchronize within the horizon".to_string())
                }
                Ok(_) => None,
                Err(e) => Some(e.to_string()),
            };
            if let Some(reason) = reason {
                counterexample = Some(Counterexample::Simulation {
                    initial: initial.phases,
                    reason,
                });
                break;
            }
        }
    }

    Ok(Verification {
        passed: counterexample.is_none(),
        boundary_trials: opts.trials,
        simulations: sims_run,
        worst_growth: worst,
        counterexample,
    })
}

/// Step size that keeps RK4 well inside its stability region: the Jacobian
/// spectrum is bounded by twice the largest weighted degree over `n`.
pub fn stable_step(sys: &KuramotoSystem) -> f64 {
    let n = sys.n();
    let max_row = (0..n)
        .map(|i| sys.graph().neighbors(i).iter().map(|&j| sys.coupling(i, j)).sum::<f64>())
        .fold(0.0, f64::max)
        / n as f64;
    if max_row > 0.0 {
        0.5 / max_row
    } else {
        f64::INFINITY
    }
}
