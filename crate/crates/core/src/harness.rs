//! Worked examples and Monte-Carlo comparisons of the coupling conditions.
//!
//! Every random draw comes from a ChaCha8 generator seeded with the run's
//! seed and switched to stream `(n << 32) | index` for sample `index` at
//! size `n`. Samples are therefore independent of scheduling, and parallel
//! runs reproduce serial ones exactly.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::{self, File};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    bound_c28, bound_c3, bound_c5, bound_lp, bound_theorem1, check_phase_constraints, BoundReport,
    Condition,
};
use crate::coupling_opt::{
    binding_constraints, generate_constraints, solve_equal_coupling, solve_lp, LpStatus,
    Provenance, Verification, VerifyOptions,
};
use crate::error::{Error, Result};
use crate::graph::{random_diameter2_graph, Graph};
use crate::io::write_json;
use crate::model::{mean_zero_shift, CouplingSpec, KuramotoSystem, PhaseState};
use crate::simulator::{simulate, SimConfig, Trajectory};

/// Per-sample generator; see the module docs for the stream layout.
pub fn sample_rng(seed: u64, n: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Phase samples per `n` (first experiment) or graphs per `n` (second).
    pub samples: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub frequency_interval: (f64, f64),
    pub phase_interval: (f64, f64),
}

impl ExperimentConfig {
    pub fn experiment1() -> Self {
        Self {
            seed: 0,
            samples: 100_000,
            n_min: 5,
            n_max: 10,
            frequency_interval: (0.0, 1.0),
            phase_interval: (0.0, PI),
        }
    }

    pub fn experiment2() -> Self {
        Self {
            samples: 1000,
            n_max: 9,
            ..Self::experiment1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.samples == 0 {
            return bad("samples must be >= 1".into());
        }
        if self.n_min < 3 || self.n_min > self.n_max {
            return bad(format!("need 3 <= n_min <= n_max, got {}..={}", self.n_min, self.n_max));
        }
        for (name, (lo, hi)) in [
            ("frequency", self.frequency_interval),
            ("phase", self.phase_interval),
        ] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return bad(format!("{name} interval ({lo}, {hi}) is empty"));
            }
        }
        Ok(())
    }

    fn sizes(&self) -> impl Iterator<Item = usize> {
        self.n_min..=self.n_max
    }
}

/// One aggregated cell: a fraction (first experiment) or a mean bound
/// (second experiment) for a given size and condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub n: usize,
    pub condition: Condition,
    /// `None` when no sample contributed.
    pub value: Option<f64>,
    pub count: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub experiment: &'static str,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub checks: Vec<Check>,
    pub wall_time_s: f64,
    pub version: &'static str,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn record(&self, n: usize, condition: Condition) -> Option<&Record> {
        self.records
            .iter()
            .find(|r| r.n == n && r.condition == condition)
    }

    pub fn value(&self, n: usize, condition: Condition) -> Option<f64> {
        self.record(n, condition).and_then(|r| r.value)
    }

    /// Writes `results.csv` (n, condition, value, log10_value, count,
    /// total) and `metadata.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_writer(File::create(dir.join("results.csv"))?);
        w.write_record(["n", "condition", "value", "log10_value", "count", "total"])?;
        for r in &self.records {
            let (value, log) = match r.value {
                Some(v) => (v.to_string(), if v > 0.0 { v.log10().to_string() } else { String::new() }),
                None => (String::new(), String::new()),
            };
            w.write_record([
                r.n.to_string(),
                r.condition.name().to_string(),
                value,
                log,
                r.count.to_string(),
                r.total.to_string(),
            ])?;
        }
        w.flush()?;
        #[derive(Serialize)]
        struct Meta<'a> {
            experiment: &'a str,
            config: &'a ExperimentConfig,
            checks: &'a [Check],
            wall_time_s: f64,
            version: &'a str,
        }
        write_json(
            &dir.join("metadata.json"),
            &Meta {
                experiment: self.experiment,
                config: &self.config,
                checks: &self.checks,
                wall_time_s: self.wall_time_s,
                version: self.version,
            },
        )
    }
}

fn sample_phases<R: Rng>(rng: &mut R, n: usize, (lo, hi): (f64, f64)) -> PhaseState {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    mean_zero_shift(&raw)
}

/// The conditions whose admissible sets are compared against the analytic
/// one.
pub const COMPETITORS: [Condition; 3] = [
    Condition::DorflerC3,
    Condition::JadbabaieC5,
    Condition::NumericC28,
];

/// Slack on the "fractions do not grow with n" comparison.
pub const FRACTION_SLACK: f64 = 0.02;

/// Fraction of random initial phase vectors admitted by each condition.
pub fn experiment1(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut records = Vec::new();
    for n in cfg.sizes() {
        let counts = (0..cfg.samples)
            .into_par_iter()
            .map(|idx| {
                let mut rng = sample_rng(cfg.seed, n, idx);
                let st = sample_phases(&mut rng, n, cfg.phase_interval);
                Condition::ALL.map(|c| usize::from(check_phase_constraints(c, &st)))
            })
            .reduce(|| [0; 5], |a, b| std::array::from_fn(|i| a[i] + b[i]));
        for (c, count) in Condition::ALL.into_iter().zip(counts) {
            records.push(Record {
                n,
                condition: c,
                value: Some(count as f64 / cfg.samples as f64),
                count,
                total: cfg.samples,
            });
        }
    }

    let mut result = ExperimentResult {
        experiment: "exp1",
        config: cfg.clone(),
        records,
        checks: Vec::new(),
        wall_time_s: 0.0,
        version: env!("CARGO_PKG_VERSION"),
    };
    let ours_all_one = cfg.sizes().all(|n| {
        [Condition::Theorem1, Condition::LpTheorem2]
            .iter()
            .all(|&c| result.value(n, c) == Some(1.0))
    });
    result.checks.push(Check::new(
        "theorem1 and lp admit every sample",
        ours_all_one,
        "fraction == 1 at every n",
    ));
    for c in COMPETITORS {
        let fractions: Vec<f64> = cfg.sizes().filter_map(|n| result.value(n, c)).collect();
        let monotone = fractions.windows(2).all(|w| w[1] <= w[0] + FRACTION_SLACK);
        result.checks.push(Check::new(
            format!("{c} fraction non-increasing in n"),
            monotone,
            format!("{fractions:?} (slack {FRACTION_SLACK})"),
        ));
    }
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Every condition evaluated on one random diameter-two instance.
#[derive(Debug, Clone)]
pub struct Exp2Sample {
    pub graph: Graph,
    pub initial: PhaseState,
    pub reports: Vec<BoundReport>,
}

pub fn experiment2_sample(cfg: &ExperimentConfig, n: usize, idx: usize) -> Result<Exp2Sample> {
    let mut rng = sample_rng(cfg.seed, n, idx);
    let graph = random_diameter2_graph(n, &mut rng)?;
    let initial = sample_phases(&mut rng, n, cfg.phase_interval);
    let (lo, hi) = cfg.frequency_interval;
    let omega: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    let sys = KuramotoSystem::new(graph.clone(), omega, &CouplingSpec::Scalar(0.0))?;
    let d0 = Some(initial.spread());
    let lp = bound_lp(&sys, d0);
    if lp.bound.value().is_none() {
        return Err(Error::NumericalBreakdown(format!(
            "coupling LP failed on a diameter-two instance (n = {n}, sample {idx}): {:?}",
            lp.bound
        )));
    }
    let reports = vec![
        bound_theorem1(&sys, d0),
        lp,
        bound_c3(&sys, &initial),
        bound_c5(&sys, &initial),
        bound_c28(&sys, &initial),
    ];
    Ok(Exp2Sample {
        graph,
        initial,
        reports,
    })
}

/// Mean coupling bound of each condition over random diameter-two graphs.
///
/// A condition's mean is taken over the samples whose initial phases it
/// admits; `count` records how many that was. A condition that admits no
/// sample at some `n` has no mean there.
pub fn experiment2(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut records = Vec::new();
    for n in cfg.sizes() {
        let samples: Vec<Exp2Sample> = (0..cfg.samples)
            .into_par_iter()
            .map(|idx| experiment2_sample(cfg, n, idx))
            .collect::<Result<_>>()?;
        for (ci, c) in Condition::ALL.into_iter().enumerate() {
            let (sum, count) = samples
                .iter()
                .filter_map(|s| s.reports[ci].usable())
                .fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
            records.push(Record {
                n,
                condition: c,
                value: (count > 0).then(|| sum / count as f64),
                count,
                total: cfg.samples,
            });
        }
    }

    let mut result = ExperimentResult {
        experiment: "exp2",
        config: cfg.clone(),
        records,
        checks: Vec::new(),
        wall_time_s: 0.0,
        version: env!("CARGO_PKG_VERSION"),
    };
    for (name, passed, detail) in ordering_checks(&result) {
        result.checks.push(Check::new(name, passed, detail));
    }
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

fn ordering_checks(result: &ExperimentResult) -> Vec<(String, bool, String)> {
    let sizes: Vec<usize> = result.config.sizes().collect();
    let mut out = Vec::new();
    let mut ok = true;
    let mut detail = Vec::new();
    for &n in &sizes {
        let ours = result.value(n, Condition::Theorem1);
        for c in COMPETITORS {
            let theirs = result.value(n, c);
            // A condition that admits no sample certifies no coupling at
            // all, so any finite mean of ours is below it.
            let below = match (ours, theirs) {
                (Some(a), Some(b)) => a < b,
                (Some(_), None) => true,
                (None, _) => false,
            };
            ok &= below;
            detail.push(format!("n={n} {c}: {ours:?} vs {theirs:?}"));
        }
    }
    out.push((
        "mean theorem1 below every competitor".to_string(),
        ok,
        detail.join("; "),
    ));

    let mut ok = true;
    let mut detail = Vec::new();
    for &n in &sizes {
        let lp = result.value(n, Condition::LpTheorem2);
        let t1 = result.value(n, Condition::Theorem1);
        ok &= matches!((lp, t1), (Some(a), Some(b)) if a <= b);
        detail.push(format!("n={n}: {lp:?} vs {t1:?}"));
    }
    out.push((
        "mean lp average coupling at most theorem1".to_string(),
        ok,
        detail.join("; "),
    ));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Example1Report {
    pub eps: f64,
    pub equilibrium: Vec<f64>,
    pub equilibrium_rhs_norm: f64,
    pub synchronized: bool,
    pub final_velocity_spread: f64,
    pub lyapunov_initial: f64,
    pub lyapunov_final: f64,
    pub lyapunov_strictly_decreasing: bool,
    pub near_equilibrium_synchronized: bool,
    pub checks: Vec<Check>,
}

impl Example1Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Horizon for the star-graph run.
pub const EXAMPLE1_HORIZON: f64 = 50.0;

/// Star graph with centre frequency deviation `2 − ε` and leaves at
/// `−1 + ε/2`, coupled with `K = 3`.
pub fn example1_system(eps: f64) -> Result<KuramotoSystem> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 2), got {eps}")));
    }
    let g = Graph::new(3, [(0, 1), (0, 2)])?;
    let omega = vec![2.0 - eps, -1.0 + eps / 2.0, -1.0 + eps / 2.0];
    KuramotoSystem::new(g, omega, &CouplingSpec::Scalar(3.0))
}

/// Runs the star-graph counterexample: a stable equilibrium exists, yet the
/// run from `(0, π/2, −π/2)` never locks and its potential keeps falling.
pub fn example1(eps: f64, out: Option<&Path>) -> Result<(Trajectory, Example1Report)> {
    let sys = example1_system(eps)?;
    let a = (1.0 - eps / 2.0).asin();
    let equilibrium = vec![2.0 / 3.0 * a, -a / 3.0, -a / 3.0];
    let eq_norm = sys.rhs(&equilibrium).iter().map(|v| v * v).sum::<f64>().sqrt();

    let cfg = SimConfig {
        t_max: EXAMPLE1_HORIZON,
        ..SimConfig::default()
    };
    let traj = simulate(&sys, &mean_zero_shift(&[0.0, FRAC_PI_2, -FRAC_PI_2]), &cfg)?;
    let first = &traj.samples[0];
    let last = traj.last();
    let strictly_decreasing = traj
        .samples
        .windows(2)
        .all(|w| w[1].lyapunov < w[0].lyapunov);

    let perturbed: Vec<f64> = equilibrium
        .iter()
        .zip([1e-3, -1e-3, 0.5e-3])
        .map(|(p, d)| p + d)
        .collect();
    let near = simulate(&sys, &mean_zero_shift(&perturbed), &SimConfig::default())?;

    let final_spread = last.velocity_spread();
    let checks = vec![
        Check::new(
            "equilibrium is stationary",
            eq_norm < 1e-12,
            format!("|rhs| = {eq_norm:e}"),
        ),
        Check::new(
            "no synchronization by the horizon",
            !traj.is_synchronized() && final_spread > 0.1,
            format!("final velocity spread {final_spread}"),
        ),
        Check::new(
            "potential falls by more than one",
            last.lyapunov < first.lyapunov - 1.0,
            format!("V(0) = {}, V(end) = {}", first.lyapunov, last.lyapunov),
        ),
        Check::new(
            "potential strictly decreasing",
            strictly_decreasing,
            format!("{} samples", traj.samples.len()),
        ),
        Check::new(
            "perturbed equilibrium locks",
            near.is_synchronized(),
            format!("{:?}", near.outcome),
        ),
    ];

    let report = Example1Report {
        eps,
        equilibrium,
        equilibrium_rhs_norm: eq_norm,
        synchronized: traj.is_synchronized(),
        final_velocity_spread: final_spread,
        lyapunov_initial: first.lyapunov,
        lyapunov_final: last.lyapunov,
        lyapunov_strictly_decreasing: strictly_decreasing,
        near_equilibrium_synchronized: near.is_synchronized(),
        checks,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        traj.write_csv(File::create(dir.join("trajectory.csv"))?)?;
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok((traj, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct BindingConstraint {
    pub rhs: f64,
    /// `(i, j, coefficient)` with 1-indexed endpoints.
    pub terms: Vec<(usize, usize, f64)>,
    pub origins: Vec<Provenance>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Example2Report {
    /// `(i, j, P_ij)` for `i < j`, 1-indexed.
    pub p_matrix: Vec<(usize, usize, u32)>,
    pub theorem1_coupling: f64,
    pub theorem1_binding_pair: (usize, usize),
    pub theorem1_total: f64,
    pub equal_coupling_lp: f64,
    pub constraints_generated: usize,
    pub constraints: usize,
    pub lp_objective: f64,
    /// `(i, j, K_ij)`, 1-indexed.
    pub lp_couplings: Vec<(usize, usize, f64)>,
    pub min_residual: f64,
    pub binding: Vec<BindingConstraint>,
    pub verification: Verification,
    pub checks: Vec<Check>,
}

impl Example2Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn example2_system() -> Result<KuramotoSystem> {
    let g = Graph::new(4, [(0, 1), (0, 2), (1, 2), (0, 3)])?;
    KuramotoSystem::new(g, vec![-0.1, 0.0, 0.3, -0.2], &CouplingSpec::Scalar(0.0))
}

/// Four oscillators on a triangle with a pendant edge: equal-coupling
/// bound, minimum-sum couplings and a randomized check of the latter.
pub fn example2(seed: u64, out: Option<&Path>) -> Result<Example2Report> {
    let sys = example2_system()?;
    let n = sys.n();
    let p = sys.graph().p_matrix();
    let p_matrix: Vec<(usize, usize, u32)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i + 1, j + 1, p.get(i, j)))
        .collect();

    let t1 = bound_theorem1(&sys, None);
    let k = t1
        .bound
        .value()
        .ok_or_else(|| Error::InvalidParameter("equal-coupling bound infeasible".into()))?;
    let binding_pair = (t1.details["binding_k"] as usize, t1.details["binding_l"] as usize);
    let total = k * sys.graph().edge_count() as f64;
    let d = FRAC_PI_2;
    let equal_lp = solve_equal_coupling(&sys, d)?;

    let lp = generate_constraints(&sys, d)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible);
    }
    let min_residual = lp
        .constraints
        .iter()
        .map(|c| c.residual(&sol.values))
        .fold(f64::INFINITY, f64::min);
    let binding = binding_constraints(&lp, &sol.values, 1e-9)
        .map(|c| BindingConstraint {
            rhs: c.rhs,
            terms: lp
                .edges
                .iter()
                .zip(&c.coeffs)
                .filter(|(_, &v)| v != 0.0)
                .map(|(&(i, j), &v)| (i + 1, j + 1, v))
                .collect(),
            origins: c.origins.clone(),
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verification = crate::coupling_opt::verify_solution(
        &sys,
        &sol.values,
        d,
        &VerifyOptions::default(),
        &mut rng,
    )?;

    let expected_p = [(1, 2, 3), (1, 3, 3), (1, 4, 2), (2, 3, 3), (2, 4, 1), (3, 4, 1)];
    let checks = vec![
        Check::new(
            "P matrix",
            p_matrix == expected_p,
            format!("{p_matrix:?}"),
        ),
        Check::new(
            "equal coupling K = 2 from pair (3, 4)",
            (k - 2.0).abs() < 1e-12 && binding_pair == (3, 4),
            format!("K = {k}, pair {binding_pair:?}"),
        ),
        Check::new("equal coupling total 8", (total - 8.0).abs() < 1e-12, format!("{total}")),
        Check::new(
            "eleven constraints",
            lp.generated == 11 && lp.constraints.len() == 11,
            format!("{} generated, {} distinct", lp.generated, lp.constraints.len()),
        ),
        Check::new(
            "minimum total coupling 5",
            (sol.objective - 5.0).abs() < 1e-8,
            format!("{}", sol.objective),
        ),
        Check::new("solution feasible", min_residual >= -1e-8, format!("{min_residual:e}")),
        Check::new(
            "randomized verification",
            verification.passed,
            format!("worst growth {:e}", verification.worst_growth),
        ),
    ];

    let report = Example2Report {
        p_matrix,
        theorem1_coupling: k,
        theorem1_binding_pair: binding_pair,
        theorem1_total: total,
        equal_coupling_lp: equal_lp,
        constraints_generated: lp.generated,
        constraints: lp.constraints.len(),
        lp_objective: sol.objective,
        lp_couplings: lp
            .edges
            .iter()
            .zip(&sol.values)
            .map(|(&(i, j), &v)| (i + 1, j + 1, v))
            .collect(),
        min_residual,
        binding,
        verification,
        checks,
    };
    if let Some(dir) = out {
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(samples: usize) -> ExperimentConfig {
        ExperimentConfig {
            seed: 42,
            samples,
            ..ExperimentConfig::experiment1()
        }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::experiment1().validate().is_ok());
        assert!(ExperimentConfig { samples: 0, ..small(1) }.validate().is_err());
        assert!(ExperimentConfig { n_min: 2, ..small(1) }.validate().is_err());
        assert!(ExperimentConfig { phase_interval: (1.0, 1.0), ..small(1) }.validate().is_err());
    }

    #[test]
    fn streams_are_distinct_and_stable() {
        let a: u64 = sample_rng(1, 5, 0).gen();
        let b: u64 = sample_rng(1, 5, 1).gen();
        let c: u64 = sample_rng(1, 6, 0).gen();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, sample_rng(1, 5, 0).gen::<u64>());
    }

    #[test]
    fn experiment1_is_deterministic() {
        let cfg = small(500);
        let a = experiment1(&cfg).unwrap();
        let b = experiment1(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        for n in 5..=10 {
            assert_eq!(a.value(n, Condition::Theorem1), Some(1.0));
            for c in COMPETITORS {
                let f = a.value(n, c).unwrap();
                assert!((0.0..=1.0).contains(&f));
            }
        }
    }

    #[test]
    fn experiment2_is_deterministic() {
        let cfg = ExperimentConfig {
            n_max: 6,
            ..small(10)
        };
        let a = experiment2(&cfg).unwrap();
        let b = experiment2(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.record(5, Condition::Theorem1).unwrap().count, 10);
    }

    #[test]
    fn example1_rejects_bad_eps() {
        assert!(example1_system(0.0).is_err());
        assert!(example1_system(2.0).is_err());
    }
}
