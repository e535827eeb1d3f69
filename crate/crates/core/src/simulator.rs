//! Fixed-step RK4 integration of the normalized system with recording,
//! frequency-synchronization detection and invariant-set monitoring.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{phase_spread, recenter, KuramotoSystem, PhaseState};

/// Slack above the monitored spread bound before a sample counts as a
/// violation.
pub const PIS_TOLERANCE: f64 = 1e-9;

/// Consecutive recorded samples that must satisfy the sync condition before
/// the run stops early.
pub const SYNC_STREAK: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Largest allowed `max φ̇ − min φ̇` for a state to count as synchronized.
    pub sync_tol: f64,
    pub record_every: usize,
    /// Spread bound `D` to monitor, if any.
    pub pis_bound: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_max: 100.0,
            sync_tol: 1e-6,
            record_every: 10,
            pis_bound: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_max > 0.0 && self.dt < self.t_max) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt < t_max, got dt = {}, t_max = {}",
                self.dt, self.t_max
            )));
        }
        if !(self.sync_tol > 0.0) {
            return Err(Error::InvalidParameter("sync_tol must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        if let Some(d) = self.pis_bound {
            if !(d > 0.0 && d < std::f64::consts::PI) {
                return Err(Error::InvalidParameter(format!(
                    "monitored bound must lie in (0, pi), got {d}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub state: PhaseState,
    pub velocity: Vec<f64>,
    pub spread: f64,
    pub lyapunov: f64,
}

impl Sample {
    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn velocity_spread(&self) -> f64 {
        phase_spread(&self.velocity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Outcome {
    Synchronized { time: f64 },
    NotSynchronized,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
    pub pis_violated_at: Option<f64>,
    /// Largest spread seen over every integration step, not just recorded
    /// samples.
    pub max_spread: f64,
}

impl Trajectory {
    pub fn is_synchronized(&self) -> bool {
        matches!(self.outcome, Outcome::Synchronized { .. })
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always has the t = 0 sample")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.samples.first().map_or(0, |s| s.state.phases.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("phi_{i}")));
        header.extend((1..=n).map(|i| format!("dphi_{i}")));
        header.push("D_t".into());
        header.push("V".into());
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = Vec::with_capacity(2 * n + 3);
            row.push(s.time().to_string());
            row.extend(s.state.phases.iter().map(f64::to_string));
            row.extend(s.velocity.iter().map(f64::to_string));
            row.push(s.spread.to_string());
            row.push(s.lyapunov.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Which time frame a frequency is reported in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// The deviation-normalized system; the locked frequency is zero.
    Normalized,
    /// The original system with raw intrinsic frequencies.
    Raw,
}

/// Common frequency of a synchronized run.
pub fn sync_frequency(traj: &Trajectory, sys: &KuramotoSystem, frame: Frame) -> Result<f64> {
    if !traj.is_synchronized() {
        return Err(Error::NotSynchronized);
    }
    let v = &traj.last().velocity;
    let normalized = v.iter().sum::<f64>() / v.len() as f64;
    Ok(match frame {
        Frame::Normalized => normalized,
        Frame::Raw => sys.mean_omega() + normalized,
    })
}

struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn step(&mut self, sys: &KuramotoSystem, phases: &mut [f64], dt: f64) {
        let n = phases.len();
        sys.rhs_into(phases, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = phases[i] + 0.5 * dt * self.k1[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = phases[i] + 0.5 * dt * self.k2[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = phases[i] + dt * self.k3[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k4);
        for i in 0..n {
            phases[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates from `initial` with classical RK4 at fixed `dt`.
///
/// The phase mean is re-centred to zero after every step. A sample is
/// recorded at `t = 0`, every `record_every` steps and at the final step.
/// The run stops once [`SYNC_STREAK`] consecutive recorded samples have a
/// velocity spread within `sync_tol`.
pub fn simulate(sys: &KuramotoSystem, initial: &PhaseState, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = sys.n();
    if initial.phases.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial phases",
            expected: n,
            got: initial.phases.len(),
        });
    }

    let mut phases = initial.phases.clone();
    recenter(&mut phases);
    let mut scratch = Rk4Scratch::new(n);
    let steps = (cfg.t_max / cfg.dt).round() as usize;

    let make_sample = |phases: &[f64], time: f64| Sample {
        state: PhaseState {
            phases: phases.to_vec(),
            time,
        },
        velocity: sys.rhs(phases),
        spread: phase_spread(phases),
        lyapunov: sys.lyapunov(phases),
    };

    let violates = |spread: f64| cfg.pis_bound.is_some_and(|d| spread > d + PIS_TOLERANCE);

    let first = make_sample(&phases, 0.0);
    let mut max_spread = first.spread;
    let mut pis_violated_at = violates(first.spread).then_some(0.0);
    let mut streak = usize::from(first.velocity_spread() <= cfg.sync_tol);
    let mut samples = vec![first];
    let mut outcome = Outcome::NotSynchronized;

    for step in 1..=steps {
        scratch.step(sys, &mut phases, cfg.dt);
        recenter(&mut phases);
        let t = step as f64 * cfg.dt;
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite { time: t });
        }

        let spread = phase_spread(&phases);
        max_spread = max_spread.max(spread);
        if pis_violated_at.is_none() && violates(spread) {
            pis_violated_at = Some(t);
        }

        if step % cfg.record_every == 0 || step == steps {
            let sample = make_sample(&phases, t);
            if sample.velocity_spread() <= cfg.sync_tol {
                streak += 1;
            } else {
                streak = 0;
            }
            samples.push(sample);
            if streak >= SYNC_STREAK {
                outcome = Outcome::Synchronized { time: t };
                break;
            }
        }
    }

    Ok(Trajectory {
        samples,
        outcome,
        pis_violated_at,
        max_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{random_diameter2_graph, Graph};
    use crate::model::{mean_zero_shift, CouplingSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn example1(eps: f64) -> KuramotoSystem {
        let g = Graph::new(3, [(0, 1), (0, 2)]).unwrap();
        let omega = vec![2.0 - eps, -1.0 + eps / 2.0, -1.0 + eps / 2.0];
        KuramotoSystem::new(g, omega, &CouplingSpec::Scalar(3.0)).unwrap()
    }

    #[test]
    fn rejects_bad_config() {
        let sys = example1(0.1);
        let init = mean_zero_shift(&[0.0; 3]);
        for cfg in [
            SimConfig { dt: 0.0, ..Default::default() },
            SimConfig { dt: 200.0, ..Default::default() },
            SimConfig { sync_tol: 0.0, ..Default::default() },
            SimConfig { record_every: 0, ..Default::default() },
            SimConfig { pis_bound: Some(4.0), ..Default::default() },
        ] {
            assert!(simulate(&sys, &init, &cfg).is_err());
        }
    }

    #[test]
    fn non_finite_state_aborts() {
        let g = Graph::complete(2).unwrap();
        let sys = KuramotoSystem::new(g, vec![1e308, -1e308], &CouplingSpec::Scalar(1.0)).unwrap();
        let err = simulate(&sys, &mean_zero_shift(&[0.0, 0.0]), &SimConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn example1_drifts_without_locking() {
        let sys = example1(0.1);
        let init = mean_zero_shift(&[0.0, FRAC_PI_2, -FRAC_PI_2]);
        let cfg = SimConfig { t_max: 50.0, ..Default::default() };
        let traj = simulate(&sys, &init, &cfg).unwrap();
        assert_eq!(traj.outcome, Outcome::NotSynchronized);
        for w in traj.samples.windows(2) {
            assert!(w[1].lyapunov < w[0].lyapunov);
        }
        let at10 = traj
            .samples
            .iter()
            .filter(|s| s.time() <= 10.0 + 1e-9)
            .map(|s| s.state.phases[0].abs())
            .fold(0.0, f64::max);
        assert!(traj.last().state.phases[0].abs() > at10);
        assert!(sync_frequency(&traj, &sys, Frame::Normalized).is_err());
    }

    #[test]
    fn homogeneous_network_collapses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = rng.gen_range(4..8);
            let g = random_diameter2_graph(n, &mut rng).unwrap();
            let sys = KuramotoSystem::new(g, vec![1.0; n], &CouplingSpec::Scalar(2.0)).unwrap();
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..PI * 0.95)).collect();
            let cfg = SimConfig { t_max: 400.0, sync_tol: 1e-9, ..Default::default() };
            let traj = simulate(&sys, &mean_zero_shift(&raw), &cfg).unwrap();
            assert!(traj.is_synchronized());
            assert!(traj.last().spread < 1e-6, "spread {}", traj.last().spread);
            let f = sync_frequency(&traj, &sys, Frame::Raw).unwrap();
            assert!((f - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn example2_theorem1_coupling_stays_inside() {
        let g = Graph::new(4, [(0, 1), (0, 2), (1, 2), (0, 3)]).unwrap();
        let sys = KuramotoSystem::new(g, vec![-0.1, 0.0, 0.3, -0.2], &CouplingSpec::Scalar(2.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..FRAC_PI_2)).collect();
            let cfg = SimConfig { pis_bound: Some(FRAC_PI_2), t_max: 200.0, ..Default::default() };
            let traj = simulate(&sys, &mean_zero_shift(&raw), &cfg).unwrap();
            assert!(traj.is_synchronized());
            assert_eq!(traj.pis_violated_at, None);
            let v = &traj.last().velocity;
            assert!(v.iter().all(|x| x.abs() <= cfg.sync_tol));
        }
    }

    #[test]
    fn recorded_samples_are_mean_zero_and_ordered() {
        let sys = example1(0.1);
        let traj = simulate(
            &sys,
            &mean_zero_shift(&[0.4, 2.0, -1.0]),
            &SimConfig { t_max: 20.0, ..Default::default() },
        )
        .unwrap();
        assert_eq!(traj.samples[0].time(), 0.0);
        for w in traj.samples.windows(2) {
            assert!(w[1].time() > w[0].time());
        }
        assert!(traj.samples.iter().all(|s| s.state.mean().abs() <= 1e-9));
    }

    #[test]
    fn sync_frequency_frames() {
        let g = Graph::complete(3).unwrap();
        for (omega, want) in [([3.0, 3.0, 3.0], 3.0), ([1.0, 2.0, 3.0], 2.0)] {
            let sys = KuramotoSystem::new(g.clone(), omega.to_vec(), &CouplingSpec::Scalar(6.0)).unwrap();
            let traj = simulate(&sys, &mean_zero_shift(&[0.1, 0.0, -0.2]), &SimConfig::default()).unwrap();
            assert!(traj.is_synchronized());
            assert!((sync_frequency(&traj, &sys, Frame::Raw).unwrap() - want).abs() < 1e-9);
            assert!(sync_frequency(&traj, &sys, Frame::Normalized).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn lyapunov_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(3..8);
            let g = random_diameter2_graph(n, &mut rng).unwrap();
            let omega: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let k = rng.gen_range(0.5..6.0);
            let sys = KuramotoSystem::new(g, omega, &CouplingSpec::Scalar(k)).unwrap();
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..PI)).collect();
            let cfg = SimConfig { t_max: 30.0, ..Default::default() };
            let traj = simulate(&sys, &mean_zero_shift(&raw), &cfg).unwrap();
            for w in traj.samples.windows(2) {
                assert!(w[1].lyapunov <= w[0].lyapunov + 1e-8);
            }
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let sys = example1(0.1);
        let init = mean_zero_shift(&[0.0, FRAC_PI_2, -FRAC_PI_2]);
        let run = |dt: f64| {
            let cfg = SimConfig { dt, t_max: 2.0, record_every: 1, ..Default::default() };
            simulate(&sys, &init, &cfg).unwrap().last().state.phases.clone()
        };
        let reference = run(0.0005);
        let err = |dt: f64| {
            run(dt)
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(0.04) / err(0.02);
        assert!(ratio >= 8.0, "ratio {ratio}");
    }
}
