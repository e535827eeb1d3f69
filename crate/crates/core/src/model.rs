//! The deviation-normalized Kuramoto system
//!
//! ```text
//! dφ_i/dt = ω̄_i + Σ_{j ∈ N_i} (K_ij / n) · sin(φ_j − φ_i)
//! ```
//!
//! together with its potential (Lyapunov) function and the phase-vector
//! conventions used throughout the crate. Phases are kept unwrapped in ℝⁿ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// How couplings are specified: one value for every edge, or one value per
/// edge (0-indexed endpoints, any orientation).
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    Scalar(f64),
    PerEdge(Vec<(usize, usize, f64)>),
}

#[derive(Debug, Clone)]
pub struct KuramotoSystem {
    graph: Graph,
    omega: Vec<f64>,
    omega_bar: Vec<f64>,
    couplings: Vec<Vec<f64>>,
}

impl KuramotoSystem {
    pub fn new(graph: Graph, omega: Vec<f64>, coupling: &CouplingSpec) -> Result<Self> {
        let n = graph.n();
        if omega.len() != n {
            return Err(Error::DimensionMismatch {
                what: "omega",
                expected: n,
                got: omega.len(),
            });
        }
        let mut couplings = vec![vec![0.0; n]; n];
        match coupling {
            CouplingSpec::Scalar(k) => {
                if !(*k >= 0.0) || !k.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "scalar coupling must be finite and nonnegative, got {k}"
                    )));
                }
                for (i, j) in graph.edges() {
                    couplings[i][j] = *k;
                    couplings[j][i] = *k;
                }
            }
            CouplingSpec::PerEdge(list) => {
                let mut seen = vec![vec![false; n]; n];
                for &(a, b, k) in list {
                    if a >= n || b >= n || a == b || !graph.has_edge(a, b) {
                        return Err(Error::CouplingOnNonEdge { i: a, j: b });
                    }
                    if !(k >= 0.0) || !k.is_finite() {
                        return Err(Error::NegativeCoupling { i: a, j: b, value: k });
                    }
                    if seen[a][b] {
                        return Err(Error::InvalidParameter(format!(
                            "coupling for edge ({a}, {b}) given twice"
                        )));
                    }
                    seen[a][b] = true;
                    seen[b][a] = true;
                    couplings[a][b] = k;
                    couplings[b][a] = k;
                }
                if let Some((i, j)) = graph.edges().find(|&(i, j)| !seen[i][j]) {
                    return Err(Error::MissingCoupling { i, j });
                }
            }
        }
        let omega_bar = deviations(&omega);
        Ok(Self {
            graph,
            omega,
            omega_bar,
            couplings,
        })
    }

    /// Same graph and frequencies with a different coupling assignment.
    pub fn with_coupling(&self, coupling: &CouplingSpec) -> Result<Self> {
        Self::new(self.graph.clone(), self.omega.clone(), coupling)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Frequency deviations from the population mean.
    pub fn omega_bar(&self) -> &[f64] {
        &self.omega_bar
    }

    pub fn mean_omega(&self) -> f64 {
        self.omega.iter().sum::<f64>() / self.n() as f64
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i][j]
    }

    /// Couplings of each edge, in the graph's lexicographic edge order.
    pub fn edge_couplings(&self) -> Vec<((usize, usize), f64)> {
        self.graph
            .edges()
            .map(|(i, j)| ((i, j), self.couplings[i][j]))
            .collect()
    }

    /// Right-hand side of the normalized system at `phases`.
    pub fn rhs(&self, phases: &[f64]) -> Vec<f64> {
        let mut out = self.omega_bar.clone();
        self.rhs_into(phases, &mut out);
        out
    }

    pub(crate) fn rhs_into(&self, phases: &[f64], out: &mut [f64]) {
        let inv_n = 1.0 / self.n() as f64;
        out.copy_from_slice(&self.omega_bar);
        for (i, j) in self.graph.edges() {
            let s = self.couplings[i][j] * inv_n * (phases[j] - phases[i]).sin();
            out[i] += s;
            out[j] -= s;
        }
    }

    /// `V(φ) = −Σ ω̄_k φ_k − Σ_{ij∈E} (K_ij/n) cos(φ_i − φ_j)`.
    pub fn lyapunov(&self, phases: &[f64]) -> f64 {
        let inv_n = 1.0 / self.n() as f64;
        let linear: f64 = self
            .omega_bar
            .iter()
            .zip(phases)
            .map(|(w, p)| w * p)
            .sum();
        let coupling: f64 = self
            .graph
            .edges()
            .map(|(i, j)| self.couplings[i][j] * inv_n * (phases[i] - phases[j]).cos())
            .sum();
        -linear - coupling
    }
}

pub fn deviations(omega: &[f64]) -> Vec<f64> {
    let mean = omega.iter().sum::<f64>() / omega.len() as f64;
    omega.iter().map(|w| w - mean).collect()
}

/// Phase vector at a point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub phases: Vec<f64>,
    pub time: f64,
}

impl PhaseState {
    /// Mean-zero state at `t = 0`.
    pub fn initial(phases: &[f64]) -> Self {
        mean_zero_shift(phases)
    }

    pub fn spread(&self) -> f64 {
        phase_spread(&self.phases)
    }

    pub fn mean(&self) -> f64 {
        mean(&self.phases)
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `max(φ) − min(φ)`.
pub fn phase_spread(phases: &[f64]) -> f64 {
    let (lo, hi) = phases
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            (lo.min(p), hi.max(p))
        });
    if phases.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Subtracts the mean phase from every component.
pub fn mean_zero_shift(phases: &[f64]) -> PhaseState {
    let mut shifted = phases.to_vec();
    recenter(&mut shifted);
    PhaseState {
        phases: shifted,
        time: 0.0,
    }
}

pub(crate) fn recenter(phases: &mut [f64]) {
    if phases.is_empty() {
        return;
    }
    let m = mean(phases);
    phases.iter_mut().for_each(|p| *p -= m);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn star3(k: f64, eps: f64) -> KuramotoSystem {
        let g = Graph::new(3, [(0, 1), (0, 2)]).unwrap();
        let omega = vec![2.0 - eps, -1.0 + eps / 2.0, -1.0 + eps / 2.0];
        KuramotoSystem::new(g, omega, &CouplingSpec::Scalar(k)).unwrap()
    }

    #[test]
    fn builds_example1_star() {
        let sys = star3(3.0, 0.1);
        assert_eq!(sys.coupling(0, 1), 3.0);
        assert_eq!(sys.coupling(0, 2), 3.0);
        assert_eq!(sys.coupling(1, 2), 0.0);
        assert!(sys.omega_bar().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn deviations_from_mean() {
        let g = Graph::complete(3).unwrap();
        let sys = KuramotoSystem::new(g.clone(), vec![5.0; 3], &CouplingSpec::Scalar(1.0)).unwrap();
        assert_eq!(sys.omega_bar(), &[0.0, 0.0, 0.0]);
        let sys = KuramotoSystem::new(g, vec![1.0, 2.0, 3.0], &CouplingSpec::Scalar(1.0)).unwrap();
        assert_eq!(sys.omega_bar(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn construction_errors() {
        let g = Graph::path(3).unwrap();
        assert!(matches!(
            KuramotoSystem::new(g.clone(), vec![0.0; 2], &CouplingSpec::Scalar(1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(KuramotoSystem::new(g.clone(), vec![0.0; 3], &CouplingSpec::Scalar(-1.0)).is_err());
        assert!(matches!(
            KuramotoSystem::new(
                g.clone(),
                vec![0.0; 3],
                &CouplingSpec::PerEdge(vec![(0, 1, 1.0), (1, 2, -0.5)])
            ),
            Err(Error::NegativeCoupling { .. })
        ));
        assert!(matches!(
            KuramotoSystem::new(
                g.clone(),
                vec![0.0; 3],
                &CouplingSpec::PerEdge(vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
            ),
            Err(Error::CouplingOnNonEdge { i: 0, j: 2 })
        ));
        assert!(matches!(
            KuramotoSystem::new(g, vec![0.0; 3], &CouplingSpec::PerEdge(vec![(1, 0, 1.0)])),
            Err(Error::MissingCoupling { i: 1, j: 2 })
        ));
    }

    #[test]
    fn per_edge_is_symmetric() {
        let g = Graph::path(3).unwrap();
        let sys = KuramotoSystem::new(
            g,
            vec![0.0; 3],
            &CouplingSpec::PerEdge(vec![(1, 0, 1.5), (1, 2, 0.5)]),
        )
        .unwrap();
        assert_eq!(sys.coupling(0, 1), 1.5);
        assert_eq!(sys.coupling(1, 0), 1.5);
        assert_eq!(sys.coupling(2, 1), 0.5);
    }

    #[test]
    fn example1_equilibrium_is_stationary() {
        let eps = 0.1;
        let sys = star3(3.0, eps);
        let a = (1.0 - eps / 2.0).asin();
        let rhs = sys.rhs(&[2.0 / 3.0 * a, -a / 3.0, -a / 3.0]);
        assert!(rhs.iter().all(|r| r.abs() < 1e-12), "{rhs:?}");
    }

    #[test]
    fn homogeneous_rest_state() {
        let g = Graph::complete(4).unwrap();
        let sys = KuramotoSystem::new(g, vec![0.7; 4], &CouplingSpec::Scalar(2.0)).unwrap();
        assert!(sys.rhs(&[0.0; 4]).iter().all(|&r| r == 0.0));
        // All cosines are one: V = −K|E|/n.
        assert!((sys.lyapunov(&[0.0; 4]) - (-2.0 * 6.0 / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn two_oscillator_locked_state() {
        // 0.5 = (K/n) sin Δ with K = n = 2 gives Δ = asin(0.5).
        let g = Graph::complete(2).unwrap();
        let sys = KuramotoSystem::new(g, vec![0.5, -0.5], &CouplingSpec::Scalar(2.0)).unwrap();
        let d = 0.5f64.asin();
        let rhs = sys.rhs(&[d / 2.0, -d / 2.0]);
        assert!(rhs.iter().all(|r| r.abs() < 1e-12), "{rhs:?}");
    }

    #[test]
    fn lyapunov_example1_point() {
        let sys = star3(3.0, 0.1);
        assert!(sys.lyapunov(&[0.0, FRAC_PI_2, -FRAC_PI_2]).abs() < 1e-15);
    }

    #[test]
    fn spread_and_shift() {
        assert_eq!(phase_spread(&[0.0, 0.0, 0.0]), 0.0);
        assert!((phase_spread(&[0.0, FRAC_PI_2, -FRAC_PI_2]) - PI).abs() < 1e-15);
        assert!((phase_spread(&[0.3, -0.1, 0.2]) - 0.4).abs() < 1e-15);
        assert_eq!(mean_zero_shift(&[1.0, 2.0, 3.0]).phases, vec![-1.0, 0.0, 1.0]);
        assert_eq!(mean_zero_shift(&[0.0, 0.0]).phases, vec![0.0, 0.0]);
    }

    fn arb_system() -> impl Strategy<Value = (KuramotoSystem, Vec<f64>)> {
        (2usize..8)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec(proptest::bool::ANY, n * (n - 1) / 2),
                    proptest::collection::vec(0.0f64..3.0, n * (n - 1) / 2),
                    proptest::collection::vec(-2.0f64..2.0, n),
                    proptest::collection::vec(-4.0f64..4.0, n),
                )
            })
            .prop_map(|(n, mask, ks, omega, phases)| {
                let pairs: Vec<(usize, usize)> = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .collect();
                let mut edges = Vec::new();
                let mut spec = Vec::new();
                for (idx, &(i, j)) in pairs.iter().enumerate() {
                    if mask[idx] {
                        edges.push((i, j));
                        spec.push((i, j, ks[idx]));
                    }
                }
                let g = Graph::new(n, edges).unwrap();
                let sys = KuramotoSystem::new(g, omega, &CouplingSpec::PerEdge(spec)).unwrap();
                (sys, phases)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rhs_sums_to_zero((sys, phases) in arb_system()) {
            let s: f64 = sys.rhs(&phases).iter().sum();
            prop_assert!(s.abs() < 1e-12, "sum = {s}");
        }

        #[test]
        fn rhs_shift_invariant((sys, phases) in arb_system(), c in -10.0f64..10.0) {
            let shifted: Vec<f64> = phases.iter().map(|p| p + c).collect();
            for (a, b) in sys.rhs(&phases).iter().zip(sys.rhs(&shifted)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn lyapunov_derivative_matches_rhs((sys, phases) in arb_system()) {
            // Central differences of V along the flow direction.
            let f = sys.rhs(&phases);
            let h = 1e-6;
            let plus: Vec<f64> = phases.iter().zip(&f).map(|(p, d)| p + h * d).collect();
            let minus: Vec<f64> = phases.iter().zip(&f).map(|(p, d)| p - h * d).collect();
            let dv = (sys.lyapunov(&plus) - sys.lyapunov(&minus)) / (2.0 * h);
            let expected = -f.iter().map(|x| x * x).sum::<f64>();
            prop_assert!(
                (dv - expected).abs() <= 1e-6 * expected.abs().max(1.0),
                "dv = {dv}, expected = {expected}"
            );
        }

        #[test]
        fn lyapunov_differences_shift_invariant((sys, phases) in arb_system(), c in -3.0f64..3.0) {
            // Σω̄ = 0, so V(φ + c1) − V(φ) vanishes.
            let shifted: Vec<f64> = phases.iter().map(|p| p + c).collect();
            prop_assert!((sys.lyapunov(&shifted) - sys.lyapunov(&phases)).abs() < 1e-9);
        }

        #[test]
        fn shift_preserves_spread(phases in proptest::collection::vec(-5.0f64..5.0, 1..10)) {
            let st = mean_zero_shift(&phases);
            prop_assert!(st.mean().abs() < 1e-9);
            prop_assert!((st.spread() - phase_spread(&phases)).abs() < 1e-12);
        }
    }
}
