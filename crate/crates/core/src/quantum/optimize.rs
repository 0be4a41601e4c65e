//! Multi-start searches for the quantum Hardy maximum and the Σ extrema.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simplex::{minimize, SimplexOptions};
use super::{
    born_behavior, cell_probability, project_out, singlet, Direction, MeasurementSettings,
    TwoQubitState,
};
use crate::bell::{HardyQuadruple, SIGMA_TERMS};
use crate::error::{Error, Result};

/// Which states the search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFamily {
    #[default]
    General,
    /// State fixed to the singlet; only the settings move.
    Singlet,
    /// Product states only.
    Product,
}

/// Fields missing from a JSON config take their default values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub rounds: usize,
    pub penalty_weights: Vec<f64>,
    pub constraint_tol: f64,
    pub seed: u64,
    /// Real amplitudes and settings in the x-z plane.
    pub real_mode: bool,
    pub state_family: StateFamily,
    /// Evaluation budget of each local search.
    pub max_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            rounds: 3,
            penalty_weights: vec![1e2, 1e4, 1e6],
            constraint_tol: 1e-7,
            seed: 7,
            real_mode: true,
            state_family: StateFamily::General,
            max_evals: 20_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::Config("starts must be positive".into()));
        }
        if self.rounds == 0 || self.penalty_weights.len() != self.rounds {
            return Err(Error::Config(format!(
                "rounds ({}) must be positive and match the number of penalty weights ({})",
                self.rounds,
                self.penalty_weights.len()
            )));
        }
        if self
            .penalty_weights
            .iter()
            .any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::Config(
                "penalty weights must be positive and finite".into(),
            ));
        }
        if !(self.constraint_tol.is_finite() && self.constraint_tol > 0.0) {
            return Err(Error::Config("constraint_tol must be positive".into()));
        }
        if self.max_evals < 10 {
            return Err(Error::Config("max_evals is too small".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HardyOptimum {
    pub state: TwoQubitState,
    pub settings: MeasurementSettings,
    pub quadruple: HardyQuadruple,
    pub pj_value: f64,
    /// Largest of pk, pl, pm at the returned point.
    pub zero_residual: f64,
    pub start_index: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaGoal {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaOptimum {
    pub sigma_index: u8,
    pub goal: SigmaGoal,
    pub value: f64,
    /// The eight probabilities entering the sum, in term order.
    pub terms: [f64; 8],
    pub state: TwoQubitState,
    pub settings: MeasurementSettings,
    pub converged: bool,
    pub start_index: usize,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Ansatz {
    family: StateFamily,
    real: bool,
}

impl Ansatz {
    fn of(cfg: &OptimizerConfig) -> Self {
        Self {
            family: cfg.state_family,
            real: cfg.real_mode,
        }
    }

    fn state_dim(self) -> usize {
        match (self.family, self.real) {
            (StateFamily::General, true) => 3,
            (StateFamily::General, false) => 6,
            (StateFamily::Singlet, _) => 0,
            (StateFamily::Product, true) => 2,
            (StateFamily::Product, false) => 4,
        }
    }

    fn settings_dim(self) -> usize {
        if self.real {
            4
        } else {
            8
        }
    }

    fn dim(self) -> usize {
        self.state_dim() + self.settings_dim()
    }

    fn state(self, x: &[f64]) -> TwoQubitState {
        let c = |r: f64, eta: f64| Complex64::from_polar(r, eta);
        let amps = match (self.family, self.real) {
            (StateFamily::Singlet, _) => return singlet(),
            (StateFamily::General, real) => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                let (s3, c3) = x[2].sin_cos();
                let r = [c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3];
                if real {
                    r.map(|v| Complex64::new(v, 0.0))
                } else {
                    [c(r[0], 0.0), c(r[1], x[3]), c(r[2], x[4]), c(r[3], x[5])]
                }
            }
            (StateFamily::Product, real) => {
                let (pa, pb) = if real { (0.0, 0.0) } else { (x[2], x[3]) };
                let (sa, ca) = (x[0] / 2.0).sin_cos();
                let (sb, cb) = (x[1] / 2.0).sin_cos();
                let a = [c(ca, 0.0), c(sa, pa)];
                let b = [c(cb, 0.0), c(sb, pb)];
                [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
            }
        };
        TwoQubitState::unchecked(amps)
    }

    fn settings(self, y: &[f64]) -> MeasurementSettings {
        let d = |k: usize| {
            if self.real {
                Direction::in_xz(y[k])
            } else {
                Direction::new(y[2 * k], y[2 * k + 1])
            }
        };
        MeasurementSettings::new(d(0), d(1), d(2), d(3))
    }

    fn decode(self, x: &[f64]) -> (TwoQubitState, MeasurementSettings) {
        let k = self.state_dim();
        (self.state(&x[..k]), self.settings(&x[k..]))
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Halton points with a seeded Cranley-Patterson rotation, scaled to angles.
fn start_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (0..count)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let u = radical_inverse(i as u64 + 1, PRIMES[d]) + shift[d];
                    TAU * (u - u.floor())
                })
                .collect()
        })
        .collect()
}

fn canonical(d: Direction) -> Direction {
    let mut theta = d.theta.rem_euclid(TAU);
    let mut phi = d.phi;
    if theta > std::f64::consts::PI {
        theta = TAU - theta;
        phi += std::f64::consts::PI;
    }
    Direction {
        theta,
        phi: phi.rem_euclid(TAU),
    }
}

fn canonical_settings(s: &MeasurementSettings) -> MeasurementSettings {
    MeasurementSettings::new(
        canonical(s.a1),
        canonical(s.a2),
        canonical(s.b1),
        canonical(s.b2),
    )
}

fn zero_residual(q: &HardyQuadruple, psi: &[Complex64; 4], settings: &MeasurementSettings) -> f64 {
    q.klm()
        .iter()
        .map(|&i| cell_probability(psi, settings, i))
        .fold(0.0, f64::max)
}

/// The state closest to `reference` with pk = pl = pm = 0 exactly, for the
/// given settings.
pub fn feasible_state(
    q: &HardyQuadruple,
    reference: &TwoQubitState,
    settings: &MeasurementSettings,
) -> TwoQubitState {
    let vectors = q.klm().map(|i| settings.cell_vector(i));
    TwoQubitState::unchecked(project_out(reference.amplitudes(), &vectors))
}

/// pj at the feasible state obtained from `reference`. This is the quantity
/// the final polish maximizes over the settings.
pub fn reduced_hardy_value(
    q: &HardyQuadruple,
    reference: &TwoQubitState,
    settings: &MeasurementSettings,
) -> f64 {
    let psi = feasible_state(q, reference, settings);
    cell_probability(psi.amplitudes(), settings, q.j)
}

struct Candidate {
    index: usize,
    state: TwoQubitState,
    settings: MeasurementSettings,
    value: f64,
    residual: f64,
    evals: usize,
    converged: bool,
}

fn hardy_from_start(
    q: &HardyQuadruple,
    cfg: &OptimizerConfig,
    ansatz: Ansatz,
    index: usize,
    x0: Vec<f64>,
) -> Candidate {
    let mut x = x0;
    let mut evals = 0;
    let mut converged = false;
    for (round, &w) in cfg.penalty_weights.iter().enumerate() {
        let opts = SimplexOptions {
            max_evals: cfg.max_evals,
            initial_step: if round == 0 { 0.3 } else { 0.05 },
            ..Default::default()
        };
        let r = minimize(
            |x| {
                let (s, m) = ansatz.decode(x);
                let psi = s.amplitudes();
                let zeros: f64 = q.klm().iter().map(|&i| cell_probability(psi, &m, i)).sum();
                -cell_probability(psi, &m, q.j) + w * zeros
            },
            &x,
            &opts,
        );
        x = r.x;
        evals += r.evals;
        converged = r.converged;
    }
    let (mut state, mut settings) = ansatz.decode(&x);

    if ansatz.family == StateFamily::General {
        let reference = state;
        let k = ansatz.state_dim();
        let opts = SimplexOptions {
            max_evals: cfg.max_evals,
            initial_step: 0.02,
            ..Default::default()
        };
        let r = minimize(
            |y| -reduced_hardy_value(q, &reference, &ansatz.settings(y)),
            &x[k..],
            &opts,
        );
        evals += r.evals;
        converged = r.converged;
        settings = ansatz.settings(&r.x);
        state = feasible_state(q, &reference, &settings);
    }

    let psi = state.amplitudes();
    Candidate {
        index,
        value: cell_probability(psi, &settings, q.j),
        residual: zero_residual(q, psi, &settings),
        state,
        settings,
        evals,
        converged,
    }
}

/// Best of the restarts: feasible first, then larger objective, smaller
/// residual, earlier start.
fn better(a: &Candidate, b: &Candidate, tol: f64) -> Ordering {
    let fa = a.residual <= tol;
    let fb = b.residual <= tol;
    fa.cmp(&fb)
        .then(a.value.total_cmp(&b.value))
        .then(b.residual.total_cmp(&a.residual))
        .then(b.index.cmp(&a.index))
}

pub fn maximize_hardy(q: &HardyQuadruple, cfg: &OptimizerConfig) -> Result<HardyOptimum> {
    cfg.validate()?;
    let ansatz = Ansatz::of(cfg);
    let starts = start_points(ansatz.dim(), cfg.starts, cfg.seed);
    let candidates: Vec<Candidate> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, x0)| hardy_from_start(q, cfg, ansatz, i, x0))
        .collect();
    let evaluations = candidates.iter().map(|c| c.evals).sum();
    let best = candidates
        .into_iter()
        .max_by(|a, b| better(a, b, cfg.constraint_tol))
        .expect("starts > 0");
    if best.residual > cfg.constraint_tol {
        return Err(Error::NotConverged {
            residual: best.residual,
            tol: cfg.constraint_tol,
        });
    }
    Ok(HardyOptimum {
        state: best.state,
        settings: canonical_settings(&best.settings),
        quadruple: *q,
        pj_value: best.value,
        zero_residual: best.residual,
        start_index: best.index,
        evaluations,
    })
}

/// Extremizes Σ_i (i in 1..=4) over the configured state family.
pub fn maximize_sigma(i: u8, goal: SigmaGoal, cfg: &OptimizerConfig) -> Result<SigmaOptimum> {
    cfg.validate()?;
    if !(1..=4).contains(&i) {
        return Err(Error::Config(format!("sigma index must be 1..4, got {i}")));
    }
    let terms = SIGMA_TERMS[i as usize - 1];
    let sign = match goal {
        SigmaGoal::Maximize => -1.0,
        SigmaGoal::Minimize => 1.0,
    };
    let ansatz = Ansatz::of(cfg);
    let sigma = move |s: &TwoQubitState, m: &MeasurementSettings| -> f64 {
        terms
            .iter()
            .map(|&c| cell_probability(s.amplitudes(), m, c))
            .sum()
    };
    let starts = start_points(ansatz.dim(), cfg.starts, cfg.seed);
    let candidates: Vec<Candidate> = starts
        .into_par_iter()
        .enumerate()
        .map(|(index, x0)| {
            let opts = SimplexOptions {
                max_evals: cfg.max_evals,
                ..Default::default()
            };
            let r = minimize(
                |x| {
                    let (s, m) = ansatz.decode(x);
                    sign * sigma(&s, &m)
                },
                &x0,
                &opts,
            );
            let (state, settings) = ansatz.decode(&r.x);
            Candidate {
                index,
                value: -sign * sigma(&state, &settings),
                residual: 0.0,
                state,
                settings,
                evals: r.evals,
                converged: r.converged,
            }
        })
        .collect();
    let evaluations = candidates.iter().map(|c| c.evals).sum();
    let best = candidates
        .into_iter()
        .max_by(|a, b| {
            (-sign * a.value)
                .total_cmp(&(-sign * b.value))
                .then(b.index.cmp(&a.index))
        })
        .expect("starts > 0");
    let state = TwoQubitState::normalized(*best.state.amplitudes())?;
    let settings = canonical_settings(&best.settings);
    let b = born_behavior(&state, &settings)?;
    Ok(SigmaOptimum {
        sigma_index: i,
        goal,
        value: terms.iter().map(|&c| b.p(c)).sum(),
        terms: terms.map(|c| b.p(c)),
        state,
        settings,
        converged: best.converged,
        start_index: best.index,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_prefix() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn starts_are_deterministic() {
        assert_eq!(start_points(7, 5, 3), start_points(7, 5, 3));
        assert_ne!(start_points(7, 5, 3), start_points(7, 5, 4));
        assert!(start_points(11, 64, 1)
            .iter()
            .flatten()
            .all(|&v| (0.0..TAU).contains(&v)));
    }

    #[test]
    fn ansatz_states_are_normalized() {
        for family in [
            StateFamily::General,
            StateFamily::Product,
            StateFamily::Singlet,
        ] {
            for real in [true, false] {
                let a = Ansatz { family, real };
                for x in start_points(a.dim(), 10, 2) {
                    let (s, _) = a.decode(&x);
                    assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn canonical_direction_preserves_axis() {
        let d = Direction::new(4.0, -1.0);
        let c = canonical(d);
        assert!((0.0..=std::f64::consts::PI).contains(&c.theta));
        for (x, y) in d.unit_vector().iter().zip(c.unit_vector()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = OptimizerConfig {
            rounds: 2,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let json = r#"{"starts":8,"rounds":1,"penalty_weights":[1e3],"constraint_tol":1e-7,"seed":3,"real_mode":false}"#;
        let cfg: OptimizerConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.state_family, StateFamily::General);
        assert_eq!(cfg.max_evals, 20_000);
        let partial: OptimizerConfig = serde_json::from_str(r#"{"starts": 8}"#).unwrap();
        assert_eq!(partial, OptimizerConfig { starts: 8, ..Default::default() });
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"start": 8}"#).is_err());
    }
}
