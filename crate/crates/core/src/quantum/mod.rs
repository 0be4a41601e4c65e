//! Pure two-qubit states, spin measurements along Bloch directions, and the
//! Born-rule box they produce.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::behavior::{self, Behavior, Outcome, Party, Setting};
use crate::bell::{self, HardyQuadruple};
use crate::error::{Error, Result};

mod optimize;
pub mod simplex;

pub use optimize::{
    feasible_state, maximize_hardy, maximize_sigma, reduced_hardy_value, HardyOptimum,
    OptimizerConfig, SigmaGoal, SigmaOptimum, StateFamily,
};

/// Deviation of the squared norm beyond which a state is rejected.
pub const NORM_TOL: f64 = 1e-9;

/// τ⁻⁵ with τ the golden mean.
pub fn hardy_bound() -> f64 {
    let tau = (1.0 + 5f64.sqrt()) / 2.0;
    tau.powi(-5)
}

/// Amplitudes in the basis |++>, |+->, |-+>, |--> of the z eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct TwoQubitState {
    amplitudes: [Complex64; 4],
}

#[derive(Deserialize)]
struct RawState {
    amplitudes: [Complex64; 4],
}

impl TryFrom<RawState> for TwoQubitState {
    type Error = Error;
    fn try_from(raw: RawState) -> Result<Self> {
        Self::new(raw.amplitudes)
    }
}

impl TwoQubitState {
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NotNormalized { norm_sqr: f64::NAN });
        }
        let state = Self { amplitudes };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(state)
    }

    /// Rescales to unit norm. Fails only for the zero vector.
    pub fn normalized(amplitudes: [Complex64; 4]) -> Result<Self> {
        let n = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm_sqr: n * n });
        }
        Ok(Self {
            amplitudes: amplitudes.map(|a| a / n),
        })
    }

    pub fn from_real(amplitudes: [f64; 4]) -> Result<Self> {
        Self::normalized(amplitudes.map(|x| Complex64::new(x, 0.0)))
    }

    /// Tensor product of two single-qubit states (each given as (up, down) amplitudes).
    pub fn product(a: [Complex64; 2], b: [Complex64; 2]) -> Result<Self> {
        Self::normalized([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Mostly useful for negative tests; skips the normalization check.
    pub fn unchecked(amplitudes: [Complex64; 4]) -> Self {
        Self { amplitudes }
    }
}

pub fn singlet() -> TwoQubitState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    TwoQubitState {
        amplitudes: [
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    }
}

/// A spin direction on the Bloch sphere, polar angle `theta` from +z and
/// azimuth `phi`, both in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub const Z: Direction = Direction {
        theta: 0.0,
        phi: 0.0,
    };
    pub const X: Direction = Direction {
        theta: std::f64::consts::FRAC_PI_2,
        phi: 0.0,
    };
    pub const Y: Direction = Direction {
        theta: std::f64::consts::FRAC_PI_2,
        phi: std::f64::consts::FRAC_PI_2,
    };

    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Direction in the x-z plane at angle `theta` from z.
    pub fn in_xz(theta: f64) -> Self {
        Self { theta, phi: 0.0 }
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Eigenvector of n·σ for the given outcome, as (up, down) amplitudes.
    pub fn eigenvector(&self, outcome: Outcome) -> [Complex64; 2] {
        let (s, c) = (self.theta / 2.0).sin_cos();
        match outcome {
            Outcome::Plus => [Complex64::new(c, 0.0), Complex64::from_polar(s, self.phi)],
            Outcome::Minus => [-Complex64::from_polar(s, -self.phi), Complex64::new(c, 0.0)],
        }
    }
}

/// Measurement directions for a1, a2, b1, b2.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementSettings {
    pub a1: Direction,
    pub a2: Direction,
    pub b1: Direction,
    pub b2: Direction,
}

impl MeasurementSettings {
    pub fn new(a1: Direction, a2: Direction, b1: Direction, b2: Direction) -> Self {
        Self { a1, a2, b1, b2 }
    }

    pub fn all_along(d: Direction) -> Self {
        Self {
            a1: d,
            a2: d,
            b1: d,
            b2: d,
        }
    }

    pub fn direction(&self, party: Party, setting: Setting) -> Direction {
        match (party, setting) {
            (Party::A, Setting::One) => self.a1,
            (Party::A, Setting::Two) => self.a2,
            (Party::B, Setting::One) => self.b1,
            (Party::B, Setting::Two) => self.b2,
        }
    }

    /// The product vector u_m ⊗ v_n whose projector gives the 1-based cell `i`.
    pub fn cell_vector(&self, i: usize) -> [Complex64; 4] {
        let (a, b, m, n) = behavior::cell_of(i);
        let u = self.direction(Party::A, a).eigenvector(m);
        let v = self.direction(Party::B, b).eigenvector(n);
        [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]]
    }
}

fn inner(e: &[Complex64; 4], psi: &[Complex64; 4]) -> Complex64 {
    e.iter().zip(psi).map(|(x, y)| x.conj() * y).sum()
}

fn cell_probability(psi: &[Complex64; 4], settings: &MeasurementSettings, i: usize) -> f64 {
    inner(&settings.cell_vector(i), psi).norm_sqr()
}

pub fn born_behavior(state: &TwoQubitState, settings: &MeasurementSettings) -> Result<Behavior> {
    let n = state.norm_sqr();
    if n.is_nan() || (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sqr: n });
    }
    let mut probs = [0.0; 16];
    for (i, p) in probs.iter_mut().enumerate() {
        *p = cell_probability(&state.amplitudes, settings, i + 1);
    }
    Behavior::new(probs)
}

/// Removes from `psi` its components along the given vectors and
/// renormalizes. If nothing is left, the computational basis vector with the
/// largest surviving component is used instead.
pub(crate) fn project_out(psi: &[Complex64; 4], vectors: &[[Complex64; 4]]) -> [Complex64; 4] {
    let mut basis: Vec<[Complex64; 4]> = Vec::new();
    for v in vectors {
        let mut w = *v;
        for g in &basis {
            let c = inner(g, &w);
            for (x, y) in w.iter_mut().zip(g) {
                *x -= c * y;
            }
        }
        let n = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-12 {
            basis.push(w.map(|x| x / n));
        }
    }
    let strip = |mut w: [Complex64; 4]| {
        for g in &basis {
            let c = inner(g, &w);
            for (x, y) in w.iter_mut().zip(g) {
                *x -= c * y;
            }
        }
        let n = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        (w, n)
    };
    let (mut w, mut n) = strip(*psi);
    if n < 1e-9 {
        for k in 0..4 {
            let mut e = [Complex64::new(0.0, 0.0); 4];
            e[k] = Complex64::new(1.0, 0.0);
            let (we, ne) = strip(e);
            if ne > n {
                w = we;
                n = ne;
            }
        }
    }
    w.map(|x| x / n)
}

#[derive(Debug, Clone, Serialize)]
pub struct SingletCheck {
    /// Quadruples whose three zero cells are all ≤ eps.
    pub quadruples: Vec<HardyQuadruple>,
    pub correlations: [f64; 4],
    pub deltas: [f64; 4],
    pub min_abs_correlation: f64,
    pub max_abs_delta: f64,
    pub perfect_correlations: bool,
    pub chsh_satisfied: bool,
    pub passed: bool,
}

/// For the singlet, three vanishing Hardy cells force all four correlations
/// to be ±1, and CHSH then holds.
pub fn singlet_perfect_correlation_check(
    settings: &MeasurementSettings,
    eps: f64,
) -> Result<SingletCheck> {
    let b = born_behavior(&singlet(), settings)?;
    let quadruples: Vec<HardyQuadruple> = bell::enumerate_hardy_inequalities()
        .iter()
        .filter(|q| q.klm().iter().all(|&i| b.p(i) <= eps))
        .copied()
        .collect();
    if quadruples.is_empty() {
        return Err(Error::Precondition(format!(
            "no Hardy quadruple has three cells at or below {eps:e}"
        )));
    }
    let correlations = behavior::correlations(&b).as_array();
    let deltas = bell::delta_values(&b).delta;
    let min_abs_correlation = correlations
        .iter()
        .map(|c| c.abs())
        .fold(f64::INFINITY, f64::min);
    let max_abs_delta = deltas.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let perfect_correlations = min_abs_correlation >= 1.0 - 10.0 * eps;
    let chsh_satisfied = max_abs_delta <= 2.0 + 40.0 * eps;
    Ok(SingletCheck {
        quadruples,
        correlations,
        deltas,
        min_abs_correlation,
        max_abs_delta,
        perfect_correlations,
        chsh_satisfied,
        passed: perfect_correlations && chsh_satisfied,
    })
}
