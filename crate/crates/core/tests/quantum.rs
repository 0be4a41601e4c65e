use approx::assert_abs_diff_eq;
use hardybox::behavior::is_valid;
use hardybox::bell::HardyQuadruple;
use hardybox::locality::constraint_residuals;
use hardybox::quantum::{
    born_behavior, hardy_bound, maximize_hardy, maximize_sigma, reduced_hardy_value,
    singlet_perfect_correlation_check, Direction, MeasurementSettings, OptimizerConfig, SigmaGoal,
    StateFamily, TwoQubitState,
};
use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use proptest::prelude::*;

type C = Complex64;

fn projector(d: &Direction, sign: f64) -> Matrix2<C> {
    let [x, y, z] = d.unit_vector();
    let i = C::new(0.0, 1.0);
    let one = C::new(1.0, 0.0);
    let sx = Matrix2::new(C::new(0.0, 0.0), one, one, C::new(0.0, 0.0));
    let sy = Matrix2::new(C::new(0.0, 0.0), -i, i, C::new(0.0, 0.0));
    let sz = Matrix2::new(one, C::new(0.0, 0.0), C::new(0.0, 0.0), -one);
    (Matrix2::identity() + (sx * C::from(x) + sy * C::from(y) + sz * C::from(z)) * C::from(sign))
        * C::from(0.5)
}

/// Dense expectation value of the tensor-product projector.
fn oracle(state: &TwoQubitState, s: &MeasurementSettings) -> [f64; 16] {
    let psi = Vector4::from_column_slice(state.amplitudes());
    let dirs_a = [s.a1, s.a2];
    let dirs_b = [s.b1, s.b2];
    let mut out = [0.0; 16];
    for a in 0..2 {
        for b in 0..2 {
            for (o, (sa, sb)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
                .into_iter()
                .enumerate()
            {
                let p: Matrix4<C> = projector(&dirs_a[a], sa).kronecker(&projector(&dirs_b[b], sb));
                let v = (psi.adjoint() * p * psi)[(0, 0)];
                out[4 * (2 * a + b) + o] = v.re;
            }
        }
    }
    out
}

fn direction() -> impl Strategy<Value = Direction> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(t, p)| Direction::new(t, p))
}

fn settings() -> impl Strategy<Value = MeasurementSettings> {
    (direction(), direction(), direction(), direction())
        .prop_map(|(a, b, c, d)| MeasurementSettings::new(a, b, c, d))
}

fn state() -> impl Strategy<Value = TwoQubitState> {
    proptest::array::uniform8(-1.0f64..1.0)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            TwoQubitState::normalized([
                C::new(v[0], v[1]),
                C::new(v[2], v[3]),
                C::new(v[4], v[5]),
                C::new(v[6], v[7]),
            ])
            .unwrap()
        })
}

fn rotate(v: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let dot: f64 = v.iter().zip(axis).map(|(a, b)| a * b).sum();
    let cross = [
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ];
    [0, 1, 2].map(|k| v[k] * c + cross[k] * s + axis[k] * dot * (1.0 - c))
}

fn from_vector(v: [f64; 3]) -> Direction {
    Direction::new(v[2].clamp(-1.0, 1.0).acos(), v[1].atan2(v[0]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn born_matches_projector_oracle(s in state(), m in settings()) {
        let b = born_behavior(&s, &m).unwrap();
        let o = oracle(&s, &m);
        for i in 0..16 {
            prop_assert!((b.probs()[i] - o[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn born_output_is_physical(s in state(), m in settings()) {
        let b = born_behavior(&s, &m).unwrap();
        prop_assert!(is_valid(&b));
        for sum in hardybox::behavior::block_sums(&b) {
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
        prop_assert!(constraint_residuals(&b).max_abs() <= 1e-12);
    }

    #[test]
    fn local_rotation_of_alice_leaves_box_unchanged(
        s in state(), m in settings(),
        axis in direction(), angle in -3.0f64..3.0,
    ) {
        let n = axis.unit_vector();
        // U = exp(-i angle/2 n·σ) acting on Alice's qubit.
        let (sh, ch) = (angle / 2.0).sin_cos();
        let i = C::new(0.0, 1.0);
        let u = [
            [C::from(ch) - i * sh * n[2], (-i * n[0] - C::from(n[1])) * sh],
            [(-i * n[0] + C::from(n[1])) * sh, C::from(ch) + i * sh * n[2]],
        ];
        let a = s.amplitudes();
        let mut rotated = [C::new(0.0, 0.0); 4];
        for x in 0..2 {
            for y in 0..2 {
                for k in 0..2 {
                    rotated[2 * x + y] += u[x][k] * a[2 * k + y];
                }
            }
        }
        let s2 = TwoQubitState::normalized(rotated).unwrap();
        let m2 = MeasurementSettings::new(
            from_vector(rotate(m.a1.unit_vector(), n, angle)),
            from_vector(rotate(m.a2.unit_vector(), n, angle)),
            m.b1,
            m.b2,
        );
        let b1 = born_behavior(&s, &m).unwrap();
        let b2 = born_behavior(&s2, &m2).unwrap();
        for k in 0..16 {
            prop_assert!((b1.probs()[k] - b2.probs()[k]).abs() <= 1e-12, "cell {}: {} vs {}", k + 1, b1.probs()[k], b2.probs()[k]);
        }
    }
}

#[test]
fn hardy_maximum_for_textbook_quadruple() {
    let q = HardyQuadruple::find(1, 13).unwrap();
    assert_eq!(q.klm(), [4, 5, 9]);
    let opt = maximize_hardy(&q, &OptimizerConfig::default()).unwrap();
    assert_abs_diff_eq!(opt.pj_value, 0.09017, epsilon = 5e-4);
    assert!(opt.pj_value <= hardy_bound() + 1e-9);
    assert!(opt.zero_residual <= 1e-7);
    let b = born_behavior(&opt.state, &opt.settings).unwrap();
    assert_abs_diff_eq!(b.p(13), opt.pj_value, epsilon = 1e-12);
}

#[test]
fn hardy_maximum_other_family() {
    let q = HardyQuadruple::find(2, 1).unwrap();
    assert_eq!(q.klm(), [6, 11, 13]);
    let opt = maximize_hardy(&q, &OptimizerConfig::default()).unwrap();
    assert_abs_diff_eq!(opt.pj_value, 0.09017, epsilon = 5e-4);
}

#[test]
fn complex_mode_agrees_with_real_mode() {
    let q = HardyQuadruple::find(5, 13)
        .unwrap_or_else(|| hardybox::bell::enumerate_hardy_inequalities()[32]);
    let real = maximize_hardy(&q, &OptimizerConfig::default()).unwrap();
    let cfg = OptimizerConfig {
        real_mode: false,
        starts: 32,
        ..Default::default()
    };
    let complex = maximize_hardy(&q, &cfg).unwrap();
    assert!(
        (real.pj_value - complex.pj_value).abs() < 5e-4,
        "{} vs {}",
        real.pj_value,
        complex.pj_value
    );
}

#[test]
fn singlet_gives_no_hardy_nonlocality() {
    let q = HardyQuadruple::find(1, 13).unwrap();
    let cfg = OptimizerConfig {
        state_family: StateFamily::Singlet,
        ..Default::default()
    };
    let opt = maximize_hardy(&q, &cfg).unwrap();
    assert!(opt.pj_value <= 1e-6, "{}", opt.pj_value);
    assert!(opt.zero_residual <= 1e-7);
}

#[test]
fn optimum_is_stationary() {
    let q = HardyQuadruple::find(1, 13).unwrap();
    let opt = maximize_hardy(&q, &OptimizerConfig::default()).unwrap();
    let base = [
        opt.settings.a1,
        opt.settings.a2,
        opt.settings.b1,
        opt.settings.b2,
    ];
    let h = 1e-5;
    for k in 0..8 {
        let shifted = |d: f64| {
            let mut v = base;
            if k % 2 == 0 {
                v[k / 2].theta += d;
            } else {
                v[k / 2].phi += d;
            }
            reduced_hardy_value(
                &q,
                &opt.state,
                &MeasurementSettings::new(v[0], v[1], v[2], v[3]),
            )
        };
        let g = (shifted(h) - shifted(-h)) / (2.0 * h);
        assert!(g.abs() <= 1e-4, "coordinate {k}: {g}");
    }
}

#[test]
fn sigma_extrema_match_tsirelson() {
    let cfg = OptimizerConfig::default();
    let max = maximize_sigma(1, SigmaGoal::Maximize, &cfg).unwrap();
    assert_abs_diff_eq!(max.value, 2.0 + 2f64.sqrt(), epsilon = 1e-3);
    assert!(max.converged);
    for t in max.terms {
        assert_abs_diff_eq!(t, (2.0 + 2f64.sqrt()) / 8.0, epsilon = 1e-2);
    }
    let min = maximize_sigma(1, SigmaGoal::Minimize, &cfg).unwrap();
    assert_abs_diff_eq!(min.value, 2.0 - 2f64.sqrt(), epsilon = 1e-3);
    assert!(min.converged);
    for t in min.terms {
        assert_abs_diff_eq!(t, (2.0 - 2f64.sqrt()) / 8.0, epsilon = 1e-2);
    }
}

#[test]
fn product_states_stay_local() {
    let cfg = OptimizerConfig {
        state_family: StateFamily::Product,
        real_mode: false,
        ..Default::default()
    };
    for i in 1..=4 {
        let opt = maximize_sigma(i, SigmaGoal::Maximize, &cfg).unwrap();
        assert!(opt.value <= 3.0 + 1e-6, "sigma{i} = {}", opt.value);
        // The best local vertex reaches 3; a product state along the right axes does too.
        assert!(opt.value >= 3.0 - 1e-6, "sigma{i} = {}", opt.value);
    }
}

#[test]
fn singlet_settings_found_by_the_optimizer_are_perfectly_correlated() {
    let q = HardyQuadruple::find(3, 2)
        .unwrap_or_else(|| hardybox::bell::enumerate_hardy_inequalities()[17]);
    let cfg = OptimizerConfig {
        state_family: StateFamily::Singlet,
        ..Default::default()
    };
    let opt = maximize_hardy(&q, &cfg).unwrap();
    let report = singlet_perfect_correlation_check(&opt.settings, 1e-6).unwrap();
    assert!(report.passed, "{report:?}");
    for c in report.correlations {
        assert_abs_diff_eq!(c.abs(), 1.0, epsilon = 1e-5);
    }
}
