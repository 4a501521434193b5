//! Flow computation against closed-form oracles and group identities.

use nvsde_core::flows::{flow, flow_error_budget, FlowSpec};
use nvsde_core::linalg::{expm, Mat};
use nvsde_core::vecfield::VectorField;
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| {
        let scale = 1.0 + y.abs();
        (x - y).abs() <= tol * scale
    })
}

#[test]
fn zero_field_is_identity_flow() {
    let v = VectorField::constant(vec![0.0, 0.0]);
    let spec = FlowSpec::exact_constant(&v).unwrap();
    let x0 = [1.5, -2.0];
    assert_eq!(flow(&v, &spec, 3.7, &x0).unwrap(), vec![1.5, -2.0]);
    let num = FlowSpec::numeric(4).unwrap();
    assert_eq!(flow(&v, &num, 3.7, &x0).unwrap(), vec![1.5, -2.0]);
}

#[test]
fn scalar_geometric_flow() {
    // a = 0.5, t = 2, x0 = 3 → 3e
    let v = VectorField::new(1, "ax", |x| vec![0.5 * x[0]]);
    let spec = FlowSpec::exact_scalar_geometric(&v).unwrap();
    let got = flow(&v, &spec, 2.0, &[3.0]).unwrap();
    assert!((got[0] - 3.0 * std::f64::consts::E).abs() < 1e-12);
    // 8.154845485...
    assert!((got[0] - 8.154845485377136).abs() < 1e-12);
}

#[test]
fn rotation_flow_quarter_turn() {
    let a = Mat::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
    let v = VectorField::linear(a);
    let spec = FlowSpec::exact_linear(&v).unwrap();
    let got = flow(&v, &spec, std::f64::consts::FRAC_PI_2, &[1.0, 0.0]).unwrap();
    assert!(close(&got, &[0.0, -1.0], 1e-12), "{got:?}");
}

#[test]
fn affine_flow_with_invertible_matrix() {
    // dx/dt = -x + 1: x(t) = 1 + (x0-1)e^{-t}
    let v = VectorField::new(1, "affine", |x| vec![-x[0] + 1.0])
        .with_jac(|_| Mat::from_rows(&[&[-1.0]]));
    let spec = FlowSpec::exact_affine(&v).unwrap();
    let got = flow(&v, &spec, 1.3, &[4.0]).unwrap();
    let expect = 1.0 + 3.0 * (-1.3f64).exp();
    assert!((got[0] - expect).abs() < 1e-12, "got {} expect {}", got[0], expect);
}

#[test]
fn affine_flow_with_singular_matrix() {
    // nilpotent A plus constant: dx1/dt = 1, dx2/dt = x1
    // x1(t) = x1 + t, x2(t) = x2 + x1 t + t²/2
    let v = VectorField::new(2, "shear", |x| vec![1.0, x[0]])
        .with_jac(|_| Mat::from_rows(&[&[0.0, 0.0], &[1.0, 0.0]]));
    let spec = FlowSpec::exact_affine(&v).unwrap();
    let got = flow(&v, &spec, 2.0, &[0.5, -1.0]).unwrap();
    assert!(close(&got, &[2.5, -1.0 + 1.0 + 2.0], 1e-12), "{got:?}");
}

#[test]
fn constructor_rejects_wrong_form() {
    let v = VectorField::new(1, "nonlinear", |x| vec![x[0] * x[0]]);
    assert!(FlowSpec::exact_constant(&v).is_err());
    assert!(FlowSpec::exact_linear(&v).is_err());
    assert!(FlowSpec::exact_scalar_geometric(&v).is_err());
    assert!(FlowSpec::numeric(0).is_err());
}

#[test]
fn numeric_flow_matches_exact_linear() {
    let a = Mat::from_rows(&[&[0.1, -0.4], &[0.3, 0.2]]);
    let v = VectorField::linear(a);
    let exact = FlowSpec::exact_linear(&v).unwrap();
    let numeric = FlowSpec::numeric(128).unwrap();
    for t in [-1.0, 0.5, 2.0] {
        let e = flow(&v, &exact, t, &[1.0, 1.0]).unwrap();
        let n = flow(&v, &numeric, t, &[1.0, 1.0]).unwrap();
        assert!(close(&e, &n, 1e-10), "t={t}: {e:?} vs {n:?}");
    }
}

#[test]
fn overflow_reported() {
    let v = VectorField::new(1, "fast", |x| vec![x[0]]);
    let spec = FlowSpec::exact_scalar_geometric(&v).unwrap();
    assert!(flow(&v, &spec, 800.0, &[1.0]).is_err());
}

#[test]
fn error_budget_exact_is_zero() {
    let v = VectorField::constant(vec![1.0]);
    let spec = FlowSpec::exact_constant(&v).unwrap();
    assert_eq!(flow_error_budget(&v, &spec, 1.0, &[vec![0.0]]).unwrap(), 0.0);
}

#[test]
fn error_budget_bounds_true_error_on_linear_field() {
    let a = Mat::from_rows(&[&[0.0, 2.0], &[-2.0, 0.0]]);
    let v = VectorField::linear(a);
    let exact = FlowSpec::exact_linear(&v).unwrap();
    let numeric = FlowSpec::numeric(4).unwrap();
    let samples = vec![vec![1.0, 0.0], vec![0.3, -0.7]];
    let budget = flow_error_budget(&v, &numeric, 0.8, &samples).unwrap();
    for x in &samples {
        for t in [0.8, -0.8] {
            let e = flow(&v, &exact, t, x).unwrap();
            let n = flow(&v, &numeric, t, x).unwrap();
            let err: f64 = e
                .iter()
                .zip(n.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= budget, "true error {err} exceeds budget {budget}");
        }
    }
}

#[test]
fn error_budget_richardson_ratio_near_sixteen() {
    let v = VectorField::new(2, "spring", |x| vec![x[1], -(x[0] + 0.1 * x[0].powi(3))]);
    let samples = vec![vec![1.0, 0.0]];
    let b1 = flow_error_budget(&v, &FlowSpec::numeric(8).unwrap(), 0.5, &samples).unwrap();
    let b2 = flow_error_budget(&v, &FlowSpec::numeric(16).unwrap(), 0.5, &samples).unwrap();
    let ratio = b1 / b2;
    assert!(ratio > 10.0 && ratio < 24.0, "ratio {ratio}");
}

#[test]
fn commuting_linear_flows_compose() {
    // simultaneously diagonal matrices commute
    let a = Mat::from_rows(&[&[0.3, 0.0], &[0.0, -0.2]]);
    let b = Mat::from_rows(&[&[-0.1, 0.0], &[0.0, 0.5]]);
    let t = 0.9;
    let ea = expm(&a.scale(t)).unwrap();
    let eb = expm(&b.scale(t)).unwrap();
    let eab = expm(&a.add(&b).scale(t)).unwrap();
    let composed = ea.matmul(&eb);
    for i in 0..2 {
        for j in 0..2 {
            assert!((composed.get(i, j) - eab.get(i, j)).abs() < 1e-10);
        }
    }
}

fn specs_for(v: &VectorField) -> Vec<FlowSpec> {
    vec![FlowSpec::exact_linear(v).unwrap(), FlowSpec::numeric(512).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn semigroup_and_inversion(entries in prop::array::uniform4(-1.0f64..1.0),
                               x in prop::array::uniform2(-2.0f64..2.0),
                               s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let a = Mat::from_rows(&[&[entries[0], entries[1]], &[entries[2], entries[3]]]);
        let v = VectorField::linear(a);
        for (spec, tol) in specs_for(&v).into_iter().zip([1e-10f64, 1e-8]) {
            let via_two = flow(&v, &spec, t, &flow(&v, &spec, s, &x).unwrap()).unwrap();
            let direct = flow(&v, &spec, s + t, &x).unwrap();
            prop_assert!(close(&via_two, &direct, tol));
            let back = flow(&v, &spec, -t, &flow(&v, &spec, t, &x).unwrap()).unwrap();
            prop_assert!(close(&back, &x, tol));
        }
    }

    #[test]
    fn tangency_richardson(entries in prop::array::uniform4(-1.0f64..1.0),
                           x in prop::array::uniform2(-2.0f64..2.0)) {
        // (flow(h) − x)/h → V(x) with error O(h): difference quotient gaps
        // at h and h/2 shrink by about 2
        let a = Mat::from_rows(&[&[entries[0], entries[1]], &[entries[2], entries[3]]]);
        let v = VectorField::linear(a);
        let spec = FlowSpec::exact_linear(&v).unwrap();
        let vx = v.eval(&x);
        let gap = |h: f64| -> f64 {
            let fx = flow(&v, &spec, h, &x).unwrap();
            (0..2)
                .map(|i| ((fx[i] - x[i]) / h - vx[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let g1 = gap(1e-3);
        let g2 = gap(5e-4);
        // skip degenerate cases where the field nearly vanishes at x
        let speed: f64 = vx.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assume!(g1 > 1e-12 && speed > 1e-3);
        let ratio = g1 / g2;
        prop_assert!(ratio > 1.5 && ratio < 2.5, "ratio {ratio}");
    }
}
