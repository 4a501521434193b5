//! End-to-end acceptance experiments: measured convergence orders, exactness
//! under commutativity, limit-law matches, the bracket formula, randomized
//! property sweeps and baseline cross-checks. Each test prints one PASS line
//! (visible with --nocapture).

use nvsde_cli::par::RayonMap;
use nvsde_core::errorlab::{
    bracket_mn, compare_distributions, fit_rate, normalized_error_samples, simulate_limit_sde_u,
    strong_error, ErrorKind, Scheme, SequentialMap,
};
use nvsde_core::grid::{BrownianPath, TimeGrid};
use nvsde_core::linalg::Mat;
use nvsde_core::registry::build_model;
use nvsde_core::rng;
use nvsde_core::schemes::{simulate_nv_commuting, RefConfig};
use nvsde_core::stats;
use nvsde_core::vecfield::{
    jacobian, lie_bracket, stratonovich_drift, tensor_apply, Tensor3, VectorField,
};

const LADDER: [usize; 5] = [16, 32, 64, 128, 256];

fn fitted_slope(model_name: &str, scheme: Scheme, m: usize, refinement: usize, seed: u64) -> f64 {
    let model = build_model(model_name, &[], None, None).unwrap();
    let exec = RayonMap::new(0).unwrap();
    let table = strong_error(
        &model,
        scheme,
        &LADDER,
        m,
        seed,
        RefConfig { refinement },
        &exec,
    )
    .unwrap();
    let (slope, _, _) = fit_rate(&table).unwrap();
    slope
}

#[test]
fn criterion_1_order_half_noncommuting() {
    let slope = fitted_slope("noncommuting-2d", Scheme::NvEta, 4000, 16, 101);
    assert!(
        (0.4..=0.6).contains(&slope),
        "FAIL criterion 1: slope {slope} outside [0.4, 0.6]"
    );
    println!("PASS criterion 1: noncommuting-2d nv-eta slope {slope:.4} in [0.4, 0.6]");
}

#[test]
fn criterion_2_order_one_commuting() {
    let slope = fitted_slope("additive-sin", Scheme::Nv, 4000, 4, 102);
    assert!(
        (0.85..=1.15).contains(&slope),
        "FAIL criterion 2: slope {slope} outside [0.85, 1.15]"
    );
    println!("PASS criterion 2: additive-sin nv slope {slope:.4} in [0.85, 1.15]");
}

#[test]
fn criterion_3_full_commutativity_exactness() {
    let model = build_model("bs", &[], None, None).unwrap();
    let grid = TimeGrid::new(model.horizon, 16).unwrap();
    let exact = model.exact.clone().unwrap();
    let mut worst = 0.0f64;
    for path_index in 0..100 {
        let path = BrownianPath::sample(103, path_index, model.brownian_dim, grid);
        let nv = simulate_nv_commuting(&model, grid, &path).unwrap();
        let truth = exact(&grid, &path);
        for k in 0..=16 {
            worst = worst.max((nv.state(k)[0] - truth.state(k)[0]).abs());
        }
    }
    assert!(worst <= 1e-9, "FAIL criterion 3: worst error {worst} > 1e-9");
    println!("PASS criterion 3: bs nv exact to {worst:.2e} at all grid times, 100 paths");
}

#[test]
fn criterion_4_limit_law_match() {
    let model = build_model("linear-1d", &[], None, None).unwrap();
    let m = 5000;
    let exec = RayonMap::new(0).unwrap();
    let empirical = normalized_error_samples(
        &model,
        256,
        m,
        104,
        RefConfig { refinement: 16 },
        ErrorKind::UN,
        &exec,
    )
    .unwrap();
    let limit = simulate_limit_sde_u(&model, m, 2048, 105, &exec).unwrap();
    let report = compare_distributions(&empirical, &limit, 0.01).unwrap();
    assert!(report.pass, "FAIL criterion 4: KS rejected: {:?}", report.coords);

    let target = (std::f64::consts::E.powi(2) - 1.0) / 24.0;
    let var_e = stats::variance(&empirical.coordinate(0));
    let var_l = stats::variance(&limit.coordinate(0));
    let se_pooled =
        ((var_e * var_e + var_l * var_l) * 2.0 / m as f64).sqrt();
    assert!(
        (var_e - target).abs() <= 3.0 * se_pooled,
        "FAIL criterion 4: Var(U^N_T) = {var_e} vs analytic {target} (3 SE = {})",
        3.0 * se_pooled
    );
    println!(
        "PASS criterion 4: KS p_min {:.3} >= 0.01, Var(U^N_T) {var_e:.4} vs (e^2-1)/24 = {target:.4}",
        report
            .coords
            .iter()
            .map(|c| c.p_value)
            .fold(f64::INFINITY, f64::min)
    );
}

#[test]
fn criterion_5_vanishing_limit() {
    let model = build_model("bs", &[], None, None).unwrap();
    let n = 64;
    let exec = RayonMap::new(0).unwrap();
    let set = normalized_error_samples(
        &model,
        n,
        1000,
        106,
        RefConfig { refinement: 4 },
        ErrorKind::UN,
        &exec,
    )
    .unwrap();
    let worst = set.samples.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
    let bound = n as f64 * 1e-9;
    assert!(worst <= bound, "FAIL criterion 5: max |U^N_T| {worst} > {bound}");
    println!("PASS criterion 5: bs max |U^N_T| {worst:.2e} <= N*1e-9 over 1000 paths");
}

#[test]
fn criterion_6_bracket_formula() {
    let horizon = 2.0;
    let t = horizon / 3.0;
    let limit = t * horizon * horizon / 12.0;
    let mut n = 10usize;
    while n <= 10_000 {
        let gap = (bracket_mn(t, n, horizon).unwrap() - limit).abs();
        let bound = 8.0 * horizon.powi(3) / (12.0 * n as f64);
        assert!(gap <= bound, "FAIL criterion 6: N={n} gap {gap} > {bound}");
        n *= 10;
    }
    for n in [10usize, 37, 256, 4096] {
        for k in 0..=n {
            let tk = k as f64 * horizon / n as f64;
            let got = bracket_mn(tk, n, horizon).unwrap();
            let expect = tk * horizon * horizon / 12.0;
            let ulp = expect.abs().max(f64::MIN_POSITIVE) * f64::EPSILON;
            assert!(
                (got - expect).abs() <= ulp,
                "FAIL criterion 6: grid point N={n} k={k}: {got} vs {expect}"
            );
        }
    }
    println!("PASS criterion 6: bracket gap O(1/N) at t=T/3 and <=1 ulp at grid points");
}

fn rand_unit(seed: u64, stream: u64, counter: u64) -> f64 {
    2.0 * rng::uniform(seed, 0, stream, counter) - 1.0
}

fn random_quadratic_field(seed: u64, stream: u64) -> VectorField {
    let coeffs: Vec<f64> = (0..12).map(|k| rand_unit(seed, stream, k)).collect();
    let c = coeffs.clone();
    VectorField::new(2, "random-quadratic", move |x| {
        vec![
            c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1],
            c[5] + c[6] * x[0] + c[7] * x[1] + c[8] * x[1] * x[1] + c[9] * x[0] * x[1],
        ]
    })
}

#[test]
fn criterion_7_randomized_property_sweeps() {
    let mut cases = 0usize;

    // Lie-bracket antisymmetry at random points
    for case in 0..300u64 {
        let v = random_quadratic_field(700 + case, 0);
        let w = random_quadratic_field(700 + case, 1);
        let x = [rand_unit(700 + case, 2, 0), rand_unit(700 + case, 2, 1)];
        let vw = lie_bracket(&v, &w, &x).unwrap();
        let wv = lie_bracket(&w, &v, &x).unwrap();
        for i in 0..2 {
            assert!((vw[i] + wv[i]).abs() < 1e-6, "antisymmetry case {case}");
        }
        cases += 1;
    }

    // tensor_apply linearity in the contracted vector
    for case in 0..200u64 {
        let t = Tensor3::from_fn(2, 2, 2, |i, k, l| {
            rand_unit(800 + case, 0, (i * 4 + k * 2 + l) as u64)
        });
        let a: Vec<f64> = (0..2).map(|k| rand_unit(800 + case, 1, k)).collect();
        let b: Vec<f64> = (0..2).map(|k| rand_unit(800 + case, 2, k)).collect();
        let lam = rand_unit(800 + case, 3, 0);
        let combo: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x + lam * y).collect();
        let lhs = tensor_apply(&t, &combo).unwrap();
        let ta = tensor_apply(&t, &a).unwrap();
        let tb = tensor_apply(&t, &b).unwrap();
        for i in 0..lhs.n_rows() {
            for j in 0..lhs.n_cols() {
                let rhs = ta.get(i, j) + lam * tb.get(i, j);
                assert!((lhs.get(i, j) - rhs).abs() < 1e-12, "linearity case {case}");
            }
        }
        cases += 1;
    }

    // Stratonovich drift equals the Ito drift under additive noise
    let additive = build_model("additive-sin", &[], None, None).unwrap();
    let s0 = stratonovich_drift(&additive);
    for case in 0..200u64 {
        let x = [2.0 * rand_unit(900 + case, 1, 0)];
        assert_eq!(s0.eval(&x)[0], additive.drift.eval(&x)[0], "additive case {case}");
        cases += 1;
    }

    // path coarsening consistency: coarsen twice equals coarsen once, bitwise
    for case in 0..200u64 {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let path = BrownianPath::sample(1000 + case, case, 2, grid);
        let via_two = path.coarsen(32).unwrap().coarsen(16).unwrap();
        let direct = path.coarsen(16).unwrap();
        for j in 0..2 {
            for k in 0..=16 {
                assert_eq!(
                    via_two.value(j, k).to_bits(),
                    direct.value(j, k).to_bits(),
                    "coarsen case {case}"
                );
            }
        }
        cases += 1;
    }

    // flow semigroup on random linear fields
    {
        use nvsde_core::flows::{flow, FlowSpec};
        for case in 0..100u64 {
            let a = Mat::from_fn(2, 2, |i, j| rand_unit(1100 + case, 0, (i * 2 + j) as u64));
            let v = VectorField::linear(a);
            let spec = FlowSpec::exact_linear(&v).unwrap();
            let x = [rand_unit(1100 + case, 1, 0), rand_unit(1100 + case, 1, 1)];
            let s = rand_unit(1100 + case, 2, 0);
            let t = rand_unit(1100 + case, 2, 1);
            let step = flow(&v, &spec, t, &flow(&v, &spec, s, &x).unwrap()).unwrap();
            let direct = flow(&v, &spec, s + t, &x).unwrap();
            for i in 0..2 {
                assert!((step[i] - direct[i]).abs() < 1e-9, "semigroup case {case}");
            }
            cases += 1;
        }
    }

    // jacobian consistency: analytic-vs-none agreement through lie brackets
    for case in 0..100u64 {
        let v = random_quadratic_field(1200 + case, 0);
        let x = [rand_unit(1200 + case, 1, 0), rand_unit(1200 + case, 1, 1)];
        let j = jacobian(&v, &x).unwrap();
        // directional-derivative check against a symmetric difference
        let dir = [rand_unit(1200 + case, 2, 0), rand_unit(1200 + case, 2, 1)];
        let h = 1e-5;
        let xp: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + h * d).collect();
        let xm: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a - h * d).collect();
        let (fp, fm) = (v.eval(&xp), v.eval(&xm));
        let jd = j.matvec(&dir);
        for i in 0..2 {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            assert!((jd[i] - fd).abs() < 1e-5, "jacobian case {case}");
        }
        cases += 1;
    }

    // full-run determinism under varying thread counts
    let model = build_model("noncommuting-2d", &[], None, None).unwrap();
    let runs: Vec<_> = [1usize, 2, 4]
        .iter()
        .map(|&threads| {
            strong_error(
                &model,
                Scheme::NvEta,
                &[16, 32, 64],
                64,
                1300,
                RefConfig { refinement: 4 },
                &RayonMap::new(threads).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let seq = strong_error(
        &model,
        Scheme::NvEta,
        &[16, 32, 64],
        64,
        1300,
        RefConfig { refinement: 4 },
        &SequentialMap,
    )
    .unwrap();
    for run in &runs {
        for (a, b) in run.rows.iter().zip(seq.rows.iter()) {
            assert_eq!(a.err.to_bits(), b.err.to_bits(), "thread determinism");
            assert_eq!(a.ci_half.to_bits(), b.ci_half.to_bits(), "thread determinism");
        }
        cases += 1;
    }

    assert!(cases >= 1000, "only {cases} randomized cases");
    println!("PASS criterion 7: {cases} randomized property cases, zero failures");
}

#[test]
fn criterion_8_baseline_cross_checks() {
    let euler = fitted_slope("bs", Scheme::Euler, 2000, 2, 108);
    assert!(
        (0.4..=0.6).contains(&euler),
        "FAIL criterion 8: euler slope {euler} outside [0.4, 0.6]"
    );
    let milstein = fitted_slope("bs", Scheme::Milstein, 2000, 2, 109);
    assert!(
        (0.85..=1.15).contains(&milstein),
        "FAIL criterion 8: milstein slope {milstein} outside [0.85, 1.15]"
    );
    println!(
        "PASS criterion 8: bs euler slope {euler:.4} in [0.4, 0.6], milstein slope {milstein:.4} in [0.85, 1.15]"
    );
}
