//! Strong-error estimation and rate fitting, simulation of the limit SDEs of
//! the normalized errors U^N and V^N, distributional comparison and the
//! closed-form predictable-bracket check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{BrownianPath, RademacherSeq, TimeGrid, Trajectory};
use crate::num;
use crate::rng;
use crate::schemes::{
    reference_consistency_gap, reference_solution, simulate_euler, simulate_milstein, simulate_nv,
    simulate_nv_commuting, RefConfig,
};
use crate::stats::{self, ks_two_sample};
use crate::vecfield::{jacobian, lie_bracket, stratonovich_drift, SdeModel};
use crate::{Error, Result};

/// Error floor below which rate fits are meaningless (scheme exact up to flow
/// tolerance).
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Executes independent per-path tasks. Implementations must return results
/// in ascending path index so aggregation is independent of scheduling.
pub trait PathMap: Sync {
    fn run(
        &self,
        count: usize,
        task: &(dyn Fn(usize) -> Result<Vec<f64>> + Sync),
    ) -> Result<Vec<Vec<f64>>>;
}

/// Single-threaded executor.
pub struct SequentialMap;

impl PathMap for SequentialMap {
    fn run(
        &self,
        count: usize,
        task: &(dyn Fn(usize) -> Result<Vec<f64>> + Sync),
    ) -> Result<Vec<Vec<f64>>> {
        (0..count).map(task).collect()
    }
}

/// Integrator selector for experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Milstein,
    /// Ninomiya-Victoir, fixed ascending order.
    Nv,
    /// Ninomiya-Victoir with the Rademacher ordering coin.
    NvEta,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Milstein => "milstein",
            Scheme::Nv => "nv",
            Scheme::NvEta => "nv-eta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "milstein" => Ok(Scheme::Milstein),
            "nv" => Ok(Scheme::Nv),
            "nv-eta" => Ok(Scheme::NvEta),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }

    /// One trajectory of this scheme; `seed`/`path_index` feed the ordering
    /// coin of the η-randomized variant.
    pub fn simulate_path(
        &self,
        model: &SdeModel,
        grid: TimeGrid,
        path: &BrownianPath,
        seed: u64,
        path_index: u64,
    ) -> Result<Trajectory> {
        match self {
            Scheme::Euler => simulate_euler(model, grid, path),
            Scheme::Milstein => simulate_milstein(model, grid, path),
            Scheme::Nv => simulate_nv_commuting(model, grid, path),
            Scheme::NvEta => {
                let eta = RademacherSeq::sample(seed, path_index, grid.steps());
                simulate_nv(model, grid, path, &eta)
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RateRow {
    pub n_steps: usize,
    pub n_paths: usize,
    /// Estimate of E[max_k ‖X_{t_k} − X̂_{t_k}‖²]^{1/2}.
    pub err: f64,
    /// 95% half-width on `err`.
    pub ci_half: f64,
    /// Terminal gap between the r and 2r references on path 0 (sanity gate).
    pub ref_gap: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub slope_ci_half: Option<f64>,
}

/// Monte Carlo strong error of `scheme` on `model` for each step count in
/// `n_list`, over `m` coupled paths per row.
pub fn strong_error(
    model: &SdeModel,
    scheme: Scheme,
    n_list: &[usize],
    m: usize,
    master_seed: u64,
    ref_cfg: RefConfig,
    exec: &dyn PathMap,
) -> Result<RateTable> {
    model.validate()?;
    ref_cfg.validate()?;
    if m < 2 {
        return Err(Error::Config("need at least 2 paths".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let coarse = TimeGrid::new(model.horizon, n)?;
        // headroom factor 2 so the 2r consistency gate can share the path
        let fine = TimeGrid::new(model.horizon, n * ref_cfg.refinement * 2)?;
        let task = move |idx: usize| -> Result<Vec<f64>> {
            let path = BrownianPath::sample(master_seed, idx as u64, model.brownian_dim, fine);
            let traj = scheme.simulate_path(model, coarse, &path, master_seed, idx as u64)?;
            let reference = reference_solution(model, coarse, &path, ref_cfg)?;
            let mut max_sq = 0.0f64;
            for k in 0..=n {
                let mut diff_sq = 0.0;
                for (a, b) in traj.state(k).iter().zip(reference.state(k).iter()) {
                    diff_sq += (a - b) * (a - b);
                }
                max_sq = num::max(max_sq, diff_sq);
            }
            Ok(vec![max_sq])
        };
        let stats_per_path = exec.run(m, &task)?;
        let max_sqs: Vec<f64> = stats_per_path.iter().map(|v| v[0]).collect();
        let mean_sq = stats::mean(&max_sqs);
        let err = num::sqrt(mean_sq);
        let ci_mean = 1.96 * num::sqrt(stats::variance(&max_sqs) / m as f64);
        let ci_half = if err > 0.0 { ci_mean / (2.0 * err) } else { 0.0 };
        let gate_path = BrownianPath::sample(master_seed, 0, model.brownian_dim, fine);
        let ref_gap = reference_consistency_gap(model, coarse, &gate_path, ref_cfg)?;
        rows.push(RateRow {
            n_steps: n,
            n_paths: m,
            err,
            ci_half,
            ref_gap,
        });
    }
    Ok(RateTable {
        rows,
        slope: None,
        intercept: None,
        slope_ci_half: None,
    })
}

/// Log-log least squares on the rate table; the slope is reported as a
/// positive convergence order.
pub fn fit_rate(table: &RateTable) -> Result<(f64, f64, f64)> {
    if table.rows.len() < 3 {
        return Err(Error::DegenerateData("need at least 3 rate rows".into()));
    }
    for row in &table.rows {
        if row.err <= DEGENERACY_FLOOR {
            return Err(Error::DegenerateData(format!(
                "error {} at N = {} sits at the exactness floor",
                row.err, row.n_steps
            )));
        }
    }
    let xs: Vec<f64> = table.rows.iter().map(|r| num::ln(r.n_steps as f64)).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| num::ln(r.err)).collect();
    let fit = stats::ols(&xs, &ys)?;
    Ok((-fit.slope, fit.intercept, fit.slope_ci_half))
}

/// Which normalized-error object a sample set holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// N(X − X^NV), commuting-order scheme.
    UN,
    /// √N(X − X^{NV,η}), randomized scheme.
    VN,
    /// Terminal samples of the limit SDE for U.
    ULimit,
    /// Terminal samples of the limit SDE for V.
    VLimit,
}

impl ErrorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::UN => "U_N",
            ErrorKind::VN => "V_N",
            ErrorKind::ULimit => "U_limit",
            ErrorKind::VLimit => "V_limit",
        }
    }
}

/// Terminal-value samples of a normalized error or of its limit law.
#[derive(Clone, Debug)]
pub struct ErrorSampleSet {
    pub kind: ErrorKind,
    pub n_steps: Option<usize>,
    pub dim: usize,
    /// M × dim, row per path.
    pub samples: Vec<f64>,
    pub master_seed: u64,
}

impl ErrorSampleSet {
    pub fn n_samples(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        (0..self.n_samples())
            .map(|i| self.samples[i * self.dim + c])
            .collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        (0..self.n_samples())
            .map(|i| num::hypot_slice(&self.samples[i * self.dim..(i + 1) * self.dim]))
            .collect()
    }
}

/// Terminal samples of U^N = N(X_T − X^{NV}_T) or V^N = √N(X_T − X^{NV,η}_T),
/// with X the coupled fine-grid reference on the same Brownian path.
pub fn normalized_error_samples(
    model: &SdeModel,
    n: usize,
    m: usize,
    master_seed: u64,
    ref_cfg: RefConfig,
    kind: ErrorKind,
    exec: &dyn PathMap,
) -> Result<ErrorSampleSet> {
    model.validate()?;
    ref_cfg.validate()?;
    let scale = match kind {
        ErrorKind::UN => n as f64,
        ErrorKind::VN => num::sqrt(n as f64),
        _ => {
            return Err(Error::Config(
                "normalized_error_samples handles the empirical kinds U_N and V_N".into(),
            ))
        }
    };
    let coarse = TimeGrid::new(model.horizon, n)?;
    let fine = TimeGrid::new(model.horizon, n * ref_cfg.refinement)?;
    let dim = model.dim;
    let task = move |idx: usize| -> Result<Vec<f64>> {
        let path = BrownianPath::sample(master_seed, idx as u64, model.brownian_dim, fine);
        let traj = match kind {
            ErrorKind::UN => simulate_nv_commuting(model, coarse, &path)?,
            _ => {
                let eta = RademacherSeq::sample(master_seed, idx as u64, n);
                simulate_nv(model, coarse, &path, &eta)?
            }
        };
        let reference = reference_solution(model, coarse, &path, ref_cfg)?;
        Ok(reference
            .terminal()
            .iter()
            .zip(traj.terminal().iter())
            .map(|(x, y)| scale * (x - y))
            .collect())
    };
    let per_path = exec.run(m, &task)?;
    let mut samples = Vec::with_capacity(m * dim);
    for row in per_path {
        samples.extend_from_slice(&row);
    }
    Ok(ErrorSampleSet {
        kind,
        n_steps: Some(n),
        dim,
        samples,
        master_seed,
    })
}

fn limit_reference(model: &SdeModel, grid: TimeGrid, path: &BrownianPath) -> Result<Trajectory> {
    if let Some(exact) = &model.exact {
        Ok(exact(&grid, path))
    } else {
        simulate_nv_commuting(model, grid, path)
    }
}

fn simulate_limit_u_scaled(
    model: &SdeModel,
    m: usize,
    fine_n: usize,
    master_seed: u64,
    source_scale: f64,
    exec: &dyn PathMap,
) -> Result<ErrorSampleSet> {
    model.validate()?;
    let grid = TimeGrid::new(model.horizon, fine_n)?;
    let dim = model.dim;
    let d = model.brownian_dim;
    let sigma0 = stratonovich_drift(model);
    let source_coef = source_scale * model.horizon / (2.0 * num::sqrt(3.0));
    let task = move |idx: usize| -> Result<Vec<f64>> {
        let path = BrownianPath::sample(master_seed, idx as u64, d, grid);
        let x_traj = limit_reference(model, grid, &path)?;
        let h = grid.step_size();
        let sd_aux = num::sqrt(h);
        let mut u = vec![0.0f64; dim];
        for k in 0..fine_n {
            let x = x_traj.state(k);
            let jac_b = jacobian(&model.drift, x)?;
            let drift_term = jac_b.matvec(&u);
            let mut next: Vec<f64> = u
                .iter()
                .zip(drift_term.iter())
                .map(|(ui, di)| ui + h * di)
                .collect();
            for j in 0..d {
                let dw = path.value(j, k + 1) - path.value(j, k);
                let jac_s = jacobian(&model.diffusion[j], x)?;
                let diff_term = jac_s.matvec(&u);
                let br = lie_bracket(&sigma0, &model.diffusion[j], x)?;
                let db = sd_aux
                    * rng::standard_normal(
                        master_seed,
                        idx as u64,
                        rng::STREAM_AUX_BASE + j as u64,
                        k as u64,
                    );
                for i in 0..dim {
                    next[i] += diff_term[i] * dw + source_coef * br[i] * db;
                }
            }
            for v in &next {
                if !v.is_finite() {
                    return Err(Error::NumericalFailure(format!(
                        "limit SDE overflow at step {k} on path {idx}"
                    )));
                }
            }
            u = next;
        }
        Ok(u)
    };
    let per_path = exec.run(m, &task)?;
    let mut samples = Vec::with_capacity(m * dim);
    for row in per_path {
        samples.extend_from_slice(&row);
    }
    Ok(ErrorSampleSet {
        kind: ErrorKind::ULimit,
        n_steps: None,
        dim,
        samples,
        master_seed,
    })
}

/// Euler simulation of the limit SDE of U: source (T/(2√3)) Σⱼ [σ⁰,σʲ](X)dB̃ʲ
/// plus the affine transport terms ∂b(X)U dt + Σ ∂σʲ(X)U dWʲ, with B̃ on RNG
/// streams disjoint from W. Terminal samples.
pub fn simulate_limit_sde_u(
    model: &SdeModel,
    m: usize,
    fine_n: usize,
    master_seed: u64,
    exec: &dyn PathMap,
) -> Result<ErrorSampleSet> {
    simulate_limit_u_scaled(model, m, fine_n, master_seed, 1.0, exec)
}

/// Same as [`simulate_limit_sde_u`] with the bracket source multiplied by
/// `source_scale`; with shared seeds the output is exactly linear in it.
pub fn simulate_limit_sde_u_scaled(
    model: &SdeModel,
    m: usize,
    fine_n: usize,
    master_seed: u64,
    source_scale: f64,
    exec: &dyn PathMap,
) -> Result<ErrorSampleSet> {
    simulate_limit_u_scaled(model, m, fine_n, master_seed, source_scale, exec)
}

/// Euler simulation of the limit SDE of V: source √(T/2) Σ_{m<j} [σʲ,σᵐ](X)
/// dB^{j,m} over the d(d−1)/2 auxiliary components, plus the same affine
/// transport terms.
pub fn simulate_limit_sde_v(
    model: &SdeModel,
    m: usize,
    fine_n: usize,
    master_seed: u64,
    exec: &dyn PathMap,
) -> Result<ErrorSampleSet> {
    model.validate()?;
    let grid = TimeGrid::new(model.horizon, fine_n)?;
    let dim = model.dim;
    let d = model.brownian_dim;
    let source_coef = num::sqrt(model.horizon / 2.0);
    // pair index for (j, m), m < j, in lexicographic order
    let mut pairs = Vec::new();
    for j in 0..d {
        for mm in 0..j {
            pairs.push((j, mm));
        }
    }
    let pairs = pairs;
    let task = move |idx: usize| -> Result<Vec<f64>> {
        let path = BrownianPath::sample(master_seed, idx as u64, d, grid);
        let x_traj = limit_reference(model, grid, &path)?;
        let h = grid.step_size();
        let sd_aux = num::sqrt(h);
        let mut v = vec![0.0f64; dim];
        for k in 0..fine_n {
            let x = x_traj.state(k);
            let jac_b = jacobian(&model.drift, x)?;
            let drift_term = jac_b.matvec(&v);
            let mut next: Vec<f64> = v
                .iter()
                .zip(drift_term.iter())
                .map(|(vi, di)| vi + h * di)
                .collect();
            for j in 0..d {
                let dw = path.value(j, k + 1) - path.value(j, k);
                let jac_s = jacobian(&model.diffusion[j], x)?;
                let diff_term = jac_s.matvec(&v);
                for i in 0..dim {
                    next[i] += diff_term[i] * dw;
                }
            }
            for (p, &(j, mm)) in pairs.iter().enumerate() {
                let br = lie_bracket(&model.diffusion[j], &model.diffusion[mm], x)?;
                let db = sd_aux
                    * rng::standard_normal(
                        master_seed,
                        idx as u64,
                        rng::STREAM_PAIR_BASE + p as u64,
                        k as u64,
                    );
                for i in 0..dim {
                    next[i] += source_coef * br[i] * db;
                }
            }
            for val in &next {
                if !val.is_finite() {
                    return Err(Error::NumericalFailure(format!(
                        "limit SDE overflow at step {k} on path {idx}"
                    )));
                }
            }
            v = next;
        }
        Ok(v)
    };
    let per_path = exec.run(m, &task)?;
    let mut samples = Vec::with_capacity(m * dim);
    for row in per_path {
        samples.extend_from_slice(&row);
    }
    Ok(ErrorSampleSet {
        kind: ErrorKind::VLimit,
        n_steps: None,
        dim,
        samples,
        master_seed,
    })
}

#[derive(Clone, Debug)]
pub struct CoordComparison {
    /// Coordinate index, or `None` for the Euclidean-norm statistic.
    pub coord: Option<usize>,
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub mean_diff_se: f64,
    pub ks: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub coords: Vec<CoordComparison>,
    pub alpha: f64,
    /// True iff every per-coordinate KS p-value is at least alpha.
    pub pass: bool,
}

/// Per-coordinate mean/variance differences plus two-sample KS tests; the
/// Euclidean norm gets an extra row. The pass flag requires every KS p-value
/// (coordinates and norm) to clear `alpha`.
pub fn compare_distributions(
    a: &ErrorSampleSet,
    b: &ErrorSampleSet,
    alpha: f64,
) -> Result<ComparisonReport> {
    if a.dim != b.dim {
        return Err(Error::Dimension {
            expected: a.dim,
            got: b.dim,
        });
    }
    let mut coords = Vec::with_capacity(a.dim + 1);
    let mut pass = true;
    let mut push = |coord: Option<usize>, xs: Vec<f64>, ys: Vec<f64>| -> Result<()> {
        let ks = ks_two_sample(&xs, &ys)?;
        let (ma, mb) = (stats::mean(&xs), stats::mean(&ys));
        let (va, vb) = (stats::variance(&xs), stats::variance(&ys));
        let se = num::sqrt(va / xs.len() as f64 + vb / ys.len() as f64);
        if ks.p_value < alpha {
            pass = false;
        }
        coords.push(CoordComparison {
            coord,
            mean_a: ma,
            mean_b: mb,
            var_a: va,
            var_b: vb,
            mean_diff_se: se,
            ks: ks.statistic,
            p_value: ks.p_value,
        });
        Ok(())
    };
    for c in 0..a.dim {
        push(Some(c), a.coordinate(c), b.coordinate(c))?;
    }
    if a.dim > 1 {
        push(None, a.norms(), b.norms())?;
    }
    let pass = pass;
    Ok(ComparisonReport { coords, alpha, pass })
}

/// Closed-form predictable bracket ⟨M^{j,N}⟩_t = (1/12)N²(⌊Nt/T⌋ T³/N³ +
/// (t − τ̂_t)³). The floor carries a half-ulp guard so grid points land in
/// the full-intervals branch and the remainder cancels exactly.
pub fn bracket_mn(t: f64, n: usize, horizon: f64) -> Result<f64> {
    if n == 0 || !(horizon > 0.0) {
        return Err(Error::Domain(format!("need N >= 1 and T > 0, got N={n}, T={horizon}")));
    }
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {horizon}]")));
    }
    let nf = n as f64;
    let mut full = num::floor(t / horizon * nf + 1e-12 * nf);
    if full > nf {
        full = nf;
    }
    let tau_hat = full * horizon / nf;
    let remainder = num::max(0.0, t - tau_hat);
    // (1/12)N²·⌊Nt/T⌋·T³/N³ written as τ̂·T²/12 so grid points evaluate to
    // exactly t_k·T²/12
    Ok(tau_hat * horizon * horizon / 12.0
        + nf * nf * remainder * remainder * remainder / 12.0)
}
