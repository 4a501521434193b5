//! SDE integrators: Euler-Maruyama, Milstein (commuting scope), the
//! η-randomized Ninomiya-Victoir scheme and its fixed-order commuting
//! variant, plus the coupled fine-grid reference solution.

use alloc::format;
use alloc::vec::Vec;

use crate::flows::flow;
use crate::grid::{BrownianPath, RademacherSeq, TimeGrid, Trajectory};
use crate::num;
use crate::vecfield::{
    check_commutativity, jacobian, sample_points, stratonovich_drift, SdeModel, COMMUTE_BASE_TOL,
};
use crate::{Error, Result};

fn check_state(x: &[f64], step: usize) -> Result<()> {
    let norm = num::hypot_slice(x);
    if !norm.is_finite() || norm > 1e300 {
        return Err(Error::NumericalFailure(format!(
            "state overflow at step {step}, |x| = {norm}"
        )));
    }
    Ok(())
}

fn grid_increments(grid: &TimeGrid, path: &BrownianPath) -> Result<Vec<f64>> {
    if path.grid().horizon() != grid.horizon() {
        return Err(Error::Config(format!(
            "path horizon {} differs from grid horizon {}",
            path.grid().horizon(),
            grid.horizon()
        )));
    }
    path.increments(grid.steps())
}

/// Euler-Maruyama: X_{k+1} = X_k + b(X_k)h + Σ σʲ(X_k)ΔWʲ.
pub fn simulate_euler(model: &SdeModel, grid: TimeGrid, path: &BrownianPath) -> Result<Trajectory> {
    let inc = grid_increments(&grid, path)?;
    let n = grid.steps();
    let h = grid.step_size();
    let mut traj = Trajectory::from_initial(grid, &model.x0);
    let mut x = model.x0.clone();
    for k in 0..n {
        let bx = model.drift.eval_checked(&x)?;
        let mut next: Vec<f64> = x.iter().zip(bx.iter()).map(|(xi, bi)| xi + h * bi).collect();
        for (j, sigma) in model.diffusion.iter().enumerate() {
            let sx = sigma.eval_checked(&x)?;
            let dw = inc[j * n + k];
            for (ni, si) in next.iter_mut().zip(sx.iter()) {
                *ni += si * dw;
            }
        }
        check_state(&next, k + 1)?;
        traj.set_state(k + 1, &next);
        x = next;
    }
    Ok(traj)
}

/// Milstein with the commuting reduction of the iterated integrals:
/// correction ½ Σ_{j,m} ∂σᵐσʲ (ΔWʲΔWᵐ − δ_{jm}h). Valid for d = 1, or when
/// the Brownian fields commute (so Lévy areas cancel); otherwise refused.
pub fn simulate_milstein(
    model: &SdeModel,
    grid: TimeGrid,
    path: &BrownianPath,
) -> Result<Trajectory> {
    if model.brownian_dim > 1 {
        let points = sample_points(&model.x0, 64);
        let report = check_commutativity(model, &points, COMMUTE_BASE_TOL)?;
        if !report.brownian_commute {
            return Err(Error::UnsupportedModel(
                "Milstein without Lévy areas needs d = 1 or commuting Brownian fields".into(),
            ));
        }
    }
    let inc = grid_increments(&grid, path)?;
    let n = grid.steps();
    let h = grid.step_size();
    let d = model.brownian_dim;
    let mut traj = Trajectory::from_initial(grid, &model.x0);
    let mut x = model.x0.clone();
    for k in 0..n {
        let bx = model.drift.eval_checked(&x)?;
        let mut next: Vec<f64> = x.iter().zip(bx.iter()).map(|(xi, bi)| xi + h * bi).collect();
        for (j, sigma) in model.diffusion.iter().enumerate() {
            let sx = sigma.eval_checked(&x)?;
            let dw = inc[j * n + k];
            for (ni, si) in next.iter_mut().zip(sx.iter()) {
                *ni += si * dw;
            }
        }
        for j in 0..d {
            let sj = model.diffusion[j].eval(&x);
            let dwj = inc[j * n + k];
            for m in 0..d {
                let jac_m = jacobian(&model.diffusion[m], &x)?;
                let corr = jac_m.matvec(&sj);
                let dwm = inc[m * n + k];
                let weight = 0.5 * (dwj * dwm - if j == m { h } else { 0.0 });
                for (ni, ci) in next.iter_mut().zip(corr.iter()) {
                    *ni += weight * ci;
                }
            }
        }
        check_state(&next, k + 1)?;
        traj.set_state(k + 1, &next);
        x = next;
    }
    Ok(traj)
}

fn nv_step(
    model: &SdeModel,
    sigma0: &crate::vecfield::VectorField,
    x: &[f64],
    h: f64,
    dw: &[f64],
    ascending: bool,
) -> Result<Vec<f64>> {
    let mut y = flow(sigma0, &model.drift_flow, 0.5 * h, x)?;
    let d = model.brownian_dim;
    if ascending {
        for j in 0..d {
            y = flow(&model.diffusion[j], &model.diffusion_flows[j], dw[j], &y)?;
        }
    } else {
        for j in (0..d).rev() {
            y = flow(&model.diffusion[j], &model.diffusion_flows[j], dw[j], &y)?;
        }
    }
    flow(sigma0, &model.drift_flow, 0.5 * h, &y)
}

/// η-randomized Ninomiya-Victoir scheme: each step composes the half-drift
/// flow, the d Brownian flows run for the signed times ΔWʲ (ascending order
/// when η = +1, descending when η = −1), and the half-drift flow again.
pub fn simulate_nv(
    model: &SdeModel,
    grid: TimeGrid,
    path: &BrownianPath,
    eta: &RademacherSeq,
) -> Result<Trajectory> {
    if eta.len() < grid.steps() {
        return Err(Error::Config(format!(
            "Rademacher sequence has {} coins for {} steps",
            eta.len(),
            grid.steps()
        )));
    }
    let inc = grid_increments(&grid, path)?;
    let n = grid.steps();
    let h = grid.step_size();
    let d = model.brownian_dim;
    let sigma0 = stratonovich_drift(model);
    let mut traj = Trajectory::from_initial(grid, &model.x0);
    let mut x = model.x0.clone();
    let mut dw = alloc::vec![0.0; d];
    for k in 0..n {
        for j in 0..d {
            dw[j] = inc[j * n + k];
        }
        let next = nv_step(model, &sigma0, &x, h, &dw, eta.coin(k) > 0)?;
        check_state(&next, k + 1)?;
        traj.set_state(k + 1, &next);
        x = next;
    }
    Ok(traj)
}

/// Ninomiya-Victoir with a fixed ascending composition order every step —
/// the natural form when the Brownian fields commute, where the ordering coin
/// carries no information. Not enforced: on non-commuting models this is
/// still a valid order-1/2 integrator, just not the randomized one.
pub fn simulate_nv_commuting(
    model: &SdeModel,
    grid: TimeGrid,
    path: &BrownianPath,
) -> Result<Trajectory> {
    let eta = RademacherSeq::constant(1, grid.steps());
    simulate_nv(model, grid, path, &eta)
}

/// Configuration for the coupled fine-grid reference.
#[derive(Clone, Copy, Debug)]
pub struct RefConfig {
    /// Grid refinement factor (power of two, ≥ 2).
    pub refinement: usize,
}

impl Default for RefConfig {
    fn default() -> Self {
        RefConfig { refinement: 16 }
    }
}

impl RefConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refinement < 2 || !self.refinement.is_power_of_two() {
            return Err(Error::Config(format!(
                "refinement must be a power of two >= 2, got {}",
                self.refinement
            )));
        }
        Ok(())
    }
}

/// Strong reference coupled to `path`: the exact solution evaluated on the
/// refined grid when the model has one, otherwise the commuting-order NV
/// scheme on the `refinement`-times finer grid, subsampled back to
/// `grid_coarse`. Sharing the Brownian path realizes the pathwise difference
/// the strong-error estimates measure.
pub fn reference_solution(
    model: &SdeModel,
    grid_coarse: TimeGrid,
    path: &BrownianPath,
    cfg: RefConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let fine_steps = grid_coarse
        .steps()
        .checked_mul(cfg.refinement)
        .ok_or_else(|| Error::Config("refined grid overflows".into()))?;
    if path.grid().steps() % fine_steps != 0 {
        return Err(Error::Config(format!(
            "path has {} steps, not divisible by refined count {fine_steps}",
            path.grid().steps()
        )));
    }
    let fine_grid = TimeGrid::new(grid_coarse.horizon(), fine_steps)?;
    let fine = if let Some(exact) = &model.exact {
        let fine_path = path.coarsen(fine_steps)?;
        exact(&fine_grid, &fine_path)
    } else {
        simulate_nv_commuting(model, fine_grid, path)?
    };
    fine.subsample(grid_coarse.steps())
}

/// Terminal gap between the `r` and `2r` references on one path — the
/// self-consistency gate run before rate experiments.
pub fn reference_consistency_gap(
    model: &SdeModel,
    grid_coarse: TimeGrid,
    path: &BrownianPath,
    cfg: RefConfig,
) -> Result<f64> {
    let a = reference_solution(model, grid_coarse, path, cfg)?;
    let b = reference_solution(
        model,
        grid_coarse,
        path,
        RefConfig {
            refinement: cfg.refinement * 2,
        },
    )?;
    let mut worst = 0.0f64;
    for k in 0..=grid_coarse.steps() {
        let mut diff_sq = 0.0;
        for (x, y) in a.state(k).iter().zip(b.state(k).iter()) {
            diff_sq += (x - y) * (x - y);
        }
        worst = num::max(worst, num::sqrt(diff_sq));
    }
    Ok(worst)
}
