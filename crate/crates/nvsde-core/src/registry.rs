//! Built-in SDE models, constructible by name from a parameter map.
//!
//! - `bs`              geometric Brownian motion, fully commuting (μ, σ)
//! - `linear-1d`       dX = αX dt + dW, additive noise, [σ⁰,σ¹] = −α (α)
//! - `additive-sin`    dX = sin(X) dt + dW, drift does not commute with σ¹
//! - `noncommuting-2d` b = 0, σ¹ = (1,0), σ² = (0, x₁): [σ²,σ¹] = (0,1)
//! - `constant`        dX = c₀ dt + c₁ dW, scheme-exact (c0, c1)

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::flows::{FlowSpec, DEFAULT_SUBSTEPS};
use crate::grid::{BrownianPath, TimeGrid, Trajectory};
use crate::linalg::Mat;
use crate::num;
use crate::vecfield::{stratonovich_drift, SdeModel, Tensor3, VectorField};
use crate::{Error, Result};

pub const MODEL_NAMES: [&str; 5] = ["bs", "linear-1d", "additive-sin", "noncommuting-2d", "constant"];

/// Pull a parameter by name, rejecting names no model parameter matches.
struct Params<'a> {
    entries: &'a [(String, f64)],
}

impl<'a> Params<'a> {
    fn get(&self, name: &str, default: f64) -> f64 {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
            .unwrap_or(default)
    }

    fn check_known(&self, known: &[&str]) -> Result<()> {
        for (k, _) in self.entries {
            if !known.iter().any(|n| n == k) {
                return Err(Error::Config(format!(
                    "unknown model parameter '{k}' (known: {known:?})"
                )));
            }
        }
        Ok(())
    }
}

/// Build a named model. `x0` and `horizon` override the model defaults.
pub fn build_model(
    name: &str,
    params: &[(String, f64)],
    x0: Option<&[f64]>,
    horizon: Option<f64>,
) -> Result<SdeModel> {
    let p = Params { entries: params };
    let t = horizon.unwrap_or(1.0);
    if !(t > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {t}")));
    }
    let model = match name {
        "bs" => black_scholes(&p, x0, t)?,
        "linear-1d" => linear_1d(&p, x0, t)?,
        "additive-sin" => additive_sin(&p, x0, t)?,
        "noncommuting-2d" => noncommuting_2d(&p, x0, t)?,
        "constant" => constant_model(&p, x0, t)?,
        other => {
            return Err(Error::Config(format!(
                "unknown model '{other}' (known: {MODEL_NAMES:?})"
            )))
        }
    };
    model.validate()?;
    Ok(model)
}

fn require_x0(x0: Option<&[f64]>, dim: usize, default: &[f64]) -> Result<Vec<f64>> {
    match x0 {
        Some(v) if v.len() == dim => Ok(v.to_vec()),
        Some(v) => Err(Error::Dimension {
            expected: dim,
            got: v.len(),
        }),
        None => Ok(default.to_vec()),
    }
}

/// Scalar linear field V(x) = a·x with exact derivatives.
fn scalar_linear(a: f64, label: &str) -> VectorField {
    VectorField::new(1, String::from(label), move |x| vec![a * x[0]])
        .with_jac(move |_| Mat::from_rows(&[&[a]]))
        .with_hess(|_| Tensor3::zeros(1, 1, 1))
}

fn black_scholes(p: &Params, x0: Option<&[f64]>, t: f64) -> Result<SdeModel> {
    p.check_known(&["mu", "sigma"])?;
    let mu = p.get("mu", 0.1);
    let sigma = p.get("sigma", 0.2);
    let x0 = require_x0(x0, 1, &[1.0])?;
    let start = x0[0];
    let exact = move |grid: &TimeGrid, path: &BrownianPath| -> Trajectory {
        let mut traj = Trajectory::from_initial(*grid, &[start]);
        for k in 1..=grid.steps() {
            let time = grid.time(k);
            let w = path.value(0, k);
            let x = start * num::exp((mu - 0.5 * sigma * sigma) * time + sigma * w);
            traj.set_state(k, &[x]);
        }
        traj
    };
    let mut model = SdeModel {
        dim: 1,
        brownian_dim: 1,
        drift: scalar_linear(mu, "mu*x"),
        diffusion: vec![scalar_linear(sigma, "sigma*x")],
        horizon: t,
        x0,
        exact: Some(Arc::new(exact)),
        drift_flow: FlowSpec::numeric(DEFAULT_SUBSTEPS)?,
        diffusion_flows: vec![FlowSpec::ExactScalarGeometric(sigma)],
    };
    let sigma0 = stratonovich_drift(&model);
    model.drift_flow = FlowSpec::exact_scalar_geometric(&sigma0)?;
    Ok(model)
}

fn linear_1d(p: &Params, x0: Option<&[f64]>, t: f64) -> Result<SdeModel> {
    p.check_known(&["alpha"])?;
    let alpha = p.get("alpha", 1.0);
    let x0 = require_x0(x0, 1, &[1.0])?;
    let mut model = SdeModel {
        dim: 1,
        brownian_dim: 1,
        drift: scalar_linear(alpha, "alpha*x"),
        diffusion: vec![VectorField::constant(vec![1.0])],
        horizon: t,
        x0,
        exact: None,
        drift_flow: FlowSpec::numeric(DEFAULT_SUBSTEPS)?,
        diffusion_flows: vec![FlowSpec::ExactConstant(vec![1.0])],
    };
    let sigma0 = stratonovich_drift(&model);
    model.drift_flow = FlowSpec::exact_scalar_geometric(&sigma0)?;
    Ok(model)
}

fn additive_sin(p: &Params, x0: Option<&[f64]>, t: f64) -> Result<SdeModel> {
    p.check_known(&[])?;
    let x0 = require_x0(x0, 1, &[1.0])?;
    let drift = VectorField::new(1, "sin(x)", |x| vec![num::sin(x[0])])
        .with_jac(|x| Mat::from_rows(&[&[num::cos(x[0])]]))
        .with_hess(|x| Tensor3::from_fn(1, 1, 1, |_, _, _| -num::sin(x[0])));
    Ok(SdeModel {
        dim: 1,
        brownian_dim: 1,
        drift,
        diffusion: vec![VectorField::constant(vec![1.0])],
        horizon: t,
        x0,
        exact: None,
        drift_flow: FlowSpec::numeric(DEFAULT_SUBSTEPS)?,
        diffusion_flows: vec![FlowSpec::ExactConstant(vec![1.0])],
    })
}

fn noncommuting_2d(p: &Params, x0: Option<&[f64]>, t: f64) -> Result<SdeModel> {
    p.check_known(&[])?;
    let x0 = require_x0(x0, 2, &[1.0, 1.0])?;
    let sigma2 = VectorField::linear(Mat::from_rows(&[&[0.0, 0.0], &[1.0, 0.0]]));
    let sigma2_flow = FlowSpec::exact_linear(&sigma2)?;
    let mut model = SdeModel {
        dim: 2,
        brownian_dim: 2,
        drift: VectorField::constant(vec![0.0, 0.0]),
        diffusion: vec![VectorField::constant(vec![1.0, 0.0]), sigma2],
        horizon: t,
        x0,
        exact: None,
        drift_flow: FlowSpec::numeric(DEFAULT_SUBSTEPS)?,
        diffusion_flows: vec![FlowSpec::ExactConstant(vec![1.0, 0.0]), sigma2_flow],
    };
    // σ⁰ = −½ ∂σ²σ² = 0 here, so the drift flow is a translation by zero
    let sigma0 = stratonovich_drift(&model);
    model.drift_flow = FlowSpec::exact_constant(&sigma0)?;
    Ok(model)
}

fn constant_model(p: &Params, x0: Option<&[f64]>, t: f64) -> Result<SdeModel> {
    p.check_known(&["c0", "c1"])?;
    let c0 = p.get("c0", 0.5);
    let c1 = p.get("c1", 1.0);
    let x0 = require_x0(x0, 1, &[0.0])?;
    let start = x0[0];
    let exact = move |grid: &TimeGrid, path: &BrownianPath| -> Trajectory {
        let mut traj = Trajectory::from_initial(*grid, &[start]);
        for k in 1..=grid.steps() {
            let x = start + c0 * grid.time(k) + c1 * path.value(0, k);
            traj.set_state(k, &[x]);
        }
        traj
    };
    Ok(SdeModel {
        dim: 1,
        brownian_dim: 1,
        drift: VectorField::constant(vec![c0]),
        diffusion: vec![VectorField::constant(vec![c1])],
        horizon: t,
        x0,
        exact: Some(Arc::new(exact)),
        drift_flow: FlowSpec::ExactConstant(vec![c0]),
        diffusion_flows: vec![FlowSpec::ExactConstant(vec![c1])],
    })
}
