//! Vector-field calculus: evaluation, Jacobians, Lie brackets, tensor
//! contraction, Itô→Stratonovich drift conversion and commutativity
//! certification.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::flows::FlowSpec;
use crate::grid::{BrownianPath, TimeGrid, Trajectory};
use crate::linalg::Mat;
use crate::num;
use crate::{Error, Result};

pub type EvalFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
pub type JacFn = dyn Fn(&[f64]) -> Mat + Send + Sync;
pub type HessFn = dyn Fn(&[f64]) -> Tensor3 + Send + Sync;

/// Third-order tensor with entry (i, k, l) at `data[(i*p + k)*q + l]`.
/// For a field Jacobian derivative, (i, k, l) = ∂²_{x_l x_k} V^i.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(m: usize, p: usize, q: usize) -> Self {
        Tensor3 {
            dims: (m, p, q),
            data: vec![0.0; m * p * q],
        }
    }

    pub fn from_fn(m: usize, p: usize, q: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(m, p, q);
        for i in 0..m {
            for k in 0..p {
                for l in 0..q {
                    t.set(i, k, l, f(i, k, l));
                }
            }
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize, l: usize) -> f64 {
        self.data[(i * self.dims.1 + k) * self.dims.2 + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, l: usize, v: f64) {
        self.data[(i * self.dims.1 + k) * self.dims.2 + l] = v;
    }
}

/// Contraction over the trailing index: `(A ⊙ v)_{i,k} = Σ_l A^{i,k,l} v^l`.
pub fn tensor_apply(a: &Tensor3, v: &[f64]) -> Result<Mat> {
    let (m, p, q) = a.dims;
    if v.len() != q {
        return Err(Error::Dimension {
            expected: q,
            got: v.len(),
        });
    }
    Ok(Mat::from_fn(m, p, |i, k| {
        let mut acc = 0.0;
        for l in 0..q {
            acc += a.get(i, k, l) * v[l];
        }
        acc
    }))
}

/// A vector field on ℝⁿ with optional analytic first and second derivatives.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
    hess: Option<Arc<HessFn>>,
    label: String,
}

impl VectorField {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        VectorField {
            dim,
            eval: Arc::new(eval),
            jac: None,
            hess: None,
            label: label.into(),
        }
    }

    pub fn with_jac(mut self, jac: impl Fn(&[f64]) -> Mat + Send + Sync + 'static) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_hess(mut self, hess: impl Fn(&[f64]) -> Tensor3 + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(hess));
        self
    }

    /// Constant field V(x) = c, with exact derivatives.
    pub fn constant(c: Vec<f64>) -> Self {
        let dim = c.len();
        let c2 = c.clone();
        VectorField::new(dim, "constant", move |_| c2.clone())
            .with_jac(move |_| Mat::zeros(dim, dim))
            .with_hess(move |_| Tensor3::zeros(dim, dim, dim))
    }

    /// Linear field V(x) = A x, with exact derivatives.
    pub fn linear(a: Mat) -> Self {
        let dim = a.n_rows();
        let a_eval = a.clone();
        let a_jac = a.clone();
        VectorField::new(dim, "linear", move |x| a_eval.matvec(x))
            .with_jac(move |_| a_jac.clone())
            .with_hess(move |_| Tensor3::zeros(dim, dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_jac(&self) -> bool {
        self.jac.is_some()
    }

    pub fn has_hess(&self) -> bool {
        self.hess.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    pub fn eval_checked(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.eval(x);
        for (k, c) in v.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "field '{}' produced non-finite component {k}",
                    self.label
                )));
            }
        }
        Ok(v)
    }
}

/// Jacobian of a field at `x`: analytic when supplied, otherwise central
/// finite differences with per-coordinate step cbrt(ε)·max(1, |x_k|).
pub fn jacobian(field: &VectorField, x: &[f64]) -> Result<Mat> {
    if let Some(jac) = &field.jac {
        return Ok(jac(x));
    }
    let n = field.dim;
    let step_base = num::cbrt(f64::EPSILON);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let h = step_base * num::max(1.0, num::abs(x[k]));
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let denom = xp[k] - xm[k];
        let vp = field.eval(&xp);
        let vm = field.eval(&xm);
        let mut col = vec![0.0; n];
        for i in 0..n {
            let d = (vp[i] - vm[i]) / denom;
            if !d.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "non-finite derivative of '{}' w.r.t. coordinate {k}",
                    field.label
                )));
            }
            col[i] = d;
        }
        cols.push(col);
    }
    Ok(Mat::from_fn(n, x.len(), |i, k| cols[k][i]))
}

/// Second-derivative tensor at `x` with entry (i, k, l) = ∂²_{x_l x_k} V^i:
/// analytic when supplied, otherwise central differences of the Jacobian with
/// step ε^{1/4}·max(1, |x_l|).
pub fn hessian(field: &VectorField, x: &[f64]) -> Result<Tensor3> {
    if let Some(hess) = &field.hess {
        return Ok(hess(x));
    }
    let n = field.dim;
    let step_base = num::sqrt(num::sqrt(f64::EPSILON));
    let mut slices: Vec<Mat> = Vec::with_capacity(x.len());
    for l in 0..x.len() {
        let h = step_base * num::max(1.0, num::abs(x[l]));
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[l] += h;
        xm[l] -= h;
        let denom = xp[l] - xm[l];
        let jp = jacobian(field, &xp)?;
        let jm = jacobian(field, &xm)?;
        slices.push(jp.sub(&jm).scale(1.0 / denom));
    }
    Ok(Tensor3::from_fn(n, n, x.len(), |i, k, l| {
        slices[l].get(i, k)
    }))
}

/// Lie bracket [V, W](x) = ∂W(x)·V(x) − ∂V(x)·W(x).
pub fn lie_bracket(v: &VectorField, w: &VectorField, x: &[f64]) -> Result<Vec<f64>> {
    if v.dim != w.dim {
        return Err(Error::Dimension {
            expected: v.dim,
            got: w.dim,
        });
    }
    let vx = v.eval_checked(x)?;
    let wx = w.eval_checked(x)?;
    let jw = jacobian(w, x)?;
    let jv = jacobian(v, x)?;
    let a = jw.matvec(&vx);
    let b = jv.matvec(&wx);
    Ok(a.iter().zip(b.iter()).map(|(p, q)| p - q).collect())
}

/// SDE model dX = b dt + Σ σʲ dWʲ with the data needed to run flows-based
/// schemes on it.
#[derive(Clone)]
pub struct SdeModel {
    pub dim: usize,
    pub brownian_dim: usize,
    pub drift: VectorField,
    pub diffusion: Vec<VectorField>,
    pub horizon: f64,
    pub x0: Vec<f64>,
    /// Pathwise exact solution on a grid, when the model admits one.
    pub exact: Option<Arc<dyn Fn(&TimeGrid, &BrownianPath) -> Trajectory + Send + Sync>>,
    /// Flow used for the Stratonovich drift σ⁰ inside splitting schemes.
    pub drift_flow: FlowSpec,
    /// Flow for each Brownian field.
    pub diffusion_flows: Vec<FlowSpec>,
}

impl SdeModel {
    pub fn validate(&self) -> Result<()> {
        if self.drift.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: self.drift.dim(),
            });
        }
        for s in &self.diffusion {
            if s.dim() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    got: s.dim(),
                });
            }
        }
        if self.diffusion.len() != self.brownian_dim
            || self.diffusion_flows.len() != self.brownian_dim
            || self.x0.len() != self.dim
        {
            return Err(Error::Config(format!(
                "inconsistent model shape: n={}, d={}",
                self.dim, self.brownian_dim
            )));
        }
        Ok(())
    }
}

/// Stratonovich drift σ⁰ = b − ½ Σⱼ ∂σʲ σʲ of a model. The result carries an
/// analytic Jacobian when the drift has one and every diffusion field has
/// both Jacobian and second-derivative tensor.
pub fn stratonovich_drift(model: &SdeModel) -> VectorField {
    let drift = model.drift.clone();
    let diffusion = model.diffusion.clone();
    let dim = model.dim;
    let eval_drift = drift.clone();
    let eval_diffusion = diffusion.clone();
    let mut out = VectorField::new(dim, "sigma0", move |x| {
        let mut v = eval_drift.eval(x);
        for s in &eval_diffusion {
            let sx = s.eval(x);
            let js = jacobian(s, x).expect("diffusion jacobian");
            let corr = js.matvec(&sx);
            for i in 0..v.len() {
                v[i] -= 0.5 * corr[i];
            }
        }
        v
    });
    let analytic =
        drift.has_jac() && diffusion.iter().all(|s| s.has_jac() && s.has_hess());
    if analytic {
        let jac_drift = drift;
        let jac_diffusion = diffusion;
        out = out.with_jac(move |x| {
            // ∂(∂σ σ) = ∂²σ ⊙ σ + ∂σ·∂σ (symmetry of ∂²σ in its last two
            // indices turns the middle-index contraction into ⊙)
            let mut j = jacobian(&jac_drift, x).expect("drift jacobian");
            for s in &jac_diffusion {
                let sx = s.eval(x);
                let js = jacobian(s, x).expect("diffusion jacobian");
                let hs = hessian(s, x).expect("diffusion hessian");
                let term = tensor_apply(&hs, &sx)
                    .expect("tensor contraction")
                    .add(&js.matmul(&js));
                j = j.sub(&term.scale(0.5));
            }
            j
        });
    }
    out
}

/// Base relative tolerance for declaring a bracket zero at a point.
pub const COMMUTE_BASE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct CommutativityReport {
    /// All pairwise Brownian-field brackets vanish at every sampled point.
    pub brownian_commute: bool,
    /// The Stratonovich drift σ⁰ commutes with every Brownian field.
    pub drift_commutes: bool,
    pub max_brownian_bracket: f64,
    pub max_drift_bracket: f64,
    pub points_checked: usize,
}

/// Sample-based check of the pairwise-commutativity condition on the Brownian
/// fields, and separately of [σ⁰, σʲ]. An identity on ℝⁿ is not decidable
/// numerically; this certifies it only at the supplied points.
pub fn check_commutativity(
    model: &SdeModel,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<CommutativityReport> {
    if points.is_empty() {
        return Err(Error::Config("commutativity check needs points".into()));
    }
    let sigma0 = stratonovich_drift(model);
    let d = model.brownian_dim;
    let mut max_bb = 0.0f64;
    let mut max_db = 0.0f64;
    let mut brownian_ok = true;
    let mut drift_ok = true;
    for x in points {
        let mut mag = num::hypot_slice(&sigma0.eval(x));
        for s in &model.diffusion {
            mag = num::max(mag, num::hypot_slice(&s.eval(x)));
        }
        let threshold = tol * (1.0 + mag);
        for j in 0..d {
            for m in j + 1..d {
                let br = lie_bracket(&model.diffusion[j], &model.diffusion[m], x)?;
                let norm = num::hypot_slice(&br);
                max_bb = num::max(max_bb, norm);
                if norm > threshold {
                    brownian_ok = false;
                }
            }
            let br = lie_bracket(&sigma0, &model.diffusion[j], x)?;
            let norm = num::hypot_slice(&br);
            max_db = num::max(max_db, norm);
            if norm > threshold {
                drift_ok = false;
            }
        }
    }
    Ok(CommutativityReport {
        brownian_commute: brownian_ok,
        drift_commutes: drift_ok,
        max_brownian_bracket: max_bb,
        max_drift_bracket: max_db,
        points_checked: points.len(),
    })
}

/// Default sample set for commutativity checks: `count` quasi-random points
/// in the ball of radius 2 around x0, plus x0 itself. Kronecker sequence, so
/// the set is deterministic.
pub fn sample_points(x0: &[f64], count: usize) -> Vec<Vec<f64>> {
    let n = x0.len();
    // Kronecker increments c_i = 2^{1/(i+2)} − 1, irrational per dimension
    let mut alphas = vec![0.0f64; n];
    for (i, a) in alphas.iter_mut().enumerate() {
        *a = num::exp(num::ln(2.0) / (i as f64 + 2.0)) - 1.0;
    }
    let mut pts = Vec::with_capacity(count + 1);
    pts.push(x0.to_vec());
    for k in 0..count {
        let mut p = vec![0.0f64; n];
        let mut norm_sq = 0.0;
        for i in 0..n {
            let u = ((k + 1) as f64 * alphas[i]) % 1.0;
            let c = 2.0 * u - 1.0;
            p[i] = c;
            norm_sq += c * c;
        }
        let norm = num::sqrt(norm_sq);
        let scale = 2.0 / num::max(1.0, norm);
        let pt: Vec<f64> = x0.iter().zip(p.iter()).map(|(o, c)| o + scale * c).collect();
        pts.push(pt);
    }
    pts
}
