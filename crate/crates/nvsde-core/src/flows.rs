//! ODE flows exp(tV)x₀: closed forms for structured fields plus a fixed-order
//! numeric fallback with a deterministic substep count.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{expm, Mat};
use crate::num;
use crate::vecfield::{jacobian, sample_points, VectorField};
use crate::{Error, Result};

/// Norm beyond which a flow result is treated as overflow.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Default substep count for the numeric fallback; flow times inside the
/// schemes are O(h), so the local 4th-order error sits far below the
/// stochastic error floor. Certify with [`flow_error_budget`] when in doubt.
pub const DEFAULT_SUBSTEPS: u32 = 8;

const VALIDATE_TOL: f64 = 1e-8;

/// How to integrate the flow of one vector field.
#[derive(Clone, Debug)]
pub enum FlowSpec {
    /// V(x) = c: translation flow.
    ExactConstant(Vec<f64>),
    /// V(x) = A x: matrix exponential.
    ExactLinear(Mat),
    /// V(x) = A x + c: variation-of-constants via an augmented exponential.
    ExactAffine { a: Mat, c: Vec<f64> },
    /// n = 1, V(x) = a x.
    ExactScalarGeometric(f64),
    /// Classical 4th-order one-step method with a fixed substep count.
    Numeric { substeps: u32 },
}

fn validate_against(field: &VectorField, predicted: impl Fn(&[f64]) -> Vec<f64>) -> Result<()> {
    for x in sample_points(&vec![0.0; field.dim()], 8) {
        let actual = field.eval(&x);
        let expect = predicted(&x);
        let scale = 1.0 + num::hypot_slice(&actual);
        for (a, e) in actual.iter().zip(expect.iter()) {
            if num::abs(a - e) > VALIDATE_TOL * scale {
                return Err(Error::Config(format!(
                    "field '{}' does not have the algebraic form required by the flow spec",
                    field.label()
                )));
            }
        }
    }
    Ok(())
}

impl FlowSpec {
    /// Translation flow for a constant field; validated by sampling.
    pub fn exact_constant(field: &VectorField) -> Result<Self> {
        let c = field.eval(&vec![0.0; field.dim()]);
        validate_against(field, |_| c.clone())?;
        Ok(FlowSpec::ExactConstant(c))
    }

    /// Matrix-exponential flow for V(x) = A x; A read off the Jacobian at 0.
    pub fn exact_linear(field: &VectorField) -> Result<Self> {
        let a = jacobian(field, &vec![0.0; field.dim()])?;
        validate_against(field, |x| a.matvec(x))?;
        Ok(FlowSpec::ExactLinear(a))
    }

    /// Affine flow for V(x) = A x + c.
    pub fn exact_affine(field: &VectorField) -> Result<Self> {
        let origin = vec![0.0; field.dim()];
        let c = field.eval(&origin);
        let a = jacobian(field, &origin)?;
        let (ac, cc) = (a.clone(), c.clone());
        validate_against(field, move |x| {
            let mut v = ac.matvec(x);
            for (vi, ci) in v.iter_mut().zip(cc.iter()) {
                *vi += ci;
            }
            v
        })?;
        Ok(FlowSpec::ExactAffine { a, c })
    }

    /// Scalar geometric flow for n = 1, V(x) = a x.
    pub fn exact_scalar_geometric(field: &VectorField) -> Result<Self> {
        if field.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: field.dim(),
            });
        }
        let a = field.eval(&[1.0])[0];
        validate_against(field, |x| vec![a * x[0]])?;
        Ok(FlowSpec::ExactScalarGeometric(a))
    }

    pub fn numeric(substeps: u32) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::Config("numeric flow needs at least one substep".into()));
        }
        Ok(FlowSpec::Numeric { substeps })
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, FlowSpec::Numeric { .. })
    }
}

fn check_overflow(x: &[f64]) -> Result<()> {
    let norm = num::hypot_slice(x);
    if !norm.is_finite() || norm > OVERFLOW_LIMIT {
        return Err(Error::NumericalFailure(format!("flow overflow, |x| = {norm}")));
    }
    Ok(())
}

fn rk4_step(field: &VectorField, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let k1 = field.eval(x);
    let mut tmp = vec![0.0; n];
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    let k2 = field.eval(&tmp);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    let k3 = field.eval(&tmp);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    let k4 = field.eval(&tmp);
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Solution of dx/dt = V(x), x(0) = x0, at time `t` (possibly negative).
pub fn flow(field: &VectorField, spec: &FlowSpec, t: f64, x0: &[f64]) -> Result<Vec<f64>> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("non-finite flow time {t}")));
    }
    let out = match spec {
        FlowSpec::ExactConstant(c) => x0.iter().zip(c.iter()).map(|(x, c)| x + t * c).collect(),
        FlowSpec::ExactLinear(a) => expm(&a.scale(t))?.matvec(x0),
        FlowSpec::ExactAffine { a, c } => {
            // exp of the augmented generator [[A, c], [0, 0]] carries (x, 1)
            // to (x(t), 1); handles singular A without a series branch.
            let n = a.n_rows();
            let aug = Mat::from_fn(n + 1, n + 1, |i, j| {
                if i < n && j < n {
                    t * a.get(i, j)
                } else if i < n && j == n {
                    t * c[i]
                } else {
                    0.0
                }
            });
            let e = expm(&aug)?;
            let mut out = vec![0.0; n];
            for i in 0..n {
                let mut acc = e.get(i, n);
                for j in 0..n {
                    acc += e.get(i, j) * x0[j];
                }
                out[i] = acc;
            }
            out
        }
        FlowSpec::ExactScalarGeometric(a) => vec![x0[0] * num::exp(a * t)],
        FlowSpec::Numeric { substeps } => {
            let steps = *substeps;
            let h = t / steps as f64;
            let mut x = x0.to_vec();
            for _ in 0..steps {
                x = rk4_step(field, &x, h);
            }
            x
        }
    };
    check_overflow(&out)?;
    Ok(out)
}

/// Richardson estimate of the worst flow error over the sample states for a
/// numeric spec: compares `substeps` against `2·substeps` at ±t_max and
/// inflates by the 4th-order Richardson factor. Exact specs report 0.
pub fn flow_error_budget(
    field: &VectorField,
    spec: &FlowSpec,
    t_max: f64,
    x_samples: &[Vec<f64>],
) -> Result<f64> {
    let substeps = match spec {
        FlowSpec::Numeric { substeps } => *substeps,
        _ => return Ok(0.0),
    };
    let refined = FlowSpec::Numeric {
        substeps: substeps * 2,
    };
    let mut worst = 0.0f64;
    for x in x_samples {
        for t in [t_max, -t_max] {
            let coarse = flow(field, spec, t, x)?;
            let fine = flow(field, &refined, t, x)?;
            let mut diff_sq = 0.0;
            for (c, f) in coarse.iter().zip(fine.iter()) {
                diff_sq += (c - f) * (c - f);
            }
            worst = num::max(worst, num::sqrt(diff_sq));
        }
    }
    Ok(worst * 16.0 / 15.0)
}
