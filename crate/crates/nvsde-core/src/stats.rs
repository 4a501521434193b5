//! Sample statistics, log-log least squares and the two-sample
//! Kolmogorov-Smirnov test.

use crate::num;
use crate::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Ordinary least squares y = intercept + slope·x with a normal-approximation
/// 95% half-width on the slope.
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci_half: f64,
}

pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 3 || n != ys.len() {
        return Err(Error::DegenerateData(
            "least squares needs at least 3 matched points".into(),
        ));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateData("zero abscissa spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut rss = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        let r = y - (intercept + slope * x);
        rss += r * r;
    }
    let dof = (n - 2) as f64;
    let se = if dof > 0.0 {
        num::sqrt(rss / dof / sxx)
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_ci_half: 1.96 * se,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateData("KS needs at least 2 points per sample".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    sb.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let (na, nb) = (sa.len(), sb.len());
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut d = 0.0f64;
    while ia < na && ib < nb {
        let xa = sa[ia];
        let xb = sb[ib];
        let x = num::min(xa, xb);
        while ia < na && sa[ia] <= x {
            ia += 1;
        }
        while ib < nb && sb[ib] <= x {
            ib += 1;
        }
        let fa = ia as f64 / na as f64;
        let fb = ib as f64 / nb as f64;
        d = num::max(d, num::abs(fa - fb));
    }
    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    let sqrt_ne = num::sqrt(ne);
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    Ok(KsResult {
        statistic: d,
        p_value: ks_survival(lambda),
    })
}

/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²), clamped to [0, 1].
fn ks_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = num::exp(-2.0 * (k as f64) * (k as f64) * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    num::min(1.0, num::max(0.0, 2.0 * sum))
}
