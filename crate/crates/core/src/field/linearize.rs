//! Normal slopes `c±(t, x̄) = lim_{x_d→0±} b_d^±(t, (x̄, x_d)) / x_d` for the
//! tangential regime, where both normal components vanish on `H`.

use std::sync::Arc;

use super::{DriftField, FieldError, Side};

pub const DEFAULT_H_SEQ: [f64; 5] = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4];

/// Relative tolerance on the last two extrapolants.
const EXTRAPOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffEstimate {
    pub cplus: f64,
    pub cminus: f64,
    /// Difference of the last two extrapolants, per side.
    pub err_plus: f64,
    pub err_minus: f64,
}

/// Neville extrapolation of `values(h)` to `h = 0`. Returns the final
/// extrapolant and its distance to the previous diagonal entry.
fn extrapolate_to_zero(h: &[f64], values: &[f64]) -> (f64, f64) {
    let n = h.len();
    let mut p = values.to_vec();
    let mut diag = vec![p[0]];
    for k in 1..n {
        for i in 0..n - k {
            // Polynomial through nodes i..=i+k evaluated at 0.
            p[i] = (h[i] * p[i + 1] - h[i + k] * p[i]) / (h[i] - h[i + k]);
        }
        diag.push(p[0]);
    }
    let last = diag[n - 1];
    (last, (last - diag[n - 2]).abs())
}

/// Extrapolated one-sided slopes of the normal drift at `(t, (x̄, 0))`.
pub fn estimate_c_pm(
    field: &DriftField,
    t: f64,
    xbar: &[f64],
    h_seq: &[f64],
) -> Result<CoeffEstimate, FieldError> {
    let d = field.dim();
    if xbar.len() + 1 != d {
        return Err(FieldError::InvalidArgument(format!(
            "x̄ must have {} components",
            d - 1
        )));
    }
    if h_seq.len() < 3 {
        return Err(FieldError::InvalidArgument(
            "need at least three step sizes".into(),
        ));
    }
    if h_seq.iter().any(|&h| !(h > 0.0)) || h_seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FieldError::InvalidArgument(
            "step sizes must be positive and decreasing".into(),
        ));
    }
    let mut x = xbar.to_vec();
    x.push(0.0);
    let mut one_side = |side: Side| -> Result<(f64, f64), FieldError> {
        let mut q = Vec::with_capacity(h_seq.len());
        for &h in h_seq {
            let xd = side.sign() * h;
            x[d - 1] = xd;
            q.push(field.normal(side, t, &x)? / xd);
        }
        let (value, err) = extrapolate_to_zero(h_seq, &q);
        if !value.is_finite() || err > EXTRAPOLATION_TOL * value.abs().max(1.0) {
            return Err(FieldError::NonConvergent { side, error: err });
        }
        Ok((value, err))
    };
    let (cplus, err_plus) = one_side(Side::Plus)?;
    let (cminus, err_minus) = one_side(Side::Minus)?;
    Ok(CoeffEstimate {
        cplus,
        cminus,
        err_plus,
        err_minus,
    })
}

type CoeffFn = dyn Fn(f64, &[f64]) -> Result<(f64, f64), FieldError> + Send + Sync;

/// `c±(t, x̄)` as used by the coupled limit system.
#[derive(Clone)]
pub enum LinearizationCoeffs {
    Constant { cplus: f64, cminus: f64 },
    Varying(Arc<CoeffFn>),
}

impl std::fmt::Debug for LinearizationCoeffs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constant { cplus, cminus } => f
                .debug_struct("Constant")
                .field("cplus", cplus)
                .field("cminus", cminus)
                .finish(),
            Self::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

impl LinearizationCoeffs {
    pub fn constant(cplus: f64, cminus: f64) -> Self {
        LinearizationCoeffs::Constant { cplus, cminus }
    }

    /// Probe the field on `[0, T] × {|x̄ − x̄⁰| ≤ δ}`; if the estimates agree
    /// everywhere the coefficients are stored as constants, otherwise they
    /// are re-estimated at every evaluation.
    pub fn from_field(
        field: &DriftField,
        xbar0: &[f64],
        t_end: f64,
        delta: f64,
    ) -> Result<Self, FieldError> {
        let first = estimate_c_pm(field, 0.0, xbar0, &DEFAULT_H_SEQ)?;
        let mut constant = true;
        let m = xbar0.len();
        'probe: for k in 0..5 {
            let t = t_end * k as f64 / 4.0;
            for j in 0..(2 * m + 1) {
                let mut xbar = xbar0.to_vec();
                if j > 0 {
                    let axis = (j - 1) / 2;
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    xbar[axis] += sign * delta;
                }
                let est = estimate_c_pm(field, t, &xbar, &DEFAULT_H_SEQ)?;
                let tol = 1e-6 * first.cplus.abs().max(first.cminus.abs()).max(1.0);
                if (est.cplus - first.cplus).abs() > tol || (est.cminus - first.cminus).abs() > tol
                {
                    constant = false;
                    break 'probe;
                }
            }
        }
        if constant {
            return Ok(Self::constant(first.cplus, first.cminus));
        }
        let field = field.clone();
        Ok(LinearizationCoeffs::Varying(Arc::new(move |t, xbar| {
            let e = estimate_c_pm(&field, t, xbar, &DEFAULT_H_SEQ)?;
            Ok((e.cplus, e.cminus))
        })))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, LinearizationCoeffs::Constant { .. })
    }

    #[inline]
    pub fn eval(&self, t: f64, xbar: &[f64]) -> Result<(f64, f64), FieldError> {
        match self {
            LinearizationCoeffs::Constant { cplus, cminus } => Ok((*cplus, *cminus)),
            LinearizationCoeffs::Varying(f) => f(t, xbar),
        }
    }
}
