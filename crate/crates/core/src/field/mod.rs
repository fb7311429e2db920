//! The piecewise drift `b = b⁺·1{x_d ≥ 0} + b⁻·1{x_d < 0}` and the checks that
//! place a point of the hyperplane `H = {x_d = 0}` into one of the regimes.

mod classify;
mod linearize;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsl::{EvalError, Expr, Scenario};

pub use classify::{
    classify_case, CaseLabel, CaseTag, ProbeGrid, ProbeRecord, Region, DEFAULT_C_TOL,
};
pub use linearize::{estimate_c_pm, CoeffEstimate, LinearizationCoeffs, DEFAULT_H_SEQ};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("b+ has {plus} components but b- has {minus}")]
    DimensionMismatch { plus: usize, minus: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("difference quotients for c{side} do not settle (extrapolation error {error:e})")]
    NonConvergent { side: Side, error: f64 },
}

/// Which half-space formula is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    /// Side selected by the indicator convention: `x_d = 0` belongs to `b⁺`.
    pub fn of(x_d: f64) -> Side {
        if x_d >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Plus => "+",
            Side::Minus => "-",
        })
    }
}

/// Axis-aligned sampling box in `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub t: (f64, f64),
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(d: usize, half_width: f64, t_end: f64) -> Self {
        Domain {
            t: (0.0, t_end),
            lo: vec![-half_width; d],
            hi: vec![half_width; d],
        }
    }

    pub fn around(center: &[f64], half_width: f64, t_end: f64) -> Self {
        Domain {
            t: (0.0, t_end),
            lo: center.iter().map(|c| c - half_width).collect(),
            hi: center.iter().map(|c| c + half_width).collect(),
        }
    }
}

/// Discontinuous drift field with an empirical Lipschitz constant.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftField {
    d: usize,
    bplus: Vec<Expr>,
    bminus: Vec<Expr>,
    lipschitz_estimate: f64,
}

impl DriftField {
    /// Builds the field and estimates its Lipschitz constant on `[-1, 1]^d`.
    pub fn new(bplus: Vec<Expr>, bminus: Vec<Expr>) -> Result<Self, FieldError> {
        let d = bplus.len();
        let domain = Domain::cube(d, 1.0, 1.0);
        Self::with_domain(bplus, bminus, &domain)
    }

    pub fn with_domain(
        bplus: Vec<Expr>,
        bminus: Vec<Expr>,
        domain: &Domain,
    ) -> Result<Self, FieldError> {
        if bplus.len() != bminus.len() || bplus.is_empty() {
            return Err(FieldError::DimensionMismatch {
                plus: bplus.len(),
                minus: bminus.len(),
            });
        }
        let d = bplus.len();
        if domain.lo.len() != d || domain.hi.len() != d {
            return Err(FieldError::InvalidArgument(
                "domain dimension differs from the field".into(),
            ));
        }
        let mut field = DriftField {
            d,
            bplus,
            bminus,
            lipschitz_estimate: 0.0,
        };
        field.lipschitz_estimate = estimate_lipschitz(&field, domain, 128);
        Ok(field)
    }

    /// Field of a scenario; the Lipschitz constant is sampled on a box of
    /// half-width `2δ` around `x⁰`.
    pub fn from_scenario(s: &Scenario) -> Result<Self, FieldError> {
        let domain = Domain::around(&s.x0, 2.0 * s.delta, s.t_end);
        Self::with_domain(s.bplus.clone(), s.bminus.clone(), &domain)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lipschitz_estimate(&self) -> f64 {
        self.lipschitz_estimate
    }

    pub fn exprs(&self, side: Side) -> &[Expr] {
        match side {
            Side::Plus => &self.bplus,
            Side::Minus => &self.bminus,
        }
    }

    /// `b^side(t, x)` written into `out`, whatever the sign of `x_d`.
    #[inline]
    pub fn eval_side_into(
        &self,
        side: Side,
        t: f64,
        x: &[f64],
        out: &mut [f64],
    ) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(self.exprs(side)) {
            *o = e.eval(t, x)?;
        }
        Ok(())
    }

    #[inline]
    pub fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self.eval_side_into(Side::of(x[self.d - 1]), t, x, out)
    }

    pub fn eval_drift(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        if x.len() != self.d {
            return Err(FieldError::InvalidArgument(format!(
                "state has {} components, field has {}",
                x.len(),
                self.d
            )));
        }
        if !(t >= 0.0) {
            return Err(FieldError::InvalidArgument(format!("negative time {t}")));
        }
        let mut out = vec![0.0; self.d];
        self.eval_into(t, x, &mut out)?;
        Ok(out)
    }

    /// Normal component `b_d^side(t, x)`.
    #[inline]
    pub fn normal(&self, side: Side, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        self.exprs(side)[self.d - 1].eval(t, x)
    }

    /// Tangential part `b̄^side(t, x)` written into `out` (length `d - 1`).
    #[inline]
    pub fn tangential_into(
        &self,
        side: Side,
        t: f64,
        x: &[f64],
        out: &mut [f64],
    ) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.exprs(side)[..self.d - 1]) {
            *o = e.eval(t, x)?;
        }
        Ok(())
    }

    /// `λ·b` for both halves.
    pub fn scaled(&self, lambda: f64) -> DriftField {
        let scale = |v: &[Expr]| v.iter().map(|e| e.scaled(lambda)).collect();
        DriftField {
            d: self.d,
            bplus: scale(&self.bplus),
            bminus: scale(&self.bminus),
            lipschitz_estimate: self.lipschitz_estimate * lambda.abs(),
        }
    }

    /// True if no component depends on `t` or `x`.
    pub fn is_constant(&self) -> bool {
        self.bplus.iter().chain(&self.bminus).all(Expr::is_constant)
    }
}

/// Largest sampled ratio `|b±(t,x) − b±(t,y)| / |x − y|`, with each half
/// formula sampled only on the closure of its own half-space.
///
/// Pairs never straddle `H`, so the jump of the piecewise field does not
/// count. Points where evaluation fails are skipped.
pub fn estimate_lipschitz(field: &DriftField, domain: &Domain, n_samples: usize) -> f64 {
    let n = n_samples.max(2);
    let d = field.dim();
    let mut best = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1195);
    for side in [Side::Plus, Side::Minus] {
        let (lo_d, hi_d) = match side {
            Side::Plus => (domain.lo[d - 1].max(0.0), domain.hi[d - 1]),
            Side::Minus => (domain.lo[d - 1], domain.hi[d - 1].min(0.0)),
        };
        if lo_d > hi_d {
            continue;
        }
        let sample = |rng: &mut ChaCha8Rng| -> (f64, Vec<f64>) {
            let t = domain.t.0 + (domain.t.1 - domain.t.0) * rng.random::<f64>();
            let mut x: Vec<f64> = (0..d)
                .map(|i| domain.lo[i] + (domain.hi[i] - domain.lo[i]) * rng.random::<f64>())
                .collect();
            x[d - 1] = lo_d + (hi_d - lo_d) * rng.random::<f64>();
            (t, x)
        };
        let points: Vec<(f64, Vec<f64>)> = (0..n).map(|_| sample(&mut rng)).collect();
        let mut bx = vec![0.0; d];
        let mut by = vec![0.0; d];
        let mut ratio = |t: f64, x: &[f64], y: &[f64], bx: &mut [f64], by: &mut [f64]| {
            let dist = norm_diff(x, y);
            if dist == 0.0 {
                return;
            }
            if field.eval_side_into(side, t, x, bx).is_err()
                || field.eval_side_into(side, t, y, by).is_err()
            {
                return;
            }
            best = best.max(norm_diff(bx, by) / dist);
        };
        for i in 0..n {
            for j in (i + 1)..n {
                let (t, x) = &points[i];
                ratio(*t, x, &points[j].1, &mut bx, &mut by);
            }
        }
        // Close pairs pick up local slopes the scattered pairs average out.
        let width = domain
            .lo
            .iter()
            .zip(&domain.hi)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max);
        let h = 1e-4 * width.max(1e-12);
        for (t, x) in &points {
            let mut y = x.clone();
            for (i, yi) in y.iter_mut().enumerate() {
                let step = h * (2.0 * rng.random::<f64>() - 1.0);
                *yi = (*yi + step).clamp(domain.lo[i], domain.hi[i]);
            }
            y[d - 1] = y[d - 1].clamp(lo_d, hi_d);
            ratio(*t, x, &y, &mut bx, &mut by);
        }
    }
    best
}

pub(crate) fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
