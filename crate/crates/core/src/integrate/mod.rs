//! Explicit time stepping of the perturbed SDE, the branch and sliding ODEs
//! and the coupled limit system, plus stopping-time detection on paths.

mod limits;
mod noise;
mod path;

use std::ops::ControlFlow;

use thiserror::Error;

use crate::dsl::EvalError;
use crate::field::{DriftField, FieldError, Side};

pub use limits::{
    filippov_weights, integrate_branch, integrate_coupled_limit, integrate_sliding_ode,
    CoupledPath, CoupledState,
};
pub use noise::{NoiseRecord, NoiseSource, NoiseStream, Replay};
pub use path::{
    exit_time_ball, exit_time_slab, hitting_time_h, reflection_map, sig10, Path, SlabExit, Stops,
};

/// Resolution factor of the step rule: `dt ≤ (ε/η)²`.
pub const ETA: f64 = 4.0;

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("step {dt} exceeds the limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("drift evaluation failed: {0}")]
    Domain(#[from] EvalError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("the {side} branch does not leave H")]
    BranchDoesNotLeave { side: Side },
    #[error("sliding weights undefined at t = {t}: b_d⁻ − b_d⁺ = {denominator}")]
    DegenerateDenominator { t: f64, denominator: f64 },
    #[error("noise record has {available} steps of dimension {dim}, need {needed} of dimension {want}")]
    NoiseMismatch {
        available: usize,
        dim: usize,
        needed: usize,
        want: usize,
    },
    #[error("{0}")]
    InvalidArgument(String),
}

/// How the step size follows ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// `min(dt_max, (ε/η)²)`: resolves the diffusive layer around `H`.
    #[default]
    BoundaryLayer,
    /// `dt_max` regardless of ε. Used for the tangential regime, where the
    /// normal coordinate lives on scale ε and its rescaled dynamics do not
    /// depend on ε.
    Fixed,
}

pub fn step_size(eps: f64, dt_max: f64, rule: StepRule) -> f64 {
    match rule {
        StepRule::BoundaryLayer if eps > 0.0 => dt_max.min((eps / ETA).powi(2)),
        _ => dt_max,
    }
}

/// Sub-steps of the first step for paths started on `H`.
///
/// A start point on `H` is the one place where the `x_d = 0 → b⁺` convention
/// carries a whole Euler step of weight; the diffusion itself spends no time
/// there. Splitting that step keeps the resulting upward push well below the
/// boundary-layer width.
pub const START_SUBSTEPS: usize = 256;

/// Uniform grid on `[0, T]`; the last step is shortened to land on `T`, and
/// the first step may be split into equal sub-steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    dt: f64,
    n: usize,
    refine: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, dt: f64) -> Result<Self, IntegrateError> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(IntegrateError::InvalidArgument(format!(
                "horizon must be positive, got {t_end}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(IntegrateError::InvalidArgument(format!(
                "step must be positive, got {dt}"
            )));
        }
        let mut n = (t_end / dt).ceil().max(1.0) as usize;
        if n > 1 && (n - 1) as f64 * dt >= t_end {
            n -= 1;
        }
        Ok(TimeGrid {
            t_end,
            dt,
            n,
            refine: 1,
        })
    }

    /// As [`TimeGrid::new`] with the first step split into `substeps`.
    pub fn with_refined_start(t_end: f64, dt: f64, substeps: usize) -> Result<Self, IntegrateError> {
        let mut g = Self::new(t_end, dt)?;
        g.refine = substeps.max(1);
        Ok(g)
    }

    pub fn n_steps(&self) -> usize {
        self.n + self.refine - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    #[inline]
    fn uniform(&self, j: usize) -> f64 {
        if j >= self.n {
            self.t_end
        } else {
            j as f64 * self.dt
        }
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k < self.refine {
            k as f64 * self.uniform(1) / self.refine as f64
        } else {
            self.uniform(k - self.refine + 1)
        }
    }

    #[inline]
    pub fn step(&self, k: usize) -> f64 {
        self.time(k + 1) - self.time(k)
    }
}

/// Streaming Euler–Maruyama: `x_{k+1} = x_k + b(t_k, x_k)·dt_k + ε·ΔW_k`.
///
/// `observe(k, t_k, x_k)` is called for `k = 0..=n` and may stop the run.
/// With `ε = 0` no noise is drawn.
pub fn run_sde<N, F>(
    field: &DriftField,
    x0: &[f64],
    eps: f64,
    grid: &TimeGrid,
    noise: &mut N,
    mut observe: F,
) -> Result<(), IntegrateError>
where
    N: NoiseSource,
    F: FnMut(usize, f64, &[f64]) -> ControlFlow<()>,
{
    let d = field.dim();
    if x0.len() != d {
        return Err(IntegrateError::InvalidArgument(format!(
            "initial point has {} components, field has {d}",
            x0.len()
        )));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(IntegrateError::InvalidArgument(format!(
            "noise level must be nonnegative, got {eps}"
        )));
    }
    let mut x = x0.to_vec();
    let mut b = vec![0.0; d];
    let mut dw = vec![0.0; d];
    if observe(0, 0.0, &x).is_break() {
        return Ok(());
    }
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let h = grid.step(k);
        field.eval_into(t, &x, &mut b)?;
        if eps > 0.0 {
            noise.increment(k, h, &mut dw);
            for i in 0..d {
                x[i] += b[i] * h + eps * dw[i];
            }
        } else {
            for i in 0..d {
                x[i] += b[i] * h;
            }
        }
        if observe(k + 1, grid.time(k + 1), &x).is_break() {
            break;
        }
    }
    Ok(())
}

pub(crate) fn check_noise(
    noise: &NoiseRecord,
    grid: &TimeGrid,
    dim: usize,
) -> Result<(), IntegrateError> {
    if noise.n_steps() < grid.n_steps() || noise.dim() != dim {
        return Err(IntegrateError::NoiseMismatch {
            available: noise.n_steps(),
            dim: noise.dim(),
            needed: grid.n_steps(),
            want: dim,
        });
    }
    Ok(())
}

/// Full Euler–Maruyama path on `[0, T]` driven by a stored noise record.
///
/// For `ε > 0` the step must satisfy `dt ≤ (ε/η)²`. The first crossing of
/// `H` is recorded as `tau_eps_h` (or `tau_h` when `ε = 0`).
pub fn euler_maruyama(
    field: &DriftField,
    x0: &[f64],
    eps: f64,
    t_end: f64,
    dt: f64,
    noise: &NoiseRecord,
) -> Result<Path, IntegrateError> {
    if eps > 0.0 {
        let limit = (eps / ETA).powi(2);
        if dt > limit {
            return Err(IntegrateError::StepTooLarge { dt, limit });
        }
    }
    euler_maruyama_on(field, x0, eps, &TimeGrid::new(t_end, dt)?, noise)
}

/// [`euler_maruyama`] on a given grid without the step-size check.
pub fn euler_maruyama_on(
    field: &DriftField,
    x0: &[f64],
    eps: f64,
    grid: &TimeGrid,
    noise: &NoiseRecord,
) -> Result<Path, IntegrateError> {
    let d = field.dim();
    if eps > 0.0 {
        check_noise(noise, grid, d)?;
    }
    let mut path = Path::with_capacity(d, grid.n_steps() + 1);
    run_sde(field, x0, eps, grid, &mut noise.replay(), |_, t, x| {
        path.push(t, x);
        ControlFlow::Continue(())
    })?;
    let hit = hitting_time_h(&path);
    if eps > 0.0 {
        path.stops.tau_eps_h = hit;
    } else {
        path.stops.tau_h = hit;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_expr;

    fn field(plus: &[&str], minus: &[&str]) -> DriftField {
        let p = |v: &[&str]| v.iter().map(|s| parse_expr(s).unwrap()).collect();
        DriftField::new(p(plus), p(minus)).unwrap()
    }

    #[test]
    fn grid_lands_on_horizon() {
        for (t, dt, n) in [(1.0, 0.1, 10), (1.0, 0.3, 4), (0.5, 1e-3, 500), (1.0, 2.0, 1)] {
            let g = TimeGrid::new(t, dt).unwrap();
            assert_eq!(g.n_steps(), n, "{t} {dt}");
            assert_eq!(g.time(n), t);
            assert!((0..n).all(|k| g.step(k) > 0.0));
        }
        assert!(TimeGrid::new(0.0, 0.1).is_err());
        let r = TimeGrid::with_refined_start(1.0, 0.1, 4).unwrap();
        assert_eq!(r.n_steps(), 13);
        assert_eq!(r.time(1), 0.025);
        assert_eq!(r.time(4), 0.1);
        assert_eq!(r.time(5), 0.2);
        assert_eq!(r.time(13), 1.0);
        assert!((0..13).all(|k| r.step(k) > 0.0));
        assert!(TimeGrid::new(1.0, 0.0).is_err());
    }

    #[test]
    fn step_rule() {
        assert_eq!(step_size(0.04, 1e-3, StepRule::BoundaryLayer), 1e-4);
        assert_eq!(step_size(0.4, 1e-3, StepRule::BoundaryLayer), 1e-3);
        assert_eq!(step_size(0.0, 1e-3, StepRule::BoundaryLayer), 1e-3);
        assert_eq!(step_size(0.01, 1e-3, StepRule::Fixed), 1e-3);
    }

    #[test]
    fn deterministic_cases() {
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let noise = NoiseRecord::generate(0, 1, &grid);
        let p = euler_maruyama(&field(&["0"], &["0"]), &[1.0], 0.0, 1.0, 0.01, &noise).unwrap();
        assert!(p.states().all(|x| x[0] == 1.0));
        assert_eq!(p.stops.tau_h, None);
        for dt in [0.1, 0.013, 1e-3] {
            let g = TimeGrid::new(1.0, dt).unwrap();
            let n = NoiseRecord::generate(0, 1, &g);
            let p = euler_maruyama(&field(&["2"], &["2"]), &[0.5], 0.0, 1.0, dt, &n).unwrap();
            assert!((p.last_state()[0] - 2.5).abs() < 1e-12);
            assert_eq!(p.last_time(), 1.0);
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let f = field(&["sgn(x1)"], &["sgn(x1)"]);
        let grid = TimeGrid::new(1.0, 1e-4).unwrap();
        let noise = NoiseRecord::generate(42, 1, &grid);
        let a = euler_maruyama(&f, &[0.0], 0.1, 1.0, 1e-4, &noise).unwrap();
        let b = euler_maruyama(&f, &[0.0], 0.1, 1.0, 1e-4, &noise).unwrap();
        assert_eq!(a.last_state()[0].to_bits(), b.last_state()[0].to_bits());
        assert_eq!(a, b);
        let mut streamed = 0.0;
        run_sde(&f, &[0.0], 0.1, &grid, &mut NoiseStream::new(42), |_, _, x| {
            streamed = x[0];
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(streamed.to_bits(), a.last_state()[0].to_bits());
    }

    #[test]
    fn step_too_large_and_short_noise() {
        let f = field(&["1"], &["1"]);
        let grid = TimeGrid::new(1.0, 1e-3).unwrap();
        let noise = NoiseRecord::generate(1, 1, &grid);
        assert!(matches!(
            euler_maruyama(&f, &[0.0], 0.04, 1.0, 1e-3, &noise),
            Err(IntegrateError::StepTooLarge { .. })
        ));
        assert!(matches!(
            euler_maruyama(&f, &[0.0], 0.4, 2.0, 1e-3, &noise),
            Err(IntegrateError::NoiseMismatch { .. })
        ));
    }

    #[test]
    fn domain_error_surfaces() {
        let f = field(&["sqrt(x1)"], &["sqrt(x1)"]);
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        let noise = NoiseRecord::generate(1, 1, &grid);
        assert!(matches!(
            euler_maruyama(&f, &[-1.0], 0.0, 1.0, 0.1, &noise),
            Err(IntegrateError::Domain(_))
        ));
    }

    #[test]
    fn hyperplane_dispatches_to_plus() {
        let f = field(&["1"], &["-1"]);
        let grid = TimeGrid::new(0.1, 0.1).unwrap();
        let noise = NoiseRecord::generate(1, 1, &grid);
        let p = euler_maruyama(&f, &[0.0], 0.0, 0.1, 0.1, &noise).unwrap();
        assert!(p.last_state()[0] > 0.0);
    }

    #[test]
    fn euler_first_order() {
        // dx = -x dt, x(1) = e^{-1}.
        let f = field(&["-x1"], &["-x1"]);
        let exact = (-1.0f64).exp();
        let errs: Vec<f64> = [0.01, 0.005, 0.0025, 0.00125]
            .iter()
            .map(|&dt| {
                let g = TimeGrid::new(1.0, dt).unwrap();
                let n = NoiseRecord::generate(0, 1, &g);
                let p = euler_maruyama(&f, &[1.0], 0.0, 1.0, dt, &n).unwrap();
                (p.last_state()[0] - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let r = w[1] / w[0];
            assert!((0.4..=0.6).contains(&r), "{errs:?}");
        }
    }
}
