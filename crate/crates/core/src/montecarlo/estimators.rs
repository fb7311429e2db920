use std::ops::ControlFlow;

use super::exec::{map_paths, path_seed};
use super::stats::{mean_ci, median_ci, wilson_ci, EstimateWithCI};
use super::McError;
use crate::dsl::Scenario;
use crate::field::{DriftField, LinearizationCoeffs, Side, DEFAULT_C_TOL};
use crate::integrate::{
    euler_maruyama_on, hitting_time_h, integrate_coupled_limit, integrate_sliding_ode, run_sde,
    step_size, NoiseRecord, NoiseStream, Path, StepRule, TimeGrid, START_SUBSTEPS,
};

/// Step rule for a start point: the fixed step when both normal components
/// vanish there (tangential regime), the boundary-layer rule otherwise.
pub fn step_rule_for(field: &DriftField, x0: &[f64]) -> StepRule {
    let d = field.dim();
    let flat = |side| {
        field
            .normal(side, 0.0, x0)
            .map(|v| v.abs() <= DEFAULT_C_TOL)
            .unwrap_or(false)
    };
    if x0[d - 1] == 0.0 && flat(Side::Plus) && flat(Side::Minus) {
        StepRule::Fixed
    } else {
        StepRule::BoundaryLayer
    }
}

struct Setup {
    field: DriftField,
    eps: f64,
    grid: TimeGrid,
}

fn setup(s: &Scenario, eps_index: usize, t_end: f64) -> Result<Setup, McError> {
    let eps = *s.eps_grid.get(eps_index).ok_or_else(|| {
        McError::Precondition(format!(
            "ε index {eps_index} outside a grid of {}",
            s.eps_grid.len()
        ))
    })?;
    let field = DriftField::from_scenario(s)?;
    let rule = step_rule_for(&field, &s.x0);
    let dt = step_size(eps, s.dt_max, rule);
    let grid = if rule == StepRule::BoundaryLayer && s.x0[s.d - 1] == 0.0 {
        TimeGrid::with_refined_start(t_end, dt, START_SUBSTEPS)?
    } else {
        TimeGrid::new(t_end, dt)?
    };
    Ok(Setup { field, eps, grid })
}

/// Path `path_index` of the ensemble at `eps_grid[eps_index]`, on the same
/// grid and noise as every estimator uses for it.
pub fn sample_path(s: &Scenario, eps_index: usize, path_index: usize) -> Result<Path, McError> {
    let st = setup(s, eps_index, s.t_end)?;
    let mut noise = NoiseStream::new(path_seed(s.master_seed, eps_index, path_index));
    let mut path = Path::with_capacity(s.d, st.grid.n_steps() + 1);
    run_sde(&st.field, &s.x0, st.eps, &st.grid, &mut noise, |_, t, x| {
        path.push(t, x);
        ControlFlow::Continue(())
    })?;
    path.stops.tau_eps_h = hitting_time_h(&path);
    Ok(path)
}

/// Upward-exit fraction from the slab `|x_d| < δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionEstimate {
    /// Wilson interval over the paths that left the slab.
    pub ci: EstimateWithCI,
    pub up: usize,
    pub exited: usize,
    pub no_exit: usize,
}

impl SelectionEstimate {
    pub fn no_exit_frac(&self) -> f64 {
        self.no_exit as f64 / (self.exited + self.no_exit) as f64
    }
}

/// Runs `n` paths until `|x_d| ≥ δ` or `T` and counts upward exits.
pub fn estimate_selection(
    s: &Scenario,
    eps_index: usize,
    n: usize,
    delta: f64,
    level: f64,
) -> Result<SelectionEstimate, McError> {
    if n == 0 || !(delta > 0.0) {
        return Err(McError::Precondition(
            "need at least one path and δ > 0".into(),
        ));
    }
    let st = setup(s, eps_index, s.t_end)?;
    let d = s.d;
    let exits = map_paths(n, |i| -> Result<Option<bool>, McError> {
        let mut noise = NoiseStream::new(path_seed(s.master_seed, eps_index, i));
        let mut exit = None;
        run_sde(&st.field, &s.x0, st.eps, &st.grid, &mut noise, |_, _, x| {
            if x[d - 1].abs() >= delta {
                exit = Some(x[d - 1] > 0.0);
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        Ok(exit)
    })?;
    let exited = exits.iter().filter(|e| e.is_some()).count();
    let up = exits.iter().filter(|e| **e == Some(true)).count();
    let no_exit = n - exited;
    if no_exit * 10 > n {
        return Err(McError::NoExitMajority { no_exit, n });
    }
    Ok(SelectionEstimate {
        ci: wilson_ci(up, exited, level),
        up,
        exited,
        no_exit,
    })
}

/// Per-path fraction of `[0, t]` during which `pred(x_d)` holds, as a left
/// Riemann sum on the grid. At `t = 0` the start point alone decides.
pub fn occupation_samples(
    s: &Scenario,
    eps_index: usize,
    n: usize,
    t: f64,
    pred: impl Fn(f64) -> bool + Sync + Send,
) -> Result<Vec<f64>, McError> {
    let d = s.d;
    if t == 0.0 {
        return Ok(vec![if pred(s.x0[d - 1]) { 1.0 } else { 0.0 }; n]);
    }
    let st = setup(s, eps_index, t)?;
    map_paths(n, |i| -> Result<f64, McError> {
        let mut noise = NoiseStream::new(path_seed(s.master_seed, eps_index, i));
        let steps = st.grid.n_steps();
        let mut inside = 0.0;
        run_sde(&st.field, &s.x0, st.eps, &st.grid, &mut noise, |k, _, x| {
            if k < steps && pred(x[d - 1]) {
                inside += st.grid.step(k);
            }
            ControlFlow::Continue(())
        })?;
        Ok(inside / t)
    })
}

/// Mean time fraction spent in `{x_d ≥ 0}` on `[0, t]`.
pub fn estimate_occupation(
    s: &Scenario,
    eps_index: usize,
    n: usize,
    t: f64,
    level: f64,
) -> Result<EstimateWithCI, McError> {
    if n == 0 {
        return Err(McError::Precondition("need at least one path".into()));
    }
    let samples = occupation_samples(s, eps_index, n, t, |xd| xd >= 0.0)?;
    Ok(mean_ci(&samples, level))
}

/// Per-path `max_{t ≤ T} |X_d^ε(t)|`.
pub fn confinement_samples(s: &Scenario, eps_index: usize, n: usize) -> Result<Vec<f64>, McError> {
    let st = setup(s, eps_index, s.t_end)?;
    let d = s.d;
    map_paths(n, |i| -> Result<f64, McError> {
        let mut noise = NoiseStream::new(path_seed(s.master_seed, eps_index, i));
        let mut worst = 0.0f64;
        run_sde(&st.field, &s.x0, st.eps, &st.grid, &mut noise, |_, _, x| {
            worst = worst.max(x[d - 1].abs());
            ControlFlow::Continue(())
        })?;
        Ok(worst)
    })
}

/// Per-path component `i` of `X^ε(T)`.
pub fn terminal_samples(
    s: &Scenario,
    eps_index: usize,
    n: usize,
    component: usize,
) -> Result<Vec<f64>, McError> {
    if component >= s.d {
        return Err(McError::Precondition(format!(
            "component {component} of a {}-dimensional state",
            s.d
        )));
    }
    let st = setup(s, eps_index, s.t_end)?;
    map_paths(n, |i| -> Result<f64, McError> {
        let mut noise = NoiseStream::new(path_seed(s.master_seed, eps_index, i));
        let mut last = 0.0;
        run_sde(&st.field, &s.x0, st.eps, &st.grid, &mut noise, |_, _, x| {
            last = x[component];
            ControlFlow::Continue(())
        })?;
        Ok(last)
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// Per-path sup-distance between `X^ε` and the sliding solution on `H`,
/// over `[0, σ_δ ∧ T]` of the sliding solution.
pub fn sliding_sup_errors(s: &Scenario, eps_index: usize, n: usize) -> Result<Vec<f64>, McError> {
    let st = setup(s, eps_index, s.t_end)?;
    let d = s.d;
    let limit = integrate_sliding_ode(&st.field, &s.x0[..d - 1], s.t_end, s.delta, st.grid.dt())?;
    let stop = limit.last_time();
    map_paths(n, |i| -> Result<f64, McError> {
        let mut noise = NoiseStream::new(path_seed(s.master_seed, eps_index, i));
        let mut worst = 0.0f64;
        let mut on_h = vec![0.0; d];
        run_sde(&st.field, &s.x0, st.eps, &st.grid, &mut noise, |_, t, x| {
            limit.interpolate(t, &mut on_h);
            worst = worst.max(dist(x, &on_h));
            if t >= stop {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        Ok(worst)
    })
}

/// Per-path `sup_{t ≤ τ_H} |X^ε(t) − X(t)|`, with `X` the noiseless path
/// from a start point off `H` and `τ_H` its first grid time on or past `H`.
pub fn pre_hitting_sup_errors(
    s: &Scenario,
    eps_index: usize,
    n: usize,
) -> Result<Vec<f64>, McError> {
    let d = s.d;
    if s.x0[d - 1] == 0.0 {
        return Err(McError::Precondition("start point lies on H".into()));
    }
    let st = setup(s, eps_index, s.t_end)?;
    let mut limit = Path::with_capacity(d, st.grid.n_steps() + 1);
    run_sde(&st.field, &s.x0, 0.0, &st.grid, &mut NoiseStream::new(0), |_, t, x| {
        limit.push(t, x);
        ControlFlow::Continue(())
    })?;
    let tau = hitting_time_h(&limit).unwrap_or(s.t_end);
    let last = limit.times().partition_point(|&t| t <= tau).max(1) - 1;
    map_paths(n, |i| -> Result<f64, McError> {
        let mut noise = NoiseStream::new(path_seed(s.master_seed, eps_index, i));
        let mut worst = 0.0f64;
        run_sde(&st.field, &s.x0, st.eps, &st.grid, &mut noise, |k, _, x| {
            worst = worst.max(dist(x, limit.state(k)));
            if k >= last {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        Ok(worst)
    })
}

/// Per-path `sup_t |(X̄^ε, X_d^ε/ε) − (X̄, Y)|` with both systems driven by the
/// same noise record, up to `σ_δ ∧ T` of the limit pair.
pub fn coupled_sup_errors(s: &Scenario, eps_index: usize, n: usize) -> Result<Vec<f64>, McError> {
    let st = setup(s, eps_index, s.t_end)?;
    let d = s.d;
    if s.x0[d - 1] != 0.0 {
        return Err(McError::Precondition("start point must lie on H".into()));
    }
    let xbar0 = &s.x0[..d - 1];
    let coeffs = LinearizationCoeffs::from_field(&st.field, xbar0, s.t_end, s.delta)?;
    if !coeffs.is_constant() {
        return Err(McError::RequiresConstantC);
    }
    let dt = st.grid.dt();
    map_paths(n, |i| -> Result<f64, McError> {
        let noise = NoiseRecord::generate(path_seed(s.master_seed, eps_index, i), d, &st.grid);
        let x = euler_maruyama_on(&st.field, &s.x0, st.eps, &st.grid, &noise)?;
        let lim = integrate_coupled_limit(&st.field, &coeffs, xbar0, s.t_end, s.delta, dt, &noise)?;
        let mut worst = 0.0f64;
        for (k, c) in lim.states.iter().enumerate() {
            let xe = x.state(k);
            let mut e2: f64 = xe[..d - 1]
                .iter()
                .zip(&c.xbar)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            e2 += (xe[d - 1] / st.eps - c.y).powi(2);
            worst = worst.max(e2.sqrt());
        }
        Ok(worst)
    })
}

/// Median of the shared-noise sup-errors of [`coupled_sup_errors`].
pub fn coupled_convergence_check(
    s: &Scenario,
    eps_index: usize,
    n: usize,
    level: f64,
) -> Result<EstimateWithCI, McError> {
    if n == 0 {
        return Err(McError::Precondition("need at least one path".into()));
    }
    Ok(median_ci(&coupled_sup_errors(s, eps_index, n)?, level))
}
