use serde::Serialize;

use super::{check_noise, IntegrateError, NoiseRecord, Path, TimeGrid};
use crate::field::{DriftField, LinearizationCoeffs, Side, DEFAULT_C_TOL};

/// Sliding weights `(ρ⁺, ρ⁻)` from the normal components on either side:
/// `ρ⁺ = b_d⁻ / (b_d⁻ − b_d⁺)` and `ρ⁻ = 1 − ρ⁺`, which is the convex
/// combination making the averaged normal velocity vanish.
pub fn filippov_weights(bd_plus: f64, bd_minus: f64) -> Option<(f64, f64)> {
    let den = bd_minus - bd_plus;
    if !(den >= DEFAULT_C_TOL) {
        return None;
    }
    let rho_plus = bd_minus / den;
    Some((rho_plus, 1.0 - rho_plus))
}

/// Euler path of `ẋ = b^side(t, x)` from a point of `H`, stopped at the
/// first return to `H` after leaving it.
pub fn integrate_branch(
    field: &DriftField,
    x0: &[f64],
    side: Side,
    t_end: f64,
    dt: f64,
) -> Result<Path, IntegrateError> {
    let d = field.dim();
    if x0.len() != d {
        return Err(IntegrateError::InvalidArgument(format!(
            "initial point has {} components, field has {d}",
            x0.len()
        )));
    }
    if x0[d - 1].abs() > DEFAULT_C_TOL {
        return Err(IntegrateError::InvalidArgument(
            "branch solutions start on H".into(),
        ));
    }
    let grid = TimeGrid::new(t_end, dt)?;
    let s = side.sign();
    let mut path = Path::with_capacity(d, grid.n_steps() + 1);
    let mut x = x0.to_vec();
    let mut b = vec![0.0; d];
    path.push(0.0, &x);
    let mut left = false;
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let h = grid.step(k);
        field.eval_side_into(side, t, &x, &mut b)?;
        let prev = x[d - 1];
        for i in 0..d {
            x[i] += b[i] * h;
        }
        let t1 = grid.time(k + 1);
        path.push(t1, &x);
        let v = s * x[d - 1];
        if left {
            if v <= 0.0 {
                // Back on H: cut the last step at the interpolated crossing.
                let w = prev / (prev - x[d - 1]);
                let last = path.state(path.len() - 2).to_vec();
                let tau = t + w * h;
                let hit: Vec<f64> = last
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| a + w * (b - a))
                    .collect();
                path.replace_last(tau, &hit);
                path.stops.tau_h = Some(tau);
                return Ok(path);
            }
        } else if v > DEFAULT_C_TOL {
            left = true;
        } else if v < -DEFAULT_C_TOL || k + 1 >= 10 {
            return Err(IntegrateError::BranchDoesNotLeave { side });
        }
    }
    if !left {
        return Err(IntegrateError::BranchDoesNotLeave { side });
    }
    Ok(path)
}

/// Euler path of the sliding motion on `H`,
/// `dX̄/dt = ρ⁺·b̄⁺(t, (X̄, 0)) + ρ⁻·b̄⁻(t, (X̄, 0))`, embedded as `(X̄, 0)` and
/// stopped when `|X̄ − x̄⁰| ≥ δ` or at `T`.
pub fn integrate_sliding_ode(
    field: &DriftField,
    xbar0: &[f64],
    t_end: f64,
    delta: f64,
    dt: f64,
) -> Result<Path, IntegrateError> {
    let d = field.dim();
    if xbar0.len() + 1 != d {
        return Err(IntegrateError::InvalidArgument(format!(
            "x̄ must have {} components",
            d - 1
        )));
    }
    if !(delta > 0.0) {
        return Err(IntegrateError::InvalidArgument(format!(
            "radius must be positive, got {delta}"
        )));
    }
    let grid = TimeGrid::new(t_end, dt)?;
    let mut x = xbar0.to_vec();
    x.push(0.0);
    let mut bp = vec![0.0; d - 1];
    let mut bm = vec![0.0; d - 1];
    let mut path = Path::with_capacity(d, grid.n_steps() + 1);
    path.push(0.0, &x);
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let h = grid.step(k);
        let np = field.normal(Side::Plus, t, &x)?;
        let nm = field.normal(Side::Minus, t, &x)?;
        let (rp, rm) = filippov_weights(np, nm).ok_or(IntegrateError::DegenerateDenominator {
            t,
            denominator: nm - np,
        })?;
        field.tangential_into(Side::Plus, t, &x, &mut bp)?;
        field.tangential_into(Side::Minus, t, &x, &mut bm)?;
        for i in 0..d - 1 {
            x[i] += (rp * bp[i] + rm * bm[i]) * h;
        }
        let t1 = grid.time(k + 1);
        path.push(t1, &x);
        let r2: f64 = x[..d - 1]
            .iter()
            .zip(xbar0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if r2 >= delta * delta {
            path.stops.sigma_delta = Some(t1);
            break;
        }
    }
    Ok(path)
}

/// One point of the coupled limit system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledState {
    pub xbar: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledPath {
    pub times: Vec<f64>,
    pub states: Vec<CoupledState>,
    pub sigma_delta: Option<f64>,
}

/// Euler–Maruyama for the pair `(X̄, Y)`:
/// `dX̄ = b̄^{side(Y)}(s, (X̄, 0)) ds`, `dY = c^{side(Y)}(s, X̄)·Y ds + dW_d`,
/// where `side(Y)` is `+` for `Y ≥ 0`. Only the last noise component is used.
#[allow(clippy::too_many_arguments)]
pub fn integrate_coupled_limit(
    field: &DriftField,
    coeffs: &LinearizationCoeffs,
    xbar0: &[f64],
    t_end: f64,
    delta: f64,
    dt: f64,
    noise: &NoiseRecord,
) -> Result<CoupledPath, IntegrateError> {
    let d = field.dim();
    if xbar0.len() + 1 != d {
        return Err(IntegrateError::InvalidArgument(format!(
            "x̄ must have {} components",
            d - 1
        )));
    }
    if !(delta > 0.0) {
        return Err(IntegrateError::InvalidArgument(format!(
            "radius must be positive, got {delta}"
        )));
    }
    let grid = TimeGrid::new(t_end, dt)?;
    check_noise(noise, &grid, d)?;
    let mut x = xbar0.to_vec();
    x.push(0.0);
    let mut y = 0.0;
    let mut bbar = vec![0.0; d - 1];
    let mut out = CoupledPath {
        times: Vec::with_capacity(grid.n_steps() + 1),
        states: Vec::with_capacity(grid.n_steps() + 1),
        sigma_delta: None,
    };
    out.times.push(0.0);
    out.states.push(CoupledState {
        xbar: xbar0.to_vec(),
        y,
    });
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let h = grid.step(k);
        let side = Side::of(y);
        field.tangential_into(side, t, &x, &mut bbar)?;
        let (cp, cm) = coeffs.eval(t, &x[..d - 1])?;
        let c = if side == Side::Plus { cp } else { cm };
        for i in 0..d - 1 {
            x[i] += bbar[i] * h;
        }
        y += c * y * h + noise.get(k)[d - 1];
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::InvalidArgument(format!(
                "coupled system diverged at t = {t}"
            )));
        }
        let t1 = grid.time(k + 1);
        out.times.push(t1);
        out.states.push(CoupledState {
            xbar: x[..d - 1].to_vec(),
            y,
        });
        let r2: f64 = x[..d - 1]
            .iter()
            .zip(xbar0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if r2 >= delta * delta {
            out.sigma_delta = Some(t1);
            break;
        }
    }
    Ok(out)
}
