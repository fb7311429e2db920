use std::fmt::Write as _;

use serde::Serialize;

use super::IntegrateError;

/// Stopping times attached to a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stops {
    /// First hit of `H` by a deterministic path (`τ_H`, or `τ±_H` for branches).
    pub tau_h: Option<f64>,
    /// First hit of `H` by a noisy path.
    pub tau_eps_h: Option<f64>,
    /// First exit from the δ-ball around the start.
    pub sigma_delta: Option<f64>,
    /// First exit from the slab `|x_d| < δ`.
    pub sigma_eps_hdelta: Option<f64>,
}

/// Time grid and states of one trajectory; states are stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    pub stops: Stops,
}

impl Path {
    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Path {
            dim,
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n * dim),
            stops: Stops::default(),
        }
    }

    /// Builds a path from explicit rows; checks the grid invariants.
    pub fn from_rows(times: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self, IntegrateError> {
        let dim = rows.first().map_or(0, Vec::len);
        if times.is_empty() || times.len() != rows.len() || dim == 0 {
            return Err(IntegrateError::InvalidArgument(
                "path needs matching nonempty times and states".into(),
            ));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(IntegrateError::InvalidArgument(
                "times must start at 0 and increase strictly".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(IntegrateError::InvalidArgument("ragged states".into()));
        }
        Ok(Path {
            dim,
            times,
            states: rows.concat(),
            stops: Stops::default(),
        })
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.times.push(t);
        self.states.extend_from_slice(x);
    }

    pub(crate) fn replace_last(&mut self, t: f64, x: &[f64]) {
        let n = self.times.len();
        self.times[n - 1] = t;
        self.states[(n - 1) * self.dim..].copy_from_slice(x);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks(self.dim)
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("path is nonempty")
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Component `i` over the whole path.
    pub fn component(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.states.chunks(self.dim).map(move |s| s[i])
    }

    /// Linear interpolation at time `t` within the grid.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let k = match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(k) => {
                out.copy_from_slice(self.state(k));
                return;
            }
            Err(k) => k,
        };
        if k == 0 {
            out.copy_from_slice(self.state(0));
            return;
        }
        if k >= self.len() {
            out.copy_from_slice(self.last_state());
            return;
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (self.state(k - 1), self.state(k));
        for i in 0..self.dim {
            out[i] = a[i] + w * (b[i] - a[i]);
        }
    }

    /// CSV with header `t,x1,...,xd`, ten significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 1..=self.dim {
            let _ = write!(s, ",x{i}");
        }
        s.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            s.push_str(&sig10(*t));
            for v in self.state(k) {
                s.push(',');
                s.push_str(&sig10(*v));
            }
            s.push('\n');
        }
        s
    }
}

/// Ten significant digits in scientific notation.
pub fn sig10(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.9e}")
    } else {
        String::from("nan")
    }
}

/// First time the normal coordinate reaches zero: the first grid point with
/// `x_d = 0`, or the linearly interpolated crossing of the first sign change.
pub fn hitting_time_h(p: &Path) -> Option<f64> {
    let d = p.dim - 1;
    let times = p.times();
    for k in 0..p.len() {
        let a = p.state(k)[d];
        if a == 0.0 {
            return Some(times[k]);
        }
        if k + 1 < p.len() {
            let b = p.state(k + 1)[d];
            if b != 0.0 && (a < 0.0) != (b < 0.0) {
                return Some(times[k] + (times[k + 1] - times[k]) * a / (a - b));
            }
        }
    }
    None
}

/// First grid time with `|x − center| ≥ δ`.
pub fn exit_time_ball(p: &Path, center: &[f64], delta: f64) -> Result<Option<f64>, IntegrateError> {
    if !(delta > 0.0) {
        return Err(IntegrateError::InvalidArgument(format!(
            "radius must be positive, got {delta}"
        )));
    }
    if center.len() != p.dim {
        return Err(IntegrateError::InvalidArgument(
            "center dimension differs from the path".into(),
        ));
    }
    let d2 = delta * delta;
    Ok(p.states().zip(p.times()).find_map(|(x, &t)| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        (r2 >= d2).then_some(t)
    }))
}

/// Exit from the slab `|x_d| < δ`, with the side it left through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabExit {
    pub time: f64,
    /// `+1.0` for an exit through `x_d = δ`, `-1.0` through `x_d = −δ`.
    pub sign: f64,
}

/// First grid time with `|x_d| ≥ δ`.
pub fn exit_time_slab(p: &Path, delta: f64) -> Result<Option<SlabExit>, IntegrateError> {
    if !(delta > 0.0) {
        return Err(IntegrateError::InvalidArgument(format!(
            "slab half-width must be positive, got {delta}"
        )));
    }
    let d = p.dim - 1;
    Ok(p.states().zip(p.times()).find_map(|(x, &t)| {
        (x[d].abs() >= delta).then_some(SlabExit {
            time: t,
            sign: x[d].signum(),
        })
    }))
}

/// Skorokhod reflection at zero: `r[k] = ξ[k] − min_{j≤k} ξ[j]`.
pub fn reflection_map(xi: &[f64]) -> Result<Vec<f64>, IntegrateError> {
    match xi.first() {
        Some(&0.0) => {}
        _ => {
            return Err(IntegrateError::InvalidArgument(
                "reflection driver must start at 0".into(),
            ))
        }
    }
    let mut running_min = f64::INFINITY;
    Ok(xi
        .iter()
        .map(|&v| {
            running_min = running_min.min(v);
            v - running_min
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path1(times: &[f64], xs: &[f64]) -> Path {
        Path::from_rows(times.to_vec(), xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn hitting_time_interpolates() {
        assert_eq!(hitting_time_h(&path1(&[0.0, 1.0], &[1.0, -1.0])), Some(0.5));
        assert_eq!(hitting_time_h(&path1(&[0.0, 1.0], &[0.2, 0.0])), Some(1.0));
        assert_eq!(hitting_time_h(&path1(&[0.0, 1.0, 2.0], &[0.3, 0.3, 0.3])), None);
        assert_eq!(
            hitting_time_h(&path1(&[0.0, 1.0, 2.0], &[-0.3, -0.1, 0.1])),
            Some(1.5)
        );
        assert_eq!(hitting_time_h(&path1(&[0.0, 1.0], &[0.0, 1.0])), Some(0.0));
    }

    #[test]
    fn ball_exit() {
        let constant = path1(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]);
        assert_eq!(exit_time_ball(&constant, &[1.0], 0.5).unwrap(), None);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let ramp = path1(&times, &times);
        let t = exit_time_ball(&ramp, &[0.0], 0.5).unwrap().unwrap();
        assert!(t >= 0.5 && (t - 0.5).abs() < 1e-12);
        assert!(exit_time_ball(&ramp, &[0.0], 0.0).is_err());
        assert!(exit_time_ball(&ramp, &[0.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn slab_exit_records_side() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let up = path1(&times, &times);
        let e = exit_time_slab(&up, 0.25).unwrap().unwrap();
        assert!((e.time - 0.25).abs() < 1e-12);
        assert_eq!(e.sign, 1.0);
        let down: Vec<f64> = times.iter().map(|t| -t).collect();
        assert_eq!(exit_time_slab(&path1(&times, &down), 0.25).unwrap().unwrap().sign, -1.0);
        let inside: Vec<f64> = times.iter().map(|t| 0.05 * t).collect();
        assert_eq!(exit_time_slab(&path1(&times, &inside), 0.25).unwrap(), None);
        assert!(exit_time_slab(&up, -1.0).is_err());
    }

    #[test]
    fn reflection_hand_cases() {
        assert_eq!(reflection_map(&[0.0, -1.0, -2.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(reflection_map(&[0.0, 1.0, 2.0]).unwrap(), vec![0.0, 1.0, 2.0]);
        assert_eq!(reflection_map(&[0.0, -1.0, 1.0]).unwrap(), vec![0.0, 0.0, 2.0]);
        assert!(reflection_map(&[1.0, 0.0]).is_err());
        assert!(reflection_map(&[]).is_err());
    }

    #[test]
    fn path_invariants_enforced() {
        assert!(Path::from_rows(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(Path::from_rows(vec![0.5], vec![vec![1.0]]).is_err());
        assert!(Path::from_rows(vec![0.0, 1.0], vec![vec![1.0]]).is_err());
        assert!(Path::from_rows(vec![0.0, 1.0], vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = Path::from_rows(vec![0.0, 0.5], vec![vec![1.0, -2.0], vec![0.25, 1e-12]]).unwrap();
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x1,x2");
        assert_eq!(lines[1], "0.000000000e0,1.000000000e0,-2.000000000e0");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn interpolation() {
        let p = path1(&[0.0, 1.0, 3.0], &[0.0, 2.0, 0.0]);
        let mut out = [0.0];
        p.interpolate(0.5, &mut out);
        assert_eq!(out[0], 1.0);
        p.interpolate(2.0, &mut out);
        assert_eq!(out[0], 1.0);
        p.interpolate(5.0, &mut out);
        assert_eq!(out[0], 0.0);
    }
}
