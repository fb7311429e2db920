//! Browser bindings for the static page in `www/`.
//!
//! Each exported function returns a flat `Float64Array`; the layouts are
//! documented per function. The work happens in plain Rust functions so the
//! same code is tested natively.

use wasm_bindgen::prelude::*;
use znl::dsl::{parse_scenario, parse_scenario_with, Scenario};
use znl::field::{classify_case, DriftField, ProbeGrid, DEFAULT_C_TOL};
use znl::montecarlo::{estimate_selection, ks_distance, sample_path, terminal_samples};
use znl::predict::{example_terminal_cdf, exit_prob_two_sided, selection_probabilities};

fn one_dim(bd_plus: f64, bd_minus: f64, delta: f64, eps: f64, seed: u64) -> Result<Scenario, String> {
    let text = format!(
        "d = 1\nx0 = 0\nbplus = \"{bd_plus:?}\"\nbminus = \"{bd_minus:?}\"\n\
         delta = {delta:?}\neps = {eps:?}\nseed = {seed}\n"
    );
    parse_scenario(&text).map_err(|e| e.to_string())
}

/// `[p⁺, P_ε(exit up), p̂, lo, hi, no_exit_frac]` for constant normal drifts.
pub fn selection_summary(
    bd_plus: f64,
    bd_minus: f64,
    delta: f64,
    eps: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let limit = selection_probabilities(bd_plus, bd_minus).map_err(|e| e.to_string())?;
    let exact = exit_prob_two_sided(bd_plus, bd_minus, delta, eps).map_err(|e| e.to_string())?;
    let s = one_dim(bd_plus, bd_minus, delta, eps, seed)?;
    let est = estimate_selection(&s, 0, n_paths, delta, 0.95).map_err(|e| e.to_string())?;
    Ok(vec![
        limit.p_plus,
        exact,
        est.ci.point,
        est.ci.lo,
        est.ci.hi,
        est.no_exit_frac(),
    ])
}

/// `[ε₀, P₀, ε₁, P₁, …]` on a log-spaced grid from `eps_max` down to `eps_min`.
pub fn exit_curve(
    bd_plus: f64,
    bd_minus: f64,
    delta: f64,
    eps_min: f64,
    eps_max: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    if !(eps_min > 0.0 && eps_max > eps_min && n >= 2) {
        return Err("need 0 < eps_min < eps_max and n ≥ 2".into());
    }
    let ratio = (eps_min / eps_max).ln() / (n - 1) as f64;
    let mut out = Vec::with_capacity(2 * n);
    for k in 0..n {
        let eps = eps_max * (ratio * k as f64).exp();
        out.push(eps);
        out.push(exit_prob_two_sided(bd_plus, bd_minus, delta, eps).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Regime tag at `x0` of a scenario, or an error message.
pub fn classify_text(text: &str) -> Result<String, String> {
    let s = parse_scenario(text).map_err(|e| e.to_string())?;
    if !s.on_hyperplane() {
        return Err("x0 must lie on x_d = 0".into());
    }
    let field = DriftField::from_scenario(&s).map_err(|e| e.to_string())?;
    let label = classify_case(&field, &s.x0, s.t_end, s.delta, &ProbeGrid::default(), DEFAULT_C_TOL)
        .map_err(|e| e.to_string())?;
    Ok(label.tag.to_string())
}

/// `n_paths` paths of a scenario at noise level `eps`, resampled at `points`
/// equally spaced times. Layout: `[t₀ … t_{m−1}]` followed by one block of
/// `m` values of `x_d` per path.
pub fn paths_normal(text: &str, eps: f64, n_paths: usize, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least two points".into());
    }
    let s = parse_scenario_with(text, &[("eps".into(), format!("{eps:?}"))])
        .map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..points)
        .map(|j| s.t_end * j as f64 / (points - 1) as f64)
        .collect();
    let mut out = times.clone();
    let mut buf = vec![0.0; s.d];
    for i in 0..n_paths {
        let p = sample_path(&s, 0, i).map_err(|e| e.to_string())?;
        for &t in &times {
            p.interpolate(t, &mut buf);
            out.push(buf[s.d - 1]);
        }
    }
    Ok(out)
}

/// Tangential position at `T = 1` for `b⁺ = (1, 0)`, `b⁻ = (0, 0)`, which
/// equals the time spent above `H`. Layout: `[KS, h₁ … h_bins, q₁ … q_bins]`
/// with `h` the empirical and `q` the arcsine bin probabilities on `[0, 1]`.
pub fn arcsine_histogram(eps: f64, n_paths: usize, bins: usize, seed: u64) -> Result<Vec<f64>, String> {
    if bins == 0 || n_paths == 0 {
        return Err("need at least one bin and one path".into());
    }
    let text = format!(
        "d = 2\nx0 = 0, 0\nbplus = \"1\", \"0\"\nbminus = \"0\", \"0\"\nT = 1\n\
         delta = 1\neps = {eps:?}\nseed = {seed}\n"
    );
    let s = parse_scenario(&text).map_err(|e| e.to_string())?;
    let samples = terminal_samples(&s, 0, n_paths, 0).map_err(|e| e.to_string())?;
    let cdf = |x: f64| example_terminal_cdf(x, 1.0, 1.0, 0.0, 0.0).unwrap_or(f64::NAN);
    let mut out = vec![ks_distance(&samples, cdf)];
    let mut counts = vec![0usize; bins];
    for &x in &samples {
        let k = ((x * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    out.extend(counts.iter().map(|&c| c as f64 / n_paths as f64));
    let edge = |k: usize| k as f64 / bins as f64;
    out.extend((0..bins).map(|k| cdf(edge(k + 1)) - cdf(edge(k))));
    Ok(out)
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = selectionSummary)]
pub fn selection_summary_js(
    bd_plus: f64,
    bd_minus: f64,
    delta: f64,
    eps: f64,
    n_paths: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    js(selection_summary(bd_plus, bd_minus, delta, eps, n_paths, seed.into()))
}

#[wasm_bindgen(js_name = exitCurve)]
pub fn exit_curve_js(
    bd_plus: f64,
    bd_minus: f64,
    delta: f64,
    eps_min: f64,
    eps_max: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    js(exit_curve(bd_plus, bd_minus, delta, eps_min, eps_max, n))
}

#[wasm_bindgen(js_name = classify)]
pub fn classify_js(text: &str) -> Result<String, JsError> {
    js(classify_text(text))
}

#[wasm_bindgen(js_name = pathsNormal)]
pub fn paths_normal_js(text: &str, eps: f64, n_paths: usize, points: usize) -> Result<Vec<f64>, JsError> {
    js(paths_normal(text, eps, n_paths, points))
}

#[wasm_bindgen(js_name = arcsineHistogram)]
pub fn arcsine_histogram_js(eps: f64, n_paths: usize, bins: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    js(arcsine_histogram(eps, n_paths, bins, seed.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_summary_layout() {
        let v = selection_summary(2.0, -1.0, 0.1, 0.1, 2000, 7).unwrap();
        assert_eq!(v.len(), 6);
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(v[3] <= v[2] && v[2] <= v[4]);
        assert!(v[3] <= v[1] && v[1] <= v[4], "{v:?}");
        assert!(selection_summary(-1.0, 1.0, 0.1, 0.1, 10, 0).is_err());
    }

    #[test]
    fn exit_curve_approaches_the_limit() {
        let v = exit_curve(2.0, -1.0, 0.1, 1e-3, 1.0, 20).unwrap();
        assert_eq!(v.len(), 40);
        assert_eq!(v[0], 1.0);
        assert!((v[38] - 1e-3).abs() < 1e-15);
        assert!((v[39] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn classify_and_paths() {
        let text = "d = 1\nx0 = 0\nbplus = \"-1\"\nbminus = \"1\"\n";
        assert_eq!(classify_text(text).unwrap(), "A3");
        let v = paths_normal(text, 0.1, 3, 11).unwrap();
        assert_eq!(v.len(), 11 + 3 * 11);
        assert_eq!(v[10], 1.0);
        assert_eq!(v[11], 0.0);
        assert!(classify_text("d = 1").is_err());
    }

    #[test]
    fn arcsine_histogram_sums_to_one() {
        let v = arcsine_histogram(0.05, 2000, 10, 1).unwrap();
        assert_eq!(v.len(), 21);
        let h: f64 = v[1..11].iter().sum();
        let q: f64 = v[11..].iter().sum();
        assert!((h - 1.0).abs() < 1e-12 && (q - 1.0).abs() < 1e-12);
        assert!(v[0] < 1.36 / 2000f64.sqrt() + 0.05, "{}", v[0]);
        // U-shaped: edge bins dominate the middle.
        assert!(v[1] > v[5] && v[10] > v[6]);
    }
}
