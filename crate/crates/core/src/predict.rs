//! Closed-form limits the simulations are compared with.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::dsl::Scenario;
use crate::field::{CaseTag, DriftField, FieldError, Side};
use crate::integrate::filippov_weights;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("degenerate case: {0}")]
    DegenerateCase(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn violated(msg: impl Into<String>) -> PredictError {
    PredictError::PreconditionViolated(msg.into())
}

/// Limit law of the repelling regime over the two branch solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionLaw {
    pub p_plus: f64,
    pub p_minus: f64,
}

/// `p⁺ = b_d⁺ / (b_d⁺ − b_d⁻)`, `p⁻ = 1 − p⁺`.
pub fn selection_probabilities(bd_plus: f64, bd_minus: f64) -> Result<SelectionLaw, PredictError> {
    if !(bd_plus > 0.0 && bd_minus < 0.0) {
        return Err(violated(format!(
            "repelling signs need b_d⁺ > 0 > b_d⁻, got {bd_plus}, {bd_minus}"
        )));
    }
    let p_plus = bd_plus / (bd_plus - bd_minus);
    Ok(SelectionLaw {
        p_plus,
        p_minus: 1.0 - p_plus,
    })
}

/// `(1 − e^{−a}) / r` for `a ≥ 0`, with `e^{−a}` flushed to 0 past the
/// underflow threshold.
fn scale_increment(a: f64, r: f64) -> f64 {
    let one_minus = if -a <= -745.0 { 1.0 } else { -(-a).exp_m1() };
    one_minus / r
}

/// Probability that `dZ = μ(Z) dt + ε dW`, `Z(0) = 0`, with `μ = μ⁺` on
/// `z ≥ 0` and `μ⁻` on `z < 0`, reaches `+δ` before `−δ`.
///
/// With the scale density `s'(z) = exp(−2 μ(z) z / ε²)`,
/// `P = A / (A + B)` where `A = ∫_{−δ}^0 s'` and `B = ∫_0^δ s'`, i.e.
/// `A ∝ (1 − e^{2δμ⁻/ε²}) / (−μ⁻)` and `B ∝ (1 − e^{−2δμ⁺/ε²}) / μ⁺`.
pub fn exit_prob_two_sided(
    mu_plus: f64,
    mu_minus: f64,
    delta: f64,
    eps: f64,
) -> Result<f64, PredictError> {
    if !(mu_plus > 0.0 && mu_minus < 0.0) {
        return Err(violated(format!(
            "need μ⁺ > 0 > μ⁻, got {mu_plus}, {mu_minus}"
        )));
    }
    if !(delta > 0.0 && eps > 0.0) {
        return Err(violated(format!(
            "need δ > 0 and ε > 0, got {delta}, {eps}"
        )));
    }
    let k = 2.0 * delta / (eps * eps);
    let a = scale_increment(-mu_minus * k, -mu_minus);
    let b = scale_increment(mu_plus * k, mu_plus);
    Ok(a / (a + b))
}

/// Limit fraction of time spent in `{x_d ≥ 0}` under attraction from both
/// sides: `ρ⁺ = b_d⁻ / (b_d⁻ − b_d⁺)`.
pub fn occupation_fraction(bd_plus: f64, bd_minus: f64) -> Result<f64, PredictError> {
    if !(bd_plus < 0.0 && bd_minus > 0.0) {
        return Err(violated(format!(
            "attracting signs need b_d⁺ < 0 < b_d⁻, got {bd_plus}, {bd_minus}"
        )));
    }
    filippov_weights(bd_plus, bd_minus)
        .map(|(rho_plus, _)| rho_plus)
        .ok_or_else(|| violated("normal components too close"))
}

/// Lévy's arcsine law: `P(l⁺(T) ≤ x) = (2/π)·asin(√(x/T))` for the time
/// `l⁺(T)` a Brownian motion spends above zero.
pub fn arcsine_cdf(x: f64, t_end: f64) -> Result<f64, PredictError> {
    if !(t_end > 0.0) {
        return Err(violated(format!("horizon must be positive, got {t_end}")));
    }
    if !(0.0..=t_end).contains(&x) {
        return Err(violated(format!("{x} outside [0, {t_end}]")));
    }
    Ok(2.0 / PI * (x / t_end).sqrt().asin())
}

/// CDF of `x̄⁰ + b̄⁺·l⁺ + b̄⁻·(T − l⁺)` with `l⁺` arcsine distributed.
/// Points outside the support map to 0 or 1.
pub fn example_terminal_cdf(
    x: f64,
    t_end: f64,
    bbar_plus: f64,
    bbar_minus: f64,
    xbar0: f64,
) -> Result<f64, PredictError> {
    if bbar_plus == bbar_minus {
        return Err(PredictError::DegenerateCase(format!(
            "b̄⁺ = b̄⁻ = {bbar_plus}: the terminal law is a point mass"
        )));
    }
    if !(t_end > 0.0) {
        return Err(violated(format!("horizon must be positive, got {t_end}")));
    }
    let slope = bbar_plus - bbar_minus;
    let l = ((x - xbar0 - bbar_minus * t_end) / slope).clamp(0.0, t_end);
    let f = arcsine_cdf(l, t_end)?;
    Ok(if slope > 0.0 { f } else { 1.0 - f })
}

/// Closed-form values for a scenario, with coefficients frozen at `(0, x⁰)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub case: CaseTag,
    pub bd_plus: f64,
    pub bd_minus: f64,
    pub p_plus: Option<f64>,
    pub p_minus: Option<f64>,
    pub occupation_plus: Option<f64>,
    /// `(ε, P(exit through +δ))` for each ε of the scenario, repelling case.
    pub exit_prob: Vec<(f64, f64)>,
    /// Tangential drifts on either side, for the arcsine terminal law.
    pub terminal_law: Option<TerminalLaw>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TerminalLaw {
    pub xbar0: f64,
    pub bbar_plus: f64,
    pub bbar_minus: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
}

impl TerminalLaw {
    pub fn cdf(&self, x: f64) -> Result<f64, PredictError> {
        example_terminal_cdf(x, self.t_end, self.bbar_plus, self.bbar_minus, self.xbar0)
    }
}

pub fn predict_scenario(s: &Scenario, case: CaseTag) -> Result<Prediction, PredictError> {
    let field = DriftField::from_scenario(s)?;
    let d = s.d;
    let bd_plus = field.normal(Side::Plus, 0.0, &s.x0).map_err(FieldError::from)?;
    let bd_minus = field.normal(Side::Minus, 0.0, &s.x0).map_err(FieldError::from)?;
    let mut p = Prediction {
        case,
        bd_plus,
        bd_minus,
        p_plus: None,
        p_minus: None,
        occupation_plus: None,
        exit_prob: Vec::new(),
        terminal_law: None,
    };
    match case {
        CaseTag::A1 => {
            let law = selection_probabilities(bd_plus, bd_minus)?;
            p.p_plus = Some(law.p_plus);
            p.p_minus = Some(law.p_minus);
            for &eps in &s.eps_grid {
                p.exit_prob
                    .push((eps, exit_prob_two_sided(bd_plus, bd_minus, s.delta, eps)?));
            }
        }
        CaseTag::A2Plus => {
            p.p_plus = Some(1.0);
            p.p_minus = Some(0.0);
        }
        CaseTag::A2Minus => {
            p.p_plus = Some(0.0);
            p.p_minus = Some(1.0);
        }
        CaseTag::A3 | CaseTag::A3Plus | CaseTag::A3Minus => {
            p.occupation_plus = filippov_weights(bd_plus, bd_minus).map(|w| w.0);
        }
        CaseTag::A4 => {
            if d == 2 && field.is_constant() {
                let mut bp = [0.0];
                let mut bm = [0.0];
                field
                    .tangential_into(Side::Plus, 0.0, &s.x0, &mut bp)
                    .map_err(FieldError::from)?;
                field
                    .tangential_into(Side::Minus, 0.0, &s.x0, &mut bm)
                    .map_err(FieldError::from)?;
                if bp[0] != bm[0] {
                    p.terminal_law = Some(TerminalLaw {
                        xbar0: s.x0[0],
                        bbar_plus: bp[0],
                        bbar_minus: bm[0],
                        t_end: s.t_end,
                    });
                }
            }
        }
        CaseTag::Mixed => {}
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn quadrature_exit(mu_p: f64, mu_m: f64, delta: f64, eps: f64) -> f64 {
        let e2 = eps * eps;
        let a = simpson(|z| (-2.0 * mu_m * z / e2).exp(), -delta, 0.0, 20_000);
        let b = simpson(|z| (-2.0 * mu_p * z / e2).exp(), 0.0, delta, 20_000);
        a / (a + b)
    }

    #[test]
    fn selection_values() {
        let s = selection_probabilities(1.0, -1.0).unwrap();
        assert_eq!((s.p_plus, s.p_minus), (0.5, 0.5));
        let s = selection_probabilities(2.0, -1.0).unwrap();
        assert!((s.p_plus - 2.0 / 3.0).abs() < 1e-15);
        let s = selection_probabilities(1.0, -3.0).unwrap();
        assert_eq!((s.p_plus, s.p_minus), (0.25, 0.75));
        assert!(selection_probabilities(-1.0, 1.0).is_err());
        assert!(selection_probabilities(1.0, 0.0).is_err());
    }

    #[test]
    fn exit_probability_values() {
        assert_eq!(exit_prob_two_sided(1.0, -1.0, 1.0, 1.0).unwrap(), 0.5);
        let a = (1.0 - (-2.0f64).exp()) / 1.0;
        let b = (1.0 - (-4.0f64).exp()) / 2.0;
        let hand = a / (a + b);
        let v = exit_prob_two_sided(2.0, -1.0, 1.0, 1.0).unwrap();
        assert!((v - hand).abs() < 1e-15);
        assert!((v - 0.6378).abs() < 1e-3, "{v}");
        let lim = exit_prob_two_sided(2.0, -1.0, 1.0, 1e-3).unwrap();
        assert!((lim - 2.0 / 3.0).abs() < 1e-9);
        assert!(exit_prob_two_sided(2.0, -1.0, 0.0, 1.0).is_err());
        assert!(exit_prob_two_sided(2.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn exit_probability_matches_quadrature() {
        for &(mp, mm, d, e) in &[
            (2.0, -1.0, 1.0, 1.0),
            (2.0, -1.0, 0.1, 0.1),
            (0.5, -3.0, 0.3, 0.4),
            (1.0, -1.0, 0.2, 0.5),
            (4.0, -0.25, 0.1, 0.3),
        ] {
            let v = exit_prob_two_sided(mp, mm, d, e).unwrap();
            let q = quadrature_exit(mp, mm, d, e);
            assert!((v - q).abs() <= 1e-10, "{mp} {mm} {d} {e}: {v} vs {q}");
        }
    }

    #[test]
    fn exit_probability_tends_to_selection_monotonically() {
        let target = 2.0 / 3.0;
        let mut last_gap = f64::INFINITY;
        for k in 1..=10 {
            let eps = 2f64.powi(-k);
            let gap = (exit_prob_two_sided(2.0, -1.0, 0.1, eps).unwrap() - target).abs();
            assert!(gap <= last_gap, "k = {k}");
            last_gap = gap;
        }
        assert!(last_gap <= 1e-6);
    }

    #[test]
    fn extreme_exponents_do_not_overflow() {
        let v = exit_prob_two_sided(1e3, -1e-3, 10.0, 1e-6).unwrap();
        assert!(v.is_finite() && v > 0.0 && v < 1.0);
    }

    #[test]
    fn occupation_values() {
        assert_eq!(occupation_fraction(-1.0, 1.0).unwrap(), 0.5);
        assert_eq!(occupation_fraction(-1.0, 3.0).unwrap(), 0.75);
        assert_eq!(occupation_fraction(-3.0, 1.0).unwrap(), 0.25);
        assert!(occupation_fraction(1.0, 1.0).is_err());
    }

    #[test]
    fn arcsine_values() {
        assert!((arcsine_cdf(0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((arcsine_cdf(0.25, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(arcsine_cdf(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(arcsine_cdf(2.0, 2.0).unwrap(), 1.0);
        assert!(arcsine_cdf(-0.1, 1.0).is_err());
        assert!(arcsine_cdf(1.1, 1.0).is_err());
    }

    #[test]
    fn terminal_cdf() {
        for x in [0.0, 0.1, 0.37, 0.9, 1.0] {
            assert_eq!(
                example_terminal_cdf(x, 1.0, 1.0, 0.0, 0.0).unwrap(),
                arcsine_cdf(x, 1.0).unwrap()
            );
        }
        assert!((example_terminal_cdf(0.0, 1.0, 1.0, -1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((example_terminal_cdf(1.0, 1.0, 2.0, 0.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        // Reversed orientation: X̄ = −l⁺ has P(X̄ ≤ −0.75) = P(l⁺ ≥ 0.75).
        let v = example_terminal_cdf(-0.75, 1.0, -1.0, 0.0, 0.0).unwrap();
        assert!((v - (1.0 - arcsine_cdf(0.75, 1.0).unwrap())).abs() < 1e-15);
        assert_eq!(example_terminal_cdf(-5.0, 1.0, 1.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(example_terminal_cdf(5.0, 1.0, 1.0, 0.0, 0.0).unwrap(), 1.0);
        assert!(matches!(
            example_terminal_cdf(0.5, 1.0, 1.0, 1.0, 0.0),
            Err(PredictError::DegenerateCase(_))
        ));
    }
}
