//! Scenario self-verification: the classified regime, the closed-form values
//! and a Monte Carlo statistic are compared with what the scenario declares.

use serde::Serialize;
use znl::dsl::{Scenario, Theory};
use znl::field::{CaseLabel, CaseTag};
use znl::montecarlo::{Statistic, SweepRow};
use znl::predict::Prediction;

/// Agreement required between declared and computed closed-form values.
const VALUE_TOL: f64 = 1e-9;
/// Occupation estimates may miss the limit by this much at the finest ε
/// when the interval itself is narrower than the O(ε) bias.
const SLIDING_TOL: f64 = 0.02;
const ONE_SIDED_TOL: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub theory: String,
    pub report_only: bool,
    pub label: Option<CaseLabel>,
    pub prediction: Option<Prediction>,
    pub rows: Vec<SweepRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Statistic `verify` runs for a regime.
pub fn statistic_for(s: &Scenario, label: Option<&CaseLabel>) -> Statistic {
    match label {
        None => Statistic::PreHittingSupError,
        Some(_) if s.theory == Theory::None => Statistic::Selection,
        Some(l) => Statistic::for_case(l.tag).unwrap_or(Statistic::Confinement),
    }
}

pub fn checks(
    s: &Scenario,
    label: Option<&CaseLabel>,
    prediction: Option<&Prediction>,
    rows: &[SweepRow],
) -> Vec<Check> {
    let mut out = Vec::new();
    if let Some(want) = s.expect.case {
        let got = label.map(|l| l.tag);
        out.push(check(
            "case",
            got == Some(want),
            format!(
                "classified {}, expected {want}",
                got.map_or("nothing (x0 off H)".to_string(), |t| t.to_string())
            ),
        ));
    }
    let closed = |name: &str, want: Option<f64>, got: Option<f64>, out: &mut Vec<Check>| {
        if let Some(w) = want {
            out.push(match got {
                Some(g) => check(
                    name,
                    (g - w).abs() <= VALUE_TOL,
                    format!("closed form {g}, declared {w}"),
                ),
                None => check(name, false, format!("no closed form, declared {w}")),
            });
        }
    };
    closed("p_plus", s.expect.p_plus, prediction.and_then(|p| p.p_plus), &mut out);
    closed(
        "occupation",
        s.expect.occupation,
        prediction.and_then(|p| p.occupation_plus),
        &mut out,
    );

    let (Some(l), Some(last)) = (label, rows.last()) else {
        return out;
    };
    let e = &last.estimate;
    let at = format!("at ε = {}", last.eps);
    match (last.estimator, last.predicted) {
        (Statistic::Selection, Some(p)) => out.push(check(
            "selection",
            e.covers(p),
            format!("{at}: CI [{:.4}, {:.4}] vs p⁺ = {p:.4}", e.lo, e.hi),
        )),
        (Statistic::Occupation, Some(p)) => {
            let gap = (e.point - p).abs();
            let (ok, tol) = if l.tag.is_sliding() {
                (e.covers(p) || gap <= SLIDING_TOL, SLIDING_TOL)
            } else {
                (gap <= ONE_SIDED_TOL, ONE_SIDED_TOL)
            };
            out.push(check(
                "occupation",
                ok,
                format!(
                    "{at}: {:.4}, CI [{:.4}, {:.4}] vs {p:.4} (tolerance {tol})",
                    e.point, e.lo, e.hi
                ),
            ));
        }
        (Statistic::TerminalKs, _) => {
            let bound = 1.36 / (e.n as f64).sqrt() + 0.03;
            out.push(check(
                "terminal_ks",
                e.point <= bound,
                format!("{at}: KS {:.4} vs bound {bound:.4}", e.point),
            ));
        }
        _ => {}
    }
    out
}

pub fn is_report_only(s: &Scenario, label: Option<&CaseLabel>) -> bool {
    s.theory == Theory::None || label.is_none_or(|l| l.tag == CaseTag::Mixed)
}
