use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::estimators::{
    confinement_samples, coupled_sup_errors, estimate_occupation, estimate_selection,
    pre_hitting_sup_errors, sliding_sup_errors, terminal_samples,
};
use super::stats::{ks_distance, median_ci, EstimateWithCI};
use super::McError;
use crate::dsl::Scenario;
use crate::field::{CaseTag, DriftField, Side};
use crate::predict::{occupation_fraction, predict_scenario, selection_probabilities};

pub const SWEEP_CSV_HEADER: &str =
    "eps,estimator,point,lo,hi,n,predicted,abs_gap,no_exit_frac,runtime_s";

/// Statistic evaluated at every ε of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Upward-exit fraction from the δ-slab; predicted `p⁺`.
    Selection,
    /// Time fraction in `{x_d ≥ 0}` over `[0, T]`; predicted `ρ⁺`.
    Occupation,
    /// Median sup-distance to the sliding solution.
    SlidingSupError,
    /// Median of `max_t |X_d^ε|`.
    Confinement,
    /// Median sup-distance to the noiseless path before it reaches `H`.
    PreHittingSupError,
    /// Median shared-noise sup-distance to the coupled limit pair.
    CoupledSupError,
    /// KS distance of `X̄₁^ε(T)` to the arcsine terminal law.
    TerminalKs,
}

impl Statistic {
    pub const ALL: [Statistic; 7] = [
        Statistic::Selection,
        Statistic::Occupation,
        Statistic::SlidingSupError,
        Statistic::Confinement,
        Statistic::PreHittingSupError,
        Statistic::CoupledSupError,
        Statistic::TerminalKs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Selection => "selection",
            Statistic::Occupation => "occupation",
            Statistic::SlidingSupError => "sliding_sup_error",
            Statistic::Confinement => "confinement",
            Statistic::PreHittingSupError => "pre_hitting_sup_error",
            Statistic::CoupledSupError => "coupled_sup_error",
            Statistic::TerminalKs => "terminal_ks",
        }
    }

    /// Default statistic for a regime, if any.
    pub fn for_case(tag: CaseTag) -> Option<Statistic> {
        match tag {
            CaseTag::A1 => Some(Statistic::Selection),
            CaseTag::A2Plus | CaseTag::A2Minus => Some(Statistic::Occupation),
            CaseTag::A3 | CaseTag::A3Plus | CaseTag::A3Minus => Some(Statistic::Occupation),
            CaseTag::A4 => Some(Statistic::TerminalKs),
            CaseTag::Mixed => None,
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown statistic {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub estimator: Statistic,
    pub estimate: EstimateWithCI,
    pub predicted: Option<f64>,
    pub abs_gap: Option<f64>,
    pub no_exit_frac: Option<f64>,
    pub runtime_s: f64,
}

struct Clock(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Clock {
    fn start() -> Self {
        Clock(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.0.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

fn normals_at_start(s: &Scenario) -> Result<(f64, f64), McError> {
    let f = DriftField::from_scenario(s)?;
    let p = f.normal(Side::Plus, 0.0, &s.x0).map_err(crate::field::FieldError::from)?;
    let m = f.normal(Side::Minus, 0.0, &s.x0).map_err(crate::field::FieldError::from)?;
    Ok((p, m))
}

/// One row per ε of the scenario grid, in decreasing ε. Each ε uses its own
/// seed stream split from the master seed.
pub fn eps_sweep(
    s: &Scenario,
    stat: Statistic,
    n: usize,
    level: f64,
) -> Result<Vec<SweepRow>, McError> {
    if s.eps_grid.is_empty() {
        return Err(McError::Precondition("empty ε grid".into()));
    }
    if n == 0 {
        return Err(McError::Precondition("need at least one path".into()));
    }
    let predicted = match stat {
        Statistic::Selection => {
            let (p, m) = normals_at_start(s)?;
            selection_probabilities(p, m).ok().map(|law| law.p_plus)
        }
        Statistic::Occupation => {
            let (p, m) = normals_at_start(s)?;
            if p < 0.0 && m > 0.0 {
                Some(occupation_fraction(p, m)?)
            } else if p > 0.0 && m >= 0.0 {
                Some(1.0)
            } else if p <= 0.0 && m < 0.0 {
                Some(0.0)
            } else {
                None
            }
        }
        _ => Some(0.0),
    };
    let terminal = if stat == Statistic::TerminalKs {
        Some(
            predict_scenario(s, CaseTag::A4)?
                .terminal_law
                .ok_or_else(|| {
                    McError::Precondition(
                        "no closed-form terminal law: needs d = 2, constant drift, b̄⁺ ≠ b̄⁻".into(),
                    )
                })?,
        )
    } else {
        None
    };
    let mut order: Vec<usize> = (0..s.eps_grid.len()).collect();
    order.sort_by(|&a, &b| s.eps_grid[b].total_cmp(&s.eps_grid[a]));
    let mut rows = Vec::with_capacity(order.len());
    for idx in order {
        let clock = Clock::start();
        let mut no_exit_frac = None;
        let estimate = match stat {
            Statistic::Selection => {
                let e = estimate_selection(s, idx, n, s.delta, level)?;
                no_exit_frac = Some(e.no_exit_frac());
                e.ci
            }
            Statistic::Occupation => estimate_occupation(s, idx, n, s.t_end, level)?,
            Statistic::SlidingSupError => median_ci(&sliding_sup_errors(s, idx, n)?, level),
            Statistic::Confinement => median_ci(&confinement_samples(s, idx, n)?, level),
            Statistic::PreHittingSupError => median_ci(&pre_hitting_sup_errors(s, idx, n)?, level),
            Statistic::CoupledSupError => median_ci(&coupled_sup_errors(s, idx, n)?, level),
            Statistic::TerminalKs => {
                let law = terminal.expect("checked above");
                let samples = terminal_samples(s, idx, n, 0)?;
                let d = ks_distance(&samples, |x| law.cdf(x).unwrap_or(f64::NAN));
                EstimateWithCI {
                    point: d,
                    lo: d,
                    hi: d,
                    n,
                    stderr: 0.0,
                    level,
                }
            }
        };
        rows.push(SweepRow {
            eps: s.eps_grid[idx],
            estimator: stat,
            estimate,
            predicted,
            abs_gap: predicted.map(|p| (estimate.point - p).abs()),
            no_exit_frac,
            runtime_s: clock.seconds(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_scenario;

    #[test]
    fn symmetric_selection_sweep_covers_half() {
        let s = parse_scenario(
            "d = 1\nx0 = 0\nbplus = \"1\"\nbminus = \"-1\"\neps = 0.2, 0.1, 0.05\nseed = 9\n",
        )
        .unwrap();
        let rows = eps_sweep(&s, Statistic::Selection, 2000, 0.95).unwrap();
        let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        assert_eq!(eps, vec![0.2, 0.1, 0.05]);
        for r in &rows {
            assert!(r.estimate.covers(0.5), "{r:?}");
            assert_eq!(r.predicted, Some(0.5));
        }
    }

    #[test]
    fn statistic_names_round_trip() {
        for st in Statistic::ALL {
            assert_eq!(st.name().parse::<Statistic>().unwrap(), st);
        }
        assert!("nope".parse::<Statistic>().is_err());
    }
}
