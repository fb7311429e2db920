//! Sampled sign certificates for the regimes at a point of the hyperplane.
//!
//! | tag  | upper half (`b_d⁺`) | lower half (`b_d⁻`) | on `H`             |
//! |------|---------------------|---------------------|--------------------|
//! | A1   | `≥ c`               | `≤ −c`              |                    |
//! | A2+  | `≥ c`               |                     | `b_d⁻ ≥ 0`         |
//! | A2−  |                     | `≤ −c`              | `b_d⁺ ≤ 0`         |
//! | A3   | `≤ −c`              | `≥ c`               |                    |
//! | A3+  | `≤ −c`              |                     | `b_d⁻ = 0`         |
//! | A3−  |                     | `≥ c`               | `b_d⁺ = 0`         |
//! | A4   |                     |                     | `b_d⁺ = b_d⁻ = 0`  |
//!
//! Half-space probes are taken in the closed half-balls `|x − x⁰| ≤ δ`, so the
//! hyperplane probes also enter the strict inequalities (the limit of a
//! Lipschitz `b±` at `H`). Equalities on `H` are checked as `|·| ≤ c_tol`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{DriftField, FieldError, Side};

pub const DEFAULT_C_TOL: f64 = 1e-9;

/// Evidence entries kept per label.
const MAX_EVIDENCE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseTag {
    A1,
    #[serde(rename = "A2+")]
    A2Plus,
    #[serde(rename = "A2-")]
    A2Minus,
    A3,
    #[serde(rename = "A3+")]
    A3Plus,
    #[serde(rename = "A3-")]
    A3Minus,
    A4,
    Mixed,
}

impl CaseTag {
    /// Tie-break order among simultaneously satisfied conditions.
    pub const PRIORITY: [CaseTag; 7] = [
        CaseTag::A1,
        CaseTag::A3,
        CaseTag::A2Plus,
        CaseTag::A2Minus,
        CaseTag::A3Plus,
        CaseTag::A3Minus,
        CaseTag::A4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::A1 => "A1",
            CaseTag::A2Plus => "A2+",
            CaseTag::A2Minus => "A2-",
            CaseTag::A3 => "A3",
            CaseTag::A3Plus => "A3+",
            CaseTag::A3Minus => "A3-",
            CaseTag::A4 => "A4",
            CaseTag::Mixed => "Mixed",
        }
    }

    /// Attracting regimes where the limit slides along `H`.
    pub fn is_sliding(self) -> bool {
        matches!(self, CaseTag::A3 | CaseTag::A3Plus | CaseTag::A3Minus)
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_matches('"');
        Ok(match s {
            "A1" => CaseTag::A1,
            "A2+" | "A2plus" => CaseTag::A2Plus,
            "A2-" | "A2minus" => CaseTag::A2Minus,
            "A3" => CaseTag::A3,
            "A3+" | "A3plus" => CaseTag::A3Plus,
            "A3-" | "A3minus" => CaseTag::A3Minus,
            "A4" => CaseTag::A4,
            "Mixed" => CaseTag::Mixed,
            _ => return Err(format!("unknown case `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Upper,
    Lower,
    Plane,
}

/// Probe layout: `n_times` times in `[0, T]`, crossed with `n_half`
/// quasi-random points in each closed half-ball and `n_plane` points on `H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeGrid {
    pub n_times: usize,
    pub n_half: usize,
    pub n_plane: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid {
            n_times: 8,
            n_half: 128,
            n_plane: 32,
        }
    }
}

impl ProbeGrid {
    pub fn len(&self) -> usize {
        self.n_times * (2 * self.n_half + self.n_plane)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One checked inequality at one probe point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub condition: String,
    pub region: Region,
    pub t: f64,
    pub x: Vec<f64>,
    /// Value of the defining quantity (e.g. `sgn(x_d)·b_d` for A1).
    pub value: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseLabel {
    pub tag: CaseTag,
    /// Certified margin `c`; zero for A4, which has none.
    pub margin: f64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub n_probes: usize,
    /// For `Mixed`: the condition that came closest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nearest: Option<CaseTag>,
    /// Failing probes of the nearest condition; empty unless `Mixed`.
    pub violations: Vec<ProbeRecord>,
    /// The probe attaining the extreme value of each constraint.
    pub evidence: Vec<ProbeRecord>,
}

struct Probe {
    region: Region,
    t: f64,
    x: Vec<f64>,
    bd_plus: f64,
    bd_minus: f64,
}

/// One constraint: a quantity that must be `≥ threshold` on a region set.
struct Constraint {
    regions: &'static [Region],
    side: Side,
    /// Multiplies `b_d^side` to form the quantity.
    factor: f64,
    /// `true` for `|b_d| ≤ c_tol` constraints (no margin contribution).
    equality: bool,
    /// `b_d ≥ 0` / `b_d ≤ 0` style constraints (no margin contribution).
    nonstrict: bool,
}

const HALF_UP: &[Region] = &[Region::Upper, Region::Plane];
const HALF_DOWN: &[Region] = &[Region::Lower, Region::Plane];
const PLANE: &[Region] = &[Region::Plane];

fn strict(regions: &'static [Region], side: Side, factor: f64) -> Constraint {
    Constraint {
        regions,
        side,
        factor,
        equality: false,
        nonstrict: false,
    }
}

fn nonneg(side: Side, factor: f64) -> Constraint {
    Constraint {
        regions: PLANE,
        side,
        factor,
        equality: false,
        nonstrict: true,
    }
}

fn zero(side: Side) -> Constraint {
    Constraint {
        regions: PLANE,
        side,
        factor: 1.0,
        equality: true,
        nonstrict: false,
    }
}

fn constraints(tag: CaseTag) -> Vec<Constraint> {
    use Side::{Minus, Plus};
    match tag {
        CaseTag::A1 => vec![strict(HALF_UP, Plus, 1.0), strict(HALF_DOWN, Minus, -1.0)],
        CaseTag::A2Plus => vec![strict(HALF_UP, Plus, 1.0), nonneg(Minus, 1.0)],
        CaseTag::A2Minus => vec![strict(HALF_DOWN, Minus, -1.0), nonneg(Plus, -1.0)],
        CaseTag::A3 => vec![strict(HALF_UP, Plus, -1.0), strict(HALF_DOWN, Minus, 1.0)],
        CaseTag::A3Plus => vec![strict(HALF_UP, Plus, -1.0), zero(Minus)],
        // Lower half-space, the mirror image of A3+.
        CaseTag::A3Minus => vec![strict(HALF_DOWN, Minus, 1.0), zero(Plus)],
        CaseTag::A4 => vec![zero(Plus), zero(Minus)],
        CaseTag::Mixed => vec![],
    }
}

struct Assessment {
    tag: CaseTag,
    holds: bool,
    margin: f64,
    /// Total amount by which the constraints are missed.
    shortfall: f64,
    binding: Vec<ProbeRecord>,
    failing: Vec<ProbeRecord>,
}

fn assess(tag: CaseTag, probes: &[Probe], c_tol: f64) -> Assessment {
    let mut margin = f64::INFINITY;
    let mut has_strict = false;
    let mut shortfall = 0.0;
    let mut failing = Vec::new();
    let mut binding = Vec::new();
    for c in constraints(tag) {
        let mut worst: Option<(f64, usize)> = None;
        for (i, p) in probes.iter().enumerate() {
            if !c.regions.contains(&p.region) {
                continue;
            }
            let bd = match c.side {
                Side::Plus => p.bd_plus,
                Side::Minus => p.bd_minus,
            };
            let (value, ok, miss) = if c.equality {
                (bd, bd.abs() <= c_tol, (bd.abs() - c_tol).max(0.0))
            } else if c.nonstrict {
                let q = c.factor * bd;
                (q, q >= -c_tol, (-c_tol - q).max(0.0))
            } else {
                let q = c.factor * bd;
                (q, q > c_tol, (c_tol - q).max(0.0))
            };
            let key = if c.equality { -bd.abs() } else { value };
            if worst.is_none_or(|(w, _)| key < w) {
                worst = Some((key, i));
            }
            if !ok {
                shortfall += miss;
                if failing.len() < MAX_EVIDENCE {
                    failing.push(record(tag, p, value, false));
                }
            }
        }
        if let Some((w, i)) = worst {
            let p = &probes[i];
            let bd = match c.side {
                Side::Plus => p.bd_plus,
                Side::Minus => p.bd_minus,
            };
            let value = if c.equality { bd } else { c.factor * bd };
            binding.push(record(tag, p, value, true));
            if !c.equality && !c.nonstrict {
                has_strict = true;
                margin = margin.min(w);
            }
        }
    }
    if !has_strict {
        margin = 0.0;
    }
    Assessment {
        tag,
        holds: failing.is_empty() && shortfall == 0.0,
        margin,
        shortfall,
        binding,
        failing,
    }
}

fn record(tag: CaseTag, p: &Probe, value: f64, satisfied: bool) -> ProbeRecord {
    ProbeRecord {
        condition: tag.as_str().to_string(),
        region: p.region,
        t: p.t,
        x: p.x.clone(),
        value,
        satisfied,
    }
}

/// Radical inverse in base `b` (van der Corput).
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Halton points in a half-ball (`dir = ±1`) or on `H` (`dir = 0`).
fn half_ball_points(x0: &[f64], delta: f64, dir: f64, count: usize) -> Vec<Vec<f64>> {
    let d = x0.len();
    let free = if dir == 0.0 { d - 1 } else { d };
    if free == 0 {
        let mut p = x0.to_vec();
        p[d - 1] = 0.0;
        return vec![p; count];
    }
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    // Acceptance rate of a ball in its cube shrinks with d; cap the attempts.
    let max_attempts = 10_000 * count as u64;
    while out.len() < count && i < max_attempts {
        let u: Vec<f64> = (0..free)
            .map(|k| radical_inverse(i, PRIMES[k % PRIMES.len()]))
            .collect();
        i += 1;
        let mut x = x0.to_vec();
        for k in 0..d - 1 {
            x[k] = x0[k] + delta * (2.0 * u[k] - 1.0);
        }
        x[d - 1] = if dir == 0.0 { 0.0 } else { dir * delta * u[d - 1] };
        if super::norm_diff(&x, x0) <= delta {
            out.push(x);
        }
    }
    out
}

/// Classify the regime at `x0 ∈ H` from sampled probes.
///
/// Returns the satisfied condition with the largest certified margin (ties
/// broken by [`CaseTag::PRIORITY`]), or `Mixed` carrying the nearest
/// condition and its failing probes.
pub fn classify_case(
    field: &DriftField,
    x0: &[f64],
    t_end: f64,
    delta: f64,
    grid: &ProbeGrid,
    c_tol: f64,
) -> Result<CaseLabel, FieldError> {
    let d = field.dim();
    if x0.len() != d {
        return Err(FieldError::InvalidArgument(format!(
            "x0 has {} components, field has {d}",
            x0.len()
        )));
    }
    if x0[d - 1] != 0.0 {
        return Err(FieldError::InvalidArgument(
            "classification needs x0 on the hyperplane x_d = 0".into(),
        ));
    }
    if !(delta > 0.0) || !(t_end > 0.0) {
        return Err(FieldError::InvalidArgument(
            "delta and T must be positive".into(),
        ));
    }
    if grid.n_times == 0 || grid.n_half == 0 || grid.n_plane == 0 {
        return Err(FieldError::InvalidArgument("empty probe grid".into()));
    }

    let upper = half_ball_points(x0, delta, 1.0, grid.n_half);
    let lower = half_ball_points(x0, delta, -1.0, grid.n_half);
    let plane = half_ball_points(x0, delta, 0.0, grid.n_plane);
    let times: Vec<f64> = if grid.n_times == 1 {
        vec![0.0]
    } else {
        (0..grid.n_times)
            .map(|k| t_end * k as f64 / (grid.n_times - 1) as f64)
            .collect()
    };

    let mut probes = Vec::with_capacity(grid.len());
    for &t in &times {
        for (region, pts) in [
            (Region::Upper, &upper),
            (Region::Lower, &lower),
            (Region::Plane, &plane),
        ] {
            for x in pts {
                // Each half formula is read only on the closure of its own
                // half-space, where it has to be defined.
                let bd_plus = match region {
                    Region::Lower => f64::NAN,
                    _ => field.normal(Side::Plus, t, x)?,
                };
                let bd_minus = match region {
                    Region::Upper => f64::NAN,
                    _ => field.normal(Side::Minus, t, x)?,
                };
                probes.push(Probe {
                    region,
                    t,
                    x: x.clone(),
                    bd_plus,
                    bd_minus,
                });
            }
        }
    }

    let assessments: Vec<Assessment> = CaseTag::PRIORITY
        .iter()
        .map(|&tag| assess(tag, &probes, c_tol))
        .collect();

    let mut best: Option<&Assessment> = None;
    for a in assessments.iter().filter(|a| a.holds) {
        if best.is_none_or(|b| a.margin > b.margin) {
            best = Some(a);
        }
    }
    let n_probes = probes.len();
    Ok(match best {
        Some(a) => CaseLabel {
            tag: a.tag,
            margin: a.margin,
            delta,
            t_end,
            n_probes,
            nearest: None,
            violations: Vec::new(),
            evidence: a.binding.clone(),
        },
        None => {
            let nearest = assessments
                .iter()
                .min_by(|a, b| a.shortfall.total_cmp(&b.shortfall))
                .expect("priority list is nonempty");
            CaseLabel {
                tag: CaseTag::Mixed,
                margin: nearest.margin,
                delta,
                t_end,
                n_probes,
                nearest: Some(nearest.tag),
                violations: nearest.failing.clone(),
                evidence: nearest.binding.clone(),
            }
        }
    })
}
