//! Line-oriented scenario files.
//!
//! ```text
//! # A1, asymmetric
//! d      = 1
//! x0     = 0
//! bplus  = "2"
//! bminus = "-1"
//! eps    = 0.04, 0.02
//! ```
//!
//! Keys: `d`, `x0`, `bplus`, `bminus`, `T`, `delta`, `eps`, `dt_max`,
//! `n_paths`, `seed`, plus the optional metadata keys `name`, `theory`,
//! `expect_case`, `expect_p_plus` and `expect_occupation` used by self-checking
//! scenarios. `#` starts a comment outside of quotes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::expr::Expr;
use super::parser::{parse_expr, ParseError};
use crate::field::CaseTag;

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_DT_MAX: f64 = 1e-3;
pub const DEFAULT_N_PATHS: usize = 10_000;
pub const DEFAULT_T: f64 = 1.0;
pub const DEFAULT_EPS: [f64; 3] = [0.04, 0.02, 0.01];

pub const KEYS: [&str; 15] = [
    "d",
    "x0",
    "bplus",
    "bminus",
    "T",
    "delta",
    "eps",
    "dt_max",
    "n_paths",
    "seed",
    "name",
    "theory",
    "expect_case",
    "expect_p_plus",
    "expect_occupation",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("`{key}` has {found} entries but d = {expected}")]
    DimensionMismatch {
        key: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("`{key}` component {index}: {source}")]
    Expression {
        key: &'static str,
        index: usize,
        source: ParseError,
    },
}

fn invalid(key: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Whether a scenario sits inside the theory (Lipschitz half-space fields)
/// or is shipped for illustration only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Theory {
    #[default]
    Lipschitz,
    None,
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theory::Lipschitz => "lipschitz",
            Theory::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expectations {
    pub case: Option<CaseTag>,
    pub p_plus: Option<f64>,
    pub occupation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub d: usize,
    pub x0: Vec<f64>,
    pub bplus: Vec<Expr>,
    pub bminus: Vec<Expr>,
    pub t_end: f64,
    pub delta: f64,
    pub eps_grid: Vec<f64>,
    pub dt_max: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    pub theory: Theory,
    pub expect: Expectations,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    parse_scenario_with(text, &[])
}

/// Parse with `key = value` overrides applied on top of the file contents.
pub fn parse_scenario_with(
    text: &str,
    overrides: &[(String, String)],
) -> Result<Scenario, ScenarioError> {
    let mut raw = read_pairs(text)?;
    for (k, v) in overrides {
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(ScenarioError::UnknownKey(k.to_string()));
        }
        raw.insert(k.to_string(), v.trim().to_string());
    }
    Scenario::from_pairs(&raw)
}

fn read_pairs(text: &str) -> Result<BTreeMap<String, String>, ScenarioError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = strip_comment(line).trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ScenarioError::Malformed { line: lineno + 1 });
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(ScenarioError::Malformed { line: lineno + 1 });
        }
        if !KEYS.contains(&k) {
            return Err(ScenarioError::UnknownKey(k.to_string()));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(ScenarioError::DuplicateKey(k.to_string()));
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Split a comma-separated list, honouring double quotes.
fn split_list(key: &str, value: &str) -> Result<Vec<String>, ScenarioError> {
    let mut items = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in value.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                cur.push(c);
            }
            ',' if !quoted => items.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    if quoted {
        return Err(invalid(key, "unterminated quote"));
    }
    items.push(cur);
    let items: Vec<String> = items.into_iter().map(|s| s.trim().to_string()).collect();
    if items.iter().any(String::is_empty) {
        return Err(invalid(key, "empty list entry"));
    }
    Ok(items)
}

fn unquote<'a>(key: &str, item: &'a str) -> Result<&'a str, ScenarioError> {
    item.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .ok_or_else(|| invalid(key, format!("expected a quoted expression, got {item}")))
}

fn parse_num<T: FromStr>(key: &str, s: &str) -> Result<T, ScenarioError> {
    s.parse::<T>()
        .map_err(|_| invalid(key, format!("cannot parse `{s}`")))
}

fn parse_reals(key: &str, s: &str) -> Result<Vec<f64>, ScenarioError> {
    let v = split_list(key, s)?
        .iter()
        .map(|item| parse_num::<f64>(key, item))
        .collect::<Result<Vec<_>, _>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(key, "values must be finite"));
    }
    Ok(v)
}

fn parse_exprs(key: &'static str, s: &str, d: usize) -> Result<Vec<Expr>, ScenarioError> {
    let items = split_list(key, s)?;
    if items.len() != d {
        return Err(ScenarioError::DimensionMismatch {
            key,
            expected: d,
            found: items.len(),
        });
    }
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let e = parse_expr(unquote(key, item)?).map_err(|source| {
                ScenarioError::Expression {
                    key,
                    index: index + 1,
                    source,
                }
            })?;
            if e.max_var() > d {
                return Err(invalid(
                    key,
                    format!("component {} uses x{} but d = {d}", index + 1, e.max_var()),
                ));
            }
            Ok(e)
        })
        .collect()
}

impl Scenario {
    fn from_pairs(raw: &BTreeMap<String, String>) -> Result<Self, ScenarioError> {
        let get = |k: &str| raw.get(k).map(String::as_str);
        let require = |k: &'static str| get(k).ok_or(ScenarioError::MissingKey(k));

        let d: usize = parse_num("d", require("d")?)?;
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        let x0 = parse_reals("x0", require("x0")?)?;
        if x0.len() != d {
            return Err(ScenarioError::DimensionMismatch {
                key: "x0",
                expected: d,
                found: x0.len(),
            });
        }
        let bplus = parse_exprs("bplus", require("bplus")?, d)?;
        let bminus = parse_exprs("bminus", require("bminus")?, d)?;

        let t_end = match get("T") {
            Some(s) => parse_num("T", s)?,
            None => DEFAULT_T,
        };
        let delta = match get("delta") {
            Some(s) => parse_num("delta", s)?,
            None => DEFAULT_DELTA,
        };
        let dt_max = match get("dt_max") {
            Some(s) => parse_num("dt_max", s)?,
            None => DEFAULT_DT_MAX,
        };
        let eps_grid = match get("eps") {
            Some(s) => parse_reals("eps", s)?,
            None => DEFAULT_EPS.to_vec(),
        };
        let n_paths = match get("n_paths") {
            Some(s) => parse_num("n_paths", s)?,
            None => DEFAULT_N_PATHS,
        };
        let master_seed = match get("seed") {
            Some(s) => parse_num("seed", s)?,
            None => 0,
        };
        let theory = match get("theory") {
            None | Some("lipschitz") => Theory::Lipschitz,
            Some("none") => Theory::None,
            Some(other) => return Err(invalid("theory", format!("`{other}`"))),
        };
        let expect = Expectations {
            case: get("expect_case")
                .map(|s| s.parse::<CaseTag>().map_err(|e| invalid("expect_case", e)))
                .transpose()?,
            p_plus: get("expect_p_plus")
                .map(|s| parse_num("expect_p_plus", s))
                .transpose()?,
            occupation: get("expect_occupation")
                .map(|s| parse_num("expect_occupation", s))
                .transpose()?,
        };
        let name = get("name").unwrap_or("scenario").trim_matches('"').to_string();

        let s = Scenario {
            name,
            d,
            x0,
            bplus,
            bminus,
            t_end,
            delta,
            eps_grid,
            dt_max,
            n_paths,
            master_seed,
            theory,
            expect,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid("T", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", "must be positive"));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(invalid("dt_max", "must be positive"));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        if self.eps_grid.is_empty() {
            return Err(invalid("eps", "grid is empty"));
        }
        if self.eps_grid.iter().any(|&e| e <= 0.0) {
            return Err(invalid("eps", "values must be positive"));
        }
        if self.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps", "grid must be strictly decreasing"));
        }
        Ok(())
    }

    /// Smallest noise level of the grid.
    pub fn eps_min(&self) -> f64 {
        *self.eps_grid.last().expect("validated grid is nonempty")
    }

    pub fn on_hyperplane(&self) -> bool {
        self.x0[self.d - 1] == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "d = 1\nx0 = 0\nbplus = \"1\"\nbminus = \"-1\"\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.d, 1);
        assert_eq!(s.x0, vec![0.0]);
        assert_eq!(s.delta, 0.1);
        assert_eq!(s.dt_max, 1e-3);
        assert_eq!(s.n_paths, 10_000);
        assert_eq!(s.t_end, 1.0);
        assert_eq!(s.eps_grid, DEFAULT_EPS.to_vec());
        assert_eq!(s.theory, Theory::Lipschitz);
    }

    #[test]
    fn too_many_drift_components() {
        let text = "d = 2\nx0 = 0, 0\nbplus = \"1\", \"2\", \"3\"\nbminus = \"0\", \"0\"";
        assert_eq!(
            parse_scenario(text).unwrap_err(),
            ScenarioError::DimensionMismatch {
                key: "bplus",
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn full_file_with_comments_and_quoted_commas() {
        let text = r#"
            # sliding motion
            name = a3
            d = 2          # plane
            x0 = 0.25, 0
            bplus = "1", "-1"
            bminus = "max(x1, 0) * 0", "1"   # comma inside quotes
            T = 0.5
            delta = 0.2
            eps = 0.04, 0.02, 0.01
            dt_max = 5e-4
            n_paths = 200
            seed = 18446744073709551615
            expect_case = A3
            expect_occupation = 0.5
        "#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.name, "a3");
        assert_eq!(s.x0, vec![0.25, 0.0]);
        assert_eq!(s.bminus[0].eval(0.0, &[3.0, 0.0]).unwrap(), 0.0);
        assert_eq!(s.t_end, 0.5);
        assert_eq!(s.master_seed, u64::MAX);
        assert_eq!(s.expect.case, Some(CaseTag::A3));
        assert_eq!(s.expect.occupation, Some(0.5));
        assert!(s.on_hyperplane());
    }

    #[test]
    fn missing_and_invalid() {
        assert_eq!(
            parse_scenario("d = 1\nx0 = 0\nbplus = \"1\"").unwrap_err(),
            ScenarioError::MissingKey("bminus")
        );
        let bad = [
            format!("{MINIMAL}eps = 0.01, 0.02"),
            format!("{MINIMAL}delta = 0"),
            format!("{MINIMAL}T = -1"),
            format!("{MINIMAL}n_paths = 0"),
            format!("{MINIMAL}eps = 0.1, -0.1"),
            format!("{MINIMAL}seed = -3"),
        ];
        for text in &bad {
            assert!(
                matches!(parse_scenario(text), Err(ScenarioError::InvalidValue { .. })),
                "{text}"
            );
        }
        assert!(matches!(
            parse_scenario(&format!("{MINIMAL}colour = red")),
            Err(ScenarioError::UnknownKey(_))
        ));
        assert!(matches!(
            parse_scenario(&format!("{MINIMAL}d = 1")),
            Err(ScenarioError::DuplicateKey(_))
        ));
        assert!(matches!(
            parse_scenario("d = 1\nx0 = 0\nbplus = \"x2\"\nbminus = \"0\""),
            Err(ScenarioError::InvalidValue { .. })
        ));
        assert!(matches!(
            parse_scenario("d = 1\nx0 = 0\nbplus = \"x1 +\"\nbminus = \"0\""),
            Err(ScenarioError::Expression { .. })
        ));
        assert!(matches!(
            parse_scenario("d = 1\nx0 = 0\nbplus = 1\nbminus = \"0\""),
            Err(ScenarioError::InvalidValue { .. })
        ));
        assert!(matches!(
            parse_scenario("just some text"),
            Err(ScenarioError::Malformed { line: 1 })
        ));
    }

    #[test]
    fn overrides_replace_file_values() {
        let s = parse_scenario_with(
            MINIMAL,
            &[
                ("eps".into(), "0.05, 0.01".into()),
                ("n_paths".into(), "50".into()),
            ],
        )
        .unwrap();
        assert_eq!(s.eps_grid, vec![0.05, 0.01]);
        assert_eq!(s.n_paths, 50);
        assert!(matches!(
            parse_scenario_with(MINIMAL, &[("nope".into(), "1".into())]),
            Err(ScenarioError::UnknownKey(_))
        ));
    }

    #[test]
    fn reals_use_standard_decimal_parsing() {
        let s = parse_scenario(&format!("{MINIMAL}delta = 0.1000000000000000055511151231257827"))
            .unwrap();
        assert_eq!(s.delta.to_bits(), 0.1f64.to_bits());
    }
}
