//! Serialization of command results: JSON with 17 significant digits per
//! float, CSV with 10.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use znl::integrate::{sig10, Path};
use znl::montecarlo::{SweepRow, SWEEP_CSV_HEADER};

/// Compact JSON with every float in `{:.16e}` form.
struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", f64::from(v))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value
        .serialize(&mut ser)
        .expect("serializing plain data into memory cannot fail");
    let mut s = String::from_utf8(buf).expect("serde_json writes UTF-8");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(sig10).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let e = &r.estimate;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            sig10(r.eps),
            r.estimator,
            sig10(e.point),
            sig10(e.lo),
            sig10(e.hi),
            e.n,
            opt(r.predicted),
            opt(r.abs_gap),
            opt(r.no_exit_frac),
            sig10(r.runtime_s),
        ));
    }
    out
}

/// Long-format CSV of several paths: `eps,path,t,x1..xd`.
pub fn paths_csv(dim: usize, paths: &[(f64, usize, Path)]) -> String {
    let mut out = String::from("eps,path,t");
    for i in 1..=dim {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (eps, idx, p) in paths {
        let eps = sig10(*eps);
        for (k, &t) in p.times().iter().enumerate() {
            out.push_str(&format!("{eps},{idx},{}", sig10(t)));
            for v in p.state(k) {
                out.push(',');
                out.push_str(&sig10(*v));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use znl::montecarlo::{EstimateWithCI, Statistic};

    fn row() -> SweepRow {
        SweepRow {
            eps: 0.02,
            estimator: Statistic::Selection,
            estimate: EstimateWithCI {
                point: 0.5,
                lo: 0.49,
                hi: 0.51,
                n: 100,
                stderr: 0.005,
                level: 0.95,
            },
            predicted: Some(0.5),
            abs_gap: Some(0.0),
            no_exit_frac: None,
            runtime_s: 1.25,
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        assert_eq!(sweep_csv(&[]), format!("{SWEEP_CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_sweep_has_two_lines() {
        let csv = sweep_csv(&[row()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "2.000000000e-2,selection,5.000000000e-1,4.900000000e-1,5.100000000e-1,100,\
             5.000000000e-1,0.000000000e0,,1.250000000e0"
        );
        assert_eq!(csv, sweep_csv(&[row()]));
    }

    #[test]
    fn json_floats_carry_seventeen_digits() {
        let s = to_json(&(2.0f64 / 3.0, f64::NAN, 1u32));
        assert_eq!(s, "[6.6666666666666663e-1,null,1]\n");
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Some(2.0 / 3.0));
    }
}
