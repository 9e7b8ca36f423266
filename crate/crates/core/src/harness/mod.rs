//! Experiment configuration, seeded sweeps, slope fitting and CSV output.

mod config;
mod fit;
mod run;

pub use config::{
    parse_pairs, parse_seeds, parse_sizes, AttenuationRule, CountRule, ExperimentConfig, LambdaRule, Mode, SEEDS_ENV,
};
pub use fit::fit_slope;
pub use run::{run, SlopeFit, SweepResult, Value};

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Writes the header and every row. Any non-finite float is an error.
pub fn write_rows<W: Write>(out: W, res: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&res.header)?;
    for (k, row) in res.rows.iter().enumerate() {
        if let Some((c, _)) = row
            .iter()
            .enumerate()
            .find(|(_, v)| matches!(v, Value::Float(x) if !x.is_finite()))
        {
            return Err(Error::data(format!("row {k}, column `{}` is not finite", res.header[c])));
        }
        w.write_record(row.iter().map(ToString::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `group,metric,slope,stderr,points` rows.
pub fn write_slopes<W: Write>(out: W, res: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "metric", "slope", "stderr", "points"])?;
    for s in &res.slopes {
        if !(s.slope.is_finite() && s.stderr.is_finite()) {
            return Err(Error::data(format!("slope of {} for {} is not finite", s.metric, s.group)));
        }
        w.write_record([
            s.group.clone(),
            s.metric.clone(),
            s.slope.to_string(),
            s.stderr.to_string(),
            s.points.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` becomes `results.slopes.csv`.
pub fn slopes_path(out: &Path) -> PathBuf {
    out.with_extension("slopes.csv")
}

/// Renders rows into memory first so that a failure leaves no file behind,
/// then writes `out` and, when slopes were fitted, its slopes sidecar.
pub fn write_outputs(out: &Path, res: &SweepResult) -> Result<()> {
    let mut rows = Vec::new();
    write_rows(&mut rows, res)?;
    let mut slopes = Vec::new();
    write_slopes(&mut slopes, res)?;
    std::fs::write(out, rows)?;
    if !res.slopes.is_empty() {
        std::fs::write(slopes_path(out), slopes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_values_are_rejected() {
        let res = SweepResult {
            mode: Mode::Bounds,
            header: vec!["a", "b"],
            rows: vec![vec![Value::Int(1), Value::Float(f64::NAN)]],
            failed: 0,
            slopes: Vec::new(),
            tight: None,
        };
        let mut buf = Vec::new();
        assert!(matches!(write_rows(&mut buf, &res), Err(Error::Data(_))));
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let res = SweepResult {
            mode: Mode::Bounds,
            header: vec!["n", "x", "tag", "maybe"],
            rows: vec![vec![Value::Int(4), Value::Float(0.1), Value::Text("o&h".into()), Value::Empty]],
            failed: 0,
            slopes: Vec::new(),
            tight: None,
        };
        let mut buf = Vec::new();
        write_rows(&mut buf, &res).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,x,tag,maybe\n4,0.1,o&h,\n");
        assert_eq!(slopes_path(Path::new("/tmp/r.csv")), PathBuf::from("/tmp/r.slopes.csv"));
    }
}
