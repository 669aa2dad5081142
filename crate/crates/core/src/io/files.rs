use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{PPData, SweepRow};
use crate::error::{Error, Result};
use crate::mcmc::ChainTrace;
use crate::simulate::ObservationSet;

/// A cleaned series together with the 1-based data rows that were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSeries {
    pub obs: ObservationSet,
    pub dropped_rows: Vec<usize>,
}

impl LoadedSeries {
    pub fn warning(&self) -> Option<String> {
        if self.dropped_rows.is_empty() {
            return None;
        }
        let rows: Vec<String> = self.dropped_rows.iter().map(|r| r.to_string()).collect();
        Some(format!(
            "dropped {} missing row(s) [{}]; the remaining {} values are treated as contiguous on h = T/N",
            rows.len(),
            rows.join(", "),
            self.obs.values.len()
        ))
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na")
}

/// Read `column` of a headed CSV file as observations on `[0, T]`.
/// Empty and `NA` cells are dropped and the rest is closed up.
pub fn load_csv(path: &Path, column: &str, t: f64) -> Result<LoadedSeries> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = headers.iter().position(|h| h.trim() == column).ok_or_else(|| {
        Error::Data(format!(
            "{}: no column `{column}` (found: {})",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })?;
    let mut values = Vec::new();
    let mut dropped_rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let cell = rec.get(col).unwrap_or("");
        if is_missing(cell) {
            dropped_rows.push(row);
            continue;
        }
        let v: f64 = cell.trim().parse().map_err(|_| {
            Error::Data(format!("{}: row {row}, column {} (`{column}`): cannot parse `{cell}`", path.display(), col + 1))
        })?;
        if !v.is_finite() {
            return Err(Error::Data(format!("{}: row {row}, column {}: non-finite value", path.display(), col + 1)));
        }
        values.push(v);
    }
    if values.len() < 2 {
        return Err(Error::Data(format!(
            "{}: {} clean row(s) in `{column}`, need at least 2",
            path.display(),
            values.len()
        )));
    }
    Ok(LoadedSeries { obs: ObservationSet::new(values, t)?, dropped_rows })
}

/// `t,x` rows with `t = n h`.
pub fn write_observations(obs: &ObservationSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x"])?;
    for (i, x) in obs.values.iter().enumerate() {
        w.write_record([fmt(i as f64 * obs.h), fmt(*x)])?;
    }
    w.flush()?;
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// Chain draws as read back from a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub param_names: Vec<String>,
    pub thetas: Vec<Vec<f64>>,
    /// One flag per transition; the initial row carries none.
    pub accept_flags: Vec<bool>,
}

/// Header `iter,<names>,accepted`, one row per state. Row 0 is the
/// initial value and leaves `accepted` empty.
pub fn write_trace(trace: &ChainTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["iter".to_string()];
    header.extend(trace.param_names.iter().cloned());
    header.push("accepted".into());
    w.write_record(&header)?;
    for (m, row) in trace.thetas.iter().enumerate() {
        let mut rec = vec![m.to_string()];
        rec.extend(row.iter().map(|v| fmt(*v)));
        rec.push(match m {
            0 => String::new(),
            _ => u8::from(trace.accept_flags[m - 1]).to_string(),
        });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<TraceTable> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let k = headers.len();
    if k < 3 || &headers[0] != "iter" || &headers[k - 1] != "accepted" {
        return Err(Error::Data(format!("{}: not a trace file", path.display())));
    }
    let param_names: Vec<String> = headers.iter().skip(1).take(k - 2).map(String::from).collect();
    let mut thetas = Vec::new();
    let mut accept_flags = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |c: usize| Error::Data(format!("{}: row {row}, column {}: cannot parse `{}`", path.display(), c + 1, &rec[c]));
        let theta = (1..k - 1).map(|c| rec[c].parse::<f64>().map_err(|_| bad(c))).collect::<Result<Vec<_>>>()?;
        thetas.push(theta);
        match &rec[k - 1] {
            "" if i == 0 => {}
            "0" if i > 0 => accept_flags.push(false),
            "1" if i > 0 => accept_flags.push(true),
            _ => return Err(bad(k - 1)),
        }
    }
    Ok(TraceTable { param_names, thetas, accept_flags })
}

/// `N,mean_rate,sd_rate` rows.
pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["N", "mean_rate", "sd_rate"])?;
    for r in rows {
        w.write_record([r.n.to_string(), fmt(r.mean_rate), fmt(r.sd_rate)])?;
    }
    w.flush()?;
    Ok(())
}

/// `empirical_level,model_level` rows of a p-p plot.
pub fn write_pp(pp: &PPData, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["empirical_level", "model_level"])?;
    for (a, b) in &pp.points {
        w.write_record([fmt(*a), fmt(*b)])?;
    }
    w.flush()?;
    Ok(())
}

/// The `fit` summary. Field names are a stable schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub acceptance_rate: f64,
    pub posterior_mean: Vec<f64>,
    pub posterior_sd: Vec<f64>,
    pub mle: Option<Vec<f64>>,
    pub beta: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub h: f64,
    pub seed: u64,
    pub param_names: Vec<String>,
    pub variant: crate::mcmc::Variant,
    pub iterations: usize,
    pub burn_in: usize,
    /// Posterior mean of `(1/N) Σ a(X_{(n−1)h}, α)`.
    pub drift_average: f64,
    /// Posterior mean of `(1/N) Σ c(X_{(n−1)h}, γ)`.
    pub scale_average: f64,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::MCMCConfig;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn missing_rows_are_dropped_and_listed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x\n1.0\nNA\n2.0\n");
        let s = load_csv(&p, "x", 2.0).unwrap();
        assert_eq!(s.obs.values, vec![1.0, 2.0]);
        assert_eq!(s.obs.n, 1);
        assert_eq!(s.obs.h, 2.0);
        assert_eq!(s.dropped_rows, vec![2]);
        assert!(s.warning().unwrap().contains("[2]"));
    }

    #[test]
    fn named_column_is_selected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "b.csv", "t,price\n0,10.5\n1,,\n2,11.25\n3,11\n");
        let s = load_csv(&p, "price", 3.0).unwrap();
        assert_eq!(s.obs.values, vec![10.5, 11.25, 11.0]);
        assert_eq!(s.dropped_rows, vec![2]);
    }

    #[test]
    fn all_missing_or_garbage_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "x\nNA\nNA\n");
        assert!(matches!(load_csv(&p, "x", 1.0), Err(Error::Data(_))));
        let p = write(&dir, "d.csv", "a,x\n1,2\n2,abc\n");
        let msg = load_csv(&p, "x", 1.0).unwrap_err().to_string();
        assert!(msg.contains("row 2") && msg.contains("column 2"), "{msg}");
        assert!(load_csv(&p, "y", 1.0).is_err());
    }

    fn small_trace() -> ChainTrace {
        ChainTrace {
            param_names: vec!["a".into(), "b".into(), "g".into()],
            thetas: vec![vec![0.1, -2.0 / 3.0, 1e-300], vec![std::f64::consts::PI, 5e20, -0.0]],
            accept_flags: vec![true],
            acceptance_rate: 1.0,
            seed: 0,
            config: MCMCConfig::new(2, 3, 0),
            drift_average: vec![0.0; 2],
            scale_average: vec![1.0; 2],
            residual_means: vec![],
            variances: None,
        }
    }

    #[test]
    fn trace_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        let tr = small_trace();
        write_trace(&tr, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("iter,a,b,g,accepted\n"));
        let back = read_trace(&p).unwrap();
        assert_eq!(back.thetas, tr.thetas);
        assert_eq!(back.accept_flags, tr.accept_flags);
        assert_eq!(back.param_names, tr.param_names);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let e = write_trace(&small_trace(), Path::new("/nonexistent-dir/x/trace.csv")).unwrap_err();
        assert!(!e.is_numerical());
    }
}
