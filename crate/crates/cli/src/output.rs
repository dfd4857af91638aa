use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Plot-ready table; floats carry 17 significant digits.
pub struct Series {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Int(usize),
    Float(f64),
}

impl Series {
    pub fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Series {
            name,
            header,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (k, c) in row.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Int(n) => write!(s, "{n}").unwrap(),
                    Cell::Float(x) => write!(s, "{x:.16e}").unwrap(),
                }
            }
            s.push('\n');
        }
        s
    }
}

pub struct Artifacts {
    pub report: Value,
    pub series: Vec<Series>,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    config: String,
    version: &'static str,
    threads: usize,
    started_unix: f64,
    wall_seconds: f64,
    exit_code: i32,
}

pub fn write_artifacts(out: &Path, artifacts: &Artifacts) -> Result<()> {
    let series_dir = out.join("series");
    std::fs::create_dir_all(&series_dir).with_context(|| format!("cannot create {}", series_dir.display()))?;
    write(&out.join("report.json"), &(serde_json::to_string_pretty(&artifacts.report)? + "\n"))?;
    for s in &artifacts.series {
        write(&series_dir.join(format!("{}.csv", s.name)), &s.to_csv())?;
    }
    Ok(())
}

/// Timing and environment go here so that `report.json` stays reproducible.
pub fn write_meta(
    out: &Path,
    command: &str,
    config: &Path,
    started: SystemTime,
    wall: Duration,
    exit_code: i32,
) -> Result<()> {
    let meta = RunMeta {
        command,
        config: config.display().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        started_unix: started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
        wall_seconds: wall.as_secs_f64(),
        exit_code,
    };
    write(&out.join("run_meta.json"), &(serde_json::to_string_pretty(&meta)? + "\n"))
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut s = Series::new("residual", &["iteration", "residual"]);
        s.rows.push(vec![Cell::Int(0), Cell::Float(0.1)]);
        s.rows.push(vec![Cell::Int(1), Cell::Float(1.0 / 3.0)]);
        assert_eq!(
            s.to_csv(),
            "iteration,residual\n0,1.0000000000000001e-1\n1,3.3333333333333331e-1\n"
        );
        // 17 significant digits round-trip exactly
        let back: f64 = "3.3333333333333331e-1".parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }
}
