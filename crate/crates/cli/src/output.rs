//! File emission: CSV tables, JSON reports, optional SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::svg::{line_plot, Series};

pub const REDUCED: &str = "reduced";
pub const PROBABILITY: &str = "probability";

/// Header cell `name [unit]`.
pub fn col(name: &str, unit: &str) -> String {
    format!("{name} [{unit}]")
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Writer {
    pub dir: PathBuf,
    pub svg: bool,
    written: Vec<PathBuf>,
}

/// A JSON report with the producing configuration alongside.
#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    #[serde(flatten)]
    body: &'a R,
    config: &'a RunConfig,
}

impl Writer {
    pub fn new(dir: &Path, svg: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            svg,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, headers: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(headers)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    /// CSV of numeric columns; the plot (when enabled) draws every column
    /// after the first against the first.
    pub fn numeric_csv(&mut self, name: &str, title: &str, headers: &[String], columns: &[&[f64]]) -> Result<(), CliError> {
        let n = columns.first().map_or(0, |c| c.len());
        let rows: Vec<Vec<String>> = (0..n).map(|i| columns.iter().map(|c| num(c[i])).collect()).collect();
        self.csv(name, headers, &rows)?;
        if columns.len() > 1 {
            let series: Vec<Series> = headers[1..]
                .iter()
                .zip(&columns[1..])
                .map(|(h, c)| Series { name: h, values: c })
                .collect();
            self.plot(name, title, &headers[0], columns[0], &series)?;
        }
        Ok(())
    }

    /// SVG next to `csv_name`, if plotting is enabled.
    pub fn plot(&mut self, csv_name: &str, title: &str, x_label: &str, x: &[f64], series: &[Series<'_>]) -> Result<(), CliError> {
        if !self.svg {
            return Ok(());
        }
        let path = self.path(&csv_name.replace(".csv", ".svg"));
        fs::write(&path, line_plot(title, x_label, x, series))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<R: Serialize>(&mut self, name: &str, body: &R, config: &RunConfig) -> Result<(), CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&Report { body, config })?;
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }
}
