//! Tab-separated result tables: disorder summaries, raw per-realization records and timings.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Summary;

pub const ARTIFACT_VERSION: &str = concat!("syk-teleport/", env!("CARGO_PKG_VERSION"));

/// Columns after the scan coordinates in a summary table.
pub const SUMMARY_COLUMNS: [&str; 8] = ["observable", "mean", "sigma_dis", "stderr", "n_avg", "seeds", "config_hash", "version"];

/// Columns after the scan coordinates in a raw-record table.
pub const RECORD_COLUMNS: [&str; 4] = ["seed", "observable", "value", "config_hash"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub coords: Vec<f64>,
    pub observable: String,
    pub mean: f64,
    pub sigma: f64,
    pub stderr: f64,
    pub n_avg: usize,
    pub seeds: Vec<u64>,
}

impl SummaryRow {
    pub fn new(coords: Vec<f64>, observable: impl Into<String>, s: Summary, seeds: &[u64]) -> Self {
        Self { coords, observable: observable.into(), mean: s.mean, sigma: s.sigma, stderr: s.stderr, n_avg: s.n, seeds: seeds.to_vec() }
    }
}

/// One observable value for one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub coords: Vec<f64>,
    pub seed: u64,
    pub observable: String,
    pub value: f64,
}

/// Results of one experiment run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub experiment: String,
    pub coord_names: Vec<String>,
    pub config_hash: String,
    pub version: String,
    pub rows: Vec<SummaryRow>,
    pub records: Vec<RunRecord>,
    /// Wall-clock seconds per phase; kept out of the deterministic tables.
    pub timings: Vec<(String, f64)>,
}

impl ResultTable {
    pub fn new(experiment: &str, coord_names: &[&str], config_hash: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            coord_names: coord_names.iter().map(|s| s.to_string()).collect(),
            config_hash: config_hash.to_string(),
            version: ARTIFACT_VERSION.to_string(),
            rows: vec![],
            records: vec![],
            timings: vec![],
        }
    }

    /// Adds the summary of `values` (one per seed) and the matching raw records.
    pub fn push(&mut self, coords: &[f64], observable: &str, seeds: &[u64], values: &[f64]) {
        assert_eq!(coords.len(), self.coord_names.len(), "coordinate arity");
        assert_eq!(seeds.len(), values.len(), "one value per seed");
        self.rows.push(SummaryRow::new(coords.to_vec(), observable, Summary::of(values), seeds));
        for (&seed, &value) in seeds.iter().zip(values) {
            self.records.push(RunRecord { coords: coords.to_vec(), seed, observable: observable.to_string(), value });
        }
    }

    /// Adds a derived row whose uncertainty is not a plain sample statistic.
    pub fn push_derived(&mut self, coords: &[f64], observable: &str, seeds: &[u64], mean: f64, stderr: f64) {
        assert_eq!(coords.len(), self.coord_names.len(), "coordinate arity");
        let n = seeds.len();
        let s = Summary { mean, sigma: stderr * (n as f64).sqrt(), stderr, n };
        self.rows.push(SummaryRow::new(coords.to_vec(), observable, s, seeds));
    }

    pub fn rows_for<'a>(&'a self, observable: &'a str) -> impl Iterator<Item = &'a SummaryRow> + 'a {
        self.rows.iter().filter(move |r| r.observable == observable)
    }

    /// The row for `observable` whose coordinates equal `coords` (NaN matches NaN).
    pub fn get<'a>(&'a self, observable: &'a str, coords: &[f64]) -> Option<&'a SummaryRow> {
        self.rows_for(observable).find(|r| coords_match(&r.coords, coords))
    }

    pub fn values_for(&self, observable: &str, coords: &[f64]) -> Vec<(u64, f64)> {
        self.records
            .iter()
            .filter(|r| r.observable == observable && coords_match(&r.coords, coords))
            .map(|r| (r.seed, r.value))
            .collect()
    }

    pub fn summary_path(dir: &Path, experiment: &str) -> PathBuf {
        dir.join(format!("{experiment}.summary.tsv"))
    }

    pub fn records_path(dir: &Path, experiment: &str) -> PathBuf {
        dir.join(format!("{experiment}.records.tsv"))
    }

    pub fn timing_path(dir: &Path, experiment: &str) -> PathBuf {
        dir.join(format!("{experiment}.timing.tsv"))
    }

    /// Writes the summary, record and timing tables into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        let summary = Self::summary_path(dir, &self.experiment);
        let records = Self::records_path(dir, &self.experiment);
        let timing = Self::timing_path(dir, &self.experiment);
        write_file(&summary, &self.summary_tsv())?;
        write_file(&records, &self.records_tsv())?;
        let mut t = String::from("phase\tseconds\n");
        for (phase, secs) in &self.timings {
            t.push_str(&format!("{phase}\t{secs:.3}\n"));
        }
        write_file(&timing, &t)?;
        Ok(vec![summary, records, timing])
    }

    pub fn summary_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = ["experiment"].into_iter().chain(self.coord_names.iter().map(String::as_str)).chain(SUMMARY_COLUMNS).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![self.experiment.clone()];
            cells.extend(r.coords.iter().map(|&c| fmt_f64(c)));
            cells.push(r.observable.clone());
            cells.extend([fmt_f64(r.mean), fmt_f64(r.sigma), fmt_f64(r.stderr), r.n_avg.to_string()]);
            cells.push(fmt_seeds(&r.seeds));
            cells.push(self.config_hash.clone());
            cells.push(self.version.clone());
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn records_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = ["experiment"].into_iter().chain(self.coord_names.iter().map(String::as_str)).chain(RECORD_COLUMNS).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for r in &self.records {
            let mut cells = vec![self.experiment.clone()];
            cells.extend(r.coords.iter().map(|&c| fmt_f64(c)));
            cells.extend([r.seed.to_string(), r.observable.clone(), fmt_f64(r.value), self.config_hash.clone()]);
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Reads back the summary and record tables written by [`ResultTable::persist`].
    pub fn load(dir: &Path, experiment: &str) -> Result<Self> {
        let summary = Self::summary_path(dir, experiment);
        let (header, rows) = read_tsv(&summary)?;
        let k = header.len().checked_sub(1 + SUMMARY_COLUMNS.len()).ok_or_else(|| format_err(&summary, "too few columns"))?;
        if header[0] != "experiment" || header[1 + k..] != SUMMARY_COLUMNS {
            return Err(format_err(&summary, "unexpected header"));
        }
        let coord_names = header[1..1 + k].to_vec();
        let mut table = ResultTable {
            experiment: experiment.to_string(),
            coord_names,
            config_hash: String::new(),
            version: String::new(),
            rows: vec![],
            records: vec![],
            timings: vec![],
        };
        for row in &rows {
            let f = |i: usize| parse_f64(&summary, &row[i]);
            table.rows.push(SummaryRow {
                coords: (1..1 + k).map(f).collect::<Result<_>>()?,
                observable: row[1 + k].clone(),
                mean: f(2 + k)?,
                sigma: f(3 + k)?,
                stderr: f(4 + k)?,
                n_avg: row[5 + k].parse().map_err(|_| format_err(&summary, "bad n_avg"))?,
                seeds: parse_seeds(&summary, &row[6 + k])?,
            });
            table.config_hash = row[7 + k].clone();
            table.version = row[8 + k].clone();
        }
        let records = Self::records_path(dir, experiment);
        let (rheader, rrows) = read_tsv(&records)?;
        if rheader.len() != 1 + k + RECORD_COLUMNS.len() || rheader[1 + k..] != RECORD_COLUMNS {
            return Err(format_err(&records, "unexpected header"));
        }
        for row in &rrows {
            let f = |i: usize| parse_f64(&records, &row[i]);
            table.records.push(RunRecord {
                coords: (1..1 + k).map(f).collect::<Result<_>>()?,
                seed: row[1 + k].parse().map_err(|_| format_err(&records, "bad seed"))?,
                observable: row[2 + k].clone(),
                value: f(3 + k)?,
            });
        }
        Ok(table)
    }
}

fn coords_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_seeds(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn parse_seeds(path: &Path, s: &str) -> Result<Vec<u64>> {
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(|x| x.parse().map_err(|_| format_err(path, format!("bad seed '{x}'")))).collect()
}

fn parse_f64(path: &Path, s: &str) -> Result<f64> {
    s.parse().map_err(|_| format_err(path, format!("bad number '{s}'")))
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), message: message.into() }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn read_tsv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
            other => format_err(path, format!("{other:?}")),
        })?;
    let header = reader.headers().map_err(|e| format_err(path, e.to_string()))?.iter().map(str::to_string).collect::<Vec<_>>();
    let mut rows = vec![];
    for rec in reader.records() {
        let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}
