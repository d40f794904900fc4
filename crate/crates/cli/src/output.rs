//! Artifacts of a run and their on-disk layout.
//!
//! Every text file starts with `#` header lines carrying the code version,
//! the SHA-256 of the config text, the seed and the experiment name. Binary
//! snapshots carry the same lines in their metadata block.
//!
//! | file               | content                                          |
//! |--------------------|--------------------------------------------------|
//! | `report.csv`       | monitor time series, columns of `CSV_COLUMNS`    |
//! | `<table>.csv`      | experiment-specific tables                       |
//! | `<name>.snap`      | binary field snapshots                           |
//! | `summary.csv`      | `kind,name,value,limit,status` per check and note |

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use magsteer_core::monitors::{MonitorCheck, TrajectoryReport};
use magsteer_core::snapshot::Snapshot;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identity of a run, embedded in every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunContext {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
}

impl RunContext {
    pub fn new(experiment: &str, config_text: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash: hex::encode(Sha256::digest(config_text.as_bytes())),
            seed,
        }
    }

    pub fn header_lines(&self) -> Vec<String> {
        vec![
            format!("magsteer_version={VERSION}"),
            format!("config_sha256={}", self.config_hash),
            format!("seed={}", self.seed),
            format!("experiment={}", self.experiment),
        ]
    }

    fn write_header<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for line in self.header_lines() {
            writeln!(w, "# {line}")?;
        }
        Ok(())
    }
}

/// Numeric table written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub report: Option<TrajectoryReport>,
    pub tables: Vec<Table>,
    pub snapshots: Vec<(String, Snapshot)>,
    pub checks: Vec<MonitorCheck>,
    pub notes: Vec<(String, f64)>,
}

impl Artifacts {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&MonitorCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn note(&self, name: &str) -> Option<f64> {
        self.notes.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes all artifacts into `dir` (created if missing); returns the paths.
    pub fn write(&self, dir: &Path, ctx: &RunContext) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if let Some(report) = &self.report {
            let path = dir.join("report.csv");
            let mut w = BufWriter::new(fs::File::create(&path)?);
            ctx.write_header(&mut w)?;
            report.write_csv(&mut w)?;
            w.flush()?;
            written.push(path);
        }
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            let mut w = BufWriter::new(fs::File::create(&path)?);
            ctx.write_header(&mut w)?;
            writeln!(w, "{}", t.columns.join(","))?;
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
            w.flush()?;
            written.push(path);
        }
        for (name, snap) in &self.snapshots {
            let path = dir.join(format!("{name}.snap"));
            let mut s = snap.clone();
            s.seed = ctx.seed;
            let mut meta = ctx.header_lines().join("\n");
            if !snap.meta.is_empty() {
                meta.push('\n');
                meta.push_str(&snap.meta);
            }
            s.meta = meta;
            s.write_binary(BufWriter::new(fs::File::create(&path)?))?;
            written.push(path);
        }
        let path = dir.join("summary.csv");
        let mut w = BufWriter::new(fs::File::create(&path)?);
        ctx.write_header(&mut w)?;
        writeln!(w, "kind,name,value,limit,status")?;
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "fail" };
            writeln!(w, "check,{},{:.17e},{:.17e},{status}", c.name, c.value, c.limit)?;
        }
        for (name, value) in &self.notes {
            writeln!(w, "note,{name},{value:.17e},,")?;
        }
        let overall = if self.passed() { "pass" } else { "fail" };
        writeln!(w, "result,all,,,{overall}")?;
        w.flush()?;
        written.push(path);
        Ok(written)
    }
}
