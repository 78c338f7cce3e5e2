//! What a subcommand produces: scalar results, checked claims and CSV series.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// One checked claim. `value` is compared with `bound` as stated in `relation`.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    /// JSON key of the checked value inside `results`.
    pub key: String,
    pub claim: String,
    pub value: f64,
    pub relation: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
    #[serde(skip)]
    pub contents: String,
}

impl Artifact {
    /// A CSV from a header and rows of numbers.
    pub fn table(file: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut contents = columns.join(",");
        contents.push('\n');
        let mut n = 0;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(contents, "{}", cells.join(","));
            n += 1;
        }
        Self { file: file.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: n, contents }
    }

    /// A CSV produced by one of the library writers.
    pub fn written(file: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Self> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        let contents = String::from_utf8(buf).expect("writers emit ASCII");
        let columns = contents.lines().next().unwrap_or("").split(',').map(str::to_string).collect();
        let rows = contents.lines().count().saturating_sub(1);
        Ok(Self { file: file.into(), columns, rows, contents })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub quick: bool,
    /// The full configuration the run used.
    pub config: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub artifacts: Vec<Artifact>,
}

impl Report {
    pub fn new(command: &str, quick: bool, config: Value, results: Value, checks: Vec<Check>, artifacts: Vec<Artifact>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        Self { command: command.into(), quick, config, results, checks, passed, artifacts }
    }

    pub fn check(&self, key: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.key == key)
    }

    /// Look up a result by a dotted key such as `k.tail_ratio` or `ratios.0`.
    pub fn get(&self, key: &str) -> Option<&Value> {
        key.split('.').try_fold(&self.results, |v, part| match v {
            Value::Array(a) => part.parse::<usize>().ok().and_then(|i| a.get(i)),
            _ => v.get(part),
        })
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Write `<command>.json` and the CSV files into `dir`; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        let json = dir.join(format!("{}.json", self.command));
        std::fs::write(&json, self.to_json()?)?;
        paths.push(json);
        for a in &self.artifacts {
            let p = dir.join(&a.file);
            std::fs::write(&p, &a.contents)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Builder for the check list.
#[derive(Default)]
pub struct Checks(pub Vec<Check>);

impl Checks {
    pub fn at_most(&mut self, key: &str, claim: &str, value: f64, bound: f64) {
        self.push(key, claim, value, format!("<= {bound:e}"), value <= bound);
    }

    pub fn below(&mut self, key: &str, claim: &str, value: f64, bound: f64) {
        self.push(key, claim, value, format!("< {bound:e}"), value < bound);
    }

    pub fn at_least(&mut self, key: &str, claim: &str, value: f64, bound: f64) {
        self.push(key, claim, value, format!(">= {bound:e}"), value >= bound);
    }

    pub fn within(&mut self, key: &str, claim: &str, value: f64, lo: f64, hi: f64, open: bool) {
        let pass = if open { value > lo && value < hi } else { value >= lo && value <= hi };
        let relation = if open { format!("in ({lo}, {hi})") } else { format!("in [{lo}, {hi}]") };
        self.push(key, claim, value, relation, pass);
    }

    pub fn holds(&mut self, key: &str, claim: &str, value: f64, pass: bool, relation: &str) {
        self.push(key, claim, value, relation.into(), pass);
    }

    fn push(&mut self, key: &str, claim: &str, value: f64, relation: String, pass: bool) {
        // NaN never passes
        let pass = pass && !value.is_nan();
        self.0.push(Check { key: key.into(), claim: claim.into(), value, relation, pass });
    }
}
