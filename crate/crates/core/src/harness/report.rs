use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Tabular experiment output. `rows` covers the full parameter grid in grid
/// order; `summary` holds derived scalars such as a recommended threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    #[serde(default)]
    pub summary: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` under `dir`,
    /// returning the CSV path.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, HarnessError> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.experiment));
        std::fs::write(&csv_path, self.to_csv())?;
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(dir.join(format!("{}.json", self.experiment)), json)?;
        Ok(csv_path)
    }
}

/// Fixed-precision rendering so CSVs are stable across platforms.
pub(crate) fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let mut r = ExperimentReport::new("demo", 1, &["a", "b"]);
        r.push_row(vec!["1".into(), "x,y".into()]);
        assert_eq!(r.to_csv(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn write_to_creates_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = ExperimentReport::new("demo", 1, &["a"]);
        let p = r.write_to(dir.path()).unwrap();
        assert!(p.exists());
        assert!(dir.path().join("demo.json").exists());
    }
}
