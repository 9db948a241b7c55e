//! Simulation reports and their JSON / CSV encodings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sim::{ModelSpec, StudyConfig};

pub const SCHEMA_VERSION: u32 = 1;

pub const TABLE_HEADER: [&str; 12] = [
    "method",
    "mse_mean",
    "mse_se",
    "mise_mean",
    "mise_se",
    "size_mean",
    "size_se",
    "correct0_mean",
    "correct0_se",
    "incorrect0_mean",
    "incorrect0_se",
    "p_correct",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub replicates: usize,
    pub mse: Stat,
    pub mise: Stat,
    pub size: Stat,
    pub correct_zeros: Stat,
    pub incorrect_zeros: Stat,
    pub p_correct: f64,
    pub max_incorrect_zeros: usize,
    pub selection_frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub spec: ModelSpec,
    pub config: StudyConfig,
    pub replicates_requested: usize,
    /// `(replicate, message)` for replicates that did not complete.
    pub failures: Vec<(usize, String)>,
    pub lambda1_star: Stat,
    pub methods: Vec<MethodSummary>,
}

impl SimulationReport {
    pub fn method(&self, label: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == label)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn table_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TABLE_HEADER)?;
        for m in &self.methods {
            let mut row = vec![m.method.clone()];
            for s in [m.mse, m.mise, m.size, m.correct_zeros, m.incorrect_zeros] {
                row.push(s.mean.to_string());
                row.push(s.se.to_string());
            }
            row.push(m.p_correct.to_string());
            w.write_record(&row)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
    }

    /// One row per method, one column per predictor.
    pub fn selection_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["method".to_string()];
        header.extend((1..=self.spec.d).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        for m in &self.methods {
            let mut row = vec![m.method.clone()];
            row.extend(m.selection_frequency.iter().map(|f| f.to_string()));
            w.write_record(&row)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
    }
}

/// Write `contents` to a sibling temp file and rename it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name"))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}
