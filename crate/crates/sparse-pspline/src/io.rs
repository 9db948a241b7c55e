//! CSV datasets.
//!
//! Input files have a header row. One column holds `t`, one holds `y`, and the
//! remaining (or explicitly listed) columns form `X`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use sparse_pspline_core::{collapse_ties, Dataset};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] sparse_pspline_core::Error),
}

#[derive(Debug, Clone)]
pub struct ReadOptions {
    pub t_column: String,
    pub y_column: String,
    /// `None` takes every other column.
    pub x_columns: Option<Vec<String>>,
    /// Map `t` affinely onto `[0, 1]`.
    pub rescale_t: bool,
    /// Average rows that share a `t` value.
    pub collapse_ties: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self {
            t_column: "t".into(),
            y_column: "y".into(),
            x_columns: None,
            rescale_t: false,
            collapse_ties: false,
        }
    }
}

/// A dataset plus the raw inputs it was built from.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub x_names: Vec<String>,
    /// `(min, max)` of the raw `t` when rescaled.
    pub t_range: Option<(f64, f64)>,
    /// Rows merged per knot when ties were collapsed.
    pub multiplicity: Option<Vec<usize>>,
}

pub fn read_dataset(path: &Path, opts: &ReadOptions) -> Result<LoadedData, IoError> {
    let file = std::fs::File::open(path).map_err(|source| IoError::Open {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset_from(file, opts)
}

pub fn read_dataset_from<R: std::io::Read>(
    reader: R,
    opts: &ReadOptions,
) -> Result<LoadedData, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| IoError::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))
    };
    let t_idx = find(&opts.t_column)?;
    let y_idx = find(&opts.y_column)?;
    let x_idx: Vec<usize> = match &opts.x_columns {
        Some(cols) => cols.iter().map(|c| find(c)).collect::<Result<_, _>>()?,
        None => (0..header.len())
            .filter(|&i| i != t_idx && i != y_idx)
            .collect(),
    };
    if x_idx.iter().any(|&i| i == t_idx || i == y_idx) {
        return Err(IoError::Invalid(
            "t or y column also listed as a predictor".into(),
        ));
    }
    let x_names: Vec<String> = x_idx.iter().map(|&i| header[i].clone()).collect();
    let d = x_idx.len();

    let mut t = Vec::new();
    let mut y = Vec::new();
    let mut xs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IoError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64, IoError> {
            let raw = rec.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| IoError::Parse {
                line,
                msg: format!("column `{}`: cannot parse `{raw}` as a number", header[i]),
            })?;
            if !v.is_finite() {
                return Err(IoError::Parse {
                    line,
                    msg: format!("column `{}`: non-finite value", header[i]),
                });
            }
            Ok(v)
        };
        t.push(field(t_idx)?);
        y.push(field(y_idx)?);
        for &i in &x_idx {
            xs.push(field(i)?);
        }
    }
    let n = t.len();
    if n == 0 {
        return Err(IoError::Invalid("no data rows".into()));
    }

    let t_range = if opts.rescale_t {
        let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(IoError::Invalid("t is constant; cannot rescale".into()));
        }
        for v in &mut t {
            *v = ((*v - lo) / (hi - lo)).clamp(0.0, 1.0);
        }
        Some((lo, hi))
    } else {
        None
    };

    let x = DMatrix::from_row_slice(n, d, &xs);
    let y = DVector::from_vec(y);
    let (x, t, y, multiplicity) = if opts.collapse_ties {
        let c = collapse_ties(&x, &t, &y)?;
        (c.x, c.t, c.y, Some(c.multiplicity))
    } else {
        (x, t, y, None)
    };
    let dataset = Dataset::new(x, t, y)?;
    Ok(LoadedData {
        dataset,
        x_names,
        t_range,
        multiplicity,
    })
}

/// Encode raw data as CSV with columns `t, y, names...`. Values round-trip exactly.
pub fn dataset_csv(
    names: &[String],
    x: &DMatrix<f64>,
    t: &[f64],
    y: &DVector<f64>,
) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "y".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for i in 0..t.len() {
        let mut row = vec![t[i].to_string(), y[i].to_string()];
        row.extend((0..x.ncols()).map(|j| x[(i, j)].to_string()));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
}
