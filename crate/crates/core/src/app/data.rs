use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::sim::{ExperimentData, Signal};

use super::AppError;

pub const DATA_HEADER: [&str; 5] = ["k", "t", "r", "u", "y"];

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}

/// Writes columns of equal length under `header`; the first column is the
/// integer sample index.
pub fn write_table(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<(), AppError> {
    let mut w = create(path)?;
    let rows = columns.first().map_or(0, |c| c.len());
    let io = |e| AppError::io(path, e);
    writeln!(w, "k,{}", header.join(",")).map_err(io)?;
    for k in 0..rows {
        let mut line = k.to_string();
        for col in columns {
            line.push(',');
            line.push_str(&fmt(col[k]));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes rows of arbitrary float columns without an index column.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<(), AppError> {
    let mut w = create(path)?;
    let io = |e| AppError::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(fmt).unwrap_or_default()).collect();
        writeln!(w, "{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_experiment(path: &Path, data: &ExperimentData) -> Result<(), AppError> {
    let t: Vec<f64> = (0..data.len()).map(|k| k as f64 * data.ts()).collect();
    write_table(
        path,
        &DATA_HEADER[1..],
        &[&t, data.r().samples(), data.u().samples(), data.y().samples()],
    )
}

pub fn read_experiment(path: &Path, ts: f64) -> Result<ExperimentData, AppError> {
    let bad = |msg: String| AppError::BadData(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != DATA_HEADER {
        return Err(bad(format!(
            "expected header {}, found {}",
            DATA_HEADER.join(","),
            header.join(",")
        )));
    }
    let (mut r, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(format!("line {line}: {e}")))?;
        let k: usize = rec[0]
            .parse()
            .map_err(|_| bad(format!("line {line}: sample index {:?} is not an integer", &rec[0])))?;
        if k != i {
            return Err(bad(format!("line {line}: expected sample index {i}, found {k}")));
        }
        let mut vals = [0.0f64; 4];
        for (j, v) in vals.iter_mut().enumerate() {
            let cell = &rec[j + 1];
            *v = cell.parse().map_err(|_| {
                bad(format!(
                    "line {line}: column {} value {cell:?} is not a number",
                    DATA_HEADER[j + 1]
                ))
            })?;
            if !v.is_finite() {
                return Err(bad(format!("line {line}: column {} is not finite", DATA_HEADER[j + 1])));
            }
        }
        let expect_t = k as f64 * ts;
        if (vals[0] - expect_t).abs() > 1e-9 * expect_t.abs().max(1.0) {
            return Err(bad(format!(
                "line {line}: t = {} does not match k * ts = {expect_t} (ts = {ts})",
                vals[0]
            )));
        }
        r.push(vals[1]);
        u.push(vals[2]);
        y.push(vals[3]);
    }
    if r.is_empty() {
        return Err(bad("no samples".into()));
    }
    if r[0] == 0.0 {
        return Err(bad(
            "r[0] = 0, but the method assumes a nonzero leading reference sample so that the \
             leading fictitious-reference sample is nonzero and the Toeplitz system is invertible"
                .into(),
        ));
    }
    let sig = |v: Vec<f64>| Signal::new(v, ts).map_err(|e| bad(e.to_string()));
    ExperimentData::new(sig(r)?, sig(u)?, sig(y)?).map_err(|e| bad(e.to_string()))
}
