use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Shortest representation that reads back to the same `f64`, in
/// exponent form outside `[1e-4, 1e15)`. `-0` is written as `0` so that sign
/// noise never changes the bytes.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn csv_string(comment: &str, header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    s.push_str(comment);
    s.push('\n');
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

pub fn write_csv(
    dir: &Path,
    name: &str,
    comment: &str,
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    write_text(&path, &csv_string(comment, header, rows))?;
    Ok(path)
}
