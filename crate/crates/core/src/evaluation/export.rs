use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `name<TAB>v1<TAB>…` rows with 9 significant digits, after an optional
/// `# ` comment line.
pub fn export_embeddings(path: &Path, comment: Option<&str>, names: &[String], rows: &[Vec<f64>]) -> Result<()> {
    if names.len() != rows.len() {
        return Err(Error::Data("embedding names and rows differ in length".into()));
    }
    let mut out = String::new();
    if let Some(c) = comment {
        let _ = writeln!(out, "# {c}");
    }
    for (name, row) in names.iter().zip(rows) {
        out.push_str(name);
        for v in row {
            let _ = write!(out, "\t{v:.8e}");
        }
        out.push('\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_embeddings(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let name = fields.next().unwrap_or_default().to_string();
        let row = fields
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: format!("bad number {f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((name, row));
    }
    Ok(out)
}
