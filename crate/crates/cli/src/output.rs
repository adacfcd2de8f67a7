use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Creates `<root>/<scenario>-<verb>-NNN`, picking the first unused number
/// so earlier runs are never overwritten.
pub fn run_directory(root: &Path, scenario: &str, verb: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(root)
        .map_err(|e| CliError::Input(format!("cannot create output root {}: {e}", root.display())))?;
    let stem: String = scenario
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    for k in 1..100_000 {
        let dir = root.join(format!("{stem}-{verb}-{k:03}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(CliError::Pipeline(format!("cannot create {}: {e}", dir.display()))),
        }
    }
    Err(CliError::Pipeline(format!("no free run directory below {}", root.display())))
}

/// CSV text with a `#` comment header, a column row and data rows.
pub fn csv(header: &[String], columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = String::new();
    for h in header {
        let _ = writeln!(s, "# {h}");
    }
    s.push_str(&columns.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Pipeline(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
