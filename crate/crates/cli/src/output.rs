use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use rollgeo_core::trajectory::write_csv;
use rollgeo_core::HorizontalPath;

use crate::CliError;

/// Writes through a sibling temporary file and renames it into place, so a
/// reader never sees a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn trajectory(dir: &Path, p: &HorizontalPath) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_csv(p, &mut buf)?;
    write_atomic(&dir.join("trajectory.csv"), &buf)
}

pub fn report<T: Serialize>(dir: &Path, report: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    write_atomic(&dir.join("report.json"), text.as_bytes())
}
