//! Writing reports. File outputs are staged next to their targets and
//! renamed into place only when every file of a run has been written, so a
//! failed run leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{bad, Failure};

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Prints `body` or writes it to the configured file, with an optional
/// `<out>.meta.json` sidecar.
pub fn emit(cfg: &RunConfig, body: &str, sidecar: Option<&Value>) -> Result<(), Failure> {
    let Some(path) = cfg.output_file() else {
        print!("{body}");
        return Ok(());
    };
    let mut files = vec![(path.to_path_buf(), body.to_string())];
    if let Some(meta) = sidecar {
        files.push((sidecar_path(path), pretty(meta)));
    }
    write_all(&files)
}

fn staging_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".partial");
    PathBuf::from(name)
}

fn write_all(files: &[(PathBuf, String)]) -> Result<(), Failure> {
    let mut staged = Vec::new();
    let mut placed = Vec::new();
    let result = (|| {
        for (path, text) in files {
            let tmp = staging_path(path);
            fs::write(&tmp, text).map_err(|e| bad(format!("cannot write {}: {e}", path.display())))?;
            staged.push(tmp);
        }
        for (tmp, (path, _)) in staged.iter().zip(files) {
            fs::rename(tmp, path).map_err(|e| bad(format!("cannot write {}: {e}", path.display())))?;
            placed.push(path.clone());
        }
        Ok(())
    })();
    if result.is_err() {
        for p in staged.iter().chain(placed.iter()) {
            let _ = fs::remove_file(p);
        }
    }
    result
}
