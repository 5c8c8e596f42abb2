//! Stage file helpers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde_json::Value;

use crate::InputError;

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Writes a file in one go through `f`, creating the directory first.
pub fn write_file(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
) -> anyhow::Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> anyhow::Result<PathBuf> {
    write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

/// Opens an earlier stage's output, naming the command that produces it
/// when it is missing.
pub fn open_stage(dir: &Path, name: &str, command: &str) -> anyhow::Result<File> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(InputError(format!(
            "{} not found; run `urbcent {command}` first",
            path.display()
        ))
        .into());
    }
    File::open(&path).with_context(|| format!("cannot open {}", path.display()))
}

/// Opens a user-supplied input file.
pub fn open_input(path: &Path) -> anyhow::Result<File> {
    File::open(path).map_err(|e| InputError(format!("cannot open {}: {e}", path.display())).into())
}

/// `NaN` and infinities become JSON null.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}
