use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const OUT_DIR_ENV: &str = "REALRATE_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "realrate-out";

/// Directory used when no explicit `--out` is given.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

pub enum Target {
    Stdout,
    File(PathBuf),
}

impl Target {
    /// `-` is standard output; nothing means `<default dir>/<default_name>`.
    pub fn resolve(out: Option<&str>, default_name: &str) -> Self {
        match out {
            Some("-") => Target::Stdout,
            Some(path) => Target::File(PathBuf::from(path)),
            None => Target::File(default_out_dir().join(default_name)),
        }
    }

    /// Runs `body` against the target and reports where the bytes went.
    pub fn write_with<F>(&self, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        match self {
            Target::Stdout => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                body(&mut lock)?;
                lock.flush().context("writing standard output")?;
            }
            Target::File(path) => {
                create_parent(path)?;
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = BufWriter::new(file);
                body(&mut w)?;
                w.flush().with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, value: &T) -> Result<()> {
        self.write_with(|w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
        }
        _ => Ok(()),
    }
}
