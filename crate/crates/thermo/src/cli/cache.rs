//! Content-addressed artifact cache with atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::cli::config::{CachePolicy, RunConfig};
use crate::cli::CliError;

/// Resolve the cache directory: `THERMO_CACHE_DIR` or a `cache/`
/// directory beside the run output.
pub fn cache_dir(config: &RunConfig) -> PathBuf {
    std::env::var_os("THERMO_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| config.output_dir.join("cache"))
}

pub fn lookup(config: &RunConfig, key: &str) -> Option<String> {
    if config.cache != CachePolicy::ReadWrite {
        return None;
    }
    let path = cache_dir(config).join(format!("{key}.csv"));
    std::fs::read_to_string(path).ok()
}

pub fn store(config: &RunConfig, key: &str, payload: &str) -> Result<(), CliError> {
    if config.cache == CachePolicy::Off {
        return Ok(());
    }
    let dir = cache_dir(config);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cache dir {}: {e}", dir.display())))?;
    atomic_write(&dir.join(format!("{key}.csv")), payload)
}

/// Write via a temporary file in the destination directory plus rename,
/// so concurrent writers never expose partial content.
pub fn atomic_write(path: &Path, payload: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Io(format!("temp file in {}: {e}", dir.display())))?;
    tmp.write_all(payload.as_bytes())
        .map_err(|e| CliError::Io(format!("write: {e}")))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("persist {}: {e}", path.display())))?;
    Ok(())
}
