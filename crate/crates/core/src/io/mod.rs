//! Files on disk: run configuration, persisted value models, episode
//! trajectories and their SVG rendering.

mod config;
mod model_file;
mod plot;
mod trajectory;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use config::{RunConfig, RunSection};
pub use model_file::{load_model, save_model, CreationInfo, ModelFile, MODEL_FORMAT_VERSION};
pub use plot::{render_svg, PlotOptions};
pub use trajectory::{infer_outcome, read_trajectory, write_trajectory, CSV_COLUMNS};

use crate::error::Result;

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}
