//! Output directories: a JSON manifest plus one plain CSV per curve.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::ensemble::{EnsembleOutput, Manifest};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
/// Canonical configuration echo; feeding it back reproduces the run.
pub const CONFIG_FILE: &str = "config.txt";

/// Creates `dir` if needed. An existing manifest is only replaced with
/// `force`.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.join(MANIFEST_FILE).exists() && !force {
        return Err(Error::OutputExists(dir.to_path_buf()));
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn graph_file_name(set: usize, net: usize) -> String {
    format!("graph_{set}_{net}.edges")
}

/// Writes every file of one ensemble into `dir` (which must exist) and
/// returns the paths written. Curves the ensemble could not produce are
/// skipped; the manifest records them with zero contributions.
pub fn write_ensemble(dir: &Path, out: &EnsembleOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put(CONFIG_FILE, out.manifest.config_text.clone())?;
    for (name, hist) in [
        ("wealth_hist.csv", &out.wealth_hist),
        ("degree_hist.csv", &out.degree_hist),
        ("weight_hist.csv", &out.weight_hist),
        ("strength_hist.csv", &out.strength_hist),
    ] {
        if let Some(h) = hist {
            put(name, h.to_csv())?;
        }
    }
    if let Some(p) = &out.percolation {
        put("percolation.csv", p.to_csv())?;
    }
    if let Some(c) = &out.lambda_wealth {
        put("lambda_wealth.csv", c.to_csv())?;
    }
    if let Some(c) = &out.conditional {
        put("conditional_means.csv", c.to_csv())?;
    }
    for ((set, net), graph) in &out.graphs {
        let path = dir.join(graph_file_name(*set, *net));
        graph.write_edges(BufWriter::new(fs::File::create(&path)?))?;
        written.push(path);
    }
    // last, so a directory with a manifest is a complete one
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &out.manifest)?;
    written.push(path);
    Ok(written)
}
