//! Tidy plot-data emission: long-format CSV (`series,t,x,value`) plus a JSON
//! manifest listing the emitted files. The manifest is the only place a
//! timestamp appears, so reports stay byte-identical across reruns.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use contact_hj_core::action::ActionField;
use contact_hj_core::semigroup::EvolutionTrace;
use contact_hj_core::Result;

pub fn emit_trace_plot(
    trace: &EvolutionTrace<f64>,
    series: &str,
    dir: &Path,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{series}.csv"));
    let mut w = BufWriter::new(File::create(&path)?);
    write!(w, "series,t,x,value\r\n")?;
    for (t, slice) in trace.times.iter().zip(&trace.slices) {
        let grid = slice.grid();
        for i in 0..grid.len() {
            let x: f64 = grid.node(i);
            write!(w, "{series},{t},{x},{}\r\n", slice.value(i))?;
        }
    }
    w.flush()?;
    Ok(path)
}

pub fn emit_field_plot(field: &ActionField<f64>, series: &str, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{series}.csv"));
    let mut w = BufWriter::new(File::create(&path)?);
    write!(w, "series,t,x,value,masked\r\n")?;
    let grid = field.grid();
    for (t, slice) in field.times.iter().zip(&field.slices) {
        for i in 0..grid.len() {
            let x: f64 = grid.node(i);
            write!(
                w,
                "{series},{t},{x},{},{}\r\n",
                slice.values.value(i),
                u8::from(slice.mask[i])
            )?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// Write the plot manifest (file list plus the isolated timestamp).
pub fn write_manifest(dir: &Path, files: &[PathBuf]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let names: Vec<String> = files
        .iter()
        .map(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect();
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let doc = serde_json::json!({
        "generated_unix_time": stamp,
        "tool": format!("contact-hj {}", env!("CARGO_PKG_VERSION")),
        "files": names,
    });
    let mut w = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &doc)
        .map_err(|e| contact_hj_core::Error::InvalidParams(format!("manifest: {e}")))?;
    w.flush()?;
    Ok(())
}
