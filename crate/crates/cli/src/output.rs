//! CSV/console output helpers. Numeric columns carry 17 significant digits
//! so replayed runs compare byte-for-byte.

use std::io::Write;
use std::path::{Path, PathBuf};

pub fn g17(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()
}

/// Create `<out>/<command>-<timestamp>/`, suffixing on collision.
pub fn create_run_dir(out_root: &Path, command: &str) -> std::io::Result<PathBuf> {
    let stamp = chrono::Utc::now().format("%Y%m%d-%H%M%S").to_string();
    let mut dir = out_root.join(format!("{command}-{stamp}"));
    let mut attempt = 1;
    while dir.exists() {
        attempt += 1;
        dir = out_root.join(format!("{command}-{stamp}-{attempt}"));
    }
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// The sampler trace row shared by sample/sweep/anneal/hysteresis outputs.
pub const TRACE_HEADER: &str =
    "leg_index,beta,beta_tilde,mean_H,stderr_H,rescaled_H,acceptance,theta_max";

pub fn trace_row(leg_index: usize, leg: &entpot::LegStats, rescaler: f64) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        leg_index,
        g17(leg.beta),
        g17(leg.beta_tilde),
        g17(leg.mean_h),
        g17(leg.stderr_h),
        g17(leg.mean_h / rescaler),
        g17(leg.acceptance),
        g17(leg.theta_max)
    )
}
