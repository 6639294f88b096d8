use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};

use dfn_core::linalg::dfn;
use dfn_core::tensorfile::read_tensor;

use crate::Outcome;

fn file_dfn(path: &Path) -> Result<f64> {
    let m = read_tensor(path)?.matrix()?;
    if m.rows() != m.cols() {
        return Err(anyhow!("not square ({}×{})", m.rows(), m.cols()));
    }
    Ok(dfn(&m)?)
}

/// Prints `path<TAB>Δ²` per file, then `mean/min/max` over the files that
/// succeeded.
pub fn cmd_dfn(paths: &[PathBuf], out: &mut impl Write) -> Result<Outcome> {
    let mut ok = Vec::new();
    for p in paths {
        match file_dfn(p) {
            Ok(v) => {
                writeln!(out, "{}\t{v:.10e}", p.display())?;
                ok.push(v);
            }
            Err(e) => eprintln!("error: {}: {e:#}", p.display()),
        }
    }
    if !ok.is_empty() {
        let mean = ok.iter().sum::<f64>() / ok.len() as f64;
        let min = ok.iter().copied().fold(f64::INFINITY, f64::min);
        let max = ok.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        writeln!(out, "mean\t{mean:.10e}\nmin\t{min:.10e}\nmax\t{max:.10e}")?;
    }
    Ok(Outcome::from_counts(paths.len(), paths.len() - ok.len()))
}
