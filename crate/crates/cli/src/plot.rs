use std::io::Write;
use std::path::{Path, PathBuf};

use faultline_core::SolverReport;

use crate::error::{CliError, CliResult};
use crate::run::{write_curve, write_file};

/// Writes the anytime curve of a saved report as `iteration<TAB>reward`
/// rows, to `output` or stdout.
pub fn cmd_export_plot(report_path: &Path, output: Option<PathBuf>) -> CliResult<()> {
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| CliError::io(format!("cannot read report {}", report_path.display()), e))?;
    let report: SolverReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", report_path.display())))?;
    match output {
        Some(path) => write_file(&path, |w| write_curve(&report, w)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_curve(&report, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::io("stdout", e))
        }
    }
}
