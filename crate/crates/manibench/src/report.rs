//! Delimited-text reports.

use std::path::Path;

use manibench_core::rl::IterationStats;

use crate::error::{io, Result};

pub const CURVE_HEADER: &str =
    "iteration,mean_return,success_rate,episodes_finished,policy_loss,value_loss,entropy,approx_kl,clip_fraction";

/// Learning curve, one row per iteration. Floats use the shortest
/// representation that reads back to the same value.
pub fn curve_csv(curve: &[IterationStats]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for s in curve {
        let u = &s.update;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.iteration,
            s.mean_return,
            s.success_rate,
            s.episodes_finished,
            u.policy_loss,
            u.value_loss,
            u.entropy,
            u.approx_kl,
            u.clip_fraction
        ));
    }
    out
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(path, text).map_err(io(path))
}
