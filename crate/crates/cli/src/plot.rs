//! Long-format plot data: one `experiment,branch,metric,value` row per
//! measurement, ready for any plotting tool. Branch 0 holds process-level
//! metrics; sweep rows carry their delta in the experiment column.

use std::fmt::Write as _;
use std::path::Path;

use branchline_core::Result;

use crate::report::{atomic_write, sci, Report};

pub const PLOT_HEADER: &str = "experiment,branch,metric,value";

fn push_row(out: &mut String, experiment: &str, branch: usize, metric: &str, value: f64) {
    let _ = writeln!(out, "{experiment},{branch},{metric},{}", sci(value));
}

/// Collect the plot rows for one report.
pub fn plot_rows(report: &Report) -> String {
    let mut out = String::new();
    let name = report.experiment.as_str();
    if let Some(v) = &report.validation {
        push_row(&mut out, name, 0, "coincidence_max_deviation", v.coincidence_max_deviation);
    }
    if let Some(d) = &report.degeneracy {
        push_row(&mut out, name, 0, "band_scale", d.scale);
        for (i, &b) in d.band_max.iter().enumerate() {
            push_row(&mut out, name, i + 1, "band_max", b);
        }
    }
    if let Some(a) = &report.approximation {
        push_row(&mut out, name, 0, "predicted_l2", a.predicted_l2);
        for row in &a.per_branch {
            push_row(&mut out, name, row.branch, "l2_error", row.l2_error);
            push_row(&mut out, name, row.branch, "sup_error", row.sup_error);
        }
    }
    if let Some(s) = &report.sweep {
        for row in &s.rows {
            let keyed = format!("{name}:delta={}", sci(row.delta));
            push_row(&mut out, &keyed, 0, "l2_error", row.l2_error);
            push_row(&mut out, &keyed, 0, "predicted_l2", row.predicted_l2);
        }
    }
    if let Some(r) = &report.recovery {
        push_row(&mut out, name, 0, "residual_norm", r.residual_norm);
        if let Some(c) = r.conditioning {
            push_row(&mut out, name, 0, "conditioning", c);
        }
        for row in &r.branch_errors {
            push_row(&mut out, name, row.branch, "recovery_relative_l2", row.relative_l2);
        }
    }
    out
}

/// Write the combined plot CSV for a set of reports. An empty set still
/// produces the header line.
pub fn emit_plot_data(reports: &[Report], path: &Path) -> Result<()> {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for report in reports {
        out.push_str(&plot_rows(report));
    }
    atomic_write(path, out.as_bytes())
}
