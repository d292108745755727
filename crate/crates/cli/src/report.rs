//! Report model and serialization.
//!
//! Every float in a report or CSV goes through [`sci`], which prints 17
//! significant digits in scientific notation. That is enough for exact
//! round-tripping of IEEE doubles, and it keeps two runs of the same
//! experiment byte-identical. `report.json` carries exactly one volatile
//! key, `generated_at_unix`; everything else is a pure function of the
//! configuration.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use branchline_core::Error;
use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::config::GridSpec;

/// Format a float with 17 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter that widens every float to 17 significant digits while
/// keeping the usual pretty-printed layout.
pub struct SciFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl<'a> SciFormatter<'a> {
    pub fn new() -> Self {
        SciFormatter {
            inner: PrettyFormatter::new(),
        }
    }
}

impl<'a> Default for SciFormatter<'a> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a> Formatter for SciFormatter<'a> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_object_value(writer)
    }
}

/// Write bytes to `path` atomically: stage in a sibling temp file, then
/// rename over the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> branchline_core::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Serialize any value as pretty JSON with widened floats and write it
/// atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> branchline_core::Result<()> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, SciFormatter::new());
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidData(format!("serializing {}: {e}", path.display())))?;
    buf.push(b'\n');
    atomic_write(path, &buf)
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct ErrorObject {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorObject {
    fn from(e: &Error) -> Self {
        ErrorObject {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct ValidationSection {
    pub structure_valid: bool,
    pub violations: Vec<String>,
    pub coincidence_max_deviation: f64,
    pub coincidence_scale: f64,
    pub coincidence_tolerance: f64,
    pub coincidence_pass: bool,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct DegeneracySection {
    pub centers: Vec<f64>,
    pub delta: f64,
    pub band_max: Vec<f64>,
    pub scale: f64,
    pub band_tol: f64,
    pub band_pass: bool,
    pub coincidence_pass: bool,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct BranchApproxRow {
    pub branch: usize,
    pub l2_error: f64,
    pub sup_error: f64,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct ApproximationSection {
    pub per_branch: Vec<BranchApproxRow>,
    pub max_l2_error: f64,
    pub predicted_l2: f64,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub l2_error: f64,
    pub predicted_l2: f64,
    pub min_mask_bins: usize,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct SweepSection {
    pub rows: Vec<SweepRow>,
    pub monotone: bool,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct BranchErrorRow {
    pub branch: usize,
    pub depth: Option<usize>,
    pub relative_l2: f64,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct RecoverySection {
    pub mode: String,
    pub branch: usize,
    pub solver: String,
    pub verdict: String,
    pub non_unique: bool,
    pub residual_norm: f64,
    pub conditioning: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub branch_errors: Vec<BranchErrorRow>,
    pub max_relative_l2: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub generated_at_unix: u64,
    pub seed: u64,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy: Option<DegeneracySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approximation: Option<ApproximationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<RecoverySection>,
    pub checks: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorObject>,
    pub status: String,
}

impl Report {
    pub fn new(experiment: &str, seed: u64, grid: GridSpec) -> Self {
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Report {
            experiment: experiment.to_string(),
            generated_at_unix: stamp,
            seed,
            grid,
            validation: None,
            degeneracy: None,
            approximation: None,
            sweep: None,
            recovery: None,
            checks: BTreeMap::new(),
            error: None,
            status: "fail".to_string(),
        }
    }

    pub fn set_check(&mut self, name: &str, pass: bool) {
        self.checks.insert(name.to_string(), pass);
    }

    /// All recorded checks pass and no module error occurred.
    pub fn passes(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.values().all(|&v| v)
    }

    pub fn finalize(&mut self) {
        self.status = if self.passes() { "pass" } else { "fail" }.to_string();
    }
}

pub fn read_report(path: &Path) -> branchline_core::Result<Report> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))
}
