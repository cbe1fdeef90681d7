//! CSV rendering and atomic output.

use std::io::Write;
use std::path::Path;

use tailsens_core::{EngineError, SensitivityError, SensitivityReport};

pub const NA: &str = "NA";

/// Scientific notation with ten significant digits; `NA` for anything that
/// is not a finite number.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.9e}")
    } else {
        NA.into()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.into(), num)
}

/// Flag for a failed computation.
pub fn failure_flag(e: &SensitivityError) -> &'static str {
    match e {
        SensitivityError::Engine { source, .. } => match source {
            EngineError::Accuracy { .. } => "accuracy",
            EngineError::Truncation { .. } => "truncation",
            EngineError::NoConvergence(_) => "no_convergence",
            _ => "engine_error",
        },
        _ => "error",
    }
}

pub fn report_flag(r: &SensitivityReport) -> &'static str {
    if r.zero_atom {
        "zero_atom"
    } else if !r.error.is_finite() {
        "undefined_error"
    } else {
        ""
    }
}

pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// or to stdout when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> std::io::Result<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| e.error)?;
            Ok(())
        }
    }
}
