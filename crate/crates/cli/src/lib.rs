//! Batch experiment driver: reads a JSON config, runs one pipeline mode and writes
//! report.json, timings.json and mode-specific CSVs into the output directory.

pub mod config;
mod modes;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

pub use config::{Calibrated, ExperimentConfig, Mode, Overrides, Preset};
pub use report::{Node, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_ACCURACY: i32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => EXIT_VALIDATION,
            RunError::Divergence(_) => EXIT_DIVERGENCE,
            RunError::Accuracy(_) => EXIT_ACCURACY,
            RunError::Io(_) => EXIT_IO,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Validation(_) => "validation",
            RunError::Divergence(_) => "divergence",
            RunError::Accuracy(_) => "accuracy",
            RunError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<fd_core::CoreError> for RunError {
    fn from(e: fd_core::CoreError) -> Self {
        match e {
            fd_core::CoreError::NonFinite { .. } => RunError::Accuracy(e.to_string()),
            _ => RunError::Validation(e.to_string()),
        }
    }
}

impl From<fd_geometry::GeometryError> for RunError {
    fn from(e: fd_geometry::GeometryError) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<fd_forward::ForwardError> for RunError {
    fn from(e: fd_forward::ForwardError) -> Self {
        use fd_forward::ForwardError as F;
        let msg = e.to_string();
        let mut inner = &e;
        while let F::AtNode { source, .. } = inner {
            inner = source;
        }
        match inner {
            F::Divergence { .. } | F::NonConvergence { .. } => RunError::Divergence(msg),
            F::Core(fd_core::CoreError::NonFinite { .. }) => RunError::Accuracy(msg),
            F::Core(_) | F::Geometry(_) | F::Data(_) => RunError::Validation(msg),
            F::Csv(_) | F::Io(_) => RunError::Io(msg),
            F::AtNode { .. } => unreachable!(),
        }
    }
}

impl From<fd_dbar::DbarError> for RunError {
    fn from(e: fd_dbar::DbarError) -> Self {
        use fd_dbar::DbarError as D;
        match e {
            D::TailTooLarge { .. } => RunError::Accuracy(e.to_string()),
            D::ZeroLambda | D::Geometry(_) => RunError::Validation(e.to_string()),
            D::Forward(f) => f.into(),
            D::Core(c) => c.into(),
        }
    }
}

impl From<fd_inverse::InverseError> for RunError {
    fn from(e: fd_inverse::InverseError) -> Self {
        use fd_inverse::InverseError as I;
        match e {
            I::Precondition { .. } | I::Config(_) => RunError::Validation(e.to_string()),
            I::Divergence { .. } | I::NonConvergence { .. } => RunError::Divergence(e.to_string()),
            I::Dbar(d) => d.into(),
            I::Core(c) => c.into(),
            I::Csv(_) | I::Io(_) => RunError::Io(e.to_string()),
        }
    }
}

impl From<fd_bounds::BoundsError> for RunError {
    fn from(e: fd_bounds::BoundsError) -> Self {
        use fd_bounds::BoundsError as B;
        match e {
            B::Quadrature(_) => RunError::Accuracy(e.to_string()),
            B::Invalid(_) => RunError::Validation(e.to_string()),
            B::Dbar(d) => d.into(),
            B::Core(c) => c.into(),
        }
    }
}

/// Result of one experiment.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub timings: Report,
    pub exit_code: i32,
    pub output_dir: PathBuf,
}

/// Runs `cfg` and writes its artifacts. A config that fails validation leaves
/// only a report.json carrying the error.
pub fn run(cfg: &ExperimentConfig) -> Outcome {
    let t0 = Instant::now();
    let mut report = Report::new();
    let mut timings = Report::new();
    report.set("tool.name", env!("CARGO_PKG_NAME"));
    report.set("tool.version", env!("CARGO_PKG_VERSION"));
    report.set("mode", cfg.mode.name());
    report.set("seed", cfg.seed);
    // the output location is not part of the experiment, so reruns elsewhere compare equal
    if let Ok(mut v) = serde_json::to_value(cfg) {
        if let Some(o) = v.as_object_mut() {
            o.remove("output_dir");
        }
        report.set("config", Node::from(&v));
    }
    let out = cfg.output_dir.clone();

    let result = cfg
        .validate()
        .and_then(|_| std::fs::create_dir_all(&out).map_err(RunError::from))
        .and_then(|_| modes::dispatch(cfg, &mut report, &mut timings));
    let result = result.and_then(|_| match report.first_non_finite() {
        Some(path) => Err(RunError::Accuracy(format!("non-finite value at {path}"))),
        None => Ok(()),
    });
    let exit_code = match &result {
        Ok(()) => {
            report.set("status", "ok");
            EXIT_OK
        }
        Err(e) => {
            report.set("status", "error");
            report.set("error.kind", e.kind());
            report.set("error.message", e.to_string());
            report.set("error.exit_code", e.exit_code() as u64);
            e.exit_code()
        }
    };
    timings.set("total_seconds", t0.elapsed().as_secs_f64());
    let mut exit_code = exit_code;
    if std::fs::create_dir_all(&out).is_ok() {
        let written = report.write(&out.join("report.json"));
        let written = written.and_then(|_| {
            if result.is_ok() || !matches!(result, Err(RunError::Validation(_))) {
                timings.write(&out.join("timings.json"))
            } else {
                Ok(())
            }
        });
        if written.is_err() && exit_code == EXIT_OK {
            exit_code = EXIT_IO;
        }
    } else if exit_code == EXIT_OK {
        exit_code = EXIT_IO;
    }
    Outcome { report, timings, exit_code, output_dir: out }
}
