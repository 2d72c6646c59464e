//! Emitted files and the run manifest.

use std::path::Path;

use apsis_core::flow::Trajectory;
use apsis_core::{Dim, PhaseState};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Tolerances, SCHEMA_VERSION};
use crate::error::RunError;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub operation: String,
    pub seconds: f64,
}

/// Files and metadata produced by one command.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<OutputFile>,
    pub warnings: Vec<String>,
    pub timings: Vec<Timing>,
    /// Failure to signal after the files are written.
    pub status: Option<RunError>,
}

impl Report {
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
        bytes.push(b'\n');
        self.files.push(OutputFile { name: name.into(), bytes });
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for row in rows {
            w.write_record(row).expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        self.files.push(OutputFile { name: name.into(), bytes });
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn time<T>(&mut self, operation: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings.push(Timing { operation: operation.into(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }
}

/// Fields shared by every JSON data file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub schema_version: u32,
    pub command: &'static str,
    pub toolkit_version: &'static str,
    pub config_hash: String,
    pub manifest: &'static str,
    pub tolerances: Tolerances,
}

impl Header {
    pub fn new(command: &'static str, config_hash: &str, tolerances: Tolerances) -> Self {
        Header {
            schema_version: SCHEMA_VERSION,
            command,
            toolkit_version: VERSION,
            config_hash: config_hash.into(),
            manifest: MANIFEST_NAME,
            tolerances,
        }
    }
}

#[derive(Debug, Serialize)]
struct ManifestFile {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'static str,
    toolkit_version: &'static str,
    config_hash: &'a str,
    reproducible: bool,
    tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<&'a [Timing]>,
    warnings: &'a [String],
    status: &'static str,
    files: Vec<ManifestFile>,
}

/// Writes every file of `report` into `dir`, followed by the manifest.
pub fn write_report(
    dir: &Path,
    command: &'static str,
    config_hash: &str,
    tolerances: Tolerances,
    reproducible: bool,
    report: &Report,
) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    for f in &report.files {
        std::fs::write(dir.join(&f.name), &f.bytes)?;
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command,
        toolkit_version: VERSION,
        config_hash,
        reproducible,
        tolerances,
        timings: (!reproducible).then_some(report.timings.as_slice()),
        warnings: &report.warnings,
        status: report.status.as_ref().map_or("ok", |e| e.code()),
        files: report
            .files
            .iter()
            .map(|f| ManifestFile { name: f.name.clone(), sha256: format!("{:x}", Sha256::digest(&f.bytes)), bytes: f.bytes.len() })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    std::fs::write(dir.join(MANIFEST_NAME), bytes)?;
    Ok(())
}

/// Shortest round-trip decimal, in exponent form for very small or large magnitudes.
pub fn fmt(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn state_header(dim: Dim) -> Vec<&'static str> {
    match dim {
        Dim::Planar => vec!["x1", "x2", "p1", "p2"],
        Dim::Spatial => vec!["x1", "x2", "x3", "p1", "p2", "p3"],
    }
}

pub fn state_fields(z: &PhaseState, dim: Dim) -> Vec<String> {
    let d = dim.d();
    z.x[..d].iter().chain(&z.p[..d]).map(|&v| fmt(v)).collect()
}

/// `(t, state)` rows at the integrator's steps or at `samples` uniform times.
pub fn trajectory_rows(traj: &Trajectory, samples: Option<usize>) -> Result<Vec<(f64, PhaseState)>, RunError> {
    match samples {
        None => Ok(traj.times.iter().copied().zip(traj.states.iter().copied()).collect()),
        Some(n) => {
            let n = n.max(2);
            (0..n)
                .map(|i| {
                    let t = if i + 1 == n { traj.t1 } else { traj.t0 + (traj.t1 - traj.t0) * i as f64 / (n - 1) as f64 };
                    Ok((t, traj.state_at(t)?))
                })
                .collect()
        }
    }
}
