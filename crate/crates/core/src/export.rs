//! CSV and JSON serialization of results.
//!
//! Every CSV starts with a `# manifest_sha256=<hex>` comment line; read it
//! back with a comment-aware CSV reader.

use std::io::Write;

use serde::Serialize;

use crate::applications::{CloneReport, CloneSweep, GhzWBranch};
use crate::error::Error;
use crate::protocol::{MonteCarloTrace, ProtocolTrace};
use crate::scattering::SweepRow;
use crate::state::StateJson;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] Error),
}

pub type ExportResult<T> = std::result::Result<T, ExportError>;

fn write_csv<W: Write, R: Serialize>(mut w: W, hash: &str, rows: impl IntoIterator<Item = R>) -> ExportResult<()> {
    writeln!(w, "# manifest_sha256={hash}")?;
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    nu: usize,
    fidelity: f64,
    success_probability: f64,
}

/// Columns `nu, fidelity, success_probability`.
pub fn write_trace_csv<W: Write>(w: W, hash: &str, trace: &ProtocolTrace) -> ExportResult<()> {
    write_csv(
        w,
        hash,
        trace.records.iter().map(|r| TraceRow {
            nu: r.nu,
            fidelity: r.fidelity,
            success_probability: r.success_probability,
        }),
    )
}

pub fn write_monte_carlo_csv<W: Write>(w: W, hash: &str, trace: &MonteCarloTrace) -> ExportResult<()> {
    write_csv(w, hash, trace.records.iter())
}

#[derive(Serialize)]
struct SweepCsvRow<'a> {
    k: f64,
    #[serde(rename = "J")]
    coupling: f64,
    model: &'a str,
    lambda: f64,
    transmission_probability: f64,
    phase: f64,
}

/// Columns `k, J, model, lambda, transmission_probability, phase`.
pub fn write_sweep_csv<W: Write>(w: W, hash: &str, rows: &[SweepRow]) -> ExportResult<()> {
    write_csv(
        w,
        hash,
        rows.iter().map(|r| SweepCsvRow {
            k: r.k,
            coupling: r.coupling,
            model: r.model.name(),
            lambda: r.lambda,
            transmission_probability: r.transmission_probability,
            phase: r.phase,
        }),
    )
}

#[derive(Serialize)]
struct CloneCsvRow {
    sample_index: usize,
    alpha_re: f64,
    alpha_im: f64,
    beta_re: f64,
    beta_im: f64,
    fidelity: f64,
}

/// Columns `sample_index, alpha_re, alpha_im, beta_re, beta_im, fidelity`.
pub fn write_clone_sweep_csv<W: Write>(w: W, hash: &str, sweep: &CloneSweep) -> ExportResult<()> {
    write_csv(
        w,
        hash,
        sweep.samples.iter().map(|s| CloneCsvRow {
            sample_index: s.index,
            alpha_re: s.alpha.re,
            alpha_im: s.alpha.im,
            beta_re: s.beta.re,
            beta_im: s.beta.im,
            fidelity: s.fidelity,
        }),
    )
}

#[derive(Serialize)]
pub struct TraceJson {
    pub transparent_dimension: usize,
    pub reachable_rank: usize,
    pub transparent_weight: f64,
    pub projected_fidelity: f64,
    pub nu: Vec<usize>,
    pub fidelity: Vec<f64>,
    pub success_probability: Vec<f64>,
}

impl From<&ProtocolTrace> for TraceJson {
    fn from(t: &ProtocolTrace) -> Self {
        Self {
            transparent_dimension: t.transparent_dimension,
            reachable_rank: t.reachable_rank,
            transparent_weight: t.transparent_weight,
            projected_fidelity: t.projected_fidelity,
            nu: t.records.iter().map(|r| r.nu).collect(),
            fidelity: t.fidelities(),
            success_probability: t.probabilities(),
        }
    }
}

#[derive(Serialize)]
pub struct CloneReportJson {
    pub outcome: crate::applications::BellState,
    pub probability: f64,
    /// Row-major `(re, im)` entries of the receiver correction.
    pub correction: Vec<(f64, f64)>,
    pub fidelities: Vec<f64>,
    pub receiver_spread: f64,
    pub ancilla_dicke_weights: Vec<f64>,
    pub post_state: StateJson,
}

impl From<&CloneReport> for CloneReportJson {
    fn from(r: &CloneReport) -> Self {
        Self {
            outcome: r.outcome.which,
            probability: r.outcome.probability,
            correction: r.correction.transpose().iter().map(|z| (z.re, z.im)).collect(),
            fidelities: r.fidelities.clone(),
            receiver_spread: r.receiver_spread(),
            ancilla_dicke_weights: r.ancilla_dicke_weights.clone(),
            post_state: r.outcome.post_state.to_json(),
        }
    }
}

#[derive(Serialize)]
pub struct GhzWBranchJson<'a> {
    #[serde(flatten)]
    pub branch: &'a GhzWBranch,
    pub post_state: StateJson,
}

impl<'a> From<&'a GhzWBranch> for GhzWBranchJson<'a> {
    fn from(b: &'a GhzWBranch) -> Self {
        Self {
            branch: b,
            post_state: b.post_state.to_json(),
        }
    }
}

/// Pretty JSON with a trailing newline and the manifest hash as first key.
pub fn write_json<W: Write, T: Serialize>(mut w: W, hash: &str, body: &T) -> ExportResult<()> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        manifest_sha256: &'a str,
        #[serde(flatten)]
        body: &'a T,
    }
    serde_json::to_writer_pretty(&mut w, &Wrapped { manifest_sha256: hash, body })?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
