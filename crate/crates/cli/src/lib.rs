//! Manifest-driven runner behind the `spinext` binary.

pub mod manifest;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use spinext::applications::{self, clone_fidelity_sweep, ghz_w_run, telecloning_run, TelecloningSetup};
use spinext::entangled::{self, TargetState};
use spinext::export::{self, CloneReportJson, ExportError, GhzWBranchJson, TraceJson};
use spinext::linalg::{self, CMatrix};
use spinext::protocol::{self, monte_carlo_run, split_initial_state};
use spinext::scattering::{self, channel_report, channel_sweep, equivalence_deviation, rc_wavenumber};
use spinext::{
    CouplingModel, DensityOperator, ProtocolConfig, ScatteringConfig, Spin, SpinRegister, StateVector,
};

use manifest::{
    Experiment, ExtractConfig, Geometry, GhzwConfig, InitialState, Manifest, ScatterVerifyConfig, TargetKind,
    TelecloneConfig,
};

/// Overrides every output directory when set.
pub const OUTPUT_DIR_ENV: &str = "SPINEXT_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] spinext::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::Model(m) => CliError::Numerical(m),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Errors while turning a config into model objects are schema errors.
fn invalid(e: spinext::Error) -> CliError {
    CliError::Schema(format!("config: {e}"))
}

pub type CliResult<T> = Result<T, CliError>;

/// Summary returned to the binary; also written as `run_report.json`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub manifest_sha256: String,
    pub manifest: Manifest,
    pub resolved_config: serde_json::Value,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

struct Outputs {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path, hash: String) -> CliResult<Self> {
        let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| dir.to_path_buf());
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            hash,
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn finish(
        mut self,
        manifest: Manifest,
        resolved: impl Serialize,
        summary: serde_json::Value,
    ) -> CliResult<RunReport> {
        self.files.push("run_report.json".into());
        let report = RunReport {
            tool: "spinext",
            version: env!("CARGO_PKG_VERSION"),
            manifest_sha256: self.hash.clone(),
            manifest,
            resolved_config: serde_json::to_value(resolved).expect("config serializes"),
            outputs: self.files.clone(),
            summary,
        };
        let w = BufWriter::new(File::create(self.dir.join("run_report.json"))?);
        export::write_json(w, &self.hash, &report)?;
        Ok(report)
    }
}

fn register(twice_s: &[u32]) -> Result<SpinRegister, spinext::Error> {
    let spins = twice_s.iter().map(|&t| Spin::from_twice(t)).collect::<Result<Vec<_>, _>>()?;
    SpinRegister::new(spins)
}

fn scattering_config(
    manifest: &Manifest,
    twice_s: &[u32],
    geometry: &Geometry,
    coupling: f64,
    k: f64,
    model: CouplingModel,
) -> Result<ScatteringConfig, spinext::Error> {
    let reg = register(twice_s)?;
    let cfg = match geometry {
        Geometry::Resonant { q } => ScatteringConfig::resonant(reg, q, coupling, k)?,
        Geometry::Positions { positions } => ScatteringConfig::new(reg, positions.clone(), coupling, k, model)?,
    };
    let cfg = cfg.with_model(model).with_conventions(manifest.conventions);
    cfg.validate()?;
    Ok(cfg)
}

fn target_state(kind: TargetKind, reg: &SpinRegister) -> Result<TargetState, spinext::Error> {
    let target = match kind {
        TargetKind::SingletGeneral => {
            if !reg.len().is_multiple_of(2) {
                return Err(spinext::Error::Domain("singlet-general needs an even number of centers".into()));
            }
            entangled::singlet_general(reg.len() / 2)?
        }
        TargetKind::SingletFour => entangled::singlet_four(),
        TargetKind::Aharonov => entangled::aharonov_state(),
        TargetKind::FiveCenterSinglet => entangled::five_center_singlet()?,
    };
    if target.register() != reg {
        return Err(spinext::Error::DimensionMismatch(format!(
            "target {:?} does not live on the configured centers",
            target.label
        )));
    }
    Ok(target)
}

fn initial_state(init: &InitialState, reg: &SpinRegister) -> Result<DensityOperator, spinext::Error> {
    match init {
        InitialState::Split => {
            if reg.spins().iter().any(|s| s.twice() != 1) {
                return Err(spinext::Error::Domain("split initial state needs spin-1/2 centers".into()));
            }
            split_initial_state(reg.len())
        }
        InitialState::Product { twice_m } => Ok(StateVector::product(reg.clone(), twice_m)?.to_density()),
        InitialState::MaximallyMixed => Ok(DensityOperator::maximally_mixed(reg.clone())),
    }
}

fn mobile_state(bloch: [f64; 3]) -> Result<DensityOperator, spinext::Error> {
    let [x, y, z] = bloch;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let m = CMatrix::from_row_slice(2, 2, &[c(1.0 + z, 0.0), c(x, -y), c(x, y), c(1.0 - z, 0.0)]).scale(0.5);
    let rho = DensityOperator::new(SpinRegister::qubits(1), m)?;
    rho.validate(1e-12)?;
    Ok(rho)
}

fn protocol_config(manifest: &Manifest, cfg: &ExtractConfig) -> Result<ProtocolConfig, spinext::Error> {
    let scattering = scattering_config(manifest, &cfg.twice_s, &cfg.geometry, cfg.coupling, cfg.k, cfg.model)?;
    let initial = initial_state(&cfg.initial, &scattering.register)?;
    let target = target_state(cfg.target, &scattering.register)?;
    let mut pc = ProtocolConfig::new(scattering, initial, target, cfg.max_launches)?
        .with_solver(cfg.solver)
        .with_mobile_state(mobile_state(cfg.mobile_bloch)?)?;
    pc.require_unique = cfg.require_unique;
    Ok(pc)
}

fn run_extract(manifest: Manifest) -> CliResult<RunReport> {
    let cfg: ExtractConfig = manifest.config()?;
    let pc = protocol_config(&manifest, &cfg).map_err(invalid)?;
    let trace = protocol::run(&pc)?;
    let mut out = Outputs::new(&manifest.output_dir, manifest.hash())?;
    export::write_trace_csv(out.create("trace.csv")?, &out.hash.clone(), &trace)?;
    export::write_json(out.create("trace.json")?, &out.hash.clone(), &TraceJson::from(&trace))?;
    let mut summary = serde_json::json!({
        "launches": trace.records.len(),
        "final_fidelity": trace.last().fidelity,
        "final_success_probability": trace.last().success_probability,
        "transparent_dimension": trace.transparent_dimension,
        "reachable_rank": trace.reachable_rank,
        "transparent_weight": trace.transparent_weight,
    });
    if cfg.monte_carlo_trials > 0 {
        let mc = monte_carlo_run(&pc, cfg.monte_carlo_trials, manifest.seed)?;
        export::write_monte_carlo_csv(out.create("monte_carlo.csv")?, &out.hash.clone(), &mc)?;
        let last = mc.records.last().expect("non-empty");
        summary["monte_carlo_final_success_probability"] = last.success_probability.into();
        summary["monte_carlo_trials"] = mc.trials.into();
    }
    out.finish(manifest, &cfg, summary)
}

#[derive(Serialize)]
struct ChannelRow {
    lambda: f64,
    degeneracy: usize,
    t_re: f64,
    t_im: f64,
    transmission_probability: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    #[serde(rename = "RC")]
    rc: bool,
    rc_wavenumber: Option<f64>,
    rc_wavenumber_error: Option<String>,
    positions: Vec<f64>,
    k: f64,
    /// Spectral norm of `T_exact - T_effective`.
    operator_norm_deviation: f64,
    flux_defect_exact: f64,
    flux_defect_effective: f64,
    max_singular_value_exact: f64,
    /// `max |[S^2, P_lambda]|` over channel projectors; `S` is the centers' total spin.
    channel_commutator_defect: f64,
    channels: Vec<ChannelRow>,
}

pub fn verify_rc(manifest: Manifest) -> CliResult<RunReport> {
    let cfg: ScatterVerifyConfig = manifest.config()?;
    let sc = scattering_config(&manifest, &cfg.twice_s, &cfg.geometry, cfg.coupling, cfg.k, cfg.model)
        .map_err(invalid)?;
    let exact = scattering::transfer_matrix_transmission(&sc)?;
    let effective = scattering::effective_transmission(&sc)?;
    let channels = channel_report(&sc)?;
    let centers_s2 = linalg::kron(
        &linalg::identity(2),
        &spinext::spin::total_spin_operators(&sc.register)?.casimir(),
    );
    let (rc_wavenumber, rc_wavenumber_error) = match &cfg.expected_q {
        Some(q) => match rc_wavenumber(&sc.positions, q) {
            Ok(k) => (Some(k), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, None),
    };
    let report = VerifyReport {
        rc: sc.is_resonant(cfg.rc_tolerance),
        rc_wavenumber,
        rc_wavenumber_error,
        positions: sc.positions.clone(),
        k: sc.k,
        operator_norm_deviation: equivalence_deviation(&sc)?,
        flux_defect_exact: exact.flux_defect(),
        flux_defect_effective: effective.flux_defect(),
        max_singular_value_exact: exact.max_singular_value(),
        channel_commutator_defect: channels.commutator_defect(&centers_s2),
        channels: channels
            .channels
            .iter()
            .map(|c| ChannelRow {
                lambda: c.eigenvalue,
                degeneracy: c.degeneracy,
                t_re: c.amplitude.re,
                t_im: c.amplitude.im,
                transmission_probability: c.amplitude.norm_sqr(),
            })
            .collect(),
    };
    let mut out = Outputs::new(&manifest.output_dir, manifest.hash())?;
    export::write_json(out.create("verify_rc.json")?, &out.hash.clone(), &report)?;
    if let Some(sweep) = &cfg.sweep {
        let rows = channel_sweep(&sc, &sweep.ks, &sweep.couplings)?;
        export::write_sweep_csv(out.create("sweep.csv")?, &out.hash.clone(), &rows)?;
    }
    let summary = serde_json::json!({
        "RC": report.rc,
        "operator_norm_deviation": report.operator_norm_deviation,
        "flux_defect_exact": report.flux_defect_exact,
    });
    out.finish(manifest, &cfg, summary)
}

pub fn teleclone(manifest: Manifest) -> CliResult<RunReport> {
    let cfg: TelecloneConfig = manifest.config()?;
    let alpha = Complex64::new(cfg.input.alpha[0], cfg.input.alpha[1]);
    let beta = Complex64::new(cfg.input.beta[0], cfg.input.beta[1]);
    let setup = TelecloningSetup::new(cfg.n, alpha, beta).map_err(invalid)?;
    if cfg.samples == 0 {
        return Err(CliError::Schema("config.samples: must be at least 1".into()));
    }
    let reports = telecloning_run(&setup)?;
    let sweep = clone_fidelity_sweep(cfg.n, cfg.samples, manifest.seed)?;
    let mut out = Outputs::new(&manifest.output_dir, manifest.hash())?;
    let branches: Vec<CloneReportJson> = reports.iter().map(CloneReportJson::from).collect();
    export::write_json(
        out.create("telecloning.json")?,
        &out.hash.clone(),
        &serde_json::json!({ "setup": setup, "branches": branches }),
    )?;
    export::write_clone_sweep_csv(out.create("clone_sweep.csv")?, &out.hash.clone(), &sweep)?;
    let summary = serde_json::json!({
        "n": cfg.n,
        "samples": cfg.samples,
        "mean_fidelity": sweep.mean,
        "std_fidelity": sweep.std,
        "max_receiver_spread": reports.iter().map(|r| r.receiver_spread()).fold(0.0, f64::max),
    });
    out.finish(manifest, &cfg, summary)
}

fn run_ghzw(manifest: Manifest) -> CliResult<RunReport> {
    let cfg: GhzwConfig = manifest.config()?;
    let branches = ghz_w_run()?;
    let trace = applications::prepare_five_center_singlet(&cfg.initial_twice_m, cfg.coupling, cfg.k, cfg.max_launches)
        .map_err(|e| match e {
            spinext::Error::Domain(_) | spinext::Error::DimensionMismatch(_) => invalid(e),
            other => CliError::Numerical(other),
        })?;
    let mut out = Outputs::new(&manifest.output_dir, manifest.hash())?;
    let rows: Vec<GhzWBranchJson> = branches.iter().map(GhzWBranchJson::from).collect();
    export::write_json(out.create("ghzw.json")?, &out.hash.clone(), &serde_json::json!({ "branches": rows }))?;
    export::write_trace_csv(out.create("preparation_trace.csv")?, &out.hash.clone(), &trace)?;
    let summary = serde_json::json!({
        "outcome_probabilities": branches.iter().map(|b| (b.outcome, b.probability)).collect::<Vec<_>>(),
        "preparation_final_success_probability": trace.last().success_probability,
        "preparation_final_fidelity": trace.last().fidelity,
    });
    out.finish(manifest, &cfg, summary)
}

/// Dispatches on the manifest's experiment.
pub fn run_manifest(manifest: Manifest) -> CliResult<RunReport> {
    match manifest.experiment {
        Experiment::Extract => run_extract(manifest),
        Experiment::ScatterVerify => verify_rc(manifest),
        Experiment::Teleclone => teleclone(manifest),
        Experiment::Ghzw => run_ghzw(manifest),
    }
}

/// Requires the manifest to name `expected`.
pub fn expect_experiment(manifest: &Manifest, expected: Experiment) -> CliResult<()> {
    if manifest.experiment != expected {
        return Err(CliError::Schema(format!(
            "experiment: expected {expected:?}, found {:?}",
            manifest.experiment
        )));
    }
    Ok(())
}

/// GHZ/W run with default settings.
pub fn ghzw_default(out_dir: &Path) -> CliResult<RunReport> {
    let manifest = Manifest {
        experiment: Experiment::Ghzw,
        config: serde_json::to_value(GhzwConfig::default()).expect("serializes"),
        seed: 0,
        output_dir: out_dir.to_path_buf(),
        conventions: Default::default(),
    };
    run_ghzw(manifest)
}

pub const FIGURE2_CENTERS: [usize; 3] = [2, 4, 6];
pub const FIGURE2_COUPLING: f64 = 2.0;
pub const FIGURE2_LAUNCHES: usize = 16;

#[derive(Serialize)]
struct Figure2Series {
    n_centers: usize,
    nu: Vec<usize>,
    fidelity: Vec<f64>,
    success_probability: Vec<f64>,
}

/// Fidelity and success probability for `N = 2, 4, 6`, `J = 2`, `k = 1`, `nu = 1..16`.
pub fn figure2(out_dir: &Path) -> CliResult<RunReport> {
    // The equivalent extract manifests, hashed together.
    let config = serde_json::json!({
        "centers": FIGURE2_CENTERS,
        "coupling": FIGURE2_COUPLING,
        "k": 1.0,
        "max_launches": FIGURE2_LAUNCHES,
        "initial": "split",
        "target": "singlet-general",
    });
    let manifest = Manifest {
        experiment: Experiment::Extract,
        config: config.clone(),
        seed: 0,
        output_dir: out_dir.to_path_buf(),
        conventions: Default::default(),
    };
    let mut out = Outputs::new(out_dir, manifest.hash())?;
    let mut series = Vec::new();
    for n in FIGURE2_CENTERS {
        let pc = protocol::singlet_extraction_config(n, FIGURE2_COUPLING, 1.0, FIGURE2_LAUNCHES)?;
        let trace = protocol::run(&pc)?;
        export::write_trace_csv(out.create(&format!("figure2_N{n}.csv"))?, &out.hash.clone(), &trace)?;
        series.push(Figure2Series {
            n_centers: n,
            nu: trace.records.iter().map(|r| r.nu).collect(),
            fidelity: trace.fidelities(),
            success_probability: trace.probabilities(),
        });
    }
    export::write_json(out.create("figure2.json")?, &out.hash.clone(), &serde_json::json!({ "series": series }))?;
    let summary = serde_json::json!({
        "final": series.iter().map(|s| serde_json::json!({
            "n_centers": s.n_centers,
            "fidelity_at_4": s.fidelity[3],
            "final_success_probability": s.success_probability.last(),
        })).collect::<Vec<_>>(),
    });
    out.finish(manifest, config, summary)
}
