//! Repeated injection of mobile spins, post-selected on transmission.
//!
//! Each launch applies the conditional map
//! `rho -> Tr_mobile[T (rho_mobile ⊗ rho) T^dagger] / p` to the centers and
//! multiplies the running success probability by `p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entangled::{aharonov_state, split_product, TargetState};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ZERO};
use crate::scattering::{effective_transmission, transfer_matrix_transmission, ScatteringConfig, TransmissionOperator};
use crate::spin::{Spin, SpinRegister};
use crate::state::{DensityOperator, StateVector};

/// Transmission probability below which a branch is declared extinct.
pub const EXTINCTION_THRESHOLD: f64 = 1e-15;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    #[default]
    Effective,
    TransferMatrix,
}

impl Solver {
    pub fn transmission(self, config: &ScatteringConfig) -> Result<TransmissionOperator> {
        match self {
            Solver::Effective => effective_transmission(config),
            Solver::TransferMatrix => transfer_matrix_transmission(config),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub scattering: ScatteringConfig,
    pub solver: Solver,
    pub initial_centers: DensityOperator,
    pub target: TargetState,
    pub max_launches: usize,
    pub mobile_state: DensityOperator,
    /// Refuse to run unless the initial state reaches a single transparent state.
    pub require_unique: bool,
}

impl ProtocolConfig {
    pub fn new(
        scattering: ScatteringConfig,
        initial_centers: DensityOperator,
        target: TargetState,
        max_launches: usize,
    ) -> Result<Self> {
        let cfg = Self {
            scattering,
            solver: Solver::Effective,
            initial_centers,
            target,
            max_launches,
            mobile_state: DensityOperator::maximally_mixed(SpinRegister::qubits(1)),
            require_unique: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_mobile_state(mut self, mobile: DensityOperator) -> Result<Self> {
        self.mobile_state = mobile;
        self.validate()?;
        Ok(self)
    }

    pub fn requiring_unique(mut self) -> Self {
        self.require_unique = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_launches == 0 {
            return Err(Error::domain("max_launches must be at least 1"));
        }
        self.scattering.validate()?;
        let reg = &self.scattering.register;
        if &self.initial_centers.register != reg {
            return Err(Error::DimensionMismatch("initial state register differs from the centers".into()));
        }
        if self.target.register() != reg {
            return Err(Error::DimensionMismatch("target register differs from the centers".into()));
        }
        if self.mobile_state.dim() != 2 {
            return Err(Error::DimensionMismatch("mobile state must be a single spin-1/2".into()));
        }
        self.initial_centers.validate(1e-10)?;
        self.mobile_state.validate(1e-10)?;
        Ok(())
    }
}

/// One launch: `nu` particles sent so far, all transmitted.
#[derive(Clone, Debug)]
pub struct LaunchRecord {
    pub nu: usize,
    pub fidelity: f64,
    /// Probability that all `nu` particles were transmitted.
    pub success_probability: f64,
    /// Transmission probability of the `nu`-th particle given the earlier ones.
    pub step_probability: f64,
    pub rho: DensityOperator,
}

/// Subspace of center states on which the transmission acts as the identity.
#[derive(Clone, Debug)]
pub struct TransparentSubspace {
    pub basis: Vec<CVector>,
    pub projector: CMatrix,
}

impl TransparentSubspace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    pub records: Vec<LaunchRecord>,
    pub transparent_dimension: usize,
    /// Rank of the initial state projected onto the transparent subspace.
    pub reachable_rank: usize,
    /// `Tr[Pi rho_0]`, the weight of the initial state on the transparent subspace.
    pub transparent_weight: f64,
    /// Target fidelity of the normalized projection `Pi rho_0 Pi`.
    pub projected_fidelity: f64,
}

impl ProtocolTrace {
    pub fn last(&self) -> &LaunchRecord {
        self.records.last().expect("trace is never empty")
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.fidelity).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.success_probability).collect()
    }

    /// Largest increase of `P` between consecutive launches (0 when non-increasing).
    pub fn probability_rise(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].success_probability - w[0].success_probability)
            .fold(0.0, f64::max)
    }

    /// Largest decrease of `F` between consecutive launches (0 when non-decreasing).
    pub fn fidelity_drop(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[0].fidelity - w[1].fidelity)
            .fold(0.0, f64::max)
    }
}

/// Unnormalized conditional update; returns `(sigma, p)` with `Tr sigma = p`.
fn conditional_update(rho: &CMatrix, t: &TransmissionOperator, mobile: &DensityOperator) -> CMatrix {
    let joint = linalg::kron(&mobile.matrix, rho);
    let out = &t.transmission * joint * t.transmission.adjoint();
    linalg::partial_trace_first(&out, mobile.dim())
}

/// One post-selected launch. Returns the renormalized state and the
/// transmission probability.
pub fn step(
    rho: &DensityOperator,
    transmission: &TransmissionOperator,
    mobile: &DensityOperator,
) -> Result<(DensityOperator, f64)> {
    if transmission.transmission.nrows() != mobile.dim() * rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "transmission acts on dimension {}, state has {} x {}",
            transmission.transmission.nrows(),
            mobile.dim(),
            rho.dim()
        )));
    }
    let sigma = conditional_update(&rho.matrix, transmission, mobile);
    let p = sigma.trace().re;
    if p.is_nan() || p < EXTINCTION_THRESHOLD {
        return Err(Error::ExtinctBranch {
            launch: 0,
            probability: p,
        });
    }
    let mut matrix = sigma.unscale(p);
    // Remove the anti-Hermitian rounding residue.
    matrix = (&matrix + matrix.adjoint()).scale(0.5);
    Ok((DensityOperator::new(rho.register.clone(), matrix)?, p))
}

/// Kernel of `sum_{m',m} (K_{m'm} - delta_{m'm})^dagger (K_{m'm} - delta_{m'm})`.
pub fn transparent_subspace(transmission: &TransmissionOperator) -> TransparentSubspace {
    let blocks = transmission.kraus_blocks();
    let dc = blocks[0][0].nrows();
    let mut penalty = CMatrix::zeros(dc, dc);
    for (r, row) in blocks.iter().enumerate() {
        for (c, block) in row.iter().enumerate() {
            let mut d = block.clone();
            if r == c {
                d -= linalg::identity(dc);
            }
            penalty += d.adjoint() * d;
        }
    }
    let basis = linalg::psd_null_space(&penalty, 1e-10);
    let projector = basis.iter().fold(CMatrix::zeros(dc, dc), |acc, v| acc + linalg::projector(v));
    TransparentSubspace { basis, projector }
}

fn rank(m: &CMatrix, tol: f64) -> usize {
    linalg::hermitian_eigen(m).0.iter().filter(|&&w| w > tol).count()
}

/// Exact trace of `max_launches` post-selected launches.
pub fn run(config: &ProtocolConfig) -> Result<ProtocolTrace> {
    config.validate()?;
    let t = config.solver.transmission(&config.scattering)?;
    let transparent = transparent_subspace(&t);
    let pi = &transparent.projector;
    let projected = pi * &config.initial_centers.matrix * pi;
    let transparent_weight = projected.trace().re;
    let reachable_rank = rank(&projected, 1e-12);
    if config.require_unique && reachable_rank != 1 {
        return Err(Error::UniquenessViolation {
            dimension: reachable_rank,
        });
    }
    let projected_fidelity = if transparent_weight > 1e-14 {
        linalg::expectation(&projected, config.target.amplitudes()) / transparent_weight
    } else {
        0.0
    };

    let mut rho = config.initial_centers.clone();
    let mut cumulative = 1.0;
    let mut records = Vec::with_capacity(config.max_launches);
    for nu in 1..=config.max_launches {
        let (next, p) = step(&rho, &t, &config.mobile_state).map_err(|e| match e {
            Error::ExtinctBranch { probability, .. } => Error::ExtinctBranch { launch: nu, probability },
            other => other,
        })?;
        cumulative *= p;
        rho = next;
        records.push(LaunchRecord {
            nu,
            fidelity: rho.fidelity(&config.target.state),
            success_probability: cumulative,
            step_probability: p,
            rho: rho.clone(),
        });
    }
    Ok(ProtocolTrace {
        records,
        transparent_dimension: transparent.dimension(),
        reachable_rank,
        transparent_weight,
        projected_fidelity,
    })
}

/// Per-launch statistics over sampled trajectories.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloRecord {
    pub nu: usize,
    pub survivors: u64,
    pub success_probability: f64,
    /// Binomial standard error `sqrt(P (1 - P) / trials)`.
    pub probability_std_error: f64,
    /// Target fidelity averaged over surviving trajectories.
    pub fidelity: f64,
    pub fidelity_std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloTrace {
    pub trials: u64,
    pub seed: u64,
    pub records: Vec<MonteCarloRecord>,
}

/// Index drawn from a discrete distribution with the given non-negative weights.
fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

struct Accumulator {
    survivors: Vec<u64>,
    fidelity_sum: Vec<f64>,
    fidelity_sq: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            survivors: vec![0; n],
            fidelity_sum: vec![0.0; n],
            fidelity_sq: vec![0.0; n],
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for i in 0..self.survivors.len() {
            self.survivors[i] += other.survivors[i];
            self.fidelity_sum[i] += other.fidelity_sum[i];
            self.fidelity_sq[i] += other.fidelity_sq[i];
        }
    }
}

/// Trajectory sampling of the same post-selected protocol.
///
/// Trial `i` uses a ChaCha8 stream `i` keyed by `seed`, so results do not
/// depend on thread scheduling. Each launch draws the incoming mobile spin
/// from the eigen-ensemble of the mobile state, accepts with the
/// transmission probability, and resolves the outgoing mobile spin along z.
pub fn monte_carlo_run(config: &ProtocolConfig, trials: u64, seed: u64) -> Result<MonteCarloTrace> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let t = config.solver.transmission(&config.scattering)?;
    let kraus = t.kraus_blocks();
    let centers = config.initial_centers.ensemble();
    let mobile = config.mobile_state.ensemble();
    let center_weights: Vec<f64> = centers.iter().map(|(w, _)| *w).collect();
    let mobile_weights: Vec<f64> = mobile.iter().map(|(w, _)| *w).collect();
    // Kraus operators for each incoming mobile eigenvector and outgoing z state.
    let kraus_in: Vec<[CMatrix; 2]> = mobile
        .iter()
        .map(|(_, chi)| {
            let pick = |out: usize| {
                let mut k = CMatrix::zeros(kraus[0][0].nrows(), kraus[0][0].ncols());
                for (m, &amp) in chi.iter().enumerate() {
                    if amp != ZERO {
                        k += &kraus[out][m] * amp;
                    }
                }
                k
            };
            [pick(0), pick(1)]
        })
        .collect();
    let target = config.target.amplitudes();
    let n = config.max_launches;

    let trajectory = |trial: u64, acc: &mut Accumulator| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut psi = centers[sample_index(&mut rng, &center_weights)].1.clone();
        for nu in 0..n {
            let ops = &kraus_in[sample_index(&mut rng, &mobile_weights)];
            let branches = [&ops[0] * &psi, &ops[1] * &psi];
            let weights = [branches[0].norm_squared(), branches[1].norm_squared()];
            let accept = weights[0] + weights[1];
            if rng.random::<f64>() >= accept {
                return;
            }
            let out = sample_index(&mut rng, &weights);
            psi = branches[out].unscale(weights[out].sqrt());
            let f = linalg::overlap_sq(target, &psi);
            acc.survivors[nu] += 1;
            acc.fidelity_sum[nu] += f;
            acc.fidelity_sq[nu] += f * f;
        }
    };

    const CHUNK: u64 = 1024;
    let chunks: Vec<Accumulator> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(n);
            for trial in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                trajectory(trial, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new(n);
    for c in &chunks {
        total.merge(c);
    }

    let records = (0..n)
        .map(|i| {
            let s = total.survivors[i];
            let p = s as f64 / trials as f64;
            let (mean, se) = if s > 0 {
                let mean = total.fidelity_sum[i] / s as f64;
                let var = (total.fidelity_sq[i] / s as f64 - mean * mean).max(0.0);
                (mean, (var / s as f64).sqrt())
            } else {
                (0.0, 0.0)
            };
            MonteCarloRecord {
                nu: i + 1,
                survivors: s,
                success_probability: p,
                probability_std_error: (p * (1.0 - p) / trials as f64).sqrt(),
                fidelity: mean,
                fidelity_std_error: se,
            }
        })
        .collect();
    Ok(MonteCarloTrace { trials, seed, records })
}

/// `|u...u>|d...d>` for `n_centers` qubits (`n_centers` even).
pub fn split_initial_state(n_centers: usize) -> Result<DensityOperator> {
    if n_centers == 0 || !n_centers.is_multiple_of(2) {
        return Err(Error::domain(format!("need an even, positive number of centers, got {n_centers}")));
    }
    Ok(split_product(n_centers / 2).to_density())
}

/// Singlet extraction from `|u...u>|d...d>` on evenly spaced qubit centers
/// with `k d = pi`.
pub fn singlet_extraction_config(n_centers: usize, coupling: f64, k: f64, max_launches: usize) -> Result<ProtocolConfig> {
    let initial = split_initial_state(n_centers)?;
    let target = crate::entangled::singlet_general(n_centers / 2)?;
    let q = vec![1; n_centers - 1];
    let scattering = ScatteringConfig::resonant(SpinRegister::qubits(n_centers), &q, coupling, k)?;
    ProtocolConfig::new(scattering, initial, target, max_launches)
}

/// Default product component `|0, 1, -1>` (values of `m`).
pub const AHARONOV_DEFAULT_INITIAL: [i32; 3] = [0, 1, -1];

/// Extraction of the three-spin-1 singlet from a product state given as `m` values.
pub fn aharonov_extraction(initial_m: &[i32], coupling: f64, k: f64, max_launches: usize) -> Result<ProtocolTrace> {
    if initial_m.len() != 3 {
        return Err(Error::DimensionMismatch("three spin-1 centers expected".into()));
    }
    let register = SpinRegister::uniform(Spin::one(), 3);
    let twice: Vec<i32> = initial_m.iter().map(|m| 2 * m).collect();
    let initial = StateVector::product(register.clone(), &twice)?.to_density();
    let scattering = ScatteringConfig::resonant(register, &[1, 1], coupling, k)?;
    run(&ProtocolConfig::new(scattering, initial, aharonov_state(), max_launches)?)
}
