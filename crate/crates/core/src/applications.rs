//! Uses of extracted singlets: telecloning and GHZ/W production.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::entangled::{five_center_singlet, singlet_general, triplet_basis_4q, MAX_SINGLET_HALF};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, I, ONE, ZERO};
use crate::protocol::{run, ProtocolConfig, ProtocolTrace};
use crate::scattering::ScatteringConfig;
use crate::spin::{dicke_state, Spin, SpinRegister};
use crate::state::StateVector;

// ---------------------------------------------------------------- telecloning

/// Input qubit `alpha |up> + beta |down>` and the clone count `n`.
///
/// Site roles in the `2n + 1` qubit register: `0` is X, `1` the port,
/// `2..=n` the ancillae and `n+1..=2n` the receivers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TelecloningSetup {
    pub n: usize,
    pub alpha: C64,
    pub beta: C64,
}

impl TelecloningSetup {
    pub fn new(n: usize, alpha: C64, beta: C64) -> Result<Self> {
        if n == 0 || n > MAX_SINGLET_HALF {
            return Err(Error::domain(format!("clone count must be in 1..={MAX_SINGLET_HALF}, got {n}")));
        }
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("input state has squared norm {norm}")));
        }
        Ok(Self { n, alpha, beta })
    }

    pub fn input(&self) -> CVector {
        CVector::from_vec(vec![self.alpha, self.beta])
    }

    pub const fn x(&self) -> usize {
        0
    }

    pub const fn port(&self) -> usize {
        1
    }

    pub fn ancillae(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.n
    }

    pub fn receivers(&self) -> std::ops::RangeInclusive<usize> {
        self.n + 1..=2 * self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [BellState::PhiPlus, BellState::PhiMinus, BellState::PsiPlus, BellState::PsiMinus];

    /// Amplitudes on `|uu>, |ud>, |du>, |dd>`.
    pub fn amplitudes(self) -> [f64; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            BellState::PhiPlus => [s, 0.0, 0.0, s],
            BellState::PhiMinus => [s, 0.0, 0.0, -s],
            BellState::PsiPlus => [0.0, s, s, 0.0],
            BellState::PsiMinus => [0.0, s, -s, 0.0],
        }
    }
}

/// One Bell-measurement branch on (X, port).
#[derive(Clone, Debug)]
pub struct BellOutcome {
    pub which: BellState,
    pub probability: f64,
    /// Normalized state of ancillae ⊗ receivers.
    pub post_state: StateVector,
}

#[derive(Clone, Debug)]
pub struct CloneReport {
    pub outcome: BellOutcome,
    /// Single-qubit correction applied at every receiver.
    pub correction: CMatrix,
    /// Corrected reduced states of the receivers.
    pub receiver_states: Vec<CMatrix>,
    pub fidelities: Vec<f64>,
    /// Weight of the ancillae on each `(n-1)`-qubit Dicke state, indexed by up count.
    pub ancilla_dicke_weights: Vec<f64>,
}

impl CloneReport {
    pub fn mean_fidelity(&self) -> f64 {
        self.fidelities.iter().sum::<f64>() / self.fidelities.len() as f64
    }

    /// Largest entry-wise difference between any two receiver states.
    pub fn receiver_spread(&self) -> f64 {
        let first = &self.receiver_states[0];
        self.receiver_states
            .iter()
            .map(|r| linalg::max_abs(&(r - first)))
            .fold(0.0, f64::max)
    }
}

/// Unnormalized projection of `|phi>_X ⊗ |resource>` onto a Bell state of sites 0 and 1.
fn bell_project(full: &CVector, which: BellState) -> CVector {
    let rest = full.len() / 4;
    let c = which.amplitudes();
    CVector::from_fn(rest, |r, _| (0..4).map(|ab| full[ab * rest + r] * c[ab]).sum())
}

fn telecloning_input(setup: &TelecloningSetup) -> Result<CVector> {
    let resource = singlet_general(setup.n)?;
    Ok(linalg::kron_vec(&setup.input(), resource.amplitudes()))
}

/// Post-measurement branches without corrections.
pub fn bell_outcomes(setup: &TelecloningSetup) -> Result<Vec<BellOutcome>> {
    let full = telecloning_input(setup)?;
    let register = SpinRegister::qubits(2 * setup.n - 1);
    BellState::ALL
        .iter()
        .map(|&which| {
            let v = bell_project(&full, which);
            let probability = v.norm_squared();
            let post_state = StateVector::new(register.clone(), v).and_then(StateVector::normalized)?;
            Ok(BellOutcome {
                which,
                probability,
                post_state,
            })
        })
        .collect()
}

/// Reduced states of the receivers, in receiver order.
fn receiver_states(outcome: &BellOutcome, n: usize) -> Vec<CMatrix> {
    let dims = outcome.post_state.register.dims();
    // Receivers sit after the n - 1 ancillae in the post-measurement register.
    (n - 1..2 * n - 1)
        .map(|site| linalg::reduced_density(&outcome.post_state.amplitudes, &dims, &[site]))
        .collect()
}

fn ancilla_weights(outcome: &BellOutcome, n: usize) -> Result<Vec<f64>> {
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let rest = 1usize << n;
    let amps = &outcome.post_state.amplitudes;
    (0..n)
        .map(|k| {
            let d = dicke_state(n - 1, k)?;
            let mut reduced = CVector::zeros(rest);
            for (a, &da) in d.amplitudes.iter().enumerate() {
                if da != ZERO {
                    for r in 0..rest {
                        reduced[r] += da.conj() * amps[a * rest + r];
                    }
                }
            }
            Ok(reduced.norm_squared())
        })
        .collect()
}

/// The 24 single-qubit Clifford unitaries modulo global phase.
pub fn single_qubit_cliffords() -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = CMatrix::from_row_slice(2, 2, &[C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0)]);
    let p = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I]);
    let canonical = |m: CMatrix| {
        let a = *m.iter().find(|z| z.norm() > 1e-9).expect("unitary is non-zero");
        m * (a.conj() / a.norm())
    };
    let mut group = vec![linalg::identity(2)];
    let mut frontier = group.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for g in &frontier {
            for gen in [&h, &p] {
                let cand = canonical(gen * g);
                if !group.iter().any(|x| linalg::max_abs(&(x - &cand)) < 1e-9) {
                    group.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    group
}

/// The six Pauli eigenstates.
fn octahedron() -> Vec<TelecloningSetup> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pairs = [
        (ONE, ZERO),
        (ZERO, ONE),
        (C64::new(s, 0.0), C64::new(s, 0.0)),
        (C64::new(s, 0.0), C64::new(-s, 0.0)),
        (C64::new(s, 0.0), C64::new(0.0, s)),
        (C64::new(s, 0.0), C64::new(0.0, -s)),
    ];
    pairs
        .iter()
        .map(|&(alpha, beta)| TelecloningSetup { n: 0, alpha, beta })
        .collect()
}

/// Per-branch receiver correction, chosen from the Clifford group to maximize
/// the clone fidelity averaged over the Pauli eigenstates.
pub fn branch_corrections(n: usize) -> Result<[CMatrix; 4]> {
    let cliffords = single_qubit_cliffords();
    let probes = octahedron();
    let mut per_probe = Vec::with_capacity(probes.len());
    for probe in &probes {
        let setup = TelecloningSetup::new(n, probe.alpha, probe.beta)?;
        let outcomes = bell_outcomes(&setup)?;
        per_probe.push((setup.input(), outcomes.iter().map(|o| receiver_states(o, n)).collect::<Vec<_>>()));
    }
    let mut out: [CMatrix; 4] = std::array::from_fn(|_| linalg::identity(2));
    for (b, slot) in out.iter_mut().enumerate() {
        let score = |u: &CMatrix| -> f64 {
            per_probe
                .iter()
                .map(|(phi, branches)| {
                    branches[b]
                        .iter()
                        .map(|rho| linalg::expectation(&(u * rho * u.adjoint()), phi))
                        .sum::<f64>()
                })
                .sum()
        };
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, u) in cliffords.iter().enumerate() {
            let sc = score(u);
            if sc > best.0 + 1e-12 {
                best = (sc, i);
            }
        }
        *slot = cliffords[best.1].clone();
    }
    Ok(out)
}

fn report_with(setup: &TelecloningSetup, corrections: &[CMatrix; 4]) -> Result<Vec<CloneReport>> {
    let phi = setup.input();
    bell_outcomes(setup)?
        .into_iter()
        .zip(corrections)
        .map(|(outcome, u)| {
            let receiver_states: Vec<CMatrix> = receiver_states(&outcome, setup.n)
                .iter()
                .map(|rho| u * rho * u.adjoint())
                .collect();
            let fidelities = receiver_states.iter().map(|rho| linalg::expectation(rho, &phi)).collect();
            let ancilla_dicke_weights = ancilla_weights(&outcome, setup.n)?;
            Ok(CloneReport {
                outcome,
                correction: u.clone(),
                receiver_states,
                fidelities,
                ancilla_dicke_weights,
            })
        })
        .collect()
}

/// All four Bell branches with corrected clones.
pub fn telecloning_run(setup: &TelecloningSetup) -> Result<Vec<CloneReport>> {
    report_with(setup, &branch_corrections(setup.n)?)
}

/// Uncorrected receiver state averaged over measurement outcomes.
pub fn average_receiver_state(setup: &TelecloningSetup, receiver: usize) -> Result<CMatrix> {
    if receiver >= setup.n {
        return Err(Error::domain(format!("receiver {receiver} out of range")));
    }
    let mut out = CMatrix::zeros(2, 2);
    for o in bell_outcomes(setup)? {
        out += receiver_states(&o, setup.n)[receiver].scale(o.probability);
    }
    Ok(out)
}

/// Closed-form `phi+` branch, unnormalized:
/// `sum_nu (-1)^(n-nu) / sqrt(n+1) [alpha sqrt(nu/2n) |D_{n-1}^(nu-1)> + beta sqrt((n-nu)/2n) |D_{n-1}^(nu)>] |D_n^(n-nu)>`
/// with Dicke indices counting up spins.
pub fn phi_plus_expansion(setup: &TelecloningSetup) -> Result<StateVector> {
    let n = setup.n;
    let nf = n as f64;
    let mut v = CVector::zeros(1 << (2 * n - 1));
    for nu in 0..=n {
        let sign = if (n - nu).is_multiple_of(2) { 1.0 } else { -1.0 };
        let pre = sign / (nf + 1.0).sqrt();
        let receivers = dicke_state(n, n - nu)?;
        // With no ancillae the only "Dicke state" is the empty ket.
        let ancilla_dicke = |k: usize| -> Result<CVector> {
            if n == 1 {
                Ok(CVector::from_element(1, ONE))
            } else {
                Ok(dicke_state(n - 1, k)?.amplitudes)
            }
        };
        let mut ancilla = CVector::zeros(1 << (n - 1));
        if nu >= 1 {
            ancilla += ancilla_dicke(nu - 1)? * (setup.alpha * (nu as f64 / (2.0 * nf)).sqrt());
        }
        if nu < n {
            ancilla += ancilla_dicke(nu)? * (setup.beta * ((nf - nu as f64) / (2.0 * nf)).sqrt());
        }
        v += linalg::kron_vec(&ancilla, &receivers.amplitudes) * C64::new(pre, 0.0);
    }
    StateVector::new(SpinRegister::qubits(2 * n - 1), v)
}

/// Haar-random qubit from four standard normals.
pub fn haar_qubit(rng: &mut ChaCha8Rng) -> (C64, C64) {
    let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    (C64::new(g[0], g[1]) / norm, C64::new(g[2], g[3]) / norm)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CloneSample {
    pub index: usize,
    pub alpha: C64,
    pub beta: C64,
    /// Probability-weighted corrected fidelity, averaged over receivers.
    pub fidelity: f64,
    /// Largest deviation of any branch/receiver fidelity from `fidelity`.
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CloneSweep {
    pub n: usize,
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
    pub samples: Vec<CloneSample>,
}

/// Clone fidelity over Haar-random inputs; sample `i` uses ChaCha8 stream `i`.
pub fn clone_fidelity_sweep(n: usize, samples: usize, seed: u64) -> Result<CloneSweep> {
    if samples == 0 {
        return Err(Error::domain("samples must be at least 1"));
    }
    let corrections = branch_corrections(n)?;
    let rows = (0..samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let (alpha, beta) = haar_qubit(&mut rng);
            let setup = TelecloningSetup::new(n, alpha, beta)?;
            let reports = report_with(&setup, &corrections)?;
            let fidelity: f64 = reports.iter().map(|r| r.outcome.probability * r.mean_fidelity()).sum();
            let spread = reports
                .iter()
                .flat_map(|r| r.fidelities.iter())
                .map(|f| (f - fidelity).abs())
                .fold(0.0, f64::max);
            Ok(CloneSample {
                index,
                alpha,
                beta,
                fidelity,
                spread,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = rows.len() as f64;
    let mean = rows.iter().map(|r| r.fidelity).sum::<f64>() / m;
    let std = (rows.iter().map(|r| (r.fidelity - mean).powi(2)).sum::<f64>() / m).sqrt();
    Ok(CloneSweep {
        n,
        seed,
        mean,
        std,
        samples: rows,
    })
}

// ---------------------------------------------------------------- GHZ / W

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntanglementClass {
    Ghz,
    W,
    Other,
}

/// Classifies by support: two complementary kets of equal weight (GHZ), or
/// equal weight on every ket with a single minority spin (W). Relative phases
/// on such supports are removable by local `Z` rotations.
pub fn classify_qubit_state(v: &CVector) -> EntanglementClass {
    let n = v.len().trailing_zeros() as usize;
    let support: Vec<usize> = (0..v.len()).filter(|&i| v[i].norm() > 1e-9).collect();
    let equal = |s: &[usize]| {
        let w = v[s[0]].norm_sqr();
        s.iter().all(|&i| (v[i].norm_sqr() - w).abs() < 1e-9)
    };
    let mask = v.len() - 1;
    if support.len() == 2 && support[0] ^ support[1] == mask && equal(&support) {
        return EntanglementClass::Ghz;
    }
    if support.len() == n && equal(&support) {
        let ones: Vec<u32> = support.iter().map(|i| i.count_ones()).collect();
        if ones.iter().all(|&c| c == 1) || ones.iter().all(|&c| c as usize == n - 1) {
            return EntanglementClass::W;
        }
    }
    EntanglementClass::Other
}

/// Largest overlap with `|D_n^(k)>` over sign patterns `Z^{s_1} ... Z^{s_n}`.
pub fn dicke_fidelity_up_to_z(v: &StateVector, k: usize) -> Result<f64> {
    let n = v.register.len();
    let d = dicke_state(n, k)?;
    let mut best = 0.0f64;
    for pattern in 0usize..(1 << n) {
        // Bit `n-1-i` of a basis index is set when site `i` is down.
        let f: C64 = d
            .amplitudes
            .iter()
            .zip(v.amplitudes.iter())
            .enumerate()
            .map(|(idx, (a, b))| {
                let flips = (idx & pattern).count_ones();
                let sign = if flips % 2 == 0 { 1.0 } else { -1.0 };
                a.conj() * b * sign
            })
            .sum();
        best = best.max(f.norm_sqr());
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct GhzWBranch {
    /// Measured `m` of the spin-1 center.
    pub outcome: i32,
    pub probability: f64,
    #[serde(skip)]
    pub post_state: StateVector,
    pub class: EntanglementClass,
    /// Fidelity with the triplet state of projection `-outcome`.
    pub triplet_fidelity: f64,
    /// Fidelity with the plain Dicke state `|D_4^(2 - outcome)>` (W branches only).
    pub dicke_fidelity: Option<f64>,
    /// Same, maximized over local `Z` sign patterns.
    pub dicke_fidelity_up_to_z: Option<f64>,
    /// Schmidt rank across each single-site cut.
    pub single_site_schmidt_ranks: Vec<usize>,
}

/// Measures the spin-1 center of the five-center singlet along z.
pub fn ghz_w_run() -> Result<Vec<GhzWBranch>> {
    let target = five_center_singlet()?;
    let triplets = triplet_basis_4q()?;
    let full = target.amplitudes();
    let register = SpinRegister::qubits(4);
    [1, 0, -1]
        .iter()
        .map(|&m5| {
            let local = Spin::one().local_index(2 * m5)?;
            let v = CVector::from_fn(16, |r, _| full[r * 3 + local]);
            let probability = v.norm_squared();
            let post_state = StateVector::new(register.clone(), v)?.normalized()?;
            // m5 pairs with M = -m5; triplets are ordered M = +1, 0, -1.
            let triplet = &triplets[(1 + m5) as usize];
            let triplet_fidelity = post_state.fidelity(&triplet.state);
            let class = classify_qubit_state(&post_state.amplitudes);
            let (dicke_fidelity, dicke_fidelity_up_to_z) = if m5 == 0 {
                (None, None)
            } else {
                let k = (2 - m5) as usize;
                (
                    Some(post_state.fidelity(&dicke_state(4, k)?)),
                    Some(dicke_fidelity_up_to_z(&post_state, k)?),
                )
            };
            let dims = register.dims();
            let single_site_schmidt_ranks = (0..4)
                .map(|s| linalg::schmidt_rank(&post_state.amplitudes, &dims, &[s], 1e-9))
                .collect();
            Ok(GhzWBranch {
                outcome: m5,
                probability,
                post_state,
                class,
                triplet_fidelity,
                dicke_fidelity,
                dicke_fidelity_up_to_z,
                single_site_schmidt_ranks,
            })
        })
        .collect()
}

/// Default preparation `|u u d d>|0>` as `2m` values.
pub const FIVE_CENTER_DEFAULT_INITIAL: [i32; 5] = [1, 1, -1, -1, 0];

/// Extraction of the five-center singlet from a product state of four qubits
/// and one spin-1 (given as `2m` values), with the sector-uniqueness check.
pub fn prepare_five_center_singlet(
    initial_twice_m: &[i32],
    coupling: f64,
    k: f64,
    max_launches: usize,
) -> Result<ProtocolTrace> {
    let target = five_center_singlet()?;
    // The s_12 = s_34 = s_1234 = 1 sector must hold exactly one singlet.
    target.sector().unique()?;
    let register = target.register().clone();
    let initial = StateVector::product(register.clone(), initial_twice_m)?.to_density();
    let scattering = ScatteringConfig::resonant(register, &[1, 1, 1, 1], coupling, k)?;
    run(&ProtocolConfig::new(scattering, initial, target, max_launches)?.requiring_unique())
}
