//! Closed-form target states and a brute-force sector oracle to check them.
//!
//! The oracle never uses Dicke states or Clebsch-Gordan tables: it builds the
//! positive operator `(S^2 - S(S+1))^2 + sum_A (S_A^2 - j_A(j_A+1))^2` from
//! raw spin matrices and returns its kernel.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::spin::{self, dicke_state, CouplingScheme, Spin, SpinRegister};
use crate::state::StateVector;

/// Largest `n` accepted by [`singlet_general`] (register of `2n` qubits).
pub const MAX_SINGLET_HALF: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TargetLabel {
    /// `2n`-qubit singlet in the `s_{1..n} = s_{n+1..2n} = n/2` sector.
    SingletGeneral(usize),
    /// Four-qubit singlet written out term by term.
    SingletFour,
    /// Totally antisymmetric singlet of three spin-1 sites.
    Aharonov,
    /// Four qubits plus one spin-1 with `s_12 = s_34 = s_1234 = 1`, `S = 0`.
    FiveCenterSinglet,
    /// Four-qubit `s_12 = s_34 = S = 1` state with projection `M`.
    TripletM(i32),
}

/// `S_A^2` eigenvalue constraint on a group of sites, as `2j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SectorConstraint {
    pub sites: Vec<usize>,
    pub twice_j: u32,
}

impl SectorConstraint {
    pub fn new(sites: impl Into<Vec<usize>>, twice_j: u32) -> Self {
        Self {
            sites: sites.into(),
            twice_j,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TargetState {
    pub label: TargetLabel,
    pub state: StateVector,
}

impl TargetState {
    pub fn register(&self) -> &SpinRegister {
        &self.state.register
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.state.amplitudes
    }

    /// Oracle sector this state claims to be the unique member of.
    pub fn sector(&self) -> SectorOracle {
        let register = self.register().clone();
        let (constraints, twice_total) = match self.label {
            TargetLabel::SingletGeneral(n) => (
                vec![
                    SectorConstraint::new((0..n).collect::<Vec<_>>(), n as u32),
                    SectorConstraint::new((n..2 * n).collect::<Vec<_>>(), n as u32),
                ],
                0,
            ),
            TargetLabel::SingletFour => (
                vec![SectorConstraint::new([0, 1], 2), SectorConstraint::new([2, 3], 2)],
                0,
            ),
            TargetLabel::Aharonov => (vec![], 0),
            TargetLabel::FiveCenterSinglet => (
                vec![
                    SectorConstraint::new([0, 1], 2),
                    SectorConstraint::new([2, 3], 2),
                    SectorConstraint::new([0, 1, 2, 3], 2),
                ],
                0,
            ),
            TargetLabel::TripletM(_) => (
                vec![SectorConstraint::new([0, 1], 2), SectorConstraint::new([2, 3], 2)],
                2,
            ),
        };
        SectorOracle {
            register,
            constraints,
            twice_total,
            twice_m: match self.label {
                TargetLabel::TripletM(m) => Some(2 * m),
                _ => None,
            },
        }
    }

    /// `true` when `S^2 v = 0` and `S_z v = 0` to `tol`.
    pub fn is_singlet(&self, tol: f64) -> bool {
        let all: Vec<usize> = (0..self.register().len()).collect();
        let s2 = spin::casimir_apply(self.register(), &all, self.amplitudes());
        let sz = spin::sz_apply(self.register(), &all, self.amplitudes());
        s2.norm() < tol && sz.norm() < tol
    }
}

/// Brute-force simultaneous eigenspace of total and partial Casimirs.
#[derive(Clone, Debug)]
pub struct SectorOracle {
    pub register: SpinRegister,
    pub constraints: Vec<SectorConstraint>,
    pub twice_total: u32,
    /// Optional `2M` constraint on total `S_z`.
    pub twice_m: Option<i32>,
}

impl SectorOracle {
    pub fn singlets(register: SpinRegister, constraints: Vec<SectorConstraint>) -> Self {
        Self {
            register,
            constraints,
            twice_total: 0,
            twice_m: None,
        }
    }

    fn penalty(&self) -> Result<CMatrix> {
        let d = self.register.dimension();
        let all: Vec<usize> = (0..self.register.len()).collect();
        let shifted_square = |sites: &[usize], twice_j: u32| -> Result<CMatrix> {
            let j = twice_j as f64 / 2.0;
            let m = spin::casimir_matrix(&self.register, sites)? - linalg::identity(d).scale(j * (j + 1.0));
            Ok(&m * &m)
        };
        let mut q = shifted_square(&all, self.twice_total)?;
        for c in &self.constraints {
            q += shifted_square(&c.sites, c.twice_j)?;
        }
        if let Some(tm) = self.twice_m {
            let sz = spin::total_spin_operators(&self.register)?.sz - linalg::identity(d).scale(tm as f64 / 2.0);
            q += &sz * &sz;
        }
        Ok(q)
    }

    /// Orthonormal basis of the sector, each vector phase-canonicalized.
    pub fn basis(&self) -> Result<Vec<StateVector>> {
        // Non-zero eigenvalues of the penalty are bounded below by 1/4.
        linalg::psd_null_space(&self.penalty()?, 1e-6)
            .into_iter()
            .map(|v| Ok(StateVector::new(self.register.clone(), v)?.canonicalize_phase()))
            .collect()
    }

    pub fn dimension(&self) -> Result<usize> {
        Ok(self.basis()?.len())
    }

    /// The single sector vector, or a uniqueness violation.
    pub fn unique(&self) -> Result<StateVector> {
        let mut basis = self.basis()?;
        if basis.len() != 1 {
            return Err(Error::UniquenessViolation {
                dimension: basis.len(),
            });
        }
        Ok(basis.remove(0))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub label: TargetLabel,
    pub sector_dimension: usize,
    pub fidelity: f64,
    pub passed: bool,
}

/// Fidelity threshold for oracle agreement.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

/// Compares a constructed target against its brute-force sector vector.
pub fn verify_against_oracle(target: &TargetState) -> Result<OracleReport> {
    if matches!(target.label, TargetLabel::TripletM(_)) {
        return Err(Error::domain("triplet states are not checked against the singlet oracle"));
    }
    let oracle = target.sector();
    let reference = oracle.unique()?;
    let fidelity = reference.fidelity(&target.state);
    Ok(OracleReport {
        label: target.label,
        sector_dimension: 1,
        fidelity,
        passed: fidelity >= 1.0 - ORACLE_TOLERANCE,
    })
}

fn qubit_ket(bits: &str) -> StateVector {
    let ups: Vec<bool> = bits.chars().map(|c| c == 'u').collect();
    StateVector::qubits(&ups)
}

fn combine(register: SpinRegister, terms: &[(f64, &StateVector)]) -> StateVector {
    let mut v = CVector::zeros(register.dimension());
    for (w, s) in terms {
        v += &s.amplitudes * C64::new(*w, 0.0);
    }
    StateVector::new(register, v).expect("matching dimensions")
}

/// `2n`-qubit singlet `(n+1)^{-1/2} sum_nu (-1)^{n-nu} |D_n^(nu)> |D_n^(n-nu)>`.
pub fn singlet_general(n: usize) -> Result<TargetState> {
    if n == 0 {
        return Err(Error::domain("singlet needs n >= 1"));
    }
    if n > MAX_SINGLET_HALF {
        return Err(Error::SizeGuardrail {
            what: "singlet half-size n",
            size: n,
            limit: MAX_SINGLET_HALF,
        });
    }
    let register = SpinRegister::qubits(2 * n);
    let mut v = CVector::zeros(register.dimension());
    for nu in 0..=n {
        let sign = if (n - nu).is_multiple_of(2) { 1.0 } else { -1.0 };
        let term = dicke_state(n, nu)?.tensor(&dicke_state(n, n - nu)?);
        v += term.amplitudes * C64::new(sign, 0.0);
    }
    v /= C64::new(((n + 1) as f64).sqrt(), 0.0);
    Ok(TargetState {
        label: TargetLabel::SingletGeneral(n),
        state: StateVector::new(register, v)?,
    })
}

/// Four-qubit singlet `(|uu>|dd> + |dd>|uu> - |Psi+>|Psi+>)/sqrt(3)`, spelled
/// out in product kets.
pub fn singlet_four() -> TargetState {
    let r3 = 1.0 / 3f64.sqrt();
    let half_r3 = 0.5 * r3;
    let register = SpinRegister::qubits(4);
    let state = combine(
        register,
        &[
            (r3, &qubit_ket("uudd")),
            (r3, &qubit_ket("dduu")),
            (-half_r3, &qubit_ket("udud")),
            (-half_r3, &qubit_ket("uddu")),
            (-half_r3, &qubit_ket("duud")),
            (-half_r3, &qubit_ket("dudu")),
        ],
    );
    TargetState {
        label: TargetLabel::SingletFour,
        state,
    }
}

/// Three spin-1 singlet with the six `±1/sqrt(6)` terms.
pub fn aharonov_state() -> TargetState {
    let register = SpinRegister::uniform(Spin::one(), 3);
    let ket = |m: [i32; 3]| {
        StateVector::product(register.clone(), &[2 * m[0], 2 * m[1], 2 * m[2]]).expect("valid spin-1 ket")
    };
    let w = 1.0 / 6f64.sqrt();
    let state = combine(
        register.clone(),
        &[
            (w, &ket([0, 1, -1])),
            (w, &ket([1, -1, 0])),
            (w, &ket([-1, 0, 1])),
            (-w, &ket([0, -1, 1])),
            (-w, &ket([1, 0, -1])),
            (-w, &ket([-1, 1, 0])),
        ],
    );
    TargetState {
        label: TargetLabel::Aharonov,
        state,
    }
}

/// `s_12 = s_34 = S = 1` four-qubit states for `M = +1, 0, -1`, in the
/// `(12)(34)` coupled basis with Condon-Shortley phases.
///
/// `|M=0> = (|uudd> - |dduu>)/sqrt(2)`. The `M = ±1` members equal
/// `Z_1 Z_2 |D_4^(3)>` and `-Z_1 Z_2 |D_4^(1)>`; they are local-unitarily
/// equivalent to the W-class Dicke states but not equal to them, since the
/// Dicke states themselves have `S = 2`.
pub fn triplet_basis_4q() -> Result<[TargetState; 3]> {
    let scheme: CouplingScheme = "((12)(34))".parse()?;
    let register = SpinRegister::qubits(4);
    let build = |twice_m: i32| -> Result<TargetState> {
        let coupled = spin::coupled_state(&scheme, &register, &[2, 2], 2, twice_m)?;
        Ok(TargetState {
            label: TargetLabel::TripletM(twice_m / 2),
            state: coupled.state,
        })
    };
    Ok([build(2)?, build(0)?, build(-2)?])
}

/// `(|M=-1,m5=1> - |M=0,m5=0> + |M=1,m5=-1>)/sqrt(3)` on four qubits plus
/// one spin-1 site.
pub fn five_center_singlet() -> Result<TargetState> {
    let [plus, zero, minus] = triplet_basis_4q()?;
    let spin_one = SpinRegister::uniform(Spin::one(), 1);
    let site5 = |m: i32| StateVector::product(spin_one.clone(), &[2 * m]).expect("valid spin-1 ket");
    let register = SpinRegister::qubits(4).concat(&spin_one);
    let w = 1.0 / 3f64.sqrt();
    let state = combine(
        register,
        &[
            (w, &minus.state.tensor(&site5(1))),
            (-w, &zero.state.tensor(&site5(0))),
            (w, &plus.state.tensor(&site5(-1))),
        ],
    );
    Ok(TargetState {
        label: TargetLabel::FiveCenterSinglet,
        state,
    })
}

/// The product state `|u...u>|d...d>` on `2n` qubits.
pub fn split_product(n: usize) -> StateVector {
    let ups: Vec<bool> = (0..2 * n).map(|i| i < n).collect();
    StateVector::qubits(&ups)
}

/// Applies `Z` to the listed qubits.
pub fn phase_flip(state: &StateVector, sites: &[usize]) -> StateVector {
    let z = CMatrix::from_diagonal(&CVector::from_vec(vec![linalg::ONE, -linalg::ONE]));
    let dims = state.register.dims();
    let mut v = state.amplitudes.clone();
    for &s in sites {
        v = linalg::apply_site(&z, s, &dims, &v);
    }
    StateVector::new(state.register.clone(), v).expect("same register")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn n1_reduces_to_two_qubit_singlet() {
        let s = singlet_general(1).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(s.amplitudes()[1].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[2].re, -r, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[0].norm() + s.amplitudes()[3].norm(), 0.0);
    }

    #[test]
    fn n2_matches_four_qubit_expansion() {
        let general = singlet_general(2).unwrap();
        let four = singlet_four();
        assert_abs_diff_eq!((general.amplitudes() - four.amplitudes()).norm(), 0.0, epsilon = 1e-14);
        // The |Psi+>|Psi+> term carries -1/sqrt(3).
        let r3 = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(four.state.amplitude(&[1, 1, -1, -1]).unwrap().re, r3, epsilon = 1e-15);
        assert_abs_diff_eq!(four.state.amplitude(&[1, -1, 1, -1]).unwrap().re, -0.5 * r3, epsilon = 1e-15);
    }

    #[test]
    fn n3_lies_in_high_sector_null_space() {
        let s = singlet_general(3).unwrap();
        assert!(s.is_singlet(1e-12));
        let oracle = s.sector();
        assert_eq!(oracle.constraints[0].twice_j, 3);
        let reference = oracle.unique().unwrap();
        assert!(reference.fidelity(&s.state) > 1.0 - 1e-12);
    }

    #[test]
    fn size_guardrail() {
        assert!(matches!(singlet_general(7), Err(Error::SizeGuardrail { .. })));
        assert!(singlet_general(0).is_err());
        // n = 6 is built (4096 amplitudes) and is a singlet.
        assert!(singlet_general(6).unwrap().is_singlet(1e-11));
    }

    #[test]
    fn aharonov_printed_amplitudes() {
        let a = aharonov_state();
        let w = 1.0 / 6f64.sqrt();
        assert_abs_diff_eq!(a.state.amplitude(&[0, 2, -2]).unwrap().re, w, epsilon = 1e-15);
        assert_abs_diff_eq!(a.state.amplitude(&[0, -2, 2]).unwrap().re, -w, epsilon = 1e-15);
        assert!(a.is_singlet(1e-12));
    }

    #[test]
    fn aharonov_is_levi_civita() {
        // sign(permutation)-weighted sum over orderings of (1, 0, -1).
        let perms: [([i32; 3], f64); 6] = [
            ([1, 0, -1], 1.0),
            ([0, -1, 1], 1.0),
            ([-1, 1, 0], 1.0),
            ([0, 1, -1], -1.0),
            ([1, -1, 0], -1.0),
            ([-1, 0, 1], -1.0),
        ];
        let reg = SpinRegister::uniform(Spin::one(), 3);
        let mut v = CVector::zeros(27);
        for (m, sign) in perms {
            v += StateVector::product(reg.clone(), &[2 * m[0], 2 * m[1], 2 * m[2]]).unwrap().amplitudes * C64::new(sign, 0.0);
        }
        let oracle = StateVector::new(reg, v).unwrap().normalized().unwrap();
        assert!(oracle.fidelity(&aharonov_state().state) > 1.0 - 1e-14);
    }

    #[test]
    fn aharonov_antisymmetric_under_swaps() {
        let a = aharonov_state();
        let digits = |i: usize| linalg::digits(i, &[3, 3, 3]);
        for (x, y) in [(0, 1), (1, 2), (0, 2)] {
            let mut swapped = CVector::zeros(27);
            for i in 0..27 {
                let mut d = digits(i);
                d.swap(x, y);
                swapped[d[0] * 9 + d[1] * 3 + d[2]] = a.amplitudes()[i];
            }
            assert_abs_diff_eq!((swapped + a.amplitudes()).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn triplet_basis_properties() {
        let [p, z, m] = triplet_basis_4q().unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(z.state.amplitude(&[1, 1, -1, -1]).unwrap().re, r, epsilon = 1e-14);
        assert_abs_diff_eq!(z.state.amplitude(&[-1, -1, 1, 1]).unwrap().re, -r, epsilon = 1e-14);
        assert_abs_diff_eq!(p.state.inner(&m.state).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.state.inner(&z.state).norm(), 0.0, epsilon = 1e-15);
        let reg = SpinRegister::qubits(4);
        for (t, mval) in [(&p, 1.0), (&z, 0.0), (&m, -1.0)] {
            let sz = spin::sz_apply(&reg, &[0, 1, 2, 3], t.amplitudes());
            assert_abs_diff_eq!((sz - t.amplitudes() * C64::new(mval, 0.0)).norm(), 0.0, epsilon = 1e-13);
            for sites in [vec![0, 1], vec![2, 3], vec![0, 1, 2, 3]] {
                let c = spin::casimir_apply(&reg, &sites, t.amplitudes());
                assert_abs_diff_eq!((c - t.amplitudes() * C64::new(2.0, 0.0)).norm(), 0.0, epsilon = 1e-13);
            }
            assert!(t.sector().unique().unwrap().fidelity(&t.state) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn triplet_extremes_are_phase_flipped_dicke() {
        let [p, _, m] = triplet_basis_4q().unwrap();
        let d3 = dicke_state(4, 3).unwrap();
        let d1 = dicke_state(4, 1).unwrap();
        assert!(phase_flip(&d3, &[0, 1]).fidelity(&p.state) > 1.0 - 1e-14);
        assert!(phase_flip(&d1, &[0, 1]).fidelity(&m.state) > 1.0 - 1e-14);
        // Dicke states are fully symmetric (S = 2), hence orthogonal to S = 1.
        assert_abs_diff_eq!(d3.fidelity(&p.state), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn five_center_singlet_properties() {
        let s = five_center_singlet().unwrap();
        assert_abs_diff_eq!(s.state.norm(), 1.0, epsilon = 1e-14);
        assert!(s.is_singlet(1e-12));
        let a = s.state.amplitude(&[1, 1, -1, -1, 0]).unwrap();
        assert_abs_diff_eq!(a.norm_sqr(), 1.0 / 6.0, epsilon = 1e-14);
        let report = verify_against_oracle(&s).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn oracle_reports() {
        let r = verify_against_oracle(&singlet_four()).unwrap();
        assert!(r.passed);
        assert_eq!(r.sector_dimension, 1);

        let odd = SectorOracle::singlets(SpinRegister::qubits(3), vec![]);
        assert_eq!(odd.dimension().unwrap(), 0);

        let low = SectorOracle::singlets(
            SpinRegister::qubits(6),
            vec![SectorConstraint::new([0, 1, 2], 1), SectorConstraint::new([3, 4, 5], 1)],
        );
        assert_eq!(low.dimension().unwrap(), 4);
        assert_eq!(low.unique().unwrap_err(), Error::UniquenessViolation { dimension: 4 });

        assert!(verify_against_oracle(&triplet_basis_4q().unwrap()[0]).is_err());
    }

    #[test]
    fn overlap_with_split_product() {
        for n in 1..=6 {
            let s = singlet_general(n).unwrap();
            assert_abs_diff_eq!(s.state.fidelity(&split_product(n)), 1.0 / (n as f64 + 1.0), epsilon = 1e-13);
        }
    }
}
