//! Reference computations that share no code path with the library routines
//! they check.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64 as C64;
use spinext::entangled::{SectorConstraint, SectorOracle};
use spinext::linalg::{self, CMatrix, CVector};
use spinext::spin;
use spinext::SpinRegister;

/// `2n`-qubit singlet from the kernel of the sector penalty operator.
pub fn oracle_singlet(n: usize) -> CVector {
    let reg = SpinRegister::qubits(2 * n);
    let oracle = SectorOracle::singlets(
        reg,
        vec![
            SectorConstraint::new((0..n).collect::<Vec<_>>(), n as u32),
            SectorConstraint::new((n..2 * n).collect::<Vec<_>>(), n as u32),
        ],
    );
    oracle.unique().expect("unique sector").amplitudes
}

fn pauli() -> [CMatrix; 3] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

fn bloch(rho: &CMatrix) -> Vector3<f64> {
    let p = pauli();
    Vector3::new((rho * &p[0]).trace().re, (rho * &p[1]).trace().re, (rho * &p[2]).trace().re)
}

/// Receiver-0 reduced state for Bell branch `b` (Bell vectors written out
/// here), computed with a dense projector on the full register.
fn branch_receiver_state(resource: &CVector, n: usize, input: &CVector, bell: &[f64; 4]) -> CMatrix {
    let full = linalg::kron_vec(input, resource);
    let bell_vec = CVector::from_iterator(4, bell.iter().map(|&x| C64::new(x, 0.0)));
    let rest = 1usize << (2 * n - 1);
    let projector = linalg::kron(&linalg::projector(&bell_vec), &linalg::identity(rest));
    let post = &projector * &full;
    let post = &post / C64::new(post.norm(), 0.0);
    // First receiver is site n + 1 of the 2n + 1 qubit register.
    linalg::reduced_density(&post, &vec![2; 2 * n + 1], &[n + 1])
}

/// Optimal clone fidelity after the best per-branch correction, from the
/// affine Bloch map `r -> M r + c` of every Bell branch: a universal cloner
/// has `c = 0` and `M = eta R` with `R` orthogonal, giving `(1 + eta) / 2`.
///
/// Returns `(fidelity, max_translation, max_singular_value_spread)`.
pub fn oracle_clone_fidelity(n: usize) -> (f64, f64, f64) {
    let resource = oracle_singlet(n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bells = [[s, 0.0, 0.0, s], [s, 0.0, 0.0, -s], [0.0, s, s, 0.0], [0.0, s, -s, 0.0]];
    let c = |re: f64, im: f64| C64::new(re, im);
    let probes = [
        CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
        CVector::from_vec(vec![c(s, 0.0), c(-s, 0.0)]),
        CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]),
        CVector::from_vec(vec![c(s, 0.0), c(0.0, -s)]),
        CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
        CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]),
    ];
    let mut etas = Vec::new();
    let mut translation: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for bell in &bells {
        let out: Vec<Vector3<f64>> = probes
            .iter()
            .map(|p| bloch(&branch_receiver_state(&resource, n, p, bell)))
            .collect();
        // Antipodal pairs give the columns of M and the translation c.
        let mut m = Matrix3::zeros();
        let mut shift = Vector3::zeros();
        for axis in 0..3 {
            m.set_column(axis, &((out[2 * axis] - out[2 * axis + 1]) / 2.0));
            shift += (out[2 * axis] + out[2 * axis + 1]) / 6.0;
        }
        let sv = DMatrix::from_column_slice(3, 3, m.as_slice()).singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        spread = spread.max(hi - lo);
        translation = translation.max(shift.norm());
        etas.push(sv.mean());
    }
    let eta = etas.iter().sum::<f64>() / etas.len() as f64;
    let eta_spread = etas.iter().map(|e| (e - eta).abs()).fold(0.0, f64::max);
    ((1.0 + eta) / 2.0, translation, spread.max(eta_spread))
}

/// `exp(-i theta n·S)` for the total spin of `register`.
pub fn collective_rotation(register: &SpinRegister, axis: [f64; 3], theta: f64) -> CMatrix {
    let ops = spin::total_spin_operators(register).expect("dense register");
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let gen = ops.sx.scale(axis[0] / norm) + ops.sy.scale(axis[1] / norm) + ops.sz.scale(axis[2] / norm);
    let (vals, vecs) = linalg::hermitian_eigen(&gen);
    let phases = CVector::from_iterator(vals.len(), vals.iter().map(|&v| C64::from_polar(1.0, -theta * v)));
    &vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint()
}

/// Two-sided binomial interval half-width `z sigma` around `p`.
pub fn binomial_halfwidth(p: f64, trials: u64, z: f64) -> f64 {
    z * (p * (1.0 - p) / trials as f64).sqrt()
}
