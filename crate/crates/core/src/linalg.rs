//! Dense complex linear algebra on small tensor-product spaces.
//!
//! Every multi-site routine here follows the crate-wide basis ordering:
//! product kets are enumerated lexicographically with site 0 slowest.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Strides of each site in the flattened product index.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * dims[i + 1];
    }
    out
}

/// Local quantum numbers (as local basis indices) of a flattened product index.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        out[i] = index % dims[i];
        index /= dims[i];
    }
    out
}

/// `op` acting on `site`, identity elsewhere.
pub fn embed(op: &CMatrix, site: usize, dims: &[usize]) -> CMatrix {
    assert_eq!(op.nrows(), dims[site]);
    let left: usize = dims[..site].iter().product();
    let right: usize = dims[site + 1..].iter().product();
    kron(&kron(&identity(left), op), &identity(right))
}

/// Applies a single-site operator to a state vector without building the
/// full embedded matrix.
pub fn apply_site(op: &CMatrix, site: usize, dims: &[usize], v: &CVector) -> CVector {
    let d = dims[site];
    let stride: usize = dims[site + 1..].iter().product();
    let block = d * stride;
    let mut out = CVector::zeros(v.len());
    for base in (0..v.len()).step_by(block) {
        for inner in 0..stride {
            for row in 0..d {
                let mut acc = ZERO;
                for col in 0..d {
                    let a = op[(row, col)];
                    if a != ZERO {
                        acc += a * v[base + col * stride + inner];
                    }
                }
                out[base + row * stride + inner] = acc;
            }
        }
    }
    out
}

/// Traces out the leading factor of dimension `d_first`.
pub fn partial_trace_first(rho: &CMatrix, d_first: usize) -> CMatrix {
    let rest = rho.nrows() / d_first;
    let mut out = CMatrix::zeros(rest, rest);
    for m in 0..d_first {
        out += rho.view((m * rest, m * rest), (rest, rest));
    }
    out
}

/// Reduced density operator of the listed sites for a pure state.
pub fn reduced_density(v: &CVector, dims: &[usize], keep: &[usize]) -> CMatrix {
    let keep_dims: Vec<usize> = keep.iter().map(|&s| dims[s]).collect();
    let dk: usize = keep_dims.iter().product();
    let rest: Vec<usize> = (0..dims.len()).filter(|s| !keep.contains(s)).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&s| dims[s]).collect();
    let dr: usize = rest_dims.iter().product();
    let st = strides(dims);

    // Reshape into a dk x dr matrix and form M M^dagger.
    let mut mat = CMatrix::zeros(dk, dr);
    for a in 0..dk {
        let ka = digits(a, &keep_dims);
        let base: usize = keep.iter().zip(&ka).map(|(&s, &m)| m * st[s]).sum();
        for b in 0..dr {
            let kb = digits(b, &rest_dims);
            let idx = base + rest.iter().zip(&kb).map(|(&s, &m)| m * st[s]).sum::<usize>();
            mat[(a, b)] = v[idx];
        }
    }
    &mat * mat.adjoint()
}

/// Number of Schmidt coefficients above `tol` across the cut `sites | rest`.
pub fn schmidt_rank(v: &CVector, dims: &[usize], sites: &[usize], tol: f64) -> usize {
    let rho = reduced_density(v, dims, sites);
    hermitian_eigen(&rho)
        .0
        .iter()
        .filter(|&&w| w > tol * tol)
        .count()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(m.nrows(), m.ncols());
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Orthonormal basis of the kernel of a positive semidefinite matrix.
pub fn psd_null_space(m: &CMatrix, tol: f64) -> Vec<CVector> {
    let (vals, vecs) = hermitian_eigen(m);
    vals.iter()
        .enumerate()
        .take_while(|(_, &w)| w < tol)
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect()
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Largest entry-wise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

/// `|<a|b>|^2` for normalized vectors.
pub fn overlap_sq(a: &CVector, b: &CVector) -> f64 {
    inner(a, b).norm_sqr()
}

/// `<psi|rho|psi>`.
pub fn expectation(rho: &CMatrix, psi: &CVector) -> f64 {
    psi.dotc(&(rho * psi)).re
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    hermitian_eigen(&h).0.first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn apply_site_matches_embedding() {
        let dims = [2, 3, 2];
        let v = CVector::from_fn(12, |i, _| C64::new(i as f64, 0.5 * i as f64));
        let op = CMatrix::from_fn(3, 3, |r, c| C64::new((r + 2 * c) as f64, r as f64 - c as f64));
        let direct = embed(&op, 1, &dims) * &v;
        let fast = apply_site(&op, 1, &dims, &v);
        assert_abs_diff_eq!((direct - fast).norm(), 0.0, epsilon = 1e-12);

        let direct = embed(&pauli_x(), 0, &dims) * &v;
        let fast = apply_site(&pauli_x(), 0, &dims, &v);
        assert_abs_diff_eq!((direct - fast).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.25), I * 0.1, -I * 0.1, c(0.75)]);
        let b = CMatrix::from_fn(3, 3, |r, cc| if r == cc { c(1.0 / 3.0) } else { ZERO });
        let r = partial_trace_first(&kron(&a, &b), 2);
        assert_abs_diff_eq!((r - b).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn bell_state_is_rank_two_across_cut() {
        let s = 1.0 / 2f64.sqrt();
        let v = CVector::from_vec(vec![c(s), ZERO, ZERO, c(s)]);
        assert_eq!(schmidt_rank(&v, &[2, 2], &[0], 1e-9), 2);
        let rho = reduced_density(&v, &[2, 2], &[1]);
        assert_abs_diff_eq!((rho - identity(2).scale(0.5)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn digits_and_strides_agree() {
        let dims = [3, 2, 4];
        let st = strides(&dims);
        for idx in 0..24 {
            let d = digits(idx, &dims);
            assert_eq!(d.iter().zip(&st).map(|(a, b)| a * b).sum::<usize>(), idx);
        }
    }
}
