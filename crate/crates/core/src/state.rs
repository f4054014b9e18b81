//! Pure and mixed states over a register of spins.
//!
//! Basis ordering contract: product kets are enumerated lexicographically
//! with site 0 slowest, and each local basis runs `m = s, s-1, ..., -s`.
//! For spin-1/2 sites local index 0 is `|up>` and index 1 is `|down>`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::spin::{Spin, SpinRegister};

pub const BASIS_ORDERING: &str = "product kets in lexicographic order, site 0 slowest; \
local basis m = s, s-1, ..., -s (spin-1/2: index 0 = up, 1 = down)";

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub register: SpinRegister,
    pub amplitudes: CVector,
}

impl StateVector {
    pub fn new(register: SpinRegister, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != register.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "register dimension {} but {} amplitudes",
                register.dimension(),
                amplitudes.len()
            )));
        }
        Ok(Self {
            register,
            amplitudes,
        })
    }

    /// Product ket with the given `2m` value on each site.
    pub fn product(register: SpinRegister, twice_m: &[i32]) -> Result<Self> {
        if twice_m.len() != register.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} sites but {} magnetic quantum numbers",
                register.len(),
                twice_m.len()
            )));
        }
        let mut index = 0;
        for (spin, &m) in register.spins().iter().zip(twice_m) {
            index = index * spin.dim() + spin.local_index(m)?;
        }
        let mut amplitudes = CVector::zeros(register.dimension());
        amplitudes[index] = linalg::ONE;
        Ok(Self {
            register,
            amplitudes,
        })
    }

    /// Product of spin-1/2 sites, `true` meaning up.
    pub fn qubits(ups: &[bool]) -> Self {
        let twice: Vec<i32> = ups.iter().map(|&u| if u { 1 } else { -1 }).collect();
        Self::product(SpinRegister::qubits(ups.len()), &twice).expect("valid qubit product")
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::domain("cannot normalize the zero vector"));
        }
        self.amplitudes /= C64::new(n, 0.0);
        Ok(self)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            register: self.register.concat(&other.register),
            amplitudes: linalg::kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    /// Rotates the global phase so the first non-negligible amplitude in
    /// basis order is real and positive.
    pub fn canonicalize_phase(mut self) -> Self {
        if let Some(a) = self.amplitudes.iter().find(|a| a.norm() > 1e-12).copied() {
            let phase = a.conj() / a.norm();
            self.amplitudes *= phase;
        }
        self
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            register: self.register.clone(),
            matrix: linalg::projector(&self.amplitudes),
        }
    }

    /// Amplitude of the product ket with the given `2m` values.
    pub fn amplitude(&self, twice_m: &[i32]) -> Result<C64> {
        let probe = StateVector::product(self.register.clone(), twice_m)?;
        Ok(probe.inner(self))
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            header: BASIS_ORDERING.to_string(),
            register_twice_s: self.register.spins().iter().map(|s| s.twice()).collect(),
            dimension: self.dim(),
            amplitudes: self
                .amplitudes
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm() > 1e-15)
                .map(|(i, a)| (i, a.re, a.im))
                .collect(),
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        let spins = json
            .register_twice_s
            .iter()
            .map(|&t| Spin::from_twice(t))
            .collect::<Result<Vec<_>>>()?;
        let register = SpinRegister::new(spins)?;
        if register.dimension() != json.dimension {
            return Err(Error::DimensionMismatch(format!(
                "header dimension {} does not match register dimension {}",
                json.dimension,
                register.dimension()
            )));
        }
        let mut amplitudes = CVector::zeros(json.dimension);
        for &(i, re, im) in &json.amplitudes {
            if i >= json.dimension {
                return Err(Error::domain(format!("basis index {i} out of range")));
            }
            amplitudes[i] = C64::new(re, im);
        }
        StateVector::new(register, amplitudes)
    }
}

/// Sparse JSON form: `(basis-index, re, im)` triples for non-zero amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub header: String,
    pub register_twice_s: Vec<u32>,
    pub dimension: usize,
    pub amplitudes: Vec<(usize, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    pub register: SpinRegister,
    pub matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(register: SpinRegister, matrix: CMatrix) -> Result<Self> {
        let d = register.dimension();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "register dimension {d} but {}x{} matrix",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { register, matrix })
    }

    pub fn maximally_mixed(register: SpinRegister) -> Self {
        let d = register.dimension();
        Self {
            register,
            matrix: DMatrix::identity(d, d).scale(1.0 / d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `<psi|rho|psi>`.
    pub fn fidelity(&self, psi: &StateVector) -> f64 {
        linalg::expectation(&self.matrix, &psi.amplitudes)
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (&self.matrix * op).trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Checks Hermiticity, unit trace and positivity to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.hermiticity_defect() > tol {
            return Err(Error::domain("density operator is not Hermitian"));
        }
        if (self.trace() - 1.0).abs() > tol {
            return Err(Error::domain(format!(
                "density operator has trace {}",
                self.trace()
            )));
        }
        if self.min_eigenvalue() < -tol {
            return Err(Error::domain("density operator is not positive"));
        }
        Ok(())
    }

    /// Eigen-decomposition into `(weight, pure state)` pairs with positive weight.
    pub fn ensemble(&self) -> Vec<(f64, CVector)> {
        let (vals, vecs) = linalg::hermitian_eigen(&self.matrix);
        vals.iter()
            .enumerate()
            .filter(|(_, &w)| w > 1e-14)
            .map(|(i, &w)| (w, vecs.column(i).into_owned()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&z| z == ZERO)
    }
}
