//! Transmission of a mobile spin-1/2 through spin-carrying delta barriers.
//!
//! Units: `hbar = 1`, kinetic energy `-(1/2m) d^2/dx^2` with `m` taken from
//! [`Conventions`]. A barrier `J C_i delta(x - x_i)` makes the derivative
//! jump by `2 m J C_i psi(x_i)`; a single barrier with coupling eigenvalue
//! `lambda` transmits with amplitude `1 / (1 + i m J lambda / k)`.
//!
//! Operators act on the joint space `mobile ⊗ centers`, mobile spin first.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE};
use crate::spin::{self, Spin, SpinRegister, DENSE_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingModel {
    /// `sigma · S_i`
    Heisenberg,
    /// `sigma_x S_ix + sigma_y S_iy`
    Xy,
}

impl CouplingModel {
    pub fn name(self) -> &'static str {
        match self {
            CouplingModel::Heisenberg => "heisenberg",
            CouplingModel::Xy => "xy",
        }
    }
}

/// How the mobile-particle spin operator is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaNormalization {
    /// `sigma = (Pauli matrices) / 2`
    SpinHalf,
    /// Bare Pauli matrices.
    Pauli,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Conventions {
    pub mass: f64,
    pub sigma: SigmaNormalization,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            mass: 1.0,
            sigma: SigmaNormalization::SpinHalf,
        }
    }
}

impl Conventions {
    fn sigma_scale(&self) -> f64 {
        match self.sigma {
            SigmaNormalization::SpinHalf => 1.0,
            SigmaNormalization::Pauli => 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringConfig {
    pub register: SpinRegister,
    pub positions: Vec<f64>,
    /// Contact coupling strength `J`.
    pub coupling: f64,
    /// Wavenumber `k`.
    pub k: f64,
    pub model: CouplingModel,
    pub conventions: Conventions,
}

impl ScatteringConfig {
    pub fn new(
        register: SpinRegister,
        positions: Vec<f64>,
        coupling: f64,
        k: f64,
        model: CouplingModel,
    ) -> Result<Self> {
        let cfg = Self {
            register,
            positions,
            coupling,
            k,
            model,
            conventions: Conventions::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Centers spaced so that `k (x_{j+1} - x_j) = q_j pi`, first center at 0.
    pub fn resonant(register: SpinRegister, q: &[u32], coupling: f64, k: f64) -> Result<Self> {
        if q.len() + 1 != register.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} centers need {} spacings, got {}",
                register.len(),
                register.len() - 1,
                q.len()
            )));
        }
        if k <= 0.0 {
            return Err(Error::domain(format!("wavenumber must be positive, got {k}")));
        }
        let mut positions = vec![0.0];
        for &qj in q {
            if qj == 0 {
                return Err(Error::domain("resonance integers must be positive"));
            }
            positions.push(positions.last().unwrap() + qj as f64 * PI / k);
        }
        Self::new(register, positions, coupling, k, CouplingModel::Heisenberg)
    }

    pub fn with_model(mut self, model: CouplingModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_conventions(mut self, conventions: Conventions) -> Self {
        self.conventions = conventions;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.register.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} centers but {} positions",
                self.register.len(),
                self.positions.len()
            )));
        }
        if self.positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("positions must be strictly increasing"));
        }
        if self.k.is_nan() || self.k <= 0.0 || !self.k.is_finite() {
            return Err(Error::domain(format!("wavenumber must be positive, got {}", self.k)));
        }
        if !self.coupling.is_finite() {
            return Err(Error::domain("coupling must be finite"));
        }
        if self.conventions.mass.is_nan() || self.conventions.mass <= 0.0 {
            return Err(Error::domain("mass must be positive"));
        }
        let d = self.joint_dim();
        if d > DENSE_LIMIT {
            return Err(Error::SizeGuardrail {
                what: "joint spin space",
                size: d,
                limit: DENSE_LIMIT,
            });
        }
        Ok(())
    }

    /// Mobile spin-1/2 followed by the centers.
    pub fn joint_register(&self) -> SpinRegister {
        self.register.prepend(Spin::half())
    }

    pub fn joint_dim(&self) -> usize {
        2 * self.register.dimension()
    }

    pub fn centers_dim(&self) -> usize {
        self.register.dimension()
    }

    /// Whether all spacings satisfy `k d_j = q_j pi` for integer `q_j` to `tol`.
    pub fn is_resonant(&self, tol: f64) -> bool {
        self.positions.windows(2).all(|w| {
            let q = self.k * (w[1] - w[0]) / PI;
            (q - q.round()).abs() < tol && q.round() >= 1.0
        })
    }

    /// `m J / k`: multiplies a coupling eigenvalue in the channel parameter.
    fn strength(&self) -> f64 {
        self.conventions.mass * self.coupling / self.k
    }
}

/// Spin coupling operator between the mobile spin and center `site`.
pub fn site_coupling(config: &ScatteringConfig, site: usize) -> CMatrix {
    let joint = config.joint_register();
    let dims = joint.dims();
    let sigma = spin::make_spin_operators(Spin::half());
    let center = spin::make_spin_operators(config.register.spins()[site]);
    let components: &[usize] = match config.model {
        CouplingModel::Heisenberg => &[0, 1, 2],
        CouplingModel::Xy => &[0, 1],
    };
    let d = joint.dimension();
    let mut out = CMatrix::zeros(d, d);
    for &a in components {
        let left = linalg::embed(sigma.components()[a], 0, &dims);
        let right = linalg::embed(center.components()[a], site + 1, &dims);
        out += left * right;
    }
    out.scale(config.conventions.sigma_scale())
}

/// Coupling of the mobile spin to the total center spin.
pub fn total_coupling(config: &ScatteringConfig) -> CMatrix {
    let d = config.joint_dim();
    (0..config.register.len()).fold(CMatrix::zeros(d, d), |acc, i| acc + site_coupling(config, i))
}

/// `t(lambda) = 1 / (1 + i m J lambda / k)`.
pub fn channel_amplitude(config: &ScatteringConfig, lambda: f64) -> C64 {
    ONE / (ONE + I * (config.strength() * lambda))
}

#[derive(Clone, Debug)]
pub struct Channel {
    pub eigenvalue: f64,
    pub degeneracy: usize,
    pub projector: CMatrix,
    pub amplitude: C64,
}

#[derive(Clone, Debug)]
pub struct ChannelDecomposition {
    pub channels: Vec<Channel>,
    pub k: f64,
    pub coupling: f64,
    pub model: CouplingModel,
}

impl ChannelDecomposition {
    /// `max |sum_lambda P_lambda - 1|`.
    pub fn resolution_defect(&self) -> f64 {
        let d = self.channels[0].projector.nrows();
        let sum = self
            .channels
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, c| acc + &c.projector);
        linalg::max_abs(&(sum - linalg::identity(d)))
    }

    /// Largest `max |[P_lambda, op]|` over channels.
    pub fn commutator_defect(&self, op: &CMatrix) -> f64 {
        self.channels
            .iter()
            .map(|c| linalg::max_abs(&linalg::commutator(&c.projector, op)))
            .fold(0.0, f64::max)
    }

    pub fn channel(&self, eigenvalue: f64) -> Option<&Channel> {
        self.channels.iter().find(|c| (c.eigenvalue - eigenvalue).abs() < 1e-8)
    }
}

/// Spectral decomposition of the total coupling operator.
pub fn channel_report(config: &ScatteringConfig) -> Result<ChannelDecomposition> {
    config.validate()?;
    let coupling = total_coupling(config);
    let (vals, vecs) = linalg::hermitian_eigen(&coupling);
    let d = vals.len();
    let mut channels: Vec<Channel> = Vec::new();
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j < d && (vals[j] - vals[i]).abs() < 1e-8 {
            j += 1;
        }
        let block = vecs.columns(i, j - i);
        let lambda = vals[i..j].iter().sum::<f64>() / (j - i) as f64;
        // Snap to the exact value when it is numerically zero.
        let lambda = if lambda.abs() < 1e-12 { 0.0 } else { lambda };
        channels.push(Channel {
            eigenvalue: lambda,
            degeneracy: j - i,
            projector: block * block.adjoint(),
            amplitude: channel_amplitude(config, lambda),
        });
        i = j;
    }
    Ok(ChannelDecomposition {
        channels,
        k: config.k,
        coupling: config.coupling,
        model: config.model,
    })
}

/// Transmitted and reflected amplitude operators on the joint spin space.
#[derive(Clone, Debug)]
pub struct TransmissionOperator {
    pub transmission: CMatrix,
    pub reflection: CMatrix,
    pub k: f64,
}

impl TransmissionOperator {
    /// `max |T^dagger T + R^dagger R - 1|`.
    pub fn flux_defect(&self) -> f64 {
        let d = self.transmission.nrows();
        let flux = self.transmission.adjoint() * &self.transmission + self.reflection.adjoint() * &self.reflection;
        linalg::max_abs(&(flux - linalg::identity(d)))
    }

    pub fn max_singular_value(&self) -> f64 {
        linalg::op_norm(&self.transmission)
    }

    /// Transmitted-amplitude blocks `<m'| T |m>` on the centers, indexed `[m'][m]`.
    pub fn kraus_blocks(&self) -> [[CMatrix; 2]; 2] {
        let dc = self.transmission.nrows() / 2;
        let block = |r: usize, c: usize| self.transmission.view((r * dc, c * dc), (dc, dc)).into_owned();
        [[block(0, 0), block(0, 1)], [block(1, 0), block(1, 1)]]
    }
}

/// Single-barrier form with the total center spin: `T = sum t(lambda) P_lambda`.
pub fn effective_transmission(config: &ScatteringConfig) -> Result<TransmissionOperator> {
    let channels = channel_report(config)?;
    let d = config.joint_dim();
    let mut t = CMatrix::zeros(d, d);
    let mut r = CMatrix::zeros(d, d);
    for ch in &channels.channels {
        t += &ch.projector * ch.amplitude;
        r += &ch.projector * (ch.amplitude - ONE);
    }
    Ok(TransmissionOperator {
        transmission: t,
        reflection: r,
        k: config.k,
    })
}

/// Condition number above which the transfer-matrix extraction is refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Exact multi-barrier solution by composing operator-valued transfer
/// matrices over `(right-moving, left-moving)` amplitude pairs.
///
/// Amplitudes are referred to global plane waves `e^{±ikx}`, so the free
/// propagation between barriers is carried by the barrier matrices
/// themselves: a barrier at `x` with `g = m J C / (i k)` maps
/// `(a, b) -> ((1+g) a + g e^{-2ikx} b, -g e^{2ikx} a + (1-g) b)`.
pub fn transfer_matrix_transmission(config: &ScatteringConfig) -> Result<TransmissionOperator> {
    config.validate()?;
    let d = config.joint_dim();
    let id = linalg::identity(d);
    let mut total = linalg::identity(2 * d);
    for (site, &x) in config.positions.iter().enumerate() {
        let g = site_coupling(config, site) * (-I * config.strength());
        let phase = C64::from_polar(1.0, 2.0 * config.k * x);
        let mut barrier = CMatrix::zeros(2 * d, 2 * d);
        barrier.view_mut((0, 0), (d, d)).copy_from(&(&id + &g));
        barrier.view_mut((0, d), (d, d)).copy_from(&(&g * phase.conj()));
        barrier.view_mut((d, 0), (d, d)).copy_from(&(&g * (-phase)));
        barrier.view_mut((d, d), (d, d)).copy_from(&(&id - &g));
        total = barrier * total;
    }
    let m11 = total.view((0, 0), (d, d)).into_owned();
    let m12 = total.view((0, d), (d, d)).into_owned();
    let m21 = total.view((d, 0), (d, d)).into_owned();
    let m22 = total.view((d, d), (d, d)).into_owned();

    let sv = m22.clone().singular_values();
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let condition = smax / smin;
    if condition.is_nan() || condition >= CONDITION_LIMIT {
        return Err(Error::NumericalInstability { k: config.k, condition });
    }
    // Incoming a from the left, nothing incoming from the right:
    // 0 = M21 a + M22 R a, T a = M11 a + M12 R a.
    let reflection = -m22
        .lu()
        .solve(&m21)
        .ok_or(Error::NumericalInstability { k: config.k, condition })?;
    let transmission = m11 + m12 * &reflection;
    Ok(TransmissionOperator {
        transmission,
        reflection,
        k: config.k,
    })
}

/// Common wavenumber satisfying `k (x_{j+1} - x_j) = q_j pi` for every spacing.
pub fn rc_wavenumber(positions: &[f64], q: &[u32]) -> Result<f64> {
    if positions.len() < 2 {
        return Err(Error::domain("resonance conditions need at least two positions"));
    }
    if q.len() + 1 != positions.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} spacings but {} resonance integers",
            positions.len() - 1,
            q.len()
        )));
    }
    if positions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("positions must be strictly increasing"));
    }
    if q.contains(&0) {
        return Err(Error::domain("resonance integers must be positive"));
    }
    let ks: Vec<f64> = positions
        .windows(2)
        .zip(q)
        .map(|(w, &qj)| qj as f64 * PI / (w[1] - w[0]))
        .collect();
    let k = ks[0];
    for (index, &kj) in ks.iter().enumerate().skip(1) {
        if ((kj - k) / k).abs() > 1e-12 {
            return Err(Error::InconsistentResonance {
                index,
                required: kj,
                expected: k,
            });
        }
    }
    Ok(k)
}

/// One row of a channel sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: f64,
    pub coupling: f64,
    pub model: CouplingModel,
    pub lambda: f64,
    pub transmission_probability: f64,
    pub phase: f64,
}

/// Channel transmissions over a grid of wavenumbers and couplings.
pub fn channel_sweep(base: &ScatteringConfig, ks: &[f64], couplings: &[f64]) -> Result<Vec<SweepRow>> {
    let lambdas: Vec<f64> = channel_report(base)?.channels.iter().map(|c| c.eigenvalue).collect();
    let grid: Vec<(f64, f64)> = ks
        .iter()
        .flat_map(|&k| couplings.iter().map(move |&j| (k, j)))
        .collect();
    grid.par_iter()
        .map(|&(k, coupling)| {
            let cfg = ScatteringConfig {
                k,
                coupling,
                ..base.clone()
            };
            cfg.validate()?;
            Ok(lambdas
                .iter()
                .map(|&lambda| {
                    let t = channel_amplitude(&cfg, lambda);
                    SweepRow {
                        k,
                        coupling,
                        model: cfg.model,
                        lambda,
                        transmission_probability: t.norm_sqr(),
                        phase: t.arg(),
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()
        .map(|rows| rows.into_iter().flatten().collect())
}

/// `||T_exact - T_effective||` (spectral norm).
pub fn equivalence_deviation(config: &ScatteringConfig) -> Result<f64> {
    let exact = transfer_matrix_transmission(config)?;
    let effective = effective_transmission(config)?;
    Ok(linalg::op_norm(&(exact.transmission - effective.transmission)))
}
