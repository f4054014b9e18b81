//! Angular-momentum kinematics: spin matrices, Clebsch-Gordan coupling,
//! coupled bases along a coupling tree, and Dicke states.
//!
//! Spin and magnetic quantum numbers are carried as twice their value so
//! half-integers stay exact. Phases follow the Condon-Shortley convention.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, I};
use crate::state::StateVector;

/// Dense operators on the full register are refused beyond this dimension.
pub const DENSE_LIMIT: usize = 1024;

/// Largest twice-angular-momentum accepted by the Clebsch-Gordan tables.
const CG_TWICE_LIMIT: u32 = 32;

/// Spin quantum number of a physical particle, stored as `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Spin(u32);

impl Spin {
    /// Spins above 3 are outside this crate's dimension guardrail.
    pub const MAX_TWICE: u32 = 6;

    pub fn from_twice(twice: u32) -> Result<Self> {
        match twice {
            0 => Err(Error::domain("spin-0 particles are not supported")),
            t if t > Self::MAX_TWICE => Err(Error::SizeGuardrail {
                what: "twice spin",
                size: t as usize,
                limit: Self::MAX_TWICE as usize,
            }),
            t => Ok(Spin(t)),
        }
    }

    pub fn from_value(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::domain(format!("{s} is not a valid spin quantum number")));
        }
        Self::from_twice(twice.round() as u32)
    }

    pub const fn half() -> Self {
        Spin(1)
    }

    pub const fn one() -> Self {
        Spin(2)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Local basis index of `m` (given as `2m`): 0 for `m = s`.
    pub fn local_index(self, twice_m: i32) -> Result<usize> {
        let t = self.0 as i32;
        if twice_m.abs() > t || (t - twice_m) % 2 != 0 {
            return Err(Error::domain(format!(
                "m = {}/2 is not a projection of s = {}/2",
                twice_m, t
            )));
        }
        Ok(((t - twice_m) / 2) as usize)
    }

    /// `2m` values in local basis order.
    pub fn twice_m_values(self) -> Vec<i32> {
        let t = self.0 as i32;
        (0..=self.0 as i32).map(|i| t - 2 * i).collect()
    }
}

impl TryFrom<u32> for Spin {
    type Error = Error;
    fn try_from(t: u32) -> Result<Self> {
        Spin::from_twice(t)
    }
}

impl From<Spin> for u32 {
    fn from(s: Spin) -> u32 {
        s.0
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Ordered list of site spins; fixes the composite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinRegister(Vec<Spin>);

impl SpinRegister {
    pub fn new(spins: Vec<Spin>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::domain("empty spin register"));
        }
        Ok(Self(spins))
    }

    pub fn uniform(spin: Spin, n: usize) -> Self {
        assert!(n > 0, "empty spin register");
        Self(vec![spin; n])
    }

    pub fn qubits(n: usize) -> Self {
        Self::uniform(Spin::half(), n)
    }

    pub fn spins(&self) -> &[Spin] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.iter().map(|s| s.dim()).collect()
    }

    pub fn dimension(&self) -> usize {
        self.0.iter().map(|s| s.dim()).product()
    }

    pub fn concat(&self, other: &SpinRegister) -> SpinRegister {
        let mut spins = self.0.clone();
        spins.extend_from_slice(&other.0);
        SpinRegister(spins)
    }

    pub fn prepend(&self, spin: Spin) -> SpinRegister {
        let mut spins = vec![spin];
        spins.extend_from_slice(&self.0);
        SpinRegister(spins)
    }
}

/// Cartesian and ladder matrices of a single spin in the `m = s..-s` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinOperators {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
}

impl SpinOperators {
    pub fn casimir(&self) -> CMatrix {
        &self.sx * &self.sx + &self.sy * &self.sy + &self.sz * &self.sz
    }

    pub fn components(&self) -> [&CMatrix; 3] {
        [&self.sx, &self.sy, &self.sz]
    }

    fn from_ladder(sz: CMatrix, s_plus: CMatrix) -> Self {
        let s_minus = s_plus.adjoint();
        let sx = (&s_plus + &s_minus).scale(0.5);
        let sy = (&s_plus - &s_minus) * (-I * 0.5);
        Self {
            sx,
            sy,
            sz,
            s_plus,
            s_minus,
        }
    }
}

/// Real `(S_z, S_+)` for any `2j`, no guardrail.
fn ladder_real(twice_j: u32) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = twice_j as usize + 1;
    let j = twice_j as f64 / 2.0;
    let m = |i: usize| j - i as f64;
    let sz = DMatrix::from_fn(d, d, |r, c| if r == c { m(r) } else { 0.0 });
    let sp = DMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            (j * (j + 1.0) - m(c) * (m(c) + 1.0)).sqrt()
        } else {
            0.0
        }
    });
    (sz, sp)
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

pub fn make_spin_operators(spin: Spin) -> SpinOperators {
    let (sz, sp) = ladder_real(spin.twice());
    SpinOperators::from_ladder(to_complex(&sz), to_complex(&sp))
}

/// Sum of single-site spin operators over `sites` (all sites when `None`).
pub fn collective_operators(register: &SpinRegister, sites: Option<&[usize]>) -> Result<SpinOperators> {
    let d = register.dimension();
    if d > DENSE_LIMIT {
        return Err(Error::SizeGuardrail {
            what: "dense register operator",
            size: d,
            limit: DENSE_LIMIT,
        });
    }
    let dims = register.dims();
    let all: Vec<usize> = (0..register.len()).collect();
    let sites = sites.unwrap_or(&all);
    let mut sz = CMatrix::zeros(d, d);
    let mut sp = CMatrix::zeros(d, d);
    for &i in sites {
        let ops = make_spin_operators(register.spins()[i]);
        sz += linalg::embed(&ops.sz, i, &dims);
        sp += linalg::embed(&ops.s_plus, i, &dims);
    }
    Ok(SpinOperators::from_ladder(sz, sp))
}

/// Total spin `S = sum_i S_i` on the composite space.
pub fn total_spin_operators(register: &SpinRegister) -> Result<SpinOperators> {
    collective_operators(register, None)
}

/// Dense partial Casimir `S^2` restricted to `sites`.
pub fn casimir_matrix(register: &SpinRegister, sites: &[usize]) -> Result<CMatrix> {
    Ok(collective_operators(register, Some(sites))?.casimir())
}

/// Applies the partial Casimir of `sites` to `v` without forming matrices.
pub fn casimir_apply(register: &SpinRegister, sites: &[usize], v: &CVector) -> CVector {
    let dims = register.dims();
    let collective = |pick: fn(&SpinOperators) -> &CMatrix, x: &CVector| -> CVector {
        let mut out = CVector::zeros(x.len());
        for &i in sites {
            let ops = make_spin_operators(register.spins()[i]);
            out += linalg::apply_site(pick(&ops), i, &dims, x);
        }
        out
    };
    let sz_v = collective(|o| &o.sz, v);
    let szz = collective(|o| &o.sz, &sz_v);
    let sm_v = collective(|o| &o.s_minus, v);
    let sp_sm = collective(|o| &o.s_plus, &sm_v);
    let sp_v = collective(|o| &o.s_plus, v);
    let sm_sp = collective(|o| &o.s_minus, &sp_v);
    szz + (sp_sm + sm_sp).scale(0.5)
}

/// Applies total `S_z` of `sites` to `v`.
pub fn sz_apply(register: &SpinRegister, sites: &[usize], v: &CVector) -> CVector {
    let dims = register.dims();
    let mut out = CVector::zeros(v.len());
    for &i in sites {
        let ops = make_spin_operators(register.spins()[i]);
        out += linalg::apply_site(&ops.sz, i, &dims, v);
    }
    out
}

/// An angular momentum or projection, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        let t = 2.0 * x;
        if (t - t.round()).abs() > 1e-9 {
            return Err(Error::domain(format!("{x} is not a half-integer")));
        }
        Ok(HalfInt(t.round() as i32))
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// Complete coupled basis `|j1 j2; J M>` of two angular momenta, expanded in
/// the product basis `|j1 m1> ⊗ |j2 m2>`.
///
/// Built by diagonalizing `J_- J_+` in each `M = J` sector to find the
/// highest-weight vector, fixing its sign so that `<j1 j1; j2 J-j1 | J J> > 0`,
/// then stepping down with `J_-`.
#[derive(Clone, Debug)]
pub struct CgTable {
    twice_j1: u32,
    twice_j2: u32,
    states: BTreeMap<(u32, i32), DVector<f64>>,
}

impl CgTable {
    pub fn new(twice_j1: u32, twice_j2: u32) -> Result<Self> {
        if twice_j1.max(twice_j2) > CG_TWICE_LIMIT {
            return Err(Error::SizeGuardrail {
                what: "Clebsch-Gordan angular momentum (twice)",
                size: twice_j1.max(twice_j2) as usize,
                limit: CG_TWICE_LIMIT as usize,
            });
        }
        let (d1, d2) = (twice_j1 as usize + 1, twice_j2 as usize + 1);
        let (z1, p1) = ladder_real(twice_j1);
        let (z2, p2) = ladder_real(twice_j2);
        let id1 = DMatrix::<f64>::identity(d1, d1);
        let id2 = DMatrix::<f64>::identity(d2, d2);
        let jp = p1.kronecker(&id2) + id1.kronecker(&p2);
        let jm = jp.transpose();
        let jz = z1.kronecker(&id2) + id1.kronecker(&z2);
        let lowering_raising = &jm * &jp;

        let twice_m_of = |idx: usize| -> i32 {
            let (a, b) = (idx / d2, idx % d2);
            (twice_j1 as i32 - 2 * a as i32) + (twice_j2 as i32 - 2 * b as i32)
        };

        let mut states = BTreeMap::new();
        let tj_min = twice_j1.abs_diff(twice_j2);
        let mut tj = twice_j1 + twice_j2;
        loop {
            let sector: Vec<usize> = (0..d1 * d2).filter(|&i| twice_m_of(i) == tj as i32).collect();
            let sub = DMatrix::from_fn(sector.len(), sector.len(), |r, c| {
                lowering_raising[(sector[r], sector[c])]
            });
            let eig = sub.symmetric_eigen();
            let (best, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty sector");
            let mut top = DVector::zeros(d1 * d2);
            for (r, &i) in sector.iter().enumerate() {
                top[i] = eig.eigenvectors[(r, best)];
            }
            // Condon-Shortley: component with m1 = j1 is positive.
            let m2_index = ((twice_j2 as i32 - (tj as i32 - twice_j1 as i32)) / 2) as usize;
            if top[m2_index] < 0.0 {
                top.neg_mut();
            }
            top /= top.norm();

            let mut current = top;
            let mut tm = tj as i32;
            loop {
                debug_assert!((jz.clone() * &current - &current * (tm as f64 / 2.0)).norm() < 1e-9);
                let next = &jm * &current;
                states.insert((tj, tm), current);
                if tm == -(tj as i32) {
                    break;
                }
                // |J, M-1> = J_- |J, M> / sqrt(J(J+1) - M(M-1))
                let norm = (((tj * (tj + 2)) as f64 - (tm * (tm - 2)) as f64) / 4.0).sqrt();
                current = next / norm;
                tm -= 2;
            }

            if tj < tj_min + 2 {
                break;
            }
            tj -= 2;
        }

        Ok(Self {
            twice_j1,
            twice_j2,
            states,
        })
    }

    pub fn twice_j1(&self) -> u32 {
        self.twice_j1
    }

    pub fn twice_j2(&self) -> u32 {
        self.twice_j2
    }

    /// `<j1 m1; j2 m2 | J M>`; zero outside the selection rules.
    pub fn coefficient(&self, twice_m1: i32, twice_m2: i32, twice_j: u32, twice_m: i32) -> f64 {
        let (t1, t2) = (self.twice_j1 as i32, self.twice_j2 as i32);
        if twice_m1.abs() > t1 || twice_m2.abs() > t2 || twice_m1 + twice_m2 != twice_m {
            return 0.0;
        }
        let Some(v) = self.states.get(&(twice_j, twice_m)) else {
            return 0.0;
        };
        let a = ((t1 - twice_m1) / 2) as usize;
        let b = ((t2 - twice_m2) / 2) as usize;
        v[a * (t2 as usize + 1) + b]
    }

    /// Product-basis expansion of `|J M>`.
    pub fn state(&self, twice_j: u32, twice_m: i32) -> Option<&DVector<f64>> {
        self.states.get(&(twice_j, twice_m))
    }

    /// `2J` values present, descending.
    pub fn total_values(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.states.keys().map(|&(j, _)| j).collect();
        out.dedup();
        out.reverse();
        out
    }

    /// Rows: product basis. Columns: coupled states ordered by descending
    /// `J`, then descending `M`.
    pub fn unitary(&self) -> DMatrix<f64> {
        let d = (self.twice_j1 as usize + 1) * (self.twice_j2 as usize + 1);
        let mut u = DMatrix::zeros(d, d);
        let mut col = 0;
        for tj in self.total_values() {
            let mut tm = tj as i32;
            while tm >= -(tj as i32) {
                u.set_column(col, &self.states[&(tj, tm)]);
                col += 1;
                tm -= 2;
            }
        }
        u
    }
}

fn valid_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.0 < 0 {
        return Err(Error::domain(format!("negative angular momentum {}", j.value())));
    }
    if (j.0 - m.0).rem_euclid(2) != 0 {
        return Err(Error::domain(format!(
            "projection {} incompatible with angular momentum {}",
            m.value(),
            j.value()
        )));
    }
    Ok(())
}

/// Clebsch-Gordan coefficient `<j1 m1; j2 m2 | j m>` (Condon-Shortley).
///
/// Returns 0 when `m1 + m2 != m`, the triangle rule fails, or a projection
/// exceeds its angular momentum.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<f64> {
    valid_pair(j1, m1)?;
    valid_pair(j2, m2)?;
    valid_pair(j, m)?;
    if (j1.0 + j2.0 + j.0) % 2 != 0 {
        return Ok(0.0);
    }
    if m1.0 + m2.0 != m.0 || m.0.abs() > j.0 || j.0 > j1.0 + j2.0 || j.0 < (j1.0 - j2.0).abs() {
        return Ok(0.0);
    }
    let table = CgTable::new(j1.0 as u32, j2.0 as u32)?;
    Ok(table.coefficient(m1.0, m2.0, j.0 as u32, m.0))
}

/// Binary tree declaring the order of angular-momentum addition.
///
/// Sites are 0-based. The textual form uses 1-based digits, e.g.
/// `((12)(34))` or `((123)(456))`, where a group of more than two members is
/// coupled left to right.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CouplingScheme {
    Site(usize),
    Pair(Box<CouplingScheme>, Box<CouplingScheme>),
}

impl CouplingScheme {
    pub fn site(i: usize) -> Self {
        CouplingScheme::Site(i)
    }

    pub fn pair(a: CouplingScheme, b: CouplingScheme) -> Self {
        CouplingScheme::Pair(Box::new(a), Box::new(b))
    }

    /// Left-deep chain `(((a, a+1), a+2), ...)`.
    pub fn sequential(sites: std::ops::Range<usize>) -> Self {
        let mut it = sites.map(CouplingScheme::Site);
        let first = it.next().expect("non-empty site range");
        it.fold(first, CouplingScheme::pair)
    }

    /// In-order leaves.
    pub fn sites(&self) -> Vec<usize> {
        match self {
            CouplingScheme::Site(i) => vec![*i],
            CouplingScheme::Pair(a, b) => {
                let mut v = a.sites();
                v.extend(b.sites());
                v
            }
        }
    }

    /// Site sets of internal nodes in post-order (root last).
    pub fn internal_nodes(&self) -> Vec<Vec<usize>> {
        match self {
            CouplingScheme::Site(_) => vec![],
            CouplingScheme::Pair(a, b) => {
                let mut v = a.internal_nodes();
                v.extend(b.internal_nodes());
                v.push(self.sites());
                v
            }
        }
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.sites() != (0..n_sites).collect::<Vec<_>>() {
            return Err(Error::domain(format!(
                "coupling scheme leaves {:?} are not the in-order sites 0..{n_sites}",
                self.sites()
            )));
        }
        Ok(())
    }
}

impl FromStr for CouplingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        fn group(chars: &[char], pos: &mut usize) -> Result<CouplingScheme> {
            let mut members = Vec::new();
            while *pos < chars.len() {
                match chars[*pos] {
                    '(' => {
                        *pos += 1;
                        members.push(group(chars, pos)?);
                    }
                    ')' => {
                        *pos += 1;
                        break;
                    }
                    d if d.is_ascii_digit() && d != '0' => {
                        *pos += 1;
                        members.push(CouplingScheme::Site(d as usize - '1' as usize));
                    }
                    c if c.is_whitespace() => *pos += 1,
                    c => return Err(Error::domain(format!("unexpected '{c}' in coupling scheme"))),
                }
            }
            let mut it = members.into_iter();
            let first = it
                .next()
                .ok_or_else(|| Error::domain("empty group in coupling scheme"))?;
            Ok(it.fold(first, CouplingScheme::pair))
        }
        let chars: Vec<char> = s.chars().collect();
        let depth = chars.iter().try_fold(0i32, |d, &c| {
            let d = d + (c == '(') as i32 - (c == ')') as i32;
            (d >= 0).then_some(d)
        });
        if depth != Some(0) {
            return Err(Error::domain(format!("unbalanced parentheses in '{s}'")));
        }
        let mut pos = 0;
        group(&chars, &mut pos)
    }
}

impl fmt::Display for CouplingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CouplingScheme::Site(i) => write!(f, "{}", i + 1),
            CouplingScheme::Pair(a, b) => write!(f, "({a}{b})"),
        }
    }
}

/// Quantum number attached to an internal node of a coupling tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntermediateLabel {
    pub sites: Vec<usize>,
    pub twice_j: u32,
}

#[derive(Clone, Debug)]
pub struct CoupledBasisState {
    pub scheme: CouplingScheme,
    /// Internal-node labels in post-order; the last entry is the total spin.
    pub labels: Vec<IntermediateLabel>,
    pub twice_total: u32,
    pub twice_m: i32,
    pub state: StateVector,
}

impl CoupledBasisState {
    /// `2j` of the internal node coupling exactly `sites`.
    pub fn label_for(&self, sites: &[usize]) -> Option<u32> {
        self.labels.iter().find(|l| l.sites == sites).map(|l| l.twice_j)
    }
}

struct Multiplet {
    labels: Vec<IntermediateLabel>,
    twice_j: u32,
    /// Indexed from `m = j` down to `m = -j`.
    vectors: Vec<DVector<f64>>,
}

fn couple_node(
    node: &CouplingScheme,
    register: &SpinRegister,
    tables: &mut HashMap<(u32, u32), CgTable>,
) -> Result<Vec<Multiplet>> {
    match node {
        CouplingScheme::Site(i) => {
            let spin = register.spins()[*i];
            let d = spin.dim();
            Ok(vec![Multiplet {
                labels: vec![],
                twice_j: spin.twice(),
                vectors: (0..d).map(|k| DVector::from_fn(d, |r, _| (r == k) as u8 as f64)).collect(),
            }])
        }
        CouplingScheme::Pair(a, b) => {
            let left = couple_node(a, register, tables)?;
            let right = couple_node(b, register, tables)?;
            let sites = node.sites();
            let mut out = Vec::new();
            for l in &left {
                for r in &right {
                    let key = (l.twice_j, r.twice_j);
                    if let std::collections::hash_map::Entry::Vacant(e) = tables.entry(key) {
                        e.insert(CgTable::new(l.twice_j, r.twice_j)?);
                    }
                    let table = &tables[&key];
                    for tj in table.total_values() {
                        let vectors = (0..=tj as i32)
                            .map(|step| {
                                let tm = tj as i32 - 2 * step;
                                let mut acc = DVector::zeros(l.vectors[0].len() * r.vectors[0].len());
                                for (ia, va) in l.vectors.iter().enumerate() {
                                    let m1 = l.twice_j as i32 - 2 * ia as i32;
                                    let m2 = tm - m1;
                                    if m2.abs() > r.twice_j as i32 {
                                        continue;
                                    }
                                    let ib = ((r.twice_j as i32 - m2) / 2) as usize;
                                    let cg = table.coefficient(m1, m2, tj, tm);
                                    if cg != 0.0 {
                                        acc += va.kronecker(&r.vectors[ib]) * cg;
                                    }
                                }
                                acc
                            })
                            .collect();
                        let mut labels = l.labels.clone();
                        labels.extend(r.labels.iter().cloned());
                        labels.push(IntermediateLabel {
                            sites: sites.clone(),
                            twice_j: tj,
                        });
                        out.push(Multiplet {
                            labels,
                            twice_j: tj,
                            vectors,
                        });
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Complete orthonormal coupled basis of `register` along `scheme`.
pub fn couple(scheme: &CouplingScheme, register: &SpinRegister) -> Result<Vec<CoupledBasisState>> {
    scheme.validate(register.len())?;
    if register.dimension() > DENSE_LIMIT {
        return Err(Error::SizeGuardrail {
            what: "coupled basis dimension",
            size: register.dimension(),
            limit: DENSE_LIMIT,
        });
    }
    if register.len() == 1 {
        return Err(Error::domain("coupling needs at least two sites"));
    }
    let mut tables = HashMap::new();
    let multiplets = couple_node(scheme, register, &mut tables)?;
    let mut out = Vec::with_capacity(register.dimension());
    for mult in multiplets {
        for (step, v) in mult.vectors.into_iter().enumerate() {
            let amplitudes = v.map(|x| C64::new(x, 0.0));
            out.push(CoupledBasisState {
                scheme: scheme.clone(),
                labels: mult.labels.clone(),
                twice_total: mult.twice_j,
                twice_m: mult.twice_j as i32 - 2 * step as i32,
                state: StateVector::new(register.clone(), amplitudes)?,
            });
        }
    }
    Ok(out)
}

/// The coupled state with the given internal-node labels (post-order,
/// including the root as `twice_total`) and projection.
pub fn coupled_state(
    scheme: &CouplingScheme,
    register: &SpinRegister,
    intermediate: &[u32],
    twice_total: u32,
    twice_m: i32,
) -> Result<CoupledBasisState> {
    scheme.validate(register.len())?;
    let nodes = scheme.internal_nodes();
    if intermediate.len() + 1 != nodes.len() {
        return Err(Error::domain(format!(
            "scheme {scheme} has {} intermediate nodes, {} labels given",
            nodes.len() - 1,
            intermediate.len()
        )));
    }
    let mut labels: Vec<u32> = intermediate.to_vec();
    labels.push(twice_total);
    check_triangles(scheme, register, &nodes, &labels)?;
    if twice_m.unsigned_abs() > twice_total || (twice_total as i32 - twice_m) % 2 != 0 {
        return Err(Error::domain(format!(
            "M = {}/2 incompatible with S = {}/2",
            twice_m, twice_total
        )));
    }
    couple(scheme, register)?
        .into_iter()
        .find(|s| {
            s.twice_m == twice_m && s.labels.iter().map(|l| l.twice_j).eq(labels.iter().copied())
        })
        .ok_or_else(|| Error::domain("no coupled state with the requested labels"))
}

fn check_triangles(
    scheme: &CouplingScheme,
    register: &SpinRegister,
    nodes: &[Vec<usize>],
    labels: &[u32],
) -> Result<()> {
    fn walk(
        node: &CouplingScheme,
        register: &SpinRegister,
        nodes: &[Vec<usize>],
        labels: &[u32],
    ) -> Result<u32> {
        match node {
            CouplingScheme::Site(i) => Ok(register.spins()[*i].twice()),
            CouplingScheme::Pair(a, b) => {
                let ja = walk(a, register, nodes, labels)?;
                let jb = walk(b, register, nodes, labels)?;
                let sites = node.sites();
                let idx = nodes.iter().position(|n| *n == sites).expect("node present");
                let j = labels[idx];
                if j > ja + jb || j < ja.abs_diff(jb) || !(ja + jb + j).is_multiple_of(2) {
                    return Err(Error::domain(format!(
                        "inconsistent intermediate label {}/2 for sites {:?} (children {}/2, {}/2)",
                        j, sites, ja, jb
                    )));
                }
                Ok(j)
            }
        }
    }
    walk(scheme, register, nodes, labels).map(|_| ())
}

/// Binomial coefficient as f64 (exact for the sizes used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// Largest number of qubits a Dicke state may span.
pub const DICKE_MAX_SITES: usize = 16;

/// `n`-qubit Dicke state with `k` up-spins: uniform amplitude `C(n,k)^{-1/2}`
/// on every product ket with exactly `k` ups.
pub fn dicke_state(n: usize, k: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::domain("Dicke state needs at least one qubit"));
    }
    if k > n {
        return Err(Error::domain(format!("excitation index {k} exceeds {n}")));
    }
    if n > DICKE_MAX_SITES {
        return Err(Error::SizeGuardrail {
            what: "Dicke state qubits",
            size: n,
            limit: DICKE_MAX_SITES,
        });
    }
    let amp = C64::new(binomial(n, k).powf(-0.5), 0.0);
    let dim = 1usize << n;
    // Bit set = down under the ordering contract.
    let amplitudes = CVector::from_fn(dim, |i, _| {
        if n - i.count_ones() as usize == k {
            amp
        } else {
            linalg::ZERO
        }
    });
    StateVector::new(SpinRegister::qubits(n), amplitudes)
}

/// States `|n/2, mu>` of `n` qubits, obtained by repeatedly coupling an
/// effective spin-`n/2` block to one more spin-1/2 with Clebsch-Gordan
/// coefficients. Entry `k` has `mu = k - n/2`.
pub fn stretched_multiplet(n: usize) -> Result<Vec<StateVector>> {
    if n == 0 || n > DICKE_MAX_SITES {
        return Err(Error::domain(format!("stretched multiplet needs 1..={DICKE_MAX_SITES} qubits")));
    }
    let up = CVector::from_vec(vec![linalg::ONE, linalg::ZERO]);
    let down = CVector::from_vec(vec![linalg::ZERO, linalg::ONE]);
    let half = HalfInt::from_twice(1);
    // k ups -> vector
    let mut current: Vec<CVector> = vec![down.clone(), up.clone()];
    for m in 1..n {
        let j1 = HalfInt::from_twice(m as i32);
        let j = HalfInt::from_twice(m as i32 + 1);
        let mut next = Vec::with_capacity(m + 2);
        for k in 0..=m + 1 {
            let twice_mu = 2 * k as i32 - (m as i32 + 1);
            let mu = HalfInt::from_twice(twice_mu);
            let mut v = CVector::zeros(current[0].len() * 2);
            if k >= 1 {
                let cg = clebsch_gordan(j1, HalfInt::from_twice(twice_mu - 1), half, half, j, mu)?;
                v += linalg::kron_vec(&current[k - 1], &up) * C64::new(cg, 0.0);
            }
            if k <= m {
                let cg = clebsch_gordan(
                    j1,
                    HalfInt::from_twice(twice_mu + 1),
                    half,
                    HalfInt::from_twice(-1),
                    j,
                    mu,
                )?;
                v += linalg::kron_vec(&current[k], &down) * C64::new(cg, 0.0);
            }
            next.push(v);
        }
        current = next;
    }
    current
        .into_iter()
        .map(|v| StateVector::new(SpinRegister::qubits(n), v))
        .collect()
}
