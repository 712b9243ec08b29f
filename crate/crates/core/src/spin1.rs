//! Spin-1 operator algebra, base-3 basis indexing and the classical cost.
//!
//! Per-site basis order is `(+1, 0, -1)`, the row order of `S^z = diag(1, 0, -1)`.
//! A configuration `(s_1, ..., s_N)` maps to the base-3 number whose most
//! significant digit is site 1, with digit `1 - s_i`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::QuantumState;
use crate::{DEGENERACY_TOL, MAX_SITES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `3^n`, refusing chains longer than [`MAX_SITES`].
pub fn dimension(n_sites: usize) -> Result<usize> {
    if n_sites == 0 {
        return Err(Error::invalid("chain must have at least one site"));
    }
    if n_sites > MAX_SITES {
        return Err(Error::ResourceLimit(format!(
            "{n_sites} sites exceeds the dense-state limit of {MAX_SITES}"
        )));
    }
    Ok(3usize.pow(n_sites as u32))
}

/// Open spin-1 chain with uniform coupling, longitudinal field and anisotropy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainInstance {
    pub n: usize,
    pub j: f64,
    pub h: f64,
    pub d: f64,
}

impl ChainInstance {
    pub fn new(n: usize, j: f64, h: f64, d: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("chain must have at least one site"));
        }
        if !(j.is_finite() && h.is_finite() && d.is_finite()) {
            return Err(Error::invalid(format!(
                "parameters must be finite (J={j}, h={h}, D={d})"
            )));
        }
        Ok(ChainInstance { n, j, h, d })
    }

    /// Nearest-neighbour pairs `(i, i+1)`, zero-based.
    pub fn neighbors(&self) -> Vec<(usize, usize)> {
        (0..self.n.saturating_sub(1)).map(|i| (i, i + 1)).collect()
    }

    pub fn dim(&self) -> Result<usize> {
        dimension(self.n)
    }

    pub fn with_d(self, d: f64) -> Self {
        ChainInstance { d, ..self }
    }
}

/// Classical three-valued configuration with entries in `{-1, 0, +1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TritConfig(Vec<i8>);

impl TritConfig {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("configuration must be non-empty"));
        }
        if let Some(v) = values.iter().find(|v| !matches!(v, -1..=1)) {
            return Err(Error::invalid(format!("trit value {v} not in {{-1, 0, +1}}")));
        }
        Ok(TritConfig(values))
    }

    pub fn zeros(n: usize) -> Self {
        TritConfig(vec![0; n])
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, site: usize) -> i8 {
        self.0[site]
    }

    /// Overwrites one site. `value` must already be a valid trit.
    pub(crate) fn set(&mut self, site: usize, value: i8) {
        debug_assert!(matches!(value, -1..=1));
        self.0[site] = value;
    }

    pub fn with_site(&self, site: usize, value: i8) -> Self {
        let mut next = self.clone();
        next.set(site, value);
        next
    }
}

/// Position of a configuration in the `3^N` computational basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisIndex(pub usize);

impl BasisIndex {
    pub fn encode(s: &TritConfig) -> Self {
        BasisIndex(
            s.values()
                .iter()
                .fold(0usize, |acc, &v| acc * 3 + (1 - v) as usize),
        )
    }

    /// Inverse of [`BasisIndex::encode`] for an `n`-site chain.
    pub fn decode(self, n: usize) -> TritConfig {
        let mut values = vec![0i8; n];
        let mut k = self.0;
        for slot in values.iter_mut().rev() {
            *slot = 1 - (k % 3) as i8;
            k /= 3;
        }
        TritConfig(values)
    }
}

/// A 3x3 complex single-site operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleSiteOperator(pub [[Complex64; 3]; 3]);

impl SingleSiteOperator {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        SingleSiteOperator(m)
    }

    pub fn sz() -> Self {
        let mut m = [[ZERO; 3]; 3];
        m[0][0] = ONE;
        m[2][2] = -ONE;
        SingleSiteOperator(m)
    }

    pub fn sx() -> Self {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        SingleSiteOperator([[ZERO, a, ZERO], [a, ZERO, a], [ZERO, a, ZERO]])
    }

    /// Only used to check the commutation relations.
    pub fn sy() -> Self {
        let a = Complex64::new(0.0, FRAC_1_SQRT_2);
        SingleSiteOperator([[ZERO, -a, ZERO], [a, ZERO, -a], [ZERO, a, ZERO]])
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|x| *x *= k);
        SingleSiteOperator(m)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = self.0;
        for (row, orow) in m.iter_mut().zip(&other.0) {
            for (x, y) in row.iter_mut().zip(orow) {
                *x += y;
            }
        }
        SingleSiteOperator(m)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `exp(i * angle * S^x)` from `I + i sin(a) S^x + (cos(a) - 1) (S^x)^2`,
    /// exact because `(S^x)^3 = S^x` for spin 1.
    pub fn driver_rotation(angle: f64) -> Self {
        let sx = Self::sx();
        let sx2 = sx * sx;
        Self::identity()
            .add(&sx.scale(Complex64::new(0.0, angle.sin())))
            .add(&sx2.scale(Complex64::new(angle.cos() - 1.0, 0.0)))
    }
}

impl Mul for SingleSiteOperator {
    type Output = SingleSiteOperator;

    fn mul(self, rhs: Self) -> Self {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        SingleSiteOperator(m)
    }
}

impl Sub for SingleSiteOperator {
    type Output = SingleSiteOperator;

    fn sub(self, rhs: Self) -> Self {
        self.add(&rhs.scale(-ONE))
    }
}

/// `H(s) = -J sum s_i s_{i+1} - h sum s_i + D sum s_i^2`.
pub fn classical_energy(inst: &ChainInstance, s: &TritConfig) -> Result<f64> {
    if s.len() != inst.n {
        return Err(Error::invalid(format!(
            "configuration has {} sites, instance has {}",
            s.len(),
            inst.n
        )));
    }
    Ok(energy_unchecked(inst, s.values()))
}

pub(crate) fn energy_unchecked(inst: &ChainInstance, s: &[i8]) -> f64 {
    let bond: f64 = s.windows(2).map(|w| (w[0] * w[1]) as f64).sum();
    let field: f64 = s.iter().map(|&v| v as f64).sum();
    let aniso: f64 = s.iter().map(|&v| (v * v) as f64).sum();
    -inst.j * bond - inst.h * field + inst.d * aniso
}

/// Diagonal of the problem Hamiltonian in basis order.
pub fn diagonal_of_hp(inst: &ChainInstance) -> Result<Vec<f64>> {
    let dim = inst.dim()?;
    Ok((0..dim)
        .map(|k| energy_unchecked(inst, BasisIndex(k).decode(inst.n).values()))
        .collect())
}

/// Classical ground energy and every basis index within [`DEGENERACY_TOL`] of it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundState {
    pub energy: f64,
    pub indices: Vec<BasisIndex>,
}

impl GroundState {
    pub fn is_degenerate(&self) -> bool {
        self.indices.len() > 1
    }
}

pub fn exact_ground_state(inst: &ChainInstance) -> Result<GroundState> {
    let diag = diagonal_of_hp(inst)?;
    Ok(ground_state_of_diagonal(&diag))
}

pub(crate) fn ground_state_of_diagonal(diag: &[f64]) -> GroundState {
    let energy = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let indices = diag
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - energy <= DEGENERACY_TOL)
        .map(|(k, _)| BasisIndex(k))
        .collect();
    GroundState { energy, indices }
}

/// Stride of a zero-based site in the basis index.
pub(crate) fn site_stride(n_sites: usize, site: usize) -> usize {
    3usize.pow((n_sites - 1 - site) as u32)
}

/// Applies a single-site operator to `site` (zero-based) of a dense amplitude vector.
pub(crate) fn apply_site_operator(
    amps: &mut [Complex64],
    n_sites: usize,
    site: usize,
    op: &SingleSiteOperator,
) {
    let stride = site_stride(n_sites, site);
    let block = 3 * stride;
    let m = &op.0;
    for base in (0..amps.len()).step_by(block) {
        for off in 0..stride {
            let i0 = base + off;
            let (i1, i2) = (i0 + stride, i0 + 2 * stride);
            let (a0, a1, a2) = (amps[i0], amps[i1], amps[i2]);
            amps[i0] = m[0][0] * a0 + m[0][1] * a1 + m[0][2] * a2;
            amps[i1] = m[1][0] * a0 + m[1][1] * a1 + m[1][2] * a2;
            amps[i2] = m[2][0] * a0 + m[2][1] * a1 + m[2][2] * a2;
        }
    }
}

/// Applies `exp(i * angle * S^x)` on one site (zero-based), identity elsewhere.
pub fn apply_driver_term(state: &mut QuantumState, site: usize, angle: f64) -> Result<()> {
    let n = state.n_sites();
    if site >= n {
        return Err(Error::invalid(format!("site {site} out of range for {n} sites")));
    }
    let rot = SingleSiteOperator::driver_rotation(angle);
    apply_site_operator(state.amplitudes_mut(), n, site, &rot);
    Ok(())
}
