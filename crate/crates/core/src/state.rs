use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spin1::{dimension, BasisIndex};

/// Tolerance on the norm of a freshly constructed state.
pub const NORM_TOL: f64 = 1e-10;

/// Amplitudes over the `3^N` computational basis of an `N`-site chain.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n_sites: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// Wraps an amplitude vector, checking its length and unit norm.
    pub fn new(n_sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        let dim = dimension(n_sites)?;
        if amps.len() != dim {
            return Err(Error::invalid(format!(
                "state for {n_sites} sites needs {dim} amplitudes, got {}",
                amps.len()
            )));
        }
        let state = QuantumState { n_sites, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_sites: usize, index: BasisIndex) -> Result<Self> {
        let dim = dimension(n_sites)?;
        if index.0 >= dim {
            return Err(Error::invalid(format!("basis index {} out of range", index.0)));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index.0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { n_sites, amps })
    }

    /// Equal-weight superposition of every basis state.
    pub fn uniform(n_sites: usize) -> Result<Self> {
        let dim = dimension(n_sites)?;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(QuantumState { n_sites, amps: vec![a; dim] })
    }

    pub(crate) fn from_parts(n_sites: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 3usize.pow(n_sites as u32));
        QuantumState { n_sites, amps }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probability(&self, index: BasisIndex) -> f64 {
        self.amps[index.0].norm_sqr()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}
