//! Classical landscape structure under one-step moves `-1 <-> 0 <-> +1`.
//!
//! Greedy descent is steepest-descent with a total tie-break order: lowest
//! energy, then smallest site index, then the move that decreases `s_i`.
//! Energies within [`DEGENERACY_TOL`] of each other compare equal.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::spin1::{diagonal_of_hp, site_stride, BasisIndex, ChainInstance, TritConfig};
use crate::DEGENERACY_TOL;

/// Human-readable statement of the descent rule, recorded in outputs.
pub const TIE_BREAK_RULE: &str =
    "steepest descent; ties by lowest energy, then smallest site index, then the move decreasing s_i";

/// All configurations one `+-1` step away at a single site.
pub fn one_step_neighbors(s: &TritConfig) -> Vec<TritConfig> {
    let mut out = Vec::with_capacity(2 * s.len());
    for (site, &v) in s.values().iter().enumerate() {
        for m in [v - 1, v + 1] {
            if (-1..=1).contains(&m) {
                out.push(s.with_site(site, m));
            }
        }
    }
    out
}

/// Neighbour indices in tie-break order: by site, decreasing move first.
fn neighbor_indices(k: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..n).flat_map(move |site| {
        let stride = site_stride(n, site);
        let digit = (k / stride) % 3;
        // digit = 1 - s_i, so decreasing s_i raises the digit
        let down = (digit < 2).then(|| k + stride);
        let up = (digit > 0).then(|| k - stride);
        down.into_iter().chain(up)
    })
}

/// Next configuration on the descent path, or `None` at a one-step minimum.
fn descent_step(diag: &[f64], k: usize, n: usize) -> Option<usize> {
    let here = diag[k];
    let mut best: Option<usize> = None;
    for nb in neighbor_indices(k, n) {
        if diag[nb] < here - DEGENERACY_TOL {
            match best {
                Some(b) if diag[nb] >= diag[b] - DEGENERACY_TOL => {}
                _ => best = Some(nb),
            }
        }
    }
    best
}

pub fn is_local_minimum(inst: &ChainInstance, s: &TritConfig) -> Result<bool> {
    let diag = diagonal_of_hp(inst)?;
    Ok(descent_step(&diag, BasisIndex::encode(s).0, inst.n).is_none())
}

/// Follows the descent rule to a fixed point; returns it and the number of moves.
pub fn greedy_descent(inst: &ChainInstance, s: &TritConfig) -> Result<(TritConfig, usize)> {
    let diag = diagonal_of_hp(inst)?;
    let (end, steps) = descend(&diag, BasisIndex::encode(s).0, inst.n);
    Ok((BasisIndex(end).decode(inst.n), steps))
}

fn descend(diag: &[f64], mut k: usize, n: usize) -> (usize, usize) {
    let mut steps = 0;
    while let Some(next) = descent_step(diag, k, n) {
        k = next;
        steps += 1;
    }
    (k, steps)
}

#[derive(Clone, Debug, Serialize)]
pub struct BasinDecomposition {
    /// One-step local minima in ascending basis order.
    pub minima: Vec<TritConfig>,
    /// Position in `minima` of each configuration's terminal minimum.
    pub basin_of: Vec<usize>,
    pub basin_sizes: Vec<usize>,
    pub n_basins: usize,
    pub largest_fraction: f64,
}

pub fn decompose_basins(inst: &ChainInstance) -> Result<BasinDecomposition> {
    let diag = diagonal_of_hp(inst)?;
    let n = inst.n;
    let next: Vec<Option<usize>> = (0..diag.len())
        .into_par_iter()
        .map(|k| descent_step(&diag, k, n))
        .collect();

    let roots: Vec<usize> = (0..diag.len()).filter(|&k| next[k].is_none()).collect();
    let mut slot = vec![usize::MAX; diag.len()];
    for (i, &r) in roots.iter().enumerate() {
        slot[r] = i;
    }
    let mut basin_of = vec![usize::MAX; diag.len()];
    let mut path = Vec::new();
    for start in 0..diag.len() {
        let mut k = start;
        while basin_of[k] == usize::MAX {
            match next[k] {
                Some(nb) => {
                    path.push(k);
                    k = nb;
                }
                None => {
                    basin_of[k] = slot[k];
                }
            }
        }
        let b = basin_of[k];
        for p in path.drain(..) {
            basin_of[p] = b;
        }
    }

    let mut basin_sizes = vec![0usize; roots.len()];
    for &b in &basin_of {
        basin_sizes[b] += 1;
    }
    let largest = basin_sizes.iter().copied().max().unwrap_or(0);
    Ok(BasinDecomposition {
        minima: roots.iter().map(|&r| BasisIndex(r).decode(n)).collect(),
        n_basins: roots.len(),
        largest_fraction: largest as f64 / diag.len() as f64,
        basin_of,
        basin_sizes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasinRow {
    #[serde(rename = "D")]
    pub d: f64,
    pub n_basins: usize,
    pub largest_fraction: f64,
}

/// Basin statistics along a cut of `D` values at fixed `J` and `h`.
pub fn basin_curves_along_d(inst_base: &ChainInstance, j: f64, d_values: &[f64]) -> Result<Vec<BasinRow>> {
    d_values
        .iter()
        .map(|&d| {
            let inst = ChainInstance::new(inst_base.n, j, inst_base.h, d)?;
            let dec = decompose_basins(&inst)?;
            Ok(BasinRow { d, n_basins: dec.n_basins, largest_fraction: dec.largest_fraction })
        })
        .collect()
}

/// Fraction of sites in the `+-1` levels.
pub fn order_parameter_f(s: &TritConfig) -> f64 {
    s.values().iter().filter(|v| **v != 0).count() as f64 / s.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LandscapePoint {
    pub f: f64,
    pub energy: f64,
    pub is_local_min: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub f: f64,
    pub min_energy: f64,
}

#[derive(Clone, Debug)]
pub struct EnergyScatter {
    /// One point per configuration in basis order.
    pub points: Vec<LandscapePoint>,
    /// Lowest energy per occupied `f`, ascending in `f`.
    pub envelope: Vec<EnvelopePoint>,
    pub minima: Vec<LandscapePoint>,
}

pub fn energy_vs_f_scatter(inst: &ChainInstance) -> Result<EnergyScatter> {
    let diag = diagonal_of_hp(inst)?;
    let n = inst.n;
    let points: Vec<LandscapePoint> = (0..diag.len())
        .map(|k| LandscapePoint {
            f: order_parameter_f(&BasisIndex(k).decode(n)),
            energy: diag[k],
            is_local_min: descent_step(&diag, k, n).is_none(),
        })
        .collect();

    let mut lowest = vec![f64::INFINITY; n + 1];
    for p in &points {
        let slot = (p.f * n as f64).round() as usize;
        lowest[slot] = lowest[slot].min(p.energy);
    }
    let envelope = lowest
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_finite())
        .map(|(k, &e)| EnvelopePoint { f: k as f64 / n as f64, min_energy: e })
        .collect();
    let minima = points.iter().copied().filter(|p| p.is_local_min).collect();
    Ok(EnergyScatter { points, envelope, minima })
}

fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `D, n_basins, largest_fraction`.
pub fn write_basins_csv<W: Write>(writer: W, rows: &[BasinRow]) -> Result<()> {
    write_rows(writer, rows)
}

/// CSV with columns `f, energy, is_local_min`.
pub fn write_scatter_csv<W: Write>(writer: W, points: &[LandscapePoint]) -> Result<()> {
    write_rows(writer, points)
}

/// CSV with columns `f, min_energy`.
pub fn write_envelope_csv<W: Write>(writer: W, envelope: &[EnvelopePoint]) -> Result<()> {
    write_rows(writer, envelope)
}
