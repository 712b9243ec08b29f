//! Instantaneous spectra of `H(t)` along an annealing path.
//!
//! Unlike the evolution path, this module materialises `H(t)` as a dense
//! matrix, so it is meant for short chains.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule::Schedule;
use crate::spin1::{apply_site_operator, diagonal_of_hp, site_stride, ChainInstance, SingleSiteOperator};
use crate::{DEGENERACY_TOL, HBAR};

/// Largest matrix dimension accepted by [`hermitian_eigs`].
pub const MAX_EIG_DIM: usize = 59_049;
/// Longest chain for which the dense `H(t)` is built.
pub const MAX_SPECTRAL_SITES: usize = 7;
pub const DEFAULT_SAMPLES: usize = 400;
pub const DEFAULT_LEVELS: usize = 4;
/// Half-width, in samples, of the window used by [`fit_diabatic_slope`].
pub const SLOPE_WINDOW: usize = 5;

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

/// The `k` lowest eigenpairs of a dense Hermitian matrix.
pub fn hermitian_eigs(matrix: &DMatrix<Complex64>, k: usize) -> Result<Eigenpairs> {
    let n = matrix.nrows();
    if n != matrix.ncols() || n == 0 {
        return Err(Error::invalid("matrix must be square and non-empty"));
    }
    if n > MAX_EIG_DIM {
        return Err(Error::ResourceLimit(format!("dimension {n} exceeds {MAX_EIG_DIM}")));
    }
    let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for i in 0..n {
        for j in i..n {
            if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > 1e-10 * scale {
                return Err(Error::invalid(format!("matrix is not Hermitian at ({i}, {j})")));
            }
        }
    }
    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k.min(n));
    Ok(Eigenpairs {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
    })
}

/// Dense `H_P - g sum_i S^x_i`.
pub fn hamiltonian_matrix(inst: &ChainInstance, g: f64) -> Result<DMatrix<Complex64>> {
    if inst.n > MAX_SPECTRAL_SITES {
        return Err(Error::ResourceLimit(format!(
            "dense spectra limited to {MAX_SPECTRAL_SITES} sites, got {}",
            inst.n
        )));
    }
    let diag = diagonal_of_hp(inst)?;
    let dim = diag.len();
    let mut h = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (k, &e) in diag.iter().enumerate() {
        h[(k, k)] = Complex64::new(e, 0.0);
    }
    let coupling = Complex64::new(-g * FRAC_1_SQRT_2, 0.0);
    for site in 0..inst.n {
        let stride = site_stride(inst.n, site);
        for k in 0..dim {
            // digits 0 and 1 couple upward to 1 and 2
            if (k / stride) % 3 < 2 {
                h[(k, k + stride)] += coupling;
                h[(k + stride, k)] += coupling;
            }
        }
    }
    Ok(h)
}

/// `sum_i S^x_i |v>` for a vector on `n_sites`.
pub fn apply_total_sx(v: &[Complex64], n_sites: usize) -> Vec<Complex64> {
    let sx = SingleSiteOperator::sx();
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for site in 0..n_sites {
        let mut w = v.to_vec();
        apply_site_operator(&mut w, n_sites, site, &sx);
        out.iter_mut().zip(&w).for_each(|(o, x)| *o += x);
    }
    out
}

fn braket(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSlice {
    pub t: f64,
    pub g: f64,
    pub energies: Vec<f64>,
    #[serde(skip)]
    pub ground: Vec<Complex64>,
    #[serde(skip)]
    pub first_excited: Vec<Complex64>,
    pub gap: f64,
    pub degenerate: bool,
}

impl SpectralSlice {
    pub fn n_sites(&self) -> usize {
        let mut n = 0;
        let mut d = self.ground.len();
        while d > 1 {
            d /= 3;
            n += 1;
        }
        n
    }

    /// Hellmann-Feynman `d(gap)/dg = <1|-sum S^x|1> - <0|-sum S^x|0>`.
    pub fn gap_derivative_in_g(&self) -> f64 {
        let n = self.n_sites();
        let e1 = braket(&self.first_excited, &apply_total_sx(&self.first_excited, n)).re;
        let e0 = braket(&self.ground, &apply_total_sx(&self.ground, n)).re;
        -(e1 - e0)
    }
}

#[derive(Clone, Debug)]
pub struct GapScan {
    pub slices: Vec<SpectralSlice>,
    pub min_gap: f64,
    pub t_at_min: f64,
    pub index_at_min: usize,
}

/// `n` times log-spaced on `[t_floor, total_time]`.
pub fn log_times(sched: &Schedule, n: usize) -> Vec<f64> {
    let (lo, hi) = (sched.t_floor, sched.total_time.max(sched.t_floor));
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * (ratio * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn spectral_slice(inst: &ChainInstance, sched: &Schedule, t: f64, n_levels: usize) -> Result<SpectralSlice> {
    let g = sched.g(t)?;
    let h = hamiltonian_matrix(inst, g)?;
    let pairs = hermitian_eigs(&h, n_levels.max(2))?;
    let mut vectors = pairs.vectors.into_iter();
    let ground = vectors.next().expect("at least one eigenpair");
    let first_excited = vectors.next().unwrap_or_default();
    let gap = if pairs.values.len() > 1 { (pairs.values[1] - pairs.values[0]).max(0.0) } else { f64::INFINITY };
    let mut energies = pairs.values;
    energies.truncate(n_levels);
    Ok(SpectralSlice { t, g, energies, ground, first_excited, gap, degenerate: gap < DEGENERACY_TOL })
}

/// Spectra at `n_samples` log-spaced times with the smallest gap located.
pub fn gap_scan(inst: &ChainInstance, sched: &Schedule, n_samples: usize, n_levels: usize) -> Result<GapScan> {
    if n_samples < 2 {
        return Err(Error::invalid("gap scan needs at least two samples"));
    }
    if n_levels == 0 || n_levels > 10 {
        return Err(Error::invalid("between 1 and 10 levels may be requested"));
    }
    let slices = log_times(sched, n_samples)
        .into_par_iter()
        .map(|t| spectral_slice(inst, sched, t, n_levels))
        .collect::<Result<Vec<_>>>()?;
    let (index_at_min, min_slice) = slices
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.gap.total_cmp(&b.1.gap))
        .expect("non-empty");
    Ok(GapScan { min_gap: min_slice.gap, t_at_min: min_slice.t, index_at_min, slices })
}

/// `max_t |<1|dH/dt|0>|^2 / gap^4` with `dH/dt = -g'(t) sum_i S^x_i`.
pub fn adiabatic_error_bound(slices: &[SpectralSlice], sched: &Schedule) -> Result<f64> {
    adiabatic_error_bound_with_rate(slices, |t| sched.g_dot(t))
}

/// As [`adiabatic_error_bound`] with an arbitrary driver rate `g'(t)`.
pub fn adiabatic_error_bound_with_rate<F>(slices: &[SpectralSlice], rate: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut best: Option<f64> = None;
    let mut skipped = 0;
    for slice in slices {
        if slice.degenerate || slice.first_excited.is_empty() {
            skipped += 1;
            continue;
        }
        let n = slice.n_sites();
        let element = -rate(slice.t)? * braket(&slice.first_excited, &apply_total_sx(&slice.ground, n));
        let value = element.norm_sqr() / slice.gap.powi(4);
        best = Some(best.map_or(value, |b: f64| b.max(value)));
    }
    if skipped > 0 {
        log::warn!("adiabatic estimate skipped {skipped} degenerate slices");
    }
    best.ok_or_else(|| Error::DiagnosticUnavailable("every slice is degenerate".into()))
}

/// Landau-Zener excitation probability `exp(-pi gap^2 / (2 hbar |alpha|))`.
pub fn landau_zener(min_gap: f64, alpha: f64) -> Result<f64> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::invalid("diabatic slope difference must be finite and non-zero"));
    }
    Ok((-PI * min_gap * min_gap / (2.0 * HBAR * alpha.abs())).exp())
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Diabatic slope difference estimated from the gap on either side of its
/// minimum: least-squares slopes over up to [`SLOPE_WINDOW`] samples per side,
/// `|alpha| = (slope_right - slope_left) / 2`. With only one usable side its
/// slope magnitude is returned. This is a fitting convention, not a derived
/// quantity.
pub fn fit_diabatic_slope(scan: &GapScan) -> Result<f64> {
    let m = scan.index_at_min;
    let pts = |range: std::ops::Range<usize>| -> Vec<(f64, f64)> {
        scan.slices[range].iter().map(|s| (s.t, s.gap)).collect()
    };
    let left = slope(&pts(m.saturating_sub(SLOPE_WINDOW)..m));
    let right = slope(&pts((m + 1).min(scan.slices.len())..(m + 1 + SLOPE_WINDOW).min(scan.slices.len())));
    let alpha = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => l.abs(),
        (None, Some(r)) => r.abs(),
        (None, None) => {
            return Err(Error::DiagnosticUnavailable("not enough samples around the minimum gap".into()))
        }
    };
    if alpha == 0.0 {
        return Err(Error::DiagnosticUnavailable("flat gap around the minimum".into()));
    }
    Ok(alpha.abs())
}

/// CSV with columns `t, g, E0..E{k-1}, gap, flag_degenerate`.
pub fn write_slices_csv<W: Write>(writer: W, slices: &[SpectralSlice]) -> Result<()> {
    let levels = slices.iter().map(|s| s.energies.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string(), "g".to_string()];
    header.extend((0..levels).map(|k| format!("E{k}")));
    header.extend(["gap".to_string(), "flag_degenerate".to_string()]);
    w.write_record(&header)?;
    for s in slices {
        let mut row = vec![s.t.to_string(), s.g.to_string()];
        row.extend((0..levels).map(|k| s.energies.get(k).map_or(String::new(), |e| e.to_string())));
        row.push(s.gap.to_string());
        row.push(u8::from(s.degenerate).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
