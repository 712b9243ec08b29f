//! Schrödinger evolution under `H(t) = H_P - g(t) sum_i S^x_i`.
//!
//! The problem part is diagonal and applied as elementwise phases; the driver
//! part factorises over sites and is applied with the closed-form spin-1
//! rotation. A symmetric second-order splitting is composed into the
//! five-stage fourth-order Suzuki scheme, with `g` frozen at each sub-step
//! midpoint. Steps where the driver amplitude is large are split into equal
//! sub-steps so the per-stage rotation angle stays proportional to `dt`.
//! [`evolve`] repeats the whole run with halved steps until the ground-state
//! fidelity settles.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Schedule;
use crate::spin1::{
    apply_site_operator, diagonal_of_hp, dimension, ground_state_of_diagonal, ChainInstance,
    GroundState, SingleSiteOperator,
};
use crate::state::QuantumState;

pub use crate::spin1::exact_ground_state;

/// Suzuki weight `p = 1 / (4 - 4^{1/3})`.
pub fn suzuki_p() -> f64 {
    1.0 / (4.0 - 4f64.cbrt())
}

/// Sub-step widths of one fourth-order step, in units of `dt`.
pub fn suzuki_widths() -> [f64; 5] {
    let p = suzuki_p();
    [p, p, 1.0 - 4.0 * p, p, p]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    /// Initial time step.
    pub dt: f64,
    /// Largest accepted change in final fidelity between successive halvings.
    pub convergence_tol: f64,
    pub max_halvings: u32,
    /// Start time of the evolution window; `None` keeps the schedule's own.
    pub t_floor: Option<f64>,
    /// A step starting where `g > driver_split` is split into
    /// `ceil(g / driver_split)` equal sub-steps.
    pub driver_split: f64,
}

pub const DEFAULT_DRIVER_SPLIT: f64 = 10.0;

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: 0.1,
            convergence_tol: 1e-4,
            max_halvings: 6,
            t_floor: None,
            driver_split: DEFAULT_DRIVER_SPLIT,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(Error::invalid("convergence tolerance must be positive"));
        }
        if !(self.driver_split > 0.0) {
            return Err(Error::invalid("driver_split must be positive"));
        }
        Ok(())
    }
}

/// Product of the `+1` eigenvector of `S^x`, `(1/2, 1/sqrt 2, 1/2)`, on every site.
pub fn driver_ground_state(n_sites: usize) -> Result<QuantumState> {
    let dim = dimension(n_sites)?;
    let site = [0.5, FRAC_1_SQRT_2, 0.5];
    let amps = (0..dim)
        .map(|k| {
            let mut rest = k;
            let mut amp = 1.0;
            for _ in 0..n_sites {
                amp *= site[rest % 3];
                rest /= 3;
            }
            Complex64::new(amp, 0.0)
        })
        .collect();
    Ok(QuantumState::from_parts(n_sites, amps))
}

/// Probability weight of `state` on the classical ground set.
pub fn ground_set_probability(state: &QuantumState, ground: &GroundState) -> f64 {
    ground
        .indices
        .iter()
        .map(|&k| state.probability(k))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Annealing success `P_AQA`: weight of the final state on the exact ground set.
pub fn aqa_success(state: &QuantumState, inst: &ChainInstance) -> Result<f64> {
    if state.n_sites() != inst.n {
        return Err(Error::invalid("state and instance sizes differ"));
    }
    Ok(ground_set_probability(state, &exact_ground_state(inst)?))
}

/// Split-operator stepper for a fixed instance.
#[derive(Clone, Debug)]
pub struct Propagator {
    n_sites: usize,
    diag: Vec<f64>,
}

impl Propagator {
    pub fn new(inst: &ChainInstance) -> Result<Self> {
        Ok(Propagator { n_sites: inst.n, diag: diagonal_of_hp(inst)? })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    fn phases(&self, tau: f64) -> Vec<Complex64> {
        self.diag.iter().map(|&e| Complex64::from_polar(1.0, -e * tau)).collect()
    }

    fn check(&self, state: &QuantumState) -> Result<()> {
        if state.n_sites() != self.n_sites {
            return Err(Error::invalid(format!(
                "state has {} sites, instance has {}",
                state.n_sites(),
                self.n_sites
            )));
        }
        Ok(())
    }

    fn driver(&self, amps: &mut [Complex64], angle: f64) {
        if angle == 0.0 {
            return;
        }
        let rot = SingleSiteOperator::driver_rotation(angle);
        for site in 0..self.n_sites {
            apply_site_operator(amps, self.n_sites, site, &rot);
        }
    }

    /// `exp(-i H_P dt/2) exp(-i H_D dt) exp(-i H_P dt/2)` with driver amplitude `g_mid`.
    pub fn step_order2(&self, state: &mut QuantumState, g_mid: f64, dt: f64) -> Result<()> {
        self.check(state)?;
        if g_mid < 0.0 {
            return Err(Error::invalid(format!("driver amplitude {g_mid} is negative")));
        }
        let half = self.phases(dt / 2.0);
        let amps = state.amplitudes_mut();
        apply_phases(amps, &half);
        self.driver(amps, g_mid * dt);
        apply_phases(amps, &half);
        Ok(())
    }

    /// Fourth-order step over `[t_start, t_start + dt]`.
    pub fn step_order4(
        &self,
        state: &mut QuantumState,
        sched: &Schedule,
        t_start: f64,
        dt: f64,
    ) -> Result<()> {
        self.step_order4_with(state, |t| sched.g(t), t_start, dt)
    }

    /// Fourth-order step with an arbitrary driver amplitude `g(t)`.
    pub fn step_order4_with<G>(&self, state: &mut QuantumState, g: G, t_start: f64, dt: f64) -> Result<()>
    where
        G: Fn(f64) -> Result<f64>,
    {
        self.check(state)?;
        let kernel = Order4Kernel::new(self, dt);
        kernel.apply(self, state.amplitudes_mut(), g, t_start)
    }
}

fn apply_phases(amps: &mut [Complex64], phases: &[Complex64]) {
    amps.iter_mut().zip(phases).for_each(|(a, p)| *a *= p);
}

/// Phase tables for one fourth-order step of fixed width. Adjacent half-step
/// diagonal factors of neighbouring second-order stages are merged.
struct Order4Kernel {
    dt: f64,
    edge: Vec<Complex64>,
    inner: Vec<Complex64>,
    centre: Vec<Complex64>,
}

impl Order4Kernel {
    fn new(prop: &Propagator, dt: f64) -> Self {
        let p = suzuki_p();
        let q = 1.0 - 4.0 * p;
        Order4Kernel {
            dt,
            edge: prop.phases(0.5 * p * dt),
            inner: prop.phases(p * dt),
            centre: prop.phases(0.5 * (p + q) * dt),
        }
    }

    fn apply<G>(&self, prop: &Propagator, amps: &mut [Complex64], g_of_t: G, t_start: f64) -> Result<()>
    where
        G: Fn(f64) -> Result<f64>,
    {
        let widths = suzuki_widths();
        let between = [&self.inner, &self.centre, &self.centre, &self.inner];
        apply_phases(amps, &self.edge);
        let mut t = t_start;
        for (stage, w) in widths.iter().enumerate() {
            let w = w * self.dt;
            let g = g_of_t(t + 0.5 * w)?;
            if g < 0.0 {
                return Err(Error::invalid(format!("driver amplitude {g} is negative")));
            }
            prop.driver(amps, g * w);
            t += w;
            if let Some(phases) = between.get(stage) {
                apply_phases(amps, phases);
            }
        }
        apply_phases(amps, &self.edge);
        Ok(())
    }
}

/// One symmetric second-order step; see [`Propagator::step_order2`].
pub fn trotter_step_order2(
    state: &mut QuantumState,
    inst: &ChainInstance,
    g_mid: f64,
    dt: f64,
) -> Result<()> {
    Propagator::new(inst)?.step_order2(state, g_mid, dt)
}

/// One fourth-order step; see [`Propagator::step_order4`].
pub fn trotter_step_order4(
    state: &mut QuantumState,
    inst: &ChainInstance,
    sched: &Schedule,
    t_start: f64,
    dt: f64,
) -> Result<()> {
    Propagator::new(inst)?.step_order4(state, sched, t_start, dt)
}

/// Outcome of a single fixed-step run.
#[derive(Clone, Debug)]
pub struct FixedStepRun {
    pub state: QuantumState,
    pub steps: usize,
    pub dt: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: QuantumState,
    pub steps_used: usize,
    pub dt_used: f64,
    /// Ground-set probability of the accepted run.
    pub fidelity: f64,
    pub halvings: u32,
    pub ground: GroundState,
}

/// Number of steps covering `total` with steps no longer than `dt`.
pub fn step_count(total: f64, dt: f64) -> usize {
    ((total / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Runs from the driver ground state over `[t_floor, t_floor + T]` with the
/// largest step not exceeding `dt` that divides `T` evenly. A step starting
/// at `g > driver_split` is split into `ceil(g / driver_split)` sub-steps.
pub fn run_fixed_step(
    prop: &Propagator,
    ground: &GroundState,
    sched: &Schedule,
    dt: f64,
    driver_split: f64,
) -> Result<FixedStepRun> {
    let steps = step_count(sched.total_time, dt);
    let dt = sched.total_time / steps as f64;
    let mut state = driver_ground_state(prop.n_sites)?;
    let mut kernels: HashMap<usize, Order4Kernel> = HashMap::new();
    for k in 0..steps {
        let t_start = sched.t_floor + k as f64 * dt;
        let parts = (sched.g(t_start)? / driver_split).ceil().max(1.0) as usize;
        let kernel = kernels
            .entry(parts)
            .or_insert_with(|| Order4Kernel::new(prop, dt / parts as f64));
        for j in 0..parts {
            kernel.apply(prop, state.amplitudes_mut(), |t| sched.g(t), t_start + j as f64 * kernel.dt)?;
        }
    }
    let fidelity = ground_set_probability(&state, ground);
    Ok(FixedStepRun { state, steps, dt, fidelity })
}

/// Evolves from the driver ground state, halving the step until the final
/// ground-state fidelity changes by at most `cfg.convergence_tol`.
pub fn evolve(inst: &ChainInstance, sched: &Schedule, cfg: &EvolutionConfig) -> Result<Evolution> {
    cfg.validate()?;
    let prop = Propagator::new(inst)?;
    let ground = ground_state_of_diagonal(prop.diagonal());
    let sched = match cfg.t_floor {
        Some(t) => sched.with_t_floor(t)?,
        None => *sched,
    };
    let sched = &sched;

    let mut prev = run_fixed_step(&prop, &ground, sched, cfg.dt, cfg.driver_split)?;
    let finish = |run: FixedStepRun, halvings, ground| Evolution {
        state: run.state,
        steps_used: run.steps,
        dt_used: run.dt,
        fidelity: run.fidelity,
        halvings,
        ground,
    };
    if cfg.max_halvings == 0 {
        return Ok(finish(prev, 0, ground));
    }
    for halving in 1..=cfg.max_halvings {
        let dt = cfg.dt / 2f64.powi(halving as i32);
        let cur = run_fixed_step(&prop, &ground, sched, dt, cfg.driver_split)?;
        log::debug!(
            "halving {halving}: dt={:.3e} fidelity {:.8} -> {:.8}",
            cur.dt,
            prev.fidelity,
            cur.fidelity
        );
        if (cur.fidelity - prev.fidelity).abs() <= cfg.convergence_tol {
            return Ok(finish(cur, halving, ground));
        }
        if halving == cfg.max_halvings {
            return Err(Error::Convergence {
                halvings: halving,
                dt: cur.dt,
                previous: prev.fidelity,
                last: cur.fidelity,
            });
        }
        prev = cur;
    }
    unreachable!("loop returns on the final halving")
}
