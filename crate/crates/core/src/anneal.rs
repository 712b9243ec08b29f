//! Trit annealing: single-site Metropolis over `{-1, 0, +1}^N` with a
//! temperature that follows the driver schedule sweep by sweep.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{Schedule, TemperatureMapping};
use crate::spin1::{energy_unchecked, exact_ground_state, ChainInstance, TritConfig};

/// Identity of the generator behind every restart stream.
pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64(seed), stream = restart index";

const RECOMPUTE_EVERY: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaRunConfig {
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub energy_tol: f64,
    pub schedule: Schedule,
    pub mapping: TemperatureMapping,
    /// Time of the first sweep interval's left edge; `None` uses half a sweep width.
    pub t_floor: Option<f64>,
}

impl TaRunConfig {
    pub fn new(schedule: Schedule, sweeps: usize, restarts: usize, seed: u64) -> Self {
        TaRunConfig {
            sweeps,
            restarts,
            seed,
            energy_tol: 1e-6,
            schedule,
            mapping: TemperatureMapping::default(),
            t_floor: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::invalid("sweep count must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restart count must be at least 1"));
        }
        if !(self.energy_tol.is_finite() && self.energy_tol > 0.0) {
            return Err(Error::invalid("energy tolerance must be positive"));
        }
        Ok(())
    }

    /// Per-sweep temperatures on the midpoint grid.
    pub fn temperatures(&self) -> Result<Vec<f64>> {
        let width = self.schedule.total_time / self.sweeps as f64;
        let sched = self.schedule.with_t_floor(self.t_floor.unwrap_or(0.5 * width))?;
        (0..self.sweeps)
            .map(|k| {
                let g = sched.classical_temperature(k, self.sweeps)?;
                Ok(self.mapping.temperature(&sched, g))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaRunResult {
    pub final_energies: Vec<f64>,
    /// Lowest energy seen along each restart's trajectory.
    pub lowest_energies: Vec<f64>,
    pub successes: usize,
    pub success_probability: f64,
    pub ground_energy: f64,
}

fn check_trit(m: i8) -> Result<()> {
    if matches!(m, -1..=1) {
        Ok(())
    } else {
        Err(Error::invalid(format!("trit value {m} not in {{-1, 0, +1}}")))
    }
}

fn neighbor_sum(s: &[i8], site: usize) -> f64 {
    let left = if site > 0 { s[site - 1] } else { 0 };
    let right = s.get(site + 1).copied().unwrap_or(0);
    (left + right) as f64
}

/// `eps_i(m) = -J m sum_{j in nbr(i)} s_j - h m + D m^2`.
pub fn local_energy(inst: &ChainInstance, s: &TritConfig, site: usize, m: i8) -> Result<f64> {
    check_trit(m)?;
    if s.len() != inst.n || site >= inst.n {
        return Err(Error::invalid(format!("site {site} invalid for {} sites", inst.n)));
    }
    Ok(local_unchecked(inst, s.values(), site, m))
}

fn local_unchecked(inst: &ChainInstance, s: &[i8], site: usize, m: i8) -> f64 {
    let m = m as f64;
    -inst.j * m * neighbor_sum(s, site) - inst.h * m + inst.d * m * m
}

/// Energy change of setting `site` to `m_new`.
pub fn delta_energy(inst: &ChainInstance, s: &TritConfig, site: usize, m_new: i8) -> Result<f64> {
    let new = local_energy(inst, s, site, m_new)?;
    let current = s.get(site);
    if m_new == current {
        return Err(Error::invalid("proposed value equals the current value"));
    }
    Ok(new - local_unchecked(inst, s.values(), site, current))
}

/// Metropolis acceptance `min(1, exp(-dE / T))`.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-delta / temperature).exp()
    }
}

fn alternatives(v: i8) -> [i8; 2] {
    match v {
        1 => [0, -1],
        0 => [1, -1],
        _ => [1, 0],
    }
}

/// `N` single-site updates at fixed temperature. Returns the total energy change.
pub fn metropolis_sweep<R: Rng + ?Sized>(
    inst: &ChainInstance,
    s: &mut TritConfig,
    temperature: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    if s.len() != inst.n {
        return Err(Error::invalid("configuration length differs from the instance"));
    }
    Ok(sweep_unchecked(inst, s, temperature, rng))
}

fn sweep_unchecked<R: Rng + ?Sized>(
    inst: &ChainInstance,
    s: &mut TritConfig,
    temperature: f64,
    rng: &mut R,
) -> f64 {
    let mut change = 0.0;
    for _ in 0..inst.n {
        let site = rng.gen_range(0..inst.n);
        let current = s.get(site);
        let proposal = alternatives(current)[rng.gen_range(0..2)];
        let delta = local_unchecked(inst, s.values(), site, proposal)
            - local_unchecked(inst, s.values(), site, current);
        if delta <= 0.0 || rng.gen::<f64>() < acceptance_probability(delta, temperature) {
            s.set(site, proposal);
            change += delta;
        }
    }
    change
}

/// Independent stream for restart `r`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Configuration drawn uniformly from the `3^N` classical states.
pub fn random_config<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TritConfig {
    let values = (0..n).map(|_| rng.gen_range(-1i8..=1)).collect();
    TritConfig::new(values).expect("generated trits are in range")
}

/// One annealing trajectory; returns `(final energy, lowest energy seen)`.
fn run_restart(inst: &ChainInstance, temps: &[f64], seed: u64, restart: usize) -> (f64, f64) {
    let mut rng = restart_rng(seed, restart);
    let mut s = random_config(inst.n, &mut rng);
    let mut energy = energy_unchecked(inst, s.values());
    let mut lowest = energy;
    for (k, &temp) in temps.iter().enumerate() {
        energy += sweep_unchecked(inst, &mut s, temp, &mut rng);
        if (k + 1) % RECOMPUTE_EVERY == 0 {
            energy = energy_unchecked(inst, s.values());
        }
        lowest = lowest.min(energy);
    }
    let energy = energy_unchecked(inst, s.values());
    (energy, lowest.min(energy))
}

/// `R` independent annealing runs and the fraction ending at the ground energy.
pub fn ta_run(inst: &ChainInstance, cfg: &TaRunConfig) -> Result<TaRunResult> {
    cfg.validate()?;
    let ground_energy = exact_ground_state(inst)?.energy;
    let temps = cfg.temperatures()?;
    let (final_energies, lowest_energies): (Vec<f64>, Vec<f64>) = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(inst, &temps, cfg.seed, r))
        .collect::<Vec<_>>()
        .into_iter()
        .unzip();
    let successes = final_energies
        .iter()
        .filter(|&&e| (e - ground_energy).abs() <= cfg.energy_tol)
        .count();
    Ok(TaRunResult {
        success_probability: successes as f64 / cfg.restarts as f64,
        final_energies,
        lowest_energies,
        successes,
        ground_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Profile;
    use crate::spin1::{classical_energy, BasisIndex};
    use approx::assert_abs_diff_eq;
    use proptest::{prop_assert, proptest};

    fn cfg(profile: Profile, c: f64, sweeps: usize, restarts: usize, seed: u64) -> TaRunConfig {
        TaRunConfig::new(Schedule::new(profile, c, 1000.0).unwrap(), sweeps, restarts, seed)
    }

    #[test]
    fn local_energy_examples() {
        let inst = ChainInstance::new(3, 1.0, 0.2, 0.0).unwrap();
        let s = TritConfig::new(vec![1, 0, 1]).unwrap();
        assert_abs_diff_eq!(local_energy(&inst, &s, 1, 1).unwrap(), -2.2, epsilon = 1e-12);
        for site in 0..3 {
            assert_eq!(local_energy(&inst, &s, site, 0).unwrap(), 0.0);
        }
        // -J*m*s_nb - h*m + D*m^2 = 2 + 0.2 + 2
        let inst = ChainInstance::new(2, -2.0, 0.2, 2.0).unwrap();
        let s = TritConfig::new(vec![0, -1]).unwrap();
        assert_abs_diff_eq!(local_energy(&inst, &s, 0, -1).unwrap(), 4.2, epsilon = 1e-12);
        assert!(local_energy(&inst, &s, 0, 2).is_err());
        assert!(local_energy(&inst, &s, 2, 0).is_err());
    }

    #[test]
    fn delta_energy_examples() {
        let inst = ChainInstance::new(3, 1.0, 0.2, 0.0).unwrap();
        let s = TritConfig::new(vec![1, 0, 1]).unwrap();
        assert_abs_diff_eq!(delta_energy(&inst, &s, 1, 1).unwrap(), -2.2, epsilon = 1e-12);
        assert!(delta_energy(&inst, &s, 1, 0).is_err());

        let forward = delta_energy(&inst, &s, 1, -1).unwrap();
        let moved = s.with_site(1, -1);
        let back = delta_energy(&inst, &moved, 1, 0).unwrap();
        assert_abs_diff_eq!(forward, -back, epsilon = 1e-12);
    }

    #[test]
    fn delta_energy_matches_global_recompute_random() {
        let inst = ChainInstance::new(5, -1.3, 0.2, 0.8).unwrap();
        let mut rng = restart_rng(3, 0);
        for _ in 0..1000 {
            let s = random_config(5, &mut rng);
            let site = rng.gen_range(0..5);
            let m = alternatives(s.get(site))[rng.gen_range(0..2)];
            let global = classical_energy(&inst, &s.with_site(site, m)).unwrap()
                - classical_energy(&inst, &s).unwrap();
            assert_abs_diff_eq!(delta_energy(&inst, &s, site, m).unwrap(), global, epsilon = 1e-12);
        }
    }

    #[test]
    fn downhill_always_accepted() {
        assert_eq!(acceptance_probability(-3.0, 0.1), 1.0);
        assert_eq!(acceptance_probability(0.0, 1e-9), 1.0);
        assert!(acceptance_probability(1.0, 1e-6) == 0.0);
        let p = acceptance_probability(1.0, 2.0);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn cold_sweep_never_climbs() {
        let inst = ChainInstance::new(5, -1.0, 0.2, 0.5).unwrap();
        let mut rng = restart_rng(9, 0);
        for _ in 0..50 {
            let mut s = random_config(5, &mut rng);
            let before = classical_energy(&inst, &s).unwrap();
            let change = metropolis_sweep(&inst, &mut s, 1e-300, &mut rng).unwrap();
            let after = classical_energy(&inst, &s).unwrap();
            assert!(change <= 0.0);
            assert_abs_diff_eq!(after - before, change, epsilon = 1e-12);
        }
        let mut s = TritConfig::zeros(5);
        assert!(metropolis_sweep(&inst, &mut s, 0.0, &mut rng).is_err());
    }

    #[test]
    fn all_successful_runs_score_one() {
        // deep quench on a funnel landscape
        let inst = ChainInstance::new(3, -1.0, 0.2, 3.0).unwrap();
        let res = ta_run(&inst, &cfg(Profile::Quadratic, 1.0, 200, 16, 4)).unwrap();
        assert_eq!(res.successes, 16);
        assert_eq!(res.success_probability, 1.0);
    }

    #[test]
    fn easy_instance_mostly_succeeds() {
        let inst = ChainInstance::new(5, 1.0, 0.2, 0.0).unwrap();
        let res = ta_run(&inst, &cfg(Profile::Log, 20.0, 1000, 20, 1)).unwrap();
        assert!(res.success_probability >= 0.7, "{res:?}");
    }

    #[test]
    fn same_seed_same_result() {
        let inst = ChainInstance::new(5, -2.0, 0.2, -1.0).unwrap();
        let c = cfg(Profile::Sqrt, 5.0, 300, 8, 77);
        assert_eq!(ta_run(&inst, &c).unwrap(), ta_run(&inst, &c).unwrap());
        let other = TaRunConfig { seed: 78, ..c.clone() };
        assert_ne!(
            ta_run(&inst, &c).unwrap().final_energies,
            ta_run(&inst, &other).unwrap().final_energies
        );
    }

    #[test]
    fn invariants_of_result() {
        let inst = ChainInstance::new(5, -2.0, 0.2, 1.0).unwrap();
        let c = cfg(Profile::Linear, 5.0, 200, 30, 5);
        let res = ta_run(&inst, &c).unwrap();
        let count = res.success_probability * c.restarts as f64;
        assert_abs_diff_eq!(count, count.round(), epsilon = 1e-12);
        for (&fin, &low) in res.final_energies.iter().zip(&res.lowest_energies) {
            assert!(fin >= res.ground_energy - c.energy_tol);
            assert!(low >= res.ground_energy - c.energy_tol);
        }
    }

    #[test]
    fn config_validation() {
        let inst = ChainInstance::new(2, 1.0, 0.2, 0.0).unwrap();
        let mut c = cfg(Profile::Log, 1.0, 0, 1, 0);
        assert!(ta_run(&inst, &c).is_err());
        c.sweeps = 1;
        c.restarts = 0;
        assert!(ta_run(&inst, &c).is_err());
        c.restarts = 1;
        c.energy_tol = 0.0;
        assert!(ta_run(&inst, &c).is_err());
    }

    #[test]
    fn monotone_budget() {
        let inst = ChainInstance::new(5, 1.0, 0.2, 0.0).unwrap();
        let mean = |sweeps| {
            (0..100u64)
                .map(|seed| {
                    ta_run(&inst, &cfg(Profile::Log, 20.0, sweeps, 4, seed))
                        .unwrap()
                        .success_probability
                })
                .sum::<f64>()
                / 100.0
        };
        let short = mean(10);
        let long = mean(10_000);
        assert!(long >= short - 0.05, "S=10: {short}, S=10^4: {long}");
    }

    #[test]
    fn initial_draw_is_uniform() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let draws = 100_000;
        let mut counts = [0usize; 9];
        for r in 0..draws {
            let s = random_config(2, &mut restart_rng(2024, r));
            counts[BasisIndex::encode(&s).0] += 1;
        }
        let expected = draws as f64 / 9.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new(8.0).unwrap().cdf(chi2);
        assert!(p > 1e-3, "chi2 = {chi2}, p = {p}");
    }

    proptest! {
        #[test]
        fn acceptance_in_unit_interval(delta in 1e-6f64..50.0, temp in 0.05f64..100.0) {
            let p = acceptance_probability(delta, temp);
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn delta_energy_exhaustive_n3() {
        let inst = ChainInstance::new(3, -1.7, 0.2, 0.9).unwrap();
        for k in 0..27 {
            let s = BasisIndex(k).decode(3);
            let e = classical_energy(&inst, &s).unwrap();
            for site in 0..3 {
                for m in alternatives(s.get(site)) {
                    let global = classical_energy(&inst, &s.with_site(site, m)).unwrap() - e;
                    assert!((delta_energy(&inst, &s, site, m).unwrap() - global).abs() <= 1e-12);
                }
            }
        }
    }
}
