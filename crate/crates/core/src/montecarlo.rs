//! Brute-force oracles for the closed forms.
//!
//! Two simulators estimate the reception probability of a class:
//!
//! * **spatial**: draws the space-time Poisson rain on a disk around the
//!   gateway, applies path loss and i.i.d. fading to every point, classifies
//!   received powers into classes and declares the tagged packet lost when a
//!   same-class packet starts inside its vulnerability window. It shares no
//!   code path with [`crate::analytic`] beyond the scenario parameters.
//! * **power-domain**: samples the received-power Poisson process directly
//!   by inverse transform of its power-law tail. It checks the analytic
//!   pipeline rather than the physics.
//!
//! Replication `k` always draws from its own ChaCha stream keyed by
//! `(seed, class, k)`, and results are reduced as integer sums, so estimates
//! do not depend on how many workers run them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::analytic::{finite_disk_rate, intensity_coefficient, tail_mean, Scenario};
use crate::error::{Error, Result};

const BATCH: u64 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimMode {
    Spatial,
    PowerDomain,
}

impl SimMode {
    pub fn name(&self) -> &'static str {
        match self {
            SimMode::Spatial => "spatial",
            SimMode::PowerDomain => "power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub replications: u64,
    pub seed: u64,
    /// Probability that a point beyond the simulated disk would still be
    /// received above `P_1`.
    pub tail_epsilon: f64,
    /// Replace the tail-based radius by a fixed disk (experimental
    /// finite-network mode).
    pub disk_truncation_m: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            replications: 100_000,
            seed: 0,
            tail_epsilon: 1e-7,
            disk_truncation_m: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon <= 0.01) {
            return Err(Error::invalid(
                "tail_epsilon",
                format!("must lie in (0, 0.01], got {}", self.tail_epsilon),
            ));
        }
        if let Some(r) = self.disk_truncation_m {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid("disk_truncation_m", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub replications: u64,
    pub successes: u64,
    pub mode: SimMode,
    pub seed: u64,
}

impl SimEstimate {
    fn from_counts(successes: u64, replications: u64, mode: SimMode, seed: u64) -> Self {
        let n = replications as f64;
        let p_hat = successes as f64 / n;
        SimEstimate {
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / n).sqrt(),
            replications,
            successes,
            mode,
            seed,
        }
    }

    /// `(p_hat - reference) / stderr`, undefined when the estimate has no spread.
    pub fn z_score(&self, reference: f64) -> Option<f64> {
        (self.stderr > 0.0).then(|| (self.p_hat - reference) / self.stderr)
    }

    /// z-score under the null hypothesis `p = reference`, using the binomial
    /// standard error of the reference itself. Defined even when every
    /// replication agreed.
    pub fn null_z(&self, reference: f64) -> f64 {
        let diff = self.p_hat - reference;
        if diff == 0.0 {
            return 0.0;
        }
        let se = (reference * (1.0 - reference) / self.replications as f64).sqrt();
        if se > 0.0 {
            diff / se
        } else {
            diff.signum() * f64::INFINITY
        }
    }

    pub fn confidence_interval(&self, z: f64) -> (f64, f64) {
        (self.p_hat - z * self.stderr, self.p_hat + z * self.stderr)
    }
}

/// Radius beyond which a transmission reaches `P_1` with probability at most
/// `tail_epsilon`: `(P_tr F_q / P_1)^{1/β} / κ`.
pub fn max_relevant_radius(scn: &Scenario, tail_epsilon: f64) -> Result<f64> {
    if !(tail_epsilon > 0.0 && tail_epsilon < 1.0) {
        return Err(Error::invalid("tail_epsilon", "must lie in (0, 1)"));
    }
    let p1 = scn.class(1)?.sensitivity_mw;
    let f_q = scn.fading.upper_quantile(tail_epsilon);
    Ok((scn.p_tr_mw * f_q / p1).powf(1.0 / scn.pathloss.beta) / scn.pathloss.kappa)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic stream factory: one ChaCha key per `(seed, tag)`, one
/// stream per replication.
#[derive(Clone, Copy)]
struct Streams {
    key: [u8; 32],
}

impl Streams {
    fn new(seed: u64, tag: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed ^ splitmix64(tag);
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Streams { key }
    }

    fn replication(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(k);
        rng
    }
}

/// Runs `trial` once per replication in parallel and sums the integer
/// results.
fn par_sum<F>(replications: u64, trial: F) -> u64
where
    F: Fn(u64) -> u64 + Sync,
{
    let batches = replications.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let end = ((b + 1) * BATCH).min(replications);
            (b * BATCH..end).map(&trial).sum::<u64>()
        })
        .sum()
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean <= 0.0 {
        return Ok(None);
    }
    Poisson::new(mean)
        .map(Some)
        .map_err(|e| Error::Numeric(format!("poisson mean {mean:e}: {e}")))
}

fn draw_count<R: Rng>(dist: &Option<Poisson<f64>>, rng: &mut R) -> u64 {
    dist.as_ref().map_or(0, |d| d.sample(rng) as u64)
}

/// Geometry of one spatial sample: a disk of radius `radius_m` holding a
/// Poisson number of transmitters with radial density `∝ r^{α+1}`.
struct SpatialSampler<'a> {
    scn: &'a Scenario,
    count: Option<Poisson<f64>>,
    beta_over_q: f64,
    /// `P_tr / (κ R)^β`, the unfaded power at the disk edge.
    edge_power: f64,
}

impl<'a> SpatialSampler<'a> {
    fn new(scn: &'a Scenario, radius_m: f64, window_s: f64) -> Result<Self> {
        scn.validate()?;
        let q = scn.alpha + 2.0;
        let mass = scn.lambda() * 2.0 * PI / q * radius_m.powf(q) * window_s;
        Ok(SpatialSampler {
            scn,
            count: poisson(mass)?,
            beta_over_q: scn.pathloss.beta / q,
            edge_power: scn.p_tr_mw / (scn.pathloss.kappa * radius_m).powf(scn.pathloss.beta),
        })
    }

    /// Received power of one uniformly placed transmitter. With
    /// `r = R u^{1/q}`, `(κr)^β = (κR)^β u^{β/q}`.
    fn power<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let fading = self.scn.fading.sample(rng);
        self.edge_power * fading * u.powf(-self.beta_over_q)
    }
}

fn spatial_radius(scn: &Scenario, cfg: &SimConfig) -> Result<f64> {
    match cfg.disk_truncation_m {
        Some(r) => Ok(r),
        None => max_relevant_radius(scn, cfg.tail_epsilon),
    }
}

/// Space-time Poisson-rain estimate of `Π_n`.
///
/// Interferer start times `s` are drawn on `[-B_n, Δ_n]`; a start collides
/// when the interferer's on-air span `[s, s + B_n]` meets the lock phase
/// `[0, Δ_n]` of the tagged packet and its received power lands in class `n`.
pub fn simulate_class_spatial(scn: &Scenario, n: usize, cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    let class = *scn.class(n)?;
    let radius = spatial_radius(scn, cfg)?;
    let airtime = class.airtime_s;
    let lock = class.lock_s;
    let sampler = SpatialSampler::new(scn, radius, class.window_s())?;
    let streams = Streams::new(cfg.seed, n as u64);

    let successes = par_sum(cfg.replications, |k| {
        let mut rng = streams.replication(k);
        let points = draw_count(&sampler.count, &mut rng);
        for _ in 0..points {
            let start = -airtime + rng.random::<f64>() * (airtime + lock);
            let power = sampler.power(&mut rng);
            let overlaps = start < lock && start + airtime > 0.0;
            if overlaps && scn.classify(power) == Some(n) {
                return 0;
            }
        }
        1
    });
    Ok(SimEstimate::from_counts(
        successes,
        cfg.replications,
        SimMode::Spatial,
        cfg.seed,
    ))
}

/// Power-domain estimate of `Π_n`: arrivals above `P_1` are Poisson with
/// mean `c w P_1^{-e}`, each with power `P_1 U^{-1/e}`.
pub fn simulate_class_power(scn: &Scenario, n: usize, cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    if cfg.disk_truncation_m.is_some() {
        return Err(Error::invalid(
            "disk_truncation_m",
            "disk truncation only applies to the spatial simulator",
        ));
    }
    scn.validate()?;
    let class = *scn.class(n)?;
    let e = scn.power_exponent();
    let p1 = scn.class(1)?.sensitivity_mw;
    let count = poisson(tail_mean(scn, p1, class.window_s())?)?;
    let streams = Streams::new(cfg.seed, (1 << 32) | n as u64);

    let successes = par_sum(cfg.replications, |k| {
        let mut rng = streams.replication(k);
        let points = draw_count(&count, &mut rng);
        for _ in 0..points {
            // 1 - U lies in (0, 1], keeping the power finite.
            let u = 1.0 - rng.random::<f64>();
            let power = p1 * u.powf(-1.0 / e);
            if scn.classify(power) == Some(n) {
                return 0;
            }
        }
        1
    });
    Ok(SimEstimate::from_counts(
        successes,
        cfg.replications,
        SimMode::PowerDomain,
        cfg.seed,
    ))
}

pub fn simulate_class(
    scn: &Scenario,
    n: usize,
    cfg: &SimConfig,
    mode: SimMode,
) -> Result<SimEstimate> {
    match mode {
        SimMode::Spatial => simulate_class_spatial(scn, n, cfg),
        SimMode::PowerDomain => simulate_class_power(scn, n, cfg),
    }
}

/// Empirical vs closed-form mean number of arrivals above one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawCheck {
    pub threshold_mw: f64,
    pub empirical_mean: f64,
    pub analytic_mean: f64,
    pub stderr: f64,
    pub z: f64,
}

/// Counts spatial-sample arrivals above each threshold per window and
/// compares with `c w t^{-e}` (or the finite-disk intensity when the
/// configuration truncates to a disk).
pub fn validate_power_law(
    scn: &Scenario,
    thresholds_mw: &[f64],
    window_s: f64,
    cfg: &SimConfig,
) -> Result<Vec<PowerLawCheck>> {
    cfg.validate()?;
    if !(window_s > 0.0) {
        return Err(Error::invalid("window_s", "must be positive"));
    }
    let p1 = scn.class(1)?.sensitivity_mw;
    if cfg.disk_truncation_m.is_none() {
        if let Some(&t) = thresholds_mw.iter().find(|&&t| !(t >= p1)) {
            return Err(Error::invalid(
                "thresholds",
                format!("threshold {t:e} mW lies below P_1 = {p1:e} mW; the truncated sample would be biased"),
            ));
        }
    }
    let radius = spatial_radius(scn, cfg)?;
    let sampler = SpatialSampler::new(scn, radius, window_s)?;
    let streams = Streams::new(cfg.seed, 2 << 32);
    let m = thresholds_mw.len();

    let batches = cfg.replications.div_ceil(BATCH);
    let (sums, squares) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut sums = vec![0u64; m];
            let mut squares = vec![0u128; m];
            let mut counts = vec![0u64; m];
            let end = ((b + 1) * BATCH).min(cfg.replications);
            for k in b * BATCH..end {
                let mut rng = streams.replication(k);
                counts.iter_mut().for_each(|c| *c = 0);
                for _ in 0..draw_count(&sampler.count, &mut rng) {
                    let power = sampler.power(&mut rng);
                    for (c, &t) in counts.iter_mut().zip(thresholds_mw) {
                        if power > t {
                            *c += 1;
                        }
                    }
                }
                for i in 0..m {
                    sums[i] += counts[i];
                    squares[i] += u128::from(counts[i]) * u128::from(counts[i]);
                }
            }
            (sums, squares)
        })
        .reduce(
            || (vec![0u64; m], vec![0u128; m]),
            |(mut s1, mut q1), (s2, q2)| {
                s1.iter_mut().zip(&s2).for_each(|(a, b)| *a += b);
                q1.iter_mut().zip(&q2).for_each(|(a, b)| *a += b);
                (s1, q1)
            },
        );

    let n = cfg.replications as f64;
    thresholds_mw
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let analytic_mean = match cfg.disk_truncation_m {
                Some(r) => finite_disk_rate(scn, t, r)? * window_s,
                None => tail_mean(scn, t, window_s)?,
            };
            let mean = sums[i] as f64 / n;
            let var = if cfg.replications > 1 {
                ((squares[i] as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            let stderr = (var / n).sqrt();
            let diff = mean - analytic_mean;
            let z = if diff == 0.0 {
                0.0
            } else if stderr > 0.0 {
                diff / stderr
            } else {
                diff.signum() * f64::INFINITY
            };
            Ok(PowerLawCheck {
                threshold_mw: t,
                empirical_mean: mean,
                analytic_mean,
                stderr,
                z,
            })
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Mean of `intensity_coefficient` exposed for diagnostics next to MC output.
pub fn expected_interferers(scn: &Scenario, n: usize) -> Result<f64> {
    let class = scn.class(n)?;
    let e = scn.power_exponent();
    let upper = scn.upper_bound(n).map_or(0.0, |p| p.powf(-e));
    Ok(intensity_coefficient(scn)? * class.window_s() * (class.sensitivity_mw.powf(-e) - upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::reception_probability;
    use crate::channel::{dbm_to_mw, FadingModel};

    fn cfg(replications: u64, seed: u64) -> SimConfig {
        SimConfig {
            replications,
            seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn radius_examples() {
        let mut scn = Scenario::rural_default(1000.0).with_fading(FadingModel::NoFading);
        let base = max_relevant_radius(&scn, 1e-7).unwrap();
        assert!((base - 2.0 * 10f64.powf(4.2)).abs() < 1e-6);
        assert!((base - 31_698.0).abs() < 1.0);

        scn.fading = FadingModel::Rayleigh;
        let r = max_relevant_radius(&scn, 1e-7).unwrap();
        let factor = (-(1e-7f64).ln()).powf(1.0 / 3.5);
        assert!((r / base - factor).abs() < 1e-12);
        assert!((factor - 2.2128).abs() < 1e-4);
        assert!((r - 70_142.0).abs() < 1.0);

        let mut one = Scenario::rural_default(1000.0).with_fading(FadingModel::NoFading);
        one.classes.truncate(1);
        let mut one = one.with_sensitivities_mw(&[10.0]).unwrap();
        one.pathloss.kappa = 1.0;
        assert!((max_relevant_radius(&one, 1e-7).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_process() {
        let scn = Scenario::rural_default(0.0);
        for mode in [SimMode::Spatial, SimMode::PowerDomain] {
            let est = simulate_class(&scn, 3, &cfg(1000, 1), mode).unwrap();
            assert_eq!(est.p_hat, 1.0);
            assert_eq!(est.stderr, 0.0);
            assert_eq!(est.z_score(1.0), None);
            assert_eq!(est.null_z(1.0), 0.0);
        }
        let checks = validate_power_law(&scn, &[dbm_to_mw(-137.0)], 1.0, &cfg(100, 1)).unwrap();
        assert_eq!(checks[0].empirical_mean, 0.0);
        assert_eq!(checks[0].analytic_mean, 0.0);
        assert_eq!(checks[0].z, 0.0);
    }

    #[test]
    fn config_errors() {
        let scn = Scenario::rural_default(1000.0);
        assert!(simulate_class_spatial(&scn, 1, &cfg(0, 1)).is_err());
        assert!(simulate_class_spatial(&scn.clone().with_alpha(-2.5), 1, &cfg(10, 1)).is_err());
        assert!(simulate_class_spatial(&scn, 9, &cfg(10, 1)).is_err());
        let bad = SimConfig {
            tail_epsilon: 0.5,
            ..cfg(10, 1)
        };
        assert!(simulate_class_spatial(&scn, 1, &bad).is_err());
        let disk = SimConfig {
            disk_truncation_m: Some(8000.0),
            ..cfg(10, 1)
        };
        assert!(simulate_class_power(&scn, 1, &disk).is_err());
        assert!(validate_power_law(&scn, &[dbm_to_mw(-140.0)], 1.0, &cfg(10, 1)).is_err());
        // In finite-disk mode the sample is complete, so low thresholds are fine.
        assert!(validate_power_law(&scn, &[dbm_to_mw(-140.0)], 1.0, &disk).is_ok());
    }

    #[test]
    fn estimator_fields() {
        let scn = Scenario::rural_default(1000.0);
        let est = simulate_class_spatial(&scn, 4, &cfg(5000, 9)).unwrap();
        assert!(est.successes <= est.replications);
        assert_eq!(est.p_hat, est.successes as f64 / 5000.0);
        let se = (est.p_hat * (1.0 - est.p_hat) / 5000.0).sqrt();
        assert_eq!(est.stderr, se);
        assert_eq!(est.seed, 9);
        assert_eq!(est.mode, SimMode::Spatial);
    }

    #[test]
    fn power_mode_matches_void_probability() {
        let scn = Scenario::rural_default(1000.0);
        for n in 1..=7 {
            let pi = reception_probability(&scn, n).unwrap().pi;
            let est = simulate_class_power(&scn, n, &cfg(100_000, 7)).unwrap();
            assert!(est.null_z(pi).abs() <= 4.0, "class {n}: {est:?} vs {pi}");
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let scn = Scenario::rural_default(1000.0);
        let c = cfg(10_000, 42);
        let one = with_workers(1, || simulate_class_spatial(&scn, 1, &c))
            .unwrap()
            .unwrap();
        let eight = with_workers(8, || simulate_class_spatial(&scn, 1, &c))
            .unwrap()
            .unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn expected_interferers_is_void_mean() {
        let scn = Scenario::rural_default(1500.0);
        for n in 1..=7 {
            let r = reception_probability(&scn, n).unwrap();
            let m = expected_interferers(&scn, n).unwrap();
            assert!((m - r.void_mean).abs() <= 1e-15 * m.max(1.0));
        }
    }
}
