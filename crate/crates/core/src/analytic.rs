//! Closed forms of the Poisson-rain reception model.
//!
//! Transmissions form a space-time Poisson process of density `λ r^α`
//! (`λ = λ_s λ_t`, `α = 0` is the homogeneous network). The received powers
//! during a window of length `w` are then a Poisson process on `(0, ∞)` whose
//! mean number of points above `t` is `c · w · t^{-e}` with `e = (α+2)/β` and
//!
//! ```text
//! c = 2π λ P_tr^e E[F^e] / ((α+2) κ^{α+2})
//! ```
//!
//! which is `π λ P_tr^{2/β} E[F^{2/β}] / κ²` in the homogeneous case. A packet
//! in class `n` (power in `[P_n, P_{n+1})`) survives iff no other class-`n`
//! packet starts inside its vulnerability window, so its reception
//! probability is a Poisson void probability.

use std::f64::consts::PI;

use crate::channel::{dbm_to_mw, mw_to_dbm, FadingModel, PathLossParams};
use crate::error::{Error, Result};
use crate::lora_phy::{packet_airtime, RadioConfig};

/// Table 1 sensitivities, `(sf, dBm)` from the weakest class up.
pub const REFERENCE_SENSITIVITY_DBM: [(u8, f64); 7] = [
    (12, -137.0),
    (11, -135.0),
    (10, -133.0),
    (9, -130.0),
    (8, -127.0),
    (7, -124.0),
    (6, -121.0),
];

/// Vendor-recommended sensitivities as listed next to the equalized ones.
pub const LORA_RECOMMENDED_DBM: [(u8, f64); 7] = [
    (12, -137.0),
    (11, -135.0),
    (10, -133.0),
    (9, -131.0),
    (8, -129.0),
    (7, -126.0),
    (6, -121.0),
];

/// Published equalized sensitivities for `Π ≈ 0.95` at 1000 nodes in 8 km.
pub const PUBLISHED_EQUALIZED_DBM: [(u8, f64); 7] = [
    (12, -135.0),
    (11, -134.0),
    (10, -133.0),
    (9, -130.0),
    (8, -127.0),
    (7, -124.0),
    (6, -121.0),
];

/// Normalization radius of the reference rural deployment.
pub const DEFAULT_NORM_RADIUS_M: f64 = 8000.0;

/// Transmissions per node per second (one packet every 16.666 minutes).
pub const DEFAULT_LAMBDA_T: f64 = 0.001;

/// One received-power class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfClass {
    /// 1-based, ascending in received power.
    pub index_n: usize,
    pub sf: u8,
    pub sensitivity_mw: f64,
    /// Packet airtime `B_n`.
    pub airtime_s: f64,
    /// Lock phase `Δ_n`.
    pub lock_s: f64,
}

impl SfClass {
    /// Vulnerability window `B_n + Δ_n`.
    pub fn window_s(&self) -> f64 {
        self.airtime_s + self.lock_s
    }

    pub fn sensitivity_dbm(&self) -> f64 {
        10.0 * self.sensitivity_mw.log10()
    }
}

/// Builds the class table from `(sf, sensitivity_mw)` pairs listed from the
/// weakest class up, deriving airtimes from `radio`.
pub fn build_classes(radio: &RadioConfig, entries: &[(u8, f64)]) -> Result<Vec<SfClass>> {
    let classes = entries
        .iter()
        .enumerate()
        .map(|(i, &(sf, sensitivity_mw))| {
            let air = packet_airtime(sf, radio)?;
            Ok(SfClass {
                index_n: i + 1,
                sf,
                sensitivity_mw,
                airtime_s: air.total_s,
                lock_s: air.lock_window_s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    validate_classes(&classes)?;
    Ok(classes)
}

pub fn classes_from_dbm(radio: &RadioConfig, entries: &[(u8, f64)]) -> Result<Vec<SfClass>> {
    let mw: Vec<(u8, f64)> = entries.iter().map(|&(sf, d)| (sf, dbm_to_mw(d))).collect();
    build_classes(radio, &mw)
}

fn validate_classes(classes: &[SfClass]) -> Result<()> {
    if classes.is_empty() {
        return Err(Error::invalid("classes", "at least one class is required"));
    }
    for c in classes {
        if !(c.sensitivity_mw.is_finite() && c.sensitivity_mw > 0.0) {
            return Err(Error::invalid(
                "classes",
                format!(
                    "sensitivity of class {} must be a positive power",
                    c.index_n
                ),
            ));
        }
    }
    for pair in classes.windows(2) {
        if pair[0].sensitivity_mw >= pair[1].sensitivity_mw {
            return Err(Error::invalid(
                "classes",
                format!(
                    "sensitivities must strictly increase with class index (class {} vs {})",
                    pair[0].index_n, pair[1].index_n
                ),
            ));
        }
        if pair[0].sf < pair[1].sf {
            return Err(Error::invalid(
                "classes",
                format!(
                    "spreading factor must not increase with received power (SF{} below SF{})",
                    pair[0].sf, pair[1].sf
                ),
            ));
        }
    }
    Ok(())
}

/// Network, channel and class parameters of one deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Nodes per m² (at unit distance when `alpha != 0`).
    pub lambda_s: f64,
    /// Packets per node per second.
    pub lambda_t: f64,
    pub norm_radius_m: f64,
    /// Density decay exponent; the spatial density is `λ_s r^α`.
    pub alpha: f64,
    pub p_tr_mw: f64,
    pub pathloss: PathLossParams,
    pub fading: FadingModel,
    pub radio: RadioConfig,
    pub classes: Vec<SfClass>,
}

impl Scenario {
    /// Rural reference deployment: `n_nodes` within 8 km, one packet per
    /// 1000 s, β = 3.5, κ = 0.5, 10 dBm, Rayleigh fading, Table 1 classes.
    pub fn rural_default(n_nodes: f64) -> Self {
        let radio = RadioConfig::default();
        let classes =
            classes_from_dbm(&radio, &REFERENCE_SENSITIVITY_DBM).expect("table 1 is well formed");
        Scenario {
            lambda_s: n_nodes / (PI * DEFAULT_NORM_RADIUS_M * DEFAULT_NORM_RADIUS_M),
            lambda_t: DEFAULT_LAMBDA_T,
            norm_radius_m: DEFAULT_NORM_RADIUS_M,
            alpha: 0.0,
            p_tr_mw: dbm_to_mw(10.0),
            pathloss: PathLossParams {
                beta: 3.5,
                kappa: 0.5,
            },
            fading: FadingModel::Rayleigh,
            radio,
            classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_s.is_finite() && self.lambda_s >= 0.0) {
            return Err(Error::invalid("lambda_s", "must be finite and nonnegative"));
        }
        if !(self.lambda_t.is_finite() && self.lambda_t >= 0.0) {
            return Err(Error::invalid("lambda_t", "must be finite and nonnegative"));
        }
        if !(self.norm_radius_m.is_finite() && self.norm_radius_m > 0.0) {
            return Err(Error::invalid("norm_radius_m", "must be positive"));
        }
        check_alpha(self.alpha)?;
        if !(self.p_tr_mw.is_finite() && self.p_tr_mw > 0.0) {
            return Err(Error::invalid("p_tr_mw", "must be positive"));
        }
        self.pathloss.validate()?;
        self.fading.validate()?;
        self.radio.validate()?;
        validate_classes(&self.classes)
    }

    /// Space-time density `λ = λ_s λ_t`.
    pub fn lambda(&self) -> f64 {
        self.lambda_s * self.lambda_t
    }

    /// Mean number of nodes inside the normalization disk for a homogeneous
    /// network.
    pub fn n_nodes(&self) -> f64 {
        self.lambda_s * PI * self.norm_radius_m * self.norm_radius_m
    }

    pub fn with_nodes(mut self, n_nodes: f64) -> Self {
        self.lambda_s = n_nodes / (PI * self.norm_radius_m * self.norm_radius_m);
        self
    }

    pub fn with_fading(mut self, fading: FadingModel) -> Self {
        self.fading = fading;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Same scenario with new thresholds (mW, weakest first); each class keeps
    /// its spreading factor.
    pub fn with_sensitivities_mw(&self, sensitivities: &[f64]) -> Result<Self> {
        if sensitivities.len() != self.classes.len() {
            return Err(Error::invalid(
                "sensitivities",
                format!(
                    "expected {} thresholds, got {}",
                    self.classes.len(),
                    sensitivities.len()
                ),
            ));
        }
        let entries: Vec<(u8, f64)> = self
            .classes
            .iter()
            .zip(sensitivities)
            .map(|(c, &p)| (c.sf, p))
            .collect();
        let mut out = self.clone();
        out.classes = build_classes(&self.radio, &entries)?;
        Ok(out)
    }

    pub fn with_sensitivities_dbm(&self, sensitivities: &[f64]) -> Result<Self> {
        let mw: Vec<f64> = sensitivities.iter().map(|&d| dbm_to_mw(d)).collect();
        self.with_sensitivities_mw(&mw)
    }

    /// Exponent `e = (α+2)/β` of the received-power tail.
    pub fn power_exponent(&self) -> f64 {
        (self.alpha + 2.0) / self.pathloss.beta
    }

    pub fn class(&self, n: usize) -> Result<&SfClass> {
        if n == 0 || n > self.classes.len() {
            return Err(Error::ClassIndex {
                index: n,
                count: self.classes.len(),
            });
        }
        Ok(&self.classes[n - 1])
    }

    /// `P_{n+1}`, or `None` for the top class.
    pub fn upper_bound(&self, n: usize) -> Option<f64> {
        self.classes.get(n).map(|c| c.sensitivity_mw)
    }

    /// Index of the class containing received power `p`, if `p >= P_1`.
    pub fn classify(&self, p_mw: f64) -> Option<usize> {
        let above = self.classes.partition_point(|c| c.sensitivity_mw <= p_mw);
        (above > 0).then_some(above)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > -2.0) {
        return Err(Error::invalid(
            "alpha",
            format!("must exceed -2 for a finite intensity, got {alpha}"),
        ));
    }
    Ok(())
}

/// Per-class outcome of the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassResult {
    pub index_n: usize,
    pub sf: u8,
    /// Reception probability `Π_n`.
    pub pi: f64,
    /// `c · (B_n + Δ_n)`.
    pub a_n: f64,
    pub window_s: f64,
    /// Poisson mean of same-class interferers, `-ln Π_n`.
    pub void_mean: f64,
}

/// `π λ P_tr^e E[F^e] / κ^{α+2}` as written in the inhomogeneous lemma. The
/// measure it parametrizes is `(2 a' T / β) t^{-e-1} dt`, so the tail count
/// carries an extra factor `2/(α+2)`; use [`intensity_coefficient`] for that.
pub fn lemma_coefficient(scn: &Scenario) -> Result<f64> {
    check_alpha(scn.alpha)?;
    let e = scn.power_exponent();
    let moment = scn.fading.moment(e)?;
    Ok(PI * scn.lambda() * scn.p_tr_mw.powf(e) * moment / scn.pathloss.kappa.powf(scn.alpha + 2.0))
}

/// Coefficient `c` such that the mean number of arrivals during a window `w`
/// received with power above `t` is `c · w · t^{-e}`.
pub fn intensity_coefficient(scn: &Scenario) -> Result<f64> {
    Ok(2.0 / (scn.alpha + 2.0) * lemma_coefficient(scn)?)
}

/// Homogeneous coefficient `π λ P_tr^{2/β} E[F^{2/β}] / κ²`, ignoring `alpha`.
pub fn homogeneous_coefficient(scn: &Scenario) -> Result<f64> {
    let beta = scn.pathloss.beta;
    let s = 2.0 / beta;
    let kappa = scn.pathloss.kappa;
    Ok(PI * scn.lambda() * scn.p_tr_mw.powf(s) * scn.fading.moment(s)? / (kappa * kappa))
}

/// Mean number of arrivals in `window_s` received above `t_mw`.
pub fn tail_mean(scn: &Scenario, t_mw: f64, window_s: f64) -> Result<f64> {
    if !(t_mw > 0.0) {
        return Err(Error::invalid("t", "threshold must be positive"));
    }
    Ok(intensity_coefficient(scn)? * window_s * t_mw.powf(-scn.power_exponent()))
}

pub fn reception_probability(scn: &Scenario, n: usize) -> Result<ClassResult> {
    let c = intensity_coefficient(scn)?;
    class_result(scn, n, c)
}

fn class_result(scn: &Scenario, n: usize, coefficient: f64) -> Result<ClassResult> {
    let class = scn.class(n)?;
    let e = scn.power_exponent();
    let upper = scn.upper_bound(n).map_or(0.0, |p| p.powf(-e));
    let window_s = class.window_s();
    let a_n = coefficient * window_s;
    let void_mean = a_n * (class.sensitivity_mw.powf(-e) - upper);
    Ok(ClassResult {
        index_n: n,
        sf: class.sf,
        pi: (-void_mean).exp(),
        a_n,
        window_s,
        void_mean,
    })
}

pub fn reception_probabilities(scn: &Scenario) -> Result<Vec<ClassResult>> {
    let c = intensity_coefficient(scn)?;
    (1..=scn.classes.len())
        .map(|n| class_result(scn, n, c))
        .collect()
}

fn check_target(target_pi: f64) -> Result<()> {
    if !(target_pi > 0.0 && target_pi < 1.0) {
        return Err(Error::invalid(
            "target_pi",
            format!("must lie in (0, 1), got {target_pi}"),
        ));
    }
    Ok(())
}

/// Thresholds `P_1 < … < P_N` (mW) giving every class reception probability
/// `target_pi`, keeping each class's spreading factor and airtime.
///
/// `P_n = (-ln Π · Σ_{i≥n} 1/a_i)^{-1/e}`; with `α = 0` the exponent is `-β/2`.
pub fn equalize_sensitivities(scn: &Scenario, target_pi: f64) -> Result<Vec<f64>> {
    check_target(target_pi)?;
    let c = intensity_coefficient(scn)?;
    let e = scn.power_exponent();
    let neg_log = -target_pi.ln();
    let mut out = vec![0.0; scn.classes.len()];
    let mut inv_sum = 0.0;
    for (i, class) in scn.classes.iter().enumerate().rev() {
        let a_i = c * class.window_s();
        if !(a_i > 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!(
                    "class {} sees no interference; no finite threshold equalizes it",
                    class.index_n
                ),
            ));
        }
        inv_sum += 1.0 / a_i;
        out[i] = (neg_log * inv_sum).powf(-1.0 / e);
    }
    Ok(out)
}

/// Homogeneous network with the same received-power process:
/// `β' = 2β/(α+2)`, `λ' = 2λ/((α+2) κ^α)`.
pub fn homogeneous_equivalent(scn: &Scenario) -> Result<Scenario> {
    check_alpha(scn.alpha)?;
    let q = scn.alpha + 2.0;
    let beta = 2.0 * scn.pathloss.beta / q;
    let pathloss = PathLossParams::new(beta, scn.pathloss.kappa)?;
    let mut out = scn.clone();
    out.pathloss = pathloss;
    out.lambda_s = 2.0 * scn.lambda_s / (q * scn.pathloss.kappa.powf(scn.alpha));
    out.alpha = 0.0;
    Ok(out)
}

/// Arrivals per second received above `t_mw` from nodes inside a disk of
/// radius `radius_m`: `λ (2π/q) E[min(R, ρ_F)^q]` with `q = α+2` and
/// `ρ_F = (P_tr F / t)^{1/β} / κ`.
pub fn finite_disk_rate(scn: &Scenario, t_mw: f64, radius_m: f64) -> Result<f64> {
    check_alpha(scn.alpha)?;
    if !(t_mw > 0.0) {
        return Err(Error::invalid("t", "threshold must be positive"));
    }
    if !(radius_m > 0.0) {
        return Err(Error::invalid("radius_m", "must be positive"));
    }
    let q = scn.alpha + 2.0;
    let beta = scn.pathloss.beta;
    let kappa = scn.pathloss.kappa;
    let e = q / beta;
    // F above this value puts the whole disk over the threshold.
    let saturation = t_mw * (kappa * radius_m).powf(beta) / scn.p_tr_mw;
    let scale = (scn.p_tr_mw / t_mw).powf(e) / kappa.powf(q);
    let expectation = scale * scn.fading.partial_moment(e, saturation)
        + radius_m.powf(q) * scn.fading.survival(saturation);
    let rate = scn.lambda() * 2.0 * PI / q * expectation;
    if !rate.is_finite() {
        return Err(Error::Numeric(format!(
            "finite-disk intensity not finite at t = {t_mw:e} mW, R = {radius_m} m \
             (saturation F = {saturation:e}, scale = {scale:e})"
        )));
    }
    Ok(rate)
}

/// Expected arrivals in `window_s` above `t_mw`, counting only nodes inside
/// the normalization disk.
pub fn finite_disk_intensity(scn: &Scenario, t_mw: f64, window_s: f64) -> Result<f64> {
    Ok(finite_disk_rate(scn, t_mw, scn.norm_radius_m)? * window_s)
}

/// Reception probabilities when interferers are confined to a disk. The
/// `a_n` field carries `window · rate(P_n)`, the mean count above `P_n`.
pub fn reception_probabilities_finite_disk(
    scn: &Scenario,
    radius_m: f64,
) -> Result<Vec<ClassResult>> {
    let rates = scn
        .classes
        .iter()
        .map(|c| finite_disk_rate(scn, c.sensitivity_mw, radius_m))
        .collect::<Result<Vec<_>>>()?;
    Ok(scn
        .classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            let upper = rates.get(i + 1).copied().unwrap_or(0.0);
            let window_s = class.window_s();
            let void_mean = window_s * (rates[i] - upper);
            ClassResult {
                index_n: class.index_n,
                sf: class.sf,
                pi: (-void_mean).exp(),
                a_n: window_s * rates[i],
                window_s,
                void_mean,
            }
        })
        .collect())
}

/// Finite-disk analogue of [`equalize_sensitivities`], solved class by class
/// from the top. A class whose required interferer mass exceeds everything
/// the disk can produce gets `None`; every weaker class then is infeasible too.
pub fn equalize_sensitivities_finite_disk(
    scn: &Scenario,
    target_pi: f64,
    radius_m: f64,
) -> Result<Vec<Option<f64>>> {
    check_target(target_pi)?;
    let q = scn.alpha + 2.0;
    let max_rate = scn.lambda() * 2.0 * PI / q * radius_m.powf(q);
    let neg_log = -target_pi.ln();
    let mut out = vec![None; scn.classes.len()];
    let mut upper_rate = 0.0;
    for (i, class) in scn.classes.iter().enumerate().rev() {
        let needed = upper_rate + neg_log / class.window_s();
        if !(needed < max_rate) {
            break;
        }
        let t = solve_rate(scn, radius_m, needed)?;
        upper_rate = finite_disk_rate(scn, t, radius_m)?;
        out[i] = Some(t);
    }
    Ok(out)
}

/// Threshold `t` with `finite_disk_rate(t) = target` by bisection in `ln t`.
fn solve_rate(scn: &Scenario, radius_m: f64, target: f64) -> Result<f64> {
    let rate = |ln_t: f64| finite_disk_rate(scn, ln_t.exp(), radius_m);
    let (mut lo, mut hi) = (-200.0f64, -20.0f64);
    while rate(lo)? <= target {
        lo -= 50.0;
        if lo < -700.0 {
            return Err(Error::Numeric(format!(
                "no threshold reaches rate {target:e}/s within the disk"
            )));
        }
    }
    while rate(hi)? > target {
        hi += 20.0;
        if hi > 700.0 {
            return Err(Error::Numeric(format!(
                "rate stays above {target:e}/s for every threshold"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Threshold list rendered in dBm.
pub fn to_dbm(values_mw: &[f64]) -> Result<Vec<f64>> {
    values_mw.iter().map(|&p| mw_to_dbm(p)).collect()
}
