//! Propagation: power-law path loss and mean-one fading.
//!
//! Powers are linear milliwatts everywhere inside the crate; dBm only
//! appears at I/O boundaries through [`dbm_to_mw`] and [`mw_to_dbm`].

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// Path loss `l(r) = (κ r)^β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    pub beta: f64,
    /// Per meter.
    pub kappa: f64,
}

impl PathLossParams {
    pub fn new(beta: f64, kappa: f64) -> Result<Self> {
        let pl = PathLossParams { beta, kappa };
        pl.validate()?;
        Ok(pl)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 2.0) {
            return Err(Error::invalid(
                "beta",
                format!("path-loss exponent must exceed 2, got {}", self.beta),
            ));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::invalid(
                "kappa",
                format!("must be positive, got {}", self.kappa),
            ));
        }
        Ok(())
    }
}

/// Attenuation `(κ r)^β`; received power is `P_tr · F / path_gain`.
pub fn path_gain(distance_m: f64, pl: &PathLossParams) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::invalid(
            "distance_m",
            format!("must be positive, got {distance_m}"),
        ));
    }
    Ok((pl.kappa * distance_m).powf(pl.beta))
}

/// Law of the propagation factor `F`. Every variant has `E[F] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    NoFading,
    /// Exponential power with mean one.
    Rayleigh,
    /// `F = exp(-σ²/2 + σ Z)`, σ given in dB.
    LogNormal {
        sigma_db: f64,
    },
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        if let FadingModel::LogNormal { sigma_db } = *self {
            if !(sigma_db.is_finite() && sigma_db > 0.0) {
                return Err(Error::invalid(
                    "sigma_db",
                    format!("must be positive, got {sigma_db}"),
                ));
            }
        }
        Ok(())
    }

    /// Natural-log standard deviation of a log-normal law (0 otherwise).
    pub fn sigma(&self) -> f64 {
        match *self {
            FadingModel::LogNormal { sigma_db } => sigma_db * std::f64::consts::LN_10 / 10.0,
            _ => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FadingModel::NoFading => "none",
            FadingModel::Rayleigh => "rayleigh",
            FadingModel::LogNormal { .. } => "lognormal",
        }
    }

    /// `E[F^s]`.
    pub fn moment(&self, s: f64) -> Result<f64> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid("s", format!("must be positive, got {s}")));
        }
        Ok(match *self {
            FadingModel::NoFading => 1.0,
            FadingModel::Rayleigh => ln_gamma(1.0 + s).exp(),
            FadingModel::LogNormal { .. } => {
                let sigma = self.sigma();
                (sigma * sigma * s * (s - 1.0) / 2.0).exp()
            }
        })
    }

    /// Truncated moment `E[F^s; F < x]`.
    pub fn partial_moment(&self, s: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            FadingModel::NoFading => {
                if x > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FadingModel::Rayleigh => {
                if x.is_infinite() {
                    ln_gamma(1.0 + s).exp()
                } else {
                    ln_gamma(1.0 + s).exp() * gamma_lr(1.0 + s, x)
                }
            }
            FadingModel::LogNormal { .. } => {
                let sigma = self.sigma();
                let mu = -sigma * sigma / 2.0;
                let full = (s * mu + s * s * sigma * sigma / 2.0).exp();
                full * std_normal_cdf((x.ln() - mu - s * sigma * sigma) / sigma)
            }
        }
    }

    /// `P(F >= x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            FadingModel::NoFading => {
                if x <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FadingModel::Rayleigh => (-x).exp(),
            FadingModel::LogNormal { .. } => {
                let sigma = self.sigma();
                let mu = -sigma * sigma / 2.0;
                std_normal_cdf(-(x.ln() - mu) / sigma)
            }
        }
    }

    /// Value exceeded with probability `tail`.
    pub fn upper_quantile(&self, tail: f64) -> f64 {
        match *self {
            FadingModel::NoFading => 1.0,
            FadingModel::Rayleigh => -tail.ln(),
            FadingModel::LogNormal { .. } => {
                let sigma = self.sigma();
                let z = -std_normal().inverse_cdf(tail);
                (-sigma * sigma / 2.0 + sigma * z).exp()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingModel::NoFading => 1.0,
            FadingModel::Rayleigh => Exp1.sample(rng),
            FadingModel::LogNormal { .. } => {
                let sigma = self.sigma();
                let z: f64 = StandardNormal.sample(rng);
                (-sigma * sigma / 2.0 + sigma * z).exp()
            }
        }
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

fn std_normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

/// `E[F^s]` for the given fading law.
pub fn fading_moment(model: &FadingModel, s: f64) -> Result<f64> {
    model.moment(s)
}

/// One i.i.d. draw of `F`.
pub fn sample_fading<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> f64 {
    model.sample(rng)
}

/// Path-loss exponent implied by the Hata model slope
/// `(44.9 - 6.55 log10 h_B) log10 r` dB.
pub fn hata_exponent(antenna_height_m: f64) -> Result<f64> {
    if !(antenna_height_m.is_finite() && antenna_height_m > 0.0) {
        return Err(Error::invalid(
            "hata_antenna_height_m",
            format!("must be positive, got {antenna_height_m}"),
        ));
    }
    Ok((44.9 - 6.55 * antenna_height_m.log10()) / 10.0)
}

pub fn dbm_to_mw(p_dbm: f64) -> f64 {
    10f64.powf(p_dbm / 10.0)
}

pub fn mw_to_dbm(p_mw: f64) -> Result<f64> {
    if !(p_mw > 0.0) {
        return Err(Error::invalid(
            "p_mw",
            format!("must be positive, got {p_mw}"),
        ));
    }
    Ok(10.0 * p_mw.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LOGNORMAL_2DB: FadingModel = FadingModel::LogNormal { sigma_db: 2.0 };

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn path_gain_examples() {
        let pl = PathLossParams::new(3.5, 0.5).unwrap();
        assert_eq!(path_gain(2.0, &pl).unwrap(), 1.0);
        let loss_db = 10.0 * path_gain(8000.0, &pl).unwrap().log10();
        // 35·log10(4000)
        assert!((loss_db - 126.0721).abs() < 1e-3);
        assert!((10.0 - loss_db - (-116.0721)).abs() < 1e-3);
        let rx = 10.0 - 10.0 * path_gain(31_698.0, &pl).unwrap().log10();
        assert!((rx + 137.0).abs() < 1e-3);
        assert!(path_gain(0.0, &pl).is_err());
        assert!(path_gain(-3.0, &pl).is_err());
    }

    #[test]
    fn path_loss_params_validation() {
        assert!(PathLossParams::new(2.0, 0.5).is_err());
        assert!(PathLossParams::new(3.5, 0.0).is_err());
    }

    #[test]
    fn moments_match_published_forms() {
        let beta: f64 = 3.5;
        let s = 2.0 / beta;
        // 2Γ(2/β)/β
        let rayleigh = 2.0 * ln_gamma(s).exp() / beta;
        assert!(close(
            FadingModel::Rayleigh.moment(s).unwrap(),
            rayleigh,
            1e-14
        ));
        let sigma = 2.0 * std::f64::consts::LN_10 / 10.0;
        let ln = (sigma * sigma * (2.0 - beta) / (beta * beta)).exp();
        assert!(close(LOGNORMAL_2DB.moment(s).unwrap(), ln, 1e-14));
        assert!((LOGNORMAL_2DB.moment(s).unwrap() - 0.974366).abs() < 1e-6);
        assert_eq!(FadingModel::NoFading.moment(s).unwrap(), 1.0);
        assert!(FadingModel::Rayleigh.moment(0.0).is_err());
    }

    #[test]
    fn hata() {
        assert!((hata_exponent(30.0).unwrap() - 3.5225).abs() < 1e-4);
        assert!((hata_exponent(10.0).unwrap() - 3.835).abs() < 1e-12);
        let h = 10f64.powf(9.9 / 6.55);
        assert!((hata_exponent(h).unwrap() - 3.5).abs() < 1e-12);
        assert!(hata_exponent(0.0).is_err());
    }

    #[test]
    fn unit_conversion() {
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert!((dbm_to_mw(-137.0) / 1.9952623149688e-14 - 1.0).abs() < 1e-12);
        assert!(close(dbm_to_mw(10.0), 10.0, 1e-15));
        assert!(mw_to_dbm(0.0).is_err());
        assert!(mw_to_dbm(-1.0).is_err());
    }

    #[test]
    fn quantiles() {
        assert_eq!(FadingModel::NoFading.upper_quantile(1e-7), 1.0);
        let q = FadingModel::Rayleigh.upper_quantile(1e-7);
        assert!(close(FadingModel::Rayleigh.survival(q), 1e-7, 1e-12));
        let q = LOGNORMAL_2DB.upper_quantile(1e-7);
        assert!((LOGNORMAL_2DB.survival(q) / 1e-7 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn partial_moment_limits() {
        for model in [FadingModel::NoFading, FadingModel::Rayleigh, LOGNORMAL_2DB] {
            let s = 0.6;
            let full = model.moment(s).unwrap();
            assert!(close(model.partial_moment(s, 1e9), full, 1e-12));
            assert_eq!(model.partial_moment(s, 0.0), 0.0);
            assert!(close(model.survival(1e-300), 1.0, 1e-12));
        }
    }

    #[test]
    fn partial_moment_s_zero_is_cdf() {
        // E[F^0; F < x] + P(F >= x) = 1
        for model in [FadingModel::Rayleigh, LOGNORMAL_2DB] {
            for x in [0.1, 0.7, 1.0, 2.5] {
                let total = model.partial_moment(1e-12, x) + model.survival(x);
                assert!(close(total, 1.0, 1e-9), "{model:?} {x} {total}");
            }
        }
    }

    proptest! {
        #[test]
        fn jensen_bounds(s in 0.01f64..3.0, sigma_db in 0.1f64..10.0) {
            for model in [FadingModel::Rayleigh, FadingModel::LogNormal { sigma_db }] {
                let m = model.moment(s).unwrap();
                if s < 1.0 {
                    prop_assert!(m <= 1.0 + 1e-15);
                } else {
                    prop_assert!(m >= 1.0 - 1e-15);
                }
            }
        }

        #[test]
        fn dbm_round_trip(p in -200.0f64..60.0) {
            prop_assert!((mw_to_dbm(dbm_to_mw(p)).unwrap() - p).abs() < 1e-12);
        }

        #[test]
        fn path_gain_monotone_and_scaling(r in 1.0f64..1e5, kappa in 0.01f64..10.0, beta in 2.1f64..6.0) {
            let pl = PathLossParams::new(beta, kappa).unwrap();
            let unit = PathLossParams::new(beta, 1.0).unwrap();
            prop_assert!(path_gain(r * 1.01, &pl).unwrap() > path_gain(r, &pl).unwrap());
            let a = path_gain(r, &pl).unwrap();
            let b = path_gain(kappa * r, &unit).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
    }
}
