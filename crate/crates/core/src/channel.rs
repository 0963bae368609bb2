//! Body-channel path loss and per-sensor power consumption.
//!
//! Transmission cost scales with `d^mp` (distance to the aggregator, path
//! loss exponent `mp`) and a shadowing factor modeling posture changes.
//! Shadowing is sampled in dB as a zero-mean Gaussian and applied as the
//! linear factor `10^(x_dB/10)`, which keeps the per-bit energy cost
//! strictly positive; a still body (relaxing) pins the factor to exactly 1.

use crate::harvest::HarvestChain;
use crate::scalar::Real;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("path loss exponent must be >= 1, got {0}")]
    PathLossExponent(f64),
    #[error("battery bounds must satisfy 0 <= e_min < e_ini <= e_max, got e_min={e_min} e_ini={e_ini} e_max={e_max}")]
    BatteryBounds { e_min: f64, e_ini: f64, e_max: f64 },
    #[error("sigma_s must be zero for the relaxing activity, got {0} dB")]
    RelaxingSigma(f64),
    #[error("sigma_s must be non-negative, got {0} dB")]
    NegativeSigma(f64),
}

/// Per-node physical constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorParams<T> {
    /// Sensing energy cost (J/bit).
    pub psi: T,
    /// Transmit-electronics power (W).
    pub theta: T,
    /// Transmit-amplifier energy coefficient (J/bit/m^mp).
    pub zeta: T,
    /// Distance to the aggregator (m).
    pub d: T,
    /// Path loss exponent (dimensionless).
    pub mp: T,
    /// Minimum energy level to maintain (J).
    pub e_min: T,
    /// Battery capacity (J).
    pub e_max: T,
    /// Initial battery energy (J).
    pub e_ini: T,
}

impl<T: Real> SensorParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        psi: T,
        theta: T,
        zeta: T,
        d: T,
        mp: T,
        e_min: T,
        e_max: T,
        e_ini: T,
    ) -> Result<Self, ParamError> {
        let positive = [
            ("psi", psi),
            ("theta", theta),
            ("zeta", zeta),
            ("d", d),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > T::zero()) {
                return Err(ParamError::NonPositive {
                    field,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        if !(mp.is_finite() && mp >= T::one()) {
            return Err(ParamError::PathLossExponent(mp.to_f64().unwrap_or(f64::NAN)));
        }
        if !(e_min >= T::zero() && e_min < e_ini && e_ini <= e_max) {
            return Err(ParamError::BatteryBounds {
                e_min: e_min.to_f64().unwrap_or(f64::NAN),
                e_ini: e_ini.to_f64().unwrap_or(f64::NAN),
                e_max: e_max.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            psi,
            theta,
            zeta,
            d,
            mp,
            e_min,
            e_max,
            e_ini,
        })
    }
}

/// Body activity; drives shadowing variance and the default harvest chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activity {
    Relaxing,
    Walking,
    Running,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Relaxing, Activity::Walking, Activity::Running];

    pub fn name(self) -> &'static str {
        match self {
            Activity::Relaxing => "relaxing",
            Activity::Walking => "walking",
            Activity::Running => "running",
        }
    }

    /// Measured shadowing standard deviations: a still body has none.
    pub fn default_sigma_db<T: Real>(self) -> T {
        match self {
            Activity::Relaxing => T::zero(),
            Activity::Walking => T::of(2.15),
            Activity::Running => T::of(3.49),
        }
    }
}

impl core::fmt::Display for Activity {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Activity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relaxing" => Ok(Activity::Relaxing),
            "walking" => Ok(Activity::Walking),
            "running" => Ok(Activity::Running),
            other => Err(format!(
                "unknown activity '{other}' (expected relaxing, walking or running)"
            )),
        }
    }
}

/// An activity together with its shadowing spread and harvest chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityProfile<T> {
    pub activity: Activity,
    /// Shadowing standard deviation in dB; 0 pins the factor to 1.
    pub sigma_s_db: T,
    /// Representative harvest chain for this activity.
    pub chain: HarvestChain<T>,
}

impl<T: Real> ActivityProfile<T> {
    pub fn new(
        activity: Activity,
        sigma_s_db: T,
        chain: HarvestChain<T>,
    ) -> Result<Self, ParamError> {
        if sigma_s_db < T::zero() {
            return Err(ParamError::NegativeSigma(
                sigma_s_db.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if activity == Activity::Relaxing && sigma_s_db != T::zero() {
            return Err(ParamError::RelaxingSigma(
                sigma_s_db.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(Self {
            activity,
            sigma_s_db,
            chain,
        })
    }
}

/// One realization of the shadowing variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowSample<T> {
    /// Sampled shadowing in dB.
    pub x_db: T,
    /// Linear multiplicative factor `10^(x_db/10)`.
    pub factor: T,
}

impl<T: Real> ShadowSample<T> {
    pub fn from_db(x_db: T) -> Self {
        Self {
            x_db,
            factor: T::of(10.0).powf(x_db / T::of(10.0)),
        }
    }

    /// No shadowing: 0 dB, factor exactly 1.
    pub fn unit() -> Self {
        Self {
            x_db: T::zero(),
            factor: T::one(),
        }
    }
}

/// Log-distance path loss in dB, exposed as a diagnostic; the power model
/// consumes `d^mp` directly through [`lambda_coeff`].
pub fn path_loss_db<T: Real>(params: &SensorParams<T>, d0: T, pl0: T, shadow: ShadowSample<T>) -> T {
    pl0 + T::of(10.0) * params.mp * (params.d / d0).log10() + shadow.x_db
}

/// Draws a shadowing sample for the given activity. Relaxing consumes no
/// randomness and returns the unit factor.
pub fn sample_shadowing<T: Real, R: Rng + ?Sized>(
    profile: &ActivityProfile<T>,
    rng: &mut R,
) -> ShadowSample<T> {
    if profile.sigma_s_db == T::zero() {
        return ShadowSample::unit();
    }
    ShadowSample::from_db(profile.sigma_s_db * T::sample_standard_normal(rng))
}

/// Per-bit energy cost `psi + factor * zeta * d^mp` (J/bit): the rate
/// coefficient of the slot's power model. Strictly positive.
pub fn lambda_coeff<T: Real>(params: &SensorParams<T>, shadow: ShadowSample<T>) -> T {
    params.psi + shadow.factor * params.zeta * params.d.powf(params.mp)
}

/// Total consumed power `lambda * rate + theta` (W).
pub fn power<T: Real>(lambda: T, rate: T, theta: T) -> T {
    lambda * rate + theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(d: f64, mp: f64) -> SensorParams<f64> {
        SensorParams::new(2e-8, 6e-8, 8e-8, d, mp, 0.01, 0.11, 0.1).unwrap()
    }

    fn walking_profile() -> ActivityProfile<f64> {
        ActivityProfile::new(
            Activity::Walking,
            2.15,
            HarvestChain::two_state(0.7, 0.3, 1e-3, 3e-3).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn path_loss_at_reference_distance() {
        let p = params(0.5, 2.0);
        let pl = path_loss_db(&p, 0.5, 40.0, ShadowSample::unit());
        assert_eq!(pl, 40.0);
    }

    #[test]
    fn path_loss_decade_distance() {
        // d = 10 d0, mp = 2: 40 + 10*2*1 = 60 dB.
        let p = params(1.0, 2.0);
        let pl = path_loss_db(&p, 0.1, 40.0, ShadowSample::unit());
        assert!((pl - 60.0).abs() < 1e-12);
    }

    #[test]
    fn path_loss_additive_shadowing() {
        let p = params(0.5, 2.0);
        let pl = path_loss_db(&p, 0.5, 40.0, ShadowSample::from_db(3.0));
        assert!((pl - 43.0).abs() < 1e-12);
    }

    #[test]
    fn relaxing_shadowing_is_unit() {
        let profile = ActivityProfile::new(
            Activity::Relaxing,
            0.0,
            HarvestChain::constant(1e-3).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = sample_shadowing(&profile, &mut rng);
            assert_eq!(s.factor, 1.0);
            assert_eq!(s.x_db, 0.0);
        }
    }

    #[test]
    fn walking_shadowing_std_matches_sigma() {
        let profile = walking_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| sample_shadowing(&profile, &mut rng).x_db)
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        assert!((std - 2.15).abs() < 0.05, "std = {std}");
    }

    #[test]
    fn walking_mean_factor_exceeds_one() {
        // Log-normal mean exceeds the median: checks the dB -> linear path.
        let profile = walking_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_shadowing(&profile, &mut rng).factor)
            .sum::<f64>()
            / n as f64;
        assert!(mean > 1.0, "mean factor = {mean}");
    }

    #[test]
    fn decade_conversion() {
        let s = ShadowSample::<f64>::from_db(10.0);
        assert!((s.factor - 10.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_hand_arithmetic() {
        // 2e-8 + 1 * 8e-8 * 0.5^2 = 4e-8 J/bit.
        let p = params(0.5, 2.0);
        let lambda = lambda_coeff(&p, ShadowSample::unit());
        assert!((lambda - 4e-8).abs() < 1e-22);
    }

    #[test]
    fn lambda_without_amplifier_cost() {
        let mut p = params(0.5, 2.0);
        p.zeta = f64::MIN_POSITIVE; // effectively zero while staying valid
        let lambda = lambda_coeff(&p, ShadowSample::unit());
        assert!((lambda - p.psi).abs() < 1e-22);
    }

    #[test]
    fn shadow_factor_scales_only_amplifier_term() {
        // Doubling the factor: 2e-8 + 2 * 8e-8 * 0.25 = 6e-8 J/bit.
        let p = params(0.5, 2.0);
        let shadow = ShadowSample {
            x_db: 10.0 * 2.0f64.log10(),
            factor: 2.0,
        };
        let lambda = lambda_coeff(&p, shadow);
        assert!((lambda - 6e-8).abs() < 1e-22);
    }

    #[test]
    fn power_hand_arithmetic() {
        let p = power::<f64>(4e-8, 5e5, 6e-8);
        assert!((p - 0.02000006).abs() < 1e-15);
    }

    #[test]
    fn power_at_zero_rate_is_theta() {
        assert_eq!(power::<f64>(4e-8, 0.0, 6e-8), 6e-8);
    }

    #[test]
    fn power_rate_term_is_linear() {
        let r = 12345.0f64;
        assert_eq!(power(4e-8, 2.0 * r, 0.0), 2.0 * power(4e-8, r, 0.0));
    }

    #[test]
    fn lambda_monotone_in_distance_zeta_factor() {
        let base = params(0.4, 2.0);
        let l0 = lambda_coeff(&base, ShadowSample::unit());

        let farther = params(0.5, 2.0);
        assert!(lambda_coeff(&farther, ShadowSample::unit()) > l0);

        let mut pricier = base.clone();
        pricier.zeta = 9e-8;
        assert!(lambda_coeff(&pricier, ShadowSample::unit()) > l0);

        let shadowed = ShadowSample {
            x_db: 1.0,
            factor: 10f64.powf(0.1),
        };
        assert!(lambda_coeff(&base, shadowed) > l0);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(matches!(
            SensorParams::new(0.0, 6e-8, 8e-8, 0.5, 2.0, 0.01, 0.11, 0.1),
            Err(ParamError::NonPositive { field: "psi", .. })
        ));
        assert!(matches!(
            SensorParams::new(2e-8, 6e-8, 8e-8, 0.5, 0.9, 0.01, 0.11, 0.1),
            Err(ParamError::PathLossExponent(_))
        ));
        assert!(matches!(
            SensorParams::new(2e-8, 6e-8, 8e-8, 0.5, 2.0, 0.12, 0.11, 0.1),
            Err(ParamError::BatteryBounds { .. })
        ));
        assert!(matches!(
            ActivityProfile::new(
                Activity::Relaxing,
                1.0,
                HarvestChain::constant(1e-3).unwrap()
            ),
            Err(ParamError::RelaxingSigma(_))
        ));
    }
}
