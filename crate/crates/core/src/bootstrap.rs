//! Residual-based bootstrap tests.
//!
//! Bootstrap responses are regenerated on the fixed design,
//! `Y*_i = <beta_IV, X_i> + U*_i`, with errors drawn from the IV residuals
//! independently of `(X_i, W_i)`. Since `X` and `W` are unchanged the spectral
//! estimates (and hence the cut-off set) of the original sample are reused for
//! every replicate. The test rejects when `T_n` exceeds the empirical
//! `(1 - gamma)`-quantile of the replicates.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{fit_exogenous_responses, fit_iv_responses, fitted_values, SlopeEstimate, SlopeKind};
use crate::exotest::{check_level, statistic_from};
use crate::rng::substream;
use crate::spectra::{estimate, Dataset, SpectralConfig, SpectralEstimates};

pub const MIN_REPLICATES: usize = 20;

const SQRT5: f64 = 2.236_067_977_499_79;

/// Mammen's two-point law: `-(sqrt5 - 1)/2` w.p. `(sqrt5 + 1)/(2 sqrt5)`, else `(sqrt5 + 1)/2`.
pub const MAMMEN_LOW: f64 = -(SQRT5 - 1.0) / 2.0;
pub const MAMMEN_HIGH: f64 = (SQRT5 + 1.0) / 2.0;
pub const MAMMEN_P_LOW: f64 = (SQRT5 + 1.0) / (2.0 * SQRT5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BootstrapScheme {
    /// Resampling with replacement from the mean-centered residuals.
    Efron,
    WildMammen,
    WildRademacher,
    WildNormal,
}

impl BootstrapScheme {
    pub const ALL: [BootstrapScheme; 4] = [
        BootstrapScheme::Efron,
        BootstrapScheme::WildMammen,
        BootstrapScheme::WildRademacher,
        BootstrapScheme::WildNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BootstrapScheme::Efron => "efron",
            BootstrapScheme::WildMammen => "mammen",
            BootstrapScheme::WildRademacher => "rademacher",
            BootstrapScheme::WildNormal => "normal",
        }
    }
}

impl fmt::Display for BootstrapScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BootstrapScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "efron" => Ok(BootstrapScheme::Efron),
            "mammen" | "wild-mammen" => Ok(BootstrapScheme::WildMammen),
            "rademacher" | "wild-rademacher" => Ok(BootstrapScheme::WildRademacher),
            "normal" | "wild-normal" | "gaussian" => Ok(BootstrapScheme::WildNormal),
            other => Err(Error::InvalidConfig(format!("unknown bootstrap scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOutcome {
    pub statistic: f64,
    /// `T*_1, ..., T*_B` in replicate order.
    pub replicates: Vec<f64>,
    pub q_star: f64,
    pub p_value: f64,
    pub reject: bool,
    pub scheme: BootstrapScheme,
    pub gamma: f64,
    pub seed: u64,
    pub selected: usize,
}

impl BootstrapOutcome {
    pub fn b(&self) -> usize {
        self.replicates.len()
    }
}

/// One draw of the wild-bootstrap multiplier.
pub fn sample_multiplier<R: Rng + ?Sized>(scheme: BootstrapScheme, rng: &mut R) -> Result<f64> {
    match scheme {
        BootstrapScheme::Efron => Err(Error::NotAMultiplierScheme),
        BootstrapScheme::WildMammen => Ok(if rng.random::<f64>() < MAMMEN_P_LOW {
            MAMMEN_LOW
        } else {
            MAMMEN_HIGH
        }),
        BootstrapScheme::WildRademacher => Ok(if rng.random::<bool>() { 1.0 } else { -1.0 }),
        BootstrapScheme::WildNormal => Ok(rng.sample(StandardNormal)),
    }
}

/// Bootstrap errors from residuals alone; the design never enters.
pub fn gen_errors<R: Rng + ?Sized>(residuals: &[f64], scheme: BootstrapScheme, rng: &mut R) -> Result<Vec<f64>> {
    if residuals.is_empty() {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    match scheme {
        BootstrapScheme::Efron => {
            let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
            let centered: Vec<f64> = residuals.iter().map(|r| r - mean).collect();
            Ok((0..residuals.len())
                .map(|_| *centered.choose(rng).expect("nonempty"))
                .collect())
        }
        wild => residuals
            .iter()
            .map(|r| sample_multiplier(wild, rng).map(|v| v * r))
            .collect(),
    }
}

fn replicate_from(est: &SpectralEstimates, fitted: &[f64], errors_star: &[f64]) -> Result<f64> {
    if errors_star.len() != fitted.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} bootstrap errors for {} samples",
            errors_star.len(),
            fitted.len()
        )));
    }
    let y_star: Vec<f64> = fitted.iter().zip(errors_star).map(|(f, u)| f + u).collect();
    let beta_ex = fit_exogenous_responses(est, &y_star)?;
    let beta_iv = fit_iv_responses(est, &y_star)?;
    statistic_from(&est.projections().x, &beta_iv, &beta_ex)
}

/// `T*_n` for one set of bootstrap errors, reusing the original spectra.
pub fn replicate(
    data: &Dataset,
    est: &SpectralEstimates,
    beta_iv: &SlopeEstimate,
    errors_star: &[f64],
) -> Result<f64> {
    est.check_shape(data)?;
    if beta_iv.kind != SlopeKind::InstrumentalVariable {
        return Err(Error::WrongEstimatorKind {
            expected: "instrumental-variable",
        });
    }
    if beta_iv.spectra_fingerprint != est.fingerprint() {
        return Err(Error::InconsistentEstimates);
    }
    let fitted = fitted_values(&est.projections().x, &beta_iv.coeffs);
    replicate_from(est, &fitted, errors_star)
}

/// Order statistic `T*_(floor(B (1 - gamma)))`, 1-based, of sorted replicates.
pub fn bootstrap_quantile(sorted: &[f64], gamma: f64) -> f64 {
    let b = sorted.len();
    // the epsilon absorbs rounding in B * (1 - gamma) for round inputs
    let rank = ((b as f64) * (1.0 - gamma) + 1e-9).floor() as usize;
    sorted[rank.clamp(1, b) - 1]
}

/// Runs the original-data fit once and then `b` replicates on independent substreams of `seed`.
pub fn bootstrap_test(
    data: &Dataset,
    config: &SpectralConfig,
    scheme: BootstrapScheme,
    b: usize,
    gamma: f64,
    seed: u64,
) -> Result<BootstrapOutcome> {
    if b < MIN_REPLICATES {
        return Err(Error::TooFewReplicates {
            min: MIN_REPLICATES,
            got: b,
        });
    }
    check_level(gamma)?;
    let est = estimate(data, config)?;
    let beta_ex = fit_exogenous_responses(&est, data.y())?;
    let beta_iv = fit_iv_responses(&est, data.y())?;
    let xs = &est.projections().x;
    let statistic = statistic_from(xs, &beta_iv, &beta_ex)?;

    let fitted = fitted_values(xs, &beta_iv.coeffs);
    let resid: Vec<f64> = data.y().iter().zip(&fitted).map(|(y, f)| y - f).collect();

    let replicates = (0..b as u64)
        .into_par_iter()
        .map(|idx| {
            let mut rng = substream(seed, idx);
            let errors = gen_errors(&resid, scheme, &mut rng)?;
            replicate_from(&est, &fitted, &errors)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut sorted = replicates.clone();
    sorted.sort_by(f64::total_cmp);
    let q_star = bootstrap_quantile(&sorted, gamma);
    let exceed = replicates.iter().filter(|t| **t >= statistic).count();
    Ok(BootstrapOutcome {
        statistic,
        replicates,
        q_star,
        p_value: (1 + exceed) as f64 / (b + 1) as f64,
        reject: statistic > q_star,
        scheme,
        gamma,
        seed,
        selected: est.selected().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_iv;
    use crate::exotest::statistic;
    use crate::testutil::random_dataset;

    #[test]
    fn mammen_closed_forms() {
        assert!((MAMMEN_LOW + 0.618_033_988_7).abs() < 1e-10);
        assert!((MAMMEN_HIGH - 1.618_033_988_7).abs() < 1e-10);
        assert!((MAMMEN_P_LOW - 0.723_606_797_7).abs() < 1e-10);
        assert!((1.0 - MAMMEN_P_LOW - 0.276_393_202_3).abs() < 1e-10);
        assert!((SQRT5 - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_multiplier_moments() {
        let p = MAMMEN_P_LOW;
        let q = 1.0 - p;
        let m1 = p * MAMMEN_LOW + q * MAMMEN_HIGH;
        let m2 = p * MAMMEN_LOW.powi(2) + q * MAMMEN_HIGH.powi(2);
        let m3 = p * MAMMEN_LOW.powi(3) + q * MAMMEN_HIGH.powi(3);
        assert!(m1.abs() < 1e-12);
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_multiplier_moments() {
        for scheme in [BootstrapScheme::WildMammen, BootstrapScheme::WildRademacher, BootstrapScheme::WildNormal] {
            let mut rng = substream(2024, scheme as u64);
            let n = 1_000_000;
            let draws: Vec<f64> = (0..n).map(|_| sample_multiplier(scheme, &mut rng).unwrap()).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 0.005, "{scheme}: mean {mean}");
            assert!((var - 1.0).abs() < 0.01, "{scheme}: var {var}");
        }
    }

    #[test]
    fn rademacher_is_fair() {
        let mut rng = substream(1, 0);
        let n = 200_000;
        let ones = (0..n)
            .filter(|_| sample_multiplier(BootstrapScheme::WildRademacher, &mut rng).unwrap() == 1.0)
            .count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn efron_has_no_multiplier() {
        let mut rng = substream(1, 0);
        assert!(matches!(
            sample_multiplier(BootstrapScheme::Efron, &mut rng),
            Err(Error::NotAMultiplierScheme)
        ));
    }

    #[test]
    fn gen_errors_examples() {
        let mut rng = substream(3, 0);
        for scheme in BootstrapScheme::ALL {
            assert!(gen_errors(&[0.0; 6], scheme, &mut rng).unwrap().iter().all(|u| *u == 0.0));
        }
        let resid = [0.3, -1.2, 2.5, -0.7];
        let u = gen_errors(&resid, BootstrapScheme::WildRademacher, &mut rng).unwrap();
        for (a, b) in u.iter().zip(resid) {
            assert_eq!(a.abs(), b.abs());
        }
        assert!(matches!(
            gen_errors(&[], BootstrapScheme::WildNormal, &mut rng),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn efron_resamples_centered_residuals_uniformly() {
        let mut rng = substream(11, 0);
        let mut counts = [0usize; 3];
        let draws = 100_000 / 3 + 1;
        for _ in 0..draws {
            for u in gen_errors(&[1.0, 2.0, 3.0], BootstrapScheme::Efron, &mut rng).unwrap() {
                let slot = [-1.0, 0.0, 1.0]
                    .iter()
                    .position(|v| *v == u)
                    .unwrap_or_else(|| panic!("value {u} outside the resampling support"));
                counts[slot] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        for c in counts {
            assert!((c as f64 / total as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn zero_errors_reproduce_the_noiseless_pipeline() {
        let data = random_dataset(12, 10, 4);
        let est = estimate(&data, &SpectralConfig::new(1e-3)).unwrap();
        let biv = fit_iv(&data, &est).unwrap();
        let t_star = replicate(&data, &est, &biv, &[0.0; 12]).unwrap();

        // from scratch: new responses, new spectra, new fits
        let fitted = fitted_values(&est.projections().x, &biv.coeffs);
        let fresh = data.with_responses(fitted).unwrap();
        let est2 = estimate(&fresh, &SpectralConfig::new(1e-3)).unwrap();
        assert_eq!(est2.fingerprint(), est.fingerprint());
        let b = crate::estimators::fit_exogenous(&fresh, &est2).unwrap();
        let biv2 = fit_iv(&fresh, &est2).unwrap();
        let t = statistic(&fresh, &biv2, &b).unwrap();
        assert!((t - t_star).abs() <= 1e-12 * (1.0 + t.abs()));
    }

    #[test]
    fn zero_errors_and_self_instrumentation_give_zero() {
        let data = random_dataset(9, 10, 8);
        let same = Dataset::new(data.x().to_vec(), data.x().to_vec(), data.y().to_vec()).unwrap();
        let est = estimate(&same, &SpectralConfig::new(1e-3)).unwrap();
        let biv = fit_iv(&same, &est).unwrap();
        assert!(replicate(&same, &est, &biv, &[0.0; 9]).unwrap() <= 1e-12);
    }

    #[test]
    fn replicate_is_deterministic() {
        let data = random_dataset(15, 12, 6);
        let est = estimate(&data, &SpectralConfig::new(1e-3)).unwrap();
        let biv = fit_iv(&data, &est).unwrap();
        let resid = crate::estimators::residuals(&data, &biv).unwrap();
        let run = || {
            let mut rng = substream(99, 5);
            let u = gen_errors(&resid, BootstrapScheme::WildMammen, &mut rng).unwrap();
            replicate(&data, &est, &biv, &u).unwrap()
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }

    #[test]
    fn quantile_indexing() {
        let sorted: Vec<f64> = (1..=300).map(f64::from).collect();
        // floor(300 * 0.95) = 285th order statistic
        assert_eq!(bootstrap_quantile(&sorted, 0.05), 285.0);
        let sorted: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(bootstrap_quantile(&sorted, 0.1), 18.0);
        assert_eq!(bootstrap_quantile(&sorted, 0.99), 1.0);
        let mut last = f64::NEG_INFINITY;
        for g in [0.5, 0.3, 0.2, 0.1, 0.05, 0.01] {
            let q = bootstrap_quantile(&sorted, g);
            assert!(q >= last);
            last = q;
        }
    }

    #[test]
    fn bootstrap_outcome_invariants_and_determinism() {
        let data = random_dataset(25, 12, 31);
        let cfg = SpectralConfig::new(1e-3);
        let a = bootstrap_test(&data, &cfg, BootstrapScheme::WildRademacher, 50, 0.1, 77).unwrap();
        let b = bootstrap_test(&data, &cfg, BootstrapScheme::WildRademacher, 50, 0.1, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.b(), 50);
        let mut sorted = a.replicates.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(a.q_star, sorted[44]);
        assert_eq!(a.reject, a.statistic > a.q_star);
        assert!(a.p_value > 0.0 && a.p_value <= 1.0);
        let exceed = a.replicates.iter().filter(|t| **t >= a.statistic).count();
        assert_eq!(a.p_value, (1 + exceed) as f64 / 51.0);

        let c = bootstrap_test(&data, &cfg, BootstrapScheme::WildRademacher, 50, 0.1, 78).unwrap();
        assert_ne!(a.replicates, c.replicates);
    }

    #[test]
    fn bootstrap_argument_validation() {
        let data = random_dataset(10, 8, 2);
        let cfg = SpectralConfig::new(1e-3);
        assert!(matches!(
            bootstrap_test(&data, &cfg, BootstrapScheme::Efron, 19, 0.05, 1),
            Err(Error::TooFewReplicates { min: 20, got: 19 })
        ));
        assert!(matches!(
            bootstrap_test(&data, &cfg, BootstrapScheme::Efron, 20, 1.5, 1),
            Err(Error::InvalidLevel(_))
        ));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in BootstrapScheme::ALL {
            assert_eq!(s.name().parse::<BootstrapScheme>().unwrap(), s);
        }
        assert!("jackknife".parse::<BootstrapScheme>().is_err());
    }
}
