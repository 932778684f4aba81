//! Projection-based exogeneity statistic and its studentized asymptotic test.
//!
//! The statistic is `T_n = (1/n) sum_i |<beta_IV - beta, X_i>|^2`. Under exogeneity
//! `n (T_n - B_n - R_n) / (t_n sqrt(V_n))` is asymptotically standard normal; the
//! plug-in versions of `t_n`, `B_n`, `R_n`, `V_n` are computed by [`plugins`].

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::{
    fit_exogenous_responses, fit_iv_responses, fitted_values, mean_square, SlopeEstimate, SlopeKind,
};
use crate::fourier::FourierCoeffs;
use crate::spectra::{estimate, project, Dataset, SpectralConfig, SpectralEstimates};

/// Plug-in centering and scaling quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plugins {
    pub t_hat: f64,
    pub b_hat: f64,
    pub r_hat: f64,
    pub v_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub t_hat: f64,
    pub b_hat: f64,
    pub r_hat: f64,
    pub v_hat: f64,
    pub sigma_sq: f64,
    pub z: f64,
    pub p_value: f64,
    pub reject: bool,
    pub gamma: f64,
    pub selected: usize,
}

pub(crate) fn check_level(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLevel(gamma))
    }
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// `u_q`, the `q`-quantile of the standard normal law.
pub fn normal_quantile(q: f64) -> f64 {
    standard_normal().inverse_cdf(q)
}

/// Upper tail `1 - Phi(z)`, computed without cancellation.
pub fn normal_upper_tail(z: f64) -> f64 {
    standard_normal().sf(z)
}

/// One-sided decision: reject iff `z > u_{1-gamma}` (strict).
pub fn decide(z: f64, gamma: f64) -> (f64, bool) {
    let p_value = normal_upper_tail(z);
    (p_value, z > normal_quantile(1.0 - gamma))
}

fn difference(beta_iv: &SlopeEstimate, beta_ex: &SlopeEstimate) -> Result<FourierCoeffs> {
    if beta_iv.spectra_fingerprint != beta_ex.spectra_fingerprint
        || beta_iv.coeffs.order() != beta_ex.coeffs.order()
    {
        return Err(Error::InconsistentEstimates);
    }
    let dense = beta_iv
        .coeffs
        .as_slice()
        .iter()
        .zip(beta_ex.coeffs.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    FourierCoeffs::from_dense(dense)
}

/// `(1/n) sum_i |<delta, X_i>|^2` over precomputed regressor coefficients.
pub(crate) fn projected_energy(xs: &[FourierCoeffs], delta: &FourierCoeffs) -> f64 {
    let support: Vec<(i64, Complex64)> = delta.iter().filter(|(_, c)| c.norm_sqr() != 0.0).collect();
    let total: f64 = xs
        .iter()
        .map(|x| {
            support
                .iter()
                .map(|&(k, d)| d * x.get(k).conj())
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum();
    total / xs.len() as f64
}

pub(crate) fn statistic_from(
    xs: &[FourierCoeffs],
    beta_iv: &SlopeEstimate,
    beta_ex: &SlopeEstimate,
) -> Result<f64> {
    Ok(projected_energy(xs, &difference(beta_iv, beta_ex)?))
}

/// `T_n = (1/n) sum_i |<beta_IV - beta, X_i>|^2`.
pub fn statistic(data: &Dataset, beta_iv: &SlopeEstimate, beta_ex: &SlopeEstimate) -> Result<f64> {
    let delta = difference(beta_iv, beta_ex)?;
    let proj = project(data, delta.order())?;
    Ok(projected_energy(&proj.x, &delta))
}

/// Plug-in `t_n`, `B_n`, `R_n`, `V_n` given the IV fit and the error variance estimate.
pub fn plugins(
    data: &Dataset,
    est: &SpectralEstimates,
    beta_iv: &SlopeEstimate,
    sigma_sq: f64,
) -> Result<Plugins> {
    est.check_shape(data)?;
    plugins_from(est, beta_iv, sigma_sq)
}

pub(crate) fn plugins_from(est: &SpectralEstimates, beta_iv: &SlopeEstimate, sigma_sq: f64) -> Result<Plugins> {
    if est.selected().is_empty() {
        return Err(Error::NoSelectedFrequencies);
    }
    if beta_iv.kind != SlopeKind::InstrumentalVariable {
        return Err(Error::WrongEstimatorKind {
            expected: "instrumental-variable",
        });
    }
    if beta_iv.spectra_fingerprint != est.fingerprint() {
        return Err(Error::InconsistentEstimates);
    }
    let n = est.n() as f64;

    let mut ratio_sum = 0.0;
    let mut ratio_sq_sum = 0.0;
    let mut mean_contrast = 0.0;
    for &k in est.selected() {
        let c = est.c_hat(k);
        let x = est.x_hat(k);
        let r = x * est.w_hat(k) / c.norm_sqr() - 1.0;
        ratio_sum += r;
        ratio_sq_sum += r * r;
        let d = est.mu_w().get(k) / c - est.mu_x().get(k) / x;
        mean_contrast += d.norm_sqr() * x;
    }
    let t_hat = ratio_sq_sum.sqrt();
    // also catches NaN
    if t_hat.is_nan() || t_hat <= 1e-12 {
        return Err(Error::DegenerateStudentization);
    }

    // ||Gamma_{X,n}^{1/2} beta_IV||^2 = (1/n) sum_i |<beta_IV, X_i>|^2
    let explained = projected_energy(&est.projections().x, &beta_iv.coeffs);
    let scale = sigma_sq + explained;

    let beta_mu = crate::fourier::inner_product(&beta_iv.coeffs, est.mu_x())?;
    debug_assert!(beta_mu.im.abs() <= 1e-8 * (1.0 + beta_mu.re.abs()));
    let b_hat = n / (2.0 * t_hat) * beta_mu.re * beta_mu.re * mean_contrast;

    Ok(Plugins {
        t_hat,
        b_hat,
        r_hat: scale * ratio_sum / n,
        v_hat: scale * scale,
    })
}

/// `z = n (T_n - B_n - R_n) / (t_n sqrt(V_n))`.
pub fn standardize(n: usize, statistic: f64, plug: &Plugins) -> f64 {
    n as f64 * (statistic - plug.b_hat - plug.r_hat) / (plug.t_hat * plug.v_hat.sqrt())
}

/// Full plug-in pipeline: spectra, both fits, `sigma^2`, `T_n`, plug-ins and the one-sided decision.
pub fn asymptotic_test(data: &Dataset, config: &SpectralConfig, gamma: f64) -> Result<TestOutcome> {
    check_level(gamma)?;
    let est = estimate(data, config)?;
    let beta_ex = fit_exogenous_responses(&est, data.y())?;
    let beta_iv = fit_iv_responses(&est, data.y())?;
    let xs = &est.projections().x;

    let fit = fitted_values(xs, &beta_iv.coeffs);
    let resid: Vec<f64> = data.y().iter().zip(&fit).map(|(y, f)| y - f).collect();
    let sigma_sq = mean_square(&resid);

    let t_n = statistic_from(xs, &beta_iv, &beta_ex)?;
    let plug = plugins_from(&est, &beta_iv, sigma_sq)?;
    let z = standardize(data.n(), t_n, &plug);
    let (p_value, reject) = decide(z, gamma);
    Ok(TestOutcome {
        statistic: t_n,
        t_hat: plug.t_hat,
        b_hat: plug.b_hat,
        r_hat: plug.r_hat,
        v_hat: plug.v_hat,
        sigma_sq,
        z,
        p_value,
        reject,
        gamma,
        selected: est.selected().len(),
    })
}
