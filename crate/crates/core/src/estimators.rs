//! Spectral cut-off slope estimators, residuals and the error-variance estimate.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::FourierCoeffs;
use crate::spectra::{project, Dataset, SpectralEstimates};

/// Which estimator produced a [`SlopeEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeKind {
    Exogenous,
    InstrumentalVariable,
    Weighted,
}

/// Numerator family for [`fit_weighted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorTarget {
    /// `(1/n) sum_i <X_i, phi_k> Y_i`
    Exogenous,
    /// `g_k = (conj(c_k) / w_k) (1/n) sum_i <W_i, phi_k> Y_i`, the response
    /// projected on the estimated optimal instrument.
    InstrumentalVariable,
}

/// Fourier coefficients of an estimated slope function, zero off the cut-off set.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    pub coeffs: FourierCoeffs,
    pub kind: SlopeKind,
    pub spectra_fingerprint: u64,
}

/// Regularization function `(x_k, lambda_k, k) -> weight` applied to raw numerators.
#[derive(Clone)]
pub struct RegularizationWeights {
    weight: Arc<dyn Fn(f64, f64, i64) -> f64 + Send + Sync>,
}

impl fmt::Debug for RegularizationWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RegularizationWeights(..)")
    }
}

impl RegularizationWeights {
    pub fn new(weight: impl Fn(f64, f64, i64) -> f64 + Send + Sync + 'static) -> Self {
        RegularizationWeights {
            weight: Arc::new(weight),
        }
    }

    /// `1 / x_k`; with the exogenous target this is the spectral cut-off estimator.
    pub fn inverse_regressor() -> Self {
        Self::new(|x, _, _| 1.0 / x)
    }

    /// `1 / lambda_k`; with the IV target this is the spectral cut-off IV estimator.
    pub fn inverse_lambda() -> Self {
        Self::new(|_, lambda, _| 1.0 / lambda)
    }

    /// Ridge-type `x_k / (x_k^2 + alpha)`.
    pub fn tikhonov(alpha: f64) -> Self {
        Self::new(move |x, _, _| x / (x * x + alpha))
    }

    pub fn eval(&self, x: f64, lambda: f64, k: i64) -> f64 {
        (self.weight)(x, lambda, k)
    }
}

fn check_responses(est: &SpectralEstimates, y: &[f64]) -> Result<()> {
    if y.len() != est.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} responses for spectra of {} samples",
            y.len(),
            est.n()
        )));
    }
    if est.selected().is_empty() {
        return Err(Error::NoSelectedFrequencies);
    }
    Ok(())
}

/// `(1/n) sum_i coeffs_i(k) * y_i`
fn cross_moment(coeffs: &[FourierCoeffs], y: &[f64], k: i64) -> Complex64 {
    let s: Complex64 = coeffs.iter().zip(y).map(|(c, &yi)| c.get(k) * yi).sum();
    s / y.len() as f64
}

fn build(
    est: &SpectralEstimates,
    kind: SlopeKind,
    mut coeff_at: impl FnMut(i64) -> Result<Complex64>,
) -> Result<SlopeEstimate> {
    let mut coeffs = FourierCoeffs::zeros(est.order());
    for &k in est.selected() {
        coeffs.set(k, coeff_at(k)?);
    }
    Ok(SlopeEstimate {
        coeffs,
        kind,
        spectra_fingerprint: est.fingerprint(),
    })
}

pub(crate) fn fit_exogenous_responses(est: &SpectralEstimates, y: &[f64]) -> Result<SlopeEstimate> {
    check_responses(est, y)?;
    let xs = &est.projections().x;
    build(est, SlopeKind::Exogenous, |k| {
        let x = est.x_hat(k);
        if x == 0.0 {
            return Err(Error::DegenerateSpectrum { k });
        }
        Ok(cross_moment(xs, y, k) / x)
    })
}

pub(crate) fn fit_iv_responses(est: &SpectralEstimates, y: &[f64]) -> Result<SlopeEstimate> {
    check_responses(est, y)?;
    let ws = &est.projections().w;
    build(est, SlopeKind::InstrumentalVariable, |k| {
        let c = est.c_hat(k);
        if c.norm_sqr() == 0.0 {
            return Err(Error::DegenerateCrossSpectrum { k });
        }
        Ok(cross_moment(ws, y, k) / c)
    })
}

/// Exogenous spectral cut-off estimator: `[(1/n) sum_i <X_i, phi_k> Y_i] / x_k` on the cut-off set.
pub fn fit_exogenous(data: &Dataset, est: &SpectralEstimates) -> Result<SlopeEstimate> {
    est.check_shape(data)?;
    fit_exogenous_responses(est, data.y())
}

/// IV estimator: `[(1/n) sum_i <W_i, phi_k> Y_i] / c_k` on the cut-off set.
pub fn fit_iv(data: &Dataset, est: &SpectralEstimates) -> Result<SlopeEstimate> {
    est.check_shape(data)?;
    fit_iv_responses(est, data.y())
}

/// Raw numerator times a regularization weight, on the cut-off set.
pub fn fit_weighted(
    data: &Dataset,
    est: &SpectralEstimates,
    weights: &RegularizationWeights,
    target: EstimatorTarget,
) -> Result<SlopeEstimate> {
    est.check_shape(data)?;
    check_responses(est, data.y())?;
    let y = data.y();
    let proj = est.projections();
    build(est, SlopeKind::Weighted, |k| {
        let numerator = match target {
            EstimatorTarget::Exogenous => cross_moment(&proj.x, y, k),
            EstimatorTarget::InstrumentalVariable => {
                est.c_hat(k).conj() / est.w_hat(k) * cross_moment(&proj.w, y, k)
            }
        };
        let w = weights.eval(est.x_hat(k), est.lambda_hat(k), k);
        if !w.is_finite() {
            return Err(Error::InvalidWeight { k });
        }
        Ok(numerator * w)
    })
}

/// `Re <slope, X_i>` for every sample, from precomputed regressor coefficients.
pub(crate) fn fitted_values(xs: &[FourierCoeffs], slope: &FourierCoeffs) -> Vec<f64> {
    let support: Vec<(i64, Complex64)> = slope.iter().filter(|(_, c)| c.norm_sqr() != 0.0).collect();
    xs.iter()
        .map(|x| {
            let v: Complex64 = support.iter().map(|&(k, b)| b * x.get(k).conj()).sum();
            debug_assert!(
                v.im.abs() <= 1e-8 * (1.0 + v.re.abs()),
                "inner product of real functions has imaginary part {}",
                v.im
            );
            v.re
        })
        .collect()
}

/// `Y_i - <slope, X_i>`.
pub fn residuals(data: &Dataset, slope: &SlopeEstimate) -> Result<Vec<f64>> {
    let proj = project(data, slope.coeffs.order())?;
    let fit = fitted_values(&proj.x, &slope.coeffs);
    Ok(data.y().iter().zip(fit).map(|(y, f)| y - f).collect())
}

pub(crate) fn mean_square(values: &[f64]) -> f64 {
    values.iter().map(|r| r * r).sum::<f64>() / values.len() as f64
}

/// `(1/n) sum_i (Y_i - <beta_IV, X_i>)^2`.
pub fn sigma_hat_sq(data: &Dataset, slope_iv: &SlopeEstimate) -> Result<f64> {
    if slope_iv.kind != SlopeKind::InstrumentalVariable {
        return Err(Error::WrongEstimatorKind {
            expected: "instrumental-variable",
        });
    }
    Ok(mean_square(&residuals(data, slope_iv)?))
}
