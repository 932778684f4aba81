//! Empirical eigenvalues of the covariance and cross-covariance operators in the
//! shared Fourier eigenbasis, and the spectral cut-off frequency set.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{nyquist, FourierBasis, FourierCoeffs, SampledCurve};

/// `n` i.i.d. observations `(X_i, W_i, Y_i)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<SampledCurve>,
    w: Vec<SampledCurve>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<SampledCurve>, w: Vec<SampledCurve>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if x.len() != n || w.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} X curves, {} W curves, {} responses",
                x.len(),
                w.len(),
                n
            )));
        }
        if n < 2 {
            return Err(Error::TooFewSamples { min: 2, got: n });
        }
        let p = x[0].p();
        if let Some(i) = x.iter().chain(&w).position(|c| c.p() != p) {
            return Err(Error::ShapeMismatch(format!("curve {i} does not have grid order {p}")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite response".into()));
        }
        Ok(Dataset { x, w, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x[0].p()
    }

    pub fn x(&self) -> &[SampledCurve] {
        &self.x
    }

    pub fn w(&self) -> &[SampledCurve] {
        &self.w
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Subtracts the sample mean curve from every `X_i` and `W_i` and the mean
    /// response from every `Y_i`.
    pub fn centered(&self) -> Result<Self> {
        fn center_curves(curves: &[SampledCurve]) -> Result<Vec<SampledCurve>> {
            let n = curves.len() as f64;
            let len = curves[0].values().len();
            let mean: Vec<f64> = (0..len)
                .map(|l| curves.iter().map(|c| c.values()[l]).sum::<f64>() / n)
                .collect();
            curves
                .iter()
                .map(|c| SampledCurve::new(c.values().iter().zip(&mean).map(|(v, m)| v - m).collect()))
                .collect()
        }
        let y_mean = self.y.iter().sum::<f64>() / self.n() as f64;
        Dataset::new(
            center_curves(&self.x)?,
            center_curves(&self.w)?,
            self.y.iter().map(|v| v - y_mean).collect(),
        )
    }

    /// Same curves, new responses.
    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self> {
        Dataset::new(self.x.clone(), self.w.clone(), y)
    }
}

/// `gamma_k = 1 + |2 pi k|`.
pub fn sobolev_weight(k: i64) -> f64 {
    1.0 + (2.0 * PI * k as f64).abs()
}

/// Tuning of the spectral cut-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Regularization parameter `alpha > 0`.
    pub alpha: f64,
    /// Sobolev exponent in the threshold `alpha * gamma_k^nu`.
    pub nu: f64,
    /// Truncation order; `None` means the Nyquist bound of the grid.
    pub order: Option<usize>,
}

impl SpectralConfig {
    pub fn new(alpha: f64) -> Self {
        SpectralConfig {
            alpha,
            nu: 0.0,
            order: None,
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = Some(order);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidRegularization(self.alpha));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidSobolevExponent(self.nu));
        }
        Ok(())
    }
}

/// Per-sample Fourier coefficients of the regressors and instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    pub x: Vec<FourierCoeffs>,
    pub w: Vec<FourierCoeffs>,
}

/// Empirical spectra of one dataset together with the cut-off set.
#[derive(Debug, Clone)]
pub struct SpectralEstimates {
    n: usize,
    p: usize,
    order: usize,
    alpha: f64,
    nu: f64,
    x_hat: Vec<f64>,
    w_hat: Vec<f64>,
    c_hat: Vec<Complex64>,
    lambda_hat: Vec<f64>,
    mu_x: FourierCoeffs,
    mu_w: FourierCoeffs,
    selected: Vec<i64>,
    fingerprint: u64,
    projections: Arc<Projections>,
}

impl SpectralEstimates {
    #[inline]
    fn idx(&self, k: i64) -> usize {
        debug_assert!(k.unsigned_abs() as usize <= self.order);
        (k + self.order as i64) as usize
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn x_hat(&self, k: i64) -> f64 {
        self.x_hat[self.idx(k)]
    }

    pub fn w_hat(&self, k: i64) -> f64 {
        self.w_hat[self.idx(k)]
    }

    pub fn c_hat(&self, k: i64) -> Complex64 {
        self.c_hat[self.idx(k)]
    }

    pub fn lambda_hat(&self, k: i64) -> f64 {
        self.lambda_hat[self.idx(k)]
    }

    pub fn mu_x(&self) -> &FourierCoeffs {
        &self.mu_x
    }

    pub fn mu_w(&self) -> &FourierCoeffs {
        &self.mu_w
    }

    /// The cut-off set, in increasing frequency order.
    pub fn selected(&self) -> &[i64] {
        &self.selected
    }

    pub fn is_selected(&self, k: i64) -> bool {
        self.selected.binary_search(&k).is_ok()
    }

    /// Identifies the spectra a slope estimate was computed from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn projections(&self) -> &Projections {
        &self.projections
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let k = self.order as i64;
        -k..=k
    }

    pub(crate) fn check_shape(&self, data: &Dataset) -> Result<()> {
        if data.n() != self.n || data.p() != self.p {
            return Err(Error::ShapeMismatch(format!(
                "dataset is n={}, p={} but spectra were estimated for n={}, p={}",
                data.n(),
                data.p(),
                self.n,
                self.p
            )));
        }
        Ok(())
    }
}

/// Projects every curve of `data` onto the Fourier basis up to `order`.
pub fn project(data: &Dataset, order: usize) -> Result<Projections> {
    let basis = FourierBasis::new(data.p(), order)?;
    let analyze_all = |curves: &[SampledCurve]| -> Result<Vec<FourierCoeffs>> {
        curves.par_iter().map(|c| basis.analyze(c)).collect()
    };
    Ok(Projections {
        x: analyze_all(data.x())?,
        w: analyze_all(data.w())?,
    })
}

fn mean_coeffs(coeffs: &[FourierCoeffs], order: usize) -> FourierCoeffs {
    let n = coeffs.len() as f64;
    let dense = (0..2 * order + 1)
        .map(|j| coeffs.iter().map(|c| c.as_slice()[j]).sum::<Complex64>() / n)
        .collect();
    FourierCoeffs::from_dense(dense).expect("odd length by construction")
}

/// Uncentered empirical eigenvalues `x_k`, `w_k`, `c_k`, `lambda_k` and the cut-off set.
pub fn estimate(data: &Dataset, config: &SpectralConfig) -> Result<SpectralEstimates> {
    config.validate()?;
    if data.n() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: data.n() });
    }
    let order = config.order.unwrap_or_else(|| nyquist(data.p()));
    let projections = project(data, order)?;
    estimate_from_projections(projections, data.p(), config)
}

/// As [`estimate`], for coefficients that were already computed.
pub fn estimate_from_projections(
    projections: Projections,
    p: usize,
    config: &SpectralConfig,
) -> Result<SpectralEstimates> {
    config.validate()?;
    let n = projections.x.len();
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    if projections.w.len() != n {
        return Err(Error::ShapeMismatch("X and W projections differ in count".into()));
    }
    let order = projections.x[0].order();
    if order > nyquist(p) {
        return Err(Error::TruncationTooLarge { order, max: nyquist(p) });
    }
    if projections.x.iter().chain(&projections.w).any(|c| c.order() != order) {
        return Err(Error::ShapeMismatch("projections have mixed truncation orders".into()));
    }

    let mu_x = mean_coeffs(&projections.x, order);
    let mu_w = mean_coeffs(&projections.w, order);

    let nf = n as f64;
    let dim = 2 * order + 1;
    let mut x_hat = Vec::with_capacity(dim);
    let mut w_hat = Vec::with_capacity(dim);
    let mut c_hat = Vec::with_capacity(dim);
    let mut lambda_hat = Vec::with_capacity(dim);
    let mut selected = Vec::new();
    for (j, k) in (-(order as i64)..=order as i64).enumerate() {
        let (mut xs, mut ws, mut cs) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for (xi, wi) in projections.x.iter().zip(&projections.w) {
            let a = xi.as_slice()[j];
            let b = wi.as_slice()[j];
            xs += a.norm_sqr();
            ws += b.norm_sqr();
            // <phi_k, X_i> <W_i, phi_k>
            cs += a.conj() * b;
        }
        let (xk, wk, ck) = (xs / nf, ws / nf, cs / nf);
        let lk = if wk >= config.alpha { ck.norm_sqr() / wk } else { 0.0 };
        if lk >= config.alpha * sobolev_weight(k).powf(config.nu) {
            selected.push(k);
        }
        x_hat.push(xk);
        w_hat.push(wk);
        c_hat.push(ck);
        lambda_hat.push(lk);
    }

    let fingerprint = fingerprint(n, p, order, config, &x_hat, &w_hat, &c_hat);
    Ok(SpectralEstimates {
        n,
        p,
        order,
        alpha: config.alpha,
        nu: config.nu,
        x_hat,
        w_hat,
        c_hat,
        lambda_hat,
        mu_x,
        mu_w,
        selected,
        fingerprint,
        projections: Arc::new(projections),
    })
}

/// Frequencies with `lambda_k >= alpha * gamma_k^nu`.
///
/// `lambda_k` already carries the indicator `w_k >= alpha`, so this single set
/// encodes both cut-off indicators of the IV estimator.
pub fn selection_set(est: &SpectralEstimates) -> Vec<i64> {
    est.frequencies()
        .filter(|&k| est.lambda_hat(k) >= est.alpha * sobolev_weight(k).powf(est.nu))
        .collect()
}

// FNV-1a over the bit patterns of everything the estimators read.
fn fingerprint(
    n: usize,
    p: usize,
    order: usize,
    config: &SpectralConfig,
    x_hat: &[f64],
    w_hat: &[f64],
    c_hat: &[Complex64],
) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let words = [n as u64, p as u64, order as u64, config.alpha.to_bits(), config.nu.to_bits()]
        .into_iter()
        .chain(x_hat.iter().map(|v| v.to_bits()))
        .chain(w_hat.iter().map(|v| v.to_bits()))
        .chain(c_hat.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]));
    let mut h = OFFSET;
    for word in words {
        for byte in word.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}
