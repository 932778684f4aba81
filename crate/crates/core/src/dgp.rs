//! Simulation design with controlled endogeneity.
//!
//! A trivariate Gaussian driver `(Z1, Z2, U)` with
//! `corr(Z1, Z2) = nu_instr`, `corr(Z1, U) = rho` and `corr(Z2, U) = 0` yields
//!
//! ```text
//! X(t) = (t + 1/2) Z1
//! W(t) = (t + 1/2) Z2 + H,     H ~ U(-1/2, 1/2)
//! Y    = (1/(p+1)) sum_l X(t_l) beta(t_l) + sigma U
//! ```
//!
//! so `rho = 0` is the exogenous case and `nu_instr` controls instrument strength.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fourier::{grid, SampledCurve};
use crate::rng::substream;
use crate::spectra::Dataset;

pub const DEFAULT_SIGMA: f64 = 1.4;
pub const DEFAULT_BANDWIDTH: f64 = 0.1;
pub const DEFAULT_GRID: usize = 100;

const QUAD_TOL: f64 = 1e-9;

/// Unnormalized bump `exp(-1/(1-u^2))` on (-1, 1).
fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 40)
}

fn bump_mass() -> f64 {
    use std::sync::OnceLock;
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| integrate(bump, -1.0, 1.0, 1e-13))
}

/// Distribution function of the normalized bump, `P(V <= u)`.
fn bump_cdf(u: f64) -> f64 {
    if u <= -1.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        integrate(bump, -1.0, u, QUAD_TOL) / bump_mass()
    }
}

/// Mollified indicator of `[1/4, 3/4]` (periodically continued by cells `[n + 1/4, n + 3/4]`).
///
/// Cell `n` is smoothed by the bump rescaled to `(h(2n - 1), h(2n + 1))`; only
/// cells overlapping `[-1, 2]` are summed.
fn smoothed_indicator(t: f64, h: f64) -> f64 {
    let total: f64 = (-1i32..=1)
        .map(|cell| {
            let n = f64::from(cell);
            let upper = ((t - n - 0.25) / h - 2.0 * n).min(1.0);
            let lower = ((t - n - 0.75) / h - 2.0 * n).max(-1.0);
            if upper <= lower {
                0.0
            } else {
                bump_cdf(upper) - bump_cdf(lower)
            }
        })
        .sum();
    // quadrature error can leave the exact range by ~1e-9
    total.clamp(0.0, 1.0)
}

/// Slope function `beta_id` in {1, 2, 3} at `t` in [0, 1]; `h` only affects the third.
pub fn slope(beta_id: u8, h: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainError(t));
    }
    match beta_id {
        1 => Ok((4.0 * PI * t).sin() + 0.5 * (8.0 * PI * t).sin() + (20.0 * PI * t).sin() / 7.0),
        2 => Ok(2.0 / PI * (2.0 * PI * t).cos().clamp(-1.0, 1.0).asin()),
        3 => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidBandwidth(h));
            }
            Ok(smoothed_indicator(t, h))
        }
        other => Err(Error::UnknownSlope(other)),
    }
}

/// A slope function tabulated once on the grid `t_l = l/(p+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeGrid {
    beta_id: u8,
    h: f64,
    values: Vec<f64>,
}

impl SlopeGrid {
    pub fn new(beta_id: u8, p: usize, h: f64) -> Result<Self> {
        let values = grid(p).map(|t| slope(beta_id, h, t)).collect::<Result<Vec<_>>>()?;
        Ok(SlopeGrid { beta_id, h, values })
    }

    pub fn beta_id(&self) -> u8 {
        self.beta_id
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn p(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Riemann sum `(1/(p+1)) sum_l x_l beta(t_l)`.
    pub fn integrate_against(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.values.len());
        x.iter().zip(&self.values).map(|(a, b)| a * b).sum::<f64>() / self.values.len() as f64
    }
}

/// Lower Cholesky factor of the driver covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Driver {
    l: [[f64; 3]; 3],
}

impl Driver {
    pub fn new(rho: f64, nu_instr: f64) -> Result<Self> {
        if !(rho.is_finite() && nu_instr.is_finite()) || rho * rho + nu_instr * nu_instr >= 1.0 {
            return Err(Error::InvalidCorrelationPair { rho, nu: nu_instr });
        }
        let s = Self::covariance(rho, nu_instr);
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let partial: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    let d = s[i][i] - partial;
                    if d <= 0.0 {
                        return Err(Error::InvalidCorrelationPair { rho, nu: nu_instr });
                    }
                    l[i][j] = d.sqrt();
                } else {
                    l[i][j] = (s[i][j] - partial) / l[j][j];
                }
            }
        }
        Ok(Driver { l })
    }

    /// Covariance of `(Z1, Z2, U)`: variances 3, 2, 1.
    pub fn covariance(rho: f64, nu_instr: f64) -> [[f64; 3]; 3] {
        let a = nu_instr * 6f64.sqrt();
        let b = rho * 3f64.sqrt();
        [[3.0, a, b], [a, 2.0, 0.0], [b, 0.0, 1.0]]
    }

    pub fn factor(&self) -> [[f64; 3]; 3] {
        self.l
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64, f64) {
        let e: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let l = &self.l;
        (
            l[0][0] * e[0],
            l[1][0] * e[0] + l[1][1] * e[1],
            l[2][0] * e[0] + l[2][1] * e[1] + l[2][2] * e[2],
        )
    }
}

/// One draw of `(Z1, Z2, U)`.
pub fn sample_driver<R: Rng + ?Sized>(rho: f64, nu_instr: f64, rng: &mut R) -> Result<(f64, f64, f64)> {
    Ok(Driver::new(rho, nu_instr)?.sample(rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub n: usize,
    pub p: usize,
    /// corr(Z1, U).
    pub rho: f64,
    /// corr(Z1, Z2).
    pub nu_instr: f64,
    pub sigma: f64,
    pub beta_id: u8,
    pub h: f64,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            n: 100,
            p: DEFAULT_GRID,
            rho: 0.0,
            nu_instr: 0.6,
            sigma: DEFAULT_SIGMA,
            beta_id: 1,
            h: DEFAULT_BANDWIDTH,
            seed: 0,
        }
    }
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewSamples { min: 2, got: self.n });
        }
        if self.p < 2 {
            return Err(Error::InvalidConfig(format!("grid order p must be at least 2, got {}", self.p)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(1..=3).contains(&self.beta_id) {
            return Err(Error::UnknownSlope(self.beta_id));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidBandwidth(self.h));
        }
        Driver::new(self.rho, self.nu_instr).map(|_| ())
    }

    pub fn slope_grid(&self) -> Result<SlopeGrid> {
        SlopeGrid::new(self.beta_id, self.p, self.h)
    }

    /// The dataset determined by `seed` alone.
    pub fn generate(&self) -> Result<Dataset> {
        sample_dataset(self, &mut substream(self.seed, 0))
    }
}

/// One observation given its driver draw and instrument shift.
fn observation(
    slope: &SlopeGrid,
    sigma: f64,
    (z1, z2, u): (f64, f64, f64),
    shift: f64,
) -> Result<(SampledCurve, SampledCurve, f64)> {
    let ramp: Vec<f64> = grid(slope.p()).map(|t| t + 0.5).collect();
    let x: Vec<f64> = ramp.iter().map(|r| r * z1).collect();
    let w: Vec<f64> = ramp.iter().map(|r| r * z2 + shift).collect();
    let y = slope.integrate_against(&x) + sigma * u;
    Ok((SampledCurve::new(x)?, SampledCurve::new(w)?, y))
}

/// Draws `cfg.n` observations with a pre-tabulated slope.
pub fn sample_dataset_with<R: Rng + ?Sized>(cfg: &DgpConfig, slope: &SlopeGrid, rng: &mut R) -> Result<Dataset> {
    cfg.validate()?;
    if slope.p() != cfg.p || slope.beta_id() != cfg.beta_id {
        return Err(Error::ShapeMismatch(format!(
            "slope grid (beta {}, p = {}) does not match configuration (beta {}, p = {})",
            slope.beta_id(),
            slope.p(),
            cfg.beta_id,
            cfg.p
        )));
    }
    let driver = Driver::new(cfg.rho, cfg.nu_instr)?;
    let mut xs = Vec::with_capacity(cfg.n);
    let mut ws = Vec::with_capacity(cfg.n);
    let mut ys = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let draw = driver.sample(rng);
        let shift = rng.random::<f64>() - 0.5;
        let (x, w, y) = observation(slope, cfg.sigma, draw, shift)?;
        xs.push(x);
        ws.push(w);
        ys.push(y);
    }
    Dataset::new(xs, ws, ys)
}

pub fn sample_dataset<R: Rng + ?Sized>(cfg: &DgpConfig, rng: &mut R) -> Result<Dataset> {
    cfg.validate()?;
    sample_dataset_with(cfg, &cfg.slope_grid()?, rng)
}
