//! Periodic Fourier analysis of curves sampled on an equispaced grid of `[0, 1)`.
//!
//! A curve of grid order `p` is stored as `p + 1` samples at `t_l = l / (p + 1)`.
//! Coefficients follow the convention `<f, phi_k> = int f(t) exp(-2 pi i k t) dt`,
//! discretized with the uniform weight `1 / (p + 1)`, so the discrete Parseval
//! identity holds exactly for every truncation order up to the Nyquist bound.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-valued function on `[0, 1)` sampled at `t_l = l / (p + 1)`, `l = 0..=p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    values: Vec<f64>,
}

impl SampledCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidCurve(format!(
                "need at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(l) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve(format!("non-finite sample at index {l}")));
        }
        Ok(SampledCurve { values })
    }

    /// Samples `f` on the grid of order `p`.
    pub fn from_fn(p: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid(p).map(f).collect();
        Self::new(values)
    }

    /// Grid order: the curve has `p + 1` samples.
    pub fn p(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Riemann sum `(1/(p+1)) sum_l f(t_l) g(t_l)`.
    pub fn grid_inner(&self, other: &SampledCurve) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "grid orders {} and {} differ",
                self.p(),
                other.p()
            )));
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s / self.values.len() as f64)
    }
}

/// Grid points `t_l = l / (p + 1)` for `l = 0..=p`.
pub fn grid(p: usize) -> impl Iterator<Item = f64> {
    let len = (p + 1) as f64;
    (0..=p).map(move |l| l as f64 / len)
}

/// Largest admissible truncation order for grid order `p`.
pub fn nyquist(p: usize) -> usize {
    p / 2
}

/// Complex Fourier coefficients for frequencies `-K..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl FourierCoeffs {
    pub fn zeros(order: usize) -> Self {
        FourierCoeffs {
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
        }
    }

    /// Builds coefficients from `(k, value)` pairs; unspecified frequencies are zero.
    pub fn from_pairs(order: usize, pairs: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self> {
        let mut out = Self::zeros(order);
        for (k, c) in pairs {
            if k.unsigned_abs() as usize > order {
                return Err(Error::ShapeMismatch(format!(
                    "frequency {k} outside truncation order {order}"
                )));
            }
            out.set(k, c);
        }
        Ok(out)
    }

    /// Wraps a dense vector laid out as `[c_{-K}, ..., c_0, ..., c_K]`.
    pub fn from_dense(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "dense coefficient vector must have odd length, got {}",
                coeffs.len()
            )));
        }
        Ok(FourierCoeffs {
            order: coeffs.len() / 2,
            coeffs,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    fn index(&self, k: i64) -> usize {
        (k + self.order as i64) as usize
    }

    /// Coefficient at frequency `k`; zero outside `-K..=K`.
    pub fn get(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.order {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[self.index(k)]
        }
    }

    /// # Panics
    /// If `|k| > K`.
    pub fn set(&mut self, k: i64, value: Complex64) {
        assert!(k.unsigned_abs() as usize <= self.order, "frequency {k} out of range");
        let i = self.index(k);
        self.coeffs[i] = value;
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let k = self.order as i64;
        -k..=k
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.frequencies().zip(self.coeffs.iter().copied())
    }

    /// Dense slice laid out as `[c_{-K}, ..., c_K]`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Largest `|c_{-k} - conj(c_k)|` over all frequencies.
    pub fn hermitian_defect(&self) -> f64 {
        self.frequencies()
            .map(|k| (self.get(-k) - self.get(k).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Twiddle table for one grid order, reused across many curves.
///
/// Frequencies `k` and `k + (p + 1)` alias on the grid, so `exp(-2 pi i k l / (p+1))`
/// is looked up at `(k l) mod (p + 1)`. Conjugate frequencies hit mirrored table
/// entries, which keeps Hermitian symmetry exact for real input.
#[derive(Debug, Clone)]
pub struct FourierBasis {
    p: usize,
    order: usize,
    twiddles: Vec<Complex64>,
}

impl FourierBasis {
    pub fn new(p: usize, order: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidCurve("grid order must be positive".into()));
        }
        if order > nyquist(p) {
            return Err(Error::TruncationTooLarge {
                order,
                max: nyquist(p),
            });
        }
        let len = p + 1;
        let twiddles = (0..len)
            .map(|m| {
                let theta = -2.0 * PI * m as f64 / len as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Ok(FourierBasis { p, order, twiddles })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    fn twiddle(&self, k: i64, l: usize) -> Complex64 {
        let len = (self.p + 1) as i64;
        let m = (k * l as i64).rem_euclid(len) as usize;
        self.twiddles[m]
    }

    pub fn analyze(&self, curve: &SampledCurve) -> Result<FourierCoeffs> {
        if curve.p() != self.p {
            return Err(Error::ShapeMismatch(format!(
                "curve has grid order {}, basis expects {}",
                curve.p(),
                self.p
            )));
        }
        let len = (self.p + 1) as f64;
        let values = curve.values();
        let mut out = FourierCoeffs::zeros(self.order);
        out.set(0, Complex64::new(values.iter().sum::<f64>() / len, 0.0));
        for k in 1..=self.order as i64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, &v) in values.iter().enumerate() {
                acc += self.twiddle(k, l) * v;
            }
            let c = acc / len;
            out.set(k, c);
            out.set(-k, c.conj());
        }
        Ok(out)
    }

    pub fn synthesize(&self, coeffs: &FourierCoeffs) -> Result<SampledCurve> {
        synthesize(coeffs, self.p)
    }
}

/// Discrete Fourier coefficients `c_k = (1/(p+1)) sum_l f(t_l) exp(-2 pi i k t_l)` for `|k| <= K`.
pub fn analyze(curve: &SampledCurve, order: usize) -> Result<FourierCoeffs> {
    FourierBasis::new(curve.p(), order)?.analyze(curve)
}

/// Evaluates `Re sum_k c_k exp(2 pi i k t_l)` on the grid of order `p`.
pub fn synthesize(coeffs: &FourierCoeffs, p: usize) -> Result<SampledCurve> {
    let order = coeffs.order();
    if p < 2 * order || p == 0 {
        return Err(Error::GridTooCoarse { p, order });
    }
    let len = (p + 1) as i64;
    let values = (0..=p)
        .map(|l| {
            coeffs
                .iter()
                .map(|(k, c)| {
                    let m = (k * l as i64).rem_euclid(len) as f64;
                    let theta = 2.0 * PI * m / len as f64;
                    (c * Complex64::new(theta.cos(), theta.sin())).re
                })
                .sum()
        })
        .collect();
    SampledCurve::new(values)
}

/// `sum_{|k| <= K} a_k conj(b_k)`, the coefficient form of `int a conj(b)`.
pub fn inner_product(a: &FourierCoeffs, b: &FourierCoeffs) -> Result<Complex64> {
    if a.order() != b.order() {
        return Err(Error::TruncationMismatch(a.order(), b.order()));
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y.conj())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // direct double loop, independent of the twiddle table
    fn brute_dft(values: &[f64], k: i64) -> Complex64 {
        let len = values.len() as f64;
        values
            .iter()
            .enumerate()
            .map(|(l, v)| {
                let theta = -2.0 * PI * k as f64 * l as f64 / len;
                c(v * theta.cos(), v * theta.sin())
            })
            .sum::<Complex64>()
            / len
    }

    #[test]
    fn constant_curve_has_only_mean() {
        for p in [2, 7, 100] {
            let curve = SampledCurve::new(vec![3.25; p + 1]).unwrap();
            let co = analyze(&curve, 1).unwrap();
            assert_eq!(co.get(0), c(3.25, 0.0));
            for k in [-1, 1] {
                assert!(co.get(k).norm() < 1e-15);
            }
        }
        let curve = SampledCurve::new(vec![-2.0; 10]).unwrap();
        let co = analyze(&curve, 2).unwrap();
        assert_eq!(co.get(0), c(-2.0, 0.0));
        for k in [-2, -1, 1, 2] {
            assert!(co.get(k).norm() < 1e-15, "k={k}: {}", co.get(k));
        }
    }

    #[test]
    fn cosine_tone() {
        let curve = SampledCurve::from_fn(99, |t| (2.0 * PI * t).cos()).unwrap();
        let co = analyze(&curve, 3).unwrap();
        for k in -3..=3i64 {
            let expected = if k.abs() == 1 { c(0.5, 0.0) } else { c(0.0, 0.0) };
            assert!((co.get(k) - expected).norm() < 1e-12, "k={k}");
            assert!((co.get(k) - brute_dft(curve.values(), k)).norm() < 1e-12);
        }
    }

    #[test]
    fn sine_tone() {
        let curve = SampledCurve::from_fn(99, |t| (4.0 * PI * t).sin()).unwrap();
        let co = analyze(&curve, 3).unwrap();
        assert!((co.get(2) - c(0.0, -0.5)).norm() < 1e-12);
        assert!((co.get(-2) - c(0.0, 0.5)).norm() < 1e-12);
        assert!((co.get(2) - brute_dft(curve.values(), 2)).norm() < 1e-12);
    }

    #[test]
    fn analyze_rejects_bad_input() {
        let curve = SampledCurve::new(vec![0.0; 8]).unwrap();
        assert!(matches!(
            analyze(&curve, 4),
            Err(Error::TruncationTooLarge { order: 4, max: 3 })
        ));
        assert!(matches!(SampledCurve::new(vec![0.0, f64::NAN]), Err(Error::InvalidCurve(_))));
        assert!(matches!(SampledCurve::new(vec![1.0]), Err(Error::InvalidCurve(_))));
    }

    #[test]
    fn synthesize_examples() {
        let co = FourierCoeffs::from_pairs(0, [(0, c(5.0, 0.0))]).unwrap();
        let curve = synthesize(&co, 10).unwrap();
        assert!(curve.values().iter().all(|v| (v - 5.0).abs() < 1e-15));

        let co = FourierCoeffs::from_pairs(1, [(1, c(0.5, 0.0)), (-1, c(0.5, 0.0))]).unwrap();
        let curve = synthesize(&co, 99).unwrap();
        for (v, t) in curve.values().iter().zip(grid(99)) {
            assert!((v - (2.0 * PI * t).cos()).abs() < 1e-12);
        }

        let co = FourierCoeffs::zeros(3);
        assert!(matches!(synthesize(&co, 5), Err(Error::GridTooCoarse { p: 5, order: 3 })));
    }

    #[test]
    fn inner_product_examples() {
        let one = FourierCoeffs::from_pairs(1, [(0, c(1.0, 0.0))]).unwrap();
        assert_eq!(inner_product(&one, &one).unwrap(), c(1.0, 0.0));

        let cos = FourierCoeffs::from_pairs(1, [(1, c(0.5, 0.0)), (-1, c(0.5, 0.0))]).unwrap();
        let sin = FourierCoeffs::from_pairs(1, [(1, c(0.0, -0.5)), (-1, c(0.0, 0.5))]).unwrap();
        assert!((inner_product(&cos, &cos).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!(inner_product(&cos, &sin).unwrap().norm() < 1e-14);

        let other = FourierCoeffs::zeros(2);
        assert!(matches!(inner_product(&cos, &other), Err(Error::TruncationMismatch(1, 2))));
    }

    #[test]
    fn from_dense_requires_odd_length() {
        assert!(FourierCoeffs::from_dense(vec![c(0.0, 0.0); 4]).is_err());
        let co = FourierCoeffs::from_dense(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(co.order(), 1);
        assert_eq!(co.get(-1), c(1.0, 0.0));
        assert_eq!(co.get(5), c(0.0, 0.0));
    }
}
