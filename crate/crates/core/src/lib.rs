//! Exogeneity testing for functional linear regression.
//!
//! The model is `Y = <beta, X> + U` with a curve-valued regressor `X` observed
//! on an equispaced grid of `[0, 1)` and a curve-valued instrument `W`. The
//! regressor is exogenous when `E[X(t) U] = 0` for all `t`. The test compares a
//! spectral cut-off least-squares slope estimate with an instrumental-variable
//! one: both are consistent under exogeneity, only the latter under
//! endogeneity. The squared distance of their projections onto the design,
//! `T_n`, is calibrated either by a normal approximation
//! ([`asymptotic_test`]) or by a residual bootstrap ([`bootstrap_test`]).
//!
//! ```
//! use exo_flr_core::{asymptotic_test, DgpConfig, SpectralConfig};
//!
//! let data = DgpConfig { n: 200, rho: 0.4, seed: 1, ..DgpConfig::default() }.generate()?;
//! let outcome = asymptotic_test(&data, &SpectralConfig::new(0.053), 0.05)?;
//! assert!(outcome.p_value > 0.0 && outcome.p_value < 1.0);
//! # Ok::<(), exo_flr_core::Error>(())
//! ```

pub mod bootstrap;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod exotest;
pub mod fourier;
pub mod harness;
pub mod rng;
pub mod spectra;

pub use bootstrap::{bootstrap_test, BootstrapOutcome, BootstrapScheme};
pub use dgp::{sample_dataset, slope, DgpConfig, SlopeGrid};
pub use error::{Error, Result};
pub use estimators::{fit_exogenous, fit_iv, fit_weighted, RegularizationWeights, SlopeEstimate, SlopeKind};
pub use exotest::{asymptotic_test, statistic, TestOutcome};
pub use fourier::{analyze, inner_product, synthesize, FourierBasis, FourierCoeffs, SampledCurve};
pub use harness::{run_cell, run_sweep, CellResult, SweepCell, TestKind};
pub use spectra::{estimate, Dataset, SpectralConfig, SpectralEstimates};
