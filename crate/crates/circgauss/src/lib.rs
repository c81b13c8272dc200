//! Exact simulation of complex-valued stationary Gaussian sequences by minimal
//! circulant embedding.
//!
//! Given a covariance function `γ(τ) = E[Z(t+τ) Z(t)*]` on the integers, the classical
//! embedding trick places the `n×n` Toeplitz covariance inside an `m̃×m̃` circulant
//! matrix whose eigenvalues come from one FFT of its first row. When those eigenvalues
//! are non-negative, `n` consecutive samples of the process are recovered *exactly* from
//! `O(m̃)` standard Gaussian draws and a second FFT — `O(m̃ log m̃)` total, against
//! `O(n³)` for dense factorizations.
//!
//! The crate covers the full pipeline:
//!
//! - [`covmodels`] — a zoo of complex covariance models (phase-modulated long-memory
//!   processes, complex AR(1), complex and circular fractional Gaussian noise, tabulated
//!   covariances), with validation and series-accurate evaluation at extreme lags.
//! - [`kernels`] — Dirichlet/Fejér kernels and their conjugate counterparts, the
//!   summation-by-parts machinery behind the spectral lower bounds.
//! - [`embedding`] — embedding-size selection, circulant eigenvalues by three
//!   independent routes (FFT, direct cosine sums, kernel form), and checkers that
//!   certify non-negativity from covariance shape (monotonicity/convexity) without
//!   computing the spectrum.
//! - [`simulate`] — the exact sampler for circularly-symmetric and real-standard
//!   Gaussian drivers, a trace-preserving approximation for embeddings with genuinely
//!   negative eigenvalues, and a computable uniform error bound for that approximation.
//! - [`estimate`] — Hurst-exponent estimation for circular fractional Brownian motion
//!   from dilated discrete filters, with CLT and bootstrap confidence intervals.
//! - [`oracle`] — slow, independent reference implementations (dense covariance,
//!   Cholesky/eigendecomposition samplers, empirical moments) used to validate the fast
//!   paths.
//! - [`cli`] — the `circgauss` command-line interface.
//!
//! # Quick start
//!
//! ```
//! use circgauss::covmodels::CovarianceModel;
//! use circgauss::simulate::{simulate, NoiseKind, RecoveryPolicy, RngHandle};
//!
//! // A circular complex fractional Gaussian noise with long memory.
//! let model = CovarianceModel::CircularFgn { h: 0.8, sigma2: 1.0, eta: 0.2 };
//! let mut rng = RngHandle::new(42, 0);
//! let out = simulate(&model, 512, NoiseKind::CircularStandard,
//!                    RecoveryPolicy::GrowRetry { max_doublings: 3 }, &mut rng).unwrap();
//! assert_eq!(out.z.len(), 512);
//! assert!(out.exact); // this embedding is non-negative at its minimal size
//! assert_eq!(out.phi_scale, 1.0);
//! ```

pub mod covmodels;
pub mod embedding;
pub mod cli;
pub mod error;
pub mod estimate;
pub(crate) mod fft;
pub mod kernels;
pub mod oracle;
pub mod simulate;

pub use error::{Error, Result};
