//! The covariance model zoo: complex covariance functions `γ(τ)` on ℤ.
//!
//! Every model here is stationary with Hermitian covariance, `γ(−τ) = γ(τ)*`. Real
//! base models (`RealCovariance`) can be phase-modulated into complex ones; the
//! complex fractional Gaussian noise family carries the skew parameter `η` that couples
//! real and imaginary parts. The embedding checkers consume the real/imaginary
//! decomposition `R(j) = Re γ(j)`, `I(j) = Im γ(j)` exposed by [`slices`].
//!
//! Model descriptions serialize as `{"variant": "...", "params": {...}}`; see the CLI
//! documentation for the per-variant field names.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{PI, TAU};

/// Autocovariance families of real-valued stationary processes.
///
/// All parameters live in the usual domains: variances positive, `H ∈ (0,1)`,
/// `d ∈ [−1/2, 1/2)`, `α > 0`, generalized-Cauchy `α ∈ (0,1]` and `β > 0`,
/// truncated-power exponent `> 0`, `ρ ∈ (0,1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
pub enum RealCovariance {
    /// Fractional Gaussian noise: `r(τ) = (σ²/2)(|τ−1|^{2H} − 2|τ|^{2H} + |τ+1|^{2H})`.
    Fgn { h: f64, sigma2: f64 },
    /// FARIMA(0,d,0): long memory with fractional difference parameter `d`.
    Farima { d: f64, sigma2_eps: f64 },
    /// `r(τ) = σ² e^{−α|τ|}`.
    Exponential { alpha: f64, sigma2: f64 },
    /// Generalized Cauchy: `r(τ) = σ² (1 + |τ|^α)^{−β}`.
    GeneralizedCauchy { alpha: f64, beta: f64, sigma2: f64 },
    /// Truncated power: `r(τ) = σ² (1 − |τ|)₊^exponent` (white noise on the integer grid).
    TruncatedPower { exponent: f64, sigma2: f64 },
    /// `r(τ) = σ² ρ^{|τ|}`.
    GeometricAr1 { rho: f64, sigma2: f64 },
}

/// One phase-modulated component: covariance `e^{2iπ·phi·τ} r(τ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulatedComponent {
    /// Phase in cycles per sample.
    pub phi: f64,
    pub base: RealCovariance,
}

/// Complex covariance functions `γ(τ) = E[Z(t+τ) Z(t)*]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
pub enum CovarianceModel {
    /// `γ(0) = σ²`, zero elsewhere.
    WhiteNoise { sigma2: f64 },
    /// `γ(τ) = e^{2iπ·phi·τ} r(τ)` for a real base covariance `r`; `phi` is in
    /// cycles per sample.
    Modulated { phi: f64, base: RealCovariance },
    /// A sum of modulated components (covariances add for independent processes).
    SumOfModulated { components: Vec<ModulatedComponent> },
    /// Complex AR(1): `γ(τ) = a^τ σ² / (1 − |a|²)` for `τ ≥ 0`, extended Hermitianly.
    ///
    /// For non-real `a` the naive `a^{|τ|}` rule would break Hermitian symmetry, so the
    /// extension `γ(−τ) = γ(τ)*` is taken as the definition. The `circular` flag records
    /// whether the driving white noise is circularly symmetric; it does not change `γ`.
    ComplexAr1 {
        a_re: f64,
        a_im: f64,
        sigma2: f64,
        #[serde(default = "default_true")]
        circular: bool,
    },
    /// Complex fractional Gaussian noise:
    /// `γ(τ) = ½(σ_R² + σ_I² − 2iη σ_R σ_I sign τ)(|τ−1|^{2H} − 2|τ|^{2H} + |τ+1|^{2H})`,
    /// valid iff `η² ≤ tan²(πH)`, `H ≠ 1/2`. `sigma_r`/`sigma_i` are standard deviations.
    ComplexFgn {
        h: f64,
        sigma_r: f64,
        sigma_i: f64,
        eta: f64,
    },
    /// Circular complex fGn (the `σ_R = σ_I` case, reparameterized):
    /// `γ(τ) = σ²(1 − iη sign τ)(|τ−1|^{2H} − 2|τ|^{2H} + |τ+1|^{2H})`, so `γ(0) = 2σ²`.
    CircularFgn { h: f64, sigma2: f64, eta: f64 },
    /// Directly tabulated `γ(0..L)` as `[re, im]` pairs, extended Hermitianly.
    /// `γ(0)` must be real.
    Tabulated { values: Vec<[f64; 2]> },
}

fn default_true() -> bool {
    true
}

/// Real/imaginary parts of `γ` on `0..=m`: `R(j) = Re γ(j)`, `I(j) = Im γ(j)`, `I(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSlices {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CovarianceSlices {
    /// Largest lag stored; slices cover `0..=m`.
    pub fn m(&self) -> usize {
        self.re.len() - 1
    }
}

/// Outcome of [`validate`]: an empty issue list means the model is usable.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

fn finite(x: f64, name: &str, issues: &mut Vec<String>) {
    if !x.is_finite() {
        issues.push(format!("{name} must be finite, got {x}"));
    }
}

fn positive(x: f64, name: &str, issues: &mut Vec<String>) {
    finite(x, name, issues);
    if !(x > 0.0) {
        issues.push(format!("{name} must be > 0, got {x}"));
    }
}

/// Check a real base model's parameter domains.
pub fn validate_real(model: &RealCovariance) -> ValidationReport {
    let mut issues = Vec::new();
    match *model {
        RealCovariance::Fgn { h, sigma2 } => {
            positive(sigma2, "sigma2", &mut issues);
            finite(h, "h", &mut issues);
            if !(h > 0.0 && h < 1.0) {
                issues.push(format!("Hurst exponent must lie in (0,1), got {h}"));
            }
        }
        RealCovariance::Farima { d, sigma2_eps } => {
            positive(sigma2_eps, "sigma2_eps", &mut issues);
            finite(d, "d", &mut issues);
            // d = 1/2 makes Γ(1−2d) diverge: the process has no finite variance.
            if !(d >= -0.5 && d < 0.5) {
                issues.push(format!(
                    "fractional difference parameter must lie in [−1/2, 1/2), got {d}"
                ));
            }
        }
        RealCovariance::Exponential { alpha, sigma2 } => {
            positive(alpha, "alpha", &mut issues);
            positive(sigma2, "sigma2", &mut issues);
        }
        RealCovariance::GeneralizedCauchy {
            alpha,
            beta,
            sigma2,
        } => {
            positive(sigma2, "sigma2", &mut issues);
            positive(beta, "beta", &mut issues);
            finite(alpha, "alpha", &mut issues);
            if !(alpha > 0.0 && alpha <= 1.0) {
                issues.push(format!("alpha must lie in (0,1], got {alpha}"));
            }
        }
        RealCovariance::TruncatedPower { exponent, sigma2 } => {
            positive(exponent, "exponent", &mut issues);
            positive(sigma2, "sigma2", &mut issues);
        }
        RealCovariance::GeometricAr1 { rho, sigma2 } => {
            positive(sigma2, "sigma2", &mut issues);
            finite(rho, "rho", &mut issues);
            if !(rho > 0.0 && rho < 1.0) {
                issues.push(format!("rho must lie in (0,1), got {rho}"));
            }
        }
    }
    ValidationReport { issues }
}

/// List every violated parameter constraint; an empty list means valid.
///
/// ```
/// use circgauss::covmodels::{validate, CovarianceModel};
/// let bad = CovarianceModel::ComplexAr1 { a_re: 1.1, a_im: 0.0, sigma2: 1.0, circular: true };
/// assert!(!validate(&bad).is_valid());
/// ```
pub fn validate(model: &CovarianceModel) -> ValidationReport {
    let mut issues = Vec::new();
    match model {
        CovarianceModel::WhiteNoise { sigma2 } => positive(*sigma2, "sigma2", &mut issues),
        CovarianceModel::Modulated { phi, base } => {
            finite(*phi, "phi", &mut issues);
            issues.extend(validate_real(base).issues);
        }
        CovarianceModel::SumOfModulated { components } => {
            if components.is_empty() {
                issues.push("sum of modulated components must be non-empty".into());
            }
            for (k, c) in components.iter().enumerate() {
                finite(c.phi, &format!("components[{k}].phi"), &mut issues);
                for issue in validate_real(&c.base).issues {
                    issues.push(format!("components[{k}]: {issue}"));
                }
            }
        }
        CovarianceModel::ComplexAr1 {
            a_re,
            a_im,
            sigma2,
            circular: _,
        } => {
            positive(*sigma2, "sigma2", &mut issues);
            finite(*a_re, "a_re", &mut issues);
            finite(*a_im, "a_im", &mut issues);
            let modulus = (a_re * a_re + a_im * a_im).sqrt();
            if !(modulus < 1.0) {
                issues.push(format!("|a| must be < 1, got {modulus}"));
            }
        }
        CovarianceModel::ComplexFgn {
            h,
            sigma_r,
            sigma_i,
            eta,
        } => {
            finite(*h, "h", &mut issues);
            finite(*eta, "eta", &mut issues);
            finite(*sigma_r, "sigma_r", &mut issues);
            finite(*sigma_i, "sigma_i", &mut issues);
            if *sigma_r < 0.0 || *sigma_i < 0.0 {
                issues.push("sigma_r and sigma_i must be ≥ 0".into());
            }
            if sigma_r * sigma_r + sigma_i * sigma_i <= 0.0 {
                issues.push("at least one of sigma_r, sigma_i must be > 0".into());
            }
            check_fgn_validity(*h, *eta, &mut issues);
        }
        CovarianceModel::CircularFgn { h, sigma2, eta } => {
            positive(*sigma2, "sigma2", &mut issues);
            finite(*h, "h", &mut issues);
            finite(*eta, "eta", &mut issues);
            check_fgn_validity(*h, *eta, &mut issues);
        }
        CovarianceModel::Tabulated { values } => {
            if values.is_empty() {
                issues.push("tabulated covariance needs at least γ(0)".into());
            } else {
                let [re0, im0] = values[0];
                if im0.abs() > 1e-12 {
                    issues.push(format!("γ(0) must be real, got imaginary part {im0}"));
                }
                if !(re0 >= 0.0) {
                    issues.push(format!("γ(0) must be ≥ 0, got {re0}"));
                }
                if values.iter().flatten().any(|v| !v.is_finite()) {
                    issues.push("tabulated values must all be finite".into());
                }
            }
        }
    }
    ValidationReport { issues }
}

/// The complex-fGn covariance is positive definite iff `η² ≤ tan²(πH)`, and the
/// `H = 1/2` case belongs to a different parameterization entirely.
fn check_fgn_validity(h: f64, eta: f64, issues: &mut Vec<String>) {
    if !(h > 0.0 && h < 1.0) {
        issues.push(format!("Hurst exponent must lie in (0,1), got {h}"));
        return;
    }
    if h == 0.5 {
        issues.push("H = 1/2 is excluded (degenerate parameterization)".into());
        return;
    }
    let t = (PI * h).tan();
    if eta * eta > t * t {
        issues.push(format!(
            "validity requires η² ≤ tan²(πH): |η| = {} exceeds |tan(πH)| = {}",
            eta.abs(),
            t.abs()
        ));
    }
}

/// Error out (with the full issue list) unless the model is valid.
pub fn ensure_valid(model: &CovarianceModel) -> Result<()> {
    let report = validate(model);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidModel(report.issues.join("; ")))
    }
}

/// Error out unless the real base model is valid.
pub fn ensure_valid_real(model: &RealCovariance) -> Result<()> {
    let report = validate_real(model);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidModel(report.issues.join("; ")))
    }
}

/// `|τ−1|^{2H} − 2|τ|^{2H} + |τ+1|^{2H}` for integer `τ ≥ 0`, accurate to machine
/// precision at every lag.
///
/// Naive evaluation subtracts three nearly equal `τ^{2H}`-sized quantities and loses up
/// to all significant digits by `τ ~ 10⁶` (the true value decays like `τ^{2H−2}`). For
/// `τ ≥ 4` we instead expand `(1+x)^a + (1−x)^a − 2` with `x = 1/τ`, `a = 2H` into its
/// even binomial series `2 Σ_{k≥1} C(a,2k) x^{2k}`, which converges geometrically
/// (ratio ≤ 1/16). The checkers rely on this: at `m = 10⁴` the convexity of the fGn
/// covariance is invisible beneath naive round-off.
pub(crate) fn fgn_g(tau: u64, h: f64) -> f64 {
    let a = 2.0 * h;
    match tau {
        0 => 2.0,
        1..=3 => {
            let t = tau as f64;
            (t - 1.0).powf(a) - 2.0 * t.powf(a) + (t + 1.0).powf(a)
        }
        _ => {
            let t = tau as f64;
            let x2 = 1.0 / (t * t);
            let mut coeff = 1.0; // C(a, 0)
            let mut xp = 1.0;
            let mut sum = 0.0;
            for k in 1..=40u32 {
                let k2 = (2 * k) as f64;
                coeff *= (a - (k2 - 2.0)) / (k2 - 1.0);
                coeff *= (a - (k2 - 1.0)) / k2;
                xp *= x2;
                let prev = sum;
                sum += coeff * xp;
                if sum == prev {
                    break;
                }
            }
            2.0 * t.powf(a) * sum
        }
    }
}

/// FARIMA(0,d,0) lag-0 autocovariance `σ_ε² Γ(1−2d) / Γ(1−d)²`.
fn farima_r0(d: f64, sigma2_eps: f64) -> f64 {
    sigma2_eps * (ln_gamma(1.0 - 2.0 * d) - 2.0 * ln_gamma(1.0 - d)).exp()
}

/// FARIMA autocovariances `r(0..=m)` by the stable ratio recursion
/// `r(τ+1) = r(τ)(τ+d)/(τ+1−d)`; raw Gamma evaluation would overflow for large `τ`.
fn farima_batch(d: f64, sigma2_eps: f64, m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut r = farima_r0(d, sigma2_eps);
    out.push(r);
    for tau in 0..m {
        let t = tau as f64;
        r *= (t + d) / (t + 1.0 - d);
        out.push(r);
    }
    out
}

/// Evaluate `r(0..=m)` for a real base model in `O(m)` total.
fn real_batch(model: &RealCovariance, m: usize) -> Vec<f64> {
    match *model {
        RealCovariance::Fgn { h, sigma2 } => (0..=m as u64)
            .map(|tau| 0.5 * sigma2 * fgn_g(tau, h))
            .collect(),
        RealCovariance::Farima { d, sigma2_eps } => farima_batch(d, sigma2_eps, m),
        RealCovariance::Exponential { alpha, sigma2 } => (0..=m)
            .map(|tau| sigma2 * (-alpha * tau as f64).exp())
            .collect(),
        RealCovariance::GeneralizedCauchy {
            alpha,
            beta,
            sigma2,
        } => (0..=m)
            .map(|tau| sigma2 * (1.0 + (tau as f64).powf(alpha)).powf(-beta))
            .collect(),
        RealCovariance::TruncatedPower { exponent, sigma2 } => (0..=m)
            .map(|tau| {
                let base = 1.0 - tau as f64;
                // (1−|τ|)₊: guard before powf — a negative base with fractional
                // exponent would produce NaN, not zero.
                if base <= 0.0 {
                    0.0
                } else {
                    sigma2 * base.powf(exponent)
                }
            })
            .collect(),
        RealCovariance::GeometricAr1 { rho, sigma2 } => {
            let ln_rho = rho.ln();
            (0..=m)
                .map(|tau| sigma2 * (tau as f64 * ln_rho).exp())
                .collect()
        }
    }
}

/// Autocovariance of a real base model at a single non-negative lag.
///
/// For FARIMA this runs the `O(τ)` recursion; batch consumers should prefer
/// [`slices`], which evaluates whole prefixes in linear total time.
pub fn acvf_real(model: &RealCovariance, tau: u64) -> Result<f64> {
    ensure_valid_real(model)?;
    Ok(match *model {
        RealCovariance::Fgn { h, sigma2 } => 0.5 * sigma2 * fgn_g(tau, h),
        RealCovariance::Farima { d, sigma2_eps } => {
            let mut r = farima_r0(d, sigma2_eps);
            for k in 0..tau {
                let t = k as f64;
                r *= (t + d) / (t + 1.0 - d);
            }
            r
        }
        RealCovariance::Exponential { alpha, sigma2 } => sigma2 * (-alpha * tau as f64).exp(),
        RealCovariance::GeneralizedCauchy {
            alpha,
            beta,
            sigma2,
        } => sigma2 * (1.0 + (tau as f64).powf(alpha)).powf(-beta),
        RealCovariance::TruncatedPower { exponent, sigma2 } => {
            let base = 1.0 - tau as f64;
            if base <= 0.0 {
                0.0
            } else {
                sigma2 * base.powf(exponent)
            }
        }
        RealCovariance::GeometricAr1 { rho, sigma2 } => {
            sigma2 * (tau as f64 * rho.ln()).exp()
        }
    })
}

/// `sign` with `sign(0) = 0`, the convention that keeps `γ(0)` real for the
/// complex-fGn family.
fn sign(tau: i64) -> f64 {
    match tau.cmp(&0) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Less => -1.0,
    }
}

/// Evaluate `γ(τ)` at a single (possibly negative) lag. All models satisfy the
/// Hermitian extension `γ(−τ) = γ(τ)*`.
///
/// ```
/// use circgauss::covmodels::{gamma, CovarianceModel};
/// let wn = CovarianceModel::WhiteNoise { sigma2: 2.0 };
/// assert_eq!(gamma(&wn, 0).unwrap().re, 2.0);
/// assert_eq!(gamma(&wn, 5).unwrap().norm(), 0.0);
/// ```
pub fn gamma(model: &CovarianceModel, tau: i64) -> Result<Complex64> {
    ensure_valid(model)?;
    gamma_unchecked(model, tau)
}

fn gamma_unchecked(model: &CovarianceModel, tau: i64) -> Result<Complex64> {
    let abs_tau = tau.unsigned_abs();
    Ok(match model {
        CovarianceModel::WhiteNoise { sigma2 } => {
            if tau == 0 {
                Complex64::new(*sigma2, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        CovarianceModel::Modulated { phi, base } => {
            let r = acvf_real(base, abs_tau)?;
            let theta = TAU * phi * tau as f64;
            Complex64::new(theta.cos(), theta.sin()) * r
        }
        CovarianceModel::SumOfModulated { components } => {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in components {
                let r = acvf_real(&c.base, abs_tau)?;
                let theta = TAU * c.phi * tau as f64;
                acc += Complex64::new(theta.cos(), theta.sin()) * r;
            }
            acc
        }
        CovarianceModel::ComplexAr1 {
            a_re,
            a_im,
            sigma2,
            circular: _,
        } => {
            let a = Complex64::new(*a_re, *a_im);
            let scale = sigma2 / (1.0 - a.norm_sqr());
            let pow = pow_u64(a, abs_tau);
            let value = pow * scale;
            if tau >= 0 {
                value
            } else {
                value.conj()
            }
        }
        CovarianceModel::ComplexFgn {
            h,
            sigma_r,
            sigma_i,
            eta,
        } => {
            let g = fgn_g(abs_tau, *h);
            let re = 0.5 * (sigma_r * sigma_r + sigma_i * sigma_i);
            let im = -eta * sigma_r * sigma_i * sign(tau);
            Complex64::new(re * g, im * g)
        }
        CovarianceModel::CircularFgn { h, sigma2, eta } => {
            let g = fgn_g(abs_tau, *h);
            Complex64::new(sigma2 * g, -sigma2 * eta * sign(tau) * g)
        }
        CovarianceModel::Tabulated { values } => {
            let idx = usize::try_from(abs_tau).unwrap_or(usize::MAX);
            if idx >= values.len() {
                return Err(Error::Domain(format!(
                    "tabulated covariance defined for |τ| ≤ {}, asked for {tau}",
                    values.len() - 1
                )));
            }
            let v = Complex64::new(values[idx][0], values[idx][1]);
            if tau >= 0 {
                v
            } else {
                v.conj()
            }
        }
    })
}

/// `z^k` by binary exponentiation (u64 exponents; `num_complex::powu` takes u32).
fn pow_u64(z: Complex64, mut k: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

/// The model of the conjugated process `Z*`: `γ ↦ γ*` pointwise.
///
/// Conjugation flips the sign of every imaginary part, so phases and skews negate
/// while real base covariances are untouched.
pub fn conjugate_model(model: &CovarianceModel) -> CovarianceModel {
    match model {
        CovarianceModel::WhiteNoise { sigma2 } => CovarianceModel::WhiteNoise { sigma2: *sigma2 },
        CovarianceModel::Modulated { phi, base } => CovarianceModel::Modulated {
            phi: -phi,
            base: base.clone(),
        },
        CovarianceModel::SumOfModulated { components } => CovarianceModel::SumOfModulated {
            components: components
                .iter()
                .map(|c| ModulatedComponent {
                    phi: -c.phi,
                    base: c.base.clone(),
                })
                .collect(),
        },
        CovarianceModel::ComplexAr1 {
            a_re,
            a_im,
            sigma2,
            circular,
        } => CovarianceModel::ComplexAr1 {
            a_re: *a_re,
            a_im: -a_im,
            sigma2: *sigma2,
            circular: *circular,
        },
        CovarianceModel::ComplexFgn {
            h,
            sigma_r,
            sigma_i,
            eta,
        } => CovarianceModel::ComplexFgn {
            h: *h,
            sigma_r: *sigma_r,
            sigma_i: *sigma_i,
            eta: -eta,
        },
        CovarianceModel::CircularFgn { h, sigma2, eta } => CovarianceModel::CircularFgn {
            h: *h,
            sigma2: *sigma2,
            eta: -eta,
        },
        CovarianceModel::Tabulated { values } => CovarianceModel::Tabulated {
            values: values.iter().map(|[re, im]| [*re, -im]).collect(),
        },
    }
}

/// Evaluate `γ(0..=m)` in linear total time (FARIMA uses its recursion once, fGn its
/// series per lag — no quadratic re-evaluation).
pub(crate) fn gamma_sequence(model: &CovarianceModel, m: usize) -> Result<Vec<Complex64>> {
    ensure_valid(model)?;
    Ok(match model {
        CovarianceModel::WhiteNoise { sigma2 } => {
            let mut out = vec![Complex64::new(0.0, 0.0); m + 1];
            out[0] = Complex64::new(*sigma2, 0.0);
            out
        }
        CovarianceModel::Modulated { phi, base } => {
            let r = real_batch(base, m);
            modulate(&r, *phi)
        }
        CovarianceModel::SumOfModulated { components } => {
            let mut acc = vec![Complex64::new(0.0, 0.0); m + 1];
            for c in components {
                let r = real_batch(&c.base, m);
                for (dst, src) in acc.iter_mut().zip(modulate(&r, c.phi)) {
                    *dst += src;
                }
            }
            acc
        }
        CovarianceModel::ComplexAr1 {
            a_re,
            a_im,
            sigma2,
            circular: _,
        } => {
            let a = Complex64::new(*a_re, *a_im);
            let scale = sigma2 / (1.0 - a.norm_sqr());
            let mut out = Vec::with_capacity(m + 1);
            let mut cur = Complex64::new(scale, 0.0);
            for tau in 0..=m {
                // Re-anchor the running power periodically so rounding drift cannot
                // accumulate over millions of lags.
                if tau % 512 == 0 {
                    cur = pow_u64(a, tau as u64) * scale;
                }
                out.push(cur);
                cur *= a;
            }
            out
        }
        CovarianceModel::ComplexFgn {
            h,
            sigma_r,
            sigma_i,
            eta,
        } => {
            let re = 0.5 * (sigma_r * sigma_r + sigma_i * sigma_i);
            let im = -eta * sigma_r * sigma_i;
            (0..=m as u64)
                .map(|tau| {
                    let g = fgn_g(tau, *h);
                    Complex64::new(re * g, if tau == 0 { 0.0 } else { im * g })
                })
                .collect()
        }
        CovarianceModel::CircularFgn { h, sigma2, eta } => (0..=m as u64)
            .map(|tau| {
                let g = fgn_g(tau, *h);
                Complex64::new(
                    sigma2 * g,
                    if tau == 0 { 0.0 } else { -sigma2 * eta * g },
                )
            })
            .collect(),
        CovarianceModel::Tabulated { values } => {
            if m >= values.len() {
                return Err(Error::Domain(format!(
                    "tabulated covariance defined for |τ| ≤ {}, asked for slices up to {m}",
                    values.len() - 1
                )));
            }
            values[..=m]
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect()
        }
    })
}

/// Batch evaluation of a real base model's `r(0..=m)` with validation, for the
/// modulated-covariance checker.
pub(crate) fn real_acvf_batch(model: &RealCovariance, m: usize) -> Result<Vec<f64>> {
    ensure_valid_real(model)?;
    Ok(real_batch(model, m))
}

fn modulate(r: &[f64], phi: f64) -> Vec<Complex64> {
    r.iter()
        .enumerate()
        .map(|(tau, &v)| {
            let theta = TAU * phi * tau as f64;
            Complex64::new(theta.cos() * v, theta.sin() * v)
        })
        .collect()
}

/// Real/imaginary decomposition `R(0..=m)`, `I(0..=m)` of `γ`, with `I(0)` pinned to
/// exactly zero (the checkers' algebra relies on it).
pub fn slices(model: &CovarianceModel, m: usize) -> Result<CovarianceSlices> {
    if m < 1 {
        return Err(Error::Domain(format!("slices need m ≥ 1, got {m}")));
    }
    let seq = gamma_sequence(model, m)?;
    let re: Vec<f64> = seq.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = seq.iter().map(|z| z.im).collect();
    im[0] = 0.0;
    Ok(CovarianceSlices { re, im })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::gamma as gamma_fn;

    #[test]
    fn farima_frozen_values() {
        // Pinned by two independent evaluations of the closed form (ratio recursion and
        // log-Gamma product) agreeing to full precision.
        let expected_pos = [
            1.0986855396044004,
            0.2746713849011001,
            0.18311425660073341,
            0.14387548732914771,
        ];
        let expected_neg = [
            1.1093318013762439,
            -0.25599964647144086,
            -0.07791293588261243,
            -0.040136966969830649,
        ];
        let pos = RealCovariance::Farima {
            d: 0.2,
            sigma2_eps: 1.0,
        };
        let neg = RealCovariance::Farima {
            d: -0.3,
            sigma2_eps: 1.0,
        };
        for tau in 0..4u64 {
            assert_relative_eq!(
                acvf_real(&pos, tau).unwrap(),
                expected_pos[tau as usize],
                max_relative = 1e-14
            );
            assert_relative_eq!(
                acvf_real(&neg, tau).unwrap(),
                expected_neg[tau as usize],
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn farima_recursion_matches_log_gamma_closed_form() {
        // r(τ) = σ² Γ(1−2d) Γ(τ+d) / (Γ(1−d) Γ(d) Γ(τ+1−d)).
        // The closed form's own precision is limited by cancellation between the two
        // large ln Γ terms, so the tolerance carries a conditioning allowance in
        // addition to the 1e−12 target that applies at moderate lags.
        for d in [-0.4, -0.2, 0.2, 0.4] {
            let model = RealCovariance::Farima {
                d,
                sigma2_eps: 1.0,
            };
            let r = real_batch(&model, 10_000);
            for tau in [1usize, 2, 5, 17, 100, 500, 2000, 10_000] {
                let t = tau as f64;
                let ln_mag = ln_gamma(1.0 - 2.0 * d) + ln_gamma(t + d)
                    - ln_gamma(1.0 - d)
                    - ln_gamma(t + 1.0 - d);
                let closed = ln_mag.exp() / gamma_fn(d);
                let conditioning =
                    4.0 * f64::EPSILON * (ln_gamma(t + d).abs() + ln_gamma(t + 1.0 - d).abs());
                let tol = 1e-12 + conditioning;
                let rel = (r[tau] - closed).abs() / closed.abs();
                assert!(
                    rel <= tol,
                    "d={d} τ={tau}: recursion {} vs closed {closed}, rel {rel:.3e} > {tol:.3e}",
                    r[tau]
                );
            }
        }
    }

    #[test]
    fn farima_d_zero_is_white_noise() {
        let model = RealCovariance::Farima {
            d: 0.0,
            sigma2_eps: 1.0,
        };
        assert_relative_eq!(acvf_real(&model, 0).unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!(acvf_real(&model, 2).unwrap(), 0.0);
    }

    #[test]
    fn fgn_h_half_vanishes_beyond_lag_zero() {
        let model = RealCovariance::Fgn {
            h: 0.5,
            sigma2: 1.0,
        };
        assert_eq!(acvf_real(&model, 3).unwrap(), 0.0);
        assert_eq!(acvf_real(&model, 1_000_000).unwrap(), 0.0);
    }

    #[test]
    fn fgn_series_matches_direct_at_moderate_lags() {
        // At moderate lags the naive three-power form is still usable; the series must
        // agree with it up to the direct form's own cancellation error, which is
        // bounded by a few units of ε·(τ+1)^{2H} (the size of the quantities whose
        // difference is taken). At large τ the direct form is the one that is wrong.
        for h in [0.05, 0.2, 0.45, 0.5001, 0.55, 0.8, 0.97] {
            let a = 2.0 * h;
            for tau in 4..=100u64 {
                let t = tau as f64;
                let direct = (t - 1.0).powf(a) - 2.0 * t.powf(a) + (t + 1.0).powf(a);
                let series = fgn_g(tau, h);
                let tol = 8.0 * f64::EPSILON * (t + 1.0).powf(a) + 1e-13 * direct.abs();
                assert!(
                    (series - direct).abs() <= tol,
                    "h={h} τ={tau}: series {series} vs direct {direct}"
                );
            }
        }
    }

    #[test]
    fn fgn_series_exact_at_polynomial_exponents() {
        // a = 2H = 2 makes |τ|^a quadratic: the second difference is exactly 2 at every
        // lag, and the series terminates after one term. This pins the series algebra
        // without reference to the cancellation-prone direct form.
        for tau in [4u64, 10, 1_000, 1_000_000] {
            assert_relative_eq!(fgn_g(tau, 1.0), 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn fgn_tail_signs_and_convexity() {
        let m = 200;
        for (h, negative) in [(0.2, true), (0.35, true), (0.6, false), (0.8, false)] {
            let model = RealCovariance::Fgn { h, sigma2: 1.0 };
            let r: Vec<f64> = (0..=m as u64)
                .map(|tau| acvf_real(&model, tau).unwrap())
                .collect();
            for tau in 1..=m {
                if negative {
                    assert!(r[tau] < 0.0, "H={h} τ={tau}: expected r < 0, got {}", r[tau]);
                } else {
                    assert!(r[tau] > 0.0, "H={h} τ={tau}: expected r > 0, got {}", r[tau]);
                }
            }
            if !negative {
                let d1 = crate::kernels::fdiff(&r).unwrap();
                let d2 = crate::kernels::fdiff2(&r).unwrap();
                assert!(d1.iter().all(|&x| x >= 0.0), "H={h}: not decreasing");
                assert!(d2.iter().all(|&x| x >= 0.0), "H={h}: not convex");
            }
        }
    }

    #[test]
    fn modulated_exponential_examples() {
        let model = CovarianceModel::Modulated {
            phi: 0.125,
            base: RealCovariance::Exponential {
                alpha: 1.0,
                sigma2: 1.0,
            },
        };
        // τ=2: e^{-2}·e^{2iπ·(1/8)·2} = e^{-2}·e^{iπ/2} = i·e^{-2}.
        let g = gamma(&model, 2).unwrap();
        assert_relative_eq!(g.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(g.im, (-2.0f64).exp(), max_relative = 1e-14);

        let quarter = CovarianceModel::Modulated {
            phi: 0.25,
            base: RealCovariance::Exponential {
                alpha: 0.7,
                sigma2: 1.3,
            },
        };
        let s = slices(&quarter, 4).unwrap();
        assert_relative_eq!(s.re[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.im[1], 1.3 * (-0.7f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn circular_fgn_gamma0_is_real_2_sigma2() {
        let model = CovarianceModel::CircularFgn {
            h: 0.8,
            sigma2: 1.7,
            eta: 0.4,
        };
        let g0 = gamma(&model, 0).unwrap();
        assert_eq!(g0.im, 0.0);
        assert_relative_eq!(g0.re, 3.4, max_relative = 1e-15);
    }

    #[test]
    fn circular_fgn_slices_skew_identity() {
        let eta = -0.37;
        let model = CovarianceModel::CircularFgn {
            h: 0.3,
            sigma2: 2.0,
            eta,
        };
        let s = slices(&model, 50).unwrap();
        for j in 1..=50 {
            assert_relative_eq!(s.im[j], -eta * s.re[j], max_relative = 1e-13);
        }
        assert_eq!(s.im[0], 0.0);
    }

    #[test]
    fn complex_fgn_with_equal_sigmas_reduces_to_circular() {
        let (h, eta, s) = (0.7, 0.5, 1.3f64);
        let full = CovarianceModel::ComplexFgn {
            h,
            sigma_r: s,
            sigma_i: s,
            eta,
        };
        let circ = CovarianceModel::CircularFgn {
            h,
            sigma2: s * s,
            eta,
        };
        for tau in -40..=40i64 {
            let a = gamma(&full, tau).unwrap();
            let b = gamma(&circ, tau).unwrap();
            assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()), "τ={tau}");
        }
    }

    fn zoo() -> Vec<CovarianceModel> {
        vec![
            CovarianceModel::WhiteNoise { sigma2: 2.0 },
            CovarianceModel::Modulated {
                phi: 0.125,
                base: RealCovariance::Farima {
                    d: 0.2,
                    sigma2_eps: 1.0,
                },
            },
            CovarianceModel::Modulated {
                phi: -0.3,
                base: RealCovariance::Fgn {
                    h: 0.3,
                    sigma2: 1.5,
                },
            },
            CovarianceModel::SumOfModulated {
                components: vec![
                    ModulatedComponent {
                        phi: 0.1,
                        base: RealCovariance::Exponential {
                            alpha: 0.5,
                            sigma2: 1.0,
                        },
                    },
                    ModulatedComponent {
                        phi: 0.4,
                        base: RealCovariance::GeometricAr1 {
                            rho: 0.6,
                            sigma2: 0.5,
                        },
                    },
                ],
            },
            CovarianceModel::ComplexAr1 {
                a_re: 0.6 * std::f64::consts::FRAC_1_SQRT_2,
                a_im: 0.6 * std::f64::consts::FRAC_1_SQRT_2,
                sigma2: 1.0,
                circular: true,
            },
            CovarianceModel::ComplexFgn {
                h: 0.3,
                sigma_r: 1.0,
                sigma_i: 0.5,
                eta: 0.6,
            },
            CovarianceModel::CircularFgn {
                h: 0.8,
                sigma2: 1.0,
                eta: (PI * 0.8).tan().abs() * 2.0 / 3.0,
            },
            CovarianceModel::Tabulated {
                values: vec![[2.0, 0.0], [0.5, 0.25], [0.1, -0.05]],
            },
        ]
    }

    #[test]
    fn hermitian_symmetry_across_the_zoo() {
        for model in zoo() {
            for tau in 0..=2i64 {
                let plus = gamma(&model, tau).unwrap();
                let minus = gamma(&model, -tau).unwrap();
                assert!(
                    (minus - plus.conj()).norm() <= 1e-14 * (1.0 + plus.norm()),
                    "{model:?} τ={tau}"
                );
            }
        }
        // Larger grid for models defined at every lag.
        for model in zoo() {
            if matches!(model, CovarianceModel::Tabulated { .. }) {
                continue;
            }
            for tau in [3i64, 7, 19, 151] {
                let plus = gamma(&model, tau).unwrap();
                let minus = gamma(&model, -tau).unwrap();
                assert!(
                    (minus - plus.conj()).norm() <= 1e-13 * (1.0 + plus.norm()),
                    "{model:?} τ={tau}"
                );
            }
        }
    }

    #[test]
    fn conjugate_model_conjugates_gamma() {
        for model in zoo() {
            let conj = conjugate_model(&model);
            let max_tau = if matches!(model, CovarianceModel::Tabulated { .. }) {
                2
            } else {
                60
            };
            for tau in -max_tau..=max_tau {
                let a = gamma(&conj, tau).unwrap();
                let b = gamma(&model, tau).unwrap().conj();
                assert!(
                    (a - b).norm() <= 1e-13 * (1.0 + b.norm()),
                    "{model:?} τ={tau}"
                );
            }
        }
    }

    #[test]
    fn gamma_sequence_matches_pointwise_gamma() {
        for model in zoo() {
            let max_m = if matches!(model, CovarianceModel::Tabulated { .. }) {
                2
            } else {
                300
            };
            let seq = gamma_sequence(&model, max_m).unwrap();
            for tau in 0..=max_m {
                let direct = gamma(&model, tau as i64).unwrap();
                assert!(
                    (seq[tau] - direct).norm() <= 1e-12 * (1.0 + direct.norm()),
                    "{model:?} τ={tau}: {} vs {direct}",
                    seq[tau]
                );
            }
        }
    }

    #[test]
    fn validation_examples() {
        let valid = CovarianceModel::CircularFgn {
            h: 0.8,
            sigma2: 1.0,
            eta: (0.8 * PI).tan().abs() * 2.0 / 3.0,
        };
        assert!(validate(&valid).is_valid());

        let invalid_eta = CovarianceModel::CircularFgn {
            h: 0.25,
            sigma2: 1.0,
            eta: 2.0,
        };
        assert!(!validate(&invalid_eta).is_valid());

        let invalid_a = CovarianceModel::ComplexAr1 {
            a_re: 1.1,
            a_im: 0.0,
            sigma2: 1.0,
            circular: true,
        };
        assert!(!validate(&invalid_a).is_valid());

        let half = CovarianceModel::CircularFgn {
            h: 0.5,
            sigma2: 1.0,
            eta: 0.0,
        };
        assert!(!validate(&half).is_valid());

        let bad_d = CovarianceModel::Modulated {
            phi: 0.0,
            base: RealCovariance::Farima {
                d: 0.5,
                sigma2_eps: 1.0,
            },
        };
        assert!(!validate(&bad_d).is_valid());
    }

    #[test]
    fn tabulated_range_and_reality_checks() {
        let model = CovarianceModel::Tabulated {
            values: vec![[1.0, 0.0], [0.3, 0.1]],
        };
        assert!(gamma(&model, 1).is_ok());
        assert!(matches!(gamma(&model, 2), Err(Error::Domain(_))));

        let complex_origin = CovarianceModel::Tabulated {
            values: vec![[1.0, 0.5]],
        };
        assert!(!validate(&complex_origin).is_valid());
    }

    #[test]
    fn truncated_power_fractional_exponent_no_nan() {
        let model = RealCovariance::TruncatedPower {
            exponent: 1.5,
            sigma2: 1.0,
        };
        assert_eq!(acvf_real(&model, 0).unwrap(), 1.0);
        assert_eq!(acvf_real(&model, 1).unwrap(), 0.0);
        assert_eq!(acvf_real(&model, 2).unwrap(), 0.0);
    }

    #[test]
    fn model_json_schema_roundtrip() {
        let text = r#"{
            "variant": "modulated",
            "params": {
                "phi": 0.125,
                "base": { "variant": "farima", "params": { "d": 0.2, "sigma2_eps": 1.0 } }
            }
        }"#;
        let model: CovarianceModel = serde_json::from_str(text).unwrap();
        assert_eq!(
            model,
            CovarianceModel::Modulated {
                phi: 0.125,
                base: RealCovariance::Farima {
                    d: 0.2,
                    sigma2_eps: 1.0
                }
            }
        );
        for model in zoo() {
            let json = serde_json::to_string(&model).unwrap();
            let back: CovarianceModel = serde_json::from_str(&json).unwrap();
            assert_eq!(model, back);
        }
        assert!(serde_json::from_str::<CovarianceModel>(r#"{"variant":"nope","params":{}}"#)
            .is_err());
    }
}
