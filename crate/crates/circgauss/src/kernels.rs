//! Dirichlet/Féjer kernels, their conjugate variants, and finite differences.
//!
//! These closed-form trigonometric sums drive both the summation-by-parts form of the
//! circulant eigenvalues and the decreasing-convex non-negativity certificates:
//!
//! * Dirichlet          `D_p(ω)  = sin(πω(2p+1)) / sin(πω)`
//! * Féjer              `K_p(ω)  = [sin(πω(p+1)) / sin(πω)]²`
//! * conjugate Dirichlet `D̃_p(ω) = [cos(πω) − cos(πω(2p+1))] / sin(πω)`
//! * conjugate Féjer    `K̃_p(ω)  = [(p+1)·sin(2πω) − sin(2πω(p+1))] / (2 sin²(πω))`
//!
//! All four are 1-periodic. `K_p ≥ 0` everywhere and `K̃_p ≥ 0` on `[0, 1/2]`, which is
//! what makes the certificates work.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Which of the four kernels to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Dirichlet,
    Fejer,
    ConjDirichlet,
    ConjFejer,
}

/// Integer detection: `dist(ω, ℤ) < 1e−12` takes the exact limit branch.
const INTEGER_TOL: f64 = 1e-12;
/// Below this `|sin(πω)|` the closed forms lose too many digits to cancellation;
/// fall back to the direct trigonometric sums.
const SIN_FALLBACK: f64 = 1e-8;

/// Evaluate a kernel of order `p ≥ 0` at frequency `ω`.
///
/// At integers the analytic limits are used: `D_p = 2p+1`, `K_p = (p+1)²`,
/// `D̃_p = K̃_p = 0`. (The limit of the Féjer closed form at ω → 0 is `(p+1)²`;
/// it also equals `Σ_{j=0}^p D_j(0) = Σ (2j+1)`.) Near-integer frequencies where the
/// `1/sin(πω)` forms become ill-conditioned are evaluated by the equivalent direct sums.
/// Order 0 is the degenerate base case `D_0 = K_0 ≡ 1`, `D̃_0 = K̃_0 ≡ 0`, which every
/// branch below reproduces.
pub fn kernel_eval(kind: KernelKind, p: usize, omega: f64) -> Result<f64> {
    if !omega.is_finite() {
        return Err(Error::Domain(format!("frequency must be finite, got {omega}")));
    }
    if (omega - omega.round()).abs() < INTEGER_TOL {
        return Ok(match kind {
            KernelKind::Dirichlet => (2 * p + 1) as f64,
            KernelKind::Fejer => ((p + 1) * (p + 1)) as f64,
            KernelKind::ConjDirichlet | KernelKind::ConjFejer => 0.0,
        });
    }
    let s = (PI * omega).sin();
    if s.abs() < SIN_FALLBACK {
        return Ok(trig_sum(kind, p, omega));
    }
    let pf = (p + 1) as f64;
    Ok(match kind {
        KernelKind::Dirichlet => (PI * omega * (2 * p + 1) as f64).sin() / s,
        KernelKind::Fejer => {
            let t = (PI * omega * pf).sin() / s;
            t * t
        }
        KernelKind::ConjDirichlet => {
            ((PI * omega).cos() - (PI * omega * (2 * p + 1) as f64).cos()) / s
        }
        KernelKind::ConjFejer => {
            (pf * (2.0 * PI * omega).sin() - (2.0 * PI * omega * pf).sin()) / (2.0 * s * s)
        }
    })
}

/// The same kernels as plain trigonometric sums (no `1/sin` division):
///
/// `D_p = 1 + 2Σ_{j=1}^p cos(2πjω)`, `K_p = (p+1) + 2Σ_{j=1}^p (p+1−j)cos(2πjω)`,
/// `D̃_p = 2Σ_{j=1}^p sin(2πjω)`, `K̃_p = 2Σ_{j=1}^p (p+1−j)sin(2πjω)`.
fn trig_sum(kind: KernelKind, p: usize, omega: f64) -> f64 {
    let mut acc = 0.0;
    for j in 1..=p {
        let theta = 2.0 * PI * j as f64 * omega;
        match kind {
            KernelKind::Dirichlet => acc += 2.0 * theta.cos(),
            KernelKind::Fejer => acc += 2.0 * (p + 1 - j) as f64 * theta.cos(),
            KernelKind::ConjDirichlet => acc += 2.0 * theta.sin(),
            KernelKind::ConjFejer => acc += 2.0 * (p + 1 - j) as f64 * theta.sin(),
        }
    }
    match kind {
        KernelKind::Dirichlet => 1.0 + acc,
        KernelKind::Fejer => (p + 1) as f64 + acc,
        KernelKind::ConjDirichlet | KernelKind::ConjFejer => acc,
    }
}

/// First-order finite difference `(Δf)_k = f_k − f_{k+1}`, length `len−1`.
///
/// With this sign convention a sequence is *decreasing* iff `Δf ≥ 0` elementwise.
pub fn fdiff(f: &[f64]) -> Result<Vec<f64>> {
    if f.len() < 2 {
        return Err(Error::Domain(format!(
            "fdiff needs at least 2 points, got {}",
            f.len()
        )));
    }
    Ok(f.windows(2).map(|w| w[0] - w[1]).collect())
}

/// Second-order finite difference `(Δ²f)_k = f_k − 2f_{k+1} + f_{k+2}`, length `len−2`.
///
/// A sequence is *convex* iff `Δ²f ≥ 0` elementwise.
pub fn fdiff2(f: &[f64]) -> Result<Vec<f64>> {
    if f.len() < 3 {
        return Err(Error::Domain(format!(
            "fdiff2 needs at least 3 points, got {}",
            f.len()
        )));
    }
    Ok(f.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_at_integer_is_2p_plus_1() {
        assert_eq!(kernel_eval(KernelKind::Dirichlet, 3, 0.0).unwrap(), 7.0);
        assert_eq!(kernel_eval(KernelKind::Dirichlet, 3, 5.0).unwrap(), 7.0);
        assert_eq!(kernel_eval(KernelKind::Dirichlet, 3, -2.0).unwrap(), 7.0);
    }

    #[test]
    fn fejer_at_integer_is_p_plus_1_squared() {
        // Limit of the closed form, and also Σ_{j=0}^{1} D_j(0) = 1 + 3.
        assert_eq!(kernel_eval(KernelKind::Fejer, 1, 0.0).unwrap(), 4.0);
        assert_eq!(kernel_eval(KernelKind::Fejer, 7, 3.0).unwrap(), 64.0);
    }

    #[test]
    fn conjugate_kernels_vanish_at_integers() {
        assert_eq!(kernel_eval(KernelKind::ConjDirichlet, 5, 1.0).unwrap(), 0.0);
        assert_eq!(kernel_eval(KernelKind::ConjFejer, 5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn conjugate_fejer_nonnegative_on_first_half_period() {
        for p in [1usize, 2, 5, 17, 64] {
            for i in 0..=500 {
                let omega = 0.5 * i as f64 / 500.0;
                let v = kernel_eval(KernelKind::ConjFejer, p, omega).unwrap();
                assert!(v >= -1e-12, "K̃_{p}({omega}) = {v} < 0");
            }
        }
    }

    #[test]
    fn fejer_nonnegative_everywhere() {
        for p in [1usize, 3, 10, 41] {
            for i in 0..700 {
                let omega = -1.2 + 3.1 * i as f64 / 700.0;
                let v = kernel_eval(KernelKind::Fejer, p, omega).unwrap();
                assert!(v >= -1e-12, "K_{p}({omega}) = {v} < 0");
            }
        }
    }

    #[test]
    fn closed_forms_match_direct_sums() {
        // Kernel recurrences K_p = Σ_{j≤p} D_j and K̃_p = Σ_{j≤p} D̃_j collapse to the
        // direct sums in `trig_sum`; check the closed forms against them up to p = 200.
        let kinds = [
            KernelKind::Dirichlet,
            KernelKind::Fejer,
            KernelKind::ConjDirichlet,
            KernelKind::ConjFejer,
        ];
        for p in [1usize, 2, 3, 10, 50, 200] {
            for i in 1..40 {
                let omega = i as f64 / 40.0 + 0.0037;
                for kind in kinds {
                    let closed = kernel_eval(kind, p, omega).unwrap();
                    let direct = trig_sum(kind, p, omega);
                    assert!(
                        (closed - direct).abs() <= 1e-8 * (1.0 + direct.abs()),
                        "{kind:?} p={p} ω={omega}: closed {closed} vs direct {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn recurrence_fejer_is_partial_sum_of_dirichlet() {
        for p in [1usize, 4, 9, 33, 200] {
            let omega = 0.2137;
            let k: f64 = kernel_eval(KernelKind::Fejer, p, omega).unwrap();
            let kt: f64 = kernel_eval(KernelKind::ConjFejer, p, omega).unwrap();
            let mut sum_d = 1.0; // D_0 = 1
            let mut sum_dt = 0.0; // D̃_0 = 0
            for j in 1..=p {
                sum_d += kernel_eval(KernelKind::Dirichlet, j, omega).unwrap();
                sum_dt += kernel_eval(KernelKind::ConjDirichlet, j, omega).unwrap();
            }
            assert!((k - sum_d).abs() <= 1e-8 * (1.0 + sum_d.abs()));
            assert!((kt - sum_dt).abs() <= 1e-8 * (1.0 + sum_dt.abs()));
        }
    }

    #[test]
    fn continuity_at_integers() {
        // The closed form just off an integer agrees with the integer branch to 1e−4
        // relative; this pins the (p+1)² limit for the Féjer kernel in particular.
        let kinds = [
            KernelKind::Dirichlet,
            KernelKind::Fejer,
            KernelKind::ConjDirichlet,
            KernelKind::ConjFejer,
        ];
        for p in [1usize, 2, 8, 30] {
            for base in [0.0f64, 1.0, -3.0] {
                for kind in kinds {
                    let at_int = kernel_eval(kind, p, base).unwrap();
                    let near = kernel_eval(kind, p, base + 1e-9).unwrap();
                    let scale = 1.0 + at_int.abs();
                    assert!(
                        (near - at_int).abs() <= 1e-4 * scale,
                        "{kind:?} p={p} at {base}: {at_int} vs {near}"
                    );
                }
            }
        }
    }

    #[test]
    fn fdiff_of_linear_sequence() {
        assert_eq!(fdiff(&[3.0, 2.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(fdiff2(&[3.0, 2.0, 1.0]).unwrap(), vec![0.0]);
        assert_eq!(fdiff(&[5.0, 5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn fdiff_rejects_short_input() {
        assert!(fdiff(&[1.0]).is_err());
        assert!(fdiff2(&[1.0, 2.0]).is_err());
        assert!(kernel_eval(KernelKind::Dirichlet, 1, f64::NAN).is_err());
    }

    #[test]
    fn order_zero_kernels_are_constants() {
        for omega in [0.0, 0.21, 0.5, 0.93, 3.0] {
            assert_eq!(kernel_eval(KernelKind::Dirichlet, 0, omega).unwrap(), 1.0);
            assert_eq!(kernel_eval(KernelKind::Fejer, 0, omega).unwrap(), 1.0);
            assert_eq!(kernel_eval(KernelKind::ConjDirichlet, 0, omega).unwrap(), 0.0);
            assert_eq!(kernel_eval(KernelKind::ConjFejer, 0, omega).unwrap(), 0.0);
        }
    }

    #[test]
    fn summation_by_parts_identity() {
        // Σ_{j=0}^{n-1} f_j g_j = f_{n-1} Σ_{j=0}^{n-1} g_j + Σ_{j=0}^{n-2} (Δf)_j Σ_{ℓ=0}^{j} g_ℓ
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in [2usize, 3, 7, 23, 50] {
            let f: Vec<f64> = (0..n).map(|_| next()).collect();
            let g: Vec<f64> = (0..n).map(|_| next()).collect();
            let lhs: f64 = f.iter().zip(&g).map(|(a, b)| a * b).sum();
            let df = fdiff(&f).unwrap();
            let gsum: f64 = g.iter().sum();
            let mut rhs = f[n - 1] * gsum;
            let mut prefix = 0.0;
            for j in 0..n - 1 {
                prefix += g[j];
                rhs += df[j] * prefix;
            }
            assert!((lhs - rhs).abs() < 1e-10, "n={n}: {lhs} vs {rhs}");
        }
    }
}
