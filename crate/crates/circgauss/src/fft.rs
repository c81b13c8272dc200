//! Shared FFT planning. rustfft handles arbitrary composite lengths, so the odd
//! {3,5,7,11}-smooth sizes used by the embedding run at full mixed-radix speed.
//!
//! Convention: the forward transform uses the kernel `e^{-2iπjk/N}` and applies no
//! normalization, matching the eigenvalue formula `λ_k = Σ_j c_j e^{-2iπjk/m̃}`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct PlanCache {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
}

static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();

/// Plan (or fetch the cached plan for) a forward FFT of the given length.
///
/// The returned plan is `Send + Sync` and can be shared across worker threads; batch
/// simulation plans once and reuses the plan in every replication.
pub(crate) fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    let cache = CACHE.get_or_init(|| {
        Mutex::new(PlanCache {
            planner: FftPlanner::new(),
            forward: HashMap::new(),
        })
    });
    let mut guard = cache.lock().expect("FFT plan cache poisoned");
    let PlanCache { planner, forward } = &mut *guard;
    forward
        .entry(len)
        .or_insert_with(|| planner.plan_fft_forward(len))
        .clone()
}

/// In-place unnormalized forward DFT with the `e^{-2iπjk/N}` kernel.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    forward_plan(buf.len()).process(buf);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn matches_naive_dft_at_odd_composite_length() {
        let n = 15;
        let input: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(0.3 + j as f64, (j as f64).sin()))
            .collect();
        let mut buf = input.clone();
        fft_forward(&mut buf);
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in input.iter().enumerate() {
                let theta = -TAU * (j * k) as f64 / n as f64;
                acc += x * Complex64::new(theta.cos(), theta.sin());
            }
            assert!((acc - buf[k]).norm() < 1e-10, "k={k}: {acc} vs {}", buf[k]);
        }
    }
}
