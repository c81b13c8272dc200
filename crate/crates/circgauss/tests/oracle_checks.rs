//! Cross-route validation: the fast circulant simulator against the dense reference
//! implementations (Cholesky and eigendecomposition), and the closed-form relation
//! matrix against empirical pseudo-covariances. Each check pits two independently
//! coded paths against one another, so a bug must strike both the same way to hide.

use circgauss::covmodels::CovarianceModel;
use circgauss::oracle;
use circgauss::simulate::{self, NoiseKind, RecoveryPolicy, RngHandle};
use num_complex::Complex64;
use rayon::prelude::*;

fn fgn_model() -> CovarianceModel {
    CovarianceModel::CircularFgn {
        h: 0.3,
        sigma2: 1.0,
        eta: 0.4,
    }
}

fn batch(
    model: &CovarianceModel,
    n: usize,
    kind: NoiseKind,
    seed: u64,
    reps: usize,
) -> Vec<Vec<Complex64>> {
    simulate::simulate_batch(
        model,
        n,
        kind,
        RecoveryPolicy::GrowRetry { max_doublings: 0 },
        seed,
        reps,
    )
    .unwrap()
    .into_iter()
    .map(|o| o.z)
    .collect()
}

/// Conjugate-paired weights leave a nonzero pseudo-covariance, and the closed-form
/// relation matrix predicts it: `E[Z_j Z_l] = h((j − l) mod m̃)` where `h` is the
/// first row computed from the eigenvalue pair products.
#[test]
fn paired_noise_pseudo_covariance_matches_relation_row() {
    let model = fgn_model();
    let n = 8;
    let reps = 60_000;
    let size = circgauss::embedding::select_embedding_size(n).unwrap();
    let emb = circgauss::embedding::build(&model, &size).unwrap();
    let relation = simulate::relation_first_row(&emb.eigenvalues).unwrap();
    let m_tilde = size.m_tilde();

    let paths = batch(&model, n, NoiseKind::RealStandard, 901, reps);
    let m = oracle::empirical_moments(&paths).unwrap();
    let pseudo = m.pseudo_cov.as_ref().unwrap();
    let se = m.cov_se.as_ref().unwrap();

    let mut worst = 0.0f64;
    for j in 0..n {
        for l in 0..n {
            let predicted = relation[(j + m_tilde - l) % m_tilde];
            let diff = (pseudo[j * n + l] - predicted).norm();
            worst = worst.max(diff / se[j * n + l].max(1e-300));
        }
    }
    assert!(
        worst <= 5.0,
        "pseudo-covariance deviates from the relation row by {worst:.2} SEs"
    );
}

/// The independent-weight algorithm must produce a circular output: every
/// pseudo-covariance entry is zero up to Monte Carlo noise, while the ordinary
/// covariance still matches the dense Γ.
#[test]
fn independent_noise_output_is_circular_and_exact() {
    let model = fgn_model();
    let n = 8;
    let reps = 60_000;
    let paths = batch(&model, n, NoiseKind::CircularStandard, 902, reps);
    let m = oracle::empirical_moments(&paths).unwrap();
    let g = oracle::dense_gamma(&model, n).unwrap();
    let cov = m.cov.as_ref().unwrap();
    let pseudo = m.pseudo_cov.as_ref().unwrap();
    let se = m.cov_se.as_ref().unwrap();

    let mut worst_cov = 0.0f64;
    let mut worst_pseudo = 0.0f64;
    for j in 0..n {
        for l in 0..n {
            let band = se[j * n + l].max(1e-300);
            worst_cov = worst_cov.max((cov[j * n + l] - g.get(j, l)).norm() / band);
            worst_pseudo = worst_pseudo.max(pseudo[j * n + l].norm() / band);
        }
    }
    assert!(worst_cov <= 5.0, "covariance off by {worst_cov:.2} SEs");
    assert!(
        worst_pseudo <= 5.0,
        "pseudo-covariance not zero: {worst_pseudo:.2} SEs"
    );
}

/// Three simulators, one covariance: circulant embedding, dense Cholesky, and dense
/// eigendecomposition all target the same Γ, so their empirical covariances must
/// agree pairwise within combined Monte Carlo error.
#[test]
fn three_simulation_routes_agree() {
    let model = CovarianceModel::ComplexAr1 {
        a_re: 0.4,
        a_im: 0.2,
        sigma2: 1.0,
        circular: true,
    };
    let n = 10;
    let reps = 30_000;

    let fast = batch(&model, n, NoiseKind::CircularStandard, 903, reps);

    let g = oracle::dense_gamma(&model, n).unwrap();
    let chol: Vec<Vec<Complex64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngHandle::new(904, r as u64);
            oracle::cholesky_simulate(&g, true, &mut rng).unwrap()
        })
        .collect();
    let eig: Vec<Vec<Complex64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngHandle::new(905, r as u64);
            oracle::eigen_simulate(&g, true, &mut rng).unwrap()
        })
        .collect();

    let moments: Vec<_> = [fast, chol, eig]
        .iter()
        .map(|paths| oracle::empirical_moments(paths).unwrap())
        .collect();
    for a in 0..3 {
        for b in (a + 1)..3 {
            let (ca, sa) = (
                moments[a].cov.as_ref().unwrap(),
                moments[a].cov_se.as_ref().unwrap(),
            );
            let (cb, sb) = (
                moments[b].cov.as_ref().unwrap(),
                moments[b].cov_se.as_ref().unwrap(),
            );
            let mut worst = 0.0f64;
            for idx in 0..n * n {
                let band = (sa[idx].powi(2) + sb[idx].powi(2)).sqrt().max(1e-300);
                worst = worst.max((ca[idx] - cb[idx]).norm() / band);
            }
            assert!(
                worst <= 5.0,
                "routes {a} and {b} disagree by {worst:.2} combined SEs"
            );
        }
    }
}

/// Truncating negative eigenvalues and rescaling shrinks the output marginal
/// variance to exactly φ·γ(0); the sample second moment must land there.
#[test]
fn approximate_policy_variance_is_phi_scaled() {
    // A smooth modulated bell: narrow spectral mass makes the minimal embedding
    // indefinite, which is the one situation the approximation is for.
    let values: Vec<[f64; 2]> = (0..32)
        .map(|tau| {
            let t = tau as f64;
            let envelope = (-(t / 12.0) * (t / 12.0)).exp();
            let phase = 2.0 * std::f64::consts::PI * t / 8.0;
            [envelope * phase.cos(), envelope * phase.sin()]
        })
        .collect();
    let model = CovarianceModel::Tabulated { values };
    let reps = 40_000;
    let n = 32;

    let outs = simulate::simulate_batch(
        &model,
        n,
        NoiseKind::CircularStandard,
        RecoveryPolicy::Approximate,
        906,
        reps,
    )
    .unwrap();
    let phi = outs[0].phi_scale;
    assert!(outs.iter().all(|o| !o.exact && o.phi_scale == phi));
    assert!(phi < 1.0 && phi > 0.9, "bell trace ratio should be just under 1");

    let mean_sq: f64 = outs
        .iter()
        .flat_map(|o| o.z.iter())
        .map(Complex64::norm_sqr)
        .sum::<f64>()
        / (reps * n) as f64;
    // γ(0) = 1 for the bell; 1.28M samples put the MC error near 0.1%.
    let expected = phi * 1.0;
    assert!(
        (mean_sq - expected).abs() <= 0.02 * expected,
        "marginal second moment {mean_sq:.5} vs φ·γ(0) = {expected:.5}"
    );
}

/// The dense Cholesky and the dense eigendecomposition factor the same matrix, so
/// with the same noise convention their second moments coincide; spot-check that the
/// eigendecomposition reconstructs Γ to near machine precision on a long-memory model.
#[test]
fn eigendecomposition_reconstructs_dense_gamma() {
    let g = oracle::dense_gamma(&fgn_model(), 24).unwrap();
    let decomp = oracle::jacobi_eigh(&g).unwrap();
    let n = 24;
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for v in 0..n {
                acc += decomp.eigenvalues[v] * decomp.vector_entry(j, v)
                    * decomp.vector_entry(k, v).conj();
            }
            worst = worst.max((acc - g.get(j, k)).norm());
        }
    }
    assert!(worst <= 1e-12, "reconstruction error {worst:.2e}");
    // Γ is a genuine covariance here, so the spectrum is non-negative.
    assert!(decomp.eigenvalues.iter().all(|&l| l >= -1e-12));
}
