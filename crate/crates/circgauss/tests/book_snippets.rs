//! Every code listing in the guide (`book/`) is included from this file by anchor,
//! so the book's examples compile and run as part of the test suite. If a listing
//! in the book looks stale, this file is the source of truth.

use circgauss::covmodels::CovarianceModel;
use circgauss::simulate::{self, NoiseKind, RecoveryPolicy};
use num_complex::Complex64;

#[test]
fn quick_start() {
    // ANCHOR: quick_start
    use circgauss::covmodels::CovarianceModel;
    use circgauss::simulate::{self, NoiseKind, RecoveryPolicy, RngHandle};

    // Increments of a circular complex fractional Brownian motion with H = 0.8.
    let model = CovarianceModel::CircularFgn {
        h: 0.8,
        sigma2: 1.0,
        eta: 0.484,
    };

    let mut rng = RngHandle::new(42, 0); // (seed, stream)
    let out = simulate::simulate(
        &model,
        1024,                             // sequence length n
        NoiseKind::CircularStandard,      // 4m + 2 independent real draws
        RecoveryPolicy::GrowRetry { max_doublings: 6 },
        &mut rng,
    )
    .unwrap();

    assert_eq!(out.z.len(), 1024);
    assert!(out.exact); // the minimal embedding was nonnegative; no approximation
    // ANCHOR_END: quick_start
}

#[test]
fn inspect_embedding() {
    // ANCHOR: inspect_embedding
    use circgauss::covmodels::{self, CovarianceModel};
    use circgauss::embedding;

    let model = CovarianceModel::CircularFgn {
        h: 0.8,
        sigma2: 1.0,
        eta: 0.484,
    };

    // The smallest odd, FFT-friendly embedding order for n = 1000 observations.
    let size = embedding::select_embedding_size(1000).unwrap();
    assert!(size.m_tilde() % 2 == 1 && size.m_tilde() >= 2 * 999 + 1);

    let emb = embedding::build(&model, &size).unwrap();
    assert_eq!(emb.eigenvalues.len(), size.m_tilde());
    assert_eq!(emb.negative_count, 0); // this model embeds cleanly at this size

    // The eigenvalues of a circulant matrix sum to m̃ times its diagonal entry,
    // which is γ(0) — here 2σ², the variance of a circular fGn increment.
    let gamma0 = covmodels::slices(&model, 1).unwrap().re[0];
    let trace: f64 = emb.eigenvalues.iter().sum();
    assert_eq!(gamma0, 2.0);
    assert!((trace - size.m_tilde() as f64 * gamma0).abs() < 1e-9 * trace);
    // ANCHOR_END: inspect_embedding
}

#[test]
fn run_checkers() {
    // ANCHOR: run_checkers
    use circgauss::covmodels::{self, CovarianceModel};
    use circgauss::embedding;

    let size = embedding::select_embedding_size(500).unwrap();

    // Anti-persistent half (H < 1/2): the sign-pattern certificate applies.
    let rough = CovarianceModel::CircularFgn {
        h: 0.3,
        sigma2: 1.0,
        eta: 0.5,
    };
    let craigmile = embedding::check_craigmile(&rough, &size).unwrap();
    assert!(craigmile.applicable && craigmile.passed);

    // Persistent half (H > 1/2): the decay-rate certificate takes over.
    let smooth = CovarianceModel::CircularFgn {
        h: 0.8,
        sigma2: 1.0,
        eta: 0.484,
    };
    let slices = covmodels::slices(&smooth, size.m).unwrap();
    let dietrich = embedding::check_dietrich(&slices, &size, Some(0.484)).unwrap();
    assert!(dietrich.applicable && dietrich.passed);

    // Certificates are *sufficient* conditions with complementary coverage —
    // Craigmile declines the smooth model, Dietrich the rough one — and the
    // spectrum itself is always the final arbiter:
    assert!(!embedding::check_craigmile(&smooth, &size).unwrap().passed);
    for model in [&rough, &smooth] {
        let emb = embedding::build(model, &size).unwrap();
        assert_eq!(emb.negative_count, 0);
    }
    // ANCHOR_END: run_checkers
}

#[test]
fn grow_on_failure() {
    // ANCHOR: grow_on_failure
    use circgauss::covmodels::{CovarianceModel, RealCovariance};
    use circgauss::embedding;
    use circgauss::simulate::{self, NoiseKind, RecoveryPolicy, RngHandle};

    // A modulated geometric model whose *minimal* embedding is indefinite.
    let model = CovarianceModel::Modulated {
        phi: 0.25 + 1.0 / 126.0,
        base: RealCovariance::GeometricAr1 {
            rho: 0.96,
            sigma2: 1.0,
        },
    };
    let minimal = embedding::select_embedding_size(32).unwrap();
    let emb = embedding::build(&model, &minimal).unwrap();
    assert!(emb.negative_count > 0); // indefinite at m̃ = 63

    // GrowRetry walks the smooth-size ladder until the spectrum is clean.
    let mut rng = RngHandle::new(7, 0);
    let out = simulate::simulate(
        &model,
        32,
        NoiseKind::CircularStandard,
        RecoveryPolicy::GrowRetry { max_doublings: 6 },
        &mut rng,
    )
    .unwrap();
    assert!(out.exact);
    assert_eq!(out.size.m_tilde(), 275); // clean two rungs up the ladder
    // ANCHOR_END: grow_on_failure
}

#[test]
fn approximate_with_bound() {
    // ANCHOR: approximate_with_bound
    use circgauss::covmodels::CovarianceModel;
    use circgauss::simulate::{self, ErrorVariances, NoiseKind, RecoveryPolicy, RngHandle};

    // A Gaussian-bell covariance with a rotating phase: indefinite at any
    // reasonable embedding order, so we accept a controlled approximation.
    let values: Vec<[f64; 2]> = (0..32)
        .map(|tau| {
            let t = tau as f64;
            let env = (-(t / 12.0) * (t / 12.0)).exp();
            let phase = 2.0 * std::f64::consts::PI * t / 8.0;
            [env * phase.cos(), env * phase.sin()]
        })
        .collect();
    let model = CovarianceModel::Tabulated { values };

    let mut rng = RngHandle::new(3, 0);
    let out = simulate::simulate(
        &model,
        32,
        NoiseKind::CircularStandard,
        RecoveryPolicy::Approximate,
        &mut rng,
    )
    .unwrap();
    assert!(!out.exact);
    let phi = out.phi_scale; // trace preserved: Σλ⁺ rescaled by φ = Σλ / Σλ⁺ < 1
    assert!(phi > 0.9 && phi < 1.0);

    // P(max_j |Z_exact(j) − Z_approx(j)| > x·s) under independent coupling,
    // bounded without ever simulating the exact process.
    let variances = ErrorVariances::independent_difference(1.0, phi, 32);
    let curve = simulate::error_bound(&[1.0, 2.0, 3.0], &variances, 32).unwrap();
    assert!(curve.bound[0] <= 1.0 && curve.bound[2] < 0.2);
    // ANCHOR_END: approximate_with_bound
}

#[test]
fn estimate_hurst_from_a_path() {
    // ANCHOR: estimate_hurst
    use circgauss::covmodels::CovarianceModel;
    use circgauss::estimate;
    use circgauss::simulate::{self, NoiseKind, RecoveryPolicy, RngHandle};
    use num_complex::Complex64;

    let h_true = 0.8;
    let model = CovarianceModel::CircularFgn {
        h: h_true,
        sigma2: 1.0,
        eta: 0.484,
    };
    let mut rng = RngHandle::new(11, 0);
    let increments = simulate::simulate(
        &model,
        999,
        NoiseKind::CircularStandard,
        RecoveryPolicy::GrowRetry { max_doublings: 6 },
        &mut rng,
    )
    .unwrap()
    .z;

    // The estimator consumes the *path*: cumulative sums with Z̃(0) = 0.
    let mut path = vec![Complex64::new(0.0, 0.0)];
    for dz in &increments {
        path.push(path.last().unwrap() + dz);
    }

    // Log-regression of filtered variances on dilated (1, −2, 1) at scales 1..4.
    let est = estimate::estimate_hurst(
        &path,
        &estimate::default_filter(),
        &estimate::default_scales(),
    )
    .unwrap();
    assert!((est.h_hat - h_true).abs() < 0.1);
    assert!(est.asymptotic_sd > 0.0);
    // ANCHOR_END: estimate_hurst
}

#[test]
fn bootstrap_interval() {
    let model = CovarianceModel::CircularFgn {
        h: 0.8,
        sigma2: 1.0,
        eta: 0.484,
    };
    let mut path_rng = RngHandle::new(11, 0);
    let increments = simulate::simulate(
        &model,
        999,
        NoiseKind::CircularStandard,
        RecoveryPolicy::GrowRetry { max_doublings: 6 },
        &mut path_rng,
    )
    .unwrap()
    .z;
    let mut path = vec![Complex64::new(0.0, 0.0)];
    for dz in &increments {
        path.push(path.last().unwrap() + dz);
    }

    // ANCHOR: bootstrap_interval
    use circgauss::estimate::{self, CiMethod};
    use circgauss::simulate::RngHandle;

    // `path` is the integrated sample path from the estimation chapter.
    let mut rng = RngHandle::new(99, 0);
    let ci = estimate::confidence_interval(
        &path,
        CiMethod::Ppb, // parametric path bootstrap: re-simulate from the fit
        0.95,
        500, // bootstrap replicates
        1.0, // marginal variance of the increments
        0.0, // circularity coefficient η used for re-simulation
        &mut rng,
    )
    .unwrap();
    assert!(ci.lower < ci.upper);
    assert!(ci.lower > 0.5 && ci.upper < 1.0);
    // ANCHOR_END: bootstrap_interval
}

#[test]
fn conjugate_spectrum() {
    // ANCHOR: conjugate_spectrum
    use circgauss::covmodels::CovarianceModel;
    use circgauss::embedding::{self, EmbeddingSize};

    // Conjugating the covariance reverses the circulant spectrum: the embedding
    // eigenvalues of γ* at index k equal those of γ at index m̃ − k.
    let model = CovarianceModel::ComplexAr1 {
        a_re: 0.5,
        a_im: 0.3,
        sigma2: 1.0,
        circular: true,
    };
    let conj = CovarianceModel::ComplexAr1 {
        a_re: 0.5,
        a_im: -0.3,
        sigma2: 1.0,
        circular: true,
    };
    let size = EmbeddingSize::new(8, 16).unwrap();
    let fwd = embedding::build(&model, &size).unwrap().eigenvalues;
    let rev = embedding::build(&conj, &size).unwrap().eigenvalues;
    let m_tilde = size.m_tilde();
    for k in 0..m_tilde {
        assert!((rev[k] - fwd[(m_tilde - k) % m_tilde]).abs() < 1e-12);
    }
    // ANCHOR_END: conjugate_spectrum
}
