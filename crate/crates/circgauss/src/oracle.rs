//! Brute-force reference implementations that certify the fast paths.
//!
//! Everything here is `O(n²)` memory and `O(n³)` time on purpose: a dense Toeplitz
//! covariance assembled entry by entry, a clamped complex Cholesky factorization, a
//! cyclic-Jacobi Hermitian eigendecomposition, and batched empirical moments. None of
//! it shares code with the circulant machinery it checks — the FFT sampler and the
//! dense samplers must agree *because the mathematics agrees*, not because they call
//! the same routine.

use crate::covmodels::{self, CovarianceModel};
use crate::error::{Error, Result};
use crate::simulate::RngHandle;
use num_complex::Complex64;
use rayon::prelude::*;

/// Largest `n` the dense reference paths will materialize (`n²` complex entries).
pub const DENSE_CAP: usize = 4096;

/// A dense Hermitian Toeplitz covariance matrix `Γ_{jk} = γ(j−k)`.
#[derive(Clone, Debug)]
pub struct DenseCovariance {
    n: usize,
    /// Row-major `n×n` entries.
    entries: Vec<Complex64>,
}

impl DenseCovariance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        assert!(j < self.n && k < self.n);
        self.entries[j * self.n + k]
    }

    /// Row-major backing slice, for callers that want the whole matrix.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Assemble from explicit entries; validates Hermitian symmetry and a real,
    /// non-negative diagonal (the Toeplitz property is *not* required here, so tests
    /// can feed non-Toeplitz Hermitian matrices to the factorizations).
    pub fn from_entries(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Size(format!(
                "expected {n}×{n} = {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let m = DenseCovariance { n, entries };
        for j in 0..n {
            let d = m.get(j, j);
            if d.im != 0.0 || d.re < 0.0 {
                return Err(Error::Domain(format!(
                    "diagonal entry ({j},{j}) = {d} must be real and ≥ 0"
                )));
            }
            for k in j + 1..n {
                let a = m.get(j, k);
                let b = m.get(k, j);
                let scale = a.norm().max(b.norm()).max(1.0);
                if (a - b.conj()).norm() > 1e-12 * scale {
                    return Err(Error::Domain(format!(
                        "entries ({j},{k}) and ({k},{j}) are not conjugate: {a} vs {b}"
                    )));
                }
            }
        }
        Ok(m)
    }
}

/// Materialize `Γ_{jk} = γ(j−k)` for the first `n` samples of `model`.
///
/// Capped at [`DENSE_CAP`]: the dense path exists to certify the circulant path, not
/// to compete with it.
pub fn dense_gamma(model: &CovarianceModel, n: usize) -> Result<DenseCovariance> {
    if n == 0 {
        return Err(Error::Size("dense covariance needs n ≥ 1".into()));
    }
    if n > DENSE_CAP {
        return Err(Error::Size(format!(
            "n = {n} exceeds the dense-path cap {DENSE_CAP}"
        )));
    }
    covmodels::ensure_valid(model)?;
    let slices = covmodels::slices(model, n.max(2) - 1)?;
    let gamma_at = |tau: i64| -> Complex64 {
        let a = tau.unsigned_abs() as usize;
        let g = Complex64::new(slices.re[a], slices.im[a]);
        if tau >= 0 {
            g
        } else {
            g.conj()
        }
    };
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            entries.push(gamma_at(j as i64 - k as i64));
        }
    }
    Ok(DenseCovariance { n, entries })
}

/// Relative clamping tolerance for near-PSD pivots/eigenvalues, against `γ(0)`.
const PSD_CLAMP_REL: f64 = 1e-8;

/// Draw `Z = L·N` from the clamped Cholesky factorization `Γ = LL^H`.
///
/// `circular = true` drives the factor with circular standard normals
/// `N_j = (U_j + iV_j)/√2` (`E N_j² = 0`, so the output pseudo-covariance vanishes);
/// `circular = false` uses real standard normals, giving pseudo-covariance `LLᵀ`.
/// Pivots in `[−1e−8·γ(0), 0)` are treated as exact zeros (round-off of a PSD matrix);
/// anything more negative is genuinely indefinite and errors.
pub fn cholesky_simulate(
    gamma: &DenseCovariance,
    circular: bool,
    rng: &mut RngHandle,
) -> Result<Vec<Complex64>> {
    let n = gamma.n;
    let tol = PSD_CLAMP_REL * gamma.get(0, 0).re.max(1.0);
    // Lower-triangular factor, row-major; row j has entries 0..=j.
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for k in 0..=j {
            let mut acc = gamma.get(j, k);
            for i in 0..k {
                acc -= l[j * n + i] * l[k * n + i].conj();
            }
            if j == k {
                let d = acc.re;
                if d < -tol {
                    return Err(Error::Integrity(format!(
                        "matrix is indefinite: pivot {d:.6e} at ({j},{j}) below −{tol:.1e}"
                    )));
                }
                l[j * n + j] = Complex64::new(d.max(0.0).sqrt(), 0.0);
            } else {
                let piv = l[k * n + k].re;
                l[j * n + k] = if piv > 0.0 {
                    acc / piv
                } else {
                    // Zero pivot from clamping: the column is degenerate; a PSD matrix
                    // forces acc = 0 here, so 0 keeps the factorization consistent.
                    Complex64::new(0.0, 0.0)
                };
            }
        }
    }
    let noise = draw_noise(n, circular, rng);
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..=j {
            acc += l[j * n + k] * noise[k];
        }
        z[j] = acc;
    }
    Ok(z)
}

fn draw_noise(n: usize, circular: bool, rng: &mut RngHandle) -> Vec<Complex64> {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            if circular {
                let u = rng.standard_normal();
                let v = rng.standard_normal();
                Complex64::new(u * half, v * half)
            } else {
                Complex64::new(rng.standard_normal(), 0.0)
            }
        })
        .collect()
}

/// Eigendecomposition of a Hermitian matrix: `A = Q Λ Q^H` with real `Λ` and unitary
/// `Q` (column `k` of `vectors` is the eigenvector for `eigenvalues[k]`).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    /// Row-major `n×n`; column `k` is the `k`-th eigenvector.
    pub vectors: Vec<Complex64>,
}

impl HermitianEigen {
    pub fn vector_entry(&self, row: usize, col: usize) -> Complex64 {
        self.vectors[row * self.n + col]
    }
}

/// Cap on matrix order for the Jacobi eigensolver (cubic per sweep).
pub const EIGH_CAP: usize = 128;

/// Cyclic complex Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each rotation annihilates one off-diagonal pair `(p,q)` exactly: with
/// `x = conj(A_pq)/|A_pq|` and `θ = ½·atan2(2|A_pq|, A_pp − A_qq)`, the unitary
/// `J = [[c, −s·conj(x)], [s·x, c]]` on the `(p,q)` plane zeroes `(J^H A J)_{pq}`.
/// Sweeps repeat until the off-diagonal Frobenius norm falls below `1e−13` of the
/// matrix norm (at most 30 sweeps; Jacobi converges quadratically once small).
pub fn jacobi_eigh(matrix: &DenseCovariance) -> Result<HermitianEigen> {
    let n = matrix.n;
    if n > EIGH_CAP {
        return Err(Error::Size(format!(
            "n = {n} exceeds the Jacobi eigensolver cap {EIGH_CAP}"
        )));
    }
    let mut a = matrix.entries.clone();
    let mut q = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        q[j * n + j] = Complex64::new(1.0, 0.0);
    }
    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(HermitianEigen {
            n,
            eigenvalues: vec![0.0; n],
            vectors: q,
        });
    }
    let target = 1e-13 * norm;
    let mut converged = false;
    for _sweep in 0..30 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |r| (p, r)))
            .map(|(p, r)| a[p * n + r].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < target {
            converged = true;
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = a[p * n + r];
                if apq.norm() <= target / (n as f64) {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[r * n + r].re;
                let x = apq.conj() / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                let sx = s * x;
                let scx = s * x.conj();
                // A ← J^H A J: right-multiply columns p,r …
                for i in 0..n {
                    let aip = a[i * n + p];
                    let air = a[i * n + r];
                    a[i * n + p] = c * aip + sx * air;
                    a[i * n + r] = -scx * aip + c * air;
                }
                // … then left-multiply rows p,r by J^H.
                for i in 0..n {
                    let api = a[p * n + i];
                    let ari = a[r * n + i];
                    a[p * n + i] = c * api + scx * ari;
                    a[r * n + i] = -sx * api + c * ari;
                }
                // Accumulate Q ← Q·J.
                for i in 0..n {
                    let qip = q[i * n + p];
                    let qir = q[i * n + r];
                    q[i * n + p] = c * qip + sx * qir;
                    q[i * n + r] = -scx * qip + c * qir;
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |r| (p, r)))
            .map(|(p, r)| a[p * n + r].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off >= target {
            return Err(Error::Integrity(format!(
                "Jacobi sweeps did not converge: off-diagonal norm {off:.3e} ≥ {target:.3e}"
            )));
        }
    }
    let eigenvalues: Vec<f64> = (0..n).map(|j| a[j * n + j].re).collect();
    Ok(HermitianEigen {
        n,
        eigenvalues,
        vectors: q,
    })
}

/// Draw `Z = Q·diag(√λ₊)·N` from the eigendecomposition of `Γ` — the dense analogue
/// of spectral sampling, used where Cholesky's triangular structure is unwanted (e.g.
/// pairing exact draws against circulant-approximation draws).
///
/// Eigenvalues in `[−1e−8·γ(0), 0)` clamp to zero; more negative errors.
pub fn eigen_simulate(
    gamma: &DenseCovariance,
    circular: bool,
    rng: &mut RngHandle,
) -> Result<Vec<Complex64>> {
    let eig = jacobi_eigh(gamma)?;
    let tol = PSD_CLAMP_REL * gamma.get(0, 0).re.max(1.0);
    let mut roots = Vec::with_capacity(eig.n);
    for &l in &eig.eigenvalues {
        if l < -tol {
            return Err(Error::Integrity(format!(
                "matrix is indefinite: eigenvalue {l:.6e} below −{tol:.1e}"
            )));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let n = eig.n;
    let noise = draw_noise(n, circular, rng);
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for (k, (&root, nk)) in roots.iter().zip(&noise).enumerate() {
        if root == 0.0 {
            continue;
        }
        let w = root * nk;
        for j in 0..n {
            z[j] += eig.vector_entry(j, k) * w;
        }
    }
    Ok(z)
}

/// Largest path length for which [`empirical_moments`] materializes the full `n×n`
/// covariance and pseudo-covariance matrices.
pub const MOMENT_MATRIX_CAP: usize = 512;

/// Batched sample moments of complex paths.
#[derive(Clone, Debug)]
pub struct EmpiricalMoments {
    pub n: usize,
    pub reps: usize,
    /// `(1/N)·Σ_b Z_b(j) Z_b(k)*`, row-major; `None` when `n >` [`MOMENT_MATRIX_CAP`].
    pub cov: Option<Vec<Complex64>>,
    /// `(1/N)·Σ_b Z_b(j) Z_b(k)`, row-major; `None` when `n >` [`MOMENT_MATRIX_CAP`].
    pub pseudo_cov: Option<Vec<Complex64>>,
    /// Monte Carlo standard error of each `cov` entry (standard deviation of the
    /// per-replication product divided by `√N`), same layout.
    pub cov_se: Option<Vec<f64>>,
    /// `γ̂_RI(τ) = (1/(N·n))·Σ_b Σ_t Re Z_b(t+τ)·Im Z_b(t)` for `τ = 0..=L`,
    /// `L = min(20, n−1)`. Biased (`1/n`) normalization, no demeaning (the processes
    /// are zero-mean by construction).
    pub gamma_ri: Vec<f64>,
    /// Likewise with the roles swapped: `Im Z(t+τ)·Re Z(t)`.
    pub gamma_ir: Vec<f64>,
}

struct MomentPartial {
    cov: Option<Vec<Complex64>>,
    pseudo: Option<Vec<Complex64>>,
    prod2: Option<Vec<f64>>,
    ri: Vec<f64>,
    ir: Vec<f64>,
}

/// Sample covariance, pseudo-covariance, and real/imaginary cross-covariances of a
/// batch of equal-length paths.
///
/// Accumulation is chunked: each worker sums a contiguous block of replications, and
/// the per-chunk partials are reduced in index order — bit-identical results for any
/// thread count.
pub fn empirical_moments(batch: &[Vec<Complex64>]) -> Result<EmpiricalMoments> {
    if batch.is_empty() {
        return Err(Error::Size("empirical moments need a non-empty batch".into()));
    }
    let n = batch[0].len();
    if n == 0 || batch.iter().any(|p| p.len() != n) {
        return Err(Error::Size(
            "all paths must share one positive length".into(),
        ));
    }
    let reps = batch.len();
    let lags = (n - 1).min(20);
    let with_matrices = n <= MOMENT_MATRIX_CAP;

    const CHUNK: usize = 256;
    let partials: Vec<MomentPartial> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut cov = with_matrices.then(|| vec![Complex64::new(0.0, 0.0); n * n]);
            let mut pseudo = with_matrices.then(|| vec![Complex64::new(0.0, 0.0); n * n]);
            let mut prod2 = with_matrices.then(|| vec![0.0f64; n * n]);
            let mut ri = vec![0.0f64; lags + 1];
            let mut ir = vec![0.0f64; lags + 1];
            for path in chunk {
                if let (Some(cov), Some(pseudo), Some(prod2)) =
                    (cov.as_mut(), pseudo.as_mut(), prod2.as_mut())
                {
                    for j in 0..n {
                        let zj = path[j];
                        for k in 0..n {
                            let p = zj * path[k].conj();
                            cov[j * n + k] += p;
                            pseudo[j * n + k] += zj * path[k];
                            prod2[j * n + k] += p.norm_sqr();
                        }
                    }
                }
                for (tau, (ri_t, ir_t)) in ri.iter_mut().zip(ir.iter_mut()).enumerate() {
                    let mut acc_ri = 0.0;
                    let mut acc_ir = 0.0;
                    for t in 0..n - tau {
                        acc_ri += path[t + tau].re * path[t].im;
                        acc_ir += path[t + tau].im * path[t].re;
                    }
                    *ri_t += acc_ri / n as f64;
                    *ir_t += acc_ir / n as f64;
                }
            }
            MomentPartial {
                cov,
                pseudo,
                prod2,
                ri,
                ir,
            }
        })
        .collect();

    let inv = 1.0 / reps as f64;
    let mut cov = with_matrices.then(|| vec![Complex64::new(0.0, 0.0); n * n]);
    let mut pseudo = with_matrices.then(|| vec![Complex64::new(0.0, 0.0); n * n]);
    let mut prod2 = with_matrices.then(|| vec![0.0f64; n * n]);
    let mut gamma_ri = vec![0.0f64; lags + 1];
    let mut gamma_ir = vec![0.0f64; lags + 1];
    for part in partials {
        if let (Some(cov), Some(partial)) = (cov.as_mut(), part.cov) {
            for (a, b) in cov.iter_mut().zip(partial) {
                *a += b;
            }
        }
        if let (Some(pseudo), Some(partial)) = (pseudo.as_mut(), part.pseudo) {
            for (a, b) in pseudo.iter_mut().zip(partial) {
                *a += b;
            }
        }
        if let (Some(prod2), Some(partial)) = (prod2.as_mut(), part.prod2) {
            for (a, b) in prod2.iter_mut().zip(partial) {
                *a += b;
            }
        }
        for (a, b) in gamma_ri.iter_mut().zip(part.ri) {
            *a += b;
        }
        for (a, b) in gamma_ir.iter_mut().zip(part.ir) {
            *a += b;
        }
    }
    let cov = cov.map(|m| m.into_iter().map(|z| z * inv).collect::<Vec<_>>());
    let pseudo = pseudo.map(|m| m.into_iter().map(|z| z * inv).collect::<Vec<_>>());
    let cov_se = match (&cov, prod2) {
        (Some(cov), Some(prod2)) => Some(
            cov.iter()
                .zip(prod2)
                .map(|(&mean, p2)| {
                    let var = (p2 * inv - mean.norm_sqr()).max(0.0);
                    (var * inv).sqrt()
                })
                .collect(),
        ),
        _ => None,
    };
    for v in gamma_ri.iter_mut().chain(gamma_ir.iter_mut()) {
        *v *= inv;
    }
    Ok(EmpiricalMoments {
        n,
        reps,
        cov,
        pseudo_cov: pseudo,
        cov_se,
        gamma_ri,
        gamma_ir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodels::RealCovariance;
    use crate::embedding;
    use approx::assert_relative_eq;

    fn zoo() -> Vec<CovarianceModel> {
        vec![
            CovarianceModel::WhiteNoise { sigma2: 1.3 },
            CovarianceModel::ComplexAr1 {
                a_re: 0.5,
                a_im: 0.3,
                sigma2: 1.0,
                circular: true,
            },
            CovarianceModel::CircularFgn {
                h: 0.8,
                sigma2: 1.0,
                eta: 0.3,
            },
            CovarianceModel::Modulated {
                phi: 0.17,
                base: RealCovariance::Exponential {
                    alpha: 0.4,
                    sigma2: 2.0,
                },
            },
        ]
    }

    #[test]
    fn white_noise_dense_is_identity() {
        let g = dense_gamma(&CovarianceModel::WhiteNoise { sigma2: 1.0 }, 3).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let expected = if j == k { 1.0 } else { 0.0 };
                assert_eq!(g.get(j, k), Complex64::new(expected, 0.0));
            }
        }
        assert!(dense_gamma(&CovarianceModel::WhiteNoise { sigma2: 1.0 }, DENSE_CAP + 1).is_err());
    }

    #[test]
    fn dense_gamma_is_hermitian_and_toeplitz() {
        for model in zoo() {
            let n = 12;
            let g = dense_gamma(&model, n).unwrap();
            for j in 0..n {
                for k in 0..n {
                    assert_eq!(g.get(j, k), g.get(k, j).conj(), "{model:?} ({j},{k})");
                    if j + 1 < n && k + 1 < n {
                        assert_eq!(g.get(j + 1, k + 1), g.get(j, k), "{model:?} ({j},{k})");
                    }
                }
            }
            assert!(g.get(0, 0).re >= 0.0);
        }
    }

    #[test]
    fn circulant_top_left_block_is_the_covariance() {
        for model in zoo() {
            let n = 16;
            let size = embedding::select_embedding_size(n).unwrap();
            let emb = embedding::build(&model, &size).unwrap();
            let g = dense_gamma(&model, n).unwrap();
            let m_tilde = size.m_tilde();
            for j in 0..n {
                for k in 0..n {
                    // C_{jk} = c_{(k−j) mod m̃} for a circulant with first row c.
                    let idx = (k + m_tilde - j) % m_tilde;
                    let c = emb.first_row[idx];
                    let expected = g.get(j, k);
                    assert!(
                        (c - expected).norm() <= 1e-14 * (1.0 + expected.norm()),
                        "{model:?} ({j},{k}): {c} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn cholesky_single_sample_is_scaled_normal() {
        let g = dense_gamma(&CovarianceModel::WhiteNoise { sigma2: 4.0 }, 1).unwrap();
        let mut rng = RngHandle::new(8, 0);
        let z = cholesky_simulate(&g, false, &mut rng).unwrap();
        let mut reference = RngHandle::new(8, 0);
        let n0 = reference.standard_normal();
        assert_relative_eq!(z[0].re, 2.0 * n0, max_relative = 1e-15);
        assert_eq!(z[0].im, 0.0);

        let mut rng = RngHandle::new(8, 0);
        let z = cholesky_simulate(&g, true, &mut rng).unwrap();
        let mut reference = RngHandle::new(8, 0);
        let u = reference.standard_normal();
        let v = reference.standard_normal();
        assert_relative_eq!(z[0].re, 2.0 * u / 2.0f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(z[0].im, 2.0 * v / 2.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite_matrices() {
        let entries = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let g = DenseCovariance::from_entries(2, entries).unwrap();
        let mut rng = RngHandle::new(1, 0);
        assert!(matches!(
            cholesky_simulate(&g, true, &mut rng),
            Err(Error::Integrity(_))
        ));
        assert!(matches!(
            eigen_simulate(&g, true, &mut rng),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn from_entries_validates_structure() {
        let bad_diag = vec![
            Complex64::new(1.0, 0.5),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(DenseCovariance::from_entries(2, bad_diag).is_err());
        let not_hermitian = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.3, 0.1),
            Complex64::new(0.3, 0.1),
            Complex64::new(1.0, 0.0),
        ];
        assert!(DenseCovariance::from_entries(2, not_hermitian).is_err());
        assert!(DenseCovariance::from_entries(2, vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn cholesky_empirical_covariance_matches_dense() {
        let model = CovarianceModel::CircularFgn {
            h: 0.3,
            sigma2: 1.0,
            eta: 0.4,
        };
        let n = 8;
        let g = dense_gamma(&model, n).unwrap();
        let reps = 40_000;
        let batch: Vec<Vec<Complex64>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngHandle::new(55, r as u64);
                cholesky_simulate(&g, true, &mut rng).unwrap()
            })
            .collect();
        let moments = empirical_moments(&batch).unwrap();
        let cov = moments.cov.as_ref().unwrap();
        let se = moments.cov_se.as_ref().unwrap();
        let pseudo = moments.pseudo_cov.as_ref().unwrap();
        for j in 0..n {
            for k in 0..n {
                let diff = (cov[j * n + k] - g.get(j, k)).norm();
                let band = 4.0 * se[j * n + k] + 1e-12;
                assert!(diff <= band, "cov ({j},{k}): |Δ| = {diff:.3e} > {band:.3e}");
                // Circular driver ⇒ pseudo-covariance 0 within the same MC band.
                assert!(
                    pseudo[j * n + k].norm() <= band,
                    "pseudo ({j},{k}) ≠ 0 beyond 4·SE"
                );
            }
        }
    }

    #[test]
    fn jacobi_reconstructs_and_is_unitary() {
        // Deterministic pseudo-random Hermitian matrix.
        let n = 16;
        let mut state = 0xACED_u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            entries[j * n + j] = Complex64::new(2.0 + next(), 0.0);
            for k in j + 1..n {
                let v = Complex64::new(next(), next());
                entries[j * n + k] = v;
                entries[k * n + j] = v.conj();
            }
        }
        let a = DenseCovariance::from_entries(n, entries).unwrap();
        let eig = jacobi_eigh(&a).unwrap();

        // Q^H Q = I.
        for p in 0..n {
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    acc += eig.vector_entry(i, p).conj() * eig.vector_entry(i, r);
                }
                let expected = if p == r { 1.0 } else { 0.0 };
                assert!(
                    (acc - expected).norm() < 1e-12,
                    "orthonormality ({p},{r}): {acc}"
                );
            }
        }
        // Q Λ Q^H = A.
        for j in 0..n {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    acc += eig.vector_entry(j, i) * eig.eigenvalues[i] * eig.vector_entry(k, i).conj();
                }
                assert!(
                    (acc - a.get(j, k)).norm() < 1e-11,
                    "reconstruction ({j},{k})"
                );
            }
        }
        // Trace identity.
        let trace: f64 = (0..n).map(|j| a.get(j, j).re).sum();
        let sum: f64 = eig.eigenvalues.iter().sum();
        assert_relative_eq!(trace, sum, max_relative = 1e-12);
    }

    #[test]
    fn eigen_simulate_covariance_matches_dense() {
        let model = CovarianceModel::ComplexAr1 {
            a_re: 0.4,
            a_im: -0.2,
            sigma2: 1.0,
            circular: true,
        };
        let n = 6;
        let g = dense_gamma(&model, n).unwrap();
        let reps = 30_000;
        let batch: Vec<Vec<Complex64>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngHandle::new(66, r as u64);
                eigen_simulate(&g, true, &mut rng).unwrap()
            })
            .collect();
        let moments = empirical_moments(&batch).unwrap();
        let cov = moments.cov.as_ref().unwrap();
        let se = moments.cov_se.as_ref().unwrap();
        for j in 0..n {
            for k in 0..n {
                let diff = (cov[j * n + k] - g.get(j, k)).norm();
                assert!(diff <= 4.0 * se[j * n + k] + 1e-12, "({j},{k})");
            }
        }
    }

    #[test]
    fn empirical_moments_frozen_small_example() {
        let batch = vec![vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, -1.0)]];
        let m = empirical_moments(&batch).unwrap();
        let cov = m.cov.as_ref().unwrap();
        let pseudo = m.pseudo_cov.as_ref().unwrap();
        assert_eq!(cov[0], Complex64::new(5.0, 0.0));
        assert_eq!(cov[1], Complex64::new(1.0, 7.0));
        assert_eq!(cov[2], Complex64::new(1.0, -7.0));
        assert_eq!(cov[3], Complex64::new(10.0, 0.0));
        assert_eq!(pseudo[0], Complex64::new(-3.0, 4.0));
        assert_eq!(pseudo[1], Complex64::new(5.0, 5.0));
        assert_eq!(pseudo[2], Complex64::new(5.0, 5.0));
        assert_eq!(pseudo[3], Complex64::new(8.0, -6.0));
        assert_eq!(m.gamma_ri, vec![-0.5, 3.0]);
        assert_eq!(m.gamma_ir, vec![-0.5, -0.5]);

        let zeros = vec![vec![Complex64::new(0.0, 0.0); 4]; 3];
        let mz = empirical_moments(&zeros).unwrap();
        assert!(mz.cov.unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(mz.gamma_ri.iter().all(|&v| v == 0.0));

        assert!(empirical_moments(&[]).is_err());
        assert!(empirical_moments(&[vec![], vec![]]).is_err());
    }

    #[test]
    fn moment_accumulation_is_chunk_order_deterministic() {
        // Two batches differing only in how rayon might chunk them must agree exactly
        // with a sequential re-computation.
        let batch: Vec<Vec<Complex64>> = (0..600)
            .map(|r| {
                let mut rng = RngHandle::new(14, r as u64);
                (0..10)
                    .map(|_| Complex64::new(rng.standard_normal(), rng.standard_normal()))
                    .collect()
            })
            .collect();
        let a = empirical_moments(&batch).unwrap();
        let b = empirical_moments(&batch).unwrap();
        assert_eq!(a.cov.as_ref().unwrap(), b.cov.as_ref().unwrap());
        assert_eq!(a.gamma_ri, b.gamma_ri);
    }

    #[test]
    fn moment_matrices_are_skipped_beyond_the_cap() {
        let batch = vec![vec![Complex64::new(1.0, 0.0); MOMENT_MATRIX_CAP + 1]];
        let m = empirical_moments(&batch).unwrap();
        assert!(m.cov.is_none());
        assert!(m.pseudo_cov.is_none());
        assert_eq!(m.gamma_ri.len(), 21);
    }
}
