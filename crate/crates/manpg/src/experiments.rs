//! Synthetic data generation and evaluation metrics for the benchmark
//! experiments.
//!
//! All generators are deterministic given a seed: randomness comes from
//! ChaCha12 streams seeded through [`derive_seed`], a SplitMix64-style
//! mixer, so repetitions can be derived from (master seed, repetition
//! index) and reproduced independently and in parallel.

use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Covariance families used by the CCA experiments.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub enum CovarianceKind {
    Identity,
    /// `Σ_ij = rho^{|i−j|}`.
    Toeplitz { rho: f64 },
    /// Normalized inverse of the banded precision matrix
    /// `Ω_ij = 1{i=j} + 0.5·1{|i−j|=1} + 0.4·1{|i−j|=2}`.
    SparseInverse,
}

/// Build the covariance matrix; positive definiteness is asserted by a
/// Cholesky factorization.
pub fn build_covariance(kind: CovarianceKind, p: usize) -> Result<Mat> {
    let sigma = match kind {
        CovarianceKind::Identity => Mat::eye(p),
        CovarianceKind::Toeplitz { rho } => {
            Mat::from_shape_fn((p, p), |(i, j)| rho.powi((i as i32 - j as i32).abs()))
        }
        CovarianceKind::SparseInverse => {
            let omega = Mat::from_shape_fn((p, p), |(i, j)| {
                match (i as i64 - j as i64).abs() {
                    0 => 1.0,
                    1 => 0.5,
                    2 => 0.4,
                    _ => 0.0,
                }
            });
            let sigma0 = omega
                .inv()
                .map_err(|e| Error::Numerical(format!("precision matrix not invertible: {e}")))?;
            Mat::from_shape_fn((p, p), |(i, j)| {
                sigma0[[i, j]] / (sigma0[[i, i]] * sigma0[[j, j]]).sqrt()
            })
        }
    };
    linalg::cholesky(&sigma)
        .map_err(|_| Error::Numerical("covariance is not positive definite".into()))?;
    Ok(sigma)
}

/// SplitMix64-style derivation of independent stream seeds from a master
/// seed, so that repetition k of an experiment draws from
/// `derive_seed(master, k)` regardless of execution order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Subtract the column means in place.
pub fn center_columns(x: &mut Mat) {
    let n = x.nrows() as f64;
    for mut col in x.columns_mut() {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
    }
}

/// Sparse PCA data: standard normal entries, columns centered, then all
/// entries divided by the largest column norm.
pub fn gen_spca_data(n: usize, p: usize, seed: u64) -> Mat {
    let mut rng = rng_for(seed);
    let mut x = linalg::randn(n, p, &mut rng);
    center_columns(&mut x);
    let max_norm = x
        .columns()
        .into_iter()
        .map(|c| c.dot(&c).sqrt())
        .fold(0.0_f64, f64::max);
    if max_norm > 0.0 {
        x.mapv_inplace(|v| v / max_norm);
    }
    x
}

/// Row indices (0-based) carrying the nonzero coordinates of the true
/// canonical vectors.
pub const CANONICAL_SUPPORT: [usize; 5] = [0, 5, 10, 15, 20];

/// Ground truth of a synthetic CCA instance.
#[derive(Clone, Debug)]
pub struct CcaTruth {
    /// p×r true canonical directions for the X block, Σx-orthonormal.
    pub u: Mat,
    /// q×r true canonical directions for the Y block, Σy-orthonormal.
    pub v: Mat,
    /// True canonical correlations (diagonal of Λ).
    pub correlations: Array1<f64>,
}

/// Draw canonical directions supported on [`CANONICAL_SUPPORT`] with entries
/// uniform on {−2,−1,0,1,2}, redrawn while the support Gram is numerically
/// singular, then Σ-orthonormalized.
pub fn gen_canonical_truth(
    sigma_x: &Mat,
    sigma_y: &Mat,
    correlations: &Array1<f64>,
    seed: u64,
) -> Result<CcaTruth> {
    let r = correlations.len();
    let p = sigma_x.nrows();
    let q = sigma_y.nrows();
    if p < 21 || q < 21 {
        return Err(Error::InvalidArgument(
            "dimensions must be at least 21 to place the fixed support".into(),
        ));
    }
    let mut rng = rng_for(seed);
    let u = draw_normalized(sigma_x, p, r, &mut rng)?;
    let v = draw_normalized(sigma_y, q, r, &mut rng)?;
    Ok(CcaTruth {
        u,
        v,
        correlations: correlations.clone(),
    })
}

fn draw_normalized(sigma: &Mat, p: usize, r: usize, rng: &mut ChaCha12Rng) -> Result<Mat> {
    for _ in 0..100 {
        let mut m = Mat::zeros((p, r));
        for &row in CANONICAL_SUPPORT.iter() {
            for j in 0..r {
                m[[row, j]] = rng.random_range(0..5) as f64 - 2.0;
            }
        }
        let gram = m.t().dot(&sigma.dot(&m));
        let Ok((vals, _)) = linalg::eigh(&gram) else { continue };
        let min = vals[0];
        let max = vals[vals.len() - 1];
        if min <= 0.0 || max / min > 1e8 {
            continue;
        }
        let n = linalg::inv_sqrt_spd(&gram)?;
        return Ok(m.dot(&n));
    }
    Err(Error::Generation(
        "could not draw a non-singular support after 100 attempts".into(),
    ))
}

/// Sample the joint Gaussian model with cross-covariance
/// `Σxy = Σx U Λ Vᵀ Σy` and split into (X, Y), both divided by √(n−1).
pub fn gen_cca_data(
    n: usize,
    sigma_x: &Mat,
    sigma_y: &Mat,
    truth: &CcaTruth,
    seed: u64,
) -> Result<(Mat, Mat)> {
    let p = sigma_x.nrows();
    let q = sigma_y.nrows();
    let lam = Mat::from_diag(&truth.correlations);
    let sigma_xy = sigma_x.dot(&truth.u).dot(&lam).dot(&truth.v.t()).dot(sigma_y);

    let mut joint = Mat::zeros((p + q, p + q));
    joint.slice_mut(ndarray::s![..p, ..p]).assign(sigma_x);
    joint.slice_mut(ndarray::s![..p, p..]).assign(&sigma_xy);
    joint.slice_mut(ndarray::s![p.., ..p]).assign(&sigma_xy.t());
    joint.slice_mut(ndarray::s![p.., p..]).assign(sigma_y);

    let chol = linalg::cholesky(&joint).map_err(|_| {
        let min_eig = linalg::eigh(&joint).map(|(v, _)| v[0]).unwrap_or(f64::NAN);
        Error::Generation(format!(
            "joint covariance is not positive definite (min eigenvalue {min_eig:.3e})"
        ))
    })?;

    let mut rng = rng_for(seed);
    let z = linalg::randn(n, p + q, &mut rng);
    let data = z.dot(&chol.t());
    let scale = 1.0 / ((n as f64 - 1.0).max(1.0)).sqrt();
    let x = data.slice(ndarray::s![.., ..p]).to_owned() * scale;
    let y = data.slice(ndarray::s![.., p..]).to_owned() * scale;
    Ok((x, y))
}

/// `2(1 − |ûᵀu|)` for two canonical vectors (assumed Σ-normalized by the
/// caller's convention).
pub fn loss_vector(u_hat: &Array1<f64>, u: &Array1<f64>) -> f64 {
    2.0 * (1.0 - u_hat.dot(u).abs())
}

/// Squared Frobenius distance of the column-space projectors,
/// `‖P_U − P_A‖²_F`. Fails when either factor is column-rank-deficient.
pub fn loss_subspace(u: &Mat, a: &Mat) -> Result<f64> {
    let qu = linalg::orthonormalize(u)?;
    let qa = linalg::orthonormalize(a)?;
    let r_u = qu.ncols() as f64;
    let r_a = qa.ncols() as f64;
    let overlap = qu.t().dot(&qa);
    Ok(r_u + r_a - 2.0 * linalg::fro_sq(&overlap))
}

/// Percent of entries counted as zero (|v| < thresh) and the complementary
/// nonzero count. An entry exactly at the threshold counts as nonzero.
pub fn sparsity_stats(b: &Mat, thresh: f64) -> (f64, usize) {
    let total = b.len();
    let zeros = b.iter().filter(|v| v.abs() < thresh).count();
    (100.0 * zeros as f64 / total.max(1) as f64, total - zeros)
}

/// Threshold used by the benchmark tables when counting nonzeros.
pub const SPARSITY_THRESHOLD: f64 = 1e-4;

/// Per-pair sample canonical correlations `diag(AᵀXᵀYB)` (signs reported
/// as computed).
pub fn canonical_correlations(x: &Mat, y: &Mat, a: &Mat, b: &Mat) -> Array1<f64> {
    let xa = x.dot(a);
    let yb = y.dot(b);
    let prod = xa.t().dot(&yb);
    prod.diag().to_owned()
}

/// Read a headerless CSV of rows into a matrix.
pub fn read_matrix_csv(path: &std::path::Path) -> Result<Mat> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: std::result::Result<Vec<f64>, _> =
            record.iter().map(|s| s.parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Config(format!("bad number in {path:?}: {e}")))?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Config(format!(
                    "ragged CSV in {path:?}: row {} has {} fields, expected {}",
                    rows.len(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{path:?} is empty")));
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let nrows = flat.len() / ncols;
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::Config(format!("could not shape {path:?}: {e}")))
}

/// Write a matrix as a headerless CSV of rows (full f64 precision).
pub fn write_matrix_csv(path: &std::path::Path, m: &Mat) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writer.write_record(&cells)?;
    }
    writer.flush()?;
    Ok(())
}
