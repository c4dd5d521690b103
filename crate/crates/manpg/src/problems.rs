//! Concrete problem builders: sparse PCA (elastic-net regression form) and
//! single/multiple sparse CCA on generalized Stiefel manifolds, plus their
//! initializers.

use std::sync::Arc;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::manifold::Manifold;
use crate::penalty::Penalty;
use crate::solver::Problem;

/// Sparse PCA instance data.
///
/// The objective is `‖X − XBAᵀ‖²_F + ridge·Σ_j‖B_j‖² + Σ_j lasso_j‖B_j‖₁`
/// over `AᵀA = I_r` with `B` unconstrained. Columns of `data` are expected
/// to be centered.
#[derive(Clone, Debug)]
pub struct SpcaConfig {
    /// Centered n×p data matrix.
    pub data: Mat,
    /// Number of components r.
    pub components: usize,
    /// Ridge weight μ.
    pub ridge: f64,
    /// Per-component lasso weights μ₁ (length r).
    pub lasso: Array1<f64>,
}

impl SpcaConfig {
    pub fn new(data: Mat, components: usize, ridge: f64, lasso: Array1<f64>) -> Result<Self> {
        let (n, p) = data.dim();
        if components < 1 || components > n.min(p) {
            return Err(Error::InvalidArgument(format!(
                "components must lie in 1..=min(n,p) = {}, got {components}",
                n.min(p)
            )));
        }
        if lasso.len() != components {
            return Err(Error::Dimension(format!(
                "lasso weights have length {}, expected {components}",
                lasso.len()
            )));
        }
        if ridge < 0.0 || lasso.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument("penalty weights must be nonnegative".into()));
        }
        Ok(SpcaConfig { data, components, ridge, lasso })
    }

    /// Same lasso weight for every component.
    pub fn uniform(data: Mat, components: usize, ridge: f64, lasso: f64) -> Result<Self> {
        let w = Array1::from_elem(components, lasso);
        SpcaConfig::new(data, components, ridge, w)
    }
}

/// Largest eigenvalue of `XᵀX` by power iteration (at most 100 iterations
/// or a 1e-8 relative change).
pub fn spectral_norm_sq(x: &Mat) -> f64 {
    let p = x.ncols();
    linalg::power_iteration(p, |v| x.t().dot(&x.dot(v)), 100, 1e-8)
}

/// Build the sparse PCA problem: `H(A,B) = ‖X − XBAᵀ‖²_F`, `f ≡ 0`,
/// `g` the columnwise elastic net, `A` on the Stiefel manifold, `B`
/// Euclidean, step sizes `t₁ = 100/p` and `t₂ = 1/(2λ_max(XᵀX))`.
pub fn spca_problem(cfg: &SpcaConfig) -> Result<Problem> {
    let (_, p) = cfg.data.dim();
    let r = cfg.components;
    let x = Arc::new(cfg.data.clone());
    let x_norm_sq = linalg::fro_sq(&x);
    let lam_max = spectral_norm_sq(&x);
    if lam_max <= 0.0 {
        return Err(Error::Numerical("data matrix is zero".into()));
    }

    // H evaluated through X-products only: for n ≪ p this avoids ever
    // forming the p×p Gram matrix.
    let xe = Arc::clone(&x);
    let eval_h = move |a: &Mat, b: &Mat| -> f64 {
        let xa = xe.dot(a);
        let xb = xe.dot(b);
        let cross: f64 = xa.iter().zip(xb.iter()).map(|(u, v)| u * v).sum();
        let gram_b = xb.t().dot(&xb);
        let gram_a = a.t().dot(a);
        let quad: f64 = gram_b.iter().zip(gram_a.iter()).map(|(u, v)| u * v).sum();
        x_norm_sq - 2.0 * cross + quad
    };
    let xa_ref = Arc::clone(&x);
    let grad_a = move |a: &Mat, b: &Mat| -> Mat {
        let xb = xa_ref.dot(b);
        let xtxb = xa_ref.t().dot(&xb);
        let gram_b = xb.t().dot(&xb);
        a.dot(&gram_b) * 2.0 - &(xtxb * 2.0)
    };
    let xb_ref = Arc::clone(&x);
    let grad_b = move |a: &Mat, b: &Mat| -> Mat {
        let xa = xb_ref.dot(a);
        let xb = xb_ref.dot(b);
        let gram_a = a.t().dot(a);
        let lin = xb_ref.t().dot(&xa);
        xb_ref.t().dot(&xb.dot(&gram_a)) * 2.0 - &(lin * 2.0)
    };

    let problem = Problem {
        eval_h: Arc::new(eval_h),
        grad_a: Arc::new(grad_a),
        grad_b: Arc::new(grad_b),
        penalty_a: Penalty::Zero,
        penalty_b: Penalty::column_elastic_net(cfg.ridge, cfg.lasso.clone())?,
        manifold_a: Manifold::stiefel(p, r)?,
        manifold_b: Manifold::euclidean(p, r)?,
        step_a: 100.0 / p as f64,
        step_b: 1.0 / (2.0 * lam_max),
    };
    debug_assert_gradients(&problem);
    Ok(problem)
}

/// Initialize sparse PCA at the top-r right singular vectors of X, with
/// B₀ = A₀.
pub fn spca_init(cfg: &SpcaConfig) -> Result<(Mat, Mat)> {
    let (_, _, vt) = linalg::thin_svd(&cfg.data)?;
    let a0 = vt.slice(ndarray::s![..cfg.components, ..]).t().to_owned();
    Ok((a0.clone(), a0))
}

/// Sparse CCA instance data. `x` and `y` are the centered data sets already
/// divided by √(n−1), so `XᵀY` estimates the cross-covariance.
#[derive(Clone, Debug)]
pub struct SccaConfig {
    pub x: Mat,
    pub y: Mat,
    /// Number of canonical pairs r (1 for the vector problem).
    pub pairs: usize,
    /// Row-sparsity weight on the X-side coefficients.
    pub tau1: f64,
    /// Row-sparsity weight on the Y-side coefficients.
    pub tau2: f64,
    /// Metric regularization: the manifolds use `(1−α)XᵀX + αI`.
    pub alpha: f64,
}

impl SccaConfig {
    pub fn new(x: Mat, y: Mat, pairs: usize, tau1: f64, tau2: f64) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::Dimension(format!(
                "X has {} rows, Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if pairs < 1 || pairs > x.ncols().min(y.ncols()) {
            return Err(Error::InvalidArgument(format!("invalid number of pairs {pairs}")));
        }
        if tau1 < 0.0 || tau2 < 0.0 {
            return Err(Error::InvalidArgument("penalty weights must be nonnegative".into()));
        }
        Ok(SccaConfig { x, y, pairs, tau1, tau2, alpha: 1e-4 })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Regularized metric `(1−α)ZᵀZ + αI` for one data block.
    fn metric_of(&self, z: &Mat) -> Mat {
        let p = z.ncols();
        let mut m = z.t().dot(z) * (1.0 - self.alpha);
        for i in 0..p {
            m[[i, i]] += self.alpha;
        }
        m
    }
}

/// Build the sparse CCA problem: `H(A,B) = −Tr(AᵀXᵀYB)` with row-group
/// penalties and generalized Stiefel constraints under the regularized
/// sample metrics; step sizes t₁ = t₂ = 1.
pub fn scca_problem(cfg: &SccaConfig) -> Result<Problem> {
    let r = cfg.pairs;
    let cross = Arc::new(cfg.x.t().dot(&cfg.y));
    let mx = cfg.metric_of(&cfg.x);
    let my = cfg.metric_of(&cfg.y);
    let man_a = Manifold::generalized_stiefel(mx, r)
        .map_err(|e| Error::Numerical(format!("X metric is not positive definite: {e}")))?;
    let man_b = Manifold::generalized_stiefel(my, r)
        .map_err(|e| Error::Numerical(format!("Y metric is not positive definite: {e}")))?;

    let ce = Arc::clone(&cross);
    let eval_h = move |a: &Mat, b: &Mat| -> f64 {
        let cb = ce.dot(b);
        -a.iter().zip(cb.iter()).map(|(u, v)| u * v).sum::<f64>()
    };
    let cga = Arc::clone(&cross);
    let grad_a = move |_: &Mat, b: &Mat| -> Mat { cga.dot(b) * -1.0 };
    let cgb = Arc::clone(&cross);
    let grad_b = move |a: &Mat, _: &Mat| -> Mat { cgb.t().dot(a) * -1.0 };

    let problem = Problem {
        eval_h: Arc::new(eval_h),
        grad_a: Arc::new(grad_a),
        grad_b: Arc::new(grad_b),
        penalty_a: Penalty::row_l21(cfg.tau1)?,
        penalty_b: Penalty::row_l21(cfg.tau2)?,
        manifold_a: man_a,
        manifold_b: man_b,
        step_a: 1.0,
        step_b: 1.0,
    };
    debug_assert_gradients(&problem);
    Ok(problem)
}

/// Starting pair produced by [`scca_init`].
#[derive(Clone, Debug)]
pub struct SccaInit {
    pub a: Mat,
    pub b: Mat,
    /// True when the truncation zeroed everything and the untruncated
    /// cross-covariance was used instead.
    pub truncation_fallback: bool,
}

/// Sparse CCA initializer: soft-truncate `XᵀY` by zeroing entries smaller in
/// magnitude than the largest diagonal magnitude, take the top-r singular
/// vector pairs of the result, and normalize them onto the two manifolds via
/// the symmetric inverse square root of their metric Grams.
pub fn scca_init(cfg: &SccaConfig) -> Result<SccaInit> {
    let cross = cfg.x.t().dot(&cfg.y);
    let k = cross.nrows().min(cross.ncols());
    let thresh = (0..k).map(|i| cross[[i, i]].abs()).fold(0.0_f64, f64::max);
    let mut truncated = cross.mapv(|v| if v.abs() < thresh { 0.0 } else { v });
    let mut fallback = false;
    if truncated.iter().all(|&v| v == 0.0) {
        truncated = cross;
        fallback = true;
    }
    let (u, _s, vt) = linalg::thin_svd(&truncated)?;
    let r = cfg.pairs;
    let a_raw = u.slice(ndarray::s![.., ..r]).to_owned();
    let b_raw = vt.slice(ndarray::s![..r, ..]).t().to_owned();

    let mx = cfg.metric_of(&cfg.x);
    let my = cfg.metric_of(&cfg.y);
    let gram_a = a_raw.t().dot(&mx.dot(&a_raw));
    let a0 = a_raw.dot(&linalg::inv_sqrt_spd(&gram_a)?);
    let gram_b = b_raw.t().dot(&my.dot(&b_raw));
    let b0 = b_raw.dot(&linalg::inv_sqrt_spd(&gram_b)?);
    Ok(SccaInit { a: a0, b: b0, truncation_fallback: fallback })
}

fn debug_assert_gradients(problem: &Problem) {
    if cfg!(debug_assertions) {
        let mut rng = ChaCha12Rng::seed_from_u64(0x6e61_7267);
        let a = problem
            .manifold_a
            .random_point(&mut rng)
            .expect("random feasible point");
        let b = problem
            .manifold_b
            .random_point(&mut rng)
            .expect("random feasible point");
        let worst = problem
            .verify_gradients(&a, &b, &mut rng)
            .expect("gradient check evaluable");
        debug_assert!(
            worst <= 1e-4,
            "analytic gradients disagree with finite differences: {worst:.3e}"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::randn;
    use crate::solver::{amanpg, SolverOptions};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn spca_objective_value_on_identity_data() {
        // X = I_p, A = B orthonormal: H = ‖I − AAᵀ‖² = p − r
        let p = 6;
        let r = 2;
        let cfg = SpcaConfig::uniform(Mat::eye(p), r, 0.5, 0.1).unwrap();
        let problem = spca_problem(&cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let a = problem.manifold_a.random_point(&mut rng).unwrap();
        let h = (problem.eval_h)(&a, &a);
        assert!((h - (p - r) as f64).abs() < 1e-10);
        // f ≡ 0 on the A block
        assert_eq!(problem.penalty_a.eval(&a).unwrap(), 0.0);
    }

    #[test]
    fn spca_matches_row_sum_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let x = randn(12, 8, &mut rng);
        let cfg = SpcaConfig::uniform(x.clone(), 3, 1.0, 0.1).unwrap();
        let problem = spca_problem(&cfg).unwrap();
        let a = randn(8, 3, &mut rng);
        let b = randn(8, 3, &mut rng);
        let h = (problem.eval_h)(&a, &b);
        // row-sum form Σᵢ ‖xᵢ − ABᵀxᵢ‖²
        let mut total = 0.0;
        for row in x.rows() {
            let xi = row.to_owned();
            let bt_xi = b.t().dot(&xi);
            let rec = a.dot(&bt_xi);
            total += (&xi - &rec).iter().map(|v| v * v).sum::<f64>();
        }
        assert!((h - total).abs() < 1e-10 * total.max(1.0));
    }

    #[test]
    fn spca_gradients_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let x = randn(20, 10, &mut rng);
        let cfg = SpcaConfig::uniform(x, 2, 1.0, 0.1).unwrap();
        let problem = spca_problem(&cfg).unwrap();
        for _ in 0..10 {
            let a = problem.manifold_a.random_point(&mut rng).unwrap();
            let b = randn(10, 2, &mut rng);
            let worst = problem.verify_gradients(&a, &b, &mut rng).unwrap();
            assert!(worst <= 1e-5, "rel err {worst:.3e}");
        }
    }

    #[test]
    fn spca_step_sizes() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let x = randn(30, 14, &mut rng);
        let lam = spectral_norm_sq(&x);
        let (vals, _) = linalg::eigh(&x.t().dot(&x)).unwrap();
        assert!((lam - vals[vals.len() - 1]).abs() <= 1e-6 * lam);
        let cfg = SpcaConfig::uniform(x, 2, 0.5, 0.1).unwrap();
        let problem = spca_problem(&cfg).unwrap();
        assert!((problem.step_a - 100.0 / 14.0).abs() < 1e-12);
        assert!((problem.step_b - 1.0 / (2.0 * lam)).abs() < 1e-9 / lam);
    }

    #[test]
    fn spca_rejects_too_many_components() {
        let x = Mat::eye(4);
        assert!(SpcaConfig::uniform(x, 5, 1.0, 0.1).is_err());
    }

    #[test]
    fn spca_init_is_the_top_right_singular_subspace() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let x = randn(15, 9, &mut rng);
        let cfg = SpcaConfig::uniform(x.clone(), 3, 1.0, 0.1).unwrap();
        let (a0, b0) = spca_init(&cfg).unwrap();
        assert_eq!(a0, b0);
        let gram = a0.t().dot(&a0);
        assert!(linalg::fro(&(&gram - &Mat::eye(3))) < 1e-12);
        // each column must be a right singular vector: XᵀX a = σ² a
        let xtx = x.t().dot(&x);
        for j in 0..3 {
            let col = a0.column(j).to_owned();
            let img = xtx.dot(&col);
            let sigma_sq = col.dot(&img);
            let resid = &img - &(&col * sigma_sq);
            assert!(resid.dot(&resid).sqrt() <= 1e-8 * sigma_sq);
        }
    }

    #[test]
    fn spca_init_beats_random_starts() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let x = randn(50, 30, &mut rng);
        let cfg = SpcaConfig::uniform(x, 2, 1.0, 0.1).unwrap();
        let problem = spca_problem(&cfg).unwrap();
        let (a0, b0) = spca_init(&cfg).unwrap();
        let f0 = problem.objective(&a0, &b0).unwrap();
        for _ in 0..20 {
            let a = problem.manifold_a.random_point(&mut rng).unwrap();
            let b = problem.manifold_b.random_point(&mut rng).unwrap();
            assert!(f0 <= problem.objective(&a, &b).unwrap());
        }
    }

    #[test]
    fn scca_problem_basics() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        // orthogonal blocks → XᵀY = 0 → H ≡ 0
        let x = randn(30, 6, &mut rng);
        let y = Mat::zeros((30, 5));
        let cfg = SccaConfig::new(x, y, 2, 0.1, 0.1).unwrap();
        let problem = scca_problem(&cfg).unwrap();
        let a = problem.manifold_a.random_point(&mut rng).unwrap();
        let b = problem.manifold_b.random_point(&mut rng).unwrap();
        assert_eq!((problem.eval_h)(&a, &b), 0.0);
        assert_eq!(problem.step_a, 1.0);
        assert_eq!(problem.step_b, 1.0);
    }

    #[test]
    fn scca_gradients_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let x = randn(30, 10, &mut rng) / (29.0_f64).sqrt();
        let y = randn(30, 8, &mut rng) / (29.0_f64).sqrt();
        let cfg = SccaConfig::new(x, y, 2, 0.05, 0.05).unwrap();
        let problem = scca_problem(&cfg).unwrap();
        for _ in 0..10 {
            let a = problem.manifold_a.random_point(&mut rng).unwrap();
            let b = problem.manifold_b.random_point(&mut rng).unwrap();
            let worst = problem.verify_gradients(&a, &b, &mut rng).unwrap();
            assert!(worst <= 1e-5, "rel err {worst:.3e}");
        }
    }

    #[test]
    fn scca_vector_penalty_is_l1() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let x = randn(25, 7, &mut rng);
        let y = randn(25, 6, &mut rng);
        let cfg = SccaConfig::new(x, y, 1, 0.3, 0.2).unwrap();
        let problem = scca_problem(&cfg).unwrap();
        let u = randn(7, 1, &mut rng);
        let l1: f64 = 0.3 * u.iter().map(|v| v.abs()).sum::<f64>();
        assert!((problem.penalty_a.eval(&u).unwrap() - l1).abs() < 1e-14);
    }

    #[test]
    fn scca_metric_matches_gram_when_unregularized() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        // n ≥ p full rank with α = 0: metric is exactly XᵀX
        let x = randn(40, 6, &mut rng);
        let y = randn(40, 5, &mut rng);
        let cfg = SccaConfig::new(x.clone(), y, 2, 0.1, 0.1)
            .unwrap()
            .with_alpha(0.0);
        let problem = scca_problem(&cfg).unwrap();
        let m = problem.manifold_a.metric().unwrap();
        assert!(linalg::fro(&(m - &x.t().dot(&x))) < 1e-12);

        // n < p needs α > 0 for positive definiteness
        let x_wide = randn(5, 12, &mut rng);
        let y_wide = randn(5, 11, &mut rng);
        let cfg_wide = SccaConfig::new(x_wide, y_wide, 1, 0.1, 0.1).unwrap();
        assert!(scca_problem(&cfg_wide).is_ok());
    }

    #[test]
    fn scca_init_diagonal_case() {
        // XᵀY diagonal with distinct positive entries: the truncation keeps
        // the dominant diagonal entry, so the top pair is the corresponding
        // coordinate direction.
        let n = 40;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let q = linalg::orthonormalize(&randn(n, 4, &mut rng)).unwrap();
        let scales = [2.0, 1.5, 1.0, 0.5];
        let mut x = Mat::zeros((n, 4));
        let mut y = Mat::zeros((n, 4));
        for j in 0..4 {
            let col = q.column(j).to_owned();
            x.column_mut(j).assign(&(&col * scales[j]));
            y.column_mut(j).assign(&col);
        }
        let cfg = SccaConfig::new(x, y, 1, 0.1, 0.1).unwrap().with_alpha(0.0);
        let init = scca_init(&cfg).unwrap();
        assert!(!init.truncation_fallback);
        let col = init.a.column(0);
        assert!(col[0].abs() > 0.1);
        for i in 1..4 {
            assert!(col[i].abs() < 1e-8);
        }
        // normalization: uᵀ M_x u = 1, vᵀ M_y v = 1
        let m = cfg.metric_of(&cfg.x);
        let gram = init.a.t().dot(&m.dot(&init.a));
        assert!((gram[[0, 0]] - 1.0).abs() < 1e-10);
        let my = cfg.metric_of(&cfg.y);
        let gram_b = init.b.t().dot(&my.dot(&init.b));
        assert!((gram_b[[0, 0]] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scca_init_is_feasible_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let x = randn(50, 25, &mut rng) / (49.0_f64).sqrt();
        let y = randn(50, 23, &mut rng) / (49.0_f64).sqrt();
        let cfg = SccaConfig::new(x, y, 2, 0.1, 0.1).unwrap();
        let init = scca_init(&cfg).unwrap();
        let problem = scca_problem(&cfg).unwrap();
        assert!(problem.manifold_a.check_point(&init.a).unwrap() <= 1e-10);
        assert!(problem.manifold_b.check_point(&init.b).unwrap() <= 1e-10);
    }

    #[test]
    fn scca_init_fallback_flag() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let x = randn(20, 5, &mut rng);
        let y = Mat::zeros((20, 4));
        let cfg = SccaConfig::new(x, y, 1, 0.1, 0.1).unwrap();
        let init = scca_init(&cfg).unwrap();
        assert!(init.truncation_fallback);
        // the returned pair is still feasible
        let problem = scca_problem(&cfg).unwrap();
        assert!(problem.manifold_a.check_point(&init.a).unwrap() <= 1e-10);
        assert!(problem.manifold_b.check_point(&init.b).unwrap() <= 1e-10);
    }

    #[test]
    fn small_scca_solve_reaches_stationarity() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let n = 60;
        let x = randn(n, 12, &mut rng) / ((n - 1) as f64).sqrt();
        let y = randn(n, 10, &mut rng) / ((n - 1) as f64).sqrt();
        let cfg = SccaConfig::new(x, y, 1, 0.05, 0.05).unwrap();
        let problem = scca_problem(&cfg).unwrap();
        let init = scca_init(&cfg).unwrap();
        let opts = SolverOptions::default();
        let (_, _, trace) = amanpg(&problem, &init.a, &init.b, &opts).unwrap();
        assert_eq!(trace.status, crate::solver::Status::StationaryTol);
        let last = trace.iterations.last().unwrap();
        assert!(last.dir_a_sq.max(last.dir_b_sq) <= 1e-8);
        trace.verify_descent(opts.delta).unwrap();
        trace.verify_feasibility(1e-10).unwrap();
    }

    #[test]
    fn config_validation() {
        let x = Mat::eye(4);
        let y = Mat::eye(5);
        assert!(SccaConfig::new(x.clone(), y, 1, 0.1, 0.1).is_err()); // row mismatch
        let y = Mat::eye(4);
        assert!(SccaConfig::new(x.clone(), y.clone(), 0, 0.1, 0.1).is_err());
        assert!(SccaConfig::new(x.clone(), y.clone(), 1, -0.1, 0.1).is_err());
        assert!(SpcaConfig::new(x, 2, 1.0, array![0.1]).is_err()); // lasso length
    }
}
