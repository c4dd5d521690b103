//! Points, tangent spaces, and retractions for the manifolds used by the
//! solvers: Euclidean space, the Stiefel manifold St(p,r) = {X : XᵀX = I_r},
//! and the generalized Stiefel manifold {X : XᵀMX = I_r} for a positive-
//! definite metric matrix M.
//!
//! Tangent spaces are `{D : DᵀMX + XᵀMD = 0}` (with M = I for Stiefel) and
//! `project_tangent` is the orthogonal projection in the Frobenius inner
//! product. Retractions map a tangent vector back onto the manifold while
//! agreeing with `X + ξ` to first order.

use std::sync::Arc;

use ndarray::Array2;
use ndarray_linalg::QR;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Retraction choice for Stiefel-like manifolds.
///
/// `Qr` and `Cayley` are defined only on the plain Stiefel manifold; the
/// generalized Stiefel manifold supports `Polar` (generalized polar
/// decomposition) only. Euclidean space retracts by addition regardless.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Retraction {
    #[default]
    Polar,
    Qr,
    Cayley,
}

/// A manifold descriptor: immutable after construction, cheap to clone, and
/// safe to share across threads. All operations are pure functions.
#[derive(Clone, Debug)]
pub enum Manifold {
    /// Unconstrained p×r matrices.
    Euclidean { rows: usize, cols: usize },
    /// Orthonormal-column matrices, XᵀX = I_r.
    Stiefel { rows: usize, cols: usize },
    /// M-orthonormal columns, XᵀMX = I_r, with M symmetric positive definite.
    GeneralizedStiefel {
        rows: usize,
        cols: usize,
        metric: Arc<Mat>,
        /// Lower Cholesky factor of the metric, cached at construction.
        metric_chol: Arc<Mat>,
    },
}

impl Manifold {
    pub fn euclidean(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Manifold::Euclidean { rows, cols })
    }

    pub fn stiefel(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Manifold::Stiefel { rows, cols })
    }

    /// Build a generalized Stiefel manifold from its metric matrix.
    ///
    /// The metric must be symmetric and positive definite; positive
    /// definiteness is established by a Cholesky factorization, which is
    /// cached on the descriptor for reuse.
    pub fn generalized_stiefel(metric: Mat, cols: usize) -> Result<Self> {
        let (m, n) = metric.dim();
        if m != n {
            return Err(Error::Dimension(format!("metric must be square, got {m}×{n}")));
        }
        check_dims(m, cols)?;
        let scale = linalg::fro(&metric).max(f64::MIN_POSITIVE);
        let asym = linalg::fro(&(&metric - &metric.t()));
        if asym > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "metric is not symmetric (‖M−Mᵀ‖/‖M‖ = {:.3e})",
                asym / scale
            )));
        }
        let chol = linalg::cholesky(&metric)
            .map_err(|_| Error::Numerical("metric is not positive definite".into()))?;
        Ok(Manifold::GeneralizedStiefel {
            rows: m,
            cols,
            metric: Arc::new(metric),
            metric_chol: Arc::new(chol),
        })
    }

    /// (rows, cols) = (p, r) of points on this manifold.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Manifold::Euclidean { rows, cols }
            | Manifold::Stiefel { rows, cols }
            | Manifold::GeneralizedStiefel { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn metric(&self) -> Option<&Mat> {
        match self {
            Manifold::GeneralizedStiefel { metric, .. } => Some(metric),
            _ => None,
        }
    }

    pub fn metric_cholesky(&self) -> Option<&Mat> {
        match self {
            Manifold::GeneralizedStiefel { metric_chol, .. } => Some(metric_chol),
            _ => None,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Manifold::Euclidean { .. })
    }

    /// `M·X` (or `X` itself when the metric is the identity).
    pub(crate) fn metric_times(&self, x: &Mat) -> Mat {
        match self {
            Manifold::GeneralizedStiefel { metric, .. } => metric.dot(x),
            _ => x.clone(),
        }
    }

    fn check_shape(&self, x: &Mat, what: &str) -> Result<()> {
        let (p, r) = self.dims();
        if x.dim() != (p, r) {
            return Err(Error::Dimension(format!(
                "{what} has shape {}×{}, manifold expects {p}×{r}",
                x.dim().0,
                x.dim().1
            )));
        }
        Ok(())
    }

    /// Feasibility residual `‖XᵀMX − I_r‖_F` (0 by convention for Euclidean).
    pub fn check_point(&self, x: &Mat) -> Result<f64> {
        self.check_shape(x, "point")?;
        match self {
            Manifold::Euclidean { .. } => Ok(0.0),
            _ => {
                let (_, r) = self.dims();
                let gram = x.t().dot(&self.metric_times(x));
                Ok(linalg::fro(&(&gram - &Mat::eye(r))))
            }
        }
    }

    /// Orthogonal projection of `g` onto the tangent space at the feasible
    /// point `x` (Frobenius inner product).
    pub fn project_tangent(&self, x: &Mat, g: &Mat) -> Result<Mat> {
        Ok(self.project_tangent_with_mult(x, g)?.0)
    }

    /// Projection plus the symmetric multiplier S with D = G − MXS.
    ///
    /// For Euclidean the multiplier is `None`.
    pub(crate) fn project_tangent_with_mult(&self, x: &Mat, g: &Mat) -> Result<(Mat, Option<Mat>)> {
        self.check_shape(x, "point")?;
        self.check_shape(g, "direction")?;
        match self {
            Manifold::Euclidean { .. } => Ok((g.clone(), None)),
            Manifold::Stiefel { .. } => {
                let s = linalg::sym(&x.t().dot(g));
                Ok((g - &x.dot(&s), Some(s)))
            }
            Manifold::GeneralizedStiefel { .. } => {
                let mx = self.metric_times(x);
                let w = mx.t().dot(&mx);
                let c = linalg::sym(&mx.t().dot(g));
                let s = solve_lyapunov(&w, &c)?;
                Ok((g - &mx.dot(&s), Some(s)))
            }
        }
    }

    /// Retract the tangent vector `xi` at `x` back onto the manifold.
    pub fn retract(&self, x: &Mat, xi: &Mat, kind: Retraction) -> Result<Mat> {
        self.check_shape(x, "point")?;
        self.check_shape(xi, "tangent vector")?;
        match self {
            Manifold::Euclidean { .. } => Ok(x + xi),
            Manifold::Stiefel { .. } => match kind {
                Retraction::Polar => polar_retract(&(x + xi)),
                Retraction::Qr => qr_retract(&(x + xi)),
                Retraction::Cayley => cayley_retract(x, xi),
            },
            Manifold::GeneralizedStiefel { metric, .. } => match kind {
                Retraction::Polar => generalized_polar_retract(&(x + xi), metric),
                _ => Err(Error::InvalidArgument(
                    "generalized Stiefel supports the polar retraction only".into(),
                )),
            },
        }
    }

    /// A random feasible point (orthonormalized Gaussian). Handy for tests
    /// and as a generic starting point.
    pub fn random_point(&self, rng: &mut impl Rng) -> Result<Mat> {
        let (p, r) = self.dims();
        let z = linalg::randn(p, r, rng);
        match self {
            Manifold::Euclidean { .. } => Ok(z),
            Manifold::Stiefel { .. } => linalg::orthonormalize(&z),
            Manifold::GeneralizedStiefel { metric, .. } => {
                let gram = z.t().dot(&metric.dot(&z));
                let n = linalg::inv_sqrt_spd(&gram)?;
                Ok(z.dot(&n))
            }
        }
    }

    /// A random tangent vector at `x` (projected Gaussian).
    pub fn random_tangent(&self, x: &Mat, rng: &mut impl Rng) -> Result<Mat> {
        let (p, r) = self.dims();
        let z = linalg::randn(p, r, rng);
        self.project_tangent(x, &z)
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("manifold dimensions must be positive".into()));
    }
    if cols > rows {
        return Err(Error::InvalidArgument(format!(
            "need cols ≤ rows, got {rows}×{cols}"
        )));
    }
    Ok(())
}

/// Solve `W S + S W = 2 C` for symmetric `S`, with `W` symmetric PSD,
/// via the eigendecomposition of `W`.
fn solve_lyapunov(w: &Mat, c: &Mat) -> Result<Mat> {
    let (vals, q) = linalg::eigh(w)?;
    let max = vals.iter().cloned().fold(0.0_f64, f64::max);
    let c_t = q.t().dot(c).dot(&q);
    let r = vals.len();
    let mut s_t = Array2::zeros((r, r));
    for i in 0..r {
        for j in 0..r {
            let denom = vals[i] + vals[j];
            if denom <= 1e-12 * max.max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical(
                    "tangent projection failed: M X is numerically rank-deficient".into(),
                ));
            }
            s_t[[i, j]] = 2.0 * c_t[[i, j]] / denom;
        }
    }
    Ok(q.dot(&s_t).dot(&q.t()))
}

/// `Y (YᵀY)^{-1/2}`, the polar retraction evaluated at `Y = X + ξ`.
///
/// Computing the Gram matrix directly (instead of `I + ξᵀξ`) keeps the
/// result feasible to machine precision even when `ξ` is only approximately
/// tangent.
fn polar_retract(y: &Mat) -> Result<Mat> {
    let gram = y.t().dot(y);
    let n = linalg::inv_sqrt_spd(&gram)
        .map_err(|_| Error::Numerical("polar retraction undefined: X + ξ is rank-deficient".into()))?;
    Ok(y.dot(&n))
}

/// Q factor of the thin QR of `Y`, with signs fixed so diag(R) > 0.
fn qr_retract(y: &Mat) -> Result<Mat> {
    let (mut q, r) = y.qr()?;
    let scale = r
        .diag()
        .iter()
        .map(|d| d.abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for (j, d) in r.diag().iter().enumerate() {
        if d.abs() <= 1e-12 * scale {
            return Err(Error::Numerical("QR retraction undefined: X + ξ is rank-deficient".into()));
        }
        if *d < 0.0 {
            q.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok(q)
}

/// Cayley transform retraction `(I − W/2)^{-1} (I + W/2) X` with
/// `W = P ξ Xᵀ − X ξᵀ P`, `P = I − XXᵀ/2`. Requires a dense p×p solve, so
/// this is intended for moderate p.
fn cayley_retract(x: &Mat, xi: &Mat) -> Result<Mat> {
    use ndarray_linalg::Factorize;
    let p = x.nrows();
    // P ξ = ξ − X (Xᵀ ξ)/2, so W is assembled from two rank-r products.
    let pxi = xi - &(x.dot(&x.t().dot(xi)) * 0.5);
    let w = pxi.dot(&x.t()) - x.dot(&pxi.t());
    let half = &w * 0.5;
    let lhs = Mat::eye(p) - &half;
    let rhs = (Mat::eye(p) + &half).dot(x);
    let lu = lhs.factorize()?;
    let mut out = Mat::zeros(rhs.dim());
    for (j, col) in rhs.columns().into_iter().enumerate() {
        use ndarray_linalg::Solve;
        let sol = lu.solve(&col.to_owned())?;
        out.column_mut(j).assign(&sol);
    }
    Ok(out)
}

/// Generalized polar retraction: with the thin SVD `Y = Ū Σ V̄ᵀ` and the
/// eigendecomposition `Q Λ Qᵀ = Ūᵀ M Ū`, returns `Ū (Q Λ^{-1/2} Qᵀ) V̄ᵀ`.
fn generalized_polar_retract(y: &Mat, metric: &Mat) -> Result<Mat> {
    let (u, s, vt) = linalg::thin_svd(y)?;
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    if s.iter().any(|&sv| sv <= 1e-12 * smax.max(f64::MIN_POSITIVE)) {
        return Err(Error::Numerical(
            "generalized polar retraction undefined: X + ξ is rank-deficient".into(),
        ));
    }
    let w = u.t().dot(&metric.dot(&u));
    let n = linalg::inv_sqrt_spd(&w)?;
    Ok(u.dot(&n).dot(&vt))
}
