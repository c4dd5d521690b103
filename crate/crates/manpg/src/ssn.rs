//! Tangent-constrained proximal subproblem, solved by a regularized
//! semi-smooth Newton (SSN) method on the dual residual.
//!
//! The subproblem at a feasible point X with gradient G is
//!
//! ```text
//!   min_D ⟨G, D⟩ + ‖D‖²_F/(2t) + f(X + D)   s.t.  DᵀMX + XᵀMD = 0,
//! ```
//!
//! whose KKT system reduces to finding a symmetric multiplier Λ with
//! `E(Λ) = D(Λ)ᵀMX + XᵀMD(Λ) = 0`, where
//! `D(Λ) = prox_{tf}(B(Λ)) − X` and `B(Λ) = X − t(G − 2MXΛ)`.
//! E is monotone and semi-smooth, so a regularized Newton iteration with a
//! residual-decrease line search converges globally; a small fixed-point
//! step serves as a safeguard when the line search fails.
//!
//! Multipliers are handled in packed form: `svec` stacks the lower triangle
//! of a symmetric matrix column by column, `smat` is its inverse.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::manifold::Manifold;
use crate::penalty::Penalty;

/// Pack a symmetric r×r matrix into its lower triangle, column-major:
/// `[[a,b],[b,c]] → (a, b, c)`.
pub fn svec(m: &Mat) -> Result<Array1<f64>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::Dimension(format!("svec needs a square matrix, got {r}×{c}")));
    }
    let scale = 1.0 + m.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    let mut out = Array1::zeros(r * (r + 1) / 2);
    let mut k = 0;
    for j in 0..r {
        for i in j..r {
            if (m[[i, j]] - m[[j, i]]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric at ({i},{j})"
                )));
            }
            out[k] = m[[i, j]];
            k += 1;
        }
    }
    Ok(out)
}

/// Inverse of [`svec`]; the dimension r is recovered from the length.
pub fn smat(v: &Array1<f64>) -> Result<Mat> {
    let len = v.len();
    let r = ((((8 * len + 1) as f64).sqrt() as usize) - 1) / 2;
    if r * (r + 1) / 2 != len {
        return Err(Error::Dimension(format!(
            "length {len} is not a triangular number"
        )));
    }
    let mut m = Mat::zeros((r, r));
    let mut k = 0;
    for j in 0..r {
        for i in j..r {
            m[[i, j]] = v[k];
            m[[j, i]] = v[k];
            k += 1;
        }
    }
    Ok(m)
}

/// Weights of the duplication map on packed coordinates: 1 for diagonal
/// entries, 2 for off-diagonal ones. `⟨a, b⟩_w = Σ wᵢaᵢbᵢ` equals the
/// Frobenius inner product of the corresponding symmetric matrices.
pub fn duplication_weights(r: usize) -> Array1<f64> {
    let mut w = Array1::zeros(r * (r + 1) / 2);
    let mut k = 0;
    for j in 0..r {
        for i in j..r {
            w[k] = if i == j { 1.0 } else { 2.0 };
            k += 1;
        }
    }
    w
}

/// Inputs of one tangent proximal subproblem.
#[derive(Clone)]
pub struct SubproblemInput<'a> {
    /// Stiefel or generalized Stiefel manifold (Euclidean subproblems have a
    /// direct prox solution and are rejected here).
    pub manifold: &'a Manifold,
    /// Feasible base point X.
    pub point: &'a Mat,
    /// Euclidean gradient of the smooth term at X.
    pub grad: &'a Mat,
    /// Proximal step size t > 0.
    pub step: f64,
    pub penalty: &'a Penalty,
    /// Tolerance on ‖E(Λ)‖_F.
    pub tol: f64,
    /// Newton iteration cap.
    pub max_newton: usize,
    /// Packed multiplier to start from (zero when absent).
    pub warm_start: Option<&'a Array1<f64>>,
}

impl<'a> SubproblemInput<'a> {
    pub fn new(
        manifold: &'a Manifold,
        point: &'a Mat,
        grad: &'a Mat,
        step: f64,
        penalty: &'a Penalty,
    ) -> Self {
        SubproblemInput {
            manifold,
            point,
            grad,
            step,
            penalty,
            tol: 1e-5,
            max_newton: 100,
            warm_start: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_newton(mut self, max_newton: usize) -> Self {
        self.max_newton = max_newton;
        self
    }

    pub fn with_warm_start(mut self, warm: Option<&'a Array1<f64>>) -> Self {
        self.warm_start = warm;
        self
    }
}

/// Outcome of a subproblem solve.
#[derive(Clone, Debug)]
pub struct SubproblemResult {
    /// Tangent direction D (up to the dual residual tolerance).
    pub direction: Mat,
    /// Symmetric multiplier, packed lower triangle.
    pub multiplier: Array1<f64>,
    /// ‖E(Λ)‖_F at the returned multiplier.
    pub residual: f64,
    /// Newton iterations taken.
    pub iters: usize,
    pub converged: bool,
    /// ‖E‖_F after each iteration, starting with the initial residual.
    pub residual_history: Vec<f64>,
    /// Number of safeguard (fixed-point) steps taken.
    pub fallback_steps: usize,
}

impl SubproblemResult {
    pub fn multiplier_matrix(&self) -> Mat {
        smat(&self.multiplier).expect("stored multiplier is packed symmetric")
    }
}

struct Context<'a> {
    input: &'a SubproblemInput<'a>,
    /// M·X, cached.
    mx: Mat,
    /// X − tG.
    b0: Mat,
    packed_len: usize,
}

impl<'a> Context<'a> {
    fn new(input: &'a SubproblemInput<'a>) -> Result<Self> {
        if input.manifold.is_euclidean() {
            return Err(Error::InvalidArgument(
                "Euclidean subproblems reduce to a prox step; the Newton solver needs a constrained manifold".into(),
            ));
        }
        if input.step <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {}",
                input.step
            )));
        }
        let feas = input.manifold.check_point(input.point)?;
        if feas > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "base point is infeasible (residual {feas:.3e})"
            )));
        }
        let (p, r) = input.manifold.dims();
        if input.grad.dim() != (p, r) {
            return Err(Error::Dimension(format!(
                "gradient has shape {:?}, expected ({p}, {r})",
                input.grad.dim()
            )));
        }
        let mx = input.manifold.metric_times(input.point);
        let b0 = input.point - &(input.grad * input.step);
        Ok(Context {
            input,
            mx,
            b0,
            packed_len: r * (r + 1) / 2,
        })
    }

    fn bmat(&self, lambda: &Mat) -> Mat {
        &self.b0 + &(self.mx.dot(lambda) * (2.0 * self.input.step))
    }

    /// D(Λ), E(Λ), and ‖E‖_F at once, reusing B(Λ).
    fn evaluate(&self, lambda: &Mat) -> Result<(Mat, Mat, Mat, f64)> {
        let b = self.bmat(lambda);
        let d = self.input.penalty.prox(&b, self.input.step)? - self.input.point;
        let e = linalg::sym(&(d.t().dot(&self.mx) + self.mx.t().dot(&d)));
        let res = linalg::fro(&e);
        Ok((b, d, e, res))
    }

    /// Directional derivative of svec(E) along the packed direction `d`,
    /// evaluated with the prox Jacobian at B(Λ).
    fn matvec(&self, b_at_lambda: &Mat, d: &Array1<f64>) -> Result<Array1<f64>> {
        let dlam = smat(d)?;
        let db = self.mx.dot(&dlam) * (2.0 * self.input.step);
        let dd = self.input.penalty.jacobian_apply(b_at_lambda, self.input.step, &db)?;
        let de = linalg::sym(&(dd.t().dot(&self.mx) + self.mx.t().dot(&dd)));
        svec(&de)
    }

    /// Solve (𝒢 + ηI) d = rhs. Dense for packed sizes up to 21 (r ≤ 6); for
    /// larger r, conjugate gradients in the duplication-weighted inner
    /// product, where the operator is self-adjoint positive semi-definite.
    fn solve_newton_system(&self, b_at_lambda: &Mat, eta: f64, rhs: &Array1<f64>) -> Result<Array1<f64>> {
        let m = self.packed_len;
        if m <= 21 {
            let mut g = Mat::zeros((m, m));
            for i in 0..m {
                let mut unit = Array1::zeros(m);
                unit[i] = 1.0;
                let col = self.matvec(b_at_lambda, &unit)?;
                g.column_mut(i).assign(&col);
                g[[i, i]] += eta;
            }
            linalg::solve(&g, rhs)
        } else {
            // Multiplying (𝒢 + ηI)d = rhs by the duplication weights W gives
            // (W𝒢 + ηW)d = W·rhs with a symmetric positive-definite matrix.
            let w = duplication_weights(smat(rhs)?.nrows());
            let apply = |d: &Array1<f64>| -> Result<Array1<f64>> {
                let gd = self.matvec(b_at_lambda, d)?;
                Ok((gd + &(d * eta)) * &w)
            };
            let wrhs = rhs * &w;
            let mut x = Array1::zeros(m);
            let mut resid = wrhs.clone();
            let mut p = resid.clone();
            let mut rs = resid.dot(&resid);
            let tol = 1e-24 * rs.max(f64::MIN_POSITIVE);
            for _ in 0..(10 * m) {
                if rs <= tol {
                    break;
                }
                let ap = apply(&p)?;
                let denom = p.dot(&ap);
                if denom <= 0.0 {
                    break;
                }
                let alpha = rs / denom;
                x = x + &(&p * alpha);
                resid = resid - &(&ap * alpha);
                let rs_new = resid.dot(&resid);
                p = &resid + &(&p * (rs_new / rs));
                rs = rs_new;
            }
            Ok(x)
        }
    }
}

/// The dual residual E(Λ) = D(Λ)ᵀMX + XᵀMD(Λ) (symmetric by construction).
pub fn residual_e(lambda: &Mat, input: &SubproblemInput) -> Result<Mat> {
    let ctx = Context::new(input)?;
    let (_, _, e, _) = ctx.evaluate(lambda)?;
    Ok(e)
}

/// Directional derivative of `svec(residual_e)` along the packed symmetric
/// direction `d`, using the selected prox Jacobian (matrix-free; matches
/// central finite differences of [`residual_e`] away from prox tie sets).
pub fn jacobian_matvec(lambda: &Mat, d: &Array1<f64>, input: &SubproblemInput) -> Result<Array1<f64>> {
    let ctx = Context::new(input)?;
    let b = ctx.bmat(lambda);
    ctx.matvec(&b, d)
}

/// Solve the tangent proximal subproblem.
///
/// With a zero penalty the solution is the closed-form Riemannian gradient
/// step `D = −t·Proj_{T_X}(G)`. Otherwise the regularized semi-smooth
/// Newton iteration runs on the dual residual until `‖E(Λ)‖_F ≤ tol` or the
/// iteration cap is hit (in which case `converged` is false and the best
/// iterate is returned).
pub fn solve(input: &SubproblemInput) -> Result<SubproblemResult> {
    let ctx = Context::new(input)?;
    let (_, r) = input.manifold.dims();

    if input.penalty.is_zero() {
        let (proj, mult) = input
            .manifold
            .project_tangent_with_mult(input.point, input.grad)?;
        let s = mult.expect("constrained manifolds always produce a multiplier");
        let direction = proj * (-input.step);
        return Ok(SubproblemResult {
            direction,
            multiplier: svec(&(s * 0.5))?,
            residual: 0.0,
            iters: 0,
            converged: true,
            residual_history: Vec::new(),
            fallback_steps: 0,
        });
    }

    let mut lambda = match input.warm_start {
        Some(v) => {
            if v.len() != ctx.packed_len {
                return Err(Error::Dimension(format!(
                    "warm start has length {}, expected {}",
                    v.len(),
                    ctx.packed_len
                )));
            }
            smat(v)?
        }
        None => Mat::zeros((r, r)),
    };

    let (mut b, mut d, mut e, mut res) = ctx.evaluate(&lambda)?;
    let mut history = vec![res];
    let mut iters = 0;
    let mut fallback_steps = 0;

    while res > input.tol && iters < input.max_newton {
        if !res.is_finite() {
            return Err(Error::Numerical("subproblem residual is not finite".into()));
        }
        let eta = res.min(0.1);
        let rhs = -svec(&e)?;
        let newton_dir = ctx.solve_newton_system(&b, eta, &rhs)?;
        let dir_mat = smat(&newton_dir)?;

        let mut accepted = false;
        let mut beta = 1.0;
        for _ in 0..21 {
            let trial = &lambda + &(&dir_mat * beta);
            let (tb, td, te, tres) = ctx.evaluate(&trial)?;
            if tres <= (1.0 - 1e-4 * beta) * res {
                lambda = trial;
                b = tb;
                d = td;
                e = te;
                res = tres;
                accepted = true;
                break;
            }
            beta *= 0.5;
        }
        if !accepted {
            // monotone-operator safeguard
            lambda = &lambda - &(&e * 0.1);
            let (nb, nd, ne, nres) = ctx.evaluate(&lambda)?;
            b = nb;
            d = nd;
            e = ne;
            res = nres;
            fallback_steps += 1;
        }
        history.push(res);
        iters += 1;
    }

    if !res.is_finite() {
        return Err(Error::Numerical("subproblem residual is not finite".into()));
    }

    Ok(SubproblemResult {
        direction: d,
        multiplier: svec(&linalg::sym(&lambda))?,
        residual: res,
        iters,
        converged: res <= input.tol,
        residual_history: history,
        fallback_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::randn;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn svec_smat_examples() {
        let m = array![[1.0, 2.0], [2.0, 5.0]];
        let v = svec(&m).unwrap();
        assert_eq!(v, array![1.0, 2.0, 5.0]);
        assert_eq!(smat(&v).unwrap(), m);

        let one = svec(&array![[7.0]]).unwrap();
        assert_eq!(one, array![7.0]);

        assert!(svec(&array![[0.0, 1.0], [0.0, 0.0]]).is_err());
        assert!(smat(&array![1.0, 2.0]).is_err());
    }

    #[test]
    fn duplication_matrix_structure() {
        // U₂ = [[1,0,0],[0,1,0],[0,1,0],[0,0,1]]: vec(smat(d)) (column-major)
        // must equal U₂·d for every packed d.
        let u2 = array![
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0]
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..20 {
            let d = Array1::from_shape_fn(3, |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let m = smat(&d).unwrap();
            // column-major vec
            let vec_m = array![m[[0, 0]], m[[1, 0]], m[[0, 1]], m[[1, 1]]];
            let ud = u2.dot(&d);
            assert!(crate::linalg::fro(&(&vec_m.clone().insert_axis(ndarray::Axis(1))
                - &ud.insert_axis(ndarray::Axis(1))))
                < 1e-15);
        }
        assert_eq!(duplication_weights(2), array![1.0, 2.0, 1.0]);
    }

    fn random_instance(
        p: usize,
        r: usize,
        generalized: bool,
        rng: &mut ChaCha12Rng,
    ) -> (Manifold, Mat, Mat) {
        let man = if generalized {
            let b = randn(p, p, rng);
            let metric = b.t().dot(&b) * (1.0 / p as f64) + Mat::eye(p);
            Manifold::generalized_stiefel(metric, r).unwrap()
        } else {
            Manifold::stiefel(p, r).unwrap()
        };
        let x = man.random_point(rng).unwrap();
        let g = randn(p, r, rng) * 0.5;
        (man, x, g)
    }

    #[test]
    fn residual_examples() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let (man, x, _) = random_instance(6, 2, false, &mut rng);

        // zero penalty, zero gradient, Λ = 0 → D = 0, E = 0
        let zero_g = Mat::zeros((6, 2));
        let pen = Penalty::Zero;
        let input = SubproblemInput::new(&man, &x, &zero_g, 1.0, &pen);
        let e = residual_e(&Mat::zeros((2, 2)), &input).unwrap();
        assert!(crate::linalg::fro(&e) < 1e-14);

        // tangent gradient (XᵀG = 0 radial part): E(0) = −t(GᵀX + XᵀG) = 0
        let g = man.random_tangent(&x, &mut rng).unwrap();
        let g = &g - &x.dot(&x.t().dot(&g)); // enforce XᵀG = 0 exactly-ish
        let input = SubproblemInput::new(&man, &x, &g, 1.0, &pen);
        let e = residual_e(&Mat::zeros((2, 2)), &input).unwrap();
        assert!(crate::linalg::fro(&e) < 1e-12);
    }

    #[test]
    fn residual_matches_brute_force_recomputation() {
        // direct elementwise recomputation of the defining formula
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let (man, x, g) = random_instance(6, 2, false, &mut rng);
        let pen = Penalty::row_l21(0.3).unwrap();
        let t = 0.8;
        let lam = {
            let a = randn(2, 2, &mut rng);
            crate::linalg::sym(&a)
        };
        let input = SubproblemInput::new(&man, &x, &g, t, &pen);
        let e = residual_e(&lam, &input).unwrap();

        // brute force: B = X − t(G − 2XΛ); rowwise shrink; E = DᵀX + XᵀD
        let mut bf_b = Mat::zeros((6, 2));
        for i in 0..6 {
            for j in 0..2 {
                let mut xl = 0.0;
                for k in 0..2 {
                    xl += x[[i, k]] * lam[[k, j]];
                }
                bf_b[[i, j]] = x[[i, j]] - t * (g[[i, j]] - 2.0 * xl);
            }
        }
        let mut bf_d = Mat::zeros((6, 2));
        for i in 0..6 {
            let norm = (bf_b[[i, 0]].powi(2) + bf_b[[i, 1]].powi(2)).sqrt();
            let scale = if norm > t * 0.3 { 1.0 - t * 0.3 / norm } else { 0.0 };
            for j in 0..2 {
                bf_d[[i, j]] = bf_b[[i, j]] * scale - x[[i, j]];
            }
        }
        let mut bf_e = Mat::zeros((2, 2));
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for i in 0..6 {
                    s += bf_d[[i, a]] * x[[i, b]] + x[[i, a]] * bf_d[[i, b]];
                }
                bf_e[[a, b]] = s;
            }
        }
        assert!(crate::linalg::fro(&(&e - &bf_e)) < 1e-12);
    }

    #[test]
    fn jacobian_matvec_zero_penalty_is_scaled_identity() {
        // pen = Zero on Stiefel: dE = 4t·dΛ, so the packed operator is 4t·I
        // and ⟨d, 𝒢d⟩ in the duplication-weighted inner product is 4t‖dΛ‖²_F.
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let (man, x, g) = random_instance(5, 2, false, &mut rng);
        let pen = Penalty::Zero;
        let t = 0.7;
        let input = SubproblemInput::new(&man, &x, &g, t, &pen);
        let lam = Mat::zeros((2, 2));
        let w = duplication_weights(2);
        for _ in 0..10 {
            let d = Array1::from_shape_fn(3, |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let gd = jacobian_matvec(&lam, &d, &input).unwrap();
            assert!((&gd - &(&d * (4.0 * t))).iter().all(|v| v.abs() < 1e-12));
            let quad: f64 = w
                .iter()
                .zip(d.iter())
                .zip(gd.iter())
                .map(|((wi, di), gi)| wi * di * gi)
                .sum();
            let dlam = smat(&d).unwrap();
            assert!((quad - 4.0 * t * crate::linalg::fro_sq(&dlam)).abs() < 1e-12);
        }

        // linearity: d = 0 → 0
        let zero = jacobian_matvec(&lam, &Array1::zeros(3), &input).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn jacobian_matvec_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let h = 1e-6;
        for generalized in [false, true] {
            let (man, x, g) = random_instance(6, 2, generalized, &mut rng);
            let pen = Penalty::row_l21(0.25).unwrap();
            let input = SubproblemInput::new(&man, &x, &g, 0.9, &pen);
            let mut checked = 0;
            while checked < 20 {
                let lam = crate::linalg::sym(&(randn(2, 2, &mut rng) * 0.2));
                let d = Array1::from_shape_fn(3, |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
                // skip prox tie regions
                let b = {
                    let mx = man.metric_times(&x);
                    &x - &(&g * 0.9) + &(mx.dot(&lam) * (2.0 * 0.9))
                };
                let near_tie = b.rows().into_iter().any(|row| {
                    let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (n - 0.9 * 0.25).abs() < 1e-3
                });
                if near_tie {
                    continue;
                }
                let jv = jacobian_matvec(&lam, &d, &input).unwrap();
                let ep = residual_e(&(&lam + &(&smat(&d).unwrap() * h)), &input).unwrap();
                let em = residual_e(&(&lam - &(&smat(&d).unwrap() * h)), &input).unwrap();
                let fd = (svec(&ep).unwrap() - svec(&em).unwrap()) / (2.0 * h);
                let num = (&jv - &fd).iter().map(|v| v * v).sum::<f64>().sqrt();
                let den = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                assert!(num / den <= 1e-5, "rel err {:.3e}", num / den);
                checked += 1;
            }
        }
    }

    #[test]
    fn jacobian_operator_is_psd_in_weighted_inner_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let (man, x, g) = random_instance(7, 3, true, &mut rng);
        let pens = [
            Penalty::Zero,
            Penalty::l1(0.2).unwrap(),
            Penalty::row_l21(0.2).unwrap(),
            Penalty::column_elastic_net(0.4, Array1::from_elem(3, 0.15)).unwrap(),
        ];
        let w = duplication_weights(3);
        for pen in &pens {
            let input = SubproblemInput::new(&man, &x, &g, 0.8, pen);
            for _ in 0..250 {
                let lam = crate::linalg::sym(&(randn(3, 3, &mut rng) * 0.3));
                let d = Array1::from_shape_fn(6, |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
                let gd = jacobian_matvec(&lam, &d, &input).unwrap();
                let quad: f64 = w
                    .iter()
                    .zip(d.iter())
                    .zip(gd.iter())
                    .map(|((wi, di), gi)| wi * di * gi)
                    .sum();
                assert!(quad >= -1e-12, "{pen:?}: quad {quad:.3e}");
            }
        }
    }

    #[test]
    fn zero_penalty_closed_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let (man, x, _) = random_instance(6, 2, false, &mut rng);
        // pure normal gradient G = X·S → projection is zero → D = 0
        let s = crate::linalg::sym(&randn(2, 2, &mut rng));
        let g = x.dot(&s);
        let pen = Penalty::Zero;
        let input = SubproblemInput::new(&man, &x, &g, 0.5, &pen);
        let out = solve(&input).unwrap();
        assert!(out.converged);
        assert_eq!(out.iters, 0);
        assert!(crate::linalg::fro(&out.direction) < 1e-12);
        // multiplier recovers S/2
        assert!(crate::linalg::fro(&(&out.multiplier_matrix() - &(&s * 0.5))) < 1e-12);
    }

    #[test]
    fn newton_solve_reaches_tolerance_and_kkt_holds() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for generalized in [false, true] {
            for (p, r) in [(6, 1), (8, 2)] {
                let (man, x, g) = random_instance(p, r, generalized, &mut rng);
                let pen = Penalty::row_l21(0.2).unwrap();
                let input = SubproblemInput::new(&man, &x, &g, 1.0, &pen).with_tol(1e-9);
                let out = solve(&input).unwrap();
                assert!(out.converged, "residual {:.3e}", out.residual);
                assert!(out.residual <= 1e-9);

                // D = prox(B(Λ)) − X must hold exactly for the returned pair
                let lam = out.multiplier_matrix();
                let mx = man.metric_times(&x);
                let b = &x - &(&g * 1.0) + &(mx.dot(&lam) * 2.0);
                let d_re = pen.prox(&b, 1.0).unwrap() - &x;
                assert!(crate::linalg::fro(&(&d_re - &out.direction)) < 1e-12);

                // primal tangency residual equals the dual residual
                let e = out.direction.t().dot(&mx) + mx.t().dot(&out.direction);
                assert!((crate::linalg::fro(&e) - out.residual).abs() < 1e-10);

                // ‖E‖ decreases across accepted Newton steps
                if out.fallback_steps == 0 {
                    for w in out.residual_history.windows(2) {
                        assert!(w[1] <= w[0] + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn descent_property_of_converged_direction() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let (man, x, g) = random_instance(8, 2, true, &mut rng);
        let pen = Penalty::row_l21(0.15).unwrap();
        let t = 1.0;
        let input = SubproblemInput::new(&man, &x, &g, t, &pen).with_tol(1e-11);
        let out = solve(&input).unwrap();
        assert!(out.converged);
        let d = &out.direction;
        let dsq = crate::linalg::fro_sq(d);
        let pen_x = pen.eval(&x).unwrap();
        for alpha in [0.25, 0.5, 1.0] {
            // quadratic model of the smooth part plus the penalty
            let model = alpha * g.iter().zip(d.iter()).map(|(a, b)| a * b).sum::<f64>()
                + alpha * alpha * dsq / (2.0 * t)
                + pen.eval(&(&x + &(d * alpha))).unwrap();
            assert!(
                model <= pen_x - alpha / (2.0 * t) * dsq + 1e-8,
                "alpha {alpha}: model {model:.6e} vs bound {:.6e}",
                pen_x - alpha / (2.0 * t) * dsq
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let man = Manifold::euclidean(4, 2).unwrap();
        let x = randn(4, 2, &mut rng);
        let g = randn(4, 2, &mut rng);
        let pen = Penalty::l1(0.1).unwrap();
        assert!(solve(&SubproblemInput::new(&man, &x, &g, 1.0, &pen)).is_err());

        let man = Manifold::stiefel(4, 2).unwrap();
        let x = man.random_point(&mut rng).unwrap();
        assert!(solve(&SubproblemInput::new(&man, &x, &g, 0.0, &pen)).is_err());
        // infeasible base point
        let bad = &x * 2.0;
        assert!(solve(&SubproblemInput::new(&man, &bad, &g, 1.0, &pen)).is_err());
    }
}
