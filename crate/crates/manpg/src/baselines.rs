//! Sparse PCA baselines sharing the solver trace format: alternating
//! minimization (AMA) with a FISTA inner solver, proximal alternating
//! linearized minimization (PALM), and variable projection (VP).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::penalty::Penalty;
use crate::problems::{spca_problem, SpcaConfig};
use crate::solver::{IterRecord, SolverTrace, Status};

#[derive(Clone, Debug)]
pub struct BaselineOptions {
    pub max_iter: usize,
    /// Stop when |F_{k+1} − F_k| falls below this.
    pub obj_change_tol: f64,
    /// When set, the change rule fires only once F ≤ target.
    pub obj_target: Option<f64>,
    /// Iteration cap of the inner FISTA solve (AMA only).
    pub fista_max_iter: usize,
    /// Step-change tolerance of the inner FISTA solve (AMA only).
    pub fista_tol: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions {
            max_iter: 10_000,
            obj_change_tol: 1e-5,
            obj_target: None,
            fista_max_iter: 500,
            fista_tol: 1e-8,
        }
    }
}

impl BaselineOptions {
    /// Defaults for AMA, whose outer iterations carry an inner solve.
    pub fn ama() -> Self {
        BaselineOptions {
            max_iter: 1000,
            ..Default::default()
        }
    }
}

/// Solution of `max Tr(AᵀW)` over `AᵀA = I`: the orthonormal polar factor
/// `UVᵀ` of the thin SVD of `W`.
pub fn procrustes(w: &Mat) -> Result<Mat> {
    linalg::polar_factor(w)
}

/// Smooth convex quadratic handed to [`fista`]: value, gradient, and a
/// Lipschitz constant of the gradient.
pub struct QuadraticSpec<'a> {
    pub value: &'a dyn Fn(&Mat) -> f64,
    pub grad: &'a dyn Fn(&Mat) -> Mat,
    pub lipschitz: f64,
}

/// Accelerated proximal gradient for `quad(x) + pen(x)`.
///
/// Iterates until the step shrinks below `tol` (relative to the iterate
/// scale) or `max_iter`. Returns the better of the final iterate and the
/// starting point, so callers alternating over blocks cannot regress.
pub fn fista(
    quad: &QuadraticSpec,
    pen: &Penalty,
    x0: &Mat,
    max_iter: usize,
    tol: f64,
) -> Result<(Mat, usize)> {
    if quad.lipschitz <= 0.0 {
        return Err(Error::InvalidArgument("Lipschitz constant must be positive".into()));
    }
    let step = 1.0 / quad.lipschitz;
    let mut x_prev = x0.clone();
    let mut y = x0.clone();
    let mut momentum = 1.0_f64;
    let mut iters = 0;
    for k in 1..=max_iter {
        let g = (quad.grad)(&y);
        let x = pen.prox(&(&y - &(&g * step)), step)?;
        let momentum_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let diff = &x - &x_prev;
        y = &x + &(&diff * ((momentum - 1.0) / momentum_next));
        let moved = linalg::fro(&diff);
        let scale = linalg::fro(&x_prev).max(1.0);
        x_prev = x;
        momentum = momentum_next;
        iters = k;
        if moved <= tol * scale {
            break;
        }
    }
    let f0 = (quad.value)(x0) + pen.eval(x0)?;
    let f1 = (quad.value)(&x_prev) + pen.eval(&x_prev)?;
    if f1 <= f0 {
        Ok((x_prev, iters))
    } else {
        Ok((x0.clone(), iters))
    }
}

struct LoopState {
    trace: SolverTrace,
    f_current: f64,
}

impl LoopState {
    fn new(f0: f64) -> Self {
        LoopState {
            trace: SolverTrace {
                initial_objective: f0,
                iterations: Vec::new(),
                status: Status::MaxIter,
                mode: crate::solver::Mode::GaussSeidel,
                max_feasibility_a: 0.0,
                max_feasibility_b: 0.0,
                ssn_failures: 0,
            },
            f_current: f0,
        }
    }

    fn push(
        &mut self,
        k: usize,
        f_mid: f64,
        f_next: f64,
        step_a_sq: f64,
        step_b_sq: f64,
        inner_iters: usize,
        feas_a: f64,
    ) {
        self.trace.max_feasibility_a = self.trace.max_feasibility_a.max(feas_a);
        self.trace.iterations.push(IterRecord {
            iter: k,
            objective_mid: f_mid,
            objective: f_next,
            dir_a_sq: step_a_sq,
            dir_b_sq: step_b_sq,
            alpha_a: 1.0,
            alpha_b: 1.0,
            ssn_iters_a: 0,
            ssn_iters_b: inner_iters,
        });
    }

    fn should_stop(&mut self, f_prev: f64, opts: &BaselineOptions) -> bool {
        let reached = opts.obj_target.map_or(true, |t| self.f_current <= t);
        if (f_prev - self.f_current).abs() < opts.obj_change_tol && reached {
            self.trace.status = Status::ObjChangeTol;
            return true;
        }
        false
    }
}

fn stiefel_residual(a: &Mat) -> f64 {
    let r = a.ncols();
    linalg::fro(&(&a.t().dot(a) - &Mat::eye(r)))
}

/// Alternating minimization: exact Procrustes A-step, FISTA B-step on the
/// elastic-net regression with the ridge kept in the smooth part. The inner
/// solve warm-starts from the previous B.
pub fn ama_spca(
    cfg: &SpcaConfig,
    init: (&Mat, &Mat),
    opts: &BaselineOptions,
) -> Result<(Mat, Mat, SolverTrace)> {
    let problem = spca_problem(cfg)?;
    let x = Arc::new(cfg.data.clone());
    let lam_max = 1.0 / (2.0 * problem.step_b); // spectral norm of XᵀX, reused
    let ridge = cfg.ridge;
    let pen_lasso = Penalty::column_elastic_net(0.0, cfg.lasso.clone())?;

    let mut a = init.0.clone();
    let mut b = init.1.clone();
    let mut state = LoopState::new(problem.objective(&a, &b)?);

    for k in 0..opts.max_iter {
        let f_prev = state.f_current;

        // A-step: max Tr(AᵀXᵀXB) over orthonormal A
        let w = x.t().dot(&x.dot(&b));
        a = procrustes(&w)?;
        let f_mid = problem.objective(&a, &b)?;

        // B-step: smooth part H(A,·) + ridge, prox on the weighted lasso
        let xa = x.dot(&a);
        let lin = x.t().dot(&xa); // constant term of the gradient
        let xq = Arc::clone(&x);
        let grad = move |bm: &Mat| -> Mat {
            xq.t().dot(&xq.dot(bm)) * 2.0 - &(&lin * 2.0) + &(bm * (2.0 * ridge))
        };
        let a_fixed = a.clone();
        let hval = &problem.eval_h;
        let value = move |bm: &Mat| -> f64 {
            hval(&a_fixed, bm) + ridge * linalg::fro_sq(bm)
        };
        let quad = QuadraticSpec {
            value: &value,
            grad: &grad,
            lipschitz: 2.0 * lam_max + 2.0 * ridge,
        };
        let (b_next, inner) = fista(&quad, &pen_lasso, &b, opts.fista_max_iter, opts.fista_tol)?;
        let step_b_sq = linalg::fro_sq(&(&b_next - &b));
        let step_a_sq = 0.0; // A-step distance is not tracked for exact steps
        b = b_next;
        state.f_current = problem.objective(&a, &b)?;
        state.push(k, f_mid, state.f_current, step_a_sq, step_b_sq, inner, stiefel_residual(&a));
        if state.should_stop(f_prev, opts) {
            break;
        }
    }
    Ok((a, b, state.trace))
}

/// Proximal alternating linearized minimization: polar projection A-step
/// with t₁ = 1, elastic-net prox B-step with t₂ = 1/(2λ_max(XᵀX)).
pub fn palm_spca(
    cfg: &SpcaConfig,
    init: (&Mat, &Mat),
    opts: &BaselineOptions,
) -> Result<(Mat, Mat, SolverTrace)> {
    alternating_linearized(cfg, init, opts, false)
}

/// Variable projection: exact Procrustes A-step (as AMA), PALM's prox
/// B-step.
pub fn vp_spca(
    cfg: &SpcaConfig,
    init: (&Mat, &Mat),
    opts: &BaselineOptions,
) -> Result<(Mat, Mat, SolverTrace)> {
    alternating_linearized(cfg, init, opts, true)
}

fn alternating_linearized(
    cfg: &SpcaConfig,
    init: (&Mat, &Mat),
    opts: &BaselineOptions,
    exact_a_step: bool,
) -> Result<(Mat, Mat, SolverTrace)> {
    let problem = spca_problem(cfg)?;
    let x = Arc::new(cfg.data.clone());
    let t1 = 1.0;
    let t2 = problem.step_b;
    let pen_full = problem.penalty_b.clone();

    let mut a = init.0.clone();
    let mut b = init.1.clone();
    let mut state = LoopState::new(problem.objective(&a, &b)?);

    for k in 0..opts.max_iter {
        let f_prev = state.f_current;

        a = if exact_a_step {
            let w = x.t().dot(&x.dot(&b));
            procrustes(&w)?
        } else {
            let step = &a - &((problem.grad_a)(&a, &b) * t1);
            linalg::polar_factor(&step)?
        };
        let f_mid = problem.objective(&a, &b)?;

        let gb = (problem.grad_b)(&a, &b);
        let b_next = pen_full.prox(&(&b - &(&gb * t2)), t2)?;
        let step_b_sq = linalg::fro_sq(&(&b_next - &b));
        b = b_next;

        state.f_current = problem.objective(&a, &b)?;
        state.push(k, f_mid, state.f_current, 0.0, step_b_sq, 0, stiefel_residual(&a));
        if state.should_stop(f_prev, opts) {
            break;
        }
    }
    Ok((a, b, state.trace))
}
