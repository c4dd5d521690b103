//! Alternating manifold proximal gradient outer loop for two-block problems
//!
//! ```text
//!   min F(A,B) = H(A,B) + f(A) + g(B)   s.t.  A ∈ M₁, B ∈ M₂,
//! ```
//!
//! with smooth coupling H, convex penalties f and g, and (generalized)
//! Stiefel or Euclidean blocks. Each iteration solves a tangent proximal
//! subproblem per block (see [`crate::ssn`]), backtracks an Armijo line
//! search on the full objective, and retracts. Gauss-Seidel mode feeds the
//! updated A into the B subproblem; Jacobi mode computes both directions at
//! the current iterate before either retraction.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::manifold::{Manifold, Retraction};
use crate::penalty::Penalty;
use crate::ssn::{self, SubproblemInput};

type ObjectiveFn = std::sync::Arc<dyn Fn(&Mat, &Mat) -> f64 + Send + Sync>;
type GradientFn = std::sync::Arc<dyn Fn(&Mat, &Mat) -> Mat + Send + Sync>;

/// A two-block problem instance. The closures capture immutable problem
/// data behind `Arc`, so a `Problem` is cheap to clone and safe to share
/// across threads.
#[derive(Clone)]
pub struct Problem {
    pub eval_h: ObjectiveFn,
    pub grad_a: GradientFn,
    pub grad_b: GradientFn,
    pub penalty_a: Penalty,
    pub penalty_b: Penalty,
    pub manifold_a: Manifold,
    pub manifold_b: Manifold,
    pub step_a: f64,
    pub step_b: f64,
}

impl Problem {
    /// Full objective F = H + f + g.
    pub fn objective(&self, a: &Mat, b: &Mat) -> Result<f64> {
        Ok((self.eval_h)(a, b) + self.penalty_a.eval(a)? + self.penalty_b.eval(b)?)
    }

    /// Check both analytic gradients against central finite differences of H
    /// along random directions at (a, b).
    pub fn verify_gradients(&self, a: &Mat, b: &Mat, rng: &mut impl rand::Rng) -> Result<f64> {
        let h = 1e-6;
        let mut worst = 0.0_f64;
        for _ in 0..3 {
            let va = linalg::randn(a.nrows(), a.ncols(), rng);
            let vb = linalg::randn(b.nrows(), b.ncols(), rng);
            let ga = (self.grad_a)(a, b);
            let gb = (self.grad_b)(a, b);
            let fd_a = ((self.eval_h)(&(a + &(&va * h)), b) - (self.eval_h)(&(a - &(&va * h)), b))
                / (2.0 * h);
            let fd_b = ((self.eval_h)(a, &(b + &(&vb * h))) - (self.eval_h)(a, &(b - &(&vb * h))))
                / (2.0 * h);
            let ip_a: f64 = ga.iter().zip(va.iter()).map(|(x, y)| x * y).sum();
            let ip_b: f64 = gb.iter().zip(vb.iter()).map(|(x, y)| x * y).sum();
            worst = worst.max((ip_a - fd_a).abs() / fd_a.abs().max(1.0));
            worst = worst.max((ip_b - fd_b).abs() / fd_b.abs().max(1.0));
        }
        Ok(worst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    GaussSeidel,
    Jacobi,
}

/// Why the solver stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// max{‖D^A‖², ‖D^B‖²} fell below `eps_tol` and a re-solve at the final
    /// point confirmed stationarity.
    StationaryTol,
    /// |F_{k+1} − F_k| fell below `obj_change_tol` (and the objective reached
    /// `obj_target` when one is set).
    ObjChangeTol,
    MaxIter,
    /// Backtracking hit `min_alpha`; the current best iterates are returned.
    LineSearchStall,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Sufficient-decrease constant δ ∈ (0,1).
    pub delta: f64,
    /// Backtracking factor γ ∈ (0,1).
    pub gamma: f64,
    /// Stationarity tolerance on max{‖D^A‖²_F, ‖D^B‖²_F}. Set to 0 to rely
    /// on the objective-change rule alone.
    pub eps_tol: f64,
    pub max_iter: usize,
    pub mode: Mode,
    /// Optional |F_{k+1} − F_k| stopping threshold (engaged when `Some`).
    pub obj_change_tol: Option<f64>,
    /// When set, the objective-change rule fires only once F ≤ this target.
    pub obj_target: Option<f64>,
    /// Line-search floor; hitting it stalls the solver.
    pub min_alpha: f64,
    /// Dual residual tolerance passed to the subproblem solver.
    pub ssn_tol: f64,
    pub ssn_max_iter: usize,
    pub retraction: Retraction,
}

/// Objective-change threshold used by the sparse PCA benchmark protocol.
pub const SPCA_OBJ_CHANGE_TOL: f64 = 1e-5;

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            delta: 1e-4,
            gamma: 0.5,
            eps_tol: 1e-8,
            max_iter: 10_000,
            mode: Mode::GaussSeidel,
            obj_change_tol: None,
            obj_target: None,
            min_alpha: 1e-10,
            ssn_tol: 1e-5,
            ssn_max_iter: 100,
            retraction: Retraction::Polar,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.delta < 1.0
            && self.gamma > 0.0
            && self.gamma < 1.0
            && self.eps_tol >= 0.0
            && self.min_alpha > 0.0
            && self.ssn_tol > 0.0;
        if !ok {
            return Err(Error::InvalidArgument("solver options out of range".into()));
        }
        Ok(())
    }
}

/// One completed outer iteration.
#[derive(Clone, Copy, Debug)]
pub struct IterRecord {
    pub iter: usize,
    /// F(A_{k+1}, B_k), after the A-step.
    pub objective_mid: f64,
    /// F(A_{k+1}, B_{k+1}), after both steps.
    pub objective: f64,
    pub dir_a_sq: f64,
    pub dir_b_sq: f64,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub ssn_iters_a: usize,
    pub ssn_iters_b: usize,
}

#[derive(Clone, Debug)]
pub struct SolverTrace {
    pub initial_objective: f64,
    pub iterations: Vec<IterRecord>,
    pub status: Status,
    /// Line-search anchoring used by the run (see [`SolverTrace::verify_descent`]).
    pub mode: Mode,
    /// Worst feasibility residual observed over all iterates, per block.
    pub max_feasibility_a: f64,
    pub max_feasibility_b: f64,
    /// Subproblem solves that hit the Newton iteration cap.
    pub ssn_failures: usize,
}

impl SolverTrace {
    pub fn final_objective(&self) -> f64 {
        self.iterations
            .last()
            .map(|r| r.objective)
            .unwrap_or(self.initial_objective)
    }

    /// The objective sequence must be non-increasing and every accepted step
    /// must satisfy its Armijo exit test; these are checked from the recorded
    /// values exactly as the line search compared them. Gauss-Seidel steps
    /// are tested per block; Jacobi steps share one step size and are tested
    /// jointly.
    pub fn verify_descent(&self, delta: f64) -> Result<()> {
        let mut prev = self.initial_objective;
        for row in &self.iterations {
            match self.mode {
                Mode::GaussSeidel => {
                    if row.objective_mid > prev - delta * row.alpha_a * row.dir_a_sq {
                        return Err(Error::Numerical(format!(
                            "iteration {}: A-step violates the sufficient decrease test",
                            row.iter
                        )));
                    }
                    if row.objective > row.objective_mid - delta * row.alpha_b * row.dir_b_sq {
                        return Err(Error::Numerical(format!(
                            "iteration {}: B-step violates the sufficient decrease test",
                            row.iter
                        )));
                    }
                }
                Mode::Jacobi => {
                    let joint = row.dir_a_sq + row.dir_b_sq;
                    if row.objective > prev - delta * row.alpha_a * joint {
                        return Err(Error::Numerical(format!(
                            "iteration {}: joint step violates the sufficient decrease test",
                            row.iter
                        )));
                    }
                }
            }
            if row.objective > prev {
                return Err(Error::Numerical(format!(
                    "iteration {}: objective increased",
                    row.iter
                )));
            }
            prev = row.objective;
        }
        Ok(())
    }

    /// Bookkeeping form of the iteration-complexity bound: the number of
    /// iterations with stationarity above `eps_sq` cannot exceed
    /// (F₀ − F_final) / (δ·α_min·eps_sq), where α_min is the smallest
    /// accepted step in the trace.
    pub fn verify_iteration_bound(&self, delta: f64, eps_sq: f64) -> Result<()> {
        if eps_sq <= 0.0 || self.iterations.is_empty() {
            return Ok(());
        }
        let alpha_min = self
            .iterations
            .iter()
            .flat_map(|r| [r.alpha_a, r.alpha_b])
            .fold(f64::MAX, f64::min);
        let count = self
            .iterations
            .iter()
            .filter(|r| r.dir_a_sq + r.dir_b_sq > eps_sq)
            .count() as f64;
        let bound = (self.initial_objective - self.final_objective()) / (delta * alpha_min * eps_sq);
        if count > bound * (1.0 + 1e-12) + 1e-9 {
            return Err(Error::Numerical(format!(
                "iteration accounting violated: {count} iterations above tolerance, bound {bound:.3}"
            )));
        }
        Ok(())
    }

    pub fn verify_feasibility(&self, tol: f64) -> Result<()> {
        if self.max_feasibility_a > tol || self.max_feasibility_b > tol {
            return Err(Error::Numerical(format!(
                "iterate feasibility degraded: ({:.3e}, {:.3e})",
                self.max_feasibility_a, self.max_feasibility_b
            )));
        }
        Ok(())
    }
}

/// The stationarity measure ‖D^A‖²_F + ‖D^B‖²_F.
pub fn stationarity(dir_a: &Mat, dir_b: &Mat) -> f64 {
    linalg::fro_sq(dir_a) + linalg::fro_sq(dir_b)
}

struct BlockDirection {
    direction: Mat,
    dir_sq: f64,
    ssn_iters: usize,
    converged: bool,
    multiplier: Option<Array1<f64>>,
}

fn block_direction(
    manifold: &Manifold,
    point: &Mat,
    grad: &Mat,
    step: f64,
    penalty: &Penalty,
    opts: &SolverOptions,
    warm: Option<&Array1<f64>>,
) -> Result<BlockDirection> {
    if manifold.is_euclidean() {
        let target = point - &(grad * step);
        let direction = penalty.prox(&target, step)? - point;
        let dir_sq = linalg::fro_sq(&direction);
        Ok(BlockDirection {
            direction,
            dir_sq,
            ssn_iters: 0,
            converged: true,
            multiplier: None,
        })
    } else {
        let input = SubproblemInput::new(manifold, point, grad, step, penalty)
            .with_tol(opts.ssn_tol)
            .with_max_newton(opts.ssn_max_iter)
            .with_warm_start(warm);
        let out = ssn::solve(&input)?;
        let dir_sq = linalg::fro_sq(&out.direction);
        Ok(BlockDirection {
            direction: out.direction,
            dir_sq,
            ssn_iters: out.iters,
            converged: out.converged,
            multiplier: Some(out.multiplier),
        })
    }
}

enum LineSearch {
    Accepted { point: Mat, objective: f64, alpha: f64 },
    Stalled,
}

fn line_search(
    manifold: &Manifold,
    point: &Mat,
    direction: &Mat,
    dir_sq: f64,
    f_current: f64,
    objective: impl Fn(&Mat) -> Result<f64>,
    opts: &SolverOptions,
) -> Result<LineSearch> {
    if dir_sq == 0.0 {
        // R_X(0) = X: accept in place rather than comparing objective noise
        return Ok(LineSearch::Accepted {
            point: point.clone(),
            objective: f_current,
            alpha: 1.0,
        });
    }
    let mut alpha = 1.0;
    loop {
        let trial = manifold.retract(point, &(direction * alpha), opts.retraction)?;
        let f_trial = objective(&trial)?;
        if f_trial <= f_current - opts.delta * alpha * dir_sq {
            return Ok(LineSearch::Accepted {
                point: trial,
                objective: f_trial,
                alpha,
            });
        }
        alpha *= opts.gamma;
        if alpha < opts.min_alpha {
            return Ok(LineSearch::Stalled);
        }
    }
}

/// Run the alternating solver from the feasible pair (a0, b0).
///
/// Returns the final iterates and a per-iteration trace. The returned points
/// are feasible to 1e-10; when the status is [`Status::StationaryTol`], a
/// fresh subproblem solve at the final pair has confirmed
/// `‖D^A‖² + ‖D^B‖² ≤ 2·eps_tol`.
pub fn amanpg(
    problem: &Problem,
    a0: &Mat,
    b0: &Mat,
    opts: &SolverOptions,
) -> Result<(Mat, Mat, SolverTrace)> {
    opts.validate()?;
    for (man, x, name) in [
        (&problem.manifold_a, a0, "A"),
        (&problem.manifold_b, b0, "B"),
    ] {
        let res = man.check_point(x)?;
        if res > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "initial {name} is infeasible (residual {res:.3e})"
            )));
        }
    }

    let mut a = a0.clone();
    let mut b = b0.clone();
    let mut f_current = problem.objective(&a, &b)?;
    let mut trace = SolverTrace {
        initial_objective: f_current,
        iterations: Vec::new(),
        status: Status::MaxIter,
        mode: opts.mode,
        max_feasibility_a: problem.manifold_a.check_point(&a)?,
        max_feasibility_b: problem.manifold_b.check_point(&b)?,
        ssn_failures: 0,
    };
    let mut warm_a: Option<Array1<f64>> = None;
    let mut warm_b: Option<Array1<f64>> = None;

    for k in 0..opts.max_iter {
        let grad_a = (problem.grad_a)(&a, &b);
        let dir_a = block_direction(
            &problem.manifold_a,
            &a,
            &grad_a,
            problem.step_a,
            &problem.penalty_a,
            opts,
            warm_a.as_ref(),
        )?;
        if !dir_a.converged {
            trace.ssn_failures += 1;
        }

        let step = match opts.mode {
            Mode::GaussSeidel => {
                let a_step = line_search(
                    &problem.manifold_a,
                    &a,
                    &dir_a.direction,
                    dir_a.dir_sq,
                    f_current,
                    |trial| {
                        Ok((problem.eval_h)(trial, &b)
                            + problem.penalty_a.eval(trial)?
                            + problem.penalty_b.eval(&b)?)
                    },
                    opts,
                )?;
                let (a_next, f_mid, alpha_a) = match a_step {
                    LineSearch::Accepted { point, objective, alpha } => (point, objective, alpha),
                    LineSearch::Stalled => {
                        trace.status = Status::LineSearchStall;
                        return Ok((a, b, trace));
                    }
                };

                let grad_b = (problem.grad_b)(&a_next, &b);
                let dir_b = block_direction(
                    &problem.manifold_b,
                    &b,
                    &grad_b,
                    problem.step_b,
                    &problem.penalty_b,
                    opts,
                    warm_b.as_ref(),
                )?;
                if !dir_b.converged {
                    trace.ssn_failures += 1;
                }
                let b_step = line_search(
                    &problem.manifold_b,
                    &b,
                    &dir_b.direction,
                    dir_b.dir_sq,
                    f_mid,
                    |trial| {
                        Ok((problem.eval_h)(&a_next, trial)
                            + problem.penalty_a.eval(&a_next)?
                            + problem.penalty_b.eval(trial)?)
                    },
                    opts,
                )?;
                let (b_next, f_next, alpha_b) = match b_step {
                    LineSearch::Accepted { point, objective, alpha } => (point, objective, alpha),
                    LineSearch::Stalled => {
                        trace.status = Status::LineSearchStall;
                        return Ok((a_next, b, trace));
                    }
                };
                (a_next, b_next, f_mid, f_next, alpha_a, alpha_b, dir_a, dir_b)
            }
            Mode::Jacobi => {
                // both directions at (A_k, B_k), one joint backtracking
                let grad_b = (problem.grad_b)(&a, &b);
                let dir_b = block_direction(
                    &problem.manifold_b,
                    &b,
                    &grad_b,
                    problem.step_b,
                    &problem.penalty_b,
                    opts,
                    warm_b.as_ref(),
                )?;
                if !dir_b.converged {
                    trace.ssn_failures += 1;
                }
                let joint_sq = dir_a.dir_sq + dir_b.dir_sq;
                let mut alpha = 1.0;
                let accepted = loop {
                    if joint_sq == 0.0 {
                        break Some((a.clone(), b.clone(), f_current, 1.0));
                    }
                    let ta = problem.manifold_a.retract(
                        &a,
                        &(&dir_a.direction * alpha),
                        opts.retraction,
                    )?;
                    let tb = problem.manifold_b.retract(
                        &b,
                        &(&dir_b.direction * alpha),
                        opts.retraction,
                    )?;
                    let f_trial = problem.objective(&ta, &tb)?;
                    if f_trial <= f_current - opts.delta * alpha * joint_sq {
                        break Some((ta, tb, f_trial, alpha));
                    }
                    alpha *= opts.gamma;
                    if alpha < opts.min_alpha {
                        break None;
                    }
                };
                let Some((a_next, b_next, f_next, alpha)) = accepted else {
                    trace.status = Status::LineSearchStall;
                    return Ok((a, b, trace));
                };
                let f_mid = (problem.eval_h)(&a_next, &b)
                    + problem.penalty_a.eval(&a_next)?
                    + problem.penalty_b.eval(&b)?;
                (a_next, b_next, f_mid, f_next, alpha, alpha, dir_a, dir_b)
            }
        };
        let (a_next, b_next, f_mid, f_next, alpha_a, alpha_b, dir_a, dir_b) = step;

        warm_a = dir_a.multiplier.clone();
        warm_b = dir_b.multiplier.clone();
        trace.max_feasibility_a = trace
            .max_feasibility_a
            .max(problem.manifold_a.check_point(&a_next)?);
        trace.max_feasibility_b = trace
            .max_feasibility_b
            .max(problem.manifold_b.check_point(&b_next)?);

        let f_prev = f_current;
        a = a_next;
        b = b_next;
        f_current = f_next;
        trace.iterations.push(IterRecord {
            iter: k,
            objective_mid: f_mid,
            objective: f_next,
            dir_a_sq: dir_a.dir_sq,
            dir_b_sq: dir_b.dir_sq,
            alpha_a,
            alpha_b,
            ssn_iters_a: dir_a.ssn_iters,
            ssn_iters_b: dir_b.ssn_iters,
        });

        if dir_a.dir_sq.max(dir_b.dir_sq) <= opts.eps_tol {
            // confirm at the returned pair so the exit certificate holds there
            if exit_stationarity(problem, &a, &b, opts)? <= 2.0 * opts.eps_tol {
                trace.status = Status::StationaryTol;
                return Ok((a, b, trace));
            }
        }
        if let Some(tol) = opts.obj_change_tol {
            let reached_target = opts.obj_target.map_or(true, |target| f_current <= target);
            if (f_prev - f_current).abs() < tol && reached_target {
                trace.status = Status::ObjChangeTol;
                return Ok((a, b, trace));
            }
        }
    }

    trace.status = Status::MaxIter;
    Ok((a, b, trace))
}

/// Stationarity of a fresh pair of subproblem solves at (a, b); this is the
/// certificate checked at a [`Status::StationaryTol`] exit.
pub fn exit_stationarity(problem: &Problem, a: &Mat, b: &Mat, opts: &SolverOptions) -> Result<f64> {
    let grad_a = (problem.grad_a)(a, b);
    let da = block_direction(
        &problem.manifold_a,
        a,
        &grad_a,
        problem.step_a,
        &problem.penalty_a,
        opts,
        None,
    )?;
    let grad_b = (problem.grad_b)(a, b);
    let db = block_direction(
        &problem.manifold_b,
        b,
        &grad_b,
        problem.step_b,
        &problem.penalty_b,
        opts,
        None,
    )?;
    Ok(da.dir_sq + db.dir_sq)
}
