//! Nonlinear conjugate gradient (Polak-Ribière+) with a strong-Wolfe line
//! search, plus a central-difference gradient checker.
//!
//! The callback returns `(value, gradient)`; a non-finite value or gradient
//! marks the trial point as infeasible and the line search backs off from it.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_BRACKET_STEPS: usize = 30;
const MAX_ZOOM_STEPS: usize = 40;
const EXPANSION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Objective evaluations allowed per call (value and gradient count as
    /// one). Zero leaves the start point untouched.
    pub max_evals: usize,
    /// Stop once `‖∇f‖_∞ ≤ grad_tol`.
    pub grad_tol: f64,
    /// Stop once an accepted step satisfies `‖Δx‖_∞ ≤ step_tol (1 + ‖x‖_∞)`.
    pub step_tol: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_evals: 100,
            grad_tol: 1e-5,
            step_tol: 1e-9,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::domain(format!(
                "Wolfe constants must satisfy 0 < c1 < c2 < 1 (got c1={}, c2={})",
                self.wolfe_c1, self.wolfe_c2
            )));
        }
        if !(self.grad_tol > 0.0) || !(self.step_tol > 0.0) {
            return Err(Error::domain("grad_tol and step_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimStatus {
    GradientTolerance,
    StepTolerance,
    BudgetExhausted,
    /// No strong-Wolfe step was found even along steepest descent; the best
    /// point seen is returned.
    LineSearchFailed,
}

/// One accepted line-search step; kept so callers can audit the Wolfe
/// conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub alpha: f64,
    pub f_before: f64,
    pub f_after: f64,
    /// Directional derivative at the start of the step.
    pub slope_before: f64,
    /// Directional derivative at the accepted point.
    pub slope_after: f64,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Array1<f64>,
    /// Objective at `x`; NaN only when `max_evals == 0`.
    pub f: f64,
    pub grad: Array1<f64>,
    pub evals: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub status: OptimStatus,
    /// Objective value of every accepted iterate, starting with `f(x0)`.
    pub history: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

struct Budgeted<F> {
    objective: F,
    evals: usize,
    max: usize,
}

impl<F: FnMut(ArrayView1<f64>) -> (f64, Array1<f64>)> Budgeted<F> {
    fn exhausted(&self) -> bool {
        self.evals >= self.max
    }

    fn eval(&mut self, x: ArrayView1<f64>) -> Option<(f64, Array1<f64>)> {
        if self.exhausted() {
            return None;
        }
        self.evals += 1;
        let (f, g) = (self.objective)(x);
        Some((f, g))
    }
}

#[derive(Clone)]
struct Trial {
    alpha: f64,
    f: f64,
    g: Array1<f64>,
    slope: f64,
}

impl Trial {
    fn feasible(&self) -> bool {
        self.f.is_finite() && self.slope.is_finite()
    }
}

enum Search {
    Accepted(Trial),
    /// Search gave up; carries the best sufficient-decrease point, if any.
    Failed(Option<Trial>),
    Exhausted(Option<Trial>),
}

struct LineProblem<'a> {
    x: ArrayView1<'a, f64>,
    dir: ArrayView1<'a, f64>,
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
}

impl LineProblem<'_> {
    fn point(&self, alpha: f64) -> Array1<f64> {
        let mut p = self.x.to_owned();
        p.scaled_add(alpha, &self.dir);
        p
    }

    fn armijo(&self, t: &Trial) -> bool {
        t.feasible() && t.f <= self.f0 + self.c1 * t.alpha * self.slope0
    }

    fn curvature(&self, t: &Trial) -> bool {
        t.slope.abs() <= -self.c2 * self.slope0
    }
}

fn probe<F: FnMut(ArrayView1<f64>) -> (f64, Array1<f64>)>(
    budget: &mut Budgeted<F>,
    lp: &LineProblem,
    alpha: f64,
) -> Option<Trial> {
    let (f, g) = budget.eval(lp.point(alpha).view())?;
    let slope = if g.iter().all(|v| v.is_finite()) {
        g.dot(&lp.dir)
    } else {
        f64::NAN
    };
    let f = if f.is_finite() { f } else { f64::INFINITY };
    Some(Trial { alpha, f, g, slope })
}

fn keep_best(best: &mut Option<Trial>, lp: &LineProblem, t: &Trial) {
    if lp.armijo(t) && t.f < lp.f0 && best.as_ref().map_or(true, |b| t.f < b.f) {
        *best = Some(t.clone());
    }
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, or `None`
/// when it is undefined.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn zoom<F: FnMut(ArrayView1<f64>) -> (f64, Array1<f64>)>(
    budget: &mut Budgeted<F>,
    lp: &LineProblem,
    mut lo: Trial,
    mut hi: Trial,
    mut best: Option<Trial>,
) -> Search {
    for _ in 0..MAX_ZOOM_STEPS {
        let width = hi.alpha - lo.alpha;
        if width.abs() <= 1e-16 * lo.alpha.abs().max(1e-300) {
            break;
        }
        let (left, right) = if lo.alpha < hi.alpha {
            (lo.alpha, hi.alpha)
        } else {
            (hi.alpha, lo.alpha)
        };
        let margin = 0.1 * (right - left);
        let guess = if hi.feasible() {
            cubic_min(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope)
        } else {
            None
        };
        let alpha = match guess {
            Some(a) if a > left + margin && a < right - margin => a,
            _ => 0.5 * (lo.alpha + hi.alpha),
        };
        let Some(t) = probe(budget, lp, alpha) else {
            return Search::Exhausted(best);
        };
        keep_best(&mut best, lp, &t);
        if !lp.armijo(&t) || t.f >= lo.f {
            hi = t;
        } else {
            if lp.curvature(&t) {
                return Search::Accepted(t);
            }
            if t.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
    }
    Search::Failed(best)
}

fn line_search<F: FnMut(ArrayView1<f64>) -> (f64, Array1<f64>)>(
    budget: &mut Budgeted<F>,
    lp: &LineProblem,
    g0: &Array1<f64>,
    alpha_init: f64,
) -> Search {
    let mut prev = Trial {
        alpha: 0.0,
        f: lp.f0,
        g: g0.clone(),
        slope: lp.slope0,
    };
    let mut best = None;
    let mut alpha = alpha_init;
    for i in 0..MAX_BRACKET_STEPS {
        let Some(t) = probe(budget, lp, alpha) else {
            return Search::Exhausted(best);
        };
        keep_best(&mut best, lp, &t);
        if !lp.armijo(&t) || (i > 0 && t.f >= prev.f) {
            return zoom(budget, lp, prev, t, best);
        }
        if lp.curvature(&t) {
            return Search::Accepted(t);
        }
        if t.slope >= 0.0 {
            return zoom(budget, lp, t, prev, best);
        }
        alpha *= EXPANSION;
        prev = t;
    }
    Search::Failed(best)
}

fn sup_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimize `objective` from `x0`.
///
/// Accepted iterates have non-increasing objective values and each accepted
/// step satisfies the strong Wolfe conditions; if the budget runs out
/// mid-search, the best sufficient-decrease point seen is returned instead.
pub fn cg_minimize<F>(objective: F, x0: ArrayView1<f64>, config: &OptimizerConfig) -> Result<OptimResult>
where
    F: FnMut(ArrayView1<f64>) -> (f64, Array1<f64>),
{
    config.validate()?;
    let mut budget = Budgeted {
        objective,
        evals: 0,
        max: config.max_evals,
    };
    let mut x = x0.to_owned();
    let Some((mut f, mut g)) = budget.eval(x.view()) else {
        return Ok(OptimResult {
            grad: Array1::from_elem(x.len(), f64::NAN),
            x,
            f: f64::NAN,
            evals: 0,
            iterations: 0,
            restarts: 0,
            status: OptimStatus::BudgetExhausted,
            history: Vec::new(),
            steps: Vec::new(),
        });
    };
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("objective is not finite at the start point (f = {f})")));
    }

    let mut history = vec![f];
    let mut steps = Vec::new();
    let mut dir = -&g;
    let mut restarts = 0;
    let mut iterations = 0;
    let mut last_step: Option<(f64, f64)> = None;
    let finish = |x: Array1<f64>, f, g, budget: &Budgeted<F>, iterations, restarts, status, history, steps| {
        Ok(OptimResult {
            x,
            f,
            grad: g,
            evals: budget.evals,
            iterations,
            restarts,
            status,
            history,
            steps,
        })
    };

    loop {
        if sup_norm(g.view()) <= config.grad_tol {
            return finish(x, f, g, &budget, iterations, restarts, OptimStatus::GradientTolerance, history, steps);
        }
        let mut slope0 = g.dot(&dir);
        let mut steepest = false;
        if !(slope0 < 0.0) {
            dir = -&g;
            slope0 = -g.dot(&g);
            steepest = true;
            restarts += 1;
        }
        let alpha_init = match last_step {
            Some((alpha, prev_slope)) => (alpha * prev_slope / slope0).clamp(1e-12, 1e12),
            None => (1.0 / g.dot(&g).sqrt()).min(1.0),
        };
        let outcome = {
            let lp = LineProblem {
                x: x.view(),
                dir: dir.view(),
                f0: f,
                slope0,
                c1: config.wolfe_c1,
                c2: config.wolfe_c2,
            };
            line_search(&mut budget, &lp, &g, alpha_init)
        };
        match outcome {
            Search::Accepted(t) => {
                iterations += 1;
                let step = &dir * t.alpha;
                steps.push(StepRecord {
                    alpha: t.alpha,
                    f_before: f,
                    f_after: t.f,
                    slope_before: slope0,
                    slope_after: t.slope,
                });
                x += &step;
                f = t.f;
                history.push(f);
                let g_new = t.g;
                last_step = Some((t.alpha, slope0));
                if sup_norm(step.view()) <= config.step_tol * (1.0 + sup_norm(x.view())) {
                    return finish(x, f, g_new, &budget, iterations, restarts, OptimStatus::StepTolerance, history, steps);
                }
                // Polak-Ribière+.
                let mut num = 0.0;
                Zip::from(&g_new).and(&g).for_each(|a, b| num += a * (a - b));
                let beta = (num / g.dot(&g)).max(0.0);
                dir = &dir * beta - &g_new;
                g = g_new;
                if budget.exhausted() {
                    return finish(x, f, g, &budget, iterations, restarts, OptimStatus::BudgetExhausted, history, steps);
                }
            }
            Search::Failed(best) | Search::Exhausted(best)
                if budget.exhausted() || steepest =>
            {
                let status = if budget.exhausted() {
                    OptimStatus::BudgetExhausted
                } else {
                    OptimStatus::LineSearchFailed
                };
                if let Some(t) = best {
                    x.scaled_add(t.alpha, &dir);
                    f = t.f;
                    g = t.g;
                    history.push(f);
                }
                return finish(x, f, g, &budget, iterations, restarts, status, history, steps);
            }
            Search::Failed(_) | Search::Exhausted(_) => {
                // Retry from the same point along steepest descent.
                dir = Array1::zeros(x.len());
                last_step = None;
            }
        }
    }
}

/// Largest relative discrepancy between the analytic gradient and central
/// differences with step `step`, using `|a − n| / max(1e-8, |a| + |n|)`.
pub fn check_gradient<F>(mut objective: F, x: ArrayView1<f64>, step: f64) -> f64
where
    F: FnMut(ArrayView1<f64>) -> (f64, Array1<f64>),
{
    let (_, analytic) = objective(x);
    let mut worst = 0.0f64;
    let mut probe = x.to_owned();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let (f_plus, _) = objective(probe.view());
        probe[i] = x[i] - step;
        let (f_minus, _) = objective(probe.view());
        probe[i] = x[i];
        let numeric = (f_plus - f_minus) / (2.0 * step);
        let a = analytic[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}
