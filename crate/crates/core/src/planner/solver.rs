//! Projected augmented-Lagrangian solver for
//! `min f(k)` subject to `g(k) ≥ 0` and `k ∈ [-1, 1]^n`.
//!
//! Inner problems are minimized by projected Gauss-Newton steps with an
//! Armijo backtracking search. The best strictly feasible iterate seen is
//! returned, so any accepted answer satisfies every row by the acceptance
//! margin regardless of where the outer loop stopped.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{ConstraintBlock, CostEval};
use crate::planner::receding::Clock;

/// A smooth-enough problem over the parameter box.
pub trait Nlp {
    fn dim(&self) -> usize;
    fn cost(&self, k: &[f64]) -> CostEval;
    /// The row count must not depend on `k`.
    fn constraints(&self, k: &[f64]) -> ConstraintBlock;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Budget of inner Gauss-Newton steps across all outer rounds.
    pub max_iterations: usize,
    pub max_outer: usize,
    /// A point is accepted only if every row is at least this.
    pub accept_margin: f64,
    /// Rows are pushed toward this, slightly above `accept_margin`.
    pub target_margin: f64,
    /// Optional wall-clock budget in ms, read from the caller's clock.
    pub time_limit_ms: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            max_outer: 12,
            accept_margin: 1e-6,
            target_margin: 2e-6,
            time_limit_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub iterations: usize,
    pub evaluations: usize,
    pub solve_ms: f64,
    pub constraint_eval_ms: f64,
}

/// Result of one solve. `k_star` is `None` when no strictly feasible point
/// was found within budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub k_star: Option<Vec<f64>>,
    /// Smallest constraint value at `k_star`, or at the last iterate when
    /// infeasible; `None` when the problem has no rows.
    pub min_margin: Option<f64>,
    pub cost: f64,
    pub stats: SolverStats,
}

impl PlanOutcome {
    pub fn is_feasible(&self) -> bool {
        self.k_star.is_some()
    }
}

struct Point {
    k: Vec<f64>,
    cost: CostEval,
    block: ConstraintBlock,
}

struct Search<'p, P: Nlp> {
    problem: &'p P,
    clock: &'p dyn Clock,
    stats: SolverStats,
    accept: f64,
    best: Option<(f64, Vec<f64>, Option<f64>)>,
}

impl<P: Nlp> Search<'_, P> {
    fn eval(&mut self, k: Vec<f64>) -> Point {
        let cost = self.problem.cost(&k);
        let t0 = self.clock.now_ms();
        let block = self.problem.constraints(&k);
        self.stats.constraint_eval_ms += self.clock.now_ms() - t0;
        self.stats.evaluations += 1;
        let min = block.min_value();
        if min.is_none_or(|m| m >= self.accept) && self.best.as_ref().is_none_or(|(c, _, _)| cost.value < *c) {
            self.best = Some((cost.value, k.clone(), min));
        }
        Point { k, cost, block }
    }
}

/// Augmented Lagrangian state for `g ≥ target`. Rows are scaled by `scale`
/// and the cost by `cost_scale` so that both have unit-order curvature.
struct Multipliers {
    lambda: Vec<f64>,
    rho: f64,
    scale: Vec<f64>,
    cost_scale: f64,
    target: f64,
}

impl Multipliers {
    /// Shifted multiplier `max(0, λ − ρ s (g − τ))` of every row.
    fn shifted(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, g)| (self.lambda[i] - self.rho * self.scale[i] * (g - self.target)).max(0.0))
            .collect()
    }

    fn merit(&self, p: &Point) -> f64 {
        let mut m = self.cost_scale * p.cost.value;
        for (i, mu) in self.shifted(&p.block.values).into_iter().enumerate() {
            m += (mu * mu - self.lambda[i] * self.lambda[i]) / (2.0 * self.rho);
        }
        m
    }

    fn gradient(&self, p: &Point) -> DVector<f64> {
        let mut g = &p.cost.gradient * self.cost_scale;
        for (i, mu) in self.shifted(&p.block.values).into_iter().enumerate() {
            if mu > 0.0 {
                g -= p.block.jacobian.row(i).transpose() * (mu * self.scale[i]);
            }
        }
        g
    }

    fn hessian(&self, p: &Point) -> DMatrix<f64> {
        let mut h = &p.cost.hessian * self.cost_scale;
        for (i, mu) in self.shifted(&p.block.values).into_iter().enumerate() {
            if mu > 0.0 {
                let row = p.block.jacobian.row(i) * self.scale[i];
                h += row.transpose() * row * self.rho;
            }
        }
        h
    }
}

fn project(k: &mut [f64]) {
    for v in k {
        *v = v.clamp(-1.0, 1.0);
    }
}

const BOUND_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-9;

/// Minimizes the problem from `k_init`. Deterministic for a given problem,
/// start and budget unless `time_limit_ms` is set.
pub fn solve<P: Nlp>(problem: &P, k_init: &[f64], options: &SolverOptions, clock: &dyn Clock) -> PlanOutcome {
    let start_ms = clock.now_ms();
    let n = problem.dim();
    let mut k0 = k_init.to_vec();
    k0.resize(n, 0.0);
    project(&mut k0);

    let mut search = Search {
        problem,
        clock,
        stats: SolverStats::default(),
        accept: options.accept_margin,
        best: None,
    };
    let mut x = search.eval(k0);
    let rows = x.block.values.len();
    let scale = (0..rows)
        .map(|i| 1.0 / x.block.jacobian.row(i).norm().max(1e-2))
        .collect();
    let mut al = Multipliers {
        lambda: alloc::vec![0.0; rows],
        rho: 10.0,
        scale,
        cost_scale: 1.0 / x.cost.hessian.diagonal().amax().max(1e-12),
        target: options.target_margin,
    };
    let violation = |p: &Point, al: &Multipliers| {
        p.block
            .values
            .iter()
            .zip(&al.scale)
            .map(|(g, s)| s * (al.target - g).max(0.0))
            .fold(0.0, f64::max)
    };
    let mut last_violation = violation(&x, &al);
    let out_of_time = |clock: &dyn Clock| options.time_limit_ms.is_some_and(|lim| clock.now_ms() - start_ms > lim);

    'outer: for _ in 0..options.max_outer {
        // Inner loop: projected Gauss-Newton on the merit function.
        loop {
            if search.stats.iterations >= options.max_iterations || out_of_time(clock) {
                break 'outer;
            }
            search.stats.iterations += 1;
            let grad = al.gradient(&x);
            let free: Vec<usize> = (0..n)
                .filter(|&j| {
                    !((x.k[j] <= -1.0 + BOUND_TOL && grad[j] > 0.0) || (x.k[j] >= 1.0 - BOUND_TOL && grad[j] < 0.0))
                })
                .collect();
            let stationary = free.iter().all(|&j| grad[j].abs() <= STATIONARY_TOL);
            if stationary {
                break;
            }
            let h = al.hessian(&x);
            let mut dir = alloc::vec![0.0; n];
            let nf = free.len();
            let hf = DMatrix::from_fn(nf, nf, |a, b| h[(free[a], free[b])]) + DMatrix::identity(nf, nf) * 1e-10;
            let gf = DVector::from_fn(nf, |a, _| -grad[free[a]]);
            match hf.cholesky() {
                Some(ch) => {
                    let d = ch.solve(&gf);
                    for (a, &j) in free.iter().enumerate() {
                        dir[j] = d[a];
                    }
                }
                None => {
                    for &j in &free {
                        dir[j] = -grad[j];
                    }
                }
            }

            let merit0 = al.merit(&x);
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let mut k: Vec<f64> = x.k.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
                project(&mut k);
                let decrease: f64 = k
                    .iter()
                    .zip(&x.k)
                    .enumerate()
                    .map(|(j, (a, b))| grad[j] * (a - b))
                    .sum();
                if decrease >= 0.0 {
                    step *= 0.5;
                    continue;
                }
                let trial = search.eval(k);
                if al.merit(&trial) <= merit0 + 1e-4 * decrease {
                    accepted = Some(trial);
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some(p) => {
                    let moved = p.k.iter().zip(&x.k).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    x = p;
                    if moved < 1e-10 {
                        break;
                    }
                }
                None => break,
            }
        }

        let v = violation(&x, &al);
        if v == 0.0 && search.best.is_some() && al.lambda.iter().all(|&l| l == 0.0) {
            // Feasible with no active rows: the inner minimum is the answer.
            break;
        }
        let new_lambda = al.shifted(&x.block.values);
        let change = new_lambda
            .iter()
            .zip(&al.lambda)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        al.lambda = new_lambda;
        if v == 0.0 && change < 1e-8 {
            break;
        }
        if v > 0.25 * last_violation {
            al.rho = (al.rho * 10.0).min(1e10);
        }
        last_violation = v;
    }

    let mut stats = search.stats;
    stats.solve_ms = clock.now_ms() - start_ms;
    match search.best {
        Some((cost, k, min_margin)) => PlanOutcome {
            k_star: Some(k),
            min_margin,
            cost,
            stats,
        },
        None => PlanOutcome {
            k_star: None,
            min_margin: x.block.min_value(),
            cost: x.cost.value,
            stats,
        },
    }
}
