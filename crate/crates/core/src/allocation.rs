//! Feasible allocations on `S_n = {x >= 0 : sum(x) = n}` and the three
//! reference strategies: the running estimate, the selfish point `1_n`, and the
//! instantaneous optimum.

use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::{Error, Result};

/// Feasibility slack on the budget, relative to `n`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Default residual tolerance of the dual bisection, `1e-10 * n`.
pub fn default_tolerance(n: usize) -> f64 {
    1e-10 * n as f64
}

/// Agent estimates together with the cost function each agent currently holds.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationState {
    x: Vec<f64>,
    funcs: Vec<CostFunction>,
}

impl AllocationState {
    pub fn new(x: Vec<f64>, funcs: Vec<CostFunction>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Infeasible("empty population".into()));
        }
        if x.len() != funcs.len() {
            return Err(Error::Infeasible(format!(
                "{} estimates for {} cost functions",
                x.len(),
                funcs.len()
            )));
        }
        let state = Self { x, funcs };
        state.check_feasible()?;
        Ok(state)
    }

    /// The selfish starting point `x = 1_n`.
    pub fn selfish(funcs: Vec<CostFunction>) -> Result<Self> {
        Self::new(vec![1.0; funcs.len()], funcs)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn funcs(&self) -> &[CostFunction] {
        &self.funcs
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [CostFunction]) {
        (&mut self.x, &mut self.funcs)
    }

    pub fn check_feasible(&self) -> Result<()> {
        let n = self.n() as f64;
        if let Some((i, &xi)) = self
            .x
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(Error::Infeasible(format!("x[{i}] = {xi}")));
        }
        let sum: f64 = self.x.iter().sum();
        if (sum - n).abs() > FEASIBILITY_TOL * n {
            return Err(Error::Infeasible(format!(
                "budget drift: sum = {sum}, expected {n}"
            )));
        }
        Ok(())
    }

    pub fn global_cost(&self) -> Result<f64> {
        self.check_feasible()?;
        Ok(self.cost_unchecked())
    }

    pub(crate) fn cost_unchecked(&self) -> f64 {
        total_cost(&self.funcs, &self.x)
    }

    pub fn squared_norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum()
    }
}

pub(crate) fn total_cost(funcs: &[CostFunction], x: &[f64]) -> f64 {
    funcs.iter().zip(x).map(|(f, &xi)| f.value_at(xi)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    Optimal,
    Selfish,
    Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyPoint {
    pub kind: StrategyKind,
    pub x: Vec<f64>,
    pub value: f64,
}

pub fn selfish_point(s: &AllocationState) -> StrategyPoint {
    let x = vec![1.0; s.n()];
    let value = total_cost(s.funcs(), &x);
    StrategyPoint {
        kind: StrategyKind::Selfish,
        x,
        value,
    }
}

pub fn estimate_point(s: &AllocationState) -> Result<StrategyPoint> {
    Ok(StrategyPoint {
        kind: StrategyKind::Estimate,
        value: s.global_cost()?,
        x: s.x().to_vec(),
    })
}

/// Solution of the KKT system with its Lagrange multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub point: StrategyPoint,
    /// Common marginal cost `lambda = f_i'(x_i*)`.
    pub multiplier: f64,
}

/// Instantaneous optimum `argmin_{x in S_n} sum f_i(x_i)` for the state's functions.
pub fn optimal_point(s: &AllocationState, tol: f64) -> Result<StrategyPoint> {
    Ok(solve_optimum(s.funcs(), tol)?.point)
}

/// Dual bisection on the multiplier.
///
/// Since `f_i'(0) = 0` the optimum is interior and `x_i(lambda) =
/// (f_i')^{-1}(lambda)`. With `lambda/beta <= x_i(lambda) <= lambda/alpha`,
/// the budget residual changes sign on `[alpha, beta]`. After bisection a
/// single Newton step on the multiplier (using the piecewise-constant
/// curvature) absorbs the remaining residual.
pub fn solve_optimum(funcs: &[CostFunction], tol: f64) -> Result<Optimum> {
    if funcs.is_empty() {
        return Err(Error::Infeasible("empty population".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tol", format!("must be positive, got {tol}")));
    }
    let n = funcs.len() as f64;
    let alpha = funcs
        .iter()
        .map(|f| f.class().alpha())
        .fold(f64::INFINITY, f64::min);
    let beta = funcs
        .iter()
        .map(|f| f.class().beta())
        .fold(0.0, f64::max);
    let budget = |lambda: f64| -> f64 { funcs.iter().map(|f| f.slope_inverse(lambda)).sum() };

    let (mut lo, mut hi) = (alpha, beta);
    let (low_sum, high_sum) = (budget(lo), budget(hi));
    if low_sum > n + tol || high_sum < n - tol {
        return Err(Error::Bracket {
            low_sum,
            high_sum,
            target: n,
        });
    }

    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..200 {
        let residual = budget(lambda) - n;
        if residual.abs() <= tol {
            break;
        }
        if residual < 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lambda {
            break;
        }
        lambda = mid;
    }

    let mut x: Vec<f64> = funcs.iter().map(|f| f.slope_inverse(lambda)).collect();
    let residual: f64 = x.iter().sum::<f64>() - n;
    if residual.abs() > tol {
        return Err(Error::Bracket {
            low_sum,
            high_sum,
            target: n,
        });
    }
    let weights: Vec<f64> = funcs
        .iter()
        .zip(&x)
        .map(|(f, &xi)| 1.0 / f.curvature_at(xi))
        .collect();
    let shift = -residual / weights.iter().sum::<f64>();
    let polished: Vec<f64> = x
        .iter()
        .zip(&weights)
        .map(|(&xi, &w)| (xi + shift * w).max(0.0))
        .collect();
    // Keep the polish only if it actually improves feasibility.
    if (polished.iter().sum::<f64>() - n).abs() <= residual.abs() {
        x = polished;
        lambda += shift;
    }

    let value = total_cost(funcs, &x);
    Ok(Optimum {
        point: StrategyPoint {
            kind: StrategyKind::Optimal,
            x,
            value,
        },
        multiplier: lambda,
    })
}

/// Euclidean projection of `v` onto `S_n` with `n = v.len()` (sort and threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let budget = n as f64;
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - budget) / (k + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        }
    }
    v.iter().map(|&vi| (vi - threshold).max(0.0)).collect()
}
