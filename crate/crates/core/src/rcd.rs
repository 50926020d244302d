//! Pairwise random coordinate descent update.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocation::{total_cost, AllocationState, StrategyKind, StrategyPoint};
use crate::bounds::BoundParams;
use crate::cost::ClassParams;
use crate::{Error, Result};

/// Step size of the pairwise exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `1 / (2 beta)`: the step for which nonnegativity and the contraction
    /// rate `1 - 1/(kappa (n-1))` are certified.
    #[default]
    TwoBeta,
    /// `1 / beta`, kept for ablations.
    Beta,
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepRule::TwoBeta => "two-beta",
            StepRule::Beta => "beta",
        })
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-beta" => Ok(StepRule::TwoBeta),
            "beta" => Ok(StepRule::Beta),
            other => Err(Error::config(
                "step",
                format!("unknown step rule `{other}` (expected two-beta or beta)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcdConfig {
    pub step: StepRule,
    pub class: ClassParams,
}

impl RcdConfig {
    pub fn new(step: StepRule, class: ClassParams) -> Self {
        Self { step, class }
    }

    pub fn step_size(&self) -> f64 {
        match self.step {
            StepRule::TwoBeta => 0.5 / self.class.beta(),
            StepRule::Beta => 1.0 / self.class.beta(),
        }
    }
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    for index in [i, j] {
        if index >= n {
            return Err(Error::Index { index, n });
        }
    }
    if i == j {
        return Err(Error::SameAgent(i));
    }
    Ok(())
}

/// Applies `x_i -= h g`, `x_j += h g` with `g = f_i'(x_i) - f_j'(x_j)` in place
/// and returns the change of the global cost, computed from the two touched
/// coordinates only.
pub fn rcd_update_in_place(
    s: &mut AllocationState,
    i: usize,
    j: usize,
    cfg: &RcdConfig,
) -> Result<f64> {
    check_pair(s.n(), i, j)?;
    s.check_feasible()?;
    let (x, funcs) = s.parts_mut();
    let (fi, fj) = (funcs[i], funcs[j]);
    let (xi, xj) = (x[i], x[j]);
    let transfer = cfg.step_size() * (fi.slope_at(xi) - fj.slope_at(xj));
    let (xi_new, xj_new) = (xi - transfer, xj + transfer);
    x[i] = xi_new;
    x[j] = xj_new;
    Ok(fi.value_at(xi_new) + fj.value_at(xj_new) - fi.value_at(xi) - fj.value_at(xj))
}

/// Pure variant of [`rcd_update_in_place`].
pub fn rcd_update(
    s: &AllocationState,
    i: usize,
    j: usize,
    cfg: &RcdConfig,
) -> Result<AllocationState> {
    let mut next = s.clone();
    rcd_update_in_place(&mut next, i, j, cfg)?;
    Ok(next)
}

/// Instantaneous loss `C = f(x) - f(x*)`, clamped at zero below `1e-9`.
///
/// `opt` must be the optimum of the state's own functions: its value is
/// re-evaluated against them and a mismatch is reported.
pub fn suboptimality(s: &AllocationState, opt: &StrategyPoint) -> Result<f64> {
    if opt.kind != StrategyKind::Optimal {
        return Err(Error::MismatchedOptimum(format!(
            "expected an optimal point, got {:?}",
            opt.kind
        )));
    }
    if opt.x.len() != s.n() {
        return Err(Error::MismatchedOptimum(format!(
            "optimum has {} coordinates, state has {}",
            opt.x.len(),
            s.n()
        )));
    }
    let recomputed = total_cost(s.funcs(), &opt.x);
    if (recomputed - opt.value).abs() > 1e-9 * recomputed.abs().max(1.0) {
        return Err(Error::MismatchedOptimum(format!(
            "stored value {} but the state's functions give {recomputed}",
            opt.value
        )));
    }
    let gap = s.global_cost()? - opt.value;
    if gap < -1e-9 {
        return Err(Error::OracleViolation {
            f_opt: opt.value,
            f_est: opt.value + gap,
        });
    }
    Ok(gap.max(0.0))
}

/// Closed-system contraction rate `gamma = 1 - 1/(kappa (n - 1))`.
pub fn contraction_factor(params: &BoundParams) -> Result<f64> {
    if params.n < 2 {
        return Err(Error::config("n", "the contraction needs at least two agents"));
    }
    Ok(1.0 - 1.0 / (params.kappa() * (params.n - 1) as f64))
}
