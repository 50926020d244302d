//! Closed-form upper bounds on the expected potential benefit and dynamical
//! regret of RCD under replacements.

use serde::{Deserialize, Serialize};

use crate::cost::ClassParams;
use crate::{Error, Result};

/// Problem constants feeding every bound evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    pub class: ClassParams,
    /// Probability that an event is an update.
    pub p: f64,
    /// Initial suboptimality `f(x^0) - f(x*^0)`.
    pub c0: f64,
}

impl BoundParams {
    pub fn new(n: usize, class: ClassParams, p: f64, c0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("n", "population must be positive"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config("p", format!("must lie in [0, 1], got {p}")));
        }
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(Error::config("c0", format!("must be finite and >= 0, got {c0}")));
        }
        Ok(Self { n, class, p, c0 })
    }

    /// Uses the worst-case initial gap `M_f` when the actual `C_0` is unknown.
    pub fn with_worst_case_c0(n: usize, class: ClassParams, p: f64) -> Result<Self> {
        let mut params = Self::new(n, class, p, 0.0)?;
        params.c0 = params.m_f();
        Ok(params)
    }

    pub fn alpha(&self) -> f64 {
        self.class.alpha()
    }

    pub fn beta(&self) -> f64 {
        self.class.beta()
    }

    pub fn kappa(&self) -> f64 {
        self.class.kappa()
    }

    /// Replacement-to-update odds `(1 - p) / p`; infinite for `p = 0`.
    pub fn rho_r(&self) -> f64 {
        (1.0 - self.p) / self.p
    }

    /// `1 - eta = p / (kappa (n - 1))`, kept separately to avoid cancellation.
    fn eta_gap(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::config("n", "the contraction needs at least two agents"));
        }
        let gap = self.p / (self.kappa() * (self.n - 1) as f64);
        if !(gap > 0.0) {
            return Err(Error::config("p", "eta >= 1: the update probability must be positive"));
        }
        Ok(gap)
    }

    /// Expected per-event contraction `eta = 1 - p / (kappa (n - 1))`.
    pub fn eta(&self) -> Result<f64> {
        Ok(1.0 - self.eta_gap()?)
    }

    /// `M_f = (n/2)(beta n - alpha)`.
    pub fn m_f(&self) -> f64 {
        let n = self.n as f64;
        0.5 * n * (self.beta() * n - self.alpha())
    }

    /// Expected estimate-cost jump at a replacement, general class: `(5 beta - 3 alpha) / 2`.
    pub fn theta_general(&self) -> f64 {
        0.5 * (5.0 * self.beta() - 3.0 * self.alpha())
    }

    /// Same for pure quadratics: `(beta - alpha)(3n^2 - 3n + 1) / (2 n^2)`.
    pub fn theta_quad(&self) -> f64 {
        (self.beta() - self.alpha()) * quad_factor(self.n)
    }

    pub fn theta(&self, quadratic: bool) -> f64 {
        if quadratic {
            self.theta_quad()
        } else {
            self.theta_general()
        }
    }
}

/// `(3n^2 - 3n + 1) / (2 n^2)`.
fn quad_factor(n: usize) -> f64 {
    let n = n as f64;
    (3.0 * n * n - 3.0 * n + 1.0) / (2.0 * n * n)
}

/// Potential benefit bound `(n/2) alpha (kappa - 1) T`; also bounds the benefit.
pub fn pot_bound(params: &BoundParams, horizon: u64) -> f64 {
    pot_bound_rate(params) * horizon as f64
}

/// Per-step potential benefit bound `(n/2) alpha (kappa - 1)`.
pub fn pot_bound_rate(params: &BoundParams) -> f64 {
    0.5 * params.n as f64 * params.alpha() * (params.kappa() - 1.0)
}

/// Finite-horizon expected regret bound
/// `C_0 sum_{t=1}^T eta^t + (1-p) sum_{t=0}^{T-1} eta^t (M_f + (T - t) theta)`,
/// evaluated with geometric-series identities.
pub fn reg_bound_finite(params: &BoundParams, horizon: u64, theta: f64) -> Result<f64> {
    let q = params.eta_gap()?;
    let eta = 1.0 - q;
    let t = horizon as f64;
    // 1 - eta^T, computed without cancellation.
    let decay = -(t * (-q).ln_1p()).exp_m1();
    // sum_{t=1}^T eta^t
    let s1 = eta * decay / q;
    // sum_{t=0}^{T-1} eta^t
    let s0 = decay / q;
    // sum_{t=0}^{T-1} (T - t) eta^t
    let weighted = (t * q - eta * decay) / (q * q);
    Ok(params.c0 * s1 + (1.0 - params.p) * (params.m_f() * s0 + theta * weighted))
}

/// Asymptotic bound on `lim E[Reg_T] / T`.
///
/// General class: `rho_R (n-1) beta (5 kappa - 3) / 2`; quadratics:
/// `rho_R (n-1) (3n^2 - 3n + 1)/(2n^2) beta (kappa - 1)`. At the boundaries
/// `p = 1` gives `0` and `p = 0` gives `+inf`.
pub fn reg_bound_asymptotic(params: &BoundParams, quadratic: bool) -> Result<f64> {
    if params.n < 2 {
        return Err(Error::config("n", "the contraction needs at least two agents"));
    }
    if params.p == 1.0 {
        return Ok(0.0);
    }
    if params.p == 0.0 {
        return Ok(f64::INFINITY);
    }
    let (n1, beta, kappa) = ((params.n - 1) as f64, params.beta(), params.kappa());
    let factor = if quadratic {
        quad_factor(params.n) * beta * (kappa - 1.0)
    } else {
        0.5 * beta * (5.0 * kappa - 3.0)
    };
    Ok(params.rho_r() * n1 * factor)
}

/// Worst-case gap `|f(x) - f(y)| <= (n/2)(n beta - alpha)` between feasible points.
pub fn crude_gap_bound(params: &BoundParams) -> f64 {
    params.m_f()
}
