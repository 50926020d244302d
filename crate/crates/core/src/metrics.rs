//! Accumulated performance metrics of a trajectory.
//!
//! Per step `t`, with the values evaluated after event `t`:
//!
//! * regret increment `f(x^t) - f(x*^t)`
//! * benefit increment `f(1_n) - f(x^t)`
//! * potential benefit increment `f(1_n) - f(x*^t)`
//!
//! so that `pot = ben + reg` at every step.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on `f_opt <= f_est` before the optimum is declared broken.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLedger {
    pub reg: f64,
    pub ben: f64,
    pub pot: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub reg: f64,
    pub ben: f64,
    pub pot: f64,
}

impl MetricsLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accumulate(&mut self, f_est: f64, f_opt: f64, f_selfish: f64) -> Result<()> {
        if f_opt > f_est + ORACLE_TOL {
            return Err(Error::OracleViolation { f_opt, f_est });
        }
        self.reg += f_est - f_opt;
        self.ben += f_selfish - f_est;
        self.pot += f_selfish - f_opt;
        self.steps += 1;
        Ok(())
    }

    pub fn averaged(&self) -> Result<Averages> {
        if self.steps == 0 {
            return Err(Error::EmptyLedger);
        }
        let t = self.steps as f64;
        Ok(Averages {
            reg: self.reg / t,
            ben: self.ben / t,
            pot: self.pot / t,
        })
    }

    /// Relative defect of `pot = ben + reg`.
    pub fn identity_defect(&self) -> f64 {
        (self.pot - self.ben - self.reg).abs() / self.pot.abs().max(1.0)
    }
}
