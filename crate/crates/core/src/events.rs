//! i.i.d. event stream (pairwise updates and replacements) and the trajectory
//! driver that applies it to an allocation.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{default_tolerance, selfish_point, solve_optimum, AllocationState};
use crate::cost::{ClassParams, CostFunction, ReplacementDistribution, ReplacementMode};
use crate::rcd::{rcd_update_in_place, RcdConfig};
use crate::seed::{self, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Update { i: usize, j: usize },
    Replacement { leaving: usize, incoming: CostFunction },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// 1-based index of the event in its stream.
    pub t: u64,
    pub kind: EventKind,
}

/// Parameters of the event stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventStreamConfig {
    /// Probability that an event is an update.
    pub p: f64,
    pub n: usize,
    pub mode: ReplacementMode,
    pub class: ClassParams,
    pub seed: u64,
}

impl EventStreamConfig {
    pub fn new(
        p: f64,
        n: usize,
        mode: ReplacementMode,
        class: ClassParams,
        seed: u64,
    ) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::config("p", format!("must lie in (0, 1], got {p}")));
        }
        if n < 2 {
            return Err(Error::config("n", format!("need at least two agents, got {n}")));
        }
        Ok(Self {
            p,
            n,
            mode,
            class,
            seed,
        })
    }

    /// Odds of a replacement against an update, `(1 - p) / p`.
    pub fn rho_r(&self) -> f64 {
        (1.0 - self.p) / self.p
    }

    /// Expected number of events between two replacements, `1 / (1 - p)`.
    pub fn events_per_replacement(&self) -> f64 {
        1.0 / (1.0 - self.p)
    }
}

/// Update probability corresponding to replacement odds `rho_r`.
pub fn p_from_rho_r(rho_r: f64) -> f64 {
    1.0 / (1.0 + rho_r)
}

pub struct EventStream {
    cfg: EventStreamConfig,
    rng: ChaCha8Rng,
    dist: ReplacementDistribution,
    t: u64,
}

impl EventStream {
    pub fn new(cfg: EventStreamConfig) -> Self {
        Self {
            rng: seed::rng_from(seed::derive(cfg.seed, stream::EVENTS, 0)),
            dist: ReplacementDistribution::new(
                cfg.mode,
                cfg.class,
                seed::derive(cfg.seed, stream::REPLACEMENTS, 0),
            ),
            cfg,
            t: 0,
        }
    }

    pub fn config(&self) -> &EventStreamConfig {
        &self.cfg
    }

    /// Draws the next event: with probability `p` a uniformly chosen unordered
    /// pair `i < j`, otherwise a uniformly chosen leaving agent and a fresh
    /// incoming function.
    pub fn next_event(&mut self) -> Event {
        self.t += 1;
        let n = self.cfg.n;
        let kind = if self.cfg.p >= 1.0 || self.rng.gen_bool(self.cfg.p) {
            let a = self.rng.gen_range(0..n);
            let mut b = self.rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            EventKind::Update {
                i: a.min(b),
                j: a.max(b),
            }
        } else {
            EventKind::Replacement {
                leaving: self.rng.gen_range(0..n),
                incoming: self.dist.sample(),
            }
        };
        Event { t: self.t, kind }
    }
}

/// Replacement of agent `leaving` by a newcomer holding `incoming`.
///
/// The leaving agent first broadcasts its estimate and every other agent moves
/// `x_i += (x_leaving - x_i) / n`, which leaves `n - 1` units among them. The
/// newcomer then takes the vacated slot with estimate `1`.
pub fn apply_replacement(
    s: &mut AllocationState,
    leaving: usize,
    incoming: CostFunction,
) -> Result<()> {
    let n = s.n();
    if leaving >= n {
        return Err(Error::Index { index: leaving, n });
    }
    s.check_feasible()?;
    let (x, funcs) = s.parts_mut();
    let out = x[leaving];
    let nf = n as f64;
    for (k, xk) in x.iter_mut().enumerate() {
        if k != leaving {
            *xk += (out - *xk) / nf;
        }
    }
    x[leaving] = 1.0;
    funcs[leaving] = incoming;
    Ok(())
}

/// Compact event description for trajectory records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventTag {
    Update { i: usize, j: usize },
    Replacement { leaving: usize },
}

impl EventTag {
    pub fn kind_label(&self) -> &'static str {
        match self {
            EventTag::Update { .. } => "update",
            EventTag::Replacement { .. } => "replacement",
        }
    }
}

impl fmt::Display for EventTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventTag::Update { i, j } => write!(f, "{i}-{j}"),
            EventTag::Replacement { leaving } => write!(f, "{leaving}"),
        }
    }
}

/// Values recorded after applying event `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub event: EventTag,
    pub f_est: f64,
    pub f_opt: f64,
    pub f_selfish: f64,
    /// `C_t = f_est - f_opt`.
    pub c: f64,
    /// Change of the estimate cost caused by this event.
    pub d_f: f64,
    /// Change of the optimal cost caused by this event.
    pub d_fstar: f64,
}

/// Cost function handed to a newcomer, kept for trajectory dumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub t: u64,
    pub slot: usize,
    pub function: CostFunction,
}

/// Values at `t = 0`, before any event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialValues {
    pub f_est: f64,
    pub f_opt: f64,
    pub f_selfish: f64,
    pub c0: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: InitialValues,
    pub initial_functions: Vec<CostFunction>,
    pub records: Vec<StepRecord>,
    pub arrivals: Vec<Arrival>,
}

impl Trajectory {
    pub fn horizon(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn replacement_count(&self) -> usize {
        self.arrivals.len()
    }
}

/// Step-by-step trajectory driver, for streaming aggregation without storing
/// per-step records.
pub struct TrajectoryRunner {
    state: AllocationState,
    stream: EventStream,
    rcd: RcdConfig,
    tol: f64,
    f_est: f64,
    f_opt: f64,
    f_selfish: f64,
    initial: InitialValues,
}

impl TrajectoryRunner {
    pub fn new(x0: AllocationState, cfg: EventStreamConfig, rcd: RcdConfig) -> Result<Self> {
        if x0.n() != cfg.n {
            return Err(Error::config(
                "n",
                format!("initial state has {} agents, stream expects {}", x0.n(), cfg.n),
            ));
        }
        let tol = default_tolerance(x0.n());
        let f_est = x0.global_cost()?;
        let f_opt = solve_optimum(x0.funcs(), tol)?.point.value;
        let f_selfish = selfish_point(&x0).value;
        let initial = InitialValues {
            f_est,
            f_opt,
            f_selfish,
            c0: (f_est - f_opt).max(0.0),
        };
        Ok(Self {
            state: x0,
            stream: EventStream::new(cfg),
            rcd,
            tol,
            f_est,
            f_opt,
            f_selfish,
            initial,
        })
    }

    pub fn initial(&self) -> InitialValues {
        self.initial
    }

    pub fn state(&self) -> &AllocationState {
        &self.state
    }

    /// Draws and applies one event; `on_arrival` sees every incoming function.
    pub fn step_with(&mut self, mut on_arrival: impl FnMut(Arrival)) -> Result<StepRecord> {
        let event = self.stream.next_event();
        let (tag, d_f, d_fstar) = match event.kind {
            EventKind::Update { i, j } => {
                let delta = rcd_update_in_place(&mut self.state, i, j, &self.rcd)?;
                // The optimum is unchanged by updates.
                self.f_est = self.state.cost_unchecked();
                (EventTag::Update { i, j }, delta, 0.0)
            }
            EventKind::Replacement { leaving, incoming } => {
                apply_replacement(&mut self.state, leaving, incoming)?;
                on_arrival(Arrival {
                    t: event.t,
                    slot: leaving,
                    function: incoming,
                });
                let f_est = self.state.cost_unchecked();
                let f_opt = solve_optimum(self.state.funcs(), self.tol)?.point.value;
                let d_f = f_est - self.f_est;
                let d_fstar = f_opt - self.f_opt;
                self.f_est = f_est;
                self.f_opt = f_opt;
                self.f_selfish = selfish_point(&self.state).value;
                (EventTag::Replacement { leaving }, d_f, d_fstar)
            }
        };
        self.state.check_feasible()?;
        Ok(StepRecord {
            t: event.t,
            event: tag,
            f_est: self.f_est,
            f_opt: self.f_opt,
            f_selfish: self.f_selfish,
            c: self.f_est - self.f_opt,
            d_f,
            d_fstar,
        })
    }

    pub fn step(&mut self) -> Result<StepRecord> {
        self.step_with(|_| {})
    }
}

/// Runs `horizon` events from `x0` and records every step.
pub fn run_trajectory(
    x0: AllocationState,
    cfg: EventStreamConfig,
    rcd: RcdConfig,
    horizon: u64,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::config("t", "horizon must be at least 1"));
    }
    let initial_functions = x0.funcs().to_vec();
    let mut runner = TrajectoryRunner::new(x0, cfg, rcd)?;
    let mut records = Vec::with_capacity(horizon as usize);
    let mut arrivals = Vec::new();
    for _ in 0..horizon {
        records.push(runner.step_with(|a| arrivals.push(a))?);
    }
    Ok(Trajectory {
        initial: runner.initial(),
        initial_functions,
        records,
        arrivals,
    })
}
