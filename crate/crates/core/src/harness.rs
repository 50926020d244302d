//! Monte Carlo experiments: many seeded trajectories aggregated at geometric
//! checkpoints and compared with the closed-form bounds.

use rand::Rng;

use crate::allocation::AllocationState;
use crate::bounds::{self, BoundParams};
use crate::cost::{ClassParams, ReplacementDistribution, ReplacementMode};
use crate::events::{
    apply_replacement, run_trajectory, EventStream, EventStreamConfig, Trajectory,
    TrajectoryRunner,
};
use crate::exec::{map_indexed, Execution};
use crate::metrics::MetricsLedger;
use crate::rcd::{rcd_update_in_place, RcdConfig, StepRule};
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Number of standard errors tolerated before a bound violation is flagged.
pub const FLAG_SIGMAS: f64 = 3.0;

/// Number of standard errors tolerated by the replacement impact study.
pub const IMPACT_SIGMAS: f64 = 5.0;

/// Minimum sample count for [`replacement_impact_study`].
pub const MIN_IMPACT_SAMPLES: u64 = 1_000;

/// Series labels used in [`AggregateResult`] and the aggregate CSV.
pub mod labels {
    pub const REG: &str = "reg";
    pub const BEN: &str = "ben";
    pub const POT: &str = "pot";
    pub const REG_AVG: &str = "reg_avg";
    pub const BEN_AVG: &str = "ben_avg";
    pub const POT_AVG: &str = "pot_avg";
    pub const POT_BOUND_AVG: &str = "bound_pot_avg";
    pub const REG_BOUND_GENERAL_AVG: &str = "bound_reg_general_avg";
    pub const REG_BOUND_GENERAL_ASYMPTOTIC: &str = "bound_reg_general_asymptotic";
    pub const REG_BOUND_QUAD_AVG: &str = "bound_reg_quadratic_avg";
    pub const REG_BOUND_QUAD_ASYMPTOTIC: &str = "bound_reg_quadratic_asymptotic";
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub class: ClassParams,
    /// Probability that an event is an update.
    pub p: f64,
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub mode: ReplacementMode,
    pub step: StepRule,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(
        n: usize,
        class: ClassParams,
        p: f64,
        horizon: u64,
        trials: u64,
        master_seed: u64,
        mode: ReplacementMode,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("n", format!("need at least two agents, got {n}")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::config("p", format!("must lie in (0, 1], got {p}")));
        }
        if horizon == 0 {
            return Err(Error::config("t", "horizon must be at least 1"));
        }
        if trials == 0 {
            return Err(Error::config("trials", "need at least one trial"));
        }
        Ok(Self {
            n,
            class,
            p,
            horizon,
            trials,
            master_seed,
            mode,
            step: StepRule::TwoBeta,
            workers: None,
            execution: Execution::default(),
        })
    }

    pub fn with_step(mut self, step: StepRule) -> Self {
        self.step = step;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn rho_r(&self) -> f64 {
        (1.0 - self.p) / self.p
    }

    pub fn rcd_config(&self) -> RcdConfig {
        RcdConfig::new(self.step, self.class)
    }

    pub fn stream_config(&self, seed: u64) -> Result<EventStreamConfig> {
        EventStreamConfig::new(self.p, self.n, self.mode, self.class, seed)
    }

    pub fn bound_params(&self, c0: f64) -> Result<BoundParams> {
        BoundParams::new(self.n, self.class, self.p, c0)
    }
}

/// Seed of trial `index`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    seed::derive(master, stream::TRIAL, index)
}

/// Selfish starting point with functions drawn from the replacement law.
pub fn initial_state(cfg: &ExperimentConfig, trial_seed: u64) -> Result<AllocationState> {
    let mut dist = ReplacementDistribution::new(
        cfg.mode,
        cfg.class,
        seed::derive(trial_seed, stream::INITIAL_FUNCTIONS, 0),
    );
    AllocationState::selfish(dist.sample_n(cfg.n))
}

/// Powers of two up to `horizon`, with `horizon` itself appended.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = std::iter::successors(Some(1u64), |t| t.checked_mul(2))
        .take_while(|&t| t <= horizon)
        .collect();
    if grid.last() != Some(&horizon) {
        grid.push(horizon);
    }
    grid
}

struct TrialOutcome {
    c0: f64,
    ledgers: Vec<MetricsLedger>,
}

fn run_trial(cfg: &ExperimentConfig, index: u64, grid: &[u64]) -> Result<TrialOutcome> {
    let seed = trial_seed(cfg.master_seed, index);
    let x0 = initial_state(cfg, seed)?;
    let mut runner = TrajectoryRunner::new(x0, cfg.stream_config(seed)?, cfg.rcd_config())?;
    let mut ledger = MetricsLedger::new();
    let mut ledgers = Vec::with_capacity(grid.len());
    let mut next = grid.iter().copied().peekable();
    for t in 1..=cfg.horizon {
        let rec = runner.step()?;
        ledger.accumulate(rec.f_est, rec.f_opt, rec.f_selfish)?;
        if next.peek() == Some(&t) {
            ledgers.push(ledger);
            next.next();
        }
    }
    Ok(TrialOutcome {
        c0: runner.initial().c0,
        ledgers,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub label: String,
    pub mean: Vec<f64>,
    /// Standard error of the mean; zero for bound curves.
    pub stderr: Vec<f64>,
}

impl SeriesStats {
    fn bound(label: &str, values: Vec<f64>) -> Self {
        Self {
            label: label.to_owned(),
            stderr: vec![0.0; values.len()],
            mean: values,
        }
    }
}

/// Empirical mean exceeding its bound by more than [`FLAG_SIGMAS`] standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub checkpoint: u64,
    pub series: String,
    pub bound: String,
    pub mean: f64,
    pub stderr: f64,
    pub bound_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub checkpoints: Vec<u64>,
    pub trials: u64,
    pub mean_c0: f64,
    pub series: Vec<SeriesStats>,
    pub violations: Vec<BoundViolation>,
}

impl AggregateResult {
    pub fn series(&self, label: &str) -> Option<&SeriesStats> {
        self.series.iter().find(|s| s.label == label)
    }

    pub fn flagged(&self) -> bool {
        !self.violations.is_empty()
    }
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / count;
    if count < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// Runs `cfg.trials` independent trajectories and aggregates the metrics.
///
/// Deterministic in `(cfg, master_seed, trials)`: each trial only depends on
/// its derived seed and results are reduced in trial order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    let grid = checkpoints(cfg.horizon);
    let outcomes = map_indexed(cfg.trials, cfg.execution, cfg.workers, |index| {
        run_trial(cfg, index, &grid)
    })?;

    let trials = cfg.trials as f64;
    let mean_c0 = outcomes.iter().map(|o| o.c0).sum::<f64>() / trials;

    type Pick = fn(&MetricsLedger) -> f64;
    let empirical: [(&str, Pick, bool); 6] = [
        (labels::REG, |l| l.reg, false),
        (labels::BEN, |l| l.ben, false),
        (labels::POT, |l| l.pot, false),
        (labels::REG_AVG, |l| l.reg, true),
        (labels::BEN_AVG, |l| l.ben, true),
        (labels::POT_AVG, |l| l.pot, true),
    ];
    let mut series = Vec::new();
    for (label, pick, averaged) in empirical {
        let mut stats = SeriesStats {
            label: label.to_owned(),
            mean: Vec::with_capacity(grid.len()),
            stderr: Vec::with_capacity(grid.len()),
        };
        for (k, &t) in grid.iter().enumerate() {
            let scale = if averaged { t as f64 } else { 1.0 };
            let (m, se) = mean_and_stderr(outcomes.iter().map(|o| pick(&o.ledgers[k]) / scale));
            stats.mean.push(m);
            stats.stderr.push(se);
        }
        series.push(stats);
    }

    let params = cfg.bound_params(mean_c0)?;
    let quadratic = cfg.mode.is_quadratic();
    let pot_rate = bounds::pot_bound_rate(&params);
    series.push(SeriesStats::bound(
        labels::POT_BOUND_AVG,
        vec![pot_rate; grid.len()],
    ));
    let finite_rate = |theta: f64| -> Result<Vec<f64>> {
        grid.iter()
            .map(|&t| Ok(bounds::reg_bound_finite(&params, t, theta)? / t as f64))
            .collect()
    };
    series.push(SeriesStats::bound(
        labels::REG_BOUND_GENERAL_AVG,
        finite_rate(params.theta_general())?,
    ));
    series.push(SeriesStats::bound(
        labels::REG_BOUND_GENERAL_ASYMPTOTIC,
        vec![bounds::reg_bound_asymptotic(&params, false)?; grid.len()],
    ));
    if quadratic {
        series.push(SeriesStats::bound(
            labels::REG_BOUND_QUAD_AVG,
            finite_rate(params.theta_quad())?,
        ));
        series.push(SeriesStats::bound(
            labels::REG_BOUND_QUAD_ASYMPTOTIC,
            vec![bounds::reg_bound_asymptotic(&params, true)?; grid.len()],
        ));
    }

    let mut result = AggregateResult {
        checkpoints: grid,
        trials: cfg.trials,
        mean_c0,
        series,
        violations: Vec::new(),
    };
    let mut checks = vec![
        (labels::POT_AVG, labels::POT_BOUND_AVG),
        (labels::REG_AVG, labels::REG_BOUND_GENERAL_AVG),
    ];
    if quadratic {
        checks.push((labels::REG_AVG, labels::REG_BOUND_QUAD_AVG));
    }
    let mut violations = Vec::new();
    for (empirical, bound) in checks {
        let (e, b) = (
            result.series(empirical).expect("empirical series"),
            result.series(bound).expect("bound series"),
        );
        for (k, &t) in result.checkpoints.iter().enumerate() {
            if e.mean[k] > b.mean[k] + FLAG_SIGMAS * e.stderr[k] {
                violations.push(BoundViolation {
                    checkpoint: t,
                    series: empirical.to_owned(),
                    bound: bound.to_owned(),
                    mean: e.mean[k],
                    stderr: e.stderr[k],
                    bound_value: b.mean[k],
                });
            }
        }
    }
    result.violations = violations;
    Ok(result)
}

/// Empirical effect of one replacement on the estimate cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactReport {
    pub samples: u64,
    pub mean: f64,
    pub stderr: f64,
    /// Applicable bound: quadratic when every function is `phi x^2`.
    pub theta: f64,
    pub quadratic: bool,
    pub theta_general: f64,
    pub theta_quad: f64,
}

impl ImpactReport {
    pub fn within_bound(&self) -> bool {
        self.mean <= self.theta + IMPACT_SIGMAS * self.stderr + 1e-12
    }
}

/// Warm-up length before the measured replacement: `ceil(10 kappa (n - 1))` updates.
pub fn impact_warmup(cfg: &ExperimentConfig) -> u64 {
    (10.0 * cfg.class.kappa() * (cfg.n - 1) as f64).ceil() as u64
}

/// Samples `Delta f` over single replacements applied to warmed-up states.
///
/// Each sample draws fresh functions, runs a closed-system warm-up, then
/// replaces a uniformly chosen agent by a function from the configured law.
pub fn replacement_impact_study(cfg: &ExperimentConfig, samples: u64) -> Result<ImpactReport> {
    if samples < MIN_IMPACT_SAMPLES {
        return Err(Error::config(
            "samples",
            format!("need at least {MIN_IMPACT_SAMPLES}, got {samples}"),
        ));
    }
    let warmup = impact_warmup(cfg);
    let rcd = cfg.rcd_config();
    let deltas = map_indexed(samples, cfg.execution, cfg.workers, |index| {
        let sample_seed = seed::derive(cfg.master_seed, stream::IMPACT, index);
        let mut state = initial_state(cfg, sample_seed)?;
        let closed = EventStreamConfig::new(1.0, cfg.n, cfg.mode, cfg.class, sample_seed)?;
        let mut updates = EventStream::new(closed);
        for _ in 0..warmup {
            if let crate::events::EventKind::Update { i, j } = updates.next_event().kind {
                rcd_update_in_place(&mut state, i, j, &rcd)?;
            }
        }
        let mut rng = seed::rng_from(seed::derive(sample_seed, stream::REPLACEMENTS, 1));
        let mut dist = ReplacementDistribution::new(
            cfg.mode,
            cfg.class,
            seed::derive(sample_seed, stream::REPLACEMENTS, 2),
        );
        let before = state.global_cost()?;
        apply_replacement(&mut state, rng.gen_range(0..cfg.n), dist.sample())?;
        Ok(state.global_cost()? - before)
    })?;
    let (mean, stderr) = mean_and_stderr(deltas.iter().copied());
    let params = cfg.bound_params(0.0)?;
    let quadratic = cfg.mode.is_quadratic();
    Ok(ImpactReport {
        samples,
        mean,
        stderr,
        theta: params.theta(quadratic),
        quadratic,
        theta_general: params.theta_general(),
        theta_quad: params.theta_quad(),
    })
}

/// One recorded trajectory, identical to trial 0 of [`run_experiment`].
pub fn single_realization_trace(cfg: &ExperimentConfig) -> Result<Trajectory> {
    let seed = trial_seed(cfg.master_seed, 0);
    let x0 = initial_state(cfg, seed)?;
    run_trajectory(x0, cfg.stream_config(seed)?, cfg.rcd_config(), cfg.horizon)
}
