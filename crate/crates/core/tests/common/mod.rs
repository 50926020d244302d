//! Brute-force oracles shared by the integration suites. None of these use
//! the dual bisection, the closed-form bound sums or the trajectory driver.

#![allow(dead_code)]

use open_rcd::allocation::{project_simplex, AllocationState};
use open_rcd::bounds::BoundParams;
use open_rcd::cost::{ClassParams, CostFunction, ReplacementDistribution, ReplacementMode};
use open_rcd::rcd::{rcd_update, RcdConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Projected gradient on `S_n` with step `1/beta`, run until the iterate stops
/// moving or `max_iter` is reached.
pub fn projected_gradient_optimum(funcs: &[CostFunction], max_iter: usize) -> Vec<f64> {
    let beta = funcs.iter().map(|f| f.class().beta()).fold(0.0, f64::max);
    let mut y = vec![1.0; funcs.len()];
    for _ in 0..max_iter {
        let step: Vec<f64> = y
            .iter()
            .zip(funcs)
            .map(|(&yi, f)| yi - f.grad(yi).unwrap() / beta)
            .collect();
        let next = project_simplex(&step);
        let moved = next
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        y = next;
        if moved == 0.0 {
            break;
        }
    }
    y
}

pub fn cost(funcs: &[CostFunction], x: &[f64]) -> f64 {
    funcs.iter().zip(x).map(|(f, &v)| f.eval(v).unwrap()).sum()
}

/// `C_0 sum_{t=1}^T eta^t + (1-p) sum_{t=0}^{T-1} eta^t (M_f + (T-t) theta)` by loops.
pub fn regret_bound_by_summation(params: &BoundParams, horizon: u64, theta: f64) -> f64 {
    let n = params.n as f64;
    let eta = 1.0 - params.p / (params.kappa() * (n - 1.0));
    let m_f = 0.5 * n * (params.beta() * n - params.alpha());
    let mut first = 0.0;
    for t in 1..=horizon {
        first += eta.powi(t as i32);
    }
    let mut second = 0.0;
    for t in 0..horizon {
        second += eta.powi(t as i32) * (m_f + (horizon - t) as f64 * theta);
    }
    params.c0 * first + (1.0 - params.p) * second
}

/// Mean suboptimality after one update, averaged over every unordered pair.
pub fn exhaustive_pair_average(s: &AllocationState, rcd: &RcdConfig, f_opt: f64) -> f64 {
    let n = s.n();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let next = rcd_update(s, i, j, rcd).unwrap();
            total += cost(next.funcs(), next.x()) - f_opt;
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Mean estimate-cost change over every choice of leaving agent, with a fixed newcomer.
pub fn exhaustive_replacement_average(s: &AllocationState, incoming: CostFunction) -> f64 {
    let n = s.n();
    let before = cost(s.funcs(), s.x());
    let nf = n as f64;
    let mut total = 0.0;
    for leaving in 0..n {
        let mut x = s.x().to_vec();
        let out = x[leaving];
        for (k, xk) in x.iter_mut().enumerate() {
            if k != leaving {
                *xk = (1.0 - 1.0 / nf) * *xk + out / nf;
            }
        }
        x[leaving] = 1.0;
        let mut funcs = s.funcs().to_vec();
        funcs[leaving] = incoming;
        total += cost(&funcs, &x) - before;
    }
    total / nf
}

/// Random point of `S_n` (normalised exponentials, scaled to sum `n`).
pub fn random_feasible(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut x: Vec<f64> = raw.iter().map(|v| v * n as f64 / total).collect();
    // Put the rounding residue on the largest coordinate.
    let residue = n as f64 - x.iter().sum::<f64>();
    let k = (0..n).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
    x[k] += residue;
    x
}

pub fn random_state(seed: u64, n: usize, mode: ReplacementMode, class: ClassParams) -> AllocationState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_feasible(&mut rng, n);
    let funcs = ReplacementDistribution::new(mode, class, rng.gen()).sample_n(n);
    AllocationState::new(x, funcs).unwrap()
}

/// Minimal timing + pass/fail reporter.
pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
}

impl Criterion {
    pub fn report(&self, passed: bool, detail: &str) -> bool {
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {} -- {detail}", self.id, self.title);
        passed
    }
}
