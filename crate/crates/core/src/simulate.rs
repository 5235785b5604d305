//! Monte Carlo simulation of the controlled surplus under barrier strategies.
//!
//! Gains arrive at exact exponential times. Between gains the surplus moves
//! according to one of three kernels:
//!
//! * no Brownian part (`σ_p = σ_R = 0`): the linear ODE `u' = ru − p` is
//!   integrated exactly, including exact hitting times of `0` and the barrier;
//! * Brownian motion with drift (`r = σ_R = 0`, `σ_p > 0`): exact Gaussian
//!   increments, with the extreme of the Brownian bridge sampled so that
//!   reflection at a barrier (or ruin) inside a step is captured exactly.
//!   Steps are sized so that only the nearer barrier is reachable;
//! * everything else: Euler–Maruyama with step `dt` and projection onto
//!   `[0, barrier]` after each step.
//!
//! Every path draws from its own ChaCha stream seeded with `seed ^ stream`,
//! so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{CostParams, ModelParams};
use crate::numerics::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation setting {field}: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("barrier search bounds must satisfy 0 <= lo < hi (got [{lo}, {hi}])")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("barrier profile is flat: variation {variation:e} is below twice the largest standard error {max_std_err:e}")]
    FlatProfile { variation: f64, max_std_err: f64, profile: Vec<ProfilePoint> },
}

/// Simulation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    /// Euler step; also the step cap of the bridge kernel near a barrier.
    pub dt: f64,
    /// Paths are truncated at this time.
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Pair paths with negated Gaussian increments.
    pub antithetic: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, horizon: 240.0, n_paths: 10_000, seed: 20_240_601, antithetic: false }
    }
}

impl SimConfig {
    /// Horizon making the discount factor at truncation `e^{−12}` (or fifty mean
    /// inter-arrival times, whichever is longer).
    pub fn default_horizon(delta: f64, lambda: f64) -> f64 {
        (12.0 / delta).max(50.0 / lambda)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field, message: &str| Err(SimError::InvalidConfig { field, message: message.to_string() });
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("sim.dt", "must be positive");
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return bad("sim.horizon", "must be finite and at least dt");
        }
        if self.n_paths == 0 {
            return bad("sim.n_paths", "must be positive");
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return bad("sim.n_paths", "must be even when antithetic pairing is enabled");
        }
        Ok(())
    }
}

/// A barrier strategy, optionally with injections keeping the surplus at or above zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Strategy {
    pub barrier: f64,
    pub inject: bool,
}

/// Discounted cash flows of one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathOutcome {
    pub discounted_dividends: f64,
    pub discounted_injections: f64,
    /// `f64::INFINITY` when the path survives to the horizon.
    pub ruin_time: f64,
    /// `α · dividends − β · injections`.
    pub payoff: f64,
}

/// Largest bridge-kernel step taken near a barrier (never below `dt`).
const BRIDGE_STEP_CAP: f64 = 0.05;
/// Number of standard deviations a step must keep between the surplus and
/// any barrier it is not allowed to reach.
const SAFETY_SIGMAS: f64 = 8.0;

struct Path<'a> {
    model: &'a ModelParams,
    delta: f64,
    barrier: f64,
    inject: bool,
    dt: f64,
    sign: f64,
    rng: ChaCha8Rng,
    t: f64,
    u: f64,
    dividends: CompensatedSum,
    injections: CompensatedSum,
}

enum Flow {
    Continue,
    Ruined(f64),
}

impl Path<'_> {
    fn normal(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sign * z
    }

    fn pay(&mut self, amount: f64, time: f64) {
        if amount > 0.0 {
            self.dividends.add(amount * (-self.delta * time).exp());
        }
    }

    fn fund(&mut self, amount: f64, time: f64) {
        if amount > 0.0 {
            self.injections.add(amount * (-self.delta * time).exp());
        }
    }

    /// Present value at time 0 of a unit-rate stream on `[t, t + h]`.
    fn annuity(&self, h: f64) -> f64 {
        (-self.delta * self.t).exp() * -(-self.delta * h).exp_m1() / self.delta
    }

    /// Exact flow of `u' = ru − p` on `[t, t + h]` with reflection at the barrier
    /// and at zero (or absorption at zero).
    fn deterministic(&mut self, h: f64) -> Flow {
        let (r, p, b) = (self.model.r, self.model.p, self.barrier);
        let end = self.t + h;
        while self.t < end {
            let rem = end - self.t;
            let drift = r * self.u - p;
            if self.u >= b && r * b - p > 0.0 {
                let a = self.annuity(rem);
                self.dividends.add((r * b - p) * a);
                self.t = end;
                break;
            }
            if self.u <= 0.0 {
                if !self.inject {
                    return Flow::Ruined(self.t);
                }
                let a = self.annuity(rem);
                self.injections.add(p * a);
                self.t = end;
                break;
            }
            // Time until the level `target` is reached, if it is reached at all.
            let hit = if drift < 0.0 {
                Some((0.0, if r == 0.0 { self.u / p } else { (p / (p - r * self.u)).ln() / r }))
            } else if drift > 0.0 && b.is_finite() {
                let c = p / r;
                Some((b, ((b - c) / (self.u - c)).ln() / r))
            } else {
                None
            };
            match hit {
                Some((level, s)) if s <= rem => {
                    self.t += s;
                    self.u = level;
                }
                _ => {
                    self.u = if r == 0.0 {
                        self.u - p * rem
                    } else {
                        let g = (r * rem).exp();
                        self.u * g - p * (g - 1.0) / r
                    };
                    self.u = self.u.clamp(0.0, b);
                    self.t = end;
                }
            }
        }
        Flow::Continue
    }

    /// Largest `h` with `K σ √h + p h ≤ distance`.
    fn free_step(&self, distance: f64) -> f64 {
        let (sigma, p) = (self.model.sigma_p, self.model.p);
        let k = SAFETY_SIGMAS * sigma;
        let s = if p > 0.0 { (-k + (k * k + 4.0 * p * distance).sqrt()) / (2.0 * p) } else { distance / k };
        s * s
    }

    /// Brownian motion with drift `−p`, reflected at the barrier and at zero
    /// (or killed at zero), on `[t, t + h]`.
    fn levy(&mut self, h: f64) -> Flow {
        let (sigma, p, b) = (self.model.sigma_p, self.model.p, self.barrier);
        let end = self.t + h;
        let cap = BRIDGE_STEP_CAP.max(self.dt);
        while self.t < end {
            let rem = end - self.t;
            let up = b - self.u;
            let down = self.u;
            let free = self.free_step(up.min(down));
            if free >= cap.min(rem) {
                let h = rem.min(free);
                self.u += -p * h + sigma * h.sqrt() * self.normal();
                self.t += h;
                continue;
            }
            let upper_active = up < down;
            let far = self.free_step(if upper_active { down } else { up });
            if far < self.dt.min(rem) {
                // The band is too narrow for a one-sided bridge step.
                if let Flow::Ruined(t) = self.euler(rem.min(self.dt)) {
                    return Flow::Ruined(t);
                }
                continue;
            }
            let h = rem.min(far).min(cap);
            let x = -p * h + sigma * h.sqrt() * self.normal();
            let v: f64 = 1.0 - self.rng.random::<f64>();
            let spread = (x * x - 2.0 * sigma * sigma * h * v.ln()).sqrt();
            let mid = self.t + 0.5 * h;
            if upper_active {
                let peak = 0.5 * (x + spread);
                let paid = (self.u + peak - b).max(0.0);
                self.pay(paid, mid);
                self.u += x - paid;
            } else {
                let trough = 0.5 * (x - spread);
                let shortfall = -(self.u + trough);
                if shortfall >= 0.0 {
                    if !self.inject {
                        return Flow::Ruined(self.t + h);
                    }
                    self.fund(shortfall, mid);
                    self.u += x + shortfall;
                } else {
                    self.u += x;
                }
            }
            self.u = self.u.clamp(0.0, b);
            self.t += h;
        }
        Flow::Continue
    }

    /// One Euler–Maruyama step of length `h` followed by projection.
    fn euler(&mut self, h: f64) -> Flow {
        let m = self.model;
        let sq = h.sqrt();
        let dwp = sq * self.normal();
        let dw0 = sq * self.normal();
        let dwr = m.rho * dwp + (1.0 - m.rho * m.rho).max(0.0).sqrt() * dw0;
        self.u += (m.r * self.u - m.p) * h + m.sigma_p * dwp + m.sigma_r * self.u * dwr;
        self.t += h;
        self.project()
    }

    fn project(&mut self) -> Flow {
        if self.u > self.barrier {
            self.pay(self.u - self.barrier, self.t);
            self.u = self.barrier;
        }
        if self.u < 0.0 || (!self.inject && self.u <= 0.0) {
            if !self.inject {
                return Flow::Ruined(self.t);
            }
            self.fund(-self.u, self.t);
            self.u = 0.0;
        }
        Flow::Continue
    }

    fn euler_segment(&mut self, h: f64) -> Flow {
        let end = self.t + h;
        while self.t < end {
            let step = (end - self.t).min(self.dt);
            if let Flow::Ruined(t) = self.euler(step) {
                return Flow::Ruined(t);
            }
        }
        self.t = end;
        Flow::Continue
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kernel {
    Deterministic,
    Levy,
    Euler,
}

fn kernel_for(model: &ModelParams) -> Kernel {
    if model.sigma_p == 0.0 && model.sigma_r == 0.0 {
        Kernel::Deterministic
    } else if model.r == 0.0 && model.sigma_r == 0.0 {
        Kernel::Levy
    } else {
        Kernel::Euler
    }
}

/// Stream used by path `index`: antithetic partners share a stream.
fn stream_of(index: u64, antithetic: bool) -> (u64, f64) {
    if antithetic {
        (index / 2, if index % 2 == 0 { 1.0 } else { -1.0 })
    } else {
        (index, 1.0)
    }
}

/// Simulates path `path_index` of the run described by `config`.
pub fn simulate_path(
    model: &ModelParams,
    costs: &CostParams,
    strategy: Strategy,
    x0: f64,
    config: &SimConfig,
    path_index: u64,
) -> PathOutcome {
    let (stream, sign) = stream_of(path_index, config.antithetic);
    let mut path = Path {
        model,
        delta: costs.delta,
        barrier: strategy.barrier.max(0.0),
        inject: strategy.inject,
        dt: config.dt,
        sign,
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ stream),
        t: 0.0,
        u: x0.max(0.0),
        dividends: CompensatedSum::new(),
        injections: CompensatedSum::new(),
    };
    let kernel = kernel_for(model);
    let ruin_time = run(&mut path, kernel, config.horizon);
    let dividends = path.dividends.value();
    let injections = path.injections.value();
    PathOutcome {
        discounted_dividends: dividends,
        discounted_injections: injections,
        ruin_time,
        payoff: costs.alpha * dividends - costs.beta * injections,
    }
}

fn run(path: &mut Path<'_>, kernel: Kernel, horizon: f64) -> f64 {
    if let Flow::Ruined(t) = path.project() {
        return t;
    }
    let lambda = path.model.lambda;
    let mut next_jump = if lambda > 0.0 { path.rng.sample::<f64, _>(Exp1) / lambda } else { f64::INFINITY };
    while path.t < horizon {
        let h = next_jump.min(horizon) - path.t;
        let flow = match kernel {
            Kernel::Deterministic => path.deterministic(h),
            Kernel::Levy => path.levy(h),
            Kernel::Euler => path.euler_segment(h),
        };
        if let Flow::Ruined(t) = flow {
            return t;
        }
        path.t = next_jump.min(horizon);
        if next_jump <= horizon {
            path.u += path.model.jump.sample(&mut path.rng);
            if let Flow::Ruined(t) = path.project() {
                return t;
            }
            next_jump += path.rng.sample::<f64, _>(Exp1) / lambda;
        }
    }
    f64::INFINITY
}

/// All paths of a run, in path order.
pub fn simulate_paths(
    model: &ModelParams,
    costs: &CostParams,
    strategy: Strategy,
    x0: f64,
    config: &SimConfig,
) -> Vec<PathOutcome> {
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(model, costs, strategy, x0, config, i))
        .collect()
}

/// Sample mean of the discounted payoff with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
    /// Bound on the discounted value of everything after the horizon.
    pub truncation_bound: f64,
}

impl Estimate {
    /// Mean and standard error of `payoffs`; with antithetic pairing the
    /// error is computed from the pair averages.
    pub fn from_payoffs(payoffs: &[f64], antithetic: bool, truncation_bound: f64) -> Self {
        let units: Vec<f64> = if antithetic {
            payoffs.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
        } else {
            payoffs.to_vec()
        };
        let m = units.len() as f64;
        let mut sum = CompensatedSum::new();
        for v in &units {
            sum.add(*v);
        }
        let mean = sum.value() / m;
        let mut sq = CompensatedSum::new();
        for v in &units {
            sq.add((v - mean) * (v - mean));
        }
        let var = if units.len() > 1 { sq.value() / (m - 1.0) } else { 0.0 };
        Self { mean, std_err: (var / m).sqrt(), n: payoffs.len(), truncation_bound }
    }
}

/// Bound on the discounted cash flows after the horizon, in absolute value.
///
/// From the horizon on, dividends cannot exceed the barrier plus the gains,
/// the returns earned below the barrier and the running maximum of the
/// Brownian part; injections cannot exceed the expenses plus the running
/// maximum of the Brownian part.
pub fn truncation_bound(model: &ModelParams, costs: &CostParams, strategy: Strategy, config: &SimConfig) -> f64 {
    let d = costs.delta;
    let b = strategy.barrier.max(0.0);
    let noise = (model.sigma_p + model.sigma_r * b) * (std::f64::consts::PI / d).sqrt();
    let dividends = b + (model.lambda * model.jump.mean() + model.r * b) / d + noise;
    let injections = if strategy.inject { model.p / d + noise } else { 0.0 };
    (-d * config.horizon).exp() * (costs.alpha * dividends + costs.beta * injections)
}

/// Monte Carlo value of `strategy` started from `x0`.
pub fn estimate_value(
    model: &ModelParams,
    costs: &CostParams,
    strategy: Strategy,
    x0: f64,
    config: &SimConfig,
) -> Estimate {
    let payoffs: Vec<f64> = simulate_paths(model, costs, strategy, x0, config).iter().map(|o| o.payoff).collect();
    Estimate::from_payoffs(&payoffs, config.antithetic, truncation_bound(model, costs, strategy, config))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub barrier: f64,
    pub mean: f64,
    pub std_err: f64,
}

/// Result of an empirical barrier search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarrierSearch {
    pub barrier: f64,
    pub value: f64,
    pub std_err: f64,
    pub profile: Vec<ProfilePoint>,
}

/// Number of barriers on the coarse search grid.
pub const SEARCH_GRID: usize = 11;

/// Maximises the simulated value at `x0` over barriers in `bounds` using common
/// random numbers, then refines once at the vertex of a local quadratic fit.
pub fn search_barrier(
    model: &ModelParams,
    costs: &CostParams,
    inject: bool,
    x0: f64,
    bounds: (f64, f64),
    config: &SimConfig,
) -> Result<BarrierSearch, SimError> {
    let (lo, hi) = bounds;
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        return Err(SimError::InvalidBounds { lo, hi });
    }
    config.validate()?;
    let step = (hi - lo) / (SEARCH_GRID - 1) as f64;
    let point = |barrier: f64| {
        let e = estimate_value(model, costs, Strategy { barrier, inject }, x0, config);
        ProfilePoint { barrier, mean: e.mean, std_err: e.std_err }
    };
    let mut profile: Vec<ProfilePoint> = (0..SEARCH_GRID).map(|i| point(lo + step * i as f64)).collect();
    let best = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .map(|(i, _)| i)
        .expect("non-empty profile");
    let max_se = profile.iter().map(|p| p.std_err).fold(0.0, f64::max);
    let (min_mean, max_mean) = profile
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.mean), b.max(p.mean)));
    let variation = max_mean - min_mean;
    if variation < 2.0 * max_se {
        return Err(SimError::FlatProfile { variation, max_std_err: max_se, profile });
    }
    let mut chosen = profile[best];
    if best > 0 && best + 1 < SEARCH_GRID {
        let (fm, f0, fp) = (profile[best - 1].mean, profile[best].mean, profile[best + 1].mean);
        let curvature = fp - 2.0 * f0 + fm;
        if curvature < 0.0 {
            let vertex = profile[best].barrier - 0.5 * step * (fp - fm) / curvature;
            let vertex = vertex.clamp(profile[best - 1].barrier, profile[best + 1].barrier);
            let refined = point(vertex);
            profile.push(refined);
            chosen = refined;
        }
    }
    profile.sort_by(|a, b| a.barrier.total_cmp(&b.barrier));
    Ok(BarrierSearch { barrier: chosen.barrier, value: chosen.mean, std_err: chosen.std_err, profile })
}
