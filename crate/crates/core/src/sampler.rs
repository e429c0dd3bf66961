//! Metropolis Monte Carlo on the unit sphere, temperature schedules
//! (equilibration, annealing, quench, hysteresis loops), replica overlap, and
//! ground-state search.
//!
//! The elementary move is a Givens rotation in the plane of two uniformly
//! chosen coordinates of the flattened field, so the spherical constraint is
//! preserved exactly and no renormalization bias enters.

mod engine;
mod minimize;

pub use minimize::{find_minimum, find_minimum_with, frustration_scan, FrustrationPoint, MinimizeParams};

use crate::coupling::CouplingContext;
use crate::error::{Error, Result};
use crate::field::ColoredState;
use crate::stats::blocked_stats;
use crate::util::derive_seed;
use engine::EnergyEngine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;

#[derive(Clone, Copy, Debug)]
pub struct MCConfig {
    pub n: usize,
    pub n_colors: usize,
    pub seed: u64,
    /// sweeps between successive measurements
    pub steps_per_measurement: usize,
    /// initial proposal half-angle, adapted during burn-in when `adapt`
    pub theta_max: f64,
    /// acceptance window the adaptation drives towards
    pub target_acceptance: (f64, f64),
    pub adapt: bool,
    /// keep a state snapshot at the end of every leg
    pub snapshot_legs: bool,
}

impl MCConfig {
    pub fn new(n: usize, n_colors: usize, seed: u64) -> Self {
        MCConfig {
            n,
            n_colors,
            seed,
            steps_per_measurement: 1,
            theta_max: 1.0,
            target_acceptance: (0.3, 0.6),
            adapt: true,
            snapshot_legs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_max <= 0.0 || self.theta_max > std::f64::consts::PI {
            return Err(Error::InvalidArgument("theta_max must lie in (0, pi]".into()));
        }
        if self.steps_per_measurement < 1 {
            return Err(Error::InvalidArgument("steps_per_measurement must be >= 1".into()));
        }
        if self.target_acceptance.0 >= self.target_acceptance.1 {
            return Err(Error::InvalidArgument("empty acceptance window".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleKind {
    Fixed,
    AnnealUp,
    AnnealDown,
    HysteresisLoop,
    Quench,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub beta: f64,
    pub sweeps: usize,
}

/// Ordered list of (β, sweep-count) legs executed by one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub legs: Vec<Leg>,
    pub kind: ScheduleKind,
}

impl Schedule {
    pub fn fixed(beta: f64, sweeps: usize) -> Self {
        Schedule { legs: vec![Leg { beta, sweeps }], kind: ScheduleKind::Fixed }
    }

    pub fn anneal(betas: &[f64], sweeps_per_leg: usize) -> Self {
        let kind = if betas.last() >= betas.first() {
            ScheduleKind::AnnealUp
        } else {
            ScheduleKind::AnnealDown
        };
        Schedule {
            legs: betas.iter().map(|&beta| Leg { beta, sweeps: sweeps_per_leg }).collect(),
            kind,
        }
    }

    /// Instantaneous change of β after an equilibration leg.
    pub fn quench(beta_from: f64, equil_sweeps: usize, beta_to: f64, sweeps: usize) -> Self {
        Schedule {
            legs: vec![Leg { beta: beta_from, sweeps: equil_sweeps }, Leg { beta: beta_to, sweeps }],
            kind: ScheduleKind::Quench,
        }
    }

    /// β from beta_max stepwise to 0 and back, palindromic by construction.
    pub fn hysteresis_loop(beta_max: f64, delta_beta: f64, sweeps_per_leg: usize) -> Result<Self> {
        let down = hysteresis_grid(beta_max, delta_beta)?;
        let mut betas = down.clone();
        betas.extend(down.iter().rev());
        Ok(Schedule {
            legs: betas.into_iter().map(|beta| Leg { beta, sweeps: sweeps_per_leg }).collect(),
            kind: ScheduleKind::HysteresisLoop,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.legs.is_empty() {
            return Err(Error::InvalidArgument("schedule has no legs".into()));
        }
        if self.legs.iter().any(|l| l.sweeps < 1) {
            return Err(Error::InvalidArgument("every leg needs at least one sweep".into()));
        }
        if self.kind == ScheduleKind::HysteresisLoop {
            let b: Vec<f64> = self.legs.iter().map(|l| l.beta).collect();
            let palindromic = b.iter().zip(b.iter().rev()).all(|(x, y)| x == y);
            if !palindromic {
                return Err(Error::InvalidArgument("hysteresis loop must be palindromic in beta".into()));
            }
        }
        Ok(())
    }
}

/// beta_max, beta_max - Δβ, …, down to (and including) 0.
fn hysteresis_grid(beta_max: f64, delta_beta: f64) -> Result<Vec<f64>> {
    if beta_max <= 0.0 || delta_beta <= 0.0 {
        return Err(Error::InvalidArgument("hysteresis needs beta_max > 0 and delta_beta > 0".into()));
    }
    let mut grid = Vec::new();
    let mut b = beta_max;
    while b > 0.0 {
        grid.push(b);
        b -= delta_beta;
    }
    grid.push(0.0);
    Ok(grid)
}

/// The β̃ grid used for the slow protocols: fine steps up to `fine_max`, then
/// coarse steps up to `coarse_max`.
pub fn beta_tilde_grid(fine_step: f64, fine_max: f64, coarse_step: f64, coarse_max: f64) -> Vec<f64> {
    let mut grid = vec![0.0];
    let mut b = 0.0;
    while b + fine_step <= fine_max + 1e-12 {
        b += fine_step;
        grid.push(b);
    }
    while b + coarse_step <= coarse_max + 1e-12 {
        b += coarse_step;
        grid.push(b);
    }
    grid
}

/// Per-leg measurement summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegStats {
    pub beta: f64,
    pub beta_tilde: f64,
    pub mean_h: f64,
    pub stderr_h: f64,
    pub acceptance: f64,
    pub theta_max: f64,
    pub measurements: usize,
}

/// Time series of one Metropolis chain over a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRecord {
    pub legs: Vec<LegStats>,
    pub snapshots: Vec<ColoredState>,
}

const REFRESH_SWEEP_INTERVAL: usize = 500;
const THETA_MIN: f64 = 1e-6;

/// A Metropolis chain owning its state, energy bookkeeping and RNG.
pub struct Chain {
    config: MCConfig,
    ctx: Arc<CouplingContext>,
    state: ColoredState,
    engine: EnergyEngine,
    rng: ChaCha12Rng,
    theta_max: f64,
    sweeps_since_refresh: usize,
}

impl Chain {
    pub fn new(
        config: MCConfig,
        ctx: Arc<CouplingContext>,
        initial: Option<ColoredState>,
    ) -> Result<Self> {
        config.validate()?;
        if ctx.n() != config.n {
            return Err(Error::WidthMismatch(ctx.n(), config.n));
        }
        let state = match initial {
            Some(s) => {
                if s.n() != config.n || s.n_colors() != config.n_colors {
                    return Err(Error::InvalidArgument(
                        "initial state does not match the chain dimensions".into(),
                    ));
                }
                s
            }
            None => ColoredState::random(config.n, config.n_colors, config.seed)?,
        };
        let engine = EnergyEngine::new(&state, &ctx);
        let rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, 0x6d63));
        Ok(Chain { config, ctx, state, engine, rng, theta_max: config.theta_max, sweeps_since_refresh: 0 })
    }

    pub fn state(&self) -> &ColoredState {
        &self.state
    }

    pub fn energy(&self) -> f64 {
        self.engine.total()
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn context(&self) -> &CouplingContext {
        &self.ctx
    }

    fn beta0(&self) -> f64 {
        let big_n = self.ctx.dim() as f64;
        2.0 * big_n * big_n / self.ctx.delta_tilde_row_sum() as f64
    }

    /// One Givens-rotation proposal with the Metropolis acceptance rule
    /// min(1, exp(-β ΔH)). Works for either sign of β; the norm is preserved
    /// exactly by the move itself.
    pub fn metropolis_step(&mut self, beta: f64) -> bool {
        let coords = self.state.phi().len();
        let c1 = self.rng.gen_range(0..coords);
        let mut c2 = self.rng.gen_range(0..coords - 1);
        if c2 >= c1 {
            c2 += 1;
        }
        let theta = self.rng.gen_range(-self.theta_max..self.theta_max);
        let dh = self
            .engine
            .apply_rotation(self.state.phi_mut(), c1, c2, theta.cos(), theta.sin());
        let downhill = (beta >= 0.0 && dh <= 0.0) || (beta <= 0.0 && dh >= 0.0);
        let accept = downhill || self.rng.gen::<f64>() < (-beta * dh).exp();
        if accept {
            self.engine.commit();
        } else {
            self.engine.undo(self.state.phi_mut());
        }
        accept
    }

    /// One sweep = N · N_c elementary proposals. Returns the acceptance rate.
    pub fn sweep(&mut self, beta: f64) -> f64 {
        if self.sweeps_since_refresh >= REFRESH_SWEEP_INTERVAL {
            self.engine.refresh(self.state.phi());
            self.sweeps_since_refresh = 0;
        }
        self.sweeps_since_refresh += 1;
        let proposals = self.state.phi().len();
        let mut accepted = 0usize;
        for _ in 0..proposals {
            if self.metropolis_step(beta) {
                accepted += 1;
            }
        }
        accepted as f64 / proposals as f64
    }

    fn adapt_theta(&mut self, acceptance: f64) {
        let (lo, hi) = self.config.target_acceptance;
        if acceptance < lo {
            self.theta_max = (self.theta_max / 1.05).max(THETA_MIN);
        } else if acceptance > hi {
            self.theta_max = (self.theta_max * 1.05).min(std::f64::consts::PI);
        }
    }

    /// Execute the legs in order: θ_max adapts over the first half of each
    /// leg and is frozen for the measurement half.
    pub fn run(&mut self, schedule: &Schedule) -> Result<ChainRecord> {
        schedule.validate()?;
        let beta0 = self.beta0();
        let mut legs = Vec::with_capacity(schedule.legs.len());
        let mut snapshots = Vec::new();
        for leg in &schedule.legs {
            self.engine.refresh(self.state.phi());
            self.sweeps_since_refresh = 0;
            let burn = leg.sweeps / 2;
            let measure = leg.sweeps - burn;
            for _ in 0..burn {
                let acc = self.sweep(leg.beta);
                if self.config.adapt {
                    self.adapt_theta(acc);
                }
            }
            let mut series = Vec::with_capacity(measure / self.config.steps_per_measurement + 1);
            let mut acc_sum = 0.0;
            for s in 0..measure {
                acc_sum += self.sweep(leg.beta);
                if s % self.config.steps_per_measurement == 0 {
                    series.push(self.engine.total());
                }
            }
            let (mean, se) = blocked_stats(&series);
            legs.push(LegStats {
                beta: leg.beta,
                beta_tilde: leg.beta / beta0,
                mean_h: mean,
                stderr_h: se,
                acceptance: acc_sum / measure as f64,
                theta_max: self.theta_max,
                measurements: series.len(),
            });
            if self.config.snapshot_legs {
                snapshots.push(self.state.clone());
            }
        }
        Ok(ChainRecord { legs, snapshots })
    }
}

/// Build a chain (random start unless `initial` is given) and run the
/// schedule.
pub fn run_chain(
    config: MCConfig,
    ctx: Arc<CouplingContext>,
    schedule: &Schedule,
    initial: Option<ColoredState>,
) -> Result<ChainRecord> {
    let mut chain = Chain::new(config, ctx, initial)?;
    chain.run(schedule)
}

/// Equilibrate at beta_max, heat stepwise to β = 0, then cool back.
/// Returns (cooling, heating) branch records.
pub fn hysteresis(
    config: MCConfig,
    ctx: Arc<CouplingContext>,
    beta_max: f64,
    delta_beta: f64,
    steps_per_beta: usize,
) -> Result<(ChainRecord, ChainRecord)> {
    let grid_down = hysteresis_grid(beta_max, delta_beta)?;
    let mut chain = Chain::new(config, ctx, None)?;
    // initial equilibration at beta_max, not part of either branch
    chain.run(&Schedule::fixed(beta_max, 10 * steps_per_beta))?;
    let heating = chain.run(&Schedule {
        legs: grid_down.iter().map(|&beta| Leg { beta, sweeps: steps_per_beta }).collect(),
        kind: ScheduleKind::AnnealDown,
    })?;
    let grid_up: Vec<f64> = grid_down.iter().rev().cloned().collect();
    let cooling = chain.run(&Schedule {
        legs: grid_up.iter().map(|&beta| Leg { beta, sweeps: steps_per_beta }).collect(),
        kind: ScheduleKind::AnnealUp,
    })?;
    Ok((cooling, heating))
}

/// Two independent chains at the same parameters, distinct derived seeds.
pub struct ReplicaPair {
    pub first: Chain,
    pub second: Chain,
}

impl ReplicaPair {
    pub fn new(config: MCConfig, ctx: Arc<CouplingContext>) -> Result<Self> {
        let mut cfg1 = config;
        cfg1.seed = derive_seed(config.seed, 1);
        let mut cfg2 = config;
        cfg2.seed = derive_seed(config.seed, 2);
        Ok(ReplicaPair {
            first: Chain::new(cfg1, Arc::clone(&ctx), None)?,
            second: Chain::new(cfg2, ctx, None)?,
        })
    }

    /// Burn both chains in at β.
    pub fn equilibrate(&mut self, beta: f64, sweeps: usize) {
        for _ in 0..sweeps {
            self.first.sweep(beta);
            self.second.sweep(beta);
        }
    }

    fn overlap_q(&self) -> f64 {
        self.first
            .state()
            .phi()
            .iter()
            .zip(self.second.state().phi())
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// ⟨q²⟩ · N N_c with q = Σ_k Φ_k^(1) · Φ_k^(2), sampled every `cadence`
/// sweeps at fixed β. Independent random configurations give 1.
pub fn overlap(
    pair: &mut ReplicaPair,
    beta: f64,
    n_measurements: usize,
    cadence: usize,
) -> Result<(f64, f64)> {
    if n_measurements < 2 || cadence < 1 {
        return Err(Error::InvalidArgument("need >= 2 overlap measurements and cadence >= 1".into()));
    }
    let scale = (pair.first.state().dim() * pair.first.state().n_colors()) as f64;
    let mut series = Vec::with_capacity(n_measurements);
    for _ in 0..n_measurements {
        for _ in 0..cadence {
            pair.first.sweep(beta);
            pair.second.sweep(beta);
        }
        let q = pair.overlap_q();
        series.push(q * q * scale);
    }
    Ok(blocked_stats(&series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::quartic;
    use crate::largenc;

    fn arc_ctx(n: usize) -> Arc<CouplingContext> {
        Arc::new(CouplingContext::new(n).unwrap())
    }

    #[test]
    fn zero_beta_accepts_everything() {
        let mut chain = Chain::new(MCConfig::new(3, 2, 1), arc_ctx(3), None).unwrap();
        for _ in 0..500 {
            assert!(chain.metropolis_step(0.0));
        }
    }

    #[test]
    fn infinite_beta_only_accepts_descent() {
        let mut chain = Chain::new(MCConfig::new(3, 2, 2), arc_ctx(3), None).unwrap();
        let mut h = chain.energy();
        for _ in 0..2000 {
            let accepted = chain.metropolis_step(f64::INFINITY);
            let h2 = chain.energy();
            if accepted {
                assert!(h2 <= h + 1e-12);
            } else {
                assert!((h2 - h).abs() < 1e-12);
            }
            h = h2;
        }
        // mirrored limit: β -> -inf only accepts ascent
        let mut chain = Chain::new(MCConfig::new(3, 2, 3), arc_ctx(3), None).unwrap();
        let mut h = chain.energy();
        for _ in 0..2000 {
            if chain.metropolis_step(f64::NEG_INFINITY) {
                assert!(chain.energy() >= h - 1e-12);
            }
            h = chain.energy();
        }
    }

    #[test]
    fn norm_is_conserved_over_a_million_steps() {
        let mut chain = Chain::new(MCConfig::new(3, 2, 4), arc_ctx(3), None).unwrap();
        for _ in 0..1_000_000 {
            chain.metropolis_step(5.0);
        }
        assert!((chain.state().norm_sq() - 1.0).abs() < 1e-12);
        // and the incremental energy still matches a scratch evaluation
        let fresh = quartic(chain.state(), chain.context());
        assert!((chain.energy() - fresh).abs() < 1e-9);
    }

    #[test]
    fn chain_records_are_bit_reproducible() {
        let schedule = Schedule::anneal(&[0.0, 20.0, 40.0], 40);
        let run = |seed| {
            run_chain(MCConfig::new(3, 3, seed), arc_ctx(3), &schedule, None).unwrap()
        };
        let a = run(9);
        let b = run(9);
        assert_eq!(a, b);
        let c = run(10);
        assert_ne!(a, c);
    }

    #[test]
    fn beta_zero_leg_reproduces_first_moment() {
        let schedule = Schedule::fixed(0.0, 3000);
        let rec = run_chain(MCConfig::new(4, 2, 12), arc_ctx(4), &schedule, None).unwrap();
        let leg = &rec.legs[0];
        let exact = 8.0 / 17.0;
        assert!(
            (leg.mean_h - exact).abs() < 3.0 * leg.stderr_h,
            "mean {} +- {} vs {}",
            leg.mean_h,
            leg.stderr_h,
            exact
        );
        assert!((leg.acceptance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_beta_pushes_towards_separable() {
        let beta0 = largenc::beta0(3).unwrap();
        let schedule = Schedule::fixed(-3.0 * beta0, 600);
        let rec = run_chain(MCConfig::new(3, 2, 5), arc_ctx(3), &schedule, None).unwrap();
        // N_c/2 = 1 is the separable ceiling; β=0 mean is 2/3
        assert!(rec.legs[0].mean_h > 0.9, "mean {}", rec.legs[0].mean_h);
    }

    #[test]
    fn theta_adaptation_reaches_target_window() {
        let beta0 = largenc::beta0(3).unwrap();
        let mut config = MCConfig::new(3, 2, 6);
        config.theta_max = std::f64::consts::PI;
        let schedule = Schedule::fixed(2.0 * beta0, 800);
        let rec = run_chain(config, arc_ctx(3), &schedule, None).unwrap();
        let leg = &rec.legs[0];
        assert!(
            leg.acceptance > 0.2 && leg.acceptance < 0.7,
            "acceptance {} theta {}",
            leg.acceptance,
            leg.theta_max
        );
        assert!(leg.theta_max < std::f64::consts::PI);
    }

    #[test]
    fn schedules_validate() {
        assert!(Schedule::fixed(1.0, 0).validate().is_err());
        let hl = Schedule::hysteresis_loop(10.0, 4.0, 5).unwrap();
        hl.validate().unwrap();
        assert_eq!(hl.legs.first().unwrap().beta, 10.0);
        assert_eq!(hl.legs.last().unwrap().beta, 10.0);
        assert_eq!(hl.legs[hl.legs.len() / 2 - 1].beta, 0.0);
        let grid = beta_tilde_grid(0.1, 0.3, 1.0, 2.3);
        assert_eq!(grid.len(), 6);
        assert!((grid[3] - 0.3).abs() < 1e-12);
        assert!((grid[5] - 2.3).abs() < 1e-9);
    }

    #[test]
    fn quench_schedule_shape() {
        let q = Schedule::quench(0.0, 100, 50.0, 200);
        assert_eq!(q.kind, ScheduleKind::Quench);
        assert_eq!(q.legs.len(), 2);
        assert_eq!(q.legs[1].beta, 50.0);
    }

    #[test]
    fn overlap_at_beta_zero_is_unity() {
        let ctx = arc_ctx(3);
        let mut pair = ReplicaPair::new(MCConfig::new(3, 4, 77), Arc::clone(&ctx)).unwrap();
        pair.equilibrate(0.0, 50);
        let (mean, se) = overlap(&mut pair, 0.0, 120, 3).unwrap();
        assert!((mean - 1.0).abs() <= 3.0 * se, "overlap {mean} +- {se}");
    }

    #[test]
    fn identical_replicas_have_maximal_overlap() {
        let ctx = arc_ctx(3);
        let config = MCConfig::new(3, 2, 123);
        let a = Chain::new(config, Arc::clone(&ctx), None).unwrap();
        let b = Chain::new(config, Arc::clone(&ctx), None).unwrap();
        let pair = ReplicaPair { first: a, second: b };
        let q = pair.overlap_q();
        let scale = (pair.first.state().dim() * 2) as f64;
        assert!((q * q * scale - scale).abs() < 1e-9);
    }

    #[test]
    fn hysteresis_smoke_small_system() {
        let beta0 = largenc::beta0(3).unwrap();
        let (cooling, heating) =
            hysteresis(MCConfig::new(3, 4, 31), arc_ctx(3), 2.0 * beta0, 0.5 * beta0, 60).unwrap();
        assert_eq!(cooling.legs.len(), heating.legs.len());
        // branches traverse the same grid in opposite order
        for (c, h) in cooling.legs.iter().zip(heating.legs.iter().rev()) {
            assert_eq!(c.beta, h.beta);
            let tol = 3.0 * (c.stderr_h.powi(2) + h.stderr_h.powi(2)).sqrt() + 0.05;
            assert!((c.mean_h - h.mean_h).abs() < tol, "beta {}: {} vs {}", c.beta, c.mean_h, h.mean_h);
        }
    }

    #[test]
    fn initializer_independence_at_fixed_beta() {
        let ctx = arc_ctx(3);
        let beta0 = largenc::beta0(3).unwrap();
        let beta = 1.5 * beta0;
        // random start
        let rec_a =
            run_chain(MCConfig::new(3, 4, 41), Arc::clone(&ctx), &Schedule::fixed(beta, 800), None)
                .unwrap();
        // annealed start: walk up to beta first
        let mut chain = Chain::new(MCConfig::new(3, 4, 43), Arc::clone(&ctx), None).unwrap();
        chain.run(&Schedule::anneal(&[0.25 * beta, 0.5 * beta, 0.75 * beta], 200)).unwrap();
        let start = chain.state().clone();
        let rec_b =
            run_chain(MCConfig::new(3, 4, 44), ctx, &Schedule::fixed(beta, 800), Some(start))
                .unwrap();
        let (a, b) = (&rec_a.legs[0], &rec_b.legs[0]);
        let tol = 2.0 * (a.stderr_h.powi(2) + b.stderr_h.powi(2)).sqrt() + 0.02;
        assert!((a.mean_h - b.mean_h).abs() < tol, "{} vs {}", a.mean_h, b.mean_h);
    }
}
