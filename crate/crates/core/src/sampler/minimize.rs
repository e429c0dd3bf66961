//! Ground-state search: anneal to large β, then polish with projected
//! gradient descent on the sphere until the tangent gradient is tiny.

use super::{Chain, MCConfig, Schedule};
use crate::coupling::CouplingContext;
use crate::error::{Error, Result};
use crate::field::{gradient_at, quartic_at, ColoredState};
use crate::util::derive_seed;
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct MinimizeParams {
    /// β/β₀ values of the annealing legs
    pub anneal_beta_tildes: Vec<f64>,
    pub sweeps_per_leg: usize,
    /// stop when the tangent gradient norm drops below this
    pub grad_tol: f64,
    pub max_polish_iters: usize,
}

impl Default for MinimizeParams {
    fn default() -> Self {
        MinimizeParams {
            anneal_beta_tildes: vec![0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 12.0, 20.0],
            sweeps_per_leg: 120,
            grad_tol: 1e-8,
            max_polish_iters: 50_000,
        }
    }
}

/// Projected gradient descent with backtracking on the normalized retraction.
/// Returns the final energy; `phi` is left at the minimizer.
fn polish(
    n: usize,
    n_colors: usize,
    phi: &mut Vec<f64>,
    ctx: &CouplingContext,
    tol: f64,
    max_iters: usize,
) -> f64 {
    let mut f0 = quartic_at(n, n_colors, phi, ctx);
    let mut step = 0.1;
    for _ in 0..max_iters {
        let grad = gradient_at(n, n_colors, phi, ctx);
        let dot: f64 = phi.iter().zip(&grad).map(|(p, g)| p * g).sum();
        let tangent: Vec<f64> = grad.iter().zip(phi.iter()).map(|(g, p)| g - dot * p).collect();
        let gnorm_sq: f64 = tangent.iter().map(|t| t * t).sum();
        if gnorm_sq.sqrt() < tol {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut candidate: Vec<f64> =
                phi.iter().zip(&tangent).map(|(p, t)| p - step * t).collect();
            let norm = candidate.iter().map(|v| v * v).sum::<f64>().sqrt();
            candidate.iter_mut().for_each(|v| *v /= norm);
            let f1 = quartic_at(n, n_colors, &candidate, ctx);
            if f1 <= f0 - 1e-4 * step * gnorm_sq {
                *phi = candidate;
                f0 = f1;
                step = (step * 1.3).min(10.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // line search exhausted: at numerical resolution
        }
    }
    f0
}

/// Best energy over independent restarts: anneal to large β, polish, keep the
/// lowest. Restarts run in parallel with deterministic per-restart seeds.
pub fn find_minimum(
    n: usize,
    n_colors: usize,
    restarts: usize,
    seed: u64,
) -> Result<(f64, ColoredState)> {
    find_minimum_with(n, n_colors, restarts, seed, &MinimizeParams::default())
}

pub fn find_minimum_with(
    n: usize,
    n_colors: usize,
    restarts: usize,
    seed: u64,
    params: &MinimizeParams,
) -> Result<(f64, ColoredState)> {
    if restarts < 1 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let ctx = Arc::new(CouplingContext::new(n)?);
    let beta0 = {
        let big_n = ctx.dim() as f64;
        2.0 * big_n * big_n / ctx.delta_tilde_row_sum() as f64
    };
    let betas: Vec<f64> = params.anneal_beta_tildes.iter().map(|bt| bt * beta0).collect();
    let results: Vec<(f64, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let ctx = Arc::clone(&ctx);
            let config = MCConfig::new(n, n_colors, derive_seed(seed, r as u64));
            let mut chain = Chain::new(config, Arc::clone(&ctx), None)
                .expect("chain construction checked by caller");
            if !betas.is_empty() {
                chain
                    .run(&Schedule::anneal(&betas, params.sweeps_per_leg))
                    .expect("anneal schedule is valid");
            }
            let mut phi = chain.state().phi().to_vec();
            let e = polish(n, n_colors, &mut phi, &ctx, params.grad_tol, params.max_polish_iters);
            (e, phi)
        })
        .collect();
    let (best_idx, _) = results
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();
    let (e0, phi) = results.into_iter().nth(best_idx).unwrap();
    // renormalize away polish rounding before sealing the state
    let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let state = ColoredState::new(n, n_colors, phi.into_iter().map(|v| v / norm).collect())?;
    Ok((e0, state))
}

#[derive(Clone, Copy, Debug)]
pub struct FrustrationPoint {
    pub n_colors: usize,
    pub e0: f64,
    /// Ē₀ = 2 E₀ / N_c
    pub rescaled: f64,
    /// 1/N_A, the rescaled frustration-free floor
    pub rescaled_lower_bound: f64,
}

/// Rescaled ground-state energies over a range of color counts.
pub fn frustration_scan(
    n: usize,
    nc_range: std::ops::RangeInclusive<usize>,
    restarts: usize,
    seed: u64,
) -> Result<Vec<FrustrationPoint>> {
    if *nc_range.start() < 1 || *nc_range.end() > 32 {
        return Err(Error::InvalidArgument("color range must stay within 1..=32".into()));
    }
    let floor = 1.0 / (1usize << (n / 2)) as f64;
    nc_range
        .map(|nc| {
            let (e0, _) = find_minimum(n, nc, restarts, derive_seed(seed, nc as u64))?;
            Ok(FrustrationPoint {
                n_colors: nc,
                e0,
                rescaled: 2.0 * e0 / nc as f64,
                rescaled_lower_bound: floor,
            })
        })
        .collect()
}
