//! Large-N_c analytics: the β₀ rescaling, the Dyson fixed point for the
//! diagonal propagator, the λ(β̃) line, the β̃-independent energy plateau and
//! the frustration-free lower bound.

use crate::coupling::CouplingContext;
use crate::error::{Error, Result};

/// β₀ = 2N² / (N_A + N_Abar − 1); β̃ = β/β₀ is order one at the transition.
pub fn beta0(n: usize) -> Result<f64> {
    let ctx = CouplingContext::new(n)?;
    let big_n = ctx.dim() as f64;
    Ok(2.0 * big_n * big_n / (ctx.n_part_a() + ctx.n_part_abar() - 1) as f64)
}

#[derive(Clone, Copy, Debug)]
pub struct Criticality {
    pub lambda: f64,
    /// set when β̃ >= 1: the quadratic fluctuations are massless or unstable
    pub critical: bool,
}

/// λ = 1 − β̃ on the permutation-symmetric branch.
pub fn lambda_of_beta(beta_tilde: f64) -> Criticality {
    Criticality { lambda: 1.0 - beta_tilde, critical: beta_tilde >= 1.0 }
}

/// Leading-order equilibrium energy N_c (N_A + N_Abar − 1) / (2N); also the
/// natural rescaler for Monte Carlo sweeps.
pub fn energy_prediction(n: usize, n_colors: usize) -> Result<f64> {
    let ctx = CouplingContext::new(n)?;
    Ok(n_colors as f64 * (ctx.n_part_a() + ctx.n_part_abar() - 1) as f64
        / (2.0 * ctx.dim() as f64))
}

/// min H ≥ N_c / (2 N_A); may not be attained because of frustration.
pub fn lower_bound(n: usize, n_colors: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("lower bound needs n >= 2".into()));
    }
    CouplingContext::new(n)?;
    Ok(crate::field::lower_bound_value(n, n_colors))
}

#[derive(Clone, Debug)]
pub struct DysonSolution {
    pub beta_tilde: f64,
    pub lambda: f64,
    /// diagonal propagator G_k, Σ_k G_k = 1
    pub g: Vec<f64>,
    /// max_k |G_k − (1/N)/(λ + (β̃β₀/2N) Σ_l Δ̃(k,l;k,l) G_l)|
    pub residual: f64,
    /// all G_k equal within tolerance
    pub symmetric: bool,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct DysonParams {
    pub tol: f64,
    pub max_iter: usize,
    /// fixed-point damping; the map contracts well below criticality and
    /// slows as β̃ → 1
    pub damping: f64,
}

impl Default for DysonParams {
    fn default() -> Self {
        DysonParams { tol: 1e-13, max_iter: 10_000, damping: 0.5 }
    }
}

const DYSON_MAX_N: usize = 10;

/// Damped fixed-point iteration on G with λ eliminated at every step through
/// the normalization Σ_k G_k = 1. Only the symmetric branch β̃ < 1 is
/// meaningful; β̃ ≥ 1 is refused.
pub fn dyson_solve(n: usize, beta_tilde: f64, params: DysonParams) -> Result<DysonSolution> {
    dyson_solve_from(n, beta_tilde, params, None)
}

/// Same as `dyson_solve` but with an explicit (positive, normalized) starting
/// vector; used to probe convergence from off-symmetric initializations.
pub fn dyson_solve_from(
    n: usize,
    beta_tilde: f64,
    params: DysonParams,
    start: Option<Vec<f64>>,
) -> Result<DysonSolution> {
    if beta_tilde >= 1.0 {
        return Err(Error::CriticalBeta(beta_tilde));
    }
    if n > DYSON_MAX_N {
        return Err(Error::SizeGuard(format!(
            "Dyson solver stores the N x N diagonal coupling; n = {n} > {DYSON_MAX_N}"
        )));
    }
    let ctx = CouplingContext::new(n)?;
    let dim = ctx.dim();
    // integer numerators of Δ̃(k,l;k,l); denominators divided out at use
    let mut row_num = vec![0.0f64; dim * dim];
    for k in 0..dim as u32 {
        for l in 0..dim as u32 {
            row_num[k as usize * dim + l as usize] = ctx.delta_tilde_num(k, l, k, l) as f64;
        }
    }
    let denom = ctx.denominator() as f64;
    let beta0 = 2.0 * (dim as f64) * (dim as f64) / (ctx.n_part_a() + ctx.n_part_abar() - 1) as f64;
    let coupling_scale = beta_tilde * beta0 / (2.0 * dim as f64 * denom);

    let mut g = match start {
        Some(v) => {
            if v.len() != dim || v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return Err(Error::InvalidArgument(
                    "starting propagator must be positive with one entry per configuration".into(),
                ));
            }
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        }
        None => vec![1.0 / dim as f64; dim],
    };

    let mut c = vec![0.0f64; dim];
    let mut lambda = 1.0 - beta_tilde;
    let mut iterations = 0;
    loop {
        for k in 0..dim {
            let row = &row_num[k * dim..(k + 1) * dim];
            let mut acc = 0.0;
            for (rv, gv) in row.iter().zip(&g) {
                acc += rv * gv;
            }
            c[k] = coupling_scale * acc;
        }
        lambda = solve_lambda(&c, lambda);
        let mut residual = 0.0f64;
        let mut g_new = vec![0.0f64; dim];
        for k in 0..dim {
            g_new[k] = 1.0 / (dim as f64 * (lambda + c[k]));
            residual = residual.max((g_new[k] - g[k]).abs());
        }
        if residual < params.tol {
            let symmetric = g_new
                .iter()
                .all(|&x| (x - 1.0 / dim as f64).abs() < 1e-8 / dim as f64 + 100.0 * params.tol);
            return Ok(DysonSolution {
                beta_tilde,
                lambda,
                g: g_new,
                residual,
                symmetric,
                iterations,
            });
        }
        iterations += 1;
        if iterations >= params.max_iter {
            return Err(Error::NoConvergence { iters: iterations, residual });
        }
        for k in 0..dim {
            g[k] += params.damping * (g_new[k] - g[k]);
        }
    }
}

/// Root of f(λ) = Σ_k (1/N)/(λ + c_k) − 1, monotone decreasing on
/// λ > −min c. Newton with a bisection bracket.
fn solve_lambda(c: &[f64], guess: f64) -> f64 {
    let dim = c.len() as f64;
    let cmin = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let f = |lambda: f64| -> f64 {
        c.iter().map(|ck| 1.0 / (dim * (lambda + ck))).sum::<f64>() - 1.0
    };
    let mut lo = -cmin + 1e-300;
    // f(lo+) -> +inf; find hi with f(hi) <= 0
    let mut hi = guess.max(-cmin + 1e-6);
    while f(hi) > 0.0 {
        hi = -cmin + 2.0 * (hi + cmin);
    }
    let mut x = if guess > lo && guess <= hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo < 1e-16 * x.abs().max(1e-12) {
            return x;
        }
        let dfx: f64 = c.iter().map(|ck| -1.0 / (dim * (x + ck) * (x + ck))).sum();
        let newton = x - fx / dfx;
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    x
}
