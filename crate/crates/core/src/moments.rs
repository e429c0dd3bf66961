//! Exact β = 0 moments via the sphere-Wick formula, analytic cactus
//! cumulants, Monte Carlo cumulant estimation, and scaling-exponent fits.
//!
//! The exact route is deliberately brute force: the m-th raw moment of H is
//! the all-distinct sphere moment times the sum over all permutations p of
//! S_{2m} of bracket sums Σ_k Π_i Δ(k_{2i}, k_{2i+1}; k_{p(2i)}, k_{p(2i+1)}).
//! Index coincidences are handled exactly because the sphere moments carry
//! precisely the Π m_j! multiplicity factors that the permutation count
//! produces. No diagram bookkeeping enters anywhere.

use crate::coupling::CouplingContext;
use crate::error::{Error, Result};
use crate::field::quartic;
use crate::stats::{jackknife_kstat, k_statistics};
use crate::util::derive_seed;
use crate::ColoredState;
use num::bigint::BigInt;
use num::rational::Ratio;
use num::ToPrimitive;
use rayon::prelude::*;
use std::collections::BTreeMap;

pub type BigRational = Ratio<BigInt>;

/// Exponent pattern of a correlation function ⟨Π_j |z_j|^{2 m_j}⟩.
#[derive(Clone, Debug)]
pub struct MomentSpec {
    /// map j -> m_j, only nonzero entries
    pub exponents: BTreeMap<usize, u64>,
    /// complex dimension N
    pub dim: usize,
}

/// (N-1)! Π m_j! / (N-1+Σ m_j)! as an exact rational.
pub fn sphere_moment(spec: &MomentSpec) -> Result<BigRational> {
    let total: u64 = spec.exponents.values().sum();
    if total > 64 {
        return Err(Error::SizeGuard(format!(
            "sphere moment order {total} exceeds the factorial guard (64)"
        )));
    }
    for (&j, &m) in &spec.exponents {
        if j >= spec.dim {
            return Err(Error::InvalidArgument(format!(
                "component index {j} outside dimension {}",
                spec.dim
            )));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("exponent map must hold nonzero entries".into()));
        }
    }
    let mut num = BigInt::from(1u32);
    for &m in spec.exponents.values() {
        for i in 2..=m {
            num *= i;
        }
    }
    // (N-1)!/(N-1+total)! = 1 / Π_{j=N}^{N-1+total} j
    let mut den = BigInt::from(1u32);
    for j in spec.dim as u64..spec.dim as u64 + total {
        den *= j;
    }
    Ok(BigRational::new(num, den))
}

/// 1 / Π_{j=N}^{N-1+2m} j: the all-distinct weight ⟨|z_1|² … |z_{2m}|²⟩.
fn all_distinct_weight(dim: usize, m: usize) -> BigRational {
    let mut den = BigInt::from(1u32);
    for j in dim as u64..dim as u64 + 2 * m as u64 {
        den *= j;
    }
    BigRational::new(BigInt::from(1u32), den)
}

fn permutations(k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..k as u8).collect();
    fn heap(a: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(a, k - 1, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    heap(&mut cur, k, &mut out);
    out
}

const ENUMERATION_COST_LIMIT: f64 = 2e9;

fn enumeration_cost(dim: usize, m: usize) -> f64 {
    let mut fact = 1.0f64;
    for i in 2..=2 * m {
        fact *= i as f64;
    }
    (dim as f64).powi(2 * m as i32) * fact
}

/// Sum over a range of index tuples of Π_i Δ-numerators for every
/// permutation, one pass per tuple.
fn bracket_range_sum(
    ctx: &CouplingContext,
    m: usize,
    perms: &[Vec<u8>],
    range: std::ops::Range<u64>,
) -> u128 {
    let n = ctx.n();
    let mask = (ctx.dim() - 1) as u64;
    let q = 2 * m;
    let mut ks = vec![0u32; q];
    let mut dtab = vec![0u64; m * q * q];
    let mut total: u128 = 0;
    for t in range {
        for (i, k) in ks.iter_mut().enumerate() {
            *k = ((t >> (n * i)) & mask) as u32;
        }
        for i in 0..m {
            let (k1, k2) = (ks[2 * i], ks[2 * i + 1]);
            for a in 0..q {
                for b in 0..q {
                    if a != b {
                        dtab[(i * q + a) * q + b] = ctx.delta_num(k1, k2, ks[a], ks[b]);
                    }
                }
            }
        }
        for p in perms {
            let mut prod: u64 = 1;
            for i in 0..m {
                prod *= dtab[(i * q + p[2 * i] as usize) * q + p[2 * i + 1] as usize];
                if prod == 0 {
                    break;
                }
            }
            total += prod as u128;
        }
    }
    total
}

/// Σ_p T_p over all of S_{2m}; exact integer over denom^m.
fn bracket_total(ctx: &CouplingContext, m: usize) -> Result<u128> {
    if enumeration_cost(ctx.dim(), m) > ENUMERATION_COST_LIMIT {
        return Err(Error::SizeGuard(format!(
            "Wick enumeration at n = {}, order {m} needs ~{:.1e} operations",
            ctx.n(),
            enumeration_cost(ctx.dim(), m)
        )));
    }
    let perms = permutations(2 * m);
    let tuples = (ctx.dim() as u64).pow(2 * m as u32);
    let chunk: u64 = 1 << 14;
    let nchunks = tuples.div_ceil(chunk);
    Ok((0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(tuples);
            bracket_range_sum(ctx, m, &perms, lo..hi)
        })
        .sum())
}

/// One bracket [p(1) p(2), p(3) p(4), …] as an exact rational; the diagnostic
/// unit the permutation sum is made of.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn single_bracket(ctx: &CouplingContext, perm: &[u8]) -> Result<BigRational> {
    let m = perm.len() / 2;
    if perm.len() != 2 * m || m == 0 {
        return Err(Error::InvalidArgument("bracket permutation must have even length".into()));
    }
    if enumeration_cost(ctx.dim(), m) > ENUMERATION_COST_LIMIT {
        return Err(Error::SizeGuard("bracket enumeration too large".into()));
    }
    let perms = vec![perm.to_vec()];
    let tuples = (ctx.dim() as u64).pow(2 * m as u32);
    let total = bracket_range_sum(ctx, m, &perms, 0..tuples);
    Ok(BigRational::new(
        BigInt::from(total),
        BigInt::from(ctx.denominator()).pow(m as u32),
    ))
}

/// Raw moment ⟨H^m⟩_0 as an exact rational.
pub fn exact_raw_moment(ctx: &CouplingContext, m: usize) -> Result<BigRational> {
    let total = bracket_total(ctx, m)?;
    let num = BigRational::new(BigInt::from(total), BigInt::from(ctx.denominator()).pow(m as u32));
    Ok(num * all_distinct_weight(ctx.dim(), m))
}

/// Cumulant κ_0^(order) of H at β = 0 as an exact rational, from the raw
/// moments via the moment-cumulant relations.
pub fn exact_cumulant_rational(n: usize, order: usize) -> Result<BigRational> {
    if order == 0 || order > 3 {
        return Err(Error::InvalidArgument("exact cumulants implemented for orders 1..=3".into()));
    }
    let ctx = CouplingContext::new(n)?;
    let m1 = exact_raw_moment(&ctx, 1)?;
    if order == 1 {
        return Ok(m1);
    }
    let m2 = exact_raw_moment(&ctx, 2)?;
    if order == 2 {
        return Ok(m2 - m1.clone() * m1);
    }
    let m3 = exact_raw_moment(&ctx, 3)?;
    let m1sq = m1.clone() * m1.clone();
    Ok(m3 - BigRational::from(BigInt::from(3u32)) * m2 * m1.clone()
        + BigRational::from(BigInt::from(2u32)) * m1sq * m1)
}

/// `exact_cumulant_rational` converted to double at the boundary.
pub fn exact_cumulant_f64(n: usize, order: usize) -> Result<f64> {
    exact_cumulant_rational(n, order)?
        .to_f64()
        .ok_or_else(|| Error::InvalidArgument("rational out of f64 range".into()))
}

/// `first_moment_colored` converted to double at the boundary.
pub fn first_moment_colored_f64(n: usize, n_colors: usize) -> Result<f64> {
    first_moment_colored(n, n_colors)?
        .to_f64()
        .ok_or_else(|| Error::InvalidArgument("rational out of f64 range".into()))
}

/// Per-order summary combining the available routes to κ_0^(m).
#[derive(Clone, Debug)]
pub struct CumulantReport {
    pub order: usize,
    /// Wick enumeration value, where affordable
    pub exact: Option<f64>,
    /// analytic cactus-family value (orders 1..=3)
    pub cactus: Option<f64>,
    /// Monte Carlo k-statistic and jackknife standard error
    pub mc_estimate: Option<(f64, f64)>,
    pub dim: usize,
    pub n_part_a: usize,
    pub n_part_abar: usize,
}

impl CumulantReport {
    /// Three-sigma agreement between the exact and MC routes, when both are
    /// present.
    pub fn consistent(&self) -> Option<bool> {
        match (self.exact, self.mc_estimate) {
            (Some(e), Some((mean, se))) => Some((e - mean).abs() <= 3.0 * se),
            _ => None,
        }
    }
}

/// Exact cumulants for orders 1..=max_order (≤ 3) by brute-force Wick
/// enumeration.
pub fn exact_cumulants(n: usize, max_order: usize) -> Result<Vec<CumulantReport>> {
    if max_order == 0 || max_order > 3 {
        return Err(Error::InvalidArgument("exact cumulants implemented for orders 1..=3".into()));
    }
    let ctx = CouplingContext::new(n)?;
    (1..=max_order)
        .map(|order| {
            let exact = exact_cumulant_rational(n, order)?
                .to_f64()
                .ok_or_else(|| Error::InvalidArgument("rational out of f64 range".into()))?;
            Ok(CumulantReport {
                order,
                exact: Some(exact),
                cactus: Some(cactus_cumulant(n, order)?),
                mc_estimate: None,
                dim: ctx.dim(),
                n_part_a: ctx.n_part_a(),
                n_part_abar: ctx.n_part_abar(),
            })
        })
        .collect()
}

/// Analytic cactus-family cumulants:
/// order 1: (N_A+N_Abar)/(N+1),
/// order 2: 4 (N_A+N_Abar)² / ((N+1)(N+2)(N+3)),
/// order 3: 40 (N_A+N_Abar)³ / ((N+1)(N+2)(N+3)(N+4)(N+5)).
pub fn cactus_cumulant(n: usize, order: usize) -> Result<f64> {
    let ctx = CouplingContext::new(n)?;
    let s = (ctx.n_part_a() + ctx.n_part_abar()) as u128;
    let big_n = ctx.dim() as u128;
    let value = match order {
        1 => s as f64 / (big_n + 1) as f64,
        2 => {
            let den = (big_n + 1) * (big_n + 2) * (big_n + 3);
            (4 * s * s) as f64 / den as f64
        }
        3 => {
            let den = (big_n + 1) * (big_n + 2) * (big_n + 3) * (big_n + 4) * (big_n + 5);
            (40 * s * s * s) as f64 / den as f64
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "cactus cumulants exist for orders 1..=3, got {order}"
            )))
        }
    };
    Ok(value)
}

/// Monte Carlo cumulants of H over uniform random states: k-statistics up to
/// order 5 with delete-one jackknife errors. Deterministic given the seed.
pub fn mc_cumulants(
    n: usize,
    n_colors: usize,
    max_order: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<CumulantReport>> {
    if max_order == 0 || max_order > 5 {
        return Err(Error::InvalidArgument("mc cumulant order must be in 1..=5".into()));
    }
    if samples < 10 * max_order {
        return Err(Error::InvalidArgument(format!(
            "{samples} samples is fewer than 10x the requested order"
        )));
    }
    let ctx = CouplingContext::new(n)?;
    let values = sample_energies(&ctx, n_colors, samples, seed)?;
    let _ = k_statistics(&values, max_order)?;
    (1..=max_order)
        .map(|order| {
            let (est, se) = jackknife_kstat(&values, order)?;
            Ok(CumulantReport {
                order,
                exact: None,
                cactus: if order <= 3 { Some(cactus_cumulant(n, order)?) } else { None },
                mc_estimate: Some((est, se)),
                dim: ctx.dim(),
                n_part_a: ctx.n_part_a(),
                n_part_abar: ctx.n_part_abar(),
            })
        })
        .collect()
}

/// Energies of `samples` independent uniform random states. Fixed chunking
/// keeps the result identical for any worker count.
pub fn sample_energies(
    ctx: &CouplingContext,
    n_colors: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = ctx.n();
    let chunk = 2048usize;
    let nchunks = samples.div_ceil(chunk);
    let chunks: Vec<Vec<f64>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(samples);
            (lo..hi)
                .map(|i| {
                    let state = ColoredState::random(n, n_colors, derive_seed(seed, i as u64))
                        .expect("random state construction cannot fail for valid sizes");
                    quartic(&state, ctx)
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// ⟨H⟩_0 for the N_c-component field: contraction of Δ̃ with the fourth
/// moment of the uniform measure on the sphere of real dimension N·N_c.
/// Exact, and independent of the sampling and X-matrix paths.
pub fn first_moment_colored(n: usize, n_colors: usize) -> Result<BigRational> {
    if n > 12 {
        return Err(Error::SizeGuard("colored first-moment contraction guarded to n <= 12".into()));
    }
    if n_colors < 1 {
        return Err(Error::InvalidArgument("need at least one color".into()));
    }
    let ctx = CouplingContext::new(n)?;
    let dim = ctx.dim() as u32;
    // ⟨Φ_k^μ Φ_l^μ Φ_k'^ν Φ_l'^ν⟩ on the sphere in dimension d = N N_c is
    // (δδ + δδ + δδ)/(d(d+2)); the three delta patterns collapse the
    // quadruple sum to three double sums over Δ̃.
    let mut s_a: i128 = 0; // Σ_{k,k'} Δ̃(k,k';k,k')   from δ_{kl} δ_{k'l'}
    let mut s_b: i128 = 0; // Σ_{k,l}  Δ̃(k,k;l,l)     from δ_{kk'} δ_{ll'}
    let mut s_c: i128 = 0; // Σ_{k,l}  Δ̃(k,l;l,k)     from δ_{kl'} δ_{lk'}
    for k in 0..dim {
        for l in 0..dim {
            s_a += ctx.delta_tilde_num(k, l, k, l) as i128;
            s_b += ctx.delta_tilde_num(k, k, l, l) as i128;
            s_c += ctx.delta_tilde_num(k, l, l, k) as i128;
        }
    }
    let nc = BigInt::from(n_colors);
    let d = BigInt::from(ctx.dim()) * &nc;
    let numerator: BigInt = (&nc * &nc * BigInt::from(s_a)
        + &nc * BigInt::from(s_b)
        + &nc * BigInt::from(s_c))
        * &nc;
    let denominator = BigInt::from(2u32) * BigInt::from(ctx.denominator()) * &d * (&d + 2);
    Ok(BigRational::new(numerator, denominator))
}

/// Power-law fit value = A · N^(-b) by weighted least squares in log-log
/// space.
#[derive(Clone, Debug)]
pub struct ScalingFit {
    pub amplitude: f64,
    pub exponent: f64,
    /// covariance of (ln A, b)
    pub cov: [[f64; 2]; 2],
    /// log-space residuals per point
    pub residuals: Vec<f64>,
}

/// Fit (N, value, stderr) triples. Points with stderr <= 0 make the fit
/// unweighted.
pub fn fit_scaling(points: &[(f64, f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument("scaling fit needs at least 3 points".into()));
    }
    if points.iter().any(|&(n, v, _)| n <= 0.0 || v <= 0.0) {
        return Err(Error::InvalidArgument("scaling fit needs positive sizes and values".into()));
    }
    let weighted = points.iter().all(|&(_, _, se)| se > 0.0);
    let data: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(n, v, se)| {
            let w = if weighted { (v / se) * (v / se) } else { 1.0 };
            (n.ln(), v.ln(), w)
        })
        .collect();
    // y = a - b x
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, w) in &data {
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::InvalidArgument("degenerate abscissas in scaling fit".into()));
    }
    let a = (sxx * sy - sx * sxy) / det;
    let slope = (sw * sxy - sx * sy) / det; // y = a + slope * x
    let b = -slope;
    let residuals: Vec<f64> = data.iter().map(|&(x, y, _)| y - (a + slope * x)).collect();
    // covariance of (a, slope): (X^T W X)^{-1}; scaled by residual variance
    // when the weights are not known errors
    let scale = if weighted {
        1.0
    } else {
        let dof = (points.len() - 2).max(1) as f64;
        residuals.iter().map(|r| r * r).sum::<f64>() / dof
    };
    let cov = [
        [scale * sxx / det, scale * sx / det],
        [scale * sx / det, scale * sw / det],
    ];
    Ok(ScalingFit { amplitude: a.exp(), exponent: b, cov, residuals })
}

/// Asymptotic constants quoted for the connected-graph amplitudes.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceConstants {
    /// log2(3): exponent of the leafless second-cumulant graph
    pub alpha: f64,
    /// exponent of the dominant third-cumulant graph
    pub gamma: f64,
    /// its amplitude
    pub c: f64,
    /// asymptotic κ_0^(3) amplitude and exponent
    pub kappa3_amplitude: f64,
    pub kappa3_exponent: f64,
}

pub fn reference_constants() -> ReferenceConstants {
    ReferenceConstants {
        alpha: 3f64.log2(),
        gamma: 1.8417,
        c: 1.05385,
        kappa3_amplitude: 67.4,
        kappa3_exponent: 4.158,
    }
}
