//! The colored state Φ, its normalization constraint, per-bipartition purity
//! via the X-matrix form, total energy H, gradients, and the N_c = 2
//! complex-state oracle.
//!
//! For a subset A the X matrix is X_{k_Ā μ, l_Ā ν} = Σ_{k_A} Φ^μ_{k_A k_Ā}
//! Φ^ν_{k_A l_Ā} and the one-sided value is (N_c/2)[2 tr(XᵀX) − tr(XᵀY)]
//! with Y the color-swapped X. The reported per-bipartition purity is the
//! average of the two orientations (sum over A, sum over Ā); the one-sided
//! value is not exchange symmetric for N_c ≠ 2-real states, the average is,
//! and only the average decomposes H over subsets of size floor(n/2) for odd
//! n. The two agree for states with a single real color direction.

use crate::coupling::{Bipartition, CouplingContext};
use crate::error::{Error, Result};
use crate::util::compensated_sum;
use num::complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Construction-time norm tolerance.
pub const NORM_TOL: f64 = 1e-12;
/// Acceptance tolerance at energy() entry; absorbs accumulated rounding from
/// long Monte Carlo runs (rotations preserve the norm exactly otherwise).
pub const ENERGY_NORM_TOL: f64 = 1e-9;

/// Real field Φ with N x N_c entries and unit global norm; N_c = 2 reproduces
/// complex states. Layout is row-per-configuration: phi[k * n_colors + mu].
#[derive(Clone, Debug, PartialEq)]
pub struct ColoredState {
    n: usize,
    n_colors: usize,
    phi: Vec<f64>,
}

impl ColoredState {
    pub fn new(n: usize, n_colors: usize, phi: Vec<f64>) -> Result<Self> {
        if !(1..=crate::coupling::MAX_QUBITS).contains(&n) {
            return Err(Error::QubitCount { n, min: 1, max: crate::coupling::MAX_QUBITS });
        }
        if n_colors < 1 {
            return Err(Error::InvalidArgument("need at least one color".into()));
        }
        let dim = (1usize << n) * n_colors;
        if phi.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "state vector has {} entries, expected {}",
                phi.len(),
                dim
            )));
        }
        if !phi.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let state = ColoredState { n, n_colors, phi };
        let dev = (state.norm_sq() - 1.0).abs();
        if dev > NORM_TOL {
            return Err(Error::NormViolation { dev, tol: NORM_TOL });
        }
        Ok(state)
    }

    /// Uniform draw from the unit sphere of dimension N * N_c; deterministic
    /// per seed.
    pub fn random(n: usize, n_colors: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dim = (1usize << n) * n_colors;
        let mut phi: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = compensated_sum(phi.iter().map(|v| v * v)).sqrt();
        for v in &mut phi {
            *v /= norm;
        }
        Self::new(n, n_colors, phi)
    }

    /// Φ nonzero at a single configuration with a unit color vector along
    /// `color`. Energy is exactly N_c/2.
    pub fn single_configuration(n: usize, n_colors: usize, k: u32, color: usize) -> Result<Self> {
        if color >= n_colors {
            return Err(Error::InvalidArgument(format!("color {color} out of range")));
        }
        if n < 32 && k >> n != 0 {
            return Err(Error::BitsOutOfRange { bits: k, n });
        }
        let mut phi = vec![0.0; (1usize << n) * n_colors];
        phi[k as usize * n_colors + color] = 1.0;
        Self::new(n, n_colors, phi)
    }

    /// The maximally entangled configuration across bipartition A:
    /// Φ_k^μ = φ^μ δ_{k_Ā,(k_A,0,…)} / sqrt(N_A). Its purity across A is the
    /// lower bound N_c/(2 N_A).
    pub fn canonical_minimizer(n: usize, n_colors: usize, a: &Bipartition, color_vec: &[f64]) -> Result<Self> {
        if a.n() != n {
            return Err(Error::WidthMismatch(a.n(), n));
        }
        if color_vec.len() != n_colors {
            return Err(Error::InvalidArgument("color vector length must equal n_colors".into()));
        }
        let csq: f64 = compensated_sum(color_vec.iter().map(|v| v * v));
        if (csq - 1.0).abs() > NORM_TOL {
            return Err(Error::NormViolation { dev: (csq - 1.0).abs(), tol: NORM_TOL });
        }
        let (ta, tb) = a.scatter_tables();
        let na = ta.len();
        let scale = 1.0 / (na as f64).sqrt();
        let mut phi = vec![0.0; (1usize << n) * n_colors];
        for (sub, &abits) in ta.iter().enumerate() {
            let k = (abits | tb[sub]) as usize;
            for (mu, &c) in color_vec.iter().enumerate() {
                phi[k * n_colors + mu] = c * scale;
            }
        }
        Self::new(n, n_colors, phi)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_colors(&self) -> usize {
        self.n_colors
    }

    /// N = 2^n
    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub(crate) fn phi_mut(&mut self) -> &mut [f64] {
        &mut self.phi
    }

    pub fn amplitude(&self, k: u32, mu: usize) -> f64 {
        self.phi[k as usize * self.n_colors + mu]
    }

    pub fn norm_sq(&self) -> f64 {
        compensated_sum(self.phi.iter().map(|v| v * v))
    }

    /// Relabel configurations k -> k XOR m. Leaves the energy invariant.
    pub fn xor_translate(&self, m: u32) -> Self {
        let nc = self.n_colors;
        let mut phi = vec![0.0; self.phi.len()];
        for k in 0..self.dim() {
            let kk = k ^ m as usize;
            phi[kk * nc..kk * nc + nc].copy_from_slice(&self.phi[k * nc..k * nc + nc]);
        }
        ColoredState { n: self.n, n_colors: nc, phi }
    }
}

/// Complex n-qubit pure state with unit norm.
#[derive(Clone, Debug)]
pub struct ComplexState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl ComplexState {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n {
            return Err(Error::InvalidArgument("amplitude count must be 2^n".into()));
        }
        let norm = compensated_sum(amplitudes.iter().map(|z| z.norm_sqr()));
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NormViolation { dev: (norm - 1.0).abs(), tol: NORM_TOL });
        }
        Ok(ComplexState { n, amplitudes })
    }

    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dim = 1usize << n;
        let raw: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let norm = compensated_sum(raw.iter().map(|z| z.norm_sqr())).sqrt();
        Self::new(n, raw.into_iter().map(|z| z / norm).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// z_k = Φ_k^1 + i Φ_k^2: embed a complex state as an N_c = 2 colored field.
pub fn complex_to_colored(z: &ComplexState) -> ColoredState {
    let mut phi = Vec::with_capacity(z.amplitudes.len() * 2);
    for a in &z.amplitudes {
        phi.push(a.re);
        phi.push(a.im);
    }
    ColoredState::new(z.n, 2, phi).expect("unit complex state embeds as unit colored state")
}

/// Tr ρ_A² via the reshaped amplitude matrix; independent of the Δ couplings.
pub fn purity_complex(z: &ComplexState, a: &Bipartition) -> Result<f64> {
    if a.n() != z.n {
        return Err(Error::WidthMismatch(a.n(), z.n));
    }
    check_balanced(a)?;
    let (ta, tb) = a.scatter_tables();
    let na = ta.len();
    // rho_A[a][a'] = sum_b M[a][b] conj(M[a'][b])
    let mut rho = vec![Complex64::new(0.0, 0.0); na * na];
    for i in 0..na {
        for j in 0..na {
            let mut acc = Complex64::new(0.0, 0.0);
            for &bbits in tb.iter() {
                let zi = z.amplitudes[(ta[i] | bbits) as usize];
                let zj = z.amplitudes[(ta[j] | bbits) as usize];
                acc += zi * zj.conj();
            }
            rho[i * na + j] = acc;
        }
    }
    Ok(rho.iter().map(|c| c.norm_sqr()).sum())
}

fn check_balanced(a: &Bipartition) -> Result<()> {
    let expected = a.n() / 2;
    if a.size() != expected {
        return Err(Error::SubsetSize { got: a.size(), expected });
    }
    Ok(())
}

/// One-sided X-form value: sum over the side scattered by `sum_side`, X
/// indexed by the other side and the colors.
fn xform_oneside(phi: &[f64], n_colors: usize, sum_side: &[u32], index_side: &[u32]) -> f64 {
    let nc = n_colors;
    let nb = index_side.len();
    let dim = nb * nc;
    let mut x = vec![0.0f64; dim * dim];
    let mut row = vec![0.0f64; dim];
    for &abits in sum_side {
        for (b, &bbits) in index_side.iter().enumerate() {
            let base = (abits | bbits) as usize * nc;
            row[b * nc..b * nc + nc].copy_from_slice(&phi[base..base + nc]);
        }
        for i in 0..dim {
            let ri = row[i];
            let xi = &mut x[i * dim..(i + 1) * dim];
            for j in i..dim {
                xi[j] += ri * row[j];
            }
        }
    }
    // mirror the upper triangle
    for i in 0..dim {
        for j in i + 1..dim {
            x[j * dim + i] = x[i * dim + j];
        }
    }
    let mut t1 = 0.0;
    for v in &x {
        t1 += v * v;
    }
    let mut t2 = 0.0;
    for b in 0..nb {
        for c in 0..nb {
            for mu in 0..nc {
                for nu in 0..nc {
                    t2 += x[(b * nc + mu) * dim + c * nc + nu] * x[(b * nc + nu) * dim + c * nc + mu];
                }
            }
        }
    }
    0.5 * n_colors as f64 * (2.0 * t1 - t2)
}

fn oneside_for(state_phi: &[f64], n_colors: usize, a: &Bipartition) -> f64 {
    let (ta, tb) = a.scatter_tables();
    xform_oneside(state_phi, n_colors, &ta, &tb)
}

/// Purity of the colored state across bipartition A: average of the two
/// X-form orientations. Exchange symmetric by construction.
pub fn purity_bipartition(state: &ColoredState, a: &Bipartition) -> Result<f64> {
    if a.n() != state.n {
        return Err(Error::WidthMismatch(a.n(), state.n));
    }
    check_balanced(a)?;
    Ok(0.5 * (oneside_for(&state.phi, state.n_colors, a)
        + oneside_for(&state.phi, state.n_colors, &a.complement())))
}

/// Per-bipartition purities, their average H, and the frustration-free lower
/// bound N_c/(2 N_A).
#[derive(Clone, Debug)]
pub struct PurityReport {
    pub per_bipartition: Vec<(Bipartition, f64)>,
    pub total: f64,
    pub lower_bound: f64,
}

/// Average the per-bipartition purity over all balanced bipartitions.
pub fn energy(state: &ColoredState, ctx: &CouplingContext) -> Result<PurityReport> {
    if ctx.n() != state.n {
        return Err(Error::WidthMismatch(ctx.n(), state.n));
    }
    let dev = (state.norm_sq() - 1.0).abs();
    if dev > ENERGY_NORM_TOL {
        return Err(Error::NormViolation { dev, tol: ENERGY_NORM_TOL });
    }
    let per: Vec<(Bipartition, f64)> = ctx
        .bipartitions()
        .iter()
        .map(|a| purity_bipartition(state, a).map(|v| (*a, v)))
        .collect::<Result<_>>()?;
    let total = per.iter().map(|(_, v)| v).sum::<f64>() / per.len() as f64;
    Ok(PurityReport {
        per_bipartition: per,
        total,
        lower_bound: lower_bound_value(state.n, state.n_colors),
    })
}

pub(crate) fn lower_bound_value(n: usize, n_colors: usize) -> f64 {
    n_colors as f64 / (2.0 * (1usize << (n / 2)) as f64)
}

/// The raw quartic H(Φ) without the norm constraint check. This is the same
/// polynomial as `energy(..).total` and stays meaningful off the sphere,
/// which the finite-difference gradient checks need.
pub fn quartic_at(n: usize, n_colors: usize, phi: &[f64], ctx: &CouplingContext) -> f64 {
    debug_assert_eq!(phi.len(), (1usize << n) * n_colors);
    let bps = ctx.bipartitions();
    if n.is_multiple_of(2) {
        // complement closure: the one-sided mean over all subsets already
        // equals the symmetrized mean
        let sum: f64 = bps.iter().map(|a| oneside_for(phi, n_colors, a)).sum();
        sum / bps.len() as f64
    } else {
        let sum: f64 = bps
            .iter()
            .map(|a| oneside_for(phi, n_colors, a) + oneside_for(phi, n_colors, &a.complement()))
            .sum();
        sum / (2 * bps.len()) as f64
    }
}

/// Convenience wrapper over `quartic_at` for normalized states.
pub fn quartic(state: &ColoredState, ctx: &CouplingContext) -> f64 {
    quartic_at(state.n, state.n_colors, &state.phi, ctx)
}

/// Direct quadruple sum over Z_2^n^4 of Δ̃ with color dot products. O(N^4):
/// guarded to n <= 6. The oracle counterpart of `energy`.
pub fn energy_bruteforce(state: &ColoredState, ctx: &CouplingContext) -> Result<f64> {
    if ctx.n() != state.n {
        return Err(Error::WidthMismatch(ctx.n(), state.n));
    }
    if state.n > 6 {
        return Err(Error::SizeGuard(format!(
            "brute-force energy is O(N^4); n = {} > 6, use energy() instead",
            state.n
        )));
    }
    let dim = state.dim();
    let nc = state.n_colors;
    // Q[k][l] = dot of the color vectors at k and l
    let mut q = vec![0.0f64; dim * dim];
    for k in 0..dim {
        for l in k..dim {
            let mut acc = 0.0;
            for mu in 0..nc {
                acc += state.phi[k * nc + mu] * state.phi[l * nc + mu];
            }
            q[k * dim + l] = acc;
            q[l * dim + k] = acc;
        }
    }
    let mut sum = 0.0f64;
    for k in 0..dim as u32 {
        for kp in 0..dim as u32 {
            for l in 0..dim as u32 {
                let qkl = q[k as usize * dim + l as usize];
                if qkl == 0.0 {
                    continue;
                }
                for lp in 0..dim as u32 {
                    let num = ctx.delta_tilde_num(k, kp, l, lp);
                    if num != 0 {
                        sum += num as f64 * qkl * q[kp as usize * dim + lp as usize];
                    }
                }
            }
        }
    }
    Ok(0.5 * nc as f64 * sum / ctx.denominator() as f64)
}

/// Unconstrained gradient ∂H/∂Φ_k^μ of the quartic. Callers project onto the
/// sphere tangent (g − (g·Φ)Φ) for constrained descent.
pub fn gradient_at(n: usize, n_colors: usize, phi: &[f64], ctx: &CouplingContext) -> Vec<f64> {
    debug_assert_eq!(phi.len(), (1usize << n) * n_colors);
    let bps = ctx.bipartitions();
    let mut grad = vec![0.0f64; phi.len()];
    let (orientations, weight) = if n.is_multiple_of(2) {
        (1, 1.0 / bps.len() as f64)
    } else {
        (2, 1.0 / (2 * bps.len()) as f64)
    };
    for a in bps {
        for o in 0..orientations {
            let side = if o == 0 { *a } else { a.complement() };
            accumulate_oneside_gradient(phi, n_colors, &side, weight, &mut grad);
        }
    }
    grad
}

fn accumulate_oneside_gradient(
    phi: &[f64],
    n_colors: usize,
    a: &Bipartition,
    weight: f64,
    grad: &mut [f64],
) {
    let (ta, tb) = a.scatter_tables();
    let nc = n_colors;
    let nb = tb.len();
    let dim = nb * nc;
    let mut x = vec![0.0f64; dim * dim];
    let mut row = vec![0.0f64; dim];
    for &abits in &ta {
        for (b, &bbits) in tb.iter().enumerate() {
            let base = (abits | bbits) as usize * nc;
            row[b * nc..b * nc + nc].copy_from_slice(&phi[base..base + nc]);
        }
        for i in 0..dim {
            let ri = row[i];
            let xi = &mut x[i * dim..(i + 1) * dim];
            for j in i..dim {
                xi[j] += ri * row[j];
            }
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            x[j * dim + i] = x[i * dim + j];
        }
    }
    // Z = 2X - Y with Y the color swap of X
    let mut z = vec![0.0f64; dim * dim];
    for b in 0..nb {
        for c in 0..nb {
            for mu in 0..nc {
                for nu in 0..nc {
                    z[(b * nc + mu) * dim + c * nc + nu] = 2.0 * x[(b * nc + mu) * dim + c * nc + nu]
                        - x[(b * nc + nu) * dim + c * nc + mu];
                }
            }
        }
    }
    // dH/dΦ^α_{(a,b)} = 2 N_c (Z r_a)[(b,α)]
    let factor = 2.0 * nc as f64 * weight;
    let mut zr = vec![0.0f64; dim];
    for &abits in &ta {
        for (b, &bbits) in tb.iter().enumerate() {
            let base = (abits | bbits) as usize * nc;
            row[b * nc..b * nc + nc].copy_from_slice(&phi[base..base + nc]);
        }
        for (i, out) in zr.iter_mut().enumerate() {
            let zi = &z[i * dim..(i + 1) * dim];
            let mut acc = 0.0;
            for (j, rj) in row.iter().enumerate() {
                acc += zi[j] * rj;
            }
            *out = acc;
        }
        for (b, &bbits) in tb.iter().enumerate() {
            let base = (abits | bbits) as usize * nc;
            for mu in 0..nc {
                grad[base + mu] += factor * zr[b * nc + mu];
            }
        }
    }
}

pub fn gradient(state: &ColoredState, ctx: &CouplingContext) -> Vec<f64> {
    gradient_at(state.n, state.n_colors, &state.phi, ctx)
}

/// g − (g·Φ)Φ: component of the gradient tangent to the unit sphere.
pub fn tangent_project(phi: &[f64], grad: &[f64]) -> Vec<f64> {
    let dot: f64 = phi.iter().zip(grad).map(|(p, g)| p * g).sum();
    grad.iter().zip(phi).map(|(g, p)| g - dot * p).collect()
}

// ---------------------------------------------------------------------------
// state files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct StateFile {
    n: usize,
    n_colors: usize,
    /// row index is the integer value of k
    phi: Vec<Vec<f64>>,
}

impl ColoredState {
    pub fn to_json<W: Write>(&self, w: W) -> Result<()> {
        let file = StateFile {
            n: self.n,
            n_colors: self.n_colors,
            phi: (0..self.dim())
                .map(|k| self.phi[k * self.n_colors..(k + 1) * self.n_colors].to_vec())
                .collect(),
        };
        serde_json::to_writer_pretty(w, &file).map_err(|e| Error::StateFormat(e.to_string()))
    }

    pub fn from_json<R: std::io::Read>(r: R) -> Result<Self> {
        let file: StateFile =
            serde_json::from_reader(r).map_err(|e| Error::StateFormat(e.to_string()))?;
        let mut phi = Vec::with_capacity(file.phi.len() * file.n_colors);
        for row in &file.phi {
            if row.len() != file.n_colors {
                return Err(Error::StateFormat("row length differs from n_colors".into()));
            }
            phi.extend_from_slice(row);
        }
        Self::new(file.n, file.n_colors, phi)
    }

    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = (0..self.n_colors).map(|m| format!("phi_{m}")).collect();
        writeln!(w, "k,{}", cols.join(","))?;
        for k in 0..self.dim() {
            let row: Vec<String> = (0..self.n_colors)
                .map(|m| format!("{:.16e}", self.phi[k * self.n_colors + m]))
                .collect();
            writeln!(w, "{k},{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn from_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let reader = std::io::BufReader::new(r);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let k: usize = parts
                .next()
                .ok_or_else(|| Error::StateFormat("missing k column".into()))?
                .trim()
                .parse()
                .map_err(|_| Error::StateFormat("bad k value".into()))?;
            if k != rows.len() {
                return Err(Error::StateFormat(format!("rows out of order at k = {k}")));
            }
            let vals: std::result::Result<Vec<f64>, _> =
                parts.map(|p| p.trim().parse::<f64>()).collect();
            rows.push(vals.map_err(|_| Error::StateFormat("bad phi value".into()))?);
        }
        if rows.is_empty() {
            return Err(Error::StateFormat("empty state file".into()));
        }
        let n_colors = rows[0].len();
        let n = rows.len().trailing_zeros() as usize;
        if 1usize << n != rows.len() {
            return Err(Error::StateFormat("row count is not a power of two".into()));
        }
        let mut phi = Vec::with_capacity(rows.len() * n_colors);
        for row in &rows {
            if row.len() != n_colors {
                return Err(Error::StateFormat("ragged rows".into()));
            }
            phi.extend_from_slice(row);
        }
        Self::new(n, n_colors, phi)
    }
}
