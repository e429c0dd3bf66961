//! Bit-string algebra over Z_2^n and the exact coupling functions g, ĝ, Δ, Δ̃
//! for balanced bipartitions.
//!
//! All couplings are exact rationals with the common denominator
//! `2 * binomial(n, n_A)`; floating point enters only at the field-evaluation
//! boundary.

use crate::error::{Error, Result};
use num::rational::Ratio;

/// Largest supported qubit count. The 2^n state vector and the
/// binomial(n, n/2) bipartition list both have to fit in desk memory; the cap
/// is a guard, not a promise that every operation is feasible there.
pub const MAX_QUBITS: usize = 24;

pub type Rational = Ratio<i64>;

/// Element of Z_2^n indexing a computational-basis configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: u32,
    n: u8,
}

impl BitString {
    pub fn new(bits: u32, n: usize) -> Result<Self> {
        check_qubits(n)?;
        if n < 32 && bits >> n != 0 {
            return Err(Error::BitsOutOfRange { bits, n });
        }
        Ok(BitString { bits, n: n as u8 })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn n(self) -> usize {
        self.n as usize
    }

    /// |a| = sum of the bits.
    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn xor(self, other: Self) -> Result<Self> {
        self.check_width(other)?;
        Ok(BitString { bits: self.bits ^ other.bits, n: self.n })
    }

    pub fn or(self, other: Self) -> Result<Self> {
        self.check_width(other)?;
        Ok(BitString { bits: self.bits | other.bits, n: self.n })
    }

    pub fn and(self, other: Self) -> Result<Self> {
        self.check_width(other)?;
        Ok(BitString { bits: self.bits & other.bits, n: self.n })
    }

    fn check_width(self, other: Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::WidthMismatch(self.n(), other.n()));
        }
        Ok(())
    }
}

pub struct BitOps {
    pub xor: BitString,
    pub or: BitString,
    pub and: BitString,
    pub weight_a: u32,
}

/// Componentwise XOR/OR/AND of two n-bit strings plus the weight of the first.
pub fn bit_ops(a: BitString, b: BitString) -> Result<BitOps> {
    Ok(BitOps {
        xor: a.xor(b)?,
        or: a.or(b)?,
        and: a.and(b)?,
        weight_a: a.weight(),
    })
}

/// binomial(p, q) with the zero convention: 0 whenever q < 0, q > p or p < 0.
pub fn binomial(p: i64, q: i64) -> u64 {
    if q < 0 || p < 0 || q > p {
        return 0;
    }
    let q = q.min(p - q) as u64;
    let p = p as u64;
    let mut acc: u64 = 1;
    for i in 0..q {
        acc = acc * (p - i) / (i + 1);
    }
    acc
}

fn check_qubits(n: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(Error::QubitCount { n, min: 1, max: MAX_QUBITS });
    }
    Ok(())
}

/// A subset A of the qubit set, |A| = floor(n/2), stored as a bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bipartition {
    mask: u32,
    n: u8,
}

impl Bipartition {
    pub fn from_mask(mask: u32, n: usize) -> Result<Self> {
        check_qubits(n)?;
        if n < 32 && mask >> n != 0 {
            return Err(Error::BitsOutOfRange { bits: mask, n });
        }
        Ok(Bipartition { mask, n: n as u8 })
    }

    pub fn mask(self) -> u32 {
        self.mask
    }

    pub fn n(self) -> usize {
        self.n as usize
    }

    pub fn size(self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn complement(self) -> Self {
        let full = if self.n() == 32 { u32::MAX } else { (1u32 << self.n()) - 1 };
        Bipartition { mask: full & !self.mask, n: self.n }
    }

    /// 1-based qubit labels of the subset, ascending.
    pub fn indices(self) -> Vec<usize> {
        (0..self.n()).filter(|i| self.mask >> i & 1 == 1).map(|i| i + 1).collect()
    }

    /// Scatter tables for the (A, complement) split: `a_table[a]` spreads the
    /// compressed sub-index a over the mask's bit positions, `b_table[b]`
    /// likewise over the complement. The full configuration is
    /// `a_table[a] | b_table[b]`.
    pub(crate) fn scatter_tables(self) -> (Vec<u32>, Vec<u32>) {
        (scatter_table(self.mask, self.n()), scatter_table(self.complement().mask, self.n()))
    }
}

fn scatter_table(mask: u32, n: usize) -> Vec<u32> {
    let positions: Vec<u32> = (0..n as u32).filter(|i| mask >> i & 1 == 1).collect();
    let size = 1usize << positions.len();
    let mut table = vec![0u32; size];
    for (sub, entry) in table.iter_mut().enumerate() {
        let mut full = 0u32;
        for (j, &pos) in positions.iter().enumerate() {
            full |= ((sub as u32 >> j) & 1) << pos;
        }
        *entry = full;
    }
    table
}

/// All binomial(n, floor(n/2)) subsets of size floor(n/2), in lexicographic
/// order of their sorted 1-based index lists.
pub fn balanced_bipartitions(n: usize) -> Result<Vec<Bipartition>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "balanced bipartitions need n >= 2, got {n}"
        )));
    }
    check_qubits(n)?;
    let k = n / 2;
    let mut idx: Vec<usize> = (0..k).collect();
    let mut out = Vec::with_capacity(binomial(n as i64, k as i64) as usize);
    loop {
        let mask = idx.iter().fold(0u32, |m, &i| m | 1 << i);
        out.push(Bipartition { mask, n: n as u8 });
        // advance to the next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Precomputed ĝ table, bipartition list and row-sum constant for fixed
/// (n, n_A = floor(n/2)). Immutable after construction; safe to share across
/// threads.
pub struct CouplingContext {
    n: usize,
    n_a: usize,
    dim: usize,
    n_part_a: usize,
    n_part_abar: usize,
    /// common denominator 2 * binomial(n, n_A)
    denom: u64,
    /// numerators of ĝ(s, t) for s in 0..=n_A, t in 0..=n_Abar
    ghat_num: Vec<u64>,
    bipartitions: Vec<Bipartition>,
    row_sum: u64,
}

impl CouplingContext {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("coupling context needs n >= 2, got {n}")));
        }
        check_qubits(n)?;
        let n_a = n / 2;
        let n_abar = n - n_a;
        let dim = 1usize << n;
        let n_part_a = 1usize << n_a;
        let n_part_abar = 1usize << n_abar;
        let denom = 2 * binomial(n as i64, n_a as i64);
        let mut ghat_num = vec![0u64; (n_a + 1) * (n_abar + 1)];
        for s in 0..=n_a {
            for t in 0..=n_abar {
                let p = n as i64 - s as i64 - t as i64;
                ghat_num[s * (n_abar + 1) + t] =
                    binomial(p, n_a as i64 - s as i64) + binomial(p, n_a as i64 - t as i64);
            }
        }
        let ctx = CouplingContext {
            n,
            n_a,
            dim,
            n_part_a,
            n_part_abar,
            denom,
            ghat_num,
            bipartitions: balanced_bipartitions(n)?,
            row_sum: (n_part_a + n_part_abar - 1) as u64,
        };
        // row-sum identity for one configuration; any bug in the table or the
        // bit algebra trips this immediately
        let k = (0x9E37_79B9u32 as usize % dim) as u32;
        let mut sum: i128 = 0;
        for l in 0..dim as u32 {
            sum += ctx.delta_tilde_num(k, l, k, l) as i128;
        }
        assert_eq!(
            sum,
            ctx.denom as i128 * ctx.row_sum as i128,
            "row-sum identity violated at construction (n = {n})"
        );
        Ok(ctx)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// n_A = floor(n/2)
    pub fn n_a(&self) -> usize {
        self.n_a
    }

    /// N = 2^n
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// N_A = 2^{n_A}
    pub fn n_part_a(&self) -> usize {
        self.n_part_a
    }

    /// N_Abar = 2^{n - n_A}
    pub fn n_part_abar(&self) -> usize {
        self.n_part_abar
    }

    pub fn bipartitions(&self) -> &[Bipartition] {
        &self.bipartitions
    }

    /// Exact value of N_A + N_Abar - 1 = sum_l Δ̃(k,l;k,l) for every k.
    pub fn delta_tilde_row_sum(&self) -> u64 {
        self.row_sum
    }

    pub(crate) fn denominator(&self) -> u64 {
        self.denom
    }

    #[inline]
    pub(crate) fn ghat_numerator(&self, s: u32, t: u32) -> u64 {
        let (lo, hi) = if s <= t { (s as usize, t as usize) } else { (t as usize, s as usize) };
        if lo > self.n_a || hi > self.n - self.n_a {
            return 0;
        }
        self.ghat_num[lo * (self.n - self.n_a + 1) + hi]
    }

    /// ĝ(s, t) = binomial(n, n_A)^{-1} [binom(n-s-t, n_A-s) + binom(n-s-t, n_A-t)] / 2.
    pub fn g_hat(&self, s: usize, t: usize) -> Result<Rational> {
        if s > self.n || t > self.n {
            return Err(Error::InvalidArgument(format!(
                "ghat arguments must lie in 0..={}, got ({s}, {t})",
                self.n
            )));
        }
        Ok(Rational::new(self.ghat_numerator(s as u32, t as u32) as i64, self.denom as i64))
    }

    /// g(a, b) = δ_{a∧b,0} ĝ(|a|, |b|), numerator over the context denominator.
    #[inline]
    pub(crate) fn g_num(&self, a: u32, b: u32) -> u64 {
        if a & b != 0 {
            0
        } else {
            self.ghat_numerator(a.count_ones(), b.count_ones())
        }
    }

    #[inline]
    pub(crate) fn delta_num(&self, k: u32, kp: u32, l: u32, lp: u32) -> u64 {
        self.g_num((k ^ l) | (kp ^ lp), (k ^ lp) | (kp ^ l))
    }

    /// Δ̃ numerator: 2Δ(k,k';l,l') - Δ(k,l;k',l') over the context denominator.
    #[inline]
    pub(crate) fn delta_tilde_num(&self, k: u32, kp: u32, l: u32, lp: u32) -> i64 {
        2 * self.delta_num(k, kp, l, lp) as i64 - self.delta_num(k, l, kp, lp) as i64
    }

    /// Δ(k,k';l,l') = g((k⊕l)∨(k'⊕l'), (k⊕l')∨(k'⊕l)).
    pub fn delta(&self, k: BitString, kp: BitString, l: BitString, lp: BitString) -> Result<Rational> {
        self.check_widths(&[k, kp, l, lp])?;
        Ok(Rational::new(
            self.delta_num(k.bits(), kp.bits(), l.bits(), lp.bits()) as i64,
            self.denom as i64,
        ))
    }

    /// Δ̃(k,k';l,l') = 2Δ(k,k';l,l') - Δ(k,l;k',l').
    pub fn delta_tilde(
        &self,
        k: BitString,
        kp: BitString,
        l: BitString,
        lp: BitString,
    ) -> Result<Rational> {
        self.check_widths(&[k, kp, l, lp])?;
        Ok(Rational::new(
            self.delta_tilde_num(k.bits(), kp.bits(), l.bits(), lp.bits()),
            self.denom as i64,
        ))
    }

    fn check_widths(&self, args: &[BitString]) -> Result<()> {
        for a in args {
            if a.n() != self.n {
                return Err(Error::WidthMismatch(a.n(), self.n));
            }
        }
        Ok(())
    }
}
