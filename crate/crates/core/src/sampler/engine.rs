//! Incremental energy bookkeeping for the Metropolis chain.
//!
//! One X matrix is maintained per bipartition orientation. A two-coordinate
//! Givens move changes two entries of Φ; each change touches exactly one
//! row/column of every X, so the trace updates cost O(N_Abar · N_c) per
//! orientation instead of a full recompute. Rejected moves restore the saved
//! rows bit-for-bit.

use crate::coupling::CouplingContext;
use crate::field::ColoredState;

struct Orientation {
    /// scatter table of the summed side
    ta: Vec<u32>,
    /// scatter table of the indexing side
    tb: Vec<u32>,
    /// full configuration -> summed-side subindex
    a_of_k: Vec<u32>,
    /// full configuration -> indexing-side subindex
    b_of_k: Vec<u32>,
    dim: usize,
    x: Vec<f64>,
    t1: f64,
    t2: f64,
}

impl Orientation {
    fn new(sum_mask_table: (Vec<u32>, Vec<u32>), n: usize, n_colors: usize) -> Self {
        let (ta, tb) = sum_mask_table;
        let big_n = 1usize << n;
        let mut a_of_k = vec![0u32; big_n];
        let mut b_of_k = vec![0u32; big_n];
        for (a, &abits) in ta.iter().enumerate() {
            for (b, &bbits) in tb.iter().enumerate() {
                let k = (abits | bbits) as usize;
                a_of_k[k] = a as u32;
                b_of_k[k] = b as u32;
            }
        }
        let dim = tb.len() * n_colors;
        Orientation { ta, tb, a_of_k, b_of_k, dim, x: vec![0.0; dim * dim], t1: 0.0, t2: 0.0 }
    }

    fn rebuild(&mut self, phi: &[f64], n_colors: usize) {
        let nc = n_colors;
        let dim = self.dim;
        self.x.iter_mut().for_each(|v| *v = 0.0);
        let mut row = vec![0.0f64; dim];
        for &abits in &self.ta {
            for (b, &bbits) in self.tb.iter().enumerate() {
                let base = (abits | bbits) as usize * nc;
                row[b * nc..b * nc + nc].copy_from_slice(&phi[base..base + nc]);
            }
            for i in 0..dim {
                let ri = row[i];
                let xi = &mut self.x[i * dim..(i + 1) * dim];
                for j in i..dim {
                    xi[j] += ri * row[j];
                }
            }
        }
        for i in 0..dim {
            for j in i + 1..dim {
                self.x[j * dim + i] = self.x[i * dim + j];
            }
        }
        self.t1 = self.x.iter().map(|v| v * v).sum();
        let nb = self.tb.len();
        let mut t2 = 0.0;
        for b in 0..nb {
            for c in 0..nb {
                for mu in 0..nc {
                    for nu in 0..nc {
                        t2 += self.x[(b * nc + mu) * dim + c * nc + nu]
                            * self.x[(b * nc + nu) * dim + c * nc + mu];
                    }
                }
            }
        }
        self.t2 = t2;
    }

    /// 2 t1 - t2, the bracket multiplying N_c/2 in the one-sided value.
    fn trace_combination(&self) -> f64 {
        2.0 * self.t1 - self.t2
    }

    /// Apply the change Φ at configuration k, color mu by delta. `phi` must
    /// still hold the pre-change value. Saves the touched row into `saved`
    /// and returns (2Δt1 − Δt2).
    #[allow(clippy::too_many_arguments)]
    fn apply_change(
        &mut self,
        phi: &[f64],
        n_colors: usize,
        k: usize,
        mu: usize,
        delta: f64,
        saved: &mut RowSave,
        scratch: &mut Scratch,
    ) -> f64 {
        let nc = n_colors;
        let dim = self.dim;
        let a = self.a_of_k[k] as usize;
        let b_e = self.b_of_k[k] as usize;
        let e = b_e * nc + mu;
        let abits = self.ta[a];

        saved.e = e;
        saved.t1 = self.t1;
        saved.t2 = self.t2;
        saved.row[..dim].copy_from_slice(&self.x[e * dim..e * dim + dim]);

        let u = &mut scratch.u[..dim];
        for (c, &cbits) in self.tb.iter().enumerate() {
            let base = (abits | cbits) as usize * nc;
            u[c * nc..c * nc + nc].copy_from_slice(&phi[base..base + nc]);
        }
        let w = &mut scratch.w[..dim];
        for (wj, uj) in w.iter_mut().zip(u.iter()) {
            *wj = delta * uj;
        }
        w[e] = 2.0 * delta * u[e] + delta * delta;

        let xrow = &self.x[e * dim..e * dim + dim];
        // Δt1 over the changed row/column
        let mut dt1 = w[e] * (2.0 * xrow[e] + w[e]);
        for j in 0..dim {
            if j != e {
                dt1 += 2.0 * w[j] * (2.0 * xrow[j] + w[j]);
            }
        }
        // Δt2 = 2 Σ ΔX_{ij} X_{σ(ij)} + Σ ΔX_{ij} ΔX_{σ(ij)} with
        // σ((b,μ),(c,ν)) = ((b,ν),(c,μ)) the color swap
        let mut cross = w[e] * xrow[e];
        for c in 0..self.tb.len() {
            for nu in 0..nc {
                let j = c * nc + nu;
                if j != e {
                    cross += 2.0 * w[j] * self.x[(b_e * nc + nu) * dim + c * nc + mu];
                }
            }
        }
        let mut quad = -3.0 * w[e] * w[e];
        for c in 0..self.tb.len() {
            let wj = w[c * nc + mu];
            quad += 2.0 * wj * wj;
        }
        for nu in 0..nc {
            let wj = w[b_e * nc + nu];
            quad += 2.0 * wj * wj;
        }
        let dt2 = 2.0 * cross + quad;

        // write the update into row and column e
        for (xej, wj) in self.x[e * dim..e * dim + dim].iter_mut().zip(w.iter()) {
            *xej += wj;
        }
        for (j, wj) in w.iter().enumerate() {
            if j != e {
                self.x[j * dim + e] += wj;
            }
        }
        self.t1 += dt1;
        self.t2 += dt2;
        dt1 * 2.0 - dt2
    }

    fn revert(&mut self, saved: &RowSave) {
        let dim = self.dim;
        let e = saved.e;
        self.x[e * dim..e * dim + dim].copy_from_slice(&saved.row[..dim]);
        for j in 0..dim {
            if j != e {
                self.x[j * dim + e] = saved.row[j];
            }
        }
        self.t1 = saved.t1;
        self.t2 = saved.t2;
    }
}

struct RowSave {
    e: usize,
    t1: f64,
    t2: f64,
    row: Vec<f64>,
}

struct Scratch {
    u: Vec<f64>,
    w: Vec<f64>,
}

struct CoordUndo {
    coord: usize,
    old_value: f64,
    saves: Vec<RowSave>,
}

pub(crate) struct EnergyEngine {
    n_colors: usize,
    weight: f64,
    orientations: Vec<Orientation>,
    undo: Vec<CoordUndo>,
    undo_len: usize,
    scratch: Scratch,
}

impl EnergyEngine {
    pub fn new(state: &ColoredState, ctx: &CouplingContext) -> Self {
        let n = state.n();
        let nc = state.n_colors();
        let bps = ctx.bipartitions();
        let mut orientations = Vec::new();
        for bp in bps {
            let (ta, tb) = bp.scatter_tables();
            orientations.push(Orientation::new((ta, tb), n, nc));
            if n % 2 == 1 {
                let c = bp.complement();
                let (ta, tb) = c.scatter_tables();
                orientations.push(Orientation::new((ta, tb), n, nc));
            }
        }
        let weight = 1.0 / orientations.len() as f64;
        let max_dim = orientations.iter().map(|o| o.dim).max().unwrap();
        let undo = (0..2)
            .map(|_| CoordUndo {
                coord: 0,
                old_value: 0.0,
                saves: orientations
                    .iter()
                    .map(|o| RowSave { e: 0, t1: 0.0, t2: 0.0, row: vec![0.0; o.dim] })
                    .collect(),
            })
            .collect();
        let mut engine = EnergyEngine {
            n_colors: nc,
            weight,
            orientations,
            undo,
            undo_len: 0,
            scratch: Scratch { u: vec![0.0; max_dim], w: vec![0.0; max_dim] },
        };
        engine.refresh(state.phi());
        engine
    }

    pub fn refresh(&mut self, phi: &[f64]) {
        debug_assert_eq!(self.undo_len, 0, "refresh with a pending move");
        let nc = self.n_colors;
        for o in &mut self.orientations {
            o.rebuild(phi, nc);
        }
    }

    /// H of the current field.
    pub fn total(&self) -> f64 {
        let s: f64 = self.orientations.iter().map(|o| o.trace_combination()).sum();
        0.5 * self.n_colors as f64 * self.weight * s
    }

    /// Rotate the pair of flattened coordinates (c1, c2) by the angle with
    /// the given cosine/sine, updating `phi` and every X matrix. Returns ΔH.
    /// A subsequent `undo` restores everything exactly.
    pub fn apply_rotation(
        &mut self,
        phi: &mut [f64],
        c1: usize,
        c2: usize,
        cos_t: f64,
        sin_t: f64,
    ) -> f64 {
        debug_assert_ne!(c1, c2);
        debug_assert_eq!(self.undo_len, 0, "previous move not resolved");
        let x1 = phi[c1];
        let x2 = phi[c2];
        let n1 = cos_t * x1 - sin_t * x2;
        let n2 = sin_t * x1 + cos_t * x2;
        let mut dh = self.change_coordinate(phi, 0, c1, n1 - x1);
        dh += self.change_coordinate(phi, 1, c2, n2 - x2);
        self.undo_len = 2;
        dh
    }

    fn change_coordinate(&mut self, phi: &mut [f64], slot: usize, coord: usize, delta: f64) -> f64 {
        let nc = self.n_colors;
        let k = coord / nc;
        let mu = coord % nc;
        let undo = &mut self.undo[slot];
        undo.coord = coord;
        undo.old_value = phi[coord];
        let mut bracket = 0.0;
        for (o, save) in self.orientations.iter_mut().zip(undo.saves.iter_mut()) {
            bracket += o.apply_change(phi, nc, k, mu, delta, save, &mut self.scratch);
        }
        phi[coord] += delta;
        0.5 * nc as f64 * self.weight * bracket
    }

    /// Revert the last `apply_rotation`.
    pub fn undo(&mut self, phi: &mut [f64]) {
        debug_assert_eq!(self.undo_len, 2, "no move to undo");
        for slot in (0..2).rev() {
            let undo = &self.undo[slot];
            phi[undo.coord] = undo.old_value;
            for (o, save) in self.orientations.iter_mut().zip(undo.saves.iter()) {
                o.revert(save);
            }
        }
        self.undo_len = 0;
    }

    /// Mark the pending move as kept.
    pub fn commit(&mut self) {
        self.undo_len = 0;
    }
}
