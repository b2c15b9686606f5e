use crate::linalg::{CsrMatrix, LinearOperator};
use crate::objective::DimensionBlocks;

/// Symmetric SOR sweeps on each dimension block, ignoring the coupling
/// between dimensions.
pub struct BlockSsor {
    blocks: Vec<CsrMatrix>,
    diagonals: Vec<Vec<f64>>,
    stride: usize,
    sweeps: usize,
    omega: f64,
}

impl BlockSsor {
    pub fn new(blocks: DimensionBlocks, sweeps: usize, omega: f64) -> Self {
        let diagonals = blocks
            .blocks
            .iter()
            .map(|b| {
                (0..b.dim())
                    .map(|i| {
                        let d = b.get(i, i);
                        if d > 0.0 {
                            d
                        } else {
                            // indefinite row: fall back to the absolute row sum
                            let s: f64 = b.row(i).1.iter().map(|v| v.abs()).sum();
                            if s > 0.0 {
                                s
                            } else {
                                1.0
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            blocks: blocks.blocks,
            diagonals,
            stride: blocks.stride,
            sweeps: sweeps.max(1),
            omega,
        }
    }

    fn relax(&self, b: usize, i: usize, rhs: &[f64], z: &mut [f64]) {
        let (cols, vals) = self.blocks[b].row(i);
        let mut s = rhs[i];
        for (&j, &a) in cols.iter().zip(vals) {
            if j != i {
                s -= a * z[j];
            }
        }
        let d = self.diagonals[b][i];
        z[i] += self.omega * (s / d - z[i]);
    }
}

impl LinearOperator for BlockSsor {
    fn dim(&self) -> usize {
        self.blocks.iter().map(CsrMatrix::dim).sum()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for b in 0..self.blocks.len() {
            let n = self.blocks[b].dim();
            let rhs: Vec<f64> = (0..n).map(|k| x[self.stride * k + b]).collect();
            let mut z = vec![0.0; n];
            for _ in 0..self.sweeps {
                for i in 0..n {
                    self.relax(b, i, &rhs, &mut z);
                }
                for i in (0..n).rev() {
                    self.relax(b, i, &rhs, &mut z);
                }
            }
            for (k, v) in z.into_iter().enumerate() {
                y[self.stride * k + b] = v;
            }
        }
    }
}
