use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Regular interior grid on the box `[-L/2, L/2]^d` with `n` points per axis.
///
/// Points sit at `x_j = -L/2 + j*h`, `j = 1..=n`, with `h = L/(n+1)`; the
/// Dirichlet boundary values at `j = 0` and `j = n+1` are implicitly zero.
/// Linear indices are row-major with the last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub length: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(d: usize, length: f64, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("grid dimension must be positive"));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!(
                "grid length must be positive, got {length}"
            )));
        }
        if n == 0 {
            return Err(Error::invalid("grid needs at least one point per axis"));
        }
        if n.checked_pow(d as u32).is_none() {
            return Err(Error::invalid("grid too large"));
        }
        Ok(Grid { d, length, n })
    }

    /// Grid of spacing as close as possible to `h` (rounded to an integer point count).
    pub fn with_spacing(d: usize, length: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("spacing must be positive, got {h}")));
        }
        let cells = (length / h).round().max(2.0) as usize;
        Grid::new(d, length, cells - 1)
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n as f64 + 1.0)
    }

    /// Volume element `h^d` of the discrete L² inner product.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + (i as f64 + 1.0) * self.h()
    }

    /// Stride of `axis` in the linear index.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.d).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let h = self.h();
        let mut rem = idx;
        for a in (0..self.d).rev() {
            out[a] = -0.5 * self.length + ((rem % self.n) as f64 + 1.0) * h;
            rem /= self.n;
        }
    }

    /// Calls `f(linear_index, coordinates)` for every grid point in index order.
    pub fn for_each_point(&self, mut f: impl FnMut(usize, &[f64])) {
        let mut x = vec![0.0; self.d];
        for idx in 0..self.len() {
            self.point(idx, &mut x);
            f(idx, &x);
        }
    }

    /// True when the point touches the Dirichlet boundary along some axis.
    pub fn is_boundary_adjacent(&self, idx: usize) -> bool {
        let mut rem = idx;
        for _ in 0..self.d {
            let i = rem % self.n;
            if i == 0 || i + 1 == self.n {
                return true;
            }
            rem /= self.n;
        }
        false
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}
