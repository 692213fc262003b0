//! Finite-difference Schrödinger operators `H = −Δ_h + V` on Dirichlet boxes.

mod field;
mod grid;
mod potential;

pub use field::{ComplexField, Field};
pub use grid::Grid;
pub use potential::{build_potential, Potential, PotentialSpec};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// `−Δ_h + V` with the (2d+1)-point central-difference Laplacian.
#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    grid: Grid,
    potential: Potential,
}

impl HamiltonianOperator {
    pub fn new(grid: Grid, potential: Potential) -> Result<Self> {
        grid.check_same(potential.field().grid())?;
        Ok(HamiltonianOperator { grid, potential })
    }

    pub fn from_spec(grid: Grid, spec: &PotentialSpec) -> Result<Self> {
        let potential = build_potential(spec, grid)?;
        Ok(HamiltonianOperator { grid, potential })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// `H + c`
    pub fn shifted(&self, c: f64) -> HamiltonianOperator {
        HamiltonianOperator {
            grid: self.grid,
            potential: self.potential.shifted(c),
        }
    }

    pub fn apply(&self, psi: &Field) -> Result<Field> {
        self.grid.check_same(psi.grid())?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_raw(psi.values(), &mut out);
        Field::from_values(self.grid, out)
    }

    /// Applies the operator to raw coefficient vectors in grid order.
    pub fn apply_raw(&self, x: &[f64], y: &mut [f64]) {
        let g = &self.grid;
        let n = g.n;
        let inv_h2 = 1.0 / (g.h() * g.h());
        let diag = 2.0 * g.d as f64 * inv_h2;
        let v = self.potential.values();
        let strides: Vec<usize> = (0..g.d).map(|a| g.stride(a)).collect();
        for idx in 0..x.len() {
            let mut acc = (diag + v[idx]) * x[idx];
            for &s in &strides {
                let i = (idx / s) % n;
                if i > 0 {
                    acc -= inv_h2 * x[idx - s];
                }
                if i + 1 < n {
                    acc -= inv_h2 * x[idx + s];
                }
            }
            y[idx] = acc;
        }
    }

    /// `‖Hψ − Eψ‖` in the discrete L² norm.
    pub fn residual_norm(&self, psi: &Field, energy: f64) -> Result<f64> {
        if psi.values().iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroField);
        }
        let mut r = self.apply(psi)?;
        r.axpy(-energy, psi)?;
        Ok(r.norm())
    }

    /// Diagonal and off-diagonal of the 1D operator (the off-diagonal is constant).
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, f64)> {
        if self.grid.d != 1 {
            return None;
        }
        let inv_h2 = 1.0 / (self.grid.h() * self.grid.h());
        let diag = self
            .potential
            .values()
            .iter()
            .map(|v| 2.0 * inv_h2 + v)
            .collect();
        Some((diag, -inv_h2))
    }

    /// Dense matrix in grid order; intended for small grids and oracles.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.grid.len();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_raw(&e, &mut col);
            m.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        m
    }
}
