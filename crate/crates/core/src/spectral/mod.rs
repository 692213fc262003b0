//! Eigenpairs, spectral-projector bases and Weyl iterates of the discrete `H`.

pub mod lanczos;
mod projector;
pub mod tridiagonal;
mod weyl;

pub use lanczos::LanczosOptions;
pub use projector::{projector_basis, Interval, ProjectorBasis};
pub use weyl::{weyl_sequence, PacketTrace, WeylIterate, WeylStrategy};

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{Field, HamiltonianOperator};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Tridiagonal,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Grids with at most this many points (d ≥ 2) are diagonalized densely.
    pub dense_threshold: usize,
    pub lanczos: LanczosOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dense_threshold: 1024,
            lanczos: LanczosOptions::default(),
        }
    }
}

/// Lowest eigenpairs with L²-normalized modes.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    pub modes: Vec<Field>,
    pub residuals: Vec<f64>,
    pub tol: f64,
    pub method: SolverMethod,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Largest `|⟨φ_i, φ_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.modes.len() {
            for j in 0..=i {
                let p = self.modes[i].dot(&self.modes[j]).unwrap_or(f64::NAN);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p - target).abs());
            }
        }
        worst
    }
}

pub fn eigenpairs(h: &HamiltonianOperator, how_many: usize, tol: f64) -> Result<EigenSolution> {
    eigenpairs_with(h, how_many, tol, &SolverOptions::default())
}

pub fn eigenpairs_with(
    h: &HamiltonianOperator,
    how_many: usize,
    tol: f64,
    opts: &SolverOptions,
) -> Result<EigenSolution> {
    let grid = *h.grid();
    let n = grid.len();
    if how_many > n {
        return Err(Error::invalid(format!(
            "{how_many} eigenpairs requested on {n} grid points"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("solver tolerance must be positive"));
    }
    let (method, values, vectors) = if let Some((diag, off)) = h.tridiagonal() {
        let offs = vec![off; n.saturating_sub(1)];
        let (v, w) = tridiagonal::lowest_eigenpairs(&diag, &offs, how_many);
        (SolverMethod::Tridiagonal, v, w)
    } else if n <= opts.dense_threshold {
        let (v, w) = dense_lowest(h, how_many);
        (SolverMethod::Dense, v, w)
    } else {
        let (v, w) = lanczos::lowest_eigenpairs(h, how_many, tol, &opts.lanczos)?;
        (SolverMethod::Lanczos, v, w)
    };

    // Euclidean unit vectors → discrete L² unit fields
    let scale = grid.cell_volume().sqrt().recip();
    let mut modes = Vec::with_capacity(vectors.len());
    let mut residuals = Vec::with_capacity(vectors.len());
    for (e, v) in values.iter().zip(vectors) {
        let mut f = Field::from_values(grid, v)?;
        f.scale(scale);
        let r = h.residual_norm(&f, *e)?;
        if r > tol * e.abs().max(1.0) {
            return Err(Error::NoConvergence {
                iterations: 0,
                achieved: r,
            });
        }
        residuals.push(r);
        modes.push(f);
    }
    Ok(EigenSolution {
        energies: values,
        modes,
        residuals,
        tol,
        method,
    })
}

/// Full dense diagonalization, lowest `how_many` pairs, ascending.
pub fn dense_lowest(h: &HamiltonianOperator, how_many: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(how_many);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}
