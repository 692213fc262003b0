use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::eigenpairs;
use crate::geometry::Mask;
use crate::hamiltonian::{Field, HamiltonianOperator};
use crate::{Error, Result};

/// Closed energy interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn centered(center: f64, half_width: f64) -> Result<Self> {
        Interval::new(center - half_width, center + half_width)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Closed membership with slack `tol·max(1, |e|)`.
    pub fn contains(&self, e: f64, tol: f64) -> bool {
        let s = tol * e.abs().max(1.0);
        e >= self.lo - s && e <= self.hi + s
    }
}

/// Orthonormal basis of the discrete `Ran χ_I(H)`.
#[derive(Debug, Clone)]
pub struct ProjectorBasis {
    pub interval: Interval,
    pub columns: Vec<Field>,
    pub energies: Vec<f64>,
}

impl ProjectorBasis {
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// `‖G − Id‖_max` for the Gram matrix of the columns.
    pub fn gram_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.columns.iter().enumerate() {
            for (j, b) in self.columns.iter().enumerate() {
                let g = a.dot(b).unwrap_or(f64::NAN);
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// Compressed operator `C_ij = ⟨b_i, W b_j⟩`.
    pub fn compressed(&self, mask: &Mask) -> Result<DMatrix<f64>> {
        let r = self.rank();
        let masked: Vec<Field> = self
            .columns
            .iter()
            .map(|b| mask.apply(b))
            .collect::<Result<_>>()?;
        let mut c = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..=i {
                let v = self.columns[i].dot(&masked[j])?;
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Ok(c)
    }

    /// Smallest eigenvalue of the compressed operator (None for rank 0).
    pub fn min_compressed_eigenvalue(&self, mask: &Mask) -> Result<Option<f64>> {
        if self.rank() == 0 {
            return Ok(None);
        }
        let c = self.compressed(mask)?;
        Ok(SymmetricEigen::new(c)
            .eigenvalues
            .iter()
            .copied()
            .reduce(f64::min))
    }

    /// `ψ = Σ_i c_i b_i`
    pub fn combine(&self, coeffs: &[f64]) -> Result<Field> {
        let grid = *self.columns.first().ok_or(Error::ZeroField)?.grid();
        let mut out = Field::zeros(grid);
        for (c, b) in coeffs.iter().zip(&self.columns) {
            out.axpy(*c, b)?;
        }
        Ok(out)
    }
}

pub fn projector_basis(
    h: &HamiltonianOperator,
    interval: Interval,
    tol: f64,
) -> Result<ProjectorBasis> {
    let n = h.grid().len();
    // −Δ_h > 0, so nothing lies below min V
    let floor = h.potential().min_value();
    if interval.hi < floor - tol * floor.abs().max(1.0) {
        return Ok(ProjectorBasis {
            interval,
            columns: Vec::new(),
            energies: Vec::new(),
        });
    }
    let mut count = 8.min(n);
    loop {
        let sol = eigenpairs(h, count, tol)?;
        let top = *sol.energies.last().unwrap();
        let beyond = top > interval.hi + tol * top.abs().max(1.0);
        if beyond || count == n {
            let (energies, columns) = sol
                .energies
                .into_iter()
                .zip(sol.modes)
                .filter(|(e, _)| interval.contains(*e, tol))
                .unzip();
            return Ok(ProjectorBasis {
                interval,
                columns,
                energies,
            });
        }
        count = (2 * count).min(n);
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{make_periodic_sequence, rasterize_mask, IndexWindow};
    use crate::hamiltonian::{Grid, PotentialSpec};

    fn op() -> HamiltonianOperator {
        HamiltonianOperator::from_spec(Grid::new(1, 1.0, 127).unwrap(), &PotentialSpec::default())
            .unwrap()
    }

    #[test]
    fn interval_below_spectrum_is_empty() {
        let p = projector_basis(&op(), Interval::new(-10.0, -1.0).unwrap(), 1e-9).unwrap();
        assert_eq!(p.rank(), 0);
    }

    #[test]
    fn two_lowest_box_levels() {
        // levels near π², 4π², 9π²
        let p = projector_basis(&op(), Interval::new(5.0, 6.0 * PI * PI).unwrap(), 1e-9).unwrap();
        assert_eq!(p.rank(), 2);
        assert!(p.gram_defect() < 1e-10);
    }

    #[test]
    fn full_spectrum_on_three_points() {
        let h = HamiltonianOperator::from_spec(
            Grid::new(1, 1.0, 3).unwrap(),
            &PotentialSpec::Step { value: 2.0 },
        )
        .unwrap();
        let p = projector_basis(&h, Interval::new(-1.0, 1e3).unwrap(), 1e-9).unwrap();
        assert_eq!(p.rank(), 3);
        assert!(p.gram_defect() < 1e-10);

        // full projector: P W P = W, so the compressed spectrum is the mask's
        let grid = *h.grid();
        let z = make_periodic_sequence(1, 1.0, 0.3, IndexWindow::covering(&grid, 1.0)).unwrap();
        let mask = rasterize_mask(&z, &grid).unwrap();
        let mu = p.min_compressed_eigenvalue(&mask).unwrap().unwrap();
        let expect = mask
            .indicator()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert!((mu - expect).abs() < 1e-10);
    }
}
