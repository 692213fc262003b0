use super::Grid;
use crate::{Error, Result};

/// Real grid function with the discrete L² norm `‖ψ‖² = h^d Σ |ψ_j|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_point(|idx, x| values[idx] = f(x));
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(self.grid.cell_volume() * s)
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Field) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Field> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroField);
        }
        self.scale(1.0 / n);
        Ok(self)
    }

    /// Pointwise product, e.g. restriction by a mask indicator.
    pub fn multiplied(&self, weights: &[f64]) -> Result<Field> {
        if weights.len() != self.values.len() {
            return Err(Error::GridMismatch(
                "weight length differs from field".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(weights)
            .map(|(v, w)| v * w)
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    /// Mass `h^d Σ |ψ_j|²` over points adjacent to the Dirichlet boundary.
    pub fn boundary_mass(&self) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_boundary_adjacent(*i))
            .map(|(_, v)| v * v)
            .sum();
        self.grid.cell_volume() * s
    }

    /// Boundary mass relative to `‖ψ‖²` (0 for the zero field).
    pub fn relative_boundary_mass(&self) -> f64 {
        let total = self.norm_sq();
        if total == 0.0 {
            0.0
        } else {
            self.boundary_mass() / total
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Complex grid function stored as real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub re: Field,
    pub im: Field,
}

impl ComplexField {
    pub fn new(re: Field, im: Field) -> Result<Self> {
        re.grid().check_same(im.grid())?;
        Ok(ComplexField { re, im })
    }

    /// `‖ψ‖² = ‖Re ψ‖² + ‖Im ψ‖²`
    pub fn norm_sq(&self) -> f64 {
        self.re.norm_sq() + self.im.norm_sq()
    }
}
