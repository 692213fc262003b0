use super::EquidistributedSequence;
use crate::hamiltonian::{Field, Grid};
use crate::{Error, Result};

/// Indicator of `S_{δ,Z} = ∪_k B(z_k, δ)` sampled at grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: Grid,
    delta: f64,
    indicator: Vec<f64>,
    covered_fraction: f64,
}

impl Mask {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// 0/1 weights in grid order.
    pub fn indicator(&self) -> &[f64] {
        &self.indicator
    }

    pub fn covered_fraction(&self) -> f64 {
        self.covered_fraction
    }

    pub fn full(grid: Grid) -> Mask {
        Mask {
            grid,
            delta: f64::INFINITY,
            indicator: vec![1.0; grid.len()],
            covered_fraction: 1.0,
        }
    }

    /// `W_{δ,Z} ψ`
    pub fn apply(&self, psi: &Field) -> Result<Field> {
        self.grid.check_same(psi.grid())?;
        psi.multiplied(&self.indicator)
    }

    /// `‖W_{δ,Z} ψ‖²`
    pub fn masked_norm_sq(&self, psi: &Field) -> Result<f64> {
        self.grid.check_same(psi.grid())?;
        let s: f64 = psi
            .values()
            .iter()
            .zip(&self.indicator)
            .map(|(v, w)| w * v * v)
            .sum();
        Ok(self.grid.cell_volume() * s)
    }
}

/// Cell-center rule: a grid point is covered iff it lies in some open ball.
///
/// The ball of cell `k` lies inside `Λ_M(k)`, so only the cell containing
/// the point needs to be tested.
pub fn rasterize_mask(seq: &EquidistributedSequence, grid: &Grid) -> Result<Mask> {
    if grid.d != seq.d() {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} vs sequence dimension {}",
            grid.d,
            seq.d()
        )));
    }
    let m = seq.m();
    let r2 = seq.delta() * seq.delta();
    let mut indicator = vec![0.0; grid.len()];
    let mut covered = 0usize;
    let mut k = vec![0i64; grid.d];
    let mut failure = None;
    grid.for_each_point(|idx, x| {
        if failure.is_some() {
            return;
        }
        for (ki, xi) in k.iter_mut().zip(x) {
            *ki = (xi / m).round() as i64;
        }
        let Some(off) = seq.offset(&k) else {
            failure = Some((x.to_vec(), k.clone()));
            return;
        };
        let dist2: f64 = x
            .iter()
            .zip(&k)
            .zip(off)
            .map(|((xi, ki), o)| {
                let t = xi - (m * *ki as f64 + o);
                t * t
            })
            .sum();
        if dist2 < r2 {
            indicator[idx] = 1.0;
            covered += 1;
        }
    });
    if let Some((point, cell)) = failure {
        return Err(Error::WindowTooSmall { point, cell });
    }
    Ok(Mask {
        grid: *grid,
        delta: seq.delta(),
        covered_fraction: covered as f64 / grid.len() as f64,
        indicator,
    })
}
