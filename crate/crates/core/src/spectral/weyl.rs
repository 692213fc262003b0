use serde::{Deserialize, Serialize};

use super::eigenpairs;
use crate::hamiltonian::{Field, HamiltonianOperator};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeylStrategy {
    /// `ψ ∝ cos(ξ (x−x₀)₁) exp(−|x−x₀|²/4σ²)`, σ grown geometrically from
    /// `sigma0` until the residual contract holds.
    GaussianPacket {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "default_sigma0")]
        sigma0: f64,
        #[serde(default = "default_growth")]
        growth: f64,
    },
    /// Eigenfunction nearest to `E` among the lowest `count`, mixed with its
    /// neighbor to land at residual `defect / n`.
    EigenDefect {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default)]
        defect: f64,
    },
}

fn default_sigma0() -> f64 {
    0.5
}

fn default_growth() -> f64 {
    1.1
}

fn default_count() -> usize {
    8
}

impl Default for WeylStrategy {
    fn default() -> Self {
        WeylStrategy::GaussianPacket {
            center: None,
            sigma0: default_sigma0(),
            growth: default_growth(),
        }
    }
}

/// σ-search record of the packet construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketTrace {
    pub sigmas: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl PacketTrace {
    /// Residuals never increase along the search (up to rounding).
    pub fn is_monotone(&self) -> bool {
        self.residuals
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-9))
    }
}

#[derive(Debug, Clone)]
pub struct WeylIterate {
    pub n: u64,
    pub psi: Field,
    pub energy: f64,
    pub residual: f64,
    pub center: Vec<f64>,
    pub sigma: Option<f64>,
    pub wavevector: Option<f64>,
    pub trace: PacketTrace,
}

pub fn weyl_sequence(
    h: &HamiltonianOperator,
    energy: f64,
    n: u64,
    strategy: &WeylStrategy,
) -> Result<WeylIterate> {
    if n == 0 {
        return Err(Error::invalid("Weyl index starts at 1"));
    }
    match strategy {
        WeylStrategy::GaussianPacket {
            center,
            sigma0,
            growth,
        } => gaussian_packet(h, energy, n, center.as_deref(), *sigma0, *growth),
        WeylStrategy::EigenDefect { count, defect } => eigen_defect(h, energy, n, *count, *defect),
    }
}

fn gaussian_packet(
    h: &HamiltonianOperator,
    energy: f64,
    n: u64,
    center: Option<&[f64]>,
    sigma0: f64,
    growth: f64,
) -> Result<WeylIterate> {
    let grid = *h.grid();
    if !(sigma0 > 0.0 && growth > 1.0) {
        return Err(Error::invalid(
            "packet search needs sigma0 > 0 and growth > 1",
        ));
    }
    let x0: Vec<f64> = match center {
        Some(c) if c.len() == grid.d => c.to_vec(),
        Some(_) => return Err(Error::invalid("packet center has the wrong dimension")),
        None => vec![0.0; grid.d],
    };
    let hs = grid.h();
    // local potential at the grid point nearest to x0
    let mut multi = vec![0usize; grid.d];
    for (m, x) in multi.iter_mut().zip(&x0) {
        let j = ((x + 0.5 * grid.length) / hs).round() as i64 - 1;
        *m = j.clamp(0, grid.n as i64 - 1) as usize;
    }
    let v0 = h.potential().values()[grid.linear_index(&multi)];
    let kinetic = energy - v0;
    if kinetic < 0.0 {
        return Err(Error::invalid(format!(
            "energy {energy} lies below the local potential {v0}; no oscillating packet"
        )));
    }
    // discrete dispersion along e₁: (2/h²)(1 − cos ξh) = E − V₀
    let c = 1.0 - 0.5 * kinetic * hs * hs;
    if c < -1.0 {
        return Err(Error::UnreachableResidual {
            target: 1.0 / n as f64,
            best: f64::INFINITY,
        });
    }
    let xi = c.acos() / hs;

    let room = x0
        .iter()
        .map(|x| 0.5 * grid.length - x.abs())
        .fold(f64::INFINITY, f64::min);
    let sigma_max = room / 6.0;
    let target = 1.0 / n as f64;
    let mut trace = PacketTrace::default();
    let mut sigma = sigma0.min(sigma_max);
    let mut best: Option<(f64, Field, f64)> = None;
    loop {
        let psi = packet(grid, &x0, xi, sigma)?;
        let r = h.residual_norm(&psi, energy)?;
        trace.sigmas.push(sigma);
        trace.residuals.push(r);
        if best.as_ref().is_none_or(|b| r < b.2) {
            best = Some((sigma, psi, r));
        }
        if r < target || sigma >= sigma_max {
            break;
        }
        sigma = (sigma * growth).min(sigma_max);
    }
    let (sigma, psi, residual) = best.unwrap();
    if residual >= target {
        return Err(Error::UnreachableResidual {
            target,
            best: residual,
        });
    }
    Ok(WeylIterate {
        n,
        psi,
        energy,
        residual,
        center: x0,
        sigma: Some(sigma),
        wavevector: Some(xi),
        trace,
    })
}

fn packet(grid: crate::hamiltonian::Grid, x0: &[f64], xi: f64, sigma: f64) -> Result<Field> {
    let inv = 1.0 / (4.0 * sigma * sigma);
    Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum();
        (xi * (x[0] - x0[0])).cos() * (-r2 * inv).exp()
    })
    .normalized()
}

fn eigen_defect(
    h: &HamiltonianOperator,
    energy: f64,
    n: u64,
    count: usize,
    defect: f64,
) -> Result<WeylIterate> {
    if !(0.0..1.0).contains(&defect) {
        return Err(Error::invalid("defect fraction must lie in [0, 1)"));
    }
    let count = count.max(2).min(h.grid().len());
    let sol = eigenpairs(h, count, 1e-10)?;
    let mut order: Vec<usize> = (0..sol.len()).collect();
    order.sort_by(|&a, &b| {
        (sol.energies[a] - energy)
            .abs()
            .total_cmp(&(sol.energies[b] - energy).abs())
    });
    let phi = &sol.modes[order[0]];
    let target = 1.0 / n as f64;
    let base = h.residual_norm(phi, energy)?;
    if base >= target {
        return Err(Error::UnreachableResidual { target, best: base });
    }
    let wanted = defect * target;
    let psi = if wanted <= base || order.len() < 2 {
        phi.clone()
    } else {
        // (H−E)φ and (H−E)χ are orthogonal, so the residual of φ + tχ is explicit
        let chi = &sol.modes[order[1]];
        let a2 = base * base;
        let b2 = (sol.energies[order[1]] - energy).powi(2);
        let r2 = wanted * wanted;
        let t = if b2 > r2 {
            ((r2 - a2) / (b2 - r2)).sqrt()
        } else {
            1.0
        };
        let mut psi = phi.clone();
        psi.axpy(t, chi)?;
        psi.normalized()?
    };
    let residual = h.residual_norm(&psi, energy)?;
    if residual >= target {
        return Err(Error::UnreachableResidual {
            target,
            best: residual,
        });
    }
    Ok(WeylIterate {
        n,
        psi,
        energy,
        residual,
        center: Vec::new(),
        sigma: None,
        wavevector: None,
        trace: PacketTrace::default(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::hamiltonian::{Grid, PotentialSpec};

    fn free(l: f64, h: f64) -> HamiltonianOperator {
        HamiltonianOperator::from_spec(
            Grid::with_spacing(1, l, h).unwrap(),
            &PotentialSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn packet_reaches_residual_fifth() {
        let h = free(400.0, 0.05);
        let e = 4.0 * PI * PI;
        let it = weyl_sequence(&h, e, 5, &WeylStrategy::default()).unwrap();
        assert!(it.residual < 0.2);
        assert!((it.psi.norm() - 1.0).abs() < 1e-12);
        assert!(it.trace.is_monotone());
        assert!(it.psi.relative_boundary_mass() < 1e-6);
    }

    #[test]
    fn tiny_box_cannot_reach_small_residual() {
        let h = free(4.0, 0.05);
        let err = weyl_sequence(&h, 4.0 * PI * PI, 1_000_000, &WeylStrategy::default());
        assert!(matches!(err, Err(Error::UnreachableResidual { .. })));
    }

    #[test]
    fn exact_eigenfunction_is_a_weyl_iterate() {
        let h = free(1.0, 1.0 / 128.0);
        let sol = eigenpairs(&h, 2, 1e-10).unwrap();
        let strategy = WeylStrategy::EigenDefect {
            count: 4,
            defect: 0.0,
        };
        for n in [1, 10, 1000] {
            let it = weyl_sequence(&h, sol.energies[0], n, &strategy).unwrap();
            assert!(it.residual < 1e-8);
        }
    }

    #[test]
    fn defect_lands_at_requested_residual() {
        let h = free(1.0, 1.0 / 128.0);
        let e0 = eigenpairs(&h, 1, 1e-10).unwrap().energies[0];
        let it = weyl_sequence(
            &h,
            e0,
            4,
            &WeylStrategy::EigenDefect {
                count: 4,
                defect: 0.5,
            },
        )
        .unwrap();
        assert!((it.residual - 0.125).abs() < 1e-6, "{}", it.residual);
    }
}
