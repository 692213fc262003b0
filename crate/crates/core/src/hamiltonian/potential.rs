use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Field, Grid};
use crate::{Error, Result};

/// Bounded potential families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `V ≡ value`
    Constant { value: f64 },
    /// `V = value` on the half-space `x₁ > 0`, zero elsewhere.
    Step { value: f64 },
    /// Confining well: zero on `|x|_∞ < half_width`, `value` outside.
    Well { value: f64, half_width: f64 },
    /// `V = amplitude · Σ_i cos(2π x_i / period)`
    PeriodicCosine { amplitude: f64, period: f64 },
    /// `V = Σ_k ω_k u(x − k)` with i.i.d. `ω_k ~ U[0, amplitude]` on the unit
    /// lattice and the bump `u(t) = Π_i cos²(π t_i)` supported in `|t|_∞ < 1/2`.
    RandomAlloy { amplitude: f64, seed: u64 },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Constant { value: 0.0 }
    }
}

impl PotentialSpec {
    fn check_finite(&self) -> Result<()> {
        let ok = match *self {
            PotentialSpec::Constant { value } | PotentialSpec::Step { value } => value.is_finite(),
            PotentialSpec::Well { value, half_width } => {
                value.is_finite() && half_width.is_finite() && half_width > 0.0
            }
            PotentialSpec::PeriodicCosine { amplitude, period } => {
                amplitude.is_finite() && period.is_finite() && period > 0.0
            }
            PotentialSpec::RandomAlloy { amplitude, .. } => amplitude.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "non-finite or degenerate potential parameters: {self:?}"
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Constant { .. } => "constant",
            PotentialSpec::Step { .. } => "step",
            PotentialSpec::Well { .. } => "well",
            PotentialSpec::PeriodicCosine { .. } => "periodic-cosine",
            PotentialSpec::RandomAlloy { .. } => "random-alloy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    field: Field,
    sup_norm: f64,
    spec: PotentialSpec,
}

impl Potential {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    /// `max_j |V_j|` over the grid.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// `max_j |V_j − e|`, the grid value of `‖V − E‖_∞`.
    pub fn shifted_sup_norm(&self, e: f64) -> f64 {
        self.values()
            .iter()
            .fold(0.0_f64, |m, v| m.max((v - e).abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `V + c`; the family tag is kept, the values are shifted.
    pub fn shifted(&self, c: f64) -> Potential {
        let mut field = self.field.clone();
        field.values_mut().iter_mut().for_each(|v| *v += c);
        let sup_norm = field.sup_norm();
        Potential {
            field,
            sup_norm,
            spec: self.spec.clone(),
        }
    }
}

pub fn build_potential(spec: &PotentialSpec, grid: Grid) -> Result<Potential> {
    spec.check_finite()?;
    let field = match *spec {
        PotentialSpec::Constant { value } => Field::from_fn(grid, |_| value),
        PotentialSpec::Step { value } => {
            Field::from_fn(grid, |x| if x[0] > 0.0 { value } else { 0.0 })
        }
        PotentialSpec::Well { value, half_width } => Field::from_fn(grid, |x| {
            if x.iter().all(|c| c.abs() < half_width) {
                0.0
            } else {
                value
            }
        }),
        PotentialSpec::PeriodicCosine { amplitude, period } => Field::from_fn(grid, |x| {
            amplitude * x.iter().map(|c| (2.0 * PI * c / period).cos()).sum::<f64>()
        }),
        PotentialSpec::RandomAlloy { amplitude, seed } => random_alloy(grid, amplitude, seed),
    };
    let sup_norm = field.sup_norm();
    Ok(Potential {
        field,
        sup_norm,
        spec: spec.clone(),
    })
}

fn random_alloy(grid: Grid, amplitude: f64, seed: u64) -> Field {
    let d = grid.d;
    let lo = (-0.5 * grid.length).round() as i64;
    let hi = (0.5 * grid.length).round() as i64;
    let side = (hi - lo + 1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let couplings: Vec<f64> = (0..side.pow(d as u32))
        .map(|_| amplitude * rng.random::<f64>())
        .collect();
    Field::from_fn(grid, |x| {
        let mut site = 0usize;
        let mut bump = 1.0;
        for &c in x {
            let k = c.round();
            site = site * side + (k as i64 - lo) as usize;
            bump *= (PI * (c - k)).cos().powi(2);
        }
        couplings[site] * bump
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(2, 6.0, 23).unwrap()
    }

    #[test]
    fn constant_sup_norms() {
        let z = build_potential(&PotentialSpec::Constant { value: 0.0 }, grid()).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        assert!(z.values().iter().all(|&v| v == 0.0));
        let c = build_potential(&PotentialSpec::Constant { value: -2.5 }, grid()).unwrap();
        assert_eq!(c.sup_norm(), 2.5);
    }

    #[test]
    fn step_sup_norm() {
        let s = build_potential(&PotentialSpec::Step { value: 3.0 }, grid()).unwrap();
        assert_eq!(s.sup_norm(), 3.0);
    }

    #[test]
    fn shift_bound() {
        let p = build_potential(
            &PotentialSpec::PeriodicCosine {
                amplitude: 1.5,
                period: 2.0,
            },
            grid(),
        )
        .unwrap();
        for c in [-3.0, 0.5, 2.0] {
            assert!(p.shifted(c).sup_norm() <= p.sup_norm() + c.abs() + 1e-15);
        }
        let k = build_potential(&PotentialSpec::Constant { value: 2.0 }, grid()).unwrap();
        assert_eq!(k.shifted(1.0).sup_norm(), 3.0);
    }

    #[test]
    fn random_alloy_is_deterministic_and_bounded() {
        let spec = PotentialSpec::RandomAlloy {
            amplitude: 4.0,
            seed: 11,
        };
        let a = build_potential(&spec, grid()).unwrap();
        let b = build_potential(&spec, grid()).unwrap();
        assert_eq!(a, b);
        assert!(a.sup_norm() <= 4.0);
        assert!(a.min_value() >= 0.0);
        let c = build_potential(
            &PotentialSpec::RandomAlloy {
                amplitude: 4.0,
                seed: 12,
            },
            grid(),
        )
        .unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn non_finite_rejected() {
        let err = build_potential(&PotentialSpec::Constant { value: f64::NAN }, grid());
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }
}
