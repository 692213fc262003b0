//! Near-neighbor, annulus and observation-box constructions used to place
//! an observation ball next to each dominant unit cell.

use serde::{Deserialize, Serialize};

use super::EquidistributedSequence;
use crate::{Error, Result};

const GEOM_TOL: f64 = 1e-12;

/// Which of the two dominant-site constructions is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `T = 62⌈√d⌉`, `k⁺ = k + (⌈√d⌉+1)e₁`
    Thm1,
    /// `T = 46√d`, `k⁺ = k + 2e₁`
    Thm3,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Thm1 => "thm1",
            Variant::Thm3 => "thm3",
        }
    }
}

/// `⌈√d⌉` in integer arithmetic.
pub fn ceil_sqrt(d: usize) -> usize {
    let mut c = 0;
    while c * c < d {
        c += 1;
    }
    c
}

/// Side `T` of the observation box `Λ_T(k)`.
pub fn observation_box_side(variant: Variant, d: usize) -> f64 {
    match variant {
        Variant::Thm1 => 62.0 * ceil_sqrt(d) as f64,
        Variant::Thm3 => 46.0 * (d as f64).sqrt(),
    }
}

pub fn near_neighbor(k: &[i64], variant: Variant) -> Vec<i64> {
    let shift = match variant {
        Variant::Thm1 => ceil_sqrt(k.len()) as i64 + 1,
        Variant::Thm3 => 2,
    };
    let mut kp = k.to_vec();
    kp[0] += shift;
    kp
}

fn require_unit_scale(seq: &EquidistributedSequence) -> Result<()> {
    if (seq.m() - 1.0).abs() > GEOM_TOL {
        Err(Error::ScaleNotNormalized(seq.m()))
    } else {
        Ok(())
    }
}

fn center_of(seq: &EquidistributedSequence, k: &[i64]) -> Result<Vec<f64>> {
    seq.center(k).ok_or_else(|| {
        Error::invalid(format!(
            "site {k:?} is not materialized in the sequence window"
        ))
    })
}

/// `R_k = ⌈√d⌉ + y_k` with `y_k = ⟨e₁, z_{k⁺}⟩ − ⟨e₁, k⁺⟩ + 1/2 ∈ [0, 1]`.
pub fn annulus_radius(k: &[i64], seq: &EquidistributedSequence) -> Result<f64> {
    require_unit_scale(seq)?;
    let kp = near_neighbor(k, Variant::Thm1);
    let z = center_of(seq, &kp)?;
    let y = z[0] - kp[0] as f64 + 0.5;
    if !(-GEOM_TOL..=1.0 + GEOM_TOL).contains(&y) {
        return Err(Error::invalid(format!(
            "y_k = {y} outside [0, 1]; sequence is not valid"
        )));
    }
    Ok(ceil_sqrt(seq.d()) as f64 + y)
}

/// Axis-aligned box `lo < x < hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    /// Unit cell `Λ₁(k)`.
    pub fn unit_cell(k: &[i64]) -> Self {
        AxisBox {
            lo: k.iter().map(|&c| c as f64 - 0.5).collect(),
            hi: k.iter().map(|&c| c as f64 + 0.5).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Distance from `x` to the closure of the box.
    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&xi, (&a, &b))| {
                let t = if xi < a {
                    a - xi
                } else if xi > b {
                    xi - b
                } else {
                    0.0
                };
                t * t
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest distance from `x` to a corner (the sup over the box).
    pub fn farthest_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&xi, (&a, &b))| {
                let t = (xi - a).abs().max((xi - b).abs());
                t * t
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|a| {
                        if mask >> a & 1 == 1 {
                            self.hi[a]
                        } else {
                            self.lo[a]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `Q(x₀, Θ) = sup_{y∈Θ} |y − x₀|₂`
pub fn geometric_q(x0: &[f64], theta: &AxisBox) -> f64 {
    theta.farthest_distance(x0)
}

/// Geometry attached to one dominant site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofGeometry {
    pub variant: Variant,
    pub k: Vec<i64>,
    pub k_plus: Vec<i64>,
    pub x0: Vec<f64>,
    /// Annulus inner radius; only defined for the `thm1` construction.
    pub r: Option<f64>,
    pub q: f64,
    pub theta: AxisBox,
    pub t: f64,
}

impl ProofGeometry {
    pub fn build(seq: &EquidistributedSequence, k: &[i64], variant: Variant) -> Result<Self> {
        require_unit_scale(seq)?;
        let k_plus = near_neighbor(k, variant);
        let x0 = center_of(seq, &k_plus)?;
        let r = match variant {
            Variant::Thm1 => Some(annulus_radius(k, seq)?),
            Variant::Thm3 => None,
        };
        let theta = AxisBox::unit_cell(k);
        let q = geometric_q(&x0, &theta);
        Ok(ProofGeometry {
            variant,
            k: k.to_vec(),
            k_plus,
            x0,
            r,
            q,
            theta,
            t: observation_box_side(variant, seq.d()),
        })
    }

    /// Manually assembled geometry (adversarial or hand-checked cases).
    pub fn manual(variant: Variant, k: Vec<i64>, x0: Vec<f64>, r: Option<f64>) -> Self {
        let theta = AxisBox::unit_cell(&k);
        let q = geometric_q(&x0, &theta);
        let t = observation_box_side(variant, k.len());
        ProofGeometry {
            variant,
            k_plus: near_neighbor(&k, variant),
            k,
            x0,
            r,
            q,
            theta,
            t,
        }
    }
}

/// `Θ ⊂ closure(B(x₀, 2R)) ∖ B(x₀, R)`.
///
/// The near side is tested with the exact distance from `x₀` to the closed
/// box, the far side with the farthest corner.
pub fn check_annulus_containment(geom: &ProofGeometry) -> bool {
    let Some(r) = geom.r else {
        return false;
    };
    let tol = GEOM_TOL * r.max(1.0);
    let near = geom.theta.nearest_distance(&geom.x0);
    let far = geom.theta.farthest_distance(&geom.x0);
    near >= r - tol && far <= 2.0 * r + tol
}

/// `|k − z_{k⁺}| + 6Q + 2 ≤ T/2`, which gives `B(z_{k⁺}, 6Q+2) ⊂ B(k, T/2) ⊂ Λ_T(k)`.
pub fn check_observation_box(geom: &ProofGeometry) -> bool {
    let dist = geom
        .k
        .iter()
        .zip(&geom.x0)
        .map(|(&k, &z)| (k as f64 - z).powi(2))
        .sum::<f64>()
        .sqrt();
    dist + 6.0 * geom.q + 2.0 <= 0.5 * geom.t + GEOM_TOL * geom.t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_periodic_sequence, IndexWindow};

    fn periodic(d: usize) -> EquidistributedSequence {
        make_periodic_sequence(d, 1.0, 0.5, IndexWindow::cube(d, -4, 4).unwrap()).unwrap()
    }

    #[test]
    fn near_neighbor_examples() {
        assert_eq!(near_neighbor(&[0], Variant::Thm1), vec![2]);
        assert_eq!(near_neighbor(&[0, 0], Variant::Thm1), vec![3, 0]);
        assert_eq!(near_neighbor(&[5, 5], Variant::Thm3), vec![7, 5]);
    }

    #[test]
    fn box_sides() {
        assert_eq!(observation_box_side(Variant::Thm1, 1), 62.0);
        assert_eq!(observation_box_side(Variant::Thm1, 2), 124.0);
        assert_eq!(observation_box_side(Variant::Thm1, 4), 124.0);
        assert_eq!(observation_box_side(Variant::Thm3, 1), 46.0);
        assert_eq!(ceil_sqrt(9), 3);
        assert_eq!(ceil_sqrt(10), 4);
    }

    #[test]
    fn annulus_radius_examples() {
        assert_eq!(annulus_radius(&[0], &periodic(1)).unwrap(), 1.5);
        assert_eq!(annulus_radius(&[0, 0], &periodic(2)).unwrap(), 2.5);

        let w = IndexWindow::cube(1, 0, 2).unwrap();
        let z = EquidistributedSequence::from_centers(
            1,
            1.0,
            0.1,
            w,
            &[vec![0.0], vec![1.0], vec![2.3]],
        )
        .unwrap();
        assert!((annulus_radius(&[0], &z).unwrap() - 1.8).abs() < 1e-12);
    }

    #[test]
    fn annulus_radius_needs_unit_scale() {
        let z = make_periodic_sequence(1, 2.0, 0.5, IndexWindow::cube(1, -4, 4).unwrap()).unwrap();
        assert!(matches!(
            annulus_radius(&[0], &z),
            Err(Error::ScaleNotNormalized(_))
        ));
        assert!(annulus_radius(&[0], &z.normalized()).is_ok());
    }

    #[test]
    fn annulus_examples() {
        let g = ProofGeometry::build(&periodic(1), &[0], Variant::Thm1).unwrap();
        assert_eq!(g.k_plus, vec![2]);
        assert_eq!(g.r, Some(1.5));
        assert!(check_annulus_containment(&g));

        let g = ProofGeometry::build(&periodic(2), &[0, 0], Variant::Thm1).unwrap();
        assert!(check_annulus_containment(&g));

        let bad = ProofGeometry::manual(Variant::Thm1, vec![0], vec![0.6], Some(1.5));
        assert!(!check_annulus_containment(&bad));
    }

    #[test]
    fn q_examples() {
        let theta = AxisBox::unit_cell(&[0]);
        assert_eq!(geometric_q(&[2.0], &theta), 2.5);
        let q = geometric_q(&[2.4], &theta);
        assert!((q - 2.9).abs() < 1e-12);
        assert!(q > 2.5 && q <= 3.0);
        for d in 1..=4 {
            let theta = AxisBox::unit_cell(&vec![0; d]);
            let q = geometric_q(&vec![0.0; d], &theta);
            assert!((q - (d as f64).sqrt() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn observation_box_examples() {
        let g = ProofGeometry::build(&periodic(1), &[0], Variant::Thm3).unwrap();
        assert_eq!(g.q, 2.5);
        assert!(check_observation_box(&g));
        let g = ProofGeometry::build(&periodic(2), &[0, 0], Variant::Thm3).unwrap();
        assert!(check_observation_box(&g));
    }

    #[test]
    fn corners_enumerate_box() {
        let b = AxisBox::unit_cell(&[0, 1]);
        let c = b.corners();
        assert_eq!(c.len(), 4);
        assert!(c.contains(&vec![-0.5, 0.5]));
        assert!(c.contains(&vec![0.5, 1.5]));
    }
}
