use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::Grid;
use crate::{Error, Result};

/// Containment tolerance, relative to the cell scale `M`.
pub const CONTAINMENT_TOL: f64 = 1e-12;

/// Safety margin of perturbed centers, relative to `M`.
pub const PERTURB_MARGIN: f64 = 1e-9;

/// Inclusive axis-aligned box of lattice indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl IndexWindow {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid(
                "window bounds must be nonempty and of equal dimension",
            ));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::invalid(format!("empty window {lo:?}..={hi:?}")));
        }
        Ok(IndexWindow { lo, hi })
    }

    pub fn cube(d: usize, lo: i64, hi: i64) -> Result<Self> {
        IndexWindow::new(vec![lo; d], vec![hi; d])
    }

    /// Smallest window whose cells `Λ_M(k)` contain every point of `grid`.
    pub fn covering(grid: &Grid, m: f64) -> Self {
        let lo = (grid.coordinate(0) / m).round() as i64;
        let hi = (grid.coordinate(grid.n - 1) / m).round() as i64;
        IndexWindow {
            lo: vec![lo; grid.d],
            hi: vec![hi; grid.d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|a| self.side(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim()
            && k.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Row-major position of `k` inside the window.
    pub fn position(&self, k: &[i64]) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let mut pos = 0usize;
        for (a, (&ka, &lo)) in k.iter().zip(&self.lo).enumerate() {
            pos = pos * self.side(a) + (ka - lo) as usize;
        }
        Some(pos)
    }

    pub fn index_at(&self, mut pos: usize) -> Vec<i64> {
        let mut k = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            let s = self.side(a);
            k[a] = self.lo[a] + (pos % s) as i64;
            pos /= s;
        }
        k
    }

    pub fn indices(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |p| self.index_at(p))
    }
}

/// One point `z_k` per cell `Λ_M(k) = Mk + (−M/2, M/2)^d` with `B(z_k, δ) ⊂ Λ_M(k)`.
///
/// Centers are stored as offsets `z_k − Mk`, row-major over the window.
#[derive(Debug, Clone, PartialEq)]
pub struct EquidistributedSequence {
    d: usize,
    m: f64,
    delta: f64,
    window: IndexWindow,
    offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Validation {
    Accepted,
    /// `margin = M/2 − δ − |z_k − Mk|_i` on the worst axis (negative).
    Rejected {
        k: Vec<i64>,
        margin: f64,
    },
}

impl Validation {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Validation::Accepted)
    }
}

fn check_params(d: usize, m: f64, delta: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::invalid(format!("M must be positive, got {m}")));
    }
    if !(delta.is_finite() && delta > 0.0 && delta <= 0.5 * m) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, M/2] = (0, {}], got {delta}",
            0.5 * m
        )));
    }
    Ok(())
}

impl EquidistributedSequence {
    /// Builds a sequence from explicit physical centers without validating it.
    pub fn from_centers(
        d: usize,
        m: f64,
        delta: f64,
        window: IndexWindow,
        centers: &[Vec<f64>],
    ) -> Result<Self> {
        check_params(d, m, delta)?;
        if window.dim() != d || centers.len() != window.len() {
            return Err(Error::invalid("centers do not match the window"));
        }
        let mut offsets = Vec::with_capacity(d * centers.len());
        for (pos, z) in centers.iter().enumerate() {
            if z.len() != d {
                return Err(Error::invalid("center of wrong dimension"));
            }
            let k = window.index_at(pos);
            offsets.extend(z.iter().zip(&k).map(|(zi, ki)| zi - m * *ki as f64));
        }
        Ok(EquidistributedSequence {
            d,
            m,
            delta,
            window,
            offsets,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn window(&self) -> &IndexWindow {
        &self.window
    }

    pub fn offset(&self, k: &[i64]) -> Option<&[f64]> {
        let p = self.window.position(k)?;
        Some(&self.offsets[p * self.d..(p + 1) * self.d])
    }

    pub fn center(&self, k: &[i64]) -> Option<Vec<f64>> {
        let off = self.offset(k)?;
        Some(
            k.iter()
                .zip(off)
                .map(|(ki, o)| self.m * *ki as f64 + o)
                .collect(),
        )
    }

    pub fn centers(&self) -> impl Iterator<Item = (Vec<i64>, Vec<f64>)> + '_ {
        self.window.indices().map(move |k| {
            let z = self.center(&k).unwrap();
            (k, z)
        })
    }

    /// Same centers with a different radius (no validation).
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        check_params(self.d, self.m, delta)?;
        Ok(EquidistributedSequence {
            delta,
            ..self.clone()
        })
    }

    /// Rescales lengths by `1/M`, giving the equivalent sequence at `M = 1`.
    pub fn normalized(&self) -> Self {
        let s = 1.0 / self.m;
        EquidistributedSequence {
            d: self.d,
            m: 1.0,
            delta: self.delta * s,
            window: self.window.clone(),
            offsets: self.offsets.iter().map(|o| o * s).collect(),
        }
    }

    pub fn to_doc(&self) -> SequenceDoc {
        SequenceDoc {
            d: self.d,
            m: self.m,
            delta: self.delta,
            window: self.window.clone(),
            centers: self.centers().collect(),
        }
    }

    pub fn from_doc(doc: &SequenceDoc) -> Result<Self> {
        let window = IndexWindow::new(doc.window.lo.clone(), doc.window.hi.clone())?;
        let mut centers = vec![Vec::new(); window.len()];
        let mut seen = vec![false; window.len()];
        for (k, z) in &doc.centers {
            let p = window
                .position(k)
                .ok_or_else(|| Error::invalid(format!("center index {k:?} outside window")))?;
            centers[p] = z.clone();
            seen[p] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid(
                "sequence document does not cover its window",
            ));
        }
        Self::from_centers(doc.d, doc.m, doc.delta, window, &centers)
    }
}

/// JSON form `{d, M, delta, window, centers: [[k…],[z…]]…}` with physical centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub delta: f64,
    pub window: IndexWindow,
    pub centers: Vec<(Vec<i64>, Vec<f64>)>,
}

pub fn make_periodic_sequence(
    d: usize,
    m: f64,
    delta: f64,
    window: IndexWindow,
) -> Result<EquidistributedSequence> {
    check_params(d, m, delta)?;
    if window.dim() != d {
        return Err(Error::invalid("window dimension differs from d"));
    }
    let offsets = vec![0.0; d * window.len()];
    Ok(EquidistributedSequence {
        d,
        m,
        delta,
        window,
        offsets,
    })
}

/// Centers drawn uniformly from `Mk + [−(s−ε), s−ε]^d`, `s = M/2 − δ`.
///
/// The unit draws depend only on the seed and window, so one seed gives the
/// same relative positions at every radius.
pub fn make_perturbed_sequence(
    d: usize,
    m: f64,
    delta: f64,
    window: IndexWindow,
    seed: u64,
) -> Result<EquidistributedSequence> {
    check_params(d, m, delta)?;
    if window.dim() != d {
        return Err(Error::invalid("window dimension differs from d"));
    }
    let reach = (0.5 * m - delta - PERTURB_MARGIN * m).max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets = (0..d * window.len())
        .map(|_| {
            let u: f64 = rng.random_range(-1.0..=1.0);
            u * reach
        })
        .collect();
    Ok(EquidistributedSequence {
        d,
        m,
        delta,
        window,
        offsets,
    })
}

/// Accepts iff `B(z_k, δ) ⊂ Λ_M(k)` for every materialized `k`.
///
/// A Euclidean ball sits inside an axis-aligned cube iff on every axis
/// `|z_k − Mk|_i + δ ≤ M/2`.
pub fn validate_sequence(seq: &EquidistributedSequence) -> Validation {
    let tol = CONTAINMENT_TOL * seq.m;
    let half = 0.5 * seq.m;
    for (p, off) in seq.offsets.chunks(seq.d).enumerate() {
        let worst = off
            .iter()
            .map(|o| half - seq.delta - o.abs())
            .fold(f64::INFINITY, f64::min);
        if worst.is_nan() || worst < -tol {
            return Validation::Rejected {
                k: seq.window.index_at(p),
                margin: worst,
            };
        }
    }
    Validation::Accepted
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_centers_are_cell_centers() {
        let w = IndexWindow::cube(1, -2, 2).unwrap();
        let z = make_periodic_sequence(1, 1.0, 0.5, w).unwrap();
        for (k, c) in z.centers() {
            assert_eq!(c, vec![k[0] as f64]);
        }
        assert!(validate_sequence(&z).is_accepted());

        let w = IndexWindow::cube(2, 0, 1).unwrap();
        let z = make_periodic_sequence(2, 2.0, 0.3, w).unwrap();
        assert_eq!(z.center(&[0, 0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(z.center(&[1, 1]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn radius_above_half_cell_rejected() {
        let w = IndexWindow::cube(1, 0, 3).unwrap();
        assert!(matches!(
            make_periodic_sequence(1, 1.0, 0.6, w.clone()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            make_perturbed_sequence(1, 1.0, 0.6, w.clone(), 1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(make_periodic_sequence(1, 0.0, 0.1, w).is_err());
    }

    #[test]
    fn perturbed_with_zero_slack_is_periodic() {
        let w = IndexWindow::cube(1, -3, 3).unwrap();
        let z = make_perturbed_sequence(1, 1.0, 0.5, w, 7).unwrap();
        for (k, c) in z.centers() {
            assert_eq!(c[0], k[0] as f64);
        }
    }

    #[test]
    fn perturbed_is_deterministic() {
        let w = IndexWindow::cube(2, -2, 2).unwrap();
        let a = make_perturbed_sequence(2, 1.0, 0.2, w.clone(), 1).unwrap();
        let b = make_perturbed_sequence(2, 1.0, 0.2, w.clone(), 1).unwrap();
        assert_eq!(a, b);
        let c = make_perturbed_sequence(2, 1.0, 0.2, w, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perturbed_small_radius_stays_inside() {
        let w = IndexWindow::cube(1, -20, 20).unwrap();
        let z = make_perturbed_sequence(1, 1.0, 0.1, w, 3).unwrap();
        for (k, c) in z.centers() {
            assert!((c[0] - k[0] as f64).abs() < 0.4);
        }
        assert!(validate_sequence(&z).is_accepted());
    }

    #[test]
    fn validation_examples() {
        let w = IndexWindow::cube(1, 0, 0).unwrap();
        let z = EquidistributedSequence::from_centers(1, 1.0, 0.1, w, &[vec![0.45]]).unwrap();
        match validate_sequence(&z) {
            Validation::Rejected { k, margin } => {
                assert_eq!(k, vec![0]);
                assert!((margin + 0.05).abs() < 1e-12);
            }
            Validation::Accepted => panic!("0.45 + 0.1 > 0.5 must be rejected"),
        }

        let w = IndexWindow::cube(2, 0, 0).unwrap();
        let z = EquidistributedSequence::from_centers(2, 1.0, 0.25, w, &[vec![0.2, 0.0]]).unwrap();
        assert!(validate_sequence(&z).is_accepted());
    }

    #[test]
    fn doc_roundtrip() {
        let w = IndexWindow::new(vec![-1, 0], vec![1, 2]).unwrap();
        let z = make_perturbed_sequence(2, 1.5, 0.2, w, 9).unwrap();
        let json = serde_json::to_string(&z.to_doc()).unwrap();
        assert!(json.contains("\"M\":1.5"));
        let back: SequenceDoc = serde_json::from_str(&json).unwrap();
        let z2 = EquidistributedSequence::from_doc(&back).unwrap();
        for ((k1, c1), (k2, c2)) in z.centers().zip(z2.centers()) {
            assert_eq!(k1, k2);
            for (a, b) in c1.iter().zip(&c2) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn covering_window() {
        let g = Grid::new(1, 8.0, 63).unwrap();
        let w = IndexWindow::covering(&g, 1.0);
        assert_eq!(w.lo, vec![-4]);
        assert_eq!(w.hi, vec![4]);
    }
}
