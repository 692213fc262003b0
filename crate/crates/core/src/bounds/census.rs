use serde::{Deserialize, Serialize};

use crate::geometry::{IndexWindow, Variant};
use crate::hamiltonian::Field;

/// Dominant/weak dichotomy of the unit lattice for one field (unit scale `M = 1`).
///
/// A site `k` is dominant when `∫_{Λ₁(k)} |φ|² ≥ (1/2T^d) ∫_{Λ_T(k)} |φ|²`;
/// ties count as dominant. Grid points are assigned to the unit cell of the
/// nearest lattice site, and `Λ_T(k)` windows are clipped to the box. The
/// field vanishes outside the box, so clipping does not change any window mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantCensus {
    pub t: f64,
    pub variant: Option<Variant>,
    pub window: IndexWindow,
    pub dominant: Vec<Vec<i64>>,
    pub weak: Vec<Vec<i64>>,
    pub clipped: Vec<Vec<i64>>,
    pub mass_dominant: f64,
    pub mass_weak: f64,
    pub mass_total: f64,
}

/// JSON form of a census.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusDoc {
    #[serde(rename = "T")]
    pub t: f64,
    pub variant: Option<Variant>,
    pub dominant: Vec<Vec<i64>>,
    pub mass_dominant: f64,
    pub mass_total: f64,
    pub clipped: Vec<Vec<i64>>,
}

impl DominantCensus {
    pub fn to_doc(&self) -> CensusDoc {
        CensusDoc {
            t: self.t,
            variant: self.variant,
            dominant: self.dominant.clone(),
            mass_dominant: self.mass_dominant,
            mass_total: self.mass_total,
            clipped: self.clipped.clone(),
        }
    }
}

/// Summed-area table of point masses over the grid, `(n+1)^d` entries.
struct Prefix {
    n: usize,
    d: usize,
    table: Vec<f64>,
}

impl Prefix {
    fn new(values: &[f64], n: usize, d: usize) -> Self {
        let side = n + 1;
        let mut table = vec![0.0; side.pow(d as u32)];
        let mut multi = vec![0usize; d];
        for (idx, v) in values.iter().enumerate() {
            let mut rem = idx;
            for a in (0..d).rev() {
                multi[a] = rem % n;
                rem /= n;
            }
            let pos = multi.iter().fold(0, |acc, &i| acc * side + i + 1);
            table[pos] = *v;
        }
        for a in 0..d {
            let stride = side.pow((d - 1 - a) as u32);
            for pos in 0..table.len() {
                if !(pos / stride).is_multiple_of(side) {
                    table[pos] += table[pos - stride];
                }
            }
        }
        Prefix { n, d, table }
    }

    /// Sum over the index box `lo[a] ..= hi[a]` (empty when any `lo > hi`).
    fn sum(&self, lo: &[usize], hi: &[usize]) -> f64 {
        if lo.iter().zip(hi).any(|(a, b)| a > b) {
            return 0.0;
        }
        let side = self.n + 1;
        let mut total = 0.0;
        for corner in 0..1usize << self.d {
            let mut pos = 0;
            let mut sign = 1.0;
            for a in 0..self.d {
                let i = if corner >> a & 1 == 1 {
                    sign = -sign;
                    lo[a]
                } else {
                    hi[a] + 1
                };
                pos = pos * side + i;
            }
            total += sign * self.table[pos];
        }
        total
    }
}

/// Indices `j` with `lo < x_j < hi` on an axis of `n` points `x_j = x0 + j h`.
fn strict_range(x0: f64, h: f64, n: usize, lo: f64, hi: f64) -> (usize, usize) {
    let x = |j: i64| x0 + j as f64 * h;
    let mut a = ((lo - x0) / h).floor() as i64;
    while x(a) <= lo {
        a += 1;
    }
    while a > 0 && x(a - 1) > lo {
        a -= 1;
    }
    let mut b = ((hi - x0) / h).ceil() as i64;
    while x(b) >= hi {
        b -= 1;
    }
    while x(b + 1) < hi {
        b += 1;
    }
    let a = a.max(0);
    let b = b.min(n as i64 - 1);
    if a > b {
        (1, 0)
    } else {
        (a as usize, b as usize)
    }
}

pub fn classify_dominant(phi: &Field, t: f64, variant: Option<Variant>) -> DominantCensus {
    let grid = *phi.grid();
    let d = grid.d;
    let n = grid.n;
    let vol = grid.cell_volume();
    let window = IndexWindow::covering(&grid, 1.0);
    let dens: Vec<f64> = phi.values().iter().map(|v| vol * v * v).collect();

    let mut cell_mass = vec![0.0; window.len()];
    let mut k = vec![0i64; d];
    grid.for_each_point(|idx, x| {
        for (ki, xi) in k.iter_mut().zip(x) {
            *ki = xi.round() as i64;
        }
        cell_mass[window.position(&k).expect("covering window")] += dens[idx];
    });

    let prefix = Prefix::new(&dens, n, d);
    let x0 = grid.coordinate(0);
    let h = grid.h();
    let half_box = 0.5 * grid.length;
    let threshold = 1.0 / (2.0 * t.powi(d as i32));

    let mut census = DominantCensus {
        t,
        variant,
        window: window.clone(),
        dominant: Vec::new(),
        weak: Vec::new(),
        clipped: Vec::new(),
        mass_dominant: 0.0,
        mass_weak: 0.0,
        mass_total: phi.norm_sq(),
    };
    let mut lo = vec![0usize; d];
    let mut hi = vec![0usize; d];
    for (pos, site) in window.indices().enumerate() {
        let mut clipped = false;
        for a in 0..d {
            let c = site[a] as f64;
            let (l, u) = strict_range(x0, h, n, c - 0.5 * t, c + 0.5 * t);
            lo[a] = l;
            hi[a] = u;
            clipped |= c - 0.5 * t < -half_box || c + 0.5 * t > half_box;
        }
        let window_mass = prefix.sum(&lo, &hi).max(0.0);
        let own = cell_mass[pos];
        if clipped {
            census.clipped.push(site.clone());
        }
        if own >= threshold * window_mass {
            census.mass_dominant += own;
            census.dominant.push(site);
        } else {
            census.mass_weak += own;
            census.weak.push(site);
        }
    }
    census
}

/// `‖φ‖² ≤ 2‖χ_D φ‖²` up to rounding.
pub fn dominant_mass_bound(census: &DominantCensus) -> bool {
    census.mass_total <= 2.0 * census.mass_dominant + 1e-12 * census.mass_total
}

/// Largest number of windows `Λ_T(k)`, `k ∈ ℤ^d`, containing a single point
/// with coordinates `x` (product over axes of the 1D counts).
pub fn window_multiplicity(x: &[f64], t: f64) -> usize {
    x.iter()
        .map(|&xi| {
            let lo = (xi - 0.5 * t).floor() as i64;
            let hi = (xi + 0.5 * t).ceil() as i64;
            (lo..=hi)
                .filter(|&k| (xi - k as f64).abs() < 0.5 * t)
                .count()
        })
        .product()
}
