//! Closed-form lower bounds and the dominant-site census.
//!
//! `K` is always an explicit argument: the exponent constants exist but
//! have no known numerical value, so callers supply one or fit one.

mod census;

pub use census::{
    classify_dominant, dominant_mass_bound, window_multiplicity, CensusDoc, DominantCensus,
};

use serde::{Deserialize, Serialize};

use crate::geometry::Mask;
use crate::hamiltonian::{Field, HamiltonianOperator};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    /// `‖V − E‖_∞` or `‖V‖_∞`, depending on the bound.
    pub v_norm: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl BoundParams {
    pub fn new(delta: f64, m: f64, v_norm: f64, k: f64) -> Self {
        BoundParams {
            delta,
            m,
            v_norm,
            e0: 0.0,
            k,
        }
    }

    pub fn with_e0(mut self, e0: f64) -> Self {
        self.e0 = e0;
        self
    }

    fn check(&self, open_radius: bool) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::invalid(format!(
                "M must be positive, got {}",
                self.m
            )));
        }
        let half = 0.5 * self.m;
        let delta_ok = self.delta.is_finite()
            && self.delta > 0.0
            && if open_radius {
                self.delta < half
            } else {
                self.delta <= half
            };
        if !delta_ok {
            let range = if open_radius { "(0, M/2)" } else { "(0, M/2]" };
            return Err(Error::invalid(format!(
                "delta = {} outside {range} for M = {}",
                self.delta, self.m
            )));
        }
        if !(self.v_norm.is_finite() && self.v_norm >= 0.0) {
            return Err(Error::invalid(format!(
                "potential norm must be >= 0, got {}",
                self.v_norm
            )));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::invalid(format!(
                "K must be positive and finite, got {}",
                self.k
            )));
        }
        Ok(())
    }

    /// `K (1 + M^{4/3} v^{2/3})`
    pub fn exponent_with(&self, v: f64) -> f64 {
        self.k * (1.0 + self.m.powf(4.0 / 3.0) * v.powf(2.0 / 3.0))
    }

    pub fn ratio(&self) -> f64 {
        self.delta / self.m
    }
}

/// `(δ/M)^{K(1 + M^{4/3}‖V−E‖^{2/3})}` for `δ ∈ (0, M/2]`.
pub fn thm1_bound(p: &BoundParams) -> Result<f64> {
    p.check(false)?;
    Ok(p.ratio().powf(p.exponent_with(p.v_norm)))
}

/// `γ` with `γ² = (1/2M⁴)(δ/M)^{K(1 + M^{4/3}(2‖V‖ + E₀)^{2/3})}`, `δ ∈ (0, M/2)`.
pub fn thm2_gamma(p: &BoundParams) -> Result<f64> {
    p.check(true)?;
    if !(p.e0.is_finite() && p.e0 > 0.0) {
        return Err(Error::invalid(format!("E0 must be positive, got {}", p.e0)));
    }
    let effective = 2.0 * p.v_norm + p.e0;
    let g2 = 0.5 / p.m.powi(4) * p.ratio().powf(p.exponent_with(effective));
    Ok(g2.sqrt())
}

/// Operator floor `M⁴γ²` of the compressed mask.
pub fn thm2_floor(p: &BoundParams) -> Result<f64> {
    let g = thm2_gamma(p)?;
    Ok(p.m.powi(4) * g * g)
}

/// `(δ/M)^{K(1 + M^{4/3}‖V‖^{2/3})}` for `δ ∈ (0, M/2)`.
pub fn thm3_factor(p: &BoundParams) -> Result<f64> {
    p.check(true)?;
    Ok(p.ratio().powf(p.exponent_with(p.v_norm)))
}

/// `lhs = factor·‖ψ‖²`, `rhs = ‖Wψ‖² + δ²M²‖Hψ‖²`.
///
/// For the `V − E` form pass `H.shifted(−E)` and `v_norm = ‖V − E‖_∞`.
pub fn thm3_lhs_rhs(
    psi: &Field,
    mask: &Mask,
    p: &BoundParams,
    h: &HamiltonianOperator,
) -> Result<(f64, f64)> {
    mask.grid().check_same(psi.grid())?;
    h.grid().check_same(psi.grid())?;
    let lhs = thm3_factor(p)? * psi.norm_sq();
    let hpsi = h.apply(psi)?;
    let rhs = mask.masked_norm_sq(psi)? + (p.delta * p.m).powi(2) * hpsi.norm_sq();
    Ok((lhs, rhs))
}

/// `√2 δM (δ/M)^{−K(1 + M^{4/3}‖V−E‖^{2/3})/2}`
pub fn weyl_threshold(p: &BoundParams) -> Result<f64> {
    p.check(false)?;
    Ok(2f64.sqrt() * p.delta * p.m * p.ratio().powf(-0.5 * p.exponent_with(p.v_norm)))
}
