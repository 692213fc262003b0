use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, KChoice};
use super::fit::fit_exponent;
use super::report::{CaseRecord, CensusSummary, KInfo, Report};
use crate::bounds::{classify_dominant, dominant_mass_bound, thm1_bound, BoundParams};
use crate::geometry::{observation_box_side, rasterize_mask, Mask, Variant};
use crate::hamiltonian::{Field, Grid};
use crate::spectral::eigenpairs_with;
use crate::{Error, Result};

/// `‖Wφ‖² / ‖φ‖²`
pub fn sampling_ratio(phi: &Field, mask: &Mask) -> Result<f64> {
    mask.grid().check_same(phi.grid())?;
    let total = phi.norm_sq();
    if total == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(mask.masked_norm_sq(phi)? / total)
}

/// Same samples on the grid rescaled by `1/m` (the `M = 1` normalization).
pub fn unit_scale(phi: &Field, m: f64) -> Result<Field> {
    let g = phi.grid();
    let grid = Grid::new(g.d, g.length / m, g.n)?;
    Field::from_values(grid, phi.values().to_vec())
}

pub fn resolve_k(cfg: &ExperimentConfig) -> Result<KInfo> {
    match &cfg.k {
        KChoice::Fixed(v) => Ok(KInfo {
            value: *v,
            source: "fixed (illustrative)".into(),
        }),
        KChoice::Fit(s) if s == "fit" => Ok(KInfo {
            value: fit_exponent(cfg)?.k_hat,
            source: "fit".into(),
        }),
        KChoice::Fit(s) => {
            let rel = s.strip_prefix("fit:").ok_or_else(|| {
                Error::config(format!(
                    "k must be a number, \"fit\" or \"fit:<path>\", got '{s}'"
                ))
            })?;
            let other = ExperimentConfig::load(&cfg.resolve_path(rel))?;
            Ok(KInfo {
                value: fit_exponent(&other)?.k_hat,
                source: s.clone(),
            })
        }
    }
}

pub(crate) fn masks(cfg: &ExperimentConfig) -> Result<Vec<Mask>> {
    let grid = cfg.grid()?;
    cfg.sampling
        .deltas
        .par_iter()
        .map(|&d| rasterize_mask(&cfg.sequence(d)?, &grid))
        .collect()
}

/// Dominant census of one mode for one variant at unit scale.
pub fn census_summary(
    phi: &Field,
    m: f64,
    mode: usize,
    energy: f64,
    variant: Variant,
) -> Result<CensusSummary> {
    let unit = unit_scale(phi, m)?;
    let t = observation_box_side(variant, phi.grid().d);
    let census = classify_dominant(&unit, t, Some(variant));
    Ok(CensusSummary {
        mode,
        energy,
        relative_boundary_mass: phi.relative_boundary_mass(),
        dominant_count: census.dominant.len(),
        weak_count: census.weak.len(),
        mass_weak: census.mass_weak,
        bound_holds: dominant_mass_bound(&census),
        census: census.to_doc(),
    })
}

pub fn verify_thm1(cfg: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    cfg.check_deltas(false)?;
    let k = resolve_k(cfg)?;
    let h = cfg.hamiltonian()?;
    let sol = eigenpairs_with(&h, cfg.eigen.count, cfg.eigen.tol, &cfg.solver_options())?;
    let masks = masks(cfg)?;
    let m = cfg.sampling.m;
    let tol = cfg.tolerances;

    let cases: Vec<(usize, usize)> = (0..sol.len())
        .flat_map(|i| (0..masks.len()).map(move |j| (i, j)))
        .collect();
    let records = cases
        .par_iter()
        .map(|&(i, j)| {
            let phi = &sol.modes[i];
            let e = sol.energies[i];
            let delta = cfg.sampling.deltas[j];
            let ratio = sampling_ratio(phi, &masks[j])?;
            let v = h.potential().shifted_sup_norm(e);
            let bound = thm1_bound(&BoundParams::new(delta, m, v, k.value))?;
            let mut rec = CaseRecord::new(format!("mode{i}"), delta, m, k.value)
                .with_boundary(phi.relative_boundary_mass(), tol.boundary_mass);
            rec.energy = Some(e);
            rec.observed_ratio = Some(ratio);
            rec.residual = Some(sol.residuals[i]);
            if k.value < 1.0 {
                rec.note = "K below 1".into();
            }
            Ok(rec.judged(ratio, bound * bound, tol.ratio_slack))
        })
        .collect::<Result<Vec<_>>>()?;

    let census = (0..sol.len())
        .into_par_iter()
        .flat_map_iter(|i| [Variant::Thm1, Variant::Thm3].map(move |v| (i, v)))
        .map(|(i, v)| census_summary(&sol.modes[i], m, i, sol.energies[i], v))
        .collect::<Result<Vec<_>>>()?;

    let mut report = Report::new("verify-thm1", cfg.dimension, cfg.potential.name());
    report.k = Some(k);
    report.records = records;
    report.census = census;
    report.finish();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
