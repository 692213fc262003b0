use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::projector::{case_rng, projector_cases};
use super::report::{CaseRecord, Report};
use super::sampling::{masks, resolve_k};
use crate::bounds::{thm3_lhs_rhs, BoundParams};
use crate::hamiltonian::{Field, Grid};
use crate::spectral::eigenpairs_with;
use crate::{Error, Result};

/// Sum of Dirichlet sine products with mode numbers `1..=cutoff` per axis.
fn band_limited(grid: Grid, cutoff: usize, coeffs: &[f64]) -> Field {
    let l = grid.length;
    let mut multi = vec![0usize; grid.d];
    Field::from_fn(grid, |x| {
        let mut acc = 0.0;
        multi.iter_mut().for_each(|m| *m = 0);
        for &c in coeffs {
            let term: f64 = x
                .iter()
                .zip(&multi)
                .map(|(xi, &mi)| ((mi + 1) as f64 * PI * (xi + 0.5 * l) / l).sin())
                .product();
            acc += c * term;
            for m in multi.iter_mut() {
                *m += 1;
                if *m < cutoff {
                    break;
                }
                *m = 0;
            }
        }
        acc
    })
}

fn gaussian(grid: Grid, sigma: f64) -> Field {
    Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        (-r2 / (4.0 * sigma * sigma)).exp()
    })
}

/// Smooth bump `(δ² − |x − z|²)²₊` inside the ball of cell 0.
fn ball_bump(grid: Grid, z: &[f64], delta: f64) -> Field {
    Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        (delta * delta - r2).max(0.0).powi(2)
    })
}

pub fn verify_residual_form(cfg: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    cfg.check_deltas(true)?;
    let k = resolve_k(cfg)?;
    let h = cfg.hamiltonian()?;
    let grid = *h.grid();
    let m = cfg.sampling.m;
    let tol = cfg.tolerances;
    let v = h.potential().sup_norm();
    let masks = masks(cfg)?;

    let mut family: Vec<(String, Field)> = Vec::new();
    if cfg.eigen.count > 0 {
        let sol = eigenpairs_with(&h, cfg.eigen.count, cfg.eigen.tol, &cfg.solver_options())?;
        for (i, phi) in sol.modes.into_iter().enumerate() {
            family.push((format!("eigen{i}"), phi));
        }
    }
    for &s in &cfg.residual.packet_widths {
        family.push((format!("gauss{s}"), gaussian(grid, s)));
    }
    let terms = cfg.residual.cutoff.pow(grid.d as u32);
    for j in 0..cfg.residual.band_limited {
        let mut rng = case_rng(cfg.seed, usize::MAX, j);
        let coeffs: Vec<f64> = (0..terms).map(|_| rng.random_range(-1.0..1.0)).collect();
        family.push((
            format!("band{j}"),
            band_limited(grid, cfg.residual.cutoff, &coeffs),
        ));
    }

    let mut cases: Vec<(usize, usize, Option<Field>)> = Vec::new();
    for (j, &delta) in cfg.sampling.deltas.iter().enumerate() {
        for i in 0..family.len() {
            cases.push((i, j, None));
        }
        let z = cfg
            .sequence(delta)?
            .center(&vec![0; grid.d])
            .unwrap_or(vec![0.0; grid.d]);
        let bump = ball_bump(grid, &z, delta);
        if bump.norm_sq() > 0.0 {
            cases.push((usize::MAX, j, Some(bump)));
        }
    }

    let mut records = cases
        .par_iter()
        .map(|(i, j, own)| {
            let (name, psi) = match own {
                Some(f) => ("ball", f),
                None => (family[*i].0.as_str(), &family[*i].1),
            };
            let delta = cfg.sampling.deltas[*j];
            let p = BoundParams::new(delta, m, v, k.value);
            let (lhs, rhs) = thm3_lhs_rhs(psi, &masks[*j], &p, &h)?;
            let norm = psi.norm_sq();
            if norm == 0.0 {
                return Err(Error::ZeroField);
            }
            let mut rec = CaseRecord::new(name, delta, m, k.value)
                .with_boundary(psi.relative_boundary_mass(), tol.boundary_mass);
            rec.observed_ratio = Some(masks[*j].masked_norm_sq(psi)? / norm);
            rec.residual = Some(h.apply(psi)?.norm());
            rec.note = "observed = rhs, bound = lhs".into();
            Ok(rec.judged(rhs, lhs, tol.ratio_slack * norm))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut chain = Vec::new();
    if let Some(spec) = &cfg.projector {
        let (r, c) = projector_cases(cfg, spec, k.value, &h, &masks)?;
        records.extend(r);
        chain = c;
    }

    let mut report = Report::new("verify-residual", cfg.dimension, cfg.potential.name());
    report.k = Some(k);
    report.records = records;
    report.chain = chain;
    report.finish();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
