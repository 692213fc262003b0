use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{CaseRecord, Report, Verdict};
use super::sampling::{masks, resolve_k, sampling_ratio};
use crate::bounds::{thm1_bound, weyl_threshold, BoundParams};
use crate::spectral::weyl_sequence;
use crate::{Error, Result};

/// Half-bound check `((1/2)(δ/M)^{K(…)})² ≤ ratio` for every iterate past the
/// threshold; earlier iterates are out of scope.
pub fn verify_weyl(cfg: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    cfg.check_deltas(false)?;
    let spec = cfg
        .weyl
        .as_ref()
        .ok_or_else(|| Error::config("verify-weyl needs a [weyl] table"))?;
    if spec.n_from == 0 || spec.n_to < spec.n_from {
        return Err(Error::config(format!(
            "bad Weyl index range {}..={}",
            spec.n_from, spec.n_to
        )));
    }
    let k = resolve_k(cfg)?;
    let h = cfg.hamiltonian()?;
    let m = cfg.sampling.m;
    let tol = cfg.tolerances;
    let energy = spec.energy;
    let v = h.potential().shifted_sup_norm(energy);
    let masks = masks(cfg)?;

    let iterates: Vec<_> = (spec.n_from..=spec.n_to)
        .into_par_iter()
        .map(|n| (n, weyl_sequence(&h, energy, n, &spec.strategy)))
        .collect();

    let cases: Vec<(usize, usize)> = (0..iterates.len())
        .flat_map(|i| (0..masks.len()).map(move |j| (i, j)))
        .collect();
    let records = cases
        .par_iter()
        .map(|&(i, j)| {
            let (n, it) = &iterates[i];
            let delta = cfg.sampling.deltas[j];
            let mut rec = CaseRecord::new(format!("n{n}"), delta, m, k.value);
            rec.n = Some(*n);
            rec.energy = Some(energy);
            let it = match it {
                Ok(it) => it,
                Err(e) => {
                    rec.verdict = Verdict::Error;
                    rec.note = format!("{}: {e}", e.kind());
                    return Ok(rec);
                }
            };
            let p = BoundParams::new(delta, m, v, k.value);
            let threshold = weyl_threshold(&p)?;
            let half = 0.5 * thm1_bound(&p)?;
            let ratio = sampling_ratio(&it.psi, &masks[j])?;
            rec.residual = Some(it.residual);
            rec.observed_ratio = Some(ratio);
            rec = rec.with_boundary(it.psi.relative_boundary_mass(), tol.boundary_mass);
            if (*n as f64) < threshold {
                rec.observed = ratio;
                rec.bound = half * half;
                rec.verdict = Verdict::OutOfScope;
                rec.note = format!("n below threshold {threshold:.3}");
                return Ok(rec);
            }
            rec.note = format!("threshold {threshold:.3}");
            Ok(rec.judged(ratio, half * half, tol.ratio_slack))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = Report::new("verify-weyl", cfg.dimension, cfg.potential.name());
    report.k = Some(k);
    report.records = records;
    report.finish();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
