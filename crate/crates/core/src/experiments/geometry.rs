use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::projector::case_rng;
use super::report::{CaseRecord, Report};
use crate::geometry::{
    check_annulus_containment, check_observation_box, rasterize_mask, validate_sequence,
    EquidistributedSequence, IndexWindow, Mask, ProofGeometry, SequenceDoc, Validation, Variant,
};
use crate::Result;

/// Sequences and masks produced for the configured radii.
#[derive(Debug, Clone)]
pub struct GeometryArtifacts {
    pub sequences: Vec<SequenceDoc>,
    pub masks: Vec<Mask>,
}

type Check = fn(&TrialOutcome) -> bool;

#[derive(Debug, Clone, Copy, Default)]
struct TrialOutcome {
    valid: bool,
    annulus: bool,
    q_range: bool,
    observation: bool,
    q: f64,
}

/// Unit-scale sequence whose centers are pushed against the cell walls on a
/// random subset of axes.
fn adversarial_sequence(d: usize, seed: u64, trial: usize) -> Result<EquidistributedSequence> {
    let mut rng = case_rng(seed, d, trial);
    let delta: f64 = rng.random_range(0.01..=0.5);
    let reach = 0.5 - delta;
    let window = IndexWindow::cube(d, -1, 3)?;
    let centers: Vec<Vec<f64>> = window
        .indices()
        .map(|k| {
            k.iter()
                .map(|&ki| {
                    let off = match rng.random_range(0..3) {
                        0 => -reach,
                        1 => reach,
                        _ => rng.random_range(-reach..=reach),
                    };
                    ki as f64 + off
                })
                .collect()
        })
        .collect();
    EquidistributedSequence::from_centers(d, 1.0, delta, window, &centers)
}

fn run_trial(d: usize, seed: u64, trial: usize) -> Result<TrialOutcome> {
    let seq = adversarial_sequence(d, seed, trial)?;
    let mut out = TrialOutcome {
        valid: validate_sequence(&seq).is_accepted(),
        ..Default::default()
    };
    if !out.valid {
        return Ok(out);
    }
    let k = vec![0i64; d];
    let g1 = ProofGeometry::build(&seq, &k, Variant::Thm1)?;
    let g3 = ProofGeometry::build(&seq, &k, Variant::Thm3)?;
    let bound = 3.0 * (d as f64).sqrt();
    out.annulus = check_annulus_containment(&g1);
    out.q = g3.q;
    out.q_range = (1.0..=bound * (1.0 + 1e-12)).contains(&g3.q);
    out.observation = check_observation_box(&g3);
    Ok(out)
}

/// The d = 1 instance with `Q > (5/2)√d` that still satisfies `Q ≤ 3√d`:
/// `z_{k⁺}` sits at 2.4 in cell 2, so the farthest point of `Λ₁(0)` is −1/2.
pub fn correction_instance() -> Result<ProofGeometry> {
    let window = IndexWindow::cube(1, -1, 3)?;
    let centers: Vec<Vec<f64>> = window
        .indices()
        .map(|k| vec![if k[0] == 2 { 2.4 } else { k[0] as f64 }])
        .collect();
    let seq = EquidistributedSequence::from_centers(1, 1.0, 0.05, window, &centers)?;
    ProofGeometry::build(&seq, &[0], Variant::Thm3)
}

pub fn validate_geometry(cfg: &ExperimentConfig) -> Result<(Report, GeometryArtifacts)> {
    let start = Instant::now();
    cfg.check_deltas(false)?;
    let m = cfg.sampling.m;
    let grid = cfg.grid()?;
    let mut records = Vec::new();
    let mut artifacts = GeometryArtifacts {
        sequences: Vec::new(),
        masks: Vec::new(),
    };
    for &delta in &cfg.sampling.deltas {
        let seq = cfg.sequence(delta)?;
        let mut rec = CaseRecord::new("sequence", delta, m, 0.0);
        let accepted = match validate_sequence(&seq) {
            Validation::Accepted => 1.0,
            Validation::Rejected { k, margin } => {
                rec.note = format!("cell {k:?} violated by {margin:e}");
                0.0
            }
        };
        let mask = rasterize_mask(&seq, &grid)?;
        if rec.note.is_empty() {
            rec.note = format!("covered fraction {:.6}", mask.covered_fraction());
        }
        records.push(rec.judged(accepted, 1.0, 0.0));
        artifacts.sequences.push(seq.to_doc());
        artifacts.masks.push(mask);
    }

    for &d in &cfg.geometry.dimensions {
        let trials = cfg.geometry.trials;
        let outcomes = (0..trials)
            .into_par_iter()
            .map(|t| run_trial(d, cfg.seed, t))
            .collect::<Result<Vec<_>>>()?;
        let frac = |f: Check| outcomes.iter().filter(|o| f(o)).count() as f64 / trials as f64;
        let (qmin, qmax) = outcomes
            .iter()
            .filter(|o| o.valid)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), o| {
                (a.min(o.q), b.max(o.q))
            });
        let checks: [(&str, Check); 4] = [
            ("valid", |o| o.valid),
            ("annulus", |o| o.annulus),
            ("q-range", |o| o.q_range),
            ("observation-box", |o| o.observation),
        ];
        for (name, f) in checks {
            let mut rec = CaseRecord::new(format!("d{d} {name}"), 0.0, 1.0, 0.0);
            rec.note = format!("{trials} trials, Q in [{qmin:.6}, {qmax:.6}]");
            records.push(rec.judged(frac(f), 1.0, 0.0));
        }
    }

    let g = correction_instance()?;
    let sd = (g.x0.len() as f64).sqrt();
    let mut above = CaseRecord::new("remark Q > 5/2 sqrt(d)", 0.05, 1.0, 0.0);
    above.note = format!("x0 = {:?}, Q = {}", g.x0, g.q);
    // strict inequality: shift the bound up by a rounding margin
    records.push(above.judged(g.q, 2.5 * sd + 1e-12, 0.0));
    let mut below = CaseRecord::new("remark Q <= 3 sqrt(d)", 0.05, 1.0, 0.0);
    below.note = format!("Q = {}", g.q);
    records.push(below.judged(3.0 * sd, g.q, 0.0));

    let mut report = Report::new("validate-geometry", cfg.dimension, cfg.potential.name());
    report.records = records;
    report.finish();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((report, artifacts))
}
