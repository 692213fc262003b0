//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines are always printed; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sampling_lab::bounds::{classify_dominant, dominant_mass_bound, thm2_gamma, BoundParams};
use sampling_lab::experiments::{
    correction_instance, dense_projector_min_eigenvalue, fit_exponent, interval_for, unit_scale,
    validate_geometry, verify_projector, verify_residual_form, verify_thm1, verify_weyl,
    ExperimentConfig, Report, Verdict,
};
use sampling_lab::geometry::{observation_box_side, rasterize_mask, Variant};
use sampling_lab::hamiltonian::{Field, Grid, HamiltonianOperator, PotentialSpec};
use sampling_lab::spectral::{eigenpairs, eigenpairs_with, projector_basis};

type Outcome = Result<String, String>;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit_s: f64, start: Instant) -> Result<f64, String> {
    let t = start.elapsed().as_secs_f64();
    ensure(t < limit_s, || format!("runtime {t:.2}s over {limit_s}s"))?;
    Ok(t)
}

fn stock_reports() -> Result<Vec<(String, Report)>, String> {
    let e = |x: sampling_lab::Error| x.to_string();
    Ok(vec![
        (
            "geometry".into(),
            validate_geometry(&config("geometry.toml")).map_err(e)?.0,
        ),
        (
            "thm1_box1d".into(),
            verify_thm1(&config("thm1_box1d.toml")).map_err(e)?,
        ),
        (
            "fit_exponent".into(),
            fit_exponent(&config("fit_exponent.toml"))
                .map_err(e)?
                .report,
        ),
        (
            "thm2_projector".into(),
            verify_projector(&config("thm2_projector.toml")).map_err(e)?,
        ),
        (
            "thm3_residual".into(),
            verify_residual_form(&config("thm3_residual.toml")).map_err(e)?,
        ),
        (
            "thm4_weyl".into(),
            verify_weyl(&config("thm4_weyl.toml")).map_err(e)?,
        ),
    ])
}

fn c1_geometry() -> Outcome {
    let start = Instant::now();
    let cfg = config("geometry.toml");
    ensure(cfg.geometry.trials >= 1000, || {
        "fewer than 1000 trials".into()
    })?;
    let (report, _) = validate_geometry(&cfg).map_err(|e| e.to_string())?;
    for d in [1, 2, 3] {
        for check in ["annulus", "q-range", "observation-box"] {
            let name = format!("d{d} {check}");
            let r = report
                .records
                .iter()
                .find(|r| r.case == name)
                .ok_or(format!("missing {name}"))?;
            ensure(r.observed == 1.0, || format!("{name}: {}", r.observed))?;
        }
    }
    let t = within(10.0, start)?;
    Ok(format!(
        "1000 trials x d in {{1,2,3}}, all three checks at 100% ({t:.2}s)"
    ))
}

fn c2_remark() -> Outcome {
    let g = correction_instance().map_err(|e| e.to_string())?;
    let sd = (g.x0.len() as f64).sqrt();
    ensure(g.q > 2.5 * sd && g.q <= 3.0 * sd, || format!("Q = {}", g.q))?;
    Ok(format!("d = 1, x0 = {:?}: Q = {} in (5/2, 3]", g.x0, g.q))
}

/// Random field supported on unit cells well inside the box, with
/// log-normal cell amplitudes.
fn random_interior_field(grid: Grid, support: f64, rng: &mut ChaCha8Rng) -> Field {
    let cells = (2.0 * support) as usize + 1;
    let amps: Vec<f64> = (0..cells.pow(grid.d as u32))
        .map(|_| {
            let g: f64 = (0..6).map(|_| rng.random_range(-1.0..1.0)).sum();
            (2.0 * g).exp() * if rng.random_bool(0.3) { 0.0 } else { 1.0 }
        })
        .collect();
    let mut noise = ChaCha8Rng::seed_from_u64(rng.random());
    Field::from_fn(grid, |x| {
        if x.iter().any(|t| t.abs() >= support) {
            return 0.0;
        }
        let mut idx = 0;
        for t in x {
            idx = idx * cells + (t + support).floor() as usize;
        }
        amps[idx] * noise.random_range(0.5..1.5)
    })
}

fn c3_dominant_mass() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grids = [
        Grid::new(1, 200.0, 1599).unwrap(),
        Grid::new(2, 60.0, 239).unwrap(),
    ];
    let mut checked = 0;
    for grid in grids {
        for trial in 0..100 {
            let phi = random_interior_field(grid, 12.0, &mut rng);
            if phi.norm_sq() == 0.0 {
                continue;
            }
            for v in [Variant::Thm1, Variant::Thm3] {
                let c = classify_dominant(&phi, observation_box_side(v, grid.d), Some(v));
                ensure(dominant_mass_bound(&c), || {
                    format!("d={} trial {trial} {v:?}", grid.d)
                })?;
                checked += 1;
            }
        }
    }
    // eigenfunctions of confining wells in d = 1, 2
    let wells = [
        (Grid::new(1, 24.0, 2399).unwrap(), 6),
        (Grid::new(2, 12.0, 47).unwrap(), 4),
    ];
    let mut modes = 0;
    for (grid, count) in wells {
        let spec = PotentialSpec::Well {
            value: 4.0,
            half_width: 0.3 * grid.length,
        };
        let h = HamiltonianOperator::from_spec(grid, &spec).map_err(|e| e.to_string())?;
        let sol = eigenpairs(&h, count, 1e-9).map_err(|e| e.to_string())?;
        for (i, phi) in sol.modes.iter().enumerate() {
            let unit = unit_scale(phi, 1.0).map_err(|e| e.to_string())?;
            for v in [Variant::Thm1, Variant::Thm3] {
                let c = classify_dominant(&unit, observation_box_side(v, grid.d), Some(v));
                ensure(dominant_mass_bound(&c), || {
                    format!("d={} mode {i} {v:?}", grid.d)
                })?;
                modes += 1;
            }
        }
    }
    let t = within(30.0, start)?;
    Ok(format!(
        "{checked} random-field and {modes} eigenfunction censuses hold ({t:.2}s)"
    ))
}

fn c4_ratio_range(reports: &[(String, Report)]) -> Outcome {
    let mut n = 0;
    for (name, rep) in reports {
        for r in &rep.records {
            if let Some(x) = r.observed_ratio {
                ensure((-1e-12..=1.0 + 1e-12).contains(&x), || {
                    format!("{name} {}: ratio {x}", r.case)
                })?;
                n += 1;
            }
        }
    }
    ensure(n > 0, || "no ratios recorded".into())?;
    Ok(format!(
        "{n} ratios in [0, 1] across {} stock runs",
        reports.len()
    ))
}

fn lowest_box_energy(n: usize) -> Result<f64, String> {
    let grid = Grid::new(1, 1.0, n).map_err(|e| e.to_string())?;
    let h = HamiltonianOperator::from_spec(grid, &PotentialSpec::default())
        .map_err(|e| e.to_string())?;
    Ok(eigenpairs(&h, 1, 1e-9).map_err(|e| e.to_string())?.energies[0])
}

/// `sin(π j i / m)` with the argument reduced exactly to `[0, π/2]`; the
/// unreduced product carries rounding that the stencil amplifies by `1/h²`.
fn sine_sample(j: usize, i: usize, m: usize) -> f64 {
    let mut r = (j * i) % (2 * m);
    let mut sign = 1.0;
    if r > m {
        r -= m;
        sign = -1.0;
    }
    if 2 * r > m {
        r = m - r;
    }
    sign * (PI * r as f64 / m as f64).sin()
}

fn c5_solver() -> Outcome {
    let start = Instant::now();
    let exact = PI * PI;
    let e511 = lowest_box_energy(511)?;
    let rel = (e511 - exact).abs() / exact;
    ensure(rel < 1e-3, || format!("relative error {rel:e}"))?;

    let errs: Vec<f64> = [63, 127, 255, 511]
        .iter()
        .map(|&n| lowest_box_energy(n).map(|e| (e - exact).abs()))
        .collect::<Result<_, _>>()?;
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for p in &orders {
        ensure((1.9..=2.1).contains(p), || format!("orders {orders:?}"))?;
    }

    let n = 511;
    let grid = Grid::new(1, 1.0, n).unwrap();
    let h = HamiltonianOperator::from_spec(grid, &PotentialSpec::default()).unwrap();
    let hs = grid.h();
    let mut worst = 0.0_f64;
    for j in 1..=8 {
        let v =
            Field::from_values(grid, (1..=n).map(|i| sine_sample(j, i, n + 1)).collect()).unwrap();
        let e = (2.0 / hs * (0.5 * j as f64 * PI * hs).sin()).powi(2);
        worst = worst.max(h.residual_norm(&v, e).unwrap() / v.norm());
    }
    ensure(worst <= 1e-10, || format!("sine residual {worst:e}"))?;
    let t = within(10.0, start)?;
    Ok(format!(
        "rel err {rel:.2e} at n=511, orders {:?}, sine residual {worst:.1e} ({t:.2}s)",
        orders
            .iter()
            .map(|p| (p * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    ))
}

fn c6_fit() -> Result<(String, f64), String> {
    let start = Instant::now();
    let cfg = config("fit_exponent.toml");
    ensure(cfg.dimension == 1 && cfg.sampling.deltas.len() == 8, || {
        "config shape".into()
    })?;
    let m = cfg.sampling.m;
    ensure(
        cfg.sampling
            .deltas
            .iter()
            .all(|d| (0.05 * m..=0.5 * m).contains(d)),
        || "deltas outside [0.05, 0.5] M".into(),
    )?;
    ensure(
        cfg.fit.heldout_seeds.len() == 5 && (cfg.fit.margin - 0.1).abs() < 1e-15,
        || "held-out setup".into(),
    )?;
    let out = fit_exponent(&cfg).map_err(|e| e.to_string())?;
    let f = &out.diagnostics;
    ensure(out.k_hat.is_finite() && out.k_hat > 0.0, || {
        format!("K_hat {}", out.k_hat)
    })?;
    ensure(f.r_squared >= 0.9, || format!("R^2 {}", f.r_squared))?;
    let held: Vec<_> = out
        .report
        .records
        .iter()
        .filter(|r| r.case.starts_with("heldout"))
        .collect();
    ensure(held.len() == 40, || {
        format!("{} held-out cases", held.len())
    })?;
    ensure(held.iter().all(|r| r.verdict == Verdict::Pass), || {
        "held-out failure".into()
    })?;
    let t = within(60.0, start)?;
    Ok((
        format!(
            "K_hat = {:.6}, R^2 = {:.6}, 40/40 held-out pass ({t:.2}s)",
            out.k_hat, f.r_squared
        ),
        out.k_hat,
    ))
}

fn c7_projector(k_hat: f64) -> Outcome {
    let start = Instant::now();
    let cfg = config("thm2_projector.toml");
    ensure(cfg.grid.points == 64 && cfg.dimension == 1, || {
        "not a 64-point 1D grid".into()
    })?;
    let spec = cfg.projector.clone().ok_or("no projector table")?;
    let h = cfg.hamiltonian().map_err(|e| e.to_string())?;
    let grid = *h.grid();
    let energies = eigenpairs_with(&h, 8, 1e-10, &cfg.solver_options())
        .map_err(|e| e.to_string())?
        .energies;
    let v = h.potential().sup_norm();
    let mut worst = 0.0_f64;
    let mut compared = 0;
    let mut max_rank = 0;
    for &delta in &cfg.sampling.deltas {
        let mask = rasterize_mask(&cfg.sequence(delta).unwrap(), &grid).unwrap();
        let p = BoundParams::new(delta, cfg.sampling.m, v, k_hat).with_e0(spec.e0);
        let gamma = thm2_gamma(&p).map_err(|e| e.to_string())?;
        for ispec in &spec.intervals {
            let interval =
                interval_for(ispec, &energies, gamma, spec.e0).map_err(|e| e.to_string())?;
            ensure(interval.width() <= 2.0 * gamma * (1.0 + 1e-12), || {
                "interval too wide".into()
            })?;
            let basis = projector_basis(&h, interval, 1e-10).map_err(|e| e.to_string())?;
            let (rank, dense) = dense_projector_min_eigenvalue(&h, &interval, &mask);
            ensure(rank == basis.rank(), || {
                format!("rank {rank} vs {}", basis.rank())
            })?;
            if rank == 0 {
                continue;
            }
            let c = basis.compressed(&mask).map_err(|e| e.to_string())?;
            let mut mine: Vec<f64> = nalgebra::SymmetricEigen::new(c)
                .eigenvalues
                .iter()
                .copied()
                .collect();
            mine.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in mine.iter().zip(&dense) {
                worst = worst.max((a - b).abs() / b.abs().max(1e-300));
            }
            compared += 1;
            max_rank = max_rank.max(rank);
        }
    }
    ensure(worst <= 1e-8, || format!("dense oracle mismatch {worst:e}"))?;
    ensure(max_rank >= 2, || "no rank-2 instance".into())?;

    let report = verify_projector(&cfg).map_err(|e| e.to_string())?;
    let k = report.k.as_ref().ok_or("no K")?;
    ensure((k.value - k_hat).abs() <= 1e-12 * k_hat, || {
        format!("K {} vs K_hat {k_hat}", k.value)
    })?;
    let compressed: Vec<_> = report
        .records
        .iter()
        .filter(|r| r.case.ends_with("compressed"))
        .collect();
    ensure(!compressed.is_empty(), || "no compressed records".into())?;
    ensure(
        compressed.iter().all(|r| r.verdict == Verdict::Pass),
        || "mu_min below the floor".into(),
    )?;
    ensure(!report.has_hard_failure(), || {
        "hard failure in report".into()
    })?;
    let t = within(10.0, start)?;
    Ok(format!(
        "{compared} intervals (max rank {max_rank}), oracle rel diff {worst:.1e}, {} floor checks pass ({t:.2}s)",
        compressed.len()
    ))
}

fn c8_chain(reports: &[(String, Report)]) -> Outcome {
    let mut n = 0;
    for (name, rep) in reports {
        for c in &rep.chain {
            ensure(c.tol <= 1e-8, || {
                format!("{name}: chain tolerance {}", c.tol)
            })?;
            ensure(
                c.verdict == Verdict::Pass
                    && c.residual_ok
                    && c.steps_ok.iter().all(|&s| s)
                    && c.algebra_ok,
                || format!("{name} {}: {c:?}", c.case),
            )?;
            n += 1;
        }
    }
    ensure(n > 0, || "no chain records".into())?;
    Ok(format!("{n} chains verified term by term"))
}

fn c9_weyl(reports: &[(String, Report)], k_hat: f64) -> Outcome {
    let rep = &reports
        .iter()
        .find(|(n, _)| n == "thm4_weyl")
        .ok_or("missing run")?
        .1;
    ensure(
        (rep.k.as_ref().unwrap().value - k_hat).abs() <= 1e-12 * k_hat,
        || "K mismatch".into(),
    )?;
    let mut seen = std::collections::BTreeSet::new();
    let mut in_scope = 0;
    for r in &rep.records {
        let n = r.n.ok_or("record without n")?;
        ensure(r.verdict != Verdict::Error, || format!("n={n}: {}", r.note))?;
        let res = r.residual.ok_or("no residual")?;
        ensure(res < 1.0 / n as f64, || format!("n={n}: residual {res}"))?;
        seen.insert(n);
        if r.verdict != Verdict::OutOfScope {
            ensure(r.verdict == Verdict::Pass, || {
                format!("n={n} delta={}: {:?}", r.delta, r.verdict)
            })?;
            in_scope += 1;
        }
    }
    ensure(
        seen.len() == 49 && seen.first() == Some(&2) && seen.last() == Some(&50),
        || "n range".into(),
    )?;
    ensure(in_scope > 0, || "nothing past threshold".into())?;
    Ok(format!(
        "residual < 1/n for n = 2..50, {in_scope} past-threshold cases pass ({:.2}s)",
        rep.wall_time_s
    ))
}

fn strip_wall_time(json: &str) -> String {
    json.lines()
        .filter(|l| !l.contains("\"wall_time_s\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c10_determinism(reports: &[(String, Report)]) -> Outcome {
    let again = stock_reports()?;
    for ((name, a), (_, b)) in reports.iter().zip(&again) {
        let ja = strip_wall_time(&serde_json::to_string_pretty(a).unwrap());
        let jb = strip_wall_time(&serde_json::to_string_pretty(b).unwrap());
        ensure(ja == jb, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} stock configs byte-identical", reports.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut line = |n: u32, title: &str, o: Outcome| match o {
        Ok(msg) => println!("criterion {n:>2} PASS  {title}: {msg}"),
        Err(msg) => {
            failed += 1;
            println!("criterion {n:>2} FAIL  {title}: {msg}");
        }
    };
    line(1, "geometry", c1_geometry());
    line(2, "correction remark", c2_remark());
    line(3, "dominant mass", c3_dominant_mass());
    let start = Instant::now();
    let reports = stock_reports();
    let stock_time = start.elapsed().as_secs_f64();
    match &reports {
        Ok(r) => line(
            4,
            "ratio range",
            c4_ratio_range(r).map(|m| format!("{m} ({stock_time:.2}s)")),
        ),
        Err(e) => line(4, "ratio range", Err(e.clone())),
    }
    line(5, "solver", c5_solver());
    let fit = c6_fit();
    let k_hat = fit.as_ref().map(|(_, k)| *k).ok();
    line(6, "exponent fit", fit.map(|(m, _)| m));
    match k_hat {
        Some(k) => line(7, "projector", c7_projector(k)),
        None => line(7, "projector", Err("no K_hat from criterion 6".into())),
    }
    match &reports {
        Ok(r) => {
            line(8, "chain", c8_chain(r));
            match k_hat {
                Some(k) => line(9, "weyl", c9_weyl(r, k)),
                None => line(9, "weyl", Err("no K_hat from criterion 6".into())),
            }
            line(10, "determinism", c10_determinism(r));
        }
        Err(e) => {
            for (n, t) in [(8, "chain"), (9, "weyl"), (10, "determinism")] {
                line(n, t, Err(e.clone()));
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria fail");
        ExitCode::FAILURE
    }
}
