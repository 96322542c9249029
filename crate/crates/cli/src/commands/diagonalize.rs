//! `diagonalize`: run the rotation scheme across the phase grid and write
//! the eigenvalue table, the eigenvector amplitudes, and the per-step
//! diagnostics.

use quasidiag_core::oracle::spectrum::MONOTONE_TOL;
use quasidiag_core::scheme::state::StopReason;
use quasidiag_core::{run_scheme, RunOutcome};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{Manifest, MonitorRecord};
use crate::output::OutputSet;
use crate::pool::map_ordered;

pub const SCHEMA_XE: &str = "eigenvalue-table.v1";
pub const SCHEMA_PSI: &str = "eigenvector.v1";
pub const SCHEMA_STEPS: &str = "step-diagnostics.v1";

#[derive(Serialize)]
struct StepJson {
    s: u32,
    active_centers: usize,
    rotations: usize,
    clipped: bool,
    u_dist: f64,
    conv_bound: f64,
    conv_ok: bool,
    max_tau: f64,
    f0: f64,
    f0_drift: f64,
    row0_max: f64,
}

#[derive(Serialize)]
struct PhaseJson {
    index: usize,
    x: f64,
    e: f64,
    residual: f64,
    stop: String,
    psi_origin_dev: f64,
    origin_dev_ok: bool,
    decay_ok: bool,
    steps: Vec<StepJson>,
}

fn phase_json(index: usize, x: f64, run: &RunOutcome) -> PhaseJson {
    PhaseJson {
        index,
        x,
        e: run.e,
        residual: run.residual,
        stop: match run.stop {
            StopReason::ResidualMet { at_step } => format!("residual_met(step {at_step})"),
            StopReason::SMaxReached => "s_max_reached".to_string(),
        },
        psi_origin_dev: run.psi_origin_dev,
        origin_dev_ok: run.origin_dev_ok,
        decay_ok: run.decay_ok,
        steps: run
            .state
            .steps()
            .iter()
            .map(|d| StepJson {
                s: d.s,
                active_centers: d.active_centers,
                rotations: d.rotations,
                clipped: d.clipped,
                u_dist: d.u_dist,
                conv_bound: d.conv_bound,
                conv_ok: d.conv_ok,
                max_tau: d.max_tau,
                f0: d.f0,
                f0_drift: d.f0_drift,
                row0_max: d.row0_max,
            })
            .collect(),
    }
}

/// Compute, write outputs, and append the command's monitors. Failure here
/// is a computation error; the caller still writes the manifest.
fn compute(
    cfg: &RunConfig,
    outputs: &mut OutputSet,
    monitors: &mut Vec<MonitorRecord>,
) -> Result<(), CliError> {
    let grid = cfg.phase_grid_points();
    let runs: Vec<quasidiag_core::Result<RunOutcome>> = map_ordered(cfg.workers, &grid, |&x| {
        run_scheme(&cfg.params, &cfg.potential, &cfg.freq, x, &cfg.ambient)
    })?;
    let mut done = Vec::with_capacity(runs.len());
    for (k, run) in runs.into_iter().enumerate() {
        done.push(run.map_err(CliError::from_core).map_err(|e| {
            log::error!("phase {} (x = {}): {e}", k, grid[k]);
            e
        })?);
    }

    let rows: Vec<[f64; 2]> = grid.iter().zip(&done).map(|(&x, r)| [x, r.e]).collect();
    outputs.write_csv("eigenvalues.csv", SCHEMA_XE, &["x", "E"], &rows)?;

    // One amplitude file per phase; row k of eigenvalues.csv pairs with
    // psi_{k:04}.csv.
    let d = cfg.freq.dim();
    let mut psi_header: Vec<String> = (1..=d).map(|i| format!("n_{i}")).collect();
    psi_header.push("amplitude".to_string());
    let psi_header: Vec<&str> = psi_header.iter().map(String::as_str).collect();
    for (k, run) in done.iter().enumerate() {
        let psi_rows: Vec<Vec<f64>> = cfg
            .ambient
            .sites()
            .iter()
            .zip(&run.psi)
            .map(|(site, &a)| {
                let mut row: Vec<f64> = site.iter().map(|&c| c as f64).collect();
                row.push(a);
                row
            })
            .collect();
        outputs.write_csv(&format!("psi_{k:04}.csv"), SCHEMA_PSI, &psi_header, &psi_rows)?;
    }

    let phases: Vec<PhaseJson> = done
        .iter()
        .enumerate()
        .map(|(k, run)| phase_json(k, grid[k], run))
        .collect();
    outputs.write_json("steps.json", SCHEMA_STEPS, phases.len(), &phases)?;

    // Monitors. A successful run already certifies its final residual (the
    // scheme refuses to return otherwise), so that monitor reports the
    // worst margin rather than re-deciding anything.
    let worst_residual = done.iter().map(|r| r.residual).fold(0.0, f64::max);
    monitors.push(MonitorRecord::new(
        "final_residual",
        worst_residual <= cfg.params.residual_target,
        Some(cfg.params.residual_target - worst_residual),
        format!(
            "max ||H psi - E psi|| = {worst_residual:.3e} over {} phases (target {:.1e})",
            done.len(),
            cfg.params.residual_target
        ),
    ));

    let worst_dev = done.iter().map(|r| r.psi_origin_dev).fold(0.0, f64::max);
    monitors.push(MonitorRecord::new(
        "origin_deviation",
        done.iter().all(|r| r.origin_dev_ok),
        None,
        format!("max |psi(0) - 1| = {worst_dev:.3e}"),
    ));

    monitors.push(MonitorRecord::new(
        "eigenvector_decay",
        done.iter().all(|r| r.decay_ok),
        None,
        "site-wise decay envelope |psi(n)| <= eps^{(1 - delta)|n|}".to_string(),
    ));

    let unconverged = done
        .iter()
        .filter(|r| !matches!(r.stop, StopReason::ResidualMet { .. }))
        .count();
    let last_step = done
        .iter()
        .map(|r| match r.stop {
            StopReason::ResidualMet { at_step } => at_step,
            StopReason::SMaxReached => cfg.params.s_max,
        })
        .max()
        .unwrap_or(0);
    monitors.push(MonitorRecord::new(
        "converged",
        unconverged == 0,
        None,
        format!("{unconverged} phases hit the step cap; deepest stop at step {last_step}"),
    ));

    let violations = rows
        .windows(2)
        .filter(|w| w[1][1] < w[0][1] - MONOTONE_TOL)
        .count();
    monitors.push(MonitorRecord::new(
        "eigenvalue_monotone",
        violations == 0,
        None,
        format!("{violations} adjacent decreases beyond {MONOTONE_TOL:.1e}"),
    ));

    if cfg.potential.alpha() == 1.0 {
        let mut min_slope = f64::INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                min_slope = min_slope.min((rows[j][1] - rows[i][1]) / (rows[j][0] - rows[i][0]));
            }
        }
        monitors.push(MonitorRecord::new(
            "lipschitz_slope",
            min_slope >= 0.95,
            Some(min_slope - 0.95),
            format!("min pair slope {min_slope:.6} (bound 0.95 for a unit-exponent potential)"),
        ));
    } else {
        monitors.push(MonitorRecord::new(
            "lipschitz_slope",
            true,
            None,
            format!(
                "not applicable: potential exponent {} > 1",
                cfg.potential.alpha()
            ),
        ));
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let mut outputs = OutputSet::create(&cfg.out_dir)?;
    let mut manifest = Manifest::new("diagonalize", &cfg.config_hash, crate::manifest::now());
    manifest.declare_schema(SCHEMA_XE, &["x", "E"]);
    let d = cfg.freq.dim();
    let mut psi_cols: Vec<String> = (1..=d).map(|i| format!("n_{i}")).collect();
    psi_cols.push("amplitude".into());
    let psi_cols: Vec<&str> = psi_cols.iter().map(String::as_str).collect();
    manifest.declare_schema(SCHEMA_PSI, &psi_cols);
    manifest.notes = cfg.notes.clone();

    let mut monitors = Vec::new();
    let result = compute(cfg, &mut outputs, &mut monitors);
    if let Err(e) = &result {
        monitors.push(MonitorRecord::new("run", false, None, e.to_string()));
    }
    manifest.monitors = monitors;
    let failing = crate::manifest::failing_names(&manifest.monitors);
    let all_pass = manifest.finish(&outputs)?;
    result?;
    if all_pass {
        println!(
            "diagonalize: {} phases, all monitors pass -> {}",
            cfg.phase_grid,
            cfg.out_dir.display()
        );
        Ok(())
    } else {
        eprintln!("diagonalize: failing monitors: {}", failing.join(", "));
        Err(CliError::Monitors { failing })
    }
}
