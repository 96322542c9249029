//! `spectrum`: pooled finite-box spectra over the box ladder, gap detection
//! with cross-box stability, the counting-function tables, and the rank-one
//! coupling sweep at the origin site. One-dimensional bounded potentials
//! only (library preconditions, propagated).

use quasidiag_core::oracle::spectrum::default_t_grid;
use quasidiag_core::oracle::{gap_detect, ids, rank_one_sweep};
use quasidiag_core::run_scheme;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{failing_names, Manifest, MonitorRecord};
use crate::output::OutputSet;
use crate::pool::map_ordered;

pub const SCHEMA_E: &str = "spectrum.v1";
pub const SCHEMA_EN: &str = "counting-function.v1";
pub const SCHEMA_TE: &str = "rank-one-trace.v1";
pub const SCHEMA_GAPS: &str = "gap-report.v1";

#[derive(Serialize)]
struct GapJson {
    left: f64,
    right: f64,
    width: f64,
}

#[derive(Serialize)]
struct BoxJson {
    box_len: usize,
    phase_count: usize,
    min_phase_spacing: f64,
    gaps: Vec<GapJson>,
}

#[derive(Serialize)]
struct WitnessJson {
    gap: GapJson,
    t_inside: Vec<f64>,
    coverage: f64,
    traversed: bool,
}

#[derive(Serialize)]
struct GapReport {
    boxes: Vec<BoxJson>,
    stable_gaps: Vec<GapJson>,
    endpoint_drift: f64,
    sweep_box_len: usize,
    sweep_monotone: bool,
    witnesses: Vec<WitnessJson>,
}

fn gap_json(g: &quasidiag_core::oracle::Gap) -> GapJson {
    GapJson {
        left: g.left,
        right: g.right,
        width: g.width(),
    }
}

fn compute(
    cfg: &RunConfig,
    outputs: &mut OutputSet,
    monitors: &mut Vec<MonitorRecord>,
) -> Result<(), CliError> {
    let eps = cfg.params.eps;

    // Phase-to-eigenvalue table via the rotation scheme; its values feed the
    // counting-function grid so the identity N(E(x)) = x is checkable.
    let grid = cfg.phase_grid_points();
    let e_of_x: Vec<f64> = map_ordered(cfg.workers, &grid, |&x| {
        run_scheme(&cfg.params, &cfg.potential, &cfg.freq, x, &cfg.ambient).map(|r| r.e)
    })?
    .into_iter()
    .collect::<quasidiag_core::Result<_>>()
    .map_err(CliError::from_core)?;

    let tables = ids(&cfg.potential, eps, &cfg.freq, &cfg.box_ladder, &e_of_x)
        .map_err(CliError::from_core)?;
    for table in &tables {
        let rows: Vec<[f64; 2]> = table.rows.iter().map(|&(e, n)| [e, n]).collect();
        outputs.write_csv(
            &format!("ids_{}.csv", table.box_len),
            SCHEMA_EN,
            &["E", "N"],
            &rows,
        )?;
    }

    let report = gap_detect(
        &cfg.potential,
        eps,
        &cfg.freq,
        &cfg.box_ladder,
        cfg.gap_min_width,
    )
    .map_err(CliError::from_core)?;
    for boxed in &report.boxes {
        let rows: Vec<[f64; 1]> = boxed.eigenvalues.iter().map(|&e| [e]).collect();
        outputs.write_csv(
            &format!("spectrum_{}.csv", boxed.box_len),
            SCHEMA_E,
            &["E"],
            &rows,
        )?;
    }

    let sweep_len = cfg.box_ladder[0];
    let t_grid = default_t_grid(&cfg.potential, cfg.t_count).map_err(CliError::from_core)?;
    let trace = rank_one_sweep(&cfg.potential, eps, &cfg.freq, sweep_len, &t_grid)
        .map_err(CliError::from_core)?;
    let mut te_rows: Vec<[f64; 2]> = Vec::with_capacity(trace.t_grid.len() * trace.box_len);
    for (t, spectrum) in trace.t_grid.iter().zip(&trace.spectra) {
        for &e in spectrum {
            te_rows.push([*t, e]);
        }
    }
    outputs.write_csv("trace.csv", SCHEMA_TE, &["t", "E"], &te_rows)?;
    let deflated_rows: Vec<[f64; 1]> = trace.deflated.iter().map(|&e| [e]).collect();
    outputs.write_csv("trace_removed_site.csv", SCHEMA_E, &["E"], &deflated_rows)?;

    let gaps = GapReport {
        boxes: report
            .boxes
            .iter()
            .map(|b| BoxJson {
                box_len: b.box_len,
                phase_count: b.phase_count,
                min_phase_spacing: b.min_phase_spacing,
                gaps: b.gaps.iter().map(gap_json).collect(),
            })
            .collect(),
        stable_gaps: report.stable_gaps.iter().map(gap_json).collect(),
        endpoint_drift: report.endpoint_drift,
        sweep_box_len: trace.box_len,
        sweep_monotone: trace.monotone_ok,
        witnesses: trace
            .witnesses
            .iter()
            .map(|w| WitnessJson {
                gap: gap_json(&w.gap),
                t_inside: w.t_inside.clone(),
                coverage: w.coverage,
                traversed: w.traversed,
            })
            .collect(),
    };
    outputs.write_json("gaps.json", SCHEMA_GAPS, gaps.stable_gaps.len(), &gaps)?;

    // Monitors.
    let mut worst_margin = f64::INFINITY;
    let mut sups = Vec::new();
    for table in &tables {
        let sup = table
            .rows
            .iter()
            .zip(&grid)
            .map(|(&(_, n), &x)| (n - x).abs())
            .fold(0.0_f64, f64::max);
        let bound = 5.0 / table.box_len as f64;
        worst_margin = worst_margin.min(bound - sup);
        sups.push((table.box_len, sup, bound));
    }
    monitors.push(MonitorRecord::new(
        "counting_identity",
        worst_margin >= 0.0,
        Some(worst_margin),
        sups.iter()
            .map(|(l, s, b)| format!("box {l}: sup |N(E(x)) - x| = {s:.3e} (bound {b:.2e})"))
            .collect::<Vec<_>>()
            .join("; "),
    ));
    monitors.push(MonitorRecord::new(
        "counting_error_shrinks",
        sups.len() < 2 || sups.windows(2).all(|w| w[1].1 < w[0].1),
        None,
        format!(
            "sup errors along the ladder: {}",
            sups.iter()
                .map(|(_, s, _)| format!("{s:.3e}"))
                .collect::<Vec<_>>()
                .join(" -> ")
        ),
    ));
    monitors.push(MonitorRecord::new(
        "sweep_monotone",
        trace.monotone_ok,
        None,
        format!(
            "{} couplings on a {}-site box, trajectories non-decreasing and interlaced",
            trace.t_grid.len(),
            trace.box_len
        ),
    ));
    monitors.push(MonitorRecord::new(
        "gap_witness",
        trace.reference_gaps.is_empty() || trace.witnessed(),
        None,
        if trace.reference_gaps.is_empty() {
            format!(
                "no reference gaps of width >= {:.1e} on the sweep box",
                cfg.gap_min_width
            )
        } else {
            format!(
                "{} of {} reference gaps received an interior eigenvalue",
                trace.witnesses.iter().filter(|w| !w.t_inside.is_empty()).count(),
                trace.reference_gaps.len()
            )
        },
    ));
    monitors.push(MonitorRecord::new(
        "gap_endpoint_drift",
        report.stable_gaps.is_empty() || report.endpoint_drift <= cfg.gap_drift_tol,
        Some(cfg.gap_drift_tol - report.endpoint_drift),
        format!(
            "{} stable gaps across the ladder, worst endpoint drift {:.3e} (tolerance {:.1e})",
            report.stable_gaps.len(),
            report.endpoint_drift,
            cfg.gap_drift_tol
        ),
    ));
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let mut outputs = OutputSet::create(&cfg.out_dir)?;
    let mut manifest = Manifest::new("spectrum", &cfg.config_hash, crate::manifest::now());
    manifest.declare_schema(SCHEMA_E, &["E"]);
    manifest.declare_schema(SCHEMA_EN, &["E", "N"]);
    manifest.declare_schema(SCHEMA_TE, &["t", "E"]);
    manifest.notes = cfg.notes.clone();

    let mut monitors = Vec::new();
    let result = compute(cfg, &mut outputs, &mut monitors);
    if let Err(e) = &result {
        monitors.push(MonitorRecord::new("run", false, None, e.to_string()));
    }
    manifest.monitors = monitors;
    let failing = failing_names(&manifest.monitors);
    let all_pass = manifest.finish(&outputs)?;
    result?;
    if all_pass {
        println!(
            "spectrum: boxes {:?}, all monitors pass -> {}",
            cfg.box_ladder,
            cfg.out_dir.display()
        );
        Ok(())
    } else {
        eprintln!("spectrum: failing monitors: {}", failing.join(", "));
        Err(CliError::Monitors { failing })
    }
}
