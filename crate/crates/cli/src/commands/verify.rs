//! `verify`: run the full invariant suite against the configured instance
//! and write a JSON report of margins. Exit code 0 exactly when every check
//! passes; a dominance violation or region overlap is a regime failure
//! (exit 3), anything else that fails is a monitor failure (exit 4).

use quasidiag_core::circle::frac;
use quasidiag_core::model::potential::TableInterp;
use quasidiag_core::oracle::{dense_eig, label_branches, multiset_distance};
use quasidiag_core::regions::{diameter_l1, extended_regions, interval_ladder, level};
use quasidiag_core::scheme::magnitude::absorption_check;
use quasidiag_core::scheme::monitors::{
    check_approx_monotone, check_diag_drift, check_orders, check_support,
};
use quasidiag_core::{
    Error as CoreError, LatticeBox, OrderLedger, PotentialSpec, SchemeState, Site,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{is_regime, CliError};
use crate::manifest::{failing_names, Manifest, MonitorRecord};
use crate::output::OutputSet;

pub const SCHEMA_VERIFY: &str = "verify-report.v1";

#[derive(Serialize)]
struct Report<'a> {
    checks: &'a [MonitorRecord],
    all_pass: bool,
}

/// Record a check from a library result: `Ok` maps through `grade`, any
/// error is a failed check carrying the error text. Returns the error when
/// it was a regime failure so the exit code can reflect it.
fn record<T>(
    checks: &mut Vec<MonitorRecord>,
    name: &str,
    result: quasidiag_core::Result<T>,
    grade: impl FnOnce(T) -> (bool, Option<f64>, String),
) -> Option<CoreError> {
    match result {
        Ok(value) => {
            let (pass, margin, detail) = grade(value);
            checks.push(MonitorRecord::new(name, pass, margin, detail));
            None
        }
        Err(e) => {
            let regime = is_regime(&e);
            checks.push(MonitorRecord::new(name, false, None, e.to_string()));
            regime.then_some(e)
        }
    }
}

fn first(slot: &mut Option<CoreError>, found: Option<CoreError>) {
    if slot.is_none() {
        *slot = found;
    }
}

/// Drive a scheme state at the ladder center until the step cap or row-zero
/// elimination, whichever comes first.
fn driven_state(cfg: &RunConfig) -> quasidiag_core::Result<SchemeState> {
    let mut state = SchemeState::new(
        &cfg.params,
        &cfg.potential,
        &cfg.freq,
        cfg.x0,
        cfg.x0,
        &cfg.ambient,
    )?;
    while state.s() < cfg.params.s_max {
        state.step()?;
        let row0 = state.steps().last().map_or(f64::INFINITY, |d| d.row0_max);
        if row0 <= cfg.params.residual_target {
            break;
        }
    }
    Ok(state)
}

/// Region disjointness and the diameter bound, scanned over the interval
/// ladder steps at phases that make each scanned site resonant in turn.
fn check_regions(cfg: &RunConfig, checks: &mut Vec<MonitorRecord>) -> Option<CoreError> {
    let fail = |checks: &mut Vec<MonitorRecord>, detail: String| {
        checks.push(MonitorRecord::new("region_disjointness", false, None, detail));
    };
    let ladder = match interval_ladder(cfg.params.beta, cfg.x0, cfg.scan_s_max) {
        Ok(l) => l,
        Err(e) => {
            fail(checks, e.to_string());
            return is_regime(&e).then_some(e);
        }
    };
    let scan_box = if cfg.freq.dim() == 1 {
        LatticeBox::interval(-cfg.scan_n_max, cfg.scan_n_max)
    } else {
        LatticeBox::rect(&vec![(-cfg.scan_n_max, cfg.scan_n_max); cfg.freq.dim()])
    };
    let scan_box = match scan_box {
        Ok(b) => b,
        Err(e) => {
            fail(checks, e.to_string());
            return None;
        }
    };
    let mut phases = vec![cfg.x0];
    if cfg.freq.dim() == 1 {
        for n in -cfg.scan_n_max..=cfg.scan_n_max {
            phases.push(frac(cfg.x0 - cfg.freq.dot(&[n])));
        }
    } else {
        for k in 0..16 {
            phases.push((f64::from(k) + 0.5) / 16.0);
        }
    }

    let mut families = 0usize;
    let mut worst_diam_ratio = 0.0_f64;
    for s in 1..=cfg.scan_s_max {
        for &x in &phases {
            match extended_regions(s, x, &ladder, &cfg.freq, &scan_box) {
                Ok(family) => {
                    families += 1;
                    for (_, sites) in family.iter() {
                        let diam = diameter_l1(sites);
                        worst_diam_ratio =
                            worst_diam_ratio.max(f64::from(diam) / f64::from(3 * s));
                    }
                }
                Err(e) => {
                    let regime = is_regime(&e);
                    fail(checks, format!("step {s}, phase {x}: {e}"));
                    return regime.then_some(e);
                }
            }
        }
    }
    checks.push(MonitorRecord::new(
        "region_disjointness",
        true,
        None,
        format!("{families} region families built without overlap"),
    ));
    checks.push(MonitorRecord::new(
        "region_diameters",
        worst_diam_ratio <= 1.0,
        Some(1.0 - worst_diam_ratio),
        format!("max diameter / (3 s) = {worst_diam_ratio:.3} over {families} families"),
    ));
    None
}

/// Absorption inequality over every admissible `(k1, k2)` pair along each
/// coordinate axis.
fn check_absorption(cfg: &RunConfig, checks: &mut Vec<MonitorRecord>) {
    let mut worst = f64::INFINITY;
    let mut count = 0usize;
    let mut failure: Option<String> = None;
    'outer: for axis in 0..cfg.freq.dim() {
        for k2 in 1..=cfg.scan_k2_max {
            for sign in [-1i64, 1] {
                let mut n: Site = vec![0; cfg.freq.dim()];
                n[axis] = sign * i64::from(k2);
                let lv = match level(&n, &cfg.freq, cfg.params.beta) {
                    Ok(l) => l,
                    Err(e) => {
                        failure = Some(e.to_string());
                        break 'outer;
                    }
                };
                for k1 in lv.max(1)..=k2 {
                    match absorption_check(
                        k1,
                        k2,
                        &n,
                        &cfg.freq,
                        cfg.params.m,
                        cfg.params.beta,
                        cfg.params.gamma(),
                        cfg.params.alpha,
                    ) {
                        Ok(chk) => {
                            worst = worst.min(chk.margin_ln());
                            count += 1;
                        }
                        Err(e) => {
                            failure = Some(e.to_string());
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    match failure {
        Some(msg) => checks.push(MonitorRecord::new("absorption", false, None, msg)),
        None => checks.push(MonitorRecord::new(
            "absorption",
            worst > 0.0,
            Some(worst),
            format!("{count} admissible index pairs, min log margin {worst:.3}"),
        )),
    }
}

/// Branch labeling on randomized instances: random monotone tables on small
/// boxes, hopping well below the level spacing, the site-ordered pairing
/// checked exactly at every probe phase.
fn check_branches(cfg: &RunConfig, checks: &mut Vec<MonitorRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phases: Vec<f64> = (0..8).map(|j| (f64::from(j) + 0.5) / 8.0).collect();
    let mut worst_spacing = f64::INFINITY;
    let mut instances = 0usize;
    let mut failures: Vec<String> = Vec::new();
    while instances < cfg.branch_instances && failures.len() < 4 {
        instances += 1;
        let len = rng.gen_range(4..=10usize);
        let breaks: usize = rng.gen_range(3..=6);
        let mut xs = vec![0.0];
        for _ in 1..breaks {
            xs.push(rng.gen_range(0.01..0.99));
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut vs = Vec::with_capacity(xs.len());
        let mut acc = rng.gen_range(-1.0..1.0);
        for _ in 0..xs.len() {
            acc += rng.gen_range(0.05..0.3);
            vs.push(acc);
        }
        let table = match PotentialSpec::table(xs, vs, TableInterp::Linear, 1.0) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("instance {instances}: table: {e}"));
                continue;
            }
        };
        let boxed = match LatticeBox::interval_sites(len) {
            Ok(b) => b,
            Err(e) => {
                failures.push(format!("instance {instances}: box: {e}"));
                continue;
            }
        };
        // Hopping far below the smallest unperturbed level spacing seen on
        // the probe phases.
        let mut min_gap = f64::INFINITY;
        for &x in &phases {
            let mut diag: Vec<f64> = boxed
                .sites()
                .iter()
                .map(|n| table.sample(cfg.freq.phase(x, n)))
                .collect();
            diag.sort_by(f64::total_cmp);
            for w in diag.windows(2) {
                min_gap = min_gap.min(w[1] - w[0]);
            }
        }
        if min_gap < 1e-6 {
            continue; // degenerate draw; try another table
        }
        let eps = 0.0125 * min_gap;
        for &x in &phases {
            let op = match quasidiag_core::SymOperator::assemble(&table, eps, &cfg.freq, x, &boxed)
            {
                Ok(op) => op,
                Err(e) => {
                    failures.push(format!("instance {instances}: assemble: {e}"));
                    break;
                }
            };
            let dec = match dense_eig(&op, 1e-11) {
                Ok(d) => d,
                Err(e) => {
                    failures.push(format!("instance {instances}: eig: {e}"));
                    break;
                }
            };
            match label_branches(&op, &dec) {
                Ok(tab) => {
                    worst_spacing = worst_spacing.min(tab.min_eigen_spacing());
                    if !tab.is_unique() || !tab.check_ordering() {
                        failures.push(format!(
                            "instance {instances}, x = {x}: pairing not order-exact"
                        ));
                        break;
                    }
                }
                Err(e) => {
                    failures.push(format!("instance {instances}: labeling: {e}"));
                    break;
                }
            }
        }
    }
    checks.push(MonitorRecord::new(
        "branch_labels",
        failures.is_empty(),
        None,
        if failures.is_empty() {
            format!(
                "{instances} randomized instances (seed {}), min eigenvalue spacing {worst_spacing:.3e}",
                cfg.seed
            )
        } else {
            failures.join("; ")
        },
    ));
}

/// Multiset distance between the spectra of the conjugated and the original
/// operator after every step.
fn check_preservation(cfg: &RunConfig, checks: &mut Vec<MonitorRecord>) -> Option<CoreError> {
    let inner = || -> quasidiag_core::Result<(f64, f64, u32)> {
        let mut state = SchemeState::new(
            &cfg.params,
            &cfg.potential,
            &cfg.freq,
            cfg.x0,
            cfg.x0,
            &cfg.ambient,
        )?;
        let base = dense_eig(state.h0(), 1e-12)?;
        let scale = base
            .values
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
            .max(1.0);
        let cap = 1e-11 * scale;
        let mut worst = 0.0_f64;
        while state.s() < cfg.params.s_max {
            state.step()?;
            let now = dense_eig(state.h(), 1e-12)?;
            worst = worst.max(multiset_distance(&base.values, &now.values)?);
            let row0 = state.steps().last().map_or(f64::INFINITY, |d| d.row0_max);
            if row0 <= cfg.params.residual_target {
                break;
            }
        }
        Ok((worst, cap, state.s()))
    };
    record(checks, "spectrum_preservation", inner(), |(worst, cap, s)| {
        (
            worst <= cap,
            Some(cap - worst),
            format!("max multiset distance {worst:.3e} over {s} steps (cap {cap:.3e})"),
        )
    })
}

fn compute(
    cfg: &RunConfig,
    outputs: &mut OutputSet,
    checks: &mut Vec<MonitorRecord>,
) -> Result<Option<CoreError>, CliError> {
    let mut regime: Option<CoreError> = None;

    first(
        &mut regime,
        record(
            checks,
            "diophantine",
            cfg.freq.check_diophantine(cfg.scan_n_max),
            |rep| {
                (
                    rep.ok,
                    Some(rep.worst_log_margin),
                    format!(
                        "{} vectors scanned, worst log margin {:.3} at n = {:?}",
                        rep.checked, rep.worst_log_margin, rep.worst_n
                    ),
                )
            },
        ),
    );

    let holder = cfg
        .potential
        .check_holder_monotone(cfg.potential.alpha(), cfg.holder_grid);
    checks.push(MonitorRecord::new(
        "holder_monotone",
        holder.ok,
        Some(holder.worst_margin),
        format!(
            "{} violations on a {}-point grid, worst margin {:.3e} at ({:.4}, {:.4})",
            holder.violations,
            cfg.holder_grid,
            holder.worst_margin,
            holder.worst_pair.0,
            holder.worst_pair.1
        ),
    ));

    if cfg.freq.dim() == 1 {
        first(
            &mut regime,
            record(
                checks,
                "region_separation",
                quasidiag_core::regions::separation_scan(
                    &cfg.freq,
                    cfg.params.beta,
                    cfg.scan_n_max,
                    cfg.scan_s_max,
                ),
                |rep| {
                    (
                        rep.ok,
                        None,
                        format!(
                            "{} center pairs, {} near-collisions, {} violations",
                            rep.pairs_checked,
                            rep.near_collisions.len(),
                            rep.violations.len()
                        ),
                    )
                },
            ),
        );
    } else {
        checks.push(MonitorRecord::new(
            "region_separation",
            true,
            None,
            "not applicable: the center-separation scan is one-dimensional".into(),
        ));
    }

    first(&mut regime, check_regions(cfg, checks));
    check_absorption(cfg, checks);

    // Scheme-side monitors on a driven state at the ladder center.
    match driven_state(cfg) {
        Ok(state) => match OrderLedger::for_params(&cfg.params) {
            Ok(ledger) => {
                first(
                    &mut regime,
                    record(checks, "order_bounds", check_orders(&state, &ledger), |rep| {
                        (
                            rep.ok,
                            Some(rep.min_margin_ln),
                            format!(
                                "step {}: {} entries checked, min log margin {:.3}, \
                                 {} beyond the range envelope (max {:.3e})",
                                rep.s,
                                rep.checked,
                                rep.min_margin_ln,
                                rep.beyond_envelope,
                                rep.beyond_envelope_max
                            ),
                        )
                    }),
                );
                first(
                    &mut regime,
                    record(
                        checks,
                        "diagonal_drift",
                        check_diag_drift(&state, &ledger),
                        |rep| {
                            let worst =
                                rep.steps.iter().map(|d| d.drift).fold(0.0_f64, f64::max);
                            (
                                rep.ok,
                                None,
                                format!(
                                    "{} steps, max drift {worst:.3e}, geometric decay: {}",
                                    rep.steps.len(),
                                    rep.geometric
                                ),
                            )
                        },
                    ),
                );
                first(
                    &mut regime,
                    record(checks, "rotation_support", check_support(&state), |rep| {
                        (
                            rep.ok,
                            None,
                            format!(
                                "{} blocks; max |W - 1| outside blocks {:.3e}; {} stray entries",
                                rep.blocks, rep.w_outside_max, rep.h_outside
                            ),
                        )
                    }),
                );
            }
            Err(e) => {
                checks.push(MonitorRecord::new("order_bounds", false, None, e.to_string()));
            }
        },
        Err(e) => {
            let regime_class = is_regime(&e);
            checks.push(MonitorRecord::new(
                "order_bounds",
                false,
                None,
                format!("scheme run failed: {e}"),
            ));
            if regime_class {
                first(&mut regime, Some(e));
            }
        }
    }

    first(
        &mut regime,
        record(
            checks,
            "approx_monotone",
            check_approx_monotone(
                &cfg.params,
                &cfg.potential,
                &cfg.freq,
                cfg.x0,
                &cfg.ambient,
                cfg.params.s_max.min(3),
                8,
            ),
            |rep| {
                (
                    rep.ok,
                    Some(rep.min_pair_margin),
                    format!(
                        "{} pairs ({} violations), {} ratio points ({} violations), min ratio {:.3}",
                        rep.pairs,
                        rep.pair_violations.len(),
                        rep.ratio_points,
                        rep.ratio_violations,
                        rep.min_ratio
                    ),
                )
            },
        ),
    );

    first(&mut regime, check_preservation(cfg, checks));
    check_branches(cfg, checks);

    let all_pass = checks.iter().all(|c| c.pass);
    outputs.write_json(
        "verify.json",
        SCHEMA_VERIFY,
        checks.len(),
        &Report {
            checks: checks.as_slice(),
            all_pass,
        },
    )?;
    Ok(regime)
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let mut outputs = OutputSet::create(&cfg.out_dir)?;
    let mut manifest = Manifest::new("verify", &cfg.config_hash, crate::manifest::now());
    manifest.notes = cfg.notes.clone();

    let mut checks = Vec::new();
    let computed = compute(cfg, &mut outputs, &mut checks);
    if let Err(e) = &computed {
        checks.push(MonitorRecord::new("run", false, None, e.to_string()));
    }
    let n_checks = checks.len();
    manifest.monitors = checks;
    let failing = failing_names(&manifest.monitors);
    let all_pass = manifest.finish(&outputs)?;
    let regime = computed?;

    if all_pass {
        println!(
            "verify: {n_checks} checks, all pass -> {}",
            cfg.out_dir.display()
        );
        return Ok(());
    }
    eprintln!("verify: failing checks: {}", failing.join(", "));
    match regime {
        Some(e) => Err(CliError::Regime(e)),
        None => Err(CliError::Monitors { failing }),
    }
}
