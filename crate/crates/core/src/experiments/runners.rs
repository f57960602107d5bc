//! Scenario definitions and runners.
//!
//! Each runner walks a deterministic grid, records one row per grid cell and
//! mode, and summarizes the comparison the scenario is about. Failures at
//! individual points are recorded in the rows (with the message in the
//! `error` column) and the run continues; only setup problems abort.
//!
//! Derivative pipelines recorded by the curve scenarios:
//!
//! - `ad`: seeded-dual derivative of the K map at the point's converged
//!   phase compositions (the exact partial derivative).
//! - `fd(h)`: central difference of that same frozen-composition map, the
//!   like-for-like comparison at step `h`.
//! - `fd-flash(h)`: central difference across full re-converged flashes at
//!   the perturbed temperatures, the derivative a nested solver sees when it
//!   wraps the whole pipeline in a difference quotient.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::components::ComponentSet;
use crate::eos::{self, KDerivative, RootCount};
use crate::flash::{
    self, flash_ph, flash_pt, flash_pv, result_enthalpy, DerivativeMode, FlashError, SolverConfig,
};

use super::report::{mean, smoothness_metric, tukey_outliers, variance, Cell, RunReport};
use super::sampling::{sample_simplex, seeded_rng};

const BAR: f64 = 1e5;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n'], ";")
}

/// dK/dT and dK/dP curves over the scenario grids (one row per grid point
/// and mode), with per-curve smoothness metrics in the summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DkCurvesScenario {
    pub id: String,
    pub feed: Vec<f64>,
    /// Fixed pressure for the temperature curve, bar.
    pub pressure_bar: f64,
    pub t_min_k: f64,
    pub t_max_k: f64,
    pub t_points: usize,
    /// Fixed temperature for the pressure curve, K.
    pub p_curve_temperature_k: f64,
    pub p_min_bar: f64,
    pub p_max_bar: f64,
    pub p_points: usize,
    /// Central-difference steps for the temperature curve, K.
    pub fd_steps_k: Vec<f64>,
    /// Central-difference steps for the pressure curve, Pa (the perturbed
    /// variable's native unit).
    pub fd_steps_pa: Vec<f64>,
    /// Also record the `fd-flash` rows (central differences across full
    /// re-converged flashes). Costs two flashes per step and point.
    pub include_reconverged: bool,
}

impl Default for DkCurvesScenario {
    fn default() -> Self {
        DkCurvesScenario {
            id: "dk-curves".into(),
            feed: vec![0.25; 4],
            pressure_bar: 18.0,
            t_min_k: 200.0,
            t_max_k: 300.0,
            t_points: 101,
            p_curve_temperature_k: 250.0,
            p_min_bar: 10.0,
            p_max_bar: 19.0,
            p_points: 91,
            fd_steps_k: vec![1e-1, 1e-3, 1e-6, 1e-8],
            fd_steps_pa: vec![1e-1, 1e-3, 1e-6, 1e-8],
            include_reconverged: true,
        }
    }
}

fn curve_modes(steps: &[f64], include_reconverged: bool) -> Vec<String> {
    let mut modes: Vec<String> = vec!["ad".into()];
    for &h in steps {
        modes.push(format!("fd({h:e})"));
    }
    if include_reconverged {
        for &h in steps {
            modes.push(format!("fd-flash({h:e})"));
        }
    }
    modes
}

struct PointState {
    x: Vec<f64>,
    y: Vec<f64>,
    root_count_x: RootCount,
    root_count_y: RootCount,
}

/// Equilibrium phase compositions at a grid point. The K curves are
/// equilibrium properties, so points where the feed is single-phase (no
/// vapor-liquid split exists) are reported as failures rather than padded
/// with an extrapolation convention.
fn converged_point(
    set: &ComponentSet,
    feed: &[f64],
    t: f64,
    p: f64,
    config: &SolverConfig,
) -> Result<PointState, String> {
    let r = flash_pt(set, feed, t, p, DerivativeMode::Ad, config).map_err(|e| e.to_string())?;
    if !r.converged {
        return Err(format!("flash did not converge at T = {t} K"));
    }
    if let Some(side) = r.single_phase {
        return Err(format!(
            "single-phase ({side:?}) feed: no equilibrium K at T = {t} K, P = {p} Pa"
        ));
    }
    let norm = |v: &[f64]| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let x = norm(&r.x);
    let y = norm(&r.y);
    let root_count_x = eos::evaluate(set, &t, &p, &x).map_err(|e| e.to_string())?.root_count;
    let root_count_y = eos::evaluate(set, &t, &p, &y).map_err(|e| e.to_string())?.root_count;
    Ok(PointState {
        x,
        y,
        root_count_x,
        root_count_y,
    })
}

pub fn run_dk_curves(
    set: &ComponentSet,
    scenario: &DkCurvesScenario,
    config: &SolverConfig,
) -> Result<RunReport, FlashError> {
    let names = set.names();
    let mut columns = vec![
        "variable".to_string(),
        "grid_value".to_string(),
        "mode".to_string(),
        "root_count_x".to_string(),
        "root_count_y".to_string(),
        "error".to_string(),
    ];
    for n in &names {
        columns.push(format!("dk_{n}"));
    }
    let column_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let mut report = RunReport::new(&scenario.id, "curve", &column_refs);

    let p_fixed = scenario.pressure_bar * BAR;
    let t_fixed = scenario.p_curve_temperature_k;
    let t_grid = grid(scenario.t_min_k, scenario.t_max_k, scenario.t_points);
    let p_grid = grid(scenario.p_min_bar * BAR, scenario.p_max_bar * BAR, scenario.p_points);

    let run_axis = |variable: &str,
                        grid_values: &[f64],
                        steps: &[f64],
                        report: &mut RunReport|
     -> Result<(), FlashError> {
        for &g in grid_values {
            let (t, p) = if variable == "t_k" {
                (g, p_fixed)
            } else {
                (t_fixed, g)
            };
            let modes = curve_modes(steps, scenario.include_reconverged);

            let point = match converged_point(set, &scenario.feed, t, p, config) {
                Ok(s) => s,
                Err(e) => {
                    for mode in &modes {
                        let mut row: Vec<Cell> = vec![
                            variable.into(),
                            g.into(),
                            mode.as_str().into(),
                            Cell::Int(0),
                            Cell::Int(0),
                            sanitize(&e).into(),
                        ];
                        row.extend(names.iter().map(|_| Cell::Float(f64::NAN)));
                        report.push_row(row);
                    }
                    continue;
                }
            };
            let rc = |c: RootCount| Cell::Int(if c == RootCount::One { 1 } else { 3 });

            let wrt = if variable == "t_k" {
                KDerivative::Temperature
            } else {
                KDerivative::Pressure
            };
            for mode in &modes {
                let central = |hi: Vec<f64>, lo: Vec<f64>, h: f64| -> Vec<f64> {
                    hi.iter().zip(&lo).map(|(a, b)| (a - b) / (2.0 * h)).collect()
                };
                let dk: Result<Vec<f64>, String> = if mode == "ad" {
                    eos::k_derivatives(set, t, p, &point.x, &point.y, wrt)
                        .map_err(|e| e.to_string())
                } else if let Some(h) = mode
                    .strip_prefix("fd(")
                    .and_then(|s| s.strip_suffix(')'))
                    .and_then(|s| s.parse::<f64>().ok())
                {
                    // frozen compositions, same map as the ad row
                    let eval = |tv: f64, pv: f64| -> Result<Vec<f64>, String> {
                        eos::k_values(set, &tv, &pv, &point.x, &point.y)
                            .map_err(|e| e.to_string())
                    };
                    let res = if variable == "t_k" {
                        eval(t + h, p).and_then(|hi| Ok((hi, eval(t - h, p)?)))
                    } else {
                        eval(t, p + h).and_then(|hi| Ok((hi, eval(t, p - h)?)))
                    };
                    res.map(|(hi, lo)| central(hi, lo, h))
                } else if let Some(h) = mode
                    .strip_prefix("fd-flash(")
                    .and_then(|s| s.strip_suffix(')'))
                    .and_then(|s| s.parse::<f64>().ok())
                {
                    // re-converge the whole flash at the perturbed points
                    let eval = |tv: f64, pv: f64| -> Result<Vec<f64>, String> {
                        let r = flash_pt(set, &scenario.feed, tv, pv, DerivativeMode::Ad, config)
                            .map_err(|e| e.to_string())?;
                        if !r.converged || r.single_phase.is_some() {
                            return Err(format!(
                                "no two-phase flash at perturbed point T = {tv} K, P = {pv} Pa"
                            ));
                        }
                        Ok(r.k)
                    };
                    let res = if variable == "t_k" {
                        eval(t + h, p).and_then(|hi| Ok((hi, eval(t - h, p)?)))
                    } else {
                        eval(t, p + h).and_then(|hi| Ok((hi, eval(t, p - h)?)))
                    };
                    res.map(|(hi, lo)| central(hi, lo, h))
                } else {
                    unreachable!("unknown mode {mode}")
                };

                let mut row: Vec<Cell> = vec![
                    variable.into(),
                    g.into(),
                    mode.as_str().into(),
                    rc(point.root_count_x),
                    rc(point.root_count_y),
                ];
                match dk {
                    Ok(values) => {
                        row.push("".into());
                        row.extend(values.into_iter().map(Cell::Float));
                    }
                    Err(e) => {
                        row.push(sanitize(&e).into());
                        row.extend(names.iter().map(|_| Cell::Float(f64::NAN)));
                    }
                }
                report.push_row(row);
            }
        }
        Ok(())
    };

    run_axis("t_k", &t_grid, &scenario.fd_steps_k, &mut report)?;
    run_axis("p_pa", &p_grid, &scenario.fd_steps_pa, &mut report)?;

    // summary: per-curve smoothness metric for every (variable, mode, species)
    let mut curves = serde_json::Map::new();
    for (variable, grid_values, steps) in [
        ("t_k", &t_grid, &scenario.fd_steps_k),
        ("p_pa", &p_grid, &scenario.fd_steps_pa),
    ] {
        let modes = curve_modes(steps, scenario.include_reconverged);
        let mut per_mode = serde_json::Map::new();
        for mode in &modes {
            let mut per_species = serde_json::Map::new();
            for (si, name) in names.iter().enumerate() {
                let curve = extract_curve(&report, variable, mode, 6 + si);
                let metric = smoothness_metric(&curve);
                per_species.insert(
                    name.to_string(),
                    metric.map(|m| json!(m)).unwrap_or(serde_json::Value::Null),
                );
            }
            per_mode.insert(mode.clone(), serde_json::Value::Object(per_species));
        }
        let _ = grid_values;
        curves.insert(
            variable.to_string(),
            serde_json::Value::Object(per_mode),
        );
    }
    let failures = report
        .rows
        .iter()
        .filter(|r| !matches!(&r[5], Cell::Text(s) if s.is_empty()))
        .count();
    report.summary = json!({
        "scenario": scenario.id,
        "kind": "curve",
        "rows": report.rows.len(),
        "failures": failures,
        "smoothness": serde_json::Value::Object(curves),
    });
    Ok(report)
}

/// Ordered values of one derivative column along one axis and mode,
/// excluding failed rows.
fn extract_curve(report: &RunReport, variable: &str, mode: &str, column: usize) -> Vec<f64> {
    report
        .rows
        .iter()
        .filter(|row| {
            matches!(&row[0], Cell::Text(v) if v == variable)
                && matches!(&row[2], Cell::Text(m) if m == mode)
                && matches!(&row[5], Cell::Text(e) if e.is_empty())
        })
        .filter_map(|row| match &row[column] {
            Cell::Float(v) if v.is_finite() => Some(*v),
            _ => None,
        })
        .collect()
}

/// Smoothness metrics of one scenario summary, keyed by mode then species.
pub fn summary_metric(report: &RunReport, variable: &str, mode: &str, species: &str) -> Option<f64> {
    report
        .summary
        .get("smoothness")?
        .get(variable)?
        .get(mode)?
        .get(species)?
        .as_f64()
}

/// Derivative distribution across random compositions at fixed vapor
/// fraction (the stability comparison).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DistributionScenario {
    pub id: String,
    pub n_samples: usize,
    pub rng_seed: u64,
    pub pressure_bar: f64,
    pub vapor_fraction: f64,
    /// Evaluation temperature; None means the midpoint of the solver's
    /// temperature bracket (the Newton starting iterate).
    pub temperature_k: Option<f64>,
    pub fd_steps_k: Vec<f64>,
}

impl Default for DistributionScenario {
    fn default() -> Self {
        DistributionScenario {
            id: "distribution".into(),
            n_samples: 500,
            rng_seed: 7_2024,
            pressure_bar: 18.0,
            vapor_fraction: 0.7,
            temperature_k: None,
            fd_steps_k: vec![1e-3, 1e-6],
        }
    }
}

pub fn run_distribution_study(
    set: &ComponentSet,
    scenario: &DistributionScenario,
    config: &SolverConfig,
) -> Result<RunReport, FlashError> {
    let mut columns = vec!["sample".to_string()];
    for n in set.names() {
        columns.push(format!("z_{n}"));
    }
    columns.extend(["mode".to_string(), "df_dt".to_string(), "finite".to_string(), "error".to_string()]);
    let column_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let mut report = RunReport::new(&scenario.id, "distribution", &column_refs);

    let p = scenario.pressure_bar * BAR;
    let v = scenario.vapor_fraction;

    let mut modes = vec![DerivativeMode::Ad];
    for &h in &scenario.fd_steps_k {
        modes.push(DerivativeMode::Fd { step: h });
    }

    let mut rng = seeded_rng(scenario.rng_seed);
    let mut per_mode: Vec<Vec<f64>> = vec![Vec::new(); modes.len()];
    let mut non_finite = vec![0usize; modes.len()];
    let mut failures = vec![0usize; modes.len()];
    let mut t_evals: Vec<f64> = Vec::new();

    for sample in 0..scenario.n_samples {
        let z = sample_simplex(&mut rng, set.len());
        // the evaluation point is the Newton starting iterate: the midpoint
        // of this composition's own objective bracket, unless the scenario
        // pins a temperature
        let point: Result<(f64, flash::PvInnerState), FlashError> = (|| {
            let t = match scenario.temperature_k {
                Some(t) => t,
                None => {
                    let (lo, hi) = flash::pv_bracket(set, &z, p, v, config)?;
                    0.5 * (lo + hi)
                }
            };
            let state = flash::pv_inner_state(set, &z, t, p, v, config)?;
            Ok((t, state))
        })();
        if let Ok((t, _)) = &point {
            t_evals.push(*t);
        }
        for (mi, mode) in modes.iter().enumerate() {
            let mut row: Vec<Cell> = vec![Cell::Int(sample as i64)];
            row.extend(z.iter().map(|&c| Cell::Float(c)));
            row.push(mode.to_string().into());
            let outcome = point
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|(t, state)| {
                    flash::pv_objective_dt(set, &z, *t, p, v, state, *mode)
                        .map_err(|e| e.to_string())
                });
            match outcome {
                Ok(df) => {
                    let finite = df.is_finite();
                    if !finite {
                        non_finite[mi] += 1;
                    } else {
                        per_mode[mi].push(df);
                    }
                    row.push(Cell::Float(df));
                    row.push(Cell::Int(finite as i64));
                    row.push("".into());
                }
                Err(e) => {
                    failures[mi] += 1;
                    row.push(Cell::Float(f64::NAN));
                    row.push(Cell::Int(0));
                    row.push(sanitize(&e).into());
                }
            }
            report.push_row(row);
        }
    }

    let mut stats = serde_json::Map::new();
    for (mi, mode) in modes.iter().enumerate() {
        let values = &per_mode[mi];
        let entry = if values.is_empty() {
            json!({
                "count": 0,
                "non_finite": non_finite[mi],
                "failures": failures[mi],
            })
        } else {
            json!({
                "count": values.len(),
                "mean": mean(values),
                "variance": variance(values),
                "min": values.iter().cloned().fold(f64::INFINITY, f64::min),
                "max": values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                "non_finite": non_finite[mi],
                "failures": failures[mi],
                "tukey_outliers_10x": tukey_outliers(values, 10.0),
            })
        };
        stats.insert(mode.to_string(), entry);
    }
    let t_summary = if t_evals.is_empty() {
        serde_json::Value::Null
    } else {
        json!({
            "min": t_evals.iter().cloned().fold(f64::INFINITY, f64::min),
            "max": t_evals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            "mean": mean(&t_evals),
        })
    };
    report.summary = json!({
        "scenario": scenario.id,
        "kind": "distribution",
        "samples": scenario.n_samples,
        "evaluation_temperatures_k": t_summary,
        "vapor_fraction": v,
        "modes": serde_json::Value::Object(stats),
    });
    Ok(report)
}

/// Newton iteration counts for PV and PH flashes across a vapor-fraction and
/// composition grid, per derivative mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationBenchmarkScenario {
    pub id: String,
    pub v_targets: Vec<f64>,
    pub n_compositions: usize,
    pub include_equimolar: bool,
    pub rng_seed: u64,
    pub pressure_bar: f64,
    pub fd_steps_k: Vec<f64>,
}

impl Default for IterationBenchmarkScenario {
    fn default() -> Self {
        IterationBenchmarkScenario {
            id: "iteration-benchmark".into(),
            v_targets: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            n_compositions: 5,
            include_equimolar: true,
            rng_seed: 1_414,
            pressure_bar: 18.0,
            fd_steps_k: vec![1e-3, 1e-8],
        }
    }
}

pub fn run_iteration_benchmark(
    set: &ComponentSet,
    scenario: &IterationBenchmarkScenario,
    config: &SolverConfig,
) -> Result<RunReport, FlashError> {
    let mut columns = vec!["composition".to_string()];
    for n in set.names() {
        columns.push(format!("z_{n}"));
    }
    columns.extend([
        "v_target".to_string(),
        "flash".to_string(),
        "mode".to_string(),
        "converged".to_string(),
        "outer_iters".to_string(),
        "inner_iters".to_string(),
        "t_converged_k".to_string(),
        "error".to_string(),
    ]);
    let column_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let mut report = RunReport::new(&scenario.id, "iterations", &column_refs);

    let p = scenario.pressure_bar * BAR;
    let mut rng = seeded_rng(scenario.rng_seed);
    let mut compositions = Vec::new();
    if scenario.include_equimolar {
        compositions.push(vec![1.0 / set.len() as f64; set.len()]);
    }
    while compositions.len() < scenario.n_compositions {
        compositions.push(sample_simplex(&mut rng, set.len()));
    }

    let mut modes = vec![DerivativeMode::Ad];
    for &h in &scenario.fd_steps_k {
        modes.push(DerivativeMode::Fd { step: h });
    }

    struct CellOutcome {
        flash: &'static str,
        mode: String,
        converged: bool,
        outer: usize,
        inner: usize,
        t: f64,
        error: String,
    }

    let mut outcomes: Vec<(usize, usize, Vec<CellOutcome>)> = Vec::new();

    for (ci, z) in compositions.iter().enumerate() {
        for (vi, &v) in scenario.v_targets.iter().enumerate() {
            let mut cell = Vec::new();
            // PV in every mode
            let mut h_target: Option<f64> = None;
            for mode in &modes {
                match flash_pv(set, z, p, v, *mode, None, config) {
                    Ok(r) => {
                        if *mode == DerivativeMode::Ad && r.converged {
                            h_target = result_enthalpy(set, &r, p).ok();
                        }
                        cell.push(CellOutcome {
                            flash: "pv",
                            mode: mode.to_string(),
                            converged: r.converged,
                            outer: r.outer_iters,
                            inner: r.inner_iters,
                            t: r.temperature,
                            error: String::new(),
                        });
                    }
                    Err(e) => cell.push(CellOutcome {
                        flash: "pv",
                        mode: mode.to_string(),
                        converged: false,
                        outer: 0,
                        inner: 0,
                        t: f64::NAN,
                        error: sanitize(&e.to_string()),
                    }),
                }
            }
            // PH toward the enthalpy of the AD PV solution
            for mode in &modes {
                match h_target {
                    Some(h_total) => match flash_ph(set, z, p, h_total, *mode, None, config) {
                        Ok(r) => cell.push(CellOutcome {
                            flash: "ph",
                            mode: mode.to_string(),
                            converged: r.converged,
                            outer: r.outer_iters,
                            inner: r.inner_iters,
                            t: r.temperature,
                            error: String::new(),
                        }),
                        Err(e) => cell.push(CellOutcome {
                            flash: "ph",
                            mode: mode.to_string(),
                            converged: false,
                            outer: 0,
                            inner: 0,
                            t: f64::NAN,
                            error: sanitize(&e.to_string()),
                        }),
                    },
                    None => cell.push(CellOutcome {
                        flash: "ph",
                        mode: mode.to_string(),
                        converged: false,
                        outer: 0,
                        inner: 0,
                        t: f64::NAN,
                        error: "no enthalpy target: pv(ad) did not converge".into(),
                    }),
                }
            }
            outcomes.push((ci, vi, cell));
        }
    }

    for (ci, vi, cell) in &outcomes {
        for o in cell {
            let mut row: Vec<Cell> = vec![Cell::Int(*ci as i64)];
            row.extend(compositions[*ci].iter().map(|&c| Cell::Float(c)));
            row.push(Cell::Float(scenario.v_targets[*vi]));
            row.push(o.flash.into());
            row.push(o.mode.as_str().into());
            row.push(Cell::Int(o.converged as i64));
            row.push(Cell::Int(o.outer as i64));
            row.push(Cell::Int(o.inner as i64));
            row.push(Cell::Float(o.t));
            row.push(o.error.as_str().into());
            report.push_row(row);
        }
    }

    // summary: per (flash, mode) convergence and iteration statistics, plus
    // the head-to-head comparison of ad against each fd step
    let mut per_mode = serde_json::Map::new();
    for flash_kind in ["pv", "ph"] {
        for mode in &modes {
            let key = format!("{flash_kind}:{mode}");
            let mut iters = Vec::new();
            let mut conv = 0usize;
            let mut total = 0usize;
            for (_, _, cell) in &outcomes {
                for o in cell {
                    if o.flash == flash_kind && o.mode == mode.to_string() {
                        total += 1;
                        if o.converged {
                            conv += 1;
                            iters.push(o.outer as f64);
                        }
                    }
                }
            }
            iters.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let median = if iters.is_empty() {
                serde_json::Value::Null
            } else {
                json!(iters[iters.len() / 2])
            };
            per_mode.insert(
                key,
                json!({
                    "cells": total,
                    "converged": conv,
                    "median_outer_iters": median,
                }),
            );
        }
    }

    let mut comparisons = serde_json::Map::new();
    for flash_kind in ["pv", "ph"] {
        for mode in modes.iter().skip(1) {
            let fd_name = mode.to_string();
            let mut joint = 0usize;
            let mut ad_le = 0usize;
            let mut fd_conv_not_ad = 0usize;
            let mut max_t_diff: f64 = 0.0;
            for (_, _, cell) in &outcomes {
                let ad = cell
                    .iter()
                    .find(|o| o.flash == flash_kind && o.mode == "ad");
                let fd = cell
                    .iter()
                    .find(|o| o.flash == flash_kind && o.mode == fd_name);
                if let (Some(ad), Some(fd)) = (ad, fd) {
                    if fd.converged && !ad.converged {
                        fd_conv_not_ad += 1;
                    }
                    if ad.converged && fd.converged {
                        joint += 1;
                        if ad.outer <= fd.outer {
                            ad_le += 1;
                        }
                        max_t_diff = max_t_diff.max((ad.t - fd.t).abs());
                    }
                }
            }
            comparisons.insert(
                format!("{flash_kind}:ad-vs-{fd_name}"),
                json!({
                    "jointly_converged": joint,
                    "ad_iters_le_fd": ad_le,
                    "fd_converged_where_ad_did_not": fd_conv_not_ad,
                    "max_t_difference_k": max_t_diff,
                }),
            );
        }
    }

    report.summary = json!({
        "scenario": scenario.id,
        "kind": "iterations",
        "cells": outcomes.len(),
        "modes": serde_json::Value::Object(per_mode),
        "comparisons": serde_json::Value::Object(comparisons),
    });
    Ok(report)
}

/// Finite-difference step sweep of dK_i/dT against the dual-number
/// reference at one state (the truncation/round-off U-curve).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StepSweepScenario {
    pub id: String,
    pub feed: Vec<f64>,
    pub temperature_k: f64,
    pub pressure_bar: f64,
    pub steps_k: Vec<f64>,
}

impl Default for StepSweepScenario {
    fn default() -> Self {
        StepSweepScenario {
            id: "step-sweep".into(),
            feed: vec![0.25; 4],
            temperature_k: 250.0,
            pressure_bar: 18.0,
            steps_k: vec![1e1, 1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
        }
    }
}

pub fn run_step_sweep(
    set: &ComponentSet,
    scenario: &StepSweepScenario,
    config: &SolverConfig,
) -> Result<RunReport, FlashError> {
    let names = set.names();
    let mut report = RunReport::new(
        &scenario.id,
        "sweep",
        &["step_k", "species", "fd_dk_dt", "ad_dk_dt", "deviation", "error"],
    );
    let t = scenario.temperature_k;
    let p = scenario.pressure_bar * BAR;
    let point =
        converged_point(set, &scenario.feed, t, p, config).map_err(FlashError::InvalidSpec)?;
    let ad = eos::k_derivatives(set, t, p, &point.x, &point.y, KDerivative::Temperature)?;

    for &h in &scenario.steps_k {
        for (si, name) in names.iter().enumerate() {
            let fd = eos::k_values(set, &(t + h), &p, &point.x, &point.y).and_then(|hi| {
                let lo = eos::k_values(set, &(t - h), &p, &point.x, &point.y)?;
                Ok((hi[si] - lo[si]) / (2.0 * h))
            });
            let row: Vec<Cell> = match fd {
                Ok(v) => vec![
                    h.into(),
                    (*name).into(),
                    v.into(),
                    ad[si].into(),
                    (v - ad[si]).abs().into(),
                    "".into(),
                ],
                Err(e) => vec![
                    h.into(),
                    (*name).into(),
                    Cell::Float(f64::NAN),
                    ad[si].into(),
                    Cell::Float(f64::NAN),
                    sanitize(&e.to_string()).into(),
                ],
            };
            report.push_row(row);
        }
    }

    let mut per_species = serde_json::Map::new();
    for (si, name) in names.iter().enumerate() {
        let mut devs = Vec::new();
        for (hi, &h) in scenario.steps_k.iter().enumerate() {
            let row = &report.rows[hi * names.len() + si];
            if let Cell::Float(d) = row[4] {
                if d.is_finite() {
                    devs.push((h, d));
                }
            }
        }
        let min = devs
            .iter()
            .cloned()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));
        per_species.insert(
            name.to_string(),
            match min {
                Some((h, d)) => json!({ "best_step_k": h, "best_deviation": d }),
                None => serde_json::Value::Null,
            },
        );
    }
    report.summary = json!({
        "scenario": scenario.id,
        "kind": "sweep",
        "temperature_k": t,
        "pressure_bar": scenario.pressure_bar,
        "best": serde_json::Value::Object(per_species),
    });
    Ok(report)
}

/// A tagged scenario as it appears in a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    DkCurves(DkCurvesScenario),
    Distribution(DistributionScenario),
    IterationBenchmark(IterationBenchmarkScenario),
    StepSweep(StepSweepScenario),
}

impl Scenario {
    pub fn id(&self) -> &str {
        match self {
            Scenario::DkCurves(s) => &s.id,
            Scenario::Distribution(s) => &s.id,
            Scenario::IterationBenchmark(s) => &s.id,
            Scenario::StepSweep(s) => &s.id,
        }
    }

    pub fn run(
        &self,
        set: &ComponentSet,
        config: &SolverConfig,
    ) -> Result<RunReport, FlashError> {
        match self {
            Scenario::DkCurves(s) => run_dk_curves(set, s, config),
            Scenario::Distribution(s) => run_distribution_study(set, s, config),
            Scenario::IterationBenchmark(s) => run_iteration_benchmark(set, s, config),
            Scenario::StepSweep(s) => run_step_sweep(set, s, config),
        }
    }
}
