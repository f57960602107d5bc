//! Acceptance suite: one test per verification criterion, each printing a
//! PASS/FAIL line (run with `-- --nocapture` to see them all).
//!
//! Every expected value asserted here comes from an independent route:
//! bisection oracles on the same objectives the solvers drive to zero,
//! Richardson-extrapolated central differences for derivatives, and closed
//! identities for the degenerate cases. Tolerances are pinned in the
//! assertions, not configurable.

use std::time::Instant;

use thermoflash::components::ComponentSet;
use thermoflash::eos::{self, KDerivative};
use thermoflash::experiments::report::tukey_outliers;
use thermoflash::experiments::runners::{
    run_distribution_study, run_dk_curves, run_iteration_benchmark, run_step_sweep,
    summary_metric, DistributionScenario, DkCurvesScenario, IterationBenchmarkScenario,
    StepSweepScenario,
};
use thermoflash::findiff::richardson_reference;
use thermoflash::flash::{
    self, feed_enthalpy, flash_ph, flash_pt, flash_pv, probe_pv_objective, result_enthalpy,
    rr_residual, solve_rr, DerivativeMode, FlashError, SolverConfig,
};

const BAR: f64 = 1e5;

fn set() -> ComponentSet {
    ComponentSet::bundled()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn equimolar() -> Vec<f64> {
    vec![0.25; 4]
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

fn report(criterion: &str, ok: bool, detail: &str, started: Instant) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!(
        "acceptance {criterion}: {verdict} ({detail}; {:.2?})",
        started.elapsed()
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

/// Deterministic xorshift for oracle instance generation, independent of the
/// library's seeded sampler.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        (x >> 11) as f64 / (1u64 << 53) as f64
    }

    fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }

    fn composition(&mut self, n: usize) -> Vec<f64> {
        let draws: Vec<f64> = (0..n).map(|_| -(1.0 - self.next()).ln().max(1e-12)).collect();
        normalized(&draws)
    }
}

// 1. dual-number dK/dT matches the Richardson oracle on the 50-point grid.
#[test]
fn criterion_1_gradient_correctness() {
    let started = Instant::now();
    let set = set();
    let cfg = cfg();
    let z = equimolar();
    let p = 18.0 * BAR;
    let n = 50;

    let mut points = Vec::new();
    for i in 0..n {
        let t = 200.0 + 100.0 * i as f64 / (n - 1) as f64;
        let r = flash_pt(&set, &z, t, p, DerivativeMode::Ad, &cfg).unwrap();
        if !r.converged || r.single_phase.is_some() {
            continue; // no equilibrium K outside the two-phase band
        }
        let x = normalized(&r.x);
        let y = normalized(&r.y);
        let rcx = eos::evaluate(&set, &t, &p, &x).unwrap().root_count;
        let rcy = eos::evaluate(&set, &t, &p, &y).unwrap().root_count;
        points.push((t, x, y, rcx, rcy));
    }
    assert!(points.len() > 20, "two-phase band unexpectedly small");

    // grid points adjacent to a root-count change are the known-bad FD zone
    let mut exempt = vec![false; points.len()];
    for i in 1..points.len() {
        if (points[i - 1].3, points[i - 1].4) != (points[i].3, points[i].4) {
            exempt[i - 1] = true;
            exempt[i] = true;
        }
    }

    let mut checked = 0;
    let mut exempted_used = 0;
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for (idx, (t, x, y, _, _)) in points.iter().enumerate() {
        let ad = eos::k_derivatives(&set, *t, p, x, y, KDerivative::Temperature).unwrap();
        let mut point_ok = true;
        for (si, &ad_i) in ad.iter().enumerate() {
            let f = |tv: f64| -> Result<f64, FlashError> {
                Ok(eos::k_values(&set, &tv, &p, x, y)?[si])
            };
            match richardson_reference(f, *t) {
                Ok(oracle) => {
                    let rel = (ad_i - oracle.value).abs() / oracle.value.abs().max(1e-300);
                    worst = worst.max(rel);
                    if rel > 1e-6 {
                        point_ok = false;
                    }
                }
                Err(_) => point_ok = false, // oracle could not certify here
            }
        }
        checked += 1;
        if !point_ok {
            if exempt[idx] {
                exempted_used += 1;
            } else {
                failed.push(*t);
            }
        }
    }

    let ok = failed.is_empty() && exempted_used <= 4;
    report(
        "1 gradient-correctness",
        ok,
        &format!(
            "{checked} grid points, worst relative deviation {worst:.2e}, \
             {exempted_used} exempted near transitions, failures at {failed:?}"
        ),
        started,
    );
}

// 2. the dual-derivative curves are smooth; small-step central differences
//    are not.
#[test]
fn criterion_2_smoothness_contrast() {
    let started = Instant::now();
    let set = set();
    let scenario = DkCurvesScenario {
        id: "acceptance-smoothness".into(),
        t_points: 1001,
        p_points: 901,
        fd_steps_k: vec![1e-6, 1e-8],
        fd_steps_pa: vec![1e-6, 1e-8],
        include_reconverged: false,
        ..DkCurvesScenario::default()
    };
    let report_data = run_dk_curves(&set, &scenario, &cfg()).unwrap();

    let mut ok = true;
    let mut details = Vec::new();
    for species in set.names() {
        let ad_t = summary_metric(&report_data, "t_k", "ad", species).unwrap_or(f64::INFINITY);
        let ad_p = summary_metric(&report_data, "p_pa", "ad", species).unwrap_or(f64::INFINITY);
        let fd6 = summary_metric(&report_data, "t_k", "fd(1e-6)", species).unwrap_or(0.0);
        let fd8 = summary_metric(&report_data, "t_k", "fd(1e-8)", species).unwrap_or(0.0);
        let species_ok = ad_t < 5.0 && ad_p < 5.0 && (fd6 > ad_t || fd8 > ad_t);
        ok &= species_ok;
        details.push(format!(
            "{species}: ad(T)={ad_t:.2} ad(P)={ad_p:.2} fd6={fd6:.1} fd8={fd8:.1}"
        ));
    }
    report("2 smoothness-contrast", ok, &details.join("; "), started);
}

// 3. the finite-difference deviation from the dual-number reference follows
//    the truncation/round-off U-curve.
#[test]
fn criterion_3_step_sweep_u_curve() {
    let started = Instant::now();
    let set = set();
    let scenario = StepSweepScenario::default();
    let data = run_step_sweep(&set, &scenario, &cfg()).unwrap();

    // rows are ordered step-major, species-minor
    let n_species = set.len();
    let steps = &scenario.steps_k;
    let mut ok = true;
    let mut details = Vec::new();
    for (si, name) in set.names().iter().enumerate() {
        let devs: Vec<f64> = (0..steps.len())
            .map(|hi| data.column("deviation")[hi * n_species + si])
            .collect();
        let min_dev = devs.iter().cloned().fold(f64::INFINITY, f64::min);
        let argmin = devs.iter().position(|&d| d == min_dev).unwrap();
        let last = *devs.last().unwrap(); // step 1e-8 K
        let interior = argmin > 0 && argmin < devs.len() - 1;
        let species_ok = interior && last >= 10.0 * min_dev;
        ok &= species_ok;
        details.push(format!(
            "{name}: min {min_dev:.1e} at {:.0e} K, dev(1e-8)={last:.1e} ({:.0}x)",
            steps[argmin],
            last / min_dev
        ));
    }
    report("3 step-sweep-u-curve", ok, &details.join("; "), started);
}

// 4. flash solutions match bisection oracles on the same objectives.
#[test]
fn criterion_4_flash_oracles() {
    let started = Instant::now();
    let set = set();
    let cfg = cfg();
    let mut rng = Rng(0x5eed_cafe);

    // PT: fixed-K Rachford-Rice against plain bisection, 20 instances
    let mut pt_worst: f64 = 0.0;
    let mut pt_count = 0;
    while pt_count < 20 {
        let z = rng.composition(4);
        let k: Vec<f64> = (0..4).map(|_| rng.in_range(-1.5f64, 1.5).exp()).collect();
        let f0 = rr_residual(&z, &k, &0.0).unwrap();
        let f1 = rr_residual(&z, &k, &1.0).unwrap();
        if !(f0 > 0.0 && f1 < 0.0) {
            continue; // no interior root; draw another instance
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rr_residual(&z, &k, &mid).unwrap() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let sol = solve_rr(&z, &k, DerivativeMode::Ad, &cfg).unwrap();
        assert!(sol.converged);
        pt_worst = pt_worst.max((sol.vapor_fraction - oracle).abs());
        pt_count += 1;
    }

    // PV: Newton temperature against bisection on F(T), 10 scenarios
    let mut pv_worst: f64 = 0.0;
    let mut pv_count = 0;
    let mut attempts = 0;
    while pv_count < 10 && attempts < 100 {
        attempts += 1;
        let z = rng.composition(4);
        let v = rng.in_range(0.15, 0.9);
        let p = rng.in_range(12.0, 19.0) * BAR;
        let Ok(result) = flash_pv(&set, &z, p, v, DerivativeMode::Ad, None, &cfg) else {
            continue;
        };
        if !result.converged {
            continue;
        }
        let f = |t: f64| probe_pv_objective(&set, &z, t, p, v, &cfg).map(|(f, _)| f);
        let (mut lo, mut hi) = (result.temperature - 8.0, result.temperature + 8.0);
        let (Ok(f_lo), Ok(f_hi)) = (f(lo), f(hi)) else {
            continue;
        };
        if f_lo.signum() == f_hi.signum() {
            continue;
        }
        let s_lo = f_lo.signum();
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            match f(mid) {
                Ok(fm) if fm.signum() == s_lo => lo = mid,
                Ok(_) => hi = mid,
                Err(_) => break,
            }
        }
        let oracle = 0.5 * (lo + hi);
        pv_worst = pv_worst.max((result.temperature - oracle).abs());
        pv_count += 1;
    }

    // PH: Newton temperature against bisection on the enthalpy error
    let mut ph_worst: f64 = 0.0;
    let mut ph_count = 0;
    attempts = 0;
    while ph_count < 10 && attempts < 100 {
        attempts += 1;
        let z = rng.composition(4);
        let p = rng.in_range(12.0, 19.0) * BAR;
        let t_feed = rng.in_range(215.0, 265.0);
        let Ok(h_mix) = feed_enthalpy(&set, &z, t_feed, p, &cfg) else {
            continue;
        };
        let h_total = h_mix + rng.in_range(-1500.0, 3000.0);
        let Ok(result) = flash_ph(&set, &z, p, h_total, DerivativeMode::Ad, None, &cfg) else {
            continue;
        };
        if !result.converged {
            continue;
        }
        let h_err = |t: f64| -> Result<f64, FlashError> {
            let r = flash_pt(&set, &z, t, p, DerivativeMode::Ad, &cfg)?;
            Ok(h_total - result_enthalpy(&set, &r, p)?)
        };
        let (mut lo, mut hi) = (result.temperature - 5.0, result.temperature + 5.0);
        let (Ok(e_lo), Ok(e_hi)) = (h_err(lo), h_err(hi)) else {
            continue;
        };
        if !(e_lo > 0.0 && e_hi < 0.0) {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            match h_err(mid) {
                Ok(e) if e > 0.0 => lo = mid,
                Ok(_) => hi = mid,
                Err(_) => break,
            }
        }
        let oracle = 0.5 * (lo + hi);
        ph_worst = ph_worst.max((result.temperature - oracle).abs());
        ph_count += 1;
    }

    let ok = pt_count == 20
        && pv_count == 10
        && ph_count == 10
        && pt_worst < 1e-9
        && pv_worst < 1e-4
        && ph_worst < 1e-4;
    report(
        "4 flash-oracles",
        ok,
        &format!(
            "PT {pt_count} instances worst |dV| {pt_worst:.2e}; \
             PV {pv_count} scenarios worst |dT| {pv_worst:.2e} K; \
             PH {ph_count} scenarios worst |dT| {ph_worst:.2e} K"
        ),
        started,
    );
}

// 5. every converged flash conserves material, closes the mole fractions,
//    and (for PH) closes the energy balance.
#[test]
fn criterion_5_conservation() {
    let started = Instant::now();
    let set = set();
    let cfg = cfg();
    let mut rng = Rng(0xfeed_5eed);

    let mut converged = 0;
    let mut checked = 0;
    let mut worst_balance: f64 = 0.0;
    let mut worst_closure: f64 = 0.0;
    let mut worst_k: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    let mut bad = Vec::new();

    let mut audit = |z: &[f64], r: &flash::FlashResult, h_target: Option<f64>, tag: &str| {
        checked += 1;
        if !r.converged {
            return;
        }
        converged += 1;
        let v = r.vapor_fraction;
        let mut instance_ok = true;
        for i in 0..z.len() {
            let back = (1.0 - v) * r.x[i] + v * r.y[i];
            let err = (z[i] - back).abs();
            worst_balance = worst_balance.max(err);
            instance_ok &= err < 1e-9;
        }
        let sx: f64 = r.x.iter().sum();
        let sy: f64 = r.y.iter().sum();
        worst_closure = worst_closure.max((sx - 1.0).abs().max((sy - 1.0).abs()));
        instance_ok &= (sx - 1.0).abs() < 1e-9 && (sy - 1.0).abs() < 1e-9;
        if r.single_phase.is_none() {
            for i in 0..z.len() {
                let err = (r.k[i] - r.y[i] / r.x[i]).abs() / r.k[i].abs().max(1.0);
                worst_k = worst_k.max(err);
                instance_ok &= err < 1e-9;
            }
        }
        if let Some(h_total) = h_target {
            let h_out = result_enthalpy(&set, r, 18.0 * BAR).unwrap();
            let err = (h_total - h_out).abs() / h_total.abs().max(1.0);
            worst_energy = worst_energy.max(err);
            instance_ok &= err < 1e-6;
        }
        if !instance_ok {
            bad.push(tag.to_string());
        }
    };

    // 100 PT + 50 PV + 50 PH seeded instances
    for i in 0..100 {
        let z = rng.composition(4);
        let t = rng.in_range(195.0, 305.0);
        let p = rng.in_range(10.0, 19.0) * BAR;
        if let Ok(r) = flash_pt(&set, &z, t, p, DerivativeMode::Ad, &cfg) {
            audit(&z, &r, None, &format!("pt-{i}"));
        }
    }
    for i in 0..50 {
        let z = rng.composition(4);
        let v = rng.in_range(0.05, 0.95);
        let p = rng.in_range(10.0, 19.0) * BAR;
        if let Ok(r) = flash_pv(&set, &z, p, v, DerivativeMode::Ad, None, &cfg) {
            audit(&z, &r, None, &format!("pv-{i}"));
        }
    }
    for i in 0..50 {
        let z = rng.composition(4);
        let p = 18.0 * BAR;
        let t_feed = rng.in_range(215.0, 265.0);
        let Ok(h_mix) = feed_enthalpy(&set, &z, t_feed, p, &cfg) else {
            continue;
        };
        let h_total = h_mix + rng.in_range(-1000.0, 3000.0);
        if let Ok(r) = flash_ph(&set, &z, p, h_total, DerivativeMode::Ad, None, &cfg) {
            audit(&z, &r, Some(h_total), &format!("ph-{i}"));
        }
    }

    let ok = bad.is_empty() && converged >= 150 && checked >= 190;
    report(
        "5 conservation",
        ok,
        &format!(
            "{converged}/{checked} converged; worst balance {worst_balance:.1e}, \
             closure {worst_closure:.1e}, K ratio {worst_k:.1e}, energy {worst_energy:.1e}; \
             violations: {bad:?}"
        ),
        started,
    );
}

// 6. derivative distribution across 500 random compositions: the dual path
//    is always finite; small-step differences earn at least as many outliers.
#[test]
fn criterion_6_distribution() {
    let started = Instant::now();
    let set = set();
    let scenario = DistributionScenario::default();
    let data = run_distribution_study(&set, &scenario, &cfg()).unwrap();

    let ad_non_finite = data.summary["modes"]["ad"]["non_finite"].as_u64().unwrap();
    let per_mode = |mode: &str| -> Vec<f64> {
        let mode_col = data.columns.iter().position(|c| c == "mode").unwrap();
        let df_col = data.columns.iter().position(|c| c == "df_dt").unwrap();
        data.rows
            .iter()
            .filter(|r| {
                matches!(&r[mode_col], thermoflash::experiments::report::Cell::Text(m) if m == mode)
            })
            .filter_map(|r| match r[df_col] {
                thermoflash::experiments::report::Cell::Float(v) if v.is_finite() => Some(v),
                _ => None,
            })
            .collect()
    };
    let ad_values = per_mode("ad");
    let fd_values = per_mode("fd(1e-6)");
    let ad_outliers = tukey_outliers(&ad_values, 10.0);
    let fd_outliers = tukey_outliers(&fd_values, 10.0);

    let ok = ad_non_finite == 0 && fd_outliers >= ad_outliers && ad_values.len() >= 400;
    report(
        "6 distribution",
        ok,
        &format!(
            "ad: {} finite values, {ad_non_finite} non-finite, {ad_outliers} outliers; \
             fd(1e-6): {fd_outliers} outliers",
            ad_values.len()
        ),
        started,
    );
}

// 7. the dual-derivative Newton never needs more iterations than the
//    difference-quotient Newton, and converges wherever it does.
#[test]
fn criterion_7_iteration_dominance() {
    let started = Instant::now();
    let set = set();
    let scenario = IterationBenchmarkScenario::default();
    let data = run_iteration_benchmark(&set, &scenario, &cfg()).unwrap();

    let mut ok = true;
    let mut details = Vec::new();
    for flash_kind in ["pv", "ph"] {
        for step in &scenario.fd_steps_k {
            let key = format!("{flash_kind}:ad-vs-fd({step:e})");
            let cmp = &data.summary["comparisons"][&key];
            let joint = cmp["jointly_converged"].as_u64().unwrap();
            let ad_le = cmp["ad_iters_le_fd"].as_u64().unwrap();
            let fd_only = cmp["fd_converged_where_ad_did_not"].as_u64().unwrap();
            let frac = ad_le as f64 / joint.max(1) as f64;
            let pair_ok = joint > 0 && frac >= 0.9 && fd_only == 0;
            ok &= pair_ok;
            details.push(format!("{key}: {ad_le}/{joint} ad<=fd, {fd_only} fd-only"));
        }
    }
    report("7 iteration-dominance", ok, &details.join("; "), started);
}

// 8. exact identities: pure-component reductions, unit-K splits, ideal-gas
//    limits and cubic residuals.
#[test]
fn criterion_8_degenerate_identities() {
    let started = Instant::now();
    let set = set();
    let mut ok = true;
    let mut notes = Vec::new();

    // mixing identities
    {
        let k1 = thermoflash::components::BinarySet::zeros(1);
        let (a, b) = eos::mix(&[0.7], &[3e-5], &[1.0], &k1).unwrap();
        ok &= (a - 0.7).abs() < 1e-15 && (b - 3e-5).abs() < 1e-20;
        let k2 = thermoflash::components::BinarySet::zeros(2);
        let (a, _) = eos::mix(&[0.7, 0.7], &[3e-5, 3e-5], &[0.5, 0.5], &k2).unwrap();
        ok &= (a - 0.7).abs() < 1e-15;
        notes.push("mixing identities".to_string());
    }

    // K = 1 for every component makes the balance identically zero
    {
        let z = [0.2, 0.3, 0.4, 0.1];
        let k = [1.0; 4];
        let mut worst: f64 = 0.0;
        for i in 0..=20 {
            let v = i as f64 / 20.0;
            worst = worst.max(rr_residual(&z, &k, &v).unwrap().abs());
        }
        ok &= worst == 0.0;
        notes.push(format!("unit-K residual max {worst:.1e}"));
    }

    // ideal-gas limits at 10 Pa
    {
        let state = eos::MixtureState::new(250.0, 10.0, equimolar()).unwrap();
        let eval = eos::evaluate_state(&set, &state).unwrap();
        let worst_phi = eval
            .phi_vap
            .iter()
            .map(|p| (p - 1.0).abs())
            .fold(0.0, f64::max);
        ok &= worst_phi < 1e-3 && eval.h_dep_vap.abs() < 1.0;
        notes.push(format!(
            "phi gap {worst_phi:.1e}, |h_dep| {:.1e} J/mol",
            eval.h_dep_vap.abs()
        ));
    }

    // cubic residuals below 1e-10 across both discriminant branches
    {
        let mut worst: f64 = 0.0;
        let mut a_cap = 0.0;
        while a_cap <= 0.45 {
            let mut b_cap = 0.0;
            while b_cap <= 0.09 {
                for root in eos::cubic_roots(&a_cap, &b_cap).unwrap().iter() {
                    worst = worst.max(eos::cubic_residual(a_cap, b_cap, *root).abs());
                }
                b_cap += 0.003;
            }
            a_cap += 0.015;
        }
        ok &= worst < 1e-10;
        notes.push(format!("cubic residual max {worst:.1e}"));
    }

    // pure-component reduction of the partial fugacity form
    {
        let one = ComponentSet {
            components: vec![set.components[3].clone()],
            binary: thermoflash::components::BinarySet::zeros(1),
        };
        let state = eos::MixtureState::new(300.0, 5.0 * BAR, vec![1.0]).unwrap();
        let eval = eos::evaluate_state(&one, &state).unwrap();
        let scalar = |z: f64| (z - 1.0) - (z - eval.b).ln() - eval.a / eval.b * (1.0 + eval.b / z).ln();
        let dl = (eval.ln_phi_liq[0] - scalar(eval.z_liq)).abs();
        let dv = (eval.ln_phi_vap[0] - scalar(eval.z_vap)).abs();
        ok &= dl < 1e-12 && dv < 1e-12;
        notes.push(format!("pure reduction gap {:.1e}", dl.max(dv)));
    }

    report("8 degenerate-identities", ok, &notes.join("; "), started);
}
