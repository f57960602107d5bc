//! Fixed vapor-fraction (PV) flash: Newton iteration on temperature.

use crate::components::ComponentSet;
use crate::dual::Dual;
use crate::eos;

use super::rachford_rice::{phase_split, rr_residual};
use super::{normalized, wilson_k, DerivativeMode, FlashError, FlashResult, SolverConfig, TracePoint};

/// Phase compositions consistent with the current K at fixed (T, V): plain
/// successive substitution from the Wilson estimate, so the objective F(T)
/// is a well-defined function of temperature alone.
pub(crate) struct InnerState {
    pub k: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
}

pub(crate) fn inner_compositions(
    set: &ComponentSet,
    z: &[f64],
    t: f64,
    p: f64,
    v: f64,
    config: &SolverConfig,
) -> Result<InnerState, FlashError> {
    let mut k = wilson_k(set, t, p);
    let mut iterations = 0;
    for _ in 0..config.max_outer {
        iterations += 1;
        let (x, y) = phase_split(z, &k, &v)?;
        let xn = normalized(&x);
        let yn = normalized(&y);
        let k_new = eos::k_values(set, &t, &p, &xn, &yn)?;
        // K collapsing onto 1 for every component means the substitution is
        // heading for the trivial x = y fixed point: the feed has no
        // two-phase split at this temperature, so the objective carries no
        // information here
        if k_new.iter().all(|ki| (ki - 1.0).abs() < 1e-6) {
            return Err(FlashError::TrivialInnerSolution { t });
        }
        let change = k
            .iter()
            .zip(&k_new)
            .map(|(old, new)| ((new - old) / old).abs())
            .fold(0.0, f64::max);
        k = k_new;
        if change < config.k_tolerance {
            return Ok(InnerState {
                k,
                x: xn,
                y: yn,
                iterations,
            });
        }
    }
    Err(FlashError::InnerNotConverged { t })
}

/// dF/dT through the K(T) dependency at frozen phase compositions.
///
/// `Ad` seeds T and propagates one dual through the fugacity stack and the
/// balance; `Fd` central-differences K at the given step and applies the
/// chain rule dF/dT = sum_i dF/dK_i * dK_i/dT with the exact
/// dF/dK_i = z_i / ((K_i - 1) V + 1)^2.
pub(crate) fn objective_dt(
    set: &ComponentSet,
    z: &[f64],
    t: f64,
    p: f64,
    v: f64,
    state: &InnerState,
    mode: DerivativeMode,
) -> Result<f64, FlashError> {
    match mode {
        DerivativeMode::Ad => {
            let t_d = Dual::seeded(t, 1, 0);
            let p_d = Dual::constant(p);
            let x_d: Vec<Dual> = state.x.iter().map(|&c| Dual::constant(c)).collect();
            let y_d: Vec<Dual> = state.y.iter().map(|&c| Dual::constant(c)).collect();
            let k_d = eos::k_values(set, &t_d, &p_d, &x_d, &y_d)?;
            let z_d: Vec<Dual> = z.iter().map(|&c| Dual::constant(c)).collect();
            let f_d = rr_residual(&z_d, &k_d, &Dual::constant(v))?;
            Ok(f_d.tangent(0))
        }
        DerivativeMode::Fd { step } => {
            let k_hi = eos::k_values(set, &(t + step), &p, &state.x, &state.y)?;
            let k_lo = eos::k_values(set, &(t - step), &p, &state.x, &state.y)?;
            let mut df = 0.0;
            for i in 0..z.len() {
                let dk = (k_hi[i] - k_lo[i]) / (2.0 * step);
                let denom = (state.k[i] - 1.0) * v + 1.0;
                df += z[i] / (denom * denom) * dk;
            }
            Ok(df)
        }
    }
}

/// Coarse scan of F(T) over the configured temperature window for a sign
/// change between consecutive evaluable points. Points where the inner loop
/// fails or collapses to the trivial solution are skipped and break the
/// adjacency. Returns the bracketing (T, F) pairs and the inner iteration
/// count spent scanning.
pub(crate) fn scan_bracket(
    set: &ComponentSet,
    z: &[f64],
    p: f64,
    v_target: f64,
    config: &SolverConfig,
) -> Result<(((f64, f64), (f64, f64)), usize), FlashError> {
    let n_scan = 26;
    let mut prev: Option<(f64, f64)> = None;
    let mut scan_inner = 0;
    for i in 0..n_scan {
        let t = config.t_min + (config.t_max - config.t_min) * i as f64 / (n_scan - 1) as f64;
        match inner_compositions(set, z, t, p, v_target, config)
            .and_then(|state| Ok((rr_residual(z, &state.k, &v_target)?, state)))
        {
            Ok((f, state)) => {
                scan_inner += state.iterations;
                if let Some((tp, fp)) = prev {
                    if fp * f <= 0.0 && fp != f {
                        return Ok((((tp, fp), (t, f)), scan_inner));
                    }
                }
                prev = Some((t, f));
            }
            Err(_) => {
                prev = None;
            }
        }
    }
    Err(FlashError::NoBracket {
        lo: config.t_min,
        hi: config.t_max,
    })
}

/// Find the temperature at which the feed flashes to the requested vapor
/// fraction. The objective F(T) is bracketed by a coarse scan over the
/// configured temperature window and then driven to |F| below tolerance by a
/// bisection-safeguarded Newton iteration.
pub fn flash_pv(
    set: &ComponentSet,
    feed: &[f64],
    p: f64,
    v_target: f64,
    mode: DerivativeMode,
    t_guess: Option<f64>,
    config: &SolverConfig,
) -> Result<FlashResult, FlashError> {
    if !(0.0..=1.0).contains(&v_target) {
        return Err(FlashError::InvalidSpec(format!(
            "vapor fraction {v_target} outside [0, 1]"
        )));
    }
    let z = normalized(feed);

    let objective = |t: f64| -> Result<(f64, InnerState), FlashError> {
        let state = inner_compositions(set, &z, t, p, v_target, config)?;
        let f = rr_residual(&z, &state.k, &v_target)?;
        Ok((f, state))
    };

    let (((t_lo, f_lo), (t_hi, f_hi)), scan_inner) = scan_bracket(set, &z, p, v_target, config)?;

    let (mut lo, mut f_sign_lo) = (t_lo, f_lo.signum());
    let mut hi = t_hi;
    debug_assert!(f_lo.signum() != f_hi.signum() || f_lo == 0.0 || f_hi == 0.0);

    let mut t = match t_guess {
        Some(g) if g > lo && g < hi => g,
        _ => 0.5 * (lo + hi),
    };
    let mut trace = Vec::new();
    let mut inner_total = scan_inner;
    let mut outer = 0;
    let mut converged = false;
    let mut last_state: Option<InnerState> = None;

    while outer < config.max_outer {
        outer += 1;
        let (f, state) = objective(t)?;
        inner_total += state.iterations;
        trace.push(TracePoint {
            iterate: t,
            residual: f.abs(),
        });
        if f.abs() < config.pv_tolerance {
            last_state = Some(state);
            converged = true;
            break;
        }
        if f.signum() == f_sign_lo {
            lo = t;
        } else {
            hi = t;
        }
        let df = objective_dt(set, &z, t, p, v_target, &state, mode)?;
        last_state = Some(state);
        let newton = t - f / df;
        t = if df.abs() < 1e-14 || !newton.is_finite() || newton <= lo || newton >= hi {
            0.5 * (lo + hi)
        } else {
            newton
        };
        // keep the sign bookkeeping consistent if the bracket inverted
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
            f_sign_lo = -f_sign_lo;
        }
    }

    let state = last_state.expect("at least one objective evaluation");
    // report the raw split at the converged K; at F = 0 it closes to 1
    let (x, y) = phase_split(&z, &state.k, &v_target)?;
    Ok(FlashResult {
        vapor_fraction: v_target,
        x,
        y,
        temperature: t,
        k: state.k,
        inner_iters: inner_total,
        outer_iters: outer,
        residual_trace: trace,
        converged,
        single_phase: None,
    })
}
