//! Fixed-enthalpy (PH) flash: outer Newton on temperature around an inner
//! PT flash.

use crate::components::ComponentSet;
use crate::dual::Dual;
use crate::eos;

use super::rachford_rice::{phase_split, rr_residual};
use super::{
    flash_pt, mixture_enthalpy, DerivativeMode, FlashError, FlashResult, SolverConfig, TracePoint,
};

struct InnerPt {
    result: FlashResult,
    h_out: f64,
}

fn inner_pt(
    set: &ComponentSet,
    z: &[f64],
    t: f64,
    p: f64,
    config: &SolverConfig,
) -> Result<InnerPt, FlashError> {
    let result = flash_pt(set, z, t, p, DerivativeMode::Ad, config).map_err(|e| {
        FlashError::InnerFlash {
            t,
            source: Box::new(e),
        }
    })?;
    if !result.converged {
        return Err(FlashError::InnerNotConverged { t });
    }
    let h_out = mixture_enthalpy(
        set,
        &t,
        &p,
        &result.vapor_fraction,
        &result.x,
        &result.y,
    )?;
    Ok(InnerPt { result, h_out })
}

/// dH_out/dT by dual re-evaluation at the converged inner state.
///
/// The inner PT solve is a fixed point in (K, V, x, y); instead of
/// differentiating its iterations, the residual map is re-evaluated at the
/// converged point with T seeded, applying the implicit-function correction
/// dV/dT = -(dF/dT)/(dF/dV). Because K depends on the compositions, which
/// themselves carry tangents, the sweep is repeated until the tangents reach
/// their own fixed point (the primal values never move); this makes the
/// derivative the exact total derivative of the converged solution, the same
/// quantity a central difference over full re-solves approaches.
fn enthalpy_dt(
    set: &ComponentSet,
    z: &[f64],
    t: f64,
    p: f64,
    inner: &FlashResult,
    config: &SolverConfig,
) -> Result<f64, FlashError> {
    let t_d = Dual::seeded(t, 1, 0);
    let p_d = Dual::constant(p);
    let x_c: Vec<Dual> = inner.x.iter().map(|&c| Dual::constant(c)).collect();
    let y_c: Vec<Dual> = inner.y.iter().map(|&c| Dual::constant(c)).collect();
    let z_c: Vec<Dual> = z.iter().map(|&c| Dual::constant(c)).collect();

    let v = inner.vapor_fraction;
    if inner.single_phase.is_some() || v <= 0.0 || v >= 1.0 {
        // one phase present: compositions and V are locally constant in T
        let v_d = Dual::constant(v);
        let h = mixture_enthalpy(set, &t_d, &p_d, &v_d, &x_c, &y_c)?;
        return Ok(h.tangent(0));
    }

    let normalize = |comp: &[Dual]| -> Vec<Dual> {
        let mut total = Dual::constant(0.0);
        for c in comp {
            total = total + c.clone();
        }
        comp.iter().map(|c| c.clone() / total.clone()).collect()
    };

    // tangent sweep: dK carries zero tangents initially and converges with
    // the same contraction rate as the substitution loop itself
    let mut x_d = x_c;
    let mut y_d = y_c;
    let mut v_d = Dual::constant(v);
    let mut prev_tangents: Option<Vec<f64>> = None;
    for _ in 0..config.max_outer {
        let k_d = eos::k_values(set, &t_d, &p_d, &x_d, &y_d)?;
        // implicit correction: dF = sum_i dF/dK_i dK_i + dF/dV dV = 0
        let f_t = rr_residual(&z_c, &k_d, &Dual::constant(v))?.tangent(0);
        let k_primal: Vec<f64> = k_d.iter().map(|k| k.value()).collect();
        let f_v = super::rachford_rice::rr_dv(z, &k_primal, v, DerivativeMode::Ad)?;
        let dv_dt = if f_v.abs() < 1e-14 { 0.0 } else { -f_t / f_v };
        v_d = Dual::from_parts(v, &[dv_dt]);
        let (x_raw, y_raw) = phase_split(&z_c, &k_d, &v_d)?;
        x_d = normalize(&x_raw);
        y_d = normalize(&y_raw);

        let tangents: Vec<f64> = k_d.iter().map(|k| k.tangent(0)).collect();
        if let Some(prev) = &prev_tangents {
            let scale = tangents.iter().fold(1e-30f64, |m, t| m.max(t.abs()));
            let change = tangents
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if change <= 1e-12 * scale.max(1.0) {
                break;
            }
        }
        prev_tangents = Some(tangents);
    }

    let h = mixture_enthalpy(set, &t_d, &p_d, &v_d, &x_d, &y_d)?;
    Ok(h.tangent(0))
}

/// Flash a feed to a total enthalpy target at fixed pressure.
///
/// H_error(T) = h_total - H_out(T) with H_out from the inner PT flash; the
/// outer Newton updates T with dH_error/dT from either the dual evaluation
/// above (`Ad`) or a central difference that re-solves the inner flash at
/// T +/- step (`Fd`). Steps leaving the bracket fall back to bisection;
/// exhaustion returns a flagged result with the trace.
pub fn flash_ph(
    set: &ComponentSet,
    feed: &[f64],
    p: f64,
    h_total: f64,
    mode: DerivativeMode,
    t_guess: Option<f64>,
    config: &SolverConfig,
) -> Result<FlashResult, FlashError> {
    let z = super::normalized(feed);
    let tol = config.ph_relative_tolerance * h_total.abs().max(1.0);

    let mut lo = config.t_min;
    let mut hi = config.t_max;
    let mut t = match t_guess {
        Some(g) if g > lo && g < hi => g,
        _ => 0.5 * (lo + hi),
    };

    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut outer = 0;
    let mut converged = false;
    let mut last: Option<InnerPt> = None;

    while outer < config.max_outer {
        outer += 1;
        let inner = inner_pt(set, &z, t, p, config)?;
        inner_total += inner.result.outer_iters;
        let h_err = h_total - inner.h_out;
        trace.push(TracePoint {
            iterate: t,
            residual: h_err.abs(),
        });
        if h_err.abs() < tol {
            last = Some(inner);
            converged = true;
            break;
        }
        // H_out grows with T, so the sign of the error brackets the root
        if h_err > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }

        let dh_dt = match mode {
            DerivativeMode::Ad => enthalpy_dt(set, &z, t, p, &inner.result, config)?,
            DerivativeMode::Fd { step } => {
                let probe = |tp: f64| -> Result<f64, FlashError> {
                    let i = inner_pt(set, &z, tp, p, config)?;
                    Ok(i.h_out)
                };
                match (probe(t + step), probe(t - step)) {
                    (Ok(h_hi), Ok(h_lo)) => {
                        inner_total += 2; // bookkeeping for the extra solves
                        (h_hi - h_lo) / (2.0 * step)
                    }
                    // a failed probe degrades the step to bisection
                    _ => f64::NAN,
                }
            }
        };
        last = Some(inner);

        // Newton on H_error: T_new = T - H_error / d(H_error)/dT, with
        // d(H_error)/dT = -dH_out/dT
        let newton = t + h_err / dh_dt;
        t = if !newton.is_finite() || dh_dt.abs() < 1e-14 || newton <= lo || newton >= hi {
            0.5 * (lo + hi)
        } else {
            newton
        };
        if hi - lo < 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }

    let inner = match last {
        Some(i) => i,
        None => inner_pt(set, &z, t, p, config)?,
    };
    let r = inner.result;
    Ok(FlashResult {
        vapor_fraction: r.vapor_fraction,
        x: r.x,
        y: r.y,
        temperature: r.temperature,
        k: r.k,
        inner_iters: inner_total,
        outer_iters: outer,
        residual_trace: trace,
        converged,
        single_phase: r.single_phase,
    })
}
