//! Isothermal (PT) flash: successive substitution on K around a bracketed
//! Newton solve of the Rachford-Rice equation for V.

use crate::components::ComponentSet;
use crate::eos;

use super::rachford_rice::{solve_rr, RrSolution};
use super::{normalized, wilson_k, DerivativeMode, FlashError, FlashResult, SolverConfig, TracePoint};

/// Flash a feed at fixed temperature and pressure.
///
/// The outer loop updates K from the fugacity-coefficient ratio at the
/// current phase compositions; the inner loop solves F(V) = 0 at fixed K.
/// When F(0) and F(1) share a sign the feed is single-phase: V is clamped to
/// the matching end, the result is marked, and the substitution continues on
/// the incipient composition of the absent phase so the reported K still
/// converges.
///
/// Iteration exhaustion yields a flagged (non-converged) result with its
/// full trace, not an error.
pub fn flash_pt(
    set: &ComponentSet,
    feed: &[f64],
    t: f64,
    p: f64,
    mode: DerivativeMode,
    config: &SolverConfig,
) -> Result<FlashResult, FlashError> {
    let z = normalized(feed);
    let mut k = wilson_k(set, t, p);
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut outer = 0;
    let mut converged = false;
    let mut solution: Option<RrSolution> = None;

    while outer < config.max_outer {
        outer += 1;
        let rr = solve_rr(&z, &k, mode, config)?;
        inner_total += rr.iterations;

        // property evaluations need normalized compositions; at an interior
        // root the raw split already closes, at a clamp the incipient phase
        // does not
        let xn = normalized(&rr.x);
        let yn = normalized(&rr.y);
        let k_new = eos::k_values(set, &t, &p, &xn, &yn)?;
        let change = k
            .iter()
            .zip(&k_new)
            .map(|(old, new)| ((new - old) / old).abs())
            .fold(0.0, f64::max);
        trace.push(TracePoint {
            iterate: rr.vapor_fraction,
            residual: change,
        });
        k = k_new;
        solution = Some(rr);
        if change < config.k_tolerance {
            converged = true;
            break;
        }
    }

    // re-split once at the converged K so the reported phases satisfy
    // y_i = K_i x_i exactly
    let rr = solve_rr(&z, &k, mode, config)?;
    inner_total += rr.iterations;
    let rr_converged = rr.converged;
    let single_phase = rr.single_phase;
    let (x, y) = if single_phase.is_some() {
        (normalized(&rr.x), normalized(&rr.y))
    } else {
        (rr.x, rr.y)
    };
    drop(solution);

    Ok(FlashResult {
        vapor_fraction: rr.vapor_fraction,
        x,
        y,
        temperature: t,
        k,
        inner_iters: inner_total,
        outer_iters: outer,
        residual_trace: trace,
        converged: converged && rr_converged,
        single_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flash::rachford_rice::SinglePhase;

    fn set() -> ComponentSet {
        ComponentSet::bundled()
    }

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn equimolar() -> Vec<f64> {
        vec![0.25; 4]
    }

    fn assert_balances(z: &[f64], r: &FlashResult) {
        let v = r.vapor_fraction;
        for i in 0..z.len() {
            let back = (1.0 - v) * r.x[i] + v * r.y[i];
            assert!(
                (z[i] - back).abs() < 1e-9,
                "material balance off for {i}: {} vs {}",
                z[i],
                back
            );
        }
        let sx: f64 = r.x.iter().sum();
        let sy: f64 = r.y.iter().sum();
        assert!((sx - 1.0).abs() < 1e-9, "sum x = {sx}");
        assert!((sy - 1.0).abs() < 1e-9, "sum y = {sy}");
        if r.single_phase.is_none() {
            for i in 0..z.len() {
                assert!((r.k[i] - r.y[i] / r.x[i]).abs() < 1e-9 * r.k[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn equimolar_250k_18bar_converges_two_phase() {
        let r = flash_pt(&set(), &equimolar(), 250.0, 1.8e6, DerivativeMode::Ad, &cfg()).unwrap();
        assert!(r.converged);
        assert!(r.single_phase.is_none(), "V = {}", r.vapor_fraction);
        assert!(r.vapor_fraction > 0.0 && r.vapor_fraction < 1.0);
        assert_balances(&equimolar(), &r);
        assert!(!r.residual_trace.is_empty());
        assert!(r.residual_trace.last().unwrap().residual < cfg().k_tolerance);
        // lighter components concentrate in the vapor
        assert!(r.y[0] > r.x[0]);
        assert!(r.y[3] < r.x[3]);
    }

    #[test]
    fn cold_feed_collapses_to_liquid_side() {
        let r = flash_pt(&set(), &equimolar(), 180.0, 1.8e6, DerivativeMode::Ad, &cfg()).unwrap();
        assert!(r.converged);
        // the objective curve at 180 K crosses near the left edge
        assert!(
            r.vapor_fraction < 0.1,
            "expected a liquid-dominated result, got V = {}",
            r.vapor_fraction
        );
        if r.single_phase.is_some() {
            assert_eq!(r.single_phase, Some(SinglePhase::Liquid));
            assert_eq!(r.vapor_fraction, 0.0);
        }
        assert_balances(&equimolar(), &r);
    }

    #[test]
    fn vapor_fraction_grows_with_temperature() {
        let r220 = flash_pt(&set(), &equimolar(), 220.0, 1.8e6, DerivativeMode::Ad, &cfg()).unwrap();
        let r260 = flash_pt(&set(), &equimolar(), 260.0, 1.8e6, DerivativeMode::Ad, &cfg()).unwrap();
        assert!(r220.converged && r260.converged);
        assert!(
            r260.vapor_fraction > r220.vapor_fraction,
            "V(260 K) = {} should exceed V(220 K) = {}",
            r260.vapor_fraction,
            r220.vapor_fraction
        );
    }

    #[test]
    fn hot_feed_collapses_to_vapor_side() {
        let r = flash_pt(&set(), &equimolar(), 320.0, 1.8e6, DerivativeMode::Ad, &cfg()).unwrap();
        assert!(r.converged);
        assert_eq!(r.vapor_fraction, 1.0);
        assert_eq!(r.single_phase, Some(SinglePhase::Vapor));
        assert_balances(&equimolar(), &r);
    }

    #[test]
    fn fd_mode_converges_to_the_same_state() {
        let ad = flash_pt(&set(), &equimolar(), 250.0, 1.8e6, DerivativeMode::Ad, &cfg()).unwrap();
        let fd = flash_pt(
            &set(),
            &equimolar(),
            250.0,
            1.8e6,
            DerivativeMode::Fd { step: 1e-6 },
            &cfg(),
        )
        .unwrap();
        assert!(fd.converged);
        assert!((ad.vapor_fraction - fd.vapor_fraction).abs() < 1e-6);
        for i in 0..4 {
            assert!((ad.x[i] - fd.x[i]).abs() < 1e-6);
        }
    }
}
