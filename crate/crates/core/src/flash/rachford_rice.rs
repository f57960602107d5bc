//! Phase split and the Rachford-Rice balance.

use crate::dual::Dual;
use crate::scalar::Scalar;

use super::{DerivativeMode, FlashError, SolverConfig, TracePoint};

/// Split a feed into liquid and vapor compositions at vapor fraction `v`:
/// x_i = z_i / ((K_i - 1) V + 1), y_i = K_i x_i.
///
/// Requires every denominator to be strictly positive (feasible `v`).
pub fn phase_split<S: Scalar>(
    z: &[S],
    k: &[S],
    v: &S,
) -> Result<(Vec<S>, Vec<S>), FlashError> {
    let mut x = Vec::with_capacity(z.len());
    let mut y = Vec::with_capacity(z.len());
    for (i, (zi, ki)) in z.iter().zip(k).enumerate() {
        let denom = (ki.clone() - S::constant(1.0)) * v.clone() + S::constant(1.0);
        if denom.value() <= 0.0 {
            return Err(FlashError::InfeasibleVaporFraction {
                index: i,
                denominator: denom.value(),
            });
        }
        let xi = zi.clone() / denom;
        let yi = ki.clone() * xi.clone();
        x.push(xi);
        y.push(yi);
    }
    Ok((x, y))
}

/// Rachford-Rice residual F(V) = sum_i z_i (K_i - 1) / ((K_i - 1) V + 1).
pub fn rr_residual<S: Scalar>(z: &[S], k: &[S], v: &S) -> Result<S, FlashError> {
    let mut f = S::constant(0.0);
    for (i, (zi, ki)) in z.iter().zip(k).enumerate() {
        let km1 = ki.clone() - S::constant(1.0);
        let denom = km1.clone() * v.clone() + S::constant(1.0);
        if denom.value() <= 0.0 {
            return Err(FlashError::InfeasibleVaporFraction {
                index: i,
                denominator: denom.value(),
            });
        }
        f = f + zi.clone() * km1 / denom;
    }
    Ok(f)
}

/// The same balance written as sum_i (y_i - x_i) over the phase split;
/// algebraically identical to [`rr_residual`], kept as the cross-check form.
pub fn rr_residual_from_split<S: Scalar>(z: &[S], k: &[S], v: &S) -> Result<S, FlashError> {
    let (x, y) = phase_split(z, k, v)?;
    let mut f = S::constant(0.0);
    for (xi, yi) in x.iter().zip(&y) {
        f = f + (yi.clone() - xi.clone());
    }
    Ok(f)
}

/// dF/dV at fixed K, either exactly through a seeded dual or by a central
/// difference with the given step.
pub fn rr_dv(z: &[f64], k: &[f64], v: f64, mode: DerivativeMode) -> Result<f64, FlashError> {
    match mode {
        DerivativeMode::Ad => {
            let zd: Vec<Dual> = z.iter().map(|&c| Dual::constant(c)).collect();
            let kd: Vec<Dual> = k.iter().map(|&c| Dual::constant(c)).collect();
            let f = rr_residual(&zd, &kd, &Dual::seeded(v, 1, 0))?;
            Ok(f.tangent(0))
        }
        DerivativeMode::Fd { step } => {
            let lo = rr_residual(z, k, &(v - step))?;
            let hi = rr_residual(z, k, &(v + step))?;
            Ok((hi - lo) / (2.0 * step))
        }
    }
}

/// Which side a single-phase feed collapsed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SinglePhase {
    Liquid,
    Vapor,
}

/// Converged inner solve of F(V) = 0 at fixed K.
#[derive(Debug, Clone)]
pub struct RrSolution {
    pub vapor_fraction: f64,
    /// Raw split at the solution; sums to one only at a true interior root.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
    pub converged: bool,
    pub single_phase: Option<SinglePhase>,
}

/// Solve the Rachford-Rice equation for V at fixed K with a bracketed Newton
/// iteration. When F(0) and F(1) share a sign there is no interior root and
/// the result is clamped to the matching end with a single-phase marker.
pub fn solve_rr(
    z: &[f64],
    k: &[f64],
    mode: DerivativeMode,
    config: &SolverConfig,
) -> Result<RrSolution, FlashError> {
    let f0 = rr_residual(z, k, &0.0)?;
    let f1 = rr_residual(z, k, &1.0)?;

    let clamp = |v: f64, single: Option<SinglePhase>, residual: f64| {
        let (x, y) = phase_split(z, k, &v)?;
        Ok(RrSolution {
            vapor_fraction: v,
            x,
            y,
            iterations: 0,
            trace: vec![TracePoint {
                iterate: v,
                residual,
            }],
            converged: true,
            single_phase: single,
        })
    };

    // F is strictly decreasing in V for K not identically 1, so the signs at
    // the ends classify the feed.
    if f0 <= 0.0 {
        let marker = if f0 < 0.0 {
            Some(SinglePhase::Liquid)
        } else {
            None
        };
        return clamp(0.0, marker, f0.abs());
    }
    if f1 >= 0.0 {
        let marker = if f1 > 0.0 {
            Some(SinglePhase::Vapor)
        } else {
            None
        };
        return clamp(1.0, marker, f1.abs());
    }

    let mut lo = 0.0; // F(lo) > 0
    let mut hi = 1.0; // F(hi) < 0
    let mut v = 0.5;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_inner {
        iterations += 1;
        let f = rr_residual(z, k, &v)?;
        trace.push(TracePoint {
            iterate: v,
            residual: f.abs(),
        });
        if f.abs() < config.rr_tolerance {
            converged = true;
            break;
        }
        if f > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let dfdv = rr_dv(z, k, v, mode)?;
        let newton = v - f / dfdv;
        v = if dfdv.abs() < 1e-14 || !newton.is_finite() || newton <= lo || newton >= hi {
            0.5 * (lo + hi)
        } else {
            newton
        };
    }

    let (x, y) = phase_split(z, k, &v)?;
    Ok(RrSolution {
        vapor_fraction: v,
        x,
        y,
        iterations,
        trace,
        converged,
        single_phase: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    /// Plain bisection on the residual, independent of the Newton path.
    fn bisect_rr(z: &[f64], k: &[f64]) -> f64 {
        let f = |v: f64| rr_residual(z, k, &v).unwrap();
        let (mut lo, mut hi) = (0.0, 1.0);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn unit_k_gives_identical_phases_and_zero_residual() {
        let z = [0.3, 0.45, 0.25];
        let k = [1.0; 3];
        for v in [0.0, 0.3, 0.99] {
            let (x, y) = phase_split(&z, &k, &v).unwrap();
            assert_eq!(x, z.to_vec());
            assert_eq!(y, z.to_vec());
            assert_eq!(rr_residual(&z, &k, &v).unwrap(), 0.0);
        }
    }

    #[test]
    fn split_at_the_endpoints() {
        let z = [0.4, 0.6];
        let k = [2.0, 0.5];
        let (x, y) = phase_split(&z, &k, &0.0).unwrap();
        assert_eq!(x, z.to_vec());
        assert_eq!(y, vec![0.8, 0.3]);

        let (x, y) = phase_split(&z, &k, &1.0).unwrap();
        assert_eq!(x, vec![0.2, 1.2]);
        assert_eq!(y, z.to_vec());
    }

    #[test]
    fn y_equals_k_times_x_exactly() {
        let z = [0.2, 0.5, 0.3];
        let k = [3.0, 0.9, 0.2];
        let (x, y) = phase_split(&z, &k, &0.41).unwrap();
        for i in 0..3 {
            assert_eq!(y[i], k[i] * x[i]);
        }
    }

    #[test]
    fn infeasible_vapor_fraction_reports_the_offending_index() {
        let z = [0.5, 0.5];
        let k = [5.0, 0.1];
        let err = phase_split(&z, &k, &1.2).unwrap_err();
        match err {
            FlashError::InfeasibleVaporFraction { index, denominator } => {
                assert_eq!(index, 1);
                assert!(denominator <= 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn symmetric_k_pair_roots_at_one_half() {
        let z = [0.5, 0.5];
        let k = [2.0, 0.5];
        let f = rr_residual(&z, &k, &0.5).unwrap();
        assert!(f.abs() < 1e-15);
    }

    #[test]
    fn residual_forms_agree() {
        let z = [0.4, 0.35, 0.25];
        let k = [2.3, 1.1, 0.4];
        for v in [0.05, 0.3, 0.62, 0.97] {
            let a = rr_residual(&z, &k, &v).unwrap();
            let b = rr_residual_from_split(&z, &k, &v).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b} at V={v}");
        }
    }

    #[test]
    fn dew_form_at_v_equal_one() {
        let z = [0.4, 0.6];
        let k = [3.0, 0.4];
        let f = rr_residual(&z, &k, &1.0).unwrap();
        let dew: f64 = z
            .iter()
            .zip(&k)
            .map(|(zi, ki)| zi * (ki - 1.0) / ki)
            .sum();
        assert!((f - dew).abs() < 1e-14);
    }

    #[test]
    fn newton_matches_bisection_oracle() {
        let z = [0.4, 0.6];
        let k = [3.0, 0.4];
        let oracle = bisect_rr(&z, &k);
        assert!(rr_residual(&z, &k, &oracle).unwrap().abs() < 1e-12);

        let sol = solve_rr(&z, &k, DerivativeMode::Ad, &cfg()).unwrap();
        assert!(sol.converged);
        assert!(sol.single_phase.is_none());
        assert!(
            (sol.vapor_fraction - oracle).abs() < 1e-9,
            "newton {} vs bisection {}",
            sol.vapor_fraction,
            oracle
        );
        assert!(sol.trace.last().unwrap().residual < cfg().rr_tolerance);
    }

    #[test]
    fn four_component_fixed_k_matches_oracle() {
        let z = [0.25; 4];
        let k = [2.0, 0.5, 1.5, 0.8];
        let oracle = bisect_rr(&z, &k);
        let sol = solve_rr(&z, &k, DerivativeMode::Ad, &cfg()).unwrap();
        assert!((sol.vapor_fraction - oracle).abs() < 1e-9);
        // converged split closes the mole-fraction sums
        let sx: f64 = sol.x.iter().sum();
        let sy: f64 = sol.y.iter().sum();
        assert!((sx - 1.0).abs() < 1e-9 && (sy - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_phase_feeds_clamp_with_markers() {
        let z = [0.5, 0.5];
        // all K below 1: liquid
        let sol = solve_rr(&z, &[0.6, 0.8], DerivativeMode::Ad, &cfg()).unwrap();
        assert_eq!(sol.vapor_fraction, 0.0);
        assert_eq!(sol.single_phase, Some(SinglePhase::Liquid));
        assert!(sol.converged);
        // all K above 1: vapor
        let sol = solve_rr(&z, &[1.4, 2.2], DerivativeMode::Ad, &cfg()).unwrap();
        assert_eq!(sol.vapor_fraction, 1.0);
        assert_eq!(sol.single_phase, Some(SinglePhase::Vapor));
    }

    #[test]
    fn fd_mode_solves_too() {
        let z = [0.25; 4];
        let k = [2.0, 0.5, 1.5, 0.8];
        let ad = solve_rr(&z, &k, DerivativeMode::Ad, &cfg()).unwrap();
        let fd = solve_rr(&z, &k, DerivativeMode::Fd { step: 1e-6 }, &cfg()).unwrap();
        assert!(fd.converged);
        assert!((ad.vapor_fraction - fd.vapor_fraction).abs() < 1e-8);
    }

    #[test]
    fn residual_is_strictly_decreasing_in_v() {
        let z = [0.25; 4];
        let k = [2.0, 0.5, 1.5, 0.8];
        for i in 0..20 {
            let v = (i as f64 + 0.5) / 20.0;
            let d = rr_dv(&z, &k, v, DerivativeMode::Ad).unwrap();
            assert!(d < 0.0, "dF/dV = {d} at V = {v}");
        }
    }
}
