//! Finite-difference derivative baseline.
//!
//! These are the comparison schemes the experiments measure against the
//! dual-number derivatives: first-order forward and second-order central
//! quotients at caller-chosen steps. The step is never auto-selected;
//! exposing it is the point of the comparison.
//!
//! [`richardson_reference`] is a test oracle, not a comparison scheme: it
//! extrapolates central differences across halved steps until the estimate
//! stabilizes, and reports its own error estimate so callers can skip points
//! where the extrapolation did not converge instead of asserting against a
//! bad reference.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdKind {
    Forward,
    Central,
}

/// A finite-difference scheme: kind plus step in the perturbed variable's
/// native unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScheme {
    pub kind: FdKind,
    pub step: f64,
}

impl FdScheme {
    pub fn new(kind: FdKind, step: f64) -> Result<Self, FdError<std::convert::Infallible>> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(FdError::InvalidStep { step });
        }
        Ok(FdScheme { kind, step })
    }

    pub fn forward(step: f64) -> Self {
        FdScheme {
            kind: FdKind::Forward,
            step,
        }
    }

    pub fn central(step: f64) -> Self {
        FdScheme {
            kind: FdKind::Central,
            step,
        }
    }
}

#[derive(Debug, Error)]
pub enum FdError<E: std::fmt::Display> {
    #[error("step {step} is not a positive finite number")]
    InvalidStep { step: f64 },
    #[error("function evaluation failed at perturbed point {x}: {source}")]
    Eval { x: f64, source: E },
    #[error("Richardson extrapolation did not converge (best error estimate {error_estimate})")]
    OracleUnreliable { value: f64, error_estimate: f64 },
}

/// Forward or central difference quotient of `f` at `x`.
pub fn fd_derivative<F, E>(mut f: F, x: f64, scheme: FdScheme) -> Result<f64, FdError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: std::fmt::Display,
{
    if !(scheme.step > 0.0 && scheme.step.is_finite()) {
        return Err(FdError::InvalidStep { step: scheme.step });
    }
    let mut eval = |xp: f64| f(xp).map_err(|source| FdError::Eval { x: xp, source });
    let h = scheme.step;
    match scheme.kind {
        FdKind::Forward => Ok((eval(x + h)? - eval(x)?) / h),
        FdKind::Central => Ok((eval(x + h)? - eval(x - h)?) / (2.0 * h)),
    }
}

/// One row of a step sweep. Failed evaluations are recorded, not raised.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub step: f64,
    pub derivative: Option<f64>,
    /// |derivative - ad_reference|, absent when the row failed.
    pub deviation: Option<f64>,
    pub error: Option<String>,
}

/// Evaluate the central difference at every requested step and record the
/// absolute deviation from the supplied dual-number reference. Rows preserve
/// the input step order.
pub fn step_sweep<F, E>(mut f: F, x: f64, steps: &[f64], ad_reference: f64) -> Vec<SweepRow>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: std::fmt::Display,
{
    steps
        .iter()
        .map(|&step| match fd_derivative(&mut f, x, FdScheme::central(step)) {
            Ok(derivative) => SweepRow {
                step,
                derivative: Some(derivative),
                deviation: Some((derivative - ad_reference).abs()),
                error: None,
            },
            Err(e) => SweepRow {
                step,
                derivative: None,
                deviation: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// A converged Richardson estimate with the spread of its last two levels.
#[derive(Debug, Clone, Copy)]
pub struct RichardsonEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// Central differences at h, h/2, h/4, ... combined as (4 D(h/2) - D(h)) / 3,
/// iterated until the extrapolated values stabilize. Returns the estimate at
/// the finest stable level. If the level-to-level error grows from the start
/// the point is reported unreliable so callers can skip it.
pub fn richardson_reference<F, E>(mut f: F, x: f64) -> Result<RichardsonEstimate, FdError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: std::fmt::Display,
{
    let scale = x.abs().max(1.0);
    let mut eval = |xp: f64| f(xp).map_err(|source| FdError::Eval { x: xp, source });
    let mut central = |h: f64| -> Result<f64, FdError<E>> {
        Ok((eval(x + h)? - eval(x - h)?) / (2.0 * h))
    };

    let mut h = 1e-2 * scale;
    let min_h = 1e-8 * scale;
    let mut d_prev = central(h)?;
    let mut extrap_prev: Option<f64> = None;
    let mut best: Option<RichardsonEstimate> = None;
    let mut first_err: Option<f64> = None;
    let mut growth_streak = 0;

    while h * 0.5 >= min_h {
        let d_next = central(h * 0.5)?;
        let extrap = (4.0 * d_next - d_prev) / 3.0;
        if let Some(prev) = extrap_prev {
            let err = (extrap - prev).abs();
            if first_err.is_none() {
                first_err = Some(err);
            }
            let improved = best.map_or(true, |b| err < b.error_estimate);
            if improved {
                best = Some(RichardsonEstimate {
                    value: extrap,
                    error_estimate: err,
                });
                growth_streak = 0;
            } else {
                growth_streak += 1;
                if growth_streak >= 3 {
                    break;
                }
            }
            if err <= 1e-13 * extrap.abs().max(1.0) {
                break;
            }
        }
        extrap_prev = Some(extrap);
        d_prev = d_next;
        h *= 0.5;
    }

    let best = best.ok_or(FdError::OracleUnreliable {
        value: d_prev,
        error_estimate: f64::INFINITY,
    })?;
    // never improved on the coarsest comparison and never reached the
    // rounding floor either: the extrapolation diverged
    let at_floor = best.error_estimate <= 1e-9 * best.value.abs().max(1.0);
    if let Some(fe) = first_err {
        if best.error_estimate >= fe && fe > 0.0 && !at_floor {
            return Err(FdError::OracleUnreliable {
                value: best.value,
                error_estimate: best.error_estimate,
            });
        }
    }
    Ok(best)
}
