//! PT, PV and PH flash solvers on top of the SRK model.
//!
//! All three use the nested structure: an inner loop that makes the phase
//! compositions consistent with the current K-values, and an outer Newton
//! iteration on the specification variable (V for PT, T for PV and PH). The
//! Newton derivative comes either from a seeded dual evaluation (`Ad`) or
//! from a central difference at a caller-chosen step (`Fd`), which is the
//! comparison the experiments quantify.

mod ph;
mod pt;
mod pv;
pub mod rachford_rice;

pub use ph::flash_ph;
pub use pt::flash_pt;
pub use pv::flash_pv;
pub(crate) use pv::{inner_compositions as pv_inner_state_fn, objective_dt, InnerState as PvInnerState};
pub use rachford_rice::{
    phase_split, rr_residual, rr_residual_from_split, solve_rr, RrSolution, SinglePhase,
};

use crate::components::{ComponentSet, PropertyError};
use crate::dual::DualError;
use crate::eos::{self, EosError, Phase};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlashError {
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("vapor fraction infeasible: denominator {denominator} for component {index}")]
    InfeasibleVaporFraction { index: usize, denominator: f64 },
    #[error("no sign change of the objective inside [{lo}, {hi}] K")]
    NoBracket { lo: f64, hi: f64 },
    #[error("invalid flash specification: {0}")]
    InvalidSpec(String),
    #[error("inner PT flash failed at T = {t} K: {source}")]
    InnerFlash {
        t: f64,
        #[source]
        source: Box<FlashError>,
    },
    #[error("inner composition loop did not converge at T = {t} K")]
    InnerNotConverged { t: f64 },
    #[error("composition loop collapsed to the trivial solution (x = y) at T = {t} K")]
    TrivialInnerSolution { t: f64 },
}

/// How Newton derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DerivativeMode {
    Ad,
    Fd { step: f64 },
}

impl std::fmt::Display for DerivativeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DerivativeMode::Ad => write!(f, "ad"),
            DerivativeMode::Fd { step } => write!(f, "fd({step:e})"),
        }
    }
}

/// What the flash holds fixed besides pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FlashTarget {
    /// Temperature, K.
    Pt { temperature: f64 },
    /// Vapor fraction in [0, 1].
    Pv { vapor_fraction: f64 },
    /// Total molar enthalpy (feed enthalpy plus duty), J/mol.
    Ph { h_total: f64 },
}

/// A complete flash problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlashSpec {
    /// Feed mole fractions, normalized.
    pub feed: Vec<f64>,
    /// Pressure, Pa.
    pub pressure: f64,
    pub target: FlashTarget,
    #[serde(default = "default_mode")]
    pub mode: DerivativeMode,
}

fn default_mode() -> DerivativeMode {
    DerivativeMode::Ad
}

impl FlashSpec {
    pub fn validate(&self, set: &ComponentSet) -> Result<(), FlashError> {
        if self.feed.len() != set.len() {
            return Err(FlashError::InvalidSpec(format!(
                "feed has {} entries for {} components",
                self.feed.len(),
                set.len()
            )));
        }
        if self.feed.iter().any(|&z| !(z >= 0.0) || !z.is_finite()) {
            return Err(FlashError::InvalidSpec(format!(
                "feed fractions must be non-negative: {:?}",
                self.feed
            )));
        }
        let sum: f64 = self.feed.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(FlashError::InvalidSpec(format!(
                "feed fractions sum to {sum}; pass them normalized or use --normalize"
            )));
        }
        if !(self.pressure > 0.0 && self.pressure.is_finite()) {
            return Err(FlashError::InvalidSpec(format!(
                "pressure {} Pa",
                self.pressure
            )));
        }
        match self.target {
            FlashTarget::Pt { temperature } => {
                if !(temperature > 0.0 && temperature.is_finite()) {
                    return Err(FlashError::InvalidSpec(format!(
                        "temperature {temperature} K"
                    )));
                }
            }
            FlashTarget::Pv { vapor_fraction } => {
                if !(0.0..=1.0).contains(&vapor_fraction) {
                    return Err(FlashError::InvalidSpec(format!(
                        "vapor fraction {vapor_fraction} outside [0, 1]"
                    )));
                }
            }
            FlashTarget::Ph { h_total } => {
                if !h_total.is_finite() {
                    return Err(FlashError::InvalidSpec(format!("h_total {h_total}")));
                }
            }
        }
        if let DerivativeMode::Fd { step } = self.mode {
            if !(step > 0.0 && step.is_finite()) {
                return Err(FlashError::InvalidSpec(format!("fd step {step}")));
            }
        }
        Ok(())
    }
}

/// One record of an iteration trace: the iterate value (V or T depending on
/// the solver) and the absolute residual of the convergence equation there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iterate: f64,
    pub residual: f64,
}

/// Converged (or flagged) flash output.
#[derive(Debug, Clone, Serialize)]
pub struct FlashResult {
    pub vapor_fraction: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub temperature: f64,
    pub k: Vec<f64>,
    pub inner_iters: usize,
    pub outer_iters: usize,
    pub residual_trace: Vec<TracePoint>,
    pub converged: bool,
    /// Set when the feed collapsed to one phase and V was clamped to 0 or 1.
    pub single_phase: Option<SinglePhase>,
}

/// Solver knobs. The defaults are the reference configuration used by the
/// verification suite; the CLI exposes each of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Inner Rachford-Rice convergence: |F(V)| below this.
    pub rr_tolerance: f64,
    /// Outer successive-substitution convergence: max relative K change.
    pub k_tolerance: f64,
    /// PV Newton convergence: |F(T)| below this.
    pub pv_tolerance: f64,
    /// PH Newton convergence: |H_error| below this times max(1, |H_total|).
    pub ph_relative_tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Temperature bracket for PV and PH, K.
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rr_tolerance: 1e-10,
            k_tolerance: 1e-10,
            pv_tolerance: 1e-10,
            ph_relative_tolerance: 1e-6,
            max_outer: 100,
            max_inner: 200,
            t_min: 150.0,
            t_max: 400.0,
        }
    }
}

/// Phase compositions consistent with K at fixed (T, P, V), for derivative
/// studies that evaluate the PV objective without running its Newton loop.
pub(crate) fn pv_inner_state(
    set: &ComponentSet,
    z: &[f64],
    t: f64,
    p: f64,
    v: f64,
    config: &SolverConfig,
) -> Result<PvInnerState, FlashError> {
    pv_inner_state_fn(set, z, t, p, v, config)
}

/// dF/dT of the PV objective at a converged inner state, in either mode.
pub(crate) fn pv_objective_dt(
    set: &ComponentSet,
    z: &[f64],
    t: f64,
    p: f64,
    v: f64,
    state: &PvInnerState,
    mode: DerivativeMode,
) -> Result<f64, FlashError> {
    objective_dt(set, z, t, p, v, state, mode)
}

/// Validate a flash specification and dispatch to the matching solver.
/// `t_guess` optionally seeds the Newton iteration for the PV and PH kinds.
pub fn run(
    set: &ComponentSet,
    spec: &FlashSpec,
    t_guess: Option<f64>,
    config: &SolverConfig,
) -> Result<FlashResult, FlashError> {
    spec.validate(set)?;
    match spec.target {
        FlashTarget::Pt { temperature } => {
            flash_pt(set, &spec.feed, temperature, spec.pressure, spec.mode, config)
        }
        FlashTarget::Pv { vapor_fraction } => flash_pv(
            set,
            &spec.feed,
            spec.pressure,
            vapor_fraction,
            spec.mode,
            t_guess,
            config,
        ),
        FlashTarget::Ph { h_total } => flash_ph(
            set,
            &spec.feed,
            spec.pressure,
            h_total,
            spec.mode,
            t_guess,
            config,
        ),
    }
}

/// Temperature bracket of the PV objective for a feed, as found by the
/// solver's own coarse scan: the pair of consecutive evaluable temperatures
/// with a sign change of F(T).
pub fn pv_bracket(
    set: &ComponentSet,
    z: &[f64],
    p: f64,
    v: f64,
    config: &SolverConfig,
) -> Result<(f64, f64), FlashError> {
    let (((t_lo, _), (t_hi, _)), _) = pv::scan_bracket(set, z, p, v, config)?;
    Ok((t_lo, t_hi))
}

/// Converged inner phase compositions (x, y) at fixed (T, P, V).
/// Diagnostic surface for the experiment runners and tests.
pub fn probe_pv_inner(
    set: &ComponentSet,
    z: &[f64],
    t: f64,
    p: f64,
    v: f64,
    config: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>), FlashError> {
    let state = pv_inner_state_fn(set, z, t, p, v, config)?;
    Ok((state.x, state.y))
}

/// PV objective F(T) and the inner iteration count at one temperature.
/// Diagnostic surface for the experiment runners and tests.
pub fn probe_pv_objective(
    set: &ComponentSet,
    z: &[f64],
    t: f64,
    p: f64,
    v: f64,
    config: &SolverConfig,
) -> Result<(f64, usize), FlashError> {
    let state = pv_inner_state_fn(set, z, t, p, v, config)?;
    let f = rachford_rice::rr_residual(z, &state.k, &v)?;
    Ok((f, state.iterations))
}

/// Wilson correlation for the initial K estimate:
/// K_i = (Pc_i / P) exp(5.373 (1 + omega_i)(1 - Tc_i / T)).
pub fn wilson_k(set: &ComponentSet, t: f64, p: f64) -> Vec<f64> {
    set.components
        .iter()
        .map(|c| (c.pc / p) * (5.373 * (1.0 + c.omega) * (1.0 - c.tc / t)).exp())
        .collect()
}

pub(crate) fn normalized(v: &[f64]) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    v.iter().map(|x| x / sum).collect()
}

/// Molar enthalpy of one phase stream: ideal-gas mixture part plus the SRK
/// departure of the requested phase root at the stream's own composition.
pub fn stream_enthalpy<S: Scalar>(
    set: &ComponentSet,
    t: &S,
    p: &S,
    comp: &[S],
    phase: Phase,
) -> Result<S, FlashError> {
    let eval = eos::evaluate(set, t, p, comp)?;
    let mut h = eval.h_dep(phase).clone();
    for (c, frac) in set.components.iter().zip(comp) {
        h = h + frac.clone() * c.ideal_enthalpy(t)?;
    }
    Ok(h)
}

/// Total stream enthalpy of a converged flash: (1 - V) h_L(x) + V h_V(y).
pub fn result_enthalpy(set: &ComponentSet, result: &FlashResult, p: f64) -> Result<f64, FlashError> {
    mixture_enthalpy(
        set,
        &result.temperature,
        &p,
        &result.vapor_fraction,
        &result.x,
        &result.y,
    )
}

pub(crate) fn mixture_enthalpy<S: Scalar>(
    set: &ComponentSet,
    t: &S,
    p: &S,
    v: &S,
    x: &[S],
    y: &[S],
) -> Result<S, FlashError> {
    let vv = v.value();
    // skip the absent phase at a clamp so its root never gates the result
    if vv <= 0.0 {
        return stream_enthalpy(set, t, p, x, Phase::Liquid);
    }
    if vv >= 1.0 {
        return stream_enthalpy(set, t, p, y, Phase::Vapor);
    }
    let h_l = stream_enthalpy(set, t, p, x, Phase::Liquid)?;
    let h_v = stream_enthalpy(set, t, p, y, Phase::Vapor)?;
    Ok((S::constant(1.0) - v.clone()) * h_l + v.clone() * h_v)
}

/// Enthalpy of a feed brought to (T, P): runs a PT flash and evaluates the
/// two-phase stream enthalpy of whatever splits out. This is the H_mix used
/// to build a PH target from feed conditions and a duty.
pub fn feed_enthalpy(
    set: &ComponentSet,
    feed: &[f64],
    t: f64,
    p: f64,
    config: &SolverConfig,
) -> Result<f64, FlashError> {
    let result = flash_pt(set, feed, t, p, DerivativeMode::Ad, config)?;
    result_enthalpy(set, &result, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::ComponentSet;

    #[test]
    fn wilson_estimates_order_light_to_heavy() {
        let set = ComponentSet::bundled();
        let k = wilson_k(&set, 250.0, 1.8e6);
        assert!(k[0] > 1.0, "methane K = {}", k[0]);
        assert!(k[0] > k[1] && k[1] > k[3], "{k:?}");
    }

    #[test]
    fn run_dispatches_and_validates() {
        let set = ComponentSet::bundled();
        let cfg = SolverConfig::default();
        let mut spec = FlashSpec {
            feed: vec![0.25; 4],
            pressure: 1.8e6,
            target: FlashTarget::Pt { temperature: 250.0 },
            mode: DerivativeMode::Ad,
        };
        let r = run(&set, &spec, None, &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.temperature, 250.0);

        spec.target = FlashTarget::Pv { vapor_fraction: 0.7 };
        let r = run(&set, &spec, Some(260.0), &cfg).unwrap();
        assert!(r.converged);
        assert!((r.vapor_fraction - 0.7).abs() < 1e-12);

        spec.feed = vec![0.5; 4]; // does not sum to one
        assert!(matches!(
            run(&set, &spec, None, &cfg),
            Err(FlashError::InvalidSpec(_))
        ));
    }

    #[test]
    fn spec_validation_catches_bad_feeds() {
        let set = ComponentSet::bundled();
        let mut spec = FlashSpec {
            feed: vec![0.25; 4],
            pressure: 1.8e6,
            target: FlashTarget::Pt { temperature: 250.0 },
            mode: DerivativeMode::Ad,
        };
        assert!(spec.validate(&set).is_ok());
        spec.feed = vec![0.3, 0.3, 0.3];
        assert!(spec.validate(&set).is_err());
        spec.feed = vec![0.3, 0.3, 0.3, 0.3];
        assert!(matches!(
            spec.validate(&set),
            Err(FlashError::InvalidSpec(_))
        ));
        spec.feed = vec![0.25; 4];
        spec.target = FlashTarget::Pv { vapor_fraction: 1.2 };
        assert!(spec.validate(&set).is_err());
    }
}
