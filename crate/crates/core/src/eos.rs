//! Soave-Redlich-Kwong equation of state, generic over the scalar carrier.
//!
//! Every function here is written against [`Scalar`], so the same code path
//! produces plain values (`f64`) or values with exact derivatives ([`Dual`]).
//! The cubic in the compressibility factor is solved in closed form with
//! Shengjin's discriminant method: the case split happens on primal values,
//! and derivatives flow through the selected closed-form expression, which is
//! what makes the root selection differentiable.
//!
//! Conventions: temperature in K, pressure in Pa, molar volume parameters in
//! SI (`a` in Pa m^6/mol^2, `b` in m^3/mol), enthalpies in J/mol.

use crate::components::{BinarySet, Component, ComponentSet, R};
use crate::dual::{Dual, DualError};
use crate::scalar::Scalar;
use smallvec::SmallVec;
use thiserror::Error;

/// Attraction coefficient. Note: the conventional SRK value is 0.42748;
/// this implementation deliberately uses 0.42728 (a 5e-4 relative
/// difference) to match its reference formulation.
pub const ATTRACTION_COEFF: f64 = 0.42728;

/// Co-volume coefficient.
pub const COVOLUME_COEFF: f64 = 0.08664;

#[derive(Debug, Error)]
pub enum EosError {
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("no cubic root exceeds the co-volume bound B = {b}")]
    NoPhysicalRoot { b: f64 },
    #[error("non-finite value produced in `{0}`")]
    NonFinite(&'static str),
}

/// One thermodynamic query point: temperature, pressure and a normalized
/// mole-fraction vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    pub t: f64,
    pub p: f64,
    pub z: Vec<f64>,
}

impl MixtureState {
    pub fn new(t: f64, p: f64, z: Vec<f64>) -> Result<Self, EosError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(EosError::InvalidState(format!("temperature {t} K")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(EosError::InvalidState(format!("pressure {p} Pa")));
        }
        if z.is_empty() || z.iter().any(|&zi| !(zi >= 0.0) || !zi.is_finite()) {
            return Err(EosError::InvalidState(format!("mole fractions {z:?}")));
        }
        let sum: f64 = z.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(EosError::InvalidState(format!(
                "mole fractions sum to {sum}, not 1"
            )));
        }
        Ok(MixtureState { t, p, z })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Liquid,
    Vapor,
}

/// Number of physical compressibility roots at a state. `One` means the
/// liquid and vapor roots coincide (degenerate single-phase evaluation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootCount {
    One,
    Three,
}

/// kappa(omega) = 0.48 + 1.574 omega - 0.176 omega^2.
pub fn kappa<S: Scalar>(omega: &S) -> S {
    S::constant(0.48) + S::constant(1.574) * omega.clone()
        - S::constant(0.176) * omega.clone() * omega.clone()
}

/// alpha(Tr) = (1 + kappa (1 - sqrt(Tr)))^2.
pub fn alpha<S: Scalar>(tr: &S, kappa: &S) -> Result<S, EosError> {
    let s = alpha_sqrt(tr, kappa)?;
    Ok(s.clone() * s)
}

/// The signed square root of alpha, 1 + kappa (1 - sqrt(Tr)).
fn alpha_sqrt<S: Scalar>(tr: &S, kappa: &S) -> Result<S, EosError> {
    Ok(S::constant(1.0) + kappa.clone() * (S::constant(1.0) - tr.sqrt()?))
}

/// Pure-component SRK parameters at temperature `t`:
/// a_i = 0.42728 R^2 Tc^2 / Pc * alpha(T/Tc), b_i = 0.08664 R Tc / Pc.
pub fn pure_ab<S: Scalar>(c: &Component, t: &S) -> Result<(S, S), EosError> {
    let a_c = ATTRACTION_COEFF * R * R * c.tc * c.tc / c.pc;
    let b = COVOLUME_COEFF * R * c.tc / c.pc;
    let tr = t.clone() / S::constant(c.tc);
    let k = kappa(&S::constant(c.omega));
    let a = S::constant(a_c) * alpha(&tr, &k)?;
    Ok((a, S::constant(b)))
}

/// Exact temperature derivative of the pure-component attraction parameter:
/// da_i/dT = -a_c kappa (1 + kappa (1 - sqrt(Tr))) / sqrt(T Tc).
///
/// This is the closed-form derivative of [`pure_ab`]'s `a`; a test pins it
/// against differentiating `pure_ab` with a seeded dual.
pub fn pure_a_dt<S: Scalar>(c: &Component, t: &S) -> Result<S, EosError> {
    let a_c = ATTRACTION_COEFF * R * R * c.tc * c.tc / c.pc;
    let tr = t.clone() / S::constant(c.tc);
    let k = kappa(&S::constant(c.omega));
    let s = alpha_sqrt(&tr, &k)?;
    let denom = (t.clone() * S::constant(c.tc)).sqrt()?;
    Ok(-(S::constant(a_c) * k * s) / denom)
}

/// Van der Waals one-fluid mixing rules:
/// a_m = sum_i sum_j y_i y_j sqrt(a_i a_j) (1 - k_ij), b_m = sum_i y_i b_i.
pub fn mix<S: Scalar>(
    a_pure: &[S],
    b_pure: &[S],
    y: &[S],
    k: &BinarySet,
) -> Result<(S, S), EosError> {
    let n = a_pure.len();
    assert_eq!(n, b_pure.len());
    assert_eq!(n, y.len());
    let sqrt_a: Vec<S> = a_pure
        .iter()
        .map(|a| a.sqrt())
        .collect::<Result<_, _>>()?;
    let mut a_m = S::constant(0.0);
    for i in 0..n {
        for j in 0..n {
            let term = y[i].clone()
                * y[j].clone()
                * sqrt_a[i].clone()
                * sqrt_a[j].clone()
                * S::constant(1.0 - k.get(i, j));
            a_m = a_m + term;
        }
    }
    let mut b_m = S::constant(0.0);
    for i in 0..n {
        b_m = b_m + y[i].clone() * b_pure[i].clone();
    }
    Ok((a_m, b_m))
}

/// Temperature derivative of the quadratic mixing rule, given the pure
/// parameters and their derivatives:
/// da_m/dT = sum_i sum_j y_i y_j (1-k_ij) (a_j da_i + a_i da_j) / (2 sqrt(a_i a_j)).
pub fn mix_a_dt<S: Scalar>(
    a_pure: &[S],
    a_dt: &[S],
    y: &[S],
    k: &BinarySet,
) -> Result<S, EosError> {
    let n = a_pure.len();
    let sqrt_a: Vec<S> = a_pure
        .iter()
        .map(|a| a.sqrt())
        .collect::<Result<_, _>>()?;
    let mut out = S::constant(0.0);
    for i in 0..n {
        for j in 0..n {
            let cross = (a_dt[i].clone() * sqrt_a[j].clone() / sqrt_a[i].clone()
                + a_dt[j].clone() * sqrt_a[i].clone() / sqrt_a[j].clone())
                * S::constant(0.5);
            out = out + y[i].clone() * y[j].clone() * S::constant(1.0 - k.get(i, j)) * cross;
        }
    }
    Ok(out)
}

/// Dimensionless EOS parameters A = a_m P / (R T)^2 and B = b_m P / (R T).
pub fn dimensionless_ab<S: Scalar>(a_m: &S, b_m: &S, t: &S, p: &S) -> (S, S) {
    let rt = S::constant(R) * t.clone();
    let a = a_m.clone() * p.clone() / (rt.clone() * rt.clone());
    let b = b_m.clone() * p.clone() / rt;
    (a, b)
}

/// All real roots of z^3 - z^2 + (A - B - B^2) z - A B = 0, by Shengjin's
/// discriminant method. Roots are returned with multiplicity (one or three
/// values), sorted ascending on the primal when three exist. The case split
/// is resolved on primal values; the derivative of each root flows through
/// the closed-form expression of the branch taken.
pub fn cubic_roots<S: Scalar>(a_cap: &S, b_cap: &S) -> Result<SmallVec<[S; 3]>, EosError> {
    if !a_cap.is_finite() || !b_cap.is_finite() {
        return Err(EosError::NonFinite("cubic_roots coefficients"));
    }
    // monic cubic z^3 + b2 z^2 + c z + d with b2 = -1
    let c = a_cap.clone() - b_cap.clone() - b_cap.clone() * b_cap.clone();
    let d = -(a_cap.clone() * b_cap.clone());

    // Shengjin resolvents for (1, -1, c, d)
    let big_a = S::constant(1.0) - S::constant(3.0) * c.clone();
    let big_b = -c.clone() - S::constant(9.0) * d.clone();
    let big_c = c.clone() * c.clone() + S::constant(3.0) * d.clone();

    if big_a.value() == 0.0 && big_b.value() == 0.0 {
        // triple root at -b2/3 = 1/3
        let z = S::constant(1.0 / 3.0);
        return Ok(SmallVec::from_vec(vec![z.clone(), z.clone(), z]));
    }

    let delta =
        big_b.clone() * big_b.clone() - S::constant(4.0) * big_a.clone() * big_c.clone();

    if delta.value() > 0.0 {
        // one real root: z = (1 - cbrt(Y1) - cbrt(Y2)) / 3
        let sqrt_delta = delta.sqrt()?;
        let y1 = -big_a.clone()
            + S::constant(1.5) * (-big_b.clone() + sqrt_delta.clone());
        let y2 = -big_a.clone() + S::constant(1.5) * (-big_b.clone() - sqrt_delta);
        let z = (S::constant(1.0) - y1.cbrt()? - y2.cbrt()?) * S::constant(1.0 / 3.0);
        let mut roots = SmallVec::new();
        roots.push(z);
        return Ok(roots);
    }

    // delta <= 0 implies big_a > 0 here (big_a = 0 would force delta >= 0
    // with equality only in the triple-root case handled above)
    let sqrt_a = big_a.sqrt()?;
    let t_val = (S::constant(-2.0) * big_a.clone() - S::constant(3.0) * big_b.clone())
        / (S::constant(2.0) * big_a.clone() * sqrt_a.clone());

    let mut roots: SmallVec<[S; 3]> = SmallVec::new();
    if delta.value() < 0.0 && t_val.value().abs() < 1.0 {
        // three distinct real roots via the trigonometric form
        let theta_third = t_val.acos()? * S::constant(1.0 / 3.0);
        let cos_t = theta_third.cos();
        let sin_t = theta_third.sin();
        let sqrt3 = S::constant(3f64.sqrt());
        let third = S::constant(1.0 / 3.0);
        roots.push((S::constant(1.0) - S::constant(2.0) * sqrt_a.clone() * cos_t.clone()) * third.clone());
        roots.push(
            (S::constant(1.0) + sqrt_a.clone() * (cos_t.clone() + sqrt3.clone() * sin_t.clone()))
                * third.clone(),
        );
        roots.push((S::constant(1.0) + sqrt_a * (cos_t - sqrt3 * sin_t)) * third);
    } else {
        // repeated root on (or within rounding of) the discriminant-zero locus
        let k = big_b.try_div(&big_a)?;
        let single = S::constant(1.0) + k.clone();
        let double = -(k * S::constant(0.5));
        roots.push(single);
        roots.push(double.clone());
        roots.push(double);
    }
    roots.sort_by(|a, b| a.value().partial_cmp(&b.value()).expect("finite roots"));
    for r in &roots {
        if !r.is_finite() {
            return Err(EosError::NonFinite("cubic_roots"));
        }
    }
    Ok(roots)
}

/// Residual of the compressibility cubic at `z`, for verification.
pub fn cubic_residual(a_cap: f64, b_cap: f64, z: f64) -> f64 {
    z * z * z - z * z + (a_cap - b_cap - b_cap * b_cap) * z - a_cap * b_cap
}

/// Pick the phase roots: smallest and largest root strictly above B. With a
/// single qualifying root both phases collapse onto it and the count is
/// reported as `One`.
pub fn select_phase_roots<S: Scalar>(
    roots: &[S],
    b_cap: &S,
) -> Result<(S, S, RootCount), EosError> {
    let b = b_cap.value();
    let physical: Vec<&S> = roots.iter().filter(|r| r.value() > b).collect();
    let Some(first) = physical.first() else {
        return Err(EosError::NoPhysicalRoot { b });
    };
    let mut z_liq = (*first).clone();
    let mut z_vap = (*first).clone();
    for r in physical.iter().skip(1) {
        z_liq = S::min(z_liq, (*r).clone());
        z_vap = S::max(z_vap, (*r).clone());
    }
    let count = if z_liq.value() == z_vap.value() {
        RootCount::One
    } else {
        RootCount::Three
    };
    Ok((z_liq, z_vap, count))
}

/// Full per-phase evaluation at one composition.
#[derive(Debug, Clone)]
pub struct EosEvaluation<S: Scalar> {
    pub a: S,
    pub b: S,
    pub z_liq: S,
    pub z_vap: S,
    pub ln_phi_liq: Vec<S>,
    pub ln_phi_vap: Vec<S>,
    pub phi_liq: Vec<S>,
    pub phi_vap: Vec<S>,
    pub h_dep_liq: S,
    pub h_dep_vap: S,
    pub root_count: RootCount,
}

impl<S: Scalar> EosEvaluation<S> {
    pub fn phi(&self, phase: Phase) -> &[S] {
        match phase {
            Phase::Liquid => &self.phi_liq,
            Phase::Vapor => &self.phi_vap,
        }
    }

    pub fn ln_phi(&self, phase: Phase) -> &[S] {
        match phase {
            Phase::Liquid => &self.ln_phi_liq,
            Phase::Vapor => &self.ln_phi_vap,
        }
    }

    pub fn h_dep(&self, phase: Phase) -> &S {
        match phase {
            Phase::Liquid => &self.h_dep_liq,
            Phase::Vapor => &self.h_dep_vap,
        }
    }
}

fn check_composition<S: Scalar>(set: &ComponentSet, comp: &[S]) -> Result<(), EosError> {
    if comp.len() != set.len() {
        return Err(EosError::InvalidState(format!(
            "{} mole fractions for {} components",
            comp.len(),
            set.len()
        )));
    }
    let mut sum = 0.0;
    for c in comp {
        let v = c.value();
        if !(v >= 0.0) || !v.is_finite() {
            return Err(EosError::InvalidState(format!("mole fraction {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(EosError::InvalidState(format!(
            "mole fractions sum to {sum}"
        )));
    }
    Ok(())
}

/// Evaluate the SRK model at one (T, P, composition) point: mixing rules,
/// cubic roots, fugacity coefficients and departure enthalpies for both
/// phase roots.
pub fn evaluate<S: Scalar>(
    set: &ComponentSet,
    t: &S,
    p: &S,
    comp: &[S],
) -> Result<EosEvaluation<S>, EosError> {
    if !(t.value() > 0.0) || !(p.value() > 0.0) {
        return Err(EosError::InvalidState(format!(
            "T = {} K, P = {} Pa",
            t.value(),
            p.value()
        )));
    }
    check_composition(set, comp)?;
    let n = set.len();

    let mut a_pure = Vec::with_capacity(n);
    let mut b_pure = Vec::with_capacity(n);
    let mut a_dt = Vec::with_capacity(n);
    for c in &set.components {
        let (a, b) = pure_ab(c, t)?;
        a_pure.push(a);
        b_pure.push(b);
        a_dt.push(pure_a_dt(c, t)?);
    }
    let (a_m, b_m) = mix(&a_pure, &b_pure, comp, &set.binary)?;
    let a_m_dt = mix_a_dt(&a_pure, &a_dt, comp, &set.binary)?;
    let (a_cap, b_cap) = dimensionless_ab(&a_m, &b_m, t, p);

    let roots = cubic_roots(&a_cap, &b_cap)?;
    let (z_liq, z_vap, root_count) = select_phase_roots(&roots, &b_cap)?;

    let sqrt_a: Vec<S> = a_pure
        .iter()
        .map(|a| a.sqrt())
        .collect::<Result<_, _>>()?;

    // partial-fugacity coefficient for component i at compressibility z:
    // ln phi_i = (b_i/b_m)(z - 1) - ln(z - B)
    //            - (A/B) (2 sum_j y_j a_ij / a_m - b_i/b_m) ln(1 + B/z)
    let ln_phi_at = |z: &S| -> Result<Vec<S>, EosError> {
        let ln_z_minus_b = (z.clone() - b_cap.clone()).ln()?;
        let ln_term = (S::constant(1.0) + b_cap.clone() / z.clone()).ln()?;
        let a_over_b = a_cap.clone() / b_cap.clone();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut cross = S::constant(0.0);
            for j in 0..n {
                cross = cross
                    + comp[j].clone()
                        * sqrt_a[i].clone()
                        * sqrt_a[j].clone()
                        * S::constant(1.0 - set.binary.get(i, j));
            }
            let bi_over_bm = b_pure[i].clone() / b_m.clone();
            let coeff = S::constant(2.0) * cross / a_m.clone() - bi_over_bm.clone();
            let ln_phi = bi_over_bm * (z.clone() - S::constant(1.0))
                - ln_z_minus_b.clone()
                - a_over_b.clone() * coeff * ln_term.clone();
            if !ln_phi.is_finite() {
                return Err(EosError::NonFinite("ln_phi"));
            }
            out.push(ln_phi);
        }
        Ok(out)
    };

    // standard SRK departure:
    // h - h_ig = R T (z - 1) + (T da_m/dT - a_m)/b_m * ln((z + B)/z)
    let h_dep_at = |z: &S| -> Result<S, EosError> {
        let ln_term = ((z.clone() + b_cap.clone()) / z.clone()).ln()?;
        let h = S::constant(R) * t.clone() * (z.clone() - S::constant(1.0))
            + (t.clone() * a_m_dt.clone() - a_m.clone()) / b_m.clone() * ln_term;
        if !h.is_finite() {
            return Err(EosError::NonFinite("h_dep"));
        }
        Ok(h)
    };

    let ln_phi_liq = ln_phi_at(&z_liq)?;
    let ln_phi_vap = ln_phi_at(&z_vap)?;
    let phi_liq = ln_phi_liq
        .iter()
        .map(|l| l.exp())
        .collect::<Result<Vec<_>, _>>()?;
    let phi_vap = ln_phi_vap
        .iter()
        .map(|l| l.exp())
        .collect::<Result<Vec<_>, _>>()?;
    let h_dep_liq = h_dep_at(&z_liq)?;
    let h_dep_vap = h_dep_at(&z_vap)?;

    Ok(EosEvaluation {
        a: a_cap,
        b: b_cap,
        z_liq,
        z_vap,
        ln_phi_liq,
        ln_phi_vap,
        phi_liq,
        phi_vap,
        h_dep_liq,
        h_dep_vap,
        root_count,
    })
}

/// Plain-real evaluation at a validated state.
pub fn evaluate_state(
    set: &ComponentSet,
    state: &MixtureState,
) -> Result<EosEvaluation<f64>, EosError> {
    evaluate(set, &state.t, &state.p, &state.z)
}

/// Fugacity coefficients of the requested phase at a state.
pub fn fugacity_coeffs(
    set: &ComponentSet,
    state: &MixtureState,
    phase: Phase,
) -> Result<Vec<f64>, EosError> {
    Ok(evaluate_state(set, state)?.phi(phase).to_vec())
}

/// Departure enthalpy of the requested phase at a state, J/mol.
pub fn enthalpy_departure(
    set: &ComponentSet,
    state: &MixtureState,
    phase: Phase,
) -> Result<f64, EosError> {
    Ok(*evaluate_state(set, state)?.h_dep(phase))
}

/// Phase-equilibrium constants K_i = phi_liq_i(T, P, x) / phi_vap_i(T, P, y):
/// the liquid coefficients are evaluated at the liquid composition, the vapor
/// ones at the vapor composition.
pub fn k_values<S: Scalar>(
    set: &ComponentSet,
    t: &S,
    p: &S,
    x_liq: &[S],
    y_vap: &[S],
) -> Result<Vec<S>, EosError> {
    let liq = evaluate(set, t, p, x_liq)?;
    let vap = evaluate(set, t, p, y_vap)?;
    let mut k = Vec::with_capacity(set.len());
    for i in 0..set.len() {
        let ki = (liq.ln_phi_liq[i].clone() - vap.ln_phi_vap[i].clone()).exp()?;
        k.push(ki);
    }
    Ok(k)
}

/// Independent variable for a K-value sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KDerivative {
    Temperature,
    Pressure,
    /// Raw liquid-phase mole fraction of the given component, perturbed
    /// before renormalization.
    LiquidFraction(usize),
    /// Raw vapor-phase mole fraction, perturbed before renormalization.
    VaporFraction(usize),
}

/// Exact dK_i/d(wrt) by seeding the requested variable as the single tangent
/// direction and propagating duals through [`k_values`]. Compositions are
/// held fixed unless they are themselves the seeded variable.
pub fn k_derivatives(
    set: &ComponentSet,
    t: f64,
    p: f64,
    x_liq: &[f64],
    y_vap: &[f64],
    wrt: KDerivative,
) -> Result<Vec<f64>, EosError> {
    let lift = |values: &[f64]| -> Vec<Dual> {
        values.iter().map(|&v| Dual::constant(v)).collect()
    };
    // perturb raw fraction j, then renormalize so the fractions stay a
    // composition; d(x_i)/d(raw_j) = delta_ij - x_i at unit total
    let seeded_composition = |values: &[f64], j: usize| -> Result<Vec<Dual>, EosError> {
        let raw: Vec<Dual> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if i == j {
                    Dual::seeded(v, 1, 0)
                } else {
                    Dual::constant(v)
                }
            })
            .collect();
        let mut total = Dual::constant(0.0);
        for r in &raw {
            total = total + r.clone();
        }
        raw.into_iter()
            .map(|r| r.try_div(&total).map_err(EosError::from))
            .collect()
    };

    let (t_d, p_d, x_d, y_d) = match wrt {
        KDerivative::Temperature => (
            Dual::seeded(t, 1, 0),
            Dual::constant(p),
            lift(x_liq),
            lift(y_vap),
        ),
        KDerivative::Pressure => (
            Dual::constant(t),
            Dual::seeded(p, 1, 0),
            lift(x_liq),
            lift(y_vap),
        ),
        KDerivative::LiquidFraction(j) => (
            Dual::constant(t),
            Dual::constant(p),
            seeded_composition(x_liq, j)?,
            lift(y_vap),
        ),
        KDerivative::VaporFraction(j) => (
            Dual::constant(t),
            Dual::constant(p),
            lift(x_liq),
            seeded_composition(y_vap, j)?,
        ),
    };
    let k = k_values(set, &t_d, &p_d, &x_d, &y_d)?;
    Ok(k.iter().map(|ki| ki.tangent(0)).collect())
}
