//! Forward-mode automatic differentiation on dual scalars.
//!
//! A [`Dual`] carries a primal value together with a fixed-width vector of
//! tangents, one per seeded independent variable. Every arithmetic operation
//! propagates the tangents alongside the value (product rule, quotient rule,
//! chain rule), so evaluating an expression once yields the value and all
//! requested partial derivatives in a single pass.
//!
//! The tangent width is fixed when the variables are seeded (see [`seed`]).
//! A constant lifted with [`Dual::constant`] carries an empty tangent vector,
//! which behaves as the all-zero tangent of any width; combining two duals of
//! different non-zero widths is a usage error and panics.
//!
//! Domain-sensitive operations (`ln`, `sqrt`, division, ...) return a
//! [`DualError`] instead of letting a NaN or infinity leak into the tangent
//! stream: downstream Newton iterations must be able to trust that every
//! derivative they see is finite.

use smallvec::SmallVec;
use thiserror::Error;

/// Inline tangent capacity. The thermodynamic stack seeds at most
/// temperature + pressure + one raw fraction per component, so four
/// components fit without heap allocation.
type Tangents = SmallVec<[f64; 6]>;

/// Errors raised by dual-scalar operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualError {
    #[error("seed called with an empty value vector")]
    EmptySeed,
    #[error("division by zero primal in `{op}`")]
    DivisionByZero { op: &'static str },
    #[error("domain error in `{op}` at primal value {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("non-finite result produced by `{op}`")]
    NonFinite { op: &'static str },
}

/// A primal value with a fixed-width tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    value: f64,
    tangents: Tangents,
}

impl Dual {
    /// Lift a constant: all tangents are zero (stored as the empty vector,
    /// which broadcasts against any width).
    pub fn constant(value: f64) -> Self {
        Dual {
            value,
            tangents: Tangents::new(),
        }
    }

    /// A single seeded variable among `width` independents: the tangent
    /// vector is the `index`-th standard basis vector.
    pub fn seeded(value: f64, width: usize, index: usize) -> Self {
        assert!(index < width, "seed index {index} out of width {width}");
        let mut tangents = Tangents::from_elem(0.0, width);
        tangents[index] = 1.0;
        Dual { value, tangents }
    }

    /// Construct from explicit parts. Used when re-entering a dual
    /// computation with externally computed tangents (for example the
    /// implicit-function correction in the flash solvers).
    pub fn from_parts(value: f64, tangents: &[f64]) -> Self {
        Dual {
            value,
            tangents: Tangents::from_slice(tangents),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Tangent with respect to the `i`-th seeded variable. Constants report
    /// zero for every index.
    pub fn tangent(&self, i: usize) -> f64 {
        self.tangents.get(i).copied().unwrap_or(0.0)
    }

    pub fn tangents(&self) -> &[f64] {
        &self.tangents
    }

    /// Tangent width, or `None` for a lifted constant.
    pub fn width(&self) -> Option<usize> {
        if self.tangents.is_empty() {
            None
        } else {
            Some(self.tangents.len())
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.tangents.iter().all(|t| t.is_finite())
    }

    /// Error out if any component went non-finite in `op`.
    pub fn checked(self, op: &'static str) -> Result<Self, DualError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(DualError::NonFinite { op })
        }
    }

    /// Apply `value = f(value)` with tangents scaled by `dfdx`.
    fn map_unary(&self, f_value: f64, dfdx: f64) -> Dual {
        Dual {
            value: f_value,
            tangents: self.tangents.iter().map(|t| t * dfdx).collect(),
        }
    }

    /// Combine tangents of two operands: `a_coeff * da + b_coeff * db`.
    /// Panics when both operands carry tangents of different widths.
    fn combine(a: &Dual, b: &Dual, value: f64, a_coeff: f64, b_coeff: f64) -> Dual {
        let tangents = match (a.tangents.is_empty(), b.tangents.is_empty()) {
            (true, true) => Tangents::new(),
            (false, true) => a.tangents.iter().map(|t| t * a_coeff).collect(),
            (true, false) => b.tangents.iter().map(|t| t * b_coeff).collect(),
            (false, false) => {
                assert_eq!(
                    a.tangents.len(),
                    b.tangents.len(),
                    "mixed tangent widths ({} vs {}) in one expression",
                    a.tangents.len(),
                    b.tangents.len()
                );
                a.tangents
                    .iter()
                    .zip(&b.tangents)
                    .map(|(ta, tb)| ta * a_coeff + tb * b_coeff)
                    .collect()
            }
        };
        Dual { value, tangents }
    }

    /// Division with a checked denominator.
    pub fn try_div(&self, rhs: &Dual) -> Result<Dual, DualError> {
        if rhs.value == 0.0 {
            return Err(DualError::DivisionByZero { op: "div" });
        }
        let value = self.value / rhs.value;
        // d(x/y) = dx/y - x dy/y^2
        Dual::combine(self, rhs, value, 1.0 / rhs.value, -value / rhs.value).checked("div")
    }

    pub fn exp(&self) -> Result<Dual, DualError> {
        let e = self.value.exp();
        self.map_unary(e, e).checked("exp")
    }

    pub fn ln(&self) -> Result<Dual, DualError> {
        if self.value <= 0.0 {
            return Err(DualError::Domain {
                op: "ln",
                value: self.value,
            });
        }
        self.map_unary(self.value.ln(), 1.0 / self.value).checked("ln")
    }

    /// Square root. The tangent is undefined at a primal of exactly zero, so
    /// that case is an error rather than a silent infinity.
    pub fn sqrt(&self) -> Result<Dual, DualError> {
        if self.value < 0.0 {
            return Err(DualError::Domain {
                op: "sqrt",
                value: self.value,
            });
        }
        if self.value == 0.0 {
            return Err(DualError::Domain {
                op: "sqrt",
                value: 0.0,
            });
        }
        let s = self.value.sqrt();
        self.map_unary(s, 0.5 / s).checked("sqrt")
    }

    /// Signed cube root; errors at zero where the tangent diverges.
    pub fn cbrt(&self) -> Result<Dual, DualError> {
        if self.value == 0.0 {
            return Err(DualError::Domain {
                op: "cbrt",
                value: 0.0,
            });
        }
        let c = self.value.cbrt();
        self.map_unary(c, 1.0 / (3.0 * c * c)).checked("cbrt")
    }

    /// Real power with constant exponent.
    pub fn powf(&self, k: f64) -> Result<Dual, DualError> {
        if self.value <= 0.0 {
            return Err(DualError::Domain {
                op: "powf",
                value: self.value,
            });
        }
        let p = self.value.powf(k);
        self.map_unary(p, k * p / self.value).checked("powf")
    }

    /// Non-negative integer power; pure products, no domain restriction.
    pub fn powi(&self, n: u32) -> Dual {
        match n {
            0 => Dual::constant(1.0),
            _ => {
                let p = self.value.powi(n as i32);
                let dp = n as f64 * self.value.powi(n as i32 - 1);
                self.map_unary(p, dp)
            }
        }
    }

    pub fn abs(&self) -> Dual {
        if self.value < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn sin(&self) -> Dual {
        self.map_unary(self.value.sin(), self.value.cos())
    }

    pub fn cos(&self) -> Dual {
        self.map_unary(self.value.cos(), -self.value.sin())
    }

    /// Inverse cosine; the tangent diverges at the endpoints, so |x| >= 1
    /// is a domain error.
    pub fn acos(&self) -> Result<Dual, DualError> {
        if self.value.abs() >= 1.0 {
            return Err(DualError::Domain {
                op: "acos",
                value: self.value,
            });
        }
        let d = -1.0 / (1.0 - self.value * self.value).sqrt();
        self.map_unary(self.value.acos(), d).checked("acos")
    }
}

/// Branch on a condition evaluated from primal values. The selected operand
/// is returned tangents and all; away from the switching surface this is
/// exactly the derivative of the selected branch, with no smoothing.
pub fn select(cond: bool, a: Dual, b: Dual) -> Dual {
    if cond {
        a
    } else {
        b
    }
}

/// Smaller primal wins; ties return the first argument.
pub fn min(a: Dual, b: Dual) -> Dual {
    let take_b = b.value < a.value;
    select(take_b, b, a)
}

/// Larger primal wins; ties return the first argument.
pub fn max(a: Dual, b: Dual) -> Dual {
    let take_b = b.value > a.value;
    select(take_b, b, a)
}

/// Seed `values` as independent variables: dual `i` gets `values[i]` and the
/// `i`-th basis tangent. All duals derived from one seed call share the same
/// tangent width.
pub fn seed(values: &[f64]) -> Result<Vec<Dual>, DualError> {
    if values.is_empty() {
        return Err(DualError::EmptySeed);
    }
    let n = values.len();
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &v)| Dual::seeded(v, n, i))
        .collect())
}

impl std::ops::Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::combine(&self, &rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl std::ops::Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::combine(&self, &rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl std::ops::Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        // product rule: d(xy) = y dx + x dy
        Dual::combine(&self, &rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

/// Plain `/` requires a non-zero denominator primal; validated call sites in
/// the thermodynamic stack guarantee this. Use [`Dual::try_div`] where the
/// denominator is not structurally positive.
impl std::ops::Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        assert!(
            rhs.value != 0.0,
            "dual division by zero primal; use try_div on unvalidated denominators"
        );
        let value = self.value / rhs.value;
        Dual::combine(&self, &rhs, value, 1.0 / rhs.value, -value / rhs.value)
    }
}

impl std::ops::Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.map_unary(-self.value, -1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn seeding_produces_basis_tangents() {
        let vars = seed(&[3.0]).unwrap();
        assert_eq!(vars[0].value(), 3.0);
        assert_eq!(vars[0].tangents(), &[1.0]);

        let vars = seed(&[2.0, 5.0]).unwrap();
        assert_eq!(vars[1].value(), 5.0);
        assert_eq!(vars[1].tangents(), &[0.0, 1.0]);
    }

    #[test]
    fn empty_seed_is_an_error() {
        assert_eq!(seed(&[]), Err(DualError::EmptySeed));
    }

    #[test]
    fn constants_never_leak_tangents() {
        let x = seed(&[0.0]).unwrap().remove(0);
        let c = Dual::constant(7.0);
        let y = x * c.clone();
        assert_eq!(y.tangent(0), 7.0);
        let z = c.clone() * c;
        assert_eq!(z.width(), None);
        assert_eq!(z.tangent(0), 0.0);
    }

    #[test]
    fn square_by_product_rule() {
        let x = Dual::seeded(3.0, 1, 0);
        let y = x.clone() * x;
        assert_eq!(y.value(), 9.0);
        assert_eq!(y.tangent(0), 6.0);
    }

    #[test]
    fn quotient_rule_two_tangents() {
        let vars = seed(&[2.0, 5.0]).unwrap();
        let q = vars[0].clone() / vars[1].clone();
        assert_eq!(q.value(), 0.4);
        assert!(close(q.tangent(0), 0.2, 1e-15));
        assert!(close(q.tangent(1), -0.08, 1e-15));
    }

    #[test]
    fn linearity() {
        let x = Dual::seeded(1.0, 1, 0);
        let y = (x.clone() + x.clone()) - x;
        assert_eq!(y.value(), 1.0);
        assert_eq!(y.tangent(0), 1.0);
    }

    #[test]
    fn elementary_derivatives() {
        let x = Dual::seeded(0.0, 1, 0);
        let e = x.exp().unwrap();
        assert_eq!(e.value(), 1.0);
        assert_eq!(e.tangent(0), 1.0);

        let x = Dual::seeded(1.0, 1, 0);
        let l = x.ln().unwrap();
        assert_eq!(l.value(), 0.0);
        assert_eq!(l.tangent(0), 1.0);

        let x = Dual::seeded(4.0, 1, 0);
        let s = x.sqrt().unwrap();
        assert_eq!(s.value(), 2.0);
        assert_eq!(s.tangent(0), 0.25);
    }

    #[test]
    fn domain_violations_error() {
        let x = Dual::seeded(-1.0, 1, 0);
        assert!(matches!(x.ln(), Err(DualError::Domain { op: "ln", .. })));
        assert!(matches!(x.sqrt(), Err(DualError::Domain { op: "sqrt", .. })));
        let zero = Dual::seeded(0.0, 1, 0);
        assert!(matches!(zero.sqrt(), Err(DualError::Domain { op: "sqrt", .. })));
        let one = Dual::seeded(1.0, 1, 0);
        assert!(matches!(
            one.try_div(&zero),
            Err(DualError::DivisionByZero { .. })
        ));
    }

    #[test]
    fn non_finite_is_loud() {
        let x = Dual::seeded(1e308, 1, 0);
        assert!(matches!(x.exp(), Err(DualError::NonFinite { op: "exp" })));
    }

    #[test]
    fn select_is_piecewise_exact() {
        let vars = seed(&[1.0, 2.0]).unwrap();
        let m = min(vars[0].clone(), vars[1].clone());
        assert_eq!(m.value(), 1.0);
        assert_eq!(m.tangents(), &[1.0, 0.0]);
        let m = max(vars[0].clone(), vars[1].clone());
        assert_eq!(m.value(), 2.0);
        assert_eq!(m.tangents(), &[0.0, 1.0]);
    }

    #[test]
    fn min_tie_takes_first_argument() {
        let a = Dual::from_parts(1.0, &[1.0, 0.0]);
        let b = Dual::from_parts(1.0, &[0.0, 1.0]);
        let m = min(a.clone(), b.clone());
        assert_eq!(m.tangents(), &[1.0, 0.0]);
        let m = max(a, b);
        assert_eq!(m.tangents(), &[1.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "mixed tangent widths")]
    fn mixed_widths_panic() {
        let a = Dual::seeded(1.0, 1, 0);
        let b = Dual::seeded(1.0, 2, 0);
        let _ = a + b;
    }

    #[test]
    fn product_tangents_commute() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 8.0 - 4.0
        };
        for _ in 0..200 {
            let vars = seed(&[next(), next()]).unwrap();
            let ab = vars[0].clone() * vars[1].clone();
            let ba = vars[1].clone() * vars[0].clone();
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn random_inputs_match_central_differences() {
        // deterministic pseudo-random sweep over each operation's domain
        let mut state = 0xdeadbeefcafef00du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let eps: f64 = f64::EPSILON;
        for _ in 0..300 {
            let a = next() * 6.0 + 0.1; // positive, away from domain edges
            let b = next() * 6.0 + 0.1;
            let h = eps.cbrt() * a.abs().max(1.0);

            // binary ops, partial with respect to the first operand
            let cases: Vec<(fn(Dual, Dual) -> Dual, fn(f64, f64) -> f64)> = vec![
                (|x, y| x + y, |x, y| x + y),
                (|x, y| x - y, |x, y| x - y),
                (|x, y| x * y, |x, y| x * y),
                (|x, y| x / y, |x, y| x / y),
            ];
            for (dual_op, real_op) in cases {
                let vars = seed(&[a, b]).unwrap();
                let out = dual_op(vars[0].clone(), vars[1].clone());
                let fd = (real_op(a + h, b) - real_op(a - h, b)) / (2.0 * h);
                assert!(
                    close(out.tangent(0), fd, 1e-6),
                    "binary op tangent {} vs fd {fd} at ({a}, {b})",
                    out.tangent(0)
                );
            }

            // powf with a random exponent
            let k = next() * 3.0 - 1.0;
            let x = Dual::seeded(a, 1, 0);
            let p = x.powf(k).unwrap();
            let fd = ((a + h).powf(k) - (a - h).powf(k)) / (2.0 * h);
            assert!(close(p.tangent(0), fd, 1e-6), "powf tangent at ({a}, {k})");
        }
    }

    #[test]
    fn exp_ln_roundtrip_tangent() {
        for &v in &[0.5, 1.0, 2.0, 13.7] {
            let x = Dual::seeded(v, 1, 0);
            let y = x.ln().unwrap().exp().unwrap();
            assert!(close(y.value(), v, 1e-12));
            assert!(close(y.tangent(0), 1.0, 1e-12));
        }
    }

    #[test]
    fn tangents_match_central_differences() {
        // h = eps^(1/3) * max(1, |x|), relative tolerance 1e-6
        let eps: f64 = f64::EPSILON;
        let cases: Vec<(fn(&Dual) -> Dual, fn(f64) -> f64, Vec<f64>)> = vec![
            (
                |x| x.exp().unwrap(),
                |x| x.exp(),
                vec![-1.0, 0.3, 2.0],
            ),
            (|x| x.ln().unwrap(), |x| x.ln(), vec![0.2, 1.0, 9.0]),
            (|x| x.sqrt().unwrap(), |x| x.sqrt(), vec![0.5, 2.0, 40.0]),
            (|x| x.cbrt().unwrap(), |x| x.cbrt(), vec![-8.0, 0.7, 3.0]),
            (|x| x.sin(), |x| x.sin(), vec![-0.4, 1.1]),
            (|x| x.cos(), |x| x.cos(), vec![-0.4, 1.1]),
            (|x| x.acos().unwrap(), |x| x.acos(), vec![-0.6, 0.0, 0.6]),
            (|x| x.powi(3), |x| x.powi(3), vec![-2.0, 1.4]),
        ];
        for (dual_f, real_f, points) in cases {
            for x0 in points {
                let h = eps.cbrt() * x0.abs().max(1.0);
                let fd = (real_f(x0 + h) - real_f(x0 - h)) / (2.0 * h);
                let ad = dual_f(&Dual::seeded(x0, 1, 0)).tangent(0);
                assert!(
                    close(ad, fd, 1e-6),
                    "tangent {ad} vs central difference {fd} at {x0}"
                );
            }
        }
    }
}
