//! Scalar abstraction over plain `f64` and [`Dual`].
//!
//! The whole equation-of-state and flash stack is written once against this
//! trait. Evaluating with `f64` gives the plain values; evaluating with
//! [`Dual`] gives values plus exact derivatives with respect to whatever was
//! seeded. Branches (`select`, `min`, `max`) always resolve on primal values,
//! so a dual evaluation follows exactly the branch the plain evaluation
//! would take.
//!
//! Domain-restricted operations return [`DualError`] for both carriers: the
//! plain-`f64` path applies the same checks as the dual path, so the two
//! evaluations either both succeed with identical primal values or both fail
//! at the same operation.

use crate::dual::{self, Dual, DualError};

pub trait Scalar:
    Clone
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn constant(v: f64) -> Self;

    /// The primal (plain real) value.
    fn value(&self) -> f64;

    fn exp(&self) -> Result<Self, DualError>;
    fn ln(&self) -> Result<Self, DualError>;
    fn sqrt(&self) -> Result<Self, DualError>;
    fn cbrt(&self) -> Result<Self, DualError>;
    fn acos(&self) -> Result<Self, DualError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powi(&self, n: u32) -> Self;
    fn abs(&self) -> Self;
    fn try_div(&self, rhs: &Self) -> Result<Self, DualError>;
    fn is_finite(&self) -> bool;

    /// Branch resolved on primal values; the chosen operand is returned
    /// unchanged, derivatives included.
    fn select(cond: bool, a: Self, b: Self) -> Self;

    fn min(a: Self, b: Self) -> Self {
        let take_b = b.value() < a.value();
        Self::select(take_b, b, a)
    }

    fn max(a: Self, b: Self) -> Self {
        let take_b = b.value() > a.value();
        Self::select(take_b, b, a)
    }
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }

    fn value(&self) -> f64 {
        *self
    }

    fn exp(&self) -> Result<Self, DualError> {
        let e = f64::exp(*self);
        if e.is_finite() {
            Ok(e)
        } else {
            Err(DualError::NonFinite { op: "exp" })
        }
    }

    fn ln(&self) -> Result<Self, DualError> {
        if *self <= 0.0 {
            return Err(DualError::Domain {
                op: "ln",
                value: *self,
            });
        }
        Ok(f64::ln(*self))
    }

    fn sqrt(&self) -> Result<Self, DualError> {
        if *self <= 0.0 {
            return Err(DualError::Domain {
                op: "sqrt",
                value: *self,
            });
        }
        Ok(f64::sqrt(*self))
    }

    fn cbrt(&self) -> Result<Self, DualError> {
        if *self == 0.0 {
            return Err(DualError::Domain {
                op: "cbrt",
                value: 0.0,
            });
        }
        Ok(f64::cbrt(*self))
    }

    fn acos(&self) -> Result<Self, DualError> {
        if self.abs() >= 1.0 {
            return Err(DualError::Domain {
                op: "acos",
                value: *self,
            });
        }
        Ok(f64::acos(*self))
    }

    fn sin(&self) -> Self {
        f64::sin(*self)
    }

    fn cos(&self) -> Self {
        f64::cos(*self)
    }

    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn try_div(&self, rhs: &Self) -> Result<Self, DualError> {
        if *rhs == 0.0 {
            return Err(DualError::DivisionByZero { op: "div" });
        }
        Ok(self / rhs)
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn select(cond: bool, a: Self, b: Self) -> Self {
        if cond {
            a
        } else {
            b
        }
    }
}

impl Scalar for Dual {
    fn constant(v: f64) -> Self {
        Dual::constant(v)
    }

    fn value(&self) -> f64 {
        Dual::value(self)
    }

    fn exp(&self) -> Result<Self, DualError> {
        Dual::exp(self)
    }

    fn ln(&self) -> Result<Self, DualError> {
        Dual::ln(self)
    }

    fn sqrt(&self) -> Result<Self, DualError> {
        Dual::sqrt(self)
    }

    fn cbrt(&self) -> Result<Self, DualError> {
        Dual::cbrt(self)
    }

    fn acos(&self) -> Result<Self, DualError> {
        Dual::acos(self)
    }

    fn sin(&self) -> Self {
        Dual::sin(self)
    }

    fn cos(&self) -> Self {
        Dual::cos(self)
    }

    fn powi(&self, n: u32) -> Self {
        Dual::powi(self, n)
    }

    fn abs(&self) -> Self {
        Dual::abs(self)
    }

    fn try_div(&self, rhs: &Self) -> Result<Self, DualError> {
        Dual::try_div(self, rhs)
    }

    fn is_finite(&self) -> bool {
        Dual::is_finite(self)
    }

    fn select(cond: bool, a: Self, b: Self) -> Self {
        dual::select(cond, a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One expression evaluated over both carriers: primal values must agree
    /// exactly when the dual tangents are all zero.
    fn expr<S: Scalar>(t: S) -> Result<S, DualError> {
        let a = (t.clone() * S::constant(0.3)).exp()?;
        let b = (S::constant(5.0) - t.clone()).sqrt()?;
        let c = S::min(a.clone(), b.clone());
        Ok(c * t.ln()? + a / b)
    }

    #[test]
    fn zero_tangent_dual_matches_plain_real_exactly() {
        for &v in &[0.7, 1.3, 2.9, 4.2] {
            let real = expr(v).unwrap();
            let dual = expr(Dual::constant(v)).unwrap();
            assert_eq!(real, dual.value());
            assert_eq!(dual.width(), None);
        }
    }

    #[test]
    fn both_carriers_fail_on_the_same_domain_edge() {
        let real = expr(-1.0);
        let dual = expr(Dual::seeded(-1.0, 1, 0));
        assert_eq!(real.unwrap_err(), dual.unwrap_err());
    }
}
