//! Scalar fields evaluable on plain floats and on dual numbers.

use std::cell::Cell;

use super::dual::{Real, D1, D2};
use crate::error::EvalError;

/// Denominators with magnitude below this raise [`EvalError::Singular`].
pub const SINGULAR_GUARD: f64 = 1e-8;

/// Object-safe scalar function of `arity` real inputs.
///
/// Implement [`ScalarFn`] instead; the blanket impl provides this trait.
pub trait Field: Send + Sync {
    fn arity(&self) -> usize;
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError>;
    fn eval_d1(&self, x: &[D1]) -> Result<D1, EvalError>;
    fn eval_d2(&self, x: &[D2]) -> Result<D2, EvalError>;
}

/// Scalar types a [`Field`] can be evaluated on.
pub trait Scalar: Real {
    fn eval(f: &dyn Field, x: &[Self]) -> Result<Self, EvalError>;
}

impl Scalar for f64 {
    fn eval(f: &dyn Field, x: &[Self]) -> Result<Self, EvalError> {
        f.eval_f64(x)
    }
}

impl Scalar for D1 {
    fn eval(f: &dyn Field, x: &[Self]) -> Result<Self, EvalError> {
        f.eval_d1(x)
    }
}

impl Scalar for D2 {
    fn eval(f: &dyn Field, x: &[Self]) -> Result<Self, EvalError> {
        f.eval_d2(x)
    }
}

/// Generic scalar function; every implementor is a [`Field`].
pub trait ScalarFn: Send + Sync {
    fn arity(&self) -> usize;
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError>;
}

fn check_arity(expected: usize, found: usize) -> Result<(), EvalError> {
    if expected == found {
        Ok(())
    } else {
        Err(EvalError::Dimension { expected, found })
    }
}

impl<T: ScalarFn> Field for T {
    fn arity(&self) -> usize {
        ScalarFn::arity(self)
    }
    fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        check_arity(ScalarFn::arity(self), x.len())?;
        self.apply(x)
    }
    fn eval_d1(&self, x: &[D1]) -> Result<D1, EvalError> {
        check_arity(ScalarFn::arity(self), x.len())?;
        self.apply(x)
    }
    fn eval_d2(&self, x: &[D2]) -> Result<D2, EvalError> {
        check_arity(ScalarFn::arity(self), x.len())?;
        self.apply(x)
    }
}

thread_local! {
    static CLEARANCE: Cell<f64> = const { Cell::new(f64::INFINITY) };
}

/// Checks a denominator against [`SINGULAR_GUARD`] and records its magnitude
/// for [`clearance`].
pub fn guard<S: Real>(d: S, what: &'static str) -> Result<S, EvalError> {
    let v = d.value().abs();
    CLEARANCE.with(|c| {
        if v < c.get() {
            c.set(v)
        }
    });
    if v >= SINGULAR_GUARD {
        Ok(d)
    } else {
        Err(EvalError::Singular { what, value: v })
    }
}

/// Smallest guarded denominator magnitude met while evaluating `f` at `x`.
///
/// Returns infinity for fields without guarded denominators and 0 when the
/// evaluation itself fails.
pub fn clearance(f: &dyn Field, x: &[f64]) -> f64 {
    CLEARANCE.with(|c| c.set(f64::INFINITY));
    let ok = f.eval_f64(x).is_ok();
    let v = CLEARANCE.with(|c| c.get());
    if ok {
        v
    } else {
        0.0
    }
}
