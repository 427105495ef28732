//! Phase-space states, observables, Poisson brackets and canonical point
//! transformations.
//!
//! A phase point of an `n`-degree-of-freedom system is stored as the flat
//! vector `z = (q₁..qₙ, p₁..pₙ)`. Observables are [`Field`]s of arity `2n`;
//! potentials are fields of arity `n` in the positions only.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, EvalError, Result};
use crate::numcore::{self, DiffConfig, Field, Scalar, ScalarFn};

/// Point `(q, p)` of a `2n`-dimensional phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    z: Vec<f64>,
}

impl PhaseState {
    pub fn new(q: &[f64], p: &[f64]) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Input(format!(
                "position has {} components but momentum has {}",
                q.len(),
                p.len()
            )));
        }
        if q.is_empty() {
            return Err(Error::Input("empty phase state".into()));
        }
        if q.iter().chain(p).any(|v| !v.is_finite()) {
            return Err(Error::Input("phase state has non-finite components".into()));
        }
        let mut z = q.to_vec();
        z.extend_from_slice(p);
        Ok(Self { z })
    }

    /// Builds a state from the flat `(q, p)` layout.
    pub fn from_flat(z: &[f64]) -> Result<Self> {
        if !z.len().is_multiple_of(2) {
            return Err(Error::Input(format!("odd phase vector length {}", z.len())));
        }
        let n = z.len() / 2;
        Self::new(&z[..n], &z[n..])
    }

    pub fn dof(&self) -> usize {
        self.z.len() / 2
    }
    pub fn q(&self) -> &[f64] {
        &self.z[..self.dof()]
    }
    pub fn p(&self) -> &[f64] {
        &self.z[self.dof()..]
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }
}

/// Labeled smooth function on phase space (or on configuration space, for
/// potentials).
#[derive(Clone)]
pub struct Observable {
    label: String,
    field: Arc<dyn Field>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("arity", &self.field.arity())
            .finish()
    }
}

impl Observable {
    pub fn new(label: impl Into<String>, field: impl Field + 'static) -> Self {
        Self {
            label: label.into(),
            field: Arc::new(field),
        }
    }

    pub fn from_arc(label: impl Into<String>, field: Arc<dyn Field>) -> Self {
        Self {
            label: label.into(),
            field,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn arity(&self) -> usize {
        self.field.arity()
    }

    pub fn field(&self) -> &dyn Field {
        &*self.field
    }

    pub fn value(&self, z: &PhaseState) -> Result<f64, EvalError> {
        self.field.eval_f64(z.as_slice())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.field.eval_f64(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        numcore::gradient(&*self.field, x, &DiffConfig::default())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Observable, b: f64) -> Observable {
        let label = format!("{a}*{} + {b}*{}", self.label, other.label);
        Observable::new(
            label,
            LinearCombination {
                terms: vec![(a, self.field.clone()), (b, other.field.clone())],
            },
        )
    }

    pub fn scale(&self, c: f64) -> Observable {
        Observable::new(
            format!("{c}*{}", self.label),
            LinearCombination {
                terms: vec![(c, self.field.clone())],
            },
        )
    }

    pub fn product(&self, other: &Observable) -> Observable {
        Observable::new(
            format!("({})*({})", self.label, other.label),
            Product(self.field.clone(), other.field.clone()),
        )
    }

    /// `self ∘ T` for a canonical linear point transformation `T`.
    pub fn pullback(&self, map: &CanonicalLinear) -> Observable {
        Observable::new(
            format!("{}∘T", self.label),
            Pullback {
                inner: self.field.clone(),
                map: map.clone(),
            },
        )
    }
}

impl std::ops::Add for &Observable {
    type Output = Observable;
    fn add(self, o: &Observable) -> Observable {
        self.combine(1.0, o, 1.0)
    }
}

impl std::ops::Sub for &Observable {
    type Output = Observable;
    fn sub(self, o: &Observable) -> Observable {
        self.combine(1.0, o, -1.0)
    }
}

impl std::ops::Mul for &Observable {
    type Output = Observable;
    fn mul(self, o: &Observable) -> Observable {
        self.product(o)
    }
}

struct LinearCombination {
    terms: Vec<(f64, Arc<dyn Field>)>,
}

impl ScalarFn for LinearCombination {
    fn arity(&self) -> usize {
        self.terms[0].1.arity()
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let mut acc = S::zero();
        for (c, f) in &self.terms {
            acc = acc + S::eval(&**f, x)? * *c;
        }
        Ok(acc)
    }
}

struct Product(Arc<dyn Field>, Arc<dyn Field>);

impl ScalarFn for Product {
    fn arity(&self) -> usize {
        self.0.arity()
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        Ok(S::eval(&*self.0, x)? * S::eval(&*self.1, x)?)
    }
}

struct Pullback {
    inner: Arc<dyn Field>,
    map: CanonicalLinear,
}

impl ScalarFn for Pullback {
    fn arity(&self) -> usize {
        2 * self.map.dim()
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let y = self.map.apply_generic(x);
        S::eval(&*self.inner, &y)
    }
}

/// Projection of one phase coordinate, `z ↦ z_i`.
pub struct Coordinate {
    pub index: usize,
    pub dim: usize,
}

impl ScalarFn for Coordinate {
    fn arity(&self) -> usize {
        self.dim
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        Ok(x[self.index])
    }
}

/// `H = kinetic_factor·|p|² + V(q)`.
#[derive(Clone)]
pub struct HamiltonianSystem {
    label: String,
    kinetic_factor: f64,
    potential: Arc<dyn Field>,
    dof: usize,
}

impl fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("label", &self.label)
            .field("kinetic_factor", &self.kinetic_factor)
            .field("dof", &self.dof)
            .finish()
    }
}

impl HamiltonianSystem {
    pub fn new(label: impl Into<String>, kinetic_factor: f64, potential: Arc<dyn Field>) -> Self {
        let dof = potential.arity();
        Self {
            label: label.into(),
            kinetic_factor,
            potential,
            dof,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn kinetic_factor(&self) -> f64 {
        self.kinetic_factor
    }
    pub fn dof(&self) -> usize {
        self.dof
    }
    pub fn potential(&self) -> &dyn Field {
        &*self.potential
    }
    pub fn potential_arc(&self) -> Arc<dyn Field> {
        self.potential.clone()
    }

    pub fn potential_value(&self, q: &[f64]) -> Result<f64, EvalError> {
        self.potential.eval_f64(q)
    }

    pub fn energy(&self, z: &PhaseState) -> Result<f64, EvalError> {
        self.eval_f64(z.as_slice())
    }

    /// The Hamiltonian itself as an observable.
    pub fn observable(&self) -> Observable {
        Observable::from_arc("H", Arc::new(self.clone()))
    }

    /// `-∇V(q)`.
    pub fn force(&self, q: &[f64]) -> Result<Vec<f64>, EvalError> {
        let g = numcore::gradient(&*self.potential, q, &DiffConfig::default())?;
        Ok(g.into_iter().map(|v| -v).collect())
    }
}

impl ScalarFn for HamiltonianSystem {
    fn arity(&self) -> usize {
        2 * self.dof
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let (q, p) = x.split_at(self.dof);
        let mut kin = S::zero();
        for &pi in p {
            kin = kin + pi * pi;
        }
        Ok(kin * self.kinetic_factor + S::eval(&*self.potential, q)?)
    }
}

/// `{A, B}(z) = Σᵢ ∂A/∂qᵢ ∂B/∂pᵢ − ∂A/∂pᵢ ∂B/∂qᵢ`.
pub fn poisson_bracket(a: &Observable, b: &Observable, z: &PhaseState) -> Result<f64, EvalError> {
    bracket_with(a.field(), b.field(), z.as_slice(), &DiffConfig::default())
}

/// Bracket with an explicit differentiation mode (FD mode is the oracle).
pub fn bracket_with(
    a: &dyn Field,
    b: &dyn Field,
    z: &[f64],
    cfg: &DiffConfig,
) -> Result<f64, EvalError> {
    for f in [a, b] {
        if f.arity() != z.len() {
            return Err(EvalError::Dimension {
                expected: f.arity(),
                found: z.len(),
            });
        }
    }
    let ga = numcore::gradient(a, z, cfg)?;
    let gb = numcore::gradient(b, z, cfg)?;
    Ok(bracket_from_gradients(&ga, &gb))
}

pub fn bracket_from_gradients(ga: &[f64], gb: &[f64]) -> f64 {
    let n = ga.len() / 2;
    (0..n)
        .map(|i| ga[i] * gb[n + i] - ga[n + i] * gb[i])
        .sum()
}

/// `(∂H/∂p, −∂H/∂q)`.
pub fn hamiltonian_vector_field(s: &HamiltonianSystem, z: &PhaseState) -> Result<Vec<f64>, EvalError> {
    if z.dof() != s.dof() {
        return Err(EvalError::Dimension {
            expected: s.dof(),
            found: z.dof(),
        });
    }
    let n = s.dof();
    let mut out = Vec::with_capacity(2 * n);
    out.extend(z.p().iter().map(|p| 2.0 * s.kinetic_factor() * p));
    out.extend(s.force(z.q())?);
    Ok(out)
}

/// A point map between configuration spaces with a Jacobian.
pub trait PointMap {
    fn dim(&self) -> usize;
    fn map_point(&self, q: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, q: &[f64]) -> Result<DMatrix<f64>>;
}

/// Canonical lift of `q ↦ C(q)`: `q' = C(q)`, `p' = J_C(q)^{-T} p`.
pub fn pushforward_state(c: &dyn PointMap, z: &PhaseState) -> Result<PhaseState> {
    if z.dof() != c.dim() {
        return Err(Error::Input(format!(
            "map acts on dimension {} but state has {}",
            c.dim(),
            z.dof()
        )));
    }
    let q = c.map_point(z.q())?;
    let jt = c.jacobian(z.q())?.transpose();
    let p = DVector::from_column_slice(z.p());
    let p_new = jt.lu().solve(&p).ok_or(Error::Singular)?;
    if p_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    PhaseState::new(&q, p_new.as_slice())
}

/// Linear map `q ↦ A q` lifted canonically to phase space.
#[derive(Debug, Clone)]
pub struct CanonicalLinear {
    a: DMatrix<f64>,
    a_inv_t: DMatrix<f64>,
}

impl CanonicalLinear {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Input("linear map must be square".into()));
        }
        let inv = a.clone().try_inverse().ok_or(Error::Singular)?;
        Ok(Self {
            a_inv_t: inv.transpose(),
            a,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The lift of `A⁻¹`.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.a_inv_t.transpose(),
            a_inv_t: self.a.transpose(),
        }
    }

    pub fn apply_generic<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.dim();
        let mut out = vec![S::zero(); 2 * n];
        for i in 0..n {
            for j in 0..n {
                out[i] = out[i] + x[j] * self.a[(i, j)];
                out[n + i] = out[n + i] + x[n + j] * self.a_inv_t[(i, j)];
            }
        }
        out
    }

    pub fn apply_state(&self, z: &PhaseState) -> Result<PhaseState> {
        if z.dof() != self.dim() {
            return Err(Error::Input("dimension mismatch".into()));
        }
        PhaseState::from_flat(&self.apply_generic(z.as_slice()))
    }
}

impl PointMap for CanonicalLinear {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn map_point(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok((&self.a * DVector::from_column_slice(q)).as_slice().to_vec())
    }
    fn jacobian(&self, _q: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.a.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::angular_momentum_observables;

    struct HalfSquare;
    impl ScalarFn for HalfSquare {
        fn arity(&self) -> usize {
            3
        }
        fn apply<S: Scalar>(&self, q: &[S]) -> Result<S, EvalError> {
            Ok((q[0] * q[0] + q[1] * q[1] + q[2] * q[2]) * 0.5)
        }
    }

    struct Zero3;
    impl ScalarFn for Zero3 {
        fn arity(&self) -> usize {
            3
        }
        fn apply<S: Scalar>(&self, _q: &[S]) -> Result<S, EvalError> {
            Ok(S::zero())
        }
    }

    #[test]
    fn state_validation() {
        assert!(PhaseState::new(&[1.0, 2.0], &[0.0]).is_err());
        assert!(PhaseState::new(&[f64::NAN, 0.0], &[0.0, 0.0]).is_err());
        let z = PhaseState::new(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(z.q(), &[1.0, 2.0, 3.0]);
        assert_eq!(z.p(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn so3_bracket() {
        let [l1, l2, _l3] = angular_momentum_observables();
        let z = PhaseState::new(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(poisson_bracket(&l1, &l2, &z).unwrap(), 1.0);
    }

    #[test]
    fn free_and_oscillator_fields() {
        let free = HamiltonianSystem::new("free", 0.5, Arc::new(Zero3));
        let z = PhaseState::new(&[0.0; 3], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(hamiltonian_vector_field(&free, &z).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let osc = HamiltonianSystem::new("osc", 0.5, Arc::new(HalfSquare));
        let z = PhaseState::new(&[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert_eq!(hamiltonian_vector_field(&osc, &z).unwrap(), vec![0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        let h = osc.observable();
        assert_eq!(poisson_bracket(&h, &h, &z).unwrap(), 0.0);
    }

    #[test]
    fn pushforward_identity_and_singular() {
        let id = CanonicalLinear::new(DMatrix::identity(3, 3)).unwrap();
        let z = PhaseState::new(&[1.0, -2.0, 0.5], &[0.3, 0.1, -0.7]).unwrap();
        assert_eq!(pushforward_state(&id, &z).unwrap(), z);
        assert!(CanonicalLinear::new(DMatrix::zeros(3, 3)).is_err());
    }
}
