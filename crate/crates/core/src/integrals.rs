//! First integrals and the algebraic identities among them.
//!
//! Most integrals here are quadratic in the momenta, `F = Kⁱʲ(q)pᵢpⱼ + U(q)`.
//! [`QuadraticIntegral`] stores the kinetic part symbolically and the scalar
//! part `U` as a sum of [`LaurentTerm`]s, so one type covers every catalog
//! entry on `E³`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::charts::rotation_canonical;
use crate::error::{Error, EvalError, Result};
use crate::models::{
    self, AngularProfile, Family, MinimalVariant, PotentialSpec, PowerTerms, ReducedCalogero,
};
use crate::numcore::{guard, hessian_block, Field, Real, Scalar, ScalarFn};
use crate::phase::{poisson_bracket, Coordinate, HamiltonianSystem, Observable, PhaseState};

/// `q × p`.
pub fn angular_momenta(z: &PhaseState) -> Result<[f64; 3]> {
    if z.dof() != 3 {
        return Err(Error::Input(format!("angular momenta need 3 degrees of freedom, got {}", z.dof())));
    }
    Ok(cross(z.q(), z.p()))
}

fn cross<S: Real>(q: &[S], p: &[S]) -> [S; 3] {
    [
        q[1] * p[2] - q[2] * p[1],
        q[2] * p[0] - q[0] * p[2],
        q[0] * p[1] - q[1] * p[0],
    ]
}

/// `[L₁, L₂, L₃]` as observables on the 6-dimensional phase space.
pub fn angular_momentum_observables() -> [Observable; 3] {
    [0, 1, 2].map(|i| Observable::new(format!("L{}", i + 1), AngularComponent(i)))
}

struct AngularComponent(usize);

impl ScalarFn for AngularComponent {
    fn arity(&self) -> usize {
        6
    }
    fn apply<S: Scalar>(&self, z: &[S]) -> Result<S, EvalError> {
        Ok(cross(&z[..3], &z[3..])[self.0])
    }
}

/// Momentum-dependent part of a quadratic integral on `E³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kinetic {
    /// `|L|²`.
    AngularSquared,
    /// `L_i²`.
    AngularComponentSquared(usize),
    /// `p_i²`.
    MomentumSquared(usize),
    /// `½p_i²`.
    HalfMomentumSquared(usize),
    /// `2(L₁p₂ − p₁L₂)`, the axial component of a Laplace–Runge–Lenz type
    /// vector.
    Parabolic,
    /// `2 L_l p_m`.
    AngularTimesMomentum { l: usize, m: usize },
    /// `L₃² + a²(p₁² − p₂²)`.
    Elliptic(f64),
    None,
}

impl Kinetic {
    fn eval<S: Real>(&self, q: &[S], p: &[S]) -> S {
        let l = cross(q, p);
        match *self {
            Kinetic::AngularSquared => l[0] * l[0] + l[1] * l[1] + l[2] * l[2],
            Kinetic::AngularComponentSquared(i) => l[i] * l[i],
            Kinetic::MomentumSquared(i) => p[i] * p[i],
            Kinetic::HalfMomentumSquared(i) => p[i] * p[i] * 0.5,
            Kinetic::Parabolic => (l[0] * p[1] - p[0] * l[1]) * 2.0,
            Kinetic::AngularTimesMomentum { l: a, m } => l[a] * p[m] * 2.0,
            Kinetic::Elliptic(a) => l[2] * l[2] + (p[0] * p[0] - p[1] * p[1]) * (a * a),
            Kinetic::None => S::zero(),
        }
    }
}

/// `c · x₁^a x₂^b x₃^c · r^m · ρ^n · k(φ)` with `ρ² = x₁² + x₂²`; every
/// factor with a negative power is guarded.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentTerm {
    pub coefficient: f64,
    pub x: [i32; 3],
    pub r: i32,
    pub rho: i32,
    pub azimuthal: Option<AngularProfile>,
}

impl LaurentTerm {
    pub fn new(coefficient: f64) -> Self {
        Self {
            coefficient,
            x: [0; 3],
            r: 0,
            rho: 0,
            azimuthal: None,
        }
    }
    pub fn x(mut self, i: usize, power: i32) -> Self {
        self.x[i] += power;
        self
    }
    pub fn r(mut self, power: i32) -> Self {
        self.r += power;
        self
    }
    pub fn rho(mut self, power: i32) -> Self {
        self.rho += power;
        self
    }
    pub fn times(mut self, k: &AngularProfile) -> Self {
        self.azimuthal = Some(k.clone());
        self
    }

    pub fn eval<S: Real>(&self, q: &[S]) -> Result<S, EvalError> {
        if self.coefficient == 0.0 {
            return Ok(S::zero());
        }
        const NAMES: [&str; 3] = ["x1", "x2", "x3"];
        let mut acc = S::cst(self.coefficient);
        for i in 0..3 {
            let n = self.x[i];
            if n != 0 {
                let base = if n < 0 { guard(q[i], NAMES[i])? } else { q[i] };
                acc = acc * base.powi(n);
            }
        }
        let rho2 = q[0] * q[0] + q[1] * q[1];
        acc = acc * radial_power(rho2, self.rho, "x1^2 + x2^2")?;
        if self.r != 0 {
            acc = acc * radial_power(rho2 + q[2] * q[2], self.r, "r^2")?;
        }
        if let Some(k) = &self.azimuthal {
            if k.is_zero() {
                return Ok(S::zero());
            }
            acc = acc * k.eval_xy(q[0], q[1])?;
        }
        Ok(acc)
    }
}

/// `(√s2)^n`, avoiding the square root for even `n`.
fn radial_power<S: Real>(s2: S, n: i32, what: &'static str) -> Result<S, EvalError> {
    if n == 0 {
        return Ok(S::cst(1.0));
    }
    let s2 = if n < 0 { guard(s2, what)? } else { s2 };
    if n % 2 == 0 {
        Ok(s2.powi(n / 2))
    } else {
        Ok(s2.sqrt().powi(n))
    }
}

/// `F = kinetic(q, p) + Σ terms(q)` on the phase space of `E³`.
#[derive(Debug, Clone)]
pub struct QuadraticIntegral {
    pub kinetic: Kinetic,
    pub scalar: Vec<LaurentTerm>,
}

impl QuadraticIntegral {
    pub fn new(kinetic: Kinetic, scalar: Vec<LaurentTerm>) -> Self {
        Self { kinetic, scalar }
    }

    pub fn observable(self, label: &str) -> Observable {
        Observable::new(label, self)
    }

    pub fn scalar_part<S: Real>(&self, q: &[S]) -> Result<S, EvalError> {
        let mut acc = S::zero();
        for t in &self.scalar {
            acc = acc + t.eval(q)?;
        }
        Ok(acc)
    }
}

impl ScalarFn for QuadraticIntegral {
    fn arity(&self) -> usize {
        6
    }
    fn apply<S: Scalar>(&self, z: &[S]) -> Result<S, EvalError> {
        let (q, p) = z.split_at(3);
        Ok(self.kinetic.eval(q, p) + self.scalar_part(q)?)
    }
}

/// A pair of observables asserted (or, for controls, expected not) to
/// Poisson-commute, tagged with the chart in which they separate.
#[derive(Debug, Clone)]
pub struct InvolutivePair {
    pub chart: String,
    pub left: Observable,
    pub right: Observable,
}

impl InvolutivePair {
    pub fn new(chart: &str, left: &Observable, right: &Observable) -> Self {
        Self {
            chart: chart.to_string(),
            left: left.clone(),
            right: right.clone(),
        }
    }

    pub fn label(&self) -> String {
        format!("{{{}, {}}} [{}]", self.left.label(), self.right.label(), self.chart)
    }
}

/// A system with a catalog of first integrals.
#[derive(Debug, Clone)]
pub struct IntegralSet {
    pub label: String,
    pub system: HamiltonianSystem,
    /// The Hamiltonian first, then the remaining integrals.
    pub members: Vec<Observable>,
    pub involutive_pairs: Vec<InvolutivePair>,
    /// Pairs expected to have a nonzero bracket.
    pub controls: Vec<InvolutivePair>,
    /// Rank of the members' Jacobian at a generic point.
    pub expected_rank: usize,
}

impl IntegralSet {
    fn new(label: &str, system: HamiltonianSystem, integrals: Vec<Observable>, expected_rank: usize) -> Result<Self> {
        let mut members = vec![system.observable()];
        members.extend(integrals);
        let dim = 2 * system.dof();
        if let Some(bad) = members.iter().find(|m| m.arity() != dim) {
            return Err(Error::Input(format!(
                "integral '{}' has arity {} but the system needs {dim}",
                bad.label(),
                bad.arity()
            )));
        }
        Ok(Self {
            label: label.to_string(),
            system,
            members,
            involutive_pairs: Vec::new(),
            controls: Vec::new(),
            expected_rank,
        })
    }

    pub fn member(&self, label: &str) -> Option<&Observable> {
        self.members.iter().find(|m| m.label() == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.label()).collect()
    }

    fn pair(&mut self, chart: &str, a: &str, b: &str) {
        let left = self.member(a).expect("declared member").clone();
        let right = self.member(b).expect("declared member").clone();
        self.involutive_pairs.push(InvolutivePair {
            chart: chart.to_string(),
            left,
            right,
        });
    }

    /// Spheroidal pairs `{axial, spherical ∓ 2a²·cylindrical}`.
    fn spheroidal_pairs(&mut self, spherical: &str, cylindrical: &str, focal: &[f64]) {
        let axial = self.member("axial").expect("axial member").clone();
        let s = self.member(spherical).expect("declared member").clone();
        let c = self.member(cylindrical).expect("declared member").clone();
        for &a in focal {
            let w = 2.0 * a * a;
            let oblate = s.combine(1.0, &c, -w).with_label(format!("{spherical} - 2a^2 {cylindrical}"));
            let prolate = s.combine(1.0, &c, w).with_label(format!("{spherical} + 2a^2 {cylindrical}"));
            self.involutive_pairs
                .push(InvolutivePair::new(&format!("oblate-spheroidal a={a}"), &axial, &oblate));
            self.involutive_pairs
                .push(InvolutivePair::new(&format!("prolate-spheroidal a={a}"), &axial, &prolate));
        }
    }
}

/// Focal parameters used for the spheroidal pairs by default.
pub const DEFAULT_FOCAL: [f64; 2] = [0.5, 1.3];

fn spherical_total(k: &AngularProfile) -> QuadraticIntegral {
    QuadraticIntegral::new(
        Kinetic::AngularSquared,
        vec![LaurentTerm::new(2.0).r(2).rho(-2).times(k)],
    )
}

fn axial(k: &AngularProfile) -> QuadraticIntegral {
    QuadraticIntegral::new(Kinetic::AngularComponentSquared(2), vec![LaurentTerm::new(2.0).times(k)])
}

fn vertical(extra: Vec<LaurentTerm>) -> QuadraticIntegral {
    QuadraticIntegral::new(Kinetic::HalfMomentumSquared(2), extra)
}

fn parabolic(k: &AngularProfile, extra: Vec<LaurentTerm>) -> QuadraticIntegral {
    let mut scalar = vec![LaurentTerm::new(-4.0).x(2, 1).rho(-2).times(k)];
    scalar.extend(extra);
    QuadraticIntegral::new(Kinetic::Parabolic, scalar)
}

/// `H = ½|p|² + k(φ)/ρ²` with its four integrals:
///
/// * `spherical = |L|² + 2k/sin²θ`
/// * `axial = L₃² + 2k`
/// * `cylindrical = ½p₃²`
/// * `parabolic = 2(L₁p₂ − p₁L₂) − 4x₃k/ρ²`
pub fn rotational_integrals(k: &AngularProfile) -> Result<IntegralSet> {
    rotational_integrals_with(k, &DEFAULT_FOCAL)
}

pub fn rotational_integrals_with(k: &AngularProfile, focal: &[f64]) -> Result<IntegralSet> {
    let system = models::rotational_family(k.clone())?;
    let members = vec![
        spherical_total(k).observable("spherical"),
        axial(k).observable("axial"),
        vertical(Vec::new()).observable("cylindrical"),
        parabolic(k, Vec::new()).observable("parabolic"),
    ];
    let mut set = IntegralSet::new("rotational-family", system, members, 5)?;
    set.pair("spherical", "spherical", "axial");
    set.pair("circular-cylindrical", "axial", "cylindrical");
    set.pair("rotational-parabolic", "axial", "parabolic");
    set.spheroidal_pairs("spherical", "cylindrical", focal);
    set.controls.push(InvolutivePair::new(
        "none",
        set.member("cylindrical").expect("member"),
        set.member("parabolic").expect("member"),
    ));
    Ok(set)
}

/// Position-dependent coefficients `(f₀, …, f₄)` of the linear identity
/// among the rotational integrals.
pub fn linear_connection_coefficients(x: &[f64]) -> [f64; 5] {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    [2.0 * x[2] * x[2], 1.0, -1.0, -2.0 * r2, x[2]]
}

/// Values `(H, F₁, F₂, F₃, F₄)` of the rotational integrals at `z`.
pub fn rotational_values(z: &PhaseState, k: &AngularProfile) -> Result<[f64; 5]> {
    if z.dof() != 3 {
        return Err(Error::Input("rotational integrals live on E3".into()));
    }
    let h = HamiltonianSystem::new("", 0.5, Arc::new(models::RotationalPotential { k: k.clone() }));
    let zs = z.as_slice();
    Ok([
        Field::eval_f64(&h, zs)?,
        spherical_total(k).apply(zs)?,
        axial(k).apply(zs)?,
        vertical(Vec::new()).apply(zs)?,
        parabolic(k, Vec::new()).apply(zs)?,
    ])
}

/// The five products `fᵢ·Fᵢ` (with `F₀ = H`) at `z`.
pub fn linear_connection_terms(z: &PhaseState, k: &AngularProfile) -> Result<[f64; 5]> {
    let values = rotational_values(z, k)?;
    let f = linear_connection_coefficients(z.q());
    Ok([0, 1, 2, 3, 4].map(|i| f[i] * values[i]))
}

/// `Σ fᵢFᵢ`, identically zero.
pub fn linear_connection_residual(z: &PhaseState, k: &AngularProfile) -> Result<f64> {
    Ok(linear_connection_terms(z, k)?.iter().sum())
}

/// `2(H − F₃)(F₁ − F₂) − F₄²/4 − 2F₃F₂`: a polynomial relation among the
/// rotational integrals that holds for every profile, so their Jacobian has
/// rank 4, not 5.
///
/// With `D⊥ = x₁p₁ + x₂p₂` and `H⊥ = H − F₃`, the integrals are
/// `F₂ = 2H⊥ρ² − D⊥²`, `F₄ = 2(p₃D⊥ − 2H⊥x₃)` and `F₁ = 2Hr² − (x·p)²`.
pub fn rotational_relation(values: [f64; 5]) -> f64 {
    let [h, f1, f2, f3, f4] = values;
    2.0 * (h - f3) * (f1 - f2) - 0.25 * f4 * f4 - 2.0 * f3 * f2
}

/// [`rotational_relation`] divided by its largest term.
pub fn rotational_relation_residual(z: &PhaseState, k: &AngularProfile) -> Result<f64> {
    let [h, f1, f2, f3, f4] = rotational_values(z, k)?;
    let terms = [
        2.0 * h * f1,
        2.0 * h * f2,
        2.0 * f3 * f1,
        2.0 * f3 * f2,
        0.25 * f4 * f4,
    ];
    let scale = terms.iter().fold(f64::MIN_POSITIVE, |m, t| m.max(t.abs()));
    Ok(rotational_relation([h, f1, f2, f3, f4]).abs() / scale)
}

/// `Kⁱʲ = ½∂²F/∂pᵢ∂pⱼ` and `U = F(q, 0)` at one position.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPart {
    pub tensor: DMatrix<f64>,
    pub scalar: f64,
}

/// Splits `F` into its momentum-quadratic tensor and scalar part at `q`,
/// failing if `F` is not exactly quadratic in the momenta.
pub fn quadratic_part(f: &Observable, q: &[f64]) -> Result<QuadraticPart> {
    let n = q.len();
    if f.arity() != 2 * n {
        return Err(EvalError::Dimension {
            expected: f.arity(),
            found: 2 * n,
        }
        .into());
    }
    let mut z = q.to_vec();
    z.resize(2 * n, 0.0);
    let tensor = hessian_block(f.field(), &z, n..2 * n, n..2 * n)? * 0.5;
    let scalar = f.eval(&z)?;
    // reconstruction at a few fixed momenta catches linear and cubic terms
    let probes: [&[f64]; 3] = [&[0.7, -0.3, 1.1], &[-1.3, 0.4, 0.2], &[0.05, 2.0, -0.9]];
    let mut worst: f64 = 0.0;
    for probe in probes {
        let p: Vec<f64> = (0..n).map(|i| probe[i % 3]).collect();
        z[n..].copy_from_slice(&p);
        let pv = nalgebra::DVector::from_column_slice(&p);
        let predicted = (pv.transpose() * &tensor * &pv)[(0, 0)] + scalar;
        let actual = f.eval(&z)?;
        let scale = actual.abs().max(predicted.abs()).max(1.0);
        worst = worst.max((actual - predicted).abs() / scale);
    }
    if worst > 1e-10 {
        return Err(Error::NotQuadratic(worst));
    }
    Ok(QuadraticPart { tensor, scalar })
}

/// `H = ½|p|² + F(r) + Σ cᵢ/xᵢ²` with `L₁² + …`, `L₂² + …`, `L₃² + …`.
pub fn coordinate_plane_integrals(c: [f64; 3], radial: PowerTerms) -> Result<IntegralSet> {
    let system = models::coordinate_planes(c, radial)?;
    let ratio = |coef: f64, num: usize, den: usize| LaurentTerm::new(2.0 * coef).x(num, 2).x(den, -2);
    let rho_ratio = |coef: f64, den: usize| LaurentTerm::new(2.0 * coef).rho(2).x(den, -2);
    let nonzero = |terms: Vec<LaurentTerm>| terms.into_iter().filter(|t| t.coefficient != 0.0).collect();
    let members = vec![
        QuadraticIntegral::new(
            Kinetic::AngularComponentSquared(0),
            nonzero(vec![ratio(c[1], 2, 1), ratio(c[2], 1, 2)]),
        )
        .observable("plane-1"),
        QuadraticIntegral::new(
            Kinetic::AngularComponentSquared(1),
            nonzero(vec![ratio(c[0], 2, 0), ratio(c[2], 0, 2)]),
        )
        .observable("plane-2"),
        QuadraticIntegral::new(
            Kinetic::AngularComponentSquared(2),
            nonzero(vec![rho_ratio(c[0], 0), rho_ratio(c[1], 1)]),
        )
        .observable("plane-3"),
    ];
    let mut set = IntegralSet::new("coordinate-planes", system, members, 4)?;
    set.controls.push(InvolutivePair::new(
        "none",
        set.member("plane-1").expect("member"),
        set.member("plane-2").expect("member"),
    ));
    Ok(set)
}

/// The three-integral subsets carried by the minimally superintegrable
/// families.
pub fn minimal_integrals(
    variant: MinimalVariant,
    alpha: f64,
    beta: f64,
    h: &AngularProfile,
) -> Result<IntegralSet> {
    let system = models::minimal_potentials(variant, alpha, beta, h.clone())?;
    let t = LaurentTerm::new;
    let nonzero = |terms: Vec<LaurentTerm>| -> Vec<LaurentTerm> {
        terms.into_iter().filter(|t| t.coefficient != 0.0).collect()
    };
    let mut set = match variant {
        MinimalVariant::V1 => {
            let mut sph = spherical_total(h);
            sph.scalar.extend(nonzero(vec![t(2.0 * beta).r(2).x(2, -2)]));
            let cyl = vertical(nonzero(vec![t(alpha).x(2, 2), t(beta).x(2, -2)]));
            let members = vec![
                sph.observable("spherical"),
                axial(h).observable("axial"),
                cyl.observable("cylindrical"),
            ];
            let mut set = IntegralSet::new("minimal-v1", system, members, 4)?;
            set.pair("spherical", "spherical", "axial");
            set.pair("circular-cylindrical", "axial", "cylindrical");
            set.spheroidal_pairs("spherical", "cylindrical", &DEFAULT_FOCAL);
            set
        }
        MinimalVariant::V2 => {
            let mut sph = spherical_total(h);
            sph.scalar.extend(nonzero(vec![t(2.0 * beta).x(2, 1).r(1).rho(-2)]));
            let par = parabolic(
                h,
                nonzero(vec![
                    t(-2.0 * alpha).x(2, 1).r(-1),
                    t(-2.0 * beta).x(2, 2).r(-1).rho(-2),
                    t(-2.0 * beta).r(1).rho(-2),
                ]),
            );
            let members = vec![
                sph.observable("spherical"),
                axial(h).observable("axial"),
                par.observable("parabolic"),
            ];
            let mut set = IntegralSet::new("minimal-v2", system, members, 4)?;
            set.pair("spherical", "spherical", "axial");
            set.pair("rotational-parabolic", "axial", "parabolic");
            set
        }
        MinimalVariant::V3 => {
            let cyl = vertical(nonzero(vec![t(4.0 * alpha).x(2, 2)]));
            let par = parabolic(h, nonzero(vec![t(4.0 * alpha).x(2, 1).rho(2)]));
            let members = vec![
                axial(h).observable("axial"),
                cyl.observable("cylindrical"),
                par.observable("parabolic"),
            ];
            let mut set = IntegralSet::new("minimal-v3", system, members, 4)?;
            set.pair("circular-cylindrical", "axial", "cylindrical");
            set.pair("rotational-parabolic", "axial", "parabolic");
            set
        }
    };
    let first = set.members[1].clone();
    set.controls.push(InvolutivePair::new(
        "none",
        &first,
        &Observable::new("q1", Coordinate { index: 0, dim: 6 }),
    ));
    Ok(set)
}

/// `p₁²`, `L₃²`, `2L₃p₁` and `L₃² + a²(p₁² − p₂²)`: quadratic elements of the
/// enveloping algebra of the planar isometries.
pub fn planar_isometry_integrals(a: f64) -> Result<[Observable; 4]> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Input(format!("focal parameter must be nonzero and finite, got {a}")));
    }
    let q = |k: Kinetic, label: &str| QuadraticIntegral::new(k, Vec::new()).observable(label);
    Ok([
        q(Kinetic::MomentumSquared(0), "cartesian"),
        q(Kinetic::AngularComponentSquared(2), "polar"),
        q(Kinetic::AngularTimesMomentum { l: 2, m: 0 }, "parabolic"),
        q(Kinetic::Elliptic(a), "elliptic"),
    ])
}

/// `H = ½|p|² + Ṽ(x₁, x₂) + f(x₃)` with `vertical = ½p₃² + f(x₃)`. When the
/// planar part vanishes the four planar-isometry integrals are added.
pub fn layered_integrals(base: Option<Arc<dyn Field>>, f: PowerTerms, a: f64) -> Result<IntegralSet> {
    let free_plane = base.is_none();
    let base = base.unwrap_or_else(|| Arc::new(models::ZeroPotential(2)));
    let system = models::layered_xy(base, f.clone())?;
    let terms: Vec<LaurentTerm> = f
        .terms
        .iter()
        .filter(|t| t.coefficient != 0.0)
        .map(|t| LaurentTerm::new(t.coefficient).x(2, t.power))
        .collect();
    let mut members = vec![vertical(terms).observable("vertical")];
    if !free_plane {
        let set = IntegralSet::new("layered-xy", system, members, 2)?;
        return Ok(set);
    }
    let planar = planar_isometry_integrals(a)?;
    members.extend(planar.iter().cloned());
    let mut set = IntegralSet::new("layered-xy", system, members, 4)?;
    for x in &planar {
        set.pair("triplet", "H", x.label());
        set.pair("triplet", "vertical", x.label());
    }
    set.pair("triplet", "H", "vertical");
    set.controls
        .push(InvolutivePair::new("none", &planar[0], &planar[1]));
    Ok(set)
}

/// `H = ½|p|² + Ṽ(r, θ) + k(φ)/ρ²` with the axial integral.
pub fn meridian_integrals(base: Arc<dyn Field>, k: &AngularProfile) -> Result<IntegralSet> {
    let system = models::layered_rtheta(base, k.clone())?;
    IntegralSet::new("layered-rtheta", system, vec![axial(k).observable("axial")], 2)
}

/// `L₃² + sign·[g₁/(√3 sinφ − cosφ)² + g₂/(√3 sinφ + cosφ)² + g₃/cos²φ]` on
/// the `(ρ, λ)` plane, with `φ = atan2(λ, ρ)` and `L₃ = ρp_λ − λp_ρ`.
#[derive(Debug, Clone)]
pub struct PlanarAngularIntegral {
    pub g: [f64; 3],
    pub sign: f64,
}

impl ScalarFn for PlanarAngularIntegral {
    fn arity(&self) -> usize {
        4
    }
    fn apply<S: Scalar>(&self, z: &[S]) -> Result<S, EvalError> {
        let (rho, lam, p_rho, p_lam) = (z[0], z[1], z[2], z[3]);
        let l3 = rho * p_lam - lam * p_rho;
        let radius = guard((rho * rho + lam * lam).sqrt(), "planar radius")?;
        let c = rho / radius;
        let s = lam / radius;
        let s3 = 3f64.sqrt();
        let forms = [s * s3 - c, s * s3 + c, c];
        let mut w = S::zero();
        for (g, d) in self.g.iter().zip(forms) {
            if *g != 0.0 {
                let d = guard(d, "planar angular form")?;
                w = w + (d * d).recip() * *g;
            }
        }
        Ok(l3 * l3 + w * self.sign)
    }
}

pub fn planar_angular_integral(g: [f64; 3], sign: f64) -> Observable {
    Observable::new("planar-angular", PlanarAngularIntegral { g, sign })
}

/// Outcome of the sign probe for [`planar_angular_integral`].
#[derive(Debug, Clone)]
pub struct ResolvedPlanarIntegral {
    pub observable: Observable,
    pub sign: f64,
    /// Max normalized `|{H, F}|` over the probe states for `+` and `−`.
    pub residual_plus: f64,
    pub residual_minus: f64,
}

/// Probe states used to resolve the sign; regular for every pair line.
pub const PLANAR_PROBE_STATES: [[f64; 4]; 8] = [
    [0.9, 0.2, 0.3, -0.7],
    [-0.4, 1.1, 0.8, 0.1],
    [1.3, -0.6, -0.2, 0.5],
    [-1.2, -0.3, 0.6, 0.9],
    [0.25, 1.7, -0.9, 0.4],
    [1.6, 0.45, 0.1, -0.3],
    [-0.7, -1.4, 0.35, -0.6],
    [0.6, -1.8, -0.5, 0.75],
];

/// Picks the sign making `{H, F} = 0` on the probe states; fails if neither
/// sign does.
pub fn resolve_planar_integral(system: &HamiltonianSystem, g: [f64; 3]) -> Result<ResolvedPlanarIntegral> {
    if system.dof() != 2 {
        return Err(Error::Input("planar integral needs a 2-degree-of-freedom system".into()));
    }
    let h = system.observable();
    let probe = |sign: f64| -> Result<f64> {
        let f = planar_angular_integral(g, sign);
        let mut worst: f64 = 0.0;
        for z in PLANAR_PROBE_STATES {
            let state = PhaseState::from_flat(&z)?;
            let b = poisson_bracket(&h, &f, &state)?;
            let scale = norm(&h.gradient(&z)?) * norm(&f.gradient(&z)?) + 1e-300;
            worst = worst.max(b.abs() / scale);
        }
        Ok(worst)
    };
    let plus = probe(1.0)?;
    let minus = probe(-1.0)?;
    let tol = 1e-9;
    let sign = if plus <= tol && plus <= minus {
        1.0
    } else if minus <= tol {
        -1.0
    } else {
        return Err(Error::NoConservedSign { plus, minus });
    };
    Ok(ResolvedPlanarIntegral {
        observable: planar_angular_integral(g, sign),
        sign,
        residual_plus: plus,
        residual_minus: minus,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Coefficients of the angular integral that match the reduced three-body
/// system, derived from its pair forms rather than read off the pair
/// couplings.
pub fn planar_effective_couplings(reduced: &ReducedCalogero) -> [f64; 3] {
    let s3 = 3f64.sqrt();
    // reference forms in (ρ, λ): √3λ − ρ, √3λ + ρ, ρ
    let reference = [[-1.0, s3], [1.0, s3], [1.0, 0.0]];
    let forms = reduced.pair_forms();
    let mut out = [0.0; 3];
    for i in 0..3 {
        let r = reference[i];
        let f = forms[i];
        // f = κ·r, so g/f² = (g/κ²)/r²
        let kappa = (f[0] * r[0] + f[1] * r[1]) / (r[0] * r[0] + r[1] * r[1]);
        out[i] = reduced.g[i] / (kappa * kappa);
    }
    out
}

/// The reduced three-body system with its angular integral.
pub fn planar_calogero_integrals(omega: f64, g: [f64; 3]) -> Result<(IntegralSet, ResolvedPlanarIntegral)> {
    let system = models::calogero_reduced_2d(omega, g)?;
    let eff = planar_effective_couplings(&ReducedCalogero::new(omega, g));
    let resolved = resolve_planar_integral(&system, eff)?;
    let mut set = IntegralSet::new("calogero-reduced-2d", system, vec![resolved.observable.clone()], 2)?;
    set.pair("polar", "H", "planar-angular");
    let q1 = Observable::new("q1", Coordinate { index: 0, dim: 4 });
    set.controls.push(InvolutivePair::new("none", &set.members[1].clone(), &q1));
    Ok((set, resolved))
}

/// Three particles on a line (`H = |p|² + V`): the rotational integrals of
/// the profile `k/2` pulled back through the rotation, of rank 4 (see
/// [`rotational_relation`]). With a harmonic term only the axial and
/// vertical integrals survive.
pub fn calogero_line_integrals(omega: f64, g: [f64; 3]) -> Result<IntegralSet> {
    let system = models::calogero_3body(omega, g)?;
    let k = AngularProfile::from_calogero(g).scaled(0.5);
    let to_rotated = rotation_canonical().inverse();
    let pulled = |f: QuadraticIntegral, label: &str| f.observable(label).pullback(&to_rotated).with_label(label);
    let mut members = vec![
        pulled(axial(&k), "axial"),
        pulled(vertical(Vec::new()), "cylindrical"),
    ];
    let rank = if omega == 0.0 {
        members.insert(0, pulled(spherical_total(&k), "spherical"));
        members.push(pulled(parabolic(&k, Vec::new()), "parabolic"));
        // the pulled-back integrals obey the same quadratic relation
        4
    } else {
        3
    };
    let mut set = IntegralSet::new("calogero-1d", system, members, rank)?;
    set.pair("circular-cylindrical", "axial", "cylindrical");
    if omega == 0.0 {
        set.pair("spherical", "spherical", "axial");
        set.pair("rotational-parabolic", "axial", "parabolic");
    }
    Ok(set)
}

/// The integral set carried by a described system.
pub fn integrals_for(spec: &PotentialSpec) -> Result<IntegralSet> {
    spec.validate()?;
    let omega = spec.param("omega").unwrap_or(0.0);
    let g = spec.couplings();
    let radial = spec.radial.clone().unwrap_or_default();
    let h = spec.azimuthal.clone().unwrap_or_default();
    let (alpha, beta) = (spec.param("alpha").unwrap_or(0.0), spec.param("beta").unwrap_or(0.0));
    match spec.family {
        Family::Calogero1d => calogero_line_integrals(omega, g),
        Family::CalogeroReduced2d => Ok(planar_calogero_integrals(omega, g)?.0),
        Family::RotationalFamily => match spec.param("a") {
            Some(a) => rotational_integrals_with(&spec.azimuthal_profile(), &[a]),
            None => rotational_integrals(&spec.azimuthal_profile()),
        },
        Family::SphericalSeparable => match spec.plane_couplings() {
            Some(c) => coordinate_plane_integrals(c, radial),
            None => Err(Error::Config(
                "spherical-separable without c1..c3 has no catalogued integral set".into(),
            )),
        },
        Family::MinimalV1 => minimal_integrals(MinimalVariant::V1, alpha, beta, &h),
        Family::MinimalV2 => minimal_integrals(MinimalVariant::V2, alpha, beta, &h),
        Family::MinimalV3 => minimal_integrals(MinimalVariant::V3, alpha, beta, &h),
        Family::LayeredXy => layered_integrals(
            spec.base.clone().map(|b| Arc::new(b) as Arc<dyn Field>),
            radial,
            spec.param("a").unwrap_or(1.0),
        ),
        Family::LayeredRtheta => meridian_integrals(models::radial_base(radial), &h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(z: [f64; 6]) -> PhaseState {
        PhaseState::from_flat(&z).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng) -> PhaseState {
        let q = [0, 1, 2].map(|_| rng.random_range(-2.0..2.0));
        let p = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0));
        PhaseState::new(&q, &p).unwrap()
    }

    #[test]
    fn angular_momentum_examples() {
        assert_eq!(angular_momenta(&state([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(angular_momenta(&state([0.0, 0.0, 1.0, 1.0, 0.0, 0.0])).unwrap(), [0.0, 1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let z = random_state(&mut rng);
            let l = angular_momenta(&z).unwrap();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let lagrange = dot(z.q(), z.q()) * dot(z.p(), z.p()) - dot(z.q(), z.p()).powi(2);
            assert!((dot(&l, &l) - lagrange).abs() < 1e-12);
        }
    }

    #[test]
    fn free_values_of_rotational_integrals() {
        let set = rotational_integrals(&AngularProfile::default()).unwrap();
        let z = state([1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let vals: Vec<f64> = set.members.iter().map(|m| m.value(&z).unwrap()).collect();
        assert_eq!(vals, vec![0.5, 1.0, 0.0, 0.5, 0.0]);
        let sph = set.member("spherical").unwrap();
        let cyl = set.member("cylindrical").unwrap();
        assert_eq!(sph.combine(1.0, cyl, -2.0).value(&z).unwrap(), 0.0);
    }

    #[test]
    fn linear_connection_coefficients_example() {
        assert_eq!(linear_connection_coefficients(&[1.0, 2.0, 3.0]), [18.0, 1.0, -1.0, -28.0, 3.0]);
        let z = state([1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(linear_connection_residual(&z, &AngularProfile::default()).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_part_examples() {
        let set = rotational_integrals(&AngularProfile::default()).unwrap();
        let qp = quadratic_part(set.member("axial").unwrap(), &[1.0, 0.0, 0.0]).unwrap();
        let mut expected = DMatrix::zeros(3, 3);
        expected[(1, 1)] = 1.0;
        assert!((qp.tensor - expected).amax() < 1e-15);
        assert_eq!(qp.scalar, 0.0);
        let k = AngularProfile::from_calogero([1.0, 2.0, 0.5]);
        let set = rotational_integrals(&k).unwrap();
        let q = [0.4, 1.1, -0.7];
        let qp = quadratic_part(&set.members[0], &q).unwrap();
        assert!((qp.tensor - DMatrix::identity(3, 3) * 0.5).amax() < 1e-15);
        assert!((qp.scalar - set.system.potential_value(&q).unwrap()).abs() < 1e-14);
        // L₁ is linear in the momenta
        let [l1, _, _] = angular_momentum_observables();
        assert!(matches!(quadratic_part(&l1, &q), Err(Error::NotQuadratic(_))));
    }

    #[test]
    fn coordinate_plane_example() {
        let set = coordinate_plane_integrals([1.0, 0.0, 0.0], PowerTerms::default()).unwrap();
        let z = state([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(set.member("plane-3").unwrap().value(&z).unwrap(), 3.0);
        let set = coordinate_plane_integrals([0.0; 3], PowerTerms::default()).unwrap();
        let z = state([0.3, -0.2, 0.9, 0.5, 0.1, -0.4]);
        let l = angular_momenta(&z).unwrap();
        for (i, name) in ["plane-1", "plane-2", "plane-3"].iter().enumerate() {
            assert!((set.member(name).unwrap().value(&z).unwrap() - l[i] * l[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn isometry_integrals() {
        assert!(planar_isometry_integrals(0.0).is_err());
        let [x1, x2, _, _] = planar_isometry_integrals(1.0).unwrap();
        // the witness state has p₂ = 0 at q = (1,1,0), where the bracket vanishes
        let zero = state([1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(poisson_bracket(&x1, &x2, &zero).unwrap(), 0.0);
        let z = state([1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(poisson_bracket(&x1, &x2, &z).unwrap(), -4.0);
    }

    #[test]
    fn planar_sign_probe() {
        let (set, resolved) = planar_calogero_integrals(0.0, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(resolved.sign, 1.0);
        assert!(resolved.residual_minus > 1e-3);
        assert_eq!(set.members.len(), 2);
        let eff = planar_effective_couplings(&ReducedCalogero::new(0.0, [1.0, 1.0, 1.0]));
        for (a, b) in eff.iter().zip([2.0, 2.0, 0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
        // the raw pair couplings do not give an integral with either sign
        let system = models::calogero_reduced_2d(0.0, [1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            resolve_planar_integral(&system, [1.0, 1.0, 1.0]),
            Err(Error::NoConservedSign { .. })
        ));
    }

    #[test]
    fn line_frame_integrals_commute() {
        let set = calogero_line_integrals(0.0, [1.0, 0.7, 1.3]).unwrap();
        let h = &set.members[0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z = random_state(&mut rng);
            for f in &set.members[1..] {
                let b = poisson_bracket(h, f, &z).unwrap();
                let scale = norm(&h.gradient(z.as_slice()).unwrap()) * norm(&f.gradient(z.as_slice()).unwrap());
                assert!(b.abs() <= 1e-9 * scale, "{} {b}", f.label());
            }
        }
    }

    #[test]
    fn set_members_share_dimension() {
        for set in [
            rotational_integrals(&AngularProfile::constant(1.0)).unwrap(),
            minimal_integrals(MinimalVariant::V2, -1.0, 0.3, &AngularProfile::constant(0.5)).unwrap(),
            layered_integrals(None, PowerTerms::new(&[(0.5, 2)]), 1.0).unwrap(),
        ] {
            assert!(set.members.iter().all(|m| m.arity() == 6));
        }
    }

    #[test]
    fn rotational_integrals_obey_quadratic_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fourier = AngularProfile::random_fourier(&mut rng, 3);
        for k in [AngularProfile::from_calogero([1.0, 0.4, 2.0]), fourier] {
            for _ in 0..50 {
                let z = random_state(&mut rng);
                if crate::numcore::clearance(&models::RotationalPotential { k: k.clone() }, z.q()) < 1e-2 {
                    continue;
                }
                let r = rotational_relation_residual(&z, &k).unwrap();
                assert!(r < 1e-12, "{r}");
            }
        }
    }
}
