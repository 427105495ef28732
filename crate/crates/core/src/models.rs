//! Catalog of potentials and Hamiltonian systems.
//!
//! Two kinetic conventions coexist: the line-particle models use
//! `H = |p|² + V` (kinetic factor 1) and every Euclidean-space family uses
//! `H = ½|p|² + V`. Equivalence checks between the two state which one they
//! use.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::charts::{jacobi_inverse, rotation_matrix};
use crate::error::{Error, EvalError, Result};
use crate::numcore::{guard, Field, Real, Scalar, ScalarFn};
use crate::phase::HamiltonianSystem;

/// `c / (α cos φ + β sin φ)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseSquareTerm {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `a cos mφ + b sin mφ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub m: u32,
    pub a: f64,
    pub b: f64,
}

/// A 2π-periodic angular function, used for the arbitrary azimuthal
/// function `k(φ)` and for polar profiles `g(θ)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularProfile {
    #[serde(default)]
    pub inverse_square_terms: Vec<InverseSquareTerm>,
    #[serde(default)]
    pub fourier_terms: Vec<FourierTerm>,
    #[serde(default)]
    pub constant: f64,
}

impl AngularProfile {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.inverse_square_terms {
            if !(t.c.is_finite() && t.alpha.is_finite() && t.beta.is_finite()) {
                return Err(Error::Input("non-finite inverse-square term".into()));
            }
            if t.alpha == 0.0 && t.beta == 0.0 {
                return Err(Error::Input("inverse-square term with (α, β) = (0, 0)".into()));
            }
        }
        for t in &self.fourier_terms {
            if t.m == 0 {
                return Err(Error::Input("Fourier mode must be >= 1".into()));
            }
            if !(t.a.is_finite() && t.b.is_finite()) {
                return Err(Error::Input("non-finite Fourier coefficient".into()));
            }
        }
        if !self.constant.is_finite() {
            return Err(Error::Input("non-finite constant".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0
            && self.inverse_square_terms.iter().all(|t| t.c == 0.0)
            && self.fourier_terms.iter().all(|t| t.a == 0.0 && t.b == 0.0)
    }

    /// Every term multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            inverse_square_terms: self
                .inverse_square_terms
                .iter()
                .map(|t| InverseSquareTerm { c: t.c * s, ..*t })
                .collect(),
            fourier_terms: self
                .fourier_terms
                .iter()
                .map(|t| FourierTerm {
                    a: t.a * s,
                    b: t.b * s,
                    ..*t
                })
                .collect(),
            constant: self.constant * s,
        }
    }

    /// Profile `k` with `ρ̃²·V_cal(M x̃) = k(φ̃)` for the pair couplings
    /// `g = (g₁, g₂, g₃)` on the pairs (2,3), (1,3), (1,2).
    ///
    /// The linear forms come from the rows of the rotation; nothing is
    /// transcribed.
    pub fn from_calogero(g: [f64; 3]) -> Self {
        let inverse_square_terms = rotated_pair_forms()
            .iter()
            .zip(g)
            .filter(|(_, gi)| *gi != 0.0)
            .map(|(form, gi)| InverseSquareTerm {
                c: gi,
                alpha: form[0],
                beta: form[1],
            })
            .collect();
        Self {
            inverse_square_terms,
            ..Self::default()
        }
    }

    /// Random Fourier profile, positive everywhere.
    pub fn random_fourier<R: Rng>(rng: &mut R, modes: u32) -> Self {
        let fourier_terms: Vec<FourierTerm> = (1..=modes)
            .map(|m| FourierTerm {
                m,
                a: rng.random_range(-0.5..0.5),
                b: rng.random_range(-0.5..0.5),
            })
            .collect();
        let floor: f64 = fourier_terms.iter().map(|t| t.a.abs() + t.b.abs()).sum();
        Self {
            inverse_square_terms: Vec::new(),
            fourier_terms,
            constant: 1.0 + floor,
        }
    }

    /// `k(φ)`.
    pub fn eval_angle(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        let mut k = self.constant;
        for t in &self.inverse_square_terms {
            let d = t.alpha * c + t.beta * s;
            k += t.c / (d * d);
        }
        for t in &self.fourier_terms {
            let (sm, cm) = (t.m as f64 * phi).sin_cos();
            k += t.a * cm + t.b * sm;
        }
        k
    }

    /// `k` at the angle of the planar point `(x, y)`, without trigonometric
    /// calls.
    pub fn eval_xy<S: Real>(&self, x: S, y: S) -> Result<S, EvalError> {
        let rho = guard((x * x + y * y).sqrt(), "distance to axis")?;
        let c = x / rho;
        let s = y / rho;
        self.eval_cs(c, s)
    }

    /// `k` given `(cos φ, sin φ)`.
    pub fn eval_cs<S: Real>(&self, c: S, s: S) -> Result<S, EvalError> {
        let mut k = S::cst(self.constant);
        for t in &self.inverse_square_terms {
            if t.c == 0.0 {
                continue;
            }
            let d = guard(c * t.alpha + s * t.beta, "angular linear form")?;
            k = k + (d * d).recip() * t.c;
        }
        if !self.fourier_terms.is_empty() {
            let top = self.fourier_terms.iter().map(|t| t.m).max().unwrap_or(0);
            // (cos mφ, sin mφ) by repeated complex multiplication
            let mut cm = c;
            let mut sm = s;
            for m in 1..=top {
                for t in self.fourier_terms.iter().filter(|t| t.m == m) {
                    k = k + cm * t.a + sm * t.b;
                }
                let next_c = cm * c - sm * s;
                let next_s = sm * c + cm * s;
                cm = next_c;
                sm = next_s;
            }
        }
        Ok(k)
    }
}

/// `Σ cₙ sⁿ`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerms {
    pub terms: Vec<PowerTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub power: i32,
}

impl PowerTerms {
    pub fn new(terms: &[(f64, i32)]) -> Self {
        Self {
            terms: terms
                .iter()
                .map(|&(coefficient, power)| PowerTerm { coefficient, power })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.iter().all(|t| t.coefficient.is_finite()) {
            Ok(())
        } else {
            Err(Error::Input("non-finite power-series coefficient".into()))
        }
    }

    pub fn eval<S: Real>(&self, s: S) -> Result<S, EvalError> {
        let mut acc = S::zero();
        for t in &self.terms {
            if t.coefficient == 0.0 {
                continue;
            }
            let base = if t.power < 0 { guard(s, "radial variable")? } else { s };
            acc = acc + base.powi(t.power) * t.coefficient;
        }
        Ok(acc)
    }
}

/// `x_i − x_j` for the pairs (2,3), (1,3), (1,2) written as linear forms in
/// `(x̃₁, x̃₂, x̃₃)` after `x = M x̃`.
pub fn rotated_pair_forms() -> [[f64; 3]; 3] {
    let m = rotation_matrix();
    let diff = |i: usize, j: usize| [0, 1, 2].map(|c| m[(i, c)] - m[(j, c)]);
    [diff(1, 2), diff(0, 2), diff(0, 1)]
}

/// The same pair differences as linear forms in the Jacobi pair `(ρ, λ)`,
/// obtained from the inverse Jacobi map.
pub fn jacobi_pair_forms() -> [[f64; 2]; 3] {
    let col = |v: [f64; 3]| jacobi_inverse(v);
    let e_rho = col([0.0, 1.0, 0.0]);
    let e_lam = col([0.0, 0.0, 1.0]);
    let diff = |i: usize, j: usize| [e_rho[i] - e_rho[j], e_lam[i] - e_lam[j]];
    [diff(1, 2), diff(0, 2), diff(0, 1)]
}

/// Three particles on a line with pair couplings and a harmonic pair
/// interaction.
#[derive(Debug, Clone)]
pub struct CalogeroLine {
    pub omega: f64,
    pub g: [f64; 3],
}

impl ScalarFn for CalogeroLine {
    fn arity(&self) -> usize {
        3
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let pairs = [(1, 2), (0, 2), (0, 1)];
        let mut v = S::zero();
        let mut spread = S::zero();
        for (gk, (i, j)) in self.g.iter().zip(pairs) {
            let d = x[i] - x[j];
            spread = spread + d * d;
            if *gk != 0.0 {
                let d = guard(d, "pair separation")?;
                v = v + (d * d).recip() * *gk;
            }
        }
        Ok(v + spread * (self.omega * self.omega / 8.0))
    }
}

/// Relative motion of [`CalogeroLine`] in the Jacobi plane `(ρ, λ)`.
#[derive(Debug, Clone)]
pub struct ReducedCalogero {
    pub omega: f64,
    pub g: [f64; 3],
    forms: [[f64; 2]; 3],
    /// `Σ (x_i − x_j)²` as a quadratic form in `(ρ, λ)`.
    spread: [[f64; 2]; 2],
}

impl ReducedCalogero {
    pub fn new(omega: f64, g: [f64; 3]) -> Self {
        let forms = jacobi_pair_forms();
        let mut spread = [[0.0; 2]; 2];
        for f in &forms {
            for a in 0..2 {
                for b in 0..2 {
                    spread[a][b] += f[a] * f[b];
                }
            }
        }
        Self {
            omega,
            g,
            forms,
            spread,
        }
    }

    pub fn pair_forms(&self) -> [[f64; 2]; 3] {
        self.forms
    }

    /// Coefficient of `ρ² + λ²` in the harmonic part (the form is isotropic).
    pub fn harmonic_coefficient(&self) -> f64 {
        self.omega * self.omega / 8.0 * self.spread[0][0]
    }

    pub fn spread_form(&self) -> [[f64; 2]; 2] {
        self.spread
    }
}

impl ScalarFn for ReducedCalogero {
    fn arity(&self) -> usize {
        2
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let (rho, lam) = (x[0], x[1]);
        let mut v = S::zero();
        for (gk, f) in self.g.iter().zip(&self.forms) {
            if *gk != 0.0 {
                let d = guard(rho * f[0] + lam * f[1], "pair separation")?;
                v = v + (d * d).recip() * *gk;
            }
        }
        let s = self.spread;
        let quad = rho * rho * s[0][0] + rho * lam * (2.0 * s[0][1]) + lam * lam * s[1][1];
        Ok(v + quad * (self.omega * self.omega / 8.0))
    }
}

/// `k(φ)/(x₁² + x₂²)`.
#[derive(Debug, Clone)]
pub struct RotationalPotential {
    pub k: AngularProfile,
}

pub(crate) fn axial_term<S: Real>(k: &AngularProfile, x: &[S]) -> Result<S, EvalError> {
    if k.is_zero() {
        return Ok(S::zero());
    }
    let rho2 = guard(x[0] * x[0] + x[1] * x[1], "x1^2 + x2^2")?;
    Ok(k.eval_xy(x[0], x[1])? / rho2)
}

impl ScalarFn for RotationalPotential {
    fn arity(&self) -> usize {
        3
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        axial_term(&self.k, x)
    }
}

/// `f(r) + g(θ)/r² + k(φ)/(r² sin²θ)`.
#[derive(Debug, Clone)]
pub struct SphericalSeparable {
    pub radial: PowerTerms,
    pub polar: AngularProfile,
    pub azimuthal: AngularProfile,
}

impl ScalarFn for SphericalSeparable {
    fn arity(&self) -> usize {
        3
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let mut v = S::zero();
        if !self.radial.is_zero() {
            v = v + self.radial.eval(r2.sqrt())?;
        }
        if !self.polar.is_zero() {
            let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let g = self.polar.eval_xy(x[2], rho)?;
            v = v + g / guard(r2, "r^2")?;
        }
        Ok(v + axial_term(&self.azimuthal, x)?)
    }
}

/// Which minimally superintegrable family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimalVariant {
    V1,
    V2,
    V3,
}

/// `V₁ = α r² + β/x₃² + h/ρ²`, `V₂ = α/r + β cosθ/(r² sin²θ) + h/ρ²`,
/// `V₃ = α(ρ² + 4x₃²) + h/ρ²` (for `V₃` the parameter `α` is the spring
/// constant).
#[derive(Debug, Clone)]
pub struct MinimalPotential {
    pub variant: MinimalVariant,
    pub alpha: f64,
    pub beta: f64,
    pub h: AngularProfile,
}

impl ScalarFn for MinimalPotential {
    fn arity(&self) -> usize {
        3
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let rho2 = x[0] * x[0] + x[1] * x[1];
        let r2 = rho2 + x[2] * x[2];
        let mut v = axial_term(&self.h, x)?;
        match self.variant {
            MinimalVariant::V1 => {
                v = v + r2 * self.alpha;
                if self.beta != 0.0 {
                    let x3 = guard(x[2], "x3")?;
                    v = v + (x3 * x3).recip() * self.beta;
                }
            }
            MinimalVariant::V2 => {
                let r = r2.sqrt();
                if self.alpha != 0.0 {
                    v = v + guard(r, "r")?.recip() * self.alpha;
                }
                if self.beta != 0.0 {
                    // β cosθ/(r² sin²θ) = β x₃ / (r ρ²)
                    let den = guard(rho2, "x1^2 + x2^2")? * guard(r, "r")?;
                    v = v + x[2] / den * self.beta;
                }
            }
            MinimalVariant::V3 => {
                v = v + (rho2 + x[2] * x[2] * 4.0) * self.alpha;
            }
        }
        Ok(v)
    }
}

/// `Ṽ(x₁, x₂) + f(x₃)`.
pub struct LayeredXY {
    pub base: Arc<dyn Field>,
    pub f: PowerTerms,
}

impl ScalarFn for LayeredXY {
    fn arity(&self) -> usize {
        3
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        Ok(S::eval(&*self.base, &x[..2])? + self.f.eval(x[2])?)
    }
}

/// `Ṽ(r, θ) + k(φ)/(r² sin²θ)`.
pub struct LayeredRTheta {
    pub base: Arc<dyn Field>,
    pub k: AngularProfile,
}

impl ScalarFn for LayeredRTheta {
    fn arity(&self) -> usize {
        3
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let theta = rho.atan2(x[2]);
        Ok(S::eval(&*self.base, &[r, theta])? + axial_term(&self.k, x)?)
    }
}

/// Identically zero potential in `dim` variables.
#[derive(Debug, Clone, Copy)]
pub struct ZeroPotential(pub usize);

impl ScalarFn for ZeroPotential {
    fn arity(&self) -> usize {
        self.0
    }
    fn apply<S: Scalar>(&self, _x: &[S]) -> Result<S, EvalError> {
        Ok(S::zero())
    }
}

/// `Σ c_ij x^i y^j` in two variables; a convenient base for layered systems.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarPolynomial {
    /// `(coefficient, i, j)`.
    pub terms: Vec<(f64, u32, u32)>,
}

impl ScalarFn for PlanarPolynomial {
    fn arity(&self) -> usize {
        2
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        let mut acc = S::zero();
        for &(c, i, j) in &self.terms {
            acc = acc + x[0].powi(i as i32) * x[1].powi(j as i32) * c;
        }
        Ok(acc)
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("non-finite {what}")))
    }
}

/// Three particles on a line, `H = |p|² + V` in `x = (x₁, x₂, x₃)`.
pub fn calogero_3body(omega: f64, g: [f64; 3]) -> Result<HamiltonianSystem> {
    check_finite(&[omega, g[0], g[1], g[2]], "coupling")?;
    if omega < 0.0 {
        return Err(Error::Input(format!("ω must be non-negative, got {omega}")));
    }
    Ok(HamiltonianSystem::new(
        "calogero-1d",
        1.0,
        Arc::new(CalogeroLine { omega, g }),
    ))
}

/// Relative motion in `(ρ, λ)` with the centre of mass removed, `H = |p|² + V`.
pub fn calogero_reduced_2d(omega: f64, g: [f64; 3]) -> Result<HamiltonianSystem> {
    check_finite(&[omega, g[0], g[1], g[2]], "coupling")?;
    if omega < 0.0 {
        return Err(Error::Input(format!("ω must be non-negative, got {omega}")));
    }
    Ok(HamiltonianSystem::new(
        "calogero-reduced-2d",
        1.0,
        Arc::new(ReducedCalogero::new(omega, g)),
    ))
}

/// `H = ½|p|² + k(φ)/(x₁² + x₂²)`.
pub fn rotational_family(k: AngularProfile) -> Result<HamiltonianSystem> {
    k.validate()?;
    Ok(HamiltonianSystem::new(
        "rotational-family",
        0.5,
        Arc::new(RotationalPotential { k }),
    ))
}

/// Profile of the rotated three-body potential; see
/// [`AngularProfile::from_calogero`].
pub fn angular_profile_from_calogero(g: [f64; 3]) -> AngularProfile {
    AngularProfile::from_calogero(g)
}

pub fn minimal_potentials(
    variant: MinimalVariant,
    alpha: f64,
    beta: f64,
    h: AngularProfile,
) -> Result<HamiltonianSystem> {
    check_finite(&[alpha, beta], "parameter")?;
    h.validate()?;
    let label = match variant {
        MinimalVariant::V1 => "minimal-v1",
        MinimalVariant::V2 => "minimal-v2",
        MinimalVariant::V3 => "minimal-v3",
    };
    Ok(HamiltonianSystem::new(
        label,
        0.5,
        Arc::new(MinimalPotential {
            variant,
            alpha,
            beta,
            h,
        }),
    ))
}

pub fn layered_xy(base: Arc<dyn Field>, f: PowerTerms) -> Result<HamiltonianSystem> {
    if base.arity() != 2 {
        return Err(Error::Input("planar base potential must take (x1, x2)".into()));
    }
    f.validate()?;
    Ok(HamiltonianSystem::new("layered-xy", 0.5, Arc::new(LayeredXY { base, f })))
}

pub fn layered_rtheta(base: Arc<dyn Field>, k: AngularProfile) -> Result<HamiltonianSystem> {
    if base.arity() != 2 {
        return Err(Error::Input("meridian base potential must take (r, θ)".into()));
    }
    k.validate()?;
    Ok(HamiltonianSystem::new(
        "layered-rtheta",
        0.5,
        Arc::new(LayeredRTheta { base, k }),
    ))
}

pub fn spherical_separable(
    radial: PowerTerms,
    polar: AngularProfile,
    azimuthal: AngularProfile,
) -> Result<HamiltonianSystem> {
    radial.validate()?;
    polar.validate()?;
    azimuthal.validate()?;
    Ok(HamiltonianSystem::new(
        "spherical-separable",
        0.5,
        Arc::new(SphericalSeparable {
            radial,
            polar,
            azimuthal,
        }),
    ))
}

/// `F(r) + c₁/x₁² + c₂/x₂² + c₃/x₃²`, expressed through the spherical
/// separable form.
pub fn coordinate_planes(c: [f64; 3], radial: PowerTerms) -> Result<HamiltonianSystem> {
    check_finite(&c, "plane coupling")?;
    let term = |c: f64, alpha: f64, beta: f64| InverseSquareTerm { c, alpha, beta };
    let polar = AngularProfile {
        inverse_square_terms: vec![term(c[2], 1.0, 0.0)],
        ..AngularProfile::default()
    };
    let azimuthal = AngularProfile {
        inverse_square_terms: vec![term(c[0], 1.0, 0.0), term(c[1], 0.0, 1.0)],
        ..AngularProfile::default()
    };
    let s = spherical_separable(radial, polar, azimuthal)?;
    Ok(HamiltonianSystem::new("coordinate-planes", 0.5, s.potential_arc()))
}

pub fn free_particle(dof: usize) -> HamiltonianSystem {
    HamiltonianSystem::new("free", 0.5, Arc::new(ZeroPotential(dof)))
}

/// `½|q|²` with `H = ½|p|² + V`.
pub fn isotropic_oscillator() -> HamiltonianSystem {
    let s = spherical_separable(
        PowerTerms::new(&[(0.5, 2)]),
        AngularProfile::default(),
        AngularProfile::default(),
    )
    .expect("static parameters");
    HamiltonianSystem::new("isotropic-oscillator", 0.5, s.potential_arc())
}

/// Family tags of [`PotentialSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Calogero1d,
    CalogeroReduced2d,
    RotationalFamily,
    SphericalSeparable,
    MinimalV1,
    MinimalV2,
    MinimalV3,
    LayeredXy,
    LayeredRtheta,
}

/// Serialized description of a system.
///
/// Parameter names: `omega`, `g1`..`g3`, `alpha`, `beta`, `c1`..`c3`, `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub family: Family,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// `k(φ)` or `h(φ)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuthal: Option<AngularProfile>,
    /// `g(θ)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar: Option<AngularProfile>,
    /// `f(r)` or `f(x₃)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial: Option<PowerTerms>,
    /// Base of layered systems; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<PlanarPolynomial>,
}

const KNOWN_PARAMETERS: [&str; 10] = ["omega", "g1", "g2", "g3", "alpha", "beta", "c1", "c2", "c3", "a"];

impl PotentialSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            parameters: BTreeMap::new(),
            azimuthal: None,
            polar: None,
            radial: None,
            base: None,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).copied()
    }

    fn param_or(&self, name: &str, default: f64) -> f64 {
        self.param(name).unwrap_or(default)
    }

    pub fn couplings(&self) -> [f64; 3] {
        ["g1", "g2", "g3"].map(|n| self.param_or(n, 0.0))
    }

    pub fn plane_couplings(&self) -> Option<[f64; 3]> {
        let c = ["c1", "c2", "c3"].map(|n| self.param(n));
        if c.iter().any(Option::is_some) {
            Some(c.map(|v| v.unwrap_or(0.0)))
        } else {
            None
        }
    }

    /// Azimuthal profile; falls back to the three-body profile from
    /// `g1..g3`.
    pub fn azimuthal_profile(&self) -> AngularProfile {
        match &self.azimuthal {
            Some(k) => k.clone(),
            None => AngularProfile::from_calogero(self.couplings()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in &self.parameters {
            if !KNOWN_PARAMETERS.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown parameter '{name}'")));
            }
            if !v.is_finite() {
                return Err(Error::Config(format!("parameter '{name}' is not finite")));
            }
        }
        if let Some(k) = &self.azimuthal {
            k.validate()?;
        }
        if let Some(g) = &self.polar {
            g.validate()?;
        }
        if let Some(f) = &self.radial {
            f.validate()?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<HamiltonianSystem> {
        self.validate()?;
        let radial = self.radial.clone().unwrap_or_default();
        let base = || -> Arc<dyn Field> {
            match &self.base {
                Some(b) => Arc::new(b.clone()),
                None => Arc::new(ZeroPotential(2)),
            }
        };
        match self.family {
            Family::Calogero1d => calogero_3body(self.param_or("omega", 0.0), self.couplings()),
            Family::CalogeroReduced2d => {
                calogero_reduced_2d(self.param_or("omega", 0.0), self.couplings())
            }
            Family::RotationalFamily => rotational_family(self.azimuthal_profile()),
            Family::SphericalSeparable => match self.plane_couplings() {
                Some(c) => coordinate_planes(c, radial),
                None => spherical_separable(
                    radial,
                    self.polar.clone().unwrap_or_default(),
                    self.azimuthal.clone().unwrap_or_default(),
                ),
            },
            Family::MinimalV1 | Family::MinimalV2 | Family::MinimalV3 => {
                let variant = match self.family {
                    Family::MinimalV1 => MinimalVariant::V1,
                    Family::MinimalV2 => MinimalVariant::V2,
                    _ => MinimalVariant::V3,
                };
                minimal_potentials(
                    variant,
                    self.param_or("alpha", 0.0),
                    self.param_or("beta", 0.0),
                    self.azimuthal.clone().unwrap_or_default(),
                )
            }
            Family::LayeredXy => layered_xy(base(), radial),
            Family::LayeredRtheta => {
                // meridian base from the radial terms: Ṽ(r, θ) = f(r)
                layered_rtheta(radial_base(radial), self.azimuthal.clone().unwrap_or_default())
            }
        }
    }
}

/// Meridian base `Ṽ(r, θ) = f(r)` for the layered `(r, θ)` family.
pub fn radial_base(f: PowerTerms) -> Arc<dyn Field> {
    Arc::new(RadialBase(f))
}

struct RadialBase(PowerTerms);

impl ScalarFn for RadialBase {
    fn arity(&self) -> usize {
        2
    }
    fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
        self.0.eval(x[0])
    }
}

/// Angles `(j + ½)·2π/count`, clear of the rays where the three-body profile
/// is singular.
pub fn audit_angles(count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| (j as f64 + 0.5) * 2.0 * PI / count as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{jacobi_transform, rotation_tr};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_body_values() {
        let s = calogero_3body(0.0, [1.0, 1.0, 1.0]).unwrap();
        assert!((s.potential_value(&[1.0, 0.0, -1.0]).unwrap() - 2.25).abs() < 1e-15);
        let s = calogero_3body(1.0, [0.0; 3]).unwrap();
        assert!((s.potential_value(&[1.0, 0.0, -1.0]).unwrap() - 0.75).abs() < 1e-15);
        let s = calogero_3body(0.0, [1.0; 3]).unwrap();
        assert!(matches!(
            s.potential_value(&[0.4, 0.4, 0.4]),
            Err(EvalError::Singular { .. })
        ));
        assert!(calogero_3body(-1.0, [0.0; 3]).is_err());
    }

    #[test]
    fn reduced_matches_line_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = [0.7, 1.3, 0.4];
        let line = calogero_3body(1.1, g).unwrap();
        let red = calogero_reduced_2d(1.1, g).unwrap();
        for _ in 0..100 {
            let x = [0, 1, 2].map(|_| rng.random_range(-2.0..2.0));
            let [_, rho, lam] = jacobi_transform(x);
            let a = line.potential_value(&x).unwrap();
            let b = red.potential_value(&[rho, lam]).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn reduced_harmonic_coefficient() {
        let r = ReducedCalogero::new(1.0, [0.0; 3]);
        assert!((r.harmonic_coefficient() - 3.0 / 8.0).abs() < 1e-15);
        let s = r.spread_form();
        assert!(s[0][1].abs() < 1e-14 && (s[0][0] - s[1][1]).abs() < 1e-14);
        let red = calogero_reduced_2d(0.0, [0.0, 0.0, 1.0]).unwrap();
        assert!(red.potential_value(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn rotational_values() {
        let s = rotational_family(AngularProfile::constant(3.0)).unwrap();
        assert!((s.potential_value(&[1.0, 1.0, 0.0]).unwrap() - 1.5).abs() < 1e-15);
        assert!(s.potential_value(&[0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn calogero_profile_value_on_vertical_ray() {
        let k = angular_profile_from_calogero([1.0; 3]);
        assert!((k.eval_angle(PI / 2.0) - 4.5).abs() < 1e-14);
        // oracle: the rotated line potential at two radii on the same ray
        let line = calogero_3body(0.0, [1.0; 3]).unwrap();
        for r in [1.0, 2.0] {
            let x = rotation_tr([0.0, r, 0.37]);
            let v = line.potential_value(&x).unwrap();
            assert!((v * r * r - 4.5).abs() < 1e-12);
        }
        assert!(angular_profile_from_calogero([0.0; 3]).is_zero());
    }

    #[test]
    fn profile_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut k = AngularProfile::random_fourier(&mut rng, 4);
        k.inverse_square_terms.push(InverseSquareTerm {
            c: 0.3,
            alpha: 1.0,
            beta: -0.4,
        });
        for phi in audit_angles(40) {
            let (s, c) = phi.sin_cos();
            let a = k.eval_angle(phi);
            let b = k.eval_xy(2.5 * c, 2.5 * s).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            let shifted = k.eval_angle(phi + 2.0 * PI);
            assert!((a - shifted).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn profile_validation() {
        let bad = AngularProfile {
            inverse_square_terms: vec![InverseSquareTerm {
                c: 1.0,
                alpha: 0.0,
                beta: 0.0,
            }],
            ..AngularProfile::default()
        };
        assert!(bad.validate().is_err());
        let bad = AngularProfile {
            fourier_terms: vec![FourierTerm { m: 0, a: 1.0, b: 0.0 }],
            ..AngularProfile::default()
        };
        assert!(rotational_family(bad).is_err());
    }

    #[test]
    fn minimal_family_reductions() {
        let h = AngularProfile::constant(0.8);
        let v1 = minimal_potentials(MinimalVariant::V1, 0.0, 0.0, h.clone()).unwrap();
        let rot = rotational_family(h.clone()).unwrap();
        let q = [0.3, -1.2, 0.9];
        assert_eq!(v1.potential_value(&q).unwrap(), rot.potential_value(&q).unwrap());
        let v3 = minimal_potentials(MinimalVariant::V3, 0.7, 0.0, AngularProfile::default()).unwrap();
        let ratio = v3.potential_value(&[0.0, 0.0, 1.3]).unwrap() / v3.potential_value(&[1.3, 0.0, 0.0]).unwrap();
        assert!((ratio - 4.0).abs() < 1e-15);
        // Hartmann: α/r + c/(r² sin²θ)
        let v2 = minimal_potentials(MinimalVariant::V2, -1.0, 0.0, h).unwrap();
        let r = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
        let hart = -1.0 / r.sqrt() + 0.8 / (q[0] * q[0] + q[1] * q[1]);
        assert!((v2.potential_value(&q).unwrap() - hart).abs() < 1e-14);
        let v1b = minimal_potentials(MinimalVariant::V1, 0.0, 1.0, AngularProfile::default()).unwrap();
        assert!(v1b.potential_value(&[1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn layered_and_separable_reductions() {
        let free = layered_xy(Arc::new(ZeroPotential(2)), PowerTerms::default()).unwrap();
        assert_eq!(free.potential_value(&[0.3, 0.2, -4.0]).unwrap(), 0.0);
        let k = AngularProfile::constant(1.7);
        let lr = layered_rtheta(Arc::new(ZeroPotential(2)), k.clone()).unwrap();
        let rot = rotational_family(k.clone()).unwrap();
        let ss = spherical_separable(PowerTerms::default(), AngularProfile::default(), k).unwrap();
        let q = [0.5, 0.25, -0.75];
        assert!((lr.potential_value(&q).unwrap() - rot.potential_value(&q).unwrap()).abs() < 1e-15);
        assert_eq!(ss.potential_value(&q).unwrap(), rot.potential_value(&q).unwrap());
        let osc = isotropic_oscillator();
        assert!((osc.potential_value(&q).unwrap() - 0.5 * (0.25 + 0.0625 + 0.5625)).abs() < 1e-15);
    }

    #[test]
    fn coordinate_planes_matches_cartesian_form() {
        let c = [0.1, 0.2, 0.3];
        let s = coordinate_planes(c, PowerTerms::new(&[(1.0, 2)])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let q = [0, 1, 2].map(|_| rng.random_range(0.2..2.0));
            let r2: f64 = q.iter().map(|v| v * v).sum();
            let direct = r2 + c[0] / (q[0] * q[0]) + c[1] / (q[1] * q[1]) + c[2] / (q[2] * q[2]);
            let v = s.potential_value(&q).unwrap();
            assert!((v - direct).abs() < 1e-12 * direct);
        }
    }

    #[test]
    fn spec_builds_each_family() {
        let fams = [
            Family::Calogero1d,
            Family::CalogeroReduced2d,
            Family::RotationalFamily,
            Family::SphericalSeparable,
            Family::MinimalV1,
            Family::MinimalV2,
            Family::MinimalV3,
            Family::LayeredXy,
            Family::LayeredRtheta,
        ];
        for f in fams {
            let s = PotentialSpec::new(f).with("g1", 1.0).build().unwrap();
            assert!(s.dof() == 2 || s.dof() == 3);
        }
        assert!(PotentialSpec::new(Family::Calogero1d).with("bogus", 1.0).build().is_err());
    }
}
