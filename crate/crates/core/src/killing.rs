//! Killing tensors of `E³` with polynomial components of degree at most two.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, EvalError, Result};
use crate::integrals::quadratic_part;
use crate::numcore::{Scalar, ScalarFn};
use crate::phase::Observable;

/// Quadratic polynomial in `(x₁, x₂, x₃)`.
///
/// Coefficient order: `1, x₁, x₂, x₃, x₁², x₂², x₃², x₁x₂, x₁x₃, x₂x₃`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadratic3(pub [f64; 10]);

impl Quadratic3 {
    pub fn constant(c: f64) -> Self {
        let mut q = [0.0; 10];
        q[0] = c;
        Self(q)
    }

    fn basis<S: crate::numcore::Real>(x: &[S]) -> [S; 10] {
        let one = S::cst(1.0);
        [
            one,
            x[0],
            x[1],
            x[2],
            x[0] * x[0],
            x[1] * x[1],
            x[2] * x[2],
            x[0] * x[1],
            x[0] * x[2],
            x[1] * x[2],
        ]
    }

    pub fn eval<S: crate::numcore::Real>(&self, x: &[S]) -> S {
        let b = Self::basis(x);
        let mut acc = S::zero();
        for (c, v) in self.0.iter().zip(b) {
            if *c != 0.0 {
                acc = acc + v * *c;
            }
        }
        acc
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let c = &self.0;
        [
            c[1] + 2.0 * c[4] * x[0] + c[7] * x[1] + c[8] * x[2],
            c[2] + 2.0 * c[5] * x[1] + c[7] * x[0] + c[9] * x[2],
            c[3] + 2.0 * c[6] * x[2] + c[8] * x[0] + c[9] * x[1],
        ]
    }

    /// `P(x₁, x₂, x₃ + t)`, exactly.
    pub fn translate_x3(&self, t: f64) -> Self {
        let mut c = self.0;
        // x₃ → x₃ + t
        c[0] += self.0[3] * t + self.0[6] * t * t;
        c[3] += 2.0 * self.0[6] * t;
        c[1] += self.0[8] * t;
        c[2] += self.0[9] * t;
        Self(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|c| c * s))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(o.0) {
            *a += b;
        }
        Self(c)
    }
}

/// Storage order of the six independent components.
const SLOTS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn slot(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    SLOTS.iter().position(|&s| s == (i, j)).expect("valid index")
}

/// Symmetric contravariant 2-tensor field on `E³`.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingTensor {
    pub label: String,
    entries: [Quadratic3; 6],
}

impl KillingTensor {
    pub fn from_entries(label: &str, entries: [Quadratic3; 6]) -> Self {
        Self {
            label: label.to_string(),
            entries,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> &Quadratic3 {
        &self.entries[slot(i, j)]
    }

    /// The Euclidean metric `δⁱʲ`.
    pub fn metric() -> Self {
        let one = Quadratic3::constant(1.0);
        let zero = Quadratic3::default();
        Self::from_entries("metric", [one, zero, zero, one, zero, one])
    }

    /// `a₁·g + c₂·(L₁² + L₂²) + c₃·L₃²` written as a component matrix.
    pub fn spherical_pencil(a1: f64, c2: f64, c3: f64) -> Self {
        let mono = |idx: usize, c: f64| {
            let mut q = [0.0; 10];
            q[idx] = c;
            Quadratic3(q)
        };
        let diag = |terms: &[(usize, f64)]| {
            let mut q = [0.0; 10];
            q[0] = a1;
            for &(i, c) in terms {
                q[i] += c;
            }
            Quadratic3(q)
        };
        Self::from_entries(
            "spherical-pencil",
            [
                diag(&[(6, c2), (5, c3)]),
                mono(7, -c3),
                mono(8, -c2),
                diag(&[(4, c3), (6, c2)]),
                mono(9, -c2),
                diag(&[(4, c2), (5, c2)]),
            ],
        )
    }

    /// Fits the quadratic part of a momentum-quadratic observable on `E³`.
    ///
    /// The fit uses seeded sample points clear of the observable's
    /// singularities and fails if the components are not quadratic
    /// polynomials.
    pub fn from_observable(f: &Observable) -> Result<Self> {
        if f.arity() != 6 {
            return Err(Error::Input("Killing tensors live on E3".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let mut points = Vec::new();
        let mut tensors = Vec::new();
        let mut tries = 0;
        while points.len() < 24 {
            tries += 1;
            if tries > 2000 {
                return Err(Error::Sampling {
                    rejected: tries - points.len(),
                    drawn: tries,
                });
            }
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut z = x.clone();
            z.extend([0.0; 3]);
            if crate::numcore::clearance(f.field(), &z) < 1e-2 {
                continue;
            }
            match quadratic_part(f, &x) {
                Ok(qp) => {
                    points.push(x);
                    tensors.push(qp.tensor);
                }
                Err(Error::Eval(EvalError::Singular { .. })) => continue,
                Err(e) => return Err(e),
            }
        }
        let design = DMatrix::from_fn(points.len(), 10, |r, c| Quadratic3::basis(&points[r])[c]);
        let svd = design.clone().svd(true, true);
        let mut entries = [Quadratic3::default(); 6];
        let mut worst: f64 = 0.0;
        let scale = tensors.iter().map(|t| t.amax()).fold(1.0, f64::max);
        for (s, &(i, j)) in SLOTS.iter().enumerate() {
            let rhs = DVector::from_iterator(points.len(), tensors.iter().map(|t| t[(i, j)]));
            let coef = svd.solve(&rhs, 1e-12).map_err(|e| Error::Input(e.to_string()))?;
            worst = worst.max((&design * &coef - &rhs).amax() / scale);
            let mut c = [0.0; 10];
            c.copy_from_slice(coef.as_slice());
            // snap rounding noise so exact zeros stay zero
            for v in c.iter_mut() {
                if v.abs() < 1e-12 * scale {
                    *v = 0.0;
                }
            }
            entries[s] = Quadratic3(c);
        }
        if worst > 1e-9 {
            return Err(Error::NotPolynomial(worst));
        }
        Ok(Self::from_entries(f.label(), entries))
    }

    pub fn matrix(&self, x: &[f64]) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entry(i, j).eval(x))
    }

    /// `Kⁱʲ(x₁, x₂, x₃ + t)`.
    pub fn translate_x3(&self, t: f64) -> Self {
        Self::from_entries(&format!("{}(x3+{t})", self.label), self.entries.map(|e| e.translate_x3(t)))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_entries(&self.label, self.entries.map(|e| e.scale(s)))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut entries = self.entries;
        for (a, b) in entries.iter_mut().zip(&o.entries) {
            *a = a.add(b);
        }
        Self::from_entries(&format!("{} + {}", self.label, o.label), entries)
    }

    /// `max |∂ᵢKʲᵏ + ∂ⱼKᵏⁱ + ∂ₖKⁱʲ|` at `x`; zero exactly for Killing tensors
    /// of the flat metric.
    pub fn killing_defect(&self, x: &[f64]) -> f64 {
        let grads: [[f64; 3]; 6] = self.entries.map(|e| e.gradient(x));
        let d = |k: usize, i: usize, j: usize| grads[slot(i, j)][k];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i..3 {
                for k in j..3 {
                    worst = worst.max((d(i, j, k) + d(j, k, i) + d(k, i, j)).abs());
                }
            }
        }
        worst
    }

    /// Largest coefficient difference between two tensors.
    pub fn coefficient_distance(&self, o: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&o.entries)
            .flat_map(|(a, b)| a.0.iter().zip(&b.0).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max)
    }

    /// `Kⁱʲpᵢpⱼ` as a phase-space observable.
    pub fn quadratic_form(&self) -> Observable {
        Observable::new(format!("form({})", self.label), QuadraticForm(self.entries))
    }
}

struct QuadraticForm([Quadratic3; 6]);

impl ScalarFn for QuadraticForm {
    fn arity(&self) -> usize {
        6
    }
    fn apply<S: Scalar>(&self, z: &[S]) -> Result<S, EvalError> {
        let (x, p) = z.split_at(3);
        let mut acc = S::zero();
        for (s, &(i, j)) in SLOTS.iter().enumerate() {
            let w = if i == j { 1.0 } else { 2.0 };
            acc = acc + self.0[s].eval(x) * p[i] * p[j] * w;
        }
        Ok(acc)
    }
}

/// Generator of rotations about `x₃`: `X = (−x₂, x₁, 0)`, `A = ∂X/∂x`.
fn rotation_generator() -> Matrix3<f64> {
    Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// `(ℒ_X K)(x) = X·∇K − A K − K Aᵀ` for the rotation field about `x₃`.
pub fn lie_derivative_rotation(k: &KillingTensor, x: &[f64]) -> Matrix3<f64> {
    let field = [-x[1], x[0], 0.0];
    let directional = Matrix3::from_fn(|i, j| {
        let g = k.entry(i, j).gradient(x);
        g[0] * field[0] + g[1] * field[1] + g[2] * field[2]
    });
    let a = rotation_generator();
    let km = k.matrix(x);
    directional - a * km - km * a.transpose()
}

/// Finite-rotation estimate of [`lie_derivative_rotation`]:
/// `d/dt [R₋ₜ K(Rₜx) R₋ₜᵀ]` by central differences.
pub fn lie_derivative_rotation_fd(k: &KillingTensor, x: &[f64], eps: f64) -> Matrix3<f64> {
    let rot = |t: f64| {
        let (s, c) = t.sin_cos();
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    };
    let pulled = |t: f64| {
        let r = rot(t);
        let xv = r * nalgebra::Vector3::new(x[0], x[1], x[2]);
        let rinv = r.transpose();
        rinv * k.matrix(xv.as_slice()) * rinv.transpose()
    };
    (pulled(eps) - pulled(-eps)) / (2.0 * eps)
}

/// Max over the basis of the least-squares residual of expressing each
/// `x₃`-translated member in the span of the original members, relative to
/// the component scale.
pub fn translation_span_residual(basis: &[KillingTensor], t: f64) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::Input("translation span needs a nonempty basis".into()));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED ^ t.to_bits());
    let points: Vec<[f64; 3]> = (0..20)
        .map(|_| [0, 1, 2].map(|_| rng.random_range(-2.0..2.0)))
        .collect();
    let sample = |k: &KillingTensor| -> Vec<f64> {
        let mut v = Vec::with_capacity(points.len() * 6);
        for x in &points {
            for &(i, j) in &SLOTS {
                v.push(k.entry(i, j).eval(x.as_slice()));
            }
        }
        v
    };
    let columns: Vec<Vec<f64>> = basis.iter().map(sample).collect();
    let rows = columns[0].len();
    let a = DMatrix::from_fn(rows, basis.len(), |r, c| columns[c][r]);
    let svd = a.clone().svd(true, true);
    let mut worst: f64 = 0.0;
    for k in basis {
        let b = DVector::from_vec(sample(&k.translate_x3(t)));
        let coef = svd.solve(&b, 1e-12).map_err(|e| Error::Input(e.to_string()))?;
        let scale = b.amax().max(1.0);
        worst = worst.max((&a * coef - &b).amax() / scale);
    }
    Ok(worst)
}

/// Outcome of [`common_eigenframe`].
#[derive(Debug, Clone, PartialEq)]
pub enum Eigenframe {
    /// The tensors commute and share this orthonormal frame (columns).
    Shared(Matrix3<f64>),
    /// The tensors commute but an eigenvalue is repeated, so the frame is
    /// not unique.
    Degenerate,
    /// The commutator is nonzero.
    NotShared { commutator: f64 },
}

impl Eigenframe {
    pub fn commutes(&self) -> bool {
        !matches!(self, Eigenframe::NotShared { .. })
    }
}

/// Whether `K₁(x)` and `K₂(x)` have a common orthonormal eigenframe.
pub fn common_eigenframe(k1: &KillingTensor, k2: &KillingTensor, x: &[f64], tol: f64) -> Eigenframe {
    let a = k1.matrix(x);
    let b = k2.matrix(x);
    let scale = (a.amax() * b.amax()).max(f64::MIN_POSITIVE);
    let comm = (a * b - b * a).amax();
    if comm > tol * scale {
        return Eigenframe::NotShared { commutator: comm / scale };
    }
    // a generic combination separates eigenvalues shared by neither tensor
    let mix = a / a.amax().max(f64::MIN_POSITIVE) + b * (0.618_033_988_749_895 / b.amax().max(f64::MIN_POSITIVE));
    let eig = SymmetricEigen::new(mix);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    let radius = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if vals.windows(2).any(|w| w[1] - w[0] < 1e-8 * radius) {
        return Eigenframe::Degenerate;
    }
    Eigenframe::Shared(eig.eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{planar_isometry_integrals, rotational_integrals};
    use crate::models::AngularProfile;
    use crate::numcore::{gradient, DiffConfig};
    use crate::phase::{poisson_bracket, PhaseState};

    #[test]
    fn pencil_examples() {
        let g = KillingTensor::spherical_pencil(1.0, 0.0, 0.0);
        assert_eq!(g.matrix(&[0.3, -1.0, 2.0]), Matrix3::identity());
        let k = KillingTensor::spherical_pencil(0.0, 1.0, 0.0);
        assert_eq!(k.matrix(&[1.0, 0.0, 0.0]), Matrix3::from_diagonal(&nalgebra::Vector3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn pencil_form_is_total_angular_momentum() {
        let form = KillingTensor::spherical_pencil(0.0, 1.0, 1.0).quadratic_form();
        let z = PhaseState::new(&[0.3, -1.2, 0.8], &[0.5, 0.9, -0.4]).unwrap();
        let l = crate::integrals::angular_momenta(&z).unwrap();
        let l2 = l.iter().map(|v| v * v).sum::<f64>();
        assert!((form.value(&z).unwrap() - l2).abs() < 1e-12);
    }

    #[test]
    fn translation_is_exact() {
        let q = Quadratic3([1.0, 2.0, -1.0, 0.5, 0.3, -0.7, 1.1, 0.2, -0.4, 0.9]);
        let x = [0.4, -0.8, 1.3];
        let t = 0.7;
        let shifted = [x[0], x[1], x[2] + t];
        assert!((q.translate_x3(t).eval(&x) - q.eval(&shifted)).abs() < 1e-14);
        let g = q.gradient(&x);
        let ad = gradient(&Poly(q), &x, &DiffConfig::default()).unwrap();
        for i in 0..3 {
            assert!((g[i] - ad[i]).abs() < 1e-14);
        }
    }

    struct Poly(Quadratic3);
    impl ScalarFn for Poly {
        fn arity(&self) -> usize {
            3
        }
        fn apply<S: Scalar>(&self, x: &[S]) -> Result<S, EvalError> {
            Ok(self.0.eval(x))
        }
    }

    #[test]
    fn fitted_tensor_of_axial_integral() {
        let set = rotational_integrals(&AngularProfile::from_calogero([1.0, 1.0, 1.0])).unwrap();
        let k = KillingTensor::from_observable(set.member("axial").unwrap()).unwrap();
        let pencil = KillingTensor::spherical_pencil(0.0, 0.0, 1.0);
        let x = [0.7, -0.2, 1.9];
        assert!((k.matrix(&x) - pencil.matrix(&x)).amax() < 1e-12);
        assert!(lie_derivative_rotation(&k, &x).amax() < 1e-12);
    }

    #[test]
    fn lie_derivative_witness_and_oracle() {
        let [x1, _, _, _] = planar_isometry_integrals(1.0).unwrap();
        let k = KillingTensor::from_observable(&x1).unwrap();
        let x = [0.8, 0.3, -0.5];
        let exact = lie_derivative_rotation(&k, &x);
        assert!(exact.amax() > 0.1);
        let fd = lie_derivative_rotation_fd(&k, &x, 1e-4);
        assert!((exact - fd).amax() < 1e-7);
        assert_eq!(lie_derivative_rotation(&KillingTensor::metric(), &x), Matrix3::zeros());
    }

    #[test]
    fn eigenframes() {
        let x = [0.9, -0.4, 1.3];
        let a = KillingTensor::spherical_pencil(0.0, 1.0, 0.0);
        let b = KillingTensor::spherical_pencil(0.0, 0.0, 1.0);
        assert!(common_eigenframe(&a, &b, &x, 1e-12).commutes());
        assert!(common_eigenframe(&KillingTensor::metric(), &a, &x, 1e-12).commutes());
        let [x1, x2, _, _] = planar_isometry_integrals(1.0).unwrap();
        let k1 = KillingTensor::from_observable(&x1).unwrap();
        let k2 = KillingTensor::from_observable(&x2).unwrap();
        assert!(matches!(
            common_eigenframe(&k1, &k2, &[1.0, 1.0, 0.0], 1e-12),
            Eigenframe::NotShared { .. }
        ));
        if let Eigenframe::Shared(frame) = common_eigenframe(&a, &b, &x, 1e-12) {
            assert!((frame.transpose() * frame - Matrix3::identity()).amax() < 1e-12);
        }
    }

    #[test]
    fn killing_property_of_pencil() {
        let free = crate::models::free_particle(3).observable();
        let form = KillingTensor::spherical_pencil(0.4, -1.3, 2.1).quadratic_form();
        let z = PhaseState::new(&[0.3, 1.2, -0.8], &[0.5, -0.9, 0.4]).unwrap();
        assert!(poisson_bracket(&free, &form, &z).unwrap().abs() < 1e-12);
    }

    #[test]
    fn span_residual_trivial_cases() {
        assert!(translation_span_residual(&[], 1.0).is_err());
        assert_eq!(translation_span_residual(&[KillingTensor::metric()], 0.0).unwrap(), 0.0);
        assert!(translation_span_residual(&[KillingTensor::metric()], 0.7).unwrap() < 1e-15);
    }

    #[test]
    fn killing_defect_separates_killing_from_generic() {
        let x = [0.3, -1.2, 0.8];
        assert!(KillingTensor::spherical_pencil(0.7, 1.1, -0.4).killing_defect(&x) < 1e-14);
        let mut e = [Quadratic3::default(); 6];
        e[0] = Quadratic3([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        // x₁² in the (1,1) slot: ∂₁K¹¹ terms add to 6x₁
        assert!((KillingTensor::from_entries("x1^2", e).killing_defect(&x) - 1.8).abs() < 1e-14);
    }
}
