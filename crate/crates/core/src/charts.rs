//! Coordinate transformations: the Jacobi reduction of three particles on a
//! line, the fixed rotation aligning the centre-of-mass direction with the
//! third axis, and the five orthogonal charts of revolution about `x₃`.
//!
//! Every chart orders its coordinates so that the azimuthal angle `φ` is the
//! last one.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{Real, D1};
use crate::phase::{CanonicalLinear, PointMap};

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn sqrt3() -> f64 {
    3f64.sqrt()
}

fn sqrt6() -> f64 {
    6f64.sqrt()
}

/// Jacobi coordinates `(R, ρ, λ)` of three particles on a line.
///
/// `λ = (x₁ + x₂ − 2x₃)/√6`, orthogonal to `ρ = (x₁ − x₂)/√2`.
pub fn jacobi_transform(x: [f64; 3]) -> [f64; 3] {
    let m = jacobi_matrix();
    let v = m * nalgebra::Vector3::from(x);
    [v[0], v[1], v[2]]
}

pub fn jacobi_inverse(j: [f64; 3]) -> [f64; 3] {
    let [r, rho, lam] = j;
    [
        r + rho / SQRT2 + lam / sqrt6(),
        r - rho / SQRT2 + lam / sqrt6(),
        r - 2.0 * lam / sqrt6(),
    ]
}

/// Rows map `x` to `(R, ρ, λ)`.
pub fn jacobi_matrix() -> Matrix3<f64> {
    Matrix3::new(
        1.0 / 3.0,
        1.0 / 3.0,
        1.0 / 3.0,
        1.0 / SQRT2,
        -1.0 / SQRT2,
        0.0,
        1.0 / sqrt6(),
        1.0 / sqrt6(),
        -2.0 / sqrt6(),
    )
}

/// The `λ` row as it appears in the historical statement of the reduction,
/// `(x₁ − x₂ − 2x₃)/√6`; kept only for the audit.
pub fn printed_lambda_row() -> [f64; 3] {
    [1.0 / sqrt6(), -1.0 / sqrt6(), -2.0 / sqrt6()]
}

/// Canonical lift of the Jacobi map (`x ↦ (R, ρ, λ)`).
pub fn jacobi_canonical() -> CanonicalLinear {
    CanonicalLinear::new(to_dmatrix(&jacobi_matrix())).expect("Jacobi matrix is invertible")
}

/// The rotation `M` with `x = M x̃`; its third column is `(1,1,1)/√3`.
pub fn rotation_matrix() -> Matrix3<f64> {
    let s2 = SQRT2;
    let s3 = sqrt3();
    Matrix3::new(2.0, 0.0, s2, -1.0, s3, s2, -1.0, -s3, s2) / sqrt6()
}

/// `x = M x̃`.
pub fn rotation_tr(xt: [f64; 3]) -> [f64; 3] {
    let v = rotation_matrix() * nalgebra::Vector3::from(xt);
    [v[0], v[1], v[2]]
}

/// `x̃ = Mᵀ x`.
pub fn rotation_tr_inverse(x: [f64; 3]) -> [f64; 3] {
    let v = rotation_matrix().transpose() * nalgebra::Vector3::from(x);
    [v[0], v[1], v[2]]
}

/// Generic version of [`rotation_tr`] for dual-number evaluation.
pub fn rotate_generic<S: Real>(xt: &[S]) -> [S; 3] {
    let m = rotation_matrix();
    let mut out = [S::zero(); 3];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..3 {
            *o = *o + xt[j] * m[(i, j)];
        }
    }
    out
}

/// Canonical lift of `x̃ ↦ x = M x̃`.
pub fn rotation_canonical() -> CanonicalLinear {
    CanonicalLinear::new(to_dmatrix(&rotation_matrix())).expect("rotation is invertible")
}

pub(crate) fn to_dmatrix(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_iterator(3, 3, m.iter().copied())
}

/// Orthogonal coordinate systems of revolution about the `x₃` axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Chart {
    /// `(r, θ, φ)`.
    Spherical,
    /// `(ρ, z, φ)`.
    CircularCylindrical,
    /// `(ξ, η, φ)` with `x₃ = (ξ² − η²)/2`, `ρ = ξη`.
    RotationalParabolic,
    /// `(u, v, φ)` with `ρ = a sinh u sin v`, `x₃ = a cosh u cos v`.
    ProlateSpheroidal { a: f64 },
    /// `(u, v, φ)` with `ρ = a cosh u sin v`, `x₃ = a sinh u cos v`.
    OblateSpheroidal { a: f64 },
}

impl Chart {
    pub fn all(a: f64) -> [Chart; 5] {
        [
            Chart::Spherical,
            Chart::CircularCylindrical,
            Chart::RotationalParabolic,
            Chart::ProlateSpheroidal { a },
            Chart::OblateSpheroidal { a },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Chart::Spherical => "spherical",
            Chart::CircularCylindrical => "circular-cylindrical",
            Chart::RotationalParabolic => "rotational-parabolic",
            Chart::ProlateSpheroidal { .. } => "prolate-spheroidal",
            Chart::OblateSpheroidal { .. } => "oblate-spheroidal",
        }
    }

    fn focal(&self) -> Result<f64> {
        match *self {
            Chart::ProlateSpheroidal { a } | Chart::OblateSpheroidal { a } => {
                if a > 0.0 && a.is_finite() {
                    Ok(a)
                } else {
                    Err(Error::ChartDomain(format!("focal parameter must be positive, got {a}")))
                }
            }
            _ => Ok(1.0),
        }
    }

    /// Rejects points outside the open regular domain.
    pub fn check_domain(&self, u: [f64; 3]) -> Result<()> {
        let [u1, u2, phi] = u;
        let bad = |what: &str| Err(Error::ChartDomain(format!("{}: {what}", self.name())));
        if !(u1.is_finite() && u2.is_finite() && phi.is_finite()) {
            return bad("non-finite coordinate");
        }
        self.focal()?;
        match self {
            Chart::Spherical => {
                if u1 <= 0.0 {
                    return bad("r must be positive");
                }
                if !(u2 > 0.0 && u2 < PI) {
                    return bad("θ must lie in (0, π)");
                }
            }
            Chart::CircularCylindrical => {
                if u1 <= 0.0 {
                    return bad("ρ must be positive");
                }
            }
            Chart::RotationalParabolic => {
                if u1 <= 0.0 || u2 <= 0.0 {
                    return bad("ξ and η must be positive");
                }
            }
            Chart::ProlateSpheroidal { .. } | Chart::OblateSpheroidal { .. } => {
                if u1 <= 0.0 {
                    return bad("u must be positive");
                }
                if !(u2 > 0.0 && u2 < PI) {
                    return bad("v must lie in (0, π)");
                }
            }
        }
        Ok(())
    }

    /// Curvilinear → Cartesian, without the domain check.
    pub fn forward_generic<S: Real>(&self, u: &[S]) -> [S; 3] {
        let (u1, u2, phi) = (u[0], u[1], u[2]);
        // (ρ, x₃) in the meridian half-plane
        let (rho, x3) = match *self {
            Chart::Spherical => (u1 * u2.sin(), u1 * u2.cos()),
            Chart::CircularCylindrical => (u1, u2),
            Chart::RotationalParabolic => (u1 * u2, (u1 * u1 - u2 * u2) * 0.5),
            Chart::ProlateSpheroidal { a } => (u1.sinh() * u2.sin() * a, u1.cosh() * u2.cos() * a),
            Chart::OblateSpheroidal { a } => (u1.cosh() * u2.sin() * a, u1.sinh() * u2.cos() * a),
        };
        [rho * phi.cos(), rho * phi.sin(), x3]
    }

    pub fn chart_map(&self, u: [f64; 3]) -> Result<[f64; 3]> {
        self.check_domain(u)?;
        Ok(self.forward_generic(&u))
    }

    /// Cartesian → curvilinear; `φ ∈ [0, 2π)`.
    pub fn chart_inverse(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let [x1, x2, x3] = x;
        if !(x1.is_finite() && x2.is_finite() && x3.is_finite()) {
            return Err(Error::ChartDomain("non-finite point".into()));
        }
        let rho = x1.hypot(x2);
        if rho == 0.0 {
            return Err(Error::ChartDomain(format!("{}: point on the symmetry axis", self.name())));
        }
        let phi = azimuth(x1, x2);
        let (u1, u2) = match *self {
            Chart::Spherical => {
                let r = rho.hypot(x3);
                (r, rho.atan2(x3))
            }
            Chart::CircularCylindrical => (rho, x3),
            Chart::RotationalParabolic => {
                let r = rho.hypot(x3);
                // ξ² = r + x₃, η² = r − x₃; use ξη = ρ on the cancelling side
                if x3 >= 0.0 {
                    let xi = (r + x3).sqrt();
                    (xi, rho / xi)
                } else {
                    let eta = (r - x3).sqrt();
                    (rho / eta, eta)
                }
            }
            Chart::ProlateSpheroidal { a } => {
                self.focal()?;
                let d1 = rho.hypot(x3 - a);
                let d2 = rho.hypot(x3 + a);
                let u = ((d1 + d2) / (2.0 * a)).acosh();
                let v = (rho * u.cosh()).atan2(x3 * u.sinh());
                (u, v)
            }
            Chart::OblateSpheroidal { a } => {
                self.focal()?;
                let d1 = (rho - a).hypot(x3);
                let d2 = (rho + a).hypot(x3);
                let u = ((d1 + d2) / (2.0 * a)).acosh();
                let v = (rho * u.sinh()).atan2(x3 * u.cosh());
                (u, v)
            }
        };
        Ok([u1, u2, phi])
    }
}

/// `atan2(x₂, x₁)` folded into `[0, 2π)`.
pub fn azimuth(x1: f64, x2: f64) -> f64 {
    let phi = x2.atan2(x1);
    if phi < 0.0 {
        let wrapped = phi + TAU;
        if wrapped >= TAU {
            0.0
        } else {
            wrapped
        }
    } else {
        phi
    }
}

impl PointMap for Chart {
    fn dim(&self) -> usize {
        3
    }
    fn map_point(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok(self.chart_map([q[0], q[1], q[2]])?.to_vec())
    }
    fn jacobian(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.check_domain([q[0], q[1], q[2]])?;
        let mut j = DMatrix::zeros(3, 3);
        for col in 0..3 {
            let u: Vec<D1> = (0..3)
                .map(|k| D1::new(q[k], if k == col { 1.0 } else { 0.0 }))
                .collect();
            let x = self.forward_generic(&u);
            for row in 0..3 {
                j[(row, col)] = x[row].eps;
            }
        }
        Ok(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{pushforward_state, PhaseState};

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn jacobi_examples() {
        let c = 0.73;
        assert!(close(jacobi_transform([c, c, c]), [c, 0.0, 0.0], 1e-15));
        assert!(close(jacobi_transform([1.0, -1.0, 0.0]), [0.0, SQRT2, 0.0], 1e-15));
        let x = [0.3, -1.1, 2.4];
        assert!(close(jacobi_inverse(jacobi_transform(x)), x, 1e-14));
    }

    #[test]
    fn rotation_examples() {
        assert!(close(rotation_tr([0.0, 0.0, 3f64.sqrt()]), [1.0, 1.0, 1.0], 1e-15));
        assert!(close(rotation_tr([0.0, 6f64.sqrt(), 0.0]), [0.0, 3f64.sqrt(), -3f64.sqrt()], 1e-15));
        assert!(close(rotation_tr([6f64.sqrt(), 0.0, 0.0]), [2.0, -1.0, -1.0], 1e-15));
        let m = rotation_matrix();
        assert!((m.transpose() * m - Matrix3::identity()).amax() <= 1e-15);
        assert!((m.determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotated_state_keeps_zero_momentum() {
        let z = PhaseState::new(&[6f64.sqrt(), 0.0, 0.0], &[0.0; 3]).unwrap();
        let w = pushforward_state(&rotation_canonical(), &z).unwrap();
        assert!(close([w.q()[0], w.q()[1], w.q()[2]], [2.0, -1.0, -1.0], 1e-15));
        assert_eq!(w.p(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn spherical_examples() {
        let s = Chart::Spherical;
        assert!(close(s.chart_map([1.0, PI / 2.0, 0.0]).unwrap(), [1.0, 0.0, 0.0], 1e-15));
        assert!(close(s.chart_map([2.0, PI / 2.0, PI / 2.0]).unwrap(), [0.0, 2.0, 0.0], 1e-15));
        assert!(matches!(s.chart_map([1.0, 0.0, 0.0]), Err(Error::ChartDomain(_))));
        assert!(matches!(s.chart_map([1.0, 3.5, 0.0]), Err(Error::ChartDomain(_))));
        assert!(matches!(s.chart_map([-1.0, 1.0, 0.0]), Err(Error::ChartDomain(_))));
        assert!(Chart::ProlateSpheroidal { a: 0.0 }.chart_map([1.0, 1.0, 0.0]).is_err());
        assert!(s.chart_inverse([0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn azimuth_range() {
        assert_eq!(azimuth(1.0, 0.0), 0.0);
        assert!((azimuth(0.0, -1.0) - 1.5 * PI).abs() < 1e-15);
        assert!(azimuth(1.0, -1e-300) < TAU);
    }

    #[test]
    fn spherical_kinetic_energy_is_preserved() {
        // ½(p_r² + p_θ²/r² + p_φ²/(r² sin²θ)) equals ½|p_x|² after pushforward
        let (r, th, ph) = (1.7, 0.9, 2.2);
        let (pr, pth, pph) = (0.3, -0.8, 0.45);
        let z = PhaseState::new(&[r, th, ph], &[pr, pth, pph]).unwrap();
        let w = pushforward_state(&Chart::Spherical, &z).unwrap();
        let t_curv = 0.5 * (pr * pr + pth * pth / (r * r) + pph * pph / (r * r * th.sin().powi(2)));
        let t_cart = 0.5 * w.p().iter().map(|p| p * p).sum::<f64>();
        assert!((t_curv - t_cart).abs() < 1e-14);
    }
}
