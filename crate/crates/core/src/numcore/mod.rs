//! Differentiation and small dense linear algebra.

pub mod dual;
pub mod field;

use nalgebra::DMatrix;

use crate::error::{Error, EvalError, Result};
pub use dual::{Dual, Real, D1, D2};
pub use field::{clearance, guard, Field, Scalar, ScalarFn, SINGULAR_GUARD};

/// Default relative threshold for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    Forward,
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    pub mode: DiffMode,
    /// Relative step for finite differences.
    pub fd_step: f64,
    pub richardson: bool,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            mode: DiffMode::Forward,
            fd_step: 1e-6,
            richardson: false,
        }
    }
}

impl DiffConfig {
    /// Central differences with one Richardson extrapolation level.
    pub fn finite_difference(fd_step: f64) -> Result<Self> {
        let cfg = Self {
            mode: DiffMode::CentralDifference,
            fd_step,
            richardson: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fd_step > 0.0 && self.fd_step < 1e-2 {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "fd_step must lie in (0, 1e-2), got {}",
                self.fd_step
            )))
        }
    }
}

/// Gradient of `f` at `z`.
pub fn gradient(f: &dyn Field, z: &[f64], cfg: &DiffConfig) -> Result<Vec<f64>, EvalError> {
    if f.arity() != z.len() {
        return Err(EvalError::Dimension {
            expected: f.arity(),
            found: z.len(),
        });
    }
    let value = f.eval_f64(z)?;
    if !value.is_finite() {
        return Err(EvalError::NonFinite { coordinate: None });
    }
    let mut out = Vec::with_capacity(z.len());
    match cfg.mode {
        DiffMode::Forward => {
            let mut x: Vec<D1> = z.iter().map(|&v| D1::new(v, 0.0)).collect();
            for i in 0..z.len() {
                x[i].eps = 1.0;
                let d = f.eval_d1(&x)?.eps;
                x[i].eps = 0.0;
                out.push(d);
            }
        }
        DiffMode::CentralDifference => {
            let mut x = z.to_vec();
            for i in 0..z.len() {
                let h = cfg.fd_step * z[i].abs().max(1.0);
                let mut central = |h: f64| -> Result<f64, EvalError> {
                    x[i] = z[i] + h;
                    let fp = f.eval_f64(&x)?;
                    x[i] = z[i] - h;
                    let fm = f.eval_f64(&x)?;
                    x[i] = z[i];
                    Ok((fp - fm) / (2.0 * h))
                };
                let d = if cfg.richardson {
                    let coarse = central(h)?;
                    let fine = central(0.5 * h)?;
                    (4.0 * fine - coarse) / 3.0
                } else {
                    central(h)?
                };
                out.push(d);
            }
        }
    }
    if let Some(i) = out.iter().position(|d| !d.is_finite()) {
        return Err(EvalError::NonFinite { coordinate: Some(i) });
    }
    Ok(out)
}

/// Mixed second derivatives `∂²f/∂z_i∂z_j` for `i ∈ rows`, `j ∈ cols`.
pub fn hessian_block(
    f: &dyn Field,
    z: &[f64],
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
) -> Result<DMatrix<f64>, EvalError> {
    let mut x: Vec<D2> = z
        .iter()
        .map(|&v| D2::new(D1::new(v, 0.0), D1::new(0.0, 0.0)))
        .collect();
    let mut h = DMatrix::zeros(rows.len(), cols.len());
    for (a, i) in rows.clone().enumerate() {
        x[i].eps.re = 1.0;
        for (b, j) in cols.clone().enumerate() {
            x[j].re.eps = 1.0;
            let v = f.eval_d2(&x)?.eps.eps;
            x[j].re.eps = 0.0;
            if !v.is_finite() {
                return Err(EvalError::NonFinite { coordinate: Some(j) });
            }
            h[(a, b)] = v;
        }
        x[i].eps.re = 0.0;
    }
    Ok(h)
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    // Orthogonalize the columns of the taller orientation.
    let mut a = if m.ncols() > m.nrows() {
        m.transpose()
    } else {
        m.clone()
    };
    let n = a.ncols();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..a.nrows() {
                    let ai = a[(k, i)];
                    let aj = a[(k, j)];
                    a[(k, i)] = c * ai - s * aj;
                    a[(k, j)] = s * ai + c * aj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|i| a.column(i).norm()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Number of singular values with `σ ≥ rel_tol·σ_max`; zero for the zero matrix.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Input(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s >= rel_tol * top).count())
}
