//! Trajectory integration, drift measurement and the closed-orbit probe.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::integrals::IntegralSet;
use crate::numcore::clearance;
use crate::phase::{HamiltonianSystem, Observable, PhaseState};

/// Integration stops before any potential denominator drops below this.
pub const INTEGRATION_GUARD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[serde(rename = "stormer-verlet-2")]
    StormerVerlet2,
    #[serde(rename = "yoshida-4")]
    Yoshida4,
    #[serde(rename = "rk4-reference")]
    Rk4Reference,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Self::StormerVerlet2 => "stormer-verlet-2",
            Self::Yoshida4 => "yoshida-4",
            Self::Rk4Reference => "rk4-reference",
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TrajectoryStatus {
    Completed,
    /// Stopped before a potential singularity; `clearance` is the smallest
    /// guarded denominator at the rejected step.
    Truncated { time: f64, clearance: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: String,
    pub integrator: Integrator,
    /// The uniform step actually used.
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    /// CSV with header `t,q1..qn,p1..pn`, 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let n = self.states.first().map_or(0, PhaseState::dof);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("q{i}")));
        header.extend((1..=n).map(|i| format!("p{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (t, z) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for v in z.as_slice() {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Separable flow `q̇ = 2c·p`, `ṗ = −∇V`.
struct Flow<'a> {
    system: &'a HamiltonianSystem,
    dof: usize,
}

impl Flow<'_> {
    fn force(&self, q: &[f64]) -> Result<Vec<f64>, EvalError> {
        let f = self.system.force(q)?;
        if finite(&f) {
            Ok(f)
        } else {
            Err(EvalError::NonFinite { coordinate: None })
        }
    }

    fn velocity_factor(&self) -> f64 {
        2.0 * self.system.kinetic_factor()
    }

    fn rate(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        let (q, p) = z.split_at(self.dof);
        let c = self.velocity_factor();
        let mut out: Vec<f64> = p.iter().map(|v| c * v).collect();
        out.extend(self.force(q)?);
        Ok(out)
    }

    /// Kick-drift-kick; `force` holds the force at the current `q` on entry
    /// and at the new `q` on exit.
    fn verlet(&self, z: &mut [f64], force: &mut Vec<f64>, h: f64) -> Result<(), EvalError> {
        let n = self.dof;
        let c = self.velocity_factor();
        for i in 0..n {
            z[n + i] += 0.5 * h * force[i];
        }
        for i in 0..n {
            z[i] += h * c * z[n + i];
        }
        *force = self.force(&z[..n])?;
        for i in 0..n {
            z[n + i] += 0.5 * h * force[i];
        }
        Ok(())
    }

    fn rk4(&self, z: &[f64], h: f64) -> Result<Vec<f64>, EvalError> {
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
        let k1 = self.rate(z)?;
        let k2 = self.rate(&axpy(z, 0.5 * h, &k1))?;
        let k3 = self.rate(&axpy(z, 0.5 * h, &k2))?;
        let k4 = self.rate(&axpy(z, h, &k3))?;
        Ok((0..z.len())
            .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }

    /// A step whose stages hit a singular point is retried as two half
    /// steps, down to `h/16`.
    fn rk4_with_rejection(&self, z: &[f64], h: f64, depth: u32) -> Result<Vec<f64>, EvalError> {
        match self.rk4(z, h) {
            Ok(next) if finite(&next) => Ok(next),
            Ok(_) if depth == 0 => Err(EvalError::NonFinite { coordinate: None }),
            Err(e) if depth == 0 => Err(e),
            _ => {
                let mid = self.rk4_with_rejection(z, 0.5 * h, depth - 1)?;
                self.rk4_with_rejection(&mid, 0.5 * h, depth - 1)
            }
        }
    }
}

fn yoshida_weights() -> [f64; 3] {
    let c = 2f64.powf(1.0 / 3.0);
    let w1 = 1.0 / (2.0 - c);
    [w1, -c / (2.0 - c), w1]
}

/// Integrates `[0, T]` with the uniform step `T/⌈T/dt⌉` so the last state
/// lands on `T`.
pub fn integrate(
    system: &HamiltonianSystem,
    z0: &PhaseState,
    dt: f64,
    t_final: f64,
    method: Integrator,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Input(format!("step must be positive, got {dt}")));
    }
    if !(t_final.is_finite() && t_final >= dt) {
        return Err(Error::Input(format!("horizon {t_final} is shorter than the step {dt}")));
    }
    let dof = system.dof();
    if z0.dof() != dof {
        return Err(EvalError::Dimension {
            expected: 2 * dof,
            found: 2 * z0.dof(),
        }
        .into());
    }
    let start = clearance(system.potential(), z0.q());
    if start < INTEGRATION_GUARD {
        return Err(Error::Input(format!(
            "initial state is within {start:.3e} of a singularity"
        )));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let h = t_final / steps as f64;
    let flow = Flow { system, dof };
    let mut z = z0.as_slice().to_vec();
    let mut force = flow.force(&z[..dof])?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(z0.clone());
    let mut status = TrajectoryStatus::Completed;
    let weights = yoshida_weights();
    for k in 1..=steps {
        let t = k as f64 * h;
        let outcome = match method {
            Integrator::StormerVerlet2 => flow.verlet(&mut z, &mut force, h),
            Integrator::Yoshida4 => weights.iter().try_for_each(|w| flow.verlet(&mut z, &mut force, w * h)),
            Integrator::Rk4Reference => flow.rk4_with_rejection(&z, h, 4).map(|next| z = next),
        };
        let clear = if outcome.is_ok() && finite(&z) {
            clearance(system.potential(), &z[..dof])
        } else {
            0.0
        };
        if clear < INTEGRATION_GUARD {
            status = TrajectoryStatus::Truncated { time: t, clearance: clear };
            break;
        }
        times.push(t);
        states.push(PhaseState::from_flat(&z)?);
    }
    Ok(Trajectory {
        system: system.label().to_string(),
        integrator: method,
        dt: h,
        times,
        states,
        status,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberDrift {
    pub label: String,
    pub initial: f64,
    /// `maxₜ |F(z(t)) − F(z₀)| / (|F(z₀)| + 1)`.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub system: String,
    pub integrator: Integrator,
    pub dt: f64,
    pub final_time: f64,
    pub trajectory: TrajectoryStatus,
    pub members: Vec<MemberDrift>,
}

impl DriftReport {
    pub fn member(&self, label: &str) -> Option<&MemberDrift> {
        self.members.iter().find(|m| m.label == label)
    }

    pub fn max_drift(&self) -> f64 {
        self.members.iter().fold(0.0, |m, d| m.max(d.drift))
    }
}

/// Drift of arbitrary observables along `tr`.
pub fn drift_of(tr: &Trajectory, observables: &[Observable]) -> Result<DriftReport> {
    if tr.is_empty() {
        return Err(Error::Input("empty trajectory".into()));
    }
    let mut members = Vec::with_capacity(observables.len());
    for f in observables {
        let f0 = f.value(&tr.states[0])?;
        let mut drift: f64 = 0.0;
        for z in &tr.states {
            drift = drift.max((f.value(z)? - f0).abs() / (f0.abs() + 1.0));
        }
        members.push(MemberDrift {
            label: f.label().to_string(),
            initial: f0,
            drift,
        });
    }
    Ok(DriftReport {
        system: tr.system.clone(),
        integrator: tr.integrator,
        dt: tr.dt,
        final_time: tr.final_time(),
        trajectory: tr.status.clone(),
        members,
    })
}

pub fn drift_report(tr: &Trajectory, set: &IntegralSet) -> Result<DriftReport> {
    drift_of(tr, &set.members)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureOptions {
    pub t_max: f64,
    pub dt: f64,
    /// Radius of the return ball in the box-normalized metric.
    pub epsilon: f64,
    pub integrator: Integrator,
    /// `|q|∞` beyond which the orbit counts as escaping.
    pub escape_radius: f64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self {
            t_max: 20.0,
            dt: 1e-3,
            epsilon: 1e-3,
            integrator: Integrator::Yoshida4,
            escape_radius: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ClosureStatus {
    Closed { closed_at: f64, distance: f64 },
    Open { min_distance: f64 },
    Escaping { time: f64 },
    Truncated { time: f64, min_distance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub outcome: ClosureStatus,
    /// `(t, distance)` at each local minimum of the return distance.
    pub returns: Vec<(f64, f64)>,
}

impl ClosureReport {
    pub fn closed_at(&self) -> Option<f64> {
        match self.outcome {
            ClosureStatus::Closed { closed_at, .. } => Some(closed_at),
            _ => None,
        }
    }
}

/// Positions scaled by the sampling half-width 2, momenta by 1.
pub fn box_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let d = if i < n { (x - y) / 2.0 } else { x - y };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Cubic Hermite interpolation of the state on `[t0, t1]` at fraction `s`.
fn hermite(z0: &[f64], d0: &[f64], z1: &[f64], d1: &[f64], h: f64, s: f64) -> Vec<f64> {
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..z0.len())
        .map(|i| h00 * z0[i] + h10 * h * d0[i] + h01 * z1[i] + h11 * h * d1[i])
        .collect()
}

/// Minimum of `g` on `[0, 1]` by golden-section search.
fn golden_min(g: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    let s = 0.5 * (a + b);
    (s, g(s))
}

/// Looks for the first return to `z₀` after the orbit has left the
/// `ε`-ball and `t > 10·dt`. The reported time minimizes the distance over
/// that first return, using Hermite dense output between steps.
pub fn closure_probe(system: &HamiltonianSystem, z0: &PhaseState, opts: &ClosureOptions) -> Result<ClosureReport> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::Input("closure radius must be positive".into()));
    }
    let tr = integrate(system, z0, opts.dt, opts.t_max, opts.integrator)?;
    let flow = Flow {
        system,
        dof: system.dof(),
    };
    let origin = z0.as_slice();
    let t_min = 10.0 * tr.dt;
    let dist: Vec<f64> = tr.states.iter().map(|z| box_distance(z.as_slice(), origin)).collect();
    let mut returns = Vec::new();
    let mut left = false;
    let mut closed = None;
    let mut min_distance = f64::INFINITY;
    for i in 1..tr.len() {
        let q = tr.states[i].q();
        if q.iter().any(|v| v.abs() > opts.escape_radius) {
            return Ok(ClosureReport {
                outcome: ClosureStatus::Escaping { time: tr.times[i] },
                returns,
            });
        }
        if tr.times[i] < t_min {
            continue;
        }
        if !left {
            left = dist[i] > opts.epsilon;
            continue;
        }
        min_distance = min_distance.min(dist[i]);
        if i + 1 >= tr.len() || !(dist[i] <= dist[i - 1] && dist[i] <= dist[i + 1]) {
            continue;
        }
        // refine on both neighbouring intervals
        let mut best = (tr.times[i], dist[i]);
        for j in [i - 1, i] {
            let (za, zb) = (tr.states[j].as_slice(), tr.states[j + 1].as_slice());
            let (da, db) = (flow.rate(za)?, flow.rate(zb)?);
            let (s, d) = golden_min(|s| box_distance(&hermite(za, &da, zb, &db, tr.dt, s), origin));
            if d < best.1 {
                best = (tr.times[j] + s * tr.dt, d);
            }
        }
        returns.push(best);
        min_distance = min_distance.min(best.1);
        if closed.is_none() && best.1 < opts.epsilon {
            closed = Some(best);
        }
        if closed.is_some() && dist[i + 1] >= opts.epsilon {
            break;
        }
    }
    let outcome = match (closed, &tr.status) {
        (Some((t, d)), _) => ClosureStatus::Closed {
            closed_at: t,
            distance: d,
        },
        (None, TrajectoryStatus::Truncated { time, .. }) => ClosureStatus::Truncated {
            time: *time,
            min_distance,
        },
        (None, TrajectoryStatus::Completed) => ClosureStatus::Open { min_distance },
    };
    Ok(ClosureReport { outcome, returns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{free_particle, isotropic_oscillator};
    use crate::phase::Coordinate;
    use std::f64::consts::PI;

    fn state(z: [f64; 6]) -> PhaseState {
        PhaseState::from_flat(&z).unwrap()
    }

    #[test]
    fn free_particle_moves_in_a_line() {
        let tr = integrate(&free_particle(3), &state([0., 0., 0., 1., 0., 0.]), 1e-2, 1.0, Integrator::Yoshida4).unwrap();
        let q = tr.last().q();
        assert!((q[0] - 1.0).abs() < 1e-12 && q[1].abs() < 1e-12 && q[2].abs() < 1e-12);
        assert_eq!(tr.status, TrajectoryStatus::Completed);
    }

    #[test]
    fn oscillator_returns_after_one_period() {
        let z0 = state([1.0, 0.3, -0.2, 0.1, 0.5, 0.0]);
        let tr = integrate(&isotropic_oscillator(), &z0, 1e-3, 2.0 * PI, Integrator::Yoshida4).unwrap();
        assert!((tr.final_time() - 2.0 * PI).abs() < 1e-12);
        let err = tr.last().as_slice().iter().zip(z0.as_slice()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn oscillator_closes_at_two_pi() {
        let z0 = state([1.0, 0.3, -0.2, 0.1, 0.5, 0.0]);
        let r = closure_probe(&isotropic_oscillator(), &z0, &ClosureOptions { t_max: 8.0, ..Default::default() }).unwrap();
        let t = r.closed_at().unwrap();
        assert!((t - 2.0 * PI).abs() < 1e-4, "{t}");
    }

    #[test]
    fn position_drifts_where_integrals_do_not() {
        let sys = isotropic_oscillator();
        let z0 = state([1.0, 0.3, -0.2, 0.1, 0.5, 0.0]);
        let tr = integrate(&sys, &z0, 1e-2, 3.0, Integrator::Yoshida4).unwrap();
        let x1 = Observable::new("x1", Coordinate { index: 0, dim: 6 });
        let rep = drift_of(&tr, &[sys.observable(), x1]).unwrap();
        assert!(rep.members[0].drift < 1e-8);
        assert!(rep.members[1].drift > 0.5);
    }

    #[test]
    fn reference_and_symplectic_agree() {
        let sys = isotropic_oscillator();
        let z0 = state([1.0, 0.3, -0.2, 0.1, 0.5, 0.0]);
        let a = integrate(&sys, &z0, 1e-4, 1.0, Integrator::Yoshida4).unwrap();
        let b = integrate(&sys, &z0, 1e-4, 1.0, Integrator::Rk4Reference).unwrap();
        assert!(box_distance(a.last().as_slice(), b.last().as_slice()) < 1e-6);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let tr = integrate(&free_particle(3), &state([0., 0., 0., 1., 0., 0.]), 0.5, 1.0, Integrator::StormerVerlet2).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,q1,q2,q3,p1,p2,p3");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("1.0000000000000000e0,"));
    }

    #[test]
    fn rejects_bad_steps() {
        let z0 = state([0.; 6]);
        assert!(integrate(&free_particle(3), &z0, 0.0, 1.0, Integrator::Yoshida4).is_err());
        assert!(integrate(&free_particle(3), &z0, 0.1, 0.01, Integrator::Yoshida4).is_err());
    }
}
