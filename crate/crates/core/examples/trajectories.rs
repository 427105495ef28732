//! Integrates the axial family, reports drift, writes a CSV and probes
//! orbit closure.
//!
//! `cargo run --release --example trajectories [out.csv]`

use std::fs::File;

use superint::dynamics::{closure_probe, drift_report, integrate, ClosureOptions, Integrator};
use superint::integrals::rotational_integrals;
use superint::models::{isotropic_oscillator, AngularProfile};
use superint::PhaseState;

fn main() -> superint::Result<()> {
    let set = rotational_integrals(&AngularProfile::from_calogero([1.0; 3]))?;
    let z0 = PhaseState::new(&[1.0, 0.3, 0.2], &[0.1, 0.4, -0.3])?;
    for method in [Integrator::StormerVerlet2, Integrator::Yoshida4, Integrator::Rk4Reference] {
        let tr = integrate(&set.system, &z0, 1e-3, 20.0, method)?;
        let drift = drift_report(&tr, &set)?;
        println!("{method:<17} {:?} max drift {:.2e}", tr.status, drift.max_drift());
    }

    let tr = integrate(&set.system, &z0, 1e-2, 5.0, Integrator::Yoshida4)?;
    if let Some(path) = std::env::args().nth(1) {
        tr.write_csv(File::create(&path)?)?;
        println!("wrote {} rows to {path}", tr.len());
    }

    let osc = isotropic_oscillator();
    let probe = closure_probe(&osc, &z0, &ClosureOptions { t_max: 8.0, ..Default::default() })?;
    println!("oscillator closure: {:?}", probe.outcome);
    let axial = closure_probe(&set.system, &z0, &ClosureOptions::default())?;
    println!("axial family: {:?}", axial.outcome);
    Ok(())
}
