//! The position-dependent linear identity among the rotational integrals.
//!
//! `cargo run --example linear_connection`

use superint::integrals::{linear_connection_coefficients, linear_connection_terms};
use superint::models::AngularProfile;
use superint::verify::{linear_connection_suite, SuiteOptions};
use superint::PhaseState;

fn main() -> superint::Result<()> {
    let k = AngularProfile::from_calogero([1.0, 0.5, 2.0]);
    let z = PhaseState::new(&[1.0, 2.0, 3.0], &[0.2, -0.4, 0.9])?;
    println!("coefficients at (1,2,3): {:?}", linear_connection_coefficients(z.q()));
    let terms = linear_connection_terms(&z, &k)?;
    println!("weighted terms: {terms:?}");
    println!("sum: {:.3e}", terms.iter().sum::<f64>());

    let report = linear_connection_suite(&k, &SuiteOptions::new(1000, 3))?;
    print!("{}", report.summary());
    Ok(())
}
