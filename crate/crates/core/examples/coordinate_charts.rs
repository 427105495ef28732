//! The five rotational charts, the Jacobi map and the canonical lift.
//!
//! `cargo run --example coordinate_charts`

use superint::charts::{jacobi_canonical, jacobi_transform, Chart};
use superint::phase::pushforward_state;
use superint::verify::{charts_suite, SuiteOptions};
use superint::PhaseState;

fn main() -> superint::Result<()> {
    let x = [0.6, -1.2, 0.9];
    for chart in Chart::all(1.3) {
        let u = chart.chart_inverse(x)?;
        println!("{:<22} u = {:>8.5?} -> x = {:>8.5?}", chart.name(), u, chart.chart_map(u)?);
    }
    println!("Jacobi (R, rho, lambda) = {:.5?}", jacobi_transform(x));

    let z = PhaseState::new(&[1.2, 0.8, 2.0], &[0.3, 0.1, -0.4])?;
    let cart = pushforward_state(&Chart::Spherical, &z)?;
    println!("spherical state {:?} lifts to {:.5?}", z.as_slice(), cart.as_slice());
    let jac = jacobi_canonical().apply_state(&cart)?;
    println!("in Jacobi frame: {:.5?}", jac.as_slice());

    print!("{}", charts_suite(1.3, &SuiteOptions::new(200, 9))?.summary());
    Ok(())
}
