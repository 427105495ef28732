//! Rotates the three-body chain into the axial family and prints the
//! coefficient audit against the historically printed forms.
//!
//! `cargo run --example calogero_rotation`

use superint::models::{calogero_3body, AngularProfile};
use superint::charts::rotation_tr;
use superint::verify::{equivalence_suite, SuiteOptions};

fn main() -> superint::Result<()> {
    let g = [1.0, 1.0, 1.0];
    let line = calogero_3body(0.0, g)?;
    let k = AngularProfile::from_calogero(g);

    println!("V(M x~) * rho~^2 against k(phi):");
    for phi in [0.3, 1.2, 2.5, 4.0] {
        let (s, c) = f64::sin_cos(phi);
        for r in [0.5, 2.0] {
            let w = line.potential_value(&rotation_tr([r * c, r * s, 0.7]))? * r * r;
            println!("  phi {phi:.1} r {r:.1}: {w:.12} vs {:.12}", k.eval_angle(phi));
        }
    }

    let report = equivalence_suite(g, &SuiteOptions::new(50, 1))?;
    print!("{}", report.summary());
    for d in &report.discrepancies {
        let ratio = d.ratio.map_or("n/a".into(), |r| format!("{r:.4}"));
        println!("  {:<26} {:<34} printed {:>8.4} measured {:>8.4} ratio {ratio}", d.equation, d.term, d.printed, d.measured);
    }
    Ok(())
}
