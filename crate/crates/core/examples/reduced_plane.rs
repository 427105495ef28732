//! The three-body chain reduced to the relative plane and its angular
//! integral, with the sign chosen by the bracket probe.
//!
//! `cargo run --example reduced_plane`

use superint::integrals::{planar_calogero_integrals, planar_effective_couplings, resolve_planar_integral};
use superint::models::{calogero_reduced_2d, ReducedCalogero};
use superint::verify::{conservation_suite, SuiteOptions};
use superint::Error;

fn main() -> superint::Result<()> {
    let g = [1.0, 0.6, 1.4];
    let reduced = ReducedCalogero::new(1.0, g);
    println!("pair forms in (rho, lambda): {:.5?}", reduced.pair_forms());
    println!("harmonic coefficient: {}", reduced.harmonic_coefficient());

    let eff = planar_effective_couplings(&reduced);
    let (set, resolved) = planar_calogero_integrals(1.0, g)?;
    println!(
        "effective couplings {eff:.4?}: sign {:+}, residuals {:.1e} / {:.1e}",
        resolved.sign, resolved.residual_plus, resolved.residual_minus
    );
    print!("{}", conservation_suite(&set, &SuiteOptions::new(100, 5))?.summary());

    let system = calogero_reduced_2d(1.0, g)?;
    match resolve_planar_integral(&system, g) {
        Err(Error::NoConservedSign { plus, minus }) => {
            println!("raw couplings: no sign conserved ({plus:.2e} / {minus:.2e})")
        }
        other => println!("raw couplings: {:?}", other.map(|r| r.sign)),
    }
    Ok(())
}
