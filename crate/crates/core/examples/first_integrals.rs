//! Conservation, involution and rank of the rotational integrals for an
//! arbitrary azimuthal profile, plus the quadratic relation that caps the
//! rank at 4.
//!
//! `cargo run --example first_integrals`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use superint::integrals::{rotational_integrals, rotational_relation_residual};
use superint::models::AngularProfile;
use superint::verify::{conservation_suite, independence_suite, involution_suite, SuiteOptions};

fn main() -> superint::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let k = AngularProfile::random_fourier(&mut rng, 3);
    let set = rotational_integrals(&k)?;
    println!("members: {:?}", set.labels());

    let opts = SuiteOptions::new(100, 7);
    for report in [
        conservation_suite(&set, &opts)?,
        involution_suite(&set, &opts)?,
        independence_suite(&set, &opts)?,
    ] {
        print!("{}", report.summary());
    }

    let z = superint::PhaseState::new(&[0.4, -1.1, 0.8], &[0.3, 0.5, -0.2])?;
    println!(
        "2(H - F3)(F1 - F2) - F4^2/4 - 2 F3 F2, relative: {:.2e}",
        rotational_relation_residual(&z, &k)?
    );
    Ok(())
}
