//! Minimally superintegrable families, the coordinate-plane catalog entry
//! and the layered systems, each through the verification suites.
//!
//! `cargo run --example minimal_families`

use superint::cli::preset;
use superint::integrals::integrals_for;
use superint::verify::{conservation_suite, involution_suite, SuiteOptions};

fn main() -> superint::Result<()> {
    let opts = SuiteOptions::new(100, 11);
    for name in ["hartmann", "v1", "v2", "v3", "three-planes", "layered-oscillator"] {
        let set = integrals_for(&preset(name)?.system)?;
        let mut ok = conservation_suite(&set, &opts)?.passed();
        if !set.involutive_pairs.is_empty() {
            ok &= involution_suite(&set, &opts)?.passed();
        }
        println!("{name:<20} {:<18} members {:?}: {}", set.label, set.labels(), if ok { "pass" } else { "FAIL" });
    }
    Ok(())
}
