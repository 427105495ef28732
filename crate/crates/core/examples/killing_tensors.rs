//! Recovers the Killing tensors of the rotational integrals and checks the
//! Killing equation, rotational invariance and the translation span.
//!
//! `cargo run --example killing_tensors`

use superint::integrals::rotational_integrals;
use superint::killing::{common_eigenframe, lie_derivative_rotation, translation_span_residual, KillingTensor};
use superint::models::AngularProfile;

fn main() -> superint::Result<()> {
    let set = rotational_integrals(&AngularProfile::from_calogero([1.0; 3]))?;
    let tensors = set
        .members
        .iter()
        .map(KillingTensor::from_observable)
        .collect::<superint::Result<Vec<_>>>()?;
    let x = [0.7, -0.4, 1.1];
    for t in &tensors {
        println!(
            "{:<12} Killing defect {:.1e}  L_(L3) K {:.1e}",
            t.label,
            t.killing_defect(&x),
            lie_derivative_rotation(t, &x).amax()
        );
    }
    for s in [0.3, 0.7, 2.0] {
        println!("translation by {s}: span residual {:.1e}", translation_span_residual(&tensors, s)?);
    }
    let frame = common_eigenframe(&tensors[1], &tensors[2], &x, 1e-10);
    println!("spherical and axial share an eigenframe: {}", frame.commutes());
    let pencil = KillingTensor::spherical_pencil(0.0, 1.0, 1.0);
    println!("spherical vs pencil: {:.1e}", tensors[1].coefficient_distance(&pencil));
    Ok(())
}
