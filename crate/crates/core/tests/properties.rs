//! Invariants checked over generated inputs.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use superint::charts::{jacobi_inverse, jacobi_transform, rotation_canonical, rotation_tr, rotation_tr_inverse, Chart};
use superint::dynamics::{integrate, Integrator};
use superint::integrals::{linear_connection_terms, rotational_integrals};
use superint::killing::{KillingTensor, Quadratic3};
use superint::models::{AngularProfile, FourierTerm};
use superint::numcore::{gradient, numerical_rank, DiffConfig};
use superint::phase::{pushforward_state, PointMap};
use superint::{poisson_bracket, Observable, PhaseState};

fn chart_point(chart: &Chart) -> impl Strategy<Value = [f64; 3]> {
    let phi = 0.0..2.0 * PI;
    match chart {
        Chart::Spherical => (0.2..3.0, 0.1..PI - 0.1, phi).prop_map(|(a, b, c)| [a, b, c]).boxed(),
        Chart::CircularCylindrical => (0.2..3.0, -2.0..2.0, phi).prop_map(|(a, b, c)| [a, b, c]).boxed(),
        Chart::RotationalParabolic => (0.2..2.0, 0.2..2.0, phi).prop_map(|(a, b, c)| [a, b, c]).boxed(),
        _ => (0.1..2.0, 0.1..PI - 0.1, phi).prop_map(|(a, b, c)| [a, b, c]).boxed(),
    }
}

fn any_chart() -> impl Strategy<Value = Chart> {
    (0usize..5, 0.3..2.0).prop_map(|(i, a)| Chart::all(a)[i])
}

fn profile() -> impl Strategy<Value = AngularProfile> {
    prop::collection::vec((-0.5..0.5, -0.5..0.5), 1..4).prop_map(|coefs| {
        let constant = 1.0 + coefs.iter().map(|(a, b): &(f64, f64)| a.abs() + b.abs()).sum::<f64>();
        AngularProfile {
            inverse_square_terms: Vec::new(),
            fourier_terms: coefs
                .iter()
                .enumerate()
                .map(|(m, &(a, b))| FourierTerm { m: m as u32 + 1, a, b })
                .collect(),
            constant,
        }
    })
}

fn off_axis_state() -> impl Strategy<Value = PhaseState> {
    (0.3..2.0, 0.0..2.0 * PI, -2.0..2.0, prop::array::uniform3(-1.0..1.0)).prop_map(|(rho, phi, z, p)| {
        PhaseState::new(&[rho * phi.cos(), rho * phi.sin(), z], &p).unwrap()
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn charts_round_trip((chart, u) in any_chart().prop_flat_map(|c| (Just(c), chart_point(&c)))) {
        let x = chart.chart_map(u).unwrap();
        let back = chart.chart_map(chart.chart_inverse(x).unwrap()).unwrap();
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_diff(&x, &back) <= 1e-10 * scale);
    }

    #[test]
    fn linear_maps_round_trip(x in prop::array::uniform3(-5.0..5.0)) {
        prop_assert!(max_diff(&rotation_tr(rotation_tr_inverse(x)), &x) <= 1e-14);
        prop_assert!(max_diff(&jacobi_inverse(jacobi_transform(x)), &x) <= 1e-14);
    }

    /// `p'·(J u̇) = p·u̇`: the canonical lift preserves the momentum pairing.
    #[test]
    fn pushforward_preserves_pairing(
        (chart, u) in any_chart().prop_flat_map(|c| (Just(c), chart_point(&c))),
        p in prop::array::uniform3(-1.0..1.0),
        v in prop::array::uniform3(-1.0..1.0),
    ) {
        let z = PhaseState::new(&u, &p).unwrap();
        let w = pushforward_state(&chart, &z).unwrap();
        let j = chart.jacobian(&u).unwrap();
        let xdot = &j * nalgebra::DVector::from_column_slice(&v);
        let lhs: f64 = w.p().iter().zip(xdot.iter()).map(|(a, b)| a * b).sum();
        let rhs: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs() + lhs.abs()));
    }

    #[test]
    fn bracket_is_antisymmetric_and_leibniz(k in profile(), z in off_axis_state()) {
        let set = rotational_integrals(&k).unwrap();
        let (a, b, c) = (&set.members[1], &set.members[4], &set.members[3]);
        let ab = poisson_bracket(a, b, &z).unwrap();
        let ba = poisson_bracket(b, a, &z).unwrap();
        prop_assert!((ab + ba).abs() <= 1e-12 * (1.0 + ab.abs()));
        let bc = b.product(c);
        let lhs = poisson_bracket(a, &bc, &z).unwrap();
        let rhs = ab * c.value(&z).unwrap() + b.value(&z).unwrap() * poisson_bracket(a, c, &z).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    /// Brackets commute with the canonical rotation.
    #[test]
    fn brackets_survive_canonical_pullback(k in profile(), z in off_axis_state()) {
        let set = rotational_integrals(&k).unwrap();
        let map = rotation_canonical();
        let (a, b) = (&set.members[1], &set.members[4]);
        let moved = map.apply_state(&z).unwrap();
        let direct = poisson_bracket(a, b, &moved).unwrap();
        let pulled = poisson_bracket(&a.pullback(&map), &b.pullback(&map), &z).unwrap();
        prop_assert!((direct - pulled).abs() <= 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn ad_gradient_matches_finite_differences(k in profile(), z in off_axis_state()) {
        let set = rotational_integrals(&k).unwrap();
        let fd = DiffConfig::finite_difference(1e-4).unwrap();
        for f in &set.members {
            let a = gradient(f.field(), z.as_slice(), &DiffConfig::default()).unwrap();
            let b = gradient(f.field(), z.as_slice(), &fd).unwrap();
            let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!(max_diff(&a, &b) <= 1e-7 * scale, "{}", f.label());
        }
    }

    #[test]
    fn rank_ignores_permutation_and_scale(
        rows in prop::collection::vec(prop::array::uniform4(-1.0..1.0), 2..5),
        s in prop_oneof![-1e3..-1e-3, 1e-3..1e3],
        rot in 0usize..5,
    ) {
        let mut m = DMatrix::from_fn(rows.len() + 1, 4, |i, j| if i < rows.len() { rows[i][j] } else { rows[0][j] + rows[1][j] });
        let r = numerical_rank(&m, 1e-8).unwrap();
        let n = m.nrows();
        let perm = DMatrix::from_fn(n, 4, |i, j| m[((i + rot) % n, j)]);
        prop_assert_eq!(numerical_rank(&perm, 1e-8).unwrap(), r);
        m *= s;
        prop_assert_eq!(numerical_rank(&m, 1e-8).unwrap(), r);
        prop_assert!(r <= rows.len());
    }

    #[test]
    fn profile_is_periodic(k in profile(), phi in -10.0..10.0f64) {
        let a = k.eval_angle(phi);
        prop_assert!((a - k.eval_angle(phi + 2.0 * PI)).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn linear_connection_holds_for_any_profile(k in profile(), z in off_axis_state()) {
        let t = linear_connection_terms(&z, &k).unwrap();
        let scale = t.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        prop_assert!(t.iter().sum::<f64>().abs() <= 1e-12 * scale);
    }

    #[test]
    fn translations_compose(coefs in prop::array::uniform10(-1.0..1.0), a in -2.0..2.0, b in -2.0..2.0) {
        let q = Quadratic3(coefs);
        let two = q.translate_x3(a).translate_x3(b);
        let one = q.translate_x3(a + b);
        prop_assert!(max_diff(&two.0, &one.0) <= 1e-12);
        let t = KillingTensor::spherical_pencil(coefs[0], coefs[1], coefs[2]);
        prop_assert!(t.translate_x3(a).killing_defect(&[0.3, -0.4, b]) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Verlet is time-symmetric: integrating forward, flipping momenta and
    /// integrating again returns to the start with flipped momenta.
    #[test]
    fn verlet_is_reversible(k in profile(), z in off_axis_state()) {
        let set = rotational_integrals(&k).unwrap();
        let fwd = integrate(&set.system, &z, 1e-2, 1.0, Integrator::StormerVerlet2).unwrap();
        let end = fwd.last();
        let flipped: Vec<f64> = end.p().iter().map(|v| -v).collect();
        let back = integrate(&set.system, &PhaseState::new(end.q(), &flipped).unwrap(), 1e-2, 1.0, Integrator::StormerVerlet2).unwrap();
        prop_assert!(max_diff(back.last().q(), z.q()) <= 1e-9);
        let p: Vec<f64> = back.last().p().iter().map(|v| -v).collect();
        prop_assert!(max_diff(&p, z.p()) <= 1e-9);
    }

    #[test]
    fn energy_is_an_observable_of_the_flow(k in profile(), z in off_axis_state()) {
        let set = rotational_integrals(&k).unwrap();
        let h: &Observable = &set.members[0];
        let e = set.system.energy(&z).unwrap();
        prop_assert!((h.value(&z).unwrap() - e).abs() <= 1e-14 * (1.0 + e.abs()));
    }
}
