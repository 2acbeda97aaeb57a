use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gmtlab_core::brakke::io::{parse_dvflow, to_dvflow_string};
use gmtlab_core::brakke::tracks::{linspace, static_track};
use gmtlab_core::brakke::{brakke_residual, SpaceTimeTestFunction};
use gmtlab_core::cutoff::RadialCutoff;
use gmtlab_core::geometry::{random_rotation, GeometryContext, Plane, Vector};
use gmtlab_core::monotonicity::{weighted_density, ConvexWeight};
use gmtlab_core::varifold::io::{parse_dvf, to_dvf_string};
use gmtlab_core::varifold::shapes;
use gmtlab_core::varifold::TestField;

fn ctx() -> GeometryContext {
    GeometryContext::new(3, 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dvf_round_trip(radius in 0.5f64..2.0, spacing in 0.1f64..0.3, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = shapes::sphere(ctx(), radius, spacing, &Vector::from_column_slice(&[0.0, 0.0, 1.0]))
            .unwrap()
            .rotated(&random_rotation(3, &mut rng))
            .unwrap();
        let text = to_dvf_string(&v);
        let back = parse_dvf(&text).unwrap();
        prop_assert_eq!(&back, &v);
        prop_assert_eq!(to_dvf_string(&back), text);
    }

    #[test]
    fn density_is_rotation_invariant(seed in 0u64..1000, r in 0.2f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let north = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let v = shapes::sphere(ctx(), 1.0, 0.05, &north).unwrap().translated(&-north);
        let q = random_rotation(3, &mut rng);
        let one = ConvexWeight::constant(1.0).unwrap();
        let a = weighted_density(&v, &one, r).unwrap();
        let b = weighted_density(&v.rotated(&q).unwrap(), &one, r).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn plane_density_is_near_one(r in 0.1f64..0.9) {
        let v = shapes::flat_lattice(ctx(), &Plane::horizontal(3, 2).unwrap(), 0.01, 1.0, &Vector::zeros(3)).unwrap();
        let one = ConvexWeight::constant(1.0).unwrap();
        let d = weighted_density(&v, &one, r).unwrap();
        // lattice counting error is O(h / r)
        prop_assert!((d - 1.0).abs() <= 4.0 * 0.01 / r, "{d}");
    }

    #[test]
    fn sphere_first_variation_residual_is_small(seed in 0u64..1000, radius in 0.5f64..2.0) {
        let v = shapes::sphere(ctx(), radius, 0.05 * radius, &Vector::from_column_slice(&[0.0, 0.0, 1.0])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = TestField::random(3, 2, None, &mut rng).unwrap();
        let fv = v.first_variation(&f).unwrap();
        prop_assert!(!fv.unreliable);
        prop_assert!(fv.relative_residual() <= 1e-2, "{}", fv.relative_residual());
    }

    #[test]
    fn static_plane_has_zero_brakke_residual(t1 in -1.0f64..-0.5, len in 0.1f64..0.4) {
        let plane = shapes::flat_lattice(ctx(), &Plane::horizontal(3, 2).unwrap(), 0.05, 1.2, &Vector::zeros(3)).unwrap();
        let track = static_track(&plane, &linspace(t1, t1 + len, 5), "static").unwrap();
        let phi = SpaceTimeTestFunction::cutoff(RadialCutoff::new(Vector::zeros(3), 0.3, 0.9).unwrap());
        let r = brakke_residual(&track, &phi, t1, t1 + len).unwrap();
        prop_assert!(r.residual.abs() <= 1e-12, "{:?}", r);
    }
}

#[test]
fn dvflow_round_trip() {
    let plane = shapes::flat_lattice(ctx(), &Plane::horizontal(3, 2).unwrap(), 0.1, 0.5, &Vector::zeros(3)).unwrap();
    let track = static_track(&plane, &[-0.3, -0.2, -0.1], "static").unwrap();
    let text = to_dvflow_string(&track);
    let back = parse_dvflow(&text).unwrap();
    assert_eq!(back.times(), track.times());
    assert_eq!(to_dvflow_string(&back), text);
}
