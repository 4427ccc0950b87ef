use std::f64::consts::PI;
use std::sync::Arc;

use inflab_core::domain::{Ball, FnDomain};
use inflab_core::geometry::{
    axis_witness, make_domain, search_uniform_witness, verify_uniform_witness, DomainShape, SearchOptions,
    UniformConditionParams, UniformConditionWitness,
};
use inflab_core::grid::{osc_on, rasterize_domain, sup_abs_on, CellClass, GridFunction, GridSpec, Region};
use proptest::prelude::*;

fn spec(h: f64) -> GridSpec {
    GridSpec::centered(2, h, &[0.0, 0.0], 1.0, 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn sup_is_monotone_in_the_region(
        cx in -0.5f64..0.5, cy in -0.5f64..0.5, r in 0.2f64..0.6, grow in 0.0f64..0.5, k in -3.0f64..3.0,
    ) {
        let mask = Arc::new(rasterize_domain(Arc::new(Ball::unit(2)), spec(1.0 / 16.0), 1).unwrap());
        let f = GridFunction::from_fn(&mask, |x| (k * x[0]).sin() + x[1] * x[1]);
        let small = Region::ball(&[cx, cy], r).unwrap();
        let big = Region::ball(&[cx, cy], r + grow).unwrap();
        let s = sup_abs_on(&f, &small).unwrap();
        prop_assert!(s <= sup_abs_on(&f, &big).unwrap());
        prop_assert!(s <= sup_abs_on(&f, &Region::Whole).unwrap());
        let inter = small.clone().intersect(Region::ball(&[0.0, 0.0], 0.9).unwrap());
        if let Ok(si) = sup_abs_on(&f, &inter) {
            prop_assert!(si <= s);
        }
        prop_assert!(osc_on(&f, &small).unwrap() <= 2.0 * s);
    }

    #[test]
    fn rasterization_is_monotone_in_the_domain(r in 0.2f64..0.8, grow in 0.0f64..0.15, tilt in -0.3f64..0.3) {
        let inner = FnDomain(move |x: &[f64]| x[0] * x[0] + x[1] * x[1] < r * r && x[0] > tilt * x[1]);
        let outer = FnDomain(move |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt() < r + grow);
        let a = rasterize_domain(Arc::new(inner), spec(1.0 / 32.0), 1).unwrap();
        let b = rasterize_domain(Arc::new(outer), spec(1.0 / 32.0), 1).unwrap();
        for &i in a.inside() {
            prop_assert_eq!(b.class(i), CellClass::Inside);
        }
    }

    #[test]
    fn geometric_radii_are_admissible(tau1 in 0.05f64..0.9, spread in 0.0f64..0.09, t in 0.0f64..=1.0, depth in 1usize..12) {
        let tau2 = tau1 + spread;
        let params = UniformConditionParams::new(tau1, tau2, 0.3).unwrap();
        let c = tau1 + t * (tau2 - tau1);
        prop_assert!(axis_witness(2, params, c, depth).is_ok());
        // a ratio outside [tau1, tau2] is rejected
        prop_assert!(axis_witness(2, params, tau2 * 1.05, depth).is_err());
    }

    #[test]
    fn passing_witnesses_pass_for_smaller_caps(angle in 0.3f64..1.4, nu in 0.2f64..0.9, shrink in 0.1f64..1.0) {
        let params = UniformConditionParams::new(0.4, 0.6, nu).unwrap();
        let domain = make_domain(DomainShape::Cone { half_angle: angle }, 2).unwrap();
        let w = axis_witness(2, params, 0.5, 6).unwrap();
        if verify_uniform_witness(&domain, &w, 400).passed() {
            let smaller = w.with_nu(nu * shrink).unwrap();
            prop_assert!(verify_uniform_witness(&domain, &smaller, 400).passed());
        }
    }
}

#[test]
fn found_witnesses_survive_ten_times_denser_sampling() {
    let params = UniformConditionParams::new(0.4, 0.6, 0.3).unwrap();
    let opts = SearchOptions { depth: 6, ..SearchOptions::default() };
    let shapes = [
        DomainShape::HalfSpace,
        DomainShape::Cone { half_angle: PI / 4.0 },
        DomainShape::Cone { half_angle: 1.2 },
        DomainShape::Corkscrew { offset: 0.9 },
        DomainShape::Spiral { turn_rate: 0.5 },
    ];
    let mut found_count = 0;
    for shape in shapes {
        let domain = make_domain(shape, 2).unwrap();
        let found = search_uniform_witness(&domain, &[0.0, 0.0], &params, &opts).unwrap();
        if let Some(w) = found.witness() {
            let dense = verify_uniform_witness(&domain, w, 10 * opts.samples_per_cap);
            assert!(dense.passed(), "{shape:?}: {dense:?}");
            found_count += 1;
        }
    }
    assert!(found_count >= 3, "only {found_count} shapes had witnesses");
}

#[test]
fn witness_rejects_bad_radii() {
    let params = UniformConditionParams::new(0.4, 0.6, 0.3).unwrap();
    let radii = vec![1.0, 0.5, 0.1];
    let centers = radii.iter().map(|&r| vec![-r, 0.0]).collect();
    assert!(UniformConditionWitness::new(vec![0.0, 0.0], params, radii, centers).is_err());
}
