use std::sync::Arc;

use inflab_core::domain::{Ball, Cube, FnDomain};
use inflab_core::grid::{rasterize_domain, DomainMask, GridFunction, GridSpec};
use inflab_core::solver::{discrete_residual, midrange_update, MidrangeOperator, SolveParams, StencilSpec, Sweep};
use proptest::prelude::*;

fn disk(h: f64, w: usize) -> Arc<DomainMask> {
    let spec = GridSpec::centered(2, h, &[0.0, 0.0], 1.0, w).unwrap();
    Arc::new(rasterize_domain(Arc::new(Ball::unit(2)), spec, w).unwrap())
}

/// Sum of a few plane waves with the given coefficients, values in `[-1, 1]`.
fn wave(c: &[f64; 6]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| 0.5 * ((c[0] * x[0] + c[1] * x[1] + c[2]).sin() + (c[3] * x[0] + c[4] * x[1] + c[5]).cos())
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-4.0f64..4.0)
}

fn lattice(v: f64) -> f64 {
    (v * 2f64.powi(40)).floor() / 2f64.powi(40)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn maximum_principle(c in coeffs(), w in 1usize..=3) {
        let mask = disk(1.0 / 16.0, w);
        let g = GridFunction::boundary_data(&mask, wave(&c));
        let u = MidrangeOperator::new(&mask, &StencilSpec::new(2, w).unwrap()).unwrap()
            .solve(&g, &SolveParams::default()).unwrap().field;
        let (lo, hi) = g.boundary_range();
        for &i in mask.inside() {
            prop_assert!(lo <= u.value(i) && u.value(i) <= hi);
        }
        for &b in mask.boundary() {
            prop_assert_eq!(u.value(b).to_bits(), g.value(b).to_bits());
        }
    }

    #[test]
    fn comparison(c in coeffs(), d in coeffs(), delta in 1e-3f64..0.5) {
        let mask = disk(1.0 / 16.0, 3);
        let op = MidrangeOperator::new(&mask, &StencilSpec::new(2, 3).unwrap()).unwrap();
        let lower = wave(&c);
        let bump = wave(&d);
        let g1 = GridFunction::boundary_data(&mask, &lower);
        let g2 = GridFunction::boundary_data(&mask, |x| lower(x) + delta * (1.5 + bump(x)));
        let p = SolveParams::default();
        let u1 = op.solve(&g1, &p).unwrap().field;
        let u2 = op.solve(&g2, &p).unwrap().field;
        for i in mask.valued_cells() {
            prop_assert!(u1.value(i) <= u2.value(i));
        }
    }

    #[test]
    fn dyadic_scaling_and_negation_are_exact(c in coeffs(), k in -6i32..=6, neg in any::<bool>()) {
        let mask = disk(1.0 / 16.0, 3);
        let op = MidrangeOperator::new(&mask, &StencilSpec::new(2, 3).unwrap()).unwrap();
        let g = GridFunction::boundary_data(&mask, wave(&c));
        let a = if neg { -1.0 } else { 1.0 } * 2f64.powi(k);
        let p = SolveParams::default();
        let u = op.solve(&g, &p).unwrap().field;
        let v = op.solve(&g.map(|x| a * x), &p).unwrap().field;
        for i in mask.valued_cells() {
            prop_assert_eq!(v.value(i).to_bits(), (a * u.value(i)).to_bits());
        }
    }

    #[test]
    fn representable_affine_maps_are_exact(c in coeffs(), k in -4i32..=4, neg in any::<bool>(), t in 0.0f64..0.5) {
        let mask = disk(1.0 / 16.0, 3);
        let op = MidrangeOperator::new(&mask, &StencilSpec::new(2, 3).unwrap()).unwrap();
        let f = wave(&c);
        // data on the 2^-40 lattice in [1, 1.25]; shifted values stay in [1, 2)
        let g = GridFunction::boundary_data(&mask, |x| lattice(1.125 + 0.125 * f(x)));
        let a = if neg { -1.0 } else { 1.0 } * 2f64.powi(k);
        let b = a * lattice(t);
        let p = SolveParams::default();
        let u = op.solve(&g, &p).unwrap().field;
        let v = op.solve(&g.map(|x| a * x + b), &p).unwrap().field;
        for i in mask.valued_cells() {
            prop_assert_eq!(v.value(i).to_bits(), (a * u.value(i) + b).to_bits());
        }
    }

    #[test]
    fn affine_maps_hold_to_rounding(c in coeffs(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        prop_assume!(a.abs() > 1e-3);
        let mask = disk(1.0 / 16.0, 3);
        let op = MidrangeOperator::new(&mask, &StencilSpec::new(2, 3).unwrap()).unwrap();
        let g = GridFunction::boundary_data(&mask, wave(&c));
        let p = SolveParams { tol: 1e-13, ..SolveParams::default() };
        let u = op.solve(&g, &p).unwrap().field;
        let v = op.solve(&g.map(|x| a * x + b), &p).unwrap().field;
        let scale = a.abs() + b.abs();
        for i in mask.valued_cells() {
            prop_assert!((v.value(i) - (a * u.value(i) + b)).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn symmetric_data_give_symmetric_solutions(c in prop::array::uniform3(-3.0f64..3.0)) {
        let mask = disk(1.0 / 16.0, 3);
        let spec = mask.spec().clone();
        // invariant under x1 -> -x1 and under swapping the axes
        let g = GridFunction::boundary_data(&mask, |x| {
            let (p, q) = (x[0].abs(), x[1].abs());
            (c[0] * (p + q)).sin() + c[1] * p * q + c[2] * (p * p + q * q)
        });
        let p = SolveParams { tol: 1e-13, ..SolveParams::default() };
        let u = MidrangeOperator::new(&mask, &StencilSpec::new(2, 3).unwrap()).unwrap().solve(&g, &p).unwrap().field;
        let n = spec.extent()[0];
        for &i in mask.inside() {
            let cell = spec.cell(i);
            let flip = spec.index(&[n - 1 - cell[0], cell[1]]);
            let swap = spec.index(&[cell[1], cell[0]]);
            prop_assert!((u.value(i) - u.value(flip)).abs() < 1e-9);
            prop_assert!((u.value(i) - u.value(swap)).abs() < 1e-9);
        }
    }

    #[test]
    fn affine_functions_have_zero_residual_on_a_box(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, w in 1usize..=3) {
        let spec = GridSpec::centered(2, 1.0 / 16.0, &[0.0, 0.0], 1.0, w).unwrap();
        let mask = Arc::new(rasterize_domain(Arc::new(Cube { half_width: 1.0 }), spec, w).unwrap());
        let f = GridFunction::from_fn(&mask, |x| a * x[0] + b * x[1] + c);
        let stencil = StencilSpec::new(2, w).unwrap();
        prop_assert!(discrete_residual(&f, &stencil).unwrap() < 1e-13);
        let (_, res) = midrange_update(&f, &stencil, Sweep::Jacobi).unwrap();
        prop_assert!(res < 1e-13);
    }
}

#[test]
fn jacobi_and_gauss_seidel_reach_the_same_fixed_point() {
    let mask = disk(1.0 / 32.0, 3);
    let g = GridFunction::boundary_data(&mask, |x| x[0] * x[1] + 0.3 * x[0]);
    let stencil = StencilSpec::new(2, 3).unwrap();
    let op = MidrangeOperator::new(&mask, &stencil).unwrap();
    let tight = SolveParams { tol: 1e-12, ..SolveParams::default() };
    let gs = op.solve(&g, &tight).unwrap().field;
    let jac = op.solve(&g, &SolveParams { sweep: Sweep::Jacobi, ..tight }).unwrap().field;
    for &i in mask.inside() {
        assert!((gs.value(i) - jac.value(i)).abs() < 1e-8);
    }
}

#[test]
fn nonconvex_masks_keep_rays_inside() {
    // an annulus sector: rays must stop at the inner hole
    let domain = FnDomain(|x: &[f64]| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        r > 0.4 && r < 0.95
    });
    let spec = GridSpec::centered(2, 1.0 / 32.0, &[0.0, 0.0], 1.0, 3).unwrap();
    let mask = Arc::new(rasterize_domain(Arc::new(domain), spec, 3).unwrap());
    let g = GridFunction::boundary_data(&mask, |x| if x[0] * x[0] + x[1] * x[1] < 0.5 { 1.0 } else { 0.0 });
    let stencil = StencilSpec::new(2, 3).unwrap();
    let u = MidrangeOperator::new(&mask, &stencil).unwrap().solve(&g, &SolveParams::default()).unwrap().field;
    assert!(discrete_residual(&u, &stencil).unwrap() <= 2e-8);
    for &i in mask.inside() {
        assert!((0.0..=1.0).contains(&u.value(i)));
    }
}
