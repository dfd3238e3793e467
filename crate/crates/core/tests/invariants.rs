//! Randomized invariants across curves, transport, functionals, the Lévy
//! Laplacian and the flows.

use std::f64::consts::PI;

use levy_core::flows::{heat_point, limit_functional, ym_u1_flow, DEFAULT_DT};
use levy_core::functionals::{eval, eval_u};
use levy_core::hodge::{exterior_d, heat_propagate, line_integral};
use levy_core::levy::{levy_analytic, levy_divergence, levy_kernel};
use levy_core::pathspace::{
    g0_inner, make_basis_field, path_exp, random_smooth_loop, random_variation, torus_winding,
    TorusPerturbation,
};
use levy_core::transport::{parallel_transport, transport_frame};
use levy_core::{Curve, Manifold, OneForm, OuterMap, PathFunctional, Point, ScalarForm, Tangent};
use num_complex::Complex64;
use proptest::prelude::*;

const TR: usize = 6;

fn torus() -> Manifold {
    Manifold::unit_torus(2).unwrap()
}

fn sphere() -> Manifold {
    Manifold::sphere(1.0).unwrap()
}

fn torus_loop(seed: u64, n: usize) -> Curve {
    let p = TorusPerturbation {
        amplitude: 0.06,
        modes: 3,
        seed,
    };
    torus_winding(&torus(), 0, 1, &[0.3, 0.1], Some(p), n).unwrap()
}

fn test_loop(on_sphere: bool, seed: u64, n: usize) -> Curve {
    if on_sphere {
        random_smooth_loop(&sphere(), seed, 3, n).unwrap()
    } else {
        torus_loop(seed, n)
    }
}

const TORUS_MODES: [[i32; 2]; 4] = [[1, 0], [0, 1], [1, 1], [2, -1]];

/// Real scalar form from eight amplitudes.
fn scalar(on_sphere: bool, c: &[f64]) -> ScalarForm {
    if on_sphere {
        let mut coeffs = Vec::new();
        let mut it = c.iter().cycle();
        for l in 1..=2 {
            for m in 0..=l {
                let re = *it.next().unwrap();
                let im = if m == 0 { 0.0 } else { *it.next().unwrap() };
                let z = Complex64::new(re, im);
                coeffs.push((vec![l, m], z));
                if m > 0 {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    coeffs.push((vec![l, -m], z.conj() * sign));
                }
            }
        }
        ScalarForm::from_coefficients(&sphere(), TR, coeffs).unwrap()
    } else {
        let t = torus();
        let mut f = ScalarForm::zero(&t, TR).unwrap();
        for (k, a) in TORUS_MODES.iter().zip(c.chunks(2)) {
            f = f
                .add(&ScalarForm::torus_cos(&t, TR, k, a[0]).unwrap())
                .unwrap()
                .add(&ScalarForm::torus_sin(&t, TR, k, a[1]).unwrap())
                .unwrap();
        }
        f
    }
}

fn one_form(on_sphere: bool, exact: &[f64], coexact: &[f64], h: [f64; 2]) -> OneForm {
    let harmonic = if on_sphere { vec![] } else { h.to_vec() };
    OneForm::from_parts(scalar(on_sphere, exact), scalar(on_sphere, coexact), harmonic).unwrap()
}

fn amps() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn path_exp_is_identity_at_zero_and_linear_to_second_order(seed in 0u64..500, on_sphere: bool) {
        let c = test_loop(on_sphere, seed, 256);
        let frame = transport_frame(&c, None, true).unwrap();
        let x = random_variation(&frame, seed, 4, 0.3);
        let same = path_exp(&c, &x, 0.0).unwrap();
        prop_assert_eq!(same.samples(), c.samples());

        let gap = |s: f64| {
            let moved = path_exp(&c, &x, s).unwrap();
            moved
                .samples()
                .iter()
                .zip(c.samples())
                .zip(&x.values)
                .map(|((q, p), v)| {
                    let chord = p + v * s;
                    if on_sphere {
                        // ambient gap; the geodesic distance to the projected chord is third order
                        (q - chord).norm()
                    } else {
                        // exp reduces into the fundamental domain
                        c.manifold().distance(&Point::new(q.clone()), &Point::new(chord))
                    }
                })
                .fold(0.0, f64::max)
        };
        if on_sphere {
            let ratio = gap(1e-2) / gap(5e-3);
            prop_assert!((ratio - 4.0).abs() < 0.3, "ratio {}", ratio);
        } else {
            prop_assert!(gap(1e-2) < 1e-12);
        }
    }

    #[test]
    fn basis_fields_are_g0_orthonormal(
        seed in 0u64..500,
        on_sphere: bool,
        n in 1usize..=8,
        m in 1usize..=8,
        mu in 0usize..2,
        nu in 0usize..2,
    ) {
        let c = test_loop(on_sphere, seed, 256);
        let frame = transport_frame(&c, None, true).unwrap();
        let a = make_basis_field(&frame, mu, n).unwrap();
        let b = make_basis_field(&frame, nu, m).unwrap();
        let expected = if n == m && mu == nu { 1.0 } else { 0.0 };
        prop_assert!((g0_inner(&c, &a, &b) - expected).abs() < 1e-10);
    }

    #[test]
    fn path_exp_keeps_closure_and_winding(seed in 0u64..500, p in -2i64..=2, q in 1i64..=2) {
        let pert = TorusPerturbation { amplitude: 0.04, modes: 2, seed };
        let c = torus_winding(&torus(), p, q, &[0.1, 0.2], Some(pert), 256).unwrap();
        let frame = transport_frame(&c, None, true).unwrap();
        let x = random_variation(&frame, seed + 1, 4, 0.2);
        let moved = path_exp(&c, &x, 0.7).unwrap();
        prop_assert!(moved.is_closed());
        prop_assert_eq!(&moved.meta().winding, &Some(vec![p, q]));
        let a = OneForm::harmonic_form(&torus(), TR, vec![1.0, 0.0]).unwrap();
        let b = OneForm::harmonic_form(&torus(), TR, vec![0.0, 1.0]).unwrap();
        prop_assert!((line_integral(&a, &moved).unwrap() - p as f64).abs() < 1e-10);
        prop_assert!((line_integral(&b, &moved).unwrap() - q as f64).abs() < 1e-10);
    }

    #[test]
    fn transport_is_an_isometry(seed in 0u64..500, v in prop::array::uniform2(-1.0f64..1.0), w in prop::array::uniform2(-1.0f64..1.0)) {
        let c = random_smooth_loop(&sphere(), seed, 4, 1024).unwrap();
        let frame = transport_frame(&c, None, false).unwrap();
        prop_assert!(frame.orthonormality_defect() < 1e-8);
        let z = &frame.frames[0];
        let v0 = Tangent::new(c.point(0), &z[0] * v[0] + &z[1] * v[1]);
        let w0 = Tangent::new(c.point(0), &z[0] * w[0] + &z[1] * w[1]);
        for target in [300, 1024] {
            let vt = parallel_transport(&c, &v0, target).unwrap();
            let wt = parallel_transport(&c, &w0, target).unwrap();
            prop_assert!((vt.vec.dot(&wt.vec) - v0.vec.dot(&w0.vec)).abs() < 1e-8);
        }
    }

    #[test]
    fn evaluation_identities(seed in 0u64..500, on_sphere: bool, c1 in amps(), c2 in amps(), h in prop::array::uniform2(-1.0f64..1.0)) {
        let c = test_loop(on_sphere, seed, 512);
        let f = PathFunctional::lf(scalar(on_sphere, &c1));
        let a = one_form(on_sphere, &c1, &c2, h);
        let theta = PathFunctional::theta(a.clone());
        let prod = PathFunctional::product(vec![f.clone(), theta.clone()]).unwrap();
        prop_assert_eq!(eval(&prod, &c).unwrap(), eval(&f, &c).unwrap() * eval(&theta, &c).unwrap());
        prop_assert!((eval_u(&a, &c).unwrap().norm() - 1.0).abs() < 1e-14);
        let exact = exterior_d(&scalar(on_sphere, &c2));
        prop_assert!(line_integral(&exact, &c).unwrap().abs() < 1e-10);
    }

    #[test]
    fn refinement_converges_at_second_order_or_better(seed in 0u64..500, on_sphere: bool, c1 in amps(), c2 in amps()) {
        let f = PathFunctional::product(vec![
            PathFunctional::lf(scalar(on_sphere, &c1)),
            PathFunctional::theta(one_form(on_sphere, &c2, &c1, [0.3, 0.5])),
        ])
        .unwrap();
        // discrete curves only, so the velocity stencil is exercised
        let v: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| eval(&f, &test_loop(on_sphere, seed, n).discrete()).unwrap())
            .collect();
        let (e1, e2) = ((v[1] - v[0]).abs(), (v[2] - v[1]).abs());
        prop_assert!(e2 <= e1 / 3.5 || e2 < 1e-12, "{} -> {}", e1, e2);
    }

    #[test]
    fn leibniz_chain_rule_and_kernel_route(seed in 0u64..500, on_sphere: bool, c1 in amps(), c2 in amps(), h in prop::array::uniform2(-1.0f64..1.0)) {
        let c = test_loop(on_sphere, seed, 512);
        let f = PathFunctional::lf(scalar(on_sphere, &c1));
        let theta = PathFunctional::theta(one_form(on_sphere, &c2, &c1, h));
        let (vf, lf) = (eval(&f, &c).unwrap(), levy_analytic(&f, &c).unwrap());
        let (vt, lt) = (eval(&theta, &c).unwrap(), levy_analytic(&theta, &c).unwrap());

        let prod = PathFunctional::product(vec![f.clone(), theta.clone()]).unwrap();
        let leibniz = levy_analytic(&prod, &c).unwrap() - vf * lt - vt * lf;
        prop_assert!(leibniz.abs() < 1e-10 * (1.0 + (vf * lt).abs() + (vt * lf).abs()));

        let cube = PathFunctional::compose(OuterMap::Power { n: 3 }, vec![theta.clone()]).unwrap();
        let chain = levy_analytic(&cube, &c).unwrap() - 3.0 * vt * vt * lt;
        prop_assert!(chain.abs() < 1e-10 * (1.0 + (3.0 * vt * vt * lt).abs()));

        for atom in [&f, &theta] {
            let k = levy_kernel(atom, &c).unwrap();
            prop_assert!((levy_divergence(&k) - levy_analytic(atom, &c).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn eigenfunctionals_scale_by_their_eigenvalue(seed in 0u64..500, c in prop::array::uniform4(-1.0f64..1.0)) {
        let t = torus();
        // |k|² = 1 for the scalar part, |k|² = 2 for the 1-form
        let f = ScalarForm::torus_cos(&t, TR, &[1, 0], c[0]).unwrap()
            .add(&ScalarForm::torus_sin(&t, TR, &[0, 1], c[1]).unwrap()).unwrap();
        let beta = ScalarForm::torus_cos(&t, TR, &[1, 1], c[2]).unwrap()
            .add(&ScalarForm::torus_sin(&t, TR, &[1, -1], c[3]).unwrap()).unwrap();
        let (g, lambda) = levy_core::functionals::build_eigenfunctional(
            &[f], &[OneForm::coexact_form(beta).unwrap()],
        ).unwrap();
        prop_assert!((lambda + 12.0 * PI * PI).abs() < 1e-9);
        let curve = torus_loop(seed, 512);
        let lhs = levy_analytic(&g, &curve).unwrap();
        prop_assert!((lhs - lambda * eval(&g, &curve).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn flows_on_loops(seed in 0u64..500, on_sphere: bool, c1 in amps(), c2 in amps(), h in prop::array::uniform2(-1.0f64..1.0), t in 0.0f64..1.0) {
        let c = test_loop(on_sphere, seed, 512);
        let a0 = one_form(on_sphere, &c1, &c2, h);
        let ym = line_integral(&ym_u1_flow(&a0, t).unwrap(), &c).unwrap();
        let hodge = line_integral(&heat_propagate(&a0, t).unwrap(), &c).unwrap();
        prop_assert!((ym - hodge).abs() < 1e-10);

        let template = PathFunctional::product(vec![
            PathFunctional::lf(scalar(on_sphere, &c2)),
            PathFunctional::theta(a0),
        ])
        .unwrap();
        let p = heat_point(&template, &c, t, DEFAULT_DT).unwrap();
        prop_assert!(p.residual < 1e-6, "residual {}", p.residual);
    }

    #[test]
    fn limits_depend_only_on_the_winding_class(s1 in 0u64..500, s2 in 0u64..500, p in -2i64..=2, q in 1i64..=2, c1 in amps(), c2 in amps(), h in prop::array::uniform2(-1.0f64..1.0)) {
        let template = PathFunctional::theta(one_form(false, &c1, &c2, h));
        let limit = limit_functional(&template).unwrap();
        let loop_at = |seed, base: [f64; 2]| {
            let pert = TorusPerturbation { amplitude: 0.05, modes: 3, seed };
            torus_winding(&torus(), p, q, &base, Some(pert), 512).unwrap()
        };
        let la = eval(&limit, &loop_at(s1, [0.1, 0.2])).unwrap();
        let lb = eval(&limit, &loop_at(s2, [0.6, 0.9])).unwrap();
        prop_assert!((la - lb).abs() < 1e-8);
        prop_assert!((la - (h[0] * p as f64 + h[1] * q as f64)).abs() < 1e-8);
    }
}
