//! Fixtures for the benchmarks in `benches/`.

use std::f64::consts::PI;

use levy_core::pathspace::{sphere_wobble, torus_winding, TorusPerturbation};
use levy_core::{Curve, Manifold, OneForm, PathFunctional, ScalarForm};

pub fn torus() -> Manifold {
    Manifold::unit_torus(2).unwrap()
}

pub fn sphere() -> Manifold {
    Manifold::sphere(1.0).unwrap()
}

pub fn torus_loop(n: usize) -> Curve {
    let p = TorusPerturbation {
        amplitude: 0.05,
        modes: 3,
        seed: 11,
    };
    torus_winding(&torus(), 0, 1, &[0.25, 0.0], Some(p), n).unwrap()
}

pub fn sphere_loop(n: usize) -> Curve {
    sphere_wobble(&sphere(), PI / 3.0, 0.1, 3, n).unwrap()
}

/// `Θ` of `sin(2πx)dy`.
pub fn torus_theta() -> PathFunctional {
    let beta = ScalarForm::torus_cos(&torus(), 8, &[1, 0], -1.0 / (2.0 * PI)).unwrap();
    PathFunctional::theta(OneForm::coexact_form(beta).unwrap())
}

/// `L_f · Θ` on the torus.
pub fn torus_product() -> PathFunctional {
    let f = ScalarForm::torus_sin(&torus(), 8, &[1, 0], 1.0).unwrap();
    PathFunctional::product(vec![PathFunctional::lf(f), torus_theta()]).unwrap()
}

/// `Θ` of `⋆dz` on the sphere.
pub fn sphere_theta() -> PathFunctional {
    let z = ScalarForm::sphere_coordinate(&sphere(), 8, 2).unwrap();
    PathFunctional::theta(OneForm::coexact_form(z).unwrap())
}
