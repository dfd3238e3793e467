//! Default fixtures shared by `selftest` and the acceptance target.

use std::f64::consts::PI;

use levy_core::hodge::exterior_d;
use levy_core::pathspace::{sphere_latitude, sphere_wobble, torus_winding, TorusPerturbation};
use levy_core::{Curve, Manifold, OneForm, OuterMap, PathFunctional, Result, ScalarForm};

pub const TRUNCATION: usize = 8;

/// Grid used for the reference Cesàro runs at `n_max = 32`.
pub const GRID: usize = 1024;

pub const PERTURBATION: TorusPerturbation = TorusPerturbation {
    amplitude: 0.05,
    modes: 3,
    seed: 11,
};

pub const SPHERE_THETA: f64 = PI / 3.0;

pub fn torus() -> Manifold {
    Manifold::unit_torus(2).expect("unit torus")
}

pub fn sphere() -> Manifold {
    Manifold::sphere(1.0).expect("unit sphere")
}

/// `sin(2πx)`, eigenvalue `−4π²`.
pub fn torus_f() -> Result<ScalarForm> {
    ScalarForm::torus_sin(&torus(), TRUNCATION, &[1, 0], 1.0)
}

/// `sin(2πx) dy = ⋆d(−cos(2πx)/2π)`.
pub fn sin_dy() -> Result<OneForm> {
    OneForm::coexact_form(ScalarForm::torus_cos(
        &torus(),
        TRUNCATION,
        &[1, 0],
        -1.0 / (2.0 * PI),
    )?)
}

pub fn sphere_coord(axis: usize) -> Result<ScalarForm> {
    ScalarForm::sphere_coordinate(&sphere(), TRUNCATION, axis)
}

/// `⋆dz`, eigenvalue `−2`.
pub fn sphere_star_dz() -> Result<OneForm> {
    OneForm::coexact_form(sphere_coord(2)?)
}

/// `sin(2πx)dy + dy`.
pub fn heat_template_form() -> Result<OneForm> {
    sin_dy()?.add(&OneForm::harmonic_form(&torus(), TRUNCATION, vec![0.0, 1.0])?)
}

/// Mixed torus form with exact, co-exact and harmonic parts.
pub fn torus_mixed_form() -> Result<OneForm> {
    let exact = exterior_d(&ScalarForm::torus_cos(&torus(), TRUNCATION, &[1, 1], 0.4)?);
    sin_dy()?
        .add(&exact)?
        .add(&OneForm::harmonic_form(&torus(), TRUNCATION, vec![0.3, 1.0])?)
}

/// `⋆dz + 0.3 dx` on the sphere.
pub fn sphere_mixed_form() -> Result<OneForm> {
    sphere_star_dz()?.add(&exterior_d(&sphere_coord(0)?.scaled(0.3)))
}

pub fn torus_straight(n: usize) -> Result<Curve> {
    torus_winding(&torus(), 0, 1, &[0.25, 0.0], None, n)
}

pub fn torus_perturbed(n: usize) -> Result<Curve> {
    torus_winding(&torus(), 0, 1, &[0.25, 0.0], Some(PERTURBATION), n)
}

pub fn sphere_straight(n: usize) -> Result<Curve> {
    sphere_latitude(&sphere(), SPHERE_THETA, n)
}

pub fn sphere_perturbed(n: usize) -> Result<Curve> {
    sphere_wobble(&sphere(), SPHERE_THETA, 0.1, 3, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Torus,
    Sphere,
}

impl Surface {
    /// The straight and the perturbed loop at grid size `n`.
    pub fn loops(self, n: usize) -> Result<[(&'static str, Curve); 2]> {
        Ok(match self {
            Surface::Torus => [("straight", torus_straight(n)?), ("perturbed", torus_perturbed(n)?)],
            Surface::Sphere => [
                ("latitude", sphere_straight(n)?),
                ("wobble", sphere_perturbed(n)?),
            ],
        })
    }
}

pub struct Fixture {
    pub name: &'static str,
    pub surface: Surface,
    pub functional: PathFunctional,
    /// Single `L_f` or `Θ_a` leaf.
    pub atom: bool,
}

/// The six equivalence fixtures.
pub fn equivalence_fixtures() -> Result<Vec<Fixture>> {
    let lf = PathFunctional::lf(torus_f()?);
    let theta = PathFunctional::theta(sin_dy()?);
    Ok(vec![
        Fixture {
            name: "L_f torus (1,0)",
            surface: Surface::Torus,
            functional: lf.clone(),
            atom: true,
        },
        Fixture {
            name: "L_z sphere",
            surface: Surface::Sphere,
            functional: PathFunctional::lf(sphere_coord(2)?),
            atom: true,
        },
        Fixture {
            name: "Θ sin(2πx)dy torus",
            surface: Surface::Torus,
            functional: theta.clone(),
            atom: true,
        },
        Fixture {
            name: "Θ ⋆dz sphere",
            surface: Surface::Sphere,
            functional: PathFunctional::theta(sphere_star_dz()?),
            atom: true,
        },
        Fixture {
            name: "L_f·Θ torus",
            surface: Surface::Torus,
            functional: PathFunctional::product(vec![lf, theta.clone()])?,
            atom: false,
        },
        Fixture {
            name: "Θ² torus",
            surface: Surface::Torus,
            functional: PathFunctional::compose(OuterMap::Power { n: 2 }, vec![theta])?,
            atom: false,
        },
    ])
}

/// Extra atoms for the kernel route: forms with several Hodge parts.
pub fn extra_atoms() -> Result<Vec<Fixture>> {
    Ok(vec![
        Fixture {
            name: "Θ mixed torus",
            surface: Surface::Torus,
            functional: PathFunctional::theta(torus_mixed_form()?),
            atom: true,
        },
        Fixture {
            name: "Θ mixed sphere",
            surface: Surface::Sphere,
            functional: PathFunctional::theta(sphere_mixed_form()?),
            atom: true,
        },
    ])
}
