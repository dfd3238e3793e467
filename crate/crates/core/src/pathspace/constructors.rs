//! Curve fixtures with closed forms for position and velocity.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Curve, CurveMeta, CurveOracle};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point, Tangent, Vector};

/// Random Fourier perturbation `δ_j(τ) = A Σ_m c_jm sin(2πmτ)/m` added to
/// the first two coordinates of a torus loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPerturbation {
    pub amplitude: f64,
    pub modes: usize,
    pub seed: u64,
}

fn sample_curve(
    manifold: &Manifold,
    n: usize,
    closed: bool,
    oracle: CurveOracle,
    mut meta: CurveMeta,
) -> Result<Curve> {
    if n == 0 {
        return Err(Error::InvalidCurve("grid size must be positive".into()));
    }
    let samples: Vec<Vector> = (0..=n).map(|i| oracle(i as f64 / n as f64).0).collect();
    // speed bound from a 4x oversampled sweep
    let speed = (0..=4 * n)
        .map(|j| oracle(j as f64 / (4 * n) as f64).1.norm())
        .fold(0.0, f64::max);
    meta.resolution_constant = 1.05 * speed + 1e-12;
    let samples = if let Manifold::Sphere2 { radius } = manifold {
        samples.into_iter().map(|p| &p * (radius / p.norm())).collect()
    } else {
        samples
    };
    Ok(Curve::from_samples(manifold, samples, closed, meta)?.with_oracle(oracle))
}

fn meta(constructor: &str, seed: Option<u64>, winding: Option<Vec<i64>>) -> CurveMeta {
    CurveMeta {
        constructor: constructor.to_string(),
        seed,
        winding,
        resolution_constant: 0.0,
    }
}

/// Loop of winding class `(p, q)` on a torus of dimension ≥ 2 starting at
/// `base`, optionally with a seeded smooth perturbation.
pub fn torus_winding(
    manifold: &Manifold,
    p: i64,
    q: i64,
    base: &[f64],
    perturbation: Option<TorusPerturbation>,
    n: usize,
) -> Result<Curve> {
    let periods = manifold
        .periods()
        .ok_or_else(|| Error::Unsupported("torus_winding needs a flat torus".into()))?
        .to_vec();
    if periods.len() < 2 {
        return Err(Error::Unsupported(
            "torus_winding needs a torus of dimension >= 2".into(),
        ));
    }
    let base = manifold.point(base)?.coords;
    let pert = perturbation.filter(|pp| pp.amplitude != 0.0 && pp.modes > 0);
    if p == 0 && q == 0 && pert.is_none() {
        return Err(Error::InvalidCurve(
            "winding (0, 0) without perturbation is a constant curve".into(),
        ));
    }
    let coeffs: Vec<[f64; 2]> = match pert {
        Some(pp) => {
            let mut rng = ChaCha8Rng::seed_from_u64(pp.seed);
            (0..pp.modes)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect()
        }
        None => Vec::new(),
    };
    let amplitude = pert.map_or(0.0, |pp| pp.amplitude);
    let drift = [p as f64 * periods[0], q as f64 * periods[1]];
    let dim = periods.len();
    let oracle: CurveOracle = Arc::new(move |tau: f64| {
        let mut x = base.clone();
        let mut v = Vector::zeros(dim);
        for j in 0..2 {
            x[j] += drift[j] * tau;
            v[j] += drift[j];
            for (m, c) in coeffs.iter().enumerate() {
                let w = 2.0 * PI * (m + 1) as f64;
                x[j] += amplitude * c[j] * (w * tau).sin() / (m + 1) as f64;
                v[j] += amplitude * c[j] * w * (w * tau).cos() / (m + 1) as f64;
            }
        }
        (x, v)
    });
    let name = if pert.is_some() {
        "torus_winding_perturbed"
    } else {
        "torus_winding"
    };
    sample_curve(
        manifold,
        n,
        true,
        oracle,
        meta(name, pert.map(|pp| pp.seed), Some(vec![p, q])),
    )
}

fn sphere_radius(manifold: &Manifold, what: &str) -> Result<f64> {
    manifold
        .radius()
        .ok_or_else(|| Error::Unsupported(format!("{what} needs the sphere")))
}

fn spherical(rho: f64, theta: f64, phi: f64, dtheta: f64, dphi: f64) -> (Vector, Vector) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let x = Vector::from_column_slice(&[rho * st * cp, rho * st * sp, rho * ct]);
    let v = Vector::from_column_slice(&[
        rho * (ct * cp * dtheta - st * sp * dphi),
        rho * (ct * sp * dtheta + st * cp * dphi),
        -rho * st * dtheta,
    ]);
    (x, v)
}

/// Latitude circle at polar angle `θ₀`, traversed eastward (counterclockwise
/// seen from the north pole).
pub fn sphere_latitude(manifold: &Manifold, theta0: f64, n: usize) -> Result<Curve> {
    sphere_wobble(manifold, theta0, 0.0, 0, n)
}

/// Latitude loop whose polar angle oscillates: `θ(τ) = θ₀ + A sin(2π m τ)`.
pub fn sphere_wobble(
    manifold: &Manifold,
    theta0: f64,
    amplitude: f64,
    mode: u32,
    n: usize,
) -> Result<Curve> {
    let rho = sphere_radius(manifold, "sphere_latitude")?;
    if !(theta0 - amplitude.abs() > 0.0 && theta0 + amplitude.abs() < PI) {
        return Err(Error::InvalidCurve(format!(
            "polar angle {theta0} ± {amplitude} leaves (0, π); loop degenerates at a pole"
        )));
    }
    let w = 2.0 * PI * mode as f64;
    let oracle: CurveOracle = Arc::new(move |tau: f64| {
        let theta = theta0 + amplitude * (w * tau).sin();
        let dtheta = amplitude * w * (w * tau).cos();
        spherical(rho, theta, 2.0 * PI * tau, dtheta, 2.0 * PI)
    });
    let name = if amplitude == 0.0 || mode == 0 {
        "sphere_latitude"
    } else {
        "sphere_wobble"
    };
    sample_curve(manifold, n, true, oracle, meta(name, None, Some(vec![])))
}

/// Seeded random smooth loop with `modes` Fourier modes. On the torus the
/// loop is contractible (winding zero); on the sphere it wobbles around a
/// random latitude.
pub fn random_smooth_loop(manifold: &Manifold, seed: u64, modes: usize, n: usize) -> Result<Curve> {
    if modes == 0 {
        return Err(Error::InvalidCurve(
            "random loop with zero modes is constant".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match manifold {
        Manifold::Sphere2 { radius } => {
            let rho = *radius;
            let theta0 = rng.gen_range(PI / 4.0..3.0 * PI / 4.0);
            let phi0 = rng.gen_range(0.0..2.0 * PI);
            let coeffs: Vec<[f64; 2]> = (0..modes)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let scale = 0.1 / (1.0 + (modes as f64).ln());
            let oracle: CurveOracle = Arc::new(move |tau: f64| {
                let (mut th, mut ph) = (theta0, phi0 + 2.0 * PI * tau);
                let (mut dth, mut dph) = (0.0, 2.0 * PI);
                for (m, c) in coeffs.iter().enumerate() {
                    let k = (m + 1) as f64;
                    let w = 2.0 * PI * k;
                    th += scale * c[0] * (w * tau).sin() / k;
                    dth += scale * c[0] * w * (w * tau).cos() / k;
                    ph += scale * c[1] * (w * tau).sin() / k;
                    dph += scale * c[1] * w * (w * tau).cos() / k;
                }
                spherical(rho, th, ph, dth, dph)
            });
            sample_curve(
                manifold,
                n,
                true,
                oracle,
                meta("random_smooth_loop", Some(seed), Some(vec![])),
            )
        }
        _ => {
            let dim = manifold.dim();
            let base: Vec<f64> = match manifold.periods() {
                Some(p) => p.iter().map(|per| rng.gen_range(0.0..*per)).collect(),
                None => (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let scale = match manifold.periods() {
                Some(p) => 0.1 * p.iter().cloned().fold(f64::INFINITY, f64::min),
                None => 0.5,
            };
            let coeffs: Vec<Vec<[f64; 2]>> = (0..modes)
                .map(|_| {
                    (0..dim)
                        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                        .collect()
                })
                .collect();
            let base = Vector::from_vec(base);
            let oracle: CurveOracle = Arc::new(move |tau: f64| {
                let mut x = base.clone();
                let mut v = Vector::zeros(dim);
                for (m, cm) in coeffs.iter().enumerate() {
                    let k = (m + 1) as f64;
                    let w = 2.0 * PI * k;
                    let (s, c) = (w * tau).sin_cos();
                    for (j, cj) in cm.iter().enumerate() {
                        x[j] += scale * (cj[0] * s + cj[1] * (1.0 - c)) / k;
                        v[j] += scale * w * (cj[0] * c + cj[1] * s) / k;
                    }
                }
                (x, v)
            });
            let winding = manifold.periods().map(|p| vec![0; p.len()]);
            sample_curve(
                manifold,
                n,
                true,
                oracle,
                meta("random_smooth_loop", Some(seed), winding),
            )
        }
    }
}

/// Open geodesic `τ ↦ exp_p(τ v)`.
pub fn geodesic_segment(manifold: &Manifold, p: &Point, v: &Tangent, n: usize) -> Result<Curve> {
    if &v.base != p {
        return Err(Error::BaseMismatch);
    }
    if v.vec.norm() == 0.0 {
        return Err(Error::InvalidCurve("zero initial velocity".into()));
    }
    let m = manifold.clone();
    let (p0, v0) = (p.coords.clone(), v.vec.clone());
    let oracle: CurveOracle = Arc::new(move |tau: f64| match &m {
        Manifold::Sphere2 { radius } => {
            let speed = v0.norm();
            let a = tau * speed / radius;
            let x = &p0 * a.cos() + &v0 * (radius * a.sin() / speed);
            let dx = &p0 * (-(speed / radius) * a.sin()) + &v0 * a.cos();
            (x, dx)
        }
        _ => (&p0 + &v0 * tau, v0.clone()),
    });
    sample_curve(manifold, n, false, oracle, meta("geodesic_segment", None, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_torus_loop() {
        let t = Manifold::unit_torus(2).unwrap();
        let c = torus_winding(&t, 0, 1, &[0.3, 0.0], None, 16).unwrap();
        for i in 0..16 {
            let p = &c.samples()[i];
            assert!((p[0] - 0.3).abs() < 1e-15);
            assert!((p[1] - i as f64 / 16.0).abs() < 1e-15);
        }
        assert_eq!(c.samples()[16], c.samples()[0]);
        c.check_resolution().unwrap();
    }

    #[test]
    fn degenerate_requests_rejected() {
        let t = Manifold::unit_torus(2).unwrap();
        assert!(torus_winding(&t, 0, 0, &[0.0, 0.0], None, 16).is_err());
        let s = Manifold::sphere(1.0).unwrap();
        assert!(sphere_latitude(&s, 0.0, 16).is_err());
        assert!(sphere_latitude(&t, 1.0, 16).is_err());
        assert!(random_smooth_loop(&s, 1, 0, 16).is_err());
    }

    #[test]
    fn equator_is_a_geodesic() {
        let s = Manifold::sphere(2.0).unwrap();
        let c = sphere_latitude(&s, PI / 2.0, 64).unwrap();
        for p in c.samples() {
            assert!(p[2].abs() < 1e-15);
            assert!((p.norm() - 2.0).abs() < 1e-14);
        }
        c.check_resolution().unwrap();
    }

    #[test]
    fn random_loop_is_deterministic() {
        let s = Manifold::sphere(1.0).unwrap();
        let a = random_smooth_loop(&s, 7, 4, 64).unwrap();
        let b = random_smooth_loop(&s, 7, 4, 64).unwrap();
        let c = random_smooth_loop(&s, 8, 4, 64).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_ne!(a.samples(), c.samples());
        a.check_resolution().unwrap();
        let t = Manifold::unit_torus(2).unwrap();
        let x = random_smooth_loop(&t, 7, 4, 64).unwrap();
        let y = random_smooth_loop(&t, 7, 4, 64).unwrap();
        assert_eq!(x.samples(), y.samples());
        assert!(x.is_closed());
    }

    #[test]
    fn perturbed_loop_keeps_class_and_base() {
        let t = Manifold::unit_torus(2).unwrap();
        let pert = TorusPerturbation {
            amplitude: 0.05,
            modes: 3,
            seed: 11,
        };
        let c = torus_winding(&t, 0, 1, &[0.25, 0.0], Some(pert), 128).unwrap();
        assert_eq!(c.meta().winding, Some(vec![0, 1]));
        assert!((c.samples()[0][0] - 0.25).abs() < 1e-15);
        c.check_resolution().unwrap();
    }

    #[test]
    fn geodesic_segment_on_sphere_stays_on_great_circle() {
        let s = Manifold::sphere(1.0).unwrap();
        let p = s.point(&[1.0, 0.0, 0.0]).unwrap();
        let v = s.tangent(&p, &[0.0, 1.0, 1.0]).unwrap();
        let c = geodesic_segment(&s, &p, &v, 32).unwrap();
        assert!(!c.is_closed());
        for x in c.samples() {
            assert!((x[1] - x[2]).abs() < 1e-14);
        }
        let len = c.length();
        assert!((len - 2f64.sqrt()).abs() < 1e-12);
    }
}
