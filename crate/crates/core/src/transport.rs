//! Levi-Civita parallel transport along discretized curves.
//!
//! The transport equation `V̇ + Γ(γ)(V, γ̇) = 0` is integrated with the
//! classical fourth-order Runge–Kutta scheme at fixed step `1/N`. Half-node
//! positions and velocities come from the curve oracle when present and from
//! cubic interpolation otherwise. On the sphere every step is re-projected
//! to the tangent plane.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Tangent, Vector};
use crate::pathspace::{Curve, TransportedFrame, VectorFieldAlongCurve};

/// Orthonormality tolerance for user-supplied initial bases.
const BASIS_TOL: f64 = 1e-10;

fn rhs(m: &Manifold, p: &Vector, vel: &Vector, v: &Vector) -> Vector {
    -m.christoffel_raw(p, v, vel)
}

fn gram_schmidt(vs: &mut [Vector]) {
    for i in 0..vs.len() {
        for j in 0..i {
            let proj = vs[j].dot(&vs[i]);
            let vj = vs[j].clone();
            vs[i] -= vj * proj;
        }
        let n = vs[i].norm();
        vs[i] /= n;
    }
}

fn defect(vs: &[Vector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, va) in vs.iter().enumerate() {
        for (b, vb) in vs.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((va.dot(vb) - target).abs());
        }
    }
    worst
}

fn integrate(curve: &Curve, initial: Vec<Vector>, renormalize: bool) -> (Vec<Vec<Vector>>, f64) {
    integrate_range(curve, 0, curve.grid(), initial, renormalize)
}

/// Integrates a family of vectors from node `start` to node `end`, returning
/// the values at every node in between. `renormalize` applies Gram–Schmidt
/// after each step.
fn integrate_range(
    curve: &Curve,
    start: usize,
    end: usize,
    initial: Vec<Vector>,
    renormalize: bool,
) -> (Vec<Vec<Vector>>, f64) {
    let m = curve.manifold();
    let mut out = Vec::with_capacity(end - start + 1);
    out.push(initial.clone());
    if m.is_flat() {
        out.extend(std::iter::repeat_n(initial, end - start));
        return (out, 0.0);
    }
    let h = 1.0 / curve.grid() as f64;
    let samples = curve.samples();
    let mut vel_next = curve.velocity_raw(start);
    let mut state = initial;
    let mut drift: f64 = 0.0;
    for i in start..end {
        let (p0, v0) = (&samples[i], vel_next);
        let (pm, vm) = curve.midpoint_raw(i);
        let p1 = &samples[i + 1];
        vel_next = curve.velocity_raw(i + 1);
        let v1 = &vel_next;
        for x in state.iter_mut() {
            let k1 = rhs(m, p0, &v0, x);
            let k2 = rhs(m, &pm, &vm, &(&*x + &k1 * (h / 2.0)));
            let k3 = rhs(m, &pm, &vm, &(&*x + &k2 * (h / 2.0)));
            let k4 = rhs(m, p1, v1, &(&*x + &k3 * h));
            let next = &*x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            *x = m.project_tangent(p1, &next);
        }
        if state.len() > 1 || renormalize {
            drift = drift.max(defect(&state));
        }
        if renormalize {
            gram_schmidt(&mut state);
        }
        out.push(state.clone());
    }
    (out, drift)
}

/// `Z_μ(γ, τ_i) = Q_{τ_i,0}(γ) Z_μ` at every node. Without an explicit
/// basis the manifold's default frame at `γ(0)` is used.
pub fn transport_frame(
    curve: &Curve,
    initial: Option<&[Vector]>,
    renormalize: bool,
) -> Result<TransportedFrame> {
    let m = curve.manifold();
    let p0 = &curve.samples()[0];
    let basis: Vec<Vector> = match initial {
        Some(b) => {
            if b.len() != m.dim() {
                return Err(Error::InvalidArgument(format!(
                    "basis has {} vectors, manifold dimension is {}",
                    b.len(),
                    m.dim()
                )));
            }
            let tangent_err = b
                .iter()
                .map(|z| (m.project_tangent(p0, z) - z).norm())
                .fold(0.0, f64::max);
            if defect(b) > BASIS_TOL || tangent_err > BASIS_TOL {
                return Err(Error::InvalidArgument(
                    "initial basis is not g-orthonormal in T_γ(0)M".into(),
                ));
            }
            b.to_vec()
        }
        None => m.default_frame(p0),
    };
    let (frames, max_drift) = integrate(curve, basis, renormalize);
    Ok(TransportedFrame { frames, max_drift })
}

/// `Q_{τ,0}(γ) v₀` at the grid node `target`.
pub fn parallel_transport(curve: &Curve, v0: &Tangent, target: usize) -> Result<Tangent> {
    if target > curve.grid() {
        return Err(Error::InvalidArgument(format!(
            "target node {target} out of range"
        )));
    }
    if v0.base.coords != curve.samples()[0] {
        return Err(Error::BaseMismatch);
    }
    let m = curve.manifold();
    let p0 = &curve.samples()[0];
    if (m.project_tangent(p0, &v0.vec) - &v0.vec).norm() > BASIS_TOL * v0.vec.norm().max(1.0) {
        return Err(Error::InvalidArgument("v0 is not tangent at γ(0)".into()));
    }
    let (values, _) = integrate(curve, vec![v0.vec.clone()], false);
    Ok(Tangent::new(curve.point(target), values[target][0].clone()))
}

/// Matrix of `Q_{1,0}(γ)` in the default frame at `γ(0)`:
/// `H[μ][ν] = g(Z_μ, Q Z_ν)`.
pub fn holonomy(curve: &Curve) -> Result<DMatrix<f64>> {
    if !curve.is_closed() {
        return Err(Error::OpenCurve);
    }
    let frame = transport_frame(curve, None, true)?;
    let d = frame.dim();
    let start = &frame.frames[0];
    let end = &frame.frames[curve.grid()];
    Ok(DMatrix::from_fn(d, d, |mu, nu| start[mu].dot(&end[nu])))
}

/// Rotation angle of the holonomy of a loop on an oriented surface, in
/// `(-π, π]`, measured counterclockwise in the positively oriented frame.
pub fn holonomy_angle(curve: &Curve) -> Result<f64> {
    if curve.manifold().dim() != 2 {
        return Err(Error::Unsupported(
            "holonomy angle needs a 2-dimensional manifold".into(),
        ));
    }
    let h = holonomy(curve)?;
    Ok(h[(1, 0)].atan2(h[(0, 0)]))
}

/// First variation of a transported field (`d_{h̃₁} h̃₂(γ; τ₂)`), in ambient
/// coordinates:
///
/// `∫₀^{τ₂} Q_{τ₂,τ₁} R(γ̇(τ₁), h̃₁(τ₁)) Q_{τ₁,0} h₂(τ₂) dτ₁ - Γ(γ(τ₂))(h̃₂(τ₂), h̃₁(τ₂))`
///
/// with `R(x, y) z` as in [`Manifold::curvature_apply`]. `h1` must vanish at
/// both endpoints; `h2[i]` holds the frame components of `h₂(τ_i)`.
pub fn transport_differential(
    curve: &Curve,
    h1: &VectorFieldAlongCurve,
    h2: &[Vec<f64>],
    target: usize,
) -> Result<Tangent> {
    let n = curve.grid();
    if h1.len() != n + 1 || h2.len() != n + 1 {
        return Err(Error::InvalidArgument(
            "h1 and h2 must have one value per node".into(),
        ));
    }
    if target > n {
        return Err(Error::InvalidArgument(format!(
            "target node {target} out of range"
        )));
    }
    let scale = h1.sup_norm().max(1.0);
    if h1.values[0].norm() > 1e-14 * scale || h1.values[n].norm() > 1e-14 * scale {
        return Err(Error::InvalidArgument(
            "h1 must vanish at both endpoints".into(),
        ));
    }
    let m = curve.manifold();
    let frame = transport_frame(curve, None, true)?;
    let comps = &h2[target];
    if comps.len() != frame.dim() {
        return Err(Error::InvalidArgument(format!(
            "h2 has {} components, frame dimension is {}",
            comps.len(),
            frame.dim()
        )));
    }
    let h = 1.0 / n as f64;
    let mut integral = Vector::zeros(m.ambient_dim());
    if !m.is_flat() {
        for i in 0..=target {
            let w = if i == 0 || i == target { h / 2.0 } else { h };
            if target == 0 {
                break;
            }
            let v = frame.synthesize(i, comps);
            let r = m.curvature_raw(&curve.velocity_raw(i), &h1.values[i], &v);
            let back = frame.synthesize(target, &frame.components(i, &r));
            integral += back * w;
        }
    }
    let h2_target = frame.synthesize(target, comps);
    let gamma = m.christoffel_raw(&curve.samples()[target], &h2_target, &h1.values[target]);
    Ok(Tangent::new(curve.point(target), integral - gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathspace::{
        g0_inner, make_basis_field, path_exp, random_smooth_loop, sphere_latitude, sphere_wobble,
        torus_winding, TorusPerturbation,
    };
    use std::f64::consts::PI;

    fn wrap(a: f64) -> f64 {
        let r = a.rem_euclid(2.0 * PI);
        if r > PI {
            r - 2.0 * PI
        } else {
            r
        }
    }

    #[test]
    fn flat_transport_is_trivial() {
        let t = Manifold::unit_torus(2).unwrap();
        let pert = TorusPerturbation {
            amplitude: 0.1,
            modes: 3,
            seed: 3,
        };
        let c = torus_winding(&t, 1, 1, &[0.2, 0.4], Some(pert), 64).unwrap();
        let v0 = Tangent::new(c.point(0), Vector::from_column_slice(&[0.3, -0.7]));
        let v = parallel_transport(&c, &v0, 64).unwrap();
        assert_eq!(v.vec, v0.vec);
        let h = holonomy(&c).unwrap();
        assert_eq!(h, DMatrix::identity(2, 2));
    }

    #[test]
    fn open_curve_has_no_holonomy() {
        let s = Manifold::sphere(1.0).unwrap();
        let p = s.point(&[1.0, 0.0, 0.0]).unwrap();
        let v = s.tangent(&p, &[0.0, 1.0, 0.0]).unwrap();
        let c = crate::pathspace::geodesic_segment(&s, &p, &v, 32).unwrap();
        assert!(matches!(holonomy(&c), Err(Error::OpenCurve)));
    }

    #[test]
    fn latitude_pi_over_three_flips_vectors() {
        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_latitude(&s, PI / 3.0, 1024).unwrap();
        let z = s.default_frame(&c.samples()[0]);
        let v0 = Tangent::new(c.point(0), &z[0] * 0.6 + &z[1] * 0.8);
        let v = parallel_transport(&c, &v0, 1024).unwrap();
        assert!((v.vec + &v0.vec).norm() < 1e-6);
    }

    #[test]
    fn latitude_holonomy_angle_matches_enclosed_area() {
        let s = Manifold::sphere(1.0).unwrap();
        for theta in [PI / 6.0, PI / 4.0, 1.2] {
            let c = sphere_latitude(&s, theta, 1024).unwrap();
            let angle = holonomy_angle(&c).unwrap();
            let expected = 2.0 * PI * (1.0 - theta.cos());
            assert!(wrap(angle - expected).abs() < 1e-6, "{theta}: {angle}");
        }
        let eq = sphere_latitude(&s, PI / 2.0, 256).unwrap();
        let h = holonomy(&eq).unwrap();
        assert!((h - DMatrix::<f64>::identity(2, 2)).norm() < 1e-8);
    }

    #[test]
    fn equator_transports_its_tangent() {
        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_latitude(&s, PI / 2.0, 256).unwrap();
        let t0 = c.velocity_raw(0);
        let t0 = &t0 / t0.norm();
        let n0 = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let frame = transport_frame(&c, Some(&[t0.clone(), n0]), true).unwrap();
        for i in 0..=256 {
            let v = c.velocity_raw(i);
            let cos = frame.frames[i][0].dot(&v) / v.norm();
            assert!((cos - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn frame_drift_without_renormalization_is_small() {
        let s = Manifold::sphere(1.0).unwrap();
        for theta in [0.4, PI / 3.0, 2.0] {
            let c = sphere_latitude(&s, theta, 1024).unwrap();
            let frame = transport_frame(&c, None, false).unwrap();
            assert!(frame.orthonormality_defect() < 1e-7);
            assert_eq!(frame.frames[0], s.default_frame(&c.samples()[0]));
        }
    }

    #[test]
    fn bad_basis_rejected() {
        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_latitude(&s, 1.0, 64).unwrap();
        let z = s.default_frame(&c.samples()[0]);
        let bad = [&z[0] * 2.0, z[1].clone()];
        assert!(transport_frame(&c, Some(&bad), true).is_err());
    }

    #[test]
    fn transport_is_isometric_and_composes() {
        let s = Manifold::sphere(1.3).unwrap();
        let c = random_smooth_loop(&s, 5, 4, 1024).unwrap();
        let frame = transport_frame(&c, None, false).unwrap();
        let z = &frame.frames[0];
        let v0 = &z[0] * 0.3 - &z[1] * 1.1;
        let w0 = &z[0] * -0.5 + &z[1] * 0.2;
        let full = integrate(&c, vec![v0.clone(), w0.clone()], false).0;
        for i in (0..=1024).step_by(64) {
            let (v, w) = (&full[i][0], &full[i][1]);
            assert!((v.dot(w) - v0.dot(&w0)).abs() < 1e-8);
            assert!((v.norm() - v0.norm()).abs() < 1e-8);
        }
        // transport to τ = 1/2, then from 1/2 to 1, equals direct transport
        let first = integrate_range(&c, 0, 512, vec![v0.clone()], false).0;
        let second = integrate_range(&c, 512, 1024, first[512].clone(), false).0;
        assert!((&second[512][0] - &full[1024][0]).norm() < 1e-9);
    }

    #[test]
    fn rk4_order_under_step_halving() {
        let s = Manifold::sphere(1.0).unwrap();
        let theta = 0.9;
        let expected = 2.0 * PI * (1.0 - f64::cos(theta));
        let errs: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&n| {
                let c = sphere_latitude(&s, theta, n).unwrap();
                wrap(holonomy_angle(&c).unwrap() - expected).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.7 && order < 4.3, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn transport_differential_flat_and_empty_range() {
        let t = Manifold::unit_torus(2).unwrap();
        let c = torus_winding(&t, 0, 1, &[0.25, 0.0], None, 64).unwrap();
        let frame = transport_frame(&c, None, true).unwrap();
        let h1 = make_basis_field(&frame, 0, 1).unwrap();
        let h2 = vec![vec![1.0, 2.0]; 65];
        let d = transport_differential(&c, &h1, &h2, 40).unwrap();
        assert_eq!(d.vec.norm(), 0.0);

        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_latitude(&s, 1.0, 64).unwrap();
        let frame = transport_frame(&c, None, true).unwrap();
        let h1 = make_basis_field(&frame, 0, 1).unwrap();
        let d = transport_differential(&c, &h1, &h2, 0).unwrap();
        // h1(0) = 0, so both the integral and the Christoffel term vanish
        assert_eq!(d.vec.norm(), 0.0);
    }

    /// Ambient derivative of `Q_{τ,0}(Exp_γ(s h̃₁)) Z h₂` in `s` at 0 by a
    /// fourth-order central difference.
    fn fd_transport_derivative(
        c: &Curve,
        h1: &VectorFieldAlongCurve,
        comps: &[f64],
        target: usize,
        eps: f64,
    ) -> Vector {
        let z0 = c.manifold().default_frame(&c.samples()[0]);
        let at = |s: f64| {
            let moved = path_exp(&c.discrete(), h1, s).unwrap();
            let frame = transport_frame(&moved, Some(&z0), true).unwrap();
            frame.synthesize(target, comps)
        };
        (at(-2.0 * eps) - at(-eps) * 8.0 + at(eps) * 8.0 - at(2.0 * eps)) / (12.0 * eps)
    }

    #[test]
    fn transport_differential_matches_finite_differences() {
        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_wobble(&s, 1.0, 0.15, 2, 1024).unwrap();
        let frame = transport_frame(&c, None, true).unwrap();
        let mut h1 = make_basis_field(&frame, 0, 1).unwrap();
        h1.add_scaled(&make_basis_field(&frame, 1, 3).unwrap(), 0.5);
        let comps = vec![0.7, -0.4];
        let h2 = vec![comps.clone(); 1025];
        for target in [256, 700, 1024] {
            let analytic = transport_differential(&c, &h1, &h2, target).unwrap().vec;
            let fd = fd_transport_derivative(&c, &h1, &comps, target, 1e-3);
            let rel = (&analytic - &fd).norm() / fd.norm();
            assert!(rel < 1e-4, "target {target}: rel {rel}, {analytic} vs {fd}");
        }
        // sanity: G₀ pairing of the basis field with itself
        let e = make_basis_field(&frame, 0, 1).unwrap();
        assert!((g0_inner(&c, &e, &e) - 1.0).abs() < 1e-10);
    }
}
