//! Product quadrature grids and projection of pointwise data onto the
//! truncated eigenbasis.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use super::basis::{all_modes, sphere_basis, Coeffs};
use crate::geometry::{Manifold, Vector};

/// Nodes with area weights (`Σ w_i = area(M)`).
pub(crate) struct Grid {
    pub points: Vec<Vector>,
    pub weights: Vec<f64>,
}

/// Equispaced points per torus axis; sphere uses `2L + 2` Gauss–Legendre
/// nodes in `cos θ` and `4L + 4` azimuths.
pub(crate) fn grid(m: &Manifold, truncation: usize) -> Grid {
    match m {
        Manifold::FlatTorus { periods } => {
            let n = (4 * truncation + 4).max(16);
            let area: f64 = periods.iter().product();
            let mut points = vec![Vector::zeros(periods.len())];
            for (axis, p) in periods.iter().enumerate() {
                points = points
                    .into_iter()
                    .flat_map(|base| {
                        (0..n).map(move |i| {
                            let mut v = base.clone();
                            v[axis] = p * i as f64 / n as f64;
                            v
                        })
                    })
                    .collect();
            }
            let w = area / points.len() as f64;
            let weights = vec![w; points.len()];
            Grid { points, weights }
        }
        Manifold::Sphere2 { radius } => {
            let n_theta = NonZeroUsize::new(2 * truncation + 2).expect("positive");
            let n_phi = (4 * truncation + 4).max(8);
            let gl = GaussLegendre::new(n_theta);
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for &(u, w) in gl.as_node_weight_pairs() {
                let s = (1.0 - u * u).sqrt();
                for j in 0..n_phi {
                    let phi = 2.0 * PI * j as f64 / n_phi as f64;
                    points.push(Vector::from_column_slice(&[
                        radius * s * phi.cos(),
                        radius * s * phi.sin(),
                        radius * u,
                    ]));
                    weights.push(w * 2.0 * PI / n_phi as f64 * radius * radius);
                }
            }
            Grid { points, weights }
        }
        Manifold::Euclidean { .. } => Grid {
            points: Vec::new(),
            weights: Vec::new(),
        },
    }
}

fn torus_waves(periods: &[f64], mode: &[i32]) -> Vector {
    Vector::from_iterator(
        periods.len(),
        mode.iter()
            .zip(periods)
            .map(|(&k, p)| 2.0 * PI * k as f64 / p),
    )
}

/// `c_mode = ∫ f conj(b_mode) dA / ∫ |b_mode|² dA` over all modes.
pub(crate) fn project_scalar(
    m: &Manifold,
    truncation: usize,
    f: &dyn Fn(&Vector) -> f64,
) -> Coeffs {
    let g = grid(m, truncation);
    let modes = all_modes(m, truncation);
    let values: Vec<f64> = g.points.iter().map(f).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); modes.len()];
    match m {
        Manifold::FlatTorus { periods } => {
            let area: f64 = periods.iter().product();
            let waves: Vec<Vector> = modes.iter().map(|k| torus_waves(periods, k)).collect();
            for ((p, w), v) in g.points.iter().zip(&g.weights).zip(&values) {
                for (a, kappa) in acc.iter_mut().zip(&waves) {
                    let th = kappa.dot(p);
                    *a += Complex64::new(th.cos(), -th.sin()) * (w * v / area);
                }
            }
        }
        Manifold::Sphere2 { radius } => {
            let r2 = radius * radius;
            for ((p, w), v) in g.points.iter().zip(&g.weights).zip(&values) {
                for (a, (y, _)) in acc.iter_mut().zip(sphere_basis(*radius, truncation, p)) {
                    *a += y.conj() * (w * v / r2);
                }
            }
        }
        Manifold::Euclidean { .. } => {}
    }
    modes.into_iter().zip(acc).collect()
}

/// Hodge potentials `(α, β, h)` of a pointwise 1-form `ω = dα + ⋆dβ + h`
/// given as its metric dual vector field.
pub(crate) fn project_oneform(
    m: &Manifold,
    truncation: usize,
    omega: &dyn Fn(&Vector) -> Vector,
) -> (Coeffs, Coeffs, Vec<f64>) {
    let g = grid(m, truncation);
    let modes = all_modes(m, truncation);
    let values: Vec<Vector> = g.points.iter().map(omega).collect();
    let mut exact = Coeffs::new();
    let mut coexact = Coeffs::new();
    let mut harmonic = Vec::new();
    match m {
        Manifold::FlatTorus { periods } => {
            let area: f64 = periods.iter().product();
            for mode in modes {
                let kappa = torus_waves(periods, &mode);
                let mut hat = [Complex64::new(0.0, 0.0); 2];
                for ((p, w), v) in g.points.iter().zip(&g.weights).zip(&values) {
                    let th = kappa.dot(p);
                    let e = Complex64::new(th.cos(), -th.sin()) * (w / area);
                    hat[0] += e * v[0];
                    hat[1] += e * v[1];
                }
                let k2 = kappa.norm_squared();
                if k2 == 0.0 {
                    harmonic = vec![hat[0].re, hat[1].re];
                    continue;
                }
                let i = Complex64::new(0.0, 1.0);
                let a = (hat[0] * kappa[0] + hat[1] * kappa[1]) / (i * k2);
                let b = (hat[1] * kappa[0] - hat[0] * kappa[1]) / (i * k2);
                exact.insert(mode.clone(), a);
                coexact.insert(mode, b);
            }
        }
        Manifold::Sphere2 { radius } => {
            let mut a_acc = vec![Complex64::new(0.0, 0.0); modes.len()];
            let mut b_acc = vec![Complex64::new(0.0, 0.0); modes.len()];
            for ((p, w), v) in g.points.iter().zip(&g.weights).zip(&values) {
                let n = p / *radius;
                // ω·(n × ∇Y) = (ω × n)·∇Y
                let rot = crate::geometry::cross3(v, &n);
                for (j, (_, gy)) in sphere_basis(*radius, truncation, p).into_iter().enumerate() {
                    let dot_a = gy[0].conj() * v[0] + gy[1].conj() * v[1] + gy[2].conj() * v[2];
                    let dot_b =
                        gy[0].conj() * rot[0] + gy[1].conj() * rot[1] + gy[2].conj() * rot[2];
                    a_acc[j] += dot_a * *w;
                    b_acc[j] += dot_b * *w;
                }
            }
            for ((mode, a), b) in modes.into_iter().zip(a_acc).zip(b_acc) {
                let l = mode[0] as f64;
                if l == 0.0 {
                    continue;
                }
                let ll = l * (l + 1.0);
                exact.insert(mode.clone(), a / ll);
                coexact.insert(mode, b / ll);
            }
        }
        Manifold::Euclidean { .. } => {}
    }
    (exact, coexact, harmonic)
}

/// Largest coefficient modulus.
pub(crate) fn coeff_scale(coeffs: &Coeffs) -> f64 {
    coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Restores exact conjugate symmetry and drops coefficients of modulus at
/// most `floor`.
pub(crate) fn clean(m: &Manifold, coeffs: Coeffs, floor: f64) -> Coeffs {
    let mut out = Coeffs::new();
    for (mode, c) in &coeffs {
        let (partner, sign) = super::basis::conjugate_mode(m, mode);
        let other = coeffs.get(&partner).copied().unwrap_or_default();
        let sym = (c + other.conj() * sign) * 0.5;
        if sym.norm() > floor {
            out.insert(mode.clone(), sym);
        }
    }
    out
}
