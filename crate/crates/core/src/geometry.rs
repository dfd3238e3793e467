//! Concrete Riemannian manifolds.
//!
//! Three model spaces are supported: Euclidean space, the flat torus
//! `R^d / (P_1 Z x ... x P_d Z)` and the round 2-sphere of radius `ρ`.
//! The sphere is stored through its embedding in `R^3`, so tangent vectors
//! are ambient 3-vectors orthogonal to the base point and every tangential
//! operation is a projection. Torus coordinates live in `[0, P_j)`.
//!
//! Curvature uses the convention `R(x, y) z = ∇_x ∇_y z - ∇_y ∇_x z - ∇_[x,y] z`,
//! which on the sphere of radius `ρ` reads `(g(y, z) x - g(x, z) y) / ρ²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vector = nalgebra::DVector<f64>;

/// Relative tolerance for the sphere norm and tangency invariants.
pub const SPHERE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifoldRepr", into = "ManifoldRepr")]
pub enum Manifold {
    Euclidean { dim: usize },
    FlatTorus { periods: Vec<f64> },
    Sphere2 { radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ManifoldRepr {
    Euclidean {
        dim: usize,
    },
    FlatTorus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        periods: Vec<f64>,
    },
    Sphere2 {
        radius: f64,
    },
}

impl TryFrom<ManifoldRepr> for Manifold {
    type Error = Error;

    fn try_from(repr: ManifoldRepr) -> Result<Self> {
        match repr {
            ManifoldRepr::Euclidean { dim } => Manifold::euclidean(dim),
            ManifoldRepr::FlatTorus { dim, periods } => {
                if let Some(d) = dim {
                    if d != periods.len() {
                        return Err(Error::InvalidManifold(format!(
                            "flat_torus dim {d} does not match {} periods",
                            periods.len()
                        )));
                    }
                }
                Manifold::flat_torus(periods)
            }
            ManifoldRepr::Sphere2 { radius } => Manifold::sphere(radius),
        }
    }
}

impl From<Manifold> for ManifoldRepr {
    fn from(m: Manifold) -> Self {
        match m {
            Manifold::Euclidean { dim } => ManifoldRepr::Euclidean { dim },
            Manifold::FlatTorus { periods } => ManifoldRepr::FlatTorus {
                dim: Some(periods.len()),
                periods,
            },
            Manifold::Sphere2 { radius } => ManifoldRepr::Sphere2 { radius },
        }
    }
}

/// A point given by its coordinates (ambient for the sphere).
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vector,
}

impl Point {
    pub fn new(coords: Vector) -> Self {
        Point { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point {
            coords: Vector::from_column_slice(coords),
        }
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub base: Point,
    pub vec: Vector,
}

impl Tangent {
    pub fn new(base: Point, vec: Vector) -> Self {
        Tangent { base, vec }
    }
}

fn check_base(a: &Tangent, b: &Tangent) -> Result<()> {
    if a.base != b.base {
        return Err(Error::BaseMismatch);
    }
    Ok(())
}

impl Manifold {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidManifold("dimension must be positive".into()));
        }
        Ok(Manifold::Euclidean { dim })
    }

    pub fn flat_torus(periods: Vec<f64>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::InvalidManifold("dimension must be positive".into()));
        }
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidManifold(format!(
                "torus periods must be positive, got {periods:?}"
            )));
        }
        Ok(Manifold::FlatTorus { periods })
    }

    /// The unit-period torus of dimension `dim`.
    pub fn unit_torus(dim: usize) -> Result<Self> {
        Manifold::flat_torus(vec![1.0; dim])
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidManifold(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Manifold::Sphere2 { radius })
    }

    /// Intrinsic dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            Manifold::Euclidean { dim } => *dim,
            Manifold::FlatTorus { periods } => periods.len(),
            Manifold::Sphere2 { .. } => 2,
        }
    }

    /// Length of coordinate vectors.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Sphere2 { .. } => 3,
            _ => self.dim(),
        }
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self, Manifold::Sphere2 { .. })
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, Manifold::Euclidean { .. })
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            Manifold::Sphere2 { radius } => Some(*radius),
            _ => None,
        }
    }

    pub fn periods(&self) -> Option<&[f64]> {
        match self {
            Manifold::FlatTorus { periods } => Some(periods),
            _ => None,
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Manifold::Euclidean { dim } => format!("euclidean({dim})"),
            Manifold::FlatTorus { periods } => format!("flat_torus({periods:?})"),
            Manifold::Sphere2 { radius } => format!("sphere2({radius})"),
        }
    }

    /// Validates coordinates and builds a point. Torus coordinates are
    /// reduced modulo the periods; sphere coordinates must have norm `ρ`.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.ambient_dim() {
            return Err(Error::InvalidPoint(format!(
                "expected {} coordinates, got {}",
                self.ambient_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let mut v = Vector::from_column_slice(coords);
        match self {
            Manifold::Euclidean { .. } => {}
            Manifold::FlatTorus { periods } => reduce_torus(&mut v, periods),
            Manifold::Sphere2 { radius } => {
                let n = v.norm();
                if (n - radius).abs() > SPHERE_TOL * radius {
                    return Err(Error::InvalidPoint(format!(
                        "|coords| = {n} differs from radius {radius}"
                    )));
                }
            }
        }
        Ok(Point { coords: v })
    }

    /// Builds a tangent vector, checking tangency on the sphere.
    pub fn tangent(&self, base: &Point, vec: &[f64]) -> Result<Tangent> {
        if vec.len() != self.ambient_dim() {
            return Err(Error::InvalidPoint(format!(
                "expected {} components, got {}",
                self.ambient_dim(),
                vec.len()
            )));
        }
        let v = Vector::from_column_slice(vec);
        if let Manifold::Sphere2 { radius } = self {
            let dot = v.dot(&base.coords);
            if dot.abs() > SPHERE_TOL * radius * v.norm() {
                return Err(Error::InvalidPoint(format!(
                    "vector not tangent: v·p = {dot:e}"
                )));
            }
        }
        Ok(Tangent::new(base.clone(), v))
    }

    /// Projects an arbitrary ambient vector to the tangent space at `p`.
    pub fn project_tangent(&self, p: &Vector, v: &Vector) -> Vector {
        match self {
            Manifold::Sphere2 { radius } => v - p * (v.dot(p) / (radius * radius)),
            _ => v.clone(),
        }
    }

    /// Outward unit normal on the sphere; for flat surfaces the `e_3`
    /// direction of the (implicit) embedding is not materialized.
    pub fn normal(&self, p: &Vector) -> Option<Vector> {
        self.radius().map(|r| p / r)
    }

    pub fn metric_inner(&self, u: &Tangent, v: &Tangent) -> Result<f64> {
        check_base(u, v)?;
        Ok(u.vec.dot(&v.vec))
    }

    pub fn christoffel_apply(&self, p: &Point, u: &Tangent, v: &Tangent) -> Result<Tangent> {
        if &u.base != p {
            return Err(Error::BaseMismatch);
        }
        check_base(u, v)?;
        Ok(Tangent::new(
            p.clone(),
            self.christoffel_raw(&p.coords, &u.vec, &v.vec),
        ))
    }

    /// `Γ(p)(u, v)`; on the sphere this is the normal part `(u·v/ρ²) p`
    /// that the tangential derivative removes.
    pub(crate) fn christoffel_raw(&self, p: &Vector, u: &Vector, v: &Vector) -> Vector {
        match self {
            Manifold::Sphere2 { radius } => p * (u.dot(v) / (radius * radius)),
            _ => Vector::zeros(u.len()),
        }
    }

    pub fn curvature_apply(
        &self,
        p: &Point,
        x: &Tangent,
        y: &Tangent,
        z: &Tangent,
    ) -> Result<Tangent> {
        if &x.base != p {
            return Err(Error::BaseMismatch);
        }
        check_base(x, y)?;
        check_base(x, z)?;
        Ok(Tangent::new(
            p.clone(),
            self.curvature_raw(&x.vec, &y.vec, &z.vec),
        ))
    }

    /// `R(x, y) z`.
    pub(crate) fn curvature_raw(&self, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        match self {
            Manifold::Sphere2 { radius } => {
                let k = 1.0 / (radius * radius);
                (x * y.dot(z) - y * x.dot(z)) * k
            }
            _ => Vector::zeros(x.len()),
        }
    }

    pub fn exp_point(&self, p: &Point, v: &Tangent) -> Result<Point> {
        if &v.base != p {
            return Err(Error::BaseMismatch);
        }
        Ok(Point::new(self.exp_raw(&p.coords, &v.vec)))
    }

    pub(crate) fn exp_raw(&self, p: &Vector, v: &Vector) -> Vector {
        match self {
            Manifold::Euclidean { .. } => p + v,
            Manifold::FlatTorus { periods } => {
                let mut q = p + v;
                reduce_torus(&mut q, periods);
                q
            }
            Manifold::Sphere2 { radius } => {
                let norm = v.norm();
                if norm == 0.0 {
                    return p.clone();
                }
                let angle = norm / radius;
                let q = p * angle.cos() + v * (radius * angle.sin() / norm);
                // keep |q| = ρ to rounding
                let scale = radius / q.norm();
                q * scale
            }
        }
    }

    /// Geodesic distance (minimal image on the torus, great circle on the sphere).
    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        self.distance_raw(&p.coords, &q.coords)
    }

    pub(crate) fn distance_raw(&self, p: &Vector, q: &Vector) -> f64 {
        match self {
            Manifold::Euclidean { .. } => (q - p).norm(),
            Manifold::FlatTorus { .. } => self.displacement(p, q).norm(),
            Manifold::Sphere2 { radius } => {
                let cross = cross3(p, q).norm();
                radius * cross.atan2(p.dot(q))
            }
        }
    }

    /// Coordinate difference `q - p`, using the minimal image on the torus.
    pub(crate) fn displacement(&self, p: &Vector, q: &Vector) -> Vector {
        let mut d = q - p;
        if let Manifold::FlatTorus { periods } = self {
            for (x, per) in d.iter_mut().zip(periods) {
                *x -= per * (*x / per).round();
            }
        }
        d
    }

    /// Largest admissible tangent norm for the pointwise exponential map
    /// (`πρ/2` on the sphere, unbounded otherwise).
    pub fn exp_guard(&self) -> f64 {
        match self {
            Manifold::Sphere2 { radius } => PI * radius / 2.0,
            _ => f64::INFINITY,
        }
    }

    /// A deterministic orthonormal basis of `T_p M` (positively oriented on
    /// the sphere with respect to the outward normal).
    pub fn default_frame(&self, p: &Vector) -> Vec<Vector> {
        match self {
            Manifold::Sphere2 { radius } => {
                let n = p / *radius;
                let axes = [
                    Vector::from_column_slice(&[1.0, 0.0, 0.0]),
                    Vector::from_column_slice(&[0.0, 1.0, 0.0]),
                    Vector::from_column_slice(&[0.0, 0.0, 1.0]),
                ];
                // pick the axis least aligned with the normal
                let best = axes
                    .iter()
                    .min_by(|a, b| {
                        a.dot(&n)
                            .abs()
                            .partial_cmp(&b.dot(&n).abs())
                            .expect("finite normal")
                    })
                    .expect("three axes");
                let mut z1 = best - &n * best.dot(&n);
                z1 /= z1.norm();
                let z2 = cross3(&n, &z1);
                vec![z1, z2]
            }
            _ => {
                let d = self.dim();
                (0..d)
                    .map(|i| {
                        let mut e = Vector::zeros(d);
                        e[i] = 1.0;
                        e
                    })
                    .collect()
            }
        }
    }

    /// Riemannian volume form `vol(x, y)` for 2-dimensional manifolds.
    pub(crate) fn volume2(&self, p: &Vector, x: &Vector, y: &Vector) -> f64 {
        match self {
            Manifold::Sphere2 { radius } => (p / *radius).dot(&cross3(x, y)),
            _ => x[0] * y[1] - x[1] * y[0],
        }
    }

    /// Rotation by a quarter turn in the tangent plane: `n × v` (the
    /// metric dual of `vol(v, ·)`) on oriented surfaces.
    pub(crate) fn quarter_turn(&self, p: &Vector, v: &Vector) -> Vector {
        match self {
            Manifold::Sphere2 { radius } => cross3(&(p / *radius), v),
            _ => Vector::from_column_slice(&[-v[1], v[0]]),
        }
    }
}

pub(crate) fn reduce_torus(v: &mut Vector, periods: &[f64]) {
    for (x, p) in v.iter_mut().zip(periods) {
        let mut r = x.rem_euclid(*p);
        if r >= *p {
            r = 0.0;
        }
        *x = r;
    }
}

pub(crate) fn cross3(a: &Vector, b: &Vector) -> Vector {
    Vector::from_column_slice(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}
