//! Discretized H¹ curves on a uniform parameter grid `τ_i = i/N`.
//!
//! A [`Curve`] stores `N + 1` samples (`N` a power of two). Closed curves
//! repeat the first sample exactly at index `N`. Constructors may attach an
//! analytic position/velocity oracle; otherwise velocities come from a
//! sixth-order finite-difference stencil (periodic on closed curves).
//! All parameter integrals use the composite trapezoidal rule.

mod constructors;
mod io;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point, Tangent, Vector};

pub use constructors::{
    geodesic_segment, random_smooth_loop, sphere_latitude, sphere_wobble, torus_winding,
    TorusPerturbation,
};
pub use io::{read_curve_csv, write_curve_csv};

/// Smallest admissible grid; a periodic velocity stencil needs
/// `2 STENCIL_HALF_WIDTH + 1` distinct nodes.
pub const MIN_GRID: usize = 8;

/// Half width of the velocity stencil (order `2 STENCIL_HALF_WIDTH`).
const STENCIL_HALF_WIDTH: isize = 3;

/// Points per half-wave required to resolve `sin(nπτ)`.
pub const POINTS_PER_HALF_WAVE: usize = 16;

/// Analytic position and velocity at a parameter value.
pub type CurveOracle = Arc<dyn Fn(f64) -> (Vector, Vector) + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub constructor: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Homotopy class label (winding numbers on the torus).
    #[serde(default)]
    pub winding: Option<Vec<i64>>,
    /// Constant `C` in the resolution bound `d(γ_i, γ_{i+1}) ≤ C/N`.
    pub resolution_constant: f64,
}

#[derive(Clone)]
pub struct Curve {
    manifold: Manifold,
    samples: Vec<Vector>,
    closed: bool,
    /// Closed, but possibly with a corner at `γ(0)`: stencils do not wrap.
    corner_at_base: bool,
    oracle: Option<CurveOracle>,
    meta: CurveMeta,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("manifold", &self.manifold)
            .field("n", &self.grid())
            .field("closed", &self.closed)
            .field("corner_at_base", &self.corner_at_base)
            .field("oracle", &self.oracle.is_some())
            .field("meta", &self.meta)
            .finish()
    }
}

impl Curve {
    /// Builds a curve from raw samples. Torus samples are reduced modulo the
    /// periods; sphere samples must lie on the sphere.
    pub fn from_samples(
        manifold: &Manifold,
        samples: Vec<Vector>,
        closed: bool,
        meta: CurveMeta,
    ) -> Result<Self> {
        let n = samples.len().saturating_sub(1);
        if n < MIN_GRID || !n.is_power_of_two() {
            return Err(Error::InvalidCurve(format!(
                "grid size N={n} must be a power of two >= {MIN_GRID}"
            )));
        }
        let mut checked = Vec::with_capacity(samples.len());
        for s in &samples {
            checked.push(manifold.point(s.as_slice())?.coords);
        }
        if closed {
            let gap = manifold.distance_raw(&checked[0], &checked[n]);
            let scale = manifold.radius().unwrap_or(1.0);
            if gap > 1e-12 * scale.max(1.0) {
                return Err(Error::InvalidCurve(format!(
                    "closed curve endpoints differ by {gap:e}"
                )));
            }
            checked[n] = checked[0].clone();
        }
        Ok(Curve {
            manifold: manifold.clone(),
            samples: checked,
            closed,
            corner_at_base: false,
            oracle: None,
            meta,
        })
    }

    pub(crate) fn with_oracle(mut self, oracle: CurveOracle) -> Self {
        self.oracle = Some(oracle);
        self
    }

    /// The same samples without the analytic oracle, so every derived
    /// quantity uses the discrete stencils.
    pub fn discrete(&self) -> Curve {
        Curve {
            oracle: None,
            ..self.clone()
        }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    /// Grid size `N` (number of intervals).
    pub fn grid(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn has_oracle(&self) -> bool {
        self.oracle.is_some()
    }

    pub fn meta(&self) -> &CurveMeta {
        &self.meta
    }

    pub fn samples(&self) -> &[Vector] {
        &self.samples
    }

    pub fn tau(&self, i: usize) -> f64 {
        i as f64 / self.grid() as f64
    }

    pub fn point(&self, i: usize) -> Point {
        Point::new(self.samples[i].clone())
    }

    /// Trapezoidal weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let n = self.grid();
        if i == 0 || i == n {
            0.5 / n as f64
        } else {
            1.0 / n as f64
        }
    }

    /// `∫₀¹ g(τ) dτ` by the trapezoidal rule over nodal values.
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| self.weight(i) * v)
            .sum()
    }

    /// True when the velocity at node `i` uses a one-sided stencil.
    pub fn is_one_sided(&self, i: usize) -> bool {
        let w = STENCIL_HALF_WIDTH as usize;
        self.oracle.is_none() && !self.periodic() && (i < w || i + w > self.grid())
    }

    /// Closed and smooth across `τ = 0`, so stencils wrap around.
    fn periodic(&self) -> bool {
        self.closed && !self.corner_at_base
    }

    pub fn velocity(&self, i: usize) -> Result<Tangent> {
        if i > self.grid() {
            return Err(Error::InvalidArgument(format!(
                "node index {i} out of range 0..={}",
                self.grid()
            )));
        }
        Ok(Tangent::new(self.point(i), self.velocity_raw(i)))
    }

    pub(crate) fn velocity_raw(&self, i: usize) -> Vector {
        if let Some(oracle) = &self.oracle {
            let (_, v) = oracle(self.tau(i));
            return self.manifold.project_tangent(&self.samples[i], &v);
        }
        let n = self.grid() as isize;
        let i = i as isize;
        let w = STENCIL_HALF_WIDTH;
        let first = if self.periodic() || (w..=n - w).contains(&i) {
            -w
        } else if i < w {
            -i
        } else {
            n - 2 * w - i
        };
        let offsets: Vec<isize> = (first..=first + 2 * w).collect();
        let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let (_, dw) = lagrange_weights(&nodes, 0.0);
        let base = &self.samples[i as usize];
        let mut v = Vector::zeros(base.len());
        for (o, w) in offsets.iter().zip(dw) {
            if *o == 0 {
                continue;
            }
            let d = self.manifold.displacement(base, self.node_wrapped(i + o));
            v += d * w;
        }
        v *= n as f64;
        self.manifold.project_tangent(base, &v)
    }

    /// Sample at a possibly out-of-range index, wrapping on closed curves.
    fn node_wrapped(&self, j: isize) -> &Vector {
        let n = self.grid() as isize;
        let k = if self.periodic() { j.rem_euclid(n) } else { j.clamp(0, n) };
        &self.samples[k as usize]
    }

    /// Position and velocity at the half node `τ_{i+1/2}`. Uses the oracle
    /// when present, otherwise cubic interpolation (fourth-order accurate).
    pub(crate) fn midpoint_raw(&self, i: usize) -> (Vector, Vector) {
        let n = self.grid();
        let tau = (i as f64 + 0.5) / n as f64;
        if let Some(oracle) = &self.oracle {
            let (p, v) = oracle(tau);
            let p = self.normalize_point(p);
            let v = self.manifold.project_tangent(&p, &v);
            return (p, v);
        }
        let (n, i) = (n as isize, i as isize);
        let offsets: [isize; 4] = if self.periodic() || (1..=n - 2).contains(&i) {
            [-1, 0, 1, 2]
        } else if i < 1 {
            [0, 1, 2, 3]
        } else {
            [n - 3 - i, n - 2 - i, n - 1 - i, n - i]
        };
        let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let (w, dw) = lagrange_weights(&nodes, 0.5);
        let base = &self.samples[i as usize];
        let mut p = base.clone();
        let mut v = Vector::zeros(base.len());
        for ((o, wv), wd) in offsets.iter().zip(w).zip(dw) {
            let d = self.manifold.displacement(base, self.node_wrapped(i + o));
            p += &d * wv;
            v += d * wd;
        }
        v *= n as f64;
        let p = self.normalize_point(p);
        let v = self.manifold.project_tangent(&p, &v);
        (p, v)
    }

    fn normalize_point(&self, mut p: Vector) -> Vector {
        match &self.manifold {
            Manifold::Sphere2 { radius } => {
                let s = radius / p.norm();
                p *= s;
                p
            }
            Manifold::FlatTorus { periods } => {
                crate::geometry::reduce_torus(&mut p, periods);
                p
            }
            Manifold::Euclidean { .. } => p,
        }
    }

    /// Largest step `max_i d(γ_i, γ_{i+1})`.
    pub fn max_step(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| self.manifold.distance_raw(&w[0], &w[1]))
            .fold(0.0, f64::max)
    }

    /// Checks the H¹ resolution bound recorded by the constructor.
    pub fn check_resolution(&self) -> Result<()> {
        let bound = self.meta.resolution_constant / self.grid() as f64;
        let step = self.max_step();
        if step > bound {
            return Err(Error::InvalidCurve(format!(
                "max step {step:e} exceeds resolution bound {bound:e}"
            )));
        }
        Ok(())
    }

    /// Arc length by the trapezoidal rule on the velocity norm.
    pub fn length(&self) -> f64 {
        self.integrate((0..=self.grid()).map(|i| self.velocity_raw(i).norm()))
    }
}

/// Lagrange interpolation weights (value and first derivative) at `x` for
/// the given nodes.
pub(crate) fn lagrange_weights(nodes: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let m = nodes.len();
    let mut w = vec![0.0; m];
    let mut dw = vec![0.0; m];
    for j in 0..m {
        let denom: f64 = (0..m)
            .filter(|&k| k != j)
            .map(|k| nodes[j] - nodes[k])
            .product();
        let num: f64 = (0..m).filter(|&k| k != j).map(|k| x - nodes[k]).product();
        w[j] = num / denom;
        let mut d = 0.0;
        for l in (0..m).filter(|&l| l != j) {
            d += (0..m)
                .filter(|&k| k != j && k != l)
                .map(|k| x - nodes[k])
                .product::<f64>();
        }
        dw[j] = d / denom;
    }
    (w, dw)
}

/// A vector field along a curve; `values[i]` is based at sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldAlongCurve {
    pub values: Vec<Vector>,
}

impl VectorFieldAlongCurve {
    pub fn zeros(curve: &Curve) -> Self {
        let d = curve.manifold().ambient_dim();
        VectorFieldAlongCurve {
            values: vec![Vector::zeros(d); curve.grid() + 1],
        }
    }

    /// Builds a field from raw vectors, projecting them to the tangent spaces.
    pub fn from_values(curve: &Curve, values: Vec<Vector>) -> Result<Self> {
        if values.len() != curve.grid() + 1 {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for a curve with {} samples",
                values.len(),
                curve.grid() + 1
            )));
        }
        let m = curve.manifold();
        let values = values
            .iter()
            .zip(curve.samples())
            .map(|(v, p)| m.project_tangent(p, v))
            .collect();
        Ok(VectorFieldAlongCurve { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tangent(&self, curve: &Curve, i: usize) -> Tangent {
        Tangent::new(curve.point(i), self.values[i].clone())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True for `H¹_{0,0}` variations (zero at both endpoints).
    pub fn vanishes_at_ends(&self) -> bool {
        let last = self.values.len() - 1;
        self.values[0].norm() == 0.0 && self.values[last].norm() == 0.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorFieldAlongCurve {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &VectorFieldAlongCurve, s: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b * s;
        }
    }
}

/// `G₀(X, Y) = ∫₀¹ g(X(τ), Y(τ)) dτ`.
pub fn g0_inner(curve: &Curve, x: &VectorFieldAlongCurve, y: &VectorFieldAlongCurve) -> f64 {
    curve.integrate(x.values.iter().zip(&y.values).map(|(a, b)| a.dot(b)))
}

/// An orthonormal frame transported along a curve from a fixed basis at `γ(0)`.
#[derive(Debug, Clone)]
pub struct TransportedFrame {
    /// `frames[i][μ]` is based at sample `i`.
    pub frames: Vec<Vec<Vector>>,
    /// Largest deviation from orthonormality seen before renormalization.
    pub max_drift: f64,
}

impl TransportedFrame {
    pub fn dim(&self) -> usize {
        self.frames[0].len()
    }

    /// Components of `v` (based at node `i`) in the frame at node `i`.
    pub fn components(&self, i: usize, v: &Vector) -> Vec<f64> {
        self.frames[i].iter().map(|z| z.dot(v)).collect()
    }

    /// Synthesizes `Σ_μ c_μ Z_μ(τ_i)`.
    pub fn synthesize(&self, i: usize, comps: &[f64]) -> Vector {
        let mut v = Vector::zeros(self.frames[i][0].len());
        for (z, c) in self.frames[i].iter().zip(comps) {
            v += z * *c;
        }
        v
    }

    /// Worst deviation `max |g(Z_μ, Z_ν) - δ_μν|` over all nodes.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for frame in &self.frames {
            for (a, za) in frame.iter().enumerate() {
                for (b, zb) in frame.iter().enumerate() {
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((za.dot(zb) - target).abs());
                }
            }
        }
        worst
    }
}

/// `ẽ_{μ,n}(τ_i) = √2 sin(nπτ_i) Z_μ(τ_i)`, exactly zero at both endpoints.
pub fn make_basis_field(
    frame: &TransportedFrame,
    mu: usize,
    n: usize,
) -> Result<VectorFieldAlongCurve> {
    let grid = frame.frames.len() - 1;
    if mu >= frame.dim() {
        return Err(Error::InvalidArgument(format!(
            "frame index {mu} out of range for dimension {}",
            frame.dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("mode index must be positive".into()));
    }
    if n * POINTS_PER_HALF_WAVE > grid {
        return Err(Error::Resolution {
            n,
            grid,
            required: (n * POINTS_PER_HALF_WAVE).next_power_of_two(),
        });
    }
    let values = (0..=grid)
        .map(|i| {
            if i == 0 || i == grid {
                return Vector::zeros(frame.frames[i][mu].len());
            }
            let tau = i as f64 / grid as f64;
            &frame.frames[i][mu] * (2f64.sqrt() * (n as f64 * std::f64::consts::PI * tau).sin())
        })
        .collect();
    Ok(VectorFieldAlongCurve { values })
}

/// A random `H¹_{0,0}` variation `Σ_{k≤modes} Σ_μ c_{kμ} sin(kπτ) Z_μ(τ)/k`
/// with `c_{kμ}` uniform in `[-1, 1]`, scaled to sup norm `amplitude`.
pub fn random_variation(
    frame: &TransportedFrame,
    seed: u64,
    modes: usize,
    amplitude: f64,
) -> VectorFieldAlongCurve {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = frame.dim();
    let coeffs: Vec<f64> = (0..modes * d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let grid = frame.frames.len() - 1;
    let values: Vec<Vector> = (0..=grid)
        .map(|i| {
            if i == 0 || i == grid {
                return Vector::zeros(frame.frames[i][0].len());
            }
            let tau = i as f64 / grid as f64;
            let mut comps = vec![0.0; d];
            for k in 1..=modes {
                let s = (k as f64 * std::f64::consts::PI * tau).sin() / k as f64;
                for (mu, c) in comps.iter_mut().enumerate() {
                    *c += coeffs[(k - 1) * d + mu] * s;
                }
            }
            frame.synthesize(i, &comps)
        })
        .collect();
    let field = VectorFieldAlongCurve { values };
    let sup = field.sup_norm();
    if sup == 0.0 {
        field
    } else {
        field.scaled(amplitude / sup)
    }
}

/// `Exp_γ(sX)(τ_i) = exp_{γ(τ_i)}(s X(τ_i))`. The result carries no oracle;
/// closure is kept when `X(0) = X(1)`.
///
/// A variation of a loop is only `H¹` at the base point (on curved surfaces
/// the transported frame does not close up), so closed results are marked
/// as having a corner there and get one-sided stencils at `τ = 0, 1`. This
/// applies for `s = 0` too, so that `F(Exp_γ(sX))` is one discrete function
/// of `s`.
pub fn path_exp(curve: &Curve, field: &VectorFieldAlongCurve, s: f64) -> Result<Curve> {
    if field.len() != curve.grid() + 1 {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for a curve with {} samples",
            field.len(),
            curve.grid() + 1
        )));
    }
    if s == 0.0 {
        return Ok(Curve {
            corner_at_base: curve.closed,
            ..curve.clone()
        });
    }
    let m = curve.manifold();
    let norm = s.abs() * field.sup_norm();
    let limit = m.exp_guard();
    if norm >= limit {
        return Err(Error::InjectivityGuard { norm, limit });
    }
    let n = curve.grid();
    let mut samples: Vec<Vector> = curve
        .samples
        .iter()
        .zip(&field.values)
        .map(|(p, x)| m.exp_raw(p, &(x * s)))
        .collect();
    let closed = curve.closed && field.values[0] == field.values[n];
    if closed {
        samples[n] = samples[0].clone();
    }
    Ok(Curve {
        manifold: m.clone(),
        samples,
        closed,
        corner_at_base: closed,
        oracle: None,
        meta: CurveMeta {
            constructor: format!("path_exp({})", curve.meta.constructor),
            resolution_constant: curve.meta.resolution_constant + 2.0 * norm * n as f64,
            ..curve.meta.clone()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::transport_frame;
    use std::f64::consts::PI;

    fn flat_frame(c: &Curve) -> TransportedFrame {
        transport_frame(c, None, true).unwrap()
    }

    #[test]
    fn lagrange_reproduces_cubic() {
        let nodes = [-1.0, 0.0, 1.0, 2.0];
        let (w, dw) = lagrange_weights(&nodes, 0.5);
        let f = |x: f64| 1.0 + 2.0 * x - x * x + 0.5 * x * x * x;
        let df = |x: f64| 2.0 - 2.0 * x + 1.5 * x * x;
        let val: f64 = nodes.iter().zip(&w).map(|(x, w)| w * f(*x)).sum();
        let der: f64 = nodes.iter().zip(&dw).map(|(x, w)| w * f(*x)).sum();
        assert!((val - f(0.5)).abs() < 1e-14);
        assert!((der - df(0.5)).abs() < 1e-14);
    }

    #[test]
    fn torus_line_velocity_is_constant() {
        let t = Manifold::unit_torus(2).unwrap();
        let c = torus_winding(&t, 0, 1, &[0.0, 0.0], None, 64).unwrap();
        for curve in [c.clone(), c.discrete()] {
            for i in 0..=64 {
                let v = curve.velocity(i).unwrap().vec;
                assert!((v[0]).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn constant_curve_has_zero_velocity() {
        let e = Manifold::euclidean(2).unwrap();
        let samples = vec![Vector::from_column_slice(&[1.0, 2.0]); 17];
        let meta = CurveMeta {
            constructor: "constant".into(),
            seed: None,
            winding: None,
            resolution_constant: 0.0,
        };
        let c = Curve::from_samples(&e, samples, false, meta).unwrap();
        for i in 0..=16 {
            assert_eq!(c.velocity(i).unwrap().vec.norm(), 0.0);
        }
        assert!(c.is_one_sided(0) && c.is_one_sided(16) && !c.is_one_sided(8));
    }

    #[test]
    fn latitude_speed_from_stencil() {
        let s = Manifold::sphere(1.5).unwrap();
        let theta = 0.7;
        let c = sphere_latitude(&s, theta, 512).unwrap().discrete();
        let expected = 2.0 * PI * 1.5 * theta.sin();
        for i in [0, 100, 511, 512] {
            let v = c.velocity(i).unwrap().vec.norm();
            assert!((v - expected).abs() < 1e-4 * expected);
        }
    }

    #[test]
    fn one_sided_stencil_is_fourth_order_on_open_curves() {
        let e = Manifold::euclidean(2).unwrap();
        let p = e.point(&[0.0, 0.0]).unwrap();
        let v = e.tangent(&p, &[1.0, 2.0]).unwrap();
        let c = geodesic_segment(&e, &p, &v, 32).unwrap().discrete();
        for i in [0, 1, 31, 32] {
            let w = c.velocity(i).unwrap().vec;
            assert!((w - &v.vec).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_must_be_power_of_two() {
        let t = Manifold::unit_torus(2).unwrap();
        assert!(torus_winding(&t, 0, 1, &[0.0, 0.0], None, 100).is_err());
        assert!(torus_winding(&t, 0, 1, &[0.0, 0.0], None, 4).is_err());
    }

    #[test]
    fn basis_field_vanishes_at_ends_and_scales() {
        let e = Manifold::euclidean(2).unwrap();
        let p = e.point(&[0.0, 0.0]).unwrap();
        let v = e.tangent(&p, &[1.0, 0.0]).unwrap();
        let c = geodesic_segment(&e, &p, &v, 64).unwrap();
        let frame = flat_frame(&c);
        let x = make_basis_field(&frame, 0, 2).unwrap();
        assert!(x.vanishes_at_ends());
        // τ = 0.25 is node 16
        let expect = 2f64.sqrt();
        assert!((x.values[16][0] - expect).abs() < 1e-15 && x.values[16][1] == 0.0);
    }

    #[test]
    fn basis_field_resolution_guard() {
        let t = Manifold::unit_torus(2).unwrap();
        let c = torus_winding(&t, 0, 1, &[0.25, 0.0], None, 256).unwrap();
        let frame = flat_frame(&c);
        assert!(make_basis_field(&frame, 0, 16).is_ok());
        match make_basis_field(&frame, 0, 17) {
            Err(Error::Resolution { required, .. }) => assert_eq!(required, 512),
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn basis_fields_are_g0_orthonormal() {
        let t = Manifold::unit_torus(2).unwrap();
        let c = torus_winding(&t, 1, 1, &[0.1, 0.2], None, 1024).unwrap();
        let frame = flat_frame(&c);
        let fields: Vec<_> = (0..2)
            .flat_map(|mu| (1..=8).map(move |n| (mu, n)))
            .map(|(mu, n)| ((mu, n), make_basis_field(&frame, mu, n).unwrap()))
            .collect();
        for ((mu, n), a) in &fields {
            for ((nu, m), b) in &fields {
                let target = if mu == nu && n == m { 1.0 } else { 0.0 };
                assert!((g0_inner(&c, a, b) - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn path_exp_identity_and_flat_addition() {
        let e = Manifold::euclidean(2).unwrap();
        let p = e.point(&[0.0, 0.0]).unwrap();
        let v = e.tangent(&p, &[1.0, 1.0]).unwrap();
        let c = geodesic_segment(&e, &p, &v, 32).unwrap();
        let frame = flat_frame(&c);
        let x = make_basis_field(&frame, 1, 1).unwrap();
        let same = path_exp(&c, &x, 0.0).unwrap();
        assert_eq!(same.samples(), c.samples());
        let moved = path_exp(&c, &x, 0.3).unwrap();
        for i in 0..=32 {
            let expect = &c.samples()[i] + &x.values[i] * 0.3;
            assert!((&moved.samples()[i] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn path_exp_moves_equator_to_latitude() {
        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_latitude(&s, PI / 2.0, 128).unwrap();
        let a = 0.3;
        let values = c
            .samples()
            .iter()
            .map(|_| Vector::from_column_slice(&[0.0, 0.0, a]))
            .collect();
        let x = VectorFieldAlongCurve::from_values(&c, values).unwrap();
        let moved = path_exp(&c, &x, 1.0).unwrap();
        assert!(moved.is_closed());
        for p in moved.samples() {
            let polar = p[2].acos();
            assert!((polar - (PI / 2.0 - a)).abs() < 1e-10);
        }
    }

    #[test]
    fn path_exp_guard_on_sphere() {
        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_latitude(&s, PI / 3.0, 64).unwrap();
        let frame = transport_frame(&c, None, true).unwrap();
        let x = make_basis_field(&frame, 0, 1).unwrap();
        assert!(matches!(
            path_exp(&c, &x, 2.0),
            Err(Error::InjectivityGuard { .. })
        ));
    }

    #[test]
    fn path_exp_is_first_order_consistent() {
        // distance to the linearization γ + sX shrinks like s²
        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_latitude(&s, 1.0, 64).unwrap();
        let frame = transport_frame(&c, None, true).unwrap();
        let x = make_basis_field(&frame, 1, 2).unwrap();
        let err = |h: f64| {
            let moved = path_exp(&c, &x, h).unwrap();
            moved
                .samples()
                .iter()
                .zip(c.samples())
                .zip(&x.values)
                .map(|((q, p), v)| (q - (p + v * h)).norm())
                .fold(0.0, f64::max)
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn path_exp_keeps_closure_and_winding() {
        let t = Manifold::unit_torus(2).unwrap();
        let c = torus_winding(&t, 1, 2, &[0.1, 0.1], None, 256).unwrap();
        let frame = flat_frame(&c);
        let x = make_basis_field(&frame, 0, 3).unwrap();
        let moved = path_exp(&c, &x, 0.05).unwrap();
        assert!(moved.is_closed());
        assert_eq!(moved.meta().winding, Some(vec![1, 2]));
        assert_eq!(moved.samples()[0], moved.samples()[256]);
    }
}
