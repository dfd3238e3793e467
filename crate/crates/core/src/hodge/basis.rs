//! Closed-form eigenbases: Fourier modes `e^{2πi k·x/P}` on flat tori and
//! complex spherical harmonics `Y_l^m` (Condon–Shortley phase, orthonormal
//! over the unit sphere) on round spheres.
//!
//! Spherical harmonics are evaluated through their polynomial extension
//! `N_lm (-1)^m P_l^{(m)}(z/ρ) ((x + iy)/ρ)^m` to the ambient space; tangential
//! derivatives follow by projection.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Vector};

/// Torus modes are wave vectors `k`; sphere modes are `[l, m]`.
pub type Mode = Vec<i32>;

pub(crate) type Coeffs = BTreeMap<Mode, Complex64>;

/// Value with optional tangential gradient and Riemannian Hessian, all in
/// ambient coordinates.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: f64,
    pub grad: Vector,
    pub hess: DMatrix<f64>,
}

pub(crate) fn check_manifold(m: &Manifold) -> Result<()> {
    match m {
        Manifold::FlatTorus { .. } | Manifold::Sphere2 { .. } => Ok(()),
        Manifold::Euclidean { .. } => Err(Error::Unsupported(
            "spectral forms need a flat torus or a round sphere".into(),
        )),
    }
}

pub(crate) fn validate_mode(m: &Manifold, truncation: usize, mode: &[i32]) -> Result<()> {
    let k = truncation as i32;
    match m {
        Manifold::FlatTorus { periods } => {
            if mode.len() != periods.len() {
                return Err(Error::InvalidArgument(format!(
                    "torus mode {mode:?} must have {} components",
                    periods.len()
                )));
            }
            if mode.iter().any(|c| c.abs() > k) {
                return Err(Error::InvalidArgument(format!(
                    "mode {mode:?} exceeds truncation {truncation}"
                )));
            }
            Ok(())
        }
        Manifold::Sphere2 { .. } => {
            if mode.len() != 2 || mode[0] < 0 || mode[1].abs() > mode[0] {
                return Err(Error::InvalidArgument(format!(
                    "sphere mode {mode:?} must be [l, m] with |m| <= l"
                )));
            }
            if mode[0] > k {
                return Err(Error::InvalidArgument(format!(
                    "degree {} exceeds truncation {truncation}",
                    mode[0]
                )));
            }
            Ok(())
        }
        Manifold::Euclidean { .. } => check_manifold(m),
    }
}

/// Laplace–Beltrami eigenvalue of a basis mode (non-positive).
pub fn mode_eigenvalue(m: &Manifold, mode: &[i32]) -> f64 {
    match m {
        Manifold::FlatTorus { periods } => {
            -4.0 * PI
                * PI
                * mode
                    .iter()
                    .zip(periods)
                    .map(|(&k, p)| (k as f64 / p).powi(2))
                    .sum::<f64>()
        }
        Manifold::Sphere2 { radius } => {
            let l = mode[0] as f64;
            -l * (l + 1.0) / (radius * radius)
        }
        Manifold::Euclidean { .. } => f64::NAN,
    }
}

/// The mode whose basis function is the conjugate of this one, and the sign
/// relating them: `conj(b_mode) = sign · b_partner`.
pub(crate) fn conjugate_mode(m: &Manifold, mode: &[i32]) -> (Mode, f64) {
    match m {
        Manifold::Sphere2 { .. } => {
            let sign = if mode[1] % 2 == 0 { 1.0 } else { -1.0 };
            (vec![mode[0], -mode[1]], sign)
        }
        _ => (mode.iter().map(|k| -k).collect(), 1.0),
    }
}

pub(crate) fn is_constant_mode(mode: &[i32]) -> bool {
    mode.iter().all(|&k| k == 0)
}

/// All modes within the truncation, in lexicographic order.
pub(crate) fn all_modes(m: &Manifold, truncation: usize) -> Vec<Mode> {
    let k = truncation as i32;
    match m {
        Manifold::FlatTorus { periods } => {
            let mut out: Vec<Mode> = vec![vec![]];
            for _ in 0..periods.len() {
                out = out
                    .into_iter()
                    .flat_map(|prefix| {
                        (-k..=k).map(move |c| {
                            let mut v = prefix.clone();
                            v.push(c);
                            v
                        })
                    })
                    .collect();
            }
            out
        }
        Manifold::Sphere2 { .. } => (0..=k)
            .flat_map(|l| (-l..=l).map(move |mm| vec![l, mm]))
            .collect(),
        Manifold::Euclidean { .. } => Vec::new(),
    }
}

/// Sum of `c · b_mode` and its derivatives at `p` (real part).
pub(crate) fn synthesize(m: &Manifold, coeffs: &Coeffs, p: &Vector, order: usize) -> Jet {
    match m {
        Manifold::FlatTorus { periods } => torus_jet(periods, coeffs, p, order),
        Manifold::Sphere2 { radius } => sphere_jet(*radius, coeffs, p, order),
        Manifold::Euclidean { dim } => Jet {
            value: 0.0,
            grad: Vector::zeros(*dim),
            hess: DMatrix::zeros(*dim, *dim),
        },
    }
}

fn torus_jet(periods: &[f64], coeffs: &Coeffs, x: &Vector, order: usize) -> Jet {
    let d = periods.len();
    let mut value = 0.0;
    let mut grad = Vector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    let mut kappa = Vector::zeros(d);
    for (mode, c) in coeffs {
        for j in 0..d {
            kappa[j] = 2.0 * PI * mode[j] as f64 / periods[j];
        }
        let theta = kappa.dot(x);
        let e = c * Complex64::new(theta.cos(), theta.sin());
        value += e.re;
        if order >= 1 {
            grad.axpy(-e.im, &kappa, 1.0);
        }
        if order >= 2 {
            hess.ger(-e.re, &kappa, &kappa, 1.0);
        }
    }
    Jet { value, grad, hess }
}

/// `table[k][n] = d^k P_n / du^k (u)` for `n ≤ lmax`, `k ≤ kmax`.
pub(crate) fn legendre_derivatives(u: f64, lmax: usize, kmax: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; lmax + 1]; kmax + 1];
    t[0][0] = 1.0;
    for n in 0..lmax {
        let nf = n as f64;
        for k in 0..=kmax {
            let lower = if k > 0 { t[k - 1][n] } else { 0.0 };
            let prev = if n > 0 { t[k][n - 1] } else { 0.0 };
            t[k][n + 1] =
                ((2.0 * nf + 1.0) * (u * t[k][n] + k as f64 * lower) - nf * prev) / (nf + 1.0);
        }
    }
    t
}

/// `N_lm = sqrt((2l+1)/(4π) · (l-m)!/(l+m)!)` for `0 ≤ m ≤ l`.
pub(crate) fn harmonic_norm(l: usize, m: usize) -> f64 {
    let mut ratio = (2 * l + 1) as f64 / (4.0 * PI);
    for j in (l - m + 1)..=(l + m) {
        ratio /= j as f64;
    }
    ratio.sqrt()
}

type C3 = [Complex64; 3];

/// Ambient value, gradient and second derivatives of the polynomial extension
/// of `Y_l^m` at `p`.
struct SphereEval {
    rho: f64,
    table: Vec<Vec<f64>>,
    wpow: Vec<Complex64>,
}

impl SphereEval {
    fn new(rho: f64, p: &Vector, lmax: usize, order: usize) -> Self {
        let table = legendre_derivatives(p[2] / rho, lmax, lmax + order);
        let w = Complex64::new(p[0], p[1]) / rho;
        let mut wpow = vec![Complex64::new(1.0, 0.0); lmax + 1];
        for j in 1..=lmax {
            wpow[j] = wpow[j - 1] * w;
        }
        SphereEval { rho, table, wpow }
    }

    fn harmonic(&self, l: usize, m: i32, order: usize) -> (Complex64, C3, [C3; 3]) {
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let rho = self.rho;
        let ma = m.unsigned_abs() as usize;
        let sign = if ma.is_multiple_of(2) { 1.0 } else { -1.0 };
        let a = harmonic_norm(l, ma) * sign;
        let g0 = self.table[ma][l];
        let wm = self.wpow[ma];
        let mut f = wm * (a * g0);
        let mut grad: C3 = [zero; 3];
        let mut hess: [C3; 3] = [[zero; 3]; 3];
        if order >= 1 {
            let g1 = self.table[ma + 1][l];
            let wm1 = if ma >= 1 {
                self.wpow[ma - 1] * ma as f64
            } else {
                zero
            };
            let dx = wm1 * (a * g0 / rho);
            grad = [dx, i * dx, wm * (a * g1 / rho)];
            if order >= 2 {
                let g2 = self.table[ma + 2][l];
                let wm2 = if ma >= 2 {
                    self.wpow[ma - 2] * (ma * (ma - 1)) as f64
                } else {
                    zero
                };
                let r2 = rho * rho;
                let xx = wm2 * (a * g0 / r2);
                let xz = wm1 * (a * g1 / r2);
                let zz = wm * (a * g2 / r2);
                hess = [[xx, i * xx, xz], [i * xx, -xx, i * xz], [xz, i * xz, zz]];
            }
        }
        if m < 0 {
            f = f.conj() * sign;
            for g in grad.iter_mut() {
                *g = g.conj() * sign;
            }
            for row in hess.iter_mut() {
                for h in row.iter_mut() {
                    *h = h.conj() * sign;
                }
            }
        }
        (f, grad, hess)
    }
}

/// Every `Y_l^m` with `l ≤ lmax` at `p`, in [`all_modes`] order, with its
/// tangential gradient.
pub(crate) fn sphere_basis(rho: f64, lmax: usize, p: &Vector) -> Vec<(Complex64, C3)> {
    let ev = SphereEval::new(rho, p, lmax, 1);
    let n = p / rho;
    let mut out = Vec::with_capacity((lmax + 1) * (lmax + 1));
    for l in 0..=lmax {
        for m in -(l as i32)..=(l as i32) {
            let (f, g, _) = ev.harmonic(l, m, 1);
            let radial = g[0] * n[0] + g[1] * n[1] + g[2] * n[2];
            out.push((
                f,
                [g[0] - radial * n[0], g[1] - radial * n[1], g[2] - radial * n[2]],
            ));
        }
    }
    out
}

fn sphere_jet(rho: f64, coeffs: &Coeffs, p: &Vector, order: usize) -> Jet {
    let lmax = coeffs.keys().map(|k| k[0] as usize).max().unwrap_or(0);
    let ev = SphereEval::new(rho, p, lmax, order);
    let mut f_sum = 0.0;
    let mut g_sum = [0.0; 3];
    let mut h_sum = [[0.0; 3]; 3];
    for (mode, c) in coeffs {
        let (f, grad, hess) = ev.harmonic(mode[0] as usize, mode[1], order);
        f_sum += (c * f).re;
        if order >= 1 {
            for a in 0..3 {
                g_sum[a] += (c * grad[a]).re;
                if order >= 2 {
                    for b in 0..3 {
                        h_sum[a][b] += (c * hess[a][b]).re;
                    }
                }
            }
        }
    }
    let n = p / rho;
    let proj = DMatrix::<f64>::identity(3, 3) - &n * n.transpose();
    let ambient_grad = Vector::from_column_slice(&g_sum);
    let grad = &proj * &ambient_grad;
    let hess = if order >= 2 {
        let d2 = DMatrix::from_fn(3, 3, |a, b| h_sum[a][b]);
        &proj * d2 * &proj - &proj * (n.dot(&ambient_grad) / rho)
    } else {
        DMatrix::zeros(3, 3)
    };
    Jet {
        value: f_sum,
        grad,
        hess,
    }
}
