//! Spectral exterior calculus for 0- and 1-forms on flat tori and round
//! spheres.
//!
//! Scalar forms are finite sums over the Laplace–Beltrami eigenbasis. A
//! 1-form is stored through its Hodge decomposition `dα + ⋆dβ + h` with
//! scalar potentials `α`, `β` (zero mean) and constant harmonic part `h`, so
//! `d`, `δ`, `Δ` and the heat semigroup all act diagonally. The co-exact
//! potential is only available on surfaces.

mod basis;
mod quadrature;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use basis::{mode_eigenvalue, Jet, Mode};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point, Tangent, Vector};
use crate::pathspace::Curve;
use basis::{check_manifold, conjugate_mode, is_constant_mode, synthesize, validate_mode, Coeffs};

/// Default truncation degree for projected forms.
pub const DEFAULT_TRUNCATION: usize = 16;

const REALITY_TOL: f64 = 1e-14;
const EIGEN_TOL: f64 = 1e-12;
/// Projected coefficients below this fraction of the largest are dropped.
const PROJECTION_FLOOR: f64 = 1e-14;

/// A real function `Σ c_mode b_mode` on a flat torus or round sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScalarFormRepr", into = "ScalarFormRepr")]
pub struct ScalarForm {
    manifold: Manifold,
    truncation: usize,
    coeffs: Coeffs,
}

/// A real 1-form `dα + ⋆dβ + h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OneFormRepr", into = "OneFormRepr")]
pub struct OneForm {
    exact: ScalarForm,
    coexact: ScalarForm,
    harmonic: Vec<f64>,
}

fn same_manifold(a: &Manifold, b: &Manifold) -> Result<()> {
    if a != b {
        return Err(Error::ManifoldMismatch(format!(
            "{} vs {}",
            a.label(),
            b.label()
        )));
    }
    Ok(())
}

impl ScalarForm {
    pub fn zero(manifold: &Manifold, truncation: usize) -> Result<Self> {
        check_manifold(manifold)?;
        Ok(ScalarForm {
            manifold: manifold.clone(),
            truncation,
            coeffs: Coeffs::new(),
        })
    }

    /// Validates modes against the truncation and the reality constraint
    /// (`c_{-k} = conj c_k` on tori, `c_{l,-m} = (-1)^m conj c_{lm}` on
    /// spheres); zero coefficients are dropped.
    pub fn from_coefficients(
        manifold: &Manifold,
        truncation: usize,
        coefficients: impl IntoIterator<Item = (Mode, Complex64)>,
    ) -> Result<Self> {
        check_manifold(manifold)?;
        let mut coeffs = Coeffs::new();
        for (mode, c) in coefficients {
            validate_mode(manifold, truncation, &mode)?;
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFinite(format!("coefficient of mode {mode:?}")));
            }
            if c != Complex64::new(0.0, 0.0) {
                *coeffs.entry(mode).or_default() += c;
            }
        }
        let scale = quadrature::coeff_scale(&coeffs).max(1.0);
        for (mode, c) in &coeffs {
            let (partner, sign) = conjugate_mode(manifold, mode);
            let other = coeffs.get(&partner).copied().unwrap_or_default();
            if (c - other.conj() * sign).norm() > REALITY_TOL * scale {
                return Err(Error::InvalidArgument(format!(
                    "coefficients of modes {mode:?} and {partner:?} violate the reality constraint"
                )));
            }
        }
        Ok(ScalarForm {
            manifold: manifold.clone(),
            truncation,
            coeffs: quadrature::clean(manifold, coeffs, 0.0),
        })
    }

    pub fn constant(manifold: &Manifold, truncation: usize, value: f64) -> Result<Self> {
        check_manifold(manifold)?;
        let (mode, c) = match manifold {
            Manifold::Sphere2 { .. } => (vec![0, 0], value * (4.0 * std::f64::consts::PI).sqrt()),
            _ => (vec![0; manifold.dim()], value),
        };
        Self::from_coefficients(manifold, truncation, [(mode, Complex64::new(c, 0.0))])
    }

    /// `A cos(2π k·x/P)` on a flat torus.
    pub fn torus_cos(manifold: &Manifold, truncation: usize, k: &[i32], amplitude: f64) -> Result<Self> {
        Self::torus_wave(manifold, truncation, k, Complex64::new(amplitude / 2.0, 0.0))
    }

    /// `A sin(2π k·x/P)` on a flat torus.
    pub fn torus_sin(manifold: &Manifold, truncation: usize, k: &[i32], amplitude: f64) -> Result<Self> {
        Self::torus_wave(manifold, truncation, k, Complex64::new(0.0, -amplitude / 2.0))
    }

    fn torus_wave(manifold: &Manifold, truncation: usize, k: &[i32], c: Complex64) -> Result<Self> {
        if !matches!(manifold, Manifold::FlatTorus { .. }) {
            return Err(Error::Unsupported("torus modes on a non-torus".into()));
        }
        if is_constant_mode(k) {
            return Self::constant(manifold, truncation, 2.0 * c.re);
        }
        let neg: Mode = k.iter().map(|x| -x).collect();
        Self::from_coefficients(manifold, truncation, [(k.to_vec(), c), (neg, c.conj())])
    }

    /// Restriction of the ambient coordinate `x_axis` to a round sphere.
    pub fn sphere_coordinate(manifold: &Manifold, truncation: usize, axis: usize) -> Result<Self> {
        let rho = match manifold {
            Manifold::Sphere2 { radius } => *radius,
            _ => return Err(Error::Unsupported("sphere coordinate on a non-sphere".into())),
        };
        use std::f64::consts::PI;
        let s = rho * (8.0 * PI / 3.0).sqrt() / 2.0;
        let coeffs = match axis {
            0 => vec![
                (vec![1, -1], Complex64::new(s, 0.0)),
                (vec![1, 1], Complex64::new(-s, 0.0)),
            ],
            1 => vec![
                (vec![1, -1], Complex64::new(0.0, s)),
                (vec![1, 1], Complex64::new(0.0, s)),
            ],
            2 => vec![(vec![1, 0], Complex64::new(rho * (4.0 * PI / 3.0).sqrt(), 0.0))],
            _ => return Err(Error::InvalidArgument(format!("axis {axis} out of range"))),
        };
        Self::from_coefficients(manifold, truncation, coeffs)
    }

    /// Quadrature projection of a pointwise function onto the truncated
    /// eigenbasis.
    pub fn project(
        manifold: &Manifold,
        truncation: usize,
        f: impl Fn(&Vector) -> f64,
    ) -> Result<Self> {
        check_manifold(manifold)?;
        let coeffs = quadrature::project_scalar(manifold, truncation, &f);
        if coeffs.values().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("projected coefficients".into()));
        }
        let scale = quadrature::coeff_scale(&coeffs);
        Ok(ScalarForm {
            manifold: manifold.clone(),
            truncation,
            coeffs: quadrature::clean(manifold, coeffs, PROJECTION_FLOOR * scale),
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn coefficients(&self) -> &BTreeMap<Mode, Complex64> {
        &self.coeffs
    }

    pub fn coefficient(&self, mode: &[i32]) -> Complex64 {
        self.coeffs.get(mode).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        match self.manifold {
            Manifold::Sphere2 { .. } => {
                self.coefficient(&[0, 0]).re / (4.0 * std::f64::consts::PI).sqrt()
            }
            _ => self.coefficient(&vec![0; self.manifold.dim()]).re,
        }
    }

    pub fn eval(&self, p: &Point) -> Result<f64> {
        self.check_point(p)?;
        Ok(self.value_raw(&p.coords))
    }

    /// Tangential gradient at `p`.
    pub fn gradient(&self, p: &Point) -> Result<Tangent> {
        self.check_point(p)?;
        Ok(Tangent::new(p.clone(), self.jet_raw(&p.coords, 1).grad))
    }

    /// Riemannian Hessian at `p` as an ambient matrix acting on tangents.
    pub fn hessian(&self, p: &Point) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        Ok(self.jet_raw(&p.coords, 2).hess)
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.coords.len() != self.manifold.ambient_dim() {
            return Err(Error::InvalidPoint(format!(
                "expected {} coordinates, got {}",
                self.manifold.ambient_dim(),
                p.coords.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn value_raw(&self, p: &Vector) -> f64 {
        synthesize(&self.manifold, &self.coeffs, p, 0).value
    }

    pub(crate) fn jet_raw(&self, p: &Vector, order: usize) -> Jet {
        synthesize(&self.manifold, &self.coeffs, p, order)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_modes(|_, c| c * s)
    }

    pub fn add(&self, other: &ScalarForm) -> Result<Self> {
        same_manifold(&self.manifold, &other.manifold)?;
        let mut coeffs = self.coeffs.clone();
        for (mode, c) in &other.coeffs {
            *coeffs.entry(mode.clone()).or_default() += c;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(ScalarForm {
            manifold: self.manifold.clone(),
            truncation: self.truncation.max(other.truncation),
            coeffs,
        })
    }

    fn map_modes(&self, f: impl Fn(&Mode, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(m, c)| (m.clone(), f(m, *c)))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        ScalarForm {
            manifold: self.manifold.clone(),
            truncation: self.truncation,
            coeffs,
        }
    }

    fn without_mean(&self) -> Self {
        self.map_modes(|m, c| if is_constant_mode(m) { Complex64::default() } else { c })
    }

    /// The common eigenvalue if this form lies in a single eigenspace.
    pub fn laplacian_eigenvalue(&self) -> Option<f64> {
        eigenvalue_of(self.coeffs.keys().map(|m| mode_eigenvalue(&self.manifold, m)))
    }

    /// Spectral `L²` inner product `∫ f g dA`.
    pub fn l2_inner(&self, other: &ScalarForm) -> Result<f64> {
        same_manifold(&self.manifold, &other.manifold)?;
        Ok(spectral_pairing(&self.manifold, &self.coeffs, &other.coeffs, |_| 1.0))
    }
}

fn eigenvalue_of(mut lambdas: impl Iterator<Item = f64>) -> Option<f64> {
    let first = lambdas.next()?;
    lambdas
        .all(|l| (l - first).abs() <= EIGEN_TOL * first.abs().max(1.0))
        .then_some(first)
}

/// Area normalization of the basis: `∫ |b_mode|² dA`.
fn basis_mass(m: &Manifold) -> f64 {
    match m {
        Manifold::FlatTorus { periods } => periods.iter().product(),
        Manifold::Sphere2 { radius } => radius * radius,
        Manifold::Euclidean { .. } => 0.0,
    }
}

fn spectral_pairing(m: &Manifold, a: &Coeffs, b: &Coeffs, weight: impl Fn(&Mode) -> f64) -> f64 {
    let mass = basis_mass(m);
    a.iter()
        .filter_map(|(mode, ca)| b.get(mode).map(|cb| (ca * cb.conj()).re * weight(mode)))
        .sum::<f64>()
        * mass
}

impl OneForm {
    pub fn zero(manifold: &Manifold, truncation: usize) -> Result<Self> {
        let z = ScalarForm::zero(manifold, truncation)?;
        let h = match manifold {
            Manifold::FlatTorus { periods } => vec![0.0; periods.len()],
            _ => Vec::new(),
        };
        Ok(OneForm {
            exact: z.clone(),
            coexact: z,
            harmonic: h,
        })
    }

    /// `dα + ⋆dβ + h`. Mean modes of the potentials are dropped since `d`
    /// annihilates them.
    pub fn from_parts(exact: ScalarForm, coexact: ScalarForm, harmonic: Vec<f64>) -> Result<Self> {
        same_manifold(&exact.manifold, &coexact.manifold)?;
        let m = exact.manifold.clone();
        match &m {
            Manifold::FlatTorus { periods } => {
                if harmonic.len() != periods.len() {
                    return Err(Error::InvalidArgument(format!(
                        "torus harmonic part needs {} components, got {}",
                        periods.len(),
                        harmonic.len()
                    )));
                }
                if periods.len() != 2 && !coexact.without_mean().is_zero() {
                    return Err(Error::Unsupported(
                        "co-exact potentials need a 2-dimensional torus".into(),
                    ));
                }
            }
            Manifold::Sphere2 { .. } => {
                if !harmonic.is_empty() {
                    return Err(Error::InvalidArgument(
                        "the sphere carries no harmonic 1-forms".into(),
                    ));
                }
            }
            Manifold::Euclidean { .. } => check_manifold(&m)?,
        }
        if harmonic.iter().any(|h| !h.is_finite()) {
            return Err(Error::NonFinite("harmonic coefficients".into()));
        }
        Ok(OneForm {
            exact: exact.without_mean(),
            coexact: coexact.without_mean(),
            harmonic,
        })
    }

    /// Constant-coefficient form `Σ h_j dx^j` on a flat torus.
    pub fn harmonic_form(manifold: &Manifold, truncation: usize, h: Vec<f64>) -> Result<Self> {
        let z = ScalarForm::zero(manifold, truncation)?;
        Self::from_parts(z.clone(), z, h)
    }

    /// `⋆dβ`.
    pub fn coexact_form(beta: ScalarForm) -> Result<Self> {
        let z = ScalarForm::zero(&beta.manifold, beta.truncation)?;
        let h = Self::zero(&beta.manifold, beta.truncation)?.harmonic;
        Self::from_parts(z, beta, h)
    }

    /// Hodge decomposition of a pointwise 1-form, supplied as its metric
    /// dual vector field in ambient coordinates.
    pub fn project(
        manifold: &Manifold,
        truncation: usize,
        omega: impl Fn(&Vector) -> Vector,
    ) -> Result<Self> {
        check_manifold(manifold)?;
        if manifold.dim() != 2 {
            return Err(Error::Unsupported(
                "1-form projection needs a 2-dimensional torus or the sphere".into(),
            ));
        }
        let (a, b, h) = quadrature::project_oneform(manifold, truncation, &omega);
        let finite = |c: &Coeffs| c.values().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&a) || !finite(&b) || h.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("projected 1-form".into()));
        }
        let scale = quadrature::coeff_scale(&a)
            .max(quadrature::coeff_scale(&b))
            .max(h.iter().fold(0.0, |m, x| m.max(x.abs())));
        let wrap = |c: Coeffs| ScalarForm {
            manifold: manifold.clone(),
            truncation,
            coeffs: quadrature::clean(manifold, c, PROJECTION_FLOOR * scale),
        };
        Self::from_parts(wrap(a), wrap(b), h)
    }

    pub fn manifold(&self) -> &Manifold {
        &self.exact.manifold
    }

    pub fn truncation(&self) -> usize {
        self.exact.truncation.max(self.coexact.truncation)
    }

    pub fn exact_potential(&self) -> &ScalarForm {
        &self.exact
    }

    pub fn coexact_potential(&self) -> &ScalarForm {
        &self.coexact
    }

    pub fn harmonic_coefficients(&self) -> &[f64] {
        &self.harmonic
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero() && self.coexact.is_zero() && self.harmonic.iter().all(|h| *h == 0.0)
    }

    /// `da = 0`, i.e. no co-exact part.
    pub fn is_closed(&self) -> bool {
        self.coexact.is_zero()
    }

    /// Metric dual `a♯` at `p` in ambient coordinates.
    pub(crate) fn vector_raw(&self, p: &Vector) -> Vector {
        let m = self.manifold();
        let mut v = if self.exact.is_zero() {
            Vector::zeros(m.ambient_dim())
        } else {
            self.exact.jet_raw(p, 1).grad
        };
        if !self.coexact.is_zero() {
            v += m.quarter_turn(p, &self.coexact.jet_raw(p, 1).grad);
        }
        for (j, h) in self.harmonic.iter().enumerate() {
            v[j] += h;
        }
        v
    }

    pub fn eval(&self, v: &Tangent) -> Result<f64> {
        if v.base.coords.len() != self.manifold().ambient_dim() {
            return Err(Error::InvalidPoint("dimension mismatch".into()));
        }
        Ok(self.vector_raw(&v.base.coords).dot(&v.vec))
    }

    pub fn scaled(&self, s: f64) -> Self {
        OneForm {
            exact: self.exact.scaled(s),
            coexact: self.coexact.scaled(s),
            harmonic: self.harmonic.iter().map(|h| h * s).collect(),
        }
    }

    pub fn add(&self, other: &OneForm) -> Result<Self> {
        Ok(OneForm {
            exact: self.exact.add(&other.exact)?,
            coexact: self.coexact.add(&other.coexact)?,
            harmonic: self
                .harmonic
                .iter()
                .zip(&other.harmonic)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// The common eigenvalue if this form lies in a single eigenspace of Δ.
    pub fn laplacian_eigenvalue(&self) -> Option<f64> {
        let m = self.manifold();
        let harmonic = self.harmonic.iter().any(|h| *h != 0.0).then_some(0.0);
        eigenvalue_of(
            self.exact
                .coeffs
                .keys()
                .chain(self.coexact.coeffs.keys())
                .map(|k| mode_eigenvalue(m, k))
                .chain(harmonic),
        )
    }

    /// Spectral `L²` inner product `∫ g(a♯, b♯) dA`.
    pub fn l2_inner(&self, other: &OneForm) -> Result<f64> {
        let m = self.manifold().clone();
        same_manifold(&m, other.manifold())?;
        let w = |k: &Mode| -mode_eigenvalue(&m, k);
        let h: f64 = self.harmonic.iter().zip(&other.harmonic).map(|(a, b)| a * b).sum();
        Ok(spectral_pairing(&m, &self.exact.coeffs, &other.exact.coeffs, w)
            + spectral_pairing(&m, &self.coexact.coeffs, &other.coexact.coeffs, w)
            + h * basis_mass(&m))
    }

    /// The exact, co-exact and harmonic summands as separate forms.
    pub fn parts(&self) -> Result<[OneForm; 3]> {
        let m = self.manifold();
        let z = ScalarForm::zero(m, self.truncation())?;
        let zero_h = OneForm::zero(m, self.truncation())?.harmonic;
        Ok([
            OneForm::from_parts(self.exact.clone(), z.clone(), zero_h.clone())?,
            OneForm::from_parts(z.clone(), self.coexact.clone(), zero_h)?,
            OneForm::from_parts(z.clone(), z, self.harmonic.clone())?,
        ])
    }
}

/// Operations shared by 0- and 1-forms.
pub trait SpectralForm: Sized + Clone {
    fn manifold(&self) -> &Manifold;
    /// Applies `c ↦ g(λ) c` to every spectral component with eigenvalue `λ`;
    /// harmonic parts have `λ = 0`.
    fn apply_multiplier(&self, g: &dyn Fn(f64) -> f64) -> Self;
    fn harmonic_part(&self) -> Self;
}

impl SpectralForm for ScalarForm {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn apply_multiplier(&self, g: &dyn Fn(f64) -> f64) -> Self {
        let m = self.manifold.clone();
        self.map_modes(|k, c| c * g(mode_eigenvalue(&m, k)))
    }

    fn harmonic_part(&self) -> Self {
        self.map_modes(|k, c| if is_constant_mode(k) { c } else { Complex64::default() })
    }
}

impl SpectralForm for OneForm {
    fn manifold(&self) -> &Manifold {
        self.exact.manifold()
    }

    fn apply_multiplier(&self, g: &dyn Fn(f64) -> f64) -> Self {
        let h0 = g(0.0);
        OneForm {
            exact: self.exact.apply_multiplier(g),
            coexact: self.coexact.apply_multiplier(g),
            harmonic: self.harmonic.iter().map(|h| h * h0).collect(),
        }
    }

    fn harmonic_part(&self) -> Self {
        let z = ScalarForm {
            coeffs: Coeffs::new(),
            ..self.exact.clone()
        };
        OneForm {
            exact: z.clone(),
            coexact: z,
            harmonic: self.harmonic.clone(),
        }
    }
}

pub fn eval_scalar(f: &ScalarForm, p: &Point) -> Result<f64> {
    f.eval(p)
}

pub fn eval_oneform(a: &OneForm, v: &Tangent) -> Result<f64> {
    a.eval(v)
}

/// `df`: exact potential `f` with the mean dropped.
pub fn exterior_d(f: &ScalarForm) -> OneForm {
    let h = match &f.manifold {
        Manifold::FlatTorus { periods } => vec![0.0; periods.len()],
        _ => Vec::new(),
    };
    OneForm {
        exact: f.without_mean(),
        coexact: ScalarForm {
            coeffs: Coeffs::new(),
            ..f.clone()
        },
        harmonic: h,
    }
}

/// `δa = -Δα`; co-exact and harmonic parts are co-closed.
pub fn codifferential(a: &OneForm) -> ScalarForm {
    a.exact.apply_multiplier(&|l| -l)
}

/// `δ(G vol) = -⋆dG` on a surface.
pub fn codifferential_two_form(g: &ScalarForm) -> Result<OneForm> {
    if g.manifold.dim() != 2 {
        return Err(Error::Unsupported("2-forms need a surface".into()));
    }
    OneForm::coexact_form(g.scaled(-1.0))
}

/// `⋆da` on a surface: `da = curl(a) vol` with `curl(a) = Δβ`.
pub fn curl(a: &OneForm) -> ScalarForm {
    a.coexact.apply_multiplier(&|l| l)
}

/// `Δ = -(dδ + δd)`, acting diagonally.
pub fn hodge_laplacian<F: SpectralForm>(form: &F) -> F {
    form.apply_multiplier(&|l| l)
}

/// Exact solution of `∂_t ω = Δω` at time `t`.
pub fn heat_propagate<F: SpectralForm>(form: &F, t: f64) -> Result<F> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    Ok(form.apply_multiplier(&|l| (l * t).exp()))
}

/// Orthogonal projection onto harmonic forms (constants for 0-forms).
pub fn harmonic_projection<F: SpectralForm>(form: &F) -> F {
    form.harmonic_part()
}

/// `∫₀¹ a(γ(τ))⟨γ̇(τ)⟩ dτ` by the trapezoid rule over grid nodes.
pub fn line_integral(a: &OneForm, c: &Curve) -> Result<f64> {
    same_manifold(a.manifold(), c.manifold())?;
    if a.is_zero() {
        return Ok(0.0);
    }
    let samples = c.samples();
    Ok(c.integrate((0..=c.grid()).map(|i| a.vector_raw(&samples[i]).dot(&c.velocity_raw(i)))))
}

/// `∫ g(a♯, b♯) dA` by product quadrature, independent of the spectral
/// pairing.
pub fn quadrature_inner(a: &OneForm, b: &OneForm) -> Result<f64> {
    same_manifold(a.manifold(), b.manifold())?;
    let g = quadrature::grid(a.manifold(), a.truncation().max(b.truncation()));
    Ok(g.points
        .iter()
        .zip(&g.weights)
        .map(|(p, w)| w * a.vector_raw(p).dot(&b.vector_raw(p)))
        .sum())
}

type Triple = (Mode, f64, f64);

#[derive(Serialize, Deserialize)]
struct ScalarFormRepr {
    manifold: Manifold,
    truncation: usize,
    coefficients: Vec<Triple>,
}

fn triples(c: &Coeffs) -> Vec<Triple> {
    c.iter().map(|(m, z)| (m.clone(), z.re, z.im)).collect()
}

fn from_triples(t: Vec<Triple>) -> impl Iterator<Item = (Mode, Complex64)> {
    t.into_iter().map(|(m, re, im)| (m, Complex64::new(re, im)))
}

impl TryFrom<ScalarFormRepr> for ScalarForm {
    type Error = Error;

    fn try_from(r: ScalarFormRepr) -> Result<Self> {
        ScalarForm::from_coefficients(&r.manifold, r.truncation, from_triples(r.coefficients))
    }
}

impl From<ScalarForm> for ScalarFormRepr {
    fn from(f: ScalarForm) -> Self {
        ScalarFormRepr {
            coefficients: triples(&f.coeffs),
            manifold: f.manifold,
            truncation: f.truncation,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct OneFormRepr {
    manifold: Manifold,
    truncation: usize,
    #[serde(default)]
    exact: Vec<Triple>,
    #[serde(default)]
    coexact: Vec<Triple>,
    #[serde(default)]
    harmonic: Option<Vec<f64>>,
}

impl TryFrom<OneFormRepr> for OneForm {
    type Error = Error;

    fn try_from(r: OneFormRepr) -> Result<Self> {
        let exact = ScalarForm::from_coefficients(&r.manifold, r.truncation, from_triples(r.exact))?;
        let coexact =
            ScalarForm::from_coefficients(&r.manifold, r.truncation, from_triples(r.coexact))?;
        let h = match r.harmonic {
            Some(h) => h,
            None => OneForm::zero(&r.manifold, r.truncation)?.harmonic,
        };
        OneForm::from_parts(exact, coexact, h)
    }
}

impl From<OneForm> for OneFormRepr {
    fn from(a: OneForm) -> Self {
        OneFormRepr {
            manifold: a.exact.manifold.clone(),
            truncation: a.truncation(),
            exact: triples(&a.exact.coeffs),
            coexact: triples(&a.coexact.coeffs),
            harmonic: Some(a.harmonic),
        }
    }
}
