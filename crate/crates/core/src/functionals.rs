//! Path and loop space functionals generated by `L_f`, `Θ_a`, products and
//! smooth compositions, plus the unitary phase `U^a = e^{-iΘ_a}`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Manifold;
use crate::hodge::{curl, line_integral, OneForm, ScalarForm};
use crate::pathspace::Curve;

/// A smooth map `ℝⁿ → ℝ` with its gradient, for user-defined outer maps.
pub trait SmoothMap: Send + Sync {
    fn name(&self) -> &str;
    fn arity(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// Outer maps `𝓕` for [`PathFunctional::Compose`].
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum OuterMap {
    /// `x^n`.
    Power { n: u32 },
    Exp,
    Sin,
    Cos,
    /// `Σ_j c_j x^j`.
    Polynomial { coefficients: Vec<f64> },
    /// `Σ_i w_i x_i`.
    Linear { weights: Vec<f64> },
    /// `Π_i x_i` over `arity` arguments.
    Product { arity: usize },
    #[serde(skip)]
    Custom(Arc<dyn SmoothMap>),
}

impl fmt::Debug for OuterMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OuterMap::Custom(m) => write!(f, "Custom({})", m.name()),
            OuterMap::Power { n } => write!(f, "Power({n})"),
            OuterMap::Exp => write!(f, "Exp"),
            OuterMap::Sin => write!(f, "Sin"),
            OuterMap::Cos => write!(f, "Cos"),
            OuterMap::Polynomial { coefficients } => write!(f, "Polynomial({coefficients:?})"),
            OuterMap::Linear { weights } => write!(f, "Linear({weights:?})"),
            OuterMap::Product { arity } => write!(f, "Product({arity})"),
        }
    }
}

impl OuterMap {
    /// Registry lookup for the parameter-free maps: `square`, `cube`,
    /// `exp`, `sin`, `cos`.
    pub fn from_key(key: &str) -> Result<Self> {
        Ok(match key {
            "square" => OuterMap::Power { n: 2 },
            "cube" => OuterMap::Power { n: 3 },
            "exp" => OuterMap::Exp,
            "sin" => OuterMap::Sin,
            "cos" => OuterMap::Cos,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown outer map {other:?}; expected square, cube, exp, sin or cos"
                )))
            }
        })
    }

    pub fn arity(&self) -> usize {
        match self {
            OuterMap::Linear { weights } => weights.len(),
            OuterMap::Product { arity } => *arity,
            OuterMap::Custom(m) => m.arity(),
            _ => 1,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            OuterMap::Power { n } => x[0].powi(*n as i32),
            OuterMap::Exp => x[0].exp(),
            OuterMap::Sin => x[0].sin(),
            OuterMap::Cos => x[0].cos(),
            OuterMap::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x[0] + c)
            }
            OuterMap::Linear { weights } => weights.iter().zip(x).map(|(w, v)| w * v).sum(),
            OuterMap::Product { .. } => x.iter().product(),
            OuterMap::Custom(m) => m.value(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            OuterMap::Power { n } => match n {
                0 => vec![0.0],
                _ => vec![*n as f64 * x[0].powi(*n as i32 - 1)],
            },
            OuterMap::Exp => vec![x[0].exp()],
            OuterMap::Sin => vec![x[0].cos()],
            OuterMap::Cos => vec![-x[0].sin()],
            OuterMap::Polynomial { coefficients } => {
                let d = coefficients
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (j, c)| acc * x[0] + j as f64 * c);
                vec![d]
            }
            OuterMap::Linear { weights } => weights.clone(),
            OuterMap::Product { .. } => (0..x.len())
                .map(|i| {
                    x.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, v)| v)
                        .product()
                })
                .collect(),
            OuterMap::Custom(m) => m.gradient(x),
        }
    }
}

/// Expression tree over the atoms `L_f = ∫ f(γ(τ)) dτ`, `Θ_a = ∫ a(γ̇)` and
/// constants.
#[derive(Debug, Clone)]
pub enum PathFunctional {
    Lf(ScalarForm),
    Theta(OneForm),
    Constant(f64),
    Product(Vec<PathFunctional>),
    Compose {
        outer: OuterMap,
        children: Vec<PathFunctional>,
    },
}

/// Anything that can be evaluated on a curve; the Cesàro estimator accepts
/// opaque implementations.
pub trait CurveFunctional: Sync {
    fn eval_curve(&self, c: &Curve) -> Result<f64>;
}

impl CurveFunctional for PathFunctional {
    fn eval_curve(&self, c: &Curve) -> Result<f64> {
        eval(self, c)
    }
}

impl<F> CurveFunctional for F
where
    F: Fn(&Curve) -> Result<f64> + Sync,
{
    fn eval_curve(&self, c: &Curve) -> Result<f64> {
        self(c)
    }
}

impl PathFunctional {
    pub fn lf(f: ScalarForm) -> Self {
        PathFunctional::Lf(f)
    }

    pub fn theta(a: OneForm) -> Self {
        PathFunctional::Theta(a)
    }

    pub fn constant(c: f64) -> Self {
        PathFunctional::Constant(c)
    }

    pub fn product(children: Vec<PathFunctional>) -> Result<Self> {
        let f = PathFunctional::Product(children);
        f.validate()?;
        Ok(f)
    }

    pub fn compose(outer: OuterMap, children: Vec<PathFunctional>) -> Result<Self> {
        let f = PathFunctional::Compose { outer, children };
        f.validate()?;
        Ok(f)
    }

    /// The manifold shared by all leaves, if there are any form leaves.
    pub fn manifold(&self) -> Option<&Manifold> {
        match self {
            PathFunctional::Lf(f) => Some(f.manifold()),
            PathFunctional::Theta(a) => Some(a.manifold()),
            PathFunctional::Constant(_) => None,
            PathFunctional::Product(ch) | PathFunctional::Compose { children: ch, .. } => {
                ch.iter().find_map(|c| c.manifold())
            }
        }
    }

    /// Leaves share one manifold and compositions match their map's arity.
    pub fn validate(&self) -> Result<()> {
        self.check_node()?;
        if let Some(m) = self.manifold() {
            let mut bad = None;
            self.visit_leaves(&mut |leaf| {
                if let Some(lm) = leaf.manifold() {
                    if lm != m && bad.is_none() {
                        bad = Some(lm.label());
                    }
                }
            });
            if let Some(other) = bad {
                return Err(Error::ManifoldMismatch(format!(
                    "functional mixes {} and {other}",
                    m.label()
                )));
            }
        }
        Ok(())
    }

    fn check_node(&self) -> Result<()> {
        match self {
            PathFunctional::Compose { outer, children } => {
                if outer.arity() != children.len() {
                    return Err(Error::InvalidArgument(format!(
                        "outer map {outer:?} takes {} arguments, got {}",
                        outer.arity(),
                        children.len()
                    )));
                }
                children.iter().try_for_each(|c| c.check_node())
            }
            PathFunctional::Product(children) => children.iter().try_for_each(|c| c.check_node()),
            _ => Ok(()),
        }
    }

    fn visit_leaves(&self, f: &mut dyn FnMut(&PathFunctional)) {
        match self {
            PathFunctional::Product(ch) | PathFunctional::Compose { children: ch, .. } => {
                ch.iter().for_each(|c| c.visit_leaves(f))
            }
            leaf => f(leaf),
        }
    }

    /// Same tree with every form leaf transformed.
    pub fn map_forms(
        &self,
        fs: &dyn Fn(&ScalarForm) -> Result<ScalarForm>,
        fo: &dyn Fn(&OneForm) -> Result<OneForm>,
    ) -> Result<PathFunctional> {
        Ok(match self {
            PathFunctional::Lf(f) => PathFunctional::Lf(fs(f)?),
            PathFunctional::Theta(a) => PathFunctional::Theta(fo(a)?),
            PathFunctional::Constant(c) => PathFunctional::Constant(*c),
            PathFunctional::Product(ch) => PathFunctional::Product(
                ch.iter().map(|c| c.map_forms(fs, fo)).collect::<Result<_>>()?,
            ),
            PathFunctional::Compose { outer, children } => PathFunctional::Compose {
                outer: outer.clone(),
                children: children
                    .iter()
                    .map(|c| c.map_forms(fs, fo))
                    .collect::<Result<_>>()?,
            },
        })
    }

    /// True when the tree contains a `Θ` leaf.
    pub fn has_theta(&self) -> bool {
        let mut found = false;
        self.visit_leaves(&mut |leaf| {
            if matches!(leaf, PathFunctional::Theta(_)) {
                found = true;
            }
        });
        found
    }
}

pub(crate) fn check_curve(f: &PathFunctional, c: &Curve) -> Result<()> {
    if let Some(m) = f.manifold() {
        if m != c.manifold() {
            return Err(Error::ManifoldMismatch(format!(
                "functional on {}, curve on {}",
                m.label(),
                c.manifold().label()
            )));
        }
    }
    Ok(())
}

pub(crate) fn eval_lf(f: &ScalarForm, c: &Curve) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    c.integrate(c.samples().iter().map(|p| f.value_raw(p)))
}

fn eval_unchecked(f: &PathFunctional, c: &Curve) -> Result<f64> {
    Ok(match f {
        PathFunctional::Lf(g) => eval_lf(g, c),
        PathFunctional::Theta(a) => line_integral(a, c)?,
        PathFunctional::Constant(v) => *v,
        PathFunctional::Product(ch) => {
            let mut acc = 1.0;
            for child in ch {
                acc *= eval_unchecked(child, c)?;
            }
            acc
        }
        PathFunctional::Compose { outer, children } => {
            let args = children
                .iter()
                .map(|ch| eval_unchecked(ch, c))
                .collect::<Result<Vec<_>>>()?;
            outer.value(&args)
        }
    })
}

/// `F(γ)`.
pub fn eval(f: &PathFunctional, c: &Curve) -> Result<f64> {
    check_curve(f, c)?;
    let v = eval_unchecked(f, c)?;
    if !v.is_finite() {
        return Err(Error::NonFinite("functional value".into()));
    }
    Ok(v)
}

/// `F` on many curves; results are in input order.
pub fn eval_batch(f: &PathFunctional, curves: &[Curve]) -> Vec<Result<f64>> {
    curves.par_iter().map(|c| eval(f, c)).collect()
}

/// `U^a(γ) = e^{-iΘ_a(γ)}`.
pub fn eval_u(a: &OneForm, c: &Curve) -> Result<Complex64> {
    let theta = eval(&PathFunctional::Theta(a.clone()), c)?;
    Ok(Complex64::new(0.0, -theta).exp())
}

/// `e^{-iθ}` for a real phase functional `θ`.
#[derive(Debug, Clone)]
pub struct ComplexPathFunctional {
    pub phase: PathFunctional,
}

impl ComplexPathFunctional {
    pub fn u(a: OneForm) -> Self {
        ComplexPathFunctional {
            phase: PathFunctional::Theta(a),
        }
    }

    pub fn eval(&self, c: &Curve) -> Result<Complex64> {
        let theta = eval(&self.phase, c)?;
        Ok(Complex64::new(0.0, -theta).exp())
    }
}

/// Outcome of comparing `Θ_a` on two loops.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomotopyCheck {
    pub difference: f64,
    /// Both loops carry the same winding metadata.
    pub same_class: bool,
}

/// `|Θ_a(c₁) − Θ_a(c₂)|` for a closed form on two loops.
pub fn homotopy_invariant_check(a: &OneForm, c1: &Curve, c2: &Curve) -> Result<HomotopyCheck> {
    if !a.is_closed() {
        let worst = curl(a)
            .coefficients()
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        return Err(Error::NotClosed(worst));
    }
    if !c1.is_closed() || !c2.is_closed() {
        return Err(Error::OpenCurve);
    }
    let w1 = &c1.meta().winding;
    let w2 = &c2.meta().winding;
    let theta = PathFunctional::Theta(a.clone());
    let difference = (eval(&theta, c1)? - eval(&theta, c2)?).abs();
    Ok(HomotopyCheck {
        difference,
        same_class: w1.is_some() && w1 == w2,
    })
}

/// Product of the atoms `L_{f_j}` and `Θ_{a_k}` for eigenforms, with the
/// predicted Lévy eigenvalue `Σλ_j + Σμ_k`.
pub fn build_eigenfunctional(
    fs: &[ScalarForm],
    as_: &[OneForm],
) -> Result<(PathFunctional, f64)> {
    if fs.is_empty() && as_.is_empty() {
        return Ok((PathFunctional::Constant(1.0), 0.0));
    }
    let mut total = 0.0;
    let mut atoms = Vec::new();
    for (j, f) in fs.iter().enumerate() {
        let l = f
            .laplacian_eigenvalue()
            .ok_or_else(|| Error::NotEigen(format!("scalar form #{j} spans several eigenspaces")))?;
        total += l;
        atoms.push(PathFunctional::Lf(f.clone()));
    }
    for (k, a) in as_.iter().enumerate() {
        let m = a
            .laplacian_eigenvalue()
            .ok_or_else(|| Error::NotEigen(format!("1-form #{k} spans several eigenspaces")))?;
        total += m;
        atoms.push(PathFunctional::Theta(a.clone()));
    }
    Ok((PathFunctional::product(atoms)?, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vector;
    use crate::hodge::exterior_d;
    use crate::pathspace::{sphere_latitude, torus_winding, TorusPerturbation};
    use std::f64::consts::PI;

    fn torus() -> Manifold {
        Manifold::unit_torus(2).unwrap()
    }

    fn sin_dy() -> OneForm {
        OneForm::coexact_form(ScalarForm::torus_cos(&torus(), 4, &[1, 0], -1.0 / (2.0 * PI)).unwrap())
            .unwrap()
    }

    fn line(x0: f64) -> Curve {
        torus_winding(&torus(), 0, 1, &[x0, 0.0], None, 256).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval(&PathFunctional::constant(3.0), &line(0.1)).unwrap(), 3.0);
        let s = Manifold::sphere(1.0).unwrap();
        let z = ScalarForm::sphere_coordinate(&s, 4, 2).unwrap();
        let eq = sphere_latitude(&s, PI / 2.0, 256).unwrap();
        assert!(eval(&PathFunctional::lf(z), &eq).unwrap().abs() < 1e-15);
        let theta = PathFunctional::theta(sin_dy());
        assert!((eval(&theta, &line(0.25)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            eval(&theta, &eq),
            Err(Error::ManifoldMismatch(_))
        ));
    }

    #[test]
    fn product_is_multiplicative_and_compose_applies_map() {
        let f = ScalarForm::torus_sin(&torus(), 4, &[1, 1], 0.7).unwrap();
        let pert = TorusPerturbation {
            amplitude: 0.05,
            modes: 2,
            seed: 1,
        };
        let c = torus_winding(&torus(), 1, 1, &[0.1, 0.3], Some(pert), 512).unwrap();
        let a = PathFunctional::lf(f);
        let b = PathFunctional::theta(sin_dy());
        let va = eval(&a, &c).unwrap();
        let vb = eval(&b, &c).unwrap();
        let p = PathFunctional::product(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(eval(&p, &c).unwrap(), va * vb);
        let sq = PathFunctional::compose(OuterMap::from_key("square").unwrap(), vec![b.clone()])
            .unwrap();
        assert_eq!(eval(&sq, &c).unwrap(), vb.powi(2));
        assert!(PathFunctional::compose(OuterMap::Exp, vec![a, b]).is_err());
    }

    #[test]
    fn mixed_manifolds_rejected() {
        let s = Manifold::sphere(1.0).unwrap();
        let z = PathFunctional::lf(ScalarForm::sphere_coordinate(&s, 4, 2).unwrap());
        let t = PathFunctional::theta(sin_dy());
        assert!(matches!(
            PathFunctional::product(vec![z, t]),
            Err(Error::ManifoldMismatch(_))
        ));
    }

    #[test]
    fn outer_map_gradients_match_differences() {
        let maps = [
            OuterMap::Power { n: 3 },
            OuterMap::Exp,
            OuterMap::Sin,
            OuterMap::Cos,
            OuterMap::Polynomial {
                coefficients: vec![1.0, -2.0, 0.5, 0.25],
            },
        ];
        for m in &maps {
            let x = 0.37;
            let h = 1e-6;
            let fd = (m.value(&[x + h]) - m.value(&[x - h])) / (2.0 * h);
            assert!((m.gradient(&[x])[0] - fd).abs() < 1e-8, "{m:?}");
        }
        let p = OuterMap::Product { arity: 3 };
        assert_eq!(p.gradient(&[2.0, 3.0, 5.0]), vec![15.0, 10.0, 6.0]);
        let l = OuterMap::Linear {
            weights: vec![1.0, -1.0],
        };
        assert_eq!(l.value(&[4.0, 1.5]), 2.5);
        let json = serde_json::to_string(&OuterMap::Polynomial {
            coefficients: vec![0.0, 1.0],
        })
        .unwrap();
        assert_eq!(json, r#"{"map":"polynomial","coefficients":[0.0,1.0]}"#);
    }

    #[test]
    fn eval_u_examples() {
        let zero = OneForm::zero(&torus(), 4).unwrap();
        assert_eq!(eval_u(&zero, &line(0.3)).unwrap(), Complex64::new(1.0, 0.0));
        let u = eval_u(&sin_dy().scaled(PI), &line(0.25)).unwrap();
        assert!((u - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        let a = sin_dy().scaled(0.8);
        for x0 in [0.1, 0.6] {
            assert!((eval_u(&a, &line(x0)).unwrap().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn u_is_multiplicative_over_concatenation() {
        let t = torus();
        let h = OneForm::harmonic_form(&t, 4, vec![0.3, 1.1]).unwrap();
        let base = [0.2, 0.5];
        let c1 = torus_winding(&t, 0, 1, &base, None, 128).unwrap();
        let c2 = torus_winding(&t, 1, 0, &base, None, 128).unwrap();
        // c1 followed by c2 on a grid of 256
        let mut samples: Vec<Vector> = c1.samples().iter().step_by(1).cloned().collect();
        samples.pop();
        samples.extend(c2.samples().iter().cloned());
        let both = Curve::from_samples(&t, samples, true, c1.meta().clone()).unwrap();
        let lhs = eval_u(&h, &both).unwrap();
        let rhs = eval_u(&h, &c1).unwrap() * eval_u(&h, &c2).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn homotopy_checks() {
        let t = torus();
        let dy = OneForm::harmonic_form(&t, 4, vec![0.0, 1.0]).unwrap();
        let straight = torus_winding(&t, 0, 1, &[0.3, 0.0], None, 512).unwrap();
        let pert = TorusPerturbation {
            amplitude: 0.1,
            modes: 4,
            seed: 9,
        };
        let wiggly = torus_winding(&t, 0, 1, &[0.3, 0.0], Some(pert), 512).unwrap();
        let r = homotopy_invariant_check(&dy, &straight, &wiggly).unwrap();
        assert!(r.same_class && r.difference <= 1e-8);

        let f = ScalarForm::torus_cos(&t, 4, &[2, 1], 1.0).unwrap();
        let exact = exterior_d(&f);
        let theta = PathFunctional::theta(exact.clone());
        assert!(eval(&theta, &straight).unwrap().abs() < 1e-10);
        assert!(eval(&theta, &wiggly).unwrap().abs() < 1e-10);

        let other = torus_winding(&t, 1, 0, &[0.3, 0.0], None, 512).unwrap();
        let r = homotopy_invariant_check(&dy, &other, &straight).unwrap();
        assert!(!r.same_class && (r.difference - 1.0).abs() < 1e-10);

        assert!(matches!(
            homotopy_invariant_check(&sin_dy(), &straight, &wiggly),
            Err(Error::NotClosed(_))
        ));
    }

    #[test]
    fn eigenfunctional_builder() {
        let s = Manifold::sphere(1.0).unwrap();
        let z = ScalarForm::sphere_coordinate(&s, 4, 2).unwrap();
        let (_, l) = build_eigenfunctional(&[z], &[]).unwrap();
        assert_eq!(l, -2.0);
        let f = ScalarForm::torus_sin(&torus(), 4, &[1, 0], 1.0).unwrap();
        let (func, l) = build_eigenfunctional(&[f], &[sin_dy()]).unwrap();
        assert!((l + 8.0 * PI * PI).abs() < 1e-12);
        assert!(matches!(func, PathFunctional::Product(ref ch) if ch.len() == 2));
        let (c, l) = build_eigenfunctional(&[], &[]).unwrap();
        assert!(matches!(c, PathFunctional::Constant(v) if v == 1.0));
        assert_eq!(l, 0.0);
        let mixed = ScalarForm::torus_sin(&torus(), 4, &[1, 0], 1.0)
            .unwrap()
            .add(&ScalarForm::torus_sin(&torus(), 4, &[2, 0], 1.0).unwrap())
            .unwrap();
        let err = build_eigenfunctional(&[mixed], &[]).unwrap_err();
        assert!(err.to_string().contains("#0"));
    }

    #[test]
    fn refinement_convergence_is_at_least_second_order() {
        let s = Manifold::sphere(1.0).unwrap();
        let f = ScalarForm::sphere_coordinate(&s, 4, 0).unwrap();
        let g = PathFunctional::lf(f.scaled(2.0).add(&ScalarForm::sphere_coordinate(&s, 4, 2).unwrap()).unwrap());
        let vals: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&n| {
                let c = crate::pathspace::geodesic_segment(
                    &s,
                    &s.point(&[1.0, 0.0, 0.0]).unwrap(),
                    &s.tangent(&s.point(&[1.0, 0.0, 0.0]).unwrap(), &[0.0, 1.0, 1.0]).unwrap(),
                    n,
                )
                .unwrap();
                eval(&g, &c).unwrap()
            })
            .collect();
        let e1 = (vals[0] - vals[1]).abs();
        let e2 = (vals[1] - vals[2]).abs();
        assert!((e1 / e2).log2() >= 1.9, "{vals:?}");
    }
}
