//! Run configuration: one JSON document with the sections `seed`,
//! `manifold`, `truncation`, `forms`, `curves`, `functionals`, `scenarios`,
//! `tolerances` and `output`.
//!
//! Forms, curves and functionals are named; scenarios refer to them by name.
//! [`Config::build`] resolves every reference and runs the numerical guards
//! that can be checked before anything is computed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use levy_core::hodge::{codifferential_two_form, exterior_d, DEFAULT_TRUNCATION};
use levy_core::pathspace::{
    geodesic_segment, random_smooth_loop, read_curve_csv, sphere_latitude, sphere_wobble,
    torus_winding, TorusPerturbation,
};
use levy_core::{CesaroOptions, Curve, Manifold, OneForm, OuterMap, PathFunctional, ScalarForm};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Schema or reference error, located by a JSON path such as
/// `scenarios[1].cesaro.n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Default seed for every seeded curve that does not set its own.
    #[serde(default)]
    pub seed: u64,
    pub manifold: Manifold,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub forms: BTreeMap<String, FormSpec>,
    #[serde(default)]
    pub curves: BTreeMap<String, CurveSpec>,
    #[serde(default)]
    pub functionals: BTreeMap<String, FunctionalSpec>,
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub mode: Vec<i32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormSpec {
    Constant { value: f64 },
    TorusCos { k: Vec<i32>, #[serde(default = "one")] amplitude: f64 },
    TorusSin { k: Vec<i32>, #[serde(default = "one")] amplitude: f64 },
    /// Restriction of the ambient coordinate `x_axis` to the sphere.
    SphereCoordinate { axis: usize },
    /// Raw spectral coefficients; must satisfy the reality constraint.
    Modes { coefficients: Vec<Mode> },
    /// `dα` of a scalar form.
    Exact { potential: String },
    /// `⋆dβ` of a scalar form (2-dimensional manifolds).
    Coexact { potential: String },
    /// `δ(g vol)` of a scalar form `g`.
    CodifferentialOfTwoForm { potential: String },
    Harmonic { coefficients: Vec<f64> },
    Sum { terms: Vec<String> },
    Scaled { form: String, factor: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub amplitude: f64,
    pub modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    TorusWinding {
        p: i64,
        q: i64,
        base: Vec<f64>,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perturbation: Option<PerturbationSpec>,
    },
    SphereLatitude { theta0: f64, n: usize },
    SphereWobble { theta0: f64, amplitude: f64, mode: u32, n: usize },
    RandomLoop {
        modes: usize,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Geodesic { point: Vec<f64>, velocity: Vec<f64>, n: usize },
    /// Samples written by `write_curve_csv`; the path is relative to the
    /// config file.
    File { path: PathBuf },
}

impl CurveSpec {
    /// Grid size, if the spec fixes one.
    pub fn grid(&self) -> Option<usize> {
        match self {
            CurveSpec::TorusWinding { n, .. }
            | CurveSpec::SphereLatitude { n, .. }
            | CurveSpec::SphereWobble { n, .. }
            | CurveSpec::RandomLoop { n, .. }
            | CurveSpec::Geodesic { n, .. } => Some(*n),
            CurveSpec::File { .. } => None,
        }
    }

    /// The same curve on another grid; `None` for sampled files.
    pub fn with_grid(&self, grid: usize) -> Option<CurveSpec> {
        let mut c = self.clone();
        match &mut c {
            CurveSpec::TorusWinding { n, .. }
            | CurveSpec::SphereLatitude { n, .. }
            | CurveSpec::SphereWobble { n, .. }
            | CurveSpec::RandomLoop { n, .. }
            | CurveSpec::Geodesic { n, .. } => *n = grid,
            CurveSpec::File { .. } => return None,
        }
        Some(c)
    }

    fn fill_seed(&mut self, seed: u64) {
        match self {
            CurveSpec::TorusWinding {
                perturbation: Some(p),
                ..
            } => {
                p.seed.get_or_insert(seed);
            }
            CurveSpec::RandomLoop { seed: s, .. } => {
                s.get_or_insert(seed);
            }
            _ => {}
        }
    }

    pub fn build(&self, m: &Manifold, base_dir: &Path) -> levy_core::Result<Curve> {
        match self {
            CurveSpec::TorusWinding {
                p,
                q,
                base,
                n,
                perturbation,
            } => {
                let pert = perturbation.as_ref().map(|s| TorusPerturbation {
                    amplitude: s.amplitude,
                    modes: s.modes,
                    seed: s.seed.unwrap_or_default(),
                });
                torus_winding(m, *p, *q, base, pert, *n)
            }
            CurveSpec::SphereLatitude { theta0, n } => sphere_latitude(m, *theta0, *n),
            CurveSpec::SphereWobble {
                theta0,
                amplitude,
                mode,
                n,
            } => sphere_wobble(m, *theta0, *amplitude, *mode, *n),
            CurveSpec::RandomLoop { modes, n, seed } => {
                random_smooth_loop(m, seed.unwrap_or_default(), *modes, *n)
            }
            CurveSpec::Geodesic { point, velocity, n } => {
                let p = m.point(point)?;
                let v = m.tangent(&p, velocity)?;
                geodesic_segment(m, &p, &v, *n)
            }
            CurveSpec::File { path } => {
                let c = read_curve_csv(&base_dir.join(path))?;
                if c.manifold() != m {
                    return Err(levy_core::Error::ManifoldMismatch(format!(
                        "curve file is on {}, config manifold is {}",
                        c.manifold().label(),
                        m.label()
                    )));
                }
                Ok(c)
            }
        }
    }
}

/// An outer map given by registry key (`"square"`) or in full
/// (`{"map": "polynomial", "coefficients": [...]}`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    Key(String),
    Map(OuterMap),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeSpec {
    pub map: MapSpec,
    pub args: Vec<FunctionalSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    /// `L_f` of a named scalar form.
    Lf(String),
    /// `Θ_a` of a named 1-form.
    Theta(String),
    Constant(f64),
    Product(Vec<FunctionalSpec>),
    Compose(ComposeSpec),
    /// Another named functional.
    Ref(String),
}

fn default_n_max_pairs() -> CesaroOptions {
    CesaroOptions::default()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pair {
    pub functional: String,
    pub curve: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub theta0: f64,
    pub grids: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Cesàro against analytic (and kernel) routes on each pair.
    Equiv {
        id: String,
        pairs: Vec<Pair>,
        #[serde(default = "default_n_max_pairs")]
        cesaro: CesaroOptions,
        /// Also run `2·n_max` on a `2·N` grid and require the residual
        /// not to grow.
        #[serde(default = "yes")]
        refine: bool,
    },
    /// Heat functional values, residuals and long-time limits.
    Heat {
        id: String,
        template: String,
        curves: Vec<String>,
        t_grid: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        /// Expected `−d/dt log|F − F(∞)|`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_rate: Option<f64>,
        /// Curve pairs whose limits must agree.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        same_limit: Vec<[String; 2]>,
    },
    /// `Δ_L F = (Σλ + Σμ) F` for a product of eigen-atoms.
    Eigen {
        id: String,
        #[serde(default)]
        scalar_forms: Vec<String>,
        #[serde(default)]
        one_forms: Vec<String>,
        curves: Vec<String>,
        #[serde(default = "default_n_max_pairs")]
        cesaro: CesaroOptions,
    },
    /// Latitude holonomy against the enclosed area (sphere only).
    Holonomy {
        id: String,
        theta0: Vec<f64>,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        convergence: Option<ConvergenceSpec>,
    },
    /// Θ under Yang–Mills and Hodge flows, and the `U^a` heat residual.
    YmU1 {
        id: String,
        form: String,
        curves: Vec<String>,
        t_grid: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
    },
}

impl Scenario {
    pub fn id(&self) -> &str {
        match self {
            Scenario::Equiv { id, .. }
            | Scenario::Heat { id, .. }
            | Scenario::Eigen { id, .. }
            | Scenario::Holonomy { id, .. }
            | Scenario::YmU1 { id, .. } => id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Equiv { .. } => "equiv",
            Scenario::Heat { .. } => "heat",
            Scenario::Eigen { .. } => "eigen",
            Scenario::Holonomy { .. } => "holonomy",
            Scenario::YmU1 { .. } => "ym-u1",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Cesàro against analytic: `max(equiv_rel·|A|, equiv_abs)`.
    pub equiv_rel: f64,
    pub equiv_abs: f64,
    pub kernel: f64,
    pub eigen_analytic: f64,
    /// Relative.
    pub eigen_cesaro: f64,
    pub heat_residual: f64,
    /// Relative.
    pub rate: f64,
    pub limit: f64,
    pub holonomy: f64,
    /// Allowed `|order − 4|`.
    pub holonomy_order: f64,
    pub ym_gap: f64,
    pub u1_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equiv_rel: 0.02,
            equiv_abs: 5e-2,
            kernel: 1e-8,
            eigen_analytic: 1e-8,
            eigen_cesaro: 0.03,
            heat_residual: 1e-6,
            rate: 0.01,
            limit: 1e-8,
            holonomy: 1e-6,
            holonomy_order: 0.3,
            ym_gap: 1e-10,
            u1_residual: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Tolerances {
            equiv_rel: self.equiv_rel * s,
            equiv_abs: self.equiv_abs * s,
            kernel: self.kernel * s,
            eigen_analytic: self.eigen_analytic * s,
            eigen_cesaro: self.eigen_cesaro * s,
            heat_residual: self.heat_residual * s,
            rate: self.rate * s,
            limit: self.limit * s,
            holonomy: self.holonomy * s,
            holonomy_order: self.holonomy_order * s,
            ym_gap: self.ym_gap * s,
            u1_residual: self.u1_residual * s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: "out".into() }
    }
}

/// Overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance_scale: Option<f64>,
}

impl Config {
    /// Parses JSON, reporting schema violations by path.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies overrides and fills defaults that depend on other fields, so
    /// that the serialized result reproduces the run on its own.
    pub fn resolve(mut self, o: Overrides) -> Result<Self, ConfigError> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(s) = o.tolerance_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(ConfigError::new(
                    "tolerances",
                    format!("tolerance scale must be positive and finite, got {s}"),
                ));
            }
            self.tolerances = self.tolerances.scaled(s);
        }
        let seed = self.seed;
        for c in self.curves.values_mut() {
            c.fill_seed(seed);
        }
        for (i, s) in self.scenarios.iter_mut().enumerate() {
            match s {
                Scenario::Heat { dt, .. } | Scenario::YmU1 { dt, .. } => {
                    let v = *dt.get_or_insert(levy_core::flows::DEFAULT_DT);
                    if !(v.is_finite() && v > 0.0) {
                        return Err(ConfigError::new(
                            format!("scenarios[{i}].dt"),
                            format!("time step must be positive, got {v}"),
                        ));
                    }
                }
                _ => {}
            }
        }
        Ok(self)
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON of the resolved config.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }

    /// Resolves all references and checks guards; `base_dir` anchors curve
    /// file paths.
    pub fn build(&self, base_dir: &Path) -> Result<Workspace, ConfigError> {
        let m = &self.manifold;
        let mut forms = BTreeMap::new();
        for id in self.forms.keys() {
            resolve_form(self, id, &mut forms, &mut Vec::new())?;
        }
        let mut curves = BTreeMap::new();
        for (id, spec) in &self.curves {
            let c = spec
                .build(m, base_dir)
                .map_err(|e| ConfigError::new(format!("curves.{id}"), e.to_string()))?;
            curves.insert(id.clone(), c);
        }
        let mut functionals = BTreeMap::new();
        for id in self.functionals.keys() {
            resolve_functional(self, id, &forms, &mut functionals, &mut Vec::new())?;
        }
        let ws = Workspace {
            forms,
            curves,
            functionals,
        };
        let mut ids = std::collections::BTreeSet::new();
        for (i, s) in self.scenarios.iter().enumerate() {
            if !ids.insert(s.id()) {
                return Err(ConfigError::new(
                    format!("scenarios[{i}].id"),
                    format!("duplicate scenario id {:?}", s.id()),
                ));
            }
            check_scenario_id(s.id()).map_err(|m| ConfigError::new(format!("scenarios[{i}].id"), m))?;
            self.check_scenario(i, s, &ws)?;
        }
        Ok(ws)
    }

    fn check_scenario(&self, i: usize, s: &Scenario, ws: &Workspace) -> Result<(), ConfigError> {
        let at = |field: &str| format!("scenarios[{i}].{field}");
        let curve = |field: String, id: &str| -> Result<&Curve, ConfigError> {
            ws.curves
                .get(id)
                .ok_or_else(|| ConfigError::new(field, format!("unknown curve {id:?}")))
        };
        match s {
            Scenario::Equiv { pairs, cesaro, .. } => {
                check_cesaro(&at("cesaro"), cesaro)?;
                for (j, p) in pairs.iter().enumerate() {
                    if !ws.functionals.contains_key(&p.functional) {
                        return Err(ConfigError::new(
                            at(&format!("pairs[{j}].functional")),
                            format!("unknown functional {:?}", p.functional),
                        ));
                    }
                    let c = curve(at(&format!("pairs[{j}].curve")), &p.curve)?;
                    check_resolution(&at("cesaro.n_max"), cesaro.n_max, &p.curve, c)?;
                }
            }
            Scenario::Heat {
                template,
                curves,
                t_grid,
                same_limit,
                ..
            } => {
                let f = ws.functionals.get(template).ok_or_else(|| {
                    ConfigError::new(at("template"), format!("unknown functional {template:?}"))
                })?;
                check_times(&at("t_grid"), t_grid)?;
                for (j, id) in curves.iter().enumerate() {
                    let c = curve(at(&format!("curves[{j}]")), id)?;
                    if f.has_theta() && !c.is_closed() {
                        return Err(ConfigError::new(
                            at(&format!("curves[{j}]")),
                            format!("curve {id:?} is open; Θ heat functionals need loops"),
                        ));
                    }
                }
                for (j, pair) in same_limit.iter().enumerate() {
                    for (k, id) in pair.iter().enumerate() {
                        curve(at(&format!("same_limit[{j}][{k}]")), id)?;
                    }
                }
            }
            Scenario::Eigen {
                scalar_forms,
                one_forms,
                curves,
                cesaro,
                ..
            } => {
                check_cesaro(&at("cesaro"), cesaro)?;
                for (j, id) in scalar_forms.iter().enumerate() {
                    match ws.forms.get(id) {
                        Some(Form::Scalar(_)) => {}
                        Some(Form::One(_)) => {
                            return Err(ConfigError::new(
                                at(&format!("scalar_forms[{j}]")),
                                format!("form {id:?} is a 1-form"),
                            ))
                        }
                        None => {
                            return Err(ConfigError::new(
                                at(&format!("scalar_forms[{j}]")),
                                format!("unknown form {id:?}"),
                            ))
                        }
                    }
                }
                for (j, id) in one_forms.iter().enumerate() {
                    ws.one_form(id)
                        .map_err(|m| ConfigError::new(at(&format!("one_forms[{j}]")), m))?;
                }
                for (j, id) in curves.iter().enumerate() {
                    let c = curve(at(&format!("curves[{j}]")), id)?;
                    check_resolution(&at("cesaro.n_max"), cesaro.n_max, id, c)?;
                }
            }
            Scenario::Holonomy {
                theta0,
                n,
                convergence,
                ..
            } => {
                if !matches!(self.manifold, Manifold::Sphere2 { .. }) {
                    return Err(ConfigError::new(
                        at("kind"),
                        "holonomy scenarios need a sphere2 manifold",
                    ));
                }
                for (j, th) in theta0.iter().enumerate() {
                    if !(*th > 0.0 && *th < std::f64::consts::PI) {
                        return Err(ConfigError::new(
                            at(&format!("theta0[{j}]")),
                            format!("polar angle must lie in (0, π), got {th}"),
                        ));
                    }
                }
                if *n < levy_core::pathspace::MIN_GRID {
                    return Err(ConfigError::new(at("n"), format!("grid {n} is too coarse")));
                }
                if let Some(c) = convergence {
                    if c.grids.len() < 2 {
                        return Err(ConfigError::new(
                            at("convergence.grids"),
                            "need at least two grids",
                        ));
                    }
                    for (j, w) in c.grids.windows(2).enumerate() {
                        if w[1] != 2 * w[0] {
                            return Err(ConfigError::new(
                                at(&format!("convergence.grids[{}]", j + 1)),
                                "grids must double",
                            ));
                        }
                    }
                }
            }
            Scenario::YmU1 {
                form,
                curves,
                t_grid,
                ..
            } => {
                ws.one_form(form).map_err(|m| ConfigError::new(at("form"), m))?;
                check_times(&at("t_grid"), t_grid)?;
                for (j, id) in curves.iter().enumerate() {
                    let c = curve(at(&format!("curves[{j}]")), id)?;
                    if !c.is_closed() {
                        return Err(ConfigError::new(
                            at(&format!("curves[{j}]")),
                            format!("curve {id:?} is open; the reduction holds on loops"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_scenario_id(id: &str) -> Result<(), String> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(format!(
            "scenario id {id:?} must be non-empty and use only letters, digits, '-', '_' and '.'"
        ))
    }
}

fn check_cesaro(path: &str, o: &CesaroOptions) -> Result<(), ConfigError> {
    if o.n_max < 2 {
        return Err(ConfigError::new(format!("{path}.n_max"), "n_max must be at least 2"));
    }
    if !(o.h.is_finite() && o.h > 0.0) {
        return Err(ConfigError::new(format!("{path}.h"), "h must be positive"));
    }
    Ok(())
}

/// `N ≥ 16·n_max`: every basis field needs 16 grid points per half-wave.
fn check_resolution(path: &str, n_max: usize, id: &str, c: &Curve) -> Result<(), ConfigError> {
    let per = levy_core::pathspace::POINTS_PER_HALF_WAVE;
    if c.grid() < per * n_max {
        return Err(ConfigError::new(
            path,
            format!(
                "n_max = {n_max} exceeds N/{per} = {} for curve {id:?} (N = {}); the Cesàro estimator needs N >= {per}·n_max",
                c.grid() / per,
                c.grid()
            ),
        ));
    }
    Ok(())
}

fn check_times(path: &str, t: &[f64]) -> Result<(), ConfigError> {
    if t.is_empty() {
        return Err(ConfigError::new(path, "time grid is empty"));
    }
    for (j, v) in t.iter().enumerate() {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(ConfigError::new(
                format!("{path}[{j}]"),
                format!("times must be finite and non-negative, got {v}"),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum Form {
    Scalar(ScalarForm),
    One(OneForm),
}

/// Resolved forms, curves and functionals of a config.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub forms: BTreeMap<String, Form>,
    pub curves: BTreeMap<String, Curve>,
    pub functionals: BTreeMap<String, PathFunctional>,
}

impl Workspace {
    pub fn one_form(&self, id: &str) -> Result<&OneForm, String> {
        match self.forms.get(id) {
            Some(Form::One(a)) => Ok(a),
            Some(Form::Scalar(_)) => Err(format!("form {id:?} is a scalar form")),
            None => Err(format!("unknown form {id:?}")),
        }
    }

    pub fn scalar_form(&self, id: &str) -> Result<&ScalarForm, String> {
        match self.forms.get(id) {
            Some(Form::Scalar(f)) => Ok(f),
            Some(Form::One(_)) => Err(format!("form {id:?} is a 1-form")),
            None => Err(format!("unknown form {id:?}")),
        }
    }
}

fn cycle_error(kind: &str, path: String, stack: &[String], id: &str) -> ConfigError {
    let mut chain = stack.to_vec();
    chain.push(id.to_string());
    ConfigError::new(path, format!("{kind} references form a cycle: {}", chain.join(" -> ")))
}

fn resolve_form(
    cfg: &Config,
    id: &str,
    done: &mut BTreeMap<String, Form>,
    stack: &mut Vec<String>,
) -> Result<Form, ConfigError> {
    if let Some(f) = done.get(id) {
        return Ok(f.clone());
    }
    let path = format!("forms.{id}");
    if stack.iter().any(|s| s == id) {
        return Err(cycle_error("form", path, stack, id));
    }
    let spec = cfg
        .forms
        .get(id)
        .ok_or_else(|| ConfigError::new(stack.last().map_or(String::new(), |s| format!("forms.{s}")), format!("unknown form {id:?}")))?;
    stack.push(id.to_string());
    let m = &cfg.manifold;
    let tr = cfg.truncation;
    let lib = |r: levy_core::Result<Form>| r.map_err(|e| ConfigError::new(path.clone(), e.to_string()));
    let mut get = |name: &str, stack: &mut Vec<String>| resolve_form(cfg, name, done, stack);
    let scalar = |f: Form, name: &str| match f {
        Form::Scalar(s) => Ok(s),
        Form::One(_) => Err(ConfigError::new(
            path.clone(),
            format!("form {name:?} is a 1-form; a scalar potential is required"),
        )),
    };
    let form = match spec {
        FormSpec::Constant { value } => lib(ScalarForm::constant(m, tr, *value).map(Form::Scalar))?,
        FormSpec::TorusCos { k, amplitude } => {
            lib(ScalarForm::torus_cos(m, tr, k, *amplitude).map(Form::Scalar))?
        }
        FormSpec::TorusSin { k, amplitude } => {
            lib(ScalarForm::torus_sin(m, tr, k, *amplitude).map(Form::Scalar))?
        }
        FormSpec::SphereCoordinate { axis } => {
            lib(ScalarForm::sphere_coordinate(m, tr, *axis).map(Form::Scalar))?
        }
        FormSpec::Modes { coefficients } => lib(ScalarForm::from_coefficients(
            m,
            tr,
            coefficients
                .iter()
                .map(|c| (c.mode.clone(), Complex64::new(c.re, c.im))),
        )
        .map(Form::Scalar))?,
        FormSpec::Exact { potential } => {
            let f = scalar(get(potential, stack)?, potential)?;
            Form::One(exterior_d(&f))
        }
        FormSpec::Coexact { potential } => {
            let f = scalar(get(potential, stack)?, potential)?;
            lib(OneForm::coexact_form(f).map(Form::One))?
        }
        FormSpec::CodifferentialOfTwoForm { potential } => {
            let f = scalar(get(potential, stack)?, potential)?;
            lib(codifferential_two_form(&f).map(Form::One))?
        }
        FormSpec::Harmonic { coefficients } => {
            lib(OneForm::harmonic_form(m, tr, coefficients.clone()).map(Form::One))?
        }
        FormSpec::Sum { terms } => {
            let mut acc: Option<Form> = None;
            for t in terms {
                let next = get(t, stack)?;
                acc = Some(match (acc, next) {
                    (None, f) => f,
                    (Some(Form::Scalar(a)), Form::Scalar(b)) => lib(a.add(&b).map(Form::Scalar))?,
                    (Some(Form::One(a)), Form::One(b)) => lib(a.add(&b).map(Form::One))?,
                    _ => {
                        return Err(ConfigError::new(
                            format!("{path}.terms"),
                            "cannot add a scalar form to a 1-form",
                        ))
                    }
                });
            }
            acc.ok_or_else(|| ConfigError::new(format!("{path}.terms"), "empty sum"))?
        }
        FormSpec::Scaled { form, factor } => match get(form, stack)? {
            Form::Scalar(f) => Form::Scalar(f.scaled(*factor)),
            Form::One(a) => Form::One(a.scaled(*factor)),
        },
    };
    stack.pop();
    done.insert(id.to_string(), form.clone());
    Ok(form)
}

fn build_functional(
    cfg: &Config,
    spec: &FunctionalSpec,
    path: &str,
    forms: &BTreeMap<String, Form>,
    done: &mut BTreeMap<String, PathFunctional>,
    stack: &mut Vec<String>,
) -> Result<PathFunctional, ConfigError> {
    let lib = |r: levy_core::Result<PathFunctional>| r.map_err(|e| ConfigError::new(path, e.to_string()));
    Ok(match spec {
        FunctionalSpec::Lf(id) => match forms.get(id) {
            Some(Form::Scalar(f)) => PathFunctional::lf(f.clone()),
            Some(Form::One(_)) => {
                return Err(ConfigError::new(format!("{path}.lf"), format!("form {id:?} is a 1-form")))
            }
            None => return Err(ConfigError::new(format!("{path}.lf"), format!("unknown form {id:?}"))),
        },
        FunctionalSpec::Theta(id) => match forms.get(id) {
            Some(Form::One(a)) => PathFunctional::theta(a.clone()),
            Some(Form::Scalar(_)) => {
                return Err(ConfigError::new(
                    format!("{path}.theta"),
                    format!("form {id:?} is a scalar form"),
                ))
            }
            None => {
                return Err(ConfigError::new(format!("{path}.theta"), format!("unknown form {id:?}")))
            }
        },
        FunctionalSpec::Constant(c) => PathFunctional::constant(*c),
        FunctionalSpec::Product(children) => {
            let mut out = Vec::new();
            for (j, c) in children.iter().enumerate() {
                out.push(build_functional(
                    cfg,
                    c,
                    &format!("{path}.product[{j}]"),
                    forms,
                    done,
                    stack,
                )?);
            }
            lib(PathFunctional::product(out))?
        }
        FunctionalSpec::Compose(c) => {
            let outer = match &c.map {
                MapSpec::Key(k) => OuterMap::from_key(k)
                    .map_err(|e| ConfigError::new(format!("{path}.compose.map"), e.to_string()))?,
                MapSpec::Map(m) => m.clone(),
            };
            let mut out = Vec::new();
            for (j, a) in c.args.iter().enumerate() {
                out.push(build_functional(
                    cfg,
                    a,
                    &format!("{path}.compose.args[{j}]"),
                    forms,
                    done,
                    stack,
                )?);
            }
            PathFunctional::compose(outer, out)
                .map_err(|e| ConfigError::new(format!("{path}.compose"), e.to_string()))?
        }
        FunctionalSpec::Ref(id) => resolve_functional(cfg, id, forms, done, stack)
            .map_err(|e| if e.path.is_empty() { ConfigError::new(format!("{path}.ref"), e.message) } else { e })?,
    })
}

fn resolve_functional(
    cfg: &Config,
    id: &str,
    forms: &BTreeMap<String, Form>,
    done: &mut BTreeMap<String, PathFunctional>,
    stack: &mut Vec<String>,
) -> Result<PathFunctional, ConfigError> {
    if let Some(f) = done.get(id) {
        return Ok(f.clone());
    }
    let path = format!("functionals.{id}");
    if stack.iter().any(|s| s == id) {
        return Err(cycle_error("functional", path, stack, id));
    }
    let spec = cfg
        .functionals
        .get(id)
        .ok_or_else(|| ConfigError::new("", format!("unknown functional {id:?}")))?;
    stack.push(id.to_string());
    let f = build_functional(cfg, spec, &path, forms, done, stack)?;
    f.validate()
        .map_err(|e| ConfigError::new(path.clone(), e.to_string()))?;
    if let Some(fm) = f.manifold() {
        if fm != &cfg.manifold {
            return Err(ConfigError::new(path, "functional lives on another manifold"));
        }
    }
    stack.pop();
    done.insert(id.to_string(), f.clone());
    Ok(f)
}
