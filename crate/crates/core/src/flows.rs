//! Functionals driven by the Hodge heat flow of their leaf forms, the Lévy
//! heat equation `∂_t F = Δ_L F` they satisfy on loops, their long-time
//! limits, and the abelian Yang–Mills flow `∂_t a = −δda`.
//!
//! Time is exact: every flow is a diagonal spectral propagator. The only
//! time discretization is the finite difference in the residual checks.

use std::io::Write;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{eval, eval_u, PathFunctional};
use crate::hodge::{harmonic_projection, heat_propagate, line_integral, OneForm};
use crate::levy::{levy_analytic, levy_u};
use crate::pathspace::Curve;

/// Default step of the time difference.
pub const DEFAULT_DT: f64 = 1e-5;

/// Start of the window used for decay-rate fits.
pub const RATE_WINDOW_START: f64 = 0.05;

/// Differences `|F(t) − F(∞)|` below this are left out of rate fits.
pub const RATE_FLOOR: f64 = 1e-12;

/// The template with every leaf form `ω` replaced by `e^{tΔ}ω`.
pub fn heat_functional(template: &PathFunctional, t: f64) -> Result<PathFunctional> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    template.map_forms(&|f| heat_propagate(f, t), &|a| heat_propagate(a, t))
}

/// Fourth-order `d/dt g` at `t`: centered when `t ≥ 2dt`, forward otherwise.
fn time_derivative<T, G>(g: G, t: f64, dt: f64) -> Result<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    G: Fn(f64) -> Result<T>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if t >= 2.0 * dt {
        let (m2, m1, p1, p2) = (g(t - 2.0 * dt)?, g(t - dt)?, g(t + dt)?, g(t + 2.0 * dt)?);
        Ok((m2 - p2 + (p1 - m1) * 8.0) * (1.0 / (12.0 * dt)))
    } else {
        let f: Vec<T> = (0..5).map(|j| g(t + j as f64 * dt)).collect::<Result<_>>()?;
        // differences from f(t) so that constants cancel exactly
        let d = |j: usize| f[j] - f[0];
        let s = d(1) * 48.0 - d(2) * 36.0 + d(3) * 16.0 - d(4) * 3.0;
        Ok(s * (1.0 / (12.0 * dt)))
    }
}

fn require_loop_for_theta(template: &PathFunctional, c: &Curve) -> Result<()> {
    if template.has_theta() && !c.is_closed() {
        return Err(Error::OpenCurve);
    }
    Ok(())
}

/// Both sides of the Lévy heat equation at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatPoint {
    pub t: f64,
    pub value: f64,
    pub time_derivative: f64,
    pub levy: f64,
    pub residual: f64,
}

/// `F(t)`, `∂_t F(t)` and `Δ_L F(t)` on `c`.
pub fn heat_point(template: &PathFunctional, c: &Curve, t: f64, dt: f64) -> Result<HeatPoint> {
    require_loop_for_theta(template, c)?;
    let at = heat_functional(template, t)?;
    let value = eval(&at, c)?;
    let time_derivative = time_derivative(|s| eval(&heat_functional(template, s)?, c), t, dt)?;
    let levy = levy_analytic(&at, c)?;
    Ok(HeatPoint {
        t,
        value,
        time_derivative,
        levy,
        residual: (time_derivative - levy).abs(),
    })
}

/// `|∂_t F(t) − Δ_L F(t)|` with `F(t)` the heat-propagated template.
pub fn levy_heat_residual(template: &PathFunctional, c: &Curve, t: f64, dt: f64) -> Result<f64> {
    heat_point(template, c, t, dt).map(|p| p.residual)
}

/// [`heat_point`] over a time grid, in grid order.
pub fn heat_series(
    template: &PathFunctional,
    c: &Curve,
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<HeatPoint>> {
    t_grid
        .par_iter()
        .map(|&t| heat_point(template, c, t, dt))
        .collect()
}

/// Columns `t, value, residual`.
pub fn write_heat_csv<W: Write>(points: &[HeatPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "value", "time_derivative", "levy", "residual"])?;
    for p in points {
        out.write_record([
            format!("{:.17e}", p.t),
            format!("{:.17e}", p.value),
            format!("{:.17e}", p.time_derivative),
            format!("{:.17e}", p.levy),
            format!("{:.17e}", p.residual),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// The template with every leaf replaced by its harmonic projection: the
/// `t → ∞` limit of [`heat_functional`].
pub fn limit_functional(template: &PathFunctional) -> Result<PathFunctional> {
    template.map_forms(&|f| Ok(harmonic_projection(f)), &|a| Ok(harmonic_projection(a)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongTimeReport {
    /// `F(∞)` from the harmonic-projected template.
    pub limit: f64,
    /// Slope of `log|F(t) − F(∞)|` over the fit window, if it has two points.
    pub rate: Option<f64>,
    /// `(t, F(t))` along the grid.
    pub values: Vec<(f64, f64)>,
    /// Number of grid points in the fit window.
    pub fit_points: usize,
}

/// Long-time limit and decay rate of the heat functional on `c`. The rate
/// fit uses `t ≥ 0.05` and `|F(t) − F(∞)| ≥ 1e-12`.
pub fn long_time_limit(
    template: &PathFunctional,
    c: &Curve,
    t_grid: &[f64],
) -> Result<LongTimeReport> {
    let limit = eval(&limit_functional(template)?, c)?;
    let values: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|&t| Ok((t, eval(&heat_functional(template, t)?, c)?)))
        .collect::<Result<_>>()?;
    let window: Vec<(f64, f64)> = values
        .iter()
        .filter(|(t, v)| *t >= RATE_WINDOW_START && (v - limit).abs() >= RATE_FLOOR)
        .map(|(t, v)| (*t, (v - limit).abs().ln()))
        .collect();
    let rate = if window.len() >= 2 {
        let n = window.len() as f64;
        let mt = window.iter().map(|p| p.0).sum::<f64>() / n;
        let my = window.iter().map(|p| p.1).sum::<f64>() / n;
        let sty: f64 = window.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let stt: f64 = window.iter().map(|p| (p.0 - mt).powi(2)).sum();
        (stt > 0.0).then(|| sty / stt)
    } else {
        None
    };
    Ok(LongTimeReport {
        limit,
        rate,
        values,
        fit_points: window.len(),
    })
}

/// Abelian Yang–Mills flow `∂_t a = −δda`: only the co-exact part decays.
pub fn ym_u1_flow(a0: &OneForm, t: f64) -> Result<OneForm> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    OneForm::from_parts(
        a0.exact_potential().clone(),
        heat_propagate(a0.coexact_potential(), t)?,
        a0.harmonic_coefficients().to_vec(),
    )
}

/// `|Θ_{ym}(c) − Θ_{hodge}(c)|` at time `t`. The flows differ only in the
/// exact part, so the gap vanishes on loops.
pub fn ym_hodge_theta_gap(a0: &OneForm, c: &Curve, t: f64) -> Result<f64> {
    let ym = line_integral(&ym_u1_flow(a0, t)?, c)?;
    let hodge = line_integral(&heat_propagate(a0, t)?, c)?;
    Ok((ym - hodge).abs())
}

/// One row of [`u1_transport_heat_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct U1Point {
    pub t: f64,
    pub u: Complex64,
    pub time_derivative: Complex64,
    pub levy: Complex64,
    pub residual: f64,
}

/// `|∂_t U^{a(t)}(c) − Δ_L U^{a(t)}(c)|` along `t_grid` for the Hodge flow
/// `a(t) = e^{tΔ} a₀`.
pub fn u1_transport_heat_check(
    a0: &OneForm,
    c: &Curve,
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<U1Point>> {
    if !c.is_closed() {
        return Err(Error::OpenCurve);
    }
    t_grid
        .par_iter()
        .map(|&t| {
            let a = heat_propagate(a0, t)?;
            let u = eval_u(&a, c)?;
            let du = time_derivative(|s| eval_u(&heat_propagate(a0, s)?, c), t, dt)?;
            let levy = levy_u(&a, c)?;
            Ok(U1Point {
                t,
                u,
                time_derivative: du,
                levy,
                residual: (du - levy).norm(),
            })
        })
        .collect()
}
