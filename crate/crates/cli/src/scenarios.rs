//! Scenario runners and their on-disk reports.
//!
//! Each scenario writes `<out>/<id>/data.csv`, `summary.json` and
//! `config.json` (the resolved config). Every file carries the scenario id
//! and the config hash: the CSVs in a leading `#` comment line, the summary
//! in its header fields.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use levy_core::flows::{heat_series, long_time_limit, u1_transport_heat_check, ym_u1_flow};
use levy_core::functionals::{build_eigenfunctional, eval};
use levy_core::hodge::{heat_propagate, line_integral};
use levy_core::levy::{levy_analytic, levy_cesaro, levy_divergence, levy_kernel};
use levy_core::pathspace::sphere_latitude;
use levy_core::transport::holonomy_angle;
use levy_core::CesaroReport;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, Scenario, Workspace};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(label: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            label: label.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// What a scenario produced before it is written out.
#[derive(Debug, Default)]
struct Body {
    checks: Vec<Check>,
    table: Table,
    details: serde_json::Value,
    /// Additional CSV files, by file name.
    extra: Vec<(String, Table)>,
}

/// A CSV table kept as strings; numbers use `{:.17e}`.
#[derive(Debug, Default, Clone)]
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self, comment: &str) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(format!("{comment}\n{}", String::from_utf8_lossy(&bytes)))
    }
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioOutcome {
    pub id: String,
    pub kind: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Numerical guard or library error that stopped the scenario.
    pub error: Option<String>,
}

/// Runs one scenario and writes its directory under `out`. Library errors
/// are recorded in the outcome; only I/O failures are returned as errors.
pub fn run_scenario(
    cfg: &Config,
    ws: &Workspace,
    scenario: &Scenario,
    out: &Path,
) -> std::io::Result<ScenarioOutcome> {
    let hash = cfg.hash();
    let result = match scenario {
        Scenario::Equiv { .. } => equiv(cfg, ws, scenario),
        Scenario::Heat { .. } => heat(cfg, ws, scenario),
        Scenario::Eigen { .. } => eigen(cfg, ws, scenario),
        Scenario::Holonomy { .. } => holonomy(cfg, scenario),
        Scenario::YmU1 { .. } => ym_u1(cfg, ws, scenario),
    };
    let (body, error) = match result {
        Ok(b) => (b, None),
        Err(e) => (Body::default(), Some(e.to_string())),
    };
    let passed = error.is_none() && body.checks.iter().all(|c| c.passed);
    let outcome = ScenarioOutcome {
        id: scenario.id().to_string(),
        kind: scenario.kind(),
        passed,
        checks: body.checks,
        error,
    };

    let dir = out.join(scenario.id());
    fs::create_dir_all(&dir)?;
    let comment = format!(
        "# scenario={} kind={} config_hash={hash} seed={}",
        scenario.id(),
        scenario.kind(),
        cfg.seed
    );
    let io = |e: csv::Error| std::io::Error::other(e.to_string());
    fs::write(dir.join("data.csv"), body.table.render(&comment).map_err(io)?)?;
    for (name, t) in &body.extra {
        fs::write(dir.join(name), t.render(&comment).map_err(io)?)?;
    }
    let summary = json!({
        "scenario": scenario.id(),
        "kind": scenario.kind(),
        "config_hash": hash,
        "seed": cfg.seed,
        "passed": outcome.passed,
        "error": outcome.error,
        "checks": outcome.checks,
        "details": body.details,
    });
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    fs::write(dir.join("config.json"), cfg.to_canonical_json() + "\n")?;
    Ok(outcome)
}

type Res<T> = levy_core::Result<T>;

fn cesaro_table(r: &CesaroReport) -> Table {
    let mut t = Table::new(&["n", "s_n", "term", "model"]);
    for (i, s) in r.partial_sums.iter().enumerate() {
        let n = i + 1;
        t.push(vec![
            n.to_string(),
            num(*s),
            num(r.mode_terms[i].iter().sum()),
            num(r.model(n)),
        ]);
    }
    t
}

fn equiv(cfg: &Config, ws: &Workspace, s: &Scenario) -> Res<Body> {
    let Scenario::Equiv {
        pairs,
        cesaro,
        refine,
        ..
    } = s
    else {
        unreachable!()
    };
    let tol = &cfg.tolerances;
    let mut body = Body {
        table: Table::new(&[
            "functional",
            "curve",
            "grid",
            "n_max",
            "analytic",
            "kernel",
            "cesaro",
            "residual",
            "fit_rms",
            "noise_floor",
            "tail_coefficient",
            "refined_residual",
        ]),
        ..Body::default()
    };
    let mut details = Vec::new();
    for p in pairs {
        let f = &ws.functionals[&p.functional];
        let c = &ws.curves[&p.curve];
        let label = format!("{} on {}", p.functional, p.curve);
        let analytic = levy_analytic(f, c)?;
        let kernel = levy_divergence(&levy_kernel(f, c)?);
        let r = levy_cesaro(f, c, cesaro)?;
        body.checks.push(Check::new(
            format!("{label}: |cesaro - analytic|"),
            (r.limit - analytic).abs(),
            (tol.equiv_rel * analytic.abs()).max(tol.equiv_abs),
        ));
        body.checks.push(Check::new(
            format!("{label}: |kernel - analytic|"),
            (kernel - analytic).abs(),
            tol.kernel,
        ));
        let refined = match cfg.curves[&p.curve].with_grid(2 * c.grid()) {
            Some(spec) if *refine => {
                let c2 = spec.build(&cfg.manifold, Path::new("."))?;
                let mut o = *cesaro;
                o.n_max *= 2;
                let r2 = levy_cesaro(f, &c2, &o)?;
                body.checks.push(Check::new(
                    format!("{label}: residual at 2·n_max, 2·N"),
                    r2.residual,
                    r.residual.max(r2.noise_floor),
                ));
                Some(r2)
            }
            _ => None,
        };
        body.table.push(vec![
            p.functional.clone(),
            p.curve.clone(),
            c.grid().to_string(),
            cesaro.n_max.to_string(),
            num(analytic),
            num(kernel),
            num(r.limit),
            num(r.residual),
            num(r.fit_rms),
            num(r.noise_floor),
            num(r.tail_coefficient),
            refined.as_ref().map_or(String::new(), |r2| num(r2.residual)),
        ]);
        body.extra.push((
            format!("cesaro_{}_{}.csv", p.functional, p.curve),
            cesaro_table(&r),
        ));
        details.push(json!({
            "functional": p.functional,
            "curve": p.curve,
            "analytic": analytic,
            "kernel": kernel,
            "cesaro": r.summary(),
            "refined": refined.map(|r2| r2.summary()),
        }));
    }
    body.details = json!({ "pairs": details });
    Ok(body)
}

fn heat(cfg: &Config, ws: &Workspace, s: &Scenario) -> Res<Body> {
    let Scenario::Heat {
        template,
        curves,
        t_grid,
        dt,
        expected_rate,
        same_limit,
        ..
    } = s
    else {
        unreachable!()
    };
    let tol = &cfg.tolerances;
    let f = &ws.functionals[template];
    let dt = dt.unwrap_or(levy_core::flows::DEFAULT_DT);
    let mut body = Body {
        table: Table::new(&["curve", "t", "value", "time_derivative", "levy", "residual"]),
        ..Body::default()
    };
    let mut limits = serde_json::Map::new();
    let mut limit_of = std::collections::BTreeMap::new();
    for id in curves {
        let c = &ws.curves[id];
        let pts = heat_series(f, c, t_grid, dt)?;
        let worst = pts.iter().map(|p| p.residual).fold(0.0, f64::max);
        body.checks.push(Check::new(
            format!("{id}: max |dF/dt - levy F|"),
            worst,
            tol.heat_residual,
        ));
        for p in &pts {
            body.table.push(vec![
                id.clone(),
                num(p.t),
                num(p.value),
                num(p.time_derivative),
                num(p.levy),
                num(p.residual),
            ]);
        }
        let long = long_time_limit(f, c, t_grid)?;
        if let Some(k) = expected_rate {
            let rate = long.rate.map_or(f64::NAN, |r| -r);
            body.checks.push(Check::new(
                format!("{id}: |rate - expected|"),
                (rate - k).abs(),
                tol.rate * k.abs(),
            ));
        }
        limit_of.insert(id.clone(), long.limit);
        limits.insert(
            id.clone(),
            json!({ "limit": long.limit, "rate": long.rate, "fit_points": long.fit_points }),
        );
    }
    for [a, b] in same_limit {
        let la = match limit_of.get(a) {
            Some(v) => *v,
            None => long_time_limit(f, &ws.curves[a], &[])?.limit,
        };
        let lb = match limit_of.get(b) {
            Some(v) => *v,
            None => long_time_limit(f, &ws.curves[b], &[])?.limit,
        };
        body.checks.push(Check::new(
            format!("|limit({a}) - limit({b})|"),
            (la - lb).abs(),
            tol.limit,
        ));
    }
    body.details = json!({ "template": template, "dt": dt, "curves": limits });
    Ok(body)
}

fn eigen(cfg: &Config, ws: &Workspace, s: &Scenario) -> Res<Body> {
    let Scenario::Eigen {
        scalar_forms,
        one_forms,
        curves,
        cesaro,
        ..
    } = s
    else {
        unreachable!()
    };
    let tol = &cfg.tolerances;
    let fs: Vec<_> = scalar_forms
        .iter()
        .map(|id| ws.scalar_form(id).cloned().expect("validated"))
        .collect();
    let as_: Vec<_> = one_forms
        .iter()
        .map(|id| ws.one_form(id).cloned().expect("validated"))
        .collect();
    let (f, lambda) = build_eigenfunctional(&fs, &as_)?;
    let mut body = Body {
        table: Table::new(&[
            "curve",
            "value",
            "eigenvalue",
            "analytic",
            "cesaro",
            "cesaro_residual",
        ]),
        ..Body::default()
    };
    for id in curves {
        let c = &ws.curves[id];
        let v = eval(&f, c)?;
        let target = lambda * v;
        let a = levy_analytic(&f, c)?;
        let r = levy_cesaro(&f, c, cesaro)?;
        body.checks.push(Check::new(
            format!("{id}: |analytic - lambda F|"),
            (a - target).abs(),
            tol.eigen_analytic,
        ));
        body.checks.push(Check::new(
            format!("{id}: |cesaro - lambda F|"),
            (r.limit - target).abs(),
            tol.eigen_cesaro * target.abs(),
        ));
        body.table.push(vec![
            id.clone(),
            num(v),
            num(lambda),
            num(a),
            num(r.limit),
            num(r.residual),
        ]);
    }
    body.details = json!({ "eigenvalue": lambda });
    Ok(body)
}

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

fn holonomy(cfg: &Config, s: &Scenario) -> Res<Body> {
    let Scenario::Holonomy {
        theta0,
        n,
        convergence,
        ..
    } = s
    else {
        unreachable!()
    };
    let tol = &cfg.tolerances;
    let m = &cfg.manifold;
    let mut body = Body {
        table: Table::new(&["theta0", "grid", "angle", "expected", "error"]),
        ..Body::default()
    };
    let rows: Vec<Res<(f64, f64, f64)>> = theta0
        .par_iter()
        .map(|&th| {
            let angle = holonomy_angle(&sphere_latitude(m, th, *n)?)?;
            // Gauss–Bonnet: area 2πρ²(1 − cos θ₀) times curvature 1/ρ²
            let expected = (2.0 * PI * (1.0 - th.cos())).rem_euclid(2.0 * PI);
            Ok((th, angle, expected))
        })
        .collect();
    for r in rows {
        let (th, angle, expected) = r?;
        let err = wrap_angle(angle - expected).abs();
        body.checks
            .push(Check::new(format!("theta0={th}: angle error"), err, tol.holonomy));
        body.table
            .push(vec![num(th), n.to_string(), num(angle), num(expected), num(err)]);
    }
    let mut orders = Vec::new();
    if let Some(cv) = convergence {
        let expected = 2.0 * PI * (1.0 - cv.theta0.cos());
        let mut conv = Table::new(&["grid", "error", "order"]);
        let errs: Vec<f64> = cv
            .grids
            .iter()
            .map(|&g| Ok(wrap_angle(holonomy_angle(&sphere_latitude(m, cv.theta0, g)?)? - expected).abs()))
            .collect::<Res<_>>()?;
        for (i, (&g, &e)) in cv.grids.iter().zip(&errs).enumerate() {
            let order = if i > 0 { (errs[i - 1] / e).log2() } else { f64::NAN };
            if i > 0 {
                body.checks.push(Check::new(
                    format!("order {}->{g}: |order - 4|", cv.grids[i - 1]),
                    (order - 4.0).abs(),
                    tol.holonomy_order,
                ));
                orders.push(order);
            }
            conv.push(vec![g.to_string(), num(e), if i > 0 { num(order) } else { String::new() }]);
        }
        body.extra.push(("convergence.csv".into(), conv));
    }
    body.details = json!({ "grid": n, "orders": orders });
    Ok(body)
}

fn ym_u1(cfg: &Config, ws: &Workspace, s: &Scenario) -> Res<Body> {
    let Scenario::YmU1 {
        form,
        curves,
        t_grid,
        dt,
        ..
    } = s
    else {
        unreachable!()
    };
    let tol = &cfg.tolerances;
    let a0 = ws.one_form(form).expect("validated");
    let dt = dt.unwrap_or(levy_core::flows::DEFAULT_DT);
    let mut body = Body {
        table: Table::new(&[
            "curve",
            "t",
            "theta_ym",
            "theta_hodge",
            "gap",
            "u_re",
            "u_im",
            "u1_residual",
        ]),
        ..Body::default()
    };
    for id in curves {
        let c = &ws.curves[id];
        let u1 = u1_transport_heat_check(a0, c, t_grid, dt)?;
        let mut gap_max: f64 = 0.0;
        let mut res_max: f64 = 0.0;
        for (&t, p) in t_grid.iter().zip(&u1) {
            let ym = line_integral(&ym_u1_flow(a0, t)?, c)?;
            let hodge = line_integral(&heat_propagate(a0, t)?, c)?;
            let gap = (ym - hodge).abs();
            gap_max = gap_max.max(gap);
            res_max = res_max.max(p.residual);
            body.table.push(vec![
                id.clone(),
                num(t),
                num(ym),
                num(hodge),
                num(gap),
                num(p.u.re),
                num(p.u.im),
                num(p.residual),
            ]);
        }
        body.checks
            .push(Check::new(format!("{id}: max theta gap"), gap_max, tol.ym_gap));
        body.checks.push(Check::new(
            format!("{id}: max U residual"),
            res_max,
            tol.u1_residual,
        ));
    }
    body.details = json!({ "form": form, "dt": dt });
    Ok(body)
}

/// Runs every scenario accepted by `filter` on a pool of `jobs` threads
/// (0: one per core). Outcomes come back in config order.
pub fn run_all(
    cfg: &Config,
    ws: &Workspace,
    out: &Path,
    jobs: usize,
    filter: impl Fn(&Scenario) -> bool + Sync,
) -> std::io::Result<Vec<ScenarioOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(std::io::Error::other)?;
    pool.install(|| {
        cfg.scenarios
            .par_iter()
            .filter(|s| filter(s))
            .map(|s| run_scenario(cfg, ws, s, out))
            .collect()
    })
}

/// Fixed-width pass/fail table.
pub fn render_table(outcomes: &[ScenarioOutcome]) -> String {
    let mut s = format!(
        "{:<20} {:<9} {:<48} {:>11} {:>11}  result\n",
        "scenario", "kind", "check", "value", "tolerance"
    );
    for o in outcomes {
        if let Some(e) = &o.error {
            s += &format!("{:<20} {:<9} error: {e}  FAIL\n", o.id, o.kind);
        }
        for c in &o.checks {
            s += &format!(
                "{:<20} {:<9} {:<48} {:>11.3e} {:>11.3e}  {}\n",
                o.id,
                o.kind,
                c.label,
                c.value,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
    }
    s
}
