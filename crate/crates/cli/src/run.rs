//! Subcommand execution: points are evaluated in parallel and collected in
//! sweep order.

use rayon::prelude::*;

use cpsphere::potential::{evaluate, reduction};
use cpsphere::{Method, PermittivityModel, PotentialBreakdown, SphereSystem, ThermalState, TransitionSpec};

use crate::config::{MethodChoice, RunConfig, Settings, Sweep, Transitions, Var};
use crate::csv::{Table, Units};
use crate::error::{CliError, Origin};
use crate::plot::{Chart, Series};

/// `|e a0|^2` in C^2 m^2: the dipole the figure presets report joules for.
pub const ATOMIC_DIPOLE_SQUARED: f64 = 8.478_353_625_5e-30 * 8.478_353_625_5e-30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Compute,
    Sweep,
    Compare,
    Figure(Preset),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// gold, R = 10 um, r = 20 um
    MetalLarge,
    /// gold, R = 1 um, r = 2 um
    MetalSmall,
    /// eps = 6, R = 10 um, r = 20 um
    Dielectric,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::MetalLarge => "fig2",
            Preset::MetalSmall => "fig3",
            Preset::Dielectric => "fig5",
        }
    }

    /// Baseline settings; files and flags override them.
    pub fn settings(self) -> Settings {
        let mut s = Settings::default();
        let o = Origin::Preset(self.name());
        let (radius, distance) = match self {
            Preset::MetalSmall => ("1um", "2um"),
            _ => ("10um", "20um"),
        };
        s.set("R", radius, o.clone());
        s.set("r", distance, o.clone());
        match self {
            Preset::Dielectric => {
                s.set("material", "dielectric", o.clone());
                s.set("eps", "6", o.clone());
                s.set("x", "0.01", o.clone());
            }
            _ => {
                s.set("material", "drude", o.clone());
                s.set("omega_p", "9eV", o.clone());
                s.set("gamma", "35meV", o.clone());
                s.set("x", "0.1,0.01,0.001", o.clone());
            }
        }
        s.set("var", "T", o.clone());
        s.set("from", "0K", o.clone());
        s.set("to", "600K", o.clone());
        s.set("points", "61", o.clone());
        s.set("tol", "1e-8", o);
        s
    }
}

/// What a run produced.
pub struct Output {
    pub table: Table,
    pub chart: Option<Chart>,
    /// Points that were written as NaN, for stderr.
    pub warnings: Vec<String>,
}

/// One evaluation point.
#[derive(Clone, Copy, Debug)]
struct Point {
    temperature: Option<f64>,
    radius: f64,
    distance: f64,
    /// overrides the configured transitions with one at this `x`
    x: Option<f64>,
}

impl Point {
    fn describe(&self) -> String {
        let mut s = format!("R = {:e} m, r = {:e} m", self.radius, self.distance);
        if let Some(t) = self.temperature {
            s += &format!(", T = {t} K");
        }
        if let Some(x) = self.x {
            s += &format!(", x = {x}");
        }
        s
    }
}

fn points(config: &RunConfig) -> Vec<Point> {
    let base = Point {
        temperature: config.temperature,
        radius: config.radius,
        distance: config.distance,
        x: None,
    };
    let Some(sweep) = config.sweep else {
        return vec![base];
    };
    sweep
        .values()
        .into_iter()
        .map(|v| {
            let mut p = base;
            match sweep.var {
                Var::Temperature => p.temperature = Some(v),
                Var::Distance => p.distance = v,
                Var::Radius => p.radius = v,
                Var::Retardation => p.x = Some(v),
            }
            p
        })
        .collect()
}

fn compute_err(p: &Point) -> impl Fn(cpsphere::Error) -> CliError + '_ {
    move |source| CliError::Compute { context: p.describe(), source }
}

/// Transition list at a point; `d2 = 1` in reduced mode.
fn transitions(config: &RunConfig, sys: &SphereSystem, p: &Point) -> Result<Vec<TransitionSpec>, CliError> {
    let d2 = config.d2.unwrap_or(1.0);
    let omegas: Vec<f64> = match (&config.transitions, p.x) {
        (Transitions::Retardation(sign), Some(x)) => vec![sign[0].signum() * sys.omega_for(x)],
        (Transitions::Retardation(xs), None) => xs.iter().map(|&x| x.signum() * sys.omega_for(x.abs())).collect(),
        (Transitions::Frequencies(ws), _) => ws.clone(),
    };
    omegas
        .into_iter()
        .map(|w| TransitionSpec::new(d2, w).map_err(compute_err(p)))
        .collect()
}

fn system(p: &Point) -> Result<SphereSystem, CliError> {
    SphereSystem::new(p.radius, p.distance).map_err(compute_err(p))
}

fn state(p: &Point) -> Result<ThermalState, CliError> {
    ThermalState::new(p.temperature.unwrap_or(0.0)).map_err(compute_err(p))
}

/// Sum of the breakdowns of all transitions, scaled to the output units.
fn breakdown(config: &RunConfig, method: Method, p: &Point) -> Result<(PotentialBreakdown, f64), CliError> {
    let sys = system(p)?;
    let st = state(p)?;
    let model = config.material.unwrap_or(PermittivityModel::PerfectConductor);
    let trs = transitions(config, &sys, p)?;
    let scale = if config.reduced() { reduction(&sys) } else { 1.0 };
    let mut acc = PotentialBreakdown::default();
    for (index, tr) in trs.iter().enumerate() {
        let b = evaluate(method, tr, &sys, &model, &st, config.tol).map_err(|e| CliError::Compute {
            context: p.describe(),
            source: if trs.len() > 1 {
                cpsphere::Error::Transition { index, source: Box::new(e) }
            } else {
                e
            },
        })?;
        acc.total += b.total * scale;
        acc.nonresonant += b.nonresonant * scale;
        acc.resonant += b.resonant * scale;
        acc.u0 += b.u0 * scale;
        acc.du_ret += b.du_ret * scale;
        acc.du_refl += b.du_refl * scale;
        acc.matsubara_terms = acc.matsubara_terms.max(b.matsubara_terms);
    }
    let x = trs.first().map(|t| sys.retardation(t.omega.abs()) * t.omega.signum()).unwrap_or(f64::NAN);
    Ok((acc, x))
}

fn closed_method(config: &RunConfig) -> Method {
    match config.material {
        Some(PermittivityModel::ConstantDielectric { .. }) => Method::Dielectric,
        _ => Method::ClosedForm,
    }
}

fn on_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

fn units(config: &RunConfig) -> Units {
    if config.reduced() {
        Units::Reduced
    } else {
        Units::Joules
    }
}

const POINT_COLUMNS: [&str; 4] = ["T_K", "R_m", "r_m", "x"];

fn point_values(p: &Point, x: f64) -> [f64; 4] {
    [p.temperature.unwrap_or(f64::NAN), p.radius, p.distance, x]
}

fn swept_values(table: &Table, sweep: &Sweep) -> Vec<f64> {
    table.column(sweep.var.column()).expect("swept column present")
}

fn chart(config: &RunConfig, table: &Table, title: String, series: &[(&str, &str)]) -> Option<Chart> {
    let sweep = config.sweep?;
    let xs = swept_values(table, &sweep);
    Some(Chart {
        title,
        x_label: sweep.var.column().to_string(),
        y_label: match table.units {
            Units::Joules => "U (J)".into(),
            Units::Reduced => "U 24 pi eps0 r^3 / |d|^2".into(),
        },
        log_x: sweep.log,
        series: series
            .iter()
            .map(|(column, label)| Series {
                label: label.to_string(),
                points: xs.iter().copied().zip(table.column(column).expect("plotted column")).collect(),
            })
            .collect(),
    })
}

fn run_single(config: &RunConfig, method: Method) -> Result<Output, CliError> {
    let mut table = Table::new(
        units(config),
        &[
            "T_K", "R_m", "r_m", "x", "U", "U_nonresonant", "U_resonant", "U0", "dU_ret", "dU_refl", "matsubara_terms",
        ],
    );
    let pts = points(config);
    let rows = on_pool(config.workers, || {
        pts.par_iter()
            .map(|p| {
                let (b, x) = breakdown(config, method, p)?;
                let mut row = point_values(p, x).to_vec();
                row.extend([b.total, b.nonresonant, b.resonant, b.u0, b.du_ret, b.du_refl, b.matsubara_terms as f64]);
                Ok(row)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })??;
    table.rows = rows;
    let name = config.method.name();
    let chart = chart(config, &table, format!("method {name}"), &[("U", name)]);
    Ok(Output { table, chart, warnings: vec![] })
}

fn relative(a: f64, reference: f64) -> f64 {
    (a - reference) / reference.abs()
}

fn run_compare(config: &RunConfig) -> Result<Output, CliError> {
    let mut cols = POINT_COLUMNS.to_vec();
    cols.extend(["U_exact", "U_closed", "U0", "rel_closed", "rel_U0"]);
    let mut table = Table::new(units(config), &cols);
    let closed = closed_method(config);
    let pts = points(config);
    let rows = on_pool(config.workers, || {
        pts.par_iter()
            .map(|p| {
                let (ex, x) = breakdown(config, Method::Exact, p)?;
                let (cf, _) = breakdown(config, closed, p)?;
                let (inv, _) = breakdown(config, Method::Invariant, p)?;
                let mut row = point_values(p, x).to_vec();
                row.extend([
                    ex.total,
                    cf.total,
                    inv.total,
                    relative(cf.total, ex.total),
                    relative(inv.total, ex.total),
                ]);
                Ok(row)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })??;
    table.rows = rows;
    let chart = chart(
        config,
        &table,
        "exact, closed form and invariant term".into(),
        &[("U_exact", "exact"), ("U_closed", "closed form"), ("U0", "invariant")],
    );
    Ok(Output { table, chart, warnings: vec![] })
}

fn run_figure(config: &RunConfig, preset: Preset) -> Result<Output, CliError> {
    let Transitions::Retardation(xs) = &config.transitions else {
        return Err(CliError::Invalid(format!("{} takes its transitions as `x` values", preset.name())));
    };
    let sweep = match config.sweep {
        Some(s) if s.var == Var::Temperature => s,
        _ => return Err(CliError::Invalid(format!("{} sweeps temperature (var = T)", preset.name()))),
    };
    let dielectric = preset == Preset::Dielectric;
    let columns: &[&str] = if dielectric {
        &["T_K", "x", "U_exact_J", "U_series_J", "U_series_static_J", "ratio_exact_series", "ratio_exact_static"]
    } else {
        &["T_K", "x", "U_exact_J", "U_closed_J", "U0_J", "ratio_exact_closed", "ratio_exact_U0"]
    };
    let (second, third) = if dielectric {
        (Method::Dielectric, Method::DielectricStatic)
    } else {
        (Method::ClosedForm, Method::Invariant)
    };
    let single = RunConfig {
        d2: Some(config.d2.unwrap_or(ATOMIC_DIPOLE_SQUARED)),
        transitions: Transitions::Retardation(vec![1.0]),
        ..config.clone()
    };
    let pts: Vec<(f64, Point)> = xs
        .iter()
        .flat_map(|&x| {
            sweep.values().into_iter().map(move |t| {
                (x, Point {
                    temperature: Some(t),
                    radius: config.radius,
                    distance: config.distance,
                    x: Some(x.abs()),
                })
            })
        })
        .collect();
    let rows = on_pool(config.workers, || {
        pts.par_iter()
            .map(|(x, p)| {
                let cfg = RunConfig { transitions: Transitions::Retardation(vec![x.signum()]), ..single.clone() };
                let ex = breakdown(&cfg, Method::Exact, p)?.0.total;
                // The approximations are drawn where they apply; outside their
                // regime the point is left blank rather than aborting the figure.
                let mut skipped = None;
                let mut approx = |m: Method| match breakdown(&cfg, m, p) {
                    Ok((b, _)) => Ok(b.total),
                    Err(CliError::Compute { source, .. }) if source.is_regime() => {
                        skipped = Some(format!("{}, x = {x}: {} skipped: {}", preset.name(), MethodChoice::Single(m).name(), source.root()));
                        Ok(f64::NAN)
                    }
                    Err(e) => Err(e),
                };
                let b = approx(second)?;
                let c = approx(third)?;
                let row = vec![p.temperature.unwrap_or(f64::NAN), *x, ex, b, c, ex / b, ex / c];
                Ok((row, skipped))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })??;
    let mut table = Table::new(Units::Joules, columns);
    let mut warnings: Vec<String> = vec![];
    for (row, skipped) in rows {
        table.rows.push(row);
        if let Some(w) = skipped {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    }

    let (label_b, label_c) = if dielectric { ("exact / series", "exact / static series") } else { ("exact / closed form", "exact / U0") };
    let mut series = vec![];
    for &x in xs {
        let sel: Vec<&Vec<f64>> = table.rows.iter().filter(|r| r[1] == x).collect();
        for (col, label) in [(5, label_b), (6, label_c)] {
            series.push(Series {
                label: format!("{label}, x = {x}"),
                points: sel.iter().map(|r| (r[0], r[col])).collect(),
            });
        }
    }
    let chart = Chart {
        title: format!("{}: R = {:e} m, r = {:e} m", preset.name(), config.radius, config.distance),
        x_label: "T (K)".into(),
        y_label: "ratio".into(),
        log_x: sweep.log,
        series,
    };
    Ok(Output { table, chart: Some(chart), warnings })
}

/// Runs `command` on a validated configuration.
pub fn execute(command: Command, config: &RunConfig) -> Result<Output, CliError> {
    match command {
        Command::Compute if config.sweep.is_some() => {
            Err(CliError::Invalid("compute evaluates a single point; use sweep for `var`".into()))
        }
        Command::Sweep if config.sweep.is_none() => {
            Err(CliError::Invalid("sweep needs var, from, to and points".into()))
        }
        Command::Compute | Command::Sweep => match config.method {
            MethodChoice::Single(m) => run_single(config, m),
            MethodChoice::Compare => run_compare(config),
        },
        Command::Compare => run_compare(config),
        Command::Figure(p) => run_figure(config, p),
    }
}
