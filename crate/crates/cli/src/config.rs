//! Run configuration: `key = value` files, flags and presets, merged with
//! preset < file < flag precedence and then validated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cpsphere::{Method, PermittivityModel};

use crate::error::{CliError, Origin};
use crate::units::{parse_quantity, Dimension};

/// Every key a file or flag may set.
pub const KEYS: &[&str] = &[
    "R",
    "r",
    "material",
    "omega_p",
    "gamma",
    "eps",
    "transition_energy",
    "x",
    "d2",
    "temperature",
    "var",
    "from",
    "to",
    "points",
    "log",
    "method",
    "tol",
    "out",
    "plot",
    "workers",
];

pub const DEFAULT_TOL: f64 = 1e-10;
pub const WORKERS_ENV: &str = "CP_SPHERE_WORKERS";

/// Unparsed values with their origins.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    entries: BTreeMap<&'static str, (String, Origin)>,
}

fn known_key(key: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|k| *k == key)
}

impl Settings {
    /// Sets `key`, replacing any earlier value. Panics on an unknown key,
    /// which would be a programming error in the caller.
    pub fn set(&mut self, key: &str, value: impl Into<String>, origin: Origin) {
        let key = known_key(key).unwrap_or_else(|| panic!("unknown configuration key {key}"));
        self.entries.insert(key, (value.into(), origin));
    }

    pub fn get(&self, key: &str) -> Option<&(String, Origin)> {
        self.entries.get(key)
    }

    /// Later values win.
    pub fn merge(&mut self, other: Settings) {
        self.entries.extend(other.entries);
    }

    pub fn parse_text(text: &str, path: &str) -> Result<Self, CliError> {
        let mut out = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: String| CliError::Syntax { path: path.to_string(), line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            let key = known_key(key).ok_or_else(|| {
                syntax(format!("unknown key `{key}`; known keys: {}", KEYS.join(", ")))
            })?;
            out.entries.insert(key, (value.trim().to_string(), Origin::File { path: path.to_string(), line }));
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(&name, e))?;
        Self::parse_text(&text, &name)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> CliError {
        let origin = self.entries.get(key).map(|(_, o)| o.clone()).unwrap_or(Origin::Default);
        CliError::Config { key: key.to_string(), origin, message: message.into() }
    }

    fn quantity(&self, key: &str, dim: Dimension) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|(v, _)| parse_quantity(v, dim).map_err(|m| self.err(key, m)))
            .transpose()
    }

    fn list(&self, key: &str, dim: Dimension) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key)
            .map(|(v, _)| {
                v.split(',')
                    .map(|s| parse_quantity(s, dim).map_err(|m| self.err(key, m)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.get(key).map(|(v, _)| v.as_str())
    }
}

/// Swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    Temperature,
    Distance,
    Radius,
    Retardation,
}

impl Var {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "T" => Var::Temperature,
            "r" => Var::Distance,
            "R" => Var::Radius,
            "x" => Var::Retardation,
            _ => return None,
        })
    }

    fn dimension(self) -> Dimension {
        match self {
            Var::Temperature => Dimension::Temperature,
            Var::Distance | Var::Radius => Dimension::Length,
            Var::Retardation => Dimension::Number,
        }
    }

    /// CSV column name of the swept value.
    pub fn column(self) -> &'static str {
        match self {
            Var::Temperature => "T_K",
            Var::Distance => "r_m",
            Var::Radius => "R_m",
            Var::Retardation => "x",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub var: Var,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub log: bool,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    return self.to;
                }
                let t = i as f64 / (n - 1) as f64;
                if self.log {
                    (self.from.ln() + t * (self.to.ln() - self.from.ln())).exp()
                } else {
                    self.from + t * (self.to - self.from)
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    Single(Method),
    Compare,
}

impl MethodChoice {
    fn parse(s: &str) -> Option<Self> {
        Some(MethodChoice::Single(match s {
            "exact" => Method::Exact,
            "zero-t" => Method::ZeroTemperature,
            "invariant" => Method::Invariant,
            "closed-form" => Method::ClosedForm,
            "spectroscopic" => Method::Spectroscopic,
            "dielectric" => Method::Dielectric,
            "dielectric-static" => Method::DielectricStatic,
            "compare" => return Some(MethodChoice::Compare),
            _ => return None,
        }))
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodChoice::Compare => "compare",
            MethodChoice::Single(m) => match m {
                Method::Exact => "exact",
                Method::ZeroTemperature => "zero-t",
                Method::Invariant => "invariant",
                Method::ClosedForm => "closed-form",
                Method::Spectroscopic => "spectroscopic",
                Method::Dielectric => "dielectric",
                Method::DielectricStatic => "dielectric-static",
            },
        }
    }

    fn needs_material(self) -> bool {
        !matches!(self, MethodChoice::Single(Method::Invariant))
    }

    fn needs_temperature(self) -> bool {
        !matches!(
            self,
            MethodChoice::Single(Method::Invariant | Method::ZeroTemperature)
        )
    }
}

/// How the transition frequencies are given.
#[derive(Clone, Debug, PartialEq)]
pub enum Transitions {
    /// Signed angular frequencies (rad/s), summed over.
    Frequencies(Vec<f64>),
    /// Signed retardation parameters `r w / c`; the frequency follows the
    /// current distance.
    Retardation(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub radius: f64,
    pub distance: f64,
    pub material: Option<PermittivityModel>,
    pub transitions: Transitions,
    /// `None`: reduced output `U 24 pi eps0 r^3 / |d|^2`.
    pub d2: Option<f64>,
    pub temperature: Option<f64>,
    pub sweep: Option<Sweep>,
    pub method: MethodChoice,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl RunConfig {
    /// Validates merged settings.
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let method = match s.text("method") {
            None => MethodChoice::Single(Method::Exact),
            Some(m) => MethodChoice::parse(m).ok_or_else(|| {
                s.err(
                    "method",
                    format!(
                        "unknown method `{m}`; use exact, zero-t, invariant, closed-form, spectroscopic, \
                         dielectric, dielectric-static or compare"
                    ),
                )
            })?,
        };

        let sweep = match s.text("var") {
            None => {
                for key in ["from", "to", "points", "log"] {
                    if s.get(key).is_some() {
                        return Err(s.err(key, "only meaningful with `var`"));
                    }
                }
                None
            }
            Some(v) => {
                let var = Var::parse(v).ok_or_else(|| s.err("var", format!("unknown variable `{v}`; use T, r, R or x")))?;
                let need = |key: &str| {
                    s.quantity(key, var.dimension())?
                        .ok_or_else(|| s.err(key, format!("required when sweeping `{v}`")))
                };
                let from = need("from")?;
                let to = need("to")?;
                let points = match s.text("points") {
                    None => return Err(s.err("points", "required when sweeping")),
                    Some(p) => p.parse::<usize>().map_err(|_| s.err("points", format!("expected a count, got `{p}`")))?,
                };
                let log = match s.text("log") {
                    None => false,
                    Some("true" | "yes" | "1") => true,
                    Some("false" | "no" | "0") => false,
                    Some(o) => return Err(s.err("log", format!("expected true or false, got `{o}`"))),
                };
                if points < 2 {
                    return Err(s.err("points", format!("a sweep needs at least 2 points, got {points}")));
                }
                if from >= to {
                    return Err(s.err("to", format!("sweep needs from < to, got {from} .. {to}")));
                }
                if log && from <= 0.0 {
                    return Err(s.err("from", "a logarithmic sweep needs from > 0"));
                }
                Some(Sweep { var, from, to, points, log })
            }
        };
        let swept = |v: Var| sweep.is_some_and(|sw| sw.var == v);

        let mut missing = vec![];
        let radius = s.quantity("R", Dimension::Length)?;
        let distance = s.quantity("r", Dimension::Length)?;
        if radius.is_none() && !swept(Var::Radius) {
            missing.push("R");
        }
        if distance.is_none() && !swept(Var::Distance) {
            missing.push("r");
        }
        if swept(Var::Radius) && radius.is_some() {
            return Err(s.err("R", "set both as a fixed value and as the swept variable"));
        }
        if swept(Var::Distance) && distance.is_some() {
            return Err(s.err("r", "set both as a fixed value and as the swept variable"));
        }

        let energies = s.list("transition_energy", Dimension::Energy)?;
        let xs = s.list("x", Dimension::Number)?;
        let transitions = match (energies, xs) {
            (Some(_), Some(_)) => return Err(s.err("x", "give either `transition_energy` or `x`, not both")),
            (Some(e), None) => {
                if swept(Var::Retardation) {
                    if e.len() != 1 {
                        return Err(s.err("transition_energy", "an x sweep takes at most one transition (its sign)"));
                    }
                    Transitions::Retardation(vec![e[0].signum()])
                } else {
                    Transitions::Frequencies(e)
                }
            }
            (None, Some(x)) => {
                if swept(Var::Retardation) {
                    return Err(s.err("x", "set both as a fixed value and as the swept variable"));
                }
                Transitions::Retardation(x)
            }
            (None, None) if swept(Var::Retardation) => Transitions::Retardation(vec![1.0]),
            (None, None) => {
                missing.push("transition_energy (or x)");
                Transitions::Frequencies(vec![])
            }
        };
        let (Transitions::Frequencies(list) | Transitions::Retardation(list)) = &transitions;
        if let Some(bad) = list.iter().find(|v| !(**v != 0.0)) {
            let key = if matches!(transitions, Transitions::Frequencies(_)) { "transition_energy" } else { "x" };
            return Err(s.err(key, format!("transition frequencies must be non-zero, got {bad}")));
        }

        let temperature = s.quantity("temperature", Dimension::Temperature)?;
        if swept(Var::Temperature) && temperature.is_some() {
            return Err(s.err("temperature", "set both as a fixed value and as the swept variable"));
        }
        if method.needs_temperature() && temperature.is_none() && !swept(Var::Temperature) {
            missing.push("temperature");
        }
        if let Some(t) = temperature {
            if t < 0.0 {
                return Err(s.err("temperature", format!("must be >= 0 K, got {t}")));
            }
        }

        let material = match s.text("material") {
            None => {
                if method.needs_material() {
                    missing.push("material");
                }
                None
            }
            Some(m) => Some(Self::material(s, m, &mut missing)?),
        };

        if !missing.is_empty() {
            return Err(CliError::Invalid(format!(
                "method {} needs keys: {}",
                method.name(),
                missing.join(", ")
            )));
        }

        let d2 = match s.text("d2") {
            None | Some("reduced") => None,
            Some(v) => {
                let d2 = parse_quantity(v, Dimension::Number).map_err(|m| s.err("d2", m))?;
                if d2 < 0.0 {
                    return Err(s.err("d2", format!("must be >= 0, got {d2}")));
                }
                Some(d2)
            }
        };
        let tol = s.quantity("tol", Dimension::Number)?.unwrap_or(DEFAULT_TOL);
        let (lo, hi) = cpsphere::greens::TOL_RANGE;
        if !(lo..=hi).contains(&tol) {
            return Err(s.err("tol", format!("must lie in [{lo:e}, {hi:e}], got {tol:e}")));
        }
        let workers = match s.text("workers") {
            Some(w) => w.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
                s.err("workers", format!("expected a positive count, got `{w}`"))
            })?,
            None => match std::env::var(WORKERS_ENV) {
                Ok(w) => w.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Invalid(format!(
                    "{WORKERS_ENV} must be a positive count, got `{w}`"
                )))?,
                Err(_) => default_workers(),
            },
        };

        let config = RunConfig {
            radius: radius.unwrap_or(f64::NAN),
            distance: distance.unwrap_or(f64::NAN),
            material,
            transitions,
            d2,
            temperature,
            sweep,
            method,
            tol,
            out: s.text("out").map(PathBuf::from),
            plot: s.text("plot").map(PathBuf::from),
            workers,
        };
        config.check_geometry(s)?;
        Ok(config)
    }

    fn material(s: &Settings, m: &str, missing: &mut Vec<&'static str>) -> Result<PermittivityModel, CliError> {
        let built = match m {
            "pc" => Ok(PermittivityModel::PerfectConductor),
            "gold" => Ok(PermittivityModel::gold()),
            "drude" => {
                let wp = s.quantity("omega_p", Dimension::Energy)?;
                let g = s.quantity("gamma", Dimension::Energy)?;
                if wp.is_none() {
                    missing.push("omega_p");
                }
                if g.is_none() {
                    missing.push("gamma");
                }
                match (wp, g) {
                    (Some(wp), Some(g)) => PermittivityModel::drude(wp, g),
                    _ => Ok(PermittivityModel::PerfectConductor),
                }
            }
            "dielectric" => match s.quantity("eps", Dimension::Number)? {
                Some(e) => PermittivityModel::dielectric(e),
                None => {
                    missing.push("eps");
                    Ok(PermittivityModel::PerfectConductor)
                }
            },
            other => {
                return Err(s.err("material", format!("unknown material `{other}`; use pc, drude, gold or dielectric")))
            }
        };
        built.map_err(|e| s.err("material", e.to_string()))
    }

    /// `0 < R < r` at the fixed values and across any geometry sweep.
    fn check_geometry(&self, s: &Settings) -> Result<(), CliError> {
        let (rs, ds): (Vec<f64>, Vec<f64>) = match self.sweep {
            Some(Sweep { var: Var::Radius, from, to, .. }) => (vec![from, to], vec![self.distance]),
            Some(Sweep { var: Var::Distance, from, to, .. }) => (vec![self.radius], vec![from, to]),
            _ => (vec![self.radius], vec![self.distance]),
        };
        for &radius in &rs {
            for &distance in &ds {
                if radius <= 0.0 {
                    return Err(s.err("R", format!("sphere radius must be positive, got {radius}")));
                }
                if radius >= distance {
                    return Err(s.err(
                        "R",
                        format!("R < r violated: R = {radius:e} m, r = {distance:e} m"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Output in reduced units rather than joules.
    pub fn reduced(&self) -> bool {
        self.d2.is_none()
    }
}
