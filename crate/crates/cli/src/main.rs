use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cp_sphere::config::Settings;
use cp_sphere::error::{CliError, Origin};
use cp_sphere::{execute, Command, Preset, RunConfig};

/// Thermal Casimir-Polder potential of a particle outside a sphere.
#[derive(Parser)]
#[command(name = "cp-sphere", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Potential at a single point.
    Compute(Flags),
    /// Potential along a parameter sweep (`--var`, `--from`, `--to`, `--points`).
    Sweep(Flags),
    /// Exact, closed-form and invariant values side by side.
    Compare(Flags),
    /// Gold sphere, R = 10 um, r = 20 um: exact vs closed form and U0 over 0-600 K.
    Fig2(Flags),
    /// As fig2 with R = 1 um, r = 2 um.
    Fig3(Flags),
    /// Dielectric sphere (eps = 6): exact vs the multipole series with and without its correction.
    Fig5(Flags),
}

/// Values use the unit grammar `10um`, `9eV`, `35meV`, `300K`.
#[derive(Args, Default)]
struct Flags {
    /// `key = value` file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// sphere radius
    #[arg(long = "R")]
    radius: Option<String>,
    /// distance from the sphere centre
    #[arg(long = "r")]
    distance: Option<String>,
    /// pc, drude, gold or dielectric
    #[arg(long)]
    material: Option<String>,
    /// Drude plasma frequency as an energy
    #[arg(long = "omega-p")]
    omega_p: Option<String>,
    /// Drude damping as an energy
    #[arg(long)]
    gamma: Option<String>,
    /// static permittivity of a dielectric sphere
    #[arg(long)]
    eps: Option<String>,
    /// signed transition energies, comma separated (negative = downward)
    #[arg(long = "transition-energy", allow_hyphen_values = true)]
    transition_energy: Option<String>,
    /// signed retardation parameters r w / c instead of energies
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// |d|^2 in C^2 m^2, or `reduced` (default) for U 24 pi eps0 r^3 / |d|^2
    #[arg(long)]
    d2: Option<String>,
    #[arg(long)]
    temperature: Option<String>,
    /// swept variable: T, r, R or x
    #[arg(long)]
    var: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long)]
    points: Option<String>,
    /// logarithmic spacing and axis
    #[arg(long)]
    log: bool,
    /// exact, zero-t, invariant, closed-form, spectroscopic, dielectric, dielectric-static or compare
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// CSV output path (default: standard output)
    #[arg(long)]
    out: Option<String>,
    /// SVG chart path
    #[arg(long)]
    plot: Option<String>,
    /// worker threads (default: $CP_SPHERE_WORKERS, else all cores)
    #[arg(long)]
    workers: Option<String>,
}

impl Flags {
    fn settings(&self) -> Settings {
        let mut s = Settings::default();
        let pairs = [
            ("R", &self.radius),
            ("r", &self.distance),
            ("material", &self.material),
            ("omega_p", &self.omega_p),
            ("gamma", &self.gamma),
            ("eps", &self.eps),
            ("transition_energy", &self.transition_energy),
            ("x", &self.x),
            ("d2", &self.d2),
            ("temperature", &self.temperature),
            ("var", &self.var),
            ("from", &self.from),
            ("to", &self.to),
            ("points", &self.points),
            ("method", &self.method),
            ("tol", &self.tol),
            ("out", &self.out),
            ("plot", &self.plot),
            ("workers", &self.workers),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                s.set(key, v.clone(), Origin::Flag);
            }
        }
        if self.log {
            s.set("log", "true", Origin::Flag);
        }
        s
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, flags) = match cli.command {
        Sub::Compute(f) => (Command::Compute, f),
        Sub::Sweep(f) => (Command::Sweep, f),
        Sub::Compare(f) => (Command::Compare, f),
        Sub::Fig2(f) => (Command::Figure(Preset::MetalLarge), f),
        Sub::Fig3(f) => (Command::Figure(Preset::MetalSmall), f),
        Sub::Fig5(f) => (Command::Figure(Preset::Dielectric), f),
    };
    let mut settings = match command {
        Command::Figure(p) => p.settings(),
        _ => Settings::default(),
    };
    if let Some(path) = &flags.config {
        settings.merge(Settings::from_file(path)?);
    }
    settings.merge(flags.settings());
    if let (Command::Figure(p), Some((_, origin))) = (command, settings.get("method")) {
        return Err(CliError::Config {
            key: "method".into(),
            origin: origin.clone(),
            message: format!("{} fixes its methods", p.name()),
        });
    }
    let config = RunConfig::from_settings(&settings)?;
    if config.plot.is_some() && config.sweep.is_none() {
        return Err(CliError::Invalid("a plot needs a sweep".into()));
    }

    let output = execute(command, &config)?;
    for w in &output.warnings {
        eprintln!("cp-sphere: warning: {w}");
    }
    match &config.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
            output.table.write_to(std::io::BufWriter::new(file)).map_err(|e| CliError::io(path.display().to_string(), e))?;
        }
        None => {
            let stdout = std::io::stdout();
            output.table.write_to(stdout.lock()).map_err(|e| CliError::io("stdout", e))?;
        }
    }
    if let (Some(path), Some(chart)) = (&config.plot, &output.chart) {
        std::fs::write(path, chart.to_svg()).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Display already carries the underlying cause.
            let _ = writeln!(std::io::stderr(), "cp-sphere: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
