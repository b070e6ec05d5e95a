//! Scalar grammar `<number><unit>`, e.g. `10um`, `9eV`, `35meV`, `300K`.

use cpsphere::constants::ev_to_rad_per_s;

/// Physical dimension a value is parsed as.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    /// metres; suffixes `m`, `cm`, `mm`, `um`/`µm`, `nm`
    Length,
    /// angular frequency from an energy; suffixes `eV`, `meV`, `ueV`, or
    /// `rad/s` for a bare angular frequency
    Energy,
    /// kelvin; suffix `K`, optional
    Temperature,
    /// plain number, no suffix allowed
    Number,
}

impl Dimension {
    fn expected(self) -> &'static str {
        match self {
            Dimension::Length => "a length such as 10um (m, cm, mm, um, nm)",
            Dimension::Energy => "an energy such as 9eV (eV, meV, ueV) or an angular frequency in rad/s",
            Dimension::Temperature => "a temperature such as 300K",
            Dimension::Number => "a plain number",
        }
    }
}

/// Splits `s` into its leading float literal and the rest.
fn split_number(s: &str) -> Option<(f64, &str)> {
    let s = s.trim();
    // longest prefix that parses; float literals are short so this is cheap
    (1..=s.len())
        .rev()
        .filter(|&i| s.is_char_boundary(i))
        .find_map(|i| s[..i].parse::<f64>().ok().map(|v| (v, s[i..].trim())))
        .filter(|(v, _)| v.is_finite())
}

/// Parses a value in SI units (rad/s for energies).
pub fn parse_quantity(s: &str, dim: Dimension) -> Result<f64, String> {
    let bad = || format!("malformed value `{s}`: expected {}", dim.expected());
    let (v, unit) = split_number(s).ok_or_else(bad)?;
    // Divide by the exact power of ten so that `10um` is the double nearest 1e-5.
    let divisor = match (dim, unit) {
        (Dimension::Number, "") => 1.0,
        (Dimension::Length, "m") => 1.0,
        (Dimension::Length, "cm") => 1e2,
        (Dimension::Length, "mm") => 1e3,
        (Dimension::Length, "um" | "µm") => 1e6,
        (Dimension::Length, "nm") => 1e9,
        (Dimension::Energy, "eV") => return Ok(ev_to_rad_per_s(v)),
        (Dimension::Energy, "meV") => return Ok(ev_to_rad_per_s(v / 1e3)),
        (Dimension::Energy, "ueV" | "µeV") => return Ok(ev_to_rad_per_s(v / 1e6)),
        (Dimension::Energy, "rad/s") => 1.0,
        (Dimension::Temperature, "K" | "") => 1.0,
        _ => return Err(bad()),
    };
    Ok(v / divisor)
}
