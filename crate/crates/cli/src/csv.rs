//! Result files: one header line
//! `# cp-sphere v1 units=<J|reduced> columns=a,b,...`, then one row per
//! point with every value in `{:.16e}` (17 significant digits, which
//! round-trips an `f64` exactly).

use std::fmt::Write as _;
use std::io::Write;

pub const MAGIC: &str = "# cp-sphere v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Units {
    Joules,
    Reduced,
}

impl Units {
    fn tag(self) -> &'static str {
        match self {
            Units::Joules => "J",
            Units::Reduced => "reduced",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub units: Units,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(units: Units, columns: &[&str]) -> Self {
        Table {
            units,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC} units={} columns={}\n", self.units.tag(), self.columns.join(","));
        for row in &self.rows {
            assert_eq!(row.len(), self.columns.len(), "row width must match the header");
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{v:.16e}").expect("writing to a String");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_text().as_bytes())
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        let rest = header
            .strip_prefix(MAGIC)
            .ok_or_else(|| format!("not a cp-sphere v1 file: `{header}`"))?;
        let mut units = None;
        let mut columns = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("units", "J")) => units = Some(Units::Joules),
                Some(("units", "reduced")) => units = Some(Units::Reduced),
                Some(("columns", c)) => columns = Some(c.split(',').map(str::to_string).collect::<Vec<_>>()),
                _ => return Err(format!("unexpected header field `{field}`")),
            }
        }
        let units = units.ok_or("header lacks units=")?;
        let columns = columns.ok_or("header lacks columns=")?;
        let rows = lines
            .enumerate()
            .map(|(i, line)| {
                let row = line
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2)))
                    .collect::<Result<Vec<_>, _>>()?;
                if row.len() != columns.len() {
                    return Err(format!("line {}: {} values for {} columns", i + 2, row.len(), columns.len()));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(Table { units, columns, rows })
    }
}
