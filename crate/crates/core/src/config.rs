//! Plain-text run configuration.
//!
//! ```text
//! preset = weak            # optional: weak | strong | decoupled
//!
//! [network]
//! masses = 1.5, 1.0, 1.0   # brackets optional
//! external_k = [2.5, 0, 0]
//! system = 1               # observed particle, 1-based
//!
//! [couplings]
//! 1-2 = 0.01442            # spring between particles 1 and 2
//! 2-3 = 1.02236
//! 3-1 = 0.01732
//!
//! [cat]
//! d = -5.0, 6.0, 7.5
//! sigma = 0.5              # one value for all particles, or a list
//! hbar = 1.0
//!
//! [grid]
//! min = -12
//! max = 12
//! points = 1201
//!
//! [times]
//! snapshots = 0.505, 1.005
//! series_dt = 0.05
//! classical_dt = 0.005
//! t_end = 6.005            # defaults to the last snapshot
//!
//! [output]
//! dir = out
//! ```
//!
//! A preset fills in the network and packet offsets; any key given explicitly
//! overrides it. Comments start with `#` or `;`. Unknown sections and keys
//! are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{validate, CatSpec, OscillatorNetwork, ValidatedConfig};
use crate::presets;
use crate::reduced_density::Grid;

/// Line in `summary.txt` after which the echoed configuration starts.
pub const ECHO_MARKER: &str = "--- config echo ---";

pub const DEFAULT_SERIES_DT: f64 = 0.05;
pub const DEFAULT_CLASSICAL_DT: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub network: OscillatorNetwork,
    pub cat: CatSpec,
    pub grid: Grid,
    pub snapshot_times: Vec<f64>,
    pub series_dt: f64,
    pub classical_dt: f64,
    pub t_end: f64,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// A preset with every other setting at its default.
    pub fn preset(name: &str) -> Result<Self> {
        parse_config(&format!("preset = {name}\n"))
    }

    pub fn validated(&self) -> Result<ValidatedConfig> {
        validate(self.network.clone(), self.cat.clone())
    }

    /// Fully explicit configuration text that parses back to `self`.
    /// Floats are written with 17 significant digits.
    pub fn to_config_text(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        let list = |v: &[f64]| v.iter().map(|&x| f(x)).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        if let Some(p) = &self.preset {
            // every preset value is overridden below; the name is kept for reference
            let _ = writeln!(s, "preset = {p}\n");
        }
        let _ = writeln!(s, "[network]");
        let _ = writeln!(s, "masses = {}", list(&self.network.masses));
        let _ = writeln!(s, "external_k = {}", list(&self.network.external_k));
        let _ = writeln!(s, "system = {}", self.network.system_index + 1);
        let _ = writeln!(s, "\n[couplings]");
        let n = self.network.n();
        for i in 0..n {
            for j in (i + 1)..n {
                let _ = writeln!(s, "{}-{} = {}", i + 1, j + 1, f(self.network.coupling_k[i][j]));
            }
        }
        let _ = writeln!(s, "\n[cat]");
        let _ = writeln!(s, "d = {}", list(&self.cat.d));
        let _ = writeln!(s, "sigma = {}", list(&self.cat.sigma));
        let _ = writeln!(s, "hbar = {}", f(self.cat.hbar));
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "min = {}", f(self.grid.min));
        let _ = writeln!(s, "max = {}", f(self.grid.max));
        let _ = writeln!(s, "points = {}", self.grid.count);
        let _ = writeln!(s, "\n[times]");
        let _ = writeln!(s, "snapshots = {}", list(&self.snapshot_times));
        let _ = writeln!(s, "series_dt = {}", f(self.series_dt));
        let _ = writeln!(s, "classical_dt = {}", f(self.classical_dt));
        let _ = writeln!(s, "t_end = {}", f(self.t_end));
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "\n[output]\ndir = {}", dir.display());
        }
        s
    }
}

/// Reads a configuration file. A `summary.txt` from an earlier run is also
/// accepted; its echoed configuration is used.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn tokenize(text: &str) -> Result<Sections> {
    let body = match text.lines().position(|l| l.trim() == ECHO_MARKER) {
        Some(idx) => text.lines().skip(idx + 1).collect::<Vec<_>>().join("\n"),
        None => text.to_string(),
    };
    let mut sections: Sections = BTreeMap::new();
    let mut current = String::new();
    sections.insert(current.clone(), BTreeMap::new());
    for (lineno, raw) in body.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse(format!("line {}: unterminated section header", lineno + 1)))?
                .trim()
                .to_ascii_lowercase();
            current = name;
            sections.entry(current.clone()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        let entry = sections.get_mut(&current).expect("section inserted");
        if entry.insert(key.clone(), (lineno + 1, value.trim().to_string())).is_some() {
            return Err(Error::Parse(format!("duplicate key `{}`", qualified(&current, &key))));
        }
    }
    Ok(sections)
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn parse_float(section: &str, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{}`: `{v}` is not a number", qualified(section, key))))
}

fn parse_list(section: &str, key: &str, v: &str) -> Result<Vec<f64>> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_float(section, key, s))
        .collect()
}

fn parse_usize(section: &str, key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("`{}`: `{v}` is not a non-negative integer", qualified(section, key))))
}

/// Parses configuration text, applies defaults and validates the result.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut sections = tokenize(text)?;
    let mut take = |section: &str, key: &str| -> Option<String> {
        sections.get_mut(section).and_then(|s| s.remove(key)).map(|(_, v)| v)
    };

    let preset = take("", "preset");
    let base = match &preset {
        Some(name) => Some(presets::by_name(name).ok_or_else(|| {
            Error::Parse(format!(
                "`preset`: unknown preset `{name}` (expected one of {})",
                presets::NAMES.join(", ")
            ))
        })?),
        None => None,
    };

    let masses = match take("network", "masses") {
        Some(v) => parse_list("network", "masses", &v)?,
        None => match &base {
            Some((net, _)) => net.masses.clone(),
            None => return Err(Error::Parse("missing key `network.masses`".into())),
        },
    };
    let n = masses.len();
    if n == 0 {
        return Err(Error::Parse("`network.masses` is empty".into()));
    }
    let external_k = match take("network", "external_k") {
        Some(v) => parse_list("network", "external_k", &v)?,
        None => base.as_ref().map_or(vec![0.0; n], |(net, _)| net.external_k.clone()),
    };
    let system_index = match take("network", "system") {
        Some(v) => {
            let s = parse_usize("network", "system", &v)?;
            if s == 0 {
                return Err(Error::Parse("`network.system` is 1-based".into()));
            }
            s - 1
        }
        None => 0,
    };

    let mut coupling_k = match &base {
        Some((net, _)) if net.n() == n => net.coupling_k.clone(),
        _ => vec![vec![0.0; n]; n],
    };
    if let Some(entries) = sections.remove("couplings") {
        for (key, (_, v)) in entries {
            let (a, b) = key
                .split_once('-')
                .ok_or_else(|| Error::Parse(format!("`couplings.{key}`: expected `i-j`")))?;
            let i = parse_usize("couplings", &key, a)?;
            let j = parse_usize("couplings", &key, b)?;
            if i == 0 || j == 0 || i > n || j > n || i == j {
                return Err(Error::Parse(format!(
                    "`couplings.{key}`: particle indices must be distinct and in 1..={n}"
                )));
            }
            let k = parse_float("couplings", &key, &v)?;
            coupling_k[i - 1][j - 1] = k;
            coupling_k[j - 1][i - 1] = k;
        }
    }
    let mut take = |section: &str, key: &str| -> Option<String> {
        sections.get_mut(section).and_then(|s| s.remove(key)).map(|(_, v)| v)
    };

    let d = match take("cat", "d") {
        Some(v) => parse_list("cat", "d", &v)?,
        None => match &base {
            Some((_, cat)) => cat.d.clone(),
            None => return Err(Error::Parse("missing key `cat.d`".into())),
        },
    };
    let sigma = match take("cat", "sigma") {
        Some(v) => {
            let s = parse_list("cat", "sigma", &v)?;
            if s.len() == 1 {
                vec![s[0]; n]
            } else {
                s
            }
        }
        None => vec![presets::DEFAULT_SIGMA; n],
    };
    let hbar = match take("cat", "hbar") {
        Some(v) => parse_float("cat", "hbar", &v)?,
        None => presets::HBAR,
    };

    let def = Grid::default();
    let gmin = take("grid", "min").map(|v| parse_float("grid", "min", &v)).transpose()?;
    let gmax = take("grid", "max").map(|v| parse_float("grid", "max", &v)).transpose()?;
    let gpts = take("grid", "points").map(|v| parse_usize("grid", "points", &v)).transpose()?;
    let grid = Grid::new(
        gmin.unwrap_or(def.min),
        gmax.unwrap_or(def.max),
        gpts.unwrap_or(def.count),
    )?;

    let snapshot_times = match take("times", "snapshots") {
        Some(v) => parse_list("times", "snapshots", &v)?,
        None => presets::snapshot_times(),
    };
    let series_dt = take("times", "series_dt")
        .map(|v| parse_float("times", "series_dt", &v))
        .transpose()?
        .unwrap_or(DEFAULT_SERIES_DT);
    let classical_dt = take("times", "classical_dt")
        .map(|v| parse_float("times", "classical_dt", &v))
        .transpose()?
        .unwrap_or(DEFAULT_CLASSICAL_DT);
    let t_end = match take("times", "t_end") {
        Some(v) => parse_float("times", "t_end", &v)?,
        None => snapshot_times.last().copied().unwrap_or(0.0),
    };
    let output_dir = take("output", "dir").map(PathBuf::from);

    for (section, keys) in &sections {
        if let Some(key) = keys.keys().next() {
            return Err(Error::Parse(format!("unknown key `{}`", qualified(section, key))));
        }
    }

    if snapshot_times.iter().any(|&t| !(t >= 0.0 && t.is_finite()))
        || snapshot_times.windows(2).any(|w| !(w[0] < w[1]))
    {
        return Err(Error::Validation(
            "snapshot times must be non-negative and strictly ascending".into(),
        ));
    }
    if !(series_dt > 0.0) || !(classical_dt > 0.0) {
        return Err(Error::Validation("time steps must be positive".into()));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Validation(format!("t_end = {t_end} must be non-negative")));
    }

    let cfg = RunConfig {
        preset,
        network: OscillatorNetwork {
            masses,
            external_k,
            coupling_k,
            system_index,
        },
        cat: CatSpec { d, sigma, hbar },
        grid,
        snapshot_times,
        series_dt,
        classical_dt,
        t_end,
        output_dir,
    };
    cfg.validated().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(cfg)
}
