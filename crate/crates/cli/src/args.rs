use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ptchain", version, about = "Spectra, exceptional points and transport of a chain with balanced gain and loss")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Spectrum,
    Transport,
    Classify,
    Census,
    Ep,
    Evolve,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, pseudo-momenta and state tags over an η sweep.
    Spectrum(Flags),
    /// Transport coefficient of every eigenstate over an η sweep.
    Transport(Flags),
    /// Opaque and transparent state counts per contact position.
    Classify(Flags),
    /// Opaque and transparent pseudo-momenta per contact position.
    Census(Flags),
    /// Exceptional points along an η range.
    Ep(Flags),
    /// Time evolution with flux and continuity check.
    Evolve(Flags),
}

impl Command {
    pub fn split(self) -> (Kind, Flags) {
        match self {
            Command::Spectrum(f) => (Kind::Spectrum, f),
            Command::Transport(f) => (Kind::Transport, f),
            Command::Classify(f) => (Kind::Classify, f),
            Command::Census(f) => (Kind::Census, f),
            Command::Ep(f) => (Kind::Ep, f),
            Command::Evolve(f) => (Kind::Evolve, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// `MIN:MAX:STEPS`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl EtaRange {
    pub fn values(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 })
            .collect()
    }
}

impl FromStr for EtaRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts[..] else {
            return Err(format!("expected MIN:MAX:STEPS, got '{s}'"));
        };
        let min: f64 = min.parse().map_err(|_| format!("bad MIN in '{s}'"))?;
        let max: f64 = max.parse().map_err(|_| format!("bad MAX in '{s}'"))?;
        let steps: usize = steps.parse().map_err(|_| format!("bad STEPS in '{s}'"))?;
        if !(min >= 0.0) || !max.is_finite() || max < min {
            return Err(format!("need 0 <= MIN <= MAX, got '{s}'"));
        }
        if steps < 2 {
            return Err(format!("need STEPS >= 2, got '{s}'"));
        }
        Ok(Self { min, max, steps })
    }
}

impl<'de> Deserialize<'de> for EtaRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `MIN:MAX`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl FromStr for KRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected MIN:MAX, got '{s}'"))?;
        let min: usize = a.parse().map_err(|_| format!("bad MIN in '{s}'"))?;
        let max: usize = b.parse().map_err(|_| format!("bad MAX in '{s}'"))?;
        if min < 1 || max < min {
            return Err(format!("need 1 <= MIN <= MAX, got '{s}'"));
        }
        Ok(Self { min, max })
    }
}

impl<'de> Deserialize<'de> for KRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Initial state for `evolve`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "String")]
pub enum Initial {
    /// 1-based site.
    Site(usize),
    /// Index into the spectrum, in output order.
    Eigenstate(usize),
    /// Text file with one `re im` (or `re,im`) pair per site.
    File(PathBuf),
}

impl fmt::Display for Initial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initial::Site(j) => write!(f, "site:{j}"),
            Initial::Eigenstate(i) => write!(f, "eigenstate:{i}"),
            Initial::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl From<Initial> for String {
    fn from(i: Initial) -> Self {
        i.to_string()
    }
}

impl FromStr for Initial {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| format!("expected site:J, eigenstate:I or file:PATH, got '{s}'"))?;
        let int = |a: &str| a.parse::<usize>().map_err(|_| format!("bad index in '{s}'"));
        match kind {
            "site" => Ok(Initial::Site(int(arg)?)),
            "eigenstate" => Ok(Initial::Eigenstate(int(arg)?)),
            "file" if !arg.is_empty() => Ok(Initial::File(PathBuf::from(arg))),
            _ => Err(format!("expected site:J, eigenstate:I or file:PATH, got '{s}'")),
        }
    }
}

impl<'de> Deserialize<'de> for Initial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Flags shared by all subcommands. A config file may set any of them under
/// the same (kebab-case) name; flags given on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Flags {
    /// Number of sites.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Gain site; the loss site is its mirror N-k+1.
    #[arg(long, conflicts_with = "k_range")]
    pub k: Option<usize>,
    /// Contact positions MIN:MAX (classify, census, ep).
    #[arg(long, value_name = "MIN:MAX")]
    pub k_range: Option<KRange>,
    /// Hopping amplitude.
    #[arg(long)]
    pub t: Option<f64>,
    /// Single coupling value.
    #[arg(long, conflicts_with = "eta_range")]
    pub eta: Option<f64>,
    /// Coupling sweep, endpoints included.
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub eta_range: Option<EtaRange>,
    /// Output file (stdout if absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Largest accepted scaled secular residual.
    #[arg(long)]
    pub tol_secular: Option<f64>,
    /// Largest accepted eigenvector residual.
    #[arg(long)]
    pub tol_eigen: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Include eigenvectors in spectrum output (JSON only).
    #[arg(long)]
    #[serde(default)]
    pub vectors: bool,
    /// Initial state for evolve: site:J, eigenstate:I or file:PATH.
    #[arg(long, value_name = "SPEC")]
    pub initial: Option<Initial>,
    /// Final time for evolve.
    #[arg(long, value_name = "T")]
    pub time: Option<f64>,
    /// Integration step for evolve.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Write every STRIDE-th step of the trajectory (the last is always written).
    #[arg(long)]
    pub stride: Option<usize>,
    /// TOML file with defaults for any of these flags.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    /// Fills every flag not given here from `file`.
    pub fn merge(self, file: Flags) -> Flags {
        let (k, k_range) = if self.k.is_some() || self.k_range.is_some() {
            (self.k, self.k_range)
        } else {
            (file.k, file.k_range)
        };
        let (eta, eta_range) = if self.eta.is_some() || self.eta_range.is_some() {
            (self.eta, self.eta_range)
        } else {
            (file.eta, file.eta_range)
        };
        Flags {
            n: self.n.or(file.n),
            k,
            k_range,
            t: self.t.or(file.t),
            eta,
            eta_range,
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            tol_secular: self.tol_secular.or(file.tol_secular),
            tol_eigen: self.tol_eigen.or(file.tol_eigen),
            threads: self.threads.or(file.threads),
            vectors: self.vectors || file.vectors,
            initial: self.initial.or(file.initial),
            time: self.time.or(file.time),
            dt: self.dt.or(file.dt),
            stride: self.stride.or(file.stride),
            config: self.config,
        }
    }

    /// Applies the config file named by `--config`, if any.
    pub fn resolve(self) -> Result<Flags, CliError> {
        match self.config.clone() {
            Some(path) => {
                let file = load_config(&path)?;
                Ok(self.merge(file))
            }
            None => Ok(self),
        }
    }
}

pub fn load_config(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut flags: Flags =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    if flags.k.is_some() && flags.k_range.is_some() {
        return Err(CliError::Usage(format!("config {}: both k and k-range set", path.display())));
    }
    if flags.eta.is_some() && flags.eta_range.is_some() {
        return Err(CliError::Usage(format!("config {}: both eta and eta-range set", path.display())));
    }
    flags.config = None;
    Ok(flags)
}
