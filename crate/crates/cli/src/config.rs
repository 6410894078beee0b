//! Experiment configuration: `key = value` files merged with command-line
//! flags, flags winning.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    TorusCheck,
    CoveringVerify,
    MoyalVerify,
    SpecialDecay,
    DeltaDecay,
    TraceCompare,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::TorusCheck,
        Command::CoveringVerify,
        Command::MoyalVerify,
        Command::SpecialDecay,
        Command::DeltaDecay,
        Command::TraceCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::TorusCheck => "torus-check",
            Command::CoveringVerify => "covering-verify",
            Command::MoyalVerify => "moyal-verify",
            Command::SpecialDecay => "special-decay",
            Command::DeltaDecay => "delta-decay",
            Command::TraceCompare => "trace-compare",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
            format!("unknown command '{s}' (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    TextTable,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "text-table" => Ok(Format::TextTable),
            _ => Err(format!("unknown format '{s}' (expected csv, json or text-table)")),
        }
    }
}

/// Where a setting came from, for error messages.
#[derive(Clone, Debug)]
pub enum Origin {
    Flag,
    File(PathBuf, usize),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Flag => write!(f, "command line"),
            Origin::File(p, line) => write!(f, "{}:{line}", p.display()),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub const KEYS: [&str; 18] = [
    "command", "theta", "n", "k", "M", "L", "cutoff", "p", "seed", "sigma", "deltas", "level", "trials", "probes",
    "output", "format", "plot-script", "input",
];

/// Raw settings keyed by name, each remembering its origin.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, (String, Origin)>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut out = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError(format!("{}:{line}: expected 'key = value', got '{body}'", path.display())));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError(format!("{}:{line}: unknown key '{key}'", path.display())));
            }
            if out.values.contains_key(key) {
                return Err(ConfigError(format!("{}:{line}: duplicate key '{key}'", path.display())));
            }
            out.values.insert(key.to_string(), (value.trim().to_string(), Origin::File(path.to_path_buf(), line)));
        }
        Ok(out)
    }

    /// Flag values replace file values.
    pub fn set_flag(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), (v, Origin::Flag));
        }
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, origin)) => parse(v).map(Some).map_err(|e| ConfigError(format!("{origin}: {key}: {e}"))),
        }
    }
}

fn number<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|_| format!("'{s}' is not a valid number"))
}

fn list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| number::<T>(x.trim())).collect()
}

fn check<T>(v: T, ok: bool, msg: &str) -> Result<T, String> {
    if ok {
        Ok(v)
    } else {
        Err(msg.to_string())
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = number(s)?;
    check(v, v > 0.0 && v.is_finite(), "must be positive and finite")
}

/// A fully resolved experiment. Options left `None` take command-specific
/// defaults when the experiment runs.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    pub theta: Option<f64>,
    pub n: usize,
    pub k: Vec<u64>,
    pub points: Option<usize>,
    pub extent: Option<f64>,
    pub cutoff: Option<usize>,
    pub p: Vec<u64>,
    pub seed: u64,
    pub sigma: Option<f64>,
    pub deltas: Vec<f64>,
    pub level: usize,
    pub trials: usize,
    pub probes: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub plot_script: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, ConfigError> {
        let command = s
            .get("command", |v| v.parse::<Command>())?
            .ok_or_else(|| ConfigError("no command given (positional argument or 'command' key)".into()))?;
        let theta = s.get("theta", |v| {
            let t: f64 = number(v)?;
            if command == Command::TorusCheck {
                check(t, t.is_finite(), "must be finite")
            } else {
                check(t, t > 0.0 && t.is_finite(), "must be positive and finite")
            }
        })?;
        let cfg = ExperimentConfig {
            command,
            theta,
            n: s.get("n", |v| number::<usize>(v).and_then(|n| check(n, (1..=6).contains(&n), "must be in 1..=6")))?.unwrap_or(2),
            k: s.get("k", |v| {
                let k: Vec<u64> = list(v)?;
                check(k.clone(), !k.is_empty() && k.iter().all(|&x| (1..=16).contains(&x)), "needs one or more degrees in 1..=16")
            })?
            .unwrap_or_else(|| vec![2]),
            points: s.get("M", |v| {
                number::<usize>(v).and_then(|m| check(m, m >= 8 && m % 2 == 0 && m <= 4096, "must be even and in 8..=4096"))
            })?,
            extent: s.get("L", positive)?,
            cutoff: s.get("cutoff", |v| number::<usize>(v).and_then(|c| check(c, (1..=512).contains(&c), "must be in 1..=512")))?,
            p: s.get("p", |v| {
                let p: Vec<u64> = list(v)?;
                check(p.clone(), p.iter().all(|&x| (2..=64).contains(&x)), "tower factors must be in 2..=64")
            })?
            .unwrap_or_else(|| vec![2, 2, 2]),
            seed: s.get("seed", number::<u64>)?.unwrap_or(0),
            sigma: s.get("sigma", positive)?,
            deltas: s.get("deltas", |v| {
                let d: Vec<f64> = list(v)?;
                check(d.clone(), d.iter().all(|x| x.is_finite() && *x >= 0.0), "separations must be finite and non-negative")
            })?
            .unwrap_or_else(|| vec![4.0, 8.0, 16.0]),
            level: s.get("level", number::<usize>)?.unwrap_or(1),
            trials: s.get("trials", |v| number::<usize>(v).and_then(|t| check(t, (1..=100_000).contains(&t), "must be in 1..=100000")))?.unwrap_or(200),
            probes: s.get("probes", |v| number::<usize>(v).and_then(|t| check(t, (1..=1000).contains(&t), "must be in 1..=1000")))?.unwrap_or(8),
            output: s.get("output", |v| Ok(PathBuf::from(v)))?,
            format: s.get("format", |v| v.parse::<Format>())?.unwrap_or(Format::Csv),
            plot_script: s.get("plot-script", |v| Ok(PathBuf::from(v)))?,
            input: s.get("input", |v| Ok(PathBuf::from(v)))?,
        };
        if cfg.plot_script.is_some() {
            if cfg.output.is_none() || cfg.format != Format::Csv {
                return Err(ConfigError("plot-script needs a CSV report written with --output".into()));
            }
            if !matches!(cfg.command, Command::SpecialDecay | Command::DeltaDecay | Command::TraceCompare) {
                return Err(ConfigError(format!("{} has no plot", cfg.command.name())));
            }
        }
        Ok(cfg)
    }

    /// Canonical text of everything that affects the numbers, used for the run id.
    pub fn canonical(&self) -> String {
        format!(
            "command={};theta={:?};n={};k={:?};M={:?};L={:?};cutoff={:?};p={:?};seed={};sigma={:?};deltas={:?};level={};trials={};probes={};input={:?}",
            self.command.name(),
            self.theta,
            self.n,
            self.k,
            self.points,
            self.extent,
            self.cutoff,
            self.p,
            self.seed,
            self.sigma,
            self.deltas,
            self.level,
            self.trials,
            self.probes,
            self.input
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(text: &str) -> Result<Settings, ConfigError> {
        Settings::parse(text, Path::new("exp.conf"))
    }

    #[test]
    fn file_values_and_flag_override() {
        let mut s = settings("# tower run\ncommand = special-decay\np = 2,3\nM = 128\n\nsigma = 2.5 # wide\n").unwrap();
        s.set_flag("M", Some("64".into()));
        let c = ExperimentConfig::from_settings(&s).unwrap();
        assert_eq!(c.command, Command::SpecialDecay);
        assert_eq!(c.p, vec![2, 3]);
        assert_eq!(c.points, Some(64));
        assert_eq!(c.sigma, Some(2.5));
        assert_eq!(c.format, Format::Csv);
    }

    #[test]
    fn errors_name_the_line() {
        let e = settings("command = torus-check\nbogus = 1\n").unwrap_err();
        assert!(e.0.contains("exp.conf:2"), "{e}");
        let e = settings("command = torus-check\nno equals sign\n").unwrap_err();
        assert!(e.0.contains("exp.conf:2"), "{e}");
        let s = settings("command = moyal-verify\n\nM = 7\n").unwrap();
        let e = ExperimentConfig::from_settings(&s).unwrap_err();
        assert!(e.0.contains("exp.conf:3") && e.0.contains("M"), "{e}");
        let e = settings("M = 8\nM = 16\n").unwrap_err();
        assert!(e.0.contains("duplicate"), "{e}");
    }

    #[test]
    fn empty_tower_allowed() {
        let mut s = Settings::default();
        s.set_flag("command", Some("special-decay".into()));
        s.set_flag("p", Some("".into()));
        assert!(ExperimentConfig::from_settings(&s).unwrap().p.is_empty());
        s.set_flag("p", Some("2,1".into()));
        assert!(ExperimentConfig::from_settings(&s).is_err());
    }

    #[test]
    fn missing_command_and_bad_plot_request() {
        assert!(ExperimentConfig::from_settings(&Settings::default()).is_err());
        let mut s = Settings::default();
        s.set_flag("command", Some("delta-decay".into()));
        s.set_flag("plot-script", Some("plot.py".into()));
        assert!(ExperimentConfig::from_settings(&s).is_err());
        s.set_flag("output", Some("out.csv".into()));
        assert!(ExperimentConfig::from_settings(&s).is_ok());
    }
}
