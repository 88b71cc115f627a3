//! Flat `key = value` experiment configuration.
//!
//! Files hold one assignment per line; `#` and `;` start comments and
//! `[section]` lines are ignored. Command-line flags are layered on top of
//! the file before anything is parsed, so both go through the same checks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use optlin_core::matching::MAX_RECURSION;
use optlin_core::Distribution;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Example1,
    Example2,
    Match,
    Moments,
    LpCheck,
    TwoSnr,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Example1,
        Experiment::Example2,
        Experiment::Match,
        Experiment::Moments,
        Experiment::LpCheck,
        Experiment::TwoSnr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Example1 => "example1",
            Experiment::Example2 => "example2",
            Experiment::Match => "match",
            Experiment::Moments => "moments",
            Experiment::LpCheck => "lp-check",
            Experiment::TwoSnr => "two-snr",
        }
    }

    /// Keys that affect this experiment; anything else is rejected.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Example1 => &[
                "gamma",
                "source",
                "noise",
                "step",
                "extent",
                "sweep_points",
                "out",
            ],
            Experiment::Example2 => &["source", "noise", "step", "extent", "theta_count", "out"],
            Experiment::Match => &["gamma", "noise", "out"],
            Experiment::Moments => &["gamma", "noise", "depth", "out"],
            Experiment::LpCheck => &["gamma", "source", "noise", "p", "out"],
            Experiment::TwoSnr => &["gamma", "source", "noise", "step", "out"],
        }
    }
}

impl FromStr for Experiment {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown experiment `{s}`")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `family[:param]`; the parameter is the variance for gaussian and
/// laplace and the half width for uniform and triangular. Default 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub param: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Uniform,
    Laplace,
    Triangular,
}

impl FamilySpec {
    pub fn new(family: Family, param: f64) -> Self {
        FamilySpec { family, param }
    }

    pub fn distribution(&self) -> Result<Distribution, CliError> {
        let d = match self.family {
            Family::Gaussian => Distribution::gaussian(self.param),
            Family::Uniform => Distribution::uniform(self.param),
            Family::Laplace => Distribution::laplace(self.param),
            Family::Triangular => Distribution::triangular(self.param),
        };
        d.map_err(|e| CliError::Usage(format!("{self}: {e}")))
    }
}

impl FromStr for FamilySpec {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let family = match name.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Family::Gaussian,
            "uniform" => Family::Uniform,
            "laplace" => Family::Laplace,
            "triangular" => Family::Triangular,
            other => return Err(CliError::Usage(format!("unknown family `{other}`"))),
        };
        let param = match param {
            Some(p) => positive(p, "family parameter")?,
            None => 1.0,
        };
        Ok(FamilySpec { family, param })
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.family {
            Family::Gaussian => "gaussian",
            Family::Uniform => "uniform",
            Family::Laplace => "laplace",
            Family::Triangular => "triangular",
        };
        write!(f, "{name}:{}", self.param)
    }
}

fn positive(s: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what}: `{s}` is not a number")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!(
            "{what} must be positive and finite, got {s}"
        )));
    }
    Ok(v)
}

fn count(s: &str, what: &str) -> Result<usize, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what}: `{s}` is not a non-negative integer")))
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

/// Raw settings: file values first, flags layered on top.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("line {}: expected `key = value`", n + 1))
            })?;
            map.insert(normalize_key(k), v.trim().to_string());
        }
        Ok(Settings(map))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Settings::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalize_key(key), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

/// Fully resolved and validated parameters for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub gamma: Vec<f64>,
    pub source: FamilySpec,
    pub noise: FamilySpec,
    pub step: Option<f64>,
    pub extent: Option<f64>,
    pub theta_count: usize,
    pub depth: usize,
    pub p: u32,
    pub sweep_points: usize,
    pub out: PathBuf,
}

impl Config {
    pub fn defaults(experiment: Experiment) -> Self {
        use Family::*;
        let (gamma, source, noise) = match experiment {
            Experiment::Example1 => (vec![0.1, 1.0, 10.0], Gaussian, Uniform),
            Experiment::Example2 => (vec![], Triangular, Uniform),
            Experiment::Match => (vec![2.0], Gaussian, Uniform),
            Experiment::Moments => (vec![3.0], Gaussian, Gaussian),
            Experiment::LpCheck => (vec![1.0], Gaussian, Gaussian),
            Experiment::TwoSnr => (vec![2.0, 8.0], Triangular, Uniform),
        };
        Config {
            experiment,
            gamma,
            source: FamilySpec::new(source, 1.0),
            noise: FamilySpec::new(noise, 1.0),
            step: None,
            extent: None,
            theta_count: 80,
            depth: 3,
            p: 2,
            sweep_points: 41,
            out: PathBuf::from("out"),
        }
    }

    /// Applies `settings` over the experiment defaults and validates.
    pub fn resolve(experiment: Experiment, settings: &Settings) -> Result<Self, CliError> {
        let mut c = Config::defaults(experiment);
        let allowed = experiment.keys();
        for (k, v) in &settings.0 {
            let k = k.as_str();
            if k == "experiment" {
                if v.parse::<Experiment>()? != experiment {
                    return Err(CliError::Usage(format!(
                        "config is for `{v}` but `{experiment}` was requested"
                    )));
                }
                continue;
            }
            if !allowed.contains(&k) {
                return Err(CliError::Usage(format!(
                    "unknown key `{k}` for {experiment}"
                )));
            }
            match k {
                "gamma" => {
                    c.gamma = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| positive(s, "gamma"))
                        .collect::<Result<_, _>>()?
                }
                "source" => c.source = v.parse()?,
                "noise" => c.noise = v.parse()?,
                "step" => c.step = Some(positive(v, "step")?),
                "extent" => c.extent = Some(positive(v, "extent")?),
                "theta_count" => c.theta_count = count(v, "theta_count")?,
                "depth" => c.depth = count(v, "depth")?,
                "p" => {
                    c.p = match v.trim() {
                        "2" => 2,
                        "4" => 4,
                        _ => return Err(CliError::Usage(format!("p must be 2 or 4, got {v}"))),
                    }
                }
                "sweep_points" => c.sweep_points = count(v, "sweep_points")?,
                "out" => c.out = PathBuf::from(v),
                _ => unreachable!("key list and match arms agree"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        match self.experiment {
            Experiment::Example1 if self.gamma.is_empty() => {
                return usage("example1 needs at least one gamma".into())
            }
            Experiment::Example1 if self.sweep_points < 2 => {
                return usage("sweep_points must be at least 2".into())
            }
            Experiment::Example2 if self.theta_count < 8 => {
                return usage(format!(
                    "theta_count must be at least 8 to resolve the zeros, got {}",
                    self.theta_count
                ))
            }
            Experiment::Match | Experiment::Moments | Experiment::LpCheck
                if self.gamma.len() != 1 =>
            {
                return usage(format!("{} takes exactly one gamma", self.experiment))
            }
            Experiment::Moments if !(1..=MAX_RECURSION).contains(&self.depth) => {
                return usage(format!("depth must be in 1..={MAX_RECURSION}"))
            }
            Experiment::TwoSnr if self.gamma.len() != 2 || self.gamma[0] == self.gamma[1] => {
                return usage("two-snr takes two distinct gamma values".into())
            }
            _ => {}
        }
        self.source.distribution()?;
        self.noise.distribution()?;
        Ok(())
    }

    /// Sorted `key=value` pairs for the keys this experiment reads.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |v| v.to_string());
        let mut all: Vec<(&'static str, String)> = vec![
            (
                "gamma",
                self.gamma
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("source", self.source.to_string()),
            ("noise", self.noise.to_string()),
            ("step", opt(self.step)),
            ("extent", opt(self.extent)),
            ("theta_count", self.theta_count.to_string()),
            ("depth", self.depth.to_string()),
            ("p", self.p.to_string()),
            ("sweep_points", self.sweep_points.to_string()),
            ("out", self.out.display().to_string()),
        ];
        let keys = self.experiment.keys();
        all.retain(|(k, _)| keys.contains(k));
        all.sort_by(|a, b| a.0.cmp(b.0));
        all
    }

    /// Comment line heading every output file.
    pub fn header_comment(&self) -> String {
        let body: Vec<String> = self
            .entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("# optlin {} {}", self.experiment, body.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_and_flags_layer() {
        let mut s = Settings::parse(
            "# comment\n[run]\ngamma = 0.5, 2\nnoise = laplace:2 ; trailing\ntheta-count = 9\n",
        )
        .unwrap();
        assert!(Config::resolve(Experiment::Example1, &s).is_err());
        s = Settings::parse("gamma = 0.5, 2\nnoise = laplace:2\n").unwrap();
        s.set("gamma", "3");
        let c = Config::resolve(Experiment::Example1, &s).unwrap();
        assert_eq!(c.gamma, vec![3.0]);
        assert_eq!(c.noise, FamilySpec::new(Family::Laplace, 2.0));
        assert_eq!(c.source, FamilySpec::new(Family::Gaussian, 1.0));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            (Experiment::Example1, "gamma = -1"),
            (Experiment::Example1, "gamma ="),
            (Experiment::Example2, "theta_count = 4"),
            (Experiment::Match, "noise = cauchy"),
            (Experiment::Match, "noise = uniform:0"),
            (Experiment::Match, "gamma = 1,2"),
            (Experiment::Moments, "depth = 11"),
            (Experiment::LpCheck, "p = 3"),
            (Experiment::TwoSnr, "gamma = 2,2"),
            (Experiment::Match, "experiment = moments"),
            (Experiment::Match, "bogus = 1"),
        ];
        for (e, text) in bad {
            let s = Settings::parse(text).unwrap();
            assert!(
                matches!(Config::resolve(e, &s), Err(CliError::Usage(_))),
                "{e}: {text}"
            );
        }
        assert!(Settings::parse("no equals sign").is_err());
    }

    #[test]
    fn header_is_sorted_and_scoped() {
        let c = Config::defaults(Experiment::Match);
        assert_eq!(
            c.header_comment(),
            "# optlin match gamma=2 noise=uniform:1 out=out"
        );
    }
}
