//! Flat `key = value` scenario configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "GMTLAB_SEED";

pub const SCENARIOS: [&str; 11] = [
    "plane",
    "tilted-plane",
    "two-planes",
    "sphere",
    "sphere-cap",
    "catenoid-patch",
    "punctured-plane",
    "shrinking-sphere",
    "graph-heat",
    "translating-plane",
    "half-plane-barrier",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}` (json|csv)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    /// Mesh size of the generated geometry.
    pub spacing: f64,
    /// Top scale `R` of the checks.
    pub radius: f64,
    /// Slope of the tilted plane.
    pub slope: f64,
    /// Amplitude of graph data.
    pub amplitude: f64,
    /// Sphere radius for `sphere` and `sphere-cap`.
    pub sphere_radius: f64,
    /// Transport speed for `translating-plane`.
    pub speed: f64,
    pub c0: f64,
    pub eta: f64,
    pub alpha: f64,
    pub eps0: f64,
    pub theta: f64,
    pub delta0: f64,
    pub c_pen: f64,
    /// Constant in the weighted Huisken bound.
    pub c_huisken: f64,
    pub cfl: f64,
    pub frames: usize,
    /// Number of dyadic scales in decay fits.
    pub scales: usize,
    /// Random test fields and quadratics per check.
    pub samples: usize,
    pub out_dir: Option<PathBuf>,
    pub format: Format,
}

impl ScenarioConfig {
    /// Defaults for a scenario; unknown names are rejected.
    pub fn for_scenario(name: &str) -> Result<Self> {
        if !SCENARIOS.contains(&name) {
            return Err(Error::UnknownScenario(name.to_string()));
        }
        let mut c = Self {
            name: name.to_string(),
            seed: 42,
            spacing: 0.02,
            radius: 0.5,
            slope: 0.01,
            amplitude: 0.01,
            sphere_radius: 1.0,
            speed: 0.2,
            c0: 10.0,
            eta: 0.25,
            alpha: 0.5,
            eps0: 0.02,
            theta: 0.25,
            delta0: 0.02,
            c_pen: 1.0,
            c_huisken: 10.0,
            cfl: 0.9,
            frames: 101,
            scales: 5,
            samples: 20,
            out_dir: None,
            format: Format::Json,
        };
        match name {
            "tilted-plane" => c.spacing = 0.5 / 64.0,
            "sphere-cap" => {
                c.sphere_radius = 10.0;
                c.spacing = 0.001;
                c.radius = 0.25;
            }
            "shrinking-sphere" => c.spacing = 0.05,
            "graph-heat" => c.frames = 51,
            _ => {}
        }
        if matches!(name, "shrinking-sphere" | "graph-heat" | "translating-plane" | "half-plane-barrier") {
            c.eta = 0.05;
        }
        Ok(c)
    }

    /// Parses `key = value` lines over the scenario defaults. The `name` key,
    /// when present, selects the defaults and must come first.
    pub fn parse(text: &str, name: Option<&str>) -> Result<Self> {
        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, found `{line}`")))?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let from_file = pairs.iter().find(|p| p.1 == "name").map(|p| p.2.clone());
        let chosen = match (name, from_file.as_deref()) {
            (Some(n), _) => n.to_string(),
            (None, Some(n)) => n.to_string(),
            (None, None) => return Err(Error::InvalidArgument("no scenario name given".into())),
        };
        let mut cfg = Self::for_scenario(&chosen)?;
        for (line, k, v) in pairs {
            if k == "name" {
                continue;
            }
            cfg.set(&k, &v).map_err(|e| Error::parse(line, e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, name: Option<&str>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, name)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidArgument(format!("invalid value `{v}` for `{key}`")))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "spacing" => self.spacing = num(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "slope" => self.slope = num(key, value)?,
            "amplitude" => self.amplitude = num(key, value)?,
            "sphere_radius" => self.sphere_radius = num(key, value)?,
            "speed" => self.speed = num(key, value)?,
            "c0" => self.c0 = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "eps0" => self.eps0 = num(key, value)?,
            "theta" => self.theta = num(key, value)?,
            "delta0" => self.delta0 = num(key, value)?,
            "c_pen" => self.c_pen = num(key, value)?,
            "c_huisken" => self.c_huisken = num(key, value)?,
            "cfl" => self.cfl = num(key, value)?,
            "frames" => self.frames = num(key, value)?,
            "scales" => self.scales = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            other => return Err(Error::InvalidArgument(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `GMTLAB_SEED` when set.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV} = `{v}` is not an integer")))?;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("spacing", self.spacing),
            ("radius", self.radius),
            ("slope", self.slope),
            ("amplitude", self.amplitude),
            ("sphere_radius", self.sphere_radius),
            ("speed", self.speed),
            ("c0", self.c0),
            ("c_pen", self.c_pen),
            ("c_huisken", self.c_huisken),
            ("theta", self.theta),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("`{k}` = {v} must be positive")));
            }
        }
        for (k, v) in [("eta", self.eta), ("alpha", self.alpha), ("eps0", self.eps0), ("delta0", self.delta0)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("`{k}` = {v} must lie in (0, 1)")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Cfl(self.cfl));
        }
        if self.frames < 2 || self.scales < 3 || self.samples == 0 {
            return Err(Error::InvalidArgument("need frames >= 2, scales >= 3 and samples >= 1".into()));
        }
        Ok(())
    }

    /// Every setting as text, for report provenance.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("name".into(), self.name.clone());
        m.insert("seed".into(), self.seed.to_string());
        for (k, v) in [
            ("spacing", self.spacing),
            ("radius", self.radius),
            ("slope", self.slope),
            ("amplitude", self.amplitude),
            ("sphere_radius", self.sphere_radius),
            ("speed", self.speed),
            ("c0", self.c0),
            ("eta", self.eta),
            ("alpha", self.alpha),
            ("eps0", self.eps0),
            ("theta", self.theta),
            ("delta0", self.delta0),
            ("c_pen", self.c_pen),
            ("c_huisken", self.c_huisken),
            ("cfl", self.cfl),
        ] {
            m.insert(k.into(), v.to_string());
        }
        m.insert("frames".into(), self.frames.to_string());
        m.insert("scales".into(), self.scales.to_string());
        m.insert("samples".into(), self.samples.to_string());
        m.insert("format".into(), self.format.to_string());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = ScenarioConfig::parse("# tweak\nname = sphere\nseed = 7\neta = 0.1 # smaller\n", None).unwrap();
        assert_eq!(c.name, "sphere");
        assert_eq!(c.seed, 7);
        assert_eq!(c.eta, 0.1);
        assert_eq!(ScenarioConfig::for_scenario("plane").unwrap().seed, 42);
        let c = ScenarioConfig::parse("", Some("sphere-cap")).unwrap();
        assert_eq!(c.sphere_radius, 10.0);
    }

    #[test]
    fn errors_name_the_line() {
        assert!(matches!(ScenarioConfig::for_scenario("cube"), Err(Error::UnknownScenario(_))));
        match ScenarioConfig::parse("seed = 1\nbogus = 2\n", Some("plane")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            ScenarioConfig::parse("eta = 1.5\n", Some("plane")),
            Err(Error::InvalidArgument(_))
        ));
        assert!(ScenarioConfig::parse("seed 3\n", Some("plane")).is_err());
    }
}
