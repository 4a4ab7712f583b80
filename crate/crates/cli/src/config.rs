//! `key = value` configuration with `#` comments, overridable from the
//! command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use elweno::problems::{NormScale, ProblemKind};
use elweno::timestepping::Scheme;
use elweno::WenoParams;

use crate::error::CliError;

/// Every key a config file may set, with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("problem", "sdf"),
    ("nx", "100"),
    ("ny", ""),
    ("cfl", "1.0"),
    ("t_end", ""),
    ("scheme", ""),
    ("weno_gamma0", "0.6"),
    ("weno_eps", "1e-10"),
    ("cg_tol", "1e-12"),
    ("cg_max_iter", "2000"),
    ("out", "out"),
    ("snapshots", ""),
    ("levels", "20,40,80"),
    ("reference", ""),
    ("cfls", "1,2,4,8,16,20"),
    ("norms", "mean"),
];

/// Raw key/value pairs; later insertions win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            raw.set(k.trim(), v.trim())?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.replace('-', "_");
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        self.entries.insert(key, value.to_string());
        Ok(())
    }

    fn get(&self, key: &str) -> &str {
        self.entries
            .get(key)
            .map(String::as_str)
            .or_else(|| KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d))
            .unwrap_or("")
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub nx: usize,
    pub ny: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub scheme: Option<Scheme>,
    pub weno: WenoParams,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub out: PathBuf,
    pub snapshots: Vec<f64>,
    pub levels: Vec<(usize, usize)>,
    /// Resolution of the self-refinement reference, as `(nx, ny)`.
    pub reference: Option<(usize, usize)>,
    pub cfls: Vec<f64>,
    pub norms: NormScale,
}

/// Final time of the standard runs of each benchmark.
pub fn default_t_end(p: ProblemKind) -> f64 {
    match p {
        ProblemKind::SwirlingDeformation(_) => 1.5,
        ProblemKind::FokkerPlanck(_) | ProblemKind::NavierStokes(_) => 0.5,
        ProblemKind::KelvinHelmholtz => 5.0,
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
}

/// `"64"` or `"64x32"`.
fn mesh(key: &str, v: &str) -> Result<(usize, usize), CliError> {
    match v.split_once(['x', 'X']) {
        Some((a, b)) => Ok((num(key, a.trim())?, num(key, b.trim())?)),
        None => {
            let n = num(key, v)?;
            Ok((n, n))
        }
    }
}

impl TryFrom<&RawConfig> for RunConfig {
    type Error = CliError;

    fn try_from(raw: &RawConfig) -> Result<Self, CliError> {
        let problem: ProblemKind = raw.get("problem").parse()?;
        let nx: usize = num("nx", raw.get("nx"))?;
        let ny = match raw.get("ny") {
            "" => nx,
            v => num("ny", v)?,
        };
        let t_end = match raw.get("t_end") {
            "" => default_t_end(problem),
            v => num("t_end", v)?,
        };
        let scheme = match raw.get("scheme") {
            "" => None,
            v => Some(v.parse()?),
        };
        let weno = WenoParams::new(num("weno_gamma0", raw.get("weno_gamma0"))?, num("weno_eps", raw.get("weno_eps"))?)?;
        let levels = raw
            .get("levels")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| mesh("levels", s))
            .collect::<Result<Vec<_>, _>>()?;
        let reference = match raw.get("reference") {
            "" => None,
            v => Some(mesh("reference", v)?),
        };
        let cfg = RunConfig {
            problem,
            nx,
            ny,
            cfl: num("cfl", raw.get("cfl"))?,
            t_end,
            scheme,
            weno,
            cg_tol: num("cg_tol", raw.get("cg_tol"))?,
            cg_max_iter: num("cg_max_iter", raw.get("cg_max_iter"))?,
            out: PathBuf::from(raw.get("out")),
            snapshots: list("snapshots", raw.get("snapshots"))?,
            levels,
            reference,
            cfls: list("cfls", raw.get("cfls"))?,
            norms: raw.get("norms").parse()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.nx < 3 || self.ny < 3 {
            return bad(format!("mesh {}x{} is too small (need at least 3 cells per direction)", self.nx, self.ny));
        }
        if !(self.cfl.is_finite() && self.cfl > 0.0) {
            return bad(format!("cfl must be positive, got {}", self.cfl));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.snapshots.iter().any(|&s| !(0.0..=self.t_end).contains(&s)) {
            return bad(format!("snapshot times must lie in [0, {}]", self.t_end));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&(a, b)| a < 3 || b < 3) {
            return bad("levels must list meshes with at least 3 cells per direction".into());
        }
        if self.cfls.is_empty() || self.cfls.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return bad("cfls must list positive numbers".into());
        }
        if !(self.cg_tol > 0.0) || self.cg_max_iter == 0 {
            return bad("cg_tol and cg_max_iter must be positive".into());
        }
        Ok(())
    }

    pub fn sim(&self, nx: usize, ny: usize, cfl: f64) -> elweno::problems::SimConfig {
        let mut s = elweno::problems::SimConfig::new(nx, cfl, self.t_end);
        s.ny = ny;
        s.scheme = self.scheme;
        s.weno = self.weno;
        s.cg_tol = self.cg_tol;
        s.cg_max_iter = self.cg_max_iter;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let raw = RawConfig::parse("# header\nproblem = kh  # trailing\n\nnx=32\nlevels = 16, 32x32\n").unwrap();
        let cfg = RunConfig::try_from(&raw).unwrap();
        assert_eq!(cfg.problem, ProblemKind::KelvinHelmholtz);
        assert_eq!((cfg.nx, cfg.ny), (32, 32));
        assert_eq!(cfg.levels, vec![(16, 16), (32, 32)]);
        assert_eq!(cfg.t_end, 5.0);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        assert!(RawConfig::parse("nx 32").is_err());
        assert!(RawConfig::parse("colour = red").is_err());
        for text in ["scheme = rk4", "cfl = -1", "nx = two", "problem = burgers", "snapshots = 9"] {
            let raw = RawConfig::parse(text).unwrap();
            assert!(matches!(RunConfig::try_from(&raw), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn dashes_map_to_underscores() {
        let mut raw = RawConfig::default();
        raw.set("t-end", "0.25").unwrap();
        assert_eq!(RunConfig::try_from(&raw).unwrap().t_end, 0.25);
    }
}
