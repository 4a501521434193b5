//! Flat key=value experiment configuration: optional config file merged with
//! command-line flags (flags win), resolved into a fully-defaulted
//! [`ExperimentConfig`] that is echoed verbatim into every run manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

/// Configuration-stage error; maps to exit code 64.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CfgResult<T> = Result<T, ConfigError>;

/// Ordered key=value store; later inserts override earlier ones.
#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    /// Parse a flat key=value file. Blank lines and `#` comments are
    /// ignored; anything else without `=` is an error with its line number.
    pub fn from_file(path: &Path) -> CfgResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut kv = KeyValues::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!(
                    "{}:{}: expected key=value, got '{line}'",
                    path.display(),
                    lineno + 1
                ))
            })?;
            kv.set(key.trim(), value.trim());
        }
        Ok(kv)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Which normalized error an error-distribution run studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindChoice {
    UN,
    VN,
}

/// Fully resolved experiment configuration, defaults applied.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: String,
    pub params: Vec<(String, f64)>,
    pub scheme: String,
    pub n_list: Vec<usize>,
    pub m: usize,
    pub horizon: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub seed: u64,
    pub ref_refine: usize,
    pub out: PathBuf,
    pub alpha: f64,
    pub kind: KindChoice,
    pub t_list: Option<Vec<f64>>,
    pub threads: usize,
    /// Override for the substep count of every numeric flow in the model.
    pub flow_substeps: Option<u32>,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> CfgResult<T> {
    value
        .parse::<T>()
        .map_err(|_| ConfigError(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> CfgResult<Vec<T>> {
    value
        .split(',')
        .map(|s| parse_num(key, s.trim()))
        .collect()
}

impl ExperimentConfig {
    /// Resolve a merged key=value map, applying defaults and validating the
    /// cross-field invariants (seed mandatory, step counts powers of two).
    pub fn resolve(kv: &KeyValues) -> CfgResult<Self> {
        const KNOWN: [&str; 14] = [
            "model", "scheme", "N", "M", "T", "x0", "seed", "ref_refine", "out", "alpha",
            "kind", "t_list", "threads", "flow_substeps",
        ];
        let mut params = Vec::new();
        for (key, value) in kv.iter() {
            if let Some(name) = key.strip_prefix("param.") {
                params.push((name.to_string(), parse_num::<f64>(key, value)?));
                continue;
            }
            if !KNOWN.contains(&key) {
                return Err(ConfigError(format!("unknown key '{key}'")));
            }
        }

        let seed = match kv.get("seed") {
            Some(v) => parse_num::<u64>("seed", v)?,
            None => {
                return Err(ConfigError(
                    "seed is required; there is no wall-clock default".into(),
                ))
            }
        };
        let n_list: Vec<usize> = match kv.get("N") {
            Some(v) => parse_list("N", v)?,
            None => vec![16, 32, 64, 128],
        };
        if n_list.is_empty() {
            return Err(ConfigError("N: empty list".into()));
        }
        for &n in &n_list {
            if n == 0 || !n.is_power_of_two() {
                return Err(ConfigError(format!("N: {n} is not a power of two")));
            }
        }
        let kind = match kv.get("kind").unwrap_or("U_N") {
            "U_N" | "u_n" | "U" => KindChoice::UN,
            "V_N" | "v_n" | "V" => KindChoice::VN,
            other => return Err(ConfigError(format!("kind: expected U_N or V_N, got '{other}'"))),
        };
        let cfg = ExperimentConfig {
            model: kv.get("model").unwrap_or("bs").to_string(),
            params,
            scheme: kv.get("scheme").unwrap_or("nv").to_string(),
            n_list,
            m: match kv.get("M") {
                Some(v) => parse_num("M", v)?,
                None => 1000,
            },
            horizon: kv.get("T").map(|v| parse_num("T", v)).transpose()?,
            x0: kv.get("x0").map(|v| parse_list("x0", v)).transpose()?,
            seed,
            ref_refine: match kv.get("ref_refine") {
                Some(v) => parse_num("ref_refine", v)?,
                None => 16,
            },
            out: PathBuf::from(kv.get("out").unwrap_or(".")),
            alpha: match kv.get("alpha") {
                Some(v) => parse_num("alpha", v)?,
                None => 0.05,
            },
            kind,
            t_list: kv.get("t_list").map(|v| parse_list("t_list", v)).transpose()?,
            threads: match kv.get("threads") {
                Some(v) => parse_num("threads", v)?,
                None => 0,
            },
            flow_substeps: kv
                .get("flow_substeps")
                .map(|v| parse_num("flow_substeps", v))
                .transpose()?,
        };
        if let Some(t) = cfg.horizon {
            if !(t > 0.0) {
                return Err(ConfigError(format!("T: must be positive, got {t}")));
            }
        }
        if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
            return Err(ConfigError(format!("alpha: must lie in (0,1), got {}", cfg.alpha)));
        }
        Ok(cfg)
    }

    /// The resolved configuration as manifest rows, defaults included.
    pub fn manifest_rows(&self) -> Vec<(String, String)> {
        let join_f = |xs: &[f64]| {
            xs.iter()
                .map(|v| crate::output::fmt17(*v))
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut rows = vec![
            ("model".into(), self.model.clone()),
            ("scheme".into(), self.scheme.clone()),
            (
                "N".into(),
                self.n_list
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("M".into(), self.m.to_string()),
            (
                "T".into(),
                self.horizon.map_or("model-default".into(), |t| crate::output::fmt17(t)),
            ),
            (
                "x0".into(),
                self.x0.as_deref().map_or("model-default".into(), join_f),
            ),
            ("seed".into(), self.seed.to_string()),
            ("ref_refine".into(), self.ref_refine.to_string()),
            ("out".into(), self.out.display().to_string()),
            ("alpha".into(), crate::output::fmt17(self.alpha)),
            (
                "kind".into(),
                match self.kind {
                    KindChoice::UN => "U_N".into(),
                    KindChoice::VN => "V_N".into(),
                },
            ),
            (
                "t_list".into(),
                self.t_list.as_deref().map_or("default".into(), join_f),
            ),
            ("threads".into(), self.threads.to_string()),
            (
                "flow_substeps".into(),
                self.flow_substeps
                    .map_or("model-default".into(), |s| s.to_string()),
            ),
        ];
        for (name, value) in &self.params {
            rows.push((format!("param.{name}"), crate::output::fmt17(*value)));
        }
        rows
    }
}
