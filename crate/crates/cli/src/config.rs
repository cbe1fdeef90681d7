//! Flat `key = value` scenario files. See `docs/config.md` for the keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tailsens_core::{CompoundCell, EngineConfig, EngineKind, GSpec, RiskPair};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{key}' on line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("key '{key}' given twice (lines {first} and {second})")]
    Duplicate { key: String, first: usize, second: usize },
    #[error("missing required key '{0}'")]
    Missing(&'static str),
    #[error("{key}: {msg}")]
    Invalid { key: String, msg: String },
}

const KEYS: &[&str] = &[
    "lambda_L",
    "xi_L",
    "sigma_L",
    "lambda_S",
    "xi_S",
    "sigma_S",
    "dependence",
    "g_a",
    "g_b",
    "g_c0",
    "g_c1",
    "alpha",
    "alpha_grid",
    "engine",
    "abs_cdf_tol",
    "sf_rel_tol",
    "quad_rel_tol",
    "max_segments",
    "panjer_step",
    "panjer_cutoff",
    "mc_samples",
    "mc_seed",
    "output",
];

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub pair: RiskPair,
    /// Strictly increasing.
    pub alphas: Vec<f64>,
    pub engine: EngineConfig,
    pub output: Option<PathBuf>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected 'key = value', got '{content}'"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    msg: "empty key or value".into(),
                });
            }
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey { key: k.into(), line });
            }
            if let Some((first, _)) = map.get(k) {
                return Err(ConfigError::Duplicate {
                    key: k.into(),
                    first: *first,
                    second: line,
                });
            }
            map.insert(k.to_string(), (line, v.to_string()));
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::Invalid {
                    key: key.into(),
                    msg: format!("cannot parse '{v}': {e}"),
                })
            })
            .transpose()
    }

    fn required(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.parse_as(key)?.ok_or(ConfigError::Missing(key))
    }
}

fn invalid(key: &str, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        msg: e.to_string(),
    }
}

fn cell(e: &Entries, side: &str) -> Result<CompoundCell, ConfigError> {
    let keys: [&'static str; 3] = match side {
        "L" => ["lambda_L", "xi_L", "sigma_L"],
        _ => ["lambda_S", "xi_S", "sigma_S"],
    };
    let [l, x, s] = [e.required(keys[0])?, e.required(keys[1])?, e.required(keys[2])?];
    CompoundCell::from_params(l, x, s).map_err(|err| invalid(&format!("cell {side}"), err))
}

/// Validates and sorts a confidence-level grid; duplicates are dropped.
pub fn normalize_alphas(mut alphas: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    if alphas.is_empty() {
        return Err(ConfigError::Missing("alpha"));
    }
    for &a in &alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(invalid("alpha", format!("confidence level must lie in (0, 1), got {a}")));
        }
    }
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    Ok(alphas)
}

pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let e = Entries::parse(text)?;
    let (cell_l, cell_s) = (cell(&e, "L")?, cell(&e, "S")?);
    let g_keys = ["g_a", "g_b", "g_c0", "g_c1"];
    let pair = match e.raw("dependence").unwrap_or("independent") {
        "independent" => {
            if let Some(k) = g_keys.iter().find(|k| e.raw(k).is_some()) {
                return Err(invalid(k, "only used with dependence = scale_mixture"));
            }
            RiskPair::independent(cell_l, cell_s)
        }
        "scale_mixture" => {
            let g = GSpec::new(e.required("g_a")?, e.required("g_b")?, e.required("g_c0")?, e.required("g_c1")?)
                .map_err(|err| invalid("g", err))?;
            RiskPair::scale_mixture(cell_l, cell_s, g)
        }
        other => {
            return Err(invalid(
                "dependence",
                format!("expected independent or scale_mixture, got '{other}'"),
            ))
        }
    };

    let alphas = match (e.raw("alpha"), e.raw("alpha_grid")) {
        (Some(_), Some(_)) => return Err(invalid("alpha_grid", "give either alpha or alpha_grid, not both")),
        (Some(_), None) => vec![e.required("alpha")?],
        (None, Some(list)) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|err| invalid("alpha_grid", format!("cannot parse '{}': {err}", s.trim())))
            })
            .collect::<Result<_, _>>()?,
        (None, None) => return Err(ConfigError::Missing("alpha")),
    };
    let alphas = normalize_alphas(alphas)?;

    let mut engine = EngineConfig::default();
    if let Some(k) = e.parse_as::<EngineKind>("engine")? {
        engine.kind = k;
    }
    macro_rules! set {
        ($key:literal, $field:ident) => {
            if let Some(v) = e.parse_as($key)? {
                engine.$field = v;
            }
        };
        ($key:literal, $field:ident, opt) => {
            if let Some(v) = e.parse_as($key)? {
                engine.$field = Some(v);
            }
        };
    }
    set!("abs_cdf_tol", abs_cdf_tol);
    set!("sf_rel_tol", sf_rel_tol);
    set!("quad_rel_tol", quad_rel_tol);
    set!("max_segments", max_segments);
    set!("panjer_step", panjer_step, opt);
    set!("panjer_cutoff", panjer_cutoff, opt);
    set!("mc_samples", mc_samples);
    set!("mc_seed", mc_seed);
    engine.validate().map_err(|err| invalid("engine", err))?;

    Ok(ScenarioConfig {
        pair,
        alphas,
        engine,
        output: e.raw("output").map(PathBuf::from),
    })
}

pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}
