//! Flat `section.key = value` experiment configs.
//!
//! Values are numbers, booleans, quoted or bare strings, or `[a, b, ...]`
//! lists. `#` starts a comment. Every key is checked against [`SCHEMA`]
//! before anything runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "\"{s}\""),
            Value::List(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Int,
    Float,
    Bool,
    Str,
    Choice(&'static [&'static str]),
    /// A number or a list of numbers.
    Floats,
    Ints,
}

const MODEL_KINDS: &[&str] = &["iid-expfam", "glm", "ising", "gmrf", "boltzmann", "cox", "median"];

/// Every accepted key with its type.
const SCHEMA: &[(&str, Kind)] = &[
    ("experiment", Kind::Str),
    ("seed", Kind::Int),
    ("output", Kind::Str),
    ("model.kind", Kind::Choice(MODEL_KINDS)),
    (
        "model.family",
        Kind::Choice(&["gaussian", "bernoulli", "poisson", "plus-minus"]),
    ),
    ("model.glm", Kind::Choice(&["linear", "logistic", "poisson"])),
    ("model.sigma2", Kind::Float),
    ("model.power", Kind::Float),
    ("model.features", Kind::Choice(&["isotropic", "axial", "per-neighbor"])),
    ("model.gamma", Kind::Float),
    ("model.cdf", Kind::Choice(&["logistic", "gaussian"])),
    ("data.source", Kind::Choice(&["generate", "file"])),
    ("data.path", Kind::Str),
    ("data.n", Kind::Ints),
    ("data.theta", Kind::Floats),
    (
        "data.covariates",
        Kind::Choice(&["iid-gaussian", "rademacher", "bounded-uniform"]),
    ),
    ("data.covariate_scale", Kind::Float),
    ("data.covariate_bounds", Kind::Floats),
    ("data.sigma", Kind::Float),
    ("data.m", Kind::Int),
    ("data.L", Kind::Int),
    ("data.sweeps", Kind::Int),
    ("data.burn_sweeps", Kind::Int),
    ("data.d", Kind::Int),
    ("data.baseline", Kind::Choice(&["exponential", "weibull"])),
    ("data.baseline_rate", Kind::Float),
    ("data.weibull_shape", Kind::Float),
    ("data.weibull_scale", Kind::Float),
    ("data.censoring", Kind::Choice(&["none", "exponential", "uniform"])),
    ("data.censoring_rate", Kind::Float),
    ("data.censoring_bound", Kind::Float),
    ("data.noise", Kind::Choice(&["gaussian", "cauchy", "mixture"])),
    ("data.noise_scale", Kind::Float),
    ("data.contamination", Kind::Float),
    ("data.outlier_scale", Kind::Float),
    ("prior.kind", Kind::Choice(&["uniform", "gaussian", "logistic"])),
    ("prior.mean", Kind::Floats),
    ("prior.scale", Kind::Float),
    ("prior.lower", Kind::Floats),
    ("prior.upper", Kind::Floats),
    ("optimizer.tol", Kind::Float),
    ("optimizer.max_iter", Kind::Int),
    ("optimizer.init", Kind::Floats),
    ("sampler.enabled", Kind::Bool),
    ("sampler.steps", Kind::Int),
    ("sampler.burn_in", Kind::Int),
    ("sampler.chains", Kind::Int),
    ("diagnostics.tv", Kind::Bool),
    ("diagnostics.grid_resolution", Kind::Int),
    ("diagnostics.grid_halfwidth", Kind::Float),
    ("diagnostics.concentration", Kind::Floats),
    ("diagnostics.audit", Kind::Bool),
    ("diagnostics.audit_radius", Kind::Float),
    ("diagnostics.sandwich", Kind::Bool),
    ("coverage.enabled", Kind::Bool),
    ("coverage.rho", Kind::Float),
    ("coverage.reps", Kind::Int),
    ("coverage.calibrate", Kind::Bool),
    ("coverage.steps", Kind::Int),
    ("coverage.burn_in", Kind::Int),
];

#[derive(Debug, thiserror::Error)]
#[error("{file}:{line}: {message}")]
pub struct ConfigError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

/// Parsed key/value pairs with the line each came from.
#[derive(Clone, Debug)]
pub struct RawConfig {
    pub file: String,
    pub entries: BTreeMap<String, (Value, usize)>,
    pub hash: String,
}

impl RawConfig {
    pub fn parse(file: &str, text: &str) -> Result<Self, ConfigError> {
        let err = |line: usize, message: String| ConfigError {
            file: file.to_string(),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found {content:?}")))?;
            let key = key.trim();
            let kind = SCHEMA
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| err(line, format!("unknown key `{key}`")))?;
            let value = parse_value(value.trim()).map_err(|m| err(line, format!("key `{key}`: {m}")))?;
            check_kind(&value, kind).map_err(|m| err(line, format!("key `{key}`: {m}")))?;
            if entries.insert(key.to_string(), (value, line)).is_some() {
                return Err(err(line, format!("duplicate key `{key}`")));
            }
        }
        let hash = hex(&Sha256::digest(text.as_bytes()));
        Ok(Self {
            file: file.to_string(),
            entries,
            hash,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Self::parse(&path.display().to_string(), &text)
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|(v, _)| v)
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            file: self.file.clone(),
            line: self.entries.get(key).map_or(0, |(_, l)| *l),
            message: format!("key `{key}`: {}", message.into()),
        }
    }

    pub fn missing(&self, key: &str) -> ConfigError {
        ConfigError {
            file: self.file.clone(),
            line: 0,
            message: format!("missing required key `{key}`"),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        match self.get(key) {
            Some(Value::Str(s)) => Some(s),
            _ => None,
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.str(key).unwrap_or(default)
    }

    pub fn float(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Value::Num(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn float_or(&self, key: &str, default: f64) -> f64 {
        self.float(key).unwrap_or(default)
    }

    pub fn int(&self, key: &str) -> Option<u64> {
        self.float(key).map(|v| v as u64)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> usize {
        self.int(key).map_or(default, |v| v as usize)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> bool {
        match self.get(key) {
            Some(Value::Bool(b)) => *b,
            _ => default,
        }
    }

    pub fn floats(&self, key: &str) -> Option<Vec<f64>> {
        match self.get(key)? {
            Value::Num(v) => Some(vec![*v]),
            Value::List(vs) => Some(
                vs.iter()
                    .map(|v| match v {
                        Value::Num(x) => *x,
                        _ => unreachable!("checked against the schema"),
                    })
                    .collect(),
            ),
            _ => None,
        }
    }

    pub fn ints(&self, key: &str) -> Option<Vec<usize>> {
        self.floats(key).map(|v| v.into_iter().map(|x| x as usize).collect())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_value(s: &str) -> Result<Value, String> {
    if s.is_empty() {
        return Err("missing value".into());
    }
    if let Some(inner) = s.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or("unterminated list")?;
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        return inner
            .split(',')
            .map(|p| parse_value(p.trim()))
            .collect::<Result<_, _>>()
            .map(Value::List);
    }
    if let Some(inner) = s.strip_prefix('"') {
        let inner = inner.strip_suffix('"').ok_or("unterminated string")?;
        return Ok(Value::Str(inner.to_string()));
    }
    match s {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    if let Ok(v) = s.replace('_', "").parse::<f64>() {
        return Ok(Value::Num(v));
    }
    if s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./".contains(c)) {
        return Ok(Value::Str(s.to_string()));
    }
    Err(format!("cannot parse value {s:?}"))
}

fn check_kind(value: &Value, kind: Kind) -> Result<(), String> {
    let is_int = |v: &Value| matches!(v, Value::Num(x) if x.fract() == 0.0 && *x >= 0.0 && x.is_finite());
    let is_num = |v: &Value| matches!(v, Value::Num(x) if x.is_finite());
    let ok = match kind {
        Kind::Int => is_int(value),
        Kind::Float => is_num(value),
        Kind::Bool => matches!(value, Value::Bool(_)),
        Kind::Str => matches!(value, Value::Str(_)),
        Kind::Choice(options) => {
            return match value {
                Value::Str(s) if options.contains(&s.as_str()) => Ok(()),
                _ => Err(format!("expected one of {}, found {value}", options.join("|"))),
            }
        }
        Kind::Floats => match value {
            Value::List(vs) => vs.iter().all(is_num),
            v => is_num(v),
        },
        Kind::Ints => match value {
            Value::List(vs) => !vs.is_empty() && vs.iter().all(is_int),
            v => is_int(v),
        },
    };
    if ok {
        Ok(())
    } else {
        let expected = match kind {
            Kind::Int => "a non-negative integer",
            Kind::Float => "a finite number",
            Kind::Bool => "true or false",
            Kind::Str => "a string",
            Kind::Floats => "a number or a list of numbers",
            Kind::Ints => "a non-negative integer or a list of them",
            Kind::Choice(_) => unreachable!(),
        };
        Err(format!("expected {expected}, found {value}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_value_shapes() {
        let cfg = RawConfig::parse(
            "t.cfg",
            "# header\nseed = 7\nmodel.kind = \"glm\"  # trailing\nmodel.glm = logistic\ndata.n = [50, 200, 800]\ndata.theta = 0.5\nsampler.enabled = false\nsampler.steps = 20_000\n",
        )
        .unwrap();
        assert_eq!(cfg.int("seed"), Some(7));
        assert_eq!(cfg.str("model.kind"), Some("glm"));
        assert_eq!(cfg.str("model.glm"), Some("logistic"));
        assert_eq!(cfg.ints("data.n"), Some(vec![50, 200, 800]));
        assert_eq!(cfg.floats("data.theta"), Some(vec![0.5]));
        assert!(!cfg.bool_or("sampler.enabled", true));
        assert_eq!(cfg.usize_or("sampler.steps", 0), 20_000);
        assert_eq!(cfg.hash.len(), 64);
    }

    #[test]
    fn rejects_unknown_and_mistyped_keys() {
        let e = RawConfig::parse("t.cfg", "seed = 1\nsamplr.steps = 5\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.to_string().contains("unknown key `samplr.steps`"), "{e}");
        let e = RawConfig::parse("t.cfg", "sampler.steps = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("non-negative integer"), "{e}");
        let e = RawConfig::parse("t.cfg", "model.kind = banana\n").unwrap_err();
        assert!(e.to_string().contains("iid-expfam|glm"), "{e}");
        assert!(RawConfig::parse("t.cfg", "seed = 1\nseed = 2\n").is_err());
        assert!(RawConfig::parse("t.cfg", "seed 1\n").is_err());
        assert!(RawConfig::parse("t.cfg", "data.n = []\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RawConfig::parse("a", "seed = 1\n").unwrap();
        let b = RawConfig::parse("b", "seed = 2\n").unwrap();
        assert_ne!(a.hash, b.hash);
    }
}
