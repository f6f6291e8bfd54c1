//! Run configuration: the loaded profile plus every numeric parameter.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use teig::coeff::CoefficientField;

use crate::error::CliError;

/// A coefficient profile file. Besides the field itself it may carry
/// experiment defaults such as `t_max` and `lambda_floor`.
#[derive(Clone, Debug)]
pub struct Profile {
    /// `None` for a medium given on the command line.
    pub path: Option<PathBuf>,
    pub raw: Value,
    pub field: CoefficientField,
}

impl Profile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.is_file() {
            return Err(CliError::ProfileNotFound(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let raw: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("profile {}: {e}", path.display())))?;
        let field = CoefficientField::from_json(&raw)
            .map_err(|e| CliError::Usage(format!("profile {}: {e}", path.display())))?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            raw,
            field,
        })
    }

    /// Constant disk medium `a = a0 I`, `Σ_ℓ = sigma_ℓ`.
    pub fn inline_disk(radius: f64, a0: f64, sigma1: f64, sigma2: f64) -> Result<Self, CliError> {
        let bound = [a0, sigma1, sigma2]
            .iter()
            .flat_map(|&x| [x, 1.0 / x])
            .fold(1.0, f64::max);
        let raw = serde_json::json!({
            "R": radius,
            "a": a0,
            "sigma1": sigma1,
            "sigma2": sigma2,
            "Lambda": bound,
        });
        let field = CoefficientField::from_json(&raw).map_err(|e| CliError::Usage(format!("medium: {e}")))?;
        Ok(Self {
            path: None,
            raw,
            field,
        })
    }

    pub fn default_f64(&self, key: &str) -> Option<f64> {
        self.raw.get(key).and_then(Value::as_f64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub profile_path: Option<PathBuf>,
    pub profile: Option<Value>,
    pub params: BTreeMap<String, Value>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(command: &str, profile: Option<&Profile>) -> Self {
        Self {
            command: command.into(),
            profile_path: profile.and_then(|p| p.path.clone()),
            profile: profile.map(|p| p.raw.clone()),
            params: BTreeMap::new(),
            outputs: Vec::new(),
            seed: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params
            .insert(key.into(), serde_json::to_value(value).expect("parameter serialises"));
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// SHA-256 of the canonical JSON form. `serde_json` maps are ordered,
    /// so equal configurations hash equally.
    pub fn hash(&self) -> String {
        hex_digest(&serde_json::to_vec(self).expect("config serialises"))
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `"a:b"` as an inclusive pair.
pub fn parse_range<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected START:END, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<T>().map_err(|_| format!("bad number {x:?} in {s:?}"));
    Ok((parse(a)?, parse(b)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Modes(pub Vec<u32>);

/// `"0,5"` or `"0:8"` (inclusive) as a list of modes.
pub fn parse_modes(s: &str) -> Result<Modes, String> {
    if s.contains(':') {
        let (a, b) = parse_range::<u32>(s)?;
        if a > b {
            return Err(format!("empty mode range {s:?}"));
        }
        return Ok(Modes((a..=b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|_| format!("bad mode {x:?}")))
        .collect::<Result<_, _>>()
        .map(Modes)
}

/// `points` values `10^p`, `p` evenly spaced over `[lo, hi]`.
pub fn log_grid(lo_decade: f64, hi_decade: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![10f64.powf(hi_decade)];
    }
    (0..points)
        .map(|i| 10f64.powf(lo_decade + (hi_decade - lo_decade) * i as f64 / (points - 1) as f64))
        .collect()
}
