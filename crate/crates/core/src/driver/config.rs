use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::merit::AlphaRule;
use crate::normal_step::NormalParams;
use crate::tangential::TangentialSolver;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parameter `{field}` = {value} violates {bound}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        bound: &'static str,
    },
    #[error("override `{0}` is not of the form key=value")]
    MalformedOverride(String),
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("cannot access config file: {0}")]
    Io(#[from] std::io::Error),
}

/// Solver parameters. Defaults follow the standard parameter table of the
/// method and the usual termination tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Starting point; `None` uses the problem's own.
    pub x0: Option<Vec<f64>>,
    pub alpha0: f64,
    /// Merit parameter before the first update.
    pub tau_init: f64,
    pub kappa_v: f64,
    pub kappa_v_inf: f64,
    pub sigma_c: f64,
    pub eps_tau: f64,
    pub xi: f64,
    pub gamma: f64,
    pub eta_phi: f64,
    pub eta_m: f64,
    pub tol_c: f64,
    pub tol_stat: f64,
    pub tol_comp: f64,
    /// `‖s‖/α` below which the step counts as zero.
    pub tol_step: f64,
    pub max_iter: usize,
    pub time_limit_secs: f64,
    pub alpha_rule: AlphaRule,
    pub alpha_cap: f64,
    pub max_backtracks: usize,
    /// Consecutive stationary-infeasible iterations before termination.
    pub isp_patience: usize,
    pub use_tr_inf: bool,
    pub normal_qp_tol: f64,
    pub tangential_qp_tol: f64,
    pub tangential_solver: TangentialSolver,
    /// Largest split-QP dimension handled by the QP kernel under `auto`.
    pub split_max_dim: usize,
    pub scaling: bool,
    pub check_invariants: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            x0: None,
            alpha0: 10.0,
            tau_init: 1.0,
            kappa_v: 1e3,
            kappa_v_inf: 1e-2,
            sigma_c: 0.1,
            eps_tau: 0.1,
            xi: 0.5,
            gamma: 0.5,
            eta_phi: 1e-4,
            eta_m: 1e-4,
            tol_c: 1e-6,
            tol_stat: 1e-4,
            tol_comp: 1e-4,
            tol_step: 1e-12,
            max_iter: 10_000,
            time_limit_secs: 3600.0,
            alpha_rule: AlphaRule::MinCap,
            alpha_cap: 10.0,
            max_backtracks: 60,
            isp_patience: 3,
            use_tr_inf: true,
            normal_qp_tol: 1e-10,
            tangential_qp_tol: 1e-12,
            tangential_solver: TangentialSolver::Auto,
            split_max_dim: 64,
            scaling: true,
            check_invariants: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Defaults for the sparse CCA experiments (`α0 = 1e-3`).
    pub fn scca_default() -> Self {
        Self {
            alpha0: 1e-3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let open_unit = [
            ("sigma_c", self.sigma_c),
            ("eps_tau", self.eps_tau),
            ("xi", self.xi),
            ("gamma", self.gamma),
            ("eta_phi", self.eta_phi),
            ("eta_m", self.eta_m),
        ];
        for (field, value) in open_unit {
            if !(value > 0.0 && value < 1.0) {
                return Err(ConfigError::OutOfRange {
                    field,
                    value,
                    bound: "0 < value < 1",
                });
            }
        }
        let positive = [
            ("alpha0", self.alpha0),
            ("tau_init", self.tau_init),
            ("kappa_v", self.kappa_v),
            ("kappa_v_inf", self.kappa_v_inf),
            ("tol_c", self.tol_c),
            ("tol_stat", self.tol_stat),
            ("tol_comp", self.tol_comp),
            ("tol_step", self.tol_step),
            ("time_limit_secs", self.time_limit_secs),
            ("alpha_cap", self.alpha_cap),
            ("normal_qp_tol", self.normal_qp_tol),
            ("tangential_qp_tol", self.tangential_qp_tol),
        ];
        for (field, value) in positive {
            if !(value > 0.0) || value.is_nan() {
                return Err(ConfigError::OutOfRange {
                    field,
                    value,
                    bound: "value > 0",
                });
            }
        }
        let counts = [
            ("max_iter", self.max_iter),
            ("max_backtracks", self.max_backtracks),
            ("isp_patience", self.isp_patience),
        ];
        for (field, value) in counts {
            if value == 0 {
                return Err(ConfigError::OutOfRange {
                    field,
                    value: 0.0,
                    bound: "value ≥ 1",
                });
            }
        }
        if let Some(x0) = &self.x0 {
            if x0.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::Parse("x0 contains a non-finite entry".into()));
            }
        }
        Ok(())
    }

    /// Applies `key=value` overrides. Values are parsed as JSON when possible
    /// and as bare strings otherwise; dotted keys address nested objects.
    pub fn apply_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut tree = serde_json::to_value(self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for ov in overrides {
            let ov = ov.as_ref();
            let (key, raw) = ov
                .split_once('=')
                .ok_or_else(|| ConfigError::MalformedOverride(ov.to_string()))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::MalformedOverride(ov.to_string()));
            }
            let value = serde_json::from_str(raw.trim())
                .unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
            let mut node = &mut tree;
            let parts: Vec<&str> = key.split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                let obj = node
                    .as_object_mut()
                    .ok_or_else(|| ConfigError::Parse(format!("`{key}` does not name a field")))?;
                if i + 1 == parts.len() {
                    obj.insert(part.to_string(), value.clone());
                    break;
                }
                node = obj
                    .entry(part.to_string())
                    .or_insert_with(|| serde_json::Value::Object(Default::default()));
            }
        }
        let cfg: Self =
            serde_json::from_value(tree).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn normal_params(&self) -> NormalParams {
        NormalParams {
            gamma: self.gamma,
            eta_m: self.eta_m,
            kappa_v: self.kappa_v,
            kappa_v_inf: self.kappa_v_inf,
            max_backtracks: self.max_backtracks,
            tol_infeas_c: self.tol_c,
            use_tr_inf: self.use_tr_inf,
            qp_tol: self.normal_qp_tol,
        }
    }
}

/// Reads a JSON config (or starts from `base` when `path` is `None`), then
/// applies the overrides and validates.
pub fn load_config<S: AsRef<str>>(
    path: Option<&Path>,
    base: SolverConfig,
    overrides: &[S],
) -> Result<SolverConfig, ConfigError> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            parse_config(&text, base)?
        }
        None => base,
    };
    cfg.apply_overrides(overrides)
}

/// Parses a JSON config; fields absent from the text keep their value in `base`.
pub fn parse_config(text: &str, base: SolverConfig) -> Result<SolverConfig, ConfigError> {
    let patch: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let obj = patch
        .as_object()
        .ok_or_else(|| ConfigError::Parse("config must be a JSON object".into()))?;
    let mut tree = serde_json::to_value(&base).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let target = tree.as_object_mut().expect("config is an object");
    for (k, v) in obj {
        target.insert(k.clone(), v.clone());
    }
    let cfg: SolverConfig =
        serde_json::from_value(tree).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_config(cfg: &SolverConfig, path: &Path) -> Result<(), ConfigError> {
    let text = serde_json::to_string_pretty(cfg).map_err(|e| ConfigError::Parse(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}
