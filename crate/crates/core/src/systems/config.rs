//! Declarative system configuration.
//!
//! A config is a JSON document. The system is described by top-level keys;
//! the keys `sim`, `shift` and `experiment` hold simulation blocks that the
//! lab module reads from the same document.
//!
//! ```json
//! { "type": "isentropic", "gamma": 2.0, "K": 10, "rho_floor": 1e-10 }
//! ```
//!
//! | key              | meaning                                                   |
//! |------------------|-----------------------------------------------------------|
//! | `type`           | `isentropic`, `full_euler` or `scalar`                    |
//! | `gamma`          | adiabatic exponent (power law / full Euler)               |
//! | `K`              | bound on the primitive variables                          |
//! | `rho_floor`      | vacuum threshold                                          |
//! | `pressure`       | `power` (default) or `nonconvex` (isentropic only)        |
//! | `pressure_table` | `[[rho, P], ...]`, monotone cubic interpolation           |
//! | `flux`           | `burgers` (default) or `quartic` (scalar only)            |
//! | `reversed`       | use the reversed system `U_t - A(U)_x = 0`                |

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{make_burgers, make_full_euler, make_isentropic, make_scalar_convex, DomainBox, PressureLaw, SystemSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Isentropic,
    FullEuler,
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "type")]
    pub kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "K", default = "default_k")]
    pub k_bound: f64,
    #[serde(default = "default_floor")]
    pub rho_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure_table: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reversed: bool,
}

fn default_k() -> f64 {
    DomainBox::default().k_bound
}

fn default_floor() -> f64 {
    DomainBox::default().rho_floor
}

const SYSTEM_KEYS: &[&str] = &[
    "type",
    "gamma",
    "K",
    "rho_floor",
    "pressure",
    "pressure_table",
    "flux",
    "reversed",
];

const BLOCK_KEYS: &[&str] = &["sim", "shift", "experiment", "name", "description"];

/// Builtin configs, addressable by name wherever a config path is expected.
pub const PRESETS: &[(&str, &str)] = &[
    ("isentropic_g2", include_str!("../../configs/isentropic_g2.json")),
    ("isentropic_g14", include_str!("../../configs/isentropic_g14.json")),
    ("isentropic_g3", include_str!("../../configs/isentropic_g3.json")),
    ("isentropic_nonconvex", include_str!("../../configs/isentropic_nonconvex.json")),
    ("full_euler_g14", include_str!("../../configs/full_euler_g14.json")),
    ("burgers", include_str!("../../configs/burgers.json")),
    ("exact_shock_g2", include_str!("../../configs/exact_shock_g2.json")),
    ("perturbed_shock_g2", include_str!("../../configs/perturbed_shock_g2.json")),
    ("two_shock_g2", include_str!("../../configs/two_shock_g2.json")),
    ("full_euler_3shock", include_str!("../../configs/full_euler_3shock.json")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Read a config from a file, falling back to a builtin preset name.
pub fn read_config_text(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(std::fs::read_to_string(path)?);
    }
    let stem = arg.trim_end_matches(".json");
    preset(stem).map(str::to_owned).ok_or_else(|| Error::Config {
        line: None,
        field: None,
        msg: format!("no config file or builtin preset named `{arg}`"),
    })
}

/// 1-based line of the first occurrence of `"field"` as a key in `text`.
pub fn locate_field(text: &str, field: &str) -> Option<usize> {
    let needle = format!("\"{field}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Attach a line number to a config error that names a field.
pub(crate) fn with_line(err: Error, text: &str) -> Error {
    match err {
        Error::Config {
            line: None,
            field: Some(f),
            msg,
        } => {
            let key = f.rsplit('.').next().unwrap_or(&f).to_owned();
            Error::Config {
                line: locate_field(text, &key),
                field: Some(f),
                msg,
            }
        }
        other => other,
    }
}

pub(crate) fn json_error(err: serde_json::Error, field: Option<&str>) -> Error {
    let line = if err.line() > 0 { Some(err.line()) } else { None };
    Error::Config {
        line,
        field: field.map(str::to_owned),
        msg: err.to_string(),
    }
}

pub(crate) fn parse_document(text: &str) -> Result<serde_json::Map<String, Value>> {
    let value: Value = serde_json::from_str(text).map_err(|e| json_error(e, None))?;
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(Error::Config {
            line: Some(1),
            field: None,
            msg: "top level must be an object".into(),
        }),
    }
}

pub fn parse_system_config(text: &str) -> Result<SystemConfig> {
    let doc = parse_document(text)?;
    let mut sys = serde_json::Map::new();
    for (k, v) in doc {
        if SYSTEM_KEYS.contains(&k.as_str()) {
            sys.insert(k, v);
        } else if !BLOCK_KEYS.contains(&k.as_str()) {
            return Err(with_line(Error::config(k.clone(), "unknown key"), text));
        }
    }
    let cfg: SystemConfig = serde_json::from_value(Value::Object(sys)).map_err(|e| {
        let msg = e.to_string();
        let field = SYSTEM_KEYS.iter().find(|k| msg.contains(&format!("`{k}`"))).copied();
        with_line(
            Error::Config {
                line: None,
                field: Some(field.unwrap_or("type").to_owned()),
                msg,
            },
            text,
        )
    })?;
    build_system(&cfg).map_err(|e| with_line(e, text))?;
    Ok(cfg)
}

pub fn build_system(cfg: &SystemConfig) -> Result<SystemSpec> {
    let domain = DomainBox {
        k_bound: cfg.k_bound,
        rho_floor: cfg.rho_floor,
    };
    domain.validate()?;
    let sys = match cfg.kind {
        SystemKind::Isentropic => {
            let law = match (&cfg.pressure_table, cfg.pressure.as_deref()) {
                (Some(table), _) => PressureLaw::table(table).map_err(|e| match e {
                    Error::Config { msg, .. } | Error::DegenerateInput(msg) => Error::config("pressure_table", msg),
                    other => other,
                })?,
                (None, Some("nonconvex")) => PressureLaw::nonconvex_test(),
                (None, None) | (None, Some("power")) => {
                    let gamma = cfg
                        .gamma
                        .ok_or_else(|| Error::config("gamma", "power law needs gamma"))?;
                    PressureLaw::power(gamma)?
                }
                (None, Some(other)) => {
                    return Err(Error::config("pressure", format!("unknown pressure law `{other}`")))
                }
            };
            SystemSpec::Isentropic(make_isentropic(law, domain)?)
        }
        SystemKind::FullEuler => {
            let gamma = cfg
                .gamma
                .ok_or_else(|| Error::config("gamma", "full Euler needs gamma"))?;
            SystemSpec::FullEuler(make_full_euler(gamma, domain)?)
        }
        SystemKind::Scalar => match cfg.flux.as_deref() {
            None | Some("burgers") => SystemSpec::Scalar(make_burgers(cfg.k_bound)),
            Some("quartic") => {
                let mut s = make_scalar_convex(|u| u * u * u * u / 12.0 + 0.5 * u * u);
                s.k_bound = cfg.k_bound;
                SystemSpec::Scalar(s)
            }
            Some(other) => return Err(Error::config("flux", format!("unknown flux `{other}`"))),
        },
    };
    Ok(if cfg.reversed { sys.reversed() } else { sys })
}

/// Load a system from a config file or builtin preset name.
pub fn load_system_config(path: &str) -> Result<SystemSpec> {
    let text = read_config_text(path)?;
    let cfg = parse_system_config(&text)?;
    build_system(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::ConservationLaw;

    #[test]
    fn isentropic_dispatch() {
        let cfg = parse_system_config(r#"{"type": "isentropic", "gamma": 2, "K": 10}"#).unwrap();
        let sys = build_system(&cfg).unwrap();
        assert_eq!(sys.dim(), 2);
    }

    #[test]
    fn full_euler_dispatch() {
        let cfg = parse_system_config(r#"{"type": "full_euler", "gamma": 1.4, "K": 10}"#).unwrap();
        assert_eq!(build_system(&cfg).unwrap().dim(), 3);
    }

    #[test]
    fn gamma_below_one_reports_line() {
        let text = "{\n  \"type\": \"isentropic\",\n  \"gamma\": 0.5\n}";
        match parse_system_config(text) {
            Err(Error::Config { line, field, .. }) => {
                assert_eq!(line, Some(3));
                assert_eq!(field.as_deref(), Some("gamma"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "{\n  \"type\": \"isentropic\",\n  \"gamma\": ,\n}";
        match parse_system_config(text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = "{\"type\": \"isentropic\", \"gama\": 2}";
        assert!(matches!(parse_system_config(text), Err(Error::Config { .. })));
    }

    #[test]
    fn table_law_from_config() {
        let text = r#"{"type": "isentropic", "K": 4,
            "pressure_table": [[0.1, 0.01], [0.5, 0.25], [1, 1], [2, 4], [4, 16], [8, 64]]}"#;
        let sys = build_system(&parse_system_config(text).unwrap()).unwrap();
        let u = crate::calculus::state(&[1.0, 0.2]);
        assert!(crate::calculus::compatibility_residual(&sys, &u).unwrap() < 1e-5);
    }

    #[test]
    fn all_presets_parse() {
        for (name, text) in PRESETS {
            parse_system_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn reversed_flag() {
        let cfg = parse_system_config(r#"{"type": "isentropic", "gamma": 2, "reversed": true}"#).unwrap();
        assert!(build_system(&cfg).unwrap().is_reversed());
    }
}
