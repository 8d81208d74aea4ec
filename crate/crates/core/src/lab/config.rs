//! Experiment configs: a system config plus `sim`, `shift` and `experiment`
//! blocks in the same JSON document.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calculus::{state, State};
use crate::error::{Error, Result};
use crate::hugoniot::Family;
use crate::solver::Bump;
use crate::systems::config::{parse_document, with_line};
use crate::systems::{build_system, parse_system_config, SystemConfig, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    #[serde(rename = "N")]
    pub n: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_margin")]
    pub margin_rel: f64,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_budget: Option<f64>,
}

fn default_cfl() -> f64 {
    0.45
}

fn default_margin() -> f64 {
    0.01
}

fn default_boundary_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftBlock {
    /// Mollification width; defaults to `max(4Δx, ε·span/100)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_k_cells")]
    pub k_cells: usize,
    #[serde(default = "default_layer_skip")]
    pub layer_skip: usize,
    #[serde(default = "default_eta_floor")]
    pub eta_floor: f64,
    /// Defaults to `0.1·|U_R − U_L|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_tol: Option<f64>,
}

impl Default for ShiftBlock {
    fn default() -> Self {
        ShiftBlock {
            window: None,
            x0: 0.0,
            k_cells: default_k_cells(),
            layer_skip: default_layer_skip(),
            eta_floor: default_eta_floor(),
            jump_tol: None,
        }
    }
}

fn default_k_cells() -> usize {
    4
}

fn default_layer_skip() -> usize {
    3
}

fn default_eta_floor() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub family: Family,
    /// Base state in primitive variables: `[u]`, `[rho, u]` or `[rho, u, e]`.
    pub base: Vec<f64>,
    /// Curve parameter of the shock.
    pub s: f64,
    pub eps: f64,
    #[serde(default)]
    pub perturbed: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_bump: Option<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_bump: Option<Bump>,
    /// Number of ledger rows, evenly spaced in time.
    #[serde(default = "default_ledger_samples")]
    pub ledger_samples: usize,
}

fn default_ledger_samples() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub system: SystemConfig,
    pub sim: SimBlock,
    pub shift: ShiftBlock,
    pub experiment: ExperimentBlock,
}

fn block<T: serde::de::DeserializeOwned>(doc: &serde_json::Map<String, Value>, key: &str, text: &str) -> Result<Option<T>> {
    let Some(v) = doc.get(key) else {
        return Ok(None);
    };
    serde_json::from_value(v.clone()).map(Some).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.contains("field"))
            .map(|f| format!("{key}.{f}"))
            .unwrap_or_else(|| key.to_owned());
        with_line(Error::config(field, msg), text)
    })
}

pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let system = parse_system_config(text)?;
    let doc = parse_document(text)?;
    let sim: SimBlock = block(&doc, "sim", text)?.ok_or_else(|| Error::config("sim", "missing `sim` block"))?;
    let shift: ShiftBlock = block(&doc, "shift", text)?.unwrap_or_default();
    let experiment: ExperimentBlock =
        block(&doc, "experiment", text)?.ok_or_else(|| Error::config("experiment", "missing `experiment` block"))?;
    let text_field = |k: &str| -> Result<Option<String>> {
        match doc.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(with_line(Error::config(k, "must be a string"), text)),
        }
    };
    let cfg = ExperimentConfig {
        name: text_field("name")?,
        description: text_field("description")?,
        system,
        sim,
        shift,
        experiment,
    };
    cfg.validate().map_err(|e| with_line(e, text))?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_system(&self) -> Result<SystemSpec> {
        build_system(&self.system)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if !(e.eps > 0.0) {
            return Err(Error::config("experiment.eps", "eps must be positive"));
        }
        if !(e.s > 0.0) {
            return Err(Error::config("experiment.s", "s must be positive"));
        }
        if e.ledger_samples == 0 {
            return Err(Error::config("experiment.ledger_samples", "need at least one ledger row"));
        }
        if e.perturbed && e.left_bump.is_none() && e.right_bump.is_none() {
            return Err(Error::config("experiment.perturbed", "a perturbed run needs at least one bump"));
        }
        for b in [&e.left_bump, &e.right_bump].into_iter().flatten() {
            if !(b.width > 0.0) {
                return Err(Error::config("experiment.width", "bump width must be positive"));
            }
        }
        let sh = &self.shift;
        if sh.k_cells == 0 {
            return Err(Error::config("shift.k_cells", "k_cells must be at least 1"));
        }
        if let Some(w) = sh.window {
            if !(w > 0.0) {
                return Err(Error::config("shift.window", "window must be positive"));
            }
        }
        if !(sh.eta_floor > 0.0) {
            return Err(Error::config("shift.eta_floor", "eta_floor must be positive"));
        }
        let sys = self.build_system()?;
        conserved_base(&sys, &e.base)?;
        Ok(())
    }
}

/// Conserved state from primitive variables.
pub fn conserved_base(sys: &SystemSpec, prim: &[f64]) -> Result<State> {
    let want = match sys.base() {
        SystemSpec::Scalar(_) => 1,
        SystemSpec::Isentropic(_) => 2,
        SystemSpec::FullEuler(_) => 3,
        SystemSpec::Reversed(_) => unreachable!("base() strips reversal"),
    };
    if prim.len() != want {
        return Err(Error::config(
            "experiment.base",
            format!("expected {want} primitive values, got {}", prim.len()),
        ));
    }
    Ok(match sys.base() {
        SystemSpec::Scalar(_) => state(prim),
        SystemSpec::Isentropic(_) => state(&[prim[0], prim[0] * prim[1]]),
        SystemSpec::FullEuler(fe) => fe.conserved(prim[0], prim[1], prim[2]),
        SystemSpec::Reversed(_) => unreachable!(),
    })
}

pub fn load_experiment_config(arg: &str) -> Result<ExperimentConfig> {
    let text = crate::systems::read_config_text(arg)?;
    parse_experiment_config(&text)
}

/// Reflect a config through `x → −x`: the system is reversed, the domain
/// and every position negated, bumps swap sides and the family flips.
/// Applying it twice gives back the original.
pub fn mirror_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut m = cfg.clone();
    m.system.reversed = !cfg.system.reversed;
    m.sim.x_lo = -cfg.sim.x_hi;
    m.sim.x_hi = -cfg.sim.x_lo;
    m.shift.x0 = -cfg.shift.x0;
    m.experiment.family = cfg.experiment.family.opposite();
    let flip = |b: &Option<Bump>| {
        b.map(|b| Bump {
            center: -b.center,
            width: b.width,
        })
    };
    m.experiment.left_bump = flip(&cfg.experiment.right_bump);
    m.experiment.right_bump = flip(&cfg.experiment.left_bump);
    m
}

/// The `experiment` block of a document, if present.
pub fn experiment_block_of(text: &str) -> Result<Option<ExperimentBlock>> {
    let doc = parse_document(text)?;
    block(&doc, "experiment", text)
}
