//! CSV and JSON output of an experiment.
//!
//! Layout of an output directory:
//!
//! - `ledger.csv`: `t,x,x_prime,e_left,e_right,dissipation_left,dissipation_right,base_trace_entropy,drift`
//! - `path.csv`: `t,x,x_prime,u_minus_*,u_plus_*,rh_residual,vmin,vmax`
//! - `snapshots/t_<time>.csv`: `x,u_*,eta,residual`
//! - `report.json`: shock, solver metadata, stability report, path audits
//!
//! Floats in CSV files carry 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use super::ExperimentResult;
use crate::calculus::{ConservationLaw, State};
use crate::error::Result;
use crate::solver::Field;
use crate::systems::SystemSpec;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, vals: impl IntoIterator<Item = f64>) {
    let row: Vec<String> = vals.into_iter().map(fmt_float).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

fn comp_names(prefix: &str, m: usize) -> Vec<String> {
    (0..m).map(|k| format!("{prefix}{k}")).collect()
}

pub fn ledger_csv(res: &ExperimentResult) -> String {
    let mut out =
        String::from("t,x,x_prime,e_left,e_right,dissipation_left,dissipation_right,base_trace_entropy,drift\n");
    for r in &res.ledger.rows {
        push_row(
            &mut out,
            [
                r.t,
                r.x,
                r.x_prime,
                r.e_left,
                r.e_right,
                r.dissipation_left,
                r.dissipation_right,
                r.base_trace_entropy,
                r.drift,
            ],
        );
    }
    out
}

pub fn path_csv(res: &ExperimentResult, sys: &SystemSpec) -> String {
    let p = &res.path;
    let m = res.shock.u_left.len();
    let mut head = vec!["t".to_owned(), "x".into(), "x_prime".into()];
    head.extend(comp_names("u_minus_", m));
    head.extend(comp_names("u_plus_", m));
    head.extend(["rh_residual".into(), "vmin".into(), "vmax".into()]);
    let mut out = head.join(",");
    out.push('\n');
    for i in 0..p.len() {
        let (um, up): &(State, State) = &p.traces[i];
        let du = up - um;
        let jump = du.norm();
        let rh = if jump > 0.0 {
            (sys.flux(up) - sys.flux(um) - &du * p.velocities[i]).amax() / jump
        } else {
            0.0
        };
        let f = &res.filippov.samples[i];
        let mut vals = vec![p.times[i], p.positions[i], p.velocities[i]];
        vals.extend(um.iter());
        vals.extend(up.iter());
        vals.extend([rh, f.vmin, f.vmax]);
        push_row(&mut out, vals);
    }
    out
}

pub fn snapshot_csv(field: &Field, residuals: &[f64], sys: &SystemSpec) -> Result<String> {
    let m = field.cells[0].len();
    let mut head = vec!["x".to_owned()];
    head.extend(comp_names("u_", m));
    head.extend(["eta".into(), "residual".into()]);
    let mut out = head.join(",");
    out.push('\n');
    for (i, u) in field.cells.iter().enumerate() {
        let mut vals = vec![field.center(i)];
        vals.extend(u.iter());
        vals.push(sys.entropy(u)?);
        vals.push(residuals.get(i).copied().unwrap_or(0.0));
        push_row(&mut out, vals);
    }
    Ok(out)
}

pub fn report_json(res: &ExperimentResult) -> serde_json::Value {
    let t = &res.trajectory;
    let d = &res.dafermos;
    json!({
        "name": res.config.name,
        "family": res.shock.family,
        "u_left": res.shock.u_left.as_slice(),
        "u_right": res.shock.u_right.as_slice(),
        "sigma": res.shock.sigma,
        "eps": res.config.experiment.eps,
        "window": res.window,
        "dx": res.ledger.dx,
        "init": t.init_report,
        "solver": {
            "steps": t.dt_history.len(),
            "max_cfl": t.max_cfl,
            "entropy_violations": t.entropy_violations,
            "max_residual": t.max_residual,
            "positive_residual_total": t.positive_residual_total,
            "entropy_budget": t.entropy_budget,
            "within_budget": t.within_budget(),
            "max_conservation_drift": t.max_conservation_drift,
            "floor_events": t.floor_events.len(),
        },
        "stability": res.report,
        "filippov": {
            "samples": res.filippov.samples.len(),
            "violations": res.filippov.violations,
            "violation_fraction": res.filippov.violation_fraction,
            "vacuum_samples": res.filippov.vacuum_samples,
        },
        "dafermos": {
            "jump_tol": d.jump_tol,
            "jump_samples": d.samples.len(),
            "skipped": d.skipped,
            "max_rh_residual": d.max_rh_residual,
            "max_rh_residual_ls": d.max_rh_residual_ls,
            "max_entropy_excess": d.max_entropy_excess,
            "max_entropy_excess_ls": d.max_entropy_excess_ls,
        },
        "path_lipschitz": res.path.lipschitz_estimate(),
    })
}

/// Write all outputs of `res` under `dir`.
pub fn write_outputs(res: &ExperimentResult, dir: &Path) -> Result<()> {
    let sys = res.config.build_system()?;
    fs::create_dir_all(dir.join("snapshots"))?;
    fs::write(dir.join("ledger.csv"), ledger_csv(res))?;
    fs::write(dir.join("path.csv"), path_csv(res, &sys))?;
    for s in &res.trajectory.snapshots {
        let mut name = String::new();
        write!(name, "t_{:.6}.csv", s.field.time).expect("string write");
        fs::write(dir.join("snapshots").join(name), snapshot_csv(&s.field, &s.residuals, &sys)?)?;
    }
    let report = serde_json::to_string_pretty(&report_json(res)).expect("report serializes");
    fs::write(dir.join("report.json"), report + "\n")?;
    Ok(())
}
