//! Last-family experiments through the reflection `Ũ(t, x) = U(t, −x)`,
//! which turns an n-shock of the system into a 1-shock of the reversed one.

use super::{
    run_direct, stability_report, velocity_params, EntropyLedger, ExperimentConfig, ExperimentResult, LedgerRow,
    ShockSpec,
};
use crate::error::Result;
use crate::shift::{dafermos_check, filippov_check, ShiftPath, Velocity};
use crate::solver::{Field, FloorEvent, InitReport, Snapshot, Trajectory};

pub struct MirrorOutcome {
    /// The first-family run of the reflected config.
    pub mirrored: ExperimentResult,
    /// The same run mapped back to the original coordinates.
    pub result: ExperimentResult,
}

/// Run the reflected config and map every output back.
pub fn mirror_experiment(cfg: &ExperimentConfig) -> Result<MirrorOutcome> {
    let mirrored = run_direct(&super::mirror_config(cfg))?;
    let result = unmirror_result(&mirrored, cfg)?;
    Ok(MirrorOutcome { mirrored, result })
}

pub fn flip_field(f: &Field) -> Field {
    Field {
        x_lo: -f.x_hi,
        x_hi: -f.x_lo,
        dx: f.dx,
        time: f.time,
        cells: f.cells.iter().rev().cloned().collect(),
        ghost_left: f.ghost_right.clone(),
        ghost_right: f.ghost_left.clone(),
    }
}

fn flip_trajectory(t: &Trajectory) -> Trajectory {
    let n = t.initial.n();
    Trajectory {
        initial: flip_field(&t.initial),
        init_report: InitReport {
            left_amplitude: t.init_report.right_amplitude,
            right_amplitude: t.init_report.left_amplitude,
            left_integral: t.init_report.right_integral,
            right_integral: t.init_report.left_integral,
            left_target: t.init_report.right_target,
            right_target: t.init_report.left_target,
        },
        snapshots: t
            .snapshots
            .iter()
            .map(|s| Snapshot {
                field: flip_field(&s.field),
                residuals: s.residuals.iter().rev().copied().collect(),
            })
            .collect(),
        final_field: flip_field(&t.final_field),
        floor_events: t
            .floor_events
            .iter()
            .map(|e| FloorEvent {
                t: e.t,
                cell: n - 1 - e.cell,
            })
            .collect(),
        ..t.clone()
    }
}

fn flip_path(p: &ShiftPath) -> ShiftPath {
    ShiftPath {
        times: p.times.clone(),
        positions: p.positions.iter().map(|x| -x).collect(),
        velocities: p.velocities.iter().map(|v| -v).collect(),
        traces: p.traces.iter().map(|(m, pl)| (pl.clone(), m.clone())).collect(),
        trace_noise: p.trace_noise.clone(),
        window: p.window,
        trace_params: p.trace_params,
    }
}

fn flip_ledger(l: &EntropyLedger) -> EntropyLedger {
    EntropyLedger {
        family: l.family.opposite(),
        sigma: -l.sigma,
        rows: l
            .rows
            .iter()
            .map(|r| LedgerRow {
                t: r.t,
                x: -r.x,
                x_prime: -r.x_prime,
                e_left: r.e_right,
                e_right: r.e_left,
                dissipation_left: r.dissipation_right,
                dissipation_right: r.dissipation_left,
                base_trace_entropy: r.base_trace_entropy,
                drift: -r.drift,
            })
            .collect(),
        ..l.clone()
    }
}

/// Map a result of the reflected config back to `original`'s coordinates.
/// The path audits are recomputed with the original system.
pub fn unmirror_result(m: &ExperimentResult, original: &ExperimentConfig) -> Result<ExperimentResult> {
    let sys = original.build_system()?;
    let shock = ShockSpec {
        family: m.shock.family.opposite(),
        u_left: m.shock.u_right.clone(),
        u_right: m.shock.u_left.clone(),
        sigma: -m.shock.sigma,
    };
    let path = flip_path(&m.path);
    let ledger = flip_ledger(&m.ledger);
    let vel = Velocity::new(&sys, velocity_params(original, &shock))?;
    let filippov = filippov_check(&path, &vel)?;
    let dafermos = dafermos_check(&path, &sys, m.jump_tol)?;
    let report = stability_report(&ledger);
    Ok(ExperimentResult {
        config: original.clone(),
        shock,
        window: m.window,
        jump_tol: m.jump_tol,
        ledger,
        path,
        trajectory: flip_trajectory(&m.trajectory),
        filippov,
        dafermos,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{mirror_config, parse_experiment_config, run_direct};
    use super::*;
    use crate::systems::preset;

    #[test]
    fn mirror_is_an_involution() {
        for name in ["perturbed_shock_g2", "two_shock_g2", "full_euler_3shock"] {
            let cfg = parse_experiment_config(preset(name).unwrap()).unwrap();
            assert_eq!(mirror_config(&mirror_config(&cfg)), cfg);
        }
    }

    #[test]
    fn mirrored_run_matches_direct_run() {
        let mut cfg = parse_experiment_config(preset("two_shock_g2").unwrap()).unwrap();
        cfg.sim.n = 200;
        cfg.sim.t_end = 0.2;
        cfg.sim.snapshot_times = vec![0.1];
        cfg.experiment.ledger_samples = 40;
        let direct = run_direct(&cfg).unwrap();
        let via = mirror_experiment(&cfg).unwrap().result;
        assert_eq!(direct.ledger.rows.len(), via.ledger.rows.len());
        for (a, b) in direct.ledger.rows.iter().zip(&via.ledger.rows) {
            assert_eq!(a.t, b.t);
            for (p, q) in [
                (a.x, b.x),
                (a.e_left, b.e_left),
                (a.e_right, b.e_right),
                (a.dissipation_left, b.dissipation_left),
                (a.dissipation_right, b.dissipation_right),
                (a.drift, b.drift),
            ] {
                assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()), "{p} vs {q}");
            }
        }
        let fa = &direct.trajectory.final_field;
        let fb = &via.trajectory.final_field;
        for (u, v) in fa.cells.iter().zip(&fb.cells) {
            assert!((u - v).amax() <= 1e-12);
        }
    }
}
