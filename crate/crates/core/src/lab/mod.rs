//! Experiment harness: solver and shift path in lockstep, the relative
//! entropy ledger along the path, fitted stability constants, the mirror
//! reduction for last-family shocks, and file output.

mod config;
mod mirror;
pub mod output;

pub use config::{
    conserved_base, experiment_block_of, load_experiment_config, mirror_config, parse_experiment_config, ExperimentBlock, ExperimentConfig,
    ShiftBlock, SimBlock,
};
pub use mirror::{flip_field, mirror_experiment, unmirror_result, MirrorOutcome};
pub use output::{fmt_float, report_json, write_outputs};

use serde::Serialize;

use crate::calculus::{ConservationLaw, Reference, State};
use crate::error::{Error, Result};
use crate::hugoniot::{classify_discontinuity, shock_curve, Family};
use crate::shift::{
    dafermos_check, default_window, filippov_check, DafermosReport, FilippovReport, ShiftPath, TraceParams, Velocity,
    VelocityParams,
};
use crate::solver::{run_with, Field, InitKind, InitSpec, SimConfig, Trajectory};
use crate::systems::SystemSpec;

/// The shock an experiment is built on.
#[derive(Debug, Clone, Serialize)]
pub struct ShockSpec {
    pub family: Family,
    pub u_left: State,
    pub u_right: State,
    pub sigma: f64,
}

impl ShockSpec {
    /// The state the velocity functional and the `ε⁴` target refer to.
    pub fn base(&self) -> &State {
        match self.family {
            Family::One => &self.u_left,
            Family::N => &self.u_right,
        }
    }
}

/// Resolve the shock of an experiment block and check it is admissible for
/// its family.
pub fn resolve_shock(sys: &SystemSpec, cfg: &ExperimentConfig) -> Result<ShockSpec> {
    let e = &cfg.experiment;
    let base = conserved_base(sys, &e.base)?;
    let curve = shock_curve(sys, &base, e.family)?;
    let (other, sigma) = curve.eval(e.s)?;
    let (l, r) = e.family.ordered(&base, &other);
    let report = classify_discontinuity(sys, l, r)?;
    if !report.classification.matches(e.family) {
        return Err(Error::config(
            "experiment.s",
            format!("jump classified as {:?}, not a {} shock", report.classification, e.family.label()),
        ));
    }
    Ok(ShockSpec {
        family: e.family,
        u_left: l.clone(),
        u_right: r.clone(),
        sigma,
    })
}

pub fn sim_config(cfg: &ExperimentConfig, shock: &ShockSpec) -> SimConfig {
    let e = &cfg.experiment;
    let (left_target, right_target) = match shock.family {
        Family::One => (e.eps.powi(4), e.eps),
        Family::N => (e.eps, e.eps.powi(4)),
    };
    let init = if e.perturbed {
        InitSpec {
            kind: InitKind::PerturbedShock,
            u_left: shock.u_left.clone(),
            u_right: shock.u_right.clone(),
            x_shock: 0.0,
            eps: e.eps,
            left_bump: e.left_bump,
            right_bump: e.right_bump,
            left_target: if e.left_bump.is_some() { left_target } else { 0.0 },
            right_target: if e.right_bump.is_some() { right_target } else { 0.0 },
            seed: e.seed,
        }
    } else {
        InitSpec {
            eps: e.eps,
            ..InitSpec::riemann(shock.u_left.clone(), shock.u_right.clone(), 0.0)
        }
    };
    let s = &cfg.sim;
    SimConfig {
        n: s.n,
        x_lo: s.x_lo,
        x_hi: s.x_hi,
        cfl: s.cfl,
        t_end: s.t_end,
        snapshot_times: s.snapshot_times.clone(),
        init,
        margin_rel: s.margin_rel,
        boundary_tol: s.boundary_tol,
        entropy_budget: s.entropy_budget,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub x: f64,
    pub x_prime: f64,
    /// `∫_{y<x} η(U|U_L)`.
    pub e_left: f64,
    /// `∫_{y>x} η(U|U_R)`.
    pub e_right: f64,
    /// `−F(u₋,U_L) + x′η(u₋|U_L)`.
    pub dissipation_left: f64,
    /// `F(u₊,U_R) − x′η(u₊|U_R)`.
    pub dissipation_right: f64,
    /// `η` of the base-side trace relative to the base state.
    pub base_trace_entropy: f64,
    /// `x(t) − σt`.
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyLedger {
    pub family: Family,
    pub eps: f64,
    pub sigma: f64,
    pub dx: f64,
    /// `max |η|` over the initial field.
    pub entropy_scale: f64,
    pub rows: Vec<LedgerRow>,
    /// Measure of `{t : η(base trace | base) ≥ ε²}`, accumulated per step.
    pub bad_set_measure: f64,
    pub t_end: f64,
}

impl EntropyLedger {
    /// Rows on the base side: `(t, e_base)`.
    pub fn base_series(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.t, if self.family == Family::One { r.e_left } else { r.e_right }))
            .collect()
    }

    pub fn far_series(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.t, if self.family == Family::One { r.e_right } else { r.e_left }))
            .collect()
    }
}

/// Integrals of `η(U|U_L)` left of `x` and `η(U|U_R)` right of `x`, with
/// the cell containing `x` split by overlap.
pub fn split_integrals(sys: &SystemSpec, field: &Field, x: f64, rl: &Reference, rr: &Reference) -> Result<(f64, f64)> {
    let mut left = 0.0;
    let mut right = 0.0;
    for (i, u) in field.cells.iter().enumerate() {
        let (a, b) = (field.left_edge(i), field.right_edge(i));
        if a < x {
            left += rl.relative_entropy(sys, u)? * (b.min(x) - a);
        }
        if b > x {
            right += rr.relative_entropy(sys, u)? * (b - a.max(x));
        }
    }
    Ok((left, right))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub shock: ShockSpec,
    pub window: f64,
    pub jump_tol: f64,
    pub ledger: EntropyLedger,
    pub path: ShiftPath,
    #[serde(skip)]
    pub trajectory: Trajectory,
    pub filippov: FilippovReport,
    pub dafermos: DafermosReport,
    pub report: StabilityReport,
}

impl ExperimentResult {
    pub fn velocity<'a>(&self, sys: &'a SystemSpec) -> Result<Velocity<'a>> {
        Velocity::new(sys, velocity_params(&self.config, &self.shock))
    }
}

pub(crate) fn velocity_params(cfg: &ExperimentConfig, shock: &ShockSpec) -> VelocityParams {
    VelocityParams {
        eps: cfg.experiment.eps,
        eta_floor: cfg.shift.eta_floor,
        reference: shock.base().clone(),
        family: shock.family,
    }
}

/// Run an experiment. Last-family shocks go through [`mirror_experiment`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match cfg.experiment.family {
        Family::One => run_direct(cfg),
        Family::N => Ok(mirror_experiment(cfg)?.result),
    }
}

/// Run an experiment for either family without mirroring.
pub fn run_direct(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let sys = cfg.build_system()?;
    let shock = resolve_shock(&sys, cfg)?;
    let sim = sim_config(cfg, &shock);
    let vel = Velocity::new(&sys, velocity_params(cfg, &shock))?;
    let rl = Reference::new(&sys, &shock.u_left)?;
    let rr = Reference::new(&sys, &shock.u_right)?;
    let rb = Reference::new(&sys, shock.base())?;
    let eps = cfg.experiment.eps;
    let dx = sim.dx();
    let trace = TraceParams {
        k_cells: cfg.shift.k_cells,
        layer_skip: cfg.shift.layer_skip,
    };
    let jump_tol = cfg
        .shift
        .jump_tol
        .unwrap_or(0.1 * (&shock.u_right - &shock.u_left).norm());

    let mut path: Option<ShiftPath> = None;
    let mut rows = Vec::new();
    let mut bad = 0.0;
    let mut scale = 0.0f64;
    let mut next_row = 0usize;
    let samples = cfg.experiment.ledger_samples;
    let t_end = sim.t_end;
    let row_time = |k: usize| if samples == 0 { t_end } else { t_end * k as f64 / samples as f64 };

    let trajectory = run_with(&sys, &sim, |field, info| {
        let p = match (&mut path, info) {
            (None, _) => {
                for u in &field.cells {
                    scale = scale.max(sys.entropy(u)?.abs());
                }
                let window = cfg.shift.window.unwrap_or_else(|| default_window(field, eps));
                path.insert(ShiftPath::new(cfg.shift.x0, window, trace))
            }
            (Some(p), Some(info)) => {
                // the step just taken used the velocity sampled before it
                let (um, up) = p.traces.last().unwrap();
                let side = if shock.family == Family::One { um } else { up };
                if rb.relative_entropy(&sys, side)? >= eps * eps {
                    bad += info.dt;
                }
                p.move_by(info.dt);
                p
            }
            (Some(p), None) => p,
        };
        p.record(field, &vel)?;
        let t = field.time;
        if t >= row_time(next_row) || t >= t_end {
            while next_row <= samples && row_time(next_row) <= t {
                next_row += 1;
            }
            let x = p.position();
            let xp = *p.velocities.last().unwrap();
            let (um, up) = p.traces.last().unwrap();
            let (e_left, e_right) = split_integrals(&sys, field, x, &rl, &rr)?;
            let side = if shock.family == Family::One { um } else { up };
            rows.push(LedgerRow {
                t,
                x,
                x_prime: xp,
                e_left,
                e_right,
                dissipation_left: -rl.relative_flux(&sys, um)? + xp * rl.relative_entropy(&sys, um)?,
                dissipation_right: rr.relative_flux(&sys, up)? - xp * rr.relative_entropy(&sys, up)?,
                base_trace_entropy: rb.relative_entropy(&sys, side)?,
                drift: x - shock.sigma * t,
            });
        }
        Ok(())
    })?;
    let path = path.expect("observer runs at least once");
    let ledger = EntropyLedger {
        family: shock.family,
        eps,
        sigma: shock.sigma,
        dx,
        entropy_scale: scale,
        rows,
        bad_set_measure: bad,
        t_end,
    };
    let filippov = filippov_check(&path, &vel)?;
    let dafermos = dafermos_check(&path, &sys, jump_tol)?;
    let report = stability_report(&ledger);
    Ok(ExperimentResult {
        config: cfg.clone(),
        window: path.window,
        shock,
        jump_tol,
        ledger,
        path,
        trajectory,
        filippov,
        dafermos,
        report,
    })
}

/// Least-squares `C` in `y ≈ C·g` together with `sup y/g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub c: f64,
    pub sup: f64,
    pub samples: usize,
}

impl Fit {
    pub fn finite(&self) -> bool {
        self.c.is_finite() && self.sup.is_finite()
    }
}

/// Fit over `t ∈ [0.1·T, T]` with `T` the last time.
pub fn fit_envelope<G: Fn(f64) -> f64>(series: &[(f64, f64)], envelope: G) -> Fit {
    let t_last = series.last().map(|p| p.0).unwrap_or(0.0);
    let (mut num, mut den, mut sup, mut n) = (0.0, 0.0, 0.0f64, 0);
    for &(t, y) in series {
        if t < 0.1 * t_last {
            continue;
        }
        let g = envelope(t);
        if g > 0.0 {
            num += y * g;
            den += g * g;
            sup = sup.max(y / g);
            n += 1;
        }
    }
    Fit {
        c: if den > 0.0 { num / den } else { f64::NAN },
        sup: if n > 0 { sup } else { f64::NAN },
        samples: n,
    }
}

/// Fitted constants and flags. "Base" is the side of the reference state
/// (left for the first family, right for the last), "far" the other one.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub family: Family,
    pub eps: f64,
    pub sigma: f64,
    pub base_initial: f64,
    pub base_peak: f64,
    pub base_peak_bound: f64,
    pub base_peak_ok: bool,
    /// Allowed growth rate `10·Δx·scale` of the base-side integral.
    pub monotone_tolerance_rate: f64,
    /// Largest `[Δe − rate·Δt]₊` between consecutive rows.
    pub base_monotone_violation: f64,
    pub base_monotone_ok: bool,
    pub bad_set_measure: f64,
    pub bad_set_ratio: f64,
    pub bad_set_ok: bool,
    /// `e_far ≈ C·ε(1+t)`.
    pub far_growth: Fit,
    /// `|x − σt| ≈ C·√(εt(1+t))`.
    pub drift: Fit,
    pub fits_finite: bool,
    pub all_ok: bool,
}

pub fn stability_report(ledger: &EntropyLedger) -> StabilityReport {
    let eps = ledger.eps;
    let base = ledger.base_series();
    let far = ledger.far_series();
    let rate = 10.0 * ledger.dx * ledger.entropy_scale;
    let mut violation = 0.0f64;
    for w in base.windows(2) {
        violation = violation.max(w[1].1 - w[0].1 - rate * (w[1].0 - w[0].0));
    }
    let base_peak = base.iter().map(|p| p.1).fold(0.0, f64::max);
    let bound = 1.1 * eps.powi(4);
    let far_growth = fit_envelope(&far, |t| eps * (1.0 + t));
    let drift_series: Vec<(f64, f64)> = ledger.rows.iter().map(|r| (r.t, r.drift.abs())).collect();
    let drift = fit_envelope(&drift_series, |t| (eps * t * (1.0 + t)).sqrt());
    let bad_set_ratio = ledger.bad_set_measure / eps;
    let fits_finite = far_growth.finite() && drift.finite();
    let base_peak_ok = base_peak <= bound;
    let base_monotone_ok = violation <= 0.0;
    let bad_set_ok = bad_set_ratio <= 2.0;
    StabilityReport {
        family: ledger.family,
        eps,
        sigma: ledger.sigma,
        base_initial: base.first().map(|p| p.1).unwrap_or(0.0),
        base_peak,
        base_peak_bound: bound,
        base_peak_ok,
        monotone_tolerance_rate: rate,
        base_monotone_violation: violation.max(0.0),
        base_monotone_ok,
        bad_set_measure: ledger.bad_set_measure,
        bad_set_ratio,
        bad_set_ok,
        far_growth,
        drift,
        fits_finite,
        all_ok: base_peak_ok && base_monotone_ok && bad_set_ok && fits_finite,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::preset;

    fn small(name: &str) -> ExperimentConfig {
        let mut cfg = parse_experiment_config(preset(name).unwrap()).unwrap();
        cfg.sim.n /= 8;
        cfg.sim.t_end *= 0.25;
        cfg.sim.snapshot_times.clear();
        cfg.experiment.ledger_samples = 50;
        cfg
    }

    #[test]
    fn presets_parse() {
        for name in ["exact_shock_g2", "perturbed_shock_g2", "two_shock_g2", "full_euler_3shock"] {
            let cfg = parse_experiment_config(preset(name).unwrap()).unwrap();
            assert_eq!(parse_experiment_config(&cfg.to_json()).unwrap(), cfg);
        }
    }

    #[test]
    fn bad_block_reports_field() {
        let text = "{\n  \"type\": \"isentropic\",\n  \"gamma\": 2.0,\n  \"sim\": {\"N\": 10, \"x_lo\": -1, \"x_hi\": 1, \"t_end\": 1, \"bogus\": 1},\n  \"experiment\": {\"family\": \"one\", \"base\": [1, 0], \"s\": 1, \"eps\": 0.1}\n}";
        match parse_experiment_config(text) {
            Err(Error::Config { field, line, .. }) => {
                assert_eq!(field.as_deref(), Some("sim.bogus"));
                assert_eq!(line, Some(4));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_family_rejected() {
        let mut cfg = small("exact_shock_g2");
        cfg.experiment.family = Family::N;
        cfg.experiment.s = -0.5;
        assert!(run_direct(&cfg).is_err());
    }

    #[test]
    fn zero_length_run() {
        let mut cfg = small("exact_shock_g2");
        cfg.sim.t_end = 0.0;
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.ledger.rows.len(), 1);
        assert_eq!(res.ledger.rows[0].t, 0.0);
        assert_eq!(res.ledger.bad_set_measure, 0.0);
    }

    #[test]
    fn exact_shock_ledger() {
        let cfg = small("exact_shock_g2");
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.report.bad_set_measure, 0.0);
        assert!(res.ledger.rows.iter().all(|r| r.e_left >= 0.0 && r.e_right >= 0.0));
        assert!(res.report.fits_finite);
        let lip = res.path.lipschitz_estimate();
        let vmax = res.path.velocities.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(lip <= vmax + 1e-12);
    }

    #[test]
    fn split_matches_whole_integral() {
        let cfg = small("perturbed_shock_g2");
        let sys = cfg.build_system().unwrap();
        let shock = resolve_shock(&sys, &cfg).unwrap();
        let sim = sim_config(&cfg, &shock);
        let (field, _) = crate::solver::initial_field(&sys, &sim).unwrap();
        let rl = Reference::new(&sys, &shock.u_left).unwrap();
        let (l, r) = split_integrals(&sys, &field, 0.123, &rl, &rl).unwrap();
        let whole: f64 = field
            .cells
            .iter()
            .map(|u| rl.relative_entropy(&sys, u).unwrap() * field.dx)
            .sum();
        assert!((l + r - whole).abs() <= 1e-12 * whole.max(1.0));
    }

    #[test]
    fn constant_ledger_is_monotone() {
        let rows = (0..10)
            .map(|k| LedgerRow {
                t: k as f64 * 0.1,
                x: 0.0,
                x_prime: 0.0,
                e_left: 1e-6,
                e_right: 0.01,
                dissipation_left: 0.0,
                dissipation_right: 0.0,
                base_trace_entropy: 0.0,
                drift: 0.0,
            })
            .collect();
        let ledger = EntropyLedger {
            family: Family::One,
            eps: 0.05,
            sigma: -1.0,
            dx: 0.01,
            entropy_scale: 1.0,
            rows,
            bad_set_measure: 0.0,
            t_end: 0.9,
        };
        let rep = stability_report(&ledger);
        assert_eq!(rep.base_monotone_violation, 0.0);
        assert!(rep.base_monotone_ok);
    }

    #[test]
    fn fit_recovers_constant() {
        let series: Vec<(f64, f64)> = (0..=100).map(|k| (k as f64 * 0.01, 3.0 * (1.0 + k as f64 * 0.01))).collect();
        let f = fit_envelope(&series, |t| 1.0 + t);
        assert!((f.c - 3.0).abs() < 1e-12 && (f.sup - 3.0).abs() < 1e-12);
    }
}
