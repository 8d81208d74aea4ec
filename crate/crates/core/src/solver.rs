//! First-order finite-volume solver with an HLL flux and a per-cell audit of
//! the discrete entropy inequality.
//!
//! Wave-speed bounds are Davis estimates widened by `margin_rel` times the
//! largest speed on the grid. The numerical entropy flux is the same HLL
//! combination applied to `(η, G)`; under the CFL restriction it satisfies
//! `η_i^{n+1} ≤ η_i^n − dt/Δx (Ĝ_{i+½} − Ĝ_{i−½})` cell by cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{fmt_state, relative_entropy, ConservationLaw, State};
use crate::error::{Error, Result};
use crate::systems::{SystemSpec, E_FLOOR};

/// Cell averages on a uniform grid with constant ghost states.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub x_lo: f64,
    pub x_hi: f64,
    pub dx: f64,
    pub time: f64,
    pub cells: Vec<State>,
    pub ghost_left: State,
    pub ghost_right: State,
}

impl Field {
    pub fn n(&self) -> usize {
        self.cells.len()
    }

    /// Cell centre. Written so that the grid on `(-x_hi, -x_lo)` has centres
    /// that are exact negatives of these.
    pub fn center(&self, i: usize) -> f64 {
        grid_center(self.x_lo, self.x_hi, self.n(), i)
    }

    pub fn left_edge(&self, i: usize) -> f64 {
        grid_edge(self.x_lo, self.x_hi, self.n(), i)
    }

    pub fn right_edge(&self, i: usize) -> f64 {
        grid_edge(self.x_lo, self.x_hi, self.n(), i + 1)
    }

    /// Overlap-weighted average of a per-cell quantity over `(a, b)`.
    pub fn average_of<F>(&self, a: f64, b: f64, mut f: F) -> f64
    where
        F: FnMut(usize) -> f64,
    {
        let mut acc = 0.0;
        let mut w = 0.0;
        self.for_overlaps(a, b, |i, len| {
            acc += len * f(i);
            w += len;
        });
        if w > 0.0 {
            acc / w
        } else {
            f(self.index_of(a))
        }
    }

    /// Overlap-weighted average state over `(a, b)`.
    pub fn average_state(&self, a: f64, b: f64) -> State {
        let mut acc = State::zeros(self.cells[0].len());
        let mut w = 0.0;
        self.for_overlaps(a, b, |i, len| {
            acc += &self.cells[i] * len;
            w += len;
        });
        if w > 0.0 {
            acc / w
        } else {
            self.cells[self.index_of(a)].clone()
        }
    }

    /// Calls `f(cell, overlap length)` for every cell meeting `(a, b)`.
    pub fn for_overlaps<F: FnMut(usize, f64)>(&self, a: f64, b: f64, mut f: F) {
        let a = a.max(self.x_lo);
        let b = b.min(self.x_hi);
        if b <= a {
            return;
        }
        let i0 = self.index_of(a);
        let i1 = self.index_of(b);
        for i in i0..=i1 {
            let lo = self.left_edge(i).max(a);
            let hi = self.right_edge(i).min(b);
            if hi > lo {
                f(i, hi - lo);
            }
        }
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn index_of(&self, x: f64) -> usize {
        let k = ((x - self.x_lo) / self.dx).floor();
        (k.max(0.0) as usize).min(self.n() - 1)
    }
}

pub fn grid_center(x_lo: f64, x_hi: f64, n: usize, i: usize) -> f64 {
    let (a, b) = ((2 * (n - i) - 1) as f64, (2 * i + 1) as f64);
    (x_lo * a + x_hi * b) / (2 * n) as f64
}

pub fn grid_edge(x_lo: f64, x_hi: f64, n: usize, i: usize) -> f64 {
    (x_lo * (n - i) as f64 + x_hi * i as f64) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Riemann,
    PerturbedShock,
}

/// A compactly supported bump `cos²(πz)(0.75 + 0.25 cos(6πz + φ))`,
/// `z = (x − center)/width`, `|z| < ½`.
///
/// The phase `φ` is drawn from the seed and the bump's geometry and carries
/// the sign of `center`, so reflecting `x → −x` maps a bump onto the bump
/// with negated center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn phase(&self, seed: u64) -> f64 {
        let key = seed ^ self.center.abs().to_bits().rotate_left(17) ^ self.width.to_bits();
        let raw: f64 = ChaCha8Rng::seed_from_u64(key).gen_range(0.0..std::f64::consts::TAU);
        if self.center < 0.0 {
            -raw
        } else {
            raw
        }
    }

    pub fn eval(&self, x: f64, phase: f64) -> f64 {
        let z = (x - self.center) / self.width;
        if z.abs() >= 0.5 {
            return 0.0;
        }
        let pi = std::f64::consts::PI;
        (pi * z).cos().powi(2) * (0.75 + 0.25 * (6.0 * pi * z + phase).cos())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub kind: InitKind,
    pub u_left: State,
    pub u_right: State,
    pub x_shock: f64,
    pub eps: f64,
    pub left_bump: Option<Bump>,
    pub right_bump: Option<Bump>,
    /// Target for `∫_{x<x_shock} η(U⁰|U_L)`.
    pub left_target: f64,
    /// Target for `∫_{x>x_shock} η(U⁰|U_R)`.
    pub right_target: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn riemann(u_left: State, u_right: State, x_shock: f64) -> Self {
        InitSpec {
            kind: InitKind::Riemann,
            u_left,
            u_right,
            x_shock,
            eps: 0.0,
            left_bump: None,
            right_bump: None,
            left_target: 0.0,
            right_target: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub init: InitSpec,
    /// Davis bounds are widened by this fraction of the largest speed.
    pub margin_rel: f64,
    /// Relative deviation from the ghost state that counts as boundary contact.
    pub boundary_tol: f64,
    /// Cumulative positive entropy residual allowed; default
    /// `1e-8 · ‖η‖∞ · span · t_end`.
    pub entropy_budget: Option<f64>,
}

impl SimConfig {
    pub fn new(n: usize, x_lo: f64, x_hi: f64, t_end: f64, init: InitSpec) -> Self {
        SimConfig {
            n,
            x_lo,
            x_hi,
            cfl: 0.45,
            t_end,
            snapshot_times: vec![],
            init,
            margin_rel: 0.01,
            boundary_tol: 1e-8,
            entropy_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::config("sim.N", "need at least 8 cells"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::config("sim.cfl", "cfl must lie in (0, 0.9]"));
        }
        if !(self.x_lo < 0.0 && self.x_hi > 0.0) {
            return Err(Error::config("sim.x_lo", "domain must contain 0"));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::config("sim.t_end", "t_end must be nonnegative"));
        }
        if !(self.margin_rel >= 0.0) {
            return Err(Error::config("sim.margin_rel", "margin must be nonnegative"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n as f64
    }
}

/// Realised amplitudes and relative-entropy integrals of the initial data.
#[derive(Debug, Clone, Serialize)]
pub struct InitReport {
    pub left_amplitude: f64,
    pub right_amplitude: f64,
    pub left_integral: f64,
    pub right_integral: f64,
    pub left_target: f64,
    pub right_target: f64,
}

fn side_integral(sys: &SystemSpec, reference: &State, xs: &[f64], bump: &[f64], dx: f64, a: f64) -> Result<f64> {
    let mut total = 0.0;
    for (_, &b) in xs.iter().zip(bump) {
        if b != 0.0 {
            let u = reference * (1.0 + a * b);
            total += relative_entropy(sys, &u, reference)? * dx;
        }
    }
    Ok(total)
}

/// Bisect the amplitude on `[0, 0.9]` so the side integral hits `target`.
fn fit_amplitude(sys: &SystemSpec, reference: &State, xs: &[f64], bump: &[f64], dx: f64, target: f64, side: &str) -> Result<f64> {
    if target <= 0.0 || bump.iter().all(|&b| b == 0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 0.9);
    if side_integral(sys, reference, xs, bump, dx, hi)? < target {
        return Err(Error::config(
            format!("experiment.{side}_bump"),
            "bump too small to reach the relative-entropy target",
        ));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if side_integral(sys, reference, xs, bump, dx, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Build the initial field: Riemann data split at `x_shock` (the straddling
/// cell takes the overlap average) plus side bumps scaled by their targets.
pub fn initial_field(sys: &SystemSpec, cfg: &SimConfig) -> Result<(Field, InitReport)> {
    cfg.validate()?;
    let init = &cfg.init;
    let dx = cfg.dx();
    let xs: Vec<f64> = (0..cfg.n).map(|i| grid_center(cfg.x_lo, cfg.x_hi, cfg.n, i)).collect();
    let edges: Vec<f64> = (0..=cfg.n).map(|i| grid_edge(cfg.x_lo, cfg.x_hi, cfg.n, i)).collect();
    let profile = |b: &Option<Bump>, left: bool| -> Vec<f64> {
        match (b, init.kind) {
            (Some(b), InitKind::PerturbedShock) => {
                let phase = b.phase(init.seed);
                xs.iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let on_side = if left { edges[i + 1] <= init.x_shock } else { edges[i] >= init.x_shock };
                        if on_side {
                            b.eval(x, phase)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            _ => vec![0.0; xs.len()],
        }
    };
    let bl = profile(&init.left_bump, true);
    let br = profile(&init.right_bump, false);
    let al = fit_amplitude(sys, &init.u_left, &xs, &bl, dx, init.left_target, "left")?;
    let ar = fit_amplitude(sys, &init.u_right, &xs, &br, dx, init.right_target, "right")?;
    let mut cells = Vec::with_capacity(cfg.n);
    for (i, &x) in xs.iter().enumerate() {
        let (lo, hi) = (edges[i], edges[i + 1]);
        let u = if hi <= init.x_shock {
            &init.u_left * (1.0 + al * bl[i])
        } else if lo >= init.x_shock {
            &init.u_right * (1.0 + ar * br[i])
        } else {
            let w = (init.x_shock - lo) / dx;
            &init.u_left * w + &init.u_right * (1.0 - w)
        };
        if !sys.in_closure(&u) {
            return Err(Error::Domain(format!("initial state {} at x = {x:.4}", fmt_state(&u))));
        }
        cells.push(u);
    }
    let field = Field {
        x_lo: cfg.x_lo,
        x_hi: cfg.x_hi,
        dx,
        time: 0.0,
        cells,
        ghost_left: init.u_left.clone(),
        ghost_right: init.u_right.clone(),
    };
    let mut left_integral = 0.0;
    let mut right_integral = 0.0;
    for (i, u) in field.cells.iter().enumerate() {
        if edges[i + 1] <= init.x_shock {
            left_integral += relative_entropy(sys, u, &init.u_left)? * dx;
        } else if edges[i] >= init.x_shock {
            right_integral += relative_entropy(sys, u, &init.u_right)? * dx;
        }
    }
    Ok((
        field,
        InitReport {
            left_amplitude: al,
            right_amplitude: ar,
            left_integral,
            right_integral,
            left_target: init.left_target,
            right_target: init.right_target,
        },
    ))
}

/// Per-cell data reused by the fluxes of one step.
#[derive(Debug, Clone)]
struct CellData {
    flux: State,
    eta: f64,
    g: f64,
    lm: f64,
    lp: f64,
}

fn cell_data(sys: &SystemSpec, u: &State) -> Result<CellData> {
    Ok(CellData {
        flux: sys.flux(u),
        eta: sys.entropy(u)?,
        g: sys.entropy_flux(u)?,
        lm: sys.lambda_minus(u)?,
        lp: sys.lambda_plus(u)?,
    })
}

/// HLL flux of `(A, G)` between two cells given the bounding speeds.
fn hll(l: &CellData, r: &CellData, ul: &State, ur: &State, sl: f64, sr: f64) -> (State, f64) {
    if sl >= 0.0 {
        (l.flux.clone(), l.g)
    } else if sr <= 0.0 {
        (r.flux.clone(), r.g)
    } else {
        let inv = 1.0 / (sr - sl);
        let f = (&l.flux * sr - &r.flux * sl + (ur - ul) * (sl * sr)) * inv;
        let g = (sr * l.g - sl * r.g + sl * sr * (r.eta - l.eta)) * inv;
        (f, g)
    }
}

/// Two-wave HLL flux with Davis bounds widened by `margin_rel` times the
/// largest local speed.
pub fn numerical_flux(sys: &SystemSpec, u_l: &State, u_r: &State, margin_rel: f64) -> Result<State> {
    let l = cell_data(sys, u_l)?;
    let r = cell_data(sys, u_r)?;
    let vmax = l.lm.abs().max(l.lp.abs()).max(r.lm.abs()).max(r.lp.abs());
    let margin = margin_rel * vmax;
    Ok(hll(&l, &r, u_l, u_r, l.lm.min(r.lm) - margin, l.lp.max(r.lp) + margin).0)
}

/// Numerical entropy flux matching [`numerical_flux`].
pub fn numerical_entropy_flux(sys: &SystemSpec, u_l: &State, u_r: &State, margin_rel: f64) -> Result<f64> {
    let l = cell_data(sys, u_l)?;
    let r = cell_data(sys, u_r)?;
    let vmax = l.lm.abs().max(l.lp.abs()).max(r.lm.abs()).max(r.lp.abs());
    let margin = margin_rel * vmax;
    Ok(hll(&l, &r, u_l, u_r, l.lm.min(r.lm) - margin, l.lp.max(r.lp) + margin).1)
}

/// `η_i^{n+1} − η_i^n)/dt + (Ĝ_{i+½} − Ĝ_{i−½})/Δx` per cell.
pub fn entropy_residual(before: &Field, after: &Field, entropy_fluxes: &[f64], sys: &SystemSpec) -> Result<Vec<f64>> {
    let dt = after.time - before.time;
    let n = before.n();
    if entropy_fluxes.len() != n + 1 {
        return Err(Error::DegenerateInput("need one entropy flux per interface".into()));
    }
    (0..n)
        .map(|i| {
            let de = sys.entropy(&after.cells[i])? - sys.entropy(&before.cells[i])?;
            Ok(de / dt + (entropy_fluxes[i + 1] - entropy_fluxes[i]) / before.dx)
        })
        .collect()
}

/// Reset a state below the vacuum or internal-energy floor. Returns whether
/// anything changed.
pub fn apply_floor(sys: &SystemSpec, u: &mut State, rho_floor: f64) -> bool {
    match sys.base() {
        SystemSpec::Isentropic(_) => {
            if u[0] < rho_floor {
                u[0] = rho_floor;
                u[1] = 0.0;
                return true;
            }
            false
        }
        SystemSpec::FullEuler(_) => {
            if u[0] < rho_floor {
                u[0] = rho_floor;
                u[1] = 0.0;
                u[2] = rho_floor * 2.0 * E_FLOOR;
                return true;
            }
            let kinetic = 0.5 * u[1] * u[1] / u[0];
            if u[2] - kinetic < u[0] * E_FLOOR {
                u[2] = kinetic + u[0] * 2.0 * E_FLOOR;
                return true;
            }
            false
        }
        _ => false,
    }
}

fn rho_floor(sys: &SystemSpec) -> f64 {
    match sys.base() {
        SystemSpec::Isentropic(s) => s.domain.rho_floor,
        SystemSpec::FullEuler(s) => s.domain.rho_floor,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FloorEvent {
    pub t: f64,
    pub cell: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepInfo {
    pub dt: f64,
    pub time: f64,
    pub max_speed: f64,
    /// `max|λ|·dt/Δx`.
    pub cfl: f64,
    pub max_residual: f64,
    /// `Σ_i max(r_i, 0)·Δx·dt`.
    pub positive_residual: f64,
    /// Cells whose residual exceeds `1e-8·‖η‖∞/dt`.
    pub violations: usize,
    /// `‖Σ(U^{n+1} − U^n)Δx + dt(F_right − F_left)‖∞`.
    pub conservation_drift: f64,
    pub floor_events: usize,
}

/// Time stepper holding the current field.
pub struct Solver<'a> {
    sys: &'a SystemSpec,
    pub cfg: SimConfig,
    pub field: Field,
    rho_floor: f64,
    pub floor_log: Vec<FloorEvent>,
    last_residuals: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(sys: &'a SystemSpec, cfg: SimConfig, field: Field) -> Self {
        Solver {
            sys,
            rho_floor: rho_floor(sys),
            cfg,
            field,
            floor_log: Vec::new(),
            last_residuals: Vec::new(),
        }
    }

    pub fn system(&self) -> &SystemSpec {
        self.sys
    }

    /// Entropy residuals of the last step.
    pub fn residuals(&self) -> &[f64] {
        &self.last_residuals
    }

    /// Largest stable step for the current field.
    pub fn stable_dt(&self) -> Result<f64> {
        let mut vmax = 0.0f64;
        for u in self.field.cells.iter().chain([&self.field.ghost_left, &self.field.ghost_right]) {
            vmax = vmax.max(self.sys.lambda_minus(u)?.abs()).max(self.sys.lambda_plus(u)?.abs());
        }
        Ok(self.cfg.cfl * self.field.dx / (vmax * (1.0 + self.cfg.margin_rel)).max(1e-300))
    }

    /// Advance by `min(stable dt, dt_cap)`.
    pub fn step(&mut self, dt_cap: f64) -> Result<StepInfo> {
        let sys = self.sys;
        let f = &self.field;
        let n = f.n();
        let mut data = Vec::with_capacity(n + 2);
        data.push(cell_data(sys, &f.ghost_left)?);
        for u in &f.cells {
            data.push(cell_data(sys, u)?);
        }
        data.push(cell_data(sys, &f.ghost_right)?);
        let vmax = data.iter().map(|d| d.lm.abs().max(d.lp.abs())).fold(0.0, f64::max);
        let margin = self.cfg.margin_rel * vmax;
        let dt = (self.cfg.cfl * f.dx / (vmax + margin).max(1e-300)).min(dt_cap);
        if !(dt > 0.0) {
            return Err(Error::BlowUp {
                t: f.time,
                msg: format!("nonpositive time step {dt:.3e}"),
            });
        }
        let state_at = |k: usize| -> &State {
            if k == 0 {
                &f.ghost_left
            } else if k == n + 1 {
                &f.ghost_right
            } else {
                &f.cells[k - 1]
            }
        };
        let mut fluxes = Vec::with_capacity(n + 1);
        let mut gflux = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let (l, r) = (&data[k], &data[k + 1]);
            let sl = l.lm.min(r.lm) - margin;
            let sr = l.lp.max(r.lp) + margin;
            let (fa, fg) = hll(l, r, state_at(k), state_at(k + 1), sl, sr);
            fluxes.push(fa);
            gflux.push(fg);
        }
        let ratio = dt / f.dx;
        let mut cells = Vec::with_capacity(n);
        let mut floors = 0;
        let t_new = f.time + dt;
        for i in 0..n {
            let mut u = &f.cells[i] - (&fluxes[i + 1] - &fluxes[i]) * ratio;
            if apply_floor(sys, &mut u, self.rho_floor) {
                floors += 1;
                self.floor_log.push(FloorEvent { t: t_new, cell: i });
            }
            if !u.iter().all(|v| v.is_finite()) || !sys.in_closure(&u) {
                return Err(Error::BlowUp {
                    t: t_new,
                    msg: format!("cell {i} left the state domain: {}", fmt_state(&u)),
                });
            }
            cells.push(u);
        }

        let m = f.cells[0].len();
        let mut drift = 0.0f64;
        for c in 0..m {
            let mut sum = 0.0;
            for i in 0..n {
                sum += (cells[i][c] - f.cells[i][c]) * f.dx;
            }
            drift = drift.max((sum + dt * (fluxes[n][c] - fluxes[0][c])).abs());
        }

        let eta_scale = data.iter().map(|d| d.eta.abs()).fold(0.0, f64::max).max(1e-300);
        let cell_tol = 1e-8 * eta_scale / dt;
        let mut residuals = Vec::with_capacity(n);
        let mut max_residual = f64::NEG_INFINITY;
        let mut positive = 0.0;
        let mut violations = 0;
        for i in 0..n {
            let r = (sys.entropy(&cells[i])? - data[i + 1].eta) / dt + (gflux[i + 1] - gflux[i]) / f.dx;
            max_residual = max_residual.max(r);
            if r > 0.0 {
                positive += r * dt * f.dx;
            }
            if r > cell_tol {
                violations += 1;
            }
            residuals.push(r);
        }

        for (idx, ghost) in [(0usize, &f.ghost_left), (n - 1, &f.ghost_right)] {
            let dev = (&cells[idx] - ghost).amax();
            if dev > self.cfg.boundary_tol * (1.0 + ghost.amax()) {
                return Err(Error::BoundaryContact { t: t_new, cell: idx });
            }
        }

        self.field.cells = cells;
        self.field.time = t_new;
        self.last_residuals = residuals;
        Ok(StepInfo {
            dt,
            time: t_new,
            max_speed: vmax,
            cfl: vmax * dt / self.field.dx,
            max_residual,
            positive_residual: positive,
            violations,
            conservation_drift: drift,
            floor_events: floors,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: Field,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: Field,
    pub init_report: InitReport,
    pub snapshots: Vec<Snapshot>,
    pub final_field: Field,
    pub dt_history: Vec<f64>,
    pub max_cfl: f64,
    pub entropy_violations: usize,
    pub max_residual: f64,
    pub positive_residual_total: f64,
    pub entropy_budget: f64,
    pub max_conservation_drift: f64,
    pub floor_events: Vec<FloorEvent>,
}

impl Trajectory {
    pub fn within_budget(&self) -> bool {
        self.positive_residual_total <= self.entropy_budget
    }
}

pub fn default_budget(sys: &SystemSpec, field: &Field, t_end: f64) -> Result<f64> {
    let mut eta_max = 0.0f64;
    for u in &field.cells {
        eta_max = eta_max.max(sys.entropy(u)?.abs());
    }
    Ok(1e-8 * eta_max.max(1e-300) * (field.x_hi - field.x_lo) * t_end)
}

/// The next stopping time after `t`: a snapshot time or `t_end`.
pub fn next_stop(t: f64, t_end: f64, snapshot_times: &[f64]) -> f64 {
    snapshot_times
        .iter()
        .copied()
        .filter(|&s| s > t * (1.0 + 1e-14) + 1e-300 && s < t_end)
        .fold(t_end, f64::min)
}

pub fn run(sys: &SystemSpec, cfg: &SimConfig) -> Result<Trajectory> {
    run_with(sys, cfg, |_, _| Ok(()))
}

/// [`run`] with an observer called on the initial field (`None`) and after
/// every step, once the step's time has been fixed.
pub fn run_with<F>(sys: &SystemSpec, cfg: &SimConfig, mut observe: F) -> Result<Trajectory>
where
    F: FnMut(&Field, Option<&StepInfo>) -> Result<()>,
{
    let (field, init_report) = initial_field(sys, cfg)?;
    let budget = match cfg.entropy_budget {
        Some(b) => b,
        None => default_budget(sys, &field, cfg.t_end)?,
    };
    let mut solver = Solver::new(sys, cfg.clone(), field.clone());
    let mut traj = Trajectory {
        initial: field,
        init_report,
        snapshots: Vec::new(),
        final_field: solver.field.clone(),
        dt_history: Vec::new(),
        max_cfl: 0.0,
        entropy_violations: 0,
        max_residual: f64::NEG_INFINITY,
        positive_residual_total: 0.0,
        entropy_budget: budget,
        max_conservation_drift: 0.0,
        floor_events: Vec::new(),
    };
    let mut snaps: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|&s| s <= cfg.t_end).collect();
    snaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut next_snap = 0;
    observe(&solver.field, None)?;
    while next_snap < snaps.len() && snaps[next_snap] <= 0.0 {
        traj.snapshots.push(Snapshot {
            field: solver.field.clone(),
            residuals: vec![0.0; solver.field.n()],
        });
        next_snap += 1;
    }
    while solver.field.time < cfg.t_end {
        let stop = next_stop(solver.field.time, cfg.t_end, &snaps);
        let info = solver.step(stop - solver.field.time)?;
        traj.dt_history.push(info.dt);
        traj.max_cfl = traj.max_cfl.max(info.cfl);
        traj.entropy_violations += info.violations;
        traj.max_residual = traj.max_residual.max(info.max_residual);
        traj.positive_residual_total += info.positive_residual;
        traj.max_conservation_drift = traj.max_conservation_drift.max(info.conservation_drift);
        if info.time >= stop {
            solver.field.time = stop;
        }
        observe(&solver.field, Some(&info))?;
        while next_snap < snaps.len() && solver.field.time >= snaps[next_snap] {
            traj.snapshots.push(Snapshot {
                field: solver.field.clone(),
                residuals: solver.residuals().to_vec(),
            });
            next_snap += 1;
        }
    }
    traj.floor_events = std::mem::take(&mut solver.floor_log);
    traj.final_field = solver.field;
    Ok(traj)
}

/// Position where the first component crosses the midpoint of `lo` and
/// `hi`, by linear interpolation between cell centres.
pub fn shock_position(field: &Field, lo: f64, hi: f64) -> Option<f64> {
    let mid = 0.5 * (lo + hi);
    for i in 0..field.n() - 1 {
        let a = field.cells[i][0] - mid;
        let b = field.cells[i + 1][0] - mid;
        if a == 0.0 {
            return Some(field.center(i));
        }
        if a * b < 0.0 {
            let w = a / (a - b);
            return Some(field.center(i) + w * field.dx);
        }
    }
    None
}

/// `Σ_i |U_i − U_exact(x_i)|₁ Δx` against a single jump at `x_jump`, with the
/// straddling cell compared to its exact average.
pub fn l1_distance_to_jump(field: &Field, u_left: &State, u_right: &State, x_jump: f64) -> f64 {
    let mut total = 0.0;
    for (i, u) in field.cells.iter().enumerate() {
        let lo = field.left_edge(i);
        let w = ((x_jump - lo) / field.dx).clamp(0.0, 1.0);
        let exact = u_left * w + u_right * (1.0 - w);
        total += (u - exact).abs().sum() * field.dx;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::state;
    use crate::hugoniot::{shock_curve, Family};
    use crate::systems::{make_isentropic, DomainBox, PressureLaw};

    fn g2() -> SystemSpec {
        SystemSpec::Isentropic(make_isentropic(PressureLaw::power(2.0).unwrap(), DomainBox::default()).unwrap())
    }

    fn unit_shock(sys: &SystemSpec) -> (State, State, f64) {
        let c = shock_curve(sys, &state(&[1.0, 0.0]), Family::One).unwrap();
        let (ur, sigma) = c.eval(1.0).unwrap();
        (state(&[1.0, 0.0]), ur, sigma)
    }

    #[test]
    fn flux_is_consistent() {
        let sys = g2();
        let u = state(&[1.3, 0.4]);
        assert!((numerical_flux(&sys, &u, &u, 0.01).unwrap() - sys.flux(&u)).amax() < 1e-14);
    }

    #[test]
    fn supersonic_flux_is_upwind() {
        let sys = g2();
        let ul = state(&[1.0, 3.0]);
        let ur = state(&[1.2, 3.0]);
        assert_eq!(numerical_flux(&sys, &ul, &ur, 0.01).unwrap(), sys.flux(&ul));
    }

    #[test]
    fn constant_field_is_steady() {
        let sys = g2();
        let u = state(&[1.0, 0.5]);
        let cfg = SimConfig::new(50, -1.0, 1.0, 0.1, InitSpec::riemann(u.clone(), u.clone(), 0.0));
        let traj = run(&sys, &cfg).unwrap();
        for c in &traj.final_field.cells {
            assert!((c - &u).amax() < 1e-14);
        }
        assert!(traj.max_residual.abs() < 1e-13);
    }

    #[test]
    fn single_step_conserves_and_audits() {
        let sys = g2();
        let (ul, ur, _) = unit_shock(&sys);
        let cfg = SimConfig::new(200, -1.0, 1.0, 0.0, InitSpec::riemann(ul, ur, 0.0));
        let (field, _) = initial_field(&sys, &cfg).unwrap();
        let before = field.clone();
        let mut solver = Solver::new(&sys, cfg, field);
        let info = solver.step(f64::INFINITY).unwrap();
        assert!(info.conservation_drift <= 1e-12);
        assert!(info.cfl <= 0.45 + 1e-12);
        let gflux: Vec<f64> = (0..=before.n())
            .map(|k| {
                let l = if k == 0 { &before.ghost_left } else { &before.cells[k - 1] };
                let r = if k == before.n() { &before.ghost_right } else { &before.cells[k] };
                numerical_entropy_flux(&sys, l, r, 0.01).unwrap()
            })
            .collect();
        let r = entropy_residual(&before, &solver.field, &gflux, &sys).unwrap();
        assert!(r.iter().cloned().fold(f64::NEG_INFINITY, f64::max) <= 1e-10);
    }

    #[test]
    fn exact_shock_moves_at_its_speed() {
        let sys = g2();
        let (ul, ur, sigma) = unit_shock(&sys);
        let cfg = SimConfig::new(400, -2.0, 2.0, 0.1, InitSpec::riemann(ul.clone(), ur.clone(), 0.0));
        let traj = run(&sys, &cfg).unwrap();
        let x = shock_position(&traj.final_field, ul[0], ur[0]).unwrap();
        assert!((x - sigma * 0.1).abs() <= 2.0 * cfg.dx(), "{x} vs {}", sigma * 0.1);
        assert!(traj.within_budget());
    }

    #[test]
    fn one_step_deviation_is_bounded() {
        let sys = g2();
        let (ul, ur, _) = unit_shock(&sys);
        let cfg = SimConfig::new(400, -2.0, 2.0, 0.0, InitSpec::riemann(ul.clone(), ur.clone(), 0.0));
        let (field, _) = initial_field(&sys, &cfg).unwrap();
        let mut solver = Solver::new(&sys, cfg.clone(), field);
        let info = solver.step(f64::INFINITY).unwrap();
        let sigma = -6f64.sqrt();
        let dev = l1_distance_to_jump(&solver.field, &ul, &ur, sigma * info.dt);
        assert!(dev <= 10.0 * cfg.dx() * (&ur - &ul).norm());
    }

    #[test]
    fn expansion_jump_spreads() {
        let sys = g2();
        let (ul, ur, _) = unit_shock(&sys);
        // swapped: an entropy-violating jump that must open into a rarefaction
        let cfg = SimConfig::new(400, -2.0, 2.0, 0.2, InitSpec::riemann(ur.clone(), ul.clone(), 0.0));
        let traj = run(&sys, &cfg).unwrap();
        assert!(traj.within_budget());
        let rho: Vec<f64> = traj.final_field.cells.iter().map(|u| u[0]).collect();
        let steepest = rho.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(steepest < 0.1 * (ur[0] - ul[0]).abs());
    }

    #[test]
    fn perturbation_hits_targets() {
        let sys = g2();
        let (ul, ur, _) = unit_shock(&sys);
        let eps = 0.05;
        let init = InitSpec {
            kind: InitKind::PerturbedShock,
            u_left: ul,
            u_right: ur,
            x_shock: 0.0,
            eps,
            left_bump: Some(Bump { center: -1.5, width: 1.0 }),
            right_bump: Some(Bump { center: 1.2, width: 2.0 }),
            left_target: eps.powi(4),
            right_target: eps,
            seed: 3,
        };
        let cfg = SimConfig::new(800, -6.0, 4.0, 0.0, init);
        let (_, rep) = initial_field(&sys, &cfg).unwrap();
        assert!((rep.left_integral / rep.left_target - 1.0).abs() < 0.05);
        assert!((rep.right_integral / rep.right_target - 1.0).abs() < 0.05);
    }

    #[test]
    fn boundary_contact_detected() {
        let sys = g2();
        let (ul, ur, _) = unit_shock(&sys);
        let cfg = SimConfig::new(100, -0.2, 0.2, 0.5, InitSpec::riemann(ul, ur, 0.0));
        assert!(matches!(run(&sys, &cfg), Err(Error::BoundaryContact { .. })));
    }

    #[test]
    fn zero_time_returns_initial_field() {
        let sys = g2();
        let (ul, ur, _) = unit_shock(&sys);
        let cfg = SimConfig::new(100, -1.0, 1.0, 0.0, InitSpec::riemann(ul, ur, 0.0));
        let traj = run(&sys, &cfg).unwrap();
        assert_eq!(traj.final_field, traj.initial);
    }
}
