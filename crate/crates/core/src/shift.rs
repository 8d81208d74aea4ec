//! Shift path driven by the relative-entropy velocity functional, with
//! trace extraction and the audits that go with it.
//!
//! For 1-discontinuities the functional is referenced to the left state and
//! averages to the right of the path. For n-discontinuities everything is
//! the reflection: reference on the right, `max{F/η, λ⁺} + ε`, averaging to
//! the left.

use serde::Serialize;

use crate::calculus::{ConservationLaw, Reference, State};
use crate::error::{Error, Result};
use crate::hugoniot::Family;
use crate::solver::Field;
use crate::systems::SystemSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityParams {
    pub eps: f64,
    /// Below this value of `η(u|U_ref)` the ratio branch takes its limit.
    pub eta_floor: f64,
    /// `U_L` for the first family, `U_R` for the last.
    pub reference: State,
    pub family: Family,
}

impl VelocityParams {
    pub fn new(eps: f64, u_left: State) -> Self {
        VelocityParams {
            eps,
            eta_floor: 1e-12,
            reference: u_left,
            family: Family::One,
        }
    }

    pub fn for_family(eps: f64, reference: State, family: Family) -> Self {
        VelocityParams {
            family,
            ..Self::new(eps, reference)
        }
    }
}

/// `V(u) = min{F(u,U_L)/η(u|U_L), λ⁻(u)} − ε` with the limit value at `U_L`
/// and the ratio alone at vacuum; the last family uses the reflected form.
pub struct Velocity<'a> {
    sys: &'a SystemSpec,
    pub params: VelocityParams,
    reference: Reference,
    lambda_ref: f64,
}

impl<'a> Velocity<'a> {
    pub fn new(sys: &'a SystemSpec, params: VelocityParams) -> Result<Self> {
        if !(params.eps > 0.0 && params.eta_floor > 0.0) {
            return Err(Error::Range("velocity needs eps > 0 and eta_floor > 0".into()));
        }
        let reference = Reference::new(sys, &params.reference)?;
        let lambda_ref = params.family.extreme_speed(sys, &params.reference)?;
        Ok(Velocity {
            sys,
            params,
            reference,
            lambda_ref,
        })
    }

    pub fn system(&self) -> &SystemSpec {
        self.sys
    }

    pub fn family(&self) -> Family {
        self.params.family
    }

    /// Value at the reference state.
    pub fn at_reference(&self) -> f64 {
        self.offset(self.lambda_ref)
    }

    fn offset(&self, v: f64) -> f64 {
        match self.params.family {
            Family::One => v - self.params.eps,
            Family::N => v + self.params.eps,
        }
    }

    pub fn eval(&self, u: &State) -> Result<f64> {
        let rel = self.reference.relative_entropy(self.sys, u)?;
        if self.sys.is_singular(u) {
            return Ok(self.offset(self.reference.relative_flux(self.sys, u)? / rel));
        }
        let ratio = if rel < self.params.eta_floor {
            self.lambda_ref
        } else {
            self.reference.relative_flux(self.sys, u)? / rel
        };
        let lambda = self.params.family.extreme_speed(self.sys, u)?;
        Ok(self.offset(match self.params.family {
            Family::One => ratio.min(lambda),
            Family::N => ratio.max(lambda),
        }))
    }

    /// Whether `u` is a vacuum state, where `V` may jump.
    pub fn is_vacuum(&self, u: &State) -> bool {
        self.sys.is_singular(u)
    }
}

pub fn velocity_v(sys: &SystemSpec, u: &State, params: &VelocityParams) -> Result<f64> {
    Velocity::new(sys, params.clone())?.eval(u)
}

/// The averaging interval: `(x, x + window)` for the first family,
/// `(x − window, x)` for the last.
pub fn window_interval(family: Family, x: f64, window: f64) -> (f64, f64) {
    match family {
        Family::One => (x, x + window),
        Family::N => (x - window, x),
    }
}

/// Overlap-weighted average of `V` over the window next to `x`.
pub fn windowed_velocity(field: &Field, x: f64, window: f64, vel: &Velocity) -> Result<f64> {
    let (a, b) = window_interval(vel.family(), x, window);
    if a < field.x_lo || b > field.x_hi || !(window > 0.0) {
        return Err(Error::OutOfDomain {
            x,
            lo: field.x_lo,
            hi: field.x_hi,
        });
    }
    let mut acc = 0.0;
    let mut w = 0.0;
    let mut err = None;
    field.for_overlaps(a, b, |i, len| match vel.eval(&field.cells[i]) {
        Ok(v) => {
            acc += len * v;
            w += len;
        }
        Err(e) => err = Some(e),
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(acc / w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceParams {
    pub k_cells: usize,
    pub layer_skip: usize,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams {
            k_cells: 4,
            layer_skip: 3,
        }
    }
}

/// Intervals feeding the left and right traces. The trace on the window
/// side starts past the window, since the path sits upstream of the layer
/// it averages over.
fn trace_intervals(dx: f64, x: f64, window: f64, family: Family, p: TraceParams) -> [(f64, f64); 2] {
    let (lo_off, hi_off) = match family {
        Family::One => (0.0, window),
        Family::N => (window, 0.0),
    };
    let skip = p.layer_skip as f64 * dx;
    let reach = (p.k_cells + p.layer_skip) as f64 * dx;
    [
        (x - lo_off - reach, x - lo_off - skip),
        (x + hi_off + skip, x + hi_off + reach),
    ]
}

/// One-sided averages of `k_cells` cells, skipping `layer_skip` cells next
/// to the front, with the window-side trace moved past the window.
pub fn extract_traces_windowed(
    field: &Field,
    x: f64,
    window: f64,
    family: Family,
    p: TraceParams,
) -> Result<(State, State)> {
    if p.k_cells == 0 {
        return Err(Error::Range("k_cells must be at least 1".into()));
    }
    let [l, r] = trace_intervals(field.dx, x, window, family, p);
    if l.0 < field.x_lo || r.1 > field.x_hi {
        return Err(Error::OutOfDomain {
            x,
            lo: field.x_lo,
            hi: field.x_hi,
        });
    }
    Ok((field.average_state(l.0, l.1), field.average_state(r.0, r.1)))
}

pub fn extract_traces(field: &Field, x: f64, p: TraceParams) -> Result<(State, State)> {
    extract_traces_windowed(field, x, 0.0, Family::One, p)
}

/// Largest `|V(cell) − V(trace)|` over the cells feeding either trace.
fn trace_noise(field: &Field, x: f64, window: f64, p: TraceParams, vel: &Velocity, traces: &(State, State)) -> Result<f64> {
    let [l, r] = trace_intervals(field.dx, x, window, vel.family(), p);
    let vm = vel.eval(&traces.0)?;
    let vp = vel.eval(&traces.1)?;
    let mut noise = 0.0f64;
    let mut err = None;
    field.for_overlaps(l.0, l.1, |i, _| match vel.eval(&field.cells[i]) {
        Ok(v) => noise = noise.max((v - vm).abs()),
        Err(e) => err = Some(e),
    });
    field.for_overlaps(r.0, r.1, |i, _| match vel.eval(&field.cells[i]) {
        Ok(v) => noise = noise.max((v - vp).abs()),
        Err(e) => err = Some(e),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(noise),
    }
}

/// Default mollification width: `max(4Δx, ε·span/100)`.
pub fn default_window(field: &Field, eps: f64) -> f64 {
    (4.0 * field.dx).max(eps * (field.x_hi - field.x_lo) / 100.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftPath {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Velocity used on the step starting at the matching time.
    pub velocities: Vec<f64>,
    pub traces: Vec<(State, State)>,
    pub trace_noise: Vec<f64>,
    pub window: f64,
    pub trace_params: TraceParams,
}

impl ShiftPath {
    pub fn new(x0: f64, window: f64, trace_params: TraceParams) -> Self {
        ShiftPath {
            times: vec![],
            positions: vec![],
            velocities: vec![],
            traces: vec![],
            trace_noise: vec![],
            window,
            trace_params,
        }
        .with_start(x0)
    }

    fn with_start(mut self, x0: f64) -> Self {
        self.positions.push(x0);
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Current position.
    pub fn position(&self) -> f64 {
        *self.positions.last().unwrap()
    }

    /// Record the sample at the field's time without moving.
    pub fn record(&mut self, field: &Field, vel: &Velocity) -> Result<()> {
        let x = self.position();
        if self.times.len() == self.positions.len() {
            // already sampled at this position
            return Ok(());
        }
        let v = windowed_velocity(field, x, self.window, vel)?;
        let traces = extract_traces_windowed(field, x, self.window, vel.family(), self.trace_params)?;
        let noise = trace_noise(field, x, self.window, self.trace_params, vel, &traces)?;
        self.times.push(field.time);
        self.velocities.push(v);
        self.traces.push(traces);
        self.trace_noise.push(noise);
        Ok(())
    }

    /// Explicit Euler step `x ← x + dt·v(t, x)` using the field at the start
    /// of the step; the sample at the current time is recorded first.
    pub fn advance(&mut self, field: &Field, dt: f64, vel: &Velocity) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        self.record(field, vel)?;
        self.move_by(dt);
        Ok(())
    }

    /// Move with the last recorded velocity. Used in lockstep with a solver
    /// whose step size is only known after the sample was taken.
    pub fn move_by(&mut self, dt: f64) {
        let x = self.position() + dt * self.velocities.last().copied().unwrap_or(0.0);
        self.positions.push(x);
    }

    /// Largest `|x(t₂) − x(t₁)|/|t₂ − t₁|` over consecutive samples.
    pub fn lipschitz_estimate(&self) -> f64 {
        let n = self.times.len().min(self.positions.len());
        (1..n)
            .filter(|&i| self.times[i] > self.times[i - 1])
            .map(|i| (self.positions[i] - self.positions[i - 1]).abs() / (self.times[i] - self.times[i - 1]))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FilippovSample {
    pub t: f64,
    pub x_prime: f64,
    pub vmin: f64,
    pub vmax: f64,
    pub slack: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FilippovReport {
    pub samples: Vec<FilippovSample>,
    pub violations: usize,
    pub violation_fraction: f64,
    pub vacuum_samples: usize,
}

/// `V_min ≤ x′ ≤ V_max` per sample, with slack `1e-9 + trace noise`. A vacuum
/// trace opens the bound on the side the functional may jump to.
pub fn filippov_check(path: &ShiftPath, vel: &Velocity) -> Result<FilippovReport> {
    let mut samples = Vec::with_capacity(path.len());
    let mut violations = 0;
    let mut vacuum_samples = 0;
    for i in 0..path.len() {
        let (um, up) = &path.traces[i];
        let vm = vel.eval(um)?;
        let vp = vel.eval(up)?;
        let (mut vmin, mut vmax) = (vm.min(vp), vm.max(vp));
        if vel.is_vacuum(um) || vel.is_vacuum(up) {
            vacuum_samples += 1;
            match vel.family() {
                Family::One => vmin = f64::NEG_INFINITY,
                Family::N => vmax = f64::INFINITY,
            }
        }
        let xp = path.velocities[i];
        let slack = 1e-9 + path.trace_noise[i];
        let violated = xp > vmax + slack || xp < vmin - slack;
        if violated {
            violations += 1;
        }
        samples.push(FilippovSample {
            t: path.times[i],
            x_prime: xp,
            vmin,
            vmax,
            slack,
            violated,
        });
    }
    let n = samples.len().max(1);
    Ok(FilippovReport {
        samples,
        violations,
        violation_fraction: violations as f64 / n as f64,
        vacuum_samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DafermosSample {
    pub t: f64,
    pub jump: f64,
    /// `‖ΔA − x′Δu‖∞/|Δu|`.
    pub rh_residual: f64,
    /// Same with the least-squares speed of the traces.
    pub rh_residual_ls: f64,
    pub sigma_ls: f64,
    /// `[ΔG − x′Δη]₊`.
    pub entropy_excess: f64,
    /// `[ΔG − σ_LS Δη]₊`.
    pub entropy_excess_ls: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DafermosReport {
    pub jump_tol: f64,
    pub samples: Vec<DafermosSample>,
    pub skipped: usize,
    pub max_rh_residual: f64,
    pub max_rh_residual_ls: f64,
    pub max_entropy_excess: f64,
    pub max_entropy_excess_ls: f64,
}

/// Jump relations along the path at samples whose traces differ by more
/// than `jump_tol`.
pub fn dafermos_check(path: &ShiftPath, sys: &SystemSpec, jump_tol: f64) -> Result<DafermosReport> {
    let mut samples = Vec::new();
    let mut skipped = 0;
    for i in 0..path.len() {
        let (um, up) = &path.traces[i];
        let du = up - um;
        let jump = du.norm();
        if jump <= jump_tol {
            skipped += 1;
            continue;
        }
        let da = sys.flux(up) - sys.flux(um);
        let xp = path.velocities[i];
        let sigma_ls = du.dot(&da) / du.norm_squared();
        let dg = sys.entropy_flux(up)? - sys.entropy_flux(um)?;
        let de = sys.entropy(up)? - sys.entropy(um)?;
        samples.push(DafermosSample {
            t: path.times[i],
            jump,
            rh_residual: (&da - &du * xp).amax() / jump,
            rh_residual_ls: (&da - &du * sigma_ls).amax() / jump,
            sigma_ls,
            entropy_excess: (dg - xp * de).max(0.0),
            entropy_excess_ls: (dg - sigma_ls * de).max(0.0),
        });
    }
    let mx = |f: fn(&DafermosSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(DafermosReport {
        jump_tol,
        skipped,
        max_rh_residual: mx(|s| s.rh_residual),
        max_rh_residual_ls: mx(|s| s.rh_residual_ls),
        max_entropy_excess: mx(|s| s.entropy_excess),
        max_entropy_excess_ls: mx(|s| s.entropy_excess_ls),
        samples,
    })
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

    fn constant_field(u: &State, n: usize) -> Field {
        Field {
            x_lo: -1.0,
            x_hi: 1.0,
            dx: 2.0 / n as f64,
            time: 0.0,
            cells: vec![u.clone(); n],
            ghost_left: u.clone(),
            ghost_right: u.clone(),
        }
    }

    fn jump_field(ul: &State, ur: &State, n: usize) -> Field {
        let mut f = constant_field(ul, n);
        for i in n / 2..n {
            f.cells[i] = ur.clone();
        }
        f.ghost_right = ur.clone();
        f
    }

    #[test]
    fn reference_value() {
        let sys = g2();
        let ul = state(&[1.0, 0.0]);
        let p = VelocityParams::new(0.05, ul.clone());
        let v = velocity_v(&sys, &ul, &p).unwrap();
        assert_eq!(v, -(2f64.sqrt()) - 0.05);
    }

    #[test]
    fn min_bound() {
        let sys = g2();
        let p = VelocityParams::new(0.05, state(&[1.0, 0.0]));
        let u = state(&[2.0, 2.0]);
        let v = velocity_v(&sys, &u, &p).unwrap();
        assert!(v <= sys.lambda_minus(&u).unwrap() - 0.05);
        let ratio = crate::calculus::relative_flux(&sys, &u, &p.reference).unwrap()
            / crate::calculus::relative_entropy(&sys, &u, &p.reference).unwrap();
        assert!(v <= ratio - 0.05 + 1e-15);
    }

    #[test]
    fn vacuum_uses_ratio() {
        let sys = g2();
        let p = VelocityParams::new(0.05, state(&[1.0, 0.0]));
        let vel = Velocity::new(&sys, p).unwrap();
        let v = vel.eval(&state(&[0.0, 0.0])).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn constant_field_window() {
        let sys = g2();
        let ul = state(&[1.0, 0.0]);
        let vel = Velocity::new(&sys, VelocityParams::new(0.05, ul.clone())).unwrap();
        let f = constant_field(&ul, 100);
        let v = windowed_velocity(&f, 0.1, 0.08, &vel).unwrap();
        assert!((v - vel.at_reference()).abs() < 1e-15);
        assert!(windowed_velocity(&f, 0.95, 0.08, &vel).is_err());
    }

    #[test]
    fn single_cell_window() {
        let sys = g2();
        let ul = state(&[1.0, 0.0]);
        let vel = Velocity::new(&sys, VelocityParams::new(0.05, ul.clone())).unwrap();
        let mut f = constant_field(&ul, 100);
        for (i, c) in f.cells.iter_mut().enumerate() {
            *c = state(&[1.0 + 0.01 * i as f64, 0.1]);
        }
        let x = f.left_edge(37);
        let v = windowed_velocity(&f, x, f.dx, &vel).unwrap();
        assert!((v - vel.eval(&f.cells[37]).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn window_over_jump_is_between() {
        let sys = g2();
        let ul = state(&[1.0, 0.0]);
        let (ur, _) = shock_curve(&sys, &ul, Family::One).unwrap().eval(1.0).unwrap();
        let vel = Velocity::new(&sys, VelocityParams::new(0.05, ul.clone())).unwrap();
        let f = jump_field(&ul, &ur, 100);
        let v = windowed_velocity(&f, -0.05, 0.1, &vel).unwrap();
        let (a, b) = (vel.eval(&ul).unwrap(), vel.eval(&ur).unwrap());
        assert!(v <= a.max(b) && v >= a.min(b));
    }

    #[test]
    fn traces_of_exact_jump() {
        let sys = g2();
        let ul = state(&[1.0, 0.0]);
        let (ur, _) = shock_curve(&sys, &ul, Family::One).unwrap().eval(1.0).unwrap();
        let f = jump_field(&ul, &ur, 200);
        let p = TraceParams { k_cells: 4, layer_skip: 2 };
        let (m, pl) = extract_traces(&f, 0.0, p).unwrap();
        assert!((m - &ul).amax() < 1e-12 && (pl - &ur).amax() < 1e-12);
        let c = constant_field(&ul, 200);
        let (m, pl) = extract_traces(&c, 0.3, p).unwrap();
        assert_eq!(m, pl);
    }

    #[test]
    fn zero_dt_keeps_path() {
        let sys = g2();
        let ul = state(&[1.0, 0.0]);
        let vel = Velocity::new(&sys, VelocityParams::new(0.05, ul.clone())).unwrap();
        let f = constant_field(&ul, 100);
        let mut path = ShiftPath::new(0.0, 0.08, TraceParams::default());
        path.advance(&f, 0.0, &vel).unwrap();
        assert!(path.is_empty());
        assert_eq!(path.positions, vec![0.0]);
    }

    #[test]
    fn constant_velocity_integration() {
        let sys = g2();
        let ul = state(&[1.0, 0.0]);
        let vel = Velocity::new(&sys, VelocityParams::new(0.05, ul.clone())).unwrap();
        let mut f = constant_field(&ul, 400);
        let c = vel.at_reference();
        let mut path = ShiftPath::new(0.5, 0.02, TraceParams::default());
        for _ in 0..10 {
            path.advance(&f, 0.01, &vel).unwrap();
            f.time += 0.01;
        }
        path.record(&f, &vel).unwrap();
        assert!((path.position() - (0.5 + c * 0.1)).abs() < 1e-14);
        let fil = filippov_check(&path, &vel).unwrap();
        assert_eq!(fil.violations, 0);
        assert!(path.lipschitz_estimate() <= c.abs() + 1e-12);
    }

    #[test]
    fn dafermos_on_exact_jump() {
        let sys = g2();
        let ul = state(&[1.0, 0.0]);
        let (ur, sigma) = shock_curve(&sys, &ul, Family::One).unwrap().eval(1.0).unwrap();
        let mut path = ShiftPath::new(0.0, 0.02, TraceParams::default());
        path.times.push(0.0);
        path.velocities.push(sigma);
        path.traces.push((ul.clone(), ur.clone()));
        path.trace_noise.push(0.0);
        path.traces.push((ul.clone(), ul.clone()));
        path.times.push(0.1);
        path.velocities.push(sigma);
        path.trace_noise.push(0.0);
        let rep = dafermos_check(&path, &sys, 0.1).unwrap();
        assert_eq!(rep.skipped, 1);
        assert!(rep.max_rh_residual < 1e-12 && rep.max_rh_residual_ls < 1e-12);
        assert_eq!(rep.max_entropy_excess, 0.0);
    }

    #[test]
    fn last_family_is_the_reflection() {
        let sys = g2();
        let rev = sys.clone().reversed();
        let ur = state(&[1.3, 0.2]);
        let direct = Velocity::new(&sys, VelocityParams::for_family(0.05, ur.clone(), Family::N)).unwrap();
        let mirrored = Velocity::new(&rev, VelocityParams::for_family(0.05, ur.clone(), Family::One)).unwrap();
        for u in [state(&[1.3, 0.2]), state(&[0.7, -0.4]), state(&[2.1, 1.0]), state(&[0.0, 0.0])] {
            assert_eq!(direct.eval(&u).unwrap(), -mirrored.eval(&u).unwrap());
        }
    }
}
