//! Explicit shock curves.

use super::{check_param, Family, ShockCurve, ShockCurveSample};
use crate::calculus::{ConservationLaw, State};
use crate::error::{Error, Result};
use crate::systems::{FullEuler, IsentropicEuler, PressureLaw, ScalarConvex, SystemSpec};

/// The shock curve of `family` through `base` for any bundled system.
pub fn shock_curve(sys: &SystemSpec, base: &State, family: Family) -> Result<Box<dyn ShockCurve>> {
    Ok(match sys {
        SystemSpec::Isentropic(s) => Box::new(IsentropicCurve::new(s, base, family)?),
        SystemSpec::FullEuler(s) => Box::new(FullEulerCurve::new(s, base, family)?),
        SystemSpec::Scalar(s) => Box::new(ScalarCurve::new(s, base, family)?),
        SystemSpec::Reversed(inner) => {
            // Reversal flips σ and swaps the roles of the extreme families.
            let inner = shock_curve(inner, base, family.opposite())?;
            Box::new(MirroredCurve { inner, family })
        }
    })
}

pub fn shock_curve_isentropic(
    sys: &IsentropicEuler,
    base: &State,
    family: Family,
    s_grid: &[f64],
) -> Result<ShockCurveSample> {
    IsentropicCurve::new(sys, base, family)?.sample(s_grid)
}

pub fn shock_curve_full_euler(
    sys: &FullEuler,
    base: &State,
    family: Family,
    s_grid: &[f64],
) -> Result<ShockCurveSample> {
    FullEulerCurve::new(sys, base, family)?.sample(s_grid)
}

/// Largest `s ≤ hi` with `ok(s)`, assuming `ok` holds on an initial interval.
fn bisect_cap(hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    lo
}

fn sign(family: Family) -> f64 {
    match family {
        Family::One => -1.0,
        Family::N => 1.0,
    }
}

/// Isentropic Euler, parameterised by the density jump `s`.
///
/// Momentum of `S` is `(ρ+s)·u_S` with
/// `u_S = u ∓ √((P(ρ+s) − P(ρ)) s / (ρ(ρ+s)))`, which satisfies both jump
/// conditions.
#[derive(Debug, Clone)]
pub struct IsentropicCurve {
    sys: IsentropicEuler,
    base: State,
    rho: f64,
    u: f64,
    family: Family,
    s_max: f64,
}

impl IsentropicCurve {
    pub fn new(sys: &IsentropicEuler, base: &State, family: Family) -> Result<Self> {
        if !sys.in_interior(base) {
            return Err(Error::Domain("shock curve base must be an interior state".into()));
        }
        let rho = base[0];
        let mut curve = IsentropicCurve {
            sys: sys.clone(),
            base: base.clone(),
            rho,
            u: base[1] / rho,
            family,
            s_max: 0.0,
        };
        let hi = (sys.law.range().1.min(sys.domain.k_bound) - rho).max(0.0);
        curve.s_max = bisect_cap(hi, |s| curve.raw(s).map(|(st, _)| sys.in_interior(&st)).unwrap_or(false));
        Ok(curve)
    }

    pub fn law(&self) -> &PressureLaw {
        &self.sys.law
    }

    /// `(P(ρ+s) − P(ρ))/s`, with its limit `P′` at small `s`.
    fn difference_quotient(&self, s: f64) -> Result<f64> {
        let law = &self.sys.law;
        if s < 1e-6 * self.rho {
            law.dp(self.rho + 0.5 * s)
        } else {
            Ok((law.p(self.rho + s)? - law.p(self.rho)?) / s)
        }
    }

    /// d/ds of the difference quotient.
    fn difference_quotient_derivative(&self, s: f64) -> Result<f64> {
        let law = &self.sys.law;
        if s < 1e-3 * self.rho {
            // ∫₀¹ t P″(ρ + t s) dt
            let mut acc = 0.0;
            for (x, w) in GL5.iter().zip(GL5_W) {
                let t = 0.5 * (x + 1.0);
                acc += 0.5 * w * t * law.d2p(self.rho + t * s)?;
            }
            Ok(acc)
        } else {
            Ok((law.dp(self.rho + s)? - self.difference_quotient(s)?) / s)
        }
    }

    fn raw(&self, s: f64) -> Result<(State, f64)> {
        let rho_s = self.rho + s;
        let dq = self.difference_quotient(s)?;
        let sg = sign(self.family);
        let u_s = self.u + sg * s * (dq / (self.rho * rho_s)).sqrt();
        let sigma = self.u + sg * (rho_s * dq / self.rho).sqrt();
        Ok((IsentropicEuler::conserved(rho_s, u_s), sigma))
    }

    /// The state obtained with momentum `ρu ∓ ρ√(…)`, i.e. the velocity jump
    /// scaled by the base density. It violates the mass jump condition for
    /// every `s > 0` and is kept only to document that fact.
    pub fn base_density_momentum_state(&self, s: f64) -> Result<State> {
        check_param(s, self.s_max)?;
        let dq = self.difference_quotient(s)?;
        let jump = s * (dq / (self.rho * (self.rho + s))).sqrt();
        Ok(crate::calculus::state(&[
            self.rho + s,
            self.rho * self.u + sign(self.family) * self.rho * jump,
        ]))
    }
}

const GL5: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl ShockCurve for IsentropicCurve {
    fn family(&self) -> Family {
        self.family
    }

    fn base(&self) -> &State {
        &self.base
    }

    fn s_max(&self) -> f64 {
        self.s_max
    }

    fn eval(&self, s: f64) -> Result<(State, f64)> {
        check_param(s, self.s_max)?;
        self.raw(s)
    }

    fn speed_derivative(&self, s: f64) -> Result<f64> {
        check_param(s, self.s_max)?;
        let rho_s = self.rho + s;
        let dq = self.difference_quotient(s)?;
        let phi = rho_s * dq / self.rho;
        let dphi = (dq + rho_s * self.difference_quotient_derivative(s)?) / self.rho;
        Ok(sign(self.family) * dphi / (2.0 * phi.sqrt()))
    }
}

/// Polytropic full Euler, parameterised by the density jump `s`.
#[derive(Debug, Clone)]
pub struct FullEulerCurve {
    gamma: f64,
    base: State,
    rho: f64,
    u: f64,
    p: f64,
    c: f64,
    family: Family,
    s_max: f64,
}

impl FullEulerCurve {
    pub fn new(sys: &FullEuler, base: &State, family: Family) -> Result<Self> {
        if !sys.in_interior(base) {
            return Err(Error::Domain("shock curve base must be an interior state".into()));
        }
        let (rho, u, _) = sys.primitive(base);
        let gamma = sys.gamma;
        let mu = (gamma + 1.0) / (gamma - 1.0);
        let mut curve = FullEulerCurve {
            gamma,
            base: base.clone(),
            rho,
            u,
            p: sys.pressure(base),
            c: sys.sound_speed(base),
            family,
            s_max: 0.0,
        };
        let cap = 0.99 * (mu - 1.0) * rho;
        curve.s_max = bisect_cap(cap, |s| sys.in_interior(&curve.raw(s).0));
        Ok(curve)
    }

    fn mu(&self) -> f64 {
        (self.gamma + 1.0) / (self.gamma - 1.0)
    }

    /// `P_S / P_base` from the density ratio.
    pub fn pressure_ratio(&self, s: f64) -> f64 {
        let mu = self.mu();
        let r = 1.0 + s / self.rho;
        (mu * r - 1.0) / (mu - r)
    }

    fn bracket(&self, s: f64) -> f64 {
        let g = self.gamma;
        ((g - 1.0) / (2.0 * g) + (g + 1.0) / (2.0 * g) * self.pressure_ratio(s)).sqrt()
    }

    fn raw(&self, s: f64) -> (State, f64) {
        let g = self.gamma;
        let rho_s = self.rho + s;
        let p_s = self.p * self.pressure_ratio(s);
        let e_s = p_s / ((g - 1.0) * rho_s);
        let sigma = self.u + sign(self.family) * self.c * self.bracket(s);
        // mass flux through the shock is continuous
        let u_s = sigma + self.rho / rho_s * (self.u - sigma);
        let st = crate::calculus::state(&[rho_s, rho_s * u_s, rho_s * (e_s + 0.5 * u_s * u_s)]);
        (st, sigma)
    }
}

impl ShockCurve for FullEulerCurve {
    fn family(&self) -> Family {
        self.family
    }

    fn base(&self) -> &State {
        &self.base
    }

    fn s_max(&self) -> f64 {
        self.s_max
    }

    fn eval(&self, s: f64) -> Result<(State, f64)> {
        check_param(s, self.s_max)?;
        Ok(self.raw(s))
    }

    fn speed_derivative(&self, s: f64) -> Result<f64> {
        check_param(s, self.s_max)?;
        let g = self.gamma;
        let mu = self.mu();
        let r = 1.0 + s / self.rho;
        let dratio = (mu * mu - 1.0) / ((mu - r) * (mu - r)) / self.rho;
        Ok(sign(self.family) * self.c * (g + 1.0) / (2.0 * g) * dratio / (2.0 * self.bracket(s)))
    }
}

/// Scalar convex law: `S = u ∓ s`, `σ` the chord slope.
#[derive(Debug, Clone)]
pub struct ScalarCurve {
    sys: ScalarConvex,
    base: State,
    family: Family,
    s_max: f64,
}

impl ScalarCurve {
    pub fn new(sys: &ScalarConvex, base: &State, family: Family) -> Result<Self> {
        if !sys.in_interior(base) {
            return Err(Error::Domain("shock curve base must be an interior state".into()));
        }
        let s_max = match family {
            Family::One => sys.k_bound + base[0],
            Family::N => sys.k_bound - base[0],
        };
        Ok(ScalarCurve {
            sys: sys.clone(),
            base: base.clone(),
            family,
            s_max: s_max * (1.0 - 1e-12),
        })
    }
}

impl ShockCurve for ScalarCurve {
    fn family(&self) -> Family {
        self.family
    }

    fn base(&self) -> &State {
        &self.base
    }

    fn s_max(&self) -> f64 {
        self.s_max
    }

    fn eval(&self, s: f64) -> Result<(State, f64)> {
        check_param(s, self.s_max)?;
        let u = self.base[0];
        let v = u + sign(self.family) * s;
        let sigma = if s == 0.0 {
            self.sys.df(u)
        } else {
            (self.sys.f(v) - self.sys.f(u)) / (v - u)
        };
        Ok((crate::calculus::state(&[v]), sigma))
    }
}

/// A curve of the reversed system: the same states as the opposite-family
/// curve of the original system, with negated speeds.
pub struct MirroredCurve {
    pub inner: Box<dyn ShockCurve>,
    pub family: Family,
}

impl ShockCurve for MirroredCurve {
    fn family(&self) -> Family {
        self.family
    }

    fn base(&self) -> &State {
        self.inner.base()
    }

    fn s_max(&self) -> f64 {
        self.inner.s_max()
    }

    fn eval(&self, s: f64) -> Result<(State, f64)> {
        let (st, sigma) = self.inner.eval(s)?;
        Ok((st, -sigma))
    }

    fn speed_derivative(&self, s: f64) -> Result<f64> {
        Ok(-self.inner.speed_derivative(s)?)
    }
}
