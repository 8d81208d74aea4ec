//! Shock curves, admissibility classification, hypothesis checks and the
//! structural identities along shock curves.
//!
//! A curve of the first family is parameterised from its left state (the
//! base) and the states `S(s)` are right states; a curve of the last family
//! is parameterised from its right state and `S(s)` are left states.

mod admissibility;
mod continuation;
mod curves;
mod lemmas;

pub use admissibility::{
    check_hypotheses, classify_discontinuity, classify_discontinuity_with, cross_family_audit, growth_rate, AdmissibilityReport,
    Classification, CrossFamilyAudit, HypothesisReport,
};
pub use continuation::{
    continue_shock_curve, gn_check, shock_curve_continuation, ContinuationOptions, ContinuationRun, GnCheck,
};
pub use curves::{
    shock_curve, shock_curve_full_euler, shock_curve_isentropic, FullEulerCurve, IsentropicCurve, MirroredCurve,
    ScalarCurve,
};
pub use lemmas::{
    h1b_isentropic_analytic, liu_scan, pressure_convexity_profile, verify_cornerstone, verify_lemma_decreasing,
    ConvexityProfile, CornerstoneCheck, LemmaCheck, LiuScan, ProfileRow,
};

use serde::{Deserialize, Serialize};

use crate::calculus::{ConservationLaw, State};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "one")]
    One,
    #[serde(rename = "n")]
    N,
}

impl Family {
    pub fn opposite(self) -> Family {
        match self {
            Family::One => Family::N,
            Family::N => Family::One,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::One => "one_family",
            Family::N => "n_family",
        }
    }

    /// Order `(base, S)` as `(left, right)`.
    pub fn ordered<'a>(self, base: &'a State, other: &'a State) -> (&'a State, &'a State) {
        match self {
            Family::One => (base, other),
            Family::N => (other, base),
        }
    }

    /// The extreme characteristic speed that bounds this family.
    pub fn extreme_speed<L: ConservationLaw + ?Sized>(self, sys: &L, u: &State) -> Result<f64> {
        match self {
            Family::One => sys.lambda_minus(u),
            Family::N => sys.lambda_plus(u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative Rankine–Hugoniot residual allowed on curve samples.
    pub rh: f64,
    /// Relative residual below which a jump counts as a discontinuity.
    pub rh_classify: f64,
    pub mono: f64,
    pub sign: f64,
    pub gap: f64,
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rh: 1e-9,
            rh_classify: 1e-6,
            mono: 1e-7,
            sign: 1e-10,
            gap: 1e-6,
            quad: crate::quadrature::DEFAULT_TOL,
        }
    }
}

/// Samples `(s, S(s), σ(s))` along a shock curve.
#[derive(Debug, Clone, Serialize)]
pub struct ShockCurveSample {
    pub family: Family,
    pub base: State,
    pub s_grid: Vec<f64>,
    pub states: Vec<State>,
    pub speeds: Vec<f64>,
    pub s_max: f64,
}

impl ShockCurveSample {
    pub fn len(&self) -> usize {
        self.s_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_grid.is_empty()
    }

    /// `‖A(S) − A(base) − σ(S − base)‖∞` per sample.
    pub fn rh_residuals<L: ConservationLaw + ?Sized>(&self, sys: &L) -> Vec<f64> {
        self.states
            .iter()
            .zip(&self.speeds)
            .map(|(s, &sigma)| rh_residual(sys, &self.base, s, sigma))
            .collect()
    }
}

pub fn rh_residual<L: ConservationLaw + ?Sized>(sys: &L, a: &State, b: &State, sigma: f64) -> f64 {
    (sys.flux(b) - sys.flux(a) - (b - a) * sigma).amax()
}

/// `G(u₊) − G(u₋) − σ(η(u₊) − η(u₋))`; nonpositive for entropic jumps.
pub fn entropy_production<L: ConservationLaw + ?Sized>(
    sys: &L,
    u_minus: &State,
    u_plus: &State,
    sigma: f64,
) -> Result<f64> {
    let dg = sys.entropy_flux(u_plus)? - sys.entropy_flux(u_minus)?;
    let de = sys.entropy(u_plus)? - sys.entropy(u_minus)?;
    Ok(dg - sigma * de)
}

/// A one-parameter family of Rankine–Hugoniot states issued from a base.
pub trait ShockCurve: Send + Sync {
    fn family(&self) -> Family;

    fn base(&self) -> &State;

    fn s_max(&self) -> f64;

    /// `(S(s), σ(s))`.
    fn eval(&self, s: f64) -> Result<(State, f64)>;

    fn state(&self, s: f64) -> Result<State> {
        Ok(self.eval(s)?.0)
    }

    fn speed(&self, s: f64) -> Result<f64> {
        Ok(self.eval(s)?.1)
    }

    /// `σ′(s)`; second-order differences, one-sided near the ends.
    fn speed_derivative(&self, s: f64) -> Result<f64> {
        let s_max = self.s_max();
        let h = 1e-5 * s_max.min(1.0);
        if s < h {
            let (f0, f1, f2) = (self.speed(s)?, self.speed(s + h)?, self.speed(s + 2.0 * h)?);
            Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h))
        } else if s > s_max - h {
            let (f0, f1, f2) = (self.speed(s)?, self.speed(s - h)?, self.speed(s - 2.0 * h)?);
            Ok((3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h))
        } else {
            Ok((self.speed(s + h)? - self.speed(s - h)?) / (2.0 * h))
        }
    }

    fn sample(&self, s_grid: &[f64]) -> Result<ShockCurveSample> {
        let mut states = Vec::with_capacity(s_grid.len());
        let mut speeds = Vec::with_capacity(s_grid.len());
        for &s in s_grid {
            let (st, sigma) = self.eval(s)?;
            states.push(st);
            speeds.push(sigma);
        }
        Ok(ShockCurveSample {
            family: self.family(),
            base: self.base().clone(),
            s_grid: s_grid.to_vec(),
            states,
            speeds,
            s_max: self.s_max(),
        })
    }
}

pub(crate) fn check_param(s: f64, s_max: f64) -> Result<()> {
    if !(s >= 0.0) || s > s_max {
        return Err(Error::Range(format!("curve parameter {s:.6e} outside [0, {s_max:.6e}]")));
    }
    Ok(())
}

/// `n + 1` equispaced points on `[0, s_end]`.
pub fn uniform_grid(s_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| s_end * k as f64 / n as f64).collect()
}
