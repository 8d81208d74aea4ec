//! Classification of jumps and the hypothesis checks along shock curves.
//!
//! Classification truth table, applied in order:
//!
//! | condition                                                  | class          |
//! |------------------------------------------------------------|----------------|
//! | entropy production above tolerance                         | `inadmissible` |
//! | production ≈ 0 and some `λ_k(u₋) ≈ σ ≈ λ_k(u₊)`            | `contact`      |
//! | `λ⁻(u₋) ≥ σ ≥ λ⁻(u₊)`                                      | `one_shock`    |
//! | `λ⁺(u₋) ≥ σ ≥ λ⁺(u₊)`                                      | `n_shock`      |
//! | otherwise                                                  | `intermediate` |

use serde::Serialize;

use super::{entropy_production, shock_curve, Family, ShockCurve, Tolerances};
use crate::calculus::{fmt_state, relative_entropy, ConservationLaw, State};
use crate::error::{Error, Result};
use crate::systems::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    OneShock,
    NShock,
    Contact,
    Intermediate,
    Inadmissible,
}

impl Classification {
    pub fn matches(self, family: Family) -> bool {
        matches!(
            (self, family),
            (Classification::OneShock, Family::One) | (Classification::NShock, Family::N) | (Classification::Contact, _)
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub sigma: f64,
    /// `‖ΔA − σΔU‖∞ / |ΔU|`.
    pub rh_residual: f64,
    pub entropy_production: f64,
    pub lax_left: bool,
    pub lax_right: bool,
    /// Filled in by curve-level checks; a single jump carries no curve.
    pub liu_monotone: Option<bool>,
    pub strengthening: Option<bool>,
    pub classification: Classification,
}

pub fn classify_discontinuity<L: ConservationLaw + ?Sized>(
    sys: &L,
    u_minus: &State,
    u_plus: &State,
) -> Result<AdmissibilityReport> {
    classify_discontinuity_with(sys, u_minus, u_plus, &Tolerances::default())
}

pub fn classify_discontinuity_with<L: ConservationLaw + ?Sized>(
    sys: &L,
    u_minus: &State,
    u_plus: &State,
    tol: &Tolerances,
) -> Result<AdmissibilityReport> {
    let du = u_plus - u_minus;
    let size = du.norm();
    if size <= 1e-12 * (1.0 + u_minus.amax()) {
        return Err(Error::NotADiscontinuity(format!(
            "jump {size:.3e} between {} and {} is below resolution",
            fmt_state(u_minus),
            fmt_state(u_plus)
        )));
    }
    let da = sys.flux(u_plus) - sys.flux(u_minus);
    let sigma = du.dot(&da) / (size * size);
    let rh_residual = (&da - &du * sigma).amax() / size;
    if rh_residual > tol.rh_classify * (1.0 + sigma.abs()) {
        return Err(Error::NotADiscontinuity(format!(
            "jump conditions fail: relative residual {rh_residual:.3e}"
        )));
    }
    let production = entropy_production(sys, u_minus, u_plus, sigma)?;
    let scale = 1.0
        + (sys.entropy_flux(u_plus)? - sys.entropy_flux(u_minus)?).abs()
        + (sigma * (sys.entropy(u_plus)? - sys.entropy(u_minus)?)).abs();
    let slack = 1e-12 * (1.0 + sigma.abs());
    let ev_m = sys.eigenvalues(u_minus)?;
    let ev_p = sys.eigenvalues(u_plus)?;
    let lax_left = ev_m[0] >= sigma - slack && sigma >= ev_p[0] - slack;
    let n = ev_m.len() - 1;
    let lax_right = ev_m[n] >= sigma - slack && sigma >= ev_p[n] - slack;
    let char_tol = 1e-8 * (1.0 + sigma.abs());
    let characteristic = ev_m
        .iter()
        .zip(&ev_p)
        .any(|(a, b)| (a - sigma).abs() <= char_tol && (b - sigma).abs() <= char_tol);

    let classification = if production > tol.sign * scale {
        Classification::Inadmissible
    } else if production.abs() <= tol.sign * scale && characteristic {
        Classification::Contact
    } else if lax_left {
        Classification::OneShock
    } else if lax_right {
        Classification::NShock
    } else {
        Classification::Intermediate
    };
    Ok(AdmissibilityReport {
        sigma,
        rh_residual,
        entropy_production: production,
        lax_left,
        lax_right,
        liu_monotone: None,
        strengthening: None,
        classification,
    })
}

/// Entropic jumps of the other extreme family (and contacts) near a base.
#[derive(Debug, Clone, Serialize)]
pub struct CrossFamilyAudit {
    pub samples: usize,
    /// `σ` on the far side of the extreme speed at both traces.
    pub h2_ok: bool,
    /// Every sampled entropic jump that is faster than the extreme speed of
    /// its base is a shock of this family.
    pub h3_ok: bool,
    pub max_production: f64,
    pub worst_speed_margin: f64,
}

fn perturbed_bases(sys: &SystemSpec, base: &State) -> Vec<State> {
    let mut out = vec![base.clone()];
    for k in 0..base.len() {
        for sg in [-1.0, 1.0] {
            let mut b = base.clone();
            b[k] += sg * 0.05 * base[k].abs().max(0.2);
            if sys.in_interior(&b) {
                out.push(b);
            }
        }
    }
    out
}

/// Check (H2)/(H3) for `family` (or their duals) by sampling.
///
/// Samples jumps along curves of the opposite extreme family from bases near
/// `base`, plus contact discontinuities for full Euler. Returns `None` for
/// scalar laws, which have no other family.
pub fn cross_family_audit(
    sys: &SystemSpec,
    base: &State,
    family: Family,
    tol: &Tolerances,
) -> Result<Option<CrossFamilyAudit>> {
    if sys.dim() < 2 {
        return Ok(None);
    }
    let mut pairs: Vec<(State, State, f64)> = Vec::new();
    for b in perturbed_bases(sys, base) {
        let curve = shock_curve(sys, &b, family.opposite())?;
        for frac in [0.02, 0.05, 0.1, 0.2, 0.4] {
            let s = frac * curve.s_max().min(b[0].abs().max(0.1) * 2.0);
            let (st, sigma) = curve.eval(s)?;
            let (l, r) = family.opposite().ordered(&b, &st);
            pairs.push((l.clone(), r.clone(), sigma));
        }
    }
    if let SystemSpec::FullEuler(fe) = sys.base() {
        let (rho, u, e) = fe.primitive(base);
        let p = (fe.gamma - 1.0) * rho * e;
        for ratio in [0.8, 0.9, 1.1, 1.25] {
            let rho2 = rho * ratio;
            let other = fe.conserved(rho2, u, p / ((fe.gamma - 1.0) * rho2));
            let sigma = if sys.is_reversed() { -u } else { u };
            pairs.push((base.clone(), other.clone(), sigma));
            pairs.push((other, base.clone(), sigma));
        }
    }
    let mut audit = CrossFamilyAudit {
        samples: pairs.len(),
        h2_ok: true,
        h3_ok: true,
        max_production: f64::NEG_INFINITY,
        worst_speed_margin: f64::INFINITY,
    };
    for (l, r, sigma) in &pairs {
        let production = entropy_production(sys, l, r, *sigma)?;
        audit.max_production = audit.max_production.max(production);
        let scale = 1.0 + sys.entropy(l)?.abs() + sys.entropy(r)?.abs();
        if production > tol.sign * scale * (1.0 + sigma.abs()) {
            audit.h2_ok = false;
        }
        let slack = 1e-12 * (1.0 + sigma.abs());
        let margin = match family {
            Family::One => (sigma - sys.lambda_minus(l)?).min(sigma - sys.lambda_minus(r)?),
            Family::N => (sys.lambda_plus(l)? - sigma).min(sys.lambda_plus(r)? - sigma),
        };
        audit.worst_speed_margin = audit.worst_speed_margin.min(margin);
        if margin < -slack {
            audit.h2_ok = false;
            let report = classify_discontinuity_with(sys, l, r, tol)?;
            if !report.classification.matches(family) {
                audit.h3_ok = false;
            }
        }
    }
    Ok(Some(audit))
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub family: Family,
    pub samples: usize,
    /// `|σ(0) − λ∓(base)|`.
    pub origin_speed_error: f64,
    pub max_rh_residual: f64,
    /// Largest `σ′` (first family) or `−σ′` (last family) on the grid.
    pub max_speed_violation: f64,
    pub liu_monotone: bool,
    /// `s` values where the speed moves the wrong way.
    pub liu_failures: Vec<f64>,
    /// Number of samples with `|σ′| ≤ tol_mono`.
    pub stationary_speed_samples: usize,
    /// `σ′ ≡ 0` on the grid; the growth check is then skipped.
    pub contact_branch: bool,
    /// Smallest `d/ds η(base|S(s))`, absent on a contact branch.
    pub min_growth_rate: Option<f64>,
    pub strengthening: Option<bool>,
    /// Samples whose classification does not match the family.
    pub misclassified: Vec<f64>,
    pub cross_family: Option<CrossFamilyAudit>,
    pub all_ok: bool,
}

/// `d/ds η(base | S(s))` by second-order differences.
pub fn growth_rate<L: ConservationLaw + ?Sized>(sys: &L, curve: &dyn ShockCurve, s: f64) -> Result<f64> {
    let base = curve.base();
    let f = |t: f64| -> Result<f64> { relative_entropy(sys, base, &curve.state(t)?) };
    let s_max = curve.s_max();
    let h = 1e-5 * s_max.min(1.0);
    if s < h {
        Ok((-3.0 * f(s)? + 4.0 * f(s + h)? - f(s + 2.0 * h)?) / (2.0 * h))
    } else if s > s_max - h {
        Ok((3.0 * f(s)? - 4.0 * f(s - h)? + f(s - 2.0 * h)?) / (2.0 * h))
    } else {
        Ok((f(s + h)? - f(s - h)?) / (2.0 * h))
    }
}

/// Verify (H1a), (H1b), the jump conditions and, for systems, (H2)/(H3) on
/// the grid `s_grid` of `curve`.
pub fn check_hypotheses(
    sys: &SystemSpec,
    curve: &dyn ShockCurve,
    s_grid: &[f64],
    tol: &Tolerances,
) -> Result<HypothesisReport> {
    let family = curve.family();
    let base = curve.base();
    let lam = family.extreme_speed(sys, base)?;
    let origin_speed_error = (curve.speed(0.0)? - lam).abs();
    let orient = match family {
        Family::One => 1.0,
        Family::N => -1.0,
    };

    let mut max_rh = 0.0f64;
    let mut max_violation = f64::NEG_INFINITY;
    let mut liu_failures = Vec::new();
    let mut stationary = 0;
    let mut misclassified = Vec::new();
    let mut rates = Vec::new();
    for &s in s_grid {
        let (st, sigma) = curve.eval(s)?;
        let scale = (1.0 + sigma.abs()) * (1.0 + sys.flux(base).amax() + base.amax());
        max_rh = max_rh.max(super::rh_residual(sys, base, &st, sigma) / scale);
        let ds = orient * curve.speed_derivative(s)?;
        max_violation = max_violation.max(ds);
        if ds > tol.mono {
            liu_failures.push(s);
        }
        if ds.abs() <= tol.mono {
            stationary += 1;
        }
        rates.push(growth_rate(sys, curve, s)?);
        if s > 0.0 {
            let (l, r) = family.ordered(base, &st);
            match classify_discontinuity_with(sys, l, r, tol) {
                Ok(rep) if rep.classification.matches(family) => {}
                _ => misclassified.push(s),
            }
        }
    }
    let contact_branch = !s_grid.is_empty() && stationary == s_grid.len();
    let (min_growth_rate, strengthening) = if contact_branch {
        (None, None)
    } else {
        let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        (Some(min), Some(min >= -tol.mono))
    };
    let cross_family = cross_family_audit(sys, base, family, tol)?;
    let liu_monotone = liu_failures.is_empty();
    let all_ok = origin_speed_error <= 1e-8 * (1.0 + lam.abs())
        && max_rh <= tol.rh
        && liu_monotone
        && strengthening.unwrap_or(true)
        && misclassified.is_empty()
        && cross_family.as_ref().is_none_or(|c| c.h2_ok && c.h3_ok);
    Ok(HypothesisReport {
        family,
        samples: s_grid.len(),
        origin_speed_error,
        max_rh_residual: max_rh,
        max_speed_violation: max_violation,
        liu_monotone,
        liu_failures,
        stationary_speed_samples: stationary,
        contact_branch,
        min_growth_rate,
        strengthening,
        misclassified,
        cross_family,
        all_ok,
    })
}
