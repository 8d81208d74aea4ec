//! Identities along shock curves and the pressure-law convexity profile.

use serde::Serialize;

use super::{curves::IsentropicCurve, Family, ShockCurve, Tolerances};
use crate::calculus::{relative_entropy, relative_flux, ConservationLaw, State};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::systems::{make_isentropic, DomainBox, IsentropicEuler, PressureLaw};

/// Entropy-loss identity at one point of a curve.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub s: f64,
    /// `F(S(s), V) − σ(s) η(S(s)|V)`.
    pub lhs: f64,
    /// `F(base, V) − σ(s) η(base|V) + ∫₀ˢ σ′(τ) η(base|S(τ)) dτ`.
    pub rhs: f64,
    pub residual: f64,
    /// `lhs ≤ rhs − integral` for the first family, `≥` for the last.
    pub inequality_ok: bool,
}

/// `∫_a^b σ′(τ) w(τ) dτ` along the curve.
fn speed_weighted_integral<F>(curve: &dyn ShockCurve, a: f64, b: f64, tol: f64, mut w: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    quadrature::integrate(|t| Ok(curve.speed_derivative(t)? * w(t)?), a, b, tol)
}

/// Check the identity
/// `F(S(s),V) − σ(s)η(S(s)|V) = F(base,V) − σ(s)η(base|V) + ∫₀ˢ σ′ η(base|S(τ)) dτ`
/// and the inequality it implies.
pub fn verify_lemma_decreasing<L: ConservationLaw + ?Sized>(
    sys: &L,
    curve: &dyn ShockCurve,
    v: &State,
    s: f64,
    tol: &Tolerances,
) -> Result<LemmaCheck> {
    let base = curve.base();
    let (st, sigma) = curve.eval(s)?;
    let lhs = relative_flux(sys, &st, v)? - sigma * relative_entropy(sys, &st, v)?;
    let head = relative_flux(sys, base, v)? - sigma * relative_entropy(sys, base, v)?;
    let integral = speed_weighted_integral(curve, 0.0, s, tol.quad, |t| {
        relative_entropy(sys, base, &curve.state(t)?)
    })?;
    let rhs = head + integral;
    let slack = tol.sign * (1.0 + lhs.abs());
    let inequality_ok = match curve.family() {
        Family::One => lhs <= head + slack,
        Family::N => lhs >= head - slack,
    };
    Ok(LemmaCheck {
        s,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        inequality_ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CornerstoneCheck {
    pub s: f64,
    pub s0: f64,
    /// `F(S(s), S(s₀)) − σ(s) η(S(s)|S(s₀))`.
    pub lhs: f64,
    /// `∫_{s₀}^{s} σ′(τ)(η(base|S(τ)) − η(base|S(s₀))) dτ`.
    pub rhs: f64,
    pub residual: f64,
    /// `lhs ≤ tol` for the first family; `lhs ≥ −tol` for the last.
    pub sign_ok: bool,
}

pub fn verify_cornerstone<L: ConservationLaw + ?Sized>(
    sys: &L,
    curve: &dyn ShockCurve,
    s: f64,
    s0: f64,
    tol: &Tolerances,
) -> Result<CornerstoneCheck> {
    let base = curve.base();
    let (st, sigma) = curve.eval(s)?;
    let v = curve.state(s0)?;
    let lhs = relative_flux(sys, &st, &v)? - sigma * relative_entropy(sys, &st, &v)?;
    let anchor = relative_entropy(sys, base, &v)?;
    let rhs = speed_weighted_integral(curve, s0, s, tol.quad, |t| {
        Ok(relative_entropy(sys, base, &curve.state(t)?)? - anchor)
    })?;
    let sign_ok = match curve.family() {
        Family::One => lhs <= tol.sign,
        Family::N => lhs >= -tol.sign,
    };
    Ok(CornerstoneCheck {
        s,
        s0,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        sign_ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub s: f64,
    pub phi: f64,
    pub dphi_fd: f64,
    pub dphi_integral: f64,
}

/// `φ(s) = ((ρ+s)/ρ)(P(ρ+s) − P(ρ))/s` and its derivative computed two ways.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityProfile {
    pub rho: f64,
    pub rows: Vec<ProfileRow>,
    /// `[ρP(ρ)]″ / (2ρ)`.
    pub dphi0: f64,
    pub max_disagreement: f64,
}

fn phi(law: &PressureLaw, rho: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return law.dp(rho);
    }
    Ok((rho + s) / rho * (law.p(rho + s)? - law.p(rho)?) / s)
}

pub fn pressure_convexity_profile(law: &PressureLaw, rho: f64, s_grid: &[f64]) -> Result<ConvexityProfile> {
    if !(rho > 0.0) {
        return Err(Error::Domain("profile needs a positive density".into()));
    }
    let h = 1e-4;
    let mut rows = Vec::with_capacity(s_grid.len());
    let mut max_disagreement = 0.0f64;
    for &s in s_grid {
        let dphi_fd = if s > h {
            (phi(law, rho, s + h)? - phi(law, rho, s - h)?) / (2.0 * h)
        } else {
            (-3.0 * phi(law, rho, s.max(h))? + 4.0 * phi(law, rho, s.max(h) + h)? - phi(law, rho, s.max(h) + 2.0 * h)?)
                / (2.0 * h)
        };
        let dphi_integral = if s == 0.0 {
            law.rho_p_dd(rho)? / (2.0 * rho)
        } else {
            quadrature::integrate(|q| Ok((q - rho) * law.rho_p_dd(q)?), rho, rho + s, 1e-12)? / (rho * s * s)
        };
        if s > h {
            max_disagreement = max_disagreement.max((dphi_fd - dphi_integral).abs());
        }
        rows.push(ProfileRow {
            s,
            phi: phi(law, rho, s)?,
            dphi_fd,
            dphi_integral,
        });
    }
    Ok(ConvexityProfile {
        rho,
        rows,
        dphi0: law.rho_p_dd(rho)? / (2.0 * rho),
        max_disagreement,
    })
}

/// Liu monotonicity of first-family isentropic curves over a grid of base
/// densities.
#[derive(Debug, Clone, Serialize)]
pub struct LiuScan {
    /// `(base density, s)` pairs where `σ′ > tol_mono`.
    pub failures: Vec<(f64, f64)>,
    /// Merged density intervals `[ρ, ρ+s]` traversed by failing samples.
    pub failure_intervals: Vec<(f64, f64)>,
    /// Intervals of the scanned range where `[ρP]″ < 0`.
    pub nonconvex_intervals: Vec<(f64, f64)>,
    pub liu_ok: bool,
    pub min_rho_p_dd: f64,
}

fn merge(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub fn liu_scan(law: &PressureLaw, rho_grid: &[f64], s_grid: &[f64], tol_mono: f64) -> Result<LiuScan> {
    let sys = make_isentropic(law.clone(), DomainBox {
        k_bound: 1e6,
        rho_floor: 0.0,
    })?;
    let mut failures = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &rho in rho_grid {
        let curve = IsentropicCurve::new(&sys, &IsentropicEuler::conserved(rho, 0.0), Family::One)?;
        for &s in s_grid {
            if s > curve.s_max() {
                continue;
            }
            lo = lo.min(rho);
            hi = hi.max(rho + s);
            if curve.speed_derivative(s)? > tol_mono {
                failures.push((rho, s));
            }
        }
    }
    let failure_intervals = merge(failures.iter().map(|&(r, s)| (r, r + s)).collect());
    let mut nonconvex = Vec::new();
    let mut min_rho_p_dd = f64::INFINITY;
    if lo < hi {
        let n = 2000;
        let mut start: Option<f64> = None;
        for k in 0..=n {
            let q = lo + (hi - lo) * k as f64 / n as f64;
            let v = law.rho_p_dd(q)?;
            min_rho_p_dd = min_rho_p_dd.min(v);
            match (v < 0.0, start) {
                (true, None) => start = Some(q),
                (false, Some(a)) => {
                    nonconvex.push((a, q));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(a) = start {
            nonconvex.push((a, hi));
        }
    }
    Ok(LiuScan {
        liu_ok: failures.is_empty(),
        failures,
        failure_intervals,
        nonconvex_intervals: nonconvex,
        min_rho_p_dd,
    })
}

/// Closed form of `d/ds η(base|S(s))` for isentropic curves:
/// `[s(ρ+s)P′(ρ+s) + ρ(P(ρ+s) − P(ρ))] / (2(ρ+s)²) + s S″(ρ+s)`.
pub fn h1b_isentropic_analytic(law: &PressureLaw, rho: f64, s: f64) -> Result<f64> {
    let q = rho + s;
    let dp = law.p(q)? - law.p(rho)?;
    Ok((s * q * law.dp(q)? + rho * dp) / (2.0 * q * q) + s * law.entropy_density_d2(q)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::state;
    use crate::hugoniot::{admissibility::growth_rate, shock_curve, uniform_grid};
    use crate::systems::SystemSpec;

    fn g2() -> SystemSpec {
        SystemSpec::Isentropic(make_isentropic(PressureLaw::power(2.0).unwrap(), DomainBox::default()).unwrap())
    }

    #[test]
    fn entropy_loss_identity() {
        let sys = g2();
        let curve = shock_curve(&sys, &state(&[1.0, 0.0]), Family::One).unwrap();
        let v = IsentropicEuler::conserved(1.5, 0.3);
        let c = verify_lemma_decreasing(&sys, curve.as_ref(), &v, 1.0, &Tolerances::default()).unwrap();
        assert!(c.residual <= 1e-7, "{c:?}");
        assert!(c.inequality_ok);
        let c0 = verify_lemma_decreasing(&sys, curve.as_ref(), &v, 0.0, &Tolerances::default()).unwrap();
        assert!(c0.residual <= 1e-14);
    }

    #[test]
    fn cornerstone_sign() {
        let sys = g2();
        let tol = Tolerances::default();
        let curve = shock_curve(&sys, &state(&[1.0, 0.0]), Family::One).unwrap();
        for s in uniform_grid(2.0, 8) {
            let c = verify_cornerstone(&sys, curve.as_ref(), s, 1.0, &tol).unwrap();
            assert!(c.residual <= 1e-7 && c.sign_ok, "{c:?}");
        }
        let same = verify_cornerstone(&sys, curve.as_ref(), 1.0, 1.0, &tol).unwrap();
        assert_eq!(same.lhs, 0.0);
    }

    #[test]
    fn profile_for_gamma_two() {
        let law = PressureLaw::power(2.0).unwrap();
        let p = pressure_convexity_profile(&law, 1.0, &uniform_grid(2.0, 20)).unwrap();
        assert!((p.dphi0 - 3.0).abs() < 1e-14);
        assert!((p.rows[0].phi - 2.0).abs() < 1e-14);
        assert!(p.max_disagreement < 1e-7);
    }

    #[test]
    fn liu_scan_flags_nonconvex_region() {
        let law = PressureLaw::nonconvex_test();
        let scan = liu_scan(&law, &uniform_grid(1.0, 20)[1..], &uniform_grid(0.5, 10), 1e-7).unwrap();
        assert!(!scan.liu_ok);
        let (a, b) = scan.nonconvex_intervals[0];
        assert!(scan.failure_intervals.iter().any(|&(x, y)| x < b && y > a));
        let convex = liu_scan(&PressureLaw::power(1.4).unwrap(), &[0.5, 1.0, 2.0], &uniform_grid(1.0, 10), 1e-7).unwrap();
        assert!(convex.liu_ok && convex.nonconvex_intervals.is_empty());
    }

    #[test]
    fn growth_matches_closed_form() {
        let sys = g2();
        let law = PressureLaw::power(2.0).unwrap();
        let curve = shock_curve(&sys, &state(&[1.0, 0.5]), Family::One).unwrap();
        for s in [0.1, 0.7, 1.9] {
            let fd = growth_rate(&sys, curve.as_ref(), s).unwrap();
            assert!((fd - h1b_isentropic_analytic(&law, 1.0, s).unwrap()).abs() < 1e-6);
        }
    }
}
