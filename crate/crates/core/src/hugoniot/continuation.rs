//! Numerical continuation of shock curves for generic systems.
//!
//! Writing `S = base + t·d` with `|d| = 1`, the jump conditions divided by
//! `t` read `(A(base + t d) − A(base))/t − σ d = 0`. Together with
//! `|d|² = 1` this is a regular square system in `(d, σ)` that reduces to
//! the eigenproblem of the flux Jacobian at `t = 0`, so the branch leaves
//! the trivial solution `S = base` cleanly. The continuation parameter is
//! the chord length `t = |S − base|`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Family, ShockCurveSample};
use crate::calculus::{spectrum, ConservationLaw, State};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    /// Smallest step, as a fraction of the nominal step.
    pub step_min_ratio: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub gap_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            step_min_ratio: 1.0 / 1024.0,
            newton_tol: 1e-12,
            max_newton: 40,
            gap_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationRun {
    pub curve: ShockCurveSample,
    /// Why the branch ended before `n_steps`, if it did.
    pub stopped: Option<String>,
}

pub fn shock_curve_continuation<L: ConservationLaw + ?Sized>(
    sys: &L,
    base: &State,
    family: Family,
    step: f64,
    n_steps: usize,
) -> Result<ShockCurveSample> {
    Ok(continue_shock_curve(sys, base, family, step, n_steps, &ContinuationOptions::default())?.curve)
}

fn spectral_gap(vals: &[f64], k: usize) -> f64 {
    let mut gap = f64::INFINITY;
    if k > 0 {
        gap = gap.min(vals[k] - vals[k - 1]);
    }
    if k + 1 < vals.len() {
        gap = gap.min(vals[k + 1] - vals[k]);
    }
    gap
}

struct Newton<'a, L: ?Sized> {
    sys: &'a L,
    base: &'a State,
    flux_base: State,
}

impl<L: ConservationLaw + ?Sized> Newton<'_, L> {
    fn residual(&self, t: f64, d: &State, sigma: f64) -> DVector<f64> {
        let m = d.len();
        let s = self.base + d * t;
        let mut r = DVector::zeros(m + 1);
        let h = (self.sys.flux(&s) - &self.flux_base) / t - d * sigma;
        r.rows_mut(0, m).copy_from(&h);
        r[m] = 0.5 * (d.norm_squared() - 1.0);
        r
    }

    fn jacobian(&self, t: f64, d: &State, sigma: f64) -> DMatrix<f64> {
        let m = d.len();
        let s = self.base + d * t;
        let mut j = DMatrix::zeros(m + 1, m + 1);
        let a = self.sys.flux_jacobian(&s) - DMatrix::identity(m, m) * sigma;
        j.view_mut((0, 0), (m, m)).copy_from(&a);
        for i in 0..m {
            j[(i, m)] = -d[i];
            j[(m, i)] = d[i];
        }
        j
    }

    /// Damped Newton from `(d, σ)`; `None` if it does not converge.
    fn solve(&self, t: f64, d: &State, sigma: f64, opts: &ContinuationOptions) -> Option<(State, f64)> {
        let m = d.len();
        let mut d = d.clone();
        let mut sigma = sigma;
        let tol = opts.newton_tol * (1.0 + sigma.abs()) + 16.0 * f64::EPSILON * self.flux_base.amax() / t;
        let in_domain = |d: &State| self.sys.in_closure(&(self.base + d * t));
        if !in_domain(&d) {
            return None;
        }
        let mut r = self.residual(t, &d, sigma);
        for _ in 0..opts.max_newton {
            if r.amax() <= tol {
                return Some((d, sigma));
            }
            let dx = self.jacobian(t, &d, sigma).lu().solve(&(-&r))?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let d_try = &d + dx.rows(0, m) * lambda;
                let s_try = sigma + dx[m] * lambda;
                if in_domain(&d_try) {
                    let r_try = self.residual(t, &d_try, s_try);
                    if r_try.amax() < r.amax() || r_try.amax() <= tol {
                        d = d_try;
                        sigma = s_try;
                        r = r_try;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return None;
            }
        }
        (r.amax() <= tol).then_some((d, sigma))
    }
}

/// Continue the `family` shock curve from `base` for up to `n_steps` steps
/// of chord length `step`.
///
/// A spectral gap below `gap_tol` at the base is an error; met later, or on
/// leaving the domain, the branch is truncated and the reason recorded.
pub fn continue_shock_curve<L: ConservationLaw + ?Sized>(
    sys: &L,
    base: &State,
    family: Family,
    step: f64,
    n_steps: usize,
    opts: &ContinuationOptions,
) -> Result<ContinuationRun> {
    if !(step > 0.0) {
        return Err(Error::Range("continuation step must be positive".into()));
    }
    let m = sys.dim();
    let k = match family {
        Family::One => 0,
        Family::N => m - 1,
    };
    let (vals, vecs) = spectrum(sys, base)?;
    let gap = spectral_gap(&vals, k);
    if gap < opts.gap_tol {
        return Err(Error::EigenvalueCollision { gap, tol: opts.gap_tol });
    }
    let lambda0 = vals[k];
    let mut r = vecs[k].clone();

    // Orient the eigenvector so the speed moves the admissible way.
    let h = 1e-6;
    let dlam = |r: &State| -> Result<f64> {
        Ok((sys.eigenvalues(&(base + r * h))?[k] - sys.eigenvalues(&(base - r * h))?[k]) / (2.0 * h))
    };
    let mut slope = dlam(&r)?;
    let want = match family {
        Family::One => -1.0,
        Family::N => 1.0,
    };
    if slope.abs() > 1e-8 {
        if slope * want < 0.0 {
            r = -r;
            slope = -slope;
        }
    } else if r[0] < 0.0 {
        r = -r;
        slope = -slope;
    }

    let mut curve = ShockCurveSample {
        family,
        base: base.clone(),
        s_grid: vec![0.0],
        states: vec![base.clone()],
        speeds: vec![lambda0],
        s_max: 0.0,
    };
    let newton = Newton {
        sys,
        base,
        flux_base: sys.flux(base),
    };
    let mut dirs: Vec<State> = vec![r.clone()];
    let mut stopped = None;
    let step_min = step * opts.step_min_ratio;
    let mut h_step = step;

    'outer: while curve.s_grid.len() <= n_steps {
        let n = curve.s_grid.len();
        let t_prev = curve.s_grid[n - 1];
        loop {
            let t = t_prev + h_step;
            let (d_pred, s_pred) = if n == 1 {
                (r.clone(), lambda0 + 0.5 * slope * t)
            } else {
                let (t0, t1) = (curve.s_grid[n - 2], t_prev);
                let w = (t - t1) / (t1 - t0);
                let d = &dirs[n - 1] + (&dirs[n - 1] - &dirs[n - 2]) * w;
                let s = curve.speeds[n - 1] + (curve.speeds[n - 1] - curve.speeds[n - 2]) * w;
                (d.normalize(), s)
            };
            match newton.solve(t, &d_pred, s_pred, opts) {
                Some((d, sigma)) => {
                    let st = base + &d * t;
                    if !sys.in_interior(&st) {
                        stopped = Some(format!("left the domain interior at t = {t:.6e}"));
                        break 'outer;
                    }
                    let ev = sys.eigenvalues(&st)?;
                    let g = spectral_gap(&ev, k);
                    if g < opts.gap_tol {
                        stopped = Some(format!("spectral gap {g:.3e} below tolerance at t = {t:.6e}"));
                        break 'outer;
                    }
                    curve.s_grid.push(t);
                    curve.states.push(st);
                    curve.speeds.push(sigma);
                    dirs.push(d);
                    h_step = (2.0 * h_step).min(step);
                    break;
                }
                None => {
                    h_step *= 0.5;
                    if h_step < step_min {
                        if n == 1 {
                            return Err(Error::ContinuationStall {
                                s: t_prev,
                                msg: "Newton failed on the first step".into(),
                            });
                        }
                        stopped = Some(format!("Newton stalled at t = {t_prev:.6e}"));
                        break 'outer;
                    }
                }
            }
        }
    }
    curve.s_max = *curve.s_grid.last().unwrap();
    Ok(ContinuationRun { curve, stopped })
}

/// Comparison of `σ′(0)` with `½ dλ/ds` at the base along a continued curve.
#[derive(Debug, Clone, Serialize)]
pub struct GnCheck {
    pub dsigma: f64,
    pub half_dlambda: f64,
    pub rel_error: f64,
}

/// One-sided three-point derivative at `t[0]` on a nonuniform grid.
fn derivative_at_start(t: &[f64], f: &[f64]) -> f64 {
    let (t0, t1, t2) = (t[0], t[1], t[2]);
    f[0] * (2.0 * t0 - t1 - t2) / ((t0 - t1) * (t0 - t2))
        + f[1] * (t0 - t2) / ((t1 - t0) * (t1 - t2))
        + f[2] * (t0 - t1) / ((t2 - t0) * (t2 - t1))
}

pub fn gn_check<L: ConservationLaw + ?Sized>(sys: &L, base: &State, family: Family, h: f64) -> Result<GnCheck> {
    let curve = shock_curve_continuation(sys, base, family, h, 2)?;
    if curve.len() < 3 {
        return Err(Error::ContinuationStall {
            s: curve.s_max,
            msg: "fewer than three samples".into(),
        });
    }
    let k = match family {
        Family::One => 0,
        Family::N => sys.dim() - 1,
    };
    let lam: Vec<f64> = curve
        .states
        .iter()
        .map(|s| sys.eigenvalues(s).map(|v| v[k]))
        .collect::<Result<_>>()?;
    let dsigma = derivative_at_start(&curve.s_grid, &curve.speeds);
    let half_dlambda = 0.5 * derivative_at_start(&curve.s_grid, &lam);
    Ok(GnCheck {
        dsigma,
        half_dlambda,
        rel_error: (dsigma - half_dlambda).abs() / half_dlambda.abs().max(1e-300),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::state;
    use crate::hugoniot::{IsentropicCurve, ShockCurve};
    use crate::systems::{make_full_euler, make_isentropic, DomainBox, PressureLaw};

    #[test]
    fn zero_steps_is_the_base() {
        let sys = make_isentropic(PressureLaw::power(2.0).unwrap(), DomainBox::default()).unwrap();
        let c = shock_curve_continuation(&sys, &state(&[1.0, 0.0]), Family::One, 0.1, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.speeds[0] + 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matches_explicit_isentropic_curve() {
        let sys = make_isentropic(PressureLaw::power(2.0).unwrap(), DomainBox::default()).unwrap();
        let base = state(&[1.0, 0.0]);
        for fam in [Family::One, Family::N] {
            let c = shock_curve_continuation(&sys, &base, fam, 0.05, 30).unwrap();
            let exact = IsentropicCurve::new(&sys, &base, fam).unwrap();
            for (st, &sigma) in c.states.iter().zip(&c.speeds).skip(1) {
                let s = st[0] - base[0];
                assert!(s > 0.0);
                let (ex, es) = exact.eval(s).unwrap();
                assert!((st - ex).amax() < 1e-9, "{fam:?}");
                assert!((sigma - es).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gn_relation_full_euler() {
        let sys = make_full_euler(1.4, DomainBox::default()).unwrap();
        let base = sys.conserved(1.0, 0.0, 1.0);
        let g = gn_check(&sys, &base, Family::One, 1e-3).unwrap();
        assert!(g.rel_error < 1e-3, "{g:?}");
    }

    struct Degenerate;

    impl ConservationLaw for Degenerate {
        fn dim(&self) -> usize {
            2
        }
        fn flux(&self, u: &State) -> State {
            u.clone()
        }
        fn entropy(&self, u: &State) -> Result<f64> {
            Ok(0.5 * u.norm_squared())
        }
        fn entropy_flux(&self, u: &State) -> Result<f64> {
            Ok(0.5 * u.norm_squared())
        }
        fn in_interior(&self, _: &State) -> bool {
            true
        }
        fn in_closure(&self, _: &State) -> bool {
            true
        }
        fn is_singular(&self, _: &State) -> bool {
            false
        }
    }

    #[test]
    fn collision_at_base_is_an_error() {
        let r = shock_curve_continuation(&Degenerate, &state(&[1.0, 0.0]), Family::One, 0.1, 3);
        assert!(matches!(r, Err(Error::EigenvalueCollision { .. })));
    }
}
