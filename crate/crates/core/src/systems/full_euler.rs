//! Polytropic full Euler in conserved variables `(ρ, ρu, ρE)`,
//! `E = e + u²/2`, `P = (γ−1)ρe`.

use crate::calculus::{fmt_state, state, ConservationLaw, Matrix, State};
use crate::error::{Error, Result};

use super::DomainBox;

/// Internal energies below this are rejected by entropy evaluations.
pub const E_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct FullEuler {
    pub gamma: f64,
    pub domain: DomainBox,
}

pub fn make_full_euler(gamma: f64, domain: DomainBox) -> Result<FullEuler> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::config("gamma", format!("gamma must exceed 1, got {gamma}")));
    }
    domain.validate()?;
    Ok(FullEuler { gamma, domain })
}

impl FullEuler {
    pub fn conserved(&self, rho: f64, u: f64, e: f64) -> State {
        state(&[rho, rho * u, rho * (e + 0.5 * u * u)])
    }

    /// `(ρ, u, e)`; vacuum maps to zeros.
    pub fn primitive(&self, u: &State) -> (f64, f64, f64) {
        let rho = u[0];
        if rho <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let v = u[1] / rho;
        (rho, v, u[2] / rho - 0.5 * v * v)
    }

    pub fn pressure(&self, u: &State) -> f64 {
        let (rho, _, e) = self.primitive(u);
        (self.gamma - 1.0) * rho * e
    }

    pub fn sound_speed(&self, u: &State) -> f64 {
        let (_, _, e) = self.primitive(u);
        (self.gamma * (self.gamma - 1.0) * e.max(0.0)).sqrt()
    }

    fn checked(&self, u: &State) -> Result<(f64, f64, f64)> {
        let rho = u[0];
        if !(rho >= 0.0) || !u[1].is_finite() || !u[2].is_finite() {
            return Err(Error::Domain(format!("invalid state {}", fmt_state(u))));
        }
        if rho == 0.0 {
            if u[1] != 0.0 || u[2] != 0.0 {
                return Err(Error::Domain("momentum or energy without mass".into()));
            }
            return Ok((0.0, 0.0, 0.0));
        }
        let (rho, v, e) = self.primitive(u);
        if e < E_FLOOR {
            return Err(Error::Domain(format!(
                "internal energy {e:.3e} below floor in {}",
                fmt_state(u)
            )));
        }
        Ok((rho, v, e))
    }

    fn smooth_point(&self, u: &State) -> Result<(f64, f64, f64)> {
        if !self.in_interior(u) {
            return Err(Error::Domain(format!(
                "derivatives undefined at {}",
                fmt_state(u)
            )));
        }
        self.checked(u)
    }

    fn norm(&self, u: &State) -> f64 {
        let (rho, v, e) = self.primitive(u);
        let big_e = e + 0.5 * v * v;
        (rho * rho + v * v + big_e * big_e).sqrt()
    }
}

impl ConservationLaw for FullEuler {
    fn dim(&self) -> usize {
        3
    }

    fn name(&self) -> String {
        format!("full Euler, gamma={}", self.gamma)
    }

    fn flux(&self, u: &State) -> State {
        let (_, v, _) = self.primitive(u);
        let p = self.pressure(u);
        state(&[u[1], u[1] * v + p, (u[2] + p) * v])
    }

    fn entropy(&self, u: &State) -> Result<f64> {
        let (rho, _, e) = self.checked(u)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok((self.gamma - 1.0) * rho * rho.ln() - rho * e.ln())
    }

    fn entropy_flux(&self, u: &State) -> Result<f64> {
        let (rho, v, _) = self.checked(u)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(v * self.entropy(u)?)
    }

    fn entropy_grad(&self, u: &State) -> Result<State> {
        let (rho, v, e) = self.smooth_point(u)?;
        let g = self.gamma;
        Ok(state(&[
            (g - 1.0) * (rho.ln() + 1.0) - e.ln() + 1.0 - v * v / (2.0 * e),
            v / e,
            -1.0 / e,
        ]))
    }

    fn entropy_hessian(&self, u: &State) -> Result<Matrix> {
        let (rho, v, e) = self.smooth_point(u)?;
        let g = self.gamma;
        let re2 = rho * e * e;
        let h11 = g / rho + v.powi(4) / (4.0 * re2);
        let h12 = -v.powi(3) / (2.0 * re2);
        let h13 = v * v / (2.0 * re2) - 1.0 / (rho * e);
        let h22 = 1.0 / (rho * e) + v * v / re2;
        let h23 = -v / re2;
        let h33 = 1.0 / re2;
        Ok(Matrix::from_row_slice(
            3,
            3,
            &[h11, h12, h13, h12, h22, h23, h13, h23, h33],
        ))
    }

    fn flux_jacobian(&self, u: &State) -> Matrix {
        let (rho, v, _) = self.primitive(u);
        let g = self.gamma;
        let p = self.pressure(u);
        let h = if rho > 0.0 { (u[2] + p) / rho } else { 0.0 };
        Matrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                1.0,
                0.0,
                0.5 * (g - 3.0) * v * v,
                (3.0 - g) * v,
                g - 1.0,
                v * (0.5 * (g - 1.0) * v * v - h),
                h - (g - 1.0) * v * v,
                g * v,
            ],
        )
    }

    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        let (_, v, _) = self.checked(u)?;
        let c = self.sound_speed(u);
        Ok(vec![v - c, v, v + c])
    }

    fn lambda_minus(&self, u: &State) -> Result<f64> {
        let (_, v, _) = self.checked(u)?;
        Ok(v - self.sound_speed(u))
    }

    fn lambda_plus(&self, u: &State) -> Result<f64> {
        let (_, v, _) = self.checked(u)?;
        Ok(v + self.sound_speed(u))
    }

    fn in_interior(&self, u: &State) -> bool {
        if !(u[0] > self.domain.rho_floor) || !u[1].is_finite() || !u[2].is_finite() {
            return false;
        }
        let (_, _, e) = self.primitive(u);
        e > E_FLOOR && self.norm(u) < self.domain.k_bound
    }

    fn in_closure(&self, u: &State) -> bool {
        if !(u[0] >= 0.0) || !u[1].is_finite() || !u[2].is_finite() {
            return false;
        }
        if u[0] == 0.0 {
            return u[1] == 0.0 && u[2] == 0.0;
        }
        let (_, _, e) = self.primitive(u);
        e >= 0.0 && self.norm(u) <= self.domain.k_bound
    }

    fn is_singular(&self, u: &State) -> bool {
        u[0] <= self.domain.rho_floor
    }
}
