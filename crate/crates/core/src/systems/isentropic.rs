//! Isentropic Euler in conserved variables `(ρ, ρu)`.

use crate::calculus::{fmt_state, state, ConservationLaw, Matrix, State};
use crate::error::{Error, Result};

use super::{DomainBox, PressureLaw};

#[derive(Debug, Clone)]
pub struct IsentropicEuler {
    pub law: PressureLaw,
    pub domain: DomainBox,
}

pub fn make_isentropic(law: PressureLaw, domain: DomainBox) -> Result<IsentropicEuler> {
    domain.validate()?;
    law.validate(domain.k_bound)?;
    Ok(IsentropicEuler { law, domain })
}

impl IsentropicEuler {
    pub fn conserved(rho: f64, u: f64) -> State {
        state(&[rho, rho * u])
    }

    pub fn velocity(u: &State) -> f64 {
        if u[0] > 0.0 {
            u[1] / u[0]
        } else {
            0.0
        }
    }

    fn smooth_point(&self, u: &State) -> Result<(f64, f64)> {
        if !self.in_interior(u) {
            return Err(Error::Domain(format!(
                "derivatives undefined at {}",
                fmt_state(u)
            )));
        }
        Ok((u[0], u[1] / u[0]))
    }

    fn density(&self, u: &State) -> Result<f64> {
        let rho = u[0];
        if !(rho >= 0.0) || !u[1].is_finite() {
            return Err(Error::Domain(format!("negative or invalid density in {}", fmt_state(u))));
        }
        if rho == 0.0 && u[1] != 0.0 {
            return Err(Error::Domain("momentum without mass".into()));
        }
        Ok(rho)
    }

    fn norm(u: &State) -> f64 {
        (u[0] * u[0] + Self::velocity(u).powi(2)).sqrt()
    }
}

impl ConservationLaw for IsentropicEuler {
    fn dim(&self) -> usize {
        2
    }

    fn name(&self) -> String {
        format!("isentropic Euler, {}", self.law.label())
    }

    fn flux(&self, u: &State) -> State {
        let rho = u[0];
        let m = u[1];
        let kinetic = if rho > 0.0 { m * m / rho } else { 0.0 };
        let p = self.law.p(rho.max(0.0)).unwrap_or(f64::NAN);
        state(&[m, kinetic + p])
    }

    fn entropy(&self, u: &State) -> Result<f64> {
        let rho = self.density(u)?;
        let kinetic = if rho > 0.0 { 0.5 * u[1] * u[1] / rho } else { 0.0 };
        Ok(kinetic + self.law.entropy_density(rho)?)
    }

    fn entropy_flux(&self, u: &State) -> Result<f64> {
        let rho = self.density(u)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        let m = u[1];
        if m == 0.0 {
            return Ok(0.0);
        }
        Ok(m * m * m / (2.0 * rho * rho) + m * self.law.entropy_density_d1(rho)?)
    }

    fn entropy_grad(&self, u: &State) -> Result<State> {
        let (rho, v) = self.smooth_point(u)?;
        Ok(state(&[-0.5 * v * v + self.law.entropy_density_d1(rho)?, v]))
    }

    fn entropy_hessian(&self, u: &State) -> Result<Matrix> {
        let (rho, v) = self.smooth_point(u)?;
        let s2 = self.law.entropy_density_d2(rho)?;
        Ok(Matrix::from_row_slice(
            2,
            2,
            &[v * v / rho + s2, -v / rho, -v / rho, 1.0 / rho],
        ))
    }

    fn flux_jacobian(&self, u: &State) -> Matrix {
        let v = Self::velocity(u);
        let c2 = self.law.dp(u[0].max(0.0)).unwrap_or(f64::NAN);
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, c2 - v * v, 2.0 * v])
    }

    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        Ok(vec![self.lambda_minus(u)?, self.lambda_plus(u)?])
    }

    fn lambda_minus(&self, u: &State) -> Result<f64> {
        let rho = self.density(u)?;
        Ok(Self::velocity(u) - self.law.dp(rho)?.sqrt())
    }

    fn lambda_plus(&self, u: &State) -> Result<f64> {
        let rho = self.density(u)?;
        Ok(Self::velocity(u) + self.law.dp(rho)?.sqrt())
    }

    fn in_interior(&self, u: &State) -> bool {
        let rho = u[0];
        let (lo, hi) = self.law.range();
        rho.is_finite()
            && u[1].is_finite()
            && rho > self.domain.rho_floor
            && rho > lo
            && rho < hi
            && Self::norm(u) < self.domain.k_bound
    }

    fn in_closure(&self, u: &State) -> bool {
        let rho = u[0];
        if !(rho >= 0.0) || !u[1].is_finite() {
            return false;
        }
        if rho == 0.0 {
            return u[1] == 0.0 && self.law.contains(0.0);
        }
        self.law.contains(rho) && Self::norm(u) <= self.domain.k_bound
    }

    fn is_singular(&self, u: &State) -> bool {
        u[0] <= self.domain.rho_floor
    }
}
