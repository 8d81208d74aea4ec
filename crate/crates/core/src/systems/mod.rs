//! Concrete systems: isentropic Euler with a general pressure law, full
//! polytropic Euler, scalar convex laws, and their reversed duals.

pub(crate) mod config;
mod full_euler;
mod isentropic;
mod pressure;
mod scalar;

pub use config::{
    build_system, load_system_config, locate_field, parse_system_config, preset, read_config_text, SystemConfig,
    SystemKind, PRESETS,
};
pub use full_euler::{make_full_euler, FullEuler, E_FLOOR};
pub use isentropic::{make_isentropic, IsentropicEuler};
pub use pressure::{PressureLaw, TabulatedLaw};
pub use scalar::{make_burgers, make_scalar_convex, ScalarConvex};

use crate::calculus::{ConservationLaw, Matrix, State};
use crate::error::{Error, Result};

/// Bound `K` on primitive variables and the numerical vacuum threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DomainBox {
    pub k_bound: f64,
    pub rho_floor: f64,
}

impl Default for DomainBox {
    fn default() -> Self {
        Self {
            k_bound: 10.0,
            rho_floor: 1e-10,
        }
    }
}

impl DomainBox {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_bound > 0.0) {
            return Err(Error::config("K", "K must be positive"));
        }
        if !(self.rho_floor >= 0.0) {
            return Err(Error::config("rho_floor", "rho_floor must be nonnegative"));
        }
        Ok(())
    }
}

/// A concrete system, or the reversed system `∂t U − ∂x A(U) = 0` of one.
#[derive(Debug, Clone)]
pub enum SystemSpec {
    Isentropic(IsentropicEuler),
    FullEuler(FullEuler),
    Scalar(ScalarConvex),
    Reversed(Box<SystemSpec>),
}

impl SystemSpec {
    /// Reversal is an involution.
    pub fn reversed(self) -> SystemSpec {
        match self {
            SystemSpec::Reversed(inner) => *inner,
            other => SystemSpec::Reversed(Box::new(other)),
        }
    }

    pub fn is_reversed(&self) -> bool {
        matches!(self, SystemSpec::Reversed(_))
    }

    /// The underlying unreversed system.
    pub fn base(&self) -> &SystemSpec {
        match self {
            SystemSpec::Reversed(inner) => inner.base(),
            other => other,
        }
    }

    /// Up to `n` interior states from primitive variables drawn uniformly in
    /// `ρ ∈ [0.2, 3]`, `u ∈ [−2, 2]`, `e ∈ [0.2, 3]` (scalar: `u ∈ [−3, 3]`).
    pub fn sample_states(&self, n: usize, seed: u64) -> Vec<State> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n && attempts < 100 * n {
            attempts += 1;
            let u = match self.base() {
                SystemSpec::Scalar(_) => State::from_vec(vec![rng.gen_range(-3.0..3.0)]),
                SystemSpec::Isentropic(_) => {
                    let (rho, v) = (rng.gen_range(0.2..3.0), rng.gen_range(-2.0..2.0));
                    IsentropicEuler::conserved(rho, v)
                }
                SystemSpec::FullEuler(fe) => {
                    let (rho, v, e) = (rng.gen_range(0.2..3.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0));
                    fe.conserved(rho, v, e)
                }
                SystemSpec::Reversed(_) => unreachable!("base() strips reversal"),
            };
            if self.in_interior(&u) {
                out.push(u);
            }
        }
        out
    }

    fn inner(&self) -> &dyn ConservationLaw {
        match self {
            SystemSpec::Isentropic(s) => s,
            SystemSpec::FullEuler(s) => s,
            SystemSpec::Scalar(s) => s,
            SystemSpec::Reversed(s) => s.as_ref(),
        }
    }
}

impl ConservationLaw for SystemSpec {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn name(&self) -> String {
        match self {
            SystemSpec::Reversed(s) => format!("reversed {}", s.name()),
            _ => self.inner().name(),
        }
    }

    fn flux(&self, u: &State) -> State {
        match self {
            SystemSpec::Reversed(s) => -s.flux(u),
            _ => self.inner().flux(u),
        }
    }

    fn entropy(&self, u: &State) -> Result<f64> {
        self.inner().entropy(u)
    }

    fn entropy_flux(&self, u: &State) -> Result<f64> {
        match self {
            SystemSpec::Reversed(s) => Ok(-s.entropy_flux(u)?),
            _ => self.inner().entropy_flux(u),
        }
    }

    fn entropy_grad(&self, u: &State) -> Result<State> {
        self.inner().entropy_grad(u)
    }

    fn entropy_hessian(&self, u: &State) -> Result<Matrix> {
        self.inner().entropy_hessian(u)
    }

    fn flux_jacobian(&self, u: &State) -> Matrix {
        match self {
            SystemSpec::Reversed(s) => -s.flux_jacobian(u),
            _ => self.inner().flux_jacobian(u),
        }
    }

    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        match self {
            SystemSpec::Reversed(s) => Ok(s.eigenvalues(u)?.into_iter().rev().map(|v| -v).collect()),
            _ => self.inner().eigenvalues(u),
        }
    }

    fn lambda_minus(&self, u: &State) -> Result<f64> {
        match self {
            SystemSpec::Reversed(s) => Ok(-s.lambda_plus(u)?),
            _ => self.inner().lambda_minus(u),
        }
    }

    fn lambda_plus(&self, u: &State) -> Result<f64> {
        match self {
            SystemSpec::Reversed(s) => Ok(-s.lambda_minus(u)?),
            _ => self.inner().lambda_plus(u),
        }
    }

    fn in_interior(&self, u: &State) -> bool {
        self.inner().in_interior(u)
    }

    fn in_closure(&self, u: &State) -> bool {
        self.inner().in_closure(u)
    }

    fn is_singular(&self, u: &State) -> bool {
        self.inner().is_singular(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::state;

    #[test]
    fn reversed_negates_flux_and_swaps_speeds() {
        let sys = SystemSpec::Isentropic(
            make_isentropic(PressureLaw::power(2.0).unwrap(), DomainBox::default()).unwrap(),
        );
        let rev = sys.clone().reversed();
        let u = state(&[1.5, 0.6]);
        assert_eq!(rev.flux(&u), -sys.flux(&u));
        assert_eq!(rev.lambda_minus(&u).unwrap(), -sys.lambda_plus(&u).unwrap());
        assert_eq!(rev.entropy_flux(&u).unwrap(), -sys.entropy_flux(&u).unwrap());
        assert!(crate::calculus::compatibility_residual(&rev, &u).unwrap() < 1e-6);
        assert!(!rev.clone().reversed().is_reversed());
    }
}
