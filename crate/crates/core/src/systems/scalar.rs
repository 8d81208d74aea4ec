//! Scalar law `u_t + f(u)_x = 0` with `η = u²/2`, `G(u) = ∫₀ᵘ v f′(v) dv`.
//!
//! For a user flux the integral is taken with a fixed composite
//! Gauss–Legendre rule, so `G` is a smooth function of `u` and can be
//! differenced.

use std::fmt;
use std::sync::Arc;

use crate::calculus::{fmt_state, state, ConservationLaw, Matrix, State};
use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ScalarConvex {
    kind: ScalarKind,
    pub k_bound: f64,
}

#[derive(Clone)]
enum ScalarKind {
    Burgers,
    Custom { f: ScalarFn, label: String },
}

impl fmt::Debug for ScalarConvex {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "ScalarConvex({})", self.label())
    }
}

/// Burgers flux `u²/2` with closed-form entropy flux `u³/3`.
pub fn make_burgers(k_bound: f64) -> ScalarConvex {
    ScalarConvex {
        kind: ScalarKind::Burgers,
        k_bound,
    }
}

/// Generic flux; derivatives by central differences and `G` by quadrature.
pub fn make_scalar_convex<F>(flux: F) -> ScalarConvex
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    ScalarConvex {
        kind: ScalarKind::Custom {
            f: Arc::new(flux),
            label: "custom flux".into(),
        },
        k_bound: 1e3,
    }
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn gauss_legendre(f: &(dyn Fn(f64) -> f64 + Send + Sync), u: f64) -> f64 {
    let panels = 32;
    let h = u / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

impl ScalarConvex {
    pub fn label(&self) -> String {
        match &self.kind {
            ScalarKind::Burgers => "burgers".into(),
            ScalarKind::Custom { label, .. } => label.clone(),
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        match &self.kind {
            ScalarKind::Burgers => 0.5 * u * u,
            ScalarKind::Custom { f, .. } => f(u),
        }
    }

    pub fn df(&self, u: f64) -> f64 {
        match &self.kind {
            ScalarKind::Burgers => u,
            ScalarKind::Custom { f, .. } => {
                let h = 1e-5 * u.abs().max(1.0);
                (f(u + h) - f(u - h)) / (2.0 * h)
            }
        }
    }

    fn g(&self, u: f64) -> Result<f64> {
        match &self.kind {
            ScalarKind::Burgers => Ok(u * u * u / 3.0),
            // integration by parts: ∫₀ᵘ v f′(v) dv = u f(u) − ∫₀ᵘ f(v) dv
            ScalarKind::Custom { f, .. } => Ok(u * f(u) - gauss_legendre(f.as_ref(), u)),
        }
    }

    fn check(&self, u: &State) -> Result<f64> {
        if !self.in_closure(u) {
            return Err(Error::Domain(format!("{} outside |u| ≤ K", fmt_state(u))));
        }
        Ok(u[0])
    }
}

impl ConservationLaw for ScalarConvex {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> String {
        format!("scalar, {}", self.label())
    }

    fn flux(&self, u: &State) -> State {
        state(&[self.f(u[0])])
    }

    fn entropy(&self, u: &State) -> Result<f64> {
        let v = self.check(u)?;
        Ok(0.5 * v * v)
    }

    fn entropy_flux(&self, u: &State) -> Result<f64> {
        let v = self.check(u)?;
        self.g(v)
    }

    fn entropy_grad(&self, u: &State) -> Result<State> {
        Ok(state(&[self.check(u)?]))
    }

    fn entropy_hessian(&self, u: &State) -> Result<Matrix> {
        self.check(u)?;
        Ok(Matrix::identity(1, 1))
    }

    fn flux_jacobian(&self, u: &State) -> Matrix {
        Matrix::from_element(1, 1, self.df(u[0]))
    }

    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        Ok(vec![self.df(self.check(u)?)])
    }

    fn in_interior(&self, u: &State) -> bool {
        u[0].is_finite() && u[0].abs() < self.k_bound
    }

    fn in_closure(&self, u: &State) -> bool {
        u[0].is_finite() && u[0].abs() <= self.k_bound
    }

    fn is_singular(&self, _: &State) -> bool {
        false
    }
}
