//! System abstraction and the relative-entropy calculus.
//!
//! Every system is written in conserved variables. Derivative callbacks
//! default to central finite differences with step `max(1e-6, 1e-6 |u_k|)`
//! (first derivatives) and `max(1e-4, 1e-4 |u_k|)` (second derivatives
//! taken as differences of the gradient).

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type State = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub const FD_REL_STEP: f64 = 1e-6;
pub const FD_HESS_STEP: f64 = 1e-4;

pub fn fd_step(x: f64, rel: f64) -> f64 {
    (rel * x.abs()).max(rel)
}

pub fn state(v: &[f64]) -> State {
    DVector::from_column_slice(v)
}

/// A one-dimensional system of conservation laws with a designated
/// strictly convex entropy pair.
pub trait ConservationLaw: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> String {
        "system".into()
    }

    fn flux(&self, u: &State) -> State;

    fn entropy(&self, u: &State) -> Result<f64>;

    fn entropy_flux(&self, u: &State) -> Result<f64>;

    fn entropy_grad(&self, u: &State) -> Result<State> {
        if !self.in_interior(u) {
            return Err(Error::Domain(format!("entropy gradient undefined at {}", fmt_state(u))));
        }
        fd_gradient(|v| self.entropy(v), u, FD_REL_STEP)
    }

    fn entropy_hessian(&self, u: &State) -> Result<Matrix> {
        let m = self.dim();
        let mut h = Matrix::zeros(m, m);
        for k in 0..m {
            let step = fd_step(u[k], FD_HESS_STEP);
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += step;
            dn[k] -= step;
            let col = (self.entropy_grad(&up)? - self.entropy_grad(&dn)?) / (2.0 * step);
            h.set_column(k, &col);
        }
        Ok((&h + h.transpose()) * 0.5)
    }

    fn flux_jacobian(&self, u: &State) -> Matrix {
        let m = self.dim();
        let mut j = Matrix::zeros(m, m);
        for k in 0..m {
            let step = fd_step(u[k], FD_REL_STEP);
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += step;
            dn[k] -= step;
            let col = (self.flux(&up) - self.flux(&dn)) / (2.0 * step);
            j.set_column(k, &col);
        }
        j
    }

    /// Characteristic speeds in increasing order.
    fn eigenvalues(&self, u: &State) -> Result<Vec<f64>> {
        Ok(spectrum(self, u)?.0)
    }

    fn lambda_minus(&self, u: &State) -> Result<f64> {
        Ok(self.eigenvalues(u)?[0])
    }

    fn lambda_plus(&self, u: &State) -> Result<f64> {
        let ev = self.eigenvalues(u)?;
        Ok(ev[ev.len() - 1])
    }

    /// Membership in the open set where the system is smooth.
    fn in_interior(&self, u: &State) -> bool;

    /// Membership in the closure, which may include vacuum.
    fn in_closure(&self, u: &State) -> bool;

    /// Membership in the singular part of the closure.
    fn is_singular(&self, u: &State) -> bool;
}

pub fn fmt_state(u: &State) -> String {
    let parts: Vec<String> = u.iter().map(|v| format!("{v:.6e}")).collect();
    format!("({})", parts.join(", "))
}

pub fn fd_gradient<F>(f: F, u: &State, rel: f64) -> Result<State>
where
    F: Fn(&State) -> Result<f64>,
{
    let m = u.len();
    let mut g = State::zeros(m);
    for k in 0..m {
        let step = fd_step(u[k], rel);
        let mut up = u.clone();
        let mut dn = u.clone();
        up[k] += step;
        dn[k] -= step;
        g[k] = (f(&up)? - f(&dn)?) / (2.0 * step);
    }
    Ok(g)
}

/// Eigenvalues (ascending) and right eigenvectors of the flux Jacobian,
/// obtained from the symmetric pencil `(D²η ∇A, D²η)`.
pub fn spectrum<L: ConservationLaw + ?Sized>(sys: &L, u: &State) -> Result<(Vec<f64>, Vec<State>)> {
    let h = sys.entropy_hessian(u)?;
    let j = sys.flux_jacobian(u);
    let hj = &h * &j;
    let hj = (&hj + hj.transpose()) * 0.5;
    let chol = Cholesky::new(h.clone())
        .ok_or_else(|| Error::Domain(format!("entropy Hessian not positive definite at {}", fmt_state(u))))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular Cholesky factor".into()))?;
    let m = &l_inv * hj * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .map(|&i| {
            let w = eig.eigenvectors.column(i).into_owned();
            let r = l_inv.transpose() * w;
            let n = r.norm();
            r / n
        })
        .collect();
    Ok((vals, vecs))
}

/// Cached data of a reference state `V` for repeated relative evaluations.
#[derive(Debug, Clone)]
pub struct Reference {
    pub state: State,
    pub eta: f64,
    pub g: f64,
    pub grad: State,
    pub flux: State,
}

impl Reference {
    pub fn new<L: ConservationLaw + ?Sized>(sys: &L, v: &State) -> Result<Self> {
        if sys.is_singular(v) || !sys.in_interior(v) {
            return Err(Error::Domain(format!(
                "reference state {} must lie in the interior",
                fmt_state(v)
            )));
        }
        Ok(Self {
            state: v.clone(),
            eta: sys.entropy(v)?,
            g: sys.entropy_flux(v)?,
            grad: sys.entropy_grad(v)?,
            flux: sys.flux(v),
        })
    }

    pub fn relative_entropy<L: ConservationLaw + ?Sized>(&self, sys: &L, u: &State) -> Result<f64> {
        check_closure(sys, u)?;
        Ok(sys.entropy(u)? - self.eta - self.grad.dot(&(u - &self.state)))
    }

    pub fn relative_flux<L: ConservationLaw + ?Sized>(&self, sys: &L, u: &State) -> Result<f64> {
        check_closure(sys, u)?;
        Ok(sys.entropy_flux(u)? - self.g - self.grad.dot(&(sys.flux(u) - &self.flux)))
    }
}

fn check_closure<L: ConservationLaw + ?Sized>(sys: &L, u: &State) -> Result<()> {
    if !sys.in_closure(u) {
        return Err(Error::Domain(format!("{} is outside the state domain", fmt_state(u))));
    }
    Ok(())
}

/// `η(u|v) = η(u) − η(v) − ∇η(v)·(u − v)`.
pub fn relative_entropy<L: ConservationLaw + ?Sized>(sys: &L, u: &State, v: &State) -> Result<f64> {
    Reference::new(sys, v)?.relative_entropy(sys, u)
}

/// `F(u, v) = G(u) − G(v) − ∇η(v)·(A(u) − A(v))`.
pub fn relative_flux<L: ConservationLaw + ?Sized>(sys: &L, u: &State, v: &State) -> Result<f64> {
    Reference::new(sys, v)?.relative_flux(sys, u)
}

/// `‖∇G − ∇ηᵀ∇A‖∞` with `∇G` from central differences of `G`.
pub fn compatibility_residual<L: ConservationLaw + ?Sized>(sys: &L, u: &State) -> Result<f64> {
    compatibility_residual_with_step(sys, u, FD_REL_STEP)
}

pub fn compatibility_residual_with_step<L: ConservationLaw + ?Sized>(
    sys: &L,
    u: &State,
    rel_step: f64,
) -> Result<f64> {
    if !sys.in_interior(u) {
        return Err(Error::Domain(format!(
            "compatibility undefined at {}",
            fmt_state(u)
        )));
    }
    let dg = fd_gradient(|v| sys.entropy_flux(v), u, rel_step)?;
    let grad = sys.entropy_grad(u)?;
    let jac = sys.flux_jacobian(u);
    let rhs = jac.transpose() * grad;
    Ok((dg - rhs).amax())
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ComparabilityEstimate {
    pub c1: f64,
    pub c2: f64,
    pub sample_region: String,
}

/// Two-sided quadratic bounds `c1 |u−v|² ≤ η(u|v) ≤ c2 |u−v|²` over
/// `v ∈ omega`, `u ∈ ambient`.
///
/// Pairs whose segment stays in the interior are bounded by the extreme
/// half-eigenvalues of `D²η` sampled along the segment; other pairs
/// contribute their actual ratio.
pub fn comparability_constants<L: ConservationLaw + ?Sized>(
    sys: &L,
    omega: &[State],
    ambient: &[State],
) -> Result<ComparabilityEstimate> {
    if omega.is_empty() {
        return Err(Error::DegenerateInput("empty sample set".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let hess_extremes = |w: &State| -> Result<Option<(f64, f64)>> {
        if !sys.in_interior(w) {
            return Ok(None);
        }
        let h = sys.entropy_hessian(w)?;
        let eig = SymmetricEigen::new(h).eigenvalues;
        let min = eig.min();
        if min <= 0.0 {
            return Err(Error::DegenerateInput(format!(
                "entropy Hessian has eigenvalue {min:.3e} at {}",
                fmt_state(w)
            )));
        }
        Ok(Some((min, eig.max())))
    };
    for v in omega {
        match hess_extremes(v)? {
            Some((a, b)) => {
                lo = lo.min(0.5 * a);
                hi = hi.max(0.5 * b);
            }
            None => {
                return Err(Error::Domain(format!(
                    "omega sample {} is outside the interior",
                    fmt_state(v)
                )))
            }
        }
    }
    const SEGMENT_POINTS: usize = 8;
    for v in omega {
        let reference = Reference::new(sys, v)?;
        for u in ambient {
            let d2 = (u - v).norm_squared();
            if d2 == 0.0 {
                continue;
            }
            let ratio = reference.relative_entropy(sys, u)? / d2;
            let mut seg = Some((f64::INFINITY, 0.0f64));
            for k in 0..=SEGMENT_POINTS {
                let w = v + (u - v) * (k as f64 / SEGMENT_POINTS as f64);
                match hess_extremes(&w)? {
                    Some((a, b)) => {
                        if let Some((sa, sb)) = seg.as_mut() {
                            *sa = sa.min(0.5 * a);
                            *sb = sb.max(0.5 * b);
                        }
                    }
                    None => {
                        seg = None;
                        break;
                    }
                }
            }
            if let Some((a, b)) = seg {
                lo = lo.min(a);
                hi = hi.max(b);
            }
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    Ok(ComparabilityEstimate {
        c1: lo,
        c2: hi,
        sample_region: format!(
            "{} reference states, {} ambient states",
            omega.len(),
            ambient.len()
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar law with quadratic entropy and cubic flux, written without
    /// any derivative callbacks so every default path is exercised.
    struct Cubic;

    impl ConservationLaw for Cubic {
        fn dim(&self) -> usize {
            1
        }
        fn flux(&self, u: &State) -> State {
            state(&[u[0].powi(3) / 3.0])
        }
        fn entropy(&self, u: &State) -> Result<f64> {
            Ok(0.5 * u[0] * u[0])
        }
        fn entropy_flux(&self, u: &State) -> Result<f64> {
            Ok(u[0].powi(4) / 4.0)
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
    fn default_derivatives() {
        let u = state(&[1.5]);
        assert!((Cubic.entropy_grad(&u).unwrap()[0] - 1.5).abs() < 1e-8);
        assert!((Cubic.entropy_hessian(&u).unwrap()[(0, 0)] - 1.0).abs() < 1e-6);
        assert!((Cubic.flux_jacobian(&u)[(0, 0)] - 2.25).abs() < 1e-8);
        assert!((Cubic.lambda_minus(&u).unwrap() - 2.25).abs() < 1e-6);
        assert!(compatibility_residual(&Cubic, &u).unwrap() < 1e-6);
    }

    #[test]
    fn relative_quantities_vanish_on_diagonal() {
        let u = state(&[0.7]);
        assert!(relative_entropy(&Cubic, &u, &u).unwrap().abs() < 1e-15);
        assert!(relative_flux(&Cubic, &u, &u).unwrap().abs() < 1e-15);
    }

    #[test]
    fn quadratic_entropy_relative_value() {
        let r = relative_entropy(&Cubic, &state(&[2.0]), &state(&[0.5])).unwrap();
        assert!((r - 0.5 * 1.5 * 1.5).abs() < 1e-9);
    }

    #[test]
    fn fd_step_rule() {
        assert_eq!(fd_step(0.0, 1e-6), 1e-6);
        assert!((fd_step(10.0, 1e-6) - 1e-5).abs() < 1e-20);
    }

    #[test]
    fn single_point_comparability() {
        let v = state(&[1.0]);
        let est = comparability_constants(&Cubic, &[v.clone()], &[v]).unwrap();
        assert!((est.c1 - 0.5).abs() < 1e-6 && (est.c2 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn empty_omega_is_degenerate() {
        assert!(matches!(
            comparability_constants(&Cubic, &[], &[]),
            Err(Error::DegenerateInput(_))
        ));
    }
}
