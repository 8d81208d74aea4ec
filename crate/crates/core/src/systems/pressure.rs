//! Barotropic pressure laws and the matching entropy density `S`.
//!
//! `S` is any function with `ρ S″(ρ) = P′(ρ)`; for the power law it is
//! normalised to `S(ρ) = ρ^γ/(γ−1)`.

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::quadrature;

#[derive(Debug, Clone)]
pub enum PressureLaw {
    /// `P = ρ^γ`.
    Power { gamma: f64 },
    /// `P = ρ³ − 3aρ² + 3bρ`; hyperbolic when `b > a²`, with `[ρP]″`
    /// negative on an interval around `ρ = 3a/4`.
    Cubic { a: f64, b: f64 },
    Table(TabulatedLaw),
}

impl PressureLaw {
    pub fn power(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::config("gamma", format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(PressureLaw::Power { gamma })
    }

    /// The bundled law whose `[ρP]″` changes sign on `(0.556, 0.944)`.
    pub fn nonconvex_test() -> Self {
        PressureLaw::Cubic { a: 1.0, b: 1.05 }
    }

    pub fn cubic(a: f64, b: f64) -> Result<Self> {
        if !(b > a * a) {
            return Err(Error::config("pressure", "cubic law needs b > a² for P′ > 0"));
        }
        Ok(PressureLaw::Cubic { a, b })
    }

    pub fn table(pairs: &[(f64, f64)]) -> Result<Self> {
        Ok(PressureLaw::Table(TabulatedLaw::new(pairs)?))
    }

    pub fn label(&self) -> String {
        match self {
            PressureLaw::Power { gamma } => format!("power law gamma={gamma}"),
            PressureLaw::Cubic { a, b } => format!("cubic law a={a} b={b}"),
            PressureLaw::Table(t) => format!("tabulated law ({} points)", t.curve.knots().len()),
        }
    }

    /// Closed density range on which the law is defined.
    pub fn range(&self) -> (f64, f64) {
        match self {
            PressureLaw::Power { .. } | PressureLaw::Cubic { .. } => (0.0, f64::INFINITY),
            PressureLaw::Table(t) => t.curve.range(),
        }
    }

    pub fn contains(&self, rho: f64) -> bool {
        let (lo, hi) = self.range();
        rho >= lo && rho <= hi
    }

    fn check(&self, rho: f64) -> Result<()> {
        if !self.contains(rho) || !rho.is_finite() {
            let (lo, hi) = self.range();
            return Err(Error::Domain(format!(
                "density {rho:.6e} outside the pressure-law range [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    pub fn p(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match self {
            PressureLaw::Power { gamma } => rho.powf(*gamma),
            PressureLaw::Cubic { a, b } => rho * rho * rho - 3.0 * a * rho * rho + 3.0 * b * rho,
            PressureLaw::Table(t) => t.curve.eval(rho),
        })
    }

    pub fn dp(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match self {
            PressureLaw::Power { gamma } => gamma * rho.powf(gamma - 1.0),
            PressureLaw::Cubic { a, b } => 3.0 * rho * rho - 6.0 * a * rho + 3.0 * b,
            PressureLaw::Table(t) => t.curve.eval_all(rho).1,
        })
    }

    pub fn d2p(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match self {
            PressureLaw::Power { gamma } => gamma * (gamma - 1.0) * rho.powf(gamma - 2.0),
            PressureLaw::Cubic { a, .. } => 6.0 * rho - 6.0 * a,
            PressureLaw::Table(t) => t.curve.eval_all(rho).2,
        })
    }

    /// `[ρP(ρ)]″ = 2P′ + ρP″`.
    pub fn rho_p_dd(&self, rho: f64) -> Result<f64> {
        Ok(2.0 * self.dp(rho)? + rho * self.d2p(rho)?)
    }

    pub fn entropy_density(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match self {
            PressureLaw::Power { gamma } => rho.powf(*gamma) / (gamma - 1.0),
            PressureLaw::Cubic { a, b } => {
                let log_term = if rho > 0.0 { 3.0 * b * rho * rho.ln() } else { 0.0 };
                0.5 * rho * rho * rho - 3.0 * a * rho * rho + log_term
            }
            PressureLaw::Table(t) => rho * t.integral(rho)?,
        })
    }

    pub fn entropy_density_d1(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match self {
            PressureLaw::Power { gamma } => gamma * rho.powf(gamma - 1.0) / (gamma - 1.0),
            PressureLaw::Cubic { a, b } => {
                if rho <= 0.0 {
                    return Err(Error::Domain("entropy derivative undefined at vacuum".into()));
                }
                1.5 * rho * rho - 6.0 * a * rho + 3.0 * b * (rho.ln() + 1.0)
            }
            PressureLaw::Table(t) => t.integral(rho)? + t.curve.eval(rho) / rho,
        })
    }

    /// `S″ = P′/ρ`.
    pub fn entropy_density_d2(&self, rho: f64) -> Result<f64> {
        if rho <= 0.0 {
            return Err(Error::Domain("entropy curvature undefined at vacuum".into()));
        }
        Ok(self.dp(rho)? / rho)
    }

    /// Sample `P′` on the range (capped at `rho_cap`) and fail if it is not
    /// strictly positive.
    pub fn validate(&self, rho_cap: f64) -> Result<()> {
        let (lo, hi) = self.range();
        let hi = hi.min(rho_cap);
        let lo = if lo > 0.0 { lo } else { hi * 1e-6 };
        let n = 400;
        for k in 0..=n {
            let rho = lo * (hi / lo).powf(k as f64 / n as f64);
            let d = self.dp(rho)?;
            if !(d > 0.0) {
                return Err(Error::config(
                    "pressure",
                    format!("P′({rho:.4e}) = {d:.4e} is not positive"),
                ));
            }
        }
        Ok(())
    }
}

/// Pressure given by (ρ, P) pairs; `S(ρ) = ρ ∫_{ρ₀}^{ρ} P(q)/q² dq`.
#[derive(Debug, Clone)]
pub struct TabulatedLaw {
    curve: MonotoneCubic,
    cumulative: Vec<f64>,
}

impl TabulatedLaw {
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::config("pressure_table", "need at least two (rho, P) pairs"));
        }
        if pairs[0].0 <= 0.0 {
            return Err(Error::config("pressure_table", "densities must be positive"));
        }
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "pressure_table",
                "pressure must be strictly increasing in density",
            ));
        }
        let curve = MonotoneCubic::new(xs.clone(), ys)
            .map_err(|e| Error::config("pressure_table", e.to_string()))?;
        let mut cumulative = vec![0.0];
        for w in xs.windows(2) {
            let seg = quadrature::integrate(
                |q| Ok(curve.eval(q) / (q * q)),
                w[0],
                w[1],
                1e-13,
            )?;
            cumulative.push(cumulative.last().unwrap() + seg);
        }
        Ok(Self { curve, cumulative })
    }

    fn integral(&self, rho: f64) -> Result<f64> {
        let knots = self.curve.knots();
        let k = match knots.binary_search_by(|v| v.partial_cmp(&rho).unwrap()) {
            Ok(i) => return Ok(self.cumulative[i]),
            Err(i) => i.max(1) - 1,
        };
        let rest = quadrature::integrate(
            |q| Ok(self.curve.eval(q) / (q * q)),
            knots[k],
            rho,
            1e-13,
        )?;
        Ok(self.cumulative[k] + rest)
    }
}
