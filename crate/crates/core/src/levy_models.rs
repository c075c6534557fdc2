//! Multivariate variance gamma model: cumulant generating function, martingale
//! drift, domain checks and the Esscher-tilted parameter map.
//!
//! The process is `X_t = mu*t + b*Gamma_t + A*W_{Gamma_t}` with `A*A^T = Sigma`
//! and `Gamma` a gamma subordinator normalized to `E[Gamma_t] = t`,
//! `Var Gamma_t = t/lambda`. The cumulant function of `X_1` is
//!
//! ```text
//! G(theta) = <theta, mu> - lambda * ln(1 - <theta,b>/lambda - <Sigma theta, theta>/(2 lambda))
//! ```
//!
//! finite exactly on the ellipsoidal region where the log argument `u*` is
//! positive. Out-of-domain evaluations return `+inf` so optimizers can treat
//! `G` as an extended-real convex barrier.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Log-argument margin `u* = 1 - <theta,b>/lambda - <Sigma theta,theta>/(2 lambda)`.
///
/// `theta` lies in the effective domain of the cumulant function iff `u* > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainMargin {
    pub u_star: f64,
}

impl DomainMargin {
    pub fn admissible(&self) -> bool {
        self.u_star > 0.0
    }
}

/// Cumulant-function surface shared by bounded-domain Levy models.
///
/// The tilt solvers only need these four methods, so other models with a
/// bounded effective domain (NIG, CGMY) can plug in later. Only variance
/// gamma ships.
pub trait CgfModel {
    fn dim(&self) -> usize;

    /// `G(theta)`, with `+inf` as the out-of-domain sentinel. `G(0) = 0` exactly.
    fn cgf(&self, theta: &DVector<f64>) -> f64;

    /// `grad G(theta) = mu + (b + Sigma theta) / u*`.
    fn cgf_grad(&self, theta: &DVector<f64>) -> Result<DVector<f64>>;

    /// `hess G(theta) = Sigma/u* + (b + Sigma theta)(b + Sigma theta)^T / (lambda u*^2)`.
    fn cgf_hessian(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>>;

    fn domain_margin(&self, theta: &DVector<f64>) -> DomainMargin;
}

/// Martingale drift `mu_i = lambda * ln(1 - b_i/lambda - Sigma_ii/(2 lambda))`,
/// the unique drift with `E[e^{X^i_t}] = 1` for every asset.
pub fn martingale_drift(lambda: f64, b: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    let mut mu = DVector::zeros(b.len());
    for i in 0..b.len() {
        let arg = 1.0 - b[i] / lambda - sigma[(i, i)] / (2.0 * lambda);
        if arg <= 0.0 {
            return Err(Error::Domain(format!(
                "martingale drift undefined for asset {i}: 1 - b_i/lambda - Sigma_ii/(2 lambda) = {arg} <= 0"
            )));
        }
        mu[i] = lambda * arg.ln();
    }
    Ok(mu)
}

/// Variance gamma model parameters together with the derived martingale drift
/// and a cached Cholesky factor of `Sigma`.
///
/// Immutable after construction; all operations are pure functions.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceGammaModel {
    lambda: f64,
    b: DVector<f64>,
    sigma: DMatrix<f64>,
    mu: DVector<f64>,
    chol_lower: DMatrix<f64>,
    tilted: bool,
}

impl VarianceGammaModel {
    /// Builds a base (risk-neutral) model. The drift is always derived from the
    /// martingale condition, never supplied.
    pub fn new(lambda: f64, b: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let n = b.len();
        if n == 0 {
            return Err(Error::InvalidInput("model dimension must be >= 1".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "sigma must be {n}x{n}, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let scale = sigma.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::SigmaNotPositiveDefinite);
                }
            }
        }
        let chol = nalgebra::linalg::Cholesky::new(sigma.clone())
            .ok_or(Error::SigmaNotPositiveDefinite)?;
        let mu = martingale_drift(lambda, &b, &sigma)?;
        Ok(Self {
            lambda,
            b,
            sigma,
            mu,
            chol_lower: chol.l(),
            tilted: false,
        })
    }

    /// Esscher tilt: the law of `X` under `P^theta` is again variance gamma with
    /// `mu~ = mu`, `lambda~ = lambda`, `b~ = (b + Sigma theta)/u*`, `Sigma~ = Sigma/u*`.
    ///
    /// The returned model is flagged as tilted: it keeps the base drift `mu`
    /// and in general no longer satisfies the martingale normalization.
    pub fn esscher_tilt(&self, theta: &DVector<f64>) -> Result<Self> {
        let u = self.domain_margin(theta);
        if !u.admissible() {
            return Err(Error::Domain(format!(
                "tilt out of CGF domain: u*(theta) = {}",
                u.u_star
            )));
        }
        let b_tilde = (&self.b + &self.sigma * theta) / u.u_star;
        let sigma_tilde = &self.sigma / u.u_star;
        let chol = nalgebra::linalg::Cholesky::new(sigma_tilde.clone())
            .ok_or(Error::SigmaNotPositiveDefinite)?;
        Ok(Self {
            lambda: self.lambda,
            b: b_tilde,
            sigma: sigma_tilde,
            mu: self.mu.clone(),
            chol_lower: chol.l(),
            tilted: true,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    /// Lower Cholesky factor of `Sigma`, cached at construction.
    pub fn chol_lower(&self) -> &DMatrix<f64> {
        &self.chol_lower
    }

    pub fn is_tilted(&self) -> bool {
        self.tilted
    }
}

impl CgfModel for VarianceGammaModel {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn cgf(&self, theta: &DVector<f64>) -> f64 {
        let u = self.domain_margin(theta).u_star;
        if u <= 0.0 {
            return f64::INFINITY;
        }
        self.mu.dot(theta) - self.lambda * u.ln()
    }

    fn cgf_grad(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        let u = self.domain_margin(theta).u_star;
        if u <= 0.0 {
            return Err(Error::Domain(format!("cgf_grad out of domain: u* = {u}")));
        }
        Ok(&self.mu + (&self.b + &self.sigma * theta) / u)
    }

    fn cgf_hessian(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let u = self.domain_margin(theta).u_star;
        if u <= 0.0 {
            return Err(Error::Domain(format!("cgf_hessian out of domain: u* = {u}")));
        }
        let v = &self.b + &self.sigma * theta;
        Ok(&self.sigma / u + (&v * v.transpose()) / (self.lambda * u * u))
    }

    fn domain_margin(&self, theta: &DVector<f64>) -> DomainMargin {
        let quad = (&self.sigma * theta).dot(theta);
        DomainMargin {
            u_star: 1.0 - self.b.dot(theta) / self.lambda - quad / (2.0 * self.lambda),
        }
    }
}
