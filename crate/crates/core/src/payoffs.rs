//! Put payoffs on simulated paths and the convex conjugates of their
//! log-payoffs.
//!
//! Vanilla and basket puts have a closed-form conjugate; the discretely
//! sampled Asian put uses the rectangle-rule conjugate of its density
//! representation. `conjugate_bruteforce` is an independent grid-search
//! oracle used by the test suite to pin both closed forms.
//!
//! Calls are rejected at construction: their log-payoff is not concave, so
//! the dual reduction behind the tilt solvers does not apply to them.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::SamplePath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    VanillaPut,
    BasketPut,
    /// Discretely sampled arithmetic-average put with `averaging_dates`
    /// right-endpoint dates `j*T/m`.
    AsianPut { averaging_dates: usize },
}

/// Put contract: strike, maturity and per-asset spot (the paper uses
/// `S_0 = 1`; prices are `S_t = S_0 * exp(X_t)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub strike: f64,
    pub maturity: f64,
    pub spot: Vec<f64>,
}

impl PayoffSpec {
    pub fn vanilla_put(strike: f64, maturity: f64) -> Result<Self> {
        Self::validated(PayoffKind::VanillaPut, strike, maturity, vec![1.0])
    }

    pub fn basket_put(strike: f64, maturity: f64, dim: usize) -> Result<Self> {
        Self::validated(PayoffKind::BasketPut, strike, maturity, vec![1.0; dim])
    }

    pub fn asian_put(strike: f64, maturity: f64, averaging_dates: usize) -> Result<Self> {
        Self::validated(
            PayoffKind::AsianPut { averaging_dates },
            strike,
            maturity,
            vec![1.0],
        )
    }

    pub fn validated(kind: PayoffKind, strike: f64, maturity: f64, spot: Vec<f64>) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::InvalidInput(format!("strike must be positive, got {strike}")));
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(Error::InvalidInput(format!("maturity must be positive, got {maturity}")));
        }
        if spot.is_empty() || spot.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("spot must be positive componentwise".into()));
        }
        match &kind {
            PayoffKind::VanillaPut | PayoffKind::AsianPut { .. } if spot.len() != 1 => {
                return Err(Error::InvalidInput("vanilla and Asian puts are single-asset".into()));
            }
            PayoffKind::AsianPut { averaging_dates } if *averaging_dates < 1 => {
                return Err(Error::InvalidInput("averaging_dates must be >= 1".into()));
            }
            _ => {}
        }
        Ok(Self {
            kind,
            strike,
            maturity,
            spot,
        })
    }

    pub fn dim(&self) -> usize {
        self.spot.len()
    }

    /// European payoffs depend on the terminal value only.
    pub fn is_european(&self) -> bool {
        matches!(self.kind, PayoffKind::VanillaPut | PayoffKind::BasketPut)
    }

    /// Grid times the payoff needs: maturity, plus the averaging dates for
    /// Asian contracts.
    pub fn required_times(&self) -> Vec<f64> {
        match self.kind {
            PayoffKind::VanillaPut | PayoffKind::BasketPut => vec![self.maturity],
            PayoffKind::AsianPut { averaging_dates } => (1..=averaging_dates)
                .map(|j| j as f64 * self.maturity / averaging_dates as f64)
                .collect(),
        }
    }

    /// Payoff value on a log-price path.
    pub fn evaluate(&self, path: &SamplePath<'_>) -> Result<f64> {
        if path.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "path dimension {} does not match payoff dimension {}",
                path.dim(),
                self.dim()
            )));
        }
        match self.kind {
            PayoffKind::VanillaPut | PayoffKind::BasketPut => {
                let k = path.index_of_time(self.maturity).ok_or_else(|| {
                    Error::GridMismatch(format!("maturity {} not on path grid", self.maturity))
                })?;
                let x = path.at(k);
                let basket: f64 = (0..self.dim()).map(|i| self.spot[i] * x[i].exp()).sum();
                Ok((self.strike - basket).max(0.0))
            }
            PayoffKind::AsianPut { averaging_dates } => {
                let mut avg = 0.0;
                for j in 1..=averaging_dates {
                    let t = j as f64 * self.maturity / averaging_dates as f64;
                    let k = path.index_of_time(t).ok_or_else(|| {
                        Error::GridMismatch(format!("averaging date {t} not on path grid"))
                    })?;
                    avg += self.spot[0] * path.at(k)[0].exp();
                }
                avg /= averaging_dates as f64;
                Ok((self.strike - avg).max(0.0))
            }
        }
    }
}

/// Value of a log-payoff conjugate, with the maximizing point when the
/// supremum is attained in the interior.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateValue {
    pub value: f64,
    pub argmax: Option<DVector<f64>>,
}

impl ConjugateValue {
    fn infinite() -> Self {
        Self {
            value: f64::INFINITY,
            argmax: None,
        }
    }
}

/// `t * ln(t)` with the convex-analysis convention `0 * ln(0) = 0`.
fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// Conjugate of the basket-put log-payoff `h(x) = ln(K - sum_k e^{x_k})^+`:
///
/// ```text
/// h^(theta) = -(1 - sum_k theta_k) ln((1 - sum_k theta_k)/K) - sum_k theta_k ln(-theta_k)
/// ```
///
/// for `theta <= 0` componentwise, `+inf` if any component is strictly
/// positive. `n = 1` specializes to the vanilla-put conjugate. Components
/// equal to zero contribute `0` (the supremum over that coordinate is
/// approached as `x_k -> -inf`, so no argmax is reported in that case).
pub fn conjugate_basket(theta: &DVector<f64>, strike: f64) -> ConjugateValue {
    if theta.iter().any(|&t| t > 0.0) {
        return ConjugateValue::infinite();
    }
    let s: f64 = theta.sum();
    let one_minus_s = 1.0 - s;
    let mut value = -one_minus_s * (one_minus_s / strike).ln();
    for &t in theta.iter() {
        value += xlogx(-t);
    }
    let argmax = if theta.iter().all(|&t| t < 0.0) {
        Some(DVector::from_fn(theta.len(), |k, _| {
            (-theta[k] * strike / one_minus_s).ln()
        }))
    } else {
        None
    };
    ConjugateValue { value, argmax }
}

/// Conjugate of the Asian-put log-payoff for an absolutely continuous tilt
/// with cell densities `theta_j <= 0` on cells of length `delta_j`:
///
/// ```text
/// H^(theta) = ln(K/(1-I)) - sum_j theta_j ln(-K T theta_j/(1-I)) delta_j,   I = sum_j theta_j delta_j
/// ```
///
/// Rectangle rule on the grid; cells with `theta_j = 0` contribute `0`.
/// Any strictly positive density gives `+inf`.
pub fn conjugate_asian(
    densities: &[f64],
    cell_lengths: &[f64],
    strike: f64,
    maturity: f64,
) -> ConjugateValue {
    assert_eq!(
        densities.len(),
        cell_lengths.len(),
        "densities and cell lengths must align"
    );
    if densities.iter().any(|&t| t > 0.0) {
        return ConjugateValue::infinite();
    }
    let mass: f64 = densities
        .iter()
        .zip(cell_lengths)
        .map(|(t, d)| t * d)
        .sum();
    let one_minus_i = 1.0 - mass;
    let mut value = (strike / one_minus_i).ln();
    for (&t, &d) in densities.iter().zip(cell_lengths) {
        if t != 0.0 {
            value -= t * (-strike * maturity * t / one_minus_i).ln() * d;
        }
    }
    let argmax = if densities.iter().all(|&t| t < 0.0) {
        Some(DVector::from_fn(densities.len(), |j, _| {
            (-strike * maturity * densities[j] / one_minus_i).ln()
        }))
    } else {
        None
    };
    ConjugateValue { value, argmax }
}

/// Independent test oracle: maximizes `H(x) - <x, theta>` over a discretized
/// box by scan plus golden-section refinement (coordinate ascent for more
/// than one variable; the objective is concave, so coordinate-wise
/// maximization converges).
///
/// For European payoffs `theta` is the terminal tilt vector; for Asian
/// payoffs it is the density on `theta.len()` uniform cells.
pub fn conjugate_bruteforce(
    payoff: &PayoffSpec,
    theta: &[f64],
    box_lo: f64,
    box_hi: f64,
    resolution: usize,
) -> f64 {
    match payoff.kind {
        PayoffKind::VanillaPut | PayoffKind::BasketPut => {
            let strike = payoff.strike;
            let objective = move |x: &[f64]| {
                let basket: f64 = x.iter().map(|v| v.exp()).sum();
                if basket >= strike {
                    return f64::NEG_INFINITY;
                }
                (strike - basket).ln() - x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>()
            };
            maximize_concave(objective, theta.len(), box_lo, box_hi, resolution)
        }
        PayoffKind::AsianPut { .. } => {
            let strike = payoff.strike;
            let m = theta.len();
            let delta = payoff.maturity / m as f64;
            let inv_t = 1.0 / payoff.maturity;
            let objective = move |x: &[f64]| {
                let avg: f64 = x.iter().map(|v| v.exp() * delta).sum::<f64>() * inv_t;
                if avg >= strike {
                    return f64::NEG_INFINITY;
                }
                (strike - avg).ln()
                    - x.iter().zip(theta).map(|(a, b)| a * b * delta).sum::<f64>()
            };
            maximize_concave(objective, m, box_lo, box_hi, resolution)
        }
    }
}

fn maximize_concave(
    objective: impl Fn(&[f64]) -> f64,
    dim: usize,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> f64 {
    let mut x = vec![lo * 0.75 + hi * 0.25; dim];
    let mut best = objective(&x);
    for _ in 0..200 {
        let prev = best;
        for k in 0..dim {
            let line = |v: f64, x: &mut Vec<f64>| {
                x[k] = v;
                objective(x)
            };
            // coarse scan
            let points = resolution.max(8);
            let mut arg = x[k];
            let mut val = best;
            for i in 0..=points {
                let v = lo + (hi - lo) * i as f64 / points as f64;
                let f = line(v, &mut x);
                if f > val {
                    val = f;
                    arg = v;
                }
            }
            // golden-section refinement around the scan winner
            let step = (hi - lo) / points as f64;
            let (mut a, mut b) = ((arg - step).max(lo), (arg + step).min(hi));
            let phi = 0.5 * (5.0f64.sqrt() - 1.0);
            let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
            let (mut fc, mut fd) = (line(c, &mut x), line(d, &mut x));
            for _ in 0..80 {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - phi * (b - a);
                    fc = line(c, &mut x);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + phi * (b - a);
                    fd = line(d, &mut x);
                }
            }
            let mid = 0.5 * (a + b);
            let fmid = line(mid, &mut x);
            if fmid >= val {
                x[k] = mid;
                best = fmid;
            } else {
                x[k] = arg;
                best = line(arg, &mut x);
            }
        }
        if best - prev < 1e-13 && dim > 1 {
            break;
        }
        if dim == 1 {
            break;
        }
    }
    best
}
