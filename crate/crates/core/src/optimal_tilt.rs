//! Asymptotically optimal tilt computation.
//!
//! The variance proxy minimized here is `2(H^(theta) + int_0^T G(theta([t,T])) dt)`.
//! For European puts the minimizer is a Dirac atom at maturity and the problem
//! is a smooth strictly convex minimization in `R^n` (damped Newton). For the
//! Asian put the minimizer is an absolutely continuous density; two solvers
//! ship:
//!
//! * [`solve_asian_direct`] minimizes the discretized functional over cell
//!   densities. It is the ground truth the shooting solver must agree with.
//! * [`solve_asian_bvp`] integrates the Euler-Lagrange first integral
//!   `psi' = -(G(psi) + C)` and shoots on the constant `C`. The terminal
//!   condition used is `psi'(T) = -(1 - psi_T)/(K T)`, the form consistent
//!   with the direct optimizer's first-order conditions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_models::CgfModel;
use crate::measures::TiltMeasure;
use crate::payoffs::{conjugate_asian, conjugate_basket, PayoffSpec};

/// Optimal tilt with solver diagnostics.
///
/// `objective` is the dual variance proxy `2(H^ + int G)` at the solution.
/// For European solutions `gradient_norm` is the Euclidean norm of the
/// objective gradient; for the shooting solver it is the absolute terminal
/// residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltSolution {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_bar: Option<Vec<f64>>,
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub measure: TiltMeasure,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none", default)]
    pub shooting_constant: Option<f64>,
    #[serde(rename = "psi", skip_serializing_if = "Option::is_none", default)]
    pub psi_star: Option<Vec<f64>>,
}

fn cgf1(model: &impl CgfModel, s: f64) -> f64 {
    model.cgf(&DVector::from_column_slice(&[s]))
}

fn cgf1_grad(model: &impl CgfModel, s: f64) -> Result<f64> {
    Ok(model.cgf_grad(&DVector::from_column_slice(&[s]))?[0])
}

fn cgf1_hess(model: &impl CgfModel, s: f64) -> Result<f64> {
    Ok(model.cgf_hessian(&DVector::from_column_slice(&[s]))?[(0, 0)])
}

/// Piecewise-constant density representation of a grid measure: atom `w_j` at
/// `t_j` is read as density `w_j / (t_j - t_{j-1})` on the cell `(t_{j-1}, t_j]`.
fn measure_densities(measure: &TiltMeasure) -> (Vec<f64>, Vec<f64>) {
    let atoms = measure.atoms();
    let mut densities = Vec::with_capacity(atoms.len());
    let mut lengths = Vec::with_capacity(atoms.len());
    let mut start = 0.0;
    for (t, w) in atoms {
        let d = t - start;
        densities.push(w[0] / d);
        lengths.push(d);
        start = t;
    }
    (densities, lengths)
}

/// Dual variance proxy `2 (H^(theta) + int_0^T G(theta([t,T])) dt)`;
/// `+inf` propagates from either term.
///
/// For European payoffs only measures concentrated at maturity are
/// admissible: any mass strictly before `T` yields `+inf`. For the Asian put
/// the conjugate is taken through the density representation, so Dirac
/// measures (other than zero) yield `+inf`.
pub fn dual_objective(
    model: &impl CgfModel,
    payoff: &PayoffSpec,
    measure: &TiltMeasure,
) -> f64 {
    assert!(
        (measure.horizon() - payoff.maturity).abs() <= 1e-9 * payoff.maturity.max(1.0),
        "measure horizon {} does not match payoff maturity {}",
        measure.horizon(),
        payoff.maturity
    );
    let conj = if payoff.is_european() {
        let horizon = measure.horizon();
        let mut terminal = DVector::zeros(measure.dim());
        for (t, w) in measure.atoms() {
            if t < horizon && w.iter().any(|&x| x != 0.0) {
                return f64::INFINITY;
            }
            if t == horizon {
                terminal = w.clone();
            }
        }
        conjugate_basket(&terminal, payoff.strike).value
    } else if measure.is_dirac() {
        let w = measure.dirac_weight().unwrap();
        if w.iter().all(|&x| x == 0.0) {
            // the zero measure is absolutely continuous with density zero
            payoff.strike.ln()
        } else {
            return f64::INFINITY;
        }
    } else {
        let (densities, lengths) = measure_densities(measure);
        conjugate_asian(&densities, &lengths, payoff.strike, payoff.maturity).value
    };
    if !conj.is_finite() {
        return f64::INFINITY;
    }
    let mgf = measure.log_mgf_path(model);
    if !mgf.is_finite() {
        return f64::INFINITY;
    }
    2.0 * (conj + mgf)
}

const MAX_ITERATIONS: usize = 500;

/// Optimal European tilt `theta_bar* = argmin { h^(theta) + T G(theta) }` over
/// the open region `{theta < 0} ∩ {u* > 0}`, found by damped Newton with
/// feasibility and Armijo backtracking. The optimal measure is
/// `theta_bar* δ_T`.
pub fn solve_european(model: &impl CgfModel, payoff: &PayoffSpec) -> Result<TiltSolution> {
    if !payoff.is_european() {
        return Err(Error::InvalidInput("solve_european requires a European payoff".into()));
    }
    let n = model.dim();
    if payoff.dim() != n {
        return Err(Error::InvalidInput(format!(
            "payoff dimension {} does not match model dimension {n}",
            payoff.dim()
        )));
    }
    let strike = payoff.strike;
    let horizon = payoff.maturity;

    let feasible = |theta: &DVector<f64>| {
        theta.iter().all(|&t| t < 0.0) && model.domain_margin(theta).admissible()
    };
    let objective = |theta: &DVector<f64>| -> f64 {
        conjugate_basket(theta, strike).value + horizon * model.cgf(theta)
    };
    let gradient = |theta: &DVector<f64>| -> Result<DVector<f64>> {
        let s: f64 = theta.sum();
        let mut g = model.cgf_grad(theta)? * horizon;
        let log_term = ((1.0 - s) / strike).ln();
        for i in 0..n {
            g[i] += log_term - (-theta[i]).ln();
        }
        Ok(g)
    };
    let hessian = |theta: &DVector<f64>| -> Result<DMatrix<f64>> {
        let s: f64 = theta.sum();
        let mut h = model.cgf_hessian(theta)? * horizon;
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= 1.0 / (1.0 - s);
            }
            h[(i, i)] -= 1.0 / theta[i];
        }
        Ok(h)
    };

    // theta = -1 is feasible for all shipped parameter sets; shrink toward 0
    // defensively if it is not.
    let mut theta = DVector::from_element(n, -1.0);
    let mut shrink = 0;
    while !feasible(&theta) {
        theta *= 0.5;
        shrink += 1;
        if shrink > 60 {
            return Err(Error::NoInteriorPoint(
                "could not find a feasible starting tilt".into(),
            ));
        }
    }

    let mut f = objective(&theta);
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        let g = gradient(&theta)?;
        grad_norm = g.norm();
        if grad_norm <= 1e-10 {
            break;
        }
        let h = hessian(&theta)?;
        let dir = solve_spd(&h, &(-&g))?;
        let slope = g.dot(&dir);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            let cand = &theta + &dir * alpha;
            if feasible(&cand) {
                let fc = objective(&cand);
                if fc <= f + 1e-4 * alpha * slope {
                    theta = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // step size underflow: gradient is as converged as it gets
            break;
        }
    }
    if grad_norm > 1e-8 {
        return Err(Error::MaxIterations(format!(
            "European Newton stopped at gradient norm {grad_norm}"
        )));
    }

    let measure = TiltMeasure::dirac_at_maturity(horizon, theta.clone())?;
    let objective_value = 2.0 * f;
    Ok(TiltSolution {
        theta_bar: Some(theta.iter().copied().collect()),
        objective: objective_value,
        gradient_norm: grad_norm,
        iterations,
        measure,
        shooting_constant: None,
        psi_star: None,
    })
}

fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let mut ridge = 0.0;
    let scale = h.diagonal().amax().max(1e-300);
    for _ in 0..8 {
        let mut hh = h.clone();
        if ridge > 0.0 {
            for i in 0..h.nrows() {
                hh[(i, i)] += ridge;
            }
        }
        if let Some(chol) = nalgebra::linalg::Cholesky::new(hh) {
            return Ok(chol.solve(rhs));
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
    }
    Err(Error::Domain("Newton system not positive definite".into()))
}

/// State shared by the two Asian solvers: uniform grid of `m` cells on
/// `[0, T]` with cell densities `theta_j` and tails
/// `s_j = sum_{i >= j} theta_i * delta = theta([t_j, T])`.
struct AsianGrid {
    m: usize,
    delta: f64,
    horizon: f64,
    strike: f64,
}

impl AsianGrid {
    fn tails(&self, densities: &[f64]) -> Vec<f64> {
        let mut tails = vec![0.0; self.m];
        let mut acc = 0.0;
        for j in (0..self.m).rev() {
            acc += densities[j] * self.delta;
            tails[j] = acc;
        }
        tails
    }

    fn feasible(&self, model: &impl CgfModel, densities: &[f64]) -> bool {
        densities.iter().all(|&t| t < 0.0)
            && self
                .tails(densities)
                .iter()
                .all(|&s| model.domain_margin(&DVector::from_column_slice(&[s])).admissible())
    }

    /// Discretized primal objective
    /// `(1-I) ln(K/(1-I)) - sum theta_j ln(-T theta_j) delta + sum G(s_j) delta`.
    fn objective(&self, model: &impl CgfModel, densities: &[f64]) -> f64 {
        let mass: f64 = densities.iter().sum::<f64>() * self.delta;
        let one_minus_i = 1.0 - mass;
        let mut value = one_minus_i * (self.strike / one_minus_i).ln();
        for &t in densities {
            if t != 0.0 {
                value -= t * (-self.horizon * t).ln() * self.delta;
            }
        }
        for s in self.tails(densities) {
            let g = cgf1(model, s);
            if !g.is_finite() {
                return f64::INFINITY;
            }
            value += g * self.delta;
        }
        value
    }

    fn gradient(&self, model: &impl CgfModel, densities: &[f64]) -> Result<Vec<f64>> {
        let mass: f64 = densities.iter().sum::<f64>() * self.delta;
        let log_term = ((1.0 - mass) / self.strike).ln();
        let tails = self.tails(densities);
        let mut prefix = 0.0;
        let mut grad = vec![0.0; self.m];
        for j in 0..self.m {
            prefix += cgf1_grad(model, tails[j])? * self.delta;
            grad[j] = self.delta * (log_term - (-self.horizon * densities[j]).ln() + prefix);
        }
        Ok(grad)
    }

    fn hessian(&self, model: &impl CgfModel, densities: &[f64]) -> Result<DMatrix<f64>> {
        let mass: f64 = densities.iter().sum::<f64>() * self.delta;
        let tails = self.tails(densities);
        let mut prefix = vec![0.0; self.m];
        let mut acc = 0.0;
        for j in 0..self.m {
            acc += cgf1_hess(model, tails[j])?;
            prefix[j] = acc;
        }
        let d2 = self.delta * self.delta;
        let coupling = -d2 / (1.0 - mass);
        let mut h = DMatrix::zeros(self.m, self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                h[(i, j)] = coupling + self.delta * d2 * prefix[i.min(j)];
            }
            h[(i, i)] -= self.delta / densities[i];
        }
        Ok(h)
    }

    fn measure(&self, densities: &[f64]) -> Result<TiltMeasure> {
        let times: Vec<f64> = (1..=self.m).map(|k| k as f64 * self.delta).collect();
        let weights: Vec<DVector<f64>> = densities
            .iter()
            .map(|&t| DVector::from_column_slice(&[t * self.delta]))
            .collect();
        TiltMeasure::grid_atoms(times, weights)
    }

    /// `psi_i = psi(i*delta) = theta([T - i*delta, T]) = s_{m-i}`.
    fn psi(&self, densities: &[f64]) -> Vec<f64> {
        let tails = self.tails(densities);
        let mut psi = vec![0.0; self.m + 1];
        for i in 1..=self.m {
            psi[i] = tails[self.m - i];
        }
        psi
    }

    fn solution(
        &self,
        model: &impl CgfModel,
        densities: &[f64],
        gradient_norm: f64,
        iterations: usize,
        shooting_constant: f64,
    ) -> Result<TiltSolution> {
        let lengths = vec![self.delta; self.m];
        let conj = conjugate_asian(densities, &lengths, self.strike, self.horizon).value;
        let g_sum: f64 = self
            .tails(densities)
            .iter()
            .map(|&s| cgf1(model, s) * self.delta)
            .sum();
        Ok(TiltSolution {
            theta_bar: None,
            objective: 2.0 * (conj + g_sum),
            gradient_norm,
            iterations,
            measure: self.measure(densities)?,
            shooting_constant: Some(shooting_constant),
            psi_star: Some(self.psi(densities)),
        })
    }
}

fn check_asian_inputs(model: &impl CgfModel, strike: f64, maturity: f64, m: usize) -> Result<()> {
    if model.dim() != 1 {
        return Err(Error::InvalidInput("Asian solvers are single-asset".into()));
    }
    if !(strike > 0.0) || !(maturity > 0.0) {
        return Err(Error::InvalidInput("strike and maturity must be positive".into()));
    }
    if m < 2 {
        return Err(Error::InvalidInput("Asian grid needs at least 2 cells".into()));
    }
    Ok(())
}

/// Direct minimization of the discretized Asian dual objective over cell
/// densities `theta_j < 0` (damped Newton; the reparametrization to an
/// unconstrained problem is unnecessary because the integrand's own
/// `-theta ln(-theta)` term repels the iterates from zero and backtracking
/// keeps them inside the CGF domain).
///
/// This solver is the independent oracle for [`solve_asian_bvp`] and the
/// production fallback.
pub fn solve_asian_direct(
    model: &impl CgfModel,
    strike: f64,
    maturity: f64,
    m: usize,
) -> Result<TiltSolution> {
    check_asian_inputs(model, strike, maturity, m)?;
    let grid = AsianGrid {
        m,
        delta: maturity / m as f64,
        horizon: maturity,
        strike,
    };

    let mut densities = vec![-1.0; m];
    let mut shrink = 0;
    while !grid.feasible(model, &densities) {
        densities.iter_mut().for_each(|t| *t *= 0.5);
        shrink += 1;
        if shrink > 60 {
            return Err(Error::NoInteriorPoint("no feasible starting density".into()));
        }
    }

    let mut f = grid.objective(model, &densities);
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        let g = grid.gradient(model, &densities)?;
        let gvec = DVector::from_column_slice(&g);
        grad_norm = gvec.norm();
        if grad_norm <= 1e-11 {
            break;
        }
        let h = grid.hessian(model, &densities)?;
        let dir = solve_spd(&h, &(-&gvec))?;
        let slope = gvec.dot(&dir);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            let cand: Vec<f64> = densities
                .iter()
                .zip(dir.iter())
                .map(|(t, d)| t + alpha * d)
                .collect();
            if grid.feasible(model, &cand) {
                let fc = grid.objective(model, &cand);
                if fc <= f + 1e-4 * alpha * slope {
                    densities = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if grad_norm > 1e-8 {
        return Err(Error::MaxIterations(format!(
            "Asian direct Newton stopped at gradient norm {grad_norm}"
        )));
    }

    // first-integral constant implied by the last cell: C = -theta(T)
    let c = -densities[m - 1];
    grid.solution(model, &densities, grad_norm, iterations, c)
}

/// One pass of the shooting integration: starting from `psi(0) = 0` with
/// initial slope `psi'(0) = -C`, march the Euler-Lagrange system
///
/// ```text
/// psi_{i+1} = psi_i + q_i * delta,        q_{i+1} = q_i * exp(-delta * G'(psi_{i+1}))
/// ```
///
/// which is the one-step scheme for `psi' = q`, `q' = -G'(psi) q` (the
/// derivative of the first integral `psi' = -(G(psi) + C)`), and exactly the
/// stationarity recursion of the discretized objective. Returns the
/// trajectory, the cell slopes, and the terminal transversality residual
///
/// ```text
/// residual(C) = psi'(T) + ((1 - psi_T)/(K T)) * exp(delta * G'(psi_T)).
/// ```
///
/// `DomainExit` marks trajectories that leave the CGF domain.
fn march_adjoint(
    model: &impl CgfModel,
    c: f64,
    m: usize,
    delta: f64,
    strike: f64,
    maturity: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let grad = |s: f64| -> Result<f64> {
        cgf1_grad(model, s)
            .map_err(|_| Error::DomainExit(format!("psi = {s} left the CGF domain")))
    };
    let mut psi = Vec::with_capacity(m + 1);
    let mut slopes = Vec::with_capacity(m);
    psi.push(0.0);
    let mut q = -c;
    slopes.push(q);
    for i in 1..m {
        let next = psi[i - 1] + q * delta;
        if !next.is_finite() {
            return Err(Error::DomainExit("psi diverged".into()));
        }
        psi.push(next);
        q *= (-delta * grad(next)?).exp();
        slopes.push(q);
    }
    let psi_t = psi[m - 1] + q * delta;
    if !psi_t.is_finite() {
        return Err(Error::DomainExit("terminal psi diverged".into()));
    }
    psi.push(psi_t);
    let residual = q + ((1.0 - psi_t) / (strike * maturity)) * (delta * grad(psi_t)?).exp();
    Ok((residual, psi, slopes))
}

/// Shooting solver for the Asian Euler-Lagrange boundary value problem.
///
/// Shoots on the scalar `C = -psi'(0)` (the first-integral constant: along
/// the optimal trajectory `psi' = -(G(psi) + C)`), integrating the adjoint
/// system with the one-step scheme of [`march_adjoint`] and root-finding the
/// terminal transversality residual by geometric bracket expansion plus
/// bisection; a `DomainExit` during integration marks that `C` as an
/// overshoot. The one-step scheme is the exact stationarity recursion of the
/// discretized objective, so the returned objective must agree with
/// [`solve_asian_direct`] up to solver tolerances; that agreement is asserted
/// by the test suite, not assumed.
pub fn solve_asian_bvp(
    model: &impl CgfModel,
    strike: f64,
    maturity: f64,
    m: usize,
) -> Result<TiltSolution> {
    check_asian_inputs(model, strike, maturity, m)?;
    let delta = maturity / m as f64;
    let grid = AsianGrid {
        m,
        delta,
        horizon: maturity,
        strike,
    };

    let mut evals = 0;
    let mut eval = |c: f64| -> Result<(f64, Vec<f64>, Vec<f64>)> {
        evals += 1;
        march_adjoint(model, c, m, delta, strike, maturity)
    };

    // C = 0 gives psi ≡ 0 with residual exp(delta G'(0))/(K T) > 0.
    let (res_lo, _, _) = eval(0.0)?;
    if res_lo <= 0.0 {
        return Err(Error::BracketingFailure(format!(
            "residual at C = 0 should be positive, got {res_lo}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0f64.max(1.0 / (strike * maturity));
    let mut bracketed = false;
    for _ in 0..60 {
        match eval(hi) {
            Ok((r, _, _)) if r <= 0.0 => {
                bracketed = true;
                break;
            }
            Ok(_) => {
                lo = hi;
                hi *= 2.0;
            }
            // domain exit: the trajectory overshot, so the root is below
            Err(Error::DomainExit(_)) => {
                bracketed = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if !bracketed {
        return Err(Error::BracketingFailure(format!(
            "no sign change in shooting residual for C in [0, {hi}]"
        )));
    }

    let mut best: Option<(f64, f64, Vec<f64>, Vec<f64>)> = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match eval(mid) {
            Ok((r, psi, slopes)) => {
                if best.as_ref().map_or(true, |(rb, _, _, _)| r.abs() < rb.abs()) {
                    best = Some((r.abs(), mid, psi, slopes));
                }
                if r.abs() <= 1e-10 {
                    break;
                }
                if r > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Err(Error::DomainExit(_)) => hi = mid,
            Err(e) => return Err(e),
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let (residual, c_star, psi, slopes) =
        best.ok_or_else(|| Error::BracketingFailure("bisection never evaluated inside the bracket".into()))?;
    if residual > 1e-10 {
        return Err(Error::MaxIterations(format!(
            "shooting residual {residual} above tolerance at C = {c_star}"
        )));
    }

    // slope on the tau-cell i is the density on the physical cell m-1-i
    let densities: Vec<f64> = (0..m).map(|j| slopes[m - 1 - j]).collect();
    if densities.iter().any(|&t| t > 0.0) {
        return Err(Error::DomainExit("recovered density has positive cells".into()));
    }
    let mut solution = grid.solution(model, &densities, residual, evals, c_star)?;
    // report the integrated trajectory, not its reconstruction from tails
    solution.psi_star = Some(psi);
    Ok(solution)
}

/// Production Asian solver: shooting first, direct discretization as fallback.
pub fn solve_asian(
    model: &impl CgfModel,
    strike: f64,
    maturity: f64,
    m: usize,
) -> Result<TiltSolution> {
    solve_asian_bvp(model, strike, maturity, m).or_else(|_| solve_asian_direct(model, strike, maturity, m))
}
