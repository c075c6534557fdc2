//! Seeded, reproducibly parallel Monte Carlo engine for multivariate variance
//! gamma paths under base and Esscher-tilted measures.
//!
//! Paths are split into fixed-size batches. Each batch owns a counter-based
//! ChaCha substream keyed by `(seed, batch_index)` and is consumed strictly
//! sequentially inside the batch, so results are a pure function of
//! `(inputs, seed)` no matter how rayon schedules the batches. Batch
//! statistics are reduced in batch order, which makes every estimate
//! bit-identical across worker counts.
//!
//! On a cell `(t_{k-1}, t_k]` the tilted increment law comes from
//! `esscher_tilt(model, eta_k)` where `eta_k` is the measure tail on that
//! cell: draw `dG ~ Gamma(lambda*dt, 1/lambda)` (the subordinator law is
//! unchanged by the tilt since `lambda~ = lambda`), then
//! `dX = mu*dt + b~*dG + chol(Sigma~) * sqrt(dG) * Z`.

use nalgebra::DVector;
use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_models::{CgfModel, VarianceGammaModel};
use crate::measures::TiltMeasure;
use crate::path::SamplePath;
use crate::payoffs::{PayoffKind, PayoffSpec};

/// Paths per RNG substream. Fixed so that the batch decomposition, and hence
/// every drawn number, is independent of the worker count.
const BATCH_SIZE: usize = 4096;

/// A batch of simulated log-price paths on a uniform grid.
#[derive(Debug, Clone)]
pub struct PathBatch {
    /// Grid times `0 = t_0 < ... < t_m = T`.
    pub grid: Vec<f64>,
    pub dim: usize,
    pub n_paths: usize,
    /// Row-major `n_paths x (m+1) x dim` log prices, `X_0 = 0`.
    pub values: Vec<f64>,
    pub measure_used: TiltMeasure,
}

impl PathBatch {
    pub fn path(&self, i: usize) -> SamplePath<'_> {
        let stride = self.grid.len() * self.dim;
        SamplePath::new(&self.grid, &self.values[i * stride..(i + 1) * stride], self.dim).unwrap()
    }
}

/// Monte Carlo estimate with sampling diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub std_error: f64,
    pub sample_variance: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Wall-clock time; excluded from serialization so that replaying a seed
    /// reproduces the emitted report byte for byte.
    #[serde(skip_serializing, default)]
    pub elapsed_seconds: f64,
    pub measure_used: TiltMeasure,
}

/// One point of a variance sweep over Dirac tilts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: f64,
    /// Importance-sampling sample variance at this tilt.
    pub variance: f64,
    /// Standard error of the variance estimate (fourth-moment formula).
    pub std_error: f64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("failed to build worker pool: {e}")))
}

/// Per-cell simulation parameters under the tilted measure.
struct CellSim {
    mu_dt: Vec<f64>,
    b_tilde: Vec<f64>,
    /// Lower Cholesky factor of `Sigma~`, row-major.
    chol: Vec<f64>,
    gamma: Gamma<f64>,
}

struct Simulator {
    grid: Vec<f64>,
    dim: usize,
    cells: Vec<CellSim>,
}

impl Simulator {
    fn new(model: &VarianceGammaModel, measure: &TiltMeasure, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("grid needs at least one cell".into()));
        }
        if measure.dim() != model.dim() {
            return Err(Error::InvalidInput(format!(
                "measure dimension {} does not match model dimension {}",
                measure.dim(),
                model.dim()
            )));
        }
        let horizon = measure.horizon();
        let grid: Vec<f64> = (0..=m).map(|k| horizon * k as f64 / m as f64).collect();
        let tol = 1e-9 * horizon.max(1.0);
        // every atom must sit on a grid point, otherwise the likelihood ratio
        // cannot be evaluated exactly
        for (t, _) in measure.atoms() {
            let k = (t / horizon * m as f64).round() as usize;
            if k > m || (grid[k.min(m)] - t).abs() > tol {
                return Err(Error::GridMismatch(format!(
                    "atom time {t} is not a grid point of the {m}-cell grid"
                )));
            }
        }
        let segments = measure.segments();
        let dim = model.dim();
        let mut cells = Vec::with_capacity(m);
        let mut seg_idx = 0;
        for k in 1..=m {
            let mid = 0.5 * (grid[k - 1] + grid[k]);
            while seg_idx + 1 < segments.len() && segments[seg_idx].end < mid {
                seg_idx += 1;
            }
            let tail = if mid <= segments[seg_idx].end {
                segments[seg_idx].tail.clone()
            } else {
                // past the last atom: zero tail
                DVector::zeros(dim)
            };
            let tilted = model.esscher_tilt(&tail)?;
            let dt = grid[k] - grid[k - 1];
            let shape = model.lambda() * dt;
            let scale = 1.0 / model.lambda();
            let gamma = Gamma::new(shape, scale)
                .map_err(|e| Error::InvalidInput(format!("gamma increment distribution: {e}")))?;
            let chol = tilted.chol_lower();
            let mut chol_flat = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..=i {
                    chol_flat[i * dim + j] = chol[(i, j)];
                }
            }
            cells.push(CellSim {
                mu_dt: tilted.mu().iter().map(|&v| v * dt).collect(),
                b_tilde: tilted.b().iter().copied().collect(),
                chol: chol_flat,
                gamma,
            });
        }
        Ok(Self { grid, dim, cells })
    }

    /// Fills `out` (length `(m+1)*dim`) with one path, consuming `rng`
    /// in a fixed order: gamma increment first, then the normal components.
    fn sample_path(&self, rng: &mut ChaCha8Rng, z: &mut [f64], out: &mut [f64]) {
        let n = self.dim;
        out[..n].fill(0.0);
        for (k, cell) in self.cells.iter().enumerate() {
            let dg: f64 = cell.gamma.sample(rng);
            let sqrt_dg = dg.sqrt();
            for zi in z.iter_mut().take(n) {
                *zi = StandardNormal.sample(rng);
            }
            let (prev, next) = out.split_at_mut((k + 1) * n);
            let prev = &prev[k * n..];
            for i in 0..n {
                let mut diff = 0.0;
                for j in 0..=i {
                    diff += cell.chol[i * n + j] * z[j];
                }
                next[i] = prev[i] + cell.mu_dt[i] + cell.b_tilde[i] * dg + sqrt_dg * diff;
            }
        }
    }
}

/// Log likelihood ratio evaluator with atom grid indices resolved up front.
struct LrEval {
    log_mgf: f64,
    /// `(grid index, weight)` per atom.
    pairs: Vec<(usize, Vec<f64>)>,
    dim: usize,
}

impl LrEval {
    fn new(model: &VarianceGammaModel, measure: &TiltMeasure, grid: &[f64]) -> Result<Self> {
        let log_mgf = measure.log_mgf_path(model);
        if !log_mgf.is_finite() {
            return Err(Error::Domain("measure tail leaves the CGF domain".into()));
        }
        let horizon = *grid.last().unwrap();
        let m = grid.len() - 1;
        let tol = 1e-9 * horizon.max(1.0);
        let mut pairs = Vec::new();
        for (t, w) in measure.atoms() {
            let k = (t / horizon * m as f64).round() as usize;
            if k > m || (grid[k] - t).abs() > tol {
                return Err(Error::GridMismatch(format!("atom time {t} not on grid")));
            }
            pairs.push((k, w.iter().copied().collect()));
        }
        Ok(Self {
            log_mgf,
            pairs,
            dim: measure.dim(),
        })
    }

    fn llr(&self, path_values: &[f64]) -> f64 {
        let mut pairing = 0.0;
        for (k, w) in &self.pairs {
            let x = &path_values[k * self.dim..(k + 1) * self.dim];
            for i in 0..self.dim {
                pairing += w[i] * x[i];
            }
        }
        self.log_mgf - pairing
    }
}

/// Payoff evaluator with grid indices resolved up front.
struct PayoffEval {
    kind: PayoffKind,
    strike: f64,
    spot: Vec<f64>,
    indices: Vec<usize>,
    dim: usize,
}

impl PayoffEval {
    fn new(payoff: &PayoffSpec, grid: &[f64]) -> Result<Self> {
        let horizon = *grid.last().unwrap();
        let m = grid.len() - 1;
        let tol = 1e-9 * horizon.max(1.0);
        let mut indices = Vec::new();
        for t in payoff.required_times() {
            let k = (t / horizon * m as f64).round() as usize;
            if k > m || (grid[k] - t).abs() > tol {
                return Err(Error::GridMismatch(format!(
                    "payoff date {t} is not on the {m}-cell grid"
                )));
            }
            indices.push(k);
        }
        Ok(Self {
            kind: payoff.kind.clone(),
            strike: payoff.strike,
            spot: payoff.spot.clone(),
            indices,
            dim: payoff.dim(),
        })
    }

    fn value(&self, path_values: &[f64]) -> f64 {
        match self.kind {
            PayoffKind::VanillaPut | PayoffKind::BasketPut => {
                let k = self.indices[0];
                let x = &path_values[k * self.dim..(k + 1) * self.dim];
                let basket: f64 = (0..self.dim).map(|i| self.spot[i] * x[i].exp()).sum();
                (self.strike - basket).max(0.0)
            }
            PayoffKind::AsianPut { .. } => {
                let mut avg = 0.0;
                for &k in &self.indices {
                    avg += self.spot[0] * path_values[k * self.dim].exp();
                }
                avg /= self.indices.len() as f64;
                (self.strike - avg).max(0.0)
            }
        }
    }
}

/// Raw power sums of the per-path statistic, combined in fixed batch order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl Moments {
    fn push(&mut self, y: f64) {
        self.n += 1;
        let y2 = y * y;
        self.s1 += y;
        self.s2 += y2;
        self.s3 += y2 * y;
        self.s4 += y2 * y2;
    }

    fn merge(mut self, other: &Moments) -> Moments {
        self.n += other.n;
        self.s1 += other.s1;
        self.s2 += other.s2;
        self.s3 += other.s3;
        self.s4 += other.s4;
        self
    }

    fn mean(&self) -> f64 {
        self.s1 / self.n as f64
    }

    fn sample_variance(&self) -> f64 {
        let n = self.n as f64;
        ((self.s2 - self.s1 * self.s1 / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the sample variance via the fourth central moment.
    fn variance_std_error(&self) -> f64 {
        let n = self.n as f64;
        let mean = self.mean();
        let m2 = (self.s2 / n - mean * mean).max(0.0);
        let m4 = self.s4 / n - 4.0 * mean * self.s3 / n + 6.0 * mean * mean * self.s2 / n
            - 3.0 * mean.powi(4);
        let var_of_var = (m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n;
        var_of_var.max(0.0).sqrt()
    }
}

fn run_weighted(
    model: &VarianceGammaModel,
    payoff: &PayoffSpec,
    measure: &TiltMeasure,
    m: usize,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Moments> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be positive".into()));
    }
    if (measure.horizon() - payoff.maturity).abs() > 1e-9 * payoff.maturity.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "measure horizon {} does not match payoff maturity {}",
            measure.horizon(),
            payoff.maturity
        )));
    }
    if payoff.dim() != model.dim() {
        return Err(Error::InvalidInput("payoff and model dimensions differ".into()));
    }
    let sim = Simulator::new(model, measure, m)?;
    let lr = LrEval::new(model, measure, &sim.grid)?;
    let pay = PayoffEval::new(payoff, &sim.grid)?;
    let n_batches = n_samples.div_ceil(BATCH_SIZE);
    let pool = thread_pool(workers)?;
    let partials: Vec<Moments> = pool.install(|| {
        (0..n_batches)
            .into_par_iter()
            .map(|bi| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(bi as u64);
                let count = BATCH_SIZE.min(n_samples - bi * BATCH_SIZE);
                let mut scratch = vec![0.0; sim.grid.len() * sim.dim];
                let mut z = vec![0.0; sim.dim];
                let mut acc = Moments::default();
                for _ in 0..count {
                    sim.sample_path(&mut rng, &mut z, &mut scratch);
                    let weight = lr.llr(&scratch).exp();
                    acc.push(pay.value(&scratch) * weight);
                }
                acc
            })
            .collect()
    });
    Ok(partials.iter().fold(Moments::default(), Moments::merge))
}

fn report_from(moments: Moments, seed: u64, elapsed: f64, measure: TiltMeasure) -> EstimateReport {
    let variance = moments.sample_variance();
    EstimateReport {
        estimate: moments.mean(),
        std_error: (variance / moments.n as f64).sqrt(),
        sample_variance: variance,
        n_samples: moments.n as usize,
        seed,
        elapsed_seconds: elapsed,
        measure_used: measure,
    }
}

/// Simulates `n_paths` paths under `P^theta` on a uniform `m`-cell grid and
/// materializes them. The zero measure reproduces the base model law.
pub fn simulate_batch(
    model: &VarianceGammaModel,
    measure: &TiltMeasure,
    m: usize,
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<PathBatch> {
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be positive".into()));
    }
    let sim = Simulator::new(model, measure, m)?;
    let stride = sim.grid.len() * sim.dim;
    let mut values = vec![0.0; n_paths * stride];
    let pool = thread_pool(workers)?;
    pool.install(|| {
        values
            .par_chunks_mut(BATCH_SIZE * stride)
            .enumerate()
            .for_each(|(bi, chunk)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(bi as u64);
                let mut z = vec![0.0; sim.dim];
                for path in chunk.chunks_mut(stride) {
                    sim.sample_path(&mut rng, &mut z, path);
                }
            });
    });
    Ok(PathBatch {
        grid: sim.grid,
        dim: sim.dim,
        n_paths,
        values,
        measure_used: measure.clone(),
    })
}

/// Plain Monte Carlo estimator (zero tilt).
pub fn price_standard(
    model: &VarianceGammaModel,
    payoff: &PayoffSpec,
    m: usize,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<EstimateReport> {
    let zero = TiltMeasure::zero(payoff.maturity, model.dim());
    price_importance(model, payoff, &zero, m, n_samples, seed, workers)
}

/// Importance-sampling estimator: simulate under `P^theta`, weight each payoff
/// by `exp(log dP/dP^theta)`. The reported variance is the sample variance of
/// the weighted payoff under `P^theta`. At the zero measure the weight is
/// exactly `1.0`, so the report is bit-identical to `price_standard`.
pub fn price_importance(
    model: &VarianceGammaModel,
    payoff: &PayoffSpec,
    measure: &TiltMeasure,
    m: usize,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<EstimateReport> {
    let start = std::time::Instant::now();
    let moments = run_weighted(model, payoff, measure, m, n_samples, seed, workers)?;
    Ok(report_from(
        moments,
        seed,
        start.elapsed().as_secs_f64(),
        measure.clone(),
    ))
}

/// Variance-reduction ratio `Var_standard / Var_importance` at equal sample
/// counts, with independent seeds derived from `seed`.
pub fn variance_ratio(
    model: &VarianceGammaModel,
    payoff: &PayoffSpec,
    measure: &TiltMeasure,
    m: usize,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<f64> {
    let mut state = seed;
    let seed_std = splitmix64(&mut state);
    let seed_is = splitmix64(&mut state);
    let standard = price_standard(model, payoff, m, n_samples, seed_std, workers)?;
    let importance = price_importance(model, payoff, measure, m, n_samples, seed_is, workers)?;
    if importance.sample_variance == 0.0 && importance.estimate != 0.0 {
        return Err(Error::DegenerateVariance(format!(
            "importance variance is zero with estimate {}; n_samples too small",
            importance.estimate
        )));
    }
    Ok(standard.sample_variance / importance.sample_variance)
}

/// Importance-sampling variance as a function of a scalar Dirac tilt
/// (single-asset models only). One derived seed per grid point.
pub fn sweep_theta(
    model: &VarianceGammaModel,
    payoff: &PayoffSpec,
    theta_grid: &[f64],
    m: usize,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    if model.dim() != 1 {
        return Err(Error::InvalidInput("theta sweep requires a single-asset model".into()));
    }
    let mut state = seed;
    let mut out = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        let measure = TiltMeasure::dirac_at_maturity(payoff.maturity, DVector::from_vec(vec![theta]))?;
        if !measure.admissible_for(model) {
            return Err(Error::Domain(format!("sweep tilt {theta} is out of the CGF domain")));
        }
        let point_seed = splitmix64(&mut state);
        let moments = run_weighted(model, payoff, &measure, m, n_samples, point_seed, workers)?;
        out.push(SweepPoint {
            theta,
            variance: moments.sample_variance(),
            std_error: moments.variance_std_error(),
        });
    }
    Ok(out)
}

/// Sample mean and standard error of the likelihood ratio `dP/dP^theta` under
/// `P^theta`. Diagnostic used by the unbiasedness tests: the mean must sit
/// within sampling error of 1.
pub fn likelihood_ratio_mean(
    model: &VarianceGammaModel,
    measure: &TiltMeasure,
    m: usize,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<(f64, f64)> {
    let sim = Simulator::new(model, measure, m)?;
    let lr = LrEval::new(model, measure, &sim.grid)?;
    let n_batches = n_samples.div_ceil(BATCH_SIZE);
    let pool = thread_pool(workers)?;
    let partials: Vec<Moments> = pool.install(|| {
        (0..n_batches)
            .into_par_iter()
            .map(|bi| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(bi as u64);
                let count = BATCH_SIZE.min(n_samples - bi * BATCH_SIZE);
                let mut scratch = vec![0.0; sim.grid.len() * sim.dim];
                let mut z = vec![0.0; sim.dim];
                let mut acc = Moments::default();
                for _ in 0..count {
                    sim.sample_path(&mut rng, &mut z, &mut scratch);
                    acc.push(lr.llr(&scratch).exp());
                }
                acc
            })
            .collect()
    });
    let total = partials.iter().fold(Moments::default(), Moments::merge);
    let mean = total.mean();
    let se = (total.sample_variance() / total.n as f64).sqrt();
    Ok((mean, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn single_asset() -> VarianceGammaModel {
        VarianceGammaModel::new(1.0, DVector::from_vec(vec![-0.2]), DMatrix::from_vec(1, 1, vec![0.04]))
            .unwrap()
    }

    fn v1(x: f64) -> DVector<f64> {
        DVector::from_vec(vec![x])
    }

    #[test]
    fn base_terminal_exponential_is_martingale() {
        let model = single_asset();
        let zero = TiltMeasure::zero(1.0, 1);
        let batch = simulate_batch(&model, &zero, 1, 200_000, 13, 0).unwrap();
        let mut acc = Moments::default();
        for i in 0..batch.n_paths {
            acc.push(batch.path(i).at(1)[0].exp());
        }
        let mean = acc.mean();
        let se = (acc.sample_variance() / acc.n as f64).sqrt();
        assert!(
            (mean - 1.0).abs() <= 4.0 * se,
            "E[e^X_T] = {mean} +- {se}"
        );
    }

    #[test]
    fn paths_start_at_zero_and_replay_bitwise() {
        let model = single_asset();
        let zero = TiltMeasure::zero(1.0, 1);
        let a = simulate_batch(&model, &zero, 8, 10_000, 99, 2).unwrap();
        let b = simulate_batch(&model, &zero, 8, 10_000, 99, 2).unwrap();
        assert_eq!(a.values, b.values);
        for i in (0..a.n_paths).step_by(997) {
            assert_eq!(a.path(i).at(0)[0], 0.0);
        }
    }

    #[test]
    fn negative_tilt_shifts_terminal_mean_down() {
        let model = single_asset();
        let zero = TiltMeasure::zero(1.0, 1);
        let tilt = TiltMeasure::dirac_at_maturity(1.0, v1(-2.06)).unwrap();
        let base = simulate_batch(&model, &zero, 1, 100_000, 7, 0).unwrap();
        let tilted = simulate_batch(&model, &tilt, 1, 100_000, 7, 0).unwrap();
        let mean = |b: &PathBatch| -> f64 {
            (0..b.n_paths).map(|i| b.path(i).at(1)[0]).sum::<f64>() / b.n_paths as f64
        };
        assert!(mean(&tilted) < mean(&base));
    }

    #[test]
    fn zero_tilt_is_bitwise_identical_to_standard() {
        let model = single_asset();
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let zero = TiltMeasure::zero(1.0, 1);
        let std_report = price_standard(&model, &payoff, 4, 50_000, 17, 0).unwrap();
        let is_report = price_importance(&model, &payoff, &zero, 4, 50_000, 17, 0).unwrap();
        assert_eq!(std_report.estimate.to_bits(), is_report.estimate.to_bits());
        assert_eq!(
            std_report.sample_variance.to_bits(),
            is_report.sample_variance.to_bits()
        );
        assert_eq!(std_report.std_error.to_bits(), is_report.std_error.to_bits());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let model = single_asset();
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let tilt = TiltMeasure::dirac_at_maturity(1.0, v1(-2.06)).unwrap();
        let one = price_importance(&model, &payoff, &tilt, 4, 30_000, 23, 1).unwrap();
        let four = price_importance(&model, &payoff, &tilt, 4, 30_000, 23, 4).unwrap();
        assert_eq!(one.estimate.to_bits(), four.estimate.to_bits());
        assert_eq!(one.sample_variance.to_bits(), four.sample_variance.to_bits());
    }

    #[test]
    fn seed_replay_reproduces_report() {
        let model = single_asset();
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let a = price_standard(&model, &payoff, 1, 20_000, 5, 0).unwrap();
        let b = price_standard(&model, &payoff, 1, 20_000, 5, 0).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.sample_variance, b.sample_variance);
        assert_eq!(a.std_error, (a.sample_variance / a.n_samples as f64).sqrt());
    }

    #[test]
    fn importance_and_standard_estimates_agree() {
        let model = single_asset();
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let tilt = TiltMeasure::dirac_at_maturity(1.0, v1(-2.06)).unwrap();
        let std_report = price_standard(&model, &payoff, 1, 400_000, 31, 0).unwrap();
        let is_report = price_importance(&model, &payoff, &tilt, 1, 100_000, 37, 0).unwrap();
        let tol = 4.0 * (std_report.std_error.powi(2) + is_report.std_error.powi(2)).sqrt();
        assert!(
            (std_report.estimate - is_report.estimate).abs() <= tol,
            "standard {} vs importance {} (tol {tol})",
            std_report.estimate,
            is_report.estimate
        );
    }

    #[test]
    fn variance_ratio_at_zero_tilt_is_one() {
        let model = single_asset();
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let zero = TiltMeasure::zero(1.0, 1);
        let ratio = variance_ratio(&model, &payoff, &zero, 1, 100_000, 41, 0).unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "ratio = {ratio}");
    }

    #[test]
    fn sweep_single_point_matches_standard_variance() {
        let model = single_asset();
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let points = sweep_theta(&model, &payoff, &[0.0], 1, 50_000, 3, 0).unwrap();
        assert_eq!(points.len(), 1);
        // theta = 0 is the standard estimator: same variance magnitude
        let std_report = price_standard(&model, &payoff, 1, 50_000, 3, 0).unwrap();
        let rel = (points[0].variance - std_report.sample_variance).abs() / std_report.sample_variance;
        assert!(rel < 0.05, "rel diff {rel}");
    }

    #[test]
    fn out_of_domain_tilt_is_domain_error() {
        let model = single_asset();
        let payoff = PayoffSpec::vanilla_put(1.0, 1.0).unwrap();
        let bad = TiltMeasure::dirac_at_maturity(1.0, v1(-8.0)).unwrap();
        assert!(price_importance(&model, &payoff, &bad, 1, 1000, 1, 0).is_err());
    }

    #[test]
    fn engine_llr_matches_measures_module() {
        let model = single_asset();
        let measure = TiltMeasure::grid_atoms(
            vec![0.25, 0.5, 0.75, 1.0],
            vec![v1(-0.5), v1(-0.4), v1(-0.3), v1(-0.2)],
        )
        .unwrap();
        let batch = simulate_batch(&model, &measure, 4, 64, 2, 0).unwrap();
        let lr = LrEval::new(&model, &measure, &batch.grid).unwrap();
        for i in 0..batch.n_paths {
            let stride = batch.grid.len();
            let direct = lr.llr(&batch.values[i * stride..(i + 1) * stride]);
            let reference = measure
                .log_likelihood_ratio(&model, &batch.path(i))
                .unwrap();
            assert!((direct - reference).abs() <= 1e-12);
        }
    }
}
