//! JSON run configuration: model, payoff and Monte Carlo blocks.
//!
//! Unknown keys are hard errors so that typos never silently change a run.
//! The martingale drift is always derived from the model parameters; a `mu`
//! key in the model block is rejected like any other unknown key.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use levy_isamp_core::{PayoffSpec, VarianceGammaModel};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub payoff: PayoffConfig,
    #[serde(default)]
    pub mc: McConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lambda: f64,
    pub b: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffConfig {
    pub kind: PayoffKindConfig,
    pub strike: f64,
    pub maturity: f64,
    /// Asian only; defaults to daily sampling, `round(250 T)`.
    #[serde(default)]
    pub averaging_dates: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKindConfig {
    VanillaPut,
    BasketPut,
    AsianPut,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_samples: Option<usize>,
    pub grid_cells: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn build_model(&self) -> Result<VarianceGammaModel, CliError> {
        let n = self.model.b.len();
        if self.model.sigma.len() != n || self.model.sigma.iter().any(|row| row.len() != n) {
            return Err(CliError::Config(format!(
                "sigma must be a {n}x{n} matrix matching b"
            )));
        }
        let b = DVector::from_vec(self.model.b.clone());
        let sigma = DMatrix::from_fn(n, n, |i, j| self.model.sigma[i][j]);
        VarianceGammaModel::new(self.model.lambda, b, sigma)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn build_payoff(&self, model_dim: usize) -> Result<PayoffSpec, CliError> {
        let p = &self.payoff;
        let spec = match p.kind {
            PayoffKindConfig::VanillaPut => {
                if model_dim != 1 {
                    return Err(CliError::Config(
                        "vanilla_put requires a single-asset model".into(),
                    ));
                }
                PayoffSpec::vanilla_put(p.strike, p.maturity)
            }
            PayoffKindConfig::BasketPut => PayoffSpec::basket_put(p.strike, p.maturity, model_dim),
            PayoffKindConfig::AsianPut => {
                if model_dim != 1 {
                    return Err(CliError::Config(
                        "asian_put requires a single-asset model".into(),
                    ));
                }
                PayoffSpec::asian_put(p.strike, p.maturity, self.averaging_dates())
            }
        };
        spec.map_err(|e| CliError::Config(e.to_string()))
    }

    /// Daily sampling by default.
    pub fn averaging_dates(&self) -> usize {
        self.payoff
            .averaging_dates
            .unwrap_or(((250.0 * self.payoff.maturity).round() as usize).max(1))
    }

    /// Default grid: one cell for European contracts (the terminal increment
    /// is exact), the averaging grid for Asian ones.
    pub fn grid_cells(&self) -> usize {
        self.mc.grid_cells.unwrap_or(match self.payoff.kind {
            PayoffKindConfig::AsianPut => self.averaging_dates(),
            _ => 1,
        })
    }
}
