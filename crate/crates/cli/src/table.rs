//! Benchmark tables: optimal tilts and variance-reduction ratios for the
//! built-in parameter sets, printed as CSV mirroring the table layout.

use clap::ValueEnum;

use levy_isamp_core::{solve_asian, solve_european, variance_ratio, PayoffSpec};

use crate::presets;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Table1,
    Table2,
    Table3,
}

const MATURITIES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 3.0];
const VANILLA_STRIKES: [f64; 6] = [0.5, 0.7, 0.9, 1.1, 1.3, 1.5];
const BASKET_STRIKES: [f64; 7] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5];
const ASIAN_GRID: usize = 100;

fn entry_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run(which: Which, n_samples: usize, seed: u64, workers: usize) -> Result<(), CliError> {
    match which {
        Which::Table1 => table1(n_samples, seed, workers),
        Which::Table2 => table2(n_samples, seed, workers),
        Which::Table3 => table3(n_samples, seed, workers),
    }
}

/// Single-asset European put: optimal tilt and ratio by maturity (K=1) and by
/// strike (T=1).
fn table1(n_samples: usize, seed: u64, workers: usize) -> Result<(), CliError> {
    let model = presets::single_asset();
    println!("block,param,theta_star,variance_ratio");
    let mut idx = 0;
    let mut row = |block: &str, param: f64, strike: f64, maturity: f64| -> Result<(), CliError> {
        let payoff = PayoffSpec::vanilla_put(strike, maturity).map_err(CliError::numeric)?;
        let sol = solve_european(&model, &payoff).map_err(CliError::numeric)?;
        let ratio = variance_ratio(
            &model,
            &payoff,
            &sol.measure,
            1,
            n_samples,
            entry_seed(seed, idx),
            workers,
        )
        .map_err(CliError::numeric)?;
        idx += 1;
        println!(
            "{block},{param},{:.4},{:.4}",
            sol.theta_bar.as_ref().unwrap()[0],
            ratio
        );
        Ok(())
    };
    for t in MATURITIES {
        row("maturity", t, 1.0, t)?;
    }
    for k in VANILLA_STRIKES {
        row("strike", k, k, 1.0)?;
    }
    Ok(())
}

/// Three-asset basket put: ratio by maturity (K=1) and by strike (T=1, T=3).
fn table2(n_samples: usize, seed: u64, workers: usize) -> Result<(), CliError> {
    let model = presets::basket_3d();
    println!("block,param,variance_ratio");
    let mut idx = 0;
    let mut row = |block: &str, param: f64, strike: f64, maturity: f64| -> Result<(), CliError> {
        let payoff = PayoffSpec::basket_put(strike, maturity, 3).map_err(CliError::numeric)?;
        let sol = solve_european(&model, &payoff).map_err(CliError::numeric)?;
        let ratio = variance_ratio(
            &model,
            &payoff,
            &sol.measure,
            1,
            n_samples,
            entry_seed(seed, idx),
            workers,
        )
        .map_err(CliError::numeric)?;
        idx += 1;
        println!("{block},{param},{ratio:.4}");
        Ok(())
    };
    for t in MATURITIES {
        row("maturity", t, 1.0, t)?;
    }
    for k in BASKET_STRIKES {
        row("strike_t1", k, k, 1.0)?;
    }
    for k in BASKET_STRIKES {
        row("strike_t3", k, k, 3.0)?;
    }
    Ok(())
}

/// Single-asset Asian put at T=1 on a 100-cell grid: ratio by strike.
fn table3(n_samples: usize, seed: u64, workers: usize) -> Result<(), CliError> {
    let model = presets::single_asset();
    println!("strike,variance_ratio");
    for (idx, k) in VANILLA_STRIKES.iter().enumerate() {
        let sol = solve_asian(&model, *k, 1.0, ASIAN_GRID).map_err(CliError::numeric)?;
        let payoff = PayoffSpec::asian_put(*k, 1.0, ASIAN_GRID).map_err(CliError::numeric)?;
        let ratio = variance_ratio(
            &model,
            &payoff,
            &sol.measure,
            ASIAN_GRID,
            n_samples,
            entry_seed(seed, idx as u64),
            workers,
        )
        .map_err(CliError::numeric)?;
        println!("{k},{ratio:.4}");
    }
    Ok(())
}
