//! Built-in parameter sets used by `levy-isamp table`, mirrored by the JSON
//! files under `configs/`.

use nalgebra::{DMatrix, DVector};

use levy_isamp_core::VarianceGammaModel;

/// Single-asset model: lambda = 1, b = -0.2, sqrt(Sigma) = 0.2
/// (28% annualized volatility, skewness -1.77, excess kurtosis 2.25).
pub fn single_asset() -> VarianceGammaModel {
    VarianceGammaModel::new(
        1.0,
        DVector::from_vec(vec![-0.2]),
        DMatrix::from_vec(1, 1, vec![0.04]),
    )
    .expect("preset parameters are admissible")
}

/// Three-asset basket model: equal marginals, pairwise covariance 0.02.
pub fn basket_3d() -> VarianceGammaModel {
    VarianceGammaModel::new(
        1.0,
        DVector::from_element(3, -0.2),
        DMatrix::from_row_slice(
            3,
            3,
            &[0.04, 0.02, 0.02, 0.02, 0.04, 0.02, 0.02, 0.02, 0.04],
        ),
    )
    .expect("preset parameters are admissible")
}
