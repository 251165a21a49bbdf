use nalgebra::{DMatrix, DVector};

use super::model::{probability_matrix, Evaluation, VqcModel};
use super::QmlError;
use crate::featurize::FeatureVector;

/// Relative singular-value cutoff below which the unregularized normal
/// equations are treated as singular.
const RANK_TOL: f64 = 1e-12;

/// Exact minimizer in λ of `(1/2N)‖y − Pλ‖² + α‖λ‖²`, from
/// `(PᵀP/N + 2αI) λ = Pᵀy/N`.
pub fn ridge_solve(p: &DMatrix<f64>, y: &[f64], alpha: f64) -> Result<Vec<f64>, QmlError> {
    if p.nrows() == 0 || p.nrows() != y.len() {
        return Err(QmlError::InvalidArgument(format!(
            "{} probability rows for {} labels",
            p.nrows(),
            y.len()
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(QmlError::InvalidArgument(format!("regularization weight {alpha}")));
    }
    let n = p.nrows() as f64;
    let k = p.ncols();
    let y = DVector::from_column_slice(y);
    let gram = p.transpose() * p / n + DMatrix::identity(k, k) * (2.0 * alpha);
    let rhs = p.transpose() * y / n;

    if alpha == 0.0 {
        let svd = gram.clone().svd(false, false);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        if max == 0.0 || min <= RANK_TOL * max {
            return Err(QmlError::Solver(format!(
                "normal equations are singular (σ_min/σ_max = {:e}) and α = 0",
                if max == 0.0 { 0.0 } else { min / max }
            )));
        }
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| QmlError::Solver("normal matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// [`ridge_solve`] on the model's outcome probabilities at its current θ.
pub fn ridge_lambda(
    model: &VqcModel,
    data: &[FeatureVector],
    alpha: f64,
    eval: Evaluation,
) -> Result<Vec<f64>, QmlError> {
    let p = probability_matrix(model, data, eval)?;
    let y: Vec<f64> = data.iter().map(|v| v.label.value()).collect();
    ridge_solve(&p, &y, alpha)
}
