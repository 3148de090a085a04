use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::zn::average::{ap_average, ApMode};
use crate::zn::pseudo::{check_zn_pseudo, ZnPseudoParams, ZnPseudoReport};
use crate::zn::weight::ZnWeight;

#[derive(Debug, Clone)]
pub struct SzemerediReport<T> {
    pub k: usize,
    pub mean_f: T,
    /// `Λ_k(f)` by direct summation.
    pub lambda: T,
    /// `Λ_3(f)` by the convolution route, when `k = 3`.
    pub lambda_fft: Option<T>,
    pub positive: bool,
    /// `Λ_k(ν)`, the count inside the majorant itself.
    pub lambda_nu: T,
    /// `mean(f)^k`, the count of the constant function with the same mean.
    pub dense_model: T,
    pub pseudo: Option<ZnPseudoReport<T>>,
}

/// Checks `0 ≤ f ≤ ν` and `E f ≥ delta_mean`, optionally tests `ν` for
/// pseudorandomness, and reports `Λ_k(f)` and whether it is positive.
pub fn relative_szemeredi_demo<T: Scalar>(
    nu: &ZnWeight<T>,
    f: &ZnWeight<T>,
    k: usize,
    delta_mean: T,
    check: Option<&ZnPseudoParams<T>>,
) -> Result<SzemerediReport<T>> {
    if nu.n() != f.n() {
        return Err(Error::Shape(format!("ν lives on Z_{} but f on Z_{}", nu.n(), f.n())));
    }
    if let Some(x) = f.values().iter().zip(nu.values()).position(|(&a, &b)| a > b + T::eps()) {
        return Err(Error::Precondition(format!(
            "f({x}) = {} exceeds ν({x}) = {}",
            f.values()[x],
            nu.values()[x]
        )));
    }
    let mean_f = f.mean();
    if mean_f < delta_mean - T::eps() {
        return Err(Error::Precondition(format!("mean of f is {mean_f}, below the required {delta_mean}")));
    }
    if let Some(params) = check {
        if params.k != k {
            return Err(Error::Precondition(format!("check configured for k = {} but demo uses k = {k}", params.k)));
        }
    }
    let lambda = ap_average(f, k, ApMode::Direct)?;
    let lambda_fft = if k == 3 { Some(ap_average(f, 3, ApMode::Fft)?) } else { None };
    let pseudo = check.map(|params| check_zn_pseudo(nu, None, params)).transpose()?;
    Ok(SzemerediReport {
        k,
        mean_f,
        lambda,
        lambda_fft,
        positive: lambda > T::zero(),
        lambda_nu: ap_average(nu, k, ApMode::Direct)?,
        dense_model: mean_f.powi(k as i32),
        pseudo,
    })
}
