//! Exponents and closed-form constants shared by the regularity, pseudorandom
//! and counting modules.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Conjugate exponent `q` with `1/p + 1/q = 1`; `q = 1` when `p = ∞`.
pub fn conjugate<T: Scalar>(p: T) -> T {
    if p.is_infinite() {
        T::one()
    } else {
        p / (p - T::one())
    }
}

/// `p† = min{2, p}`.
pub fn p_dagger<T: Scalar>(p: T) -> T {
    p.min(T::lit(2.0))
}

/// `1/p`, zero at `p = ∞`.
pub fn recip<T: Scalar>(p: T) -> T {
    if p.is_infinite() {
        T::zero()
    } else {
        T::one() / p
    }
}

/// The regularity constant and integrability exponent together with the
/// quantities derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params<T> {
    pub c: T,
    pub p: T,
    pub q: T,
    pub p_dagger: T,
}

impl<T: Scalar> Params<T> {
    pub fn new(c: T, p: T) -> Result<Self> {
        if !(c >= T::zero()) || !c.is_finite() {
            return Err(Error::Precondition(format!("C = {} must be finite and ≥ 0", c.to_f64_lossy())));
        }
        if !(p > T::one()) {
            return Err(Error::InvalidExponent(p.to_f64_lossy()));
        }
        Ok(Self { c, p, q: conjugate(p), p_dagger: p_dagger(p) })
    }
}

/// `ℓ = min{2n : 2n ≥ 2q + (1 − 1/C) + 1/p}`.
pub fn ell_param(c: f64, p: f64) -> Result<usize> {
    if !(c >= 1.0) {
        return Err(Error::Precondition(format!("ℓ needs C ≥ 1, got {c}")));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let threshold = 2.0 * conjugate(p) + (1.0 - 1.0 / c) + recip(p);
    let n = ((threshold - 1e-12) / 2.0).ceil().max(1.0);
    Ok(2 * n as usize)
}

/// `x(C,p)`: `(4pq)^{−1}` for `p < ∞`, `1/2` for `p = ∞, C > 1`, `1` for `p = ∞, C = 1`.
pub fn x_exponent<T: Scalar>(c: T, p: T) -> T {
    if p.is_infinite() {
        if c > T::one() {
            T::lit(0.5)
        } else {
            T::one()
        }
    } else {
        T::one() / (T::lit(4.0) * p * conjugate(p))
    }
}

/// `e(C,p)` of the moment bound: `(4pq)^{−1}` for `p < ∞`, `1/2` for `p = ∞`.
pub fn moment_exponent<T: Scalar>(p: T) -> T {
    if p.is_infinite() {
        T::lit(0.5)
    } else {
        T::one() / (T::lit(4.0) * p * conjugate(p))
    }
}

/// `ζ(C,p,ε) = (C+1)^q (ε/6)^{1−q}`.
pub fn zeta<T: Scalar>(c: T, p: T, epsilon: T) -> T {
    let q = conjugate(p);
    (c + T::one()).powf(q) * (epsilon / T::lit(6.0)).powf(T::one() - q)
}

/// `η' = (C+1) η^{1/2^r}`.
pub fn eta_prime<T: Scalar>(c: T, eta: T, r: usize) -> T {
    (c + T::one()) * eta.powf(T::one() / T::lit(2f64.powi(r as i32)))
}

/// Ceiling that ignores relative rounding noise below `1e-12`, so that e.g.
/// `0.0625 / 0.01` lands on 25 rather than 26.
pub fn ceil_robust(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-12 * x.abs().max(1.0) {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

/// `N = ⌈4(p†−1)^{−1} σ² δ^{−2}⌉`, the refinement cap of one energy loop.
pub fn energy_steps(p: f64, sigma: f64, delta: f64) -> u64 {
    ceil_robust(4.0 / (p_dagger(p) - 1.0) * sigma * sigma / (delta * delta))
}

/// `L = ⌈C²(p†−1)^{−1} σ^{−2} n^r⌉`, the stage cap of the decomposition.
pub fn stage_count(c: f64, p: f64, sigma: f64, n: usize, r: usize) -> u64 {
    ceil_robust(c * c / (p_dagger(p) - 1.0) / (sigma * sigma) * (n as f64).powi(r as i32))
}

/// `ϑ = δ(12Cr²)^{−1}`.
pub fn vartheta<T: Scalar>(c: T, r: usize, delta: T) -> T {
    delta / (T::lit(12.0) * c * T::usize(r * r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ell_values() {
        assert_eq!(ell_param(1.0, f64::INFINITY).unwrap(), 2);
        assert_eq!(ell_param(2.0, f64::INFINITY).unwrap(), 4);
        assert_eq!(ell_param(2.0, 2.0).unwrap(), 6);
        assert!(ell_param(0.5, 2.0).is_err());
    }

    #[test]
    fn exponents() {
        assert_eq!(conjugate(f64::INFINITY), 1.0);
        assert_eq!(conjugate(2.0), 2.0);
        assert_eq!(p_dagger(f64::INFINITY), 2.0);
        assert_eq!(p_dagger(1.5), 1.5);
        assert_eq!(x_exponent(1.0, f64::INFINITY), 1.0);
        assert_eq!(x_exponent(3.0, f64::INFINITY), 0.5);
        assert!((x_exponent(1.0f64, 3.0) - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn counts() {
        assert_eq!(energy_steps(2.0, 0.25, 0.1), 25);
        assert_eq!(energy_steps(f64::INFINITY, 1.0, 0.5), 16);
        assert_eq!(stage_count(1.0, 2.0, 0.5, 3, 2), 36);
    }
}
