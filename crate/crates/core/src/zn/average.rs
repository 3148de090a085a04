use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::{tree_sum, Scalar};
use crate::zn::weight::ZnWeight;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApMode {
    Direct,
    /// Convolution route, `k = 3` only.
    Fft,
}

/// `Λ_k(f) = E[∏_{j=1}^k f(a + jd) | a, d ∈ Z_n]`.
pub fn ap_average<T: Scalar>(f: &ZnWeight<T>, k: usize, mode: ApMode) -> Result<T> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    match mode {
        ApMode::Direct => Ok(direct(f, k)),
        ApMode::Fft if k == 3 => Ok(T::lit(fft3(f))),
        ApMode::Fft => Err(Error::Unsupported(format!("the convolution route needs k = 3, got {k}"))),
    }
}

fn direct<T: Scalar>(f: &ZnWeight<T>, k: usize) -> T {
    let n = f.n() as u64;
    let rows: Vec<T> = (0..n)
        .into_par_iter()
        .map(|a| {
            let terms: Vec<T> = (0..n).map(|d| (1..=k as u64).fold(T::one(), |acc, j| acc * f.at(a + j * d % n))).collect();
            tree_sum(&terms)
        })
        .collect();
    tree_sum(&rows) / T::usize(f.n() * f.n())
}

/// With `x = a+d`, `y = a+2d` the sum is `Σ_y f(y) (f∗f)(2y)`.
fn fft3<T: Scalar>(f: &ZnWeight<T>) -> f64 {
    let n = f.n();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = f.values().iter().map(|v| Complex::new(v.to_f64_lossy(), 0.0)).collect();
    forward.process(&mut buf);
    for z in buf.iter_mut() {
        *z = *z * *z;
    }
    inverse.process(&mut buf);
    let conv: Vec<f64> = buf.iter().map(|z| z.re / n as f64).collect();
    let terms: Vec<f64> = (0..n).map(|y| f.values()[y].to_f64_lossy() * conv[(2 * y) % n]).collect();
    tree_sum(&terms) / (n * n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let f = ZnWeight::<f64>::constant(9, 0.5).unwrap();
        assert_eq!(ap_average(&f, 4, ApMode::Direct).unwrap(), 0.0625);
        assert!((ap_average(&f, 3, ApMode::Fft).unwrap() - 0.125).abs() < 1e-15);
        assert!(ap_average(&f, 4, ApMode::Fft).is_err());
    }

    #[test]
    fn indicator_of_zero() {
        let mut v = vec![0.0; 5];
        v[0] = 1.0;
        let f = ZnWeight::<f64>::new(v).unwrap();
        assert_eq!(ap_average(&f, 3, ApMode::Direct).unwrap(), 1.0 / 25.0);
        assert!((ap_average(&f, 3, ApMode::Fft).unwrap() - 0.04).abs() < 1e-15);
    }
}
