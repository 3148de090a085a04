use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A nonnegative function on `Z_n`, stored as its `n` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ZnWeight<T> {
    values: Vec<T>,
}

impl<T: Scalar> ZnWeight<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Precondition(format!("modulus {} must be at least 2", values.len())));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(index) = values.iter().position(|&v| v < T::zero()) {
            return Err(Error::Negative { index, value: values[index].to_f64_lossy() });
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, c: T) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value at a residue, reduced mod `n`.
    pub fn at(&self, x: u64) -> T {
        self.values[(x % self.values.len() as u64) as usize]
    }

    /// `E[f(x) | x ∈ Z_n]`.
    pub fn mean(&self) -> T {
        crate::scalar::tree_sum(&self.values) / T::usize(self.n())
    }

    /// `x ↦ f(x + t)`.
    pub fn shift(&self, t: u64) -> Self {
        let n = self.n() as u64;
        Self { values: (0..n).map(|x| self.at(x + t % n)).collect() }
    }

    /// `x ↦ f(u·x)`.
    pub fn dilate(&self, u: u64) -> Self {
        let n = self.n() as u64;
        Self { values: (0..n).map(|x| self.at((x * (u % n)) % n)).collect() }
    }

    /// Pointwise product with a mask.
    pub fn restrict(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.n() {
            return Err(Error::Shape(format!("mask of length {} on Z_{}", mask.len(), self.n())));
        }
        Ok(Self { values: self.values.iter().zip(mask).map(|(&v, &m)| if m { v } else { T::zero() }).collect() })
    }
}

/// How [`gen_majorant`] builds `ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MajorantKind {
    /// `ν = 1_S / density` for a random `S`.
    Set,
    /// The set majorant plus nonnegative noise `φ` with `‖φ‖_{L_p} = noise`.
    Perturbed { noise: f64, p: f64 },
}

/// A seeded random majorant on `Z_n`; each residue joins `S` independently
/// with probability `density`.
pub fn gen_majorant<T: Scalar>(n: usize, density: f64, kind: MajorantKind, seed: u64) -> Result<ZnWeight<T>> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Precondition(format!("density {density} must lie in (0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> =
        (0..n).map(|_| if density >= 1.0 || rng.gen_bool(density) { 1.0 / density } else { 0.0 }).collect();
    if let MajorantKind::Perturbed { noise, p } = kind {
        if !(noise >= 0.0) || !(p >= 1.0) {
            return Err(Error::Precondition(format!("noise {noise} must be ≥ 0 and p = {p} ≥ 1")));
        }
        let phi: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let norm = if p.is_infinite() {
            phi.iter().copied().fold(0.0, f64::max)
        } else {
            (phi.iter().map(|v| v.powf(p)).sum::<f64>() / n as f64).powf(1.0 / p)
        };
        if norm > 0.0 {
            for (v, f) in values.iter_mut().zip(&phi) {
                *v += f * noise / norm;
            }
        }
    }
    ZnWeight::new(values.into_iter().map(T::lit).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_density_is_one() {
        let nu: ZnWeight<f64> = gen_majorant(17, 1.0, MajorantKind::Set, 4).unwrap();
        assert!(nu.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn seeded() {
        let a: ZnWeight<f64> = gen_majorant(50, 0.3, MajorantKind::Set, 9).unwrap();
        let b: ZnWeight<f64> = gen_majorant(50, 0.3, MajorantKind::Set, 9).unwrap();
        assert_eq!(a, b);
        let c: ZnWeight<f64> = gen_majorant(50, 0.3, MajorantKind::Perturbed { noise: 0.1, p: 2.0 }, 9).unwrap();
        let phi: Vec<f64> = c.values().iter().zip(a.values()).map(|(x, y)| x - y).collect();
        assert!(phi.iter().all(|&v| v >= 0.0));
        let l2 = (phi.iter().map(|v| v * v).sum::<f64>() / 50.0).sqrt();
        assert!((l2 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative() {
        assert!(ZnWeight::new(vec![1.0, -0.5, 2.0]).is_err());
        assert!(ZnWeight::new(vec![1.0]).is_err());
    }
}
