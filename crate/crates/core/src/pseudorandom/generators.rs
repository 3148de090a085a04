use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{EdgeFunction, Face};
use crate::scalar::Scalar;

/// `ν = 1_S / d` where each atom of `face` joins `S` independently with probability `d`.
pub fn random_set_majorant<T: Scalar>(face: &Face<T>, density: f64, seed: u64) -> Result<EdgeFunction<T>> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Precondition(format!("density {density} must lie in (0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = T::lit(1.0 / density);
    let values = (0..face.size())
        .map(|_| if density >= 1.0 || rng.gen_bool(density) { scale } else { T::zero() })
        .collect();
    EdgeFunction::new(face.clone(), values)
}

/// `ν + φ` with `φ ≥ 0` random and `‖φ‖_{L_p} = noise` (zero noise returns `ν`).
pub fn perturbed_majorant<T: Scalar>(nu: &EdgeFunction<T>, noise: T, p: T, seed: u64) -> Result<EdgeFunction<T>> {
    if !(noise >= T::zero()) {
        return Err(Error::Precondition(format!("noise level {} must be ≥ 0", noise.to_f64_lossy())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<T> = (0..nu.face().size()).map(|_| T::lit(rng.gen::<f64>())).collect();
    let phi = EdgeFunction::new(nu.face().clone(), raw)?;
    let norm = phi.lp_norm(p)?;
    if norm == T::zero() || noise == T::zero() {
        return Ok(nu.clone());
    }
    nu.add(&phi.scale(noise / norm))
}
