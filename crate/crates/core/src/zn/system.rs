use num_integer::Integer;

use crate::error::{Error, Result};
use crate::measure::{EdgeFunction, HypergraphSystem};
use crate::scalar::Scalar;
use crate::zn::weight::ZnWeight;

/// The `(k−1)`-uniform system on `k` uniform copies of `Z_n` with edges
/// `[k]∖{j}`, together with the lifted weights of a `ν` on `Z_n`.
#[derive(Debug, Clone)]
pub struct ApSystem<T> {
    pub system: HypergraphSystem<T>,
    /// Coefficients `a_j` of `φ_j(x) = a_j x`, reduced mod `n`.
    pub coeffs: Vec<u64>,
    /// Edge `j` is `[k]∖{j}`; its weight is `x ↦ ν(Σ_{i≠j} (a_i − a_j) x_i)`.
    pub weights: Vec<EdgeFunction<T>>,
}

/// `a_j = j` for `j = 1..k`.
pub fn default_coeffs(k: usize) -> Vec<i64> {
    (1..=k as i64).collect()
}

/// `(a_i − a_j) mod n` for every ordered pair.
pub(crate) fn differences(coeffs: &[u64], n: u64) -> Vec<Vec<u64>> {
    coeffs.iter().map(|&aj| coeffs.iter().map(|&ai| (ai + n - aj) % n).collect()).collect()
}

pub(crate) fn reduce(coeffs: &[i64], n: usize) -> Vec<u64> {
    coeffs.iter().map(|&a| a.rem_euclid(n as i64) as u64).collect()
}

/// Checks that `{(a_i − a_j)d}` generates `Z_n`, i.e. `gcd(n, a_i − a_j : i, j) = 1`.
pub fn check_generation(coeffs: &[i64], n: usize) -> Result<()> {
    let red = reduce(coeffs, n);
    let g = differences(&red, n as u64).iter().flatten().fold(n as u64, |g, &d| g.gcd(&d));
    if g != 1 {
        return Err(Error::Precondition(format!("the coefficient differences generate only the subgroup of index {g} in Z_{n}")));
    }
    Ok(())
}

/// Builds the arithmetic-progression system for `ν` (default coefficients `a_j = j`).
pub fn build_ap_system<T: Scalar>(nu: &ZnWeight<T>, k: usize, coeffs: Option<&[i64]>) -> Result<ApSystem<T>> {
    if k < 3 {
        return Err(Error::Precondition(format!("k = {k} must be at least 3")));
    }
    let n = nu.n();
    let owned = default_coeffs(k);
    let coeffs = coeffs.unwrap_or(&owned);
    if coeffs.len() != k {
        return Err(Error::Shape(format!("{} coefficients for k = {k}", coeffs.len())));
    }
    check_generation(coeffs, n)?;
    let red = reduce(coeffs, n);
    let diff = differences(&red, n as u64);
    let edges: Vec<Vec<usize>> = (0..k).map(|j| (0..k).filter(|&i| i != j).collect()).collect();
    let system = HypergraphSystem::uniform(k, n, edges.clone())?;
    let weights = edges
        .iter()
        .enumerate()
        .map(|(j, edge)| {
            EdgeFunction::from_fn(system.edge_face(j), |x| {
                let s: u64 = edge.iter().zip(x).map(|(&i, &xi)| diff[j][i] * xi as u64).sum();
                nu.at(s)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ApSystem { system, coeffs: red, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weight_lifts_to_ones() {
        let nu = ZnWeight::constant(7, 1.0).unwrap();
        let ap = build_ap_system(&nu, 4, None).unwrap();
        assert_eq!(ap.weights.len(), 4);
        assert!(ap.weights.iter().all(|w| w.values().iter().all(|&v| v == 1.0)));
    }

    #[test]
    fn spike_at_zero() {
        let mut vals = vec![0.0; 5];
        vals[0] = 5.0;
        let nu = ZnWeight::new(vals).unwrap();
        let ap = build_ap_system(&nu, 3, None).unwrap();
        // Edge [3]∖{3} is the 0-based edge 2 on coordinates (0, 1).
        let w = &ap.weights[2];
        for x1 in 0..5i64 {
            for x2 in 0..5i64 {
                let expected = if ((1 - 3) * x1 + (2 - 3) * x2).rem_euclid(5) == 0 { 5.0 } else { 0.0 };
                assert_eq!(w.value_at(&[x1 as usize, x2 as usize]), expected);
            }
        }
    }

    #[test]
    fn degenerate_coefficients() {
        let nu = ZnWeight::constant(6, 1.0).unwrap();
        assert!(build_ap_system(&nu, 3, Some(&[2, 2, 2])).is_err());
        assert!(build_ap_system(&nu, 3, Some(&[0, 2, 4])).is_err());
        assert!(build_ap_system(&nu, 3, Some(&[0, 2, 5])).is_ok());
    }
}
