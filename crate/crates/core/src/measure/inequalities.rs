//! Numerical checks of the martingale inequality and the uniform convexity
//! inequality for `L_p`, `1 < p ≤ 2`.

use crate::error::{Error, Result};
use crate::geometry::BoxPartition;
use crate::measure::EdgeFunction;
use crate::scalar::Scalar;

/// Both sides of a checked inequality, `lhs ≤ rhs` expected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport<T> {
    pub holds: bool,
    pub lhs: T,
    pub rhs: T,
}

fn check_exponent<T: Scalar>(p: T) -> Result<()> {
    if p > T::one() && p <= T::lit(2.0) {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p.to_f64_lossy()))
    }
}

/// Checks `(Σ‖d_i‖²_p)^{1/2} ≤ (p−1)^{−1/2}‖Σ d_i‖_p` for a martingale
/// difference sequence adapted to `chain`.
///
/// `chain[i]` is the partition `d_i` is measured against: `d_i` must be
/// `chain[i]`-measurable and, for `i ≥ 1`, have zero conditional mean on
/// `chain[i−1]` (within `1e-10`). The chain must be increasing.
pub fn martingale_sharp_check<T: Scalar>(
    differences: &[EdgeFunction<T>],
    chain: &[BoxPartition<T>],
    p: T,
) -> Result<InequalityReport<T>> {
    check_exponent(p)?;
    if differences.is_empty() || differences.len() != chain.len() {
        return Err(Error::Shape(format!(
            "{} differences but {} partitions",
            differences.len(),
            chain.len()
        )));
    }
    for (i, w) in chain.windows(2).enumerate() {
        if !w[1].refines(&w[0]) {
            return Err(Error::NotMartingale(format!("partition {} does not refine partition {i}", i + 1)));
        }
    }
    let zero_tol = T::lit(1e-10);
    for (i, (d, part)) in differences.iter().zip(chain).enumerate() {
        let own = d.cond_exp(part)?;
        if own.values().iter().zip(d.values()).any(|(&a, &b)| (a - b).abs() > zero_tol) {
            return Err(Error::NotMartingale(format!("d_{i} is not measurable for partition {i}")));
        }
        if i > 0 {
            let prev = d.cond_exp(&chain[i - 1])?;
            if let Some(x) = prev.values().iter().position(|v| v.abs() > zero_tol) {
                return Err(Error::NotMartingale(format!(
                    "E(d_{i} | partition {}) = {} at atom {x}",
                    i - 1,
                    prev.values()[x].to_f64_lossy()
                )));
            }
        }
    }
    let mut sum = differences[0].clone();
    for d in &differences[1..] {
        sum = sum.add(d)?;
    }
    let squares = differences
        .iter()
        .map(|d| d.lp_norm(p).map(|n| n * n))
        .collect::<Result<Vec<T>>>()?;
    let lhs = squares.into_iter().fold(T::zero(), |a, b| a + b).sqrt();
    let rhs = (p - T::one()).powf(T::lit(-0.5)) * sum.lp_norm(p)?;
    Ok(InequalityReport { holds: lhs <= rhs + T::tol(), lhs, rhs })
}

/// Checks `‖x‖² + (p−1)‖y‖² ≤ (‖x+y‖² + ‖x−y‖²)/2` in `L_p`.
pub fn convexity_check<T: Scalar>(x: &EdgeFunction<T>, y: &EdgeFunction<T>, p: T) -> Result<InequalityReport<T>> {
    check_exponent(p)?;
    let nx = x.lp_norm(p)?;
    let ny = y.lp_norm(p)?;
    let plus = x.add(y)?.lp_norm(p)?;
    let minus = x.sub(y)?.lp_norm(p)?;
    let lhs = nx * nx + (p - T::one()) * ny * ny;
    let rhs = (plus * plus + minus * minus) / T::lit(2.0);
    Ok(InequalityReport { holds: lhs <= rhs + T::tol(), lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoxCell, EdgeGeometry};
    use crate::measure::HypergraphSystem;

    #[test]
    fn single_difference() {
        let s = HypergraphSystem::<f64>::uniform(2, 3, vec![vec![0, 1]]).unwrap();
        let geom = EdgeGeometry::new(s.edge_face(0));
        let f = EdgeFunction::new(s.edge_face(0), (0..9).map(|i| i as f64).collect()).unwrap();
        let cells = (0..9)
            .map(|x| {
                let mut a = vec![false; 3];
                let mut b = vec![false; 3];
                a[x / 3] = true;
                b[x % 3] = true;
                BoxCell::new(geom.clone(), vec![a, b]).unwrap()
            })
            .collect();
        let atoms = BoxPartition::new(geom.clone(), cells).unwrap();
        let rep = martingale_sharp_check(&[f.clone()], &[atoms], 1.5).unwrap();
        assert!(rep.holds);
        assert!((rep.lhs - f.lp_norm(1.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_at_two() {
        let s = HypergraphSystem::<f64>::uniform(2, 2, vec![vec![0, 1]]).unwrap();
        let geom = EdgeGeometry::new(s.edge_face(0));
        let trivial = BoxPartition::trivial(geom.clone());
        let split = BoxPartition::new(
            geom.clone(),
            vec![
                BoxCell::full(geom.clone()).with_mask(0, vec![true, false]),
                BoxCell::full(geom.clone()).with_mask(0, vec![false, true]),
            ],
        )
        .unwrap();
        let d0 = EdgeFunction::constant(s.edge_face(0), 2.0);
        let d1 = EdgeFunction::new(s.edge_face(0), vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let rep = martingale_sharp_check(&[d0.clone(), d1.clone()], &[trivial.clone(), split.clone()], 2.0).unwrap();
        assert!((rep.lhs - rep.rhs).abs() < 1e-12);
        let bad = martingale_sharp_check(&[d0, d1.add(&d1).unwrap().map(|v| v + 1.0).unwrap()], &[trivial, split], 2.0);
        assert!(matches!(bad, Err(Error::NotMartingale(_))));
    }

    #[test]
    fn convexity_edge_cases() {
        let s = HypergraphSystem::<f64>::uniform(2, 5, vec![vec![0, 1]]).unwrap();
        let face = s.face(&[0]).unwrap();
        let x = EdgeFunction::new(face.clone(), vec![1.0, -2.0, 0.5, 3.0, 0.0]).unwrap();
        let zero = EdgeFunction::constant(face, 0.0);
        let rep = convexity_check(&x, &zero, 1.3).unwrap();
        assert!(rep.holds && (rep.lhs - rep.rhs).abs() < 1e-12);
        assert!(convexity_check(&zero, &x, 1.3).unwrap().holds);
        assert!(convexity_check(&x, &zero, 2.5).is_err());
    }
}
