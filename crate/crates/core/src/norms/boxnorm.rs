use rayon::prelude::*;

use crate::measure::EdgeFunction;
use crate::scalar::{tree_sum, Scalar};

/// The box average `∫ ∏_{ω∈{0,1}^r} f(x^{(ω)}) dμ_e²` over two independent
/// copies of every coordinate of the face.
pub fn box_average<T: Scalar>(f: &EdgeFunction<T>) -> T {
    let face = f.face();
    let r = face.arity();
    let size = face.size();
    let w = face.weights();
    let vals = f.values();
    let terms: Vec<T> = (0..size)
        .into_par_iter()
        .map(|x0| {
            let d0 = face.unflatten(x0);
            let mut digits = vec![0usize; r];
            let mut acc = Vec::with_capacity(size);
            for x1 in 0..size {
                let d1 = face.unflatten(x1);
                let mut prod = w[x0] * w[x1];
                for omega in 0..(1usize << r) {
                    for i in 0..r {
                        digits[i] = if (omega >> i) & 1 == 1 { d1[i] } else { d0[i] };
                    }
                    prod = prod * vals[face.flatten(&digits)];
                    if prod == T::zero() {
                        break;
                    }
                }
                acc.push(prod);
            }
            tree_sum(&acc)
        })
        .collect();
    tree_sum(&terms)
}

/// `‖f‖_{□}`: the box average (clamped at 0 against rounding) to the power `2^{−r}`.
pub fn box_norm<T: Scalar>(f: &EdgeFunction<T>) -> T {
    let r = f.face().arity() as i32;
    let avg = box_average(f).max(T::zero());
    avg.powf(T::one() / T::lit(2f64.powi(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::HypergraphSystem;

    #[test]
    fn constants_and_parity() {
        let s = HypergraphSystem::<f64>::uniform(2, 2, vec![vec![0, 1]]).unwrap();
        let c = EdgeFunction::constant(s.edge_face(0), 0.7);
        assert!((box_norm(&c) - 0.7).abs() < 1e-14);
        let parity = EdgeFunction::from_fn(s.edge_face(0), |x| if (x[0] + x[1]) % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        assert!((box_average(&parity) - 1.0).abs() < 1e-14);
        assert!((box_norm(&parity) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_uniform_constant() {
        let s = HypergraphSystem::<f64>::simplex(3, 2).unwrap();
        let c = EdgeFunction::constant(s.edge_face(0), 2.0);
        assert!((box_norm(&c) - 2.0).abs() < 1e-13);
    }
}
