use crate::error::{Error, Result};
use crate::measure::DiscreteSpace;
use crate::scalar::Scalar;

/// Picks `C ⊆ B` with `c ≤ μ(C) < c + η` by taking atoms of `B` in
/// descending probability (ties by index) until the mass reaches `c`.
pub fn carve_subset<T: Scalar>(space: &DiscreteSpace<T>, b: &[bool], c: T, eta: T) -> Result<Vec<bool>> {
    carve_weights(space.probs(), b, c, eta)
}

/// [`carve_subset`] on a bare weight vector, e.g. the atoms of a face.
pub fn carve_weights<T: Scalar>(weights: &[T], b: &[bool], c: T, eta: T) -> Result<Vec<bool>> {
    if b.len() != weights.len() {
        return Err(Error::Shape(format!("mask has {} entries, space has {}", b.len(), weights.len())));
    }
    if let Some(i) = weights.iter().position(|&w| w > eta) {
        return Err(Error::Precondition(format!(
            "atom {i} has probability {} > η = {}",
            weights[i].to_f64_lossy(),
            eta.to_f64_lossy()
        )));
    }
    let mass = weights
        .iter()
        .zip(b)
        .filter(|(_, &m)| m)
        .fold(T::zero(), |acc, (&w, _)| acc + w);
    if !(mass > eta) || c < eta || !(c < mass) {
        return Err(Error::Precondition(format!(
            "need μ(B) > η and η ≤ c < μ(B); μ(B) = {}, c = {}, η = {}",
            mass.to_f64_lossy(),
            c.to_f64_lossy(),
            eta.to_f64_lossy()
        )));
    }
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| b[i]).collect();
    order.sort_by(|&i, &j| weights[j].partial_cmp(&weights[i]).expect("finite weights").then(i.cmp(&j)));
    let mut out = vec![false; weights.len()];
    let mut acc = T::zero();
    for i in order {
        if acc >= c {
            break;
        }
        out[i] = true;
        acc = acc + weights[i];
    }
    debug_assert!(acc >= c && acc < c + eta);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mass(p: &[f64], m: &[bool]) -> f64 {
        p.iter().zip(m).filter(|(_, &b)| b).map(|(w, _)| w).sum()
    }

    #[test]
    fn uniform_ten() {
        let s = DiscreteSpace::<f64>::uniform(10);
        let c = carve_subset(&s, &[true; 10], 0.3, 0.1).unwrap();
        assert_eq!(c.iter().filter(|&&b| b).count(), 3);
        assert!((mass(s.probs(), &c) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn single_heaviest_atom() {
        let s = DiscreteSpace::new(
            (0..4).map(|i| i.to_string()).collect(),
            vec![0.2, 0.3, 0.25, 0.25],
        )
        .unwrap();
        let c = carve_subset(&s, &[true; 4], 0.3, 0.3).unwrap();
        assert_eq!(c, vec![false, true, false, false]);
    }

    #[test]
    fn greedy_trace() {
        let s = DiscreteSpace::new((0..5).map(|i| i.to_string()).collect(), vec![0.2; 5]).unwrap();
        let c = carve_subset(&s, &[true; 5], 0.5, 0.2).unwrap();
        assert_eq!(c, vec![true, true, true, false, false]);
        let m = mass(s.probs(), &c);
        assert!((0.5..0.7).contains(&m));
    }

    #[test]
    fn preconditions() {
        let s = DiscreteSpace::<f64>::uniform(4);
        assert!(carve_subset(&s, &[true; 4], 0.3, 0.2).is_err());
        assert!(carve_subset(&s, &[true, false, false, false], 0.25, 0.25).is_err());
        assert!(carve_subset(&s, &[true; 4], 0.1, 0.25).is_err());
    }
}
