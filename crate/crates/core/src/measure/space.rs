use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite probability space: labelled atoms with their probabilities.
#[derive(Debug, Clone)]
pub struct DiscreteSpace<T> {
    points: Vec<String>,
    probs: Arc<[T]>,
}

impl<T: Scalar> DiscreteSpace<T> {
    /// Builds a space, requiring the probabilities to sum to 1 within `1e-12`
    /// (scaled to the scalar's precision).
    pub fn new(points: Vec<String>, probs: Vec<T>) -> Result<Self> {
        Self::with_tolerance(0, points, probs, T::eps())
    }

    /// Like [`DiscreteSpace::new`] with an explicit sum tolerance. `index` is only
    /// used to label errors.
    pub fn with_tolerance(index: usize, points: Vec<String>, probs: Vec<T>, tol: T) -> Result<Self> {
        if points.len() != probs.len() {
            return Err(Error::Shape(format!(
                "space {index}: {} points but {} probabilities",
                points.len(),
                probs.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::Shape(format!("space {index} is empty")));
        }
        let mut seen = HashSet::new();
        for label in &points {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicatePoint { space: index, label: label.clone() });
            }
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < T::zero() {
                return Err(Error::InvalidProbability {
                    space: index,
                    point: i,
                    value: p.to_f64_lossy(),
                });
            }
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(Error::ProbabilitySum { space: index, sum: sum.to_f64_lossy() });
        }
        Ok(Self { points, probs: probs.into() })
    }

    /// Uniform measure on `m` points labelled `0..m`.
    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "uniform space needs at least one point");
        let p = T::one() / T::usize(m);
        Self {
            points: (0..m).map(|i| i.to_string()).collect(),
            probs: vec![p; m].into(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub(crate) fn probs_arc(&self) -> Arc<[T]> {
        Arc::clone(&self.probs)
    }

    /// Largest atom probability.
    pub fn atom_bound(&self) -> T {
        self.probs.iter().copied().fold(T::zero(), T::max)
    }
}

/// The product space `X_e = ∏_{i∈e} X_i` over a sorted set of coordinates.
///
/// Atoms are indexed row-major with the first coordinate most significant.
#[derive(Debug, Clone)]
pub struct Face<T> {
    coords: Vec<usize>,
    probs: Vec<Arc<[T]>>,
    weights: Arc<[T]>,
}

impl<T: Scalar> Face<T> {
    pub(crate) fn from_parts(coords: Vec<usize>, probs: Vec<Arc<[T]>>) -> Self {
        debug_assert_eq!(coords.len(), probs.len());
        debug_assert!(coords.windows(2).all(|w| w[0] < w[1]));
        let size: usize = probs.iter().map(|p| p.len()).product();
        let mut weights = vec![T::one(); size];
        let mut stride = size;
        for p in &probs {
            let m = p.len();
            stride /= m;
            for (idx, w) in weights.iter_mut().enumerate() {
                *w = *w * p[(idx / stride) % m];
            }
        }
        Self { coords, probs, weights: weights.into() }
    }

    /// Coordinates of the face (0-based, ascending).
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.probs.iter().map(|p| p.len()).collect()
    }

    /// Number of atoms of the face.
    pub fn size(&self) -> usize {
        self.weights.len()
    }

    /// Probability of each atom under the product measure.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn coord_probs(&self) -> &[Arc<[T]>] {
        &self.probs
    }

    /// Largest atom probability of the underlying coordinate spaces.
    pub fn coord_atom_bound(&self) -> T {
        self.probs
            .iter()
            .flat_map(|p| p.iter().copied())
            .fold(T::zero(), T::max)
    }

    pub fn same_as(&self, other: &Face<T>) -> bool {
        self.coords == other.coords && self.dims() == other.dims()
    }

    /// Digits of an atom index, one per coordinate.
    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut digits = vec![0; self.arity()];
        for (slot, p) in digits.iter_mut().zip(&self.probs).rev() {
            let m = p.len();
            *slot = idx % m;
            idx /= m;
        }
        digits
    }

    pub fn flatten(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.probs)
            .fold(0, |acc, (&d, p)| acc * p.len() + d)
    }

    /// Measure of a set of atoms given as a membership mask.
    pub fn measure(&self, mask: &[bool]) -> T {
        debug_assert_eq!(mask.len(), self.size());
        self.weights
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(T::zero(), |acc, (&w, _)| acc + w)
    }

    /// The face on a subset of this face's coordinates.
    pub fn subface(&self, coords: &[usize]) -> Result<Face<T>> {
        let mut probs = Vec::with_capacity(coords.len());
        for c in coords {
            let pos = self.coords.iter().position(|x| x == c).ok_or_else(|| {
                Error::FaceMismatch(format!("coordinate {c} not in face {:?}", self.coords))
            })?;
            probs.push(Arc::clone(&self.probs[pos]));
        }
        let mut sorted = coords.to_vec();
        sorted.sort_unstable();
        if sorted != coords {
            return Err(Error::FaceMismatch("subface coordinates must be sorted".into()));
        }
        Ok(Face::from_parts(sorted, probs))
    }

    /// For every atom of `self`, the index of its projection onto `sub`.
    pub fn projection(&self, sub: &Face<T>) -> Vec<usize> {
        let positions: Vec<usize> = sub
            .coords
            .iter()
            .map(|c| {
                self.coords
                    .iter()
                    .position(|x| x == c)
                    .expect("subface coordinates contained in face")
            })
            .collect();
        let dims = sub.dims();
        (0..self.size())
            .map(|idx| {
                let digits = self.unflatten(idx);
                positions
                    .iter()
                    .zip(&dims)
                    .fold(0, |acc, (&pos, &m)| acc * m + digits[pos])
            })
            .collect()
    }

    /// Boundary faces `{e' ⊆ e : |e'| = |e| − 1}` in lexicographic order.
    pub fn boundary(&self) -> Vec<Face<T>> {
        let r = self.arity();
        let mut faces: Vec<Face<T>> = (0..r)
            .rev()
            .map(|skip| {
                let coords: Vec<usize> = (0..r).filter(|&i| i != skip).map(|i| self.coords[i]).collect();
                let probs = (0..r)
                    .filter(|&i| i != skip)
                    .map(|i| Arc::clone(&self.probs[i]))
                    .collect();
                Face::from_parts(coords, probs)
            })
            .collect();
        faces.sort_by(|a, b| a.coords.cmp(&b.coords));
        faces
    }
}

/// `n` discrete probability spaces plus an `r`-uniform edge set on `{0..n}`.
#[derive(Debug, Clone)]
pub struct HypergraphSystem<T> {
    spaces: Vec<DiscreteSpace<T>>,
    edges: Vec<Vec<usize>>,
    r: usize,
}

impl<T: Scalar> HypergraphSystem<T> {
    /// Edges are given with 0-based coordinates; each is sorted on input.
    /// Edge order is preserved.
    pub fn new(spaces: Vec<DiscreteSpace<T>>, edges: Vec<Vec<usize>>) -> Result<Self> {
        let n = spaces.len();
        if edges.is_empty() {
            return Err(Error::InvalidSystem("no edges".into()));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut seen = HashSet::new();
        for (k, e) in edges.into_iter().enumerate() {
            let mut e = e;
            e.sort_unstable();
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidSystem(format!("edge {k} repeats a vertex")));
            }
            if let Some(&bad) = e.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidSystem(format!("edge {k} uses vertex {bad} but n = {n}")));
            }
            if !seen.insert(e.clone()) {
                return Err(Error::InvalidSystem(format!("edge {k} is a duplicate")));
            }
            normalized.push(e);
        }
        let r = normalized[0].len();
        if normalized.iter().any(|e| e.len() != r) {
            return Err(Error::InvalidSystem("edges have different sizes".into()));
        }
        if r < 2 || n < r {
            return Err(Error::InvalidSystem(format!("need n ≥ r ≥ 2, got n = {n}, r = {r}")));
        }
        Ok(Self { spaces, edges: normalized, r })
    }

    /// `n` uniform spaces of size `m` with the given edges.
    pub fn uniform(n: usize, m: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        Self::new((0..n).map(|_| DiscreteSpace::uniform(m)).collect(), edges)
    }

    /// The complete `r`-uniform hypergraph on `r + 1` uniform spaces of size `m`.
    pub fn simplex(r: usize, m: usize) -> Result<Self> {
        let n = r + 1;
        let edges = (0..n).rev().map(|skip| (0..n).filter(|&i| i != skip).collect()).collect();
        Self::uniform(n, m, edges)
    }

    pub fn n(&self) -> usize {
        self.spaces.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn spaces(&self) -> &[DiscreteSpace<T>] {
        &self.spaces
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// Face over arbitrary sorted coordinates.
    pub fn face(&self, coords: &[usize]) -> Result<Face<T>> {
        if coords.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::FaceMismatch(format!("face {coords:?} not strictly ascending")));
        }
        if let Some(&bad) = coords.iter().find(|&&i| i >= self.n()) {
            return Err(Error::FaceMismatch(format!("coordinate {bad} out of range")));
        }
        Ok(Face::from_parts(
            coords.to_vec(),
            coords.iter().map(|&i| self.spaces[i].probs_arc()).collect(),
        ))
    }

    pub fn edge_face(&self, edge: usize) -> Face<T> {
        self.face(&self.edges[edge]).expect("edges are validated")
    }

    /// The full product `X = ∏ X_i`.
    pub fn full_face(&self) -> Face<T> {
        let all: Vec<usize> = (0..self.n()).collect();
        self.face(&all).expect("all coordinates valid")
    }

    /// `max_{i,x} μ_i({x})`: the system is η-nonatomic iff this is ≤ η.
    pub fn atom_bound(&self) -> T {
        self.spaces.iter().map(|s| s.atom_bound()).fold(T::zero(), T::max)
    }

    pub fn edge_index(&self, edge: &[usize]) -> Option<usize> {
        let mut sorted = edge.to_vec();
        sorted.sort_unstable();
        self.edges.iter().position(|e| *e == sorted)
    }
}

/// Free-function form of [`HypergraphSystem::atom_bound`].
pub fn atom_bound<T: Scalar>(system: &HypergraphSystem<T>) -> T {
    system.atom_bound()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_bound_uniform() {
        let s = HypergraphSystem::<f64>::uniform(2, 4, vec![vec![0, 1]]).unwrap();
        assert_eq!(atom_bound(&s), 0.25);
        let s3 = HypergraphSystem::<f64>::uniform(3, 7, vec![vec![0, 1]]).unwrap();
        assert_eq!(s3.atom_bound(), 1.0 / 7.0);
    }

    #[test]
    fn atom_bound_mixed() {
        let a = DiscreteSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.5, 0.25, 0.25],
        )
        .unwrap();
        let b = DiscreteSpace::<f64>::uniform(10);
        let s = HypergraphSystem::new(vec![a, b], vec![vec![0, 1]]).unwrap();
        assert_eq!(s.atom_bound(), 0.5);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let err = DiscreteSpace::<f64>::new(vec!["a".into(), "b".into()], vec![0.5, 0.4]).unwrap_err();
        assert!(matches!(err, Error::ProbabilitySum { .. }));
        let err = DiscreteSpace::<f64>::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::DuplicatePoint { .. }));
        let err = DiscreteSpace::<f64>::new(vec!["a".into(), "b".into()], vec![1.5, -0.5]).unwrap_err();
        assert!(matches!(err, Error::InvalidProbability { .. }));
    }

    #[test]
    fn rejects_bad_systems() {
        assert!(HypergraphSystem::<f64>::uniform(3, 2, vec![vec![0, 1], vec![1, 0]]).is_err());
        assert!(HypergraphSystem::<f64>::uniform(3, 2, vec![vec![0, 1], vec![0, 1, 2]]).is_err());
        assert!(HypergraphSystem::<f64>::uniform(3, 2, vec![vec![0]]).is_err());
        assert!(HypergraphSystem::<f64>::uniform(2, 2, vec![vec![0, 2]]).is_err());
    }

    #[test]
    fn face_weights_and_projection() {
        let a = DiscreteSpace::new(vec!["x".into(), "y".into()], vec![0.25, 0.75]).unwrap();
        let b = DiscreteSpace::<f64>::uniform(3);
        let s = HypergraphSystem::new(vec![a, b], vec![vec![0, 1]]).unwrap();
        let f = s.edge_face(0);
        assert_eq!(f.size(), 6);
        assert!((f.weights()[4] - 0.25).abs() < 1e-15);
        assert_eq!(f.unflatten(4), vec![1, 1]);
        assert_eq!(f.flatten(&[1, 2]), 5);
        let boundary = f.boundary();
        assert_eq!(boundary[0].coords(), &[0]);
        assert_eq!(boundary[1].coords(), &[1]);
        assert_eq!(f.projection(&boundary[1]), vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn simplex_boundary_order() {
        let s = HypergraphSystem::<f64>::simplex(3, 2).unwrap();
        assert_eq!(s.edges().len(), 4);
        let b = s.edge_face(0).boundary();
        let coords: Vec<_> = b.iter().map(|f| f.coords().to_vec()).collect();
        assert_eq!(coords, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }
}
