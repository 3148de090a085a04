use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::cell::{BoxCell, EdgeGeometry};
use crate::scalar::Scalar;

/// A partition of `X` into cells of `S_∂e`, each of positive measure.
#[derive(Debug, Clone)]
pub struct BoxPartition<T> {
    geom: Arc<EdgeGeometry<T>>,
    cells: Vec<BoxCell<T>>,
    labels: Vec<usize>,
    measures: Vec<T>,
}

impl<T: Scalar> BoxPartition<T> {
    /// Validates that the cells are disjoint, cover the face and have positive measure.
    pub fn new(geom: Arc<EdgeGeometry<T>>, cells: Vec<BoxCell<T>>) -> Result<Self> {
        let size = geom.face().size();
        let mut labels = vec![usize::MAX; size];
        for (c, cell) in cells.iter().enumerate() {
            if !Arc::ptr_eq(cell.geometry(), &geom) && !cell.geometry().face().same_as(geom.face()) {
                return Err(Error::FaceMismatch(format!("cell {c} belongs to another edge")));
            }
            for (x, inside) in cell.realize().into_iter().enumerate() {
                if inside {
                    if labels[x] != usize::MAX {
                        return Err(Error::InvalidPartition(format!(
                            "cells {} and {c} overlap at atom {x}",
                            labels[x]
                        )));
                    }
                    labels[x] = c;
                }
            }
        }
        if let Some(x) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("atom {x} is not covered")));
        }
        let mut measures = vec![T::zero(); cells.len()];
        for (&l, &w) in labels.iter().zip(geom.face().weights()) {
            measures[l] = measures[l] + w;
        }
        if let Some(cell) = measures.iter().position(|&m| m <= T::zero()) {
            return Err(Error::ZeroMeasureCell { cell });
        }
        Ok(Self { geom, cells, labels, measures })
    }

    /// The partition `{X}`.
    pub fn trivial(geom: Arc<EdgeGeometry<T>>) -> Self {
        let size = geom.face().size();
        let total = geom.face().weights().iter().copied().fold(T::zero(), |a, b| a + b);
        Self {
            cells: vec![BoxCell::full(Arc::clone(&geom))],
            geom,
            labels: vec![0; size],
            measures: vec![total],
        }
    }

    pub fn geometry(&self) -> &Arc<EdgeGeometry<T>> {
        &self.geom
    }

    pub fn cells(&self) -> &[BoxCell<T>] {
        &self.cells
    }

    /// Cell index of every face atom.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn measures(&self) -> &[T] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `ι(P)`, the smallest cell measure.
    pub fn iota(&self) -> T {
        self.measures.iter().copied().fold(T::infinity(), T::min)
    }

    /// Whether every cell of `self` lies inside a single cell of `coarser`.
    pub fn refines(&self, coarser: &Self) -> bool {
        let mut map = vec![usize::MAX; self.len()];
        for (&mine, &theirs) in self.labels.iter().zip(&coarser.labels) {
            if map[mine] == usize::MAX {
                map[mine] = theirs;
            } else if map[mine] != theirs {
                return false;
            }
        }
        true
    }

    /// Indicator mask of the union of the given cells.
    pub fn union_mask(&self, cells: &[usize]) -> Vec<bool> {
        let mut chosen = vec![false; self.len()];
        for &c in cells {
            chosen[c] = true;
        }
        self.labels.iter().map(|&l| chosen[l]).collect()
    }
}

/// All nonempty pairwise intersections of the cells of `p` and `q`.
pub fn common_refinement<T: Scalar>(p: &BoxPartition<T>, q: &BoxPartition<T>) -> Result<BoxPartition<T>> {
    if !p.geom.face().same_as(q.geom.face()) {
        return Err(Error::FaceMismatch(format!(
            "partitions live on {:?} and {:?}",
            p.geom.face().coords(),
            q.geom.face().coords()
        )));
    }
    let mut pairs = BTreeMap::new();
    for (&a, &b) in p.labels.iter().zip(&q.labels) {
        pairs.entry((a, b)).or_insert(());
    }
    let cells = pairs
        .keys()
        .map(|&(a, b)| p.cells[a].intersect(&q.cells[b]))
        .collect();
    BoxPartition::new(Arc::clone(&p.geom), cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::HypergraphSystem;

    fn halves(geom: &Arc<EdgeGeometry<f64>>, face: usize) -> BoxPartition<f64> {
        let cells = [[true, false], [false, true]]
            .iter()
            .map(|m| BoxCell::full(geom.clone()).with_mask(face, m.to_vec()))
            .collect();
        BoxPartition::new(geom.clone(), cells).unwrap()
    }

    #[test]
    fn refinement_examples() {
        let s = HypergraphSystem::<f64>::uniform(2, 2, vec![vec![0, 1]]).unwrap();
        let geom = EdgeGeometry::new(s.edge_face(0));
        let trivial = BoxPartition::trivial(geom.clone());
        let by_first = halves(&geom, 0);
        let by_second = halves(&geom, 1);
        let r = common_refinement(&trivial, &by_first).unwrap();
        assert_eq!(r.labels(), by_first.labels());
        let r = common_refinement(&by_first, &by_first).unwrap();
        assert_eq!(r.len(), 2);
        let r = common_refinement(&by_first, &by_second).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.measures().iter().all(|&m| (m - 0.25).abs() < 1e-15));
        assert!(r.refines(&by_first) && r.refines(&by_second));
        assert!(!by_first.refines(&by_second));
    }

    #[test]
    fn rejects_overlap_and_gaps() {
        let s = HypergraphSystem::<f64>::uniform(2, 2, vec![vec![0, 1]]).unwrap();
        let geom = EdgeGeometry::new(s.edge_face(0));
        let full = BoxCell::full(geom.clone());
        assert!(BoxPartition::new(geom.clone(), vec![full.clone(), full.clone()]).is_err());
        let half = full.with_mask(0, vec![true, false]);
        assert!(BoxPartition::new(geom.clone(), vec![half]).is_err());
    }
}
