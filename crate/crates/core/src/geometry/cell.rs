use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::Face;
use crate::scalar::Scalar;

/// The face `X_e` of an edge together with its boundary faces and the
/// projections onto them. Shared by every cell and partition on that edge.
pub struct EdgeGeometry<T> {
    face: Face<T>,
    boundary: Vec<Face<T>>,
    projections: Vec<Vec<usize>>,
}

impl<T: Scalar> EdgeGeometry<T> {
    pub fn new(face: Face<T>) -> Arc<Self> {
        let boundary = face.boundary();
        let projections = boundary.iter().map(|b| face.projection(b)).collect();
        Arc::new(Self { face, boundary, projections })
    }

    pub fn face(&self) -> &Face<T> {
        &self.face
    }

    /// Boundary faces in lexicographic order of their coordinates.
    pub fn boundary(&self) -> &[Face<T>] {
        &self.boundary
    }

    /// `projections()[k][x]` is the atom of boundary face `k` under atom `x` of the face.
    pub fn projections(&self) -> &[Vec<usize>] {
        &self.projections
    }

    pub fn r(&self) -> usize {
        self.boundary.len()
    }

    /// Total bits needed to describe a cell: `Σ_{e'∈∂e} |X_{e'}|`.
    pub fn mask_bits(&self) -> usize {
        self.boundary.iter().map(|b| b.size()).sum()
    }
}

impl<T> fmt::Debug for EdgeGeometry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EdgeGeometry").finish_non_exhaustive()
    }
}

/// An element of `S_∂e`: one subset per boundary face, realized as the
/// intersection of their preimages.
#[derive(Clone)]
pub struct BoxCell<T> {
    geom: Arc<EdgeGeometry<T>>,
    masks: Vec<Vec<bool>>,
}

impl<T: Scalar> BoxCell<T> {
    pub fn new(geom: Arc<EdgeGeometry<T>>, masks: Vec<Vec<bool>>) -> Result<Self> {
        if masks.len() != geom.r() {
            return Err(Error::Shape(format!(
                "cell needs {} face sets, got {}",
                geom.r(),
                masks.len()
            )));
        }
        for (k, (m, b)) in masks.iter().zip(geom.boundary()).enumerate() {
            if m.len() != b.size() {
                return Err(Error::Shape(format!(
                    "face set {k} has {} entries, face has {} atoms",
                    m.len(),
                    b.size()
                )));
            }
        }
        Ok(Self { geom, masks })
    }

    pub fn full(geom: Arc<EdgeGeometry<T>>) -> Self {
        let masks = geom.boundary().iter().map(|b| vec![true; b.size()]).collect();
        Self { geom, masks }
    }

    pub fn empty(geom: Arc<EdgeGeometry<T>>) -> Self {
        let masks = geom.boundary().iter().map(|b| vec![false; b.size()]).collect();
        Self { geom, masks }
    }

    pub fn geometry(&self) -> &Arc<EdgeGeometry<T>> {
        &self.geom
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    pub fn mask(&self, k: usize) -> &[bool] {
        &self.masks[k]
    }

    pub fn with_mask(&self, k: usize, mask: Vec<bool>) -> Self {
        let mut out = self.clone();
        out.masks[k] = mask;
        out
    }

    /// Membership of every face atom in the realized set.
    pub fn realize(&self) -> Vec<bool> {
        let proj = self.geom.projections();
        (0..self.geom.face().size())
            .map(|x| self.masks.iter().zip(proj).all(|(m, p)| m[p[x]]))
            .collect()
    }

    pub fn contains_atom(&self, x: usize) -> bool {
        let proj = self.geom.projections();
        self.masks.iter().zip(proj).all(|(m, p)| m[p[x]])
    }

    pub fn measure(&self) -> T {
        self.geom.face().measure(&self.realize())
    }

    pub fn is_empty_set(&self) -> bool {
        !self.realize().iter().any(|&b| b)
    }

    /// Face-wise intersection; realizes the intersection of the two sets.
    pub fn intersect(&self, other: &Self) -> Self {
        let masks = self
            .masks
            .iter()
            .zip(&other.masks)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x && y).collect())
            .collect();
        Self { geom: Arc::clone(&self.geom), masks }
    }

    /// Whether the realized set of `self` is contained in that of `other`.
    pub fn subset_of(&self, other: &Self) -> bool {
        let a = self.realize();
        let b = other.realize();
        a.iter().zip(&b).all(|(&x, &y)| !x || y)
    }

    pub fn same_set(&self, other: &Self) -> bool {
        self.realize() == other.realize()
    }
}

impl<T> fmt::Debug for BoxCell<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let render: Vec<String> = self
            .masks
            .iter()
            .map(|m| m.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect();
        f.debug_tuple("BoxCell").field(&render).finish()
    }
}
