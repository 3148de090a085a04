use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::cell::{BoxCell, EdgeGeometry};
use crate::geometry::partition::BoxPartition;
use crate::measure::carve_weights;
use crate::scalar::Scalar;

/// Output of the partition lemma applied inside one cell.
#[derive(Debug, Clone)]
pub struct LocalSplit<T> {
    /// Cells partitioning the universe, `b` first.
    pub cells: Vec<BoxCell<T>>,
    pub b: BoxCell<T>,
    /// Nonempty `B_i = B ∩ C_{[r]∖G,i}`, `i ∉ G`.
    pub leftovers: Vec<BoxCell<T>>,
    /// The index set `G` (boundary faces in lexicographic order, 0-based).
    pub good: Vec<usize>,
}

/// Output of [`split_cell`].
#[derive(Debug, Clone)]
pub struct SplitOutcome<T> {
    pub q: BoxPartition<T>,
    pub b: BoxCell<T>,
    pub leftovers: Vec<BoxCell<T>>,
    pub good: Vec<usize>,
}

/// `C_{I,i} ∩ U`: inside `universe`, the points of `A_j` for `j ∈ I, j < i` that miss `A_i`.
fn c_set<T: Scalar>(universe: &BoxCell<T>, a: &BoxCell<T>, members: &[bool], i: usize) -> BoxCell<T> {
    let masks = (0..a.masks().len())
        .map(|k| {
            let u = universe.mask(k);
            let ak = a.mask(k);
            u.iter()
                .zip(ak)
                .map(|(&u, &x)| {
                    if k == i {
                        u && !x
                    } else if k < i && members[k] {
                        u && x
                    } else {
                        u
                    }
                })
                .collect()
        })
        .collect();
    BoxCell::new(Arc::clone(a.geometry()), masks).expect("masks have face shapes")
}

fn measure_in<T: Scalar>(cell: &BoxCell<T>, universe_mask: &[bool], universe_measure: T) -> T {
    let realized = cell.realize();
    let w = cell.geometry().face().weights();
    let inside = realized
        .iter()
        .zip(universe_mask)
        .zip(w)
        .filter(|((&c, &u), _)| c && u)
        .fold(T::zero(), |acc, (_, &w)| acc + w);
    inside / universe_measure
}

/// The partition lemma applied to the probability space `universe` with its
/// conditional measure. Every returned set lies inside `universe`.
pub fn split_within<T: Scalar>(universe: &BoxCell<T>, a: &BoxCell<T>, theta: T) -> Result<LocalSplit<T>> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(Error::Precondition(format!("θ = {} must lie in (0,1)", theta.to_f64_lossy())));
    }
    let u_mask = universe.realize();
    let u_measure = universe.geometry().face().measure(&u_mask);
    if !(u_measure > T::zero()) {
        return Err(Error::Precondition("universe has zero measure".into()));
    }
    let a = a.intersect(universe);
    let mu_a = measure_in(&a, &u_mask, u_measure);
    if mu_a < theta {
        return Err(Error::Precondition(format!(
            "μ(A) = {} < θ = {}",
            mu_a.to_f64_lossy(),
            theta.to_f64_lossy()
        )));
    }
    let r = a.masks().len();
    let all = vec![true; r];
    let good: Vec<usize> = (0..r)
        .filter(|&i| measure_in(&c_set(universe, &a, &all, i), &u_mask, u_measure) >= theta)
        .collect();
    let mut in_g = vec![false; r];
    for &i in &good {
        in_g[i] = true;
    }
    let mut b = universe.clone();
    for &i in &good {
        b = b.with_mask(i, a.mask(i).to_vec());
    }
    let mut cells = vec![b.clone()];
    cells.extend(good.iter().map(|&i| c_set(universe, &a, &in_g, i)));
    let not_g: Vec<bool> = in_g.iter().map(|&x| !x).collect();
    let leftovers = (0..r)
        .filter(|&i| !in_g[i])
        .map(|i| b.intersect(&c_set(universe, &a, &not_g, i)))
        .filter(|c| c.realize().iter().zip(&u_mask).any(|(&x, &u)| x && u))
        .collect();
    Ok(LocalSplit { cells, b, leftovers, good })
}

/// Partition lemma on `X_e`: a partition `Q ⊆ S_∂e` with `ι(Q) ≥ θ`, a cell `B ∈ Q`
/// containing `A`, and small disjoint leftovers covering `B∖A`.
pub fn split_cell<T: Scalar>(a: &BoxCell<T>, theta: T) -> Result<SplitOutcome<T>> {
    let geom = Arc::clone(a.geometry());
    let local = split_within(&BoxCell::full(Arc::clone(&geom)), a, theta)?;
    let q = BoxPartition::new(geom, local.cells)?;
    Ok(SplitOutcome { q, b: local.b, leftovers: local.leftovers, good: local.good })
}

/// Output of [`enlarge_box`].
#[derive(Debug, Clone)]
pub struct Enlargement<T> {
    pub cell: BoxCell<T>,
    /// Carving steps taken.
    pub steps: usize,
    /// The proof's bound `⌈2r/η⌉`.
    pub cap: usize,
}

/// Box enlargement: grows `A ∈ S_∂e` to `B ⊇ A` in `S_∂e` with `a ≤ μ(B) < a + 2η`.
pub fn enlarge_box<T: Scalar>(a_cell: &BoxCell<T>, a: T, eta: T) -> Result<Enlargement<T>> {
    let geom: &Arc<EdgeGeometry<T>> = a_cell.geometry();
    let r = geom.r();
    let atom = geom.face().coord_atom_bound();
    if atom > eta {
        return Err(Error::Precondition(format!(
            "system is not η-nonatomic: atom {} > η = {}",
            atom.to_f64_lossy(),
            eta.to_f64_lossy()
        )));
    }
    if !(a > T::zero() && a < T::one() && eta > T::zero() && eta < T::one()) {
        return Err(Error::Precondition("need 0 < a, η < 1".into()));
    }
    if T::usize(r) * eta > T::one() - a {
        return Err(Error::Precondition(format!(
            "r·η = {} exceeds 1 − a = {}",
            (T::usize(r) * eta).to_f64_lossy(),
            (T::one() - a).to_f64_lossy()
        )));
    }
    if a_cell.measure() >= a {
        return Err(Error::Precondition("μ(A) ≥ a already".into()));
    }
    let cap = (T::usize(2 * r) / eta).ceil().to_usize().unwrap_or(usize::MAX);
    let mut cell = a_cell.clone();
    let mut steps = 0;
    while cell.measure() < a {
        if steps >= cap {
            return Err(Error::IterationCap { cap });
        }
        let k = (0..r)
            .find(|&k| {
                let face = &geom.boundary()[k];
                let missing: Vec<bool> = cell.mask(k).iter().map(|&b| !b).collect();
                face.measure(&missing) > eta
            })
            .ok_or_else(|| Error::LemmaViolation("no boundary face has deficit above η".into()))?;
        let face = &geom.boundary()[k];
        let missing: Vec<bool> = cell.mask(k).iter().map(|&b| !b).collect();
        let extra = carve_weights(face.weights(), &missing, eta, eta)?;
        let grown = cell.mask(k).iter().zip(&extra).map(|(&x, &y)| x || y).collect();
        cell = cell.with_mask(k, grown);
        steps += 1;
    }
    Ok(Enlargement { cell, steps, cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::HypergraphSystem;

    fn geom(n: usize, m: usize) -> Arc<EdgeGeometry<f64>> {
        let s = HypergraphSystem::<f64>::uniform(n, m, vec![(0..n).collect()]).unwrap();
        EdgeGeometry::new(s.edge_face(0))
    }

    #[test]
    fn split_full_cell() {
        let g = geom(2, 2);
        let out = split_cell(&BoxCell::full(g), 0.3).unwrap();
        assert_eq!(out.q.len(), 1);
        assert!(out.b.realize().iter().all(|&b| b));
        assert!(out.leftovers.is_empty());
    }

    #[test]
    fn split_hand_trace() {
        let g = geom(2, 2);
        let a = BoxCell::new(g.clone(), vec![vec![true, false], vec![true, false]]).unwrap();
        let out = split_cell(&a, 0.25).unwrap();
        assert_eq!(out.good, vec![0, 1]);
        assert_eq!(out.q.len(), 3);
        assert!(out.b.same_set(&a));
        let first_one = BoxCell::new(g.clone(), vec![vec![false, true], vec![true, true]]).unwrap();
        let zero_one = BoxCell::new(g.clone(), vec![vec![true, false], vec![false, true]]).unwrap();
        assert!(out.q.cells()[1].same_set(&first_one));
        assert!(out.q.cells()[2].same_set(&zero_one));
        assert!(out.leftovers.is_empty());
    }

    #[test]
    fn split_with_empty_good_set() {
        let g = geom(2, 10);
        let mut m = vec![true; 10];
        m[0] = false;
        let a = BoxCell::new(g.clone(), vec![m.clone(), m]).unwrap();
        let out = split_cell(&a, 0.2).unwrap();
        assert!(out.good.is_empty());
        assert_eq!(out.q.len(), 1);
        assert_eq!(out.leftovers.len(), 2);
        assert!(out.leftovers.iter().all(|c| c.measure() < 0.2));
    }

    #[test]
    fn split_rejects_small_a() {
        let g = geom(2, 2);
        assert!(split_cell(&BoxCell::empty(g), 0.25).is_err());
    }

    #[test]
    fn enlarge_grid_window() {
        let g = geom(2, 10);
        let mut col = vec![false; 10];
        col[0] = true;
        let a = BoxCell::new(g.clone(), vec![col, vec![true; 10]]).unwrap();
        let out = enlarge_box(&a, 0.35, 0.1).unwrap();
        let mu = out.cell.measure();
        assert!((0.35..0.55).contains(&mu), "{mu}");
        assert!(a.subset_of(&out.cell));
    }

    #[test]
    fn enlarge_step_bound() {
        let g = geom(2, 8);
        let eta = 0.125;
        let mut col = vec![false; 8];
        col[3] = true;
        let a = BoxCell::new(g.clone(), vec![col, vec![true; 8]]).unwrap();
        let out = enlarge_box(&a, 2.0 * eta, eta).unwrap();
        let mu = out.cell.measure();
        assert!(mu >= 2.0 * eta && mu < 4.0 * eta);
        assert!(out.steps <= out.cap);
        assert_eq!(out.cap, 32);
    }

    #[test]
    fn enlarge_rejects_large_a() {
        let g = geom(2, 10);
        assert!(enlarge_box(&BoxCell::full(g), 0.5, 0.1).is_err());
    }
}
