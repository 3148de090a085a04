//! Enumeration of `S_∂e` by all subsets of the first `r − 1` boundary faces;
//! callers close the last face analytically from its partial sums.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoxCell, EdgeGeometry};
use crate::scalar::Scalar;

const CHUNK: u64 = 1 << 12;

/// Number of cells `∏_{e'∈∂e} 2^{|X_{e'}|}`, as a float to survive overflow.
pub fn cell_count<T: Scalar>(geom: &EdgeGeometry<T>) -> f64 {
    2f64.powi(geom.mask_bits() as i32)
}

pub(crate) fn check_budget<T: Scalar>(geom: &EdgeGeometry<T>, budget: u64) -> Result<()> {
    let needed = cell_count(geom);
    if needed > budget as f64 {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// Precomputed layout for one edge.
pub(crate) struct Layout<'g, T> {
    geom: &'g EdgeGeometry<T>,
    /// Bit offset of each outer face inside a combo index.
    offsets: Vec<usize>,
    outer_bits: usize,
    last_size: usize,
}

impl<'g, T: Scalar> Layout<'g, T> {
    pub fn new(geom: &'g EdgeGeometry<T>) -> Self {
        let r = geom.r();
        let mut offsets = Vec::with_capacity(r - 1);
        let mut acc = 0;
        for face in &geom.boundary()[..r - 1] {
            offsets.push(acc);
            acc += face.size();
        }
        Self { geom, offsets, outer_bits: acc, last_size: geom.boundary()[r - 1].size() }
    }

    pub fn combos(&self) -> u64 {
        1u64 << self.outer_bits
    }

    pub fn last_size(&self) -> usize {
        self.last_size
    }

    #[inline]
    fn outer_contains(&self, combo: u64, x: usize) -> bool {
        let proj = self.geom.projections();
        self.offsets
            .iter()
            .zip(proj)
            .all(|(&off, p)| (combo >> (off + p[x])) & 1 == 1)
    }

    /// Partial sums over the last face: `out[y] += Σ_{x ↦ y, x inside outer} a(x)`.
    pub fn partial_sums(&self, combo: u64, a: &[T], out: &mut [T]) {
        let last = &self.geom.projections()[self.geom.r() - 1];
        out.iter_mut().for_each(|v| *v = T::zero());
        for (x, &ax) in a.iter().enumerate() {
            if self.outer_contains(combo, x) {
                out[last[x]] = out[last[x]] + ax;
            }
        }
    }

    /// The cell with the given outer combo and last-face mask.
    pub fn cell(&self, combo: u64, last: Vec<bool>, geom: &std::sync::Arc<EdgeGeometry<T>>) -> BoxCell<T> {
        let mut masks: Vec<Vec<bool>> = self
            .offsets
            .iter()
            .zip(self.geom.boundary())
            .map(|(&off, face)| (0..face.size()).map(|j| (combo >> (off + j)) & 1 == 1).collect())
            .collect();
        masks.push(last);
        BoxCell::new(std::sync::Arc::clone(geom), masks).expect("layout matches geometry")
    }
}

/// Runs `eval` on every outer combo in parallel and keeps the best candidate.
/// Ties go to the smaller combo, so the result does not depend on scheduling.
pub(crate) fn best_over_combos<T, C, F>(layout: &Layout<'_, T>, eval: F) -> (u64, C)
where
    T: Scalar,
    C: Send + Clone,
    F: Fn(u64, &mut Vec<T>) -> Option<(T, C)> + Sync,
{
    let combos = layout.combos();
    let chunks = combos.div_ceil(CHUNK);
    let per_chunk: Vec<Option<(T, u64, C)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut scratch = vec![T::zero(); layout.last_size()];
            let mut best: Option<(T, u64, C)> = None;
            let end = ((chunk + 1) * CHUNK).min(combos);
            for combo in chunk * CHUNK..end {
                if let Some((v, c)) = eval(combo, &mut scratch) {
                    if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                        best = Some((v, combo, c));
                    }
                }
            }
            best
        })
        .collect();
    let mut best: Option<(T, u64, C)> = None;
    for cand in per_chunk.into_iter().flatten() {
        if best.as_ref().is_none_or(|(bv, _, _)| cand.0 > *bv) {
            best = Some(cand);
        }
    }
    let (_, combo, c) = best.expect("at least one combo evaluated");
    (combo, c)
}
