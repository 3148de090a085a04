use rayon::prelude::*;

use crate::contraction::DEFAULT_MAX_ENTRIES;
use crate::error::{Error, Result};
use crate::measure::HypergraphSystem;
use crate::norms::OracleMode;
use crate::scalar::Scalar;

/// Sets `F_e ∈ B_e` (atom masks on each edge face) with `∩F_e = ∅` obtained
/// by deleting `R_e ⊆ E_e` from each `E_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRemoval<T> {
    pub f_masks: Vec<Vec<bool>>,
    /// `R_e = E_e ∖ F_e`.
    pub removed: Vec<Vec<bool>>,
    /// `μ(E_e ∖ F_e)` per edge.
    pub removed_mass: Vec<T>,
    pub max_removed: T,
    /// `Exact` for the exhaustive search, `Greedy` for the fallback.
    pub mode: OracleMode,
    /// Points of `X` in `∩E_e` before removal.
    pub initial_points: usize,
    /// Candidate removal patterns examined.
    pub examined: u64,
}

/// For every point of `X`, its atom index on every edge face.
pub(crate) fn point_atoms<T: Scalar>(system: &HypergraphSystem<T>) -> Result<Vec<Vec<usize>>> {
    let full = system.full_face();
    if full.size() as u64 > DEFAULT_MAX_ENTRIES {
        return Err(Error::BudgetExceeded { needed: full.size() as f64, budget: DEFAULT_MAX_ENTRIES });
    }
    Ok((0..system.edges().len()).map(|e| full.projection(&system.edge_face(e))).collect())
}

/// Whether no point of `X` lies in every `F_e`, by enumeration of `X`.
pub fn intersection_is_empty<T: Scalar>(system: &HypergraphSystem<T>, masks: &[Vec<bool>]) -> Result<bool> {
    let proj = point_atoms(system)?;
    let points = proj.first().map_or(0, Vec::len);
    Ok((0..points).all(|x| proj.iter().zip(masks).any(|(p, m)| !m[p[x]])))
}

/// Finds `F_e ⊆ E_e` with empty intersection minimizing `max_e μ(E_e∖F_e)`.
///
/// Only atoms of `E_e` that carry a point of `∩E_e` are candidates. When the
/// number of candidate patterns is within `budget` the search is exhaustive
/// (the last edge's removal is forced, so only the others are enumerated);
/// otherwise atoms are deleted greedily by covered points per unit mass.
/// Either way the result must satisfy `max_e μ(E_e∖F_e) ≤ ε`.
pub fn dense_removal<T: Scalar>(system: &HypergraphSystem<T>, es: &[Vec<bool>], epsilon: T, budget: u64) -> Result<DenseRemoval<T>> {
    let m = system.edges().len();
    if es.len() != m {
        return Err(Error::Shape(format!("{} sets for {m} edges", es.len())));
    }
    let faces: Vec<_> = (0..m).map(|e| system.edge_face(e)).collect();
    for (e, mask) in es.iter().enumerate() {
        if mask.len() != faces[e].size() {
            return Err(Error::Shape(format!("set {e} has {} flags, face has {} atoms", mask.len(), faces[e].size())));
        }
    }
    let proj = point_atoms(system)?;
    let points = proj[0].len();
    let survivors: Vec<usize> = (0..points).filter(|&x| (0..m).all(|e| es[e][proj[e][x]])).collect();

    // Candidate atoms per edge, ascending.
    let mut cand: Vec<Vec<usize>> = vec![Vec::new(); m];
    for e in 0..m {
        let mut atoms: Vec<usize> = survivors.iter().map(|&x| proj[e][x]).collect();
        atoms.sort_unstable();
        atoms.dedup();
        cand[e] = atoms;
    }
    let weights: Vec<Vec<T>> = (0..m).map(|e| cand[e].iter().map(|&a| faces[e].weights()[a]).collect()).collect();
    // Each surviving point as its candidate position on every edge.
    let pts: Vec<Vec<usize>> = survivors
        .iter()
        .map(|&x| (0..m).map(|e| cand[e].binary_search(&proj[e][x]).expect("candidate")).collect())
        .collect();

    let enum_bits: usize = cand[..m - 1].iter().map(Vec::len).sum();
    let exhaustive = enum_bits < 63 && (1u64 << enum_bits) <= budget;
    let (chosen, mode, examined) = if survivors.is_empty() {
        (vec![Vec::new(); m], OracleMode::Exact, 1)
    } else if exhaustive {
        let (sel, n) = exhaustive_search(&weights, &pts);
        (sel, OracleMode::Exact, n)
    } else {
        let (sel, n) = greedy_search(&weights, &pts);
        (sel, OracleMode::Greedy, n)
    };

    let mut removed: Vec<Vec<bool>> = faces.iter().map(|f| vec![false; f.size()]).collect();
    for e in 0..m {
        for &k in &chosen[e] {
            removed[e][cand[e][k]] = true;
        }
    }
    let mut f_masks: Vec<Vec<bool>> = es
        .iter()
        .zip(&removed)
        .map(|(em, rm)| em.iter().zip(rm).map(|(&a, &r)| a && !r).collect())
        .collect();
    // An empty F_e already empties the intersection; the other edges may keep everything.
    if let Some(e0) = f_masks.iter().position(|f| !f.iter().any(|&b| b)) {
        for (e, f) in f_masks.iter_mut().enumerate() {
            if e != e0 {
                f.iter_mut().for_each(|b| *b = true);
            }
        }
    }
    let removed_mass: Vec<T> = (0..m)
        .map(|e| {
            let diff: Vec<bool> = es[e].iter().zip(&f_masks[e]).map(|(&a, &f)| a && !f).collect();
            faces[e].measure(&diff)
        })
        .collect();
    let max_removed = removed_mass.iter().copied().fold(T::zero(), T::max);
    if !intersection_is_empty(system, &f_masks)? {
        return Err(Error::NoCertifiedSolution(format!("{mode} search left a common point")));
    }
    if max_removed > epsilon + T::eps() {
        return Err(Error::NoCertifiedSolution(format!(
            "{mode} search needs to remove mass {} > ε = {} (edge {})",
            max_removed,
            epsilon,
            removed_mass.iter().position(|&r| r == max_removed).unwrap_or(0)
        )));
    }
    Ok(DenseRemoval {
        f_masks,
        removed,
        removed_mass,
        max_removed,
        mode,
        initial_points: survivors.len(),
        examined,
    })
}

fn mass_of<T: Scalar>(w: &[T], bits: u64) -> T {
    w.iter().enumerate().filter(|(k, _)| bits >> k & 1 == 1).fold(T::zero(), |acc, (_, &x)| acc + x)
}

fn unpack(bits: u64, len: usize) -> Vec<usize> {
    (0..len).filter(|k| bits >> k & 1 == 1).collect()
}

/// Best removal as `(max mass, per-edge bit patterns)`; ties go to the
/// lexicographically smallest pattern list.
type Best<T> = Option<(T, Vec<u64>)>;

fn better<T: Scalar>(cand: &(T, Vec<u64>), best: &Best<T>) -> bool {
    match best {
        None => true,
        Some((bm, bp)) => cand.0 < *bm || (cand.0 == *bm && cand.1 < *bp),
    }
}

fn exhaustive_search<T: Scalar>(weights: &[Vec<T>], pts: &[Vec<usize>]) -> (Vec<Vec<usize>>, u64) {
    let m = weights.len();
    let first = weights[0].len();
    if m == 1 {
        return (vec![(0..first).collect()], 1);
    }
    let (best, examined) = (0..(1u64 << first))
        .into_par_iter()
        .map(|bits0| {
            let alive: Vec<&Vec<usize>> = pts.iter().filter(|p| bits0 >> p[0] & 1 == 0).collect();
            let mut best: Best<T> = None;
            let mut examined = 0u64;
            let mut pattern = vec![0u64; m];
            pattern[0] = bits0;
            descend(weights, &alive, 1, mass_of(&weights[0], bits0), &mut pattern, &mut best, &mut examined);
            (best, examined)
        })
        .reduce(
            || (None, 0),
            |(a, na), (b, nb)| {
                let best = match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => Some(if better(&y, &Some(x.clone())) { y } else { x }),
                };
                (best, na + nb)
            },
        );
    let (_, pattern) = best.expect("removing every candidate always works");
    (pattern.iter().zip(weights).map(|(&b, w)| unpack(b, w.len())).collect(), examined)
}

fn descend<T: Scalar>(
    weights: &[Vec<T>],
    alive: &[&Vec<usize>],
    depth: usize,
    current: T,
    pattern: &mut Vec<u64>,
    best: &mut Best<T>,
    examined: &mut u64,
) {
    if let Some((bm, _)) = best {
        if current > *bm {
            return;
        }
    }
    let m = weights.len();
    if depth == m - 1 {
        // The last edge must remove exactly the atoms still carrying points.
        let forced = alive.iter().fold(0u64, |acc, p| acc | 1 << p[depth]);
        pattern[depth] = forced;
        *examined += 1;
        let cand = (current.max(mass_of(&weights[depth], forced)), pattern.clone());
        if better(&cand, best) {
            *best = Some(cand);
        }
        return;
    }
    for bits in 0..(1u64 << weights[depth].len()) {
        pattern[depth] = bits;
        let next: Vec<&Vec<usize>> = alive.iter().copied().filter(|p| bits >> p[depth] & 1 == 0).collect();
        let mass = current.max(mass_of(&weights[depth], bits));
        descend(weights, &next, depth + 1, mass, pattern, best, examined);
    }
    pattern[depth] = 0;
}

fn greedy_search<T: Scalar>(weights: &[Vec<T>], pts: &[Vec<usize>]) -> (Vec<Vec<usize>>, u64) {
    let m = weights.len();
    let mut chosen: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut alive: Vec<&Vec<usize>> = pts.iter().collect();
    let mut steps = 0u64;
    while !alive.is_empty() {
        steps += 1;
        let mut best: Option<(T, usize, usize)> = None;
        for e in 0..m {
            let mut counts = vec![0usize; weights[e].len()];
            for p in &alive {
                counts[p[e]] += 1;
            }
            for (k, &cnt) in counts.iter().enumerate() {
                if cnt == 0 {
                    continue;
                }
                let score = if weights[e][k] > T::zero() { T::usize(cnt) / weights[e][k] } else { T::infinity() };
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, e, k));
                }
            }
        }
        let (_, e, k) = best.expect("alive points have atoms");
        chosen[e].push(k);
        alive.retain(|p| p[e] != k);
    }
    for c in &mut chosen {
        c.sort_unstable();
    }
    (chosen, steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system() -> HypergraphSystem<f64> {
        HypergraphSystem::simplex(2, 2).unwrap()
    }

    #[test]
    fn empty_edge_set() {
        let s = system();
        let es = vec![vec![true; 4], vec![false; 4], vec![true, false, true, false]];
        let r = dense_removal(&s, &es, 0.0, 1 << 20).unwrap();
        assert_eq!(r.max_removed, 0.0);
        assert_eq!(r.f_masks[1], vec![false; 4]);
        assert_eq!(r.f_masks[0], vec![true; 4]);
        assert_eq!(r.f_masks[2], vec![true; 4]);
    }

    #[test]
    fn already_disjoint() {
        let s = system();
        // Edges {0,1},{0,2},{1,2}: x0 = x1, x0 = x2 and x1 ≠ x2 never hold together.
        let eq = vec![true, false, false, true];
        let ne = vec![false, true, true, false];
        let es = vec![eq.clone(), eq, ne];
        let r = dense_removal(&s, &es, 0.0, 1 << 20).unwrap();
        assert_eq!(r.initial_points, 0);
        assert_eq!(r.f_masks, es);
    }

    #[test]
    fn single_survivor_costs_one_atom() {
        let s = system();
        // Only (0,0,0) lies in all three sets.
        let es = vec![vec![true, true, false, false], vec![true, false, false, false], vec![true, false, false, true]];
        for budget in [1 << 20, 1] {
            let r = dense_removal(&s, &es, 0.25, budget).unwrap();
            assert_eq!(r.initial_points, 1);
            assert_eq!(r.max_removed, 0.25);
            assert_eq!(r.removed.iter().flatten().filter(|&&b| b).count(), 1);
            assert!(intersection_is_empty(&s, &r.f_masks).unwrap());
        }
        assert!(matches!(dense_removal(&s, &es, 0.2, 1 << 20), Err(Error::NoCertifiedSolution(_))));
    }

    #[test]
    fn complete_triangle_needs_a_third() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let es: Vec<Vec<bool>> = (0..3).map(|_| vec![true; 9]).collect();
        let r = dense_removal(&s, &es, 1.0, 1 << 20).unwrap();
        assert_eq!(r.mode, OracleMode::Exact);
        // Every point must be hit; removing one edge entirely costs 1, splitting
        // the work cannot do better than a third on some edge.
        assert!(r.max_removed >= 1.0 / 3.0 - 1e-12);
        assert!(intersection_is_empty(&s, &r.f_masks).unwrap());
    }
}
