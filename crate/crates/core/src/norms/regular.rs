//! `(C,η,p)`-regularity: the sound Hölder-type certificate and the partition
//! scan that can only falsify.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{split_within, BoxCell, BoxPartition, EdgeGeometry};
use crate::measure::EdgeFunction;
use crate::norms::cut::OracleMode;
use crate::norms::enumerate::{best_over_combos, check_budget, Layout};
use crate::params::conjugate;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    Holder,
    Scan,
}

#[derive(Debug, Clone)]
pub enum RegularityViolation<T> {
    /// A cell breaking `(∫_A f)^q ≤ C^q(μ(A) + (r+3)η)`.
    Cell { cell: BoxCell<T>, lhs: T, rhs: T },
    /// A partition with `ι ≥ η` and `‖E(f|P)‖_p > C`.
    Partition { partition: BoxPartition<T>, norm: T },
}

#[derive(Debug, Clone)]
pub enum RegularityOutcome<T> {
    Pass { constant: T },
    Violation(RegularityViolation<T>),
}

#[derive(Debug, Clone)]
pub struct RegularityCertificate<T> {
    pub kind: CertificateKind,
    pub outcome: RegularityOutcome<T>,
    pub eta: T,
    pub p: T,
    /// Cells or partitions examined.
    pub checked: u64,
    /// Largest left side minus right side observed (≤ 0 on a clean pass).
    pub worst_excess: T,
    /// `Exact` for the Hölder certificate; `Sampled` for a scan, whose pass is evidence only.
    pub mode: OracleMode,
}

impl<T: Scalar> RegularityCertificate<T> {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, RegularityOutcome::Pass { .. })
    }

    pub fn constant(&self) -> Option<T> {
        match self.outcome {
            RegularityOutcome::Pass { constant } => Some(constant),
            RegularityOutcome::Violation(_) => None,
        }
    }
}

/// Result of checking the Hölder-type condition on every cell of `S_∂e`.
#[derive(Debug, Clone)]
pub struct HolderCheck<T> {
    pub holds: bool,
    /// `max_A (∫_A f)^q − C^q(μ(A) + (r+3)η)`.
    pub worst_excess: T,
    pub witness: BoxCell<T>,
    pub lhs: T,
    pub rhs: T,
    pub cells: f64,
}

/// The constant `K = C(r+4)^{1/q} η^{−1/p}` (`C(r+4)` at `p = ∞`).
pub fn holder_constant<T: Scalar>(c: T, r: usize, eta: T, p: T) -> T {
    let r4 = T::usize(r + 4);
    if p.is_infinite() {
        c * r4
    } else {
        let q = conjugate(p);
        c * r4.powf(T::one() / q) * eta.powf(-T::one() / p)
    }
}

/// Checks `(∫_A f)^q ≤ C^q(μ(A) + (r+3)η)` for all `A ∈ S_∂e` without the
/// hypotheses under which it implies regularity.
///
/// For fixed outer faces the left side minus the right side is a convex
/// function of `(∫_A f, μ(A))`, and these pairs range over a zonotope whose
/// vertices are prefixes or suffixes of the last-face atoms sorted by density.
pub fn holder_check<T: Scalar>(f: &EdgeFunction<T>, c: T, eta: T, p: T, budget: u64) -> Result<HolderCheck<T>> {
    f.require_nonnegative()?;
    if f.face().arity() < 2 {
        return Err(Error::FaceMismatch("need a face with at least two coordinates".into()));
    }
    let geom = EdgeGeometry::new(f.face().clone());
    check_budget(&geom, budget)?;
    let q = conjugate(p);
    let r = geom.r();
    let cq = c.powf(q);
    let slack = T::usize(r + 3) * eta;
    let g = |s: T, m: T| s.powf(q) - cq * (m + slack);
    let layout = Layout::new(&geom);
    let weighted: Vec<T> = f.values().iter().zip(f.face().weights()).map(|(&v, &w)| v * w).collect();
    let weights = f.face().weights().to_vec();
    let ls = layout.last_size();
    let (combo, (order, cut)) = best_over_combos(&layout, |combo, s| {
        layout.partial_sums(combo, &weighted, s);
        let mut m = vec![T::zero(); ls];
        layout.partial_sums(combo, &weights, &mut m);
        let order = density_order(s, &m);
        let (value, cut) = sweep(&order, s, &m, &g);
        Some((value, (order, cut)))
    });
    let mut last = vec![false; ls];
    match cut {
        Cut::Prefix(k) => order[..k].iter().for_each(|&y| last[y] = true),
        Cut::Suffix(k) => order[order.len() - k..].iter().for_each(|&y| last[y] = true),
    }
    let witness = layout.cell(combo, last, &geom);
    let lhs = f.integrate(Some(&witness))?.powf(q);
    let rhs = cq * (witness.measure() + slack);
    Ok(HolderCheck {
        holds: lhs - rhs <= T::tol(),
        worst_excess: lhs - rhs,
        witness,
        lhs,
        rhs,
        cells: crate::norms::enumerate::cell_count(&geom),
    })
}

#[derive(Debug, Clone, Copy)]
enum Cut {
    Prefix(usize),
    Suffix(usize),
}

fn density_order<T: Scalar>(s: &[T], m: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| {
        let lhs = s[a] * m[b];
        let rhs = s[b] * m[a];
        rhs.partial_cmp(&lhs).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    order
}

fn sweep<T: Scalar>(order: &[usize], s: &[T], m: &[T], g: &impl Fn(T, T) -> T) -> (T, Cut) {
    let mut best = (g(T::zero(), T::zero()), Cut::Prefix(0));
    let (mut ps, mut pm) = (T::zero(), T::zero());
    for (k, &y) in order.iter().enumerate() {
        ps = ps + s[y];
        pm = pm + m[y];
        let v = g(ps, pm);
        if v > best.0 {
            best = (v, Cut::Prefix(k + 1));
        }
    }
    let (mut ss, mut sm) = (T::zero(), T::zero());
    for (k, &y) in order.iter().rev().enumerate() {
        ss = ss + s[y];
        sm = sm + m[y];
        let v = g(ss, sm);
        if v > best.0 {
            best = (v, Cut::Suffix(k + 1));
        }
    }
    best
}

/// Sound certificate: if every `A ∈ S_∂e` satisfies the Hölder-type bound with
/// constant `C`, then `f` is `(K,η,p)`-regular with `K` from [`holder_constant`].
///
/// Requires `f ≥ 0`, `η ≤ 1/(r+1)` and every atom of the face's coordinate
/// spaces to have probability at most `η`.
pub fn holder_certificate<T: Scalar>(
    f: &EdgeFunction<T>,
    c: T,
    eta: T,
    p: T,
    budget: u64,
) -> Result<RegularityCertificate<T>> {
    let r = f.face().arity();
    if !(eta > T::zero() && eta <= T::one() / T::usize(r + 1)) {
        return Err(Error::Precondition(format!(
            "η = {} must lie in (0, 1/(r+1)]",
            eta.to_f64_lossy()
        )));
    }
    let atom = f.face().coord_atom_bound();
    if atom > eta {
        return Err(Error::Precondition(format!(
            "atom of probability {} exceeds η = {}",
            atom.to_f64_lossy(),
            eta.to_f64_lossy()
        )));
    }
    let check = holder_check(f, c, eta, p, budget)?;
    let outcome = if check.holds {
        RegularityOutcome::Pass { constant: holder_constant(c, r, eta, p) }
    } else {
        RegularityOutcome::Violation(RegularityViolation::Cell {
            cell: check.witness.clone(),
            lhs: check.lhs,
            rhs: check.rhs,
        })
    };
    Ok(RegularityCertificate {
        kind: CertificateKind::Holder,
        outcome,
        eta,
        p,
        checked: check.cells as u64,
        worst_excess: check.worst_excess,
        mode: OracleMode::Exact,
    })
}

/// Groups the atoms of boundary face `k` in the given order into consecutive
/// blocks of measure at least `eta`; a light tail joins the previous block.
fn face_blocks<T: Scalar>(geom: &Arc<EdgeGeometry<T>>, k: usize, order: &[usize], eta: T) -> Option<BoxPartition<T>> {
    let face = &geom.boundary()[k];
    let w = face.weights();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    let mut mass = T::zero();
    for &y in order {
        current.push(y);
        mass = mass + w[y];
        if mass >= eta {
            blocks.push(std::mem::take(&mut current));
            mass = T::zero();
        }
    }
    if !current.is_empty() {
        match blocks.last_mut() {
            Some(last) => last.extend(current),
            None => blocks.push(current),
        }
    }
    let cells = blocks
        .into_iter()
        .map(|b| {
            let mut mask = vec![false; face.size()];
            b.into_iter().for_each(|y| mask[y] = true);
            BoxCell::full(Arc::clone(geom)).with_mask(k, mask)
        })
        .collect();
    BoxPartition::new(Arc::clone(geom), cells).ok()
}

/// Product of one labelling per boundary face; empty cells are dropped.
fn product_partition<T: Scalar>(geom: &Arc<EdgeGeometry<T>>, labels: &[Vec<usize>]) -> Option<BoxPartition<T>> {
    let proj = geom.projections();
    let mut keys: Vec<Vec<usize>> = (0..geom.face().size())
        .map(|x| labels.iter().zip(proj).map(|(l, p)| l[p[x]]).collect())
        .collect();
    keys.sort();
    keys.dedup();
    let cells = keys
        .into_iter()
        .map(|key| {
            let masks = labels.iter().zip(&key).map(|(l, &b)| l.iter().map(|&v| v == b).collect()).collect();
            BoxCell::new(Arc::clone(geom), masks).expect("shapes match")
        })
        .collect();
    BoxPartition::new(Arc::clone(geom), cells).ok()
}

fn face_marginal_order<T: Scalar>(geom: &EdgeGeometry<T>, f: &EdgeFunction<T>, k: usize) -> Vec<usize> {
    let size = geom.boundary()[k].size();
    let mut num = vec![T::zero(); size];
    let mut den = vec![T::zero(); size];
    for (x, (&v, &w)) in f.values().iter().zip(f.face().weights()).enumerate() {
        let y = geom.projections()[k][x];
        num[y] = num[y] + v * w;
        den[y] = den[y] + w;
    }
    let avg: Vec<T> = num.iter().zip(&den).map(|(&n, &d)| if d > T::zero() { n / d } else { T::zero() }).collect();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| avg[b].partial_cmp(&avg[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

fn random_product<T: Scalar>(geom: &Arc<EdgeGeometry<T>>, eta: T, rng: &mut ChaCha8Rng) -> Option<BoxPartition<T>> {
    for _ in 0..16 {
        let labels: Vec<Vec<usize>> = geom
            .boundary()
            .iter()
            .map(|b| {
                let blocks = rng.gen_range(1..=4usize);
                (0..b.size()).map(|_| rng.gen_range(0..blocks)).collect()
            })
            .collect();
        if let Some(p) = product_partition(geom, &labels) {
            if p.iota() >= eta {
                return Some(p);
            }
        }
    }
    None
}

fn random_splits<T: Scalar>(geom: &Arc<EdgeGeometry<T>>, eta: T, rng: &mut ChaCha8Rng) -> Option<BoxPartition<T>> {
    let mut cells = vec![BoxCell::full(Arc::clone(geom))];
    let steps = rng.gen_range(1..=4usize);
    for _ in 0..steps {
        let i = rng.gen_range(0..cells.len());
        let universe = cells[i].clone();
        let mu = universe.measure();
        let theta = eta / mu;
        if theta >= T::one() {
            continue;
        }
        let masks = geom
            .boundary()
            .iter()
            .map(|b| (0..b.size()).map(|_| rng.gen_bool(0.6)).collect())
            .collect();
        let a = BoxCell::new(Arc::clone(geom), masks).expect("shapes match");
        if let Ok(local) = split_within(&universe, &a, theta) {
            cells.splice(i..=i, local.cells);
        }
    }
    BoxPartition::new(Arc::clone(geom), cells).ok().filter(|p| p.iota() >= eta)
}

/// Scans `‖E(f|A_P)‖_{L_p} ≤ C` over a deterministic battery of box partitions
/// with `ι(P) ≥ η` plus `trials` random ones. A pass is evidence, not proof.
pub fn regularity_scan<T: Scalar>(
    f: &EdgeFunction<T>,
    c: T,
    eta: T,
    p: T,
    trials: usize,
    seed: u64,
) -> Result<RegularityCertificate<T>> {
    f.require_nonnegative()?;
    if f.face().arity() < 2 {
        return Err(Error::FaceMismatch("need a face with at least two coordinates".into()));
    }
    let geom = EdgeGeometry::new(f.face().clone());
    let r = geom.r();
    let mut battery = vec![BoxPartition::trivial(Arc::clone(&geom))];
    let mut index_blocks = Vec::with_capacity(r);
    for k in 0..r {
        let natural: Vec<usize> = (0..geom.boundary()[k].size()).collect();
        if let Some(part) = face_blocks(&geom, k, &natural, eta) {
            index_blocks.push(part.clone());
            battery.push(part);
        }
        if let Some(part) = face_blocks(&geom, k, &face_marginal_order(&geom, f, k), eta) {
            battery.push(part);
        }
    }
    if let Some(first) = index_blocks.first() {
        let mut joint = first.clone();
        for part in &index_blocks[1..] {
            joint = crate::geometry::common_refinement(&joint, part)?;
        }
        battery.push(joint);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let part = if t % 2 == 0 {
            random_product(&geom, eta, &mut rng)
        } else {
            random_splits(&geom, eta, &mut rng)
        };
        battery.extend(part);
    }
    let mut worst = T::neg_infinity();
    let mut first_violation: Option<(usize, T)> = None;
    let mut checked = 0u64;
    for (i, part) in battery.iter().enumerate() {
        if part.iota() < eta {
            continue;
        }
        checked += 1;
        let norm = f.cond_exp(part)?.lp_norm(p)?;
        worst = worst.max(norm);
        if first_violation.is_none() && norm > c + T::tol() {
            first_violation = Some((i, norm));
        }
    }
    let outcome = match first_violation {
        None => RegularityOutcome::Pass { constant: c },
        Some((i, norm)) => {
            RegularityOutcome::Violation(RegularityViolation::Partition { partition: battery[i].clone(), norm })
        }
    };
    let norm = worst;
    Ok(RegularityCertificate {
        kind: CertificateKind::Scan,
        outcome,
        eta,
        p,
        checked,
        worst_excess: norm - c,
        mode: OracleMode::Sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::HypergraphSystem;

    fn system(m: usize) -> HypergraphSystem<f64> {
        HypergraphSystem::uniform(2, m, vec![vec![0, 1]]).unwrap()
    }

    #[test]
    fn constant_passes_holder() {
        let s = system(4);
        let f = EdgeFunction::constant(s.edge_face(0), 1.0);
        for p in [2.0, f64::INFINITY] {
            let cert = holder_certificate(&f, 1.0, 0.25, p, 1 << 20).unwrap();
            assert!(cert.passed());
            if p.is_infinite() {
                assert_eq!(cert.constant(), Some(6.0));
            }
        }
    }

    #[test]
    fn spike_is_caught() {
        let s = system(4);
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| if x == [1, 2] { 160.0 } else { 0.0 }).unwrap();
        let cert = holder_certificate(&f, 1.0, 0.25, 2.0, 1 << 20).unwrap();
        match cert.outcome {
            RegularityOutcome::Violation(RegularityViolation::Cell { cell, lhs, rhs }) => {
                assert!(lhs > rhs);
                assert!(cell.realize()[s.edge_face(0).flatten(&[1, 2])]);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn holder_preconditions() {
        let s = system(2);
        let f = EdgeFunction::constant(s.edge_face(0), 1.0);
        assert!(holder_certificate(&f, 1.0, 0.3, 2.0, 1 << 20).is_err());
    }

    #[test]
    fn sweep_matches_brute_force() {
        let s = system(3);
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| ((x[0] * 7 + x[1] * 3) % 5) as f64).unwrap();
        let check = holder_check(&f, 1.2, 0.05, 1.7, 1 << 20).unwrap();
        let geom = EdgeGeometry::new(s.edge_face(0));
        let q = conjugate(1.7);
        let mut best = f64::NEG_INFINITY;
        for a in 0..8u32 {
            for b in 0..8u32 {
                let cell = BoxCell::new(
                    geom.clone(),
                    vec![(0..3).map(|i| a >> i & 1 == 1).collect(), (0..3).map(|i| b >> i & 1 == 1).collect()],
                )
                .unwrap();
                let v = f.integrate(Some(&cell)).unwrap().powf(q) - 1.2f64.powf(q) * (cell.measure() + 5.0 * 0.05);
                best = best.max(v);
            }
        }
        assert!((check.worst_excess - best).abs() < 1e-12);
    }

    #[test]
    fn scan_examples() {
        let s = system(4);
        let c = EdgeFunction::constant(s.edge_face(0), 0.8);
        assert!(regularity_scan(&c, 1.0, 0.1, 2.0, 20, 1).unwrap().passed());
        let heavy = EdgeFunction::constant(s.edge_face(0), 1.5);
        let cert = regularity_scan(&heavy, 1.0, 0.1, 2.0, 5, 1).unwrap();
        match cert.outcome {
            RegularityOutcome::Violation(RegularityViolation::Partition { partition, .. }) => {
                assert!(partition.len() >= 1)
            }
            _ => panic!("expected a violation"),
        }
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| (x[0] * x[1]) as f64).unwrap();
        let bound = f.lp_norm(2.0).unwrap();
        assert!(regularity_scan(&f, bound, 0.1, 2.0, 50, 3).unwrap().passed());
    }
}
