use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{BoxCell, EdgeGeometry};
use crate::measure::EdgeFunction;
use crate::norms::enumerate::{best_over_combos, check_budget, Layout};
use crate::scalar::Scalar;

/// Which oracle produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleMode {
    /// Exhaustive: the value is the true optimum.
    Exact,
    /// Local search: the value is a lower bound for a supremum.
    Greedy,
    /// Randomly sampled: evidence over part of the search space.
    Sampled,
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMode::Exact => "exact",
            OracleMode::Greedy => "greedy",
            OracleMode::Sampled => "sampled",
        })
    }
}

/// Default number of random restarts for the greedy oracle.
pub const GREEDY_RESTARTS: usize = 8;

/// Default exact-enumeration budget (number of cells).
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// `‖f‖_{S_∂e}` together with a cell attaining it.
#[derive(Debug, Clone)]
pub struct CutWitness<T> {
    pub value: T,
    pub cell: BoxCell<T>,
    pub mode: OracleMode,
}

fn geometry_of<T: Scalar>(f: &EdgeFunction<T>) -> Result<Arc<EdgeGeometry<T>>> {
    if f.face().arity() < 2 {
        return Err(Error::FaceMismatch("cut norm needs a face with at least two coordinates".into()));
    }
    Ok(EdgeGeometry::new(f.face().clone()))
}

/// Cut norm of `f`. `mode` must be [`OracleMode::Exact`] or [`OracleMode::Greedy`].
pub fn cut_norm<T: Scalar>(f: &EdgeFunction<T>, mode: OracleMode, seed: u64, budget: u64) -> Result<CutWitness<T>> {
    let geom = geometry_of(f)?;
    cut_norm_on(&geom, f, mode, seed, budget)
}

/// Exact when `2^{Σ|X_{e'}|} ≤ budget`, greedy otherwise.
pub fn cut_norm_auto<T: Scalar>(f: &EdgeFunction<T>, seed: u64, budget: u64) -> Result<CutWitness<T>> {
    let geom = geometry_of(f)?;
    let mode = if check_budget(&geom, budget).is_ok() { OracleMode::Exact } else { OracleMode::Greedy };
    cut_norm_on(&geom, f, mode, seed, budget)
}

pub(crate) fn cut_norm_on<T: Scalar>(
    geom: &Arc<EdgeGeometry<T>>,
    f: &EdgeFunction<T>,
    mode: OracleMode,
    seed: u64,
    budget: u64,
) -> Result<CutWitness<T>> {
    if !geom.face().same_as(f.face()) {
        return Err(Error::FaceMismatch("geometry and function differ".into()));
    }
    let cell = match mode {
        OracleMode::Exact => {
            check_budget(geom, budget)?;
            exact_cell(geom, f)
        }
        OracleMode::Greedy => greedy_cell(geom, f, seed, GREEDY_RESTARTS),
        OracleMode::Sampled => return Err(Error::Unsupported("sampled cut norm".into())),
    };
    let value = f.integrate(Some(&cell))?.abs();
    Ok(CutWitness { value, cell, mode })
}

fn exact_cell<T: Scalar>(geom: &Arc<EdgeGeometry<T>>, f: &EdgeFunction<T>) -> BoxCell<T> {
    let layout = Layout::new(geom);
    let weighted: Vec<T> = f.values().iter().zip(f.face().weights()).map(|(&v, &w)| v * w).collect();
    let (combo, positive) = best_over_combos(&layout, |combo, s| {
        layout.partial_sums(combo, &weighted, s);
        let pos = s.iter().filter(|&&v| v > T::zero()).fold(T::zero(), |a, &b| a + b);
        let neg = s.iter().filter(|&&v| v < T::zero()).fold(T::zero(), |a, &b| a - b);
        if pos >= neg {
            Some((pos, true))
        } else {
            Some((neg, false))
        }
    });
    let mut s = vec![T::zero(); layout.last_size()];
    layout.partial_sums(combo, &weighted, &mut s);
    let last = s
        .iter()
        .map(|&v| if positive { v > T::zero() } else { v < T::zero() })
        .collect();
    layout.cell(combo, last, geom)
}

/// Coordinate ascent over faces: each face's mask is set to the atoms with
/// positive (signed) partial sum given the other faces.
pub(crate) fn greedy_cell<T: Scalar>(
    geom: &Arc<EdgeGeometry<T>>,
    f: &EdgeFunction<T>,
    seed: u64,
    restarts: usize,
) -> BoxCell<T> {
    let weighted: Vec<T> = f.values().iter().zip(f.face().weights()).map(|(&v, &w)| v * w).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![BoxCell::full(Arc::clone(geom))];
    for _ in 0..restarts {
        let masks = geom
            .boundary()
            .iter()
            .map(|b| (0..b.size()).map(|_| rng.gen_bool(0.5)).collect())
            .collect();
        starts.push(BoxCell::new(Arc::clone(geom), masks).expect("shapes match"));
    }
    let mut best: Option<(T, BoxCell<T>)> = None;
    for start in starts {
        for sign in [T::one(), -T::one()] {
            let (v, cell) = ascend(geom, &weighted, start.clone(), sign);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, cell));
            }
        }
    }
    best.expect("at least one start").1
}

fn signed_integral<T: Scalar>(cell: &BoxCell<T>, weighted: &[T], sign: T) -> T {
    let inside = cell.realize();
    sign * weighted
        .iter()
        .zip(&inside)
        .filter(|(_, &b)| b)
        .fold(T::zero(), |a, (&v, _)| a + v)
}

fn ascend<T: Scalar>(geom: &EdgeGeometry<T>, weighted: &[T], mut cell: BoxCell<T>, sign: T) -> (T, BoxCell<T>) {
    let mut current = signed_integral(&cell, weighted, sign);
    let threshold = T::lit(1e-12);
    loop {
        let before = current;
        for k in 0..geom.r() {
            let proj = geom.projections();
            let mut sums = vec![T::zero(); geom.boundary()[k].size()];
            for (x, &v) in weighted.iter().enumerate() {
                let others = cell
                    .masks()
                    .iter()
                    .zip(proj)
                    .enumerate()
                    .all(|(j, (m, p))| j == k || m[p[x]]);
                if others {
                    sums[proj[k][x]] = sums[proj[k][x]] + sign * v;
                }
            }
            let mask: Vec<bool> = sums.iter().map(|&s| s > T::zero()).collect();
            let candidate = cell.with_mask(k, mask);
            let value = signed_integral(&candidate, weighted, sign);
            if value > current {
                current = value;
                cell = candidate;
            }
        }
        if current - before <= threshold {
            break;
        }
    }
    (current, cell)
}
