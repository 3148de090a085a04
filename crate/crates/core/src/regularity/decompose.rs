use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoxPartition, EdgeGeometry};
use crate::measure::{EdgeFunction, HypergraphSystem};
use crate::norms::{cut_norm_auto, OracleMode, DEFAULT_BUDGET};
use crate::params::{ceil_robust, p_dagger, stage_count};
use crate::regularity::growth::GrowthFunction;
use crate::regularity::refine::{energy_loop, Branch, EnergyOutcome, RefineParams};
use crate::scalar::Scalar;

/// Limits for [`decompose`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeCaps {
    /// Maximum number of promotions; `None` uses `L = ⌈C²(p†−1)^{−1}σ^{−2}n^r⌉`.
    pub max_stages: Option<u64>,
    /// Exact cut-norm budget (cells) per oracle call.
    pub budget: u64,
    pub seed: u64,
}

impl Default for DecomposeCaps {
    fn default() -> Self {
        Self { max_stages: None, budget: DEFAULT_BUDGET, seed: 0 }
    }
}

/// Achieved values of the three norm bounds for one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Achieved<T> {
    /// `‖f_str‖_{L_p}`.
    pub str_norm_lp: T,
    /// `‖f_err‖_{L_{p†}}`.
    pub err_norm: T,
    /// `‖f_unf‖_{S_∂e}` as reported by `unf_mode`.
    pub unf_cut: T,
    pub unf_mode: OracleMode,
    /// `1/F(M)`.
    pub one_over_fm: T,
}

#[derive(Debug, Clone)]
pub struct EdgeDecomposition<T> {
    pub p: BoxPartition<T>,
    pub q: BoxPartition<T>,
    pub f_str: EdgeFunction<T>,
    pub f_err: EdgeFunction<T>,
    pub f_unf: EdgeFunction<T>,
    pub achieved: Achieved<T>,
}

#[derive(Debug, Clone)]
pub struct Decomposition<T> {
    pub edges: Vec<EdgeDecomposition<T>>,
    /// `M = ⌈1 / min_e ι(P_e)⌉`.
    pub m: u64,
    pub c: T,
    pub p: T,
    pub sigma: T,
    pub growth: GrowthFunction,
    /// Number of promotions performed.
    pub stages: u64,
    pub stage_cap: u64,
    /// Whether every edge reached the settled branch within the caps.
    pub certified: bool,
    /// Why certification failed, if it did.
    pub failure: Option<String>,
}

impl<T: Scalar> Decomposition<T> {
    /// Whether every edge meets `‖f_str‖_p ≤ C`, `‖f_err‖_{p†} ≤ σ` and
    /// `‖f_unf‖_{S_∂e} ≤ 1/F(M)` within `tol`.
    pub fn bounds_hold(&self, tol: T) -> bool {
        self.edges.iter().all(|e| {
            let a = &e.achieved;
            a.str_norm_lp <= self.c + tol && a.err_norm <= self.sigma + tol && a.unf_cut <= a.one_over_fm + tol
        })
    }
}

fn edge_seed(seed: u64, edge: usize) -> u64 {
    seed ^ (edge as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Adaptive regularity decomposition: keeps `(P_e, Q_e)` per edge, tests every
/// edge against `δ = 1/F(M)` and promotes `P_e ← Q_e` on the first edge (in
/// edge order) whose conditional expectation jumps by more than `σ`.
pub fn decompose<T: Scalar>(
    system: &HypergraphSystem<T>,
    fs: &[EdgeFunction<T>],
    growth: &GrowthFunction,
    c: T,
    p: T,
    sigma: T,
    caps: DecomposeCaps,
) -> Result<Decomposition<T>> {
    if fs.len() != system.edges().len() {
        return Err(Error::Shape(format!("{} functions for {} edges", fs.len(), system.edges().len())));
    }
    for (i, f) in fs.iter().enumerate() {
        if !f.face().same_as(&system.edge_face(i)) {
            return Err(Error::FaceMismatch(format!("function {i} does not live on edge {:?}", system.edges()[i])));
        }
        f.require_nonnegative()?;
    }
    if !(sigma > T::zero() && sigma <= T::one()) {
        return Err(Error::Precondition(format!("σ = {} must lie in (0,1]", sigma.to_f64_lossy())));
    }
    if !(c > T::zero() && c.is_finite()) {
        return Err(Error::Precondition(format!("C = {} must be positive", c.to_f64_lossy())));
    }
    if !(p > T::one()) {
        return Err(Error::InvalidExponent(p.to_f64_lossy()));
    }
    let stage_cap = caps.max_stages.unwrap_or_else(|| {
        stage_count(c.to_f64_lossy(), p.to_f64_lossy(), sigma.to_f64_lossy(), system.n(), system.r())
    });
    let eta = system.atom_bound();
    let params: Vec<RefineParams<T>> = (0..fs.len())
        .map(|i| RefineParams { c, p, eta, seed: edge_seed(caps.seed, i), budget: caps.budget })
        .collect();

    let mut ps: Vec<BoxPartition<T>> =
        (0..fs.len()).map(|i| BoxPartition::trivial(EdgeGeometry::new(system.edge_face(i)))).collect();
    // Settled outcomes stay valid while P_e and M are unchanged.
    let mut cache: Vec<Option<(u64, EnergyOutcome<T>)>> = vec![None; fs.len()];
    let mut stages = 0u64;
    let mut failure = None;
    let qs: Vec<BoxPartition<T>>;
    let mut m;
    loop {
        m = complexity(&ps);
        let delta = T::one() / T::lit(growth.eval(m));
        let pending: Vec<usize> = (0..fs.len())
            .filter(|&i| !matches!(&cache[i], Some((cm, _)) if *cm == m))
            .collect();
        let fresh: Vec<(usize, Result<EnergyOutcome<T>>)> = pending
            .par_iter()
            .map(|&i| (i, energy_loop(&fs[i], &ps[i], delta, sigma, &params[i])))
            .collect();
        let mut results: Vec<Option<Result<EnergyOutcome<T>>>> = (0..fs.len()).map(|_| None).collect();
        for (i, r) in fresh {
            results[i] = Some(r);
        }
        let mut promoted = false;
        for i in 0..fs.len() {
            let outcome = match results[i].take() {
                Some(Ok(o)) => o,
                Some(Err(e @ (Error::IterationCap { .. } | Error::IncrementTooSmall { .. }))) => {
                    failure = Some(format!("edge {i}: {e}"));
                    break;
                }
                Some(Err(e)) => return Err(e),
                None => cache[i].as_ref().expect("cached").1.clone(),
            };
            if outcome.branch == Branch::Jump {
                ps[i] = outcome.q;
                cache[i] = None;
                promoted = true;
                break;
            }
            cache[i] = Some((m, outcome));
        }
        if failure.is_some() {
            qs = ps.clone();
            break;
        }
        if !promoted {
            qs = cache.iter().map(|c| c.as_ref().expect("settled").1.q.clone()).collect();
            break;
        }
        stages += 1;
        if stages >= stage_cap {
            failure = Some(format!("stage cap {stage_cap} reached"));
            m = complexity(&ps);
            qs = ps.clone();
            break;
        }
    }

    let one_over_fm = T::one() / T::lit(growth.eval(m));
    let pd = p_dagger(p);
    let edges = fs
        .par_iter()
        .zip(ps.into_par_iter().zip(qs.into_par_iter()))
        .enumerate()
        .map(|(i, (f, (pe, qe)))| {
            let f_str = f.cond_exp(&pe)?;
            let f_q = f.cond_exp(&qe)?;
            let f_err = f_q.sub(&f_str)?;
            let f_unf = f.sub(&f_q)?;
            let cut = cut_norm_auto(&f_unf, params[i].seed, caps.budget)?;
            let achieved = Achieved {
                str_norm_lp: f_str.lp_norm(p)?,
                err_norm: f_err.lp_norm(pd)?,
                unf_cut: cut.value,
                unf_mode: cut.mode,
                one_over_fm,
            };
            Ok(EdgeDecomposition { p: pe, q: qe, f_str, f_err, f_unf, achieved })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition {
        edges,
        m,
        c,
        p,
        sigma,
        growth: growth.clone(),
        stages,
        stage_cap,
        certified: failure.is_none(),
        failure,
    })
}

fn complexity<T: Scalar>(ps: &[BoxPartition<T>]) -> u64 {
    let iota = ps.iter().map(|p| p.iota().to_f64_lossy()).fold(f64::INFINITY, f64::min);
    ceil_robust(1.0 / iota).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxCell;
    use std::sync::Arc;

    #[test]
    fn constants_are_fixed_points() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let fs: Vec<_> = (0..3).map(|i| EdgeFunction::constant(s.edge_face(i), 0.5 + i as f64)).collect();
        let g = GrowthFunction::affine(4.0, 1.0).unwrap();
        let d = decompose(&s, &fs, &g, 3.0, 2.0, 0.25, DecomposeCaps::default()).unwrap();
        assert!(d.certified);
        assert_eq!(d.m, 1);
        assert_eq!(d.stages, 0);
        for e in &d.edges {
            assert_eq!(e.p.len(), 1);
            assert_eq!(e.q.len(), 1);
            assert!(e.f_err.sup_abs() < 1e-15 && e.f_unf.sup_abs() < 1e-15);
        }
    }

    #[test]
    fn block_function_settles_in_first_stage() {
        let s = HypergraphSystem::<f64>::uniform(2, 4, vec![vec![0, 1]]).unwrap();
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| if x[0] < 2 && x[1] < 2 { 2.0 } else { 0.5 }).unwrap();
        let g = GrowthFunction::affine(4.0, 1.0).unwrap();
        let d = decompose(&s, &[f.clone()], &g, f.lp_norm(2.0).unwrap(), 2.0, 0.25, DecomposeCaps::default()).unwrap();
        assert!(d.certified);
        let e = &d.edges[0];
        assert!(e.f_unf.sup_abs() < 1e-12);
        assert!(f.is_measurable(&e.q));
        let geom = e.q.geometry();
        let corner = BoxCell::new(Arc::clone(geom), vec![vec![true, true, false, false]; 2]).unwrap();
        assert!(e.q.cells().iter().any(|c| c.same_set(&corner)));
    }

    #[test]
    fn triangle_sparse_indicators() {
        use rand::{Rng, SeedableRng};
        let s = HypergraphSystem::<f64>::simplex(2, 4).unwrap();
        let g = GrowthFunction::affine(4.0, 1.0).unwrap();
        for seed in 0..5u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fs: Vec<_> = (0..3)
                .map(|i| {
                    let bits: Vec<f64> = (0..16).map(|_| if rng.gen_bool(0.2) { 5.0 } else { 0.0 }).collect();
                    EdgeFunction::new(s.edge_face(i), bits).unwrap()
                })
                .collect();
            let c = fs.iter().map(|f| f.lp_norm(2.0).unwrap()).fold(1.0, f64::max);
            let d = decompose(&s, &fs, &g, c, 2.0, 0.25, DecomposeCaps { seed, ..Default::default() }).unwrap();
            assert!(d.certified, "{:?}", d.failure);
            assert!(d.bounds_hold(1e-9));
        }
    }
}
