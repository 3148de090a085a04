use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::norms::{cut_norm_auto, regularity_scan, OracleMode, RegularityCertificate};
use crate::params::{conjugate, moment_exponent};
use crate::pseudorandom::family::{
    marginal, nonempty_subsets, ConditionId, ConditionReport, PseudorandomFamily, Status, Witness,
};
use crate::scalar::Scalar;

/// (C1), (C2.a) and (C3), each evaluated over its whole quantifier range.
/// A greedy cut norm (budget exceeded) downgrades a (C2.a) pass to sampled.
pub fn check_direct<T: Scalar>(family: &PseudorandomFamily<T>, budget: u64, seed: u64) -> Result<Vec<ConditionReport<T>>> {
    let m = family.system().edges().len();
    let eta = family.eta();
    let all: Vec<usize> = (0..m).collect();

    let subsets = nonempty_subsets(&all);
    let c1 = subsets
        .par_iter()
        .map(|g| family.subfamily_density(g).map(|v| (v - (T::one() - eta), v, Witness::Subfamily(g.clone()))))
        .collect::<Result<Vec<_>>>()?;
    let c1 = ConditionReport::from_slacks(ConditionId::C1, c1, 1.0, true);

    let cuts = (0..m)
        .into_par_iter()
        .map(|e| {
            let diff = family.nu()[e].sub(&family.psi()[e])?;
            cut_norm_auto(&diff, seed.wrapping_add(e as u64), budget).map(|w| (e, w))
        })
        .collect::<Result<Vec<_>>>()?;
    let exact = cuts.iter().all(|(_, w)| w.mode == OracleMode::Exact);
    let c2a = ConditionReport::from_slacks(
        ConditionId::C2a,
        cuts.into_iter()
            .map(|(e, w)| (eta - w.value, w.value, Witness::Cell { edge: e, masks: w.cell.masks().to_vec() })),
        if exact { 1.0 } else { 0.0 },
        exact,
    );

    let ell = family.ell() as i32;
    let pairs: Vec<(usize, Vec<usize>)> = (0..m)
        .flat_map(|e| {
            let rest: Vec<usize> = all.iter().copied().filter(|&x| x != e).collect();
            nonempty_subsets(&rest).into_iter().map(move |g| (e, g))
        })
        .collect();
    let bound = family.c() + eta;
    let c3 = pairs
        .par_iter()
        .map(|(e, g)| {
            let v = marginal(family, *e, g)?.map(|x| x.powi(ell))?.mean();
            Ok((bound - v, v, Witness::Marginal { edge: *e, subfamily: g.clone() }))
        })
        .collect::<Result<Vec<_>>>()?;
    let c3 = ConditionReport::from_slacks(ConditionId::C3, c3, 1.0, true);
    Ok(vec![c1, c2a, c3])
}

/// Which moment estimate applies: the Hölder bound when `C > 1` or `p < ∞`,
/// the `L_2` bound when `C = 1` and `p = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentCase {
    Holder,
    SquareMean,
}

impl MomentCase {
    pub fn for_params(c: f64, p: f64) -> Self {
        if c == 1.0 && p.is_infinite() {
            MomentCase::SquareMean
        } else {
            MomentCase::Holder
        }
    }
}

/// An event `A ⊆ X_e` given by its atom mask on the face of `edge`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEvent {
    pub edge: usize,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport<T> {
    pub case: MomentCase,
    pub checks: u64,
    pub holds: bool,
    /// Smallest `bound − lhs` over all `(e, G, A)`.
    pub worst_slack: T,
    /// `(edge, subfamily, event index)` of the worst slack.
    pub witness: Option<(usize, Vec<usize>, usize)>,
    /// For the square-mean case: the largest `‖ν_{e,G} − 1‖²_{L_2}` and its bound `4η^{1/2}`.
    pub l2_deviation: Option<(T, T)>,
}

/// Checks the moment estimates for every supplied event and every nonempty
/// `G ⊆ H∖{e}`.
pub fn moment_checks<T: Scalar>(family: &PseudorandomFamily<T>, case: MomentCase, events: &[MomentEvent]) -> Result<MomentReport<T>> {
    let expected = MomentCase::for_params(family.c().to_f64_lossy(), family.p().to_f64_lossy());
    if case != expected {
        return Err(Error::Precondition(format!("moment case {case:?} does not apply to (C, p); use {expected:?}")));
    }
    let m = family.system().edges().len();
    for (k, ev) in events.iter().enumerate() {
        if ev.edge >= m || ev.mask.len() != family.system().edge_face(ev.edge).size() {
            return Err(Error::Shape(format!("event {k} does not match its edge")));
        }
    }
    let eta = family.eta();
    let q = conjugate(family.p());
    let expo = moment_exponent(family.p());
    let root_eta = eta.sqrt();
    let mut worst: Option<(T, (usize, Vec<usize>, usize))> = None;
    let mut checks = 0u64;
    let mut l2: Option<(T, T)> = None;
    for e in 0..m {
        let rest: Vec<usize> = (0..m).filter(|&x| x != e).collect();
        for g in nonempty_subsets(&rest) {
            let marg = marginal(family, e, &g)?;
            if case == MomentCase::SquareMean {
                let dev = marg.map(|v| (v - T::one()).powi(2))?.mean();
                let bound = T::lit(4.0) * root_eta;
                if l2.is_none_or(|(d, _)| dev > d) {
                    l2 = Some((dev, bound));
                }
            }
            for (k, ev) in events.iter().enumerate().filter(|(_, ev)| ev.edge == e) {
                let mu_a = marg.face().measure(&ev.mask);
                let (lhs, rhs) = match case {
                    MomentCase::Holder => (
                        marg.map(|v| v.powf(T::lit(2.0) * q))?.integrate_mask(Some(&ev.mask)),
                        (family.c() + T::one()) * mu_a.powf(expo),
                    ),
                    MomentCase::SquareMean => (
                        marg.map(|v| v * v)?.integrate_mask(Some(&ev.mask)),
                        T::lit(2.0) * mu_a + T::lit(8.0) * root_eta,
                    ),
                };
                checks += 1;
                let slack = rhs - lhs;
                if worst.as_ref().is_none_or(|(s, _)| slack < *s) {
                    worst = Some((slack, (e, g.clone(), k)));
                }
            }
        }
    }
    let l2_ok = l2.is_none_or(|(d, b)| d <= b + T::tol());
    let (worst_slack, witness) = match worst {
        Some((s, w)) => (s, Some(w)),
        None => (T::infinity(), None),
    };
    Ok(MomentReport {
        case,
        checks,
        holds: worst_slack >= -T::tol() && l2_ok,
        worst_slack,
        witness,
        l2_deviation: l2,
    })
}

/// Scans each `ν_e` for `(C+1, η, p)`-regularity. Any violation contradicts
/// (C2.a) and so indicates that the cut-norm tolerance was breached.
pub fn majorant_regularity<T: Scalar>(
    family: &PseudorandomFamily<T>,
    trials: usize,
    seed: u64,
) -> Result<Vec<RegularityCertificate<T>>> {
    family
        .nu()
        .par_iter()
        .enumerate()
        .map(|(e, nu)| regularity_scan(nu, family.c() + T::one(), family.eta(), family.p(), trials, seed.wrapping_add(e as u64)))
        .collect()
}

/// Overall status of a list of reports: the weakest one.
pub fn combined_status<T>(reports: &[ConditionReport<T>]) -> Status {
    if reports.iter().any(|r| r.status == Status::Fail) {
        Status::Fail
    } else if reports.iter().any(|r| r.status == Status::SampledPass) {
        Status::SampledPass
    } else {
        Status::Pass
    }
}
