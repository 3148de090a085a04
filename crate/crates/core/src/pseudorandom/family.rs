use std::fmt;

use crate::contraction::{FactorGraph, DEFAULT_MAX_ENTRIES};
use crate::error::{Error, Result};
use crate::measure::{EdgeFunction, HypergraphSystem};
use crate::params::ell_param;
use crate::scalar::Scalar;

/// Majorants `ν_e` with their `L_p` models `ψ_e` and the parameters `(C, η, p)`.
#[derive(Debug, Clone)]
pub struct PseudorandomFamily<T> {
    system: HypergraphSystem<T>,
    nu: Vec<EdgeFunction<T>>,
    psi: Vec<EdgeFunction<T>>,
    c: T,
    eta: T,
    p: T,
    ell: usize,
}

impl<T: Scalar> PseudorandomFamily<T> {
    pub fn new(system: HypergraphSystem<T>, nu: Vec<EdgeFunction<T>>, psi: Vec<EdgeFunction<T>>, c: T, eta: T, p: T) -> Result<Self> {
        let m = system.edges().len();
        if nu.len() != m || psi.len() != m {
            return Err(Error::Shape(format!("{m} edges but {} majorants and {} models", nu.len(), psi.len())));
        }
        for (i, (n, s)) in nu.iter().zip(&psi).enumerate() {
            let face = system.edge_face(i);
            if !n.face().same_as(&face) || !s.face().same_as(&face) {
                return Err(Error::FaceMismatch(format!("edge {i}: ν or ψ does not live on {:?}", system.edges()[i])));
            }
            n.require_nonnegative()?;
        }
        if !(eta > T::zero() && eta < T::one()) {
            return Err(Error::Precondition(format!("η = {} must lie in (0,1)", eta.to_f64_lossy())));
        }
        let ell = ell_param(c.to_f64_lossy(), p.to_f64_lossy())?;
        Ok(Self { system, nu, psi, c, eta, p, ell })
    }

    /// `ψ_e ≡ 1` on every edge.
    pub fn with_unit_models(system: HypergraphSystem<T>, nu: Vec<EdgeFunction<T>>, c: T, eta: T, p: T) -> Result<Self> {
        let psi = (0..system.edges().len()).map(|i| EdgeFunction::constant(system.edge_face(i), T::one())).collect();
        Self::new(system, nu, psi, c, eta, p)
    }

    pub fn system(&self) -> &HypergraphSystem<T> {
        &self.system
    }

    pub fn nu(&self) -> &[EdgeFunction<T>] {
        &self.nu
    }

    pub fn psi(&self) -> &[EdgeFunction<T>] {
        &self.psi
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Same majorants with a different `η`.
    pub fn with_eta(&self, eta: T) -> Result<Self> {
        Self::new(self.system.clone(), self.nu.clone(), self.psi.clone(), self.c, eta, self.p)
    }

    pub(crate) fn base_graph(&self) -> FactorGraph<T> {
        FactorGraph::new(self.system.spaces().iter().map(|s| s.probs().to_vec().into()).collect())
    }

    /// `∫ ∏_{e∈G} ν_e dμ`.
    pub fn subfamily_density(&self, subfamily: &[usize]) -> Result<T> {
        let mut g = self.base_graph();
        for &e in subfamily {
            g.add_edge_function(&self.nu[e], &self.system.edges()[e])?;
        }
        g.integrate(DEFAULT_MAX_ENTRIES)
    }
}

/// `ν_{e,G}(x_e) = ∫ ∏_{e'∈G} (ν_{e'})_{x_e} dμ_{[n]∖e}`, as a function on face `e`.
pub fn marginal<T: Scalar>(family: &PseudorandomFamily<T>, edge: usize, subfamily: &[usize]) -> Result<EdgeFunction<T>> {
    let edges = family.system().edges();
    if edge >= edges.len() {
        return Err(Error::Shape(format!("edge {edge} out of range")));
    }
    if subfamily.is_empty() {
        return Err(Error::Precondition("marginal needs a nonempty subfamily".into()));
    }
    if subfamily.contains(&edge) || subfamily.iter().any(|&g| g >= edges.len()) {
        return Err(Error::Precondition(format!("subfamily {subfamily:?} must avoid edge {edge} and stay in range")));
    }
    let mut g = family.base_graph();
    for &e in subfamily {
        g.add_edge_function(&family.nu()[e], &edges[e])?;
    }
    let table = g.contract(&edges[edge], DEFAULT_MAX_ENTRIES)?;
    EdgeFunction::new(family.system().edge_face(edge), table.into_values())
}

/// Nonempty subsets of `pool`, in increasing bitmask order.
pub(crate) fn nonempty_subsets(pool: &[usize]) -> Vec<Vec<usize>> {
    (1u64..(1u64 << pool.len()))
        .map(|mask| pool.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionId {
    C1,
    C2a,
    C3,
    P1,
    P2,
    Certificate,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionId::C1 => "C1",
            ConditionId::C2a => "C2a",
            ConditionId::C3 => "C3",
            ConditionId::P1 => "P1",
            ConditionId::P2 => "P2",
            ConditionId::Certificate => "certificate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pass,
    Fail,
    /// No violation among the evaluated part of the search space.
    SampledPass,
}

impl Status {
    pub fn ok(self) -> bool {
        self != Status::Fail
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::SampledPass => "sampled-pass",
        })
    }
}

/// What attained the worst slack.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A subfamily `G` (edge indices).
    Subfamily(Vec<usize>),
    /// A pair `(e, G)` for a marginal.
    Marginal { edge: usize, subfamily: Vec<usize> },
    /// A box set on an edge: one mask per boundary face.
    Cell { edge: usize, masks: Vec<Vec<bool>> },
    /// An exponent choice `n_{e,ω}`: for each edge, the flags in lexicographic `ω` order.
    Choice { edge: Option<usize>, exponents: Vec<Vec<bool>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport<T> {
    pub id: ConditionId,
    pub status: Status,
    /// Smallest margin by which the condition held (negative on failure).
    pub worst_slack: T,
    /// The quantity that attained `worst_slack`.
    pub worst_value: T,
    pub witness: Option<Witness>,
    /// Fraction of the choice space evaluated.
    pub coverage: f64,
    pub evaluated: u64,
}

impl<T: Scalar> ConditionReport<T> {
    /// Folds `(slack, value, witness)` triples in order; the first minimum wins.
    pub(crate) fn from_slacks(
        id: ConditionId,
        items: impl IntoIterator<Item = (T, T, Witness)>,
        coverage: f64,
        exhaustive: bool,
    ) -> Self {
        let mut worst: Option<(T, T, Witness)> = None;
        let mut evaluated = 0u64;
        for (slack, value, w) in items {
            evaluated += 1;
            if worst.as_ref().is_none_or(|(s, _, _)| slack < *s) {
                worst = Some((slack, value, w));
            }
        }
        let (worst_slack, worst_value, witness) = match worst {
            Some((s, v, w)) => (s, v, Some(w)),
            None => (T::infinity(), T::zero(), None),
        };
        let status = if worst_slack < -T::tol() {
            Status::Fail
        } else if exhaustive {
            Status::Pass
        } else {
            Status::SampledPass
        };
        Self { id, status, worst_slack, worst_value, witness, coverage, evaluated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(s: &HypergraphSystem<f64>) -> Vec<EdgeFunction<f64>> {
        (0..s.edges().len()).map(|i| EdgeFunction::constant(s.edge_face(i), 1.0)).collect()
    }

    #[test]
    fn unit_marginal() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let fam = PseudorandomFamily::with_unit_models(s.clone(), ones(&s), 1.0, 0.1, f64::INFINITY).unwrap();
        assert_eq!(fam.ell(), 2);
        let m = marginal(&fam, 0, &[1, 2]).unwrap();
        assert!(m.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(marginal(&fam, 0, &[]).is_err());
        assert!(marginal(&fam, 0, &[0]).is_err());
    }

    #[test]
    fn single_edge_marginal_factorizes() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let mut nu = ones(&s);
        // edge 1 = {0,2}; its marginal on edge 0 = {0,1} depends on x0 only.
        nu[1] = EdgeFunction::from_fn(s.edge_face(1), |x| (1 + x[0] + 2 * x[1]) as f64).unwrap();
        let fam = PseudorandomFamily::with_unit_models(s.clone(), nu, 2.0, 0.1, 2.0).unwrap();
        let m = marginal(&fam, 0, &[1]).unwrap();
        for x0 in 0..3 {
            let expected = (0..3).map(|z| (1 + x0 + 2 * z) as f64).sum::<f64>() / 3.0;
            for x1 in 0..3 {
                assert!((m.value_at(&[x0, x1]) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn subsets_order() {
        assert_eq!(nonempty_subsets(&[4, 7]), vec![vec![4], vec![7], vec![4, 7]]);
    }
}
