use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{split_within, BoxCell, BoxPartition, EdgeGeometry};
use crate::measure::EdgeFunction;
use crate::norms::{cut_norm_on, OracleMode};
use crate::norms::enumerate::check_budget;
use crate::params::{conjugate, energy_steps, p_dagger, vartheta};
use crate::scalar::Scalar;

/// Constants shared by the refinement lemmas for one function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams<T> {
    /// Regularity constant `C`.
    pub c: T,
    /// Integrability exponent `p > 1`, possibly infinite.
    pub p: T,
    /// Scale `η` the caller's regularity statement refers to.
    pub eta: T,
    pub seed: u64,
    /// Exact cut-norm enumeration budget (cells).
    pub budget: u64,
}

impl<T: Scalar> RefineParams<T> {
    pub fn new(c: T, p: T, eta: T) -> Self {
        Self { c, p, eta, seed: 0, budget: crate::norms::DEFAULT_BUDGET }
    }

    fn q(&self) -> T {
        conjugate(self.p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > T::zero() && self.c.is_finite()) {
            return Err(Error::Precondition(format!("C = {} must be positive", self.c.to_f64_lossy())));
        }
        if !(self.p > T::one()) {
            return Err(Error::InvalidExponent(self.p.to_f64_lossy()));
        }
        Ok(())
    }
}

/// Output of [`approximate_set`].
#[derive(Debug, Clone)]
pub struct Approximation<T> {
    pub q: BoxPartition<T>,
    /// Indices into `q.cells()` whose union is `B`.
    pub b_cells: Vec<usize>,
    pub b_mask: Vec<bool>,
    /// Per-cell threshold `θ = ϑ^q ι(P)^{q−1}`.
    pub theta: T,
    /// `(ϑ ι(P))^q`, the guaranteed lower bound for `ι(Q)`.
    pub iota_bound: T,
    /// Whether `η ≤ (ϑ ι(P))^q` held for the supplied `η`.
    pub scale_condition: bool,
    /// `∫_{A△B} E(f|P)` and its bound `Crϑ`.
    pub cond_integral: T,
    pub cond_bound: T,
    /// `∫_{A△B} f` and its bound `5Cr²ϑ`.
    pub f_integral: T,
    pub f_bound: T,
    /// `μ(A△B)`, at most `rθ`.
    pub sym_diff: T,
}

/// Approximates the box set `a` by a union of cells of a refinement of `p`.
pub fn approximate_set<T: Scalar>(
    f: &EdgeFunction<T>,
    p: &BoxPartition<T>,
    a: &BoxCell<T>,
    vartheta: T,
    params: &RefineParams<T>,
) -> Result<Approximation<T>> {
    params.validate()?;
    f.require_nonnegative()?;
    let geom = p.geometry();
    if !geom.face().same_as(f.face()) || !geom.face().same_as(a.geometry().face()) {
        return Err(Error::FaceMismatch("function, partition and set live on different faces".into()));
    }
    if !(vartheta > T::zero() && vartheta < T::one()) {
        return Err(Error::Precondition(format!("ϑ = {} must lie in (0,1)", vartheta.to_f64_lossy())));
    }
    let a = BoxCell::new(Arc::clone(geom), a.masks().to_vec())?;
    let q = params.q();
    let iota = p.iota();
    let theta = vartheta.powf(q) * iota.powf(q - T::one());
    let iota_bound = (vartheta * iota).powf(q);
    let weights = geom.face().weights();

    let mut cells = Vec::new();
    let mut b_flags = Vec::new();
    for (k, cell) in p.cells().iter().enumerate() {
        let mu_p = p.measures()[k];
        if !(mu_p > T::zero()) {
            return Err(Error::ZeroMeasureCell { cell: k });
        }
        let u_mask = cell.realize();
        let trace = a.intersect(cell).realize();
        let inside = trace
            .iter()
            .zip(&u_mask)
            .zip(weights)
            .filter(|((&c, &u), _)| c && u)
            .fold(T::zero(), |acc, (_, &w)| acc + w);
        if inside / mu_p < theta || theta >= T::one() {
            cells.push(cell.clone());
            b_flags.push(false);
        } else {
            let local = split_within(cell, &a, theta)?;
            for (j, c) in local.cells.into_iter().enumerate() {
                cells.push(c);
                b_flags.push(j == 0);
            }
        }
    }
    let qp = BoxPartition::new(Arc::clone(geom), cells)?;
    let b_cells: Vec<usize> = (0..qp.len()).filter(|&j| b_flags[j]).collect();
    let b_mask = qp.union_mask(&b_cells);
    let a_mask = a.realize();
    let diff: Vec<bool> = a_mask.iter().zip(&b_mask).map(|(&x, &y)| x != y).collect();
    let cond = f.cond_exp(p)?;
    let r = T::usize(geom.r());
    Ok(Approximation {
        theta,
        iota_bound,
        scale_condition: params.eta <= iota_bound,
        cond_integral: cond.integrate_mask(Some(&diff)),
        cond_bound: params.c * r * vartheta,
        f_integral: f.integrate_mask(Some(&diff)),
        f_bound: T::lit(5.0) * params.c * r * r * vartheta,
        sym_diff: geom.face().measure(&diff),
        q: qp,
        b_cells,
        b_mask,
    })
}

/// Result of one refinement attempt.
#[derive(Debug, Clone)]
pub enum RefineOutcome<T> {
    /// Cut residual above `δ`: the refinement and its `L_{p†}` increment.
    Refined { q: BoxPartition<T>, increment: T, cut_value: T, mode: OracleMode },
    /// `‖f − E(f|P)‖_{S_∂e} ≤ δ` according to the oracle.
    Uniform { cut_value: T, mode: OracleMode },
}

fn residual_cut<T: Scalar>(
    geom: &Arc<EdgeGeometry<T>>,
    f: &EdgeFunction<T>,
    p: &BoxPartition<T>,
    params: &RefineParams<T>,
) -> Result<crate::norms::CutWitness<T>> {
    let g = f.sub(&f.cond_exp(p)?)?;
    let mode = if check_budget(geom, params.budget).is_ok() { OracleMode::Exact } else { OracleMode::Greedy };
    cut_norm_on(geom, &g, mode, params.seed, params.budget)
}

/// One energy-increment step: either certify the cut residual is at most `δ`
/// or return a refinement whose conditional expectation moves by `≥ δ/2`.
pub fn refine_step<T: Scalar>(
    f: &EdgeFunction<T>,
    p: &BoxPartition<T>,
    delta: T,
    params: &RefineParams<T>,
) -> Result<RefineOutcome<T>> {
    params.validate()?;
    f.require_nonnegative()?;
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Precondition(format!("δ = {} must lie in (0,1)", delta.to_f64_lossy())));
    }
    let geom = p.geometry();
    let witness = residual_cut(geom, f, p, params)?;
    if witness.value <= delta {
        return Ok(RefineOutcome::Uniform { cut_value: witness.value, mode: witness.mode });
    }
    let theta = vartheta(params.c, geom.r(), delta);
    let approx = approximate_set(f, p, &witness.cell, theta, params)?;
    let increment = f.cond_exp(&approx.q)?.sub(&f.cond_exp(p)?)?.lp_norm(p_dagger(params.p))?;
    let required = delta / T::lit(2.0);
    if increment < required - T::tol() {
        return Err(Error::IncrementTooSmall { increment: increment.to_f64_lossy(), required: required.to_f64_lossy() });
    }
    Ok(RefineOutcome::Refined { q: approx.q, increment, cut_value: witness.value, mode: witness.mode })
}

/// Which alternative of the energy-increment dichotomy was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `‖E(f|Q) − E(f|P)‖_{L_{p†}} > σ`.
    Jump,
    /// Jump at most `σ` and cut residual at most `δ`.
    Settled,
}

#[derive(Debug, Clone)]
pub struct EnergyOutcome<T> {
    pub q: BoxPartition<T>,
    pub branch: Branch,
    pub steps: u64,
    pub cap: u64,
    /// `‖E(f|Q) − E(f|P)‖_{L_{p†}}`.
    pub jump: T,
    /// Last cut residual seen (the certified one on [`Branch::Settled`]).
    pub cut_value: T,
    pub mode: OracleMode,
}

/// Iterates [`refine_step`] from `p` until the cut residual is at most `δ` or
/// the conditional expectation has moved by more than `σ`.
pub fn energy_loop<T: Scalar>(
    f: &EdgeFunction<T>,
    p: &BoxPartition<T>,
    delta: T,
    sigma: T,
    params: &RefineParams<T>,
) -> Result<EnergyOutcome<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::Precondition(format!("σ = {} must be positive", sigma.to_f64_lossy())));
    }
    let cap = energy_steps(params.p.to_f64_lossy(), sigma.to_f64_lossy(), delta.to_f64_lossy());
    let base = f.cond_exp(p)?;
    let pd = p_dagger(params.p);
    let mut current = p.clone();
    let mut steps = 0u64;
    loop {
        match refine_step(f, &current, delta, params)? {
            RefineOutcome::Uniform { cut_value, mode } => {
                let jump = f.cond_exp(&current)?.sub(&base)?.lp_norm(pd)?;
                return Ok(EnergyOutcome { q: current, branch: Branch::Settled, steps, cap, jump, cut_value, mode });
            }
            RefineOutcome::Refined { q, cut_value, mode, .. } => {
                steps += 1;
                let jump = f.cond_exp(&q)?.sub(&base)?.lp_norm(pd)?;
                if jump > sigma {
                    return Ok(EnergyOutcome { q, branch: Branch::Jump, steps, cap, jump, cut_value, mode });
                }
                if steps >= cap {
                    return Err(Error::IterationCap { cap: cap as usize });
                }
                current = q;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::HypergraphSystem;

    fn grid(m: usize) -> (HypergraphSystem<f64>, Arc<EdgeGeometry<f64>>) {
        let s = HypergraphSystem::uniform(2, m, vec![vec![0, 1]]).unwrap();
        let g = EdgeGeometry::new(s.edge_face(0));
        (s, g)
    }

    #[test]
    fn trivial_sets() {
        let (s, g) = grid(3);
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| (x[0] + 2 * x[1]) as f64).unwrap();
        let p = BoxPartition::trivial(Arc::clone(&g));
        let params = RefineParams::new(4.0, f64::INFINITY, 1.0 / 3.0);
        let empty = approximate_set(&f, &p, &BoxCell::empty(Arc::clone(&g)), 0.3, &params).unwrap();
        assert_eq!(empty.q.len(), 1);
        assert!(empty.b_cells.is_empty());
        assert_eq!(empty.cond_integral, 0.0);
        assert_eq!(empty.f_integral, 0.0);
        let full = approximate_set(&f, &p, &BoxCell::full(Arc::clone(&g)), 0.3, &params).unwrap();
        assert_eq!(full.q.len(), 1);
        assert!(full.b_mask.iter().all(|&b| b));
    }

    #[test]
    fn corner_window() {
        let (s, g) = grid(3);
        let f = EdgeFunction::constant(s.edge_face(0), 1.0);
        let p = BoxPartition::trivial(Arc::clone(&g));
        let a = BoxCell::new(Arc::clone(&g), vec![vec![true, true, false], vec![true, true, false]]).unwrap();
        let params = RefineParams::new(1.0, 2.0, 1.0 / 3.0);
        let out = approximate_set(&f, &p, &a, 0.3, &params).unwrap();
        // q = 2, ι = 1: θ = 0.09; the corner is a box so B = A.
        assert!((out.theta - 0.09).abs() < 1e-15);
        assert!(out.sym_diff <= 2.0 * out.theta + 1e-15);
        assert_eq!(out.b_mask, a.realize());
        assert!(out.q.refines(&p));
        assert!(out.q.iota() >= out.iota_bound - 1e-15);
    }

    #[test]
    fn diagonal_refines() {
        let (s, g) = grid(2);
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| if x[0] == x[1] { 2.0 } else { 0.0 }).unwrap();
        let p = BoxPartition::trivial(Arc::clone(&g));
        let params = RefineParams::new(2.0, f64::INFINITY, 0.5);
        match refine_step(&f, &p, 0.1, &params).unwrap() {
            RefineOutcome::Refined { increment, cut_value, .. } => {
                assert!((cut_value - 0.25).abs() < 1e-15);
                assert!(increment >= 0.05);
            }
            other => panic!("expected refinement, got {other:?}"),
        }
        let small = f.scale(0.1);
        match refine_step(&small, &p, 0.1, &params).unwrap() {
            RefineOutcome::Uniform { cut_value, .. } => assert!((cut_value - 0.025).abs() < 1e-15),
            other => panic!("expected uniform, got {other:?}"),
        }
    }

    #[test]
    fn measurable_input_settles_immediately() {
        let (s, g) = grid(4);
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| if x[0] < 2 { 1.0 } else { 3.0 }).unwrap();
        let p = BoxPartition::new(
            Arc::clone(&g),
            vec![
                BoxCell::new(Arc::clone(&g), vec![vec![true, true, false, false], vec![true; 4]]).unwrap(),
                BoxCell::new(Arc::clone(&g), vec![vec![false, false, true, true], vec![true; 4]]).unwrap(),
            ],
        )
        .unwrap();
        let out = energy_loop(&f, &p, 0.05, 0.2, &RefineParams::new(3.0, 2.0, 0.25)).unwrap();
        assert_eq!(out.branch, Branch::Settled);
        assert_eq!(out.steps, 0);
        assert!(out.cut_value < 1e-12);
    }
}
