use rayon::prelude::*;

use crate::contraction::{FactorGraph, DEFAULT_MAX_ENTRIES};
use crate::error::{Error, Result};
use crate::measure::{EdgeFunction, HypergraphSystem};
use crate::norms::{cut_norm, OracleMode};
use crate::scalar::Scalar;

pub(crate) fn check_edges<T: Scalar>(system: &HypergraphSystem<T>, fs: &[EdgeFunction<T>], what: &str) -> Result<()> {
    if fs.len() != system.edges().len() {
        return Err(Error::Shape(format!("{} {what} for {} edges", fs.len(), system.edges().len())));
    }
    for (i, f) in fs.iter().enumerate() {
        if !f.face().same_as(&system.edge_face(i)) {
            return Err(Error::FaceMismatch(format!("{what} {i} does not live on edge {:?}", system.edges()[i])));
        }
    }
    Ok(())
}

fn graph_without<T: Scalar>(system: &HypergraphSystem<T>, fs: &[EdgeFunction<T>], skip: Option<usize>) -> Result<FactorGraph<T>> {
    let mut g = FactorGraph::new(system.spaces().iter().map(|s| s.probs().to_vec().into()).collect());
    for (i, f) in fs.iter().enumerate() {
        if Some(i) != skip {
            g.add_edge_function(f, &system.edges()[i])?;
        }
    }
    Ok(g)
}

/// `∫ ∏_e f_e dμ` by variable elimination.
pub fn product_density<T: Scalar>(system: &HypergraphSystem<T>, fs: &[EdgeFunction<T>]) -> Result<T> {
    check_edges(system, fs, "functions")?;
    graph_without(system, fs, None)?.integrate(DEFAULT_MAX_ENTRIES)
}

/// `x_{e0} ↦ ∫ ∏_{e≠e0} (f_e)_{x_{e0}} dμ_{[n]∖e0}`, a function on the face of `e0`.
pub fn section_marginal<T: Scalar>(system: &HypergraphSystem<T>, fs: &[EdgeFunction<T>], e0: usize) -> Result<EdgeFunction<T>> {
    check_edges(system, fs, "functions")?;
    if e0 >= fs.len() {
        return Err(Error::Shape(format!("edge {e0} out of range")));
    }
    let table = graph_without(system, fs, Some(e0))?.contract(&system.edges()[e0], DEFAULT_MAX_ENTRIES)?;
    EdgeFunction::new(system.edge_face(e0), table.into_values())
}

/// The three-set split of `∫|G−H|^{2q}` used in the counting argument:
/// `A = [G<H]`, `B = [G≥H]∩[G≤β]`, `C = [G≥H]∩[G>β]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSplit<T> {
    pub beta: T,
    pub q: u32,
    pub mass_a: T,
    pub mass_b: T,
    pub mass_c: T,
    /// `∫_A (H−G) H^{2q−1}`.
    pub i1: T,
    /// `∫_B (G−H) G^{2q−1}`.
    pub i2: T,
    /// `∫_C G^{2q}`.
    pub i3: T,
    /// `∫ |G−H|^{2q}`.
    pub lhs: T,
}

impl<T: Scalar> GapSplit<T> {
    /// `lhs ≤ I₁ + I₂ + I₃` (holds pointwise whenever `G, H ≥ 0`).
    pub fn holds(&self) -> bool {
        self.lhs <= (self.i1 + self.i2 + self.i3) * (T::one() + T::eps()) + T::tol()
    }
}

#[derive(Debug, Clone)]
pub struct CountingGap<T> {
    /// `∫∏g_e − ∫∏h_e`.
    pub delta: T,
    pub density_g: T,
    pub density_h: T,
    pub edge: usize,
    pub g_marginal: EdgeFunction<T>,
    pub h_marginal: EdgeFunction<T>,
    pub split: GapSplit<T>,
}

/// Difference of product densities plus the section marginals at `e0` and
/// their three-set split at level `beta`.
pub fn counting_gap<T: Scalar>(
    system: &HypergraphSystem<T>,
    gs: &[EdgeFunction<T>],
    hs: &[EdgeFunction<T>],
    e0: usize,
    beta: T,
    q: u32,
) -> Result<CountingGap<T>> {
    check_edges(system, gs, "functions")?;
    check_edges(system, hs, "functions")?;
    if q == 0 {
        return Err(Error::Precondition("the split exponent q must be a positive integer".into()));
    }
    let (density_g, density_h) = rayon::join(|| product_density(system, gs), || product_density(system, hs));
    let (density_g, density_h) = (density_g?, density_h?);
    let (g_marginal, h_marginal) = rayon::join(|| section_marginal(system, gs, e0), || section_marginal(system, hs, e0));
    let (g_marginal, h_marginal) = (g_marginal?, h_marginal?);
    let split = gap_split(&g_marginal, &h_marginal, beta, q);
    Ok(CountingGap { delta: density_g - density_h, density_g, density_h, edge: e0, g_marginal, h_marginal, split })
}

fn gap_split<T: Scalar>(g: &EdgeFunction<T>, h: &EdgeFunction<T>, beta: T, q: u32) -> GapSplit<T> {
    let two_q = (2 * q) as i32;
    let mut s = GapSplit {
        beta,
        q,
        mass_a: T::zero(),
        mass_b: T::zero(),
        mass_c: T::zero(),
        i1: T::zero(),
        i2: T::zero(),
        i3: T::zero(),
        lhs: T::zero(),
    };
    for ((&gv, &hv), &w) in g.values().iter().zip(h.values()).zip(g.face().weights()) {
        s.lhs = s.lhs + w * (gv - hv).abs().powi(two_q);
        if gv < hv {
            s.mass_a = s.mass_a + w;
            s.i1 = s.i1 + w * (hv - gv) * hv.powi(two_q - 1);
        } else if gv <= beta {
            s.mass_b = s.mass_b + w;
            s.i2 = s.i2 + w * (gv - hv) * gv.powi(two_q - 1);
        } else {
            s.mass_c = s.mass_c + w;
            s.i3 = s.i3 + w * gv.powi(two_q);
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutContraction<T> {
    /// `|∫ g ∏_f u_f dμ|`.
    pub lhs: T,
    /// Exact `‖g‖_{S_∂e}`.
    pub cut: T,
    pub holds: bool,
}

/// Checks `|∫ g ∏_{f∈∂e} u_f| ≤ ‖g‖_{S_∂e}` for `[0,1]`-valued `u_f` on the
/// boundary faces of `g`'s face (lexicographic order).
pub fn cut_contract_check<T: Scalar>(g: &EdgeFunction<T>, us: &[EdgeFunction<T>], budget: u64) -> Result<CutContraction<T>> {
    let boundary = g.face().boundary();
    if us.len() != boundary.len() {
        return Err(Error::Shape(format!("{} boundary weights for {} boundary faces", us.len(), boundary.len())));
    }
    let mut weight = EdgeFunction::constant(g.face().clone(), T::one());
    for (k, (u, face)) in us.iter().zip(&boundary).enumerate() {
        if !u.face().same_as(face) {
            return Err(Error::FaceMismatch(format!("weight {k} does not live on {:?}", face.coords())));
        }
        if let Some(i) = u.values().iter().position(|&v| v < T::zero() || v > T::one()) {
            return Err(Error::Precondition(format!("weight {k} takes value {} outside [0,1] at atom {i}", u.values()[i])));
        }
        weight = weight.mul(&u.lift(g.face())?)?;
    }
    let lhs = g.mul(&weight)?.mean().abs();
    let cut = cut_norm(g, OracleMode::Exact, 0, budget)?.value;
    Ok(CutContraction { lhs, cut, holds: lhs <= cut + T::tol() })
}

/// `‖g_e − h_e‖_{S_∂e}` for every edge, exact when within `budget`.
pub fn cut_distances<T: Scalar>(gs: &[EdgeFunction<T>], hs: &[EdgeFunction<T>], budget: u64) -> Result<Vec<(T, OracleMode)>> {
    gs.par_iter()
        .zip(hs)
        .enumerate()
        .map(|(i, (g, h))| {
            let w = crate::norms::cut_norm_auto(&g.sub(h)?, i as u64, budget)?;
            Ok((w.value, w.mode))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_densities() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let mut fs: Vec<_> = (0..3).map(|i| EdgeFunction::constant(s.edge_face(i), 1.0)).collect();
        assert!((product_density(&s, &fs).unwrap() - 1.0).abs() < 1e-15);
        fs[1] = EdgeFunction::constant(s.edge_face(1), 0.0);
        assert_eq!(product_density(&s, &fs).unwrap(), 0.0);
    }

    #[test]
    fn equal_endpoint_triangle() {
        let s = HypergraphSystem::<f64>::simplex(2, 2).unwrap();
        let fs: Vec<_> = (0..3)
            .map(|i| EdgeFunction::from_fn(s.edge_face(i), |x| if x[0] == x[1] { 1.0 } else { 0.0 }).unwrap())
            .collect();
        assert!((product_density(&s, &fs).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gap_is_linear_in_one_factor() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let hs: Vec<_> = (0..3).map(|i| EdgeFunction::constant(s.edge_face(i), 1.0)).collect();
        let mut gs = hs.clone();
        gs[2] = gs[2].scale(0.7);
        let gap = counting_gap(&s, &gs, &hs, 0, 1.0, 1).unwrap();
        assert!((gap.delta + 0.3).abs() < 1e-14);
        assert!(gap.g_marginal.values().iter().all(|&v| (v - 0.7).abs() < 1e-14));
        assert!((gap.split.mass_a - 1.0).abs() < 1e-14);
        assert!(gap.split.holds());
        let same = counting_gap(&s, &hs, &hs, 1, 0.5, 2).unwrap();
        assert_eq!(same.delta, 0.0);
        assert_eq!(same.split.lhs, 0.0);
    }

    #[test]
    fn contraction_examples() {
        let s = HypergraphSystem::<f64>::uniform(2, 3, vec![vec![0, 1]]).unwrap();
        let face = s.edge_face(0);
        let g = EdgeFunction::from_fn(face.clone(), |x| x[0] as f64 - x[1] as f64 * 0.5).unwrap();
        let ones: Vec<_> = face.boundary().into_iter().map(|f| EdgeFunction::constant(f, 1.0)).collect();
        let r = cut_contract_check(&g, &ones, 1 << 20).unwrap();
        assert!(r.holds);
        assert!((r.lhs - g.mean().abs()).abs() < 1e-15);
        let zero = EdgeFunction::constant(face.clone(), 0.0);
        let r = cut_contract_check(&zero, &ones, 1 << 20).unwrap();
        assert_eq!((r.lhs, r.cut), (0.0, 0.0));
        let mut bad = ones.clone();
        bad[0] = EdgeFunction::constant(bad[0].face().clone(), 1.5);
        assert!(cut_contract_check(&g, &bad, 1 << 20).is_err());
    }
}
