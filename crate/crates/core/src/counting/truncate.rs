use crate::error::{Error, Result};
use crate::measure::EdgeFunction;
use crate::norms::{cut_norm_auto, OracleMode};
use crate::regularity::Decomposition;
use crate::scalar::Scalar;

/// `g = f·1_A`, `h = f_str·1_A` with `A = [f_str ≤ ζ]`, and the achieved
/// values of the tail and cut estimates next to their bounds.
#[derive(Debug, Clone)]
pub struct Truncation<T> {
    pub g: EdgeFunction<T>,
    pub h: EdgeFunction<T>,
    /// Atom mask of `A` on the edge face.
    pub a_mask: Vec<bool>,
    /// Cells of `P_e` whose union is `A`.
    pub a_cells: Vec<usize>,
    pub zeta: T,
    pub alpha: T,
    /// `μ(X∖A)` against `(C/ζ)^p`.
    pub tail_mass: T,
    pub tail_mass_bound: T,
    /// `∫_{X∖A} f_str` against `C^p ζ^{1−p}`.
    pub tail_str: T,
    pub tail_str_bound: T,
    /// `∫_{X∖A} f` against `C^p ζ^{1−p} + α`.
    pub tail_f: T,
    pub tail_f_bound: T,
    /// `‖g − h‖_{S_∂e}` against `α`.
    pub cut_gh: T,
    pub cut_mode: OracleMode,
}

impl<T: Scalar> Truncation<T> {
    pub fn bounds_hold(&self) -> bool {
        let tol = T::tol();
        self.tail_mass <= self.tail_mass_bound + tol
            && self.tail_str <= self.tail_str_bound + tol
            && self.tail_f <= self.tail_f_bound + tol
            && self.cut_gh <= self.alpha + tol
    }
}

/// Truncates `f` (the function decomposed as edge `edge` of `dec`) at level `zeta`.
/// Rejects decompositions built with `σ > α/2` or a growth function not
/// dominating `m ↦ 2m/α`.
pub fn truncate<T: Scalar>(
    f: &EdgeFunction<T>,
    dec: &Decomposition<T>,
    edge: usize,
    zeta: T,
    alpha: T,
    budget: u64,
    seed: u64,
) -> Result<Truncation<T>> {
    let parts = dec.edges.get(edge).ok_or_else(|| Error::Shape(format!("edge {edge} out of range")))?;
    if !f.face().same_as(parts.f_str.face()) {
        return Err(Error::FaceMismatch(format!("function does not live on the face of edge {edge}")));
    }
    if !(alpha > T::zero()) || !(zeta > T::zero()) {
        return Err(Error::Precondition("α and ζ must be positive".into()));
    }
    if dec.sigma > alpha / T::lit(2.0) + T::eps() {
        return Err(Error::Precondition(format!(
            "decomposition used σ = {} but truncation at α = {} needs σ ≤ α/2",
            dec.sigma,
            alpha.to_f64_lossy()
        )));
    }
    if !dec.growth.dominates_linear(2.0 / alpha.to_f64_lossy()) {
        return Err(Error::Precondition(format!("growth {} does not dominate m ↦ 2m/α", dec.growth)));
    }
    let partition = &parts.p;
    let f_str = &parts.f_str;
    // f_str is constant on P-cells, so the level set is a union of cells.
    let mut a_cells = Vec::new();
    let mut seen = vec![false; partition.len()];
    for (&label, &v) in partition.labels().iter().zip(f_str.values()) {
        if !seen[label] {
            seen[label] = true;
            if v <= zeta {
                a_cells.push(label);
            }
        }
    }
    a_cells.sort_unstable();
    let a_mask = partition.union_mask(&a_cells);
    let outside: Vec<bool> = a_mask.iter().map(|&b| !b).collect();
    let g = f.restrict(&a_mask);
    let h = f_str.restrict(&a_mask);
    let cut = cut_norm_auto(&g.sub(&h)?, seed, budget)?;

    let c = dec.c;
    let p = dec.p;
    let ratio = c / zeta;
    // C^p ζ^{1−p} written as C (C/ζ)^{p−1} so that p = ∞ gives 0 when C < ζ.
    let str_bound = c * ratio.powf(p - T::one());
    Ok(Truncation {
        tail_mass: f.face().measure(&outside),
        tail_mass_bound: ratio.powf(p),
        tail_str: f_str.integrate_mask(Some(&outside)),
        tail_str_bound: str_bound,
        tail_f: f.integrate_mask(Some(&outside)),
        tail_f_bound: str_bound + alpha,
        cut_gh: cut.value,
        cut_mode: cut.mode,
        g,
        h,
        a_mask,
        a_cells,
        zeta,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::HypergraphSystem;
    use crate::norms::DEFAULT_BUDGET;
    use crate::regularity::{decompose, DecomposeCaps, GrowthFunction};

    #[test]
    fn constant_is_untouched() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let fs: Vec<_> = (0..3).map(|i| EdgeFunction::constant(s.edge_face(i), 0.8)).collect();
        let alpha = 0.5;
        let g = GrowthFunction::affine(2.0 / alpha, 2.0 / alpha).unwrap();
        let d = decompose(&s, &fs, &g, 1.0, 2.0, alpha / 2.0, DecomposeCaps::default()).unwrap();
        let t = truncate(&fs[0], &d, 0, 1.0, alpha, DEFAULT_BUDGET, 0).unwrap();
        assert!(t.a_mask.iter().all(|&b| b));
        assert_eq!(t.g.values(), fs[0].values());
        assert!(t.h.values().iter().all(|&v| (v - 0.8).abs() < 1e-15));
        assert_eq!((t.tail_mass, t.tail_f, t.tail_str), (0.0, 0.0, 0.0));
        assert!(t.bounds_hold());
    }

    #[test]
    fn hypotheses_are_enforced() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let fs: Vec<_> = (0..3).map(|i| EdgeFunction::constant(s.edge_face(i), 0.8)).collect();
        let g = GrowthFunction::affine(4.0, 1.0).unwrap();
        let d = decompose(&s, &fs, &g, 1.0, 2.0, 0.25, DecomposeCaps::default()).unwrap();
        // σ = 0.25 needs α ≥ 0.5; growth 4m+1 needs 2/α ≤ 4.
        assert!(truncate(&fs[0], &d, 0, 2.0, 0.4, DEFAULT_BUDGET, 0).is_err());
        assert!(truncate(&fs[0], &d, 0, 2.0, 0.5, DEFAULT_BUDGET, 0).is_ok());
        let weak = GrowthFunction::affine(2.0, 1.0).unwrap();
        let d = decompose(&s, &fs, &weak, 1.0, 2.0, 0.25, DecomposeCaps::default()).unwrap();
        assert!(truncate(&fs[0], &d, 0, 2.0, 0.5, DEFAULT_BUDGET, 0).is_err());
    }

    #[test]
    fn spike_cell_is_cut_off() {
        let s = HypergraphSystem::<f64>::uniform(2, 4, vec![vec![0, 1]]).unwrap();
        let f = EdgeFunction::from_fn(s.edge_face(0), |x| if x[0] < 2 && x[1] < 2 { 3.0 } else { 0.2 }).unwrap();
        let alpha = 0.5;
        let g = GrowthFunction::affine(2.0 / alpha, 2.0 / alpha).unwrap();
        let c = f.lp_norm(2.0).unwrap();
        let d = decompose(&s, &[f.clone()], &g, c, 2.0, alpha / 2.0, DecomposeCaps::default()).unwrap();
        let t = truncate(&f, &d, 0, 1.0, alpha, DEFAULT_BUDGET, 0).unwrap();
        let spike: Vec<bool> = (0..16).map(|i| i / 4 < 2 && i % 4 < 2).collect();
        assert_eq!(t.a_mask, spike.iter().map(|&b| !b).collect::<Vec<_>>());
        assert!((t.tail_mass - 0.25).abs() < 1e-15);
        assert!((t.tail_f - 0.75).abs() < 1e-14);
        assert!(t.h.values().iter().all(|&v| v <= 1.0));
        assert!(t.bounds_hold(), "{t:?}");
    }
}
