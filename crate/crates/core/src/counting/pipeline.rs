use rayon::prelude::*;

use crate::counting::dense::{dense_removal, intersection_is_empty, DenseRemoval};
use crate::counting::density::{check_edges, counting_gap, product_density};
use crate::counting::truncate::{truncate, Truncation};
use crate::error::{Error, Result};
use crate::measure::{EdgeFunction, Face};
use crate::norms::DEFAULT_BUDGET;
use crate::params::zeta as zeta_param;
use crate::pseudorandom::PseudorandomFamily;
use crate::regularity::{decompose, DecomposeCaps, Decomposition, GrowthFunction};
use crate::scalar::Scalar;

/// Overrides for the constants the removal argument only proves to exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemovalKnobs<T> {
    /// Density bound `δ`; defaults to the observed `∫∏f_e`.
    pub delta: Option<T>,
    /// Cut tolerance `α`; defaults to `ε/6`.
    pub alpha: Option<T>,
    /// Truncation level; defaults to `ζ(C,p,ε)`.
    pub zeta: Option<T>,
    /// Level defining `E_e = [h_e ≥ threshold]`; defaults to `ε/(6ζ)`.
    pub threshold: Option<T>,
    /// Mass the dense step may delete per edge; defaults to `ε/(6ζ)`.
    pub dense_epsilon: Option<T>,
    pub caps: DecomposeCaps,
    /// Exact cut-norm budget (cells) for the truncation checks.
    pub cut_budget: u64,
    /// Pattern budget for the exhaustive dense search.
    pub removal_budget: u64,
}

impl<T> Default for RemovalKnobs<T> {
    fn default() -> Self {
        Self {
            delta: None,
            alpha: None,
            zeta: None,
            threshold: None,
            dense_epsilon: None,
            caps: DecomposeCaps::default(),
            cut_budget: DEFAULT_BUDGET,
            removal_budget: 1 << 22,
        }
    }
}

/// A partition of a lower face into its atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerPartition {
    pub coords: Vec<usize>,
    pub cells: usize,
}

/// The three terms bounding `∫_{X∖F_e} f_e`, each against `ε/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTerms<T> {
    /// `∫_{X∖F_e} h_e`.
    pub t1: T,
    /// `threshold + ζ·μ(E_e∖F_e)`.
    pub t1_estimate: T,
    /// `|∫_{X∖F_e} (g_e − h_e)|`.
    pub t2: T,
    /// `|∫_{X∖F_e} (f_e − g_e)|`.
    pub t3: T,
    /// `(C+1)^p ζ^{1−p} + α`.
    pub t3_estimate: T,
    pub budget: T,
}

impl<T: Scalar> ErrorTerms<T> {
    pub fn hold(&self) -> bool {
        let b = self.budget + T::tol();
        self.t1 <= b && self.t2 <= b && self.t3 <= b
    }
}

#[derive(Debug, Clone)]
pub struct PipelineTrace<T> {
    pub epsilon: T,
    pub zeta: T,
    pub delta: T,
    pub alpha: T,
    pub sigma: T,
    pub growth: GrowthFunction,
    pub threshold: T,
    pub dense_epsilon: T,
    pub density_f: T,
    pub density_g: T,
    pub density_h: T,
    /// `∫∏g_e − ∫∏h_e`.
    pub gap: T,
}

#[derive(Debug, Clone)]
pub struct RemovalResult<T> {
    /// `F_e` as atom masks on the edge faces.
    pub f_masks: Vec<Vec<bool>>,
    /// `E_e = [h_e ≥ threshold]`.
    pub e_masks: Vec<Vec<bool>>,
    /// Per edge, the lower-face partitions generating the algebra `F_e` lives in.
    pub partitions: Vec<Vec<LowerPartition>>,
    /// Largest lower partition size.
    pub k: usize,
    /// `∫_{X∖F_e} f_e` per edge.
    pub leftover: Vec<T>,
    pub terms: Vec<ErrorTerms<T>>,
    pub empty_intersection: bool,
    pub dense: DenseRemoval<T>,
    pub truncations: Vec<Truncation<T>>,
    pub decomposition: Decomposition<T>,
    pub trace: PipelineTrace<T>,
}

fn stage(stage: &'static str, detail: String) -> Error {
    Error::Stage { stage, detail }
}

/// Whether `mask` is constant on every atom of the algebra generated by the
/// atom partitions of the boundary faces of `face`.
fn measurable_wrt_boundary<T: Scalar>(face: &Face<T>, mask: &[bool]) -> bool {
    let projections: Vec<Vec<usize>> = face.boundary().iter().map(|b| face.projection(b)).collect();
    let mut seen = std::collections::HashMap::new();
    (0..face.size()).all(|x| {
        let key: Vec<usize> = projections.iter().map(|p| p[x]).collect();
        *seen.entry(key).or_insert(mask[x]) == mask[x]
    })
}

/// Runs the relative removal argument on `fs` with `0 ≤ f_e ≤ ν_e`: decompose,
/// truncate, compare counts, remove densely, then re-verify everything claimed.
pub fn relative_removal<T: Scalar>(
    family: &PseudorandomFamily<T>,
    fs: &[EdgeFunction<T>],
    epsilon: T,
    knobs: &RemovalKnobs<T>,
) -> Result<RemovalResult<T>> {
    let system = family.system();
    check_edges(system, fs, "functions")?;
    if !(epsilon > T::zero() && epsilon <= T::one()) {
        return Err(Error::Precondition(format!("ε = {epsilon} must lie in (0,1]")));
    }
    for (e, (f, nu)) in fs.iter().zip(family.nu()).enumerate() {
        for (x, (&fv, &nv)) in f.values().iter().zip(nu.values()).enumerate() {
            if fv < T::zero() || fv > nv + T::eps() {
                return Err(Error::Domination {
                    edge: e,
                    point: f.face().unflatten(x),
                    f: fv.to_f64_lossy(),
                    nu: nv.to_f64_lossy(),
                });
            }
        }
    }
    let density_f = product_density(system, fs)?;
    let delta = knobs.delta.unwrap_or(density_f);
    if density_f > delta + T::tol() {
        return Err(Error::Precondition(format!("∫∏f_e = {density_f} exceeds δ = {delta}")));
    }
    let six = T::lit(6.0);
    let zeta = knobs.zeta.unwrap_or_else(|| zeta_param(family.c(), family.p(), epsilon));
    let alpha = knobs.alpha.unwrap_or(epsilon / six);
    let threshold = knobs.threshold.unwrap_or(epsilon / (six * zeta));
    let dense_epsilon = knobs.dense_epsilon.unwrap_or(epsilon / (six * zeta));
    let sigma = alpha / T::lit(2.0);
    let slope = 2.0 / alpha.to_f64_lossy();
    let growth = GrowthFunction::affine(slope, slope)?;

    let c1 = family.c() + T::one();
    let dec = decompose(system, fs, &growth, c1, family.p(), sigma, knobs.caps)?;
    if !dec.bounds_hold(T::tol()) {
        return Err(stage(
            "decompose",
            format!("norm bounds not met ({})", dec.failure.clone().unwrap_or_else(|| "certified".into())),
        ));
    }

    let truncations = (0..fs.len())
        .into_par_iter()
        .map(|e| truncate(&fs[e], &dec, e, zeta, alpha, knobs.cut_budget, knobs.caps.seed.wrapping_add(e as u64)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(e) = truncations.iter().position(|t| !t.bounds_hold()) {
        let t = &truncations[e];
        return Err(stage(
            "truncate",
            format!("edge {e}: tail ∫f = {} (bound {}), cut ‖g−h‖ = {} (α = {})", t.tail_f, t.tail_f_bound, t.cut_gh, alpha),
        ));
    }
    let gs: Vec<_> = truncations.iter().map(|t| t.g.clone()).collect();
    let hs: Vec<_> = truncations.iter().map(|t| t.h.clone()).collect();
    let gap = counting_gap(system, &gs, &hs, 0, T::one(), 1)?;
    if gap.delta.abs() > delta + T::tol() {
        return Err(stage("count", format!("|∫∏g − ∫∏h| = {} exceeds δ = {delta}", gap.delta.abs())));
    }

    let e_masks: Vec<Vec<bool>> = hs.iter().map(|h| h.values().iter().map(|&v| v >= threshold).collect()).collect();
    let dense = dense_removal(system, &e_masks, dense_epsilon, knobs.removal_budget)
        .map_err(|err| stage("dense-removal", err.to_string()))?;
    let f_masks = dense.f_masks.clone();

    let empty_intersection = intersection_is_empty(system, &f_masks)?;
    if !empty_intersection {
        return Err(stage("verify", "a point of X lies in every F_e".into()));
    }
    let partitions: Vec<Vec<LowerPartition>> = (0..fs.len())
        .map(|e| {
            system
                .edge_face(e)
                .boundary()
                .iter()
                .map(|b| LowerPartition { coords: b.coords().to_vec(), cells: b.size() })
                .collect()
        })
        .collect();
    let k = partitions.iter().flatten().map(|p| p.cells).max().unwrap_or(1);
    for (e, mask) in f_masks.iter().enumerate() {
        if !measurable_wrt_boundary(&system.edge_face(e), mask) {
            return Err(stage("verify", format!("F_{e} is not measurable for its lower partitions")));
        }
    }

    let budget = epsilon / T::lit(3.0);
    let mut leftover = Vec::with_capacity(fs.len());
    let mut terms = Vec::with_capacity(fs.len());
    for (e, f) in fs.iter().enumerate() {
        let out: Vec<bool> = f_masks[e].iter().map(|&b| !b).collect();
        let t = &truncations[e];
        let face = f.face();
        let e_minus_f: Vec<bool> = e_masks[e].iter().zip(&f_masks[e]).map(|(&a, &b)| a && !b).collect();
        let term = ErrorTerms {
            t1: t.h.integrate_mask(Some(&out)),
            t1_estimate: threshold + zeta * face.measure(&e_minus_f),
            t2: t.g.sub(&t.h)?.integrate_mask(Some(&out)).abs(),
            t3: f.sub(&t.g)?.integrate_mask(Some(&out)).abs(),
            t3_estimate: t.tail_f_bound,
            budget,
        };
        let left = f.integrate_mask(Some(&out));
        if !term.hold() {
            return Err(stage("verify", format!("edge {e}: error terms {} / {} / {} exceed ε/3 = {budget}", term.t1, term.t2, term.t3)));
        }
        if left > epsilon + T::tol() {
            return Err(stage("verify", format!("edge {e}: ∫ outside F_e = {left} exceeds ε = {epsilon}")));
        }
        leftover.push(left);
        terms.push(term);
    }

    let trace = PipelineTrace {
        epsilon,
        zeta,
        delta,
        alpha,
        sigma,
        growth,
        threshold,
        dense_epsilon,
        density_f,
        density_g: gap.density_g,
        density_h: gap.density_h,
        gap: gap.delta,
    };
    Ok(RemovalResult {
        f_masks,
        e_masks,
        partitions,
        k,
        leftover,
        terms,
        empty_intersection,
        dense,
        truncations,
        decomposition: dec,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::HypergraphSystem;

    fn unit_family(s: &HypergraphSystem<f64>) -> PseudorandomFamily<f64> {
        let nu = (0..s.edges().len()).map(|i| EdgeFunction::constant(s.edge_face(i), 1.0)).collect();
        PseudorandomFamily::with_unit_models(s.clone(), nu, 1.0, 0.01, f64::INFINITY).unwrap()
    }

    #[test]
    fn zero_functions() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let fs: Vec<_> = (0..3).map(|i| EdgeFunction::constant(s.edge_face(i), 0.0)).collect();
        let r = relative_removal(&unit_family(&s), &fs, 0.2, &RemovalKnobs::default()).unwrap();
        assert!(r.empty_intersection);
        assert!(r.leftover.iter().all(|&l| l == 0.0));
        assert!(r.f_masks.iter().any(|m| m.iter().all(|&b| !b)));
    }

    #[test]
    fn domination_names_the_point() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let mut fs: Vec<_> = (0..3).map(|i| EdgeFunction::constant(s.edge_face(i), 0.0)).collect();
        fs[1] = EdgeFunction::from_fn(s.edge_face(1), |x| if x == [2, 1] { 1.5 } else { 0.0 }).unwrap();
        match relative_removal(&unit_family(&s), &fs, 0.2, &RemovalKnobs::default()) {
            Err(Error::Domination { edge, point, .. }) => assert_eq!((edge, point), (1, vec![2, 1])),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn triangle_free_indicators() {
        let s = HypergraphSystem::<f64>::simplex(2, 4).unwrap();
        // The first two force x1 ≡ x0 ≡ x2 mod 2 while the third needs x1 ≢ x2.
        let fs = vec![
            EdgeFunction::from_fn(s.edge_face(0), |x| if x[0] % 2 == x[1] % 2 && x[0] < 2 { 1.0 } else { 0.0 }).unwrap(),
            EdgeFunction::from_fn(s.edge_face(1), |x| if x[0] % 2 == x[1] % 2 && x[1] < 2 { 1.0 } else { 0.0 }).unwrap(),
            EdgeFunction::from_fn(s.edge_face(2), |x| if x[0] % 2 != x[1] % 2 && x[0] == 1 { 1.0 } else { 0.0 }).unwrap(),
        ];
        let fam = unit_family(&s);
        assert_eq!(product_density(&s, &fs).unwrap(), 0.0);
        let r = relative_removal(&fam, &fs, 0.2, &RemovalKnobs::default()).unwrap();
        assert!(r.empty_intersection);
        for (l, t) in r.leftover.iter().zip(&r.terms) {
            assert!(*l <= 0.2 && t.hold());
        }
    }
}
