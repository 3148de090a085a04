use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::contraction::{FactorGraph, DEFAULT_MAX_ENTRIES};
use crate::error::{Error, Result};
use crate::measure::EdgeFunction;
use crate::params::eta_prime;
use crate::pseudorandom::family::{ConditionId, ConditionReport, PseudorandomFamily, Status, Witness};
use crate::scalar::Scalar;

/// `ω ∈ {0..copies−1}^r` in lexicographic order (first coordinate most significant).
fn patterns(r: usize, copies: usize) -> Vec<Vec<usize>> {
    let total = copies.pow(r as u32);
    (0..total)
        .map(|mut k| {
            let mut w = vec![0; r];
            for slot in w.iter_mut().rev() {
                *slot = k % copies;
                k /= copies;
            }
            w
        })
        .collect()
}

fn graph<T: Scalar>(family: &PseudorandomFamily<T>, copies: usize) -> FactorGraph<T> {
    let weights = family
        .system()
        .spaces()
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.probs().to_vec().into(), copies))
        .collect();
    FactorGraph::new(weights)
}

fn add_copy<T: Scalar>(g: &mut FactorGraph<T>, f: &EdgeFunction<T>, edge: &[usize], omega: &[usize], copies: usize) -> Result<()> {
    let vars: Vec<usize> = edge.iter().zip(omega).map(|(&i, &w)| i * copies + w).collect();
    g.add_edge_function(f, &vars)
}

fn check_shape<T: Scalar>(family: &PseudorandomFamily<T>, exponents: &[Vec<bool>], copies: usize, skip: Option<usize>) -> Result<()> {
    let edges = family.system().edges();
    if exponents.len() != edges.len() {
        return Err(Error::Shape(format!("{} exponent rows for {} edges", exponents.len(), edges.len())));
    }
    for (e, row) in exponents.iter().enumerate() {
        if Some(e) == skip {
            continue;
        }
        let want = copies.pow(edges[e].len() as u32);
        if row.len() != want {
            return Err(Error::Shape(format!("edge {e}: {} exponent flags, expected {want}", row.len())));
        }
    }
    Ok(())
}

/// `∫ ∏_e ∏_ω ν_e^{n_{e,ω}}(x_e^{(ω)}) dμ^ℓ` with `ℓ = family.ell()`.
pub fn p1_integral<T: Scalar>(family: &PseudorandomFamily<T>, exponents: &[Vec<bool>]) -> Result<T> {
    let ell = family.ell();
    check_shape(family, exponents, ell, None)?;
    let mut g = graph(family, ell);
    for (e, edge) in family.system().edges().iter().enumerate() {
        for (omega, &on) in patterns(edge.len(), ell).iter().zip(&exponents[e]) {
            if on {
                add_copy(&mut g, &family.nu()[e], edge, omega, ell)?;
            }
        }
    }
    g.integrate(DEFAULT_MAX_ENTRIES)
}

/// `∫ ∏_{ω∈{0,1}^e} (ν_e − ψ_e)(x_e^{(ω)}) ∏_{e'≠e} ∏_ω ν_{e'}^{n_{e',ω}}(x_{e'}^{(ω)}) dμ²`.
/// The row of `exponents` for `edge` is ignored.
pub fn p2_integral<T: Scalar>(family: &PseudorandomFamily<T>, edge: usize, exponents: &[Vec<bool>]) -> Result<T> {
    check_shape(family, exponents, 2, Some(edge))?;
    let edges = family.system().edges();
    let diff = family.nu()[edge].sub(&family.psi()[edge])?;
    let mut g = graph(family, 2);
    for omega in patterns(edges[edge].len(), 2) {
        add_copy(&mut g, &diff, &edges[edge], &omega, 2)?;
    }
    for (e, es) in edges.iter().enumerate() {
        if e == edge {
            continue;
        }
        for (omega, &on) in patterns(es.len(), 2).iter().zip(&exponents[e]) {
            if on {
                add_copy(&mut g, &family.nu()[e], es, omega, 2)?;
            }
        }
    }
    g.integrate(DEFAULT_MAX_ENTRIES)
}

/// Exponent choices to evaluate: everything when the space has at most
/// `budget` elements, else the structured choices plus `budget` seeded samples.
pub(crate) fn choices(row_lens: &[usize], budget: u64, seed: u64) -> (Vec<Vec<Vec<bool>>>, f64, bool) {
    let bits: usize = row_lens.iter().sum();
    let space = 2f64.powi(bits as i32);
    let unpack = |mut idx: u64| -> Vec<Vec<bool>> {
        row_lens
            .iter()
            .map(|&len| {
                (0..len)
                    .map(|_| {
                        let b = idx & 1 == 1;
                        idx >>= 1;
                        b
                    })
                    .collect()
            })
            .collect()
    };
    if bits < 64 && space <= budget as f64 {
        let list: Vec<_> = (0..(1u64 << bits)).map(unpack).collect();
        return (list, 1.0, true);
    }
    let mut list: Vec<Vec<Vec<bool>>> = vec![
        row_lens.iter().map(|&l| vec![false; l]).collect(),
        row_lens.iter().map(|&l| vec![true; l]).collect(),
    ];
    for (e, &len) in row_lens.iter().enumerate() {
        if len > 0 {
            list.push(row_lens.iter().enumerate().map(|(k, &l)| vec![k == e; l]).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        list.push(row_lens.iter().map(|&l| (0..l).map(|_| rng.gen_bool(0.5)).collect()).collect());
    }
    let coverage = (list.len() as f64 / space).min(1.0);
    (list, coverage, false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFormsReport<T> {
    pub p1: ConditionReport<T>,
    pub p2: ConditionReport<T>,
    /// Pass iff P1, P2 and `‖ψ_e‖_{L_p} ≤ C` all hold; `worst_value` carries `η'`.
    pub certificate: ConditionReport<T>,
    /// `η' = (C+1) η^{1/2^r}`, present iff the certificate is issued.
    pub eta_prime: Option<T>,
    /// Largest `‖ψ_e‖_{L_p}`.
    pub psi_norm: T,
}

/// Evaluates (P1) and (P2) over the exponent-choice spaces (exhaustively when
/// each is within `budget`) and issues the `(C, η', p)` certificate on a pass.
pub fn check_linear_forms<T: Scalar>(family: &PseudorandomFamily<T>, budget: u64, seed: u64) -> Result<LinearFormsReport<T>> {
    let edges = family.system().edges();
    let eta = family.eta();
    let c = family.c();
    let ell = family.ell();

    let p1_rows: Vec<usize> = edges.iter().map(|e| ell.pow(e.len() as u32)).collect();
    let (p1_choices, p1_cov, p1_all) = choices(&p1_rows, budget, seed);
    let p1_vals = p1_choices
        .par_iter()
        .map(|ch| p1_integral(family, ch))
        .collect::<Result<Vec<T>>>()?;
    let p1 = ConditionReport::from_slacks(
        ConditionId::P1,
        p1_vals.into_iter().zip(p1_choices).map(|(v, ch)| {
            let slack = (v - (T::one() - eta)).min(c + eta - v);
            (slack, v, Witness::Choice { edge: None, exponents: ch })
        }),
        p1_cov,
        p1_all,
    );

    let mut p2_items = Vec::new();
    let mut p2_evaluated = 0.0;
    let mut p2_space = 0.0;
    let mut p2_all = true;
    for e in 0..edges.len() {
        let rows: Vec<usize> = edges.iter().enumerate().map(|(k, es)| if k == e { 0 } else { 1 << es.len() }).collect();
        let (list, cov, all) = choices(&rows, budget, seed.wrapping_add(1 + e as u64));
        let space = 2f64.powi(rows.iter().sum::<usize>() as i32);
        p2_space += space;
        p2_evaluated += cov * space;
        p2_all &= all;
        let vals = list.par_iter().map(|ch| p2_integral(family, e, ch)).collect::<Result<Vec<T>>>()?;
        p2_items.extend(
            vals.into_iter()
                .zip(list)
                .map(|(v, ch)| (eta - v.abs(), v, Witness::Choice { edge: Some(e), exponents: ch })),
        );
    }
    let p2 = ConditionReport::from_slacks(ConditionId::P2, p2_items, p2_evaluated / p2_space, p2_all);

    let psi_norm = family
        .psi()
        .iter()
        .map(|s| s.lp_norm(family.p()))
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .fold(T::zero(), T::max);
    let psi_ok = psi_norm <= c + T::tol();
    let ep = eta_prime(c, eta, family.system().r());
    let status = if !(p1.status.ok() && p2.status.ok() && psi_ok) {
        Status::Fail
    } else if p1.status == Status::Pass && p2.status == Status::Pass {
        Status::Pass
    } else {
        Status::SampledPass
    };
    let certificate = ConditionReport {
        id: ConditionId::Certificate,
        status,
        worst_slack: p1.worst_slack.min(p2.worst_slack).min(c - psi_norm),
        worst_value: ep,
        witness: None,
        coverage: p1.coverage.min(p2.coverage),
        evaluated: p1.evaluated + p2.evaluated,
    };
    Ok(LinearFormsReport { eta_prime: status.ok().then_some(ep), p1, p2, certificate, psi_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::HypergraphSystem;

    fn ones(s: &HypergraphSystem<f64>) -> Vec<EdgeFunction<f64>> {
        (0..s.edges().len()).map(|i| EdgeFunction::constant(s.edge_face(i), 1.0)).collect()
    }

    #[test]
    fn unit_family_certified() {
        let s = HypergraphSystem::<f64>::simplex(2, 2).unwrap();
        let fam = PseudorandomFamily::with_unit_models(s.clone(), ones(&s), 1.0, 0.01, f64::INFINITY).unwrap();
        let rep = check_linear_forms(&fam, 1 << 12, 0).unwrap();
        assert_eq!(rep.p1.evaluated, 1 << 12);
        assert_eq!(rep.p1.status, Status::Pass);
        assert!((rep.p1.worst_value - 1.0).abs() < 1e-15);
        assert_eq!(rep.p2.worst_value, 0.0);
        let ep = rep.eta_prime.unwrap();
        assert!((ep - 2.0 * 0.01f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn zero_exponents_integrate_to_one() {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let nu: Vec<_> = (0..3)
            .map(|i| EdgeFunction::from_fn(s.edge_face(i), |x| 0.5 + (x[0] * x[1]) as f64).unwrap())
            .collect();
        let fam = PseudorandomFamily::with_unit_models(s, nu, 2.0, 0.1, 2.0).unwrap();
        let zero: Vec<Vec<bool>> = (0..3).map(|_| vec![false; 36]).collect();
        assert_eq!(fam.ell(), 6);
        assert!((p1_integral(&fam, &zero).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_keeps_structured_choices() {
        let (list, cov, all) = choices(&[3, 2], 4, 9);
        assert!(!all);
        assert_eq!(list.len(), 2 + 2 + 4);
        assert_eq!(list[2], vec![vec![true; 3], vec![false; 2]]);
        assert!((cov - 8.0 / 32.0).abs() < 1e-15);
    }
}
