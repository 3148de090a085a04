use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::EdgeFunction;
use crate::params::ell_param;
use crate::pseudorandom::forms::choices;
use crate::pseudorandom::{p1_integral, p2_integral, ConditionId, ConditionReport, PseudorandomFamily, Status, Witness};
use crate::scalar::Scalar;
use crate::zn::system::{build_ap_system, default_coeffs, differences, reduce};
use crate::zn::weight::ZnWeight;

/// Parameters of the cyclic pseudorandomness check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZnPseudoParams<T> {
    pub k: usize,
    pub c: T,
    pub p: T,
    pub eta: T,
    /// Exact enumeration when the tuple space has at most this many points;
    /// otherwise this many Monte Carlo samples. Also caps exponent choices.
    pub budget: u64,
    pub seed: u64,
}

/// One evaluated average.
#[derive(Debug, Clone, PartialEq)]
pub struct ZnEvaluation<T> {
    pub id: ConditionId,
    /// For (P2), the index `j` carrying the `ν − ψ_j` factors.
    pub edge: Option<usize>,
    pub exponents: Vec<Vec<bool>>,
    pub value: T,
    /// Zero for exact enumeration.
    pub std_error: T,
}

#[derive(Debug, Clone)]
pub struct ZnPseudoReport<T> {
    pub ell: usize,
    /// Whether every average was an exact enumeration.
    pub exact: bool,
    pub p1_tuples: u64,
    pub p2_tuples: u64,
    /// Cyclic (P1); on sampled averages the slack is taken at three standard errors.
    pub p1: ConditionReport<T>,
    /// Cyclic (P2), same convention.
    pub p2: ConditionReport<T>,
    /// Largest `‖ψ_j‖_{L_p}`.
    pub psi_norm: T,
    pub status: Status,
    pub max_std_error: T,
    /// Largest deviation from the generic contraction on a spread of choices,
    /// present when the averages were exact.
    pub cross_check: Option<T>,
    pub evaluations: Vec<ZnEvaluation<T>>,
}

/// Always-on factor `ν(Σ c·x_v) − ψ(x_{v₁},…)`.
struct Fixed<'a> {
    lin: Vec<(usize, u64)>,
    psi: &'a [f64],
}

struct Forms<'a> {
    n: u64,
    nvars: usize,
    nu: &'a [f64],
    terms: Vec<Vec<(usize, u64)>>,
    fixed: Vec<Fixed<'a>>,
}

impl Forms<'_> {
    fn lin(&self, lin: &[(usize, u64)], xs: &[u64]) -> f64 {
        let s: u64 = lin.iter().map(|&(v, c)| c * xs[v]).sum();
        self.nu[(s % self.n) as usize]
    }

    fn fixed_product(&self, xs: &[u64]) -> f64 {
        self.fixed.iter().fold(1.0, |acc, f| {
            let idx = f.lin.iter().fold(0u64, |a, &(v, _)| a * self.n + xs[v]) as usize;
            acc * (self.lin(&f.lin, xs) - f.psi[idx])
        })
    }
}

const CHUNK: u64 = 1024;

struct Averages {
    means: Vec<f64>,
    std_errors: Vec<f64>,
    exact: bool,
    tuples: u64,
}

/// Averages of `fixed · ∏_{b∈mask} term_b` over all tuples (or `budget`
/// seeded samples), one per mask. Chunking is fixed, so results do not
/// depend on the thread count.
fn averages(forms: &Forms, masks: &[u64], all_masks: bool, budget: u64, seed: u64) -> Averages {
    let bits = forms.terms.len();
    let space = (forms.n as f64).powi(forms.nvars as i32);
    let exact = space <= budget as f64;
    let tuples = if exact { space as u64 } else { budget.max(2) };
    let dp = all_masks && bits <= 16;
    let chunks = tuples.div_ceil(CHUNK);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sums = vec![0.0; masks.len()];
            let mut sq = vec![0.0; masks.len()];
            let mut xs = vec![0u64; forms.nvars];
            let mut vals = vec![0.0; bits];
            let mut table = if dp { vec![0.0; 1 << bits] } else { Vec::new() };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            for t in c * CHUNK..((c + 1) * CHUNK).min(tuples) {
                if exact {
                    let mut rest = t;
                    for x in xs.iter_mut().rev() {
                        *x = rest % forms.n;
                        rest /= forms.n;
                    }
                } else {
                    xs.iter_mut().for_each(|x| *x = rng.gen_range(0..forms.n));
                }
                let base = forms.fixed_product(&xs);
                for (v, term) in vals.iter_mut().zip(&forms.terms) {
                    *v = forms.lin(term, &xs);
                }
                if dp {
                    table[0] = base;
                    for mask in 1usize..(1 << bits) {
                        let low = mask.trailing_zeros() as usize;
                        table[mask] = table[mask & (mask - 1)] * vals[low];
                    }
                    for (i, &m) in masks.iter().enumerate() {
                        let v = table[m as usize];
                        sums[i] += v;
                        sq[i] += v * v;
                    }
                } else {
                    for (i, &m) in masks.iter().enumerate() {
                        let mut v = base;
                        let mut rest = m;
                        while rest != 0 {
                            v *= vals[rest.trailing_zeros() as usize];
                            rest &= rest - 1;
                        }
                        sums[i] += v;
                        sq[i] += v * v;
                    }
                }
            }
            (sums, sq)
        })
        .collect();
    let mut sums = vec![0.0; masks.len()];
    let mut sq = vec![0.0; masks.len()];
    for (s, q) in parts {
        for i in 0..masks.len() {
            sums[i] += s[i];
            sq[i] += q[i];
        }
    }
    let nt = tuples as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / nt).collect();
    let std_errors = if exact {
        vec![0.0; masks.len()]
    } else {
        means.iter().zip(&sq).map(|(m, q)| ((q / nt - m * m).max(0.0) / (nt - 1.0)).sqrt()).collect()
    };
    Averages { means, std_errors, exact, tuples }
}

/// `ω ∈ {0..copies−1}^len` in lexicographic order.
fn patterns(len: usize, copies: usize) -> Vec<Vec<usize>> {
    (0..copies.pow(len as u32))
        .map(|mut t| {
            let mut w = vec![0; len];
            for slot in w.iter_mut().rev() {
                *slot = t % copies;
                t /= copies;
            }
            w
        })
        .collect()
}

fn to_mask(rows: &[Vec<bool>]) -> u64 {
    rows.iter().flatten().enumerate().filter(|(_, &b)| b).fold(0u64, |m, (i, _)| m | 1 << i)
}

/// Term list of index `j` on `copies` copies: one linear form per `ω`.
fn row_terms(diff: &[Vec<u64>], j: usize, copies: usize) -> Vec<Vec<(usize, u64)>> {
    let k = diff.len();
    let others: Vec<usize> = (0..k).filter(|&i| i != j).collect();
    patterns(k - 1, copies)
        .into_iter()
        .map(|w| others.iter().zip(&w).map(|(&i, &c)| (i * copies + c, diff[j][i])).collect())
        .collect()
}

fn lp_uniform(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / values.len() as f64).powf(1.0 / p)
    }
}

/// Evaluates the cyclic (P1)/(P2) averages for `ν` with coefficients `a_j = j`.
/// `psis[j]` is a table on `Z_n^{[k]∖{j}}`, row-major over ascending indices;
/// it defaults to `ψ_j ≡ 1`.
pub fn check_zn_pseudo<T: Scalar>(nu: &ZnWeight<T>, psis: Option<&[Vec<T>]>, params: &ZnPseudoParams<T>) -> Result<ZnPseudoReport<T>> {
    let k = params.k;
    if k < 3 {
        return Err(Error::Precondition(format!("k = {k} must be at least 3")));
    }
    let n = nu.n();
    let cells = n.pow(k as u32 - 1);
    let ones = vec![vec![T::one(); cells]; k];
    let psis = psis.unwrap_or(&ones);
    if psis.len() != k || psis.iter().any(|p| p.len() != cells) {
        return Err(Error::Shape(format!("need {k} tables of {cells} values for ψ")));
    }
    let ell = ell_param(params.c.to_f64_lossy(), params.p.to_f64_lossy())?;
    let eta = params.eta.to_f64_lossy();
    let c = params.c.to_f64_lossy();
    let coeffs = reduce(&default_coeffs(k), n);
    let diff = differences(&coeffs, n as u64);
    let nu_f: Vec<f64> = nu.values().iter().map(|v| v.to_f64_lossy()).collect();
    let psi_f: Vec<Vec<f64>> = psis.iter().map(|p| p.iter().map(|v| v.to_f64_lossy()).collect()).collect();

    // (P1) on ℓ copies.
    let p1_forms = Forms {
        n: n as u64,
        nvars: k * ell,
        nu: &nu_f,
        terms: (0..k).flat_map(|j| row_terms(&diff, j, ell)).collect(),
        fixed: Vec::new(),
    };
    if p1_forms.terms.len() > 64 {
        return Err(Error::Unsupported(format!("{} exponent flags exceed 64", p1_forms.terms.len())));
    }
    let rows = vec![ell.pow(k as u32 - 1); k];
    let (p1_choices, p1_cov, p1_all) = choices(&rows, params.budget, params.seed);
    let masks: Vec<u64> = p1_choices.iter().map(|ch| to_mask(ch)).collect();
    let p1_avg = averages(&p1_forms, &masks, p1_all, params.budget, params.seed);
    let z = |se: f64| if p1_avg.exact { 0.0 } else { 3.0 * se };
    let mut evaluations = Vec::new();
    let mut p1_items = Vec::new();
    for ((ch, &v), &se) in p1_choices.iter().zip(&p1_avg.means).zip(&p1_avg.std_errors) {
        let slack = (v - (1.0 - eta)).min(c + eta - v) + z(se);
        p1_items.push((T::lit(slack), T::lit(v), Witness::Choice { edge: None, exponents: ch.clone() }));
        evaluations.push(ZnEvaluation { id: ConditionId::P1, edge: None, exponents: ch.clone(), value: T::lit(v), std_error: T::lit(se) });
    }
    let space1 = (n as f64).powi((k * ell) as i32);
    let tuple_cov1 = if p1_avg.exact { 1.0 } else { p1_avg.tuples as f64 / space1 };
    let p1 = ConditionReport::from_slacks(ConditionId::P1, p1_items, p1_cov * tuple_cov1, p1_all && p1_avg.exact);

    // (P2) on two copies, one j at a time.
    let mut p2_items = Vec::new();
    let mut p2_exact = true;
    let mut p2_all = true;
    let mut p2_tuples = 0;
    let mut p2_cov = 0.0;
    let mut max_se = p1_avg.std_errors.iter().copied().fold(0.0, f64::max);
    for j in 0..k {
        let fixed = row_terms(&diff, j, 2).into_iter().map(|lin| Fixed { lin, psi: &psi_f[j] }).collect();
        let forms = Forms {
            n: n as u64,
            nvars: 2 * k,
            nu: &nu_f,
            terms: (0..k).filter(|&i| i != j).flat_map(|i| row_terms(&diff, i, 2)).collect(),
            fixed,
        };
        let rows: Vec<usize> = (0..k).map(|i| if i == j { 0 } else { 1 << (k - 1) }).collect();
        let (list, cov, all) = choices(&rows, params.budget, params.seed.wrapping_add(1 + j as u64));
        let masks: Vec<u64> = list.iter().map(|ch| to_mask(ch)).collect();
        let avg = averages(&forms, &masks, all, params.budget, params.seed.wrapping_add(1 + j as u64));
        p2_exact &= avg.exact;
        p2_all &= all;
        p2_tuples = avg.tuples;
        p2_cov += cov / k as f64;
        for ((ch, &v), &se) in list.into_iter().zip(&avg.means).zip(&avg.std_errors) {
            max_se = max_se.max(se);
            let slack = eta - v.abs() + if avg.exact { 0.0 } else { 3.0 * se };
            evaluations.push(ZnEvaluation { id: ConditionId::P2, edge: Some(j), exponents: ch.clone(), value: T::lit(v), std_error: T::lit(se) });
            p2_items.push((T::lit(slack), T::lit(v), Witness::Choice { edge: Some(j), exponents: ch }));
        }
    }
    let p2 = ConditionReport::from_slacks(ConditionId::P2, p2_items, p2_cov, p2_all && p2_exact);

    let psi_norm = psi_f.iter().map(|p| lp_uniform(p, params.p.to_f64_lossy())).fold(0.0, f64::max);
    let exact = p1_avg.exact && p2_exact;
    let status = if !(p1.status.ok() && p2.status.ok() && psi_norm <= c + 1e-9) {
        Status::Fail
    } else if p1.status == Status::Pass && p2.status == Status::Pass {
        Status::Pass
    } else {
        Status::SampledPass
    };
    let cross_check = if exact { Some(cross_validate(nu, psis, params, &evaluations)?) } else { None };
    Ok(ZnPseudoReport {
        ell,
        exact,
        p1_tuples: p1_avg.tuples,
        p2_tuples,
        p1,
        p2,
        psi_norm: T::lit(psi_norm),
        status,
        max_std_error: T::lit(max_se),
        cross_check,
        evaluations,
    })
}

/// The same family as a generic hypergraph family on the built system.
pub fn zn_family<T: Scalar>(nu: &ZnWeight<T>, psis: Option<&[Vec<T>]>, params: &ZnPseudoParams<T>) -> Result<PseudorandomFamily<T>> {
    let ap = build_ap_system(nu, params.k, None)?;
    let psi = match psis {
        Some(tables) => tables
            .iter()
            .enumerate()
            .map(|(j, t)| EdgeFunction::new(ap.system.edge_face(j), t.clone()))
            .collect::<Result<Vec<_>>>()?,
        None => (0..params.k).map(|j| EdgeFunction::constant(ap.system.edge_face(j), T::one())).collect(),
    };
    PseudorandomFamily::new(ap.system, ap.weights, psi, params.c, params.eta, params.p)
}

/// Recomputes up to 32 evenly spread evaluations by contraction and returns
/// the largest relative deviation.
fn cross_validate<T: Scalar>(
    nu: &ZnWeight<T>,
    psis: &[Vec<T>],
    params: &ZnPseudoParams<T>,
    evaluations: &[ZnEvaluation<T>],
) -> Result<T> {
    let family = zn_family(nu, Some(psis), params)?;
    let step = evaluations.len().div_ceil(32).max(1);
    let picked: Vec<&ZnEvaluation<T>> = evaluations.iter().step_by(step).collect();
    let devs = picked
        .par_iter()
        .map(|ev| {
            let generic = match ev.edge {
                None => p1_integral(&family, &ev.exponents)?,
                Some(j) => p2_integral(&family, j, &ev.exponents)?,
            };
            Ok((generic - ev.value).abs() / generic.abs().max(T::one()))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(devs.into_iter().fold(T::zero(), T::max))
}
