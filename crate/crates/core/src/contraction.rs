//! Sum-product contraction of weighted factors over product probability spaces.
//!
//! A [`FactorGraph`] has one variable per coordinate, each carrying its
//! probability vector, and a list of tables indexed by subsets of variables.
//! Contraction integrates the product of all tables against the product
//! measure, eliminating variables one at a time (fewest incident factors
//! first, ties broken by the size of the table created, then by index).

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::EdgeFunction;
use crate::scalar::Scalar;

/// Default cap on the number of entries of any intermediate table.
pub const DEFAULT_MAX_ENTRIES: u64 = 1 << 26;

const PAR_THRESHOLD: usize = 4096;

/// A table over `vars`, row-major with the first variable most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor<T> {
    vars: Vec<usize>,
    dims: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Factor<T> {
    pub fn new(vars: Vec<usize>, dims: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if vars.len() != dims.len() {
            return Err(Error::Shape(format!("{} variables but {} dimensions", vars.len(), dims.len())));
        }
        let size: usize = dims.iter().product();
        if values.len() != size {
            return Err(Error::Shape(format!("factor over {vars:?} needs {size} values, got {}", values.len())));
        }
        let mut sorted = vars.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Shape(format!("repeated variable in {vars:?}")));
        }
        Ok(Self { vars, dims, values })
    }

    pub fn scalar(v: T) -> Self {
        Self { vars: Vec::new(), dims: Vec::new(), values: vec![v] }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }
}

/// Variables with their probability vectors, plus factors over them.
#[derive(Debug, Clone)]
pub struct FactorGraph<T> {
    weights: Vec<Arc<[T]>>,
    factors: Vec<Factor<T>>,
}

impl<T: Scalar> FactorGraph<T> {
    pub fn new(weights: Vec<Arc<[T]>>) -> Self {
        Self { weights, factors: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.weights.len()
    }

    pub fn add(&mut self, factor: Factor<T>) -> Result<()> {
        for (&v, &d) in factor.vars.iter().zip(&factor.dims) {
            match self.weights.get(v) {
                Some(w) if w.len() == d => {}
                Some(w) => {
                    return Err(Error::Shape(format!("variable {v} has {} atoms, factor expects {d}", w.len())));
                }
                None => return Err(Error::Shape(format!("unknown variable {v}"))),
            }
        }
        self.factors.push(factor);
        Ok(())
    }

    /// Adds `f` re-indexed so that face coordinate `i` becomes variable `var_of[i]`.
    pub fn add_edge_function(&mut self, f: &EdgeFunction<T>, var_of: &[usize]) -> Result<()> {
        let face = f.face();
        if var_of.len() != face.arity() {
            return Err(Error::Shape(format!("{} variables for a face of arity {}", var_of.len(), face.arity())));
        }
        self.add(Factor::new(var_of.to_vec(), face.dims(), f.values().to_vec())?)
    }

    /// `∫ ∏ factors dμ` over all variables.
    pub fn integrate(&self, max_entries: u64) -> Result<T> {
        Ok(self.contract(&[], max_entries)?.values[0])
    }

    /// Integrates out every variable not in `keep`; the result is a table over
    /// `keep` in the given order.
    pub fn contract(&self, keep: &[usize], max_entries: u64) -> Result<Factor<T>> {
        let n = self.weights.len();
        let mut kept = vec![false; n];
        for &k in keep {
            if k >= n || kept[k] {
                return Err(Error::Shape(format!("invalid kept variable {k}")));
            }
            kept[k] = true;
        }
        let mut live: Vec<Factor<T>> = self.factors.clone();
        let mut pending: Vec<usize> = (0..n).filter(|&v| !kept[v]).collect();
        while !pending.is_empty() {
            let (pos, v) = pending
                .iter()
                .enumerate()
                .map(|(pos, &v)| {
                    let incident = live.iter().filter(|f| f.vars.contains(&v)).count();
                    (incident, self.union_size(&live, v), v, pos)
                })
                .min_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).expect("finite sizes"))
                .map(|(_, _, v, pos)| (pos, v))
                .expect("nonempty");
            pending.remove(pos);
            let (touching, rest): (Vec<Factor<T>>, Vec<Factor<T>>) = live.into_iter().partition(|f| f.vars.contains(&v));
            live = rest;
            if touching.is_empty() {
                continue;
            }
            let mut out_vars: Vec<usize> = touching.iter().flat_map(|f| f.vars.iter().copied()).filter(|&u| u != v).collect();
            out_vars.sort_unstable();
            out_vars.dedup();
            live.push(self.combine(&touching, &out_vars, Some(v), max_entries)?);
        }
        let refs: Vec<Factor<T>> = live;
        self.combine(&refs, keep, None, max_entries)
    }

    fn union_size(&self, live: &[Factor<T>], v: usize) -> f64 {
        let mut vars: Vec<usize> = live
            .iter()
            .filter(|f| f.vars.contains(&v))
            .flat_map(|f| f.vars.iter().copied())
            .filter(|&u| u != v)
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars.iter().map(|&u| self.weights[u].len() as f64).product()
    }

    /// Product of `factors` as a table over `out_vars`, integrating `sum_var` if given.
    fn combine(&self, factors: &[Factor<T>], out_vars: &[usize], sum_var: Option<usize>, max_entries: u64) -> Result<Factor<T>> {
        let out_dims: Vec<usize> = out_vars.iter().map(|&u| self.weights[u].len()).collect();
        let out_size_f: f64 = out_dims.iter().map(|&d| d as f64).product();
        if out_size_f > max_entries as f64 {
            return Err(Error::BudgetExceeded { needed: out_size_f, budget: max_entries });
        }
        let out_size = out_size_f as usize;
        // Per factor: stride contributed by each output position, and by the summed variable.
        let plans: Vec<(Vec<usize>, usize)> = factors
            .iter()
            .map(|f| {
                let st = f.strides();
                let per_out = out_vars
                    .iter()
                    .map(|u| f.vars.iter().position(|x| x == u).map_or(0, |k| st[k]))
                    .collect();
                let sum_stride = sum_var.and_then(|v| f.vars.iter().position(|&x| x == v)).map_or(0, |k| st[k]);
                (per_out, sum_stride)
            })
            .collect();
        let sum_weights: Option<&[T]> = sum_var.map(|v| &self.weights[v][..]);
        let entry = |o: usize| -> T {
            let mut rem = o;
            let mut base = vec![0usize; factors.len()];
            for pos in (0..out_dims.len()).rev() {
                let digit = rem % out_dims[pos];
                rem /= out_dims[pos];
                for (b, (per_out, _)) in base.iter_mut().zip(&plans) {
                    *b += digit * per_out[pos];
                }
            }
            match sum_weights {
                None => factors.iter().zip(&base).fold(T::one(), |acc, (f, &b)| acc * f.values[b]),
                Some(w) => {
                    let mut total = T::zero();
                    for (x, &wx) in w.iter().enumerate() {
                        if wx == T::zero() {
                            continue;
                        }
                        let mut prod = wx;
                        for ((f, &b), (_, s)) in factors.iter().zip(&base).zip(&plans) {
                            prod = prod * f.values[b + x * s];
                            if prod == T::zero() {
                                break;
                            }
                        }
                        total = total + prod;
                    }
                    total
                }
            }
        };
        let values: Vec<T> = if out_size >= PAR_THRESHOLD {
            (0..out_size).into_par_iter().map(entry).collect()
        } else {
            (0..out_size).map(entry).collect()
        };
        Ok(Factor { vars: out_vars.to_vec(), dims: out_dims, values })
    }
}
