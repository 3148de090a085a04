use crate::error::{Error, Result};

/// An increasing `F: ℕ → ℝ` with `F(n) ≥ n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthFunction {
    /// `F(m) = max(m + 1, ⌈a·m + b⌉)`.
    Affine { a: f64, b: f64 },
    /// `F(m) = values[m]`, continued by `+1` per step past the end.
    Table(Vec<f64>),
}

impl GrowthFunction {
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a >= 0.0) {
            return Err(Error::Precondition(format!("affine growth needs finite a ≥ 0, got a = {a}, b = {b}")));
        }
        Ok(Self::Affine { a, b })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("empty growth table".into()));
        }
        for (m, w) in values.iter().enumerate() {
            if !(w.is_finite() && *w >= m as f64 + 1.0) {
                return Err(Error::Precondition(format!("growth table entry {m} = {w} is below {}", m + 1)));
            }
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition("growth table is not increasing".into()));
        }
        Ok(Self::Table(values))
    }

    pub fn eval(&self, m: u64) -> f64 {
        let mf = m as f64;
        match self {
            Self::Affine { a, b } => (mf + 1.0).max((a * mf + b).ceil()),
            Self::Table(v) => {
                let last = v.len() - 1;
                if (m as usize) <= last && m < usize::MAX as u64 {
                    v[m as usize]
                } else {
                    v[last] + (mf - last as f64)
                }
            }
        }
    }

    /// `log10 F(M)` given `log10 M`, valid far beyond the range of `u64`.
    pub fn eval_log10(&self, log10_m: f64) -> f64 {
        if log10_m < 15.0 {
            let m = 10f64.powf(log10_m).ceil();
            return self.eval(m as u64).log10();
        }
        match self {
            Self::Affine { a, .. } => log10_m + a.max(1.0).log10(),
            Self::Table(_) => log10_m,
        }
    }

    /// Whether `F(m) ≥ k·m` for every `m` (the truncation hypothesis with `k = 2/α`).
    pub fn dominates_linear(&self, k: f64) -> bool {
        if k <= 1.0 {
            return true;
        }
        match self {
            Self::Affine { a, b } => {
                if *a > k {
                    let horizon = ((-b).max(0.0) / (a - k)).ceil() as u64 + 2;
                    (0..=horizon).all(|m| self.eval(m) >= k * m as f64)
                } else {
                    *a == k && *b >= 0.0
                }
            }
            Self::Table(_) => false,
        }
    }
}

impl std::fmt::Display for GrowthFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Affine { a, b } => write!(f, "affine:{a},{b}"),
            Self::Table(v) => write!(f, "table:{v:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_values() {
        let g = GrowthFunction::affine(4.0, 1.0).unwrap();
        assert_eq!(g.eval(0), 1.0);
        assert_eq!(g.eval(1), 5.0);
        assert_eq!(g.eval(16), 65.0);
        let slow = GrowthFunction::affine(0.5, 0.0).unwrap();
        assert_eq!(slow.eval(10), 11.0);
    }

    #[test]
    fn table_rules() {
        assert!(GrowthFunction::table(vec![1.0, 1.5]).is_err());
        let t = GrowthFunction::table(vec![2.0, 3.0, 10.0]).unwrap();
        assert_eq!(t.eval(2), 10.0);
        assert_eq!(t.eval(5), 13.0);
    }

    #[test]
    fn domination() {
        let alpha = 0.1;
        let f = GrowthFunction::affine(2.0 / alpha, 2.0 / alpha).unwrap();
        assert!(f.dominates_linear(2.0 / alpha));
        assert!(!GrowthFunction::affine(4.0, 1.0).unwrap().dominates_linear(20.0));
    }

    #[test]
    fn log_evaluation() {
        let g = GrowthFunction::affine(2.0, 1.0).unwrap();
        assert!((g.eval_log10(1.0) - 21f64.log10()).abs() < 1e-12);
        assert!((g.eval_log10(100.0) - (100.0 + 2f64.log10())).abs() < 1e-12);
    }
}
