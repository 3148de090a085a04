use crate::error::{Error, Result};
use crate::params::{ceil_robust, conjugate, p_dagger, x_exponent};
use crate::regularity::growth::GrowthFunction;

/// A positive quantity stored as its base-10 exponent. Values whose exponent
/// itself leaves the `f64` range are saturated and flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub log10: f64,
    /// `log10 |log10 v|`, kept when the exponent alone is informative only at second level.
    pub log10_log10: Option<f64>,
    pub overflow: bool,
}

impl LogValue {
    pub fn from_log10(log10: f64) -> Self {
        if log10.is_finite() {
            Self { log10, log10_log10: None, overflow: false }
        } else {
            Self::saturated(None)
        }
    }

    pub fn from_value(v: f64) -> Self {
        Self::from_log10(v.log10())
    }

    fn saturated(log10_log10: Option<f64>) -> Self {
        Self { log10: f64::NEG_INFINITY, log10_log10, overflow: true }
    }

    /// The plain value when it is representable as a normal `f64`.
    pub fn value(&self) -> Option<f64> {
        if self.overflow || self.log10 > 308.0 || self.log10 < -307.0 {
            None
        } else {
            Some(10f64.powf(self.log10))
        }
    }
}

/// One row of the recursive schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleRow {
    pub m: usize,
    /// `N_m`, exact while below `2^53`.
    pub n_m: LogValue,
    pub n_m_exact: Option<u64>,
    pub eta_m: LogValue,
    pub vartheta_m: LogValue,
    /// `α_m(γ)` and `η_m(γ)` of the counting recursion.
    pub alpha_m_gamma: LogValue,
    pub eta_m_gamma: LogValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTable {
    pub q: f64,
    pub p_dagger: f64,
    /// `x(C,p)`.
    pub x: f64,
    /// `L`, the stage count.
    pub stage_count: LogValue,
    pub beta_gamma: LogValue,
    pub theta_gamma: LogValue,
    pub rows: Vec<ScheduleRow>,
}

/// Inputs of [`schedule`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleInput {
    pub c: f64,
    pub p: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub n: usize,
    pub r: usize,
    pub depth: usize,
}

const EXACT_LIMIT: f64 = 15.0;

/// `log10 ⌈10^x⌉` for moderate `x`, `x` otherwise.
fn log_ceil(x: f64) -> f64 {
    if x < EXACT_LIMIT {
        (ceil_robust(10f64.powf(x)).max(1) as f64).log10()
    } else {
        x
    }
}

/// The theoretical parameter schedules, evaluated in base-10 log space.
pub fn schedule(input: &ScheduleInput, growth: &GrowthFunction) -> Result<ScheduleTable> {
    let ScheduleInput { c, p, sigma, gamma, n, r, depth } = *input;
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("C = {c} must be finite and ≥ 1")));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if !(sigma > 0.0 && sigma <= 1.0) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Precondition(format!("σ = {sigma} and γ = {gamma} must lie in (0,1]")));
    }
    if r == 0 || n < r {
        return Err(Error::Precondition(format!("need 1 ≤ r ≤ n, got r = {r}, n = {n}")));
    }
    let q = conjugate(p);
    let pd = p_dagger(p);
    let x = x_exponent(c, p);
    let log_q = q.log10();
    let log_12cr2 = (12.0 * c * (r * r) as f64).log10();
    let log_n_coeff = (4.0 / (pd - 1.0)).log10() + 2.0 * sigma.log10();

    let stage_count = LogValue::from_log10(log_ceil(
        2.0 * c.log10() - (pd - 1.0).log10() - 2.0 * sigma.log10() + r as f64 * (n as f64).log10(),
    ));

    let log_beta = |lg: f64| 2.0 * q / x * ((10.0 * (c + 1.0).powi(2)).log10() - lg);
    let log_theta = |lg: f64| -2.0 * q * ((20.0 * (c + 1.0)).log10() + log_beta(lg)) + 2.0 * q * lg;
    let log_gamma = gamma.log10();

    let mut rows = Vec::with_capacity(depth + 1);
    let mut n_m = LogValue::from_log10(f64::NEG_INFINITY);
    n_m.overflow = false;
    let mut n_exact = Some(0u64);
    let mut eta = LogValue::from_log10(0.0);
    let mut vt = LogValue::from_log10(-(log_12cr2 + growth.eval(1).log10()));
    let mut lg = log_gamma;
    for m in 0..=depth {
        let alpha = LogValue::from_log10(lg - 5f64.log10());
        let eta_g = LogValue::from_log10(4.0 * q * (lg - (30.0 * (c + 1.0)).log10()));
        rows.push(ScheduleRow {
            m,
            n_m,
            n_m_exact: n_exact,
            eta_m: eta,
            vartheta_m: vt,
            alpha_m_gamma: alpha,
            eta_m_gamma: eta_g,
        });
        if m == depth {
            break;
        }
        lg = log_theta(lg);
        if eta.overflow || vt.overflow {
            n_m = LogValue::saturated(None);
            n_exact = None;
            eta = LogValue::saturated(None);
            vt = LogValue::saturated(None);
            continue;
        }
        let log_f = growth.eval_log10(log_ceil(-eta.log10));
        let log_n = log_ceil(log_n_coeff + 2.0 * log_f);
        n_m = LogValue::from_log10(log_n);
        n_exact = (log_n < EXACT_LIMIT).then(|| ceil_robust(10f64.powf(log_n)));
        let n_val = n_exact.map(|v| v as f64).unwrap_or_else(|| 10f64.powf(log_n));
        // log10 η_{m+1} = q^N (N log10 ϑ_m + log10 η_m)
        let inner = n_val * vt.log10 + eta.log10;
        eta = if log_q == 0.0 {
            LogValue::from_log10(inner)
        } else {
            let ll = n_val * log_q + (-inner).log10();
            if ll < 308.0 {
                LogValue::from_log10(-(10f64.powf(ll)))
            } else {
                LogValue::saturated(ll.is_finite().then_some(ll))
            }
        };
        vt = if eta.overflow {
            LogValue::saturated(None)
        } else {
            LogValue::from_log10(-(log_12cr2 + growth.eval_log10(log_ceil(-eta.log10))))
        };
    }
    Ok(ScheduleTable {
        q,
        p_dagger: pd,
        x,
        stage_count,
        beta_gamma: LogValue::from_log10(log_beta(log_gamma)),
        theta_gamma: LogValue::from_log10(log_theta(log_gamma)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(depth: usize) -> ScheduleInput {
        ScheduleInput { c: 1.0, p: f64::INFINITY, sigma: 1.0, gamma: 0.5, n: 3, r: 2, depth }
    }

    #[test]
    fn initial_row() {
        let g = GrowthFunction::affine(2.0, 1.0).unwrap();
        let t = schedule(&input(0), &g).unwrap();
        let row = t.rows[0];
        assert_eq!(row.n_m_exact, Some(0));
        assert_eq!(row.eta_m.value(), Some(1.0));
        assert!((row.vartheta_m.value().unwrap() - 1.0 / 144.0).abs() < 1e-15);
        assert_eq!(t.x, 1.0);
    }

    #[test]
    fn hand_recursion() {
        let g = GrowthFunction::affine(2.0, 1.0).unwrap();
        let t = schedule(&input(2), &g).unwrap();
        // F(1) = 3, so N_1 = ⌈4·9⌉ and η_1 = 144^{-36}.
        assert_eq!(t.rows[1].n_m_exact, Some(36));
        let l144 = 144f64.log10();
        assert!((t.rows[1].eta_m.log10 + 36.0 * l144).abs() < 1e-9);
        // ϑ_1 = (48 F(⌈144^36⌉))^{-1}; F(M) ≈ 2M in log space.
        let lt1 = -(48f64.log10() + 2f64.log10() + 36.0 * l144);
        assert!((t.rows[1].vartheta_m.log10 - lt1).abs() < 1e-9);
        // N_2 = 4 F(M)^2 with M = 144^36.
        let ln2 = 4f64.log10() + 2.0 * (2f64.log10() + 36.0 * l144);
        assert!((t.rows[2].n_m.log10 - ln2).abs() < 1e-9);
        assert!(t.rows[2].eta_m.log10.is_finite());
        assert!(!t.rows[2].eta_m.overflow);
        assert!(t.rows[2].eta_m.log10 < t.rows[1].eta_m.log10);
    }

    #[test]
    fn counting_recursion_is_monotone() {
        let g = GrowthFunction::affine(2.0, 1.0).unwrap();
        let t = schedule(&ScheduleInput { p: 2.0, c: 2.0, depth: 3, ..input(0) }, &g).unwrap();
        for w in t.rows.windows(2) {
            assert!(w[1].alpha_m_gamma.log10 <= w[0].alpha_m_gamma.log10);
            assert!(w[1].eta_m_gamma.log10 <= w[0].eta_m_gamma.log10);
        }
        // p = 2 makes η_m overflow the exponent range almost at once.
        assert!(t.rows[3].eta_m.overflow);
    }
}
