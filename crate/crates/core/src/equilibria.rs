//! Non-cooperative equilibrium contracts in both regimes, the regime
//! comparison, the dominant-rate thresholds, and CP-count scaling.
//!
//! In the non-neutral regime each CP faces the ISP alone, so its best share
//! is `1 / W((r_i / c) e)` whenever `r_i > c`. In the neutral regime the CPs
//! pool their shares into one common effort and the contributing CPs end up
//! with equal margins `(1 - beta_i) r_i`.

use std::f64::consts::E;
use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::model::{best_effort, expected_utilities, Contract, EffortProfile, MarketParams, Regime, Utilities};
use crate::numerics::{find_root, lambert_w0, Bracket};

/// How many equilibria share the reported outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    Unique,
    /// Neutral regime only: the all-zero contract is also an equilibrium.
    ZeroAndNonzero,
    /// Some CP earns nothing whatever it shares, so its share is arbitrary.
    NotUniquelyDefined,
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Multiplicity::Unique => "unique",
            Multiplicity::ZeroAndNonzero => "zero_and_nonzero",
            Multiplicity::NotUniquelyDefined => "not_uniquely_defined",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub regime: Regime,
    pub contract: Contract,
    pub efforts: EffortProfile,
    pub utilities: Utilities,
    pub total_effort: f64,
    pub multiplicity: Multiplicity,
    /// Indices (caller order) of CPs with a strictly positive share.
    pub contributing_set: Vec<usize>,
    /// Set when the neutral solution has a contributing set that is neither
    /// everyone nor a single CP.
    pub partial_coalition: bool,
    /// Set for two asymmetric CPs with `r_1 / c <= 2`: the zero contract is
    /// reported although an interior equilibrium also exists.
    pub asymmetric_seam: bool,
}

impl EquilibriumReport {
    pub(crate) fn from_shares(
        params: &MarketParams,
        regime: Regime,
        shares: Vec<f64>,
        multiplicity: Multiplicity,
    ) -> Result<Self> {
        let contract = Contract::new(shares)?;
        let efforts = best_effort(params, &contract, regime)?;
        let utilities = expected_utilities(params, &contract, &efforts)?;
        let contributing_set = contract
            .shares()
            .iter()
            .enumerate()
            .filter(|(_, b)| **b > 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(EquilibriumReport {
            regime,
            total_effort: efforts.total(),
            contract,
            efforts,
            utilities,
            multiplicity,
            contributing_set,
            partial_coalition: false,
            asymmetric_seam: false,
        })
    }
}

/// Non-neutral share for a single CP: `1 / W((r/c) e)`, or zero when `r <= c`.
pub fn nonneutral_share(rate: f64, cost: f64) -> Result<f64> {
    if rate / cost <= 1.0 {
        return Ok(0.0);
    }
    Ok(1.0 / lambert_w0(rate / cost * E)?)
}

/// Non-zero symmetric neutral share `1 / (n W((r/(n c)) e^{1/n}))`.
pub fn symmetric_neutral_share(rate: f64, cost: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    let w = lambert_w0(rate / (nf * cost) * (1.0 / nf).exp())?;
    Ok(1.0 / (nf * w))
}

pub fn nonneutral_equilibrium(params: &MarketParams) -> Result<EquilibriumReport> {
    let c = params.cost();
    let shares = params
        .rates()
        .iter()
        .map(|&r| nonneutral_share(r, c))
        .collect::<Result<Vec<_>>>()?;
    let multiplicity = if params.rates().iter().any(|&r| r / c <= 1.0) {
        Multiplicity::NotUniquelyDefined
    } else {
        Multiplicity::Unique
    };
    EquilibriumReport::from_shares(params, Regime::NonNeutral, shares, multiplicity)
}

/// Stationary neutral shares when only `active` CPs contribute.
#[derive(Debug, Clone)]
struct Coalition {
    shares: Vec<f64>,
    /// Common margin `(1 - beta_i) r_i` of the contributors.
    margin: f64,
    /// `log(a + 1)` at the common effort.
    log_effort: f64,
}

/// With `k` contributors out of `n` and pooled rate `R`, the first-order
/// conditions give `w e^w = R e^{1/k} / (n k c)`, `log(a+1) = w - 1/k` and a
/// common margin `R/k (1 - 1/(k w))`.
fn coalition(rates: &[f64], active: &[usize], cost: f64) -> Result<Coalition> {
    let n = rates.len() as f64;
    let k = active.len() as f64;
    let pooled: f64 = active.iter().map(|&i| rates[i]).sum();
    let w = lambert_w0(pooled * (1.0 / k).exp() / (n * k * cost))?;
    let margin = pooled / k * (1.0 - 1.0 / (k * w));
    let mut shares = vec![0.0; rates.len()];
    for &i in active {
        shares[i] = 1.0 - margin / rates[i];
    }
    Ok(Coalition { shares, margin, log_effort: w - 1.0 / k })
}

impl Coalition {
    /// Contributors keep shares in `[0, 1]`, effort is positive, and every
    /// excluded CP has no incentive to start sharing (`r_j <= margin`).
    fn is_equilibrium(&self, rates: &[f64], active: &[usize]) -> bool {
        if self.log_effort <= 0.0 {
            return false;
        }
        let shares_ok = active.iter().all(|&i| (0.0..=1.0).contains(&self.shares[i]));
        let excluded_ok = (0..rates.len())
            .filter(|i| !active.contains(i))
            .all(|j| rates[j] <= self.margin);
        shares_ok && excluded_ok
    }
}

fn order_by_rate_desc(rates: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rates.len()).collect();
    idx.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]).then(a.cmp(&b)));
    idx
}

/// The two-CP interior/corner split: interior iff
/// `(r1 + r2)/(r1 - r2) > 2 W((r1 + r2) sqrt(e) / (4c))` with `r1 > r2`.
pub fn two_cp_interior_condition(r1: f64, r2: f64, cost: f64) -> Result<bool> {
    Ok((r1 + r2) / (r1 - r2) > 2.0 * lambert_w0((r1 + r2) / (4.0 * cost) * E.sqrt())?)
}

/// Two-CP neutral interior shares `(beta_bar_1, beta_bar_2)` for `r1 > r2`,
/// evaluated without checking the interior condition.
pub fn two_cp_interior_shares(r1: f64, r2: f64, cost: f64) -> Result<[f64; 2]> {
    let w = lambert_w0((r1 + r2) / (4.0 * cost) * E.sqrt())?;
    let sum = r1 + r2;
    Ok([
        sum / (4.0 * r1 * w) - (r2 - r1) / (2.0 * r1),
        sum / (4.0 * r2 * w) - (r1 - r2) / (2.0 * r2),
    ])
}

pub fn neutral_equilibrium(params: &MarketParams) -> Result<EquilibriumReport> {
    let n = params.n();
    let c = params.cost();
    let rates = params.rates();
    let max_rate = rates.iter().cloned().fold(f64::MIN, f64::max);

    if n == 1 {
        let shares = vec![nonneutral_share(rates[0], c)?];
        let m = if rates[0] / c <= 1.0 { Multiplicity::NotUniquelyDefined } else { Multiplicity::Unique };
        return EquilibriumReport::from_shares(params, Regime::Neutral, shares, m);
    }

    if params.is_symmetric() {
        let r = rates[0];
        if r / c <= 1.0 {
            return EquilibriumReport::from_shares(params, Regime::Neutral, vec![0.0; n], Multiplicity::NotUniquelyDefined);
        }
        let share = symmetric_neutral_share(r, c, n)?;
        let m = if r / c <= n as f64 { Multiplicity::ZeroAndNonzero } else { Multiplicity::Unique };
        return EquilibriumReport::from_shares(params, Regime::Neutral, vec![share; n], m);
    }

    let order = order_by_rate_desc(rates);

    if n == 2 {
        let (hi, lo) = (order[0], order[1]);
        let (r1, r2) = (rates[hi], rates[lo]);
        if r1 / c <= 2.0 {
            let both = coalition(rates, &order, c)?;
            let nonzero_exists = both.is_equilibrium(rates, &order);
            let m = if nonzero_exists { Multiplicity::ZeroAndNonzero } else { Multiplicity::NotUniquelyDefined };
            let mut report = EquilibriumReport::from_shares(params, Regime::Neutral, vec![0.0; 2], m)?;
            report.asymmetric_seam = nonzero_exists;
            return Ok(report);
        }
        let mut shares = vec![0.0; 2];
        if two_cp_interior_condition(r1, r2, c)? {
            let [b1, b2] = two_cp_interior_shares(r1, r2, c)?;
            shares[hi] = b1;
            shares[lo] = b2;
        } else {
            shares[hi] = 1.0 / lambert_w0(r1 / (2.0 * c) * E)?;
        }
        return EquilibriumReport::from_shares(params, Regime::Neutral, shares, Multiplicity::Unique);
    }

    // General n: largest coalition of top-rate CPs that is self-consistent.
    for k in (1..=n).rev() {
        let active = &order[..k];
        let sol = coalition(rates, active, c)?;
        if sol.is_equilibrium(rates, active) {
            let m = if max_rate <= n as f64 * c { Multiplicity::ZeroAndNonzero } else { Multiplicity::Unique };
            let mut report = EquilibriumReport::from_shares(params, Regime::Neutral, sol.shares, m)?;
            report.partial_coalition = k != 1 && k != n;
            return Ok(report);
        }
    }
    EquilibriumReport::from_shares(params, Regime::Neutral, vec![0.0; n], Multiplicity::NotUniquelyDefined)
}

/// Which dominant-rate threshold to locate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// Neutral interior/corner boundary.
    R1Star,
    /// Neutral total effort overtakes non-neutral total effort.
    R1A,
    /// Non-neutral ISP revenue overtakes neutral ISP revenue.
    R1B,
}

impl ThresholdKind {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdKind::R1Star => "r1_star",
            ThresholdKind::R1A => "r1_a",
            ThresholdKind::R1B => "r1_b",
        }
    }
}

/// `LHS - RHS` of the threshold's defining relation at `r1`.
pub fn threshold_relation(kind: ThresholdKind, r1: f64, r2: f64, c: f64) -> Result<f64> {
    let w = |x: f64| lambert_w0(x);
    Ok(match kind {
        ThresholdKind::R1Star => (r1 + r2) / (r1 - r2) - 2.0 * w((r1 + r2) / (4.0 * c) * E.sqrt())?,
        ThresholdKind::R1A => {
            r1 * (1.0 / w(r1 * E / (2.0 * c))? - 1.0 / w(r1 * E / c)?) - r2 / w(r2 * E / c)?
        }
        ThresholdKind::R1B => {
            2.0 * r1 * (1.0 / w(r1 * E / (2.0 * c))? - 1.0 / w(r1 * E / c)?)
                - (2.0 / w(r2 * E / c)? - 1.0) * r2
        }
    })
}

const THRESHOLD_DOUBLINGS: usize = 60;

/// Root of the threshold relation in `r1 > r2`, found by bisection after
/// doubling the upper end of the bracket until the relation changes sign.
pub fn threshold(kind: ThresholdKind, r2: f64, c: f64) -> Result<f64> {
    if !(r2.is_finite() && r2 > 0.0 && c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParams(format!("threshold needs r2 > 0 and c > 0, got r2={r2}, c={c}")));
    }
    let f = |r1: f64| threshold_relation(kind, r1, r2, c).unwrap_or(f64::NAN);
    let lo = r2 + 1e-6 * c;
    let sign_lo = f(lo).signum();
    let mut prev = lo;
    let mut hi = (4.0 * r2).max(8.0 * c);
    for _ in 0..=THRESHOLD_DOUBLINGS {
        let f_hi = f(hi);
        if f_hi.is_nan() {
            return Err(Error::NonFinite(f_hi));
        }
        if f_hi.signum() != sign_lo {
            let tol = 1e-13 * hi.max(1.0);
            return find_root(f, Bracket::new(prev, hi)?, tol);
        }
        prev = hi;
        hi *= 2.0;
    }
    Err(Error::NoRoot { kind: kind.name(), lo, hi: prev, sign_at_lo: sign_lo })
}

/// Both regimes at one parameter point, with `nonneutral - neutral` deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub nonneutral: EquilibriumReport,
    pub neutral: EquilibriumReport,
    pub delta_shares: Vec<f64>,
    pub delta_efforts: Vec<f64>,
    pub delta_cp: Vec<f64>,
    pub delta_isp: f64,
    pub delta_social: f64,
    pub delta_total_effort: f64,
}

pub fn compare_regimes(params: &MarketParams) -> Result<ComparisonRow> {
    let nn = nonneutral_equilibrium(params)?;
    let n = neutral_equilibrium(params)?;
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    Ok(ComparisonRow {
        delta_shares: diff(nn.contract.shares(), n.contract.shares()),
        delta_efforts: diff(nn.efforts.efforts(), n.efforts.efforts()),
        delta_cp: diff(&nn.utilities.cp, &n.utilities.cp),
        delta_isp: nn.utilities.isp_net - n.utilities.isp_net,
        delta_social: nn.utilities.social - n.utilities.social,
        delta_total_effort: nn.total_effort - n.total_effort,
        nonneutral: nn,
        neutral: n,
    })
}

/// Symmetric neutral outcome for `n` identical CPs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub share: f64,
    pub effort: f64,
    pub total_effort: f64,
    pub cp_utility: f64,
    pub isp_utility: f64,
}

pub const MAX_SCALING_N: usize = 10_000;

pub fn scaling_report(rate: f64, cost: f64, n_range: RangeInclusive<usize>) -> Result<Vec<ScalingRow>> {
    if !(rate.is_finite() && cost.is_finite() && cost > 0.0 && rate / cost > 1.0) {
        return Err(Error::InvalidParams(format!("scaling needs r/c > 1, got r={rate}, c={cost}")));
    }
    if n_range.is_empty() || *n_range.start() < 1 || *n_range.end() > MAX_SCALING_N {
        return Err(Error::InvalidParams(format!(
            "n range must be non-empty and within [1, {MAX_SCALING_N}], got {n_range:?}"
        )));
    }
    n_range
        .map(|n| {
            let nf = n as f64;
            let share = symmetric_neutral_share(rate, cost, n)?;
            let effort = share * rate / cost - 1.0;
            Ok(ScalingRow {
                n,
                share,
                effort,
                total_effort: nf * effort,
                cp_utility: (1.0 - share).powi(2) * rate / (nf * share),
                isp_utility: rate + nf * cost - (nf + 1.0) * share * rate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(rates: &[f64], c: f64) -> MarketParams {
        MarketParams::new(rates.to_vec(), c).unwrap()
    }

    /// Independent reference for W: bisection on w e^w - x.
    fn w_ref(x: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 50.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > x {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn nonneutral_examples() {
        let rep = nonneutral_equilibrium(&p(&[0.5, 0.9], 1.0)).unwrap();
        assert_eq!(rep.contract.shares(), &[0.0, 0.0]);
        assert_eq!(rep.utilities, Utilities::zeros(2));
        assert_eq!(rep.multiplicity, Multiplicity::NotUniquelyDefined);
        assert!(rep.contributing_set.is_empty());

        let rep = nonneutral_equilibrium(&p(&[2.0 * E], 1.0)).unwrap();
        assert!((rep.contract.shares()[0] - 0.5).abs() < 1e-14);
        assert!((rep.efforts.efforts()[0] - (E - 1.0)).abs() < 1e-13);
        assert!((rep.utilities.cp[0] - E).abs() < 1e-13);
        assert!((rep.utilities.isp_net - 1.0).abs() < 1e-13);

        let rep = nonneutral_equilibrium(&p(&[4.0, 2.0], 1.0)).unwrap();
        let b = rep.contract.shares();
        assert!((b[0] - 1.0 / w_ref(4.0 * E)).abs() < 1e-12);
        assert!((b[1] - 1.0 / w_ref(2.0 * E)).abs() < 1e-12);
        assert!((b[0] - 0.556).abs() < 1e-3 && (b[1] - 0.728).abs() < 1e-3);
        assert_eq!(rep.multiplicity, Multiplicity::Unique);
    }

    #[test]
    fn boundary_rate_equal_cost_is_zero_branch() {
        let rep = nonneutral_equilibrium(&p(&[1.0, 3.0], 1.0)).unwrap();
        assert_eq!(rep.contract.shares()[0], 0.0);
        assert_eq!(rep.multiplicity, Multiplicity::NotUniquelyDefined);
        assert_eq!(rep.contributing_set, vec![1]);
    }

    #[test]
    fn symmetric_neutral_examples() {
        let r = 2.0 * E.sqrt();
        let rep = neutral_equilibrium(&p(&[r, r], 1.0)).unwrap();
        assert!((rep.contract.shares()[0] - 0.5).abs() < 1e-14);
        assert!((rep.efforts.efforts()[0] - 0.6487).abs() < 1e-4);
        assert_eq!(rep.multiplicity, Multiplicity::Unique);

        let rep = neutral_equilibrium(&p(&[1.5, 1.5, 1.5], 1.0)).unwrap();
        assert_eq!(rep.multiplicity, Multiplicity::ZeroAndNonzero);
        assert!(rep.contract.shares()[0] > 0.0);
        assert!(rep.efforts.efforts()[0] > 0.0);

        let rep = neutral_equilibrium(&p(&[0.7, 0.7], 1.0)).unwrap();
        assert_eq!(rep.contract.shares(), &[0.0, 0.0]);
        assert_eq!(rep.multiplicity, Multiplicity::NotUniquelyDefined);
    }

    #[test]
    fn two_cp_interior_example() {
        let rep = neutral_equilibrium(&p(&[4.0, 2.0], 1.0)).unwrap();
        let b = rep.contract.shares();
        // independent: W(6 sqrt(e)/4) by bisection
        let w = w_ref(1.5 * E.sqrt());
        assert!((b[0] - (6.0 / (16.0 * w) + 0.25)).abs() < 1e-12);
        assert!((b[1] - (6.0 / (8.0 * w) - 0.5)).abs() < 1e-12);
        assert!((b[0] - 0.644).abs() < 1e-3 && (b[1] - 0.287).abs() < 1e-3);
        let m1 = (1.0 - b[0]) * 4.0;
        let m2 = (1.0 - b[1]) * 2.0;
        assert!((m1 - m2).abs() <= 1e-10 * m1);
        // FOC: margin equals S log(S / 2c)
        let s = b[0] * 4.0 + b[1] * 2.0;
        assert!((m1 - s * (s / 2.0).ln()).abs() < 1e-9);
        assert_eq!(rep.contributing_set, vec![0, 1]);
    }

    #[test]
    fn two_cp_corner_example_and_caller_order() {
        let rep = neutral_equilibrium(&p(&[2.0, 20.0], 1.0)).unwrap();
        let b = rep.contract.shares();
        assert_eq!(b[0], 0.0);
        assert!((b[1] - 1.0 / w_ref(10.0 * E)).abs() < 1e-12);
        assert_eq!(rep.contributing_set, vec![1]);
        // CP with the low rate gains nothing by starting to share
        let s = b[1] * 20.0;
        let marginal = -2.0 * (s / 2.0).ln() + 2.0 * 2.0 / s;
        assert!(marginal <= 0.0);
    }

    #[test]
    fn two_cp_seam_reports_zero_with_flag() {
        let rep = neutral_equilibrium(&p(&[1.9, 1.8], 1.0)).unwrap();
        assert_eq!(rep.contract.shares(), &[0.0, 0.0]);
        assert_eq!(rep.multiplicity, Multiplicity::ZeroAndNonzero);
        assert!(rep.asymmetric_seam);

        let rep = neutral_equilibrium(&p(&[1.9, 0.1], 1.0)).unwrap();
        assert_eq!(rep.multiplicity, Multiplicity::NotUniquelyDefined);
        assert!(!rep.asymmetric_seam);
    }

    #[test]
    fn paper_condition_agrees_with_coalition_test() {
        for &r1 in &[2.5, 3.0, 4.0, 5.0, 5.5, 5.6, 6.0, 10.0, 30.0] {
            let rates = [r1, 2.0];
            let order = [0, 1];
            let both = coalition(&rates, &order, 1.0).unwrap();
            assert_eq!(
                two_cp_interior_condition(r1, 2.0, 1.0).unwrap(),
                both.is_equilibrium(&rates, &order),
                "r1={r1}"
            );
        }
    }

    #[test]
    fn general_n_reduces_to_closed_forms() {
        // all interior: matches the general-n interior formula
        let rates = [3.0, 3.2, 3.5];
        let rep = neutral_equilibrium(&p(&rates, 1.0)).unwrap();
        let n: f64 = 3.0;
        let sum: f64 = rates.iter().sum();
        let w = w_ref(sum * (1.0 / n).exp() / (n * n));
        for (i, &ri) in rates.iter().enumerate() {
            let others = sum - ri;
            let expect = sum / (n * n * ri * w) - (others - (n - 1.0) * ri) / (n * ri);
            assert!((rep.contract.shares()[i] - expect).abs() < 1e-12);
        }
        assert!(!rep.partial_coalition);

        // one dominant CP: 1/W(r1 e / (n c))
        let rep = neutral_equilibrium(&p(&[40.0, 1.5, 1.2], 1.0)).unwrap();
        assert_eq!(rep.contributing_set, vec![0]);
        assert!((rep.contract.shares()[0] - 1.0 / w_ref(40.0 * E / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn partial_coalition_is_flagged() {
        let rep = neutral_equilibrium(&p(&[30.0, 28.0, 1.1], 1.0)).unwrap();
        assert_eq!(rep.contributing_set, vec![0, 1]);
        assert!(rep.partial_coalition);
        let b = rep.contract.shares();
        assert!(((1.0 - b[0]) * 30.0 - (1.0 - b[1]) * 28.0).abs() < 1e-10);
    }

    #[test]
    fn threshold_examples() {
        let r_star = threshold(ThresholdKind::R1Star, 2.0, 1.0).unwrap();
        assert!(r_star > 5.0 && r_star < 6.0);
        let f = |r1: f64| (r1 + 2.0) / (r1 - 2.0) - 2.0 * w_ref((r1 + 2.0) * E.sqrt() / 4.0);
        assert!(f(5.0) > 0.0 && f(6.0) < 0.0);
        assert!(f(r_star).abs() < 1e-10);

        for &c in &[0.5, 2.0, 7.0] {
            let scaled = threshold(ThresholdKind::R1Star, 2.0 * c, c).unwrap();
            assert!((scaled / c - r_star).abs() < 1e-9 * r_star, "c={c}");
        }

        let r_a = threshold(ThresholdKind::R1A, 2.0, 1.0).unwrap();
        assert!(r_a > r_star);
    }

    #[test]
    fn r1_b_relation_already_holds_at_r2_on_standard_grid() {
        for &r2 in &[1.5, 2.0, 5.0] {
            assert!(threshold_relation(ThresholdKind::R1B, r2 + 1e-6, r2, 1.0).unwrap() > 0.0);
            assert!(matches!(threshold(ThresholdKind::R1B, r2, 1.0), Err(Error::NoRoot { .. })));
        }
        // close to r2 = c the relation does change sign, below r1_star
        let r_b = threshold(ThresholdKind::R1B, 1.1, 1.0).unwrap();
        let r_star = threshold(ThresholdKind::R1Star, 1.1, 1.0).unwrap();
        assert!(r_b > 1.1 && r_b < r_star);
    }

    #[test]
    fn threshold_rejects_bad_input() {
        assert!(threshold(ThresholdKind::R1Star, 0.0, 1.0).is_err());
        assert!(threshold(ThresholdKind::R1Star, 1.0, -1.0).is_err());
    }

    #[test]
    fn comparison_examples() {
        let r = 2.0 * E.sqrt();
        let row = compare_regimes(&p(&[r, r], 1.0)).unwrap();
        assert!((row.nonneutral.contract.shares()[0] - 1.0 / w_ref(r * E)).abs() < 1e-12);
        assert!((row.delta_shares[0] - 0.0965).abs() < 1e-4);

        let row = compare_regimes(&p(&[0.5, 0.5], 1.0)).unwrap();
        assert!(row.delta_shares.iter().chain(&row.delta_cp).all(|d| *d == 0.0));
        assert_eq!(row.delta_isp, 0.0);
        assert_eq!(row.delta_social, 0.0);
        assert_eq!(row.delta_total_effort, 0.0);

        let row = compare_regimes(&p(&[4.0, 2.0], 1.0)).unwrap();
        assert!(row.delta_cp[0] > 0.0);
    }

    #[test]
    fn scaling_examples() {
        let r = 2.0 * E.sqrt();
        let rows = scaling_report(r, 1.0, 1..=2).unwrap();
        assert!((rows[1].share - 0.5).abs() < 1e-14);
        assert!((rows[1].isp_utility - (2.0 - 0.5 * r)).abs() < 1e-13);
        assert!((rows[1].isp_utility - 0.3513).abs() < 1e-4);

        let nn = nonneutral_equilibrium(&p(&[r], 1.0)).unwrap();
        assert!((rows[0].share - nn.contract.shares()[0]).abs() < 1e-14);
        assert!((rows[0].cp_utility - nn.utilities.cp[0]).abs() < 1e-12);
        assert!((rows[0].isp_utility - nn.utilities.isp_net).abs() < 1e-12);

        assert!(scaling_report(0.5, 1.0, 1..=3).is_err());
        assert!(scaling_report(5.0, 1.0, 0..=3).is_err());
        assert!(scaling_report(5.0, 1.0, 1..=20_000).is_err());
    }

    #[test]
    fn scaling_rows_match_general_solver() {
        let rows = scaling_report(20.0, 1.0, 2..=6).unwrap();
        for row in rows {
            let rep = neutral_equilibrium(&MarketParams::symmetric(row.n, 20.0, 1.0).unwrap()).unwrap();
            assert!((rep.contract.shares()[0] - row.share).abs() < 1e-14);
            assert!((rep.utilities.cp[0] - row.cp_utility).abs() < 1e-10);
            assert!((rep.utilities.isp_net - row.isp_utility).abs() < 1e-10);
            assert!((rep.total_effort - row.total_effort).abs() < 1e-10);
        }
    }
}
